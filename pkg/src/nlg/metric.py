"""Integrands phi(x, p) of the weighted / anisotropic total variation.

Two families are supported:

* isotropic:  ``phi(x, p) = a(x) |p|``
* riemannian: ``phi(x, p) = a(x) sqrt(p^T S(x) p)`` with ``S`` symmetric
  positive definite, stored per cell as ``(s11, s12, s22)``.

Every routine has a vectorised form acting on arrays of shape ``(ny, nx, 2)``
(one 2-vector per cell) and a single-cell form taking ``cell=(j, i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, ScalarField, cell_pairs, gradient

ISOTROPIC = "isotropic"
RIEMANNIAN = "riemannian"
_ALIASES = {"iso": ISOTROPIC, "isotropic": ISOTROPIC,
            "riem": RIEMANNIAN, "riemannian": RIEMANNIAN}


def canonical_kind(kind):
    try:
        return _ALIASES[kind.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown metric kind {kind!r}") from None


def tensor_eigen(S):
    """Eigenvalues ``(mu_lo, mu_hi)`` of packed symmetric 2x2 tensors."""
    s11, s12, s22 = S[..., 0], S[..., 1], S[..., 2]
    half_tr = 0.5 * (s11 + s22)
    rad = np.hypot(0.5 * (s11 - s22), s12)
    return half_tr - rad, half_tr + rad


def tensor_apply(S, P):
    s11, s12, s22 = S[..., 0], S[..., 1], S[..., 2]
    return np.stack([s11 * P[..., 0] + s12 * P[..., 1],
                     s12 * P[..., 0] + s22 * P[..., 1]], axis=-1)


def tensor_inverse(S):
    s11, s12, s22 = S[..., 0], S[..., 1], S[..., 2]
    det = s11 * s22 - s12 * s12
    return np.stack([s22 / det, -s12 / det, s11 / det], axis=-1)


def _quad(S, P):
    return (S[..., 0] * P[..., 0] ** 2 + 2.0 * S[..., 1] * P[..., 0] * P[..., 1]
            + S[..., 2] * P[..., 1] ** 2)


@dataclass(frozen=True, eq=False)
class Metric:
    """Weight ``a`` (and tensor ``sigma0`` for the riemannian kind)."""

    kind: str
    a: ScalarField
    sigma0: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        kind = canonical_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        a = self.a.values
        if not np.all(a > 0):
            raise ValueError(f"weight a must be positive everywhere (min {a.min():.3g})")
        if kind == RIEMANNIAN:
            if self.sigma0 is None:
                raise ValueError("riemannian metric requires sigma0")
            S = np.array(self.sigma0, dtype=float)
            if S.shape != self.grid.shape + (3,):
                raise ValueError(f"sigma0 must have shape {self.grid.shape + (3,)}, got {S.shape}")
            if not np.all(np.isfinite(S)):
                raise ValueError("sigma0 must be finite")
            det = S[..., 0] * S[..., 2] - S[..., 1] ** 2
            bad = (det <= 0) | (S[..., 0] + S[..., 2] <= 0)
            if bad.any():
                j, i = np.argwhere(bad)[0]
                raise ValueError(f"sigma0 is not positive definite at cell ({j}, {i})")
            S.setflags(write=False)
            object.__setattr__(self, "sigma0", S)
        elif self.sigma0 is not None:
            raise ValueError("isotropic metric takes no sigma0")

    @classmethod
    def isotropic(cls, a):
        return cls(ISOTROPIC, a)

    @classmethod
    def riemannian(cls, a, sigma0):
        return cls(RIEMANNIAN, a, sigma0)

    @classmethod
    def constant(cls, grid: Grid, a=1.0):
        return cls(ISOTROPIC, ScalarField(grid, np.full(grid.shape, float(a))))

    @property
    def grid(self):
        return self.a.grid

    @property
    def is_isotropic(self):
        return self.kind == ISOTROPIC

    def scaled(self, c):
        return Metric(self.kind, self.a * float(c), self.sigma0)

    def eigen_bounds(self):
        if self.is_isotropic:
            return 1.0, 1.0
        lo, hi = tensor_eigen(self.sigma0)
        return float(lo.min()), float(hi.max())

    @property
    def alpha1(self):
        """Lower constant in ``alpha1 |p| <= phi(x, p)``."""
        return float(self.a.values.min()) * np.sqrt(self.eigen_bounds()[0])

    @property
    def alpha2(self):
        return float(self.a.values.max()) * np.sqrt(self.eigen_bounds()[1])

    # vectorised forms, P has shape (ny, nx, 2)

    def phi_cells(self, P):
        a = self.a.values
        if self.is_isotropic:
            return a * np.hypot(P[..., 0], P[..., 1])
        return a * np.sqrt(np.maximum(_quad(self.sigma0, P), 0.0))

    def polar_cells(self, Xi):
        a = self.a.values
        if self.is_isotropic:
            return np.hypot(Xi[..., 0], Xi[..., 1]) / a
        return np.sqrt(np.maximum(_quad(tensor_inverse(self.sigma0), Xi), 0.0)) / a

    def grad_p_cells(self, P):
        """``grad_p phi``; cells with ``p == 0`` get NaN."""
        a = self.a.values[..., None]
        if self.is_isotropic:
            n = np.hypot(P[..., 0], P[..., 1])[..., None]
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(n > 0, a * P / n, np.nan)
        SP = tensor_apply(self.sigma0, P)
        s = np.sqrt(np.maximum(_quad(self.sigma0, P), 0.0))[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(s > 0, a * SP / s, np.nan)

    # single-cell forms

    def _local(self, cell):
        j, i = cell
        a = float(self.a.values[j, i])
        S = None if self.is_isotropic else self.sigma0[j, i]
        return a, S


def phi(m: Metric, cell, p) -> float:
    a, S = m._local(cell)
    p = np.asarray(p, float)
    if S is None:
        return a * float(np.hypot(p[0], p[1]))
    return a * float(np.sqrt(max(_quad(S, p), 0.0)))


def phi_polar(m: Metric, cell, xi) -> float:
    """Dual norm ``sup_p xi.p / phi(x, p)`` in closed form."""
    a, S = m._local(cell)
    xi = np.asarray(xi, float)
    if S is None:
        return float(np.hypot(xi[0], xi[1])) / a
    return float(np.sqrt(max(_quad(tensor_inverse(S), xi), 0.0))) / a


def grad_p_phi(m: Metric, cell, p) -> np.ndarray:
    a, S = m._local(cell)
    p = np.asarray(p, float)
    if not np.any(p):
        raise ValueError("grad_p_phi is undefined at p = 0")
    if S is None:
        return a * p / np.hypot(p[0], p[1])
    return a * tensor_apply(S, p) / np.sqrt(_quad(S, p))


def total_variation(m: Metric, u: ScalarField, scheme="pairs") -> float:
    """Discrete phi-total variation of ``u``.

    ``scheme="pairs"`` (default) evaluates phi on the forward-difference
    gradient attached to each cell (right and top faces); this is the energy
    the splitting solver minimises.  ``scheme="average"`` averages face
    differences to cell centres instead and is kept for reporting.
    """
    G = gradient(u)
    if scheme == "pairs":
        P = cell_pairs(G)
    elif scheme == "average":
        P = G.cell_average()
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return float(m.phi_cells(P).sum() * u.grid.cell_area)
