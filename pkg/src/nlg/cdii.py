"""Current density impedance imaging on top of the least gradient solver.

Interior magnitude data ``a = |J|`` and the boundary current ``g = J . nu``
determine the current ``J`` as the dual field of the weighted least gradient
problem with ``phi(x, p) = a(x) |p|``.  The potential is not identifiable
(any increasing reparametrisation of a minimiser is again one), so the
recovered conductivity ``|T| / |grad u|`` inherits that ambiguity; it is
reported with a mask and normalised by the input power when known.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .duality import GRAD_FLOOR_REL, Certificate, certify
from .exceptions import FlatRegionWarning
from .grid import (BoundaryTrace, Grid, ScalarField, VectorField,
                   boundary_integral, cell_pairs, gradient, normal_trace)
from .metric import RIEMANNIAN, Metric, canonical_kind, tensor_inverse
from .poisson import LinearSolveConfig, current_density, solve_conductivity
from .solver import SolverConfig, SolverReport, prepare_reference, run

__all__ = [
    "Phantom",
    "ImagingData",
    "RecoveryResult",
    "PHANTOMS",
    "make_phantom",
    "synthesize",
    "recover",
    "relative_error",
]

CONSERVATION_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Phantom:
    """Conductivity ``sigma`` (isotropic) or ``c * sigma0`` (conformal class).

    Forward solves support ``sigma0`` with zero off-diagonal entries only.
    """

    name: str
    sigma: ScalarField | None = None
    c: ScalarField | None = None
    sigma0: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.sigma is not None:
            if self.c is not None or self.sigma0 is not None:
                raise ValueError("give either sigma or (c, sigma0), not both")
            if not np.all(self.sigma.values > 0):
                raise ValueError("sigma must be positive")
        else:
            if self.c is None or self.sigma0 is None:
                raise ValueError("anisotropic phantom needs c and sigma0")
            # validates positivity and SPD
            Metric.riemannian(self.c, self.sigma0)

    @property
    def grid(self) -> Grid:
        return (self.sigma if self.sigma is not None else self.c).grid

    @property
    def is_isotropic(self):
        return self.sigma is not None


def _disk_bump(X, Y, cx, cy, R):
    r = np.hypot(X - cx, Y - cy)
    return np.where(r < R, 0.5 * (1.0 + np.cos(np.pi * r / R)), 0.0)


def _constant(X, Y):
    return np.ones_like(X)


def _disk(X, Y):
    return 1.0 + _disk_bump(X, Y, 0.5, 0.5, 0.25)


def _two_bump(X, Y):
    return 1.0 + 0.8 * _disk_bump(X, Y, 0.3, 0.35, 0.18) + 0.5 * _disk_bump(X, Y, 0.7, 0.65, 0.2)


def _sinusoid(X, Y):
    return 1.0 + 0.3 * np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y)


PHANTOMS = {
    "constant": _constant,
    "disk": _disk,
    "two_bump": _two_bump,
    "sinusoid": _sinusoid,
    "aniso_disk": None,  # disk conformal factor with sigma0 = diag(1, 2)
}


def make_phantom(name: str, grid: Grid) -> Phantom:
    """Named preset evaluated at cell centres of ``grid`` (mapped to the unit square)."""
    if name not in PHANTOMS:
        raise KeyError(f"unknown phantom {name!r}; choose from {sorted(PHANTOMS)}")
    X, Y = grid.cell_centers()
    Lx, Ly = grid.lengths
    X = (X - grid.origin[0]) / Lx
    Y = (Y - grid.origin[1]) / Ly
    if name == "aniso_disk":
        S = np.zeros(grid.shape + (3,))
        S[..., 0] = 1.0
        S[..., 2] = 2.0
        return Phantom(name, c=ScalarField(grid, _disk(X, Y)), sigma0=S)
    return Phantom(name, sigma=ScalarField(grid, PHANTOMS[name](X, Y)))


@dataclass(frozen=True, eq=False)
class ImagingData:
    """Measured ``a`` and ``g``; ``J_true``/``sigma_true`` only for synthetic data.

    ``power`` is the input power ``-<g, u>`` of the true potential; it fixes
    the otherwise free scale of the recovered conductivity.
    """

    a: ScalarField
    g: BoundaryTrace
    sigma0: np.ndarray | None = field(default=None, repr=False)
    power: float | None = None
    metadata: dict = field(default_factory=dict)
    J_true: VectorField | None = field(default=None, repr=False)
    sigma_true: ScalarField | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.a.grid != self.g.grid:
            raise ValueError("a and g live on different grids")
        if np.any(self.a.values < 0):
            raise ValueError("magnitude data a must be nonnegative")
        total = self.g.integral()
        scale = np.abs(self.g.values) @ self.g.grid.boundary_lengths()
        if abs(total) > CONSERVATION_TOL * max(scale, np.finfo(float).tiny):
            raise ValueError(f"boundary current is not conserved (integral {total:.3e})")

    @property
    def grid(self):
        return self.a.grid


def synthesize(phantom: Phantom, g_drive: BoundaryTrace, noise_level=0.0, seed=0,
               cfg: LinearSolveConfig | None = None) -> ImagingData:
    """Forward-solve the phantom and sample ``a`` with multiplicative noise."""
    if not 0 <= noise_level < 1:
        raise ValueError("noise_level must lie in [0, 1)")
    grid = phantom.grid
    if phantom.is_isotropic:
        sx = sy = phantom.sigma
        S = None
    else:
        S = phantom.sigma0
        if np.any(S[..., 1] != 0):
            raise NotImplementedError("forward solves need a diagonal sigma0")
        sx = ScalarField(grid, phantom.c.values * S[..., 0])
        sy = ScalarField(grid, phantom.c.values * S[..., 2])
    u = solve_conductivity(sx, g_drive, cfg, sigma_y=sy)
    J = current_density(sx, u, g_drive, sigma_y=sy)
    P = cell_pairs(J)
    if S is None:
        a = np.hypot(P[..., 0], P[..., 1])
    else:
        Si = tensor_inverse(S)
        a = np.sqrt(Si[..., 0] * P[..., 0] ** 2 + 2 * Si[..., 1] * P[..., 0] * P[..., 1]
                    + Si[..., 2] * P[..., 1] ** 2)
    if noise_level > 0:
        eta = np.random.default_rng(seed).uniform(-noise_level, noise_level, a.shape)
        a = a * (1.0 + eta)
    g = normal_trace(J)
    meta = {"phantom": phantom.name, "noise_level": float(noise_level), "seed": int(seed),
            "nx": grid.nx, "ny": grid.ny}
    truth = phantom.sigma if phantom.is_isotropic else None
    return ImagingData(ScalarField(grid, a), g, S, -boundary_integral(g, u), meta, J, truth)


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    T: VectorField
    u: ScalarField
    sigma_rec: ScalarField | None  # zero on masked cells
    mask: np.ndarray  # True where sigma_rec is defined
    report: SolverReport
    certificate: Certificate
    T_error: float | None = None
    sigma_error: float | None = None


def relative_error(est, ref, mask=None):
    """``||est - ref||_2 / ||ref||_2`` over ``mask`` (arrays of matching leading shape)."""
    est = np.asarray(est, float)
    ref = np.asarray(ref, float)
    if mask is not None:
        est = est[mask]
        ref = ref[mask]
    return float(np.linalg.norm(est - ref) / np.linalg.norm(ref))


def recover(data: ImagingData, metric_kind=None, cfg: SolverConfig | None = None,
            a_floor=None) -> RecoveryResult:
    """Recover ``T ~ J`` and, in the isotropic case, ``sigma = |T| / (P |grad u|)``.

    ``P`` is ``data.power`` (1 when unknown).  Cells whose right or top face
    lies on the boundary have no interior gradient slot and are masked, as
    are cells with ``|grad u| <= eps`` (``cfg.grad_floor``, default
    ``1e-4 max |grad u|``).
    """
    cfg = cfg or SolverConfig()
    grid = data.grid
    if metric_kind is None:
        metric_kind = "riemannian" if data.sigma0 is not None else "isotropic"
    a = data.a.values
    floor = 1e-6 * a.max() if a_floor is None else float(a_floor)
    if not floor > 0:
        raise ValueError("magnitude data is identically zero")
    low = a < floor
    if low.any():
        warnings.warn(f"{int(low.sum())} cells with a below {floor:.3g} were clipped",
                      RuntimeWarning, stacklevel=2)
        a = np.maximum(a, floor)
    aw = ScalarField(grid, a)
    if canonical_kind(metric_kind) == RIEMANNIAN:
        if data.sigma0 is None:
            raise ValueError("riemannian recovery needs sigma0 in the data")
        metric = Metric.riemannian(aw, data.sigma0)
    else:
        metric = Metric.isotropic(aw)
    u, T, report = run(metric, data.g, cfg)
    u_g, _ = prepare_reference(data.g, cfg)
    cert = certify(metric, data.g, u, T, u_g, cfg.grad_floor)

    Gu = cell_pairs(gradient(u))
    gn = np.hypot(Gu[..., 0], Gu[..., 1])
    eps = cfg.grad_floor if cfg.grad_floor is not None else GRAD_FLOOR_REL * gn.max()
    flat = gn <= eps
    mask = ~flat
    mask[-1, :] = False
    mask[:, -1] = False

    sigma_rec = None
    sigma_err = None
    if metric.is_isotropic:
        power = data.power if data.power else 1.0
        Tp = cell_pairs(T)
        s = np.zeros(grid.shape)
        s[mask] = np.hypot(Tp[..., 0], Tp[..., 1])[mask] / (power * gn[mask])
        sigma_rec = ScalarField(grid, s)
        if data.sigma_true is not None and mask.any():
            sigma_err = relative_error(s, data.sigma_true.values, mask)
    if flat.any():
        warnings.warn(f"{flat.mean():.1%} of cells have |grad u| <= {eps:.3g} and are masked",
                      FlatRegionWarning, stacklevel=2)
    T_err = None
    if data.J_true is not None:
        T_err = relative_error(cell_pairs(T), cell_pairs(data.J_true), mask)
    return RecoveryResult(T, u, sigma_rec, mask, report, cert, T_err, sigma_err)
