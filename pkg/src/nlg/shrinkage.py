"""Proximal maps of the integrand: ``argmin_p phi(x, p) + (alpha/2) |p - q|^2``.

Isotropic metrics use closed-form soft thresholding with threshold
``a / alpha``.  For the riemannian metric ``a sqrt(p^T S p)`` the stationarity
condition ``a S p / s + alpha (p - q) = 0`` with ``s = sqrt(p^T S p)`` gives
``p = (I + (c / s) S)^{-1} q``, ``c = a / alpha``.  In the eigenbasis of ``S``
this reduces to the scalar equation

    sum_i mu_i qhat_i^2 / (s + c mu_i)^2 = 1,

whose left side decreases strictly in ``s``.  A nonzero root exists exactly
when ``phi0(x, alpha q) > 1``; it is found by safeguarded Newton iteration on
``F(s)^(-1/2) - 1`` inside the bracket ``[0, sqrt(q^T S q)]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ProxNoConvergence
from .grid import VectorField, cell_pairs, from_cell_pairs
from .metric import Metric, tensor_eigen

__all__ = ["ProxConfig", "prox_phi", "prox_field", "prox_cells", "prox_objective"]


@dataclass(frozen=True)
class ProxConfig:
    alpha: float = 1.0
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.newton_tol > 0 or self.newton_max_iter < 1:
            raise ValueError("invalid Newton settings")


def _eigenframe(S):
    """Eigenvalues (hi, lo) and the unit eigenvector of the larger one."""
    lo, hi = tensor_eigen(S)
    theta = 0.5 * np.arctan2(2.0 * S[..., 1], S[..., 0] - S[..., 2])
    return hi, lo, np.cos(theta), np.sin(theta)


def _shrink_iso(a, Q, alpha):
    n = np.hypot(Q[..., 0], Q[..., 1])
    keep = n > a / alpha
    scale = np.zeros_like(n)
    np.divide(n - a / alpha, n, out=scale, where=keep)
    return Q * scale[..., None]


def _shrink_riem(a, S, Q, alpha, tol, max_iter):
    c = a / alpha
    mu1, mu2, ex, ey = _eigenframe(S)
    q1 = ex * Q[..., 0] + ey * Q[..., 1]
    q2 = -ey * Q[..., 0] + ex * Q[..., 1]
    w1 = mu1 * q1 * q1
    w2 = mu2 * q2 * q2
    # zero iff phi0(alpha q) <= 1, i.e. q^T S^-1 q <= c^2
    active = q1 * q1 / mu1 + q2 * q2 / mu2 > c * c
    s = np.zeros_like(c)
    if active.any():
        idx = np.nonzero(active)
        cc, m1, m2, v1, v2 = c[idx], mu1[idx], mu2[idx], w1[idx], w2[idx]
        lo = np.zeros_like(cc)
        hi = np.sqrt(v1 + v2)
        x = np.zeros_like(cc)
        done = np.zeros(cc.shape, bool)
        for _ in range(max_iter):
            d1 = x + cc * m1
            d2 = x + cc * m2
            F = v1 / d1 ** 2 + v2 / d2 ** 2
            dF = -2.0 * (v1 / d1 ** 3 + v2 / d2 ** 3)
            chi = F ** -0.5 - 1.0
            dchi = -0.5 * F ** -1.5 * dF
            lo = np.where(chi < 0, x, lo)
            hi = np.where(chi > 0, x, hi)
            x_new = x - chi / dchi
            outside = ~((x_new > lo) & (x_new < hi)) | ~np.isfinite(x_new)
            x_new = np.where(outside, 0.5 * (lo + hi), x_new)
            step = np.abs(x_new - x)
            x = np.where(done, x, x_new)
            done |= (step <= tol * (1.0 + x)) | (chi == 0)
            if done.all():
                break
        else:
            bad = np.flatnonzero(~done)[0]
            cell = tuple(int(k[bad]) for k in idx)
            raise ProxNoConvergence(
                f"riemannian shrinkage did not converge at cell {cell}", cell=cell)
        s[idx] = x
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(active, s / (s + c * mu1), 0.0)
        f2 = np.where(active, s / (s + c * mu2), 0.0)
    p1 = f1 * q1
    p2 = f2 * q2
    return np.stack([ex * p1 - ey * p2, ey * p1 + ex * p2], axis=-1)


def prox_cells(m: Metric, Q, alpha, cfg: ProxConfig | None = None):
    """Cellwise prox of ``phi / alpha`` for ``Q`` of shape ``(ny, nx, 2)``."""
    cfg = cfg or ProxConfig(alpha=alpha)
    a = m.a.values
    if m.is_isotropic:
        return _shrink_iso(a, Q, alpha)
    return _shrink_riem(a, m.sigma0, Q, alpha, cfg.newton_tol, cfg.newton_max_iter)


def prox_phi(m: Metric, cell, q, alpha, cfg: ProxConfig | None = None):
    """Single-cell prox: ``argmin_p phi(cell, p) + (alpha/2) |p - q|^2``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    cfg = cfg or ProxConfig(alpha=alpha)
    j, i = cell
    a = m.a.values[j:j + 1, i:i + 1]
    Q = np.asarray(q, float).reshape(1, 1, 2)
    if m.is_isotropic:
        P = _shrink_iso(a, Q, alpha)
    else:
        try:
            P = _shrink_riem(a, m.sigma0[j:j + 1, i:i + 1], Q, alpha,
                             cfg.newton_tol, cfg.newton_max_iter)
        except ProxNoConvergence as exc:
            raise ProxNoConvergence(str(exc), cell=(j, i)) from None
    return P[0, 0]


def prox_field(m: Metric, w_field: VectorField, u_g_grad: VectorField, alpha,
               cfg: ProxConfig | None = None) -> VectorField:
    """Minimise ``phi(d + grad u_g) + (alpha/2) |w - d|^2`` cell by cell.

    Each cell owns its right and top faces.  Left and bottom boundary faces
    belong to no cell and are left at ``w`` (the unconstrained minimiser).
    """
    shift = cell_pairs(u_g_grad)
    P = prox_cells(m, cell_pairs(w_field) + shift, alpha, cfg)
    return from_cell_pairs(P - shift, w_field.grid, base=w_field)


def prox_objective(m: Metric, P, Q, alpha):
    """Cellwise value of ``phi(p) + (alpha/2)|p - q|^2``."""
    return m.phi_cells(P) + 0.5 * alpha * ((P - Q) ** 2).sum(axis=-1)
