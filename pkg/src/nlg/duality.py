"""Optimality certificates for primal/dual pairs ``(u, T)``.

A divergence-free ``T`` with ``phi0(x, T) <= 1`` and ``T . nu = lambda g``
bounds the least gradient value from below by ``<T . nu, u_g>``; a candidate
``u`` with ``<g, u> = 1`` bounds it from above by its total variation.  The
certificate reports how far a given pair is from satisfying these conditions
and the alignment ``phi(x, n) = T . n`` along ``n = grad u / |grad u|``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import DegenerateRenormalization, NotInMg, PreconditionError
from .grid import (BoundaryTrace, ScalarField, VectorField, boundary_integral,
                   cell_pairs, divergence, gradient, normal_trace)
from .metric import Metric, total_variation

__all__ = [
    "Certificate",
    "MultiplicityReport",
    "primal_value",
    "dual_value",
    "certify",
    "alignment",
    "multiplicity_test",
    "g_star_estimate",
    "DEFAULT_THRESHOLDS",
    "GRAD_FLOOR_REL",
]

# thresholds used when a pair is judged "certified"
DEFAULT_THRESHOLDS = {
    "div_residual": 1e-6,
    "polar_excess": 1e-3,
    "flux_residual": 1e-3,
    "alignment_defect": 1e-2,
}

_TINY = np.finfo(float).tiny

# default flat-cell floor relative to max |grad u|; splitting iterates keep
# residual slopes far below this in regions where the minimiser is constant
GRAD_FLOOR_REL = 1e-4


@dataclass(frozen=True)
class Certificate:
    div_residual: float
    polar_excess: float
    flux_residual: float
    gap: float
    alignment_defect: float
    lambda_hat: float
    primal_value: float
    dual_value: float
    constraint_residual: float
    aligned_cells: int
    grad_floor: float

    def to_dict(self):
        return {k: float(v) if not isinstance(v, int) else v for k, v in asdict(self).items()}

    def failures(self, thresholds=None):
        """Names of residuals above their thresholds."""
        th = dict(DEFAULT_THRESHOLDS)
        th.update(thresholds or {})
        out = []
        for name, limit in th.items():
            value = getattr(self, name)
            if name == "gap":
                value = abs(value)
            if not value <= limit:
                out.append(name)
        return out

    def passes(self, thresholds=None):
        return not self.failures(thresholds)


def primal_value(metric: Metric, u: ScalarField, g: BoundaryTrace, tol=1e-4) -> float:
    """Total variation of ``u``; requires ``<g, u> = 1`` within ``tol``."""
    c = boundary_integral(g, u)
    if abs(c - 1.0) > tol:
        raise NotInMg(f"<g, u> = {c:.6g}, expected 1")
    return total_variation(metric, u)


def dual_value(T: VectorField, u_g: ScalarField) -> float:
    return boundary_integral(normal_trace(T), u_g)


def _grad_floor(P, eps):
    n = np.hypot(P[..., 0], P[..., 1])
    floor = GRAD_FLOOR_REL * n.max() if eps is None else float(eps)
    return n, floor


def alignment(metric: Metric, u: ScalarField, T: VectorField, eps=None):
    """Per-cell defect ``(phi(n) - T.n) / phi(n)``, NaN where ``|grad u| <= eps``."""
    P = cell_pairs(gradient(u))
    n, floor = _grad_floor(P, eps)
    sel = n > floor
    N = np.zeros_like(P)
    N[sel] = P[sel] / n[sel][:, None]
    ph = metric.phi_cells(N)
    tn = (cell_pairs(T) * N).sum(axis=-1)
    out = np.full(n.shape, np.nan)
    out[sel] = (ph[sel] - tn[sel]) / ph[sel]
    return out, floor


def certify(metric: Metric, g: BoundaryTrace, u: ScalarField, T: VectorField,
            u_g: ScalarField, eps=None) -> Certificate:
    """Residuals of the optimality conditions for the pair ``(u, T)``.

    ``div_residual`` is ``max |div T| * h / max |T|``; ``polar_excess`` the
    largest ``phi0(x, T) - 1`` (clipped at 0); ``flux_residual`` the largest
    ``|T . nu - lambda g|`` relative to ``max |lambda g|``, with ``lambda`` the
    dual value.  ``alignment_defect`` is the largest magnitude of the per-cell
    defect over cells where ``|grad u| > eps`` (default ``1e-4 max |grad u|``).
    """
    grid = u.grid
    tmax = max(T.max_abs(), _TINY)
    div_res = float(np.abs(divergence(T).values).max() * grid.h / tmax)
    polar = metric.polar_cells(cell_pairs(T))
    polar_excess = float(max(polar.max() - 1.0, 0.0))
    lam = dual_value(T, u_g)
    lg = lam * g
    flux = float(np.abs((normal_trace(T) - lg).values).max() / max(lg.max_abs(), _TINY))
    primal = total_variation(metric, u)
    defect, floor = alignment(metric, u, T, eps)
    sel = np.isfinite(defect)
    align = float(np.abs(defect[sel]).max()) if sel.any() else 0.0
    return Certificate(
        div_residual=div_res, polar_excess=polar_excess, flux_residual=flux,
        gap=primal - lam, alignment_defect=align, lambda_hat=lam,
        primal_value=primal, dual_value=lam,
        constraint_residual=abs(boundary_integral(g, u) - 1.0),
        aligned_cells=int(sel.sum()), grad_floor=floor)


@dataclass(frozen=True)
class MultiplicityReport:
    tv_excess: float
    alignment_defect: float
    lambda_hat: float
    u_tilde: ScalarField
    certificate: Certificate


def _check_monotone(F, lo, hi, samples=2001):
    t = np.linspace(lo, hi, samples)
    ft = np.asarray(F(t), float)
    if ft.shape != t.shape or not np.all(np.isfinite(ft)):
        raise PreconditionError("F must map arrays elementwise to finite values")
    if hi > lo:
        slopes = np.diff(ft) / np.diff(t)
        if not np.all(slopes > 0):
            raise PreconditionError("F must be increasing on the range of u")
        if not np.all(np.isfinite(slopes)):
            raise PreconditionError("F must be Lipschitz on the range of u")


def multiplicity_test(metric: Metric, g: BoundaryTrace, u: ScalarField, T: VectorField,
                      F, u_g: ScalarField, eps=None) -> MultiplicityReport:
    """Check that a monotone reparametrisation of a minimiser is again one.

    Forms ``u~ = c1 F(u) + c2`` with ``<g, u~> = 1`` and mean zero, and
    measures its total variation excess over ``lambda`` together with its
    alignment against the *same* dual field ``T``.
    """
    lo, hi = float(u.values.min()), float(u.values.max())
    _check_monotone(F, lo, hi)
    Fu = u.apply(lambda v: np.asarray(F(v), float))
    pairing = boundary_integral(g, Fu)
    scale = boundary_integral(BoundaryTrace(g.grid, np.abs(g.values)), Fu.apply(np.abs))
    if abs(pairing) <= 1e-10 * max(scale, _TINY):
        raise DegenerateRenormalization("<g, F(u)> vanishes; cannot renormalise")
    ut = Fu / pairing
    ut = ut - ut.mean()
    cert = certify(metric, g, ut, T, u_g, eps)
    lam = cert.lambda_hat
    excess = primal_value(metric, ut, g) / lam - 1.0
    return MultiplicityReport(excess, cert.alignment_defect, lam, ut, cert)


def g_star_estimate(report) -> float:
    """``||g||_*`` from an unweighted isotropic run: the reciprocal of lambda."""
    if getattr(report, "metric_kind", None) != "isotropic" or not getattr(report, "unit_weight", False):
        raise ValueError("g_star_estimate needs a run with phi(x, p) = |p|")
    return 1.0 / report.lambda_hat
