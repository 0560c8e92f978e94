"""Douglas-Rachford (alternating split Bregman) solver for the Neumann least
gradient problem

    minimise  sum_cells phi(x, grad u)   subject to   <g, u>_boundary = 1.

Writing ``u = v + u_g`` with a fixed ``u_g`` satisfying ``<g, u_g> = 1``, each
iteration performs

1. a Neumann Poisson solve for ``u^{k+1}`` with data ``d^k - b^k``, followed by
   the correction ``v^{k+1} = u^{k+1} + beta^{k+1} w`` that restores
   ``<g, v> = 0`` (``w`` is the harmonic lift of ``g``);
2. the cellwise shrinkage ``d^{k+1} = prox(grad v^{k+1} + b^k)``;
3. the multiplier update ``b^{k+1} = b^k + grad v^{k+1} - d^{k+1}``.

The scaled multiplier converges to ``T / alpha`` where ``T`` solves the dual
problem: divergence free, ``phi0(x, T) <= 1`` and ``T . nu = lambda g``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DegenerateNormalization, NLGError, NonConvergence
from .grid import (BoundaryTrace, ScalarField, VectorField, boundary_integral,
                   boundary_lump, divergence, gradient, inner, normal_trace,
                   with_normal_trace)
from .metric import Metric, total_variation
from .poisson import LinearSolveConfig, solve_harmonic_flux, solve_poisson_neumann
from .shrinkage import ProxConfig, prox_field

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolverState",
    "SolverReport",
    "prepare_reference",
    "initial_state",
    "step",
    "dual_field",
    "run",
]

TERMINATION_REASONS = ("gap", "stagnation", "max_iter")


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 1.0
    max_iter: int = 5000
    stop_tol: float = 1e-6
    gap_tol: float = 1e-5
    div_tol: float = 1e-7
    grad_floor: float | None = None  # None -> 1e-4 * max |grad u|
    linear: LinearSolveConfig = field(default_factory=LinearSolveConfig)
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.stop_tol < 1:
            raise ValueError("stop_tol must lie in (0, 1)")
        if not self.gap_tol > 0 or not self.div_tol > 0:
            raise ValueError("gap_tol and div_tol must be positive")
        if self.grad_floor is not None and not self.grad_floor > 0:
            raise ValueError("grad_floor must be positive")

    @property
    def prox(self):
        return ProxConfig(self.alpha, self.newton_tol, self.newton_max_iter)


@dataclass(frozen=True)
class SolverState:
    k: int
    u: ScalarField
    v: ScalarField
    d: VectorField
    b: VectorField
    beta: float
    w: ScalarField
    u_g: ScalarField
    gw: float  # <g, w>


@dataclass
class SolverReport:
    lambda_hat: float
    primal_value: float
    dual_value: float
    gap: float
    iterations_used: int
    termination_reason: str
    alpha: float
    metric_kind: str
    unit_weight: bool
    tv_cell_average: float = float("nan")
    history: dict = field(default_factory=lambda: {
        "b_change": [], "div_residual": [], "flux_residual": [], "gap": []})

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "lambda_hat", "primal_value", "dual_value", "gap", "iterations_used",
            "termination_reason", "alpha", "metric_kind", "unit_weight",
            "tv_cell_average")}
        out["history"] = {k: list(map(float, v)) for k, v in self.history.items()}
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        history = data.pop("history", None)
        rep = cls(**data)
        if history is not None:
            rep.history = {k: list(v) for k, v in history.items()}
        return rep


def prepare_reference(g: BoundaryTrace, cfg: SolverConfig | None = None):
    """Harmonic lift ``w`` of ``g`` and the normalised reference ``u_g = w / <g, w>``."""
    cfg = cfg or SolverConfig()
    w, gw = solve_harmonic_flux(g, cfg.linear)
    if abs(gw) < 1e-12:
        raise DegenerateNormalization(f"<g, w> = {gw:.3e} is too small to normalise")
    return w / gw, w


def initial_state(g: BoundaryTrace, cfg: SolverConfig | None = None) -> SolverState:
    """Zero-initialised state (``b = d = 0``)."""
    u_g, w = prepare_reference(g, cfg)
    grid = g.grid
    zero = grid.zeros_scalar()
    return SolverState(0, zero, zero, grid.zeros_vector(), grid.zeros_vector(),
                       0.0, w, u_g, boundary_integral(g, w))


def step(state: SolverState, metric: Metric, g: BoundaryTrace,
         cfg: SolverConfig | None = None) -> SolverState:
    """One splitting iteration; see the module docstring."""
    cfg = cfg or SolverConfig()
    try:
        u = solve_poisson_neumann(state.d - state.b, None, cfg.linear)
        beta = -boundary_integral(g, u) / state.gw
        v = u + beta * state.w
        Gv = gradient(v)
        d = prox_field(metric, Gv + state.b, gradient(state.u_g), cfg.alpha, cfg.prox)
    except NLGError as exc:
        raise type(exc)(f"iteration {state.k + 1}: {exc}") from exc
    b = state.b + Gv - d
    return replace(state, k=state.k + 1, u=u, v=v, d=d, b=b, beta=beta)


def dual_field(state: SolverState, g: BoundaryTrace, alpha: float):
    """Dual candidate ``T = alpha b`` with boundary faces set to ``lambda_hat g``.

    ``lambda_hat = alpha <b, grad u_g>``, the dual objective of ``alpha b``.
    """
    lam = alpha * inner(state.b, gradient(state.u_g))
    return with_normal_trace(alpha * state.b, lam * g), lam


def _residuals(T, b, alpha, lam, g):
    grid = T.grid
    tmax = max(T.max_abs(), np.finfo(float).tiny)
    div_full = divergence(T).values
    interior = np.ones(grid.shape, bool)
    interior[0, :] = interior[-1, :] = interior[:, 0] = interior[:, -1] = False
    div_int = float(np.abs(div_full[interior]).max()) if interior.any() else 0.0
    # boundary cells: flux implied by the interior field vs lambda g
    implied = -divergence((alpha * b).interior()).values * grid.cell_area
    expected = lam * boundary_lump(g)
    mism = np.abs(implied - expected)[~interior].max()
    flux = float(mism / max(np.abs(expected).max(), np.finfo(float).tiny))
    return div_int * grid.h / tmax, flux, float(np.abs(div_full).max() * grid.h / tmax)


def run(metric: Metric, g: BoundaryTrace, cfg: SolverConfig | None = None, *,
        state: SolverState | None = None, callback=None, raise_on_max_iter=False,
        return_state=False):
    """Iterate until the duality gap closes, ``b`` stagnates, or ``max_iter``.

    Returns ``(u, T, report)`` with ``u = v + u_g`` the candidate minimiser and
    ``T`` the dual field.  ``state`` resumes from a checkpoint; ``callback``
    receives each new state.  With ``raise_on_max_iter`` a run that exhausts
    ``max_iter`` raises :class:`NonConvergence` carrying the partial result.
    ``return_state`` appends the final :class:`SolverState` (for checkpoints).
    """
    cfg = cfg or SolverConfig()
    if metric.grid != g.grid:
        raise ValueError("metric and boundary data live on different grids")
    if state is None:
        state = initial_state(g, cfg)
    unit_weight = bool(metric.is_isotropic and np.all(metric.a.values == 1.0))
    hist = {"b_change": [], "div_residual": [], "flux_residual": [], "gap": []}
    reason = "max_iter"
    primal = lam = gap = float("nan")
    T = None
    for _ in range(cfg.max_iter):
        new = step(state, metric, g, cfg)
        tiny = np.finfo(float).tiny
        db = (new.b - state.b).norm() / max(new.b.norm(), tiny)
        dd = (new.d - state.d).norm() / max(new.d.norm(), gradient(new.u_g).norm(), tiny)
        state = new
        T, lam = dual_field(state, g, cfg.alpha)
        div_int, flux, div_all = _residuals(T, state.b, cfg.alpha, lam, g)
        primal = total_variation(metric, state.v + state.u_g)
        gap = primal - lam
        hist["b_change"].append(db)
        hist["div_residual"].append(div_all)
        hist["flux_residual"].append(flux)
        hist["gap"].append(gap)
        if callback is not None:
            callback(state)
        if abs(gap) <= cfg.gap_tol * max(1.0, abs(primal)) and div_all <= cfg.div_tol:
            reason = "gap"
            break
        if max(db, dd) < cfg.stop_tol:
            reason = "stagnation"
            break
    u = state.v + state.u_g
    report = SolverReport(
        lambda_hat=lam, primal_value=primal, dual_value=lam, gap=gap,
        iterations_used=len(hist["gap"]), termination_reason=reason,
        alpha=cfg.alpha, metric_kind=metric.kind, unit_weight=unit_weight,
        tv_cell_average=total_variation(metric, u, scheme="average"), history=hist)
    logger.info("least gradient solve: %s after %d iterations, lambda=%.10g gap=%.3e",
                reason, report.iterations_used, lam, gap)
    if reason == "max_iter" and raise_on_max_iter:
        raise NonConvergence(f"no convergence in {cfg.max_iter} iterations "
                             f"(gap {gap:.3e})", u=u, T=T, report=report)
    return (u, T, report, state) if return_state else (u, T, report)
