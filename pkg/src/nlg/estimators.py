"""scikit-learn style front ends.

``LeastGradientSolver().fit(g, a=...)`` runs the splitting solver and exposes
``u_``, ``T_``, ``lambda_hat_``, ``report_`` and ``certificate_``.
``ConductivityImager().fit(data)`` does the same for imaging data and
``predict()`` returns the recovered conductivity.  Hyperparameters follow the
sklearn conventions so ``get_params``/``set_params``/``clone`` work.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .cdii import ImagingData, recover
from .duality import certify
from .metric import RIEMANNIAN, Metric, canonical_kind
from .poisson import LinearSolveConfig
from .solver import SolverConfig, prepare_reference, run
from .validation import check_tensor, check_trace, check_weight

__all__ = ["LeastGradientSolver", "ConductivityImager", "make_config"]


def make_config(alpha=1.0, max_iter=5000, stop_tol=1e-6, gap_tol=1e-5, div_tol=1e-7,
                eps_grad=None, cg_tol=1e-10, preconditioner="dct"):
    return SolverConfig(alpha=alpha, max_iter=max_iter, stop_tol=stop_tol, gap_tol=gap_tol,
                        div_tol=div_tol, grad_floor=eps_grad,
                        linear=LinearSolveConfig(cg_tol=cg_tol, preconditioner=preconditioner))


class _ConfigMixin:
    def _config(self):
        return make_config(self.alpha, self.max_iter, self.stop_tol, self.gap_tol,
                           self.div_tol, self.eps_grad, self.cg_tol, self.preconditioner)


class LeastGradientSolver(_ConfigMixin, BaseEstimator):
    """Minimise ``sum phi(x, grad u)`` subject to ``<g, u> = 1``."""

    def __init__(self, metric="iso", alpha=1.0, max_iter=5000, stop_tol=1e-6, gap_tol=1e-5,
                 div_tol=1e-7, eps_grad=None, cg_tol=1e-10, preconditioner="dct"):
        self.metric = metric
        self.alpha = alpha
        self.max_iter = max_iter
        self.stop_tol = stop_tol
        self.gap_tol = gap_tol
        self.div_tol = div_tol
        self.eps_grad = eps_grad
        self.cg_tol = cg_tol
        self.preconditioner = preconditioner

    def build_metric(self, grid, a=None, sigma0=None):
        a = check_weight(a, grid)
        if canonical_kind(self.metric) == RIEMANNIAN:
            S = check_tensor(sigma0, grid)
            if S is None:
                raise ValueError("riemannian metric needs sigma0")
            return Metric.riemannian(a, S)
        if sigma0 is not None:
            raise ValueError("sigma0 given for an isotropic metric")
        return Metric.isotropic(a)

    def fit(self, g, y=None, *, a=None, sigma0=None):
        g = check_trace(g)
        cfg = self._config()
        self.metric_ = self.build_metric(g.grid, a, sigma0)
        self.u_, self.T_, self.report_ = run(self.metric_, g, cfg)
        u_g, _ = prepare_reference(g, cfg)
        self.certificate_ = certify(self.metric_, g, self.u_, self.T_, u_g, cfg.grad_floor)
        self.lambda_hat_ = self.report_.lambda_hat
        self.g_ = g
        return self

    def predict(self, X=None):
        """The fitted minimiser ``u``."""
        check_is_fitted(self, "u_")
        return self.u_

    def transform(self, X=None):
        """The fitted dual field ``T``."""
        check_is_fitted(self, "T_")
        return self.T_


class ConductivityImager(_ConfigMixin, BaseEstimator):
    """Recover the current and (isotropic case) conductivity from ``ImagingData``."""

    def __init__(self, metric=None, alpha=1.0, max_iter=20000, stop_tol=1e-9, gap_tol=1e-5,
                 div_tol=1e-7, eps_grad=None, cg_tol=1e-10, preconditioner="dct", a_floor=None):
        self.metric = metric
        self.alpha = alpha
        self.max_iter = max_iter
        self.stop_tol = stop_tol
        self.gap_tol = gap_tol
        self.div_tol = div_tol
        self.eps_grad = eps_grad
        self.cg_tol = cg_tol
        self.preconditioner = preconditioner
        self.a_floor = a_floor

    def fit(self, data: ImagingData, y=None):
        if not isinstance(data, ImagingData):
            raise TypeError("fit expects ImagingData")
        res = recover(data, self.metric, self._config(), self.a_floor)
        self.result_ = res
        self.T_, self.u_, self.mask_ = res.T, res.u, res.mask
        self.sigma_ = res.sigma_rec
        self.report_ = res.report
        self.certificate_ = res.certificate
        return self

    def predict(self, X=None):
        """Recovered conductivity (zero where ``mask_`` is False)."""
        check_is_fitted(self, "result_")
        if self.sigma_ is None:
            raise ValueError("conductivity is only recovered for isotropic data")
        return self.sigma_

    def transform(self, X=None):
        check_is_fitted(self, "T_")
        return self.T_
