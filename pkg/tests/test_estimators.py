import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nlg.cdii import make_phantom, synthesize
from nlg.estimators import ConductivityImager, LeastGradientSolver
from nlg.grid import Grid, square_flow


def test_params_and_clone():
    est = LeastGradientSolver(alpha=0.5, max_iter=10)
    assert est.get_params()["alpha"] == 0.5
    c = clone(est).set_params(alpha=2.0)
    assert c.alpha == 2.0 and est.alpha == 0.5
    with pytest.raises(NotFittedError):
        est.predict()


def test_fit_square_flow():
    grid = Grid.unit_square(10)
    est = LeastGradientSolver().fit(square_flow(grid))
    assert est.lambda_hat_ == pytest.approx(1.0, abs=1e-10)
    assert est.certificate_.passes()
    assert est.predict() is est.u_ and est.transform() is est.T_


def test_fit_riemannian_requires_tensor():
    grid = Grid.unit_square(6)
    with pytest.raises(ValueError):
        LeastGradientSolver(metric="riem").fit(square_flow(grid))
    est = LeastGradientSolver(metric="riem", max_iter=2000).fit(square_flow(grid),
                                                                 sigma0=[1.0, 0.0, 1.0])
    assert est.lambda_hat_ == pytest.approx(1.0, abs=1e-8)


def test_weight_scalar_broadcast():
    grid = Grid.unit_square(6)
    est = LeastGradientSolver().fit(square_flow(grid), a=3.0)
    assert est.lambda_hat_ == pytest.approx(3.0, abs=1e-8)
    with pytest.raises(ValueError):
        LeastGradientSolver().fit(square_flow(grid), a=-1.0)


def test_conductivity_imager():
    grid = Grid.unit_square(12)
    data = synthesize(make_phantom("constant", grid), square_flow(grid))
    with pytest.warns(Warning):
        im = ConductivityImager().fit(data)
    s = im.predict()
    np.testing.assert_allclose(s.values[im.mask_], 1.0, atol=1e-2)
    with pytest.raises(TypeError):
        ConductivityImager().fit(np.zeros(3))
