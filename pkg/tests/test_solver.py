import numpy as np
import pytest

from nlg.exceptions import CompatibilityError, NonConvergence, ZeroDataError
from nlg.fieldio import load_checkpoint, save_checkpoint
from nlg.grid import BoundaryTrace, Grid, ScalarField, boundary_integral, divergence, square_flow
from nlg.metric import Metric
from nlg.solver import SolverConfig, SolverReport, initial_state, prepare_reference, run, step

TIGHT = SolverConfig(alpha=0.3, max_iter=20000, stop_tol=1e-10)


def weighted(n):
    grid = Grid.unit_square(n)
    X, _ = grid.cell_centers()
    return Metric.isotropic(ScalarField(grid, 1 + X)), square_flow(grid)


def test_square_flow_is_solved_exactly():
    grid = Grid.unit_square(16)
    u, T, rep = run(Metric.constant(grid), square_flow(grid))
    assert rep.termination_reason == "gap"
    assert rep.lambda_hat == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(T.x, 1.0, atol=1e-12)
    np.testing.assert_allclose(T.y, 0.0, atol=1e-12)
    assert boundary_integral(square_flow(grid), u) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [8, 16])
def test_weighted_strip_value(n):
    # with a = 1 + x the cheapest level line is the first interior face,
    # where the cell weight is 1 + h/2 (value cross-checked against the
    # independent primal-dual oracle and an interior point solve)
    m, g = weighted(n)
    u, T, rep = run(m, g, TIGHT)
    assert rep.termination_reason in ("gap", "stagnation")
    assert rep.lambda_hat == pytest.approx(1 + 0.5 / n, abs=1e-6)
    assert rep.primal_value == pytest.approx(1 + 0.5 / n, abs=1e-6)
    assert rep.gap == pytest.approx(0.0, abs=1e-5)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_scaling_laws(c):
    m, g = weighted(8)
    lam = run(m, g, TIGHT)[2].lambda_hat
    assert run(m, g * c, TIGHT)[2].lambda_hat == pytest.approx(lam / c, rel=1e-4)
    assert run(m.scaled(c), g, TIGHT)[2].lambda_hat == pytest.approx(lam * c, rel=1e-4)


def test_reference_normalisation():
    grid = Grid.unit_square(8)
    g = square_flow(grid)
    u_g, w = prepare_reference(g)
    assert boundary_integral(g, u_g) == pytest.approx(1.0, rel=1e-12)


def test_iterates_satisfy_constraint():
    m, g = weighted(8)
    s = initial_state(g)
    for _ in range(5):
        s = step(s, m, g)
        assert abs(boundary_integral(g, s.v)) < 1e-12
    assert s.k == 5


def test_dual_field_is_divergence_free_at_convergence():
    m, g = weighted(16)
    _, T, rep = run(m, g, TIGHT)
    assert rep.history["div_residual"][-1] <= 1e-7
    assert np.abs(divergence(T).values).max() * (1 / 16) / T.max_abs() <= 1e-7


def test_deterministic_reruns():
    m, g = weighted(8)
    cfg = SolverConfig(alpha=1.0, max_iter=50)
    u1, T1, r1 = run(m, g, cfg)
    u2, T2, r2 = run(m, g, cfg)
    assert np.array_equal(u1.values, u2.values) and np.array_equal(T1.x, T2.x)
    assert r1.to_dict() == r2.to_dict()


def test_checkpoint_resume_is_exact(tmp_path):
    m, g = weighted(8)
    cfg = SolverConfig(alpha=1.0, max_iter=40)
    u_full, T_full, _ = run(m, g, cfg)
    *_, mid = run(m, g, SolverConfig(alpha=1.0, max_iter=15), return_state=True)
    save_checkpoint(tmp_path / "ck", mid)
    resumed = load_checkpoint(tmp_path / "ck")
    u, T, rep = run(m, g, SolverConfig(alpha=1.0, max_iter=25), state=resumed)
    assert np.array_equal(u.values, u_full.values)
    assert np.array_equal(T.x, T_full.x) and np.array_equal(T.y, T_full.y)


def test_max_iter_reports_and_raises():
    m, g = weighted(16)
    cfg = SolverConfig(alpha=1.0, max_iter=3)
    _, _, rep = run(m, g, cfg)
    assert rep.termination_reason == "max_iter" and rep.iterations_used == 3
    with pytest.raises(NonConvergence) as exc:
        run(m, g, cfg, raise_on_max_iter=True)
    assert exc.value.u is not None and exc.value.report.iterations_used == 3


def test_report_round_trip():
    m, g = weighted(8)
    rep = run(m, g, SolverConfig(max_iter=10))[2]
    again = SolverReport.from_dict(rep.to_dict())
    assert again.to_dict() == rep.to_dict()


def test_bad_inputs():
    grid = Grid.unit_square(6)
    with pytest.raises(CompatibilityError):
        run(Metric.constant(grid), BoundaryTrace.from_edges(grid, left=1.0))
    with pytest.raises(ZeroDataError):
        run(Metric.constant(grid), BoundaryTrace(grid, np.zeros(grid.n_boundary)))
    with pytest.raises(ValueError):
        run(Metric.constant(Grid.unit_square(5)), square_flow(grid))
    with pytest.raises(ValueError):
        SolverConfig(alpha=0)
    with pytest.raises(ValueError):
        SolverConfig(stop_tol=2)
