import dataclasses

import numpy as np
import pytest

from inexact_ipm.generators import planted_lp
from inexact_ipm.ipm import (IpmParams, IpmStatus, check_convergence, choose_eta,
                             initial_point, ipm_solve, ipm_step, step_lengths)
from inexact_ipm.kkt import Directions, Iterate, compute_residuals, inexactness_ratio
from inexact_ipm.ldl import FactorParams
from inexact_ipm.mps import StandardFormLP
from inexact_ipm.oracles import lp_vertex_oracle
from inexact_ipm.sparse import from_triplets

EXACT_FP = FactorParams(kappa=1e12, tau_L=0.0, tau_S=0.0, max_levels=100, final_dense_threshold=1)
EXACT = IpmParams(eta_max=1e-10, eta_min=1e-10, factor_params=EXACT_FP)
MULTILEVEL = IpmParams(factor_params=FactorParams(final_dense_threshold=8))


def toy_lp():
    A = from_triplets(nrows=1, ncols=2, rows=[0, 0], cols=[0, 1], values=[1.0, 1.0])
    return StandardFormLP(A, [1.0], [2.0, 1.0])


def audited_run(lp, params):
    steps = []
    sol = ipm_solve(lp, params, callback=steps.append)
    return sol, steps


def test_params_validation():
    with pytest.raises(ValueError):
        IpmParams(sigma=1.0)
    with pytest.raises(ValueError):
        IpmParams(eta_min=0.2, eta_max=0.1)
    with pytest.raises(ValueError):
        IpmParams(tol_p=0.0)


def test_initial_point():
    it = initial_point(toy_lp())
    np.testing.assert_array_equal(it.x, [2.0, 2.0])
    np.testing.assert_array_equal(it.z, [2.0, 2.0])
    np.testing.assert_array_equal(it.y, [0.0])
    zero = StandardFormLP(toy_lp().A, [0.0], [0.0, 0.0])
    np.testing.assert_array_equal(initial_point(zero).x, [1.0, 1.0])


def test_initial_point_interior(rng):
    lp, _ = planted_lp(5, 9, rng)
    assert initial_point(lp).is_interior()


def test_step_lengths():
    it = Iterate([1.0, 1.0], [0.0], [1.0, 1.0])
    d = Directions(np.zeros(1), np.array([-2.0, 1.0]), np.array([1.0, 1.0]))
    assert step_lengths(it, d, 0.9) == (pytest.approx(0.45), 1.0)
    it = Iterate([1.0], [], [1.0])
    d = Directions(np.zeros(0), np.array([-1.0]), np.array([0.0]))
    ap, _ = step_lengths(it, d, 0.99)
    assert ap == pytest.approx(0.99) and it.x[0] + ap * d.d_x[0] > 0


def test_choose_eta():
    p = IpmParams()
    assert choose_eta(100.0, 50.0, 50.0, p) == 0.1
    assert choose_eta(1e-9, 0.0, 0.0, p) == 1e-6
    assert choose_eta(0.05, 0.0, 0.0, p) == pytest.approx(0.05)


def test_check_convergence():
    lp = toy_lp()
    p = IpmParams()
    assert check_convergence(lp, Iterate([0.0, 1.0], [1.0], [1.0, 0.0]), p)
    assert not check_convergence(lp, initial_point(lp), p)
    near = Iterate([1e-9, 1.0 - 1e-9], [1.0], [1.0, 0.0])
    assert near.gap == pytest.approx(1e-9)
    assert check_convergence(lp, near, p)


def test_exact_step_residual_linearity():
    lp = toy_lp()
    it = initial_point(lp)
    rp = np.linalg.norm(compute_residuals(lp, it).r_p)
    new, log, _ = ipm_step(lp, it, EXACT)
    rp_new = np.linalg.norm(compute_residuals(lp, new).r_p)
    assert abs(rp_new - (1 - log.alpha_p) * rp) <= 1e-10 * rp


def test_toy_solve():
    sol = ipm_solve(toy_lp())
    assert sol.status is IpmStatus.OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-7)
    np.testing.assert_allclose(sol.x, [0.0, 1.0], atol=1e-6)


def test_empty_problem():
    A = from_triplets(nrows=0, ncols=0, rows=[], cols=[], values=[])
    sol = ipm_solve(StandardFormLP(A, np.zeros(0), np.zeros(0), offset=4.5))
    assert sol.status is IpmStatus.OPTIMAL and sol.objective == 4.5 and not sol.logs


def test_already_optimal_is_noop():
    lp = toy_lp()
    steps = []
    p = dataclasses.replace(IpmParams(), max_iters=0)
    sol = ipm_solve(lp, p, callback=steps.append)
    assert sol.status is IpmStatus.MAX_ITERS and not steps


def test_max_iters_status(rng):
    lp, _ = planted_lp(5, 10, rng)
    sol = ipm_solve(lp, dataclasses.replace(IpmParams(), max_iters=2))
    assert sol.status is IpmStatus.MAX_ITERS and len(sol.logs) == 2 and sol.message


def test_planted_20x40(rng):
    lp, (xs, _, _) = planted_lp(20, 40, rng)
    sol = ipm_solve(lp)
    assert sol.status is IpmStatus.OPTIMAL
    assert sol.x @ sol.z <= 1e-8 * (1 + abs(lp.c @ sol.x))
    assert sol.objective == pytest.approx(lp.c @ xs, rel=1e-6)


def test_planted_50x100_iteration_cap(rng):
    lp, _ = planted_lp(50, 100, rng)
    sol = ipm_solve(lp)
    assert sol.status is IpmStatus.OPTIMAL and len(sol.logs) <= 60


def test_small_matches_vertex_oracle(rng):
    for _ in range(3):
        lp, _ = planted_lp(4, 10, rng)
        obj, _ = lp_vertex_oracle(lp.A.to_dense(), lp.b, lp.c)
        assert ipm_solve(lp, MULTILEVEL).objective == pytest.approx(obj, rel=1e-6)


@pytest.mark.parametrize("params", [IpmParams(), MULTILEVEL], ids=["dense", "multilevel"])
def test_step_invariants(rng, params):
    lp, _ = planted_lp(15, 35, rng)
    sol, steps = audited_run(lp, params)
    assert sol.status is IpmStatus.OPTIMAL
    for info in steps:
        new = info.new_iterate
        assert new.is_interior()
        u = np.concatenate([info.directions.d_y, -info.directions.d_x])
        assert inexactness_ratio(info.kkt, info.rhs, u) <= info.log.eta
        d, it, res = info.directions, info.iterate, info.residuals
        row = it.z * d.d_x + it.x * d.d_z + res.r_c
        assert np.linalg.norm(row) <= 1e-12 * (np.linalg.norm(it.z * d.d_x)
                                               + np.linalg.norm(res.r_c))
    gaps = [log.gap for log in sol.logs]
    for k in range(len(gaps) - 5):
        assert gaps[k + 5] <= 0.999 * gaps[k]


def test_exact_solves_contract_infeasibility(rng):
    lp, _ = planted_lp(10, 25, rng)
    sol, steps = audited_run(lp, EXACT)
    assert sol.status is IpmStatus.OPTIMAL
    A = lp.A.to_dense()
    for info in steps:
        it, m = info.iterate, lp.m
        alpha = info.log.alpha_p
        u = np.concatenate([info.directions.d_y, -info.directions.d_x])
        # first block of the KKT solve residual moves r_p off the linear path
        solve_err = np.linalg.norm((info.kkt.K.to_dense() @ u - info.rhs)[:m])
        rp = np.linalg.norm(info.residuals.r_p)
        floor = 1e-13 * (np.abs(A).sum() * np.abs(it.x).max() + np.abs(lp.b).sum())
        rp_new = np.linalg.norm(compute_residuals(lp, info.new_iterate).r_p)
        assert rp_new <= (1 - alpha) * rp + 1e-9 * rp + alpha * solve_err + floor


def test_logs_consistent(rng):
    lp, _ = planted_lp(8, 16, rng)
    sol = ipm_solve(lp, MULTILEVEL)
    assert [log.k for log in sol.logs] == list(range(len(sol.logs)))
    for log in sol.logs:
        assert log.sqmr_iters >= 1 and log.fill_ratio > 0 and log.t_factor >= 0
        assert set(log.as_dict()) >= {"k", "mu", "rp", "rd", "gap", "eta", "sqmr_iters",
                                      "resolves", "fill_ratio", "t_factor", "t_solve"}


def test_free_variable_split_is_handled(data_dir):
    from inexact_ipm.mps import read_mps, to_standard_form
    lp, _ = to_standard_form(read_mps(data_dir / "fx_fr_mi.mps"))
    sol = ipm_solve(lp)
    assert sol.status is IpmStatus.OPTIMAL
    assert any(log.precond_shift > 0 for log in sol.logs)
