import itertools

import numpy as np
import pytest

from lassolab import oracle
from lassolab.oracle import (
    BudgetExceeded,
    OracleBudget,
    exact_lasso_small,
    exact_ric,
    falsify_rnsp,
    mc_ric_lower,
)
from lassolab.problem import SensingMatrix, gen_gaussian_matrix, gen_sparse_signal, lambda_inf, make_observation
from lassolab.solver import LassoConfig, objective, solve_lasso


def _orthonormal(m, N, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((m, N)))
    return SensingMatrix(q)


def test_budget_limits():
    OracleBudget()
    OracleBudget(max_cols=14)
    with pytest.raises(BudgetExceeded, match="candidate"):
        OracleBudget(max_cols=15)
    with pytest.raises(BudgetExceeded):
        OracleBudget(max_cols=20)
    with pytest.raises(ValueError):
        OracleBudget(max_order=0)


def test_exact_lasso_scalar():
    x = exact_lasso_small(SensingMatrix(np.array([[1.0]])), np.array([3.0]), 1.0)
    assert x == pytest.approx([2.0])


def test_exact_lasso_zero_above_threshold():
    A = gen_gaussian_matrix(5, 8, 4)
    y = np.random.default_rng(4).standard_normal(5)
    x = exact_lasso_small(A, y, 1.01 * lambda_inf(A, y))
    assert not x.any()


def test_exact_lasso_matches_brute_objective():
    # minimum over a fine random search never beats the oracle
    A = gen_gaussian_matrix(4, 6, 1)
    y = np.random.default_rng(1).standard_normal(4)
    lam = 0.2 * lambda_inf(A, y)
    x = exact_lasso_small(A, y, lam)
    f = objective(A, y, lam, x)
    rng = np.random.default_rng(2)
    for _ in range(2000):
        z = x + 0.05 * rng.standard_normal(6) * (rng.random(6) < 0.5)
        assert objective(A, y, lam, z) >= f - 1e-12


def test_exact_lasso_agrees_with_solver():
    for seed in range(5):
        A = gen_gaussian_matrix(6, 10, seed)
        t = gen_sparse_signal(10, 2, seed)
        obs = make_observation(A, t, 1e-2, seed)
        lam = 0.3 * lambda_inf(A, obs.y)
        ref = exact_lasso_small(A, obs.y, lam)
        sol = solve_lasso(A, obs.y, LassoConfig(lam))
        assert abs(objective(A, obs.y, lam, ref) - sol.objective) <= 1e-9


def test_exact_lasso_repeated_column():
    # a duplicated column makes many supports singular; they are skipped
    a = gen_gaussian_matrix(4, 5, 3).entries.copy()
    a[:, 4] = a[:, 0]
    A = SensingMatrix(a)
    y = np.random.default_rng(0).standard_normal(4)
    lam = 0.3 * lambda_inf(A, y)
    x = exact_lasso_small(A, y, lam)
    sol = solve_lasso(A, y, LassoConfig(lam))
    assert abs(objective(A, y, lam, x) - sol.objective) <= 1e-9


def test_exact_lasso_column_budget():
    A = gen_gaussian_matrix(4, 12, 0)
    with pytest.raises(BudgetExceeded):
        exact_lasso_small(A, np.ones(4), 0.1, OracleBudget(max_cols=10))


def test_exact_ric_examples():
    Q = _orthonormal(6, 4, 0)
    for k in range(1, 5):
        assert exact_ric(Q, k) == pytest.approx(0.0, abs=1e-12)
    a = gen_gaussian_matrix(5, 6, 1).entries.copy()
    a[:, 3] = a[:, 1]
    assert exact_ric(SensingMatrix(a), 2) == pytest.approx(1.0, abs=1e-12)
    A = gen_gaussian_matrix(8, 16, 2)
    assert exact_ric(A, 2) >= mc_ric_lower(A, 2, 50, 0)
    assert exact_ric(A, 1) == pytest.approx(0.0, abs=1e-12)
    assert exact_ric(A, 0) == 0.0


def test_exact_ric_matches_loop():
    A = gen_gaussian_matrix(5, 7, 9)
    best = 0.0
    for S in itertools.combinations(range(7), 3):
        sv = np.linalg.svd(A.entries[:, S], compute_uv=False)
        best = max(best, 1 - sv[-1] ** 2, sv[0] ** 2 - 1)
    assert exact_ric(A, 3) == pytest.approx(best, rel=1e-12)


def test_exact_ric_monotone_in_order():
    A = gen_gaussian_matrix(7, 10, 4)
    d = [exact_ric(A, k) for k in range(1, 7)]
    assert all(b >= a - 1e-14 for a, b in zip(d, d[1:]))


def test_exact_ric_budget():
    A = gen_gaussian_matrix(8, 30, 0)
    with pytest.raises(BudgetExceeded, match="supports"):
        exact_ric(A, 4, OracleBudget(max_order=3))
    with pytest.raises(BudgetExceeded, match=r"7\.54e\+10 supports"):  # C(60, 10)
        exact_ric(gen_gaussian_matrix(20, 60, 0), 10, OracleBudget(max_order=12))
    with pytest.raises(ValueError):
        exact_ric(A, 31)


def test_mc_ric_lower_properties():
    Q = _orthonormal(6, 5, 3)
    assert mc_ric_lower(Q, 3, 20, 0) == pytest.approx(0.0, abs=1e-12)
    A = gen_gaussian_matrix(8, 14, 5)
    est = [mc_ric_lower(A, 3, t, 7) for t in (1, 5, 20, 100, 400)]
    assert all(b >= a for a, b in zip(est, est[1:]))
    assert est[-1] <= exact_ric(A, 3) + 1e-12
    assert mc_ric_lower(A, 3, 100, 7) == est[3]


def test_falsify_rnsp_examples():
    Q = _orthonormal(8, 8, 1)
    k = 3
    res = falsify_rnsp(Q, k, 0.0, np.sqrt(k), 400, 0)
    assert res.violations == 0 and res.worst_margin >= -1e-12 and res.evaluations == 800

    a = gen_gaussian_matrix(2, 3, 0).entries.copy()
    a[:, 2] = a[:, 0]
    res = falsify_rnsp(SensingMatrix(a), 1, 0.5, 10.0, 40, 0)
    assert res.violations > 0 and res.worst_margin < 0

    # generous constants on a well-conditioned matrix: nothing found
    A = gen_gaussian_matrix(30, 40, 2)
    assert falsify_rnsp(A, 1, 0.9, 50.0, 200, 1).violations == 0


def test_agreement_suite_small():
    rows = oracle.oracle_agreement(instances=10, seed=100)
    assert len(rows) == 30
    assert all(r.passed for r in rows)
    assert {r.lam_rel for r in rows} == set(oracle.AGREEMENT_LAMBDAS)
    assert all(r.m <= 8 and r.N <= 10 for r in rows)


def test_agreement_suite_detects_loose_tolerance():
    # seed 118 has two nearly collinear columns, where a loose stop leaves visible error
    rows = oracle.oracle_agreement(instances=10, seed=110, config=LassoConfig(1.0, gap_tol=1e-2))
    assert max(r.sup_gap for r in rows) > 1e-6
    assert any(not r.passed for r in rows)


def test_theorem_suite_small():
    rows, rejected = oracle.theorem_suite(instances=10, seed=500)
    assert rows and rejected >= 0
    assert all(r.theta <= 1 for r in rows)
    assert all(r.delta_2k < 4 / np.sqrt(41) for r in rows)
    bad = [r for r in rows if not r.passed]
    assert not bad, bad[:3]
