"""Property tests for the invariants of each module."""
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lassolab import bounds, experiments
from lassolab.oracle import exact_lasso_small, exact_ric, mc_ric_lower
from lassolab.problem import best_k, gen_gaussian_matrix, gen_sparse_signal, lambda_inf, make_observation, sigma_k
from lassolab.solver import LassoConfig, duality_gap, objective, soft_threshold, solve_lasso

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(1, 30), elements=finite)
seeds = st.integers(0, 2**32 - 1)
slow = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@given(vectors)
def test_sigma_k_nonincreasing(x):
    vals = [sigma_k(x, j) for j in range(x.size + 1)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0
    assert math.isclose(vals[0], np.abs(x).sum(), rel_tol=1e-12, abs_tol=1e-300)


@given(vectors, st.data())
def test_best_k_error_is_sigma_k(x, data):
    k = data.draw(st.integers(0, x.size))
    xk = best_k(x, k)
    assert np.count_nonzero(xk) <= k
    assert math.isclose(np.abs(x - xk).sum(), sigma_k(x, k), rel_tol=1e-12, abs_tol=1e-12)


def test_best_k_error_is_sigma_k_bulk():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        x = rng.standard_normal(rng.integers(1, 40)) * (rng.random() < 0.5 or rng.integers(1, 4))
        k = int(rng.integers(0, x.size + 1))
        assert math.isclose(np.abs(x - best_k(x, k)).sum(), sigma_k(x, k), rel_tol=1e-12, abs_tol=1e-12)


@given(vectors, st.floats(0, 100))
def test_soft_threshold_exact_zeros_and_prox(v, t):
    out = soft_threshold(v, t)
    assert np.all(out[np.abs(v) <= t] == 0.0)
    assert np.all(np.abs(out) <= np.abs(v))
    # the prox map is 1-Lipschitz and shrinks by exactly t outside the dead zone
    live = np.abs(v) > t
    np.testing.assert_allclose(np.abs(v[live]) - np.abs(out[live]), t, atol=1e-9)


@given(seeds, st.integers(1, 12), st.floats(0, 10))
@settings(deadline=None)
def test_observation_noise_norm(seed, m, eps):
    N = m + 5
    A = gen_gaussian_matrix(m, N, seed)
    t = gen_sparse_signal(N, min(3, m), seed)
    obs = make_observation(A, t, eps, seed)
    assert math.isclose(np.linalg.norm(obs.y - A.entries @ t.signal), eps, rel_tol=1e-10, abs_tol=1e-14)
    assert A.column_norm_defect() <= 1e-12
    again = make_observation(gen_gaussian_matrix(m, N, seed), gen_sparse_signal(N, min(3, m), seed), eps, seed)
    assert np.array_equal(obs.y, again.y)


@given(st.floats(1e-6, bounds.DELTA_MAX - 1e-6), st.floats(1e-6, bounds.DELTA_MAX - 1e-6))
def test_rnsp_strictly_increasing(a, b):
    lo, hi = sorted((a, b))
    assume(hi - lo > 1e-9)  # closer values are separated only by rounding
    c1, c2 = bounds.rnsp_from_ric(lo), bounds.rnsp_from_ric(hi)
    assert c1.rho < c2.rho and c1.beta < c2.beta
    assert c1.beta > 1 and c1.rho > 0


@given(st.floats(0, 0.95), st.floats(1, 5), st.floats(0, 1), st.integers(1, 500))
def test_sparsity_limit_exceeds_chi_sq_k(delta, beta, theta, k):
    t, chi = bounds.sparsity_bound(delta, beta, theta, k)
    assert t > chi * chi * k * (1 - 1e-12)
    assert t == math.floor((1 + delta) * (beta + theta) ** 2 * k) + 1


@given(vectors)
def test_entropy_at_most_support(x):
    ent = bounds.entropy(x)
    s = np.count_nonzero(x)
    assert ent <= s * (1 + 1e-12)
    if s:
        assert ent >= 1 - 1e-12


@given(seeds, st.sampled_from([0.1, 0.3, 0.7]))
@slow
def test_solver_matches_oracle(seed, frac):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    N = int(rng.integers(m + 1, 11))
    A = gen_gaussian_matrix(m, N, seed)
    obs = make_observation(A, gen_sparse_signal(N, max(1, m // 3), seed), 1e-2, seed)
    lam = frac * lambda_inf(A, obs.y)
    ref = exact_lasso_small(A, obs.y, lam)
    sol = solve_lasso(A, obs.y, LassoConfig(lam))
    assert sol.converged
    assert abs(sol.objective - objective(A, obs.y, lam, ref)) <= 1e-9
    assert np.max(np.abs(sol.x - ref)) <= 1e-6


@given(seeds, arrays(np.float64, 8, elements=st.floats(-2, 2)))
@slow
def test_gap_soundness(seed, x):
    A = gen_gaussian_matrix(5, 8, seed)
    obs = make_observation(A, gen_sparse_signal(8, 2, seed), 1e-1, seed)
    lam = 0.3 * lambda_inf(A, obs.y)
    f_opt = objective(A, obs.y, lam, exact_lasso_small(A, obs.y, lam))
    gap = duality_gap(A, obs.y, lam, x)
    assert gap >= objective(A, obs.y, lam, x) - f_opt - 1e-10
    assert gap >= -1e-12


@given(seeds, st.integers(1, 4), st.integers(1, 60))
@slow
def test_mc_ric_below_exact(seed, k, trials):
    A = gen_gaussian_matrix(6, 10, seed)
    assert mc_ric_lower(A, k, trials, seed) <= exact_ric(A, k) + 1e-12


@given(
    st.integers(1, 50),
    st.integers(0, 100),
    st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=4),
    st.sampled_from(["log", "linear"]),
    st.integers(2, 80),
    st.floats(1e-6, 0.99),
    st.booleans(),
)
def test_config_round_trip(k, extra, noise, mode, count, floor, warm):
    cfg = experiments.SweepConfig(
        m=k + extra, N=2 * (k + extra), k=k, noise_levels=tuple(noise), trials=3,
        lambda_grid=experiments.LambdaGrid(mode=mode, count=count, min_factor=floor), warm_start=warm,
    )
    assert experiments.parse_config(experiments.format_config(cfg)) == cfg
