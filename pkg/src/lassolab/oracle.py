"""Brute-force references for tiny problems.

``exact_lasso_small`` enumerates every support and sign pattern and keeps the
KKT-admissible candidate of least objective; ``exact_ric`` enumerates every
column subset. Both are vectorized over subsets but remain exponential, so an
:class:`OracleBudget` caps their size.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields

import numpy as np

from . import bounds
from .problem import (
    SensingMatrix,
    best_k,
    gen_gaussian_matrix,
    gen_sparse_signal,
    lambda_inf,
    make_observation,
)
from .solver import LassoConfig, check_extremal_pair, objective, solve_lasso

# ceiling on candidate sign patterns / enumerated supports
MAX_CANDIDATES = 10**7
_CHUNK = 20_000


class BudgetExceeded(ValueError):
    """Raised when an enumeration would exceed its :class:`OracleBudget`."""


@dataclass(frozen=True)
class OracleBudget:
    max_cols: int = 14
    max_order: int = 6
    mc_trials: int = 1000

    def __post_init__(self):
        if min(self.max_cols, self.max_order, self.mc_trials) < 1:
            raise ValueError("budget fields must be positive")
        if 3**self.max_cols >= MAX_CANDIDATES:
            raise BudgetExceeded(
                f"max_cols={self.max_cols} means 3^{self.max_cols} = {3**self.max_cols:.3g} "
                f"candidate sign patterns (limit {MAX_CANDIDATES:.0e})"
            )


def _entries(A) -> np.ndarray:
    return A.entries if isinstance(A, SensingMatrix) else np.asarray(A, dtype=float)


def _sign_patterns(s: int) -> np.ndarray:
    if s == 0:
        return np.zeros((1, 0))
    return np.array(list(itertools.product((-1.0, 1.0), repeat=s)))


def exact_lasso_small(A, y, lam: float, budget: OracleBudget | None = None) -> np.ndarray:
    """Global LASSO minimizer by support and sign enumeration.

    For every support ``S`` and sign vector ``sg`` the candidate solves
    ``A_S^T A_S x_S = A_S^T y - lam sg``. It is admissible when its signs
    match ``sg`` (entries within 1e-12 of zero match either sign) and
    ``||A_{S^c}^T (y - A_S x_S)||_inf <= lam (1 + 1e-12)``; admissible points
    satisfy the optimality conditions, so the cheapest one is a global
    minimizer. Singular supports are skipped.
    """
    budget = budget or OracleBudget()
    a = _entries(A)
    y = np.asarray(y, dtype=float)
    m, N = a.shape
    if N > budget.max_cols:
        raise BudgetExceeded(f"{N} columns exceed max_cols={budget.max_cols}")
    slack = lam * (1 + 1e-12)

    best_x, best_f = None, np.inf
    if np.max(np.abs(a.T @ y), initial=0.0) <= slack:
        best_x, best_f = np.zeros(N), 0.5 * float(y @ y)

    for s in range(1, min(m, N) + 1):
        subsets = np.array(list(itertools.combinations(range(N), s)))
        aS = np.transpose(a[:, subsets], (1, 0, 2))  # (C, m, s)
        gram = np.einsum("cmi,cmj->cij", aS, aS)
        ev = np.linalg.eigvalsh(gram)
        ok = ev[:, 0] > 1e-12 * np.maximum(ev[:, -1], 1.0)
        if not ok.any():
            continue
        subsets, aS, gram = subsets[ok], aS[ok], gram[ok]
        signs = _sign_patterns(s)  # (P, s)
        rhs = np.einsum("cmi,m->ci", aS, y)[:, :, None] - lam * signs.T[None]
        xs = np.linalg.solve(gram, rhs)  # (C, s, P)
        scale = np.maximum(1.0, np.max(np.abs(xs), axis=1, keepdims=True))
        match = (np.sign(xs) == signs.T[None]) | (np.abs(xs) <= 1e-12 * scale)
        consistent = match.all(axis=1)  # (C, P)
        if not consistent.any():
            continue
        c_idx, p_idx = np.nonzero(consistent)
        cand = xs[c_idx, :, p_idx]  # (n, s)
        resid = y[None] - np.einsum("nmi,ni->nm", aS[c_idx], cand)
        corr = resid @ a  # (n, N)
        mask = np.ones_like(corr, dtype=bool)
        np.put_along_axis(mask, subsets[c_idx], False, axis=1)
        viol = np.where(mask, np.abs(corr), 0.0).max(axis=1)
        adm = viol <= slack
        if not adm.any():
            continue
        f = lam * np.abs(cand).sum(axis=1) + 0.5 * np.einsum("nm,nm->n", resid, resid)
        f = np.where(adm, f, np.inf)
        j = int(np.argmin(f))
        if f[j] < best_f:
            best_f = float(f[j])
            best_x = np.zeros(N)
            best_x[subsets[c_idx[j]]] = cand[j]

    if best_x is None:
        raise RuntimeError("no KKT-admissible candidate found; the enumeration is broken")
    return best_x


def _isometry_defect(a: np.ndarray, subsets: np.ndarray) -> float:
    aS = np.transpose(a[:, subsets], (1, 0, 2))
    ev = np.linalg.eigvalsh(np.einsum("cmi,cmj->cij", aS, aS))
    return float(max(np.max(1.0 - ev[:, 0]), np.max(ev[:, -1] - 1.0)))


def exact_ric(A, k: int, budget: OracleBudget | None = None) -> float:
    """Restricted isometry constant of order ``k`` by enumerating all supports."""
    budget = budget or OracleBudget()
    a = _entries(A)
    N = a.shape[1]
    if k < 0 or k > N:
        raise ValueError(f"order must lie in [0, {N}], got {k}")
    if k == 0:
        return 0.0
    count = math.comb(N, k)
    if k > budget.max_order or count > MAX_CANDIDATES:
        raise BudgetExceeded(
            f"exact RIC of order {k} on {N} columns needs {count:.3g} supports "
            f"(max_order={budget.max_order}, limit {MAX_CANDIDATES:.0e})"
        )
    worst = 0.0
    it = itertools.combinations(range(N), k)
    while True:
        chunk = list(itertools.islice(it, _CHUNK))
        if not chunk:
            break
        worst = max(worst, _isometry_defect(a, np.array(chunk)))
    return worst


def mc_ric_lower(A, k: int, trials: int, seed: int) -> float:
    """Lower estimate of ``delta_k`` from ``trials`` random supports.

    Supports are drawn row by row from one stream, so a run with more trials
    sees a superset of the supports of a shorter run with the same seed.
    """
    a = _entries(A)
    N = a.shape[1]
    if k < 1 or k > N:
        raise ValueError(f"order must lie in [1, {N}], got {k}")
    rng = np.random.default_rng([int(seed), 0x52])
    worst = 0.0
    done = 0
    while done < trials:
        n = min(_CHUNK if N < 256 else 500, trials - done)
        keys = rng.random((n, N))
        subsets = np.argpartition(keys, k - 1, axis=1)[:, :k] if k < N else np.argsort(keys, axis=1)
        worst = max(worst, _isometry_defect(a, subsets))
        done += n
    return worst


@dataclass(frozen=True)
class RnspFalsification:
    violations: int
    worst_margin: float
    evaluations: int


def falsify_rnsp(A, k: int, rho: float, tau: float, samples: int, seed: int) -> RnspFalsification:
    """Search for ``x, K`` with ``||x_K||_1 > rho ||x_{K^c}||_1 + tau ||A x||_2``.

    Samples cycle through dense Gaussian vectors, k-sparse vectors, sparse plus
    small dense perturbations, and (when ``A`` has a null space) null-space
    projections. Every sample is scored on a random support of size ``k`` and
    on the top-k support of ``|x|``, the worst case for that ``x``. Vectors are
    scaled to unit l1 norm, so margins are comparable. Finding no violation
    proves nothing.
    """
    a = _entries(A)
    m, N = a.shape
    rng = np.random.default_rng([int(seed), 0x46])
    null_basis = None
    if N > m:
        _, sv, vt = np.linalg.svd(a)
        rank = int(np.sum(sv > 1e-12 * max(sv[0], 1.0)))
        null_basis = vt[rank:]
    violations = 0
    worst = np.inf
    evaluations = 0
    for i in range(samples):
        kind = i % 4
        if kind == 0:
            x = rng.standard_normal(N)
        elif kind in (1, 2):
            x = np.zeros(N)
            x[rng.choice(N, size=k, replace=False)] = rng.standard_normal(k)
            if kind == 2:
                x += 0.1 * rng.standard_normal(N) / math.sqrt(N)
        elif null_basis is not None and null_basis.shape[0]:
            x = rng.standard_normal(null_basis.shape[0]) @ null_basis
        else:
            x = rng.standard_normal(N)
        l1 = np.abs(x).sum()
        if l1 == 0:
            continue
        x = x / l1
        ax = float(np.linalg.norm(a @ x))
        for K in (rng.choice(N, size=k, replace=False), np.argsort(-np.abs(x), kind="stable")[:k]):
            inside = np.abs(x[K]).sum()
            margin = rho * (1.0 - inside) + tau * ax - inside
            evaluations += 1
            worst = min(worst, margin)
            if margin < -1e-12:
                violations += 1
    return RnspFalsification(violations, float(worst), evaluations)


# --------------------------------------------------------------------------- suites


@dataclass
class AgreementRow:
    seed: int
    m: int
    N: int
    k: int
    lam: float
    lam_rel: float
    objective_gap: float
    sup_gap: float
    iterations: int
    converged: bool
    certified: bool
    passed: bool


@dataclass
class TheoremRow:
    seed: int
    m: int
    N: int
    k: int
    noise: float
    lam: float
    lam_rel: float
    theta: float
    s_lambda: int
    delta_2k: float
    delta_s: float
    delta_e: float
    certified: bool
    residual_upper_ok: bool
    residual_lower_ok: bool
    sparsity_ok: bool
    entropy_ok: bool
    l2_lower_ok: bool
    l2_upper_ok: bool
    l1_ok: bool
    l1_ceiling_ok: bool

    @property
    def passed(self) -> bool:
        return all(getattr(self, f.name) for f in fields(self) if f.name.endswith("_ok")) and self.certified


def row_columns(cls) -> list[str]:
    return [f.name for f in fields(cls)]


AGREEMENT_LAMBDAS = (0.1, 0.3, 0.7)


def oracle_agreement(
    instances: int = 200,
    seed: int = 0,
    budget: OracleBudget | None = None,
    config: LassoConfig | None = None,
    max_rows: int = 8,
    max_cols: int = 10,
) -> list[AgreementRow]:
    """Compare ``solve_lasso`` with ``exact_lasso_small`` on random tiny instances.

    Each instance ``i`` uses seed ``seed + i`` and three weights
    ``lam in {0.1, 0.3, 0.7} * lambda_inf``; a row passes when the objective
    gap is at most 1e-9 and the sup-norm gap at most 1e-6.
    """
    budget = budget or OracleBudget()
    max_cols = min(max_cols, budget.max_cols)
    rows = []
    for i in range(instances):
        s = seed + i
        shape_rng = np.random.default_rng([s, 0x5A])
        m = int(shape_rng.integers(2, max_rows + 1))
        N = int(shape_rng.integers(m + 1, max(m + 1, max_cols) + 1))
        k = int(shape_rng.integers(1, max(1, m // 2) + 1))
        A = gen_gaussian_matrix(m, N, s)
        truth = gen_sparse_signal(N, k, s)
        obs = make_observation(A, truth, 1e-2, s)
        li = lambda_inf(A, obs.y)
        for f in AGREEMENT_LAMBDAS:
            lam = f * li
            cfg = LassoConfig(lam) if config is None else LassoConfig(
                lam,
                max_iter=config.max_iter,
                gap_tol=config.gap_tol,
                kkt_tol=config.kkt_tol,
                support_rel_tol=config.support_rel_tol,
                check_every=config.check_every,
                polish=config.polish,
            )
            sol = solve_lasso(A, obs.y, cfg)
            ref = exact_lasso_small(A, obs.y, lam, budget)
            ogap = abs(sol.objective - objective(A, obs.y, lam, ref))
            sgap = float(np.max(np.abs(sol.x - ref)))
            cert = check_extremal_pair(sol, 1e-5).passed
            rows.append(
                AgreementRow(s, m, N, k, lam, f, ogap, sgap, sol.iterations, sol.converged, cert,
                             ogap <= 1e-9 and sgap <= 1e-6 and sol.converged and cert)
            )
    return rows


THEOREM_SHAPES = ((24, 28, 1), (32, 36, 1))
THEOREM_NOISE = (1e-2, 5e-2, 2e-1)
THEOREM_LAMBDAS = (0.9, 0.7, 0.5, 0.3)


def _ric_or_none(a, order, budget, cache):
    if order not in cache:
        try:
            cache[order] = exact_ric(a, order, budget)
        except BudgetExceeded:
            cache[order] = None
    return cache[order]


def theorem_suite(
    instances: int = 200,
    seed: int = 0,
    budget: OracleBudget | None = None,
    shapes=THEOREM_SHAPES,
    noise_levels=THEOREM_NOISE,
    lambdas=THEOREM_LAMBDAS,
    max_attempts: int | None = None,
) -> tuple[list[TheoremRow], int]:
    """Check every sparsity, residual and error bound with exact RICs.

    Instances whose exact ``delta_2k`` is not below ``4/sqrt(41)`` (where the
    RNSP constants stop being valid) are redrawn, as are instances where no
    weight has ``theta <= 1``; the number of redraws is returned alongside
    the rows. Only weights with ``theta <= 1`` are used.
    Each bound is evaluated with the exact RIC of the order its proof needs:
    ``delta_2k`` for the RNSP constants, ``delta_s`` (order ``s_lambda``) for
    the support-restricted isometry, ``delta_e`` (order of the error support)
    for the l2 error; where one constant must cover several orders the
    maximum is used. Bounds whose order exceeds the budget count as failures.
    """
    budget = budget or OracleBudget()
    max_attempts = max_attempts or 20 * instances
    rows: list[TheoremRow] = []
    accepted = rejected = 0
    attempt = 0
    rtol = 1e-9
    while accepted < instances:
        if attempt >= max_attempts:
            raise RuntimeError(f"only {accepted} of {instances} instances satisfied the RNSP hypothesis with theta <= 1")
        s_seed = seed + attempt
        m, N, k = shapes[attempt % len(shapes)]
        noise = noise_levels[attempt % len(noise_levels)]
        attempt += 1
        A = gen_gaussian_matrix(m, N, s_seed)
        cache: dict = {}
        d2k = _ric_or_none(A.entries, 2 * k, budget, cache)
        if d2k is None or d2k >= bounds.DELTA_RNSP:
            rejected += 1
            continue
        truth = gen_sparse_signal(N, k, s_seed)
        obs = make_observation(A, truth, noise, s_seed)
        mu = obs.mu
        li = lambda_inf(A, obs.y)
        weights = [(f, f * li, bounds.theta(mu, f * li, k)) for f in lambdas]
        weights = [w for w in weights if w[2] <= 1]
        if not weights:
            rejected += 1
            continue
        accepted += 1
        const = bounds.rnsp_from_ric(max(d2k, 1e-300))
        target = best_k(truth.signal, k)
        target_l1 = float(np.abs(target).sum())
        for f, lam, th in weights:
            sol = solve_lasso(A, obs.y, LassoConfig(lam))
            cert = sol.converged and check_extremal_pair(sol, 1e-5).passed
            x, s = sol.x, sol.s_lambda
            ratio = sol.rescaled_residual
            rnorm = ratio * lam
            err = x - target
            e_order = int(np.count_nonzero(err))
            ds = _ric_or_none(A.entries, s, budget, cache)
            de = _ric_or_none(A.entries, e_order, budget, cache)

            upper_ok = ratio <= bounds.residual_upper(const.beta, th, k) * (1 + rtol)
            lower_ok = entropy_ok = sparsity_ok = False
            if ds is not None and ds < 1:
                lower_ok = ratio >= bounds.residual_lower(s, ds) * (1 - rtol)
                entropy_ok = ratio**2 >= bounds.entropy(x) / (1 + ds) * (1 - rtol)
            if ds is not None and max(d2k, ds) < bounds.DELTA_MAX:
                dsp = max(d2k, ds)
                t, _ = bounds.sparsity_bound(dsp, bounds.rnsp_from_ric(dsp).beta, th, k)
                sparsity_ok = s < t
            l2_lower_ok = l2_upper_ok = l1_ok = False
            l2 = float(np.linalg.norm(err))
            if ds is not None and de is not None:
                dlow = max(ds, de)
                if dlow < 1:
                    low, _ = bounds.l2_bounds(dlow, 0.0, 1.0, k, s, lam, mu)
                    l2_lower_ok = l2 >= low - rtol * max(1.0, abs(low))
                dup = max(d2k, de)
                if dup < 1 and dup < bounds.DELTA_MAX:
                    _, up = bounds.l2_bounds(0.0, dup, bounds.rnsp_from_ric(dup).beta, k, s, lam, mu)
                    l2_upper_ok = l2 <= up * (1 + rtol)
                d1 = max(d2k, ds, de)
                if d1 < 1 and d1 < bounds.DELTA_MAX:
                    gen, _ = bounds.l1_bounds(d1, bounds.rnsp_from_ric(d1).beta, th, k, lam, mu)
                    l1_ok = float(np.abs(err).sum()) <= gen * (1 + rtol)
            ceiling_ok = rnorm <= mu or sol.l1_norm <= target_l1 + 1e-10
            rows.append(
                TheoremRow(
                    s_seed, m, N, k, noise, lam, f, th, s, d2k,
                    np.nan if ds is None else ds, np.nan if de is None else de,
                    cert, upper_ok, lower_ok, sparsity_ok, entropy_ok,
                    l2_lower_ok, l2_upper_ok, l1_ok, ceiling_ok,
                )
            )
    return rows, rejected
