"""Closed-form sparsity and error bounds for LASSO minimizers under RIP/RNSP.

Notation: ``delta`` is a restricted isometry constant, ``(rho, beta)`` the
robust null space constants it induces (``tau = beta * sqrt(k)``), ``mu`` the
small scale ``sigma_k(x*) + ||eps||_2`` and ``theta = 2 mu / (lam sqrt(k))``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .problem import SensingMatrix

# beyond this RIC the denominator sqrt(1 - d^2) - d/4 is no longer positive
DELTA_MAX = 4 / math.sqrt(17)
# below this RIC the induced rho is < 1 (a genuine robust null space property)
DELTA_RNSP = 4 / math.sqrt(41)


@dataclass(frozen=True)
class RnspConstants:
    delta: float
    rho: float
    beta: float

    @property
    def is_rnsp(self) -> bool:
        return self.rho < 1

    def tau(self, k: int) -> float:
        return self.beta * math.sqrt(k)


def rnsp_from_ric(delta: float) -> RnspConstants:
    """RNSP constants ``(rho, beta)`` induced by the RIC ``delta``.

    Both are increasing in ``delta``; ``rho < 1`` only for ``delta < 4/sqrt(41)``.
    """
    if not 0 < delta < DELTA_MAX:
        raise ValueError(f"delta must lie in (0, 4/sqrt(17)) ~ (0, {DELTA_MAX:.4f}), got {delta}")
    denom = math.sqrt(1 - delta * delta) - delta / 4
    return RnspConstants(delta, delta / denom, math.sqrt(1 + delta) / denom)


def theta(mu: float, lam: float, k: int) -> float:
    """Regime parameter ``2 mu / (lam sqrt(k))``; the analysis assumes it is at most 1."""
    if not lam > 0 or k < 1:
        raise ValueError("need lam > 0 and k >= 1")
    return 2 * mu / (lam * math.sqrt(k))


def residual_upper(beta: float, theta: float, k: int) -> float:
    """Upper bound ``(beta + theta) sqrt(k)`` on ``||r||_2 / lam``."""
    return (beta + theta) * math.sqrt(k)


def residual_lower(s_lambda: int, delta: float) -> float:
    """Lower bound ``sqrt(s / (1 + delta))`` on ``||r||_2 / lam``."""
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    return math.sqrt(s_lambda / (1 + delta))


def sparsity_bound(delta: float, beta: float, theta: float, k: int) -> tuple[int, float]:
    """Support-size limit ``t`` with ``s_lambda < t``, and the threshold ``chi``.

    ``chi = sqrt(1 + delta) (beta + theta)`` and ``t = floor(chi^2 k) + 1``.
    """
    chi = math.sqrt(1 + delta) * (beta + theta)
    return math.floor((1 + delta) * (beta + theta) ** 2 * k) + 1, chi


def support_multiplier(chi: float) -> int:
    """``[chi^2] + 1``: the factor in the k-uniform form ``s_lambda < ([chi^2] + 1) k``."""
    return math.floor(chi * chi) + 1


def l2_bounds(
    delta: float,
    delta_prime: float,
    beta_prime: float,
    k: int,
    s_lambda: int,
    lam: float,
    mu: float,
) -> tuple[float, float]:
    """Two-sided bound on ``||x_lam - x*(k)||_2``.

    The lower value can be negative, in which case it carries no information;
    it is returned unclamped.
    """
    if not (0 <= delta < 1 and 0 <= delta_prime < 1):
        raise ValueError("RICs must lie in [0, 1)")
    lower = (math.sqrt(s_lambda) * lam / math.sqrt(1 + delta) - mu) / math.sqrt(1 + delta)
    upper = (beta_prime * math.sqrt(k) * lam + 3 * mu) / math.sqrt(1 - delta_prime)
    return lower, upper


def l1_bounds(delta: float, beta: float, theta: float, k: int, lam: float, mu: float) -> tuple[float, float]:
    """General and improved bounds on ``||x_lam - x*(k)||_1``.

    The improved form drops the ``mu^2 / lam`` terms and is meant for
    ``beta > 2``; it is a reference curve rather than a guarantee.
    """
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    c = math.sqrt((1 + delta) / (1 - delta))
    sk = math.sqrt(k)
    general = c * ((beta + 0.5) * sk * lam + 2 * mu) ** 2 / lam
    improved = c * ((beta + 0.25) ** 2 * k * lam + (4 * beta + 1) * sk * mu)
    return general, improved


def l1_bound_rnsp_route(
    rho: float,
    beta: float,
    theta: float,
    k: int,
    lam: float,
    residual_norm: float,
    mu: float,
) -> tuple[float, float]:
    """l1 error bound obtained directly from the RNSP inequality.

    Returns ``(at_residual, maximized)``: the bound evaluated at the given
    ``||r||_2`` and its maximum over all residual norms,
    ``(beta + 2 theta)^2 k lam / (1 - rho^2)``.
    """
    del mu  # enters only through theta
    if not rho < 1:
        raise ValueError(f"rho must be < 1 (RIC below 4/sqrt(41)), got {rho}")
    sk = math.sqrt(k)
    ratio = residual_norm / lam
    at_residual = (
        residual_norm * (2 * (beta + theta) * sk - (1 + rho) * ratio) + beta * theta * k * lam
    ) / (1 - rho)
    maximized = (beta + 2 * theta) ** 2 * k * lam / (1 - rho * rho)
    return at_residual, maximized


def entropy(x) -> float:
    """l1-entropy ``||x||_1^2 / ||x||_2^2`` (0 for the zero vector)."""
    x = np.abs(np.asarray(x, dtype=float))
    xmax = np.max(x, initial=0.0)
    if xmax == 0:
        return 0.0
    x = x / xmax  # scale invariant; avoids underflow in the squares
    return float(x.sum() ** 2 / (x @ x))


@dataclass(frozen=True)
class RearrangeCheck:
    lhs: float
    rhs: float
    holds: bool


def check_rearrange(A, tau: float, v, u) -> RearrangeCheck:
    """Test ``||v||_1 - ||u||_1 <= tau ||A (u - v)||_2`` for a sparse ``v``."""
    a = A.entries if isinstance(A, SensingMatrix) else np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    lhs = float(np.abs(v).sum() - np.abs(u).sum())
    rhs = float(tau * np.linalg.norm(a @ (u - v)))
    return RearrangeCheck(lhs, rhs, lhs <= rhs + 1e-10)


@dataclass(frozen=True)
class BoundReport:
    delta: float
    k: int
    lam: float
    mu: float
    rho: float
    beta: float
    theta: float
    in_regime: bool
    residual_upper: float
    residual_lower: float | None
    sparsity_limit: int
    chi: float
    chi_sq: float
    support_multiplier: int
    l2_lower: float | None
    l2_upper: float
    l1_upper: float
    l1_upper_improved: float
    l1_upper_rnsp: float | None
    entropy: float | None
    s_lambda: int | None
    delta_prime: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate_bounds(
    delta: float,
    k: int,
    lam: float,
    mu: float,
    s_lambda: int | None = None,
    delta_prime: float | None = None,
    x=None,
) -> BoundReport:
    """Evaluate every bound for one ``(delta, k, lam, mu)``.

    ``delta_prime`` (the RIC of the error's sparsity order) defaults to
    ``delta``. Support-dependent quantities are None unless ``s_lambda`` is
    given; ``entropy`` needs the minimizer ``x``.
    """
    c = rnsp_from_ric(delta)
    dp = delta if delta_prime is None else delta_prime
    cp = rnsp_from_ric(dp)
    th = theta(mu, lam, k)
    t, chi = sparsity_bound(delta, c.beta, th, k)
    l1_general, l1_improved = l1_bounds(delta, c.beta, th, k, lam, mu)
    lower = l2_low = None
    if s_lambda is not None:
        lower = residual_lower(s_lambda, delta)
        l2_low, _ = l2_bounds(delta, dp, cp.beta, k, s_lambda, lam, mu)
    _, l2_up = l2_bounds(delta, dp, cp.beta, k, 0, lam, mu)
    rnsp = None
    if c.is_rnsp:
        rnsp = l1_bound_rnsp_route(c.rho, c.beta, th, k, lam, 0.0, mu)[1]
    return BoundReport(
        delta=delta,
        k=k,
        lam=lam,
        mu=mu,
        rho=c.rho,
        beta=c.beta,
        theta=th,
        in_regime=th <= 1,
        residual_upper=residual_upper(c.beta, th, k),
        residual_lower=lower,
        sparsity_limit=t,
        chi=chi,
        chi_sq=chi * chi,
        support_multiplier=support_multiplier(chi),
        l2_lower=l2_low,
        l2_upper=l2_up,
        l1_upper=l1_general,
        l1_upper_improved=l1_improved,
        l1_upper_rnsp=rnsp,
        entropy=None if x is None else entropy(x),
        s_lambda=s_lambda,
        delta_prime=dp,
    )
