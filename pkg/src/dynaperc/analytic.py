"""Closed-form and fixed-point oracles for percolation and walks on trees."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np

E2 = math.e**2


def _survival_gap(theta: float, b: int, p: float) -> float:
    """((1 - p*theta)**b - (1 - theta)) / theta, expanded to avoid cancellation."""
    s = 1.0
    for k in range(1, b + 1):
        s += comb(b, k) * (-p) ** k * theta ** (k - 1)
    return s


def survival_probability(b: int, p: float) -> float:
    """Survival probability of the root cluster of the b-ary tree.

    Largest root of ``(1 - p*x)**b = 1 - x`` on [0, 1], found by bisection on
    the deflated polynomial (the trivial root x = 0 divided out).
    """
    if b < 2:
        raise ValueError("b must be >= 2")
    if p <= 1.0 / b:
        return 0.0
    if p >= 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    # gap < 0 below the root, >= 0 above it
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _survival_gap(mid, b, p) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def root_cluster_density(d: int, p: float) -> float:
    """theta_p: probability that the root of T_d lies in an infinite cluster."""
    if d < 3:
        raise ValueError("d must be >= 3")
    th = survival_probability(d - 1, p)
    return -math.expm1(d * math.log1p(-p * th)) if p * th < 1 else 1.0


def gw_speed(b: int, p: float, *, return_flag: bool = False):
    """Speed of simple random walk on a Binomial(b, p) Galton-Watson tree.

    Subcritical or critical input returns 0 (with ``False`` as the flag when
    ``return_flag`` is set).
    """
    th = survival_probability(b, p)
    if th <= 0.0:
        return (0.0, False) if return_flag else 0.0
    # 1 - q**m with q = 1 - th, computed without cancellation
    one_minus_qpow = lambda m: -math.expm1(m * math.log1p(-th)) if th < 1 else 1.0  # noqa: E731
    denom = one_minus_qpow(2)
    v = 0.0
    for k in range(b + 1):
        pk = comb(b, k) * p**k * (1 - p) ** (b - k)
        v += (k - 1) / (k + 1) * pk * one_minus_qpow(k + 1) / denom
    return (v, True) if return_flag else v


def srw_tree_speed(d: int) -> float:
    if d < 3:
        raise ValueError("d must be >= 3")
    return (d - 2) / d


@dataclass
class BoundSet:
    """Explicit-constant speed bounds at one parameter point.

    ``general_lower`` is the larger of the two general-graph bounds, each
    counted only in its own range of ``mu`` (``mu > 1/2`` and ``mu <= 1/2``).
    ``critical_envelope`` is sqrt(mu log(1/mu)) without its unknown constant,
    or None when ``mu > 1/e``.
    """

    tree_lower: float
    general_lower_large_mu: float
    general_lower_small_mu: float
    general_lower: float
    critical_envelope: float | None
    beta: float
    params: dict = field(default_factory=dict)

    @property
    def lower(self) -> float:
        return max(self.tree_lower, self.general_lower)


LARGE_MU_C = 2 * math.exp(-0.5) - 1  # integral of 1 - exp(-t/2) over [0, 1]


def beta_constant(p: float) -> float:
    return p / 2 * (1 - math.exp(-0.5)) * math.exp(-(1 - p) / 2)


def paper_bounds(d: int, p: float, mu: float, phi: float) -> BoundSet:
    th = survival_probability(d - 1, p)
    log_d = math.log(d)
    tree = p**3 * (p * th) ** 9 / (48 * E2 * d**3 * log_d)
    c = LARGE_MU_C
    large = c**3 * p**3 * phi**2 / (48 * E2 * log_d) if mu > 0.5 else 0.0
    beta = beta_constant(p)
    small = mu * beta**3 * phi**2 / (12 * E2 * d**2 * log_d) if (mu <= 0.5 and p < 1) else 0.0
    env = math.sqrt(mu * math.log(1 / mu)) if mu <= math.exp(-1) else None
    return BoundSet(tree, large, small, max(large, small), env, beta,
                    {"d": d, "p": p, "mu": mu, "phi": phi})


def critical_envelope(mu: float) -> float:
    return math.sqrt(mu * math.log(1 / mu))


@dataclass
class BirthDeathStats:
    mean_return_time: float
    return_time_stderr: float
    n_cycles: int
    occupancy: dict
    occupancy_mean: float
    exact_return_time: float
    exact_occupancy: dict
    short_horizon: bool


def poisson_pmf(lam: float, kmax: int) -> dict[int, float]:
    out, term = {}, math.exp(-lam)
    for k in range(kmax + 1):
        out[k] = term
        term *= lam / (k + 1)
    return out


def birth_death_stats(mu: float, horizon: float, rng=None) -> BirthDeathStats:
    """Simulate the chain with birth rate 1 and death rate ``mu * n``.

    Returns empirical return-time and time-weighted occupancy statistics
    alongside the exact values e^{1/mu} and Poisson(1/mu).
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    expected = math.exp(1 / mu)
    short = horizon < 100 * expected
    if short:
        warnings.warn("horizon is short relative to the mean return time", RuntimeWarning)
    t = 0.0
    n = 0
    occ: dict[int, float] = {}
    returns = []
    last_zero_entry = 0.0
    chunk = 1 << 14
    while t < horizon:
        es = rng.exponential(1.0, chunk).tolist()
        us = rng.random(chunk).tolist()
        for e, u in zip(es, us):
            rate = 1.0 + mu * n
            dt = e / rate
            if t + dt >= horizon:
                occ[n] = occ.get(n, 0.0) + horizon - t
                t = horizon
                break
            occ[n] = occ.get(n, 0.0) + dt
            t += dt
            if u * rate < 1.0:
                n += 1
            else:
                n -= 1
                if n == 0:
                    returns.append(t - last_zero_entry)
                    last_zero_entry = t
    total = sum(occ.values())
    dist = {k: v / total for k, v in sorted(occ.items())}
    r = np.asarray(returns)
    return BirthDeathStats(
        mean_return_time=float(r.mean()) if r.size else float("nan"),
        return_time_stderr=float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else float("nan"),
        n_cycles=int(r.size),
        occupancy=dist,
        occupancy_mean=sum(k * v for k, v in dist.items()),
        exact_return_time=expected,
        exact_occupancy=poisson_pmf(1 / mu, max(dist) if dist else 0),
        short_horizon=short,
    )


def near_critical_theta(b: int, p: float) -> float:
    """Leading-order survival probability 2b^2/(b-1) * (p - p_c)."""
    return 2 * b * b / (b - 1) * (p - 1 / b)


def near_critical_speed_ratio(b: int) -> float:
    """Limit of gw_speed / theta**2 as p decreases to 1/b."""
    return b * (b - 1) / b**2 / 12
