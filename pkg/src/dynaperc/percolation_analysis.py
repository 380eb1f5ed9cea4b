"""Static and interval-union percolation statistics on regular trees.

The root cluster of T_d is explored generation by generation.  On a tree the
number of open children of the ``Z_k`` vertices at depth ``k`` is
Binomial(b * Z_k, p) with ``b = d - 1`` (Binomial(d, p) at the root), so a
breadth-first exploration only needs the generation counts.  That gives the
exact joint law of size and radius and vectorizes over samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyn_env import interval_open_probability
from .graphs import RegularTree, vref

# beyond this many frontier vertices extinction within any tested cap has
# probability far below double precision; counts are clipped to stay in int64
ZCLIP = 1 << 40
HYPERGEOM_MAX = 10**9


def _gen(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


@dataclass
class ClusterStats:
    """Root cluster summary.  On trees intrinsic and extrinsic radius coincide.

    ``size`` is exact for untruncated clusters; truncated sizes count only
    the explored generations (and saturate once a generation is clipped).
    """

    size: int
    radius_intrinsic: int
    radius_extrinsic: int
    truncated: bool
    generation_sizes: list = field(default_factory=list)


def _explore(d: int, p: float, cap: int, n: int, rng: np.random.Generator):
    """Generation counts for ``n`` independent root clusters up to depth ``cap``.

    Returns ``(radius, size, truncated, offspring, parents)`` arrays, where
    ``offspring/parents`` count children and explored non-root parents strictly
    inside the cap (for the mean-offspring sanity check).
    """
    b = d - 1
    radius = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    offspring = np.zeros(n, dtype=np.int64)
    parents = np.zeros(n, dtype=np.int64)
    z = np.ones(n, dtype=np.int64)
    alive = np.arange(n)
    for k in range(cap):
        trials = (d if k == 0 else b) * z[alive]
        kids = np.minimum(rng.binomial(trials, p), ZCLIP)
        if k > 0:
            offspring[alive] += kids
            parents[alive] += z[alive]
        z[alive] = kids
        size[alive] += kids
        keep = kids > 0
        alive = alive[keep]
        radius[alive] = k + 1
        if alive.size == 0:
            break
    truncated = radius >= cap
    return radius, size, truncated, offspring, parents


def sample_root_cluster(d: int, p: float, cap: int, rng=None) -> ClusterStats:
    if cap < 1:
        raise ValueError("cap must be >= 1")
    RegularTree(d)
    rng = _gen(rng)
    b = d - 1
    gens = [1]
    z = 1
    for k in range(cap):
        z = min(int(rng.binomial((d if k == 0 else b) * z, p)), ZCLIP)
        if z == 0:
            break
        gens.append(z)
    r = len(gens) - 1
    return ClusterStats(sum(gens), r, r, r >= cap, gens)


def sample_clusters(d: int, p: float, cap: int, n: int, rng=None) -> dict:
    """Vectorized batch of root clusters: arrays ``radius``, ``size``, ``truncated``."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    radius, size, trunc, off, par = _explore(d, p, cap, n, _gen(rng))
    return {"radius": radius, "size": size, "truncated": trunc, "offspring": off, "parents": par}


def interval_open_parameter(p: float, mu: float, delta: float) -> float:
    return interval_open_probability(p, mu, delta)


def interval_union_cluster(d: int, p: float, mu: float, delta: float, cap: int, rng=None) -> ClusterStats:
    """Root cluster of the edges open at some time in a window of length ``delta``."""
    return sample_root_cluster(d, interval_open_probability(p, mu, delta), cap, rng)


def coupled_radii(d: int, ps, cap: int, n: int, rng=None) -> dict[float, np.ndarray]:
    """Radii of root clusters at several ``p`` under the monotone edge coupling.

    An edge open at a smaller ``p'`` is open at every larger ``p``, so each
    sample's radius is nondecreasing in ``p``.  Realized on generation counts:
    the next ``p``-generation is split between the ``p'``-frontier and the rest,
    and the ``p'``-frontier's share is thinned with probability ``p'/p``.
    """
    rng = _gen(rng)
    order = sorted({float(x) for x in ps}, reverse=True)
    b = d - 1
    m = len(order)
    z = np.ones((m, n), dtype=np.int64)
    radius = np.zeros((m, n), dtype=np.int64)
    for k in range(cap):
        mult = d if k == 0 else b
        if not z[0].any():
            break
        new = np.zeros_like(z)
        # largest p: children of its own frontier
        new[0] = np.minimum(rng.binomial(mult * z[0], order[0]), ZCLIP)
        for j in range(1, m):
            # open child slots at order[j-1] form a uniform subset of all slots, so the
            # share owned by the smaller frontier is hypergeometric given the total
            good, bad = mult * z[j], mult * (z[j - 1] - z[j])
            inner = new[j - 1].copy()
            split = (bad > 0) & (good > 0) & (new[j - 1] > 0)
            small = split & (good + bad < HYPERGEOM_MAX)
            inner[good == 0] = 0
            if small.any():
                inner[small] = rng.hypergeometric(good[small], bad[small], new[j - 1][small])
            big = split & ~small
            if big.any():
                # beyond numpy's hypergeometric range; binomial thinning with matching mean
                inner[big] = rng.binomial(new[j - 1][big], good[big] / (good[big] + bad[big]))
            new[j] = rng.binomial(inner, order[j] / order[j - 1])
        z = new
        radius[z > 0] = k + 1
    return {p: radius[i] for i, p in enumerate(order)}


def survival_curve(radius: np.ndarray, radii) -> list[tuple[int, float, float]]:
    n = radius.size
    out = []
    for r in radii:
        phat = float(np.count_nonzero(radius >= r)) / n
        out.append((int(r), phat, math.sqrt(phat * (1 - phat) / n)))
    return out


def one_arm_curve(d: int, radii, n_samples: int, rng=None, *, p: float | None = None,
                  batch: int = 250_000) -> list[tuple[int, float, float]]:
    """P(Radi >= r) with binomial standard errors, at ``p_c`` unless ``p`` is given."""
    radii = [int(r) for r in radii]
    rng = _gen(rng)
    p = 1.0 / (d - 1) if p is None else p
    cap = max(max(radii), 1)
    counts = np.zeros(len(radii), dtype=np.int64)
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        radius, *_ = _explore(d, p, cap, m, rng)
        counts += np.array([np.count_nonzero(radius >= r) for r in radii])
        done += m
    out = []
    for r, c in zip(radii, counts):
        ph = c / n_samples
        out.append((r, float(ph), math.sqrt(ph * (1 - ph) / n_samples)))
    return out


def one_arm_exact(d: int, radii, p: float | None = None) -> list[tuple[int, float]]:
    """Exact P(Radi >= r) by iterating offspring generating functions."""
    b = d - 1
    p = 1.0 / b if p is None else p
    rmax = max(int(r) for r in radii)
    # e[k] = P(a depth-1 subtree dies within k further generations)
    ext = [0.0]
    for _ in range(rmax):
        ext.append((1 - p + p * ext[-1]) ** b)
    surv = {0: 1.0}
    for r in range(1, rmax + 1):
        surv[r] = 1.0 - (1 - p + p * ext[r - 1]) ** d
    return [(int(r), surv[int(r)]) for r in radii]


def interval_union_arm_curve(d: int, radii, delta_scale: float, n_samples: int, rng=None,
                             mu: float = 1.0) -> list[tuple[int, float, float, float]]:
    """Arm probabilities at ``p_c`` with the window chosen so ``mu*delta*p_c = delta_scale/r``.

    Rows are ``(r, p_tilde, estimate, stderr)``.
    """
    rng = _gen(rng)
    pc = 1.0 / (d - 1)
    rows = []
    for r in radii:
        r = int(r)
        delta = delta_scale / (r * mu * pc)
        pt = interval_open_probability(pc, mu, delta)
        radius, *_ = _explore(d, pt, r, n_samples, rng)
        ph = float(np.count_nonzero(radius >= r)) / n_samples
        rows.append((r, pt, ph, math.sqrt(ph * (1 - ph) / n_samples)))
    return rows


def tail_curve_splitting(d: int, p: float, radii, n_particles: int, rng=None,
                         n_batches: int = 20) -> list[tuple[int, float, float]]:
    """P(Rade >= r) for rare events by sequential resampling on generation counts.

    The frontier count is Markov in the generation index, so the product of
    per-generation survival fractions with resampling of survivors is an
    unbiased estimator of the tail.  Independent batches give the stderr.
    """
    rng = _gen(rng)
    radii = sorted(int(r) for r in radii)
    rmax = radii[-1]
    b = d - 1
    per = max(n_particles // n_batches, 2)
    est = np.zeros((n_batches, rmax + 1))
    for j in range(n_batches):
        z = np.ones(per, dtype=np.int64)
        prob = 1.0
        est[j, 0] = 1.0
        for k in range(rmax):
            kids = np.minimum(rng.binomial((d if k == 0 else b) * z, p), ZCLIP)
            alive = kids[kids > 0]
            prob *= alive.size / per
            est[j, k + 1] = prob
            if alive.size == 0:
                break
            z = alive[rng.integers(0, alive.size, per)]
    mean = est.mean(axis=0)
    se = est.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return [(r, float(mean[r]), float(se[r])) for r in radii]


def log_linear_fit(points) -> tuple[float, float, float]:
    """Least squares of log y on x; returns ``(slope, intercept, R^2)``."""
    x = np.array([float(p[0]) for p in points])
    y = np.array([float(p[1]) for p in points])
    if np.any(y <= 0):
        raise ValueError("log-linear fit needs positive y")
    ly = np.log(y)
    slope, icpt = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + icpt)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), r2


def _branch_depths(b: int, p: float, n: int, gens: int, rng) -> np.ndarray:
    """How many generations each of ``n`` b-ary GW chains survives, capped at ``gens``."""
    depth = np.zeros(n, dtype=np.int64)
    z = np.ones(n, dtype=np.int64)
    alive = np.arange(n)
    for k in range(gens):
        kids = np.minimum(rng.binomial(b * z[alive], p), ZCLIP)
        z[alive] = kids
        alive = alive[kids > 0]
        depth[alive] = k + 1
        if alive.size == 0:
            break
    return depth


def trifurcation_indicators(d: int, p: float, Rs, n_samples: int, rng=None) -> dict[int, np.ndarray]:
    """Root R-trifurcation indicators for several ``R`` from the same samples.

    A root edge counts when it is open and the subtree behind it has an open
    path down to depth ``R``.  Because the same chains serve every ``R`` the
    estimates are exactly monotone in ``R``.
    """
    rng = _gen(rng)
    Rs = sorted(int(r) for r in Rs)
    b = d - 1
    opened = rng.random((n_samples, d)) < p
    depth = _branch_depths(b, p, n_samples * d, Rs[-1] - 1, rng).reshape(n_samples, d)
    return {R: ((opened & (depth >= R - 1)).sum(axis=1) >= 3) for R in Rs}


def trifurcation_probe(d: int, p: float, R: int, n_samples: int, rng=None) -> tuple[float, float]:
    """P(root is an R-trifurcation) with its binomial standard error."""
    ind = trifurcation_indicators(d, p, [R], n_samples, rng)[R]
    est = float(ind.mean())
    return est, math.sqrt(est * (1 - est) / n_samples)


@dataclass
class BallConfig:
    """Open edges of T_d inside radius ``m`` plus, for every depth-``m`` vertex,
    whether an open path continues from it down to depth ``R``.

    Vertices are packed tree codes (root 1); an edge is keyed by its child.
    """

    d: int
    m: int
    R: int
    open: dict
    reaches: dict

    def children(self, v: int) -> list[int]:
        if v == 1:
            return [self.d + k for k in range(self.d)]
        return [v * self.d + k for k in range(self.d - 1)]

    def depth(self, v: int) -> int:
        k = 0
        while v > 1:
            v //= self.d
            k += 1
        return k


def ball_codes(d: int, m: int) -> list[list[int]]:
    levels = [[1]]
    for k in range(m):
        nxt = []
        for v in levels[-1]:
            if v == 1:
                nxt.extend(d + j for j in range(d))
            else:
                nxt.extend(v * d + j for j in range(d - 1))
        levels.append(nxt)
    return levels


def sample_ball_configs(d: int, p: float, m: int, R: int, n: int, rng=None) -> list[BallConfig]:
    if not 1 <= m < R:
        raise ValueError("need 1 <= m < R")
    rng = _gen(rng)
    levels = ball_codes(d, m)
    edges = [v for lvl in levels[1:] for v in lvl]
    leaves = levels[-1]
    states = rng.random((n, len(edges))) < p
    deep = _branch_depths(d - 1, p, n * len(leaves), R - m, rng).reshape(n, len(leaves)) >= R - m
    out = []
    for i in range(n):
        out.append(BallConfig(d, m, R, dict(zip(edges, states[i].tolist())), dict(zip(leaves, deep[i].tolist()))))
    return out


def _down_reach(cfg: BallConfig) -> dict[int, bool]:
    levels = ball_codes(cfg.d, cfg.m)
    down = dict(cfg.reaches)
    for lvl in reversed(levels[:-1]):
        for v in lvl:
            down[v] = any(cfg.open[c] and down[c] for c in cfg.children(v))
    return down


def trifurcations(cfg: BallConfig, S) -> list[int]:
    """Vertices of ``S`` with at least three open incident edges leading to depth ``R``
    once the vertex is removed."""
    down = _down_reach(cfg)
    up: dict[int, bool] = {}
    levels = ball_codes(cfg.d, cfg.m)
    # up[v]: parent side of v, with v removed, reaches depth R
    for lvl in levels[1:]:
        for v in lvl:
            u = v // cfg.d
            sib = any(cfg.open[c] and down[c] for c in cfg.children(u) if c != v)
            up[v] = sib or (u != 1 and cfg.open[u] and up[u])
    out = []
    for x in S:
        if cfg.depth(x) >= cfg.m:
            raise ValueError("S must lie strictly inside the explicit ball")
        n = sum(1 for c in cfg.children(x) if cfg.open[c] and down[c])
        if x != 1 and cfg.open[x] and up[x]:
            n += 1
        if n >= 3:
            out.append(x)
    return out


def open_boundary(cfg: BallConfig, S) -> int:
    S = set(S)
    n = 0
    for v in S:
        for c in cfg.children(v):
            if c not in S and cfg.open[c]:
                n += 1
        if v != 1 and v // cfg.d not in S and cfg.open[v]:
            n += 1
    return n


def burton_keane_check(cfg: BallConfig, S) -> tuple[bool, int, int]:
    """``|open boundary of S| >= #trifurcations in S + 2`` whenever S holds one.

    Returns ``(pass, trifurcation count, boundary size)``.
    """
    S = list(S)
    if any(2 * cfg.depth(v) > cfg.R for v in S):
        raise ValueError("S must lie in the ball of radius R/2")
    k = len(trifurcations(cfg, S))
    bd = open_boundary(cfg, S)
    return (k == 0 or bd >= k + 2), k, bd


def three_trifurcation_example() -> tuple[BallConfig, list[int]]:
    """Hand-built T_3 configuration whose radius-2 ball holds exactly three trifurcations."""
    tree = RegularTree(3)
    levels = ball_codes(3, 3)
    open_words = ["0", "1", "2", "00", "01", "10", "11", "20", "000", "010", "100", "110", "200"]
    opened = {tree.code(vref(w)) for w in open_words}
    edges = {v: v in opened for lvl in levels[1:] for v in lvl}
    reaches = {v: True for v in levels[-1]}
    S = [v for lvl in levels[:3] for v in lvl]
    return BallConfig(3, 3, 8, edges, reaches), S
