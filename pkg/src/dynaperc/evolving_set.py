"""Evolving sets, Doob transform and Diaconis-Fill coupling on small graphs.

All laws here are exact: one-step kernels come from uniformization of the
walk generator under a piecewise-constant environment, and the evolving-set
law is read off the level sets of ``Q(y) = sum_{x in S} P(x, y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graphs import FiniteGraph


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class PiecewiseEnvironment:
    """Open edge sets on the pieces of a unit time interval.

    ``breakpoints`` has one more entry than ``open_sets``; piece ``i`` is
    ``[breakpoints[i], breakpoints[i+1]]``.
    """

    breakpoints: tuple[float, ...]
    open_sets: tuple[frozenset, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        sets = tuple(frozenset(_edge(*e) for e in s) for s in self.open_sets)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "open_sets", sets)
        if len(bp) != len(sets) + 1 or not sets:
            raise ValueError("need len(breakpoints) == len(open_sets) + 1 >= 2")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if abs(bp[-1] - bp[0] - 1.0) > 1e-12:
            raise ValueError("pieces must span a unit interval")

    def pieces(self) -> list[tuple[float, frozenset]]:
        return [(b - a, s) for a, b, s in zip(self.breakpoints, self.breakpoints[1:], self.open_sets)]

    @classmethod
    def constant(cls, open_edges: Iterable) -> "PiecewiseEnvironment":
        return cls((0.0, 1.0), (frozenset(open_edges),))


def random_piecewise_environment(g: FiniteGraph, rng, max_pieces: int = 4) -> PiecewiseEnvironment:
    """Random number of pieces, random cut points, each edge open w.p. a random level."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    k = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.random(k - 1))
    bp = (0.0, *cuts.tolist(), 1.0)
    edges = g.edges()
    sets = []
    for _ in range(k):
        level = rng.random()
        sets.append(frozenset(e for e in edges if rng.random() < level))
    return PiecewiseEnvironment(bp, tuple(sets))


@dataclass(frozen=True)
class Kernel:
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def row(self, x: int) -> np.ndarray:
        return self.matrix[x]


def _generator(g: FiniteGraph, open_edges: frozenset, rate_scale: int) -> np.ndarray:
    n = g.n
    L = np.zeros((n, n))
    for u, v in open_edges:
        L[u, v] += 1.0 / rate_scale
        L[v, u] += 1.0 / rate_scale
    L[np.diag_indices(n)] = -L.sum(axis=1)
    return L


def _uniformized_exp(L: np.ndarray, tau: float, tol: float) -> np.ndarray:
    """exp(tau * L) for a generator with exit rates <= 1, via uniformization at rate 1."""
    n = L.shape[0]
    P = np.eye(n) + L
    term = np.eye(n)
    weight = math.exp(-tau)
    out = weight * term
    mass = weight
    k = 0
    while 1.0 - mass > tol:
        k += 1
        term = term @ P
        weight *= tau / k
        out += weight * term
        mass += weight
        if k > 10_000:
            break
    return out


def step_kernel(g: FiniteGraph, env: PiecewiseEnvironment, *, tol: float = 1e-13) -> Kernel:
    """One-unit transition matrix of the walk under ``env``.

    Each open edge at ``x`` is crossed at rate ``1/d`` with ``d`` the maximum
    degree, so every exit rate is at most 1.
    """
    d = max(g.max_degree, 1)
    valid = set(g.edges())
    K = np.eye(g.n)
    for tau, open_edges in env.pieces():
        if not open_edges <= valid:
            raise ValueError("environment opens an edge the graph does not have")
        if open_edges:
            K = K @ _uniformized_exp(_generator(g, open_edges, d), tau, tol)
    return Kernel(K)


def _as_set(S) -> frozenset:
    return frozenset(int(x) for x in S)


def _levels(k: Kernel, S) -> np.ndarray:
    S = _as_set(S)
    if not S:
        raise ValueError("S must be nonempty")
    Q = k.matrix[sorted(S)].sum(axis=0)
    return np.clip(Q, 0.0, 1.0)


@dataclass(frozen=True)
class EvolvingSetLaw:
    outcomes: tuple[tuple[frozenset, float], ...]

    def prob(self, B) -> float:
        B = _as_set(B)
        return sum(p for s, p in self.outcomes if s == B)

    def mean(self, f) -> float:
        return sum(p * f(s) for s, p in self.outcomes)

    @property
    def total(self) -> float:
        return sum(p for _, p in self.outcomes)


def evolving_set_law(k: Kernel, S) -> EvolvingSetLaw:
    """Exact law of ``{y : Q(y) >= U}`` with ``U`` uniform on [0, 1]."""
    Q = _levels(k, S)
    values = sorted(set(Q.tolist()), reverse=True)
    out = []
    top = 1.0
    for q in values:
        if top - q > 0:
            # U in (q, top] selects the strict superlevel set above q
            out.append((frozenset(np.flatnonzero(Q > q).tolist()), top - q))
        top = q
    if top > 0:
        out.append((frozenset(range(k.n)), top))
    return EvolvingSetLaw(tuple(out))


def doob_law(k: Kernel, S) -> EvolvingSetLaw:
    """Size-biased law ``|B|/|S| * K(S, B)``, supported on nonempty sets."""
    base = evolving_set_law(k, S)
    m = len(_as_set(S))
    return EvolvingSetLaw(tuple((B, p * len(B) / m) for B, p in base.outcomes if B))


def doob_step(k: Kernel, S, rng) -> frozenset:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    law = doob_law(k, S)
    probs = np.array([p for _, p in law.outcomes])
    i = int(rng.choice(len(probs), p=probs / probs.sum()))
    return law.outcomes[i][0]


@dataclass(frozen=True)
class DFState:
    walker: int
    set: frozenset

    def __post_init__(self):
        object.__setattr__(self, "set", _as_set(self.set))
        if self.walker not in self.set:
            raise ValueError("walker must lie in the set")


def df_step(k: Kernel, s: DFState, rng) -> DFState:
    """Move the walker by ``k``, then draw the set given the walker's landing point."""
    if not isinstance(s, DFState) or s.walker not in s.set:
        raise ValueError("malformed coupled state")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    row = k.row(s.walker)
    y = int(rng.choice(k.n, p=row / row.sum()))
    Q = _levels(k, s.set)
    u = rng.random() * Q[y]
    return DFState(y, frozenset(np.flatnonzero(Q >= u).tolist()))


def df_paths(kernels: Sequence[Kernel], x0: int, n_paths: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized coupled paths started at ``(x0, {x0})``.

    Returns walker positions and set bitmasks, each of shape
    ``(n_paths, len(kernels) + 1)``.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = kernels[0].n
    xs = np.empty((n_paths, len(kernels) + 1), dtype=np.int64)
    masks = np.empty_like(xs)
    xs[:, 0] = x0
    masks[:, 0] = 1 << x0
    bits = 1 << np.arange(n)
    for step, k in enumerate(kernels):
        x, m = xs[:, step], masks[:, step]
        cdf = np.cumsum(k.matrix, axis=1)
        cdf[:, -1] = np.inf
        u = rng.random(n_paths)
        y = (u[:, None] >= cdf[x]).sum(axis=1)
        v = rng.random(n_paths)
        newm = np.zeros(n_paths, dtype=np.int64)
        for mask in np.unique(m):
            sel = m == mask
            members = [i for i in range(n) if mask >> i & 1]
            Q = np.clip(k.matrix[members].sum(axis=0), 0.0, 1.0)
            thr = v[sel] * Q[y[sel]]
            newm[sel] = ((Q[None, :] >= thr[:, None]) * bits).sum(axis=1)
        xs[:, step + 1] = y
        masks[:, step + 1] = newm
    return xs, masks


def phi(k: Kernel, S) -> float:
    """Average one-step escape probability from ``S``."""
    S = _as_set(S)
    if not S or len(S) >= k.n:
        raise ValueError("S must be a nonempty proper subset")
    inside = sorted(S)
    outside = [y for y in range(k.n) if y not in S]
    return float(k.matrix[np.ix_(inside, outside)].sum() / len(S))


def check_supermartingale(k: Kernel, S, slack: float = 1e-12) -> tuple[float, float, bool]:
    """Doob expectation of ``|S'|^{-1/2}`` against ``exp(-phi^2/6) |S|^{-1/2}``."""
    S = _as_set(S)
    lhs = doob_law(k, S).mean(lambda B: len(B) ** -0.5)
    rhs = math.exp(-phi(k, S) ** 2 / 6) * len(S) ** -0.5
    return lhs, rhs, lhs <= rhs + slack


def boundary_integral(env: PiecewiseEnvironment, S) -> float:
    """Time integral of the number of open edges with exactly one endpoint in ``S``."""
    S = _as_set(S)
    return sum(tau * sum((u in S) != (v in S) for u, v in open_edges) for tau, open_edges in env.pieces())


def phi_lower_bound(g: FiniteGraph, env: PiecewiseEnvironment, S) -> float:
    return boundary_integral(env, S) / (max(g.max_degree, 1) * math.e * len(_as_set(S)))


def proper_subsets(n: int) -> list[frozenset]:
    return [frozenset(i for i in range(n) if m >> i & 1) for m in range(1, (1 << n) - 1)]


def check_rows(g: FiniteGraph, n_envs: int, rng) -> list[dict]:
    """Supermartingale and boundary-integral checks for every nonempty proper S."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    rows = []
    subsets = proper_subsets(g.n)
    for i in range(n_envs):
        env_seed = int(rng.integers(0, 2**63))
        env = random_piecewise_environment(g, env_seed)
        k = step_kernel(g, env)
        for S in subsets:
            lhs, rhs, ok = check_supermartingale(k, S)
            ph = phi(k, S)
            lb = phi_lower_bound(g, env, S)
            rows.append({
                "graph": g.name, "env_index": i, "env_seed": env_seed,
                "S": " ".join(map(str, sorted(S))), "lhs": lhs, "rhs": rhs, "pass": ok,
                "phi": ph, "phi_lower": lb, "phi_pass": ph >= lb - 1e-12,
            })
    return rows


def supermartingale_path_means(g: FiniteGraph, kernels: Sequence[Kernel], x0: int, n_paths: int,
                               rng) -> list[tuple[float, float]]:
    """Mean and stderr of ``M_n = |S_n|^{-1/2} exp(sum_k phi_k^2 / 6)`` along Doob paths."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    _, masks = df_paths(kernels, x0, n_paths, rng)
    full = (1 << g.n) - 1
    phi_cache: dict = {}

    def phi_of(step: int, mask: int) -> float:
        key = (step, mask)
        if key not in phi_cache:
            S = [i for i in range(g.n) if mask >> i & 1]
            phi_cache[key] = 0.0 if mask == full else phi(kernels[step], S)
        return phi_cache[key]

    sizes = np.vectorize(lambda m: bin(int(m)).count("1"))(masks)
    expo = np.zeros(n_paths)
    out = [(1.0, 0.0)]
    for n in range(1, masks.shape[1]):
        expo += np.array([phi_of(n - 1, int(m)) ** 2 / 6 for m in masks[:, n - 1]])
        M = sizes[:, n] ** -0.5 * np.exp(expo)
        out.append((float(M.mean()), float(M.std(ddof=1) / math.sqrt(n_paths))))
    return out


def growth_statistic(g: FiniteGraph, n_steps: int, n_paths: int, rng, *, p_open: float = 0.9,
                     c0: float = 1.0, c1: float = 0.1) -> list[dict]:
    """Frequency of ``|S_n| >= c0 * exp(c1 * n)`` along Doob paths from a single vertex.

    Each step uses a fresh constant environment with every edge open w.p. ``p_open``.
    A diagnostic only: the constants that make this frequency provably positive
    depend on the graph.
    """
    if g.n > 62:
        raise ValueError("bitmask paths support at most 62 vertices")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    edges = g.edges()
    kernels = []
    for _ in range(n_steps):
        opened = [e for e, u in zip(edges, rng.random(len(edges))) if u < p_open]
        kernels.append(step_kernel(g, PiecewiseEnvironment.constant(opened)))
    _, masks = df_paths(kernels, 0, n_paths, rng)
    sizes = np.vectorize(lambda m: bin(int(m)).count("1"))(masks)
    rows = []
    for n in range(n_steps + 1):
        thr = c0 * math.exp(c1 * n)
        hit = sizes[:, n] >= thr
        f = float(hit.mean())
        rows.append({"n": n, "threshold": thr, "frequency": f,
                     "stderr": math.sqrt(f * (1 - f) / n_paths), "mean_size": float(sizes[:, n].mean())})
    return rows
