"""Random walk on dynamical percolation: simulation and speed estimation.

The walker attempts a jump at the points of a rate-1 Poisson process, picks a
neighbor uniformly and crosses iff the edge is open at that instant.  Walker
randomness (gaps and neighbor choices) comes from a numpy Generator drawn in
chunks; edge randomness lives in the :class:`~dynaperc.dyn_env.Environment`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import graphs
from .dyn_env import EnvConfig, Environment, MemoryTracker
from .graphs import FiniteGraph, RegularTree, SampledGW

_CHUNK = 4096


@dataclass
class Trajectory:
    """Jump events of one walk.

    ``samples`` holds ``(time, vertex)`` for the start and every jump when the
    walk was run with ``record=True``; tree vertices are packed codes (see
    :meth:`vertices`).  ``checkpoints`` holds the distance from the start at
    each requested sample time.
    """

    samples: list
    horizon: float
    attempts: int
    final: object
    final_dist: int
    jumps: int
    checkpoints: list = field(default_factory=list)

    def vertices(self, g) -> list:
        if isinstance(g, RegularTree):
            return [g.vertex(c) for _, c in self.samples]
        return [v for _, v in self.samples]


def _chunks(rng: np.random.Generator, high: int | None):
    while True:
        gaps = rng.exponential(1.0, _CHUNK).tolist()
        if high is None:
            picks = rng.random(_CHUNK).tolist()
        else:
            picks = rng.integers(0, high, _CHUNK).tolist()
        yield from zip(gaps, picks)


def run_walk(g, env: Environment, horizon: float, x0=None, rng=None, *,
             tracker: MemoryTracker | None = None, record: bool = True,
             sample_times=None, rollup_every: float | None = None) -> Trajectory:
    """Simulate the walk on ``[0, horizon]``.

    ``sample_times`` (increasing) requests the distance from ``x0`` at those
    times.  ``rollup_every`` prunes the environment at that period.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if isinstance(g, RegularTree):
        return _run_tree(g, env, horizon, x0, rng, tracker, record, sample_times, rollup_every)
    return _run_generic(g, env, horizon, x0, rng, tracker, record, sample_times, rollup_every)


def _run_tree(g, env, horizon, x0, rng, tracker, record, sample_times, rollup_every):
    d = g.d
    x0 = graphs.ROOT if x0 is None else x0
    start = g.code(x0)
    code, depth = start, x0.depth
    state_at = env.state_at
    records = env.records
    samples = [(0.0, code)] if record else None
    pending = list(sample_times or [])[::-1]
    checkpoints = []
    next_roll = rollup_every if rollup_every else math.inf
    t = 0.0
    attempts = jumps = 0
    for gap, k in _chunks(rng, d):
        t += gap
        while pending and pending[-1] < t:
            checkpoints.append((pending.pop(), graphs.tree_code_dist(d, start, code)))
        if t > horizon:
            break
        if t >= next_roll:
            env.rollup(next_roll)
            next_roll += rollup_every
        attempts += 1
        if depth == 0:
            key = nb = d + k
            up = False
        elif k == 0:
            key = code
            nb = code // d
            up = True
        else:
            key = nb = code * d + k - 1
            up = False
        if state_at(key, t):
            code = nb
            depth += -1 if up else 1
            jumps += 1
            if record:
                samples.append((t, code))
        if tracker is not None:
            tracker.record_attempt(key, t, records[key][1])
    while pending:
        checkpoints.append((pending.pop(), graphs.tree_code_dist(d, start, code)))
    if tracker is not None:
        tracker.finalize(horizon)
    fd = depth if start == 1 else graphs.tree_code_dist(d, start, code)
    return Trajectory(samples or [], horizon, attempts, code, fd, jumps, checkpoints)


def _run_generic(g, env, horizon, x0, rng, tracker, record, sample_times, rollup_every):
    if x0 is None:
        x0 = g.root if isinstance(g, SampledGW) else 0
    x = x0
    samples = [(0.0, x)] if record else None
    pending = list(sample_times or [])[::-1]
    checkpoints = []
    next_roll = rollup_every if rollup_every else math.inf
    t = 0.0
    attempts = jumps = 0
    nbs = graphs.neighbors(g, x)
    for gap, u in _chunks(rng, None):
        t += gap
        while pending and pending[-1] < t:
            checkpoints.append((pending.pop(), graphs.dist(g, x0, x)))
        if t > horizon:
            break
        if t >= next_roll:
            env.rollup(next_roll)
            next_roll += rollup_every
        attempts += 1
        if not nbs:
            continue
        y, key = nbs[int(u * len(nbs))]
        if env.state_at(key, t):
            x = y
            nbs = graphs.neighbors(g, x)
            jumps += 1
            if record:
                samples.append((t, x))
        if tracker is not None:
            tracker.record_attempt(key, t, env.records[key][1])
    while pending:
        checkpoints.append((pending.pop(), graphs.dist(g, x0, x)))
    if tracker is not None:
        tracker.finalize(horizon)
    return Trajectory(samples or [], horizon, attempts, x, graphs.dist(g, x0, x), jumps, checkpoints)


def replica_seeds(base_seed: int, *index: int) -> tuple[int, np.random.Generator]:
    """Environment seed and walker Generator for one replica.

    Depends only on ``(base_seed, index)``, never on scheduling.
    """
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, *index])
    env_ss, walk_ss = ss.spawn(2)
    hi, lo = env_ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo), np.random.default_rng(walk_ss)


@dataclass
class SpeedEstimate:
    mean: float
    stderr: float
    n_runs: int
    horizon: float
    params: dict
    second_moment: float = float("nan")
    values: list = field(default_factory=list, repr=False)


def single_speed(g, cfg: EnvConfig, horizon: float, base_seed: int, index: tuple,
                 rollup_every: float | None = None) -> float:
    """dist(X_0, X_horizon) / horizon for one replica with a fresh environment."""
    env_seed, walk_rng = replica_seeds(base_seed, *index)
    env = Environment(EnvConfig(cfg.p, cfg.mu, cfg.init, env_seed, cfg.explicit))
    traj = run_walk(g, env, horizon, None, walk_rng, record=False, rollup_every=rollup_every)
    return traj.final_dist / horizon


def summarize(values, horizon: float, params: dict) -> SpeedEstimate:
    arr = np.asarray(values, dtype=float)
    n = arr.size
    return SpeedEstimate(
        mean=float(arr.mean()),
        stderr=float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
        n_runs=n,
        horizon=horizon,
        params=params,
        second_moment=float(np.mean(arr**2)),
        values=arr.tolist(),
    )


def _seed_of(rng) -> int:
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return int(rng.integers(0, 2**63))


def estimate_speed(g, cfg: EnvConfig, horizon: float, n_runs: int, rng=None, *,
                   rollup_every: float | None = None) -> SpeedEstimate:
    """Mean and standard error of dist/horizon over independent replicas."""
    if n_runs < 2:
        raise ValueError("n_runs must be >= 2")
    base = _seed_of(rng)
    vals = [single_speed(g, cfg, horizon, base, (i,), rollup_every) for i in range(n_runs)]
    return summarize(vals, horizon, {"graph": describe_graph(g), **cfg.to_dict()})


def displacement_profile(g, cfg: EnvConfig, times, n_runs: int, rng=None) -> list[tuple[float, float, float]]:
    """E[dist(X_0, X_t)] with standard error at each requested time."""
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be increasing")
    base = _seed_of(rng)
    rows = np.zeros((n_runs, len(times)))
    horizon = max(times[-1], 1e-9)
    for i in range(n_runs):
        env_seed, walk_rng = replica_seeds(base, i)
        env = Environment(EnvConfig(cfg.p, cfg.mu, cfg.init, env_seed, cfg.explicit))
        traj = run_walk(g, env, horizon, None, walk_rng, record=False, sample_times=times)
        rows[i] = [dd for _, dd in traj.checkpoints]
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / math.sqrt(n_runs) if n_runs > 1 else np.zeros(len(times))
    return [(t, float(m), float(s)) for t, m, s in zip(times, mean, se)]


def fit_power_law(points) -> tuple[float, float, float]:
    """Weighted least squares of log y on log x.

    ``points`` are ``(x, y, yerr)``; weights are ``(y / yerr)**2`` when every
    ``yerr`` is positive, uniform otherwise.  Returns
    ``(exponent, intercept, exponent stderr)``.
    """
    pts = [tuple(map(float, p)) for p in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive x and y")
    yerr = np.array([p[2] if len(p) > 2 else 0.0 for p in pts])
    lx, ly = np.log(x), np.log(y)
    weighted = bool(np.all(yerr > 0))
    w = (y / yerr) ** 2 if weighted else np.ones_like(lx)
    A = np.column_stack([lx, np.ones_like(lx)])
    AtW = A.T * w
    cov = np.linalg.inv(AtW @ A)
    slope, icpt = cov @ (AtW @ ly)
    if weighted:
        se = math.sqrt(cov[0, 0])
    else:
        resid = ly - (slope * lx + icpt)
        dof = max(len(lx) - 2, 1)
        se = math.sqrt(cov[0, 0] * float(resid @ resid) / dof)
    return float(slope), float(icpt), float(se)


def describe_graph(g) -> str:
    if isinstance(g, RegularTree):
        return f"T{g.d}"
    if isinstance(g, FiniteGraph):
        return g.name
    if isinstance(g, SampledGW):
        return f"GW(b={g.b},p={g.p})"
    return type(g).__name__
