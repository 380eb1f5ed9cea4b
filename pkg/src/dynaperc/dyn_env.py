"""Lazily materialized dynamical percolation.

Each edge refreshes at the times of a rate-``mu`` Poisson process and is open
with probability ``p`` after every refresh.  Only edges that have been queried
carry a record.  All randomness of an edge comes from its own counter-based
stream, so the answer for one edge never depends on which other edges were
touched.

State at a query time ``t`` past a pending refresh is resolved in one step:
the state left by the last refresh in the window is Bernoulli(p) and, by
memorylessness, the next refresh after ``t`` is ``t + Exp(mu)``.  This is exact
in law and keeps ``state_at`` O(1) even when ``mu`` is large.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

from . import _rng


class Init(str, enum.Enum):
    STATIONARY = "stationary"
    ALL_CLOSED = "all_closed"
    ALL_OPEN = "all_open"
    EXPLICIT = "explicit"


class TimeRegressionError(ValueError):
    """A query went backwards in time for an edge (monotone clock contract)."""


@dataclass
class EnvConfig:
    p: float
    mu: float
    init: Init = Init.STATIONARY
    seed: int = 0
    explicit: dict = field(default_factory=dict)

    def __post_init__(self):
        self.init = Init(self.init)
        if not 0 < self.p <= 1:
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    def to_dict(self) -> dict:
        return {"p": self.p, "mu": self.mu, "init": self.init.value, "seed": self.seed}


# record slots
_STATE, _NEXT, _DRAW, _LAST, _BASE = range(5)


class Environment:
    """Per-edge records ``[state, next_refresh, draw_index, last_query, stream]``.

    Edge keys are ints (packed tree codes) or tuples of ints (finite graphs).
    """

    def __init__(self, config: EnvConfig, keep_history: bool = False):
        self.config = config
        # history mode steps through every refresh and logs (time, state) per edge
        self.keep_history = keep_history
        self.history: dict = {}
        self.records: dict = {}
        self._epoch = 0
        # keys pruned while their init law was not stationary
        self._tombstones: set = set()
        self.max_records = 0
        self._pruned_at = 0.0

    def __len__(self) -> int:
        return len(self.records)

    def _init_state(self, key) -> bool | None:
        cfg = self.config
        if cfg.init is Init.ALL_CLOSED:
            return False
        if cfg.init is Init.ALL_OPEN:
            return True
        if cfg.init is Init.EXPLICIT and key in cfg.explicit:
            return bool(cfg.explicit[key])
        return None

    def _materialize(self, key) -> list:
        cfg = self.config
        base = _rng.stream_key(cfg.seed, key, self._epoch)
        if key in self._tombstones:
            self._tombstones.discard(key)
            state, start = None, self._pruned_at
        else:
            state, start = self._init_state(key), 0.0
        if state is None:
            state = _rng.uniform(base, 0) < cfg.p
        nxt = start + _rng.exponential(base, 1, cfg.mu)
        rec = [state, nxt, 2, start, base]
        self.records[key] = rec
        if self.keep_history:
            self.history[key] = [(start, state)]
        if len(self.records) > self.max_records:
            self.max_records = len(self.records)
        return rec

    def record(self, key) -> list:
        rec = self.records.get(key)
        return rec if rec is not None else self._materialize(key)

    def state_at(self, key, t: float) -> bool:
        rec = self.records.get(key)
        if rec is None:
            rec = self._materialize(key)
        if t < rec[_LAST]:
            raise TimeRegressionError(f"edge {key!r}: query at {t} after {rec[_LAST]}")
        rec[_LAST] = t
        if self.keep_history:
            self._step_through(key, rec, t)
        elif t >= rec[_NEXT]:
            i = rec[_DRAW]
            rec[_STATE] = _rng.uniform(rec[_BASE], i) < self.config.p
            rec[_NEXT] = t + _rng.exponential(rec[_BASE], i + 1, self.config.mu)
            rec[_DRAW] = i + 2
        return rec[_STATE]

    def _step_through(self, key, rec, t: float) -> None:
        log = self.history[key]
        while rec[_NEXT] <= t:
            i = rec[_DRAW]
            rec[_STATE] = _rng.uniform(rec[_BASE], i) < self.config.p
            log.append((rec[_NEXT], rec[_STATE]))
            rec[_NEXT] = rec[_NEXT] + _rng.exponential(rec[_BASE], i + 1, self.config.mu)
            rec[_DRAW] = i + 2

    def ever_open(self, key, s: float, t: float) -> bool:
        """Whether the edge is open at some time in ``[s, t]`` (history mode only).

        ``t`` must not precede the edge's last query; ``s`` may lie in the past.
        """
        if not self.keep_history:
            raise RuntimeError("ever_open needs an Environment built with keep_history=True")
        self.state_at(key, t)
        log = self.history[key]
        for j, (r, state) in enumerate(log):
            end = log[j + 1][0] if j + 1 < len(log) else math.inf
            if state and r <= t and end >= s:
                return True
        return False

    def next_refresh(self, key) -> float:
        return self.record(key)[_NEXT]

    def open_history(self, key, s: float, t: float) -> list[tuple[tuple[float, float], bool]]:
        """Partition of ``[s, t]`` into maximal constant-state pieces.

        Refreshes inside the window are materialized one by one, so the count
        of state changes reflects the underlying Poisson process.
        """
        if s > t:
            raise ValueError("need s <= t")
        self.state_at(key, s)
        rec = self.records[key]
        cfg = self.config
        pieces = []
        lo, state = s, rec[_STATE]
        while rec[_NEXT] <= t:
            r = rec[_NEXT]
            i = rec[_DRAW]
            new = _rng.uniform(rec[_BASE], i) < cfg.p
            rec[_NEXT] = r + _rng.exponential(rec[_BASE], i + 1, cfg.mu)
            rec[_DRAW] = i + 2
            rec[_STATE] = new
            if self.keep_history:
                self.history[key].append((r, new))
            if new != state:
                pieces.append(((lo, r), state))
                lo, state = r, new
        pieces.append(((lo, t), state))
        rec[_LAST] = t
        return pieces

    def refresh_count(self, key, s: float, t: float) -> int:
        """Number of refreshes in ``(s, t]``, materializing them in order."""
        self.state_at(key, s)
        rec = self.records[key]
        n = 0
        while rec[_NEXT] <= t:
            i = rec[_DRAW]
            rec[_STATE] = _rng.uniform(rec[_BASE], i) < self.config.p
            if self.keep_history:
                self.history[key].append((rec[_NEXT], rec[_STATE]))
            rec[_NEXT] = rec[_NEXT] + _rng.exponential(rec[_BASE], i + 1, self.config.mu)
            rec[_DRAW] = i + 2
            n += 1
        rec[_LAST] = t
        return n

    def rollup(self, horizon: float) -> int:
        """Drop records whose state will be resampled before any later query.

        Legal only if every future query is at time >= ``horizon``.  A dropped
        edge has a refresh pending before ``horizon``, so at ``horizon`` its
        state is a fresh Bernoulli(p) and its next refresh is
        ``horizon + Exp(mu)``; re-materialization draws exactly that from a new
        stream epoch.
        """
        if self.keep_history:
            raise RuntimeError("rollup would discard the refresh history")
        stationary = self.config.init is Init.STATIONARY
        explicit = self.config.explicit if self.config.init is Init.EXPLICIT else None
        drop = [k for k, rec in self.records.items() if rec[_NEXT] < horizon]
        for k in drop:
            del self.records[k]
            if not stationary and (explicit is None or k in explicit):
                self._tombstones.add(k)
        if drop:
            self._epoch += 1
            self._pruned_at = horizon
        return len(drop)


def interval_open_probability(p: float, mu: float, delta: float) -> float:
    """P(edge open at some time in a window of length ``delta``), stationary start."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return p + (1.0 - p) * -math.expm1(-mu * delta * p)


class MemoryTracker:
    """Edges attempted since their last refresh, and the reset times.

    ``record_attempt`` must be called with the edge's first refresh time after
    the attempt (what the environment reports right after ``state_at``).
    """

    def __init__(self):
        self.active: set = set()
        self.queue: list = []
        self.reset_times: list[float] = []
        self.occupancy_time: dict[int, float] = {}
        self._t = 0.0
        self._changed = 0.0

    def _set_time(self, t: float) -> None:
        if t < self._t:
            raise TimeRegressionError(f"tracker time {t} before {self._t}")
        self._t = t

    def _bump(self, t: float) -> None:
        n = len(self.active)
        self.occupancy_time[n] = self.occupancy_time.get(n, 0.0) + (t - self._changed)
        self._changed = t

    def advance(self, t: float) -> None:
        """Process every queued refresh at or before ``t``."""
        self._set_time(t)
        q = self.queue
        while q and q[0][0] <= t:
            r, key = heapq.heappop(q)
            self._bump(r)
            self.active.discard(key)
            if not self.active:
                self.reset_times.append(r)

    def record_attempt(self, key, t: float, next_refresh: float) -> float | None:
        """Register an attempt; returns the reset time emitted, if any."""
        n_resets = len(self.reset_times)
        self.advance(t)
        if key not in self.active:
            self._bump(t)
            self.active.add(key)
            heapq.heappush(self.queue, (next_refresh, key))
        return self.reset_times[-1] if len(self.reset_times) > n_resets else None

    def finalize(self, t: float) -> None:
        self.advance(t)
        self._bump(t)

    def gaps(self) -> list[float]:
        out, prev = [], 0.0
        for r in self.reset_times:
            out.append(r - prev)
            prev = r
        return out

    def occupancy_distribution(self) -> dict[int, float]:
        total = sum(self.occupancy_time.values())
        return {k: v / total for k, v in sorted(self.occupancy_time.items())} if total else {}
