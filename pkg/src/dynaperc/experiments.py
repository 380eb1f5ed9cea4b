"""Config-driven experiment runner: sweeps, worker pool, CSV/manifest output.

Every stochastic task draws its seeds from ``(config seed, task key)`` only, so
results are bit-identical for any worker count.  Each CSV row carries the
seed, a hash of the result-relevant config and the package version.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import analytic, evolving_set, percolation_analysis as perc
from .dyn_env import EnvConfig, Environment, Init, MemoryTracker
from .graphs import RegularTree, complete_graph, cycle_graph, tree_ball, tree_cheeger
from .walker import fit_power_law, replica_seeds, run_walk, summarize

KINDS = (
    "speed-sweep", "critical-exponent", "reset-times", "evolving-set-checks",
    "one-arm", "cluster-tails", "trifurcation", "analytic-table", "acceptance",
)

DEFAULTS: dict = {
    "d": 3,
    "p": [0.3],
    "mu": [0.01, 0.02, 0.05, 0.1],
    "init": "stationary",
    "horizon": {"min": 1000.0, "refreshes": 20.0},
    "n_runs": 200,
    "seed": 1,
    "workers": 1,
    "out": "results",
    "assertions": {},
}

# keys that cannot change any estimate, left out of the config hash
_UNHASHED = ("workers", "out")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        return self.params.get(key, default)

    @property
    def seed(self) -> int:
        return int(self.params["seed"])

    @property
    def workers(self) -> int:
        return int(self.params["workers"])

    @classmethod
    def from_dict(cls, raw: dict, kind: str | None = None) -> "ExperimentConfig":
        raw = dict(raw)
        kind = kind or raw.pop("kind", None)
        raw.pop("kind", None)
        if kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
        params = {**DEFAULTS, **raw}
        if kind == "critical-exponent" and "p" not in raw:
            params["p"] = [1.0 / (params["d"] - 1)]
        cfg = cls(kind, params)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, kind: str | None = None) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if kind and raw.get("kind") not in (None, kind):
            raise ConfigError(f"config kind {raw.get('kind')!r} does not match {kind!r}")
        return cls.from_dict(raw, kind)

    def validate(self) -> None:
        p = self.params
        if int(p["d"]) < 3:
            raise ConfigError("d must be >= 3")
        for key in ("p", "mu"):
            vals = p[key]
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"{key} must be a nonempty list")
            if any(not isinstance(v, (int, float)) or v <= 0 for v in vals):
                raise ConfigError(f"{key} values must be positive")
        if any(v > 1 for v in p["p"]):
            raise ConfigError("p values must lie in (0, 1]")
        if int(p["n_runs"]) < 2:
            raise ConfigError("n_runs must be >= 2")
        if int(p["workers"]) < 1:
            raise ConfigError("workers must be >= 1")
        try:
            Init(p["init"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        h = p["horizon"]
        if not (isinstance(h, (int, float)) and h > 0) and not (
                isinstance(h, dict) and set(h) <= {"min", "refreshes"}):
            raise ConfigError("horizon must be a positive number or {min, refreshes}")

    def horizon_for(self, mu: float) -> float:
        h = self.params["horizon"]
        if isinstance(h, (int, float)):
            return float(h)
        return max(float(h.get("min", 1000.0)), float(h.get("refreshes", 20.0)) / mu)

    def hashed(self) -> dict:
        return {"kind": self.kind, **{k: v for k, v in self.params.items() if k not in _UNHASHED}}

    def config_hash(self) -> str:
        blob = json.dumps(self.hashed(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


# ---------------------------------------------------------------- workers


def _speed_task(args) -> list[float]:
    d, p, mu, init, horizon, seed, cell, reps = args
    g = RegularTree(d)
    out = []
    for r in reps:
        env_seed, walk_rng = replica_seeds(seed, cell, r)
        env = Environment(EnvConfig(p, mu, init, env_seed))
        roll = max(1000.0, 20.0 / mu) if horizon > 5e4 else None
        traj = run_walk(g, env, horizon, None, walk_rng, record=False, rollup_every=roll)
        out.append(traj.final_dist / horizon)
    return out


def _reset_task(args) -> dict:
    d, p, mu, horizon, seed, cell, reps = args
    g = RegularTree(d)
    out = []
    for r in reps:
        env_seed, walk_rng = replica_seeds(seed, cell, r)
        env = Environment(EnvConfig(p, mu, Init.STATIONARY, env_seed))
        tracker = MemoryTracker()
        run_walk(g, env, horizon, None, walk_rng, tracker=tracker, record=False)
        out.append({"gaps": tracker.gaps(), "occupancy": tracker.occupancy_distribution()})
    return out


def _one_arm_task(args):
    d, p, radii, n, seed, chunk = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11, chunk]))
    return perc.one_arm_curve(d, radii, n, rng, p=p)


def _pool_map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _chunks(n: int, size: int) -> list[range]:
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


# ---------------------------------------------------------------- output


@dataclass
class RunManifest:
    config: dict
    version: str
    config_hash: str
    cells: list
    fits: dict
    assertions: list
    files: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)

    def to_dict(self) -> dict:
        return {
            "config": self.config, "version": self.version, "config_hash": self.config_hash,
            "cells": self.cells, "fits": self.fits, "assertions": self.assertions,
            "files": self.files, "wall_time": self.wall_time, "passed": self.passed,
        }


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(rows: list[dict], cfg: ExperimentConfig) -> str:
    if not rows:
        return ""
    stamp = {"seed": cfg.seed, "config_hash": cfg.config_hash(), "version": __version__}
    cols = list(rows[0]) + list(stamp)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt({**row, **stamp}[c]) for c in cols])
    return buf.getvalue()


def _write(out: Path, name: str, rows: list[dict], cfg: ExperimentConfig, files: list) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(csv_text(rows, cfg))
    files.append(name)


def _check(name: str, value, passed: bool, **limits) -> dict:
    return {"name": name, "value": value, "pass": bool(passed), **limits}


# ---------------------------------------------------------------- kinds


def _speed_cells(cfg: ExperimentConfig, out: Path, files: list) -> list[dict]:
    d = int(cfg["d"])
    grid = [(p, mu) for p in cfg["p"] for mu in cfg["mu"]]
    n = int(cfg["n_runs"])
    chunk = max(1, math.ceil(n / (4 * cfg.workers)))
    tasks, owner = [], []
    for ci, (p, mu) in enumerate(grid):
        for reps in _chunks(n, chunk):
            tasks.append((d, float(p), float(mu), cfg["init"], cfg.horizon_for(mu), cfg.seed, ci, list(reps)))
            owner.append(ci)
    t0 = time.perf_counter()
    results = _pool_map(_speed_task, tasks, cfg.workers)
    per_cell: dict[int, list[float]] = {}
    for ci, vals in zip(owner, results):
        per_cell.setdefault(ci, []).extend(vals)
    wall = (time.perf_counter() - t0) / max(len(grid), 1)
    cells = []
    for ci, (p, mu) in enumerate(grid):
        est = summarize(per_cell[ci], cfg.horizon_for(mu), {"d": d, "p": p, "mu": mu})
        rows = [{"replica": i, "p": p, "mu": mu, "horizon": est.horizon, "speed": v}
                for i, v in enumerate(est.values)]
        _write(out, f"cell_p{p}_mu{mu}.csv", rows, cfg, files)
        cells.append({"p": p, "mu": mu, "horizon": est.horizon, "estimate": est.mean,
                      "stderr": est.stderr, "n": est.n_runs, "second_moment": est.second_moment,
                      "wall_time": wall})
    return cells


def _speed_assertions(cfg: ExperimentConfig, cells: list[dict]) -> tuple[dict, list]:
    a = cfg["assertions"]
    d = int(cfg["d"])
    fits, checks = {}, []
    for p in cfg["p"]:
        cs = [c for c in cells if c["p"] == p]
        ok_fit = len(cs) >= 3 and all(c["estimate"] > 0 for c in cs)
        if ok_fit:
            pts = [(c["mu"], c["estimate"], c["stderr"]) for c in cs]
            slope, icpt, se = fit_power_law(pts)
            fits[f"p={p}"] = {"mu_exponent": slope, "intercept": icpt, "stderr": se,
                              "ci95": [slope - 1.96 * se, slope + 1.96 * se]}
        if "exponent_window" in a:
            lo, hi = a["exponent_window"]
            val = fits.get(f"p={p}", {}).get("mu_exponent", float("nan"))
            checks.append(_check(f"mu_exponent[p={p}]", val, lo <= val <= hi, window=[lo, hi]))
        if "ratio_over_mu_max" in a:
            r = [c["estimate"] / c["mu"] for c in cs]
            val = max(r) / min(r) if min(r) > 0 else float("inf")
            checks.append(_check(f"max_min_speed_over_mu[p={p}]", val, val <= a["ratio_over_mu_max"],
                                 limit=a["ratio_over_mu_max"]))
        if "max_min_ratio" in a:
            v = [c["estimate"] for c in cs]
            val = max(v) / min(v) if min(v) > 0 else float("inf")
            checks.append(_check(f"max_min_speed[p={p}]", val, val <= a["max_min_ratio"],
                                 limit=a["max_min_ratio"]))
        if "min_speed" in a:
            val = min(c["estimate"] for c in cs)
            checks.append(_check(f"min_speed[p={p}]", val, val >= a["min_speed"], limit=a["min_speed"]))
        if a.get("lower_bounds"):
            worst = min(c["estimate"] - analytic.paper_bounds(d, p, c["mu"], tree_cheeger(d)).lower for c in cs)
            checks.append(_check(f"above_lower_bounds[p={p}]", worst, worst >= 0))
        if "envelope_single_c" in a:
            cal = max(cs, key=lambda c: c["mu"])
            C = cal["estimate"] / analytic.critical_envelope(cal["mu"])
            k = float(a["envelope_single_c"])
            excess = max(c["estimate"] - k * c["stderr"] - C * analytic.critical_envelope(c["mu"]) for c in cs)
            fits[f"p={p}"]["envelope_C"] = C
            checks.append(_check(f"envelope_single_C[p={p}]", excess, excess <= 0, C=C, sigmas=k))
        if "target" in a:
            tgt, rel = a["target"]
            for c in cs:
                val = c["estimate"]
                checks.append(_check(f"target[p={p},mu={c['mu']}]", val, abs(val - tgt) <= rel * tgt,
                                     target=tgt, rel_tol=rel))
    if a.get("second_moment_max"):
        worst = max(c["second_moment"] for c in cells)
        checks.append(_check("second_moment", worst, worst <= a["second_moment_max"], limit=a["second_moment_max"]))
    return fits, checks


def _run_speed(cfg, out, files):
    cells = _speed_cells(cfg, out, files)
    rows = [{k: c[k] for k in ("p", "mu", "horizon", "estimate", "stderr", "n")} for c in cells]
    if cfg.kind == "critical-exponent":
        for r in rows:
            r["envelope"] = analytic.critical_envelope(r["mu"]) if r["mu"] < 1 else float("nan")
    _write(out, "summary.csv", rows, cfg, files)
    fits, checks = _speed_assertions(cfg, cells)
    return cells, fits, checks


def _run_reset(cfg, out, files):
    d = int(cfg["d"])
    n = int(cfg["n_runs"])
    cells, checks = [], []
    a = cfg["assertions"]
    kmax = int(a.get("cdf_points", 5))
    grid = [(p, mu) for p in cfg["p"] for mu in cfg["mu"]]
    tasks, owner = [], []
    chunk = max(1, math.ceil(n / (4 * cfg.workers)))
    for ci, (p, mu) in enumerate(grid):
        for reps in _chunks(n, chunk):
            tasks.append((d, float(p), float(mu), cfg.horizon_for(mu), cfg.seed, ci, list(reps)))
            owner.append(ci)
    results = _pool_map(_reset_task, tasks, cfg.workers)
    per: dict[int, list] = {}
    for ci, res in zip(owner, results):
        per.setdefault(ci, []).extend(res)
    for ci, (p, mu) in enumerate(grid):
        gaps = np.concatenate([np.asarray(r["gaps"]) for r in per[ci]])
        F = np.array([[sum(v for k, v in r["occupancy"].items() if k <= j) for j in range(kmax + 1)]
                      for r in per[ci]])
        Fm, Fs = F.mean(axis=0), F.std(axis=0, ddof=1) / math.sqrt(len(F))
        pois = np.cumsum([analytic.poisson_pmf(1 / mu, kmax)[k] for k in range(kmax + 1)])
        bound = math.exp(1 / mu)
        cell = {"p": p, "mu": mu, "mean_gap": float(gaps.mean()),
                "stderr": float(gaps.std(ddof=1) / math.sqrt(gaps.size)), "n_gaps": int(gaps.size),
                "bound": bound}
        cells.append(cell)
        rows = [{"k": j, "memory_cdf": float(Fm[j]), "stderr": float(Fs[j]), "birth_death_cdf": float(pois[j])}
                for j in range(kmax + 1)]
        _write(out, f"occupancy_p{p}_mu{mu}.csv", rows, cfg, files)
        slack = float(a.get("gap_slack", 1.05))
        checks.append(_check(f"mean_gap[p={p},mu={mu}]", cell["mean_gap"], cell["mean_gap"] <= bound * slack,
                             limit=bound * slack))
        worst = float(np.min(Fm + 2 * Fs - pois))
        checks.append(_check(f"cdf_domination[p={p},mu={mu}]", worst, worst >= 0))
    _write(out, "summary.csv", cells, cfg, files)
    return cells, {}, checks


_NAMED_GRAPHS = {"K2": lambda: complete_graph(2), "C4": lambda: cycle_graph(4), "K4": lambda: complete_graph(4)}


def _run_evolving(cfg, out, files):
    names = cfg.get("graphs", ["K2", "C4", "K4"])
    n_envs = int(cfg.get("n_envs", 500))
    rows, cells = [], []
    for gi, name in enumerate(names):
        if name not in _NAMED_GRAPHS:
            raise ConfigError(f"unknown graph {name!r}")
        g = _NAMED_GRAPHS[name]()
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 23, gi]))
        r = evolving_set.check_rows(g, n_envs, rng)
        rows.extend(r)
        cells.append({"graph": name, "checks": len(r), "supermartingale_pass": all(x["pass"] for x in r),
                      "phi_pass": all(x["phi_pass"] for x in r)})
    _write(out, "checks.csv", rows, cfg, files)
    fits = {}
    growth = cfg.get("growth", {"depth": 3, "steps": 20, "paths": 5000})
    if growth:
        ball, _ = tree_ball(int(cfg["d"]), int(growth.get("depth", 3)))
        grows = evolving_set.growth_statistic(
            ball, int(growth.get("steps", 20)), int(growth.get("paths", 5000)),
            np.random.default_rng(np.random.SeedSequence([cfg.seed, 29])),
            p_open=float(growth.get("p_open", 0.9)), c0=float(growth.get("c0", 1.0)),
            c1=float(growth.get("c1", 0.1)))
        _write(out, "growth.csv", grows, cfg, files)
        # reported only; no assertion
        fits["growth_min_frequency"] = min(r["frequency"] for r in grows)
    checks = [_check("supermartingale_inequality", sum(not x["pass"] for x in rows), all(x["pass"] for x in rows)),
              _check("phi_lower_bound", sum(not x["phi_pass"] for x in rows), all(x["phi_pass"] for x in rows))]
    return cells, fits, checks


def _run_one_arm(cfg, out, files):
    d = int(cfg["d"])
    radii = [int(r) for r in cfg.get("radii", [8, 11, 16, 23, 32, 45, 64, 91, 128])]
    n = int(cfg.get("n_samples", 10**6))
    p = float(cfg.get("p_arm", 1.0 / (d - 1)))
    size = 250_000
    tasks = [(d, p, radii, len(c), cfg.seed, i) for i, c in enumerate(_chunks(n, size))]
    parts = _pool_map(_one_arm_task, tasks, cfg.workers)
    counts = np.zeros(len(radii))
    for t, part in zip(tasks, parts):
        counts += np.array([ph for _, ph, _ in part]) * t[3]
    curve = []
    for r, c in zip(radii, counts):
        ph = float(c / n)
        curve.append({"r": r, "estimate": ph, "stderr": math.sqrt(ph * (1 - ph) / n), "n": n})
    fit_pts = [(c["r"], c["estimate"], c["stderr"]) for c in curve if c["estimate"] > 0]
    slope, icpt, se = fit_power_law(fit_pts)
    C = float(np.exp(np.mean([math.log(c["estimate"] * c["r"]) for c in curve if c["estimate"] > 0])))
    for c in curve:
        c["reference_C_over_r"] = C / c["r"]
    _write(out, "one_arm.csv", curve, cfg, files)
    fits = {"r_exponent": slope, "intercept": icpt, "stderr": se, "C": C,
            "ci95": [slope - 1.96 * se, slope + 1.96 * se]}
    checks = []
    if "exponent_window" in cfg["assertions"]:
        lo, hi = cfg["assertions"]["exponent_window"]
        checks.append(_check("r_exponent", slope, lo <= slope <= hi, window=[lo, hi]))
    return curve, fits, checks


def _run_tails(cfg, out, files):
    d = int(cfg["d"])
    p = float(cfg["p"][0])
    radii = [int(r) for r in cfg.get("radii", list(range(5, 41)))]
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 31]))
    curve = perc.tail_curve_splitting(d, p, radii, int(cfg.get("n_particles", 200_000)), rng)
    rows = [{"r": r, "estimate": e, "stderr": s, "n": int(cfg.get("n_particles", 200_000))} for r, e, s in curve]
    _write(out, "tails.csv", rows, cfg, files)
    slope, icpt, r2 = perc.log_linear_fit([(r, e) for r, e, _ in curve])
    fits = {"log_slope": slope, "intercept": icpt, "r2": r2}
    checks = []
    if "r2_min" in cfg["assertions"]:
        checks.append(_check("log_linear_r2", r2, r2 >= cfg["assertions"]["r2_min"], limit=cfg["assertions"]["r2_min"]))
    if "max_slope" in cfg["assertions"]:
        checks.append(_check("log_slope", slope, slope <= cfg["assertions"]["max_slope"]))
    return rows, fits, checks


def _run_trifurcation(cfg, out, files):
    d = int(cfg["d"])
    p = float(cfg["p"][0])
    Rs = [int(r) for r in cfg.get("R", [64])]
    n = int(cfg.get("n_samples", 10**5))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 41]))
    ind = perc.trifurcation_indicators(d, p, Rs, n, rng)
    th = analytic.survival_probability(d - 1, p)
    bound = (p * th) ** 3
    rows, checks = [], []
    for R in Rs:
        est = float(ind[R].mean())
        se = math.sqrt(est * (1 - est) / n)
        rows.append({"R": R, "estimate": est, "stderr": se, "n": n, "bound": bound})
        checks.append(_check(f"trifurcation_bound[R={R}]", est, est >= bound - 2 * se, bound=bound))
    _write(out, "trifurcation.csv", rows, cfg, files)
    n_cfg = int(cfg.get("n_configs", 10**4))
    if n_cfg:
        R_bk = int(cfg.get("R_bk", 32))
        radius = int(cfg.get("S_radius", 4))
        configs = perc.sample_ball_configs(d, p, radius + 1, R_bk, n_cfg,
                                           np.random.default_rng(np.random.SeedSequence([cfg.seed, 43])))
        S = [v for lvl in perc.ball_codes(d, radius) for v in lvl]
        res = [perc.burton_keane_check(c, S) for c in configs]
        bk_rows = [{"config": i, "trifurcations": k, "boundary": b, "pass": ok} for i, (ok, k, b) in enumerate(res)]
        _write(out, "burton_keane.csv", bk_rows, cfg, files)
        fails = sum(not ok for ok, _, _ in res)
        checks.append(_check("burton_keane", fails, fails == 0, n_configs=n_cfg))
    return rows, {}, checks


def _run_analytic(cfg, out, files):
    d = int(cfg["d"])
    b = d - 1
    rows = []
    phi = tree_cheeger(d)
    for p in cfg["p"]:
        th = analytic.survival_probability(b, p)
        for mu in cfg["mu"]:
            bs = analytic.paper_bounds(d, p, mu, phi)
            rows.append({
                "d": d, "p": p, "mu": mu, "theta_tilde": th, "theta": analytic.root_cluster_density(d, p),
                "gw_speed": analytic.gw_speed(b, p), "tree_lower": bs.tree_lower,
                "general_lower": bs.general_lower,
                "critical_envelope": bs.critical_envelope if bs.critical_envelope is not None else float("nan"),
            })
    _write(out, "analytic.csv", rows, cfg, files)
    checks = []
    if b == 2 and cfg["assertions"].get("closed_form"):
        worst = max(abs(r["theta_tilde"] - max(0.0, (2 * r["p"] - 1) / r["p"] ** 2)) for r in rows)
        checks.append(_check("theta_closed_form", worst, worst <= 1e-10))
    return rows, {}, checks


def _run_acceptance(cfg, out, files):
    from . import acceptance
    only = cfg.get("criteria")
    results = acceptance.run_all(only=only, workdir=out / "work", seed=cfg.seed, workers=cfg.workers)
    rows = [{"criterion": r.number, "name": r.name, "pass": r.passed, "detail": r.detail} for r in results]
    _write(out, "acceptance.csv", rows, cfg, files)
    checks = [_check(f"criterion_{r.number}", r.detail, r.passed) for r in results]
    return rows, {}, checks


_RUNNERS = {
    "speed-sweep": _run_speed, "critical-exponent": _run_speed, "reset-times": _run_reset,
    "evolving-set-checks": _run_evolving, "one-arm": _run_one_arm, "cluster-tails": _run_tails,
    "trifurcation": _run_trifurcation, "analytic-table": _run_analytic, "acceptance": _run_acceptance,
}


def run(cfg: ExperimentConfig, out: str | os.PathLike | None = None) -> RunManifest:
    out = Path(out or cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    t0 = time.perf_counter()
    cells, fits, checks = _RUNNERS[cfg.kind](cfg, out, files)
    man = RunManifest(cfg.to_dict(), __version__, cfg.config_hash(), cells, fits, checks, files,
                      time.perf_counter() - t0)
    (out / "manifest.json").write_text(json.dumps(man.to_dict(), indent=2, default=_json_default) + "\n")
    return man


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(type(o).__name__)


PLOT_STUB = '''"""Plot the tidy CSV written next to this file (x, y, yerr, series)."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "plot_data.csv"
series = defaultdict(list)
with open(path) as fh:
    for row in csv.DictReader(fh):
        series[row["series"]].append((float(row["x"]), float(row["y"]), float(row["yerr"])))
for name, pts in series.items():
    pts.sort()
    xs, ys, es = zip(*pts)
    plt.errorbar(xs, ys, yerr=es, marker="o", label=name)
plt.xscale("log")
plt.yscale("log")
plt.legend()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def emit_plot_data(manifest: RunManifest | dict, out_dir) -> list[Path]:
    """Tidy ``plot_data.csv`` (x, y, yerr, series, extras) and a plotting script stub."""
    man = manifest.to_dict() if isinstance(manifest, RunManifest) else manifest
    cells = man.get("cells") or []
    if not cells:
        raise ValueError("manifest has no cells")
    kind = man["config"]["kind"]
    rows = []
    if kind in ("speed-sweep", "critical-exponent"):
        for c in cells:
            row = {"x": c["mu"], "y": c["estimate"], "yerr": c["stderr"], "series": f"p={c['p']}"}
            if kind == "critical-exponent":
                row["envelope"] = analytic.critical_envelope(c["mu"]) if c["mu"] < 1 else float("nan")
            rows.append(row)
    elif kind == "one-arm":
        C = man["fits"]["C"]
        rows = [{"x": c["r"], "y": c["estimate"], "yerr": c["stderr"], "series": "one-arm",
                 "reference_C_over_r": C / c["r"]} for c in cells]
    elif kind == "cluster-tails":
        rows = [{"x": c["r"], "y": c["estimate"], "yerr": c["stderr"], "series": "tail"} for c in cells]
    elif kind == "reset-times":
        rows = [{"x": c["mu"], "y": c["mean_gap"], "yerr": c["stderr"], "series": f"p={c['p']}"} for c in cells]
    elif kind == "trifurcation":
        rows = [{"x": c["R"], "y": c["estimate"], "yerr": c["stderr"], "series": "trifurcation"} for c in cells]
    else:
        raise ValueError(f"no plot data for kind {kind!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = list(rows[0])
    stamp = {"seed": man["config"]["seed"], "config_hash": man["config_hash"], "version": man["version"]}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols + list(stamp))
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols] + [_fmt(v) for v in stamp.values()])
    data = out / "plot_data.csv"
    data.write_text(buf.getvalue())
    script = out / "plot.py"
    script.write_text(PLOT_STUB)
    return [data, script]
