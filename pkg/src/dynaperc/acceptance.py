"""Acceptance criteria, one function per criterion.

Each function returns a :class:`CriterionResult`; nothing here asserts, so a
failing criterion is reported rather than hidden.  Experiment-backed criteria
go through :func:`dynaperc.experiments.run` so the whole pipeline is exercised.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic, evolving_set as es, percolation_analysis as perc
from .experiments import ExperimentConfig, run
from .graphs import complete_graph, cycle_graph


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d} {self.name}: {self.detail}"


def _workdir(workdir, name: str) -> Path:
    base = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="dynaperc-"))
    return base / name


def _failed(man) -> list[str]:
    return [f"{a['name']}={a['value']:.4g}" if isinstance(a["value"], float) else f"{a['name']}={a['value']}"
            for a in man.assertions if not a["pass"]]


def analytic_oracles(**_) -> CriterionResult:
    errs = {}
    errs["theta_b2"] = max(abs(analytic.survival_probability(2, p) - (2 * p - 1) / p**2) for p in (0.6, 0.75, 0.9))
    errs["theta_d3"] = abs(analytic.root_cluster_density(3, 0.75) - 26 / 27)
    errs["gw_p1"] = max(abs(analytic.gw_speed(b, 1.0) - (b - 1) / (b + 1)) for b in (2, 3, 4))
    rel = {}
    for b in (2, 3, 4):
        p = 1 / b + 1e-3
        th = analytic.survival_probability(b, p)
        rel[f"theta_b{b}"] = abs(th / analytic.near_critical_theta(b, p) - 1)
        rel[f"speed_b{b}"] = abs(analytic.gw_speed(b, p) / th**2 / analytic.near_critical_speed_ratio(b) - 1)
    ok = max(errs.values()) <= 1e-10 and max(rel.values()) <= 0.05
    detail = f"max exact err {max(errs.values()):.1e}, max near-critical rel err {max(rel.values()):.3f}"
    return CriterionResult(1, "analytic oracles", ok, detail, {"errors": errs, "relative": rel})


def birth_death(seed: int = 1, **_) -> CriterionResult:
    out, ok = {}, True
    for i, mu in enumerate((0.5, 1.0, 2.0)):
        # about 1.1e4 expected cycles
        s = analytic.birth_death_stats(mu, 1.1e4 * math.exp(1 / mu), np.random.default_rng([seed, i]))
        r1 = abs(s.mean_return_time / s.exact_return_time - 1)
        r2 = abs(s.occupancy_mean * mu - 1)
        ok &= r1 <= 0.05 and r2 <= 0.05 and s.n_cycles >= 10**4
        out[mu] = (s.mean_return_time, s.n_cycles, s.occupancy_mean)
    detail = "; ".join(f"mu={mu}: return {v[0]:.3f} ({v[1]} cycles), occupancy mean {v[2]:.3f}" for mu, v in out.items())
    return CriterionResult(2, "birth-death oracle", ok, detail, out)


def reset_times(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = ExperimentConfig.from_dict({
        "kind": "reset-times", "d": 3, "p": [0.5], "mu": [1.0], "horizon": 5000.0, "n_runs": 40,
        "seed": seed, "workers": workers, "assertions": {"gap_slack": 1.05, "cdf_points": 5},
    })
    man = run(cfg, _workdir(workdir, "c3_reset"))
    c = man.cells[0]
    detail = f"mean gap {c['mean_gap']:.4f} (limit {1.05 * math.e:.4f}, {c['n_gaps']} gaps)"
    if not man.passed:
        detail += "; failed " + ", ".join(_failed(man))
    return CriterionResult(3, "reset times", man.passed, detail, man.to_dict())


def evolving_sets(seed: int = 1, workdir=None, workers: int = 1, **_) -> CriterionResult:
    g2 = complete_graph(2)
    k = es.step_kernel(g2, es.PiecewiseEnvironment.constant([(0, 1)]))
    law = es.evolving_set_law(k, {0})
    a = (1 - math.exp(-2)) / 2
    law_err = max(abs(law.prob(set()) - a), abs(law.prob({0}) - math.exp(-2)), abs(law.prob({0, 1}) - a))
    rng = np.random.default_rng([seed, 4])
    mart = 0.0
    for g in (g2, cycle_graph(4), complete_graph(4)):
        for _ in range(50):
            kk = es.step_kernel(g, es.random_piecewise_environment(g, rng))
            for S in es.proper_subsets(g.n):
                mart = max(mart, abs(es.evolving_set_law(kk, S).mean(len) - len(S)))
    cfg = ExperimentConfig.from_dict({"kind": "evolving-set-checks", "graphs": ["K2", "C4", "K4"], "n_envs": 500,
                                      "seed": seed, "workers": workers})
    man = run(cfg, _workdir(workdir, "c4_evolving"))
    z = df_key_uniformity(seed)
    ok = law_err <= 1e-9 and mart <= 1e-12 and man.passed and z["max_z"] <= 3
    detail = (f"K2 law err {law_err:.1e}, martingale err {mart:.1e}, supermartingale/phi sweep "
              f"{'ok' if man.passed else 'FAILED'}, DF uniformity max z {z['max_z']:.2f}")
    return CriterionResult(4, "evolving-set exact suite", ok, detail, {"df": z})


def df_key_uniformity(seed: int = 1, n_paths: int = 10**5, steps: int = 5) -> dict:
    """Pooled chi-square of X_n against uniform on S_n, given the set history.

    Histories are grouped exactly; the statistic per step ``n`` is turned into
    a z-score ``(chi2 - dof) / sqrt(2 dof)``.
    """
    out = {}
    worst = 0.0
    for gi, g in enumerate((complete_graph(2), cycle_graph(4))):
        rng = np.random.default_rng([seed, 5, gi])
        kernels = [es.step_kernel(g, es.random_piecewise_environment(g, rng)) for _ in range(steps)]
        xs, masks = es.df_paths(kernels, 0, n_paths, rng)
        for n in range(1, steps + 1):
            hist = {}
            for i, key in enumerate(map(tuple, masks[:, : n + 1].tolist())):
                hist.setdefault(key, []).append(xs[i, n])
            chi2, dof = 0.0, 0
            for key, ys in hist.items():
                members = [v for v in range(g.n) if key[-1] >> v & 1]
                if len(members) < 2 or len(ys) < 20:
                    continue
                counts = np.array([ys.count(v) for v in members], dtype=float)
                exp = len(ys) / len(members)
                chi2 += float(((counts - exp) ** 2 / exp).sum())
                dof += len(members) - 1
            zval = (chi2 - dof) / math.sqrt(2 * dof) if dof else 0.0
            out[f"{g.name}_n{n}"] = (chi2, dof, zval)
            worst = max(worst, zval)
    out["max_z"] = worst
    return out


def _speed_result(number: int, name: str, cfg: dict, workdir, tag: str, extra=None) -> CriterionResult:
    man = run(ExperimentConfig.from_dict(cfg), _workdir(workdir, tag))
    cells = ", ".join(f"mu={c['mu']:g}: {c['estimate']:.5f}±{c['stderr']:.5f}" for c in man.cells)
    fits = "; ".join(f"{k} exponent {v['mu_exponent']:.3f}" for k, v in man.fits.items())
    detail = cells + (f"; {fits}" if fits else "")
    if extra:
        detail += "; " + extra(man)
    if not man.passed:
        detail += "; failed " + ", ".join(_failed(man))
    return CriterionResult(number, name, man.passed, detail, man.to_dict())


def mu_infinity_anchor(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = {"kind": "speed-sweep", "d": 3, "p": [0.7], "mu": [256.0], "horizon": 1000.0, "n_runs": 200,
           "seed": seed, "workers": workers, "assertions": {"target": [0.7 / 3, 0.10]}}
    return _speed_result(5, "mu to infinity anchor", cfg, workdir, "c5_anchor")


def subcritical_scaling(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = {"kind": "speed-sweep", "d": 3, "p": [0.3], "mu": [0.01, 0.02, 0.05, 0.1],
           "horizon": {"min": 0.0, "refreshes": 1000.0}, "n_runs": 200, "seed": seed, "workers": workers,
           "assertions": {"exponent_window": [0.85, 1.15], "ratio_over_mu_max": 2.0}}
    return _speed_result(6, "subcritical scaling", cfg, workdir, "c6_subcritical",
                         lambda m: "v/mu " + ", ".join(f"{c['estimate'] / c['mu']:.3f}" for c in m.cells))


def supercritical_flatness(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = {"kind": "speed-sweep", "d": 3, "p": [0.7], "mu": [0.01, 0.1, 1.0],
           "horizon": {"min": 1000.0, "refreshes": 20.0}, "n_runs": 200, "seed": seed, "workers": workers,
           "assertions": {"min_speed": 0.05, "max_min_ratio": 2.5, "lower_bounds": True}}
    return _speed_result(7, "supercritical flatness", cfg, workdir, "c7_supercritical")


def critical_scaling(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = {"kind": "critical-exponent", "d": 3, "p": [0.5], "mu": [1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
           "horizon": {"min": 1e4, "refreshes": 100.0}, "n_runs": 100, "seed": seed, "workers": workers,
           "assertions": {"exponent_window": [0.45, 1.05], "envelope_single_c": 2.0}}
    return _speed_result(8, "critical scaling", cfg, workdir, "c8_critical",
                         lambda m: f"C {m.fits['p=0.5']['envelope_C']:.4f}")


def one_arm(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = ExperimentConfig.from_dict({
        "kind": "one-arm", "d": 3, "radii": [8, 11, 16, 23, 32, 45, 64, 91, 128], "n_samples": 10**6,
        "seed": seed, "workers": workers, "assertions": {"exponent_window": [-1.15, -0.85]}})
    man = run(cfg, _workdir(workdir, "c9_one_arm"))
    f = man.fits
    detail = f"slope {f['r_exponent']:.4f} ± {f['stderr']:.4f} (window [-1.15, -0.85]), C {f['C']:.3f}"
    return CriterionResult(9, "one-arm exponent", man.passed, detail, man.to_dict())


def subcritical_tails(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = ExperimentConfig.from_dict({
        "kind": "cluster-tails", "d": 3, "p": [0.3], "radii": list(range(5, 41)), "n_particles": 200_000,
        "seed": seed, "workers": workers, "assertions": {"r2_min": 0.98}})
    man = run(cfg, _workdir(workdir, "c10_tails"))
    f = man.fits
    detail = f"log slope {f['log_slope']:.4f}, R^2 {f['r2']:.6f}, P(R>=40) {man.cells[-1]['estimate']:.3e}"
    return CriterionResult(10, "subcritical tails", man.passed, detail, man.to_dict())


def trifurcation(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    cfg = ExperimentConfig.from_dict({
        "kind": "trifurcation", "d": 3, "p": [0.75], "R": [64], "n_samples": 10**5, "n_configs": 10**4,
        "R_bk": 32, "S_radius": 4, "seed": seed, "workers": workers})
    man = run(cfg, _workdir(workdir, "c11_trifurcation"))
    c = man.cells[0]
    detail = f"estimate {c['estimate']:.4f}±{c['stderr']:.4f} vs bound {c['bound']:.4f}"
    bk = [a for a in man.assertions if a["name"] == "burton_keane"][0]
    detail += f"; Burton-Keane failures {bk['value']} of {bk['n_configs']}"
    return CriterionResult(11, "trifurcation bound", man.passed, detail, man.to_dict())


def initial_configuration(seed: int = 1, workers: int = 1, workdir=None, **_) -> CriterionResult:
    base = {"kind": "speed-sweep", "d": 3, "p": [0.7], "mu": [0.1], "horizon": 2e4, "n_runs": 200,
            "workers": workers}
    est = {}
    for i, init in enumerate(("stationary", "all_closed")):
        man = run(ExperimentConfig.from_dict({**base, "init": init, "seed": seed * 1000 + i}),
                  _workdir(workdir, f"c12_{init}"))
        est[init] = (man.cells[0]["estimate"], man.cells[0]["stderr"])
    (a, sa), (b, sb) = est["stationary"], est["all_closed"]
    comb = math.hypot(sa, sb)
    ok = abs(a - b) <= 2 * comb
    detail = f"stationary {a:.5f}±{sa:.5f}, all-closed {b:.5f}±{sb:.5f}, diff {abs(a - b) / comb:.2f} combined stderr"
    return CriterionResult(12, "initial-configuration irrelevance", ok, detail, est)


def determinism(seed: int = 1, workdir=None, **_) -> CriterionResult:
    bodies = {}
    for w in (1, 3):
        cfg = ExperimentConfig.from_dict({
            "kind": "speed-sweep", "d": 3, "p": [0.7], "mu": [0.1, 1.0], "horizon": 500.0, "n_runs": 24,
            "seed": seed, "workers": w})
        out = _workdir(workdir, f"c13_w{w}")
        man = run(cfg, out)
        bodies[w] = {f: (out / f).read_text() for f in man.files}
    ok = bodies[1] == bodies[3]
    detail = f"{len(bodies[1])} CSV files {'identical' if ok else 'DIFFER'} for 1 vs 3 workers"
    return CriterionResult(13, "determinism", ok, detail)


CRITERIA = {
    1: analytic_oracles, 2: birth_death, 3: reset_times, 4: evolving_sets, 5: mu_infinity_anchor,
    6: subcritical_scaling, 7: supercritical_flatness, 8: critical_scaling, 9: one_arm,
    10: subcritical_tails, 11: trifurcation, 12: initial_configuration, 13: determinism,
}


def run_all(only=None, workdir=None, seed: int = 1, workers: int = 1) -> list[CriterionResult]:
    out = []
    for n, fn in CRITERIA.items():
        if only and n not in only:
            continue
        res = fn(seed=seed, workers=workers, workdir=workdir)
        print(res.line(), flush=True)
        out.append(res)
    return out
