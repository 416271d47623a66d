"""Acceptance suite: one test per criterion, one summary line per criterion."""

import math
import time

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from fracdim import (
    CantorSpec,
    RngSeed,
    build_cantor,
    build_interval,
    energy_scan,
    lemma1_bound_check,
    natural_measure,
    sample_fgn,
)
from fracdim.experiments import config_from_dict, dumps_record, run_experiment

pytestmark = pytest.mark.slow

LOG2_LOG3 = math.log(2) / math.log(3)
_RUNS: dict = {}

# every dimension run of the suite; all share master_seed 0
CONFIGS = {
    "fbm-0.3": {"experiment": "fbm-graph-dim", "alpha": 0.3},
    "fbm-0.5": {"experiment": "fbm-graph-dim", "alpha": 0.5},
    "fbm-0.7": {"experiment": "fbm-graph-dim", "alpha": 0.7},
    "cantor": {"experiment": "cantor-graph-dim", "alpha": 0.3},
    "perturbed-weierstrass": {"experiment": "perturbed-graph-dim"},
    "perturbed-cusp": {"experiment": "perturbed-graph-dim", "base_function": {"kind": "cusp", "beta": 0.5}},
    "weierstrass": {"experiment": "weierstrass-dim"},
    "holder-cusp": {"experiment": "holder-bound", "replicates": 1, "base_function": {"kind": "cusp", "beta": 0.8}},
    "holder-linear": {"experiment": "holder-bound", "replicates": 1, "base_function": {"kind": "linear"}},
    "energy": {"experiment": "energy-scan", "alpha": 0.5},
    "square": {"experiment": "fbm-graph-dim", "alpha": 0.5, "replicates": 4, "domain": {"kind": "interval", "d": 2, "resolution": 256}},
}


def run(name):
    """Run (once per session) and cache an experiment record with its runtime."""
    if name not in _RUNS:
        t0 = time.perf_counter()
        rec = run_experiment(config_from_dict({"replicates": 16, "master_seed": 0, **CONFIGS[name]}))
        _RUNS[name] = (rec, time.perf_counter() - t0)
    return _RUNS[name]


def slopes(rec):
    return np.array([r.slope for r in rec.replicates])


# ----------------------------------------------------------------------------


def test_01_fgn_covariance(report):
    n, reps, lags = 256, 10_000, 9
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (0.3, 0.5, 0.7):
        stats = np.empty((reps, lags))
        for r in range(reps):
            x = sample_fgn(n, alpha, RngSeed(1, r))
            stats[r] = [np.mean(x[: n - k] * x[k:]) for k in range(lags)]
        # gamma from the fBm covariance R(s,t) = (s^2a + t^2a - |s-t|^2a) / 2
        gamma = np.array([0.5 * ((k + 1) ** (2 * alpha) - 2 * k ** (2 * alpha) + abs(k - 1) ** (2 * alpha)) for k in range(lags)])
        z = np.abs(stats.mean(axis=0) - gamma) / (stats.std(axis=0, ddof=1) / math.sqrt(reps))
        worst = max(worst, float(z.max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 5 and elapsed < 60
    report(1, ok, f"fGn covariance lags 0-8: max |z| = {worst:.2f} (< 5), {elapsed:.1f}s (< 60s)")
    assert ok


def test_02_brownian_graph(report):
    rec, elapsed = run("fbm-0.5")
    mean = rec.summary["mean"]
    ok = 1.40 <= mean <= 1.60 and elapsed < 120
    report(2, ok, f"alpha=0.5 graph on [0,1], n=2^14, 16 reps: mean slope {mean:.4f} in [1.40, 1.60], {elapsed:.1f}s")
    assert ok


def test_03_hurst_sweep(report):
    parts, ok = [], True
    for alpha in (0.3, 0.5, 0.7):
        mean = run(f"fbm-{alpha}")[0].summary["mean"]
        good = abs(mean - (2 - alpha)) <= 0.1
        ok &= good
        parts.append(f"a={alpha}: {mean:.4f} vs {2 - alpha:.1f}")
    report(3, ok, "Hurst sweep " + "; ".join(parts) + " (+-0.1)")
    assert ok


def test_04_cantor_domain(report):
    rec, _ = run("cantor")
    target = min(LOG2_LOG3 / 0.3, 1 + LOG2_LOG3 - 0.3)
    assert target == pytest.approx(1.33093, abs=1e-5)
    mean = rec.summary["mean"]
    ok = abs(mean - target) <= 0.15
    report(4, ok, f"Cantor(3,{{0,2}}) level 10, alpha=0.3: mean slope {mean:.4f} vs {target:.5f} (+-0.15)")
    assert ok


def test_05_perturbation(report):
    w, _ = run("perturbed-weierstrass")
    c, _ = run("perturbed-cusp")
    mw, mc = w.summary["mean"], c.summary["mean"]
    ok = mw >= 1.60 and mc >= 1.60
    report(5, ok, f"field alpha=0.3 + weierstrass(0.7): {mw:.4f}; + cusp(0.5): {mc:.4f} (both >= 1.60)")
    assert ok


def test_06_random_phase_weierstrass(report):
    rec, _ = run("weierstrass")
    mean = rec.summary["mean"]
    ok = 1.40 <= mean <= 1.60
    report(6, ok, f"random-phase weierstrass alpha=0.5, K=48, 16 draws: mean slope {mean:.4f} in [1.40, 1.60]")
    assert ok


def test_07_holder_upper_bound(report):
    cusp, _ = run("holder-cusp")
    lin, _ = run("holder-linear")
    sc, sl = float(slopes(cusp).max()), float(slopes(lin)[0])
    ok = sc <= 1.30 and 0.95 <= sl <= 1.05
    report(7, ok, f"cusp(0.8) slope {sc:.4f} (<= 1.30); linear slope {sl:.4f} in [0.95, 1.05]")
    assert ok


def test_08_graph_ceiling(report):
    worst, ok = None, True
    for name in CONFIGS:
        rec, _ = run(name)
        ceiling = rec.summary["ceiling"]
        margin = float(ceiling - slopes(rec).max())
        ok &= margin >= 0
        if worst is None or margin < worst[1]:
            worst = (name, margin)
    report(8, ok, f"{len(CONFIGS)} runs below dim K + 1.1; tightest {worst[0]} with margin {worst[1]:.4f}")
    assert ok


def test_09_lemma_bound(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for alpha, s in ((0.5, 1.5), (0.5, 0.5), (0.3, 1.3), (0.7, 0.5)):
        rep = lemma1_bound_check(alpha, s, [0.0, 0.1, 1.0, 10.0], [2.0**-k for k in range(2, 10)], 100_000, RngSeed(9))
        good = abs(rep.trend_slope) <= 0.15 and rep.spread < 10
        ok &= good
        parts.append(f"({alpha},{s}): trend {rep.trend_slope:+.3f} spread {rep.spread:.2f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    report(9, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


def direct_energy(m, s):
    # oracle: each unordered pair once via pdist, doubled
    w = m.weights
    i, j = np.triu_indices(len(w), k=1)
    return 2.0 * float(np.sum(w[i] * w[j] * pdist(m.points) ** -s))


def test_10_energy_criticality(report):
    def cantor(level):
        return natural_measure(build_cantor(CantorSpec(3, (0, 2), level)))

    def interval(level):
        return natural_measure(build_interval(1, 2**level))

    c = {r.s: r for r in energy_scan(cantor, [0.4, 0.9], range(4, 11))}
    u = {r.s: r for r in energy_scan(interval, [0.9, 1.1], range(4, 12))}
    agree = all(
        r.energies[k] == pytest.approx(direct_energy(builder(level), s), rel=1e-9)
        for builder, table, levels in ((cantor, c, range(4, 11)), (interval, u, range(4, 12)))
        for s, r in table.items()
        for k, level in enumerate(levels)
    )
    ok = (
        agree
        and c[0.4].verdict == "stabilizing"
        and c[0.9].verdict == "diverging"
        and u[0.9].verdict == "stabilizing"
        and u[1.1].verdict == "diverging"
    )
    report(
        10,
        ok,
        f"Cantor s=0.4 {c[0.4].verdict}, s=0.9 {c[0.9].verdict}; interval s=0.9 {u[0.9].verdict}, "
        f"s=1.1 {u[1.1].verdict}; direct summation agrees: {agree}",
    )
    assert ok


def test_11_energy_lower_estimate(report):
    rec, _ = run("energy")
    est = rec.details["energy_dimension"]
    ok = rec.config["replicates"] >= 8 and est is not None and 1.35 <= est <= 1.60
    report(11, ok, f"lifted alpha=0.5 measure, {rec.config['replicates']} reps: largest stabilizing s = {est} in [1.35, 1.60]")
    assert ok


def test_12_determinism(report, tmp_path):
    from fracdim.cli import main

    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("experiment: weierstrass-dim\nreplicates: 8\nmaster_seed: 12345\n")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", str(cfg), "--out", str(a)])
    main(["run", str(cfg), "--out", str(b)])
    direct = dumps_record(run_experiment(config_from_dict({"experiment": "weierstrass-dim", "replicates": 8, "master_seed": 12345})))
    ok = a.read_bytes() == b.read_bytes() == direct.encode()
    report(12, ok, f"two runs with identical config and seed: byte-identical JSON ({len(direct)} bytes)")
    assert ok
