"""
Seeded Monte Carlo campaigns and their machine-readable records.

Every replicate ``r`` draws from ``RngSeed(master_seed, r)``, so adding
replicates never changes earlier ones and the output is a pure function of
the configuration.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Optional

import numpy as np

from . import dimension as dim
from .domains import CantorSpec, CompactSetModel, build_cantor, build_interval, build_product, natural_measure
from .errors import ConfigError, ParameterError
from .functions import WeierstrassSpec, holder_exponent, holder_test_function, random_phase_weierstrass, weierstrass
from .stochastic import RngSeed, sample_additive_field

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ReplicateResult",
    "ResultRecord",
    "config_from_dict",
    "build_domain",
    "run_experiment",
    "emit_results",
    "render_results",
    "plot_data",
    "dumps_record",
    "load_record",
]

EXPERIMENTS = (
    "fbm-graph-dim",
    "perturbed-graph-dim",
    "weierstrass-dim",
    "cantor-graph-dim",
    "lemma-check",
    "holder-bound",
    "energy-scan",
)

DIRECTION = {
    "fbm-graph-dim": "two-sided",
    "cantor-graph-dim": "two-sided",
    "weierstrass-dim": "two-sided",
    "perturbed-graph-dim": "lower",
    "holder-bound": "upper",
    "energy-scan": "two-sided",
    "lemma-check": "two-sided",
}

CEILING_SLACK = 0.1
INCONCLUSIVE_FRACTION = 0.2

_INTERVAL_1D = {"kind": "interval", "d": 1, "resolution": 2**14}

DEFAULTS: dict = {
    "fbm-graph-dim": {
        "domain": _INTERVAL_1D,
        "alpha": 0.5,
        "base_function": {"kind": "constant"},
        "tolerance_below": 0.1,
        "tolerance_above": 0.1,
    },
    "cantor-graph-dim": {
        "domain": {"kind": "cantor", "base": 3, "digits": [0, 2], "level": 10},
        "alpha": 0.3,
        "base_function": {"kind": "constant"},
        "tolerance_below": 0.15,
        "tolerance_above": 0.15,
    },
    # The C^0.7 perturbation out-oscillates the fBm down to about 2^-8, so
    # the window sits below that on a 2^18 grid.
    "perturbed-graph-dim": {
        "domain": {"kind": "interval", "d": 1, "resolution": 2**18},
        "alpha": 0.3,
        "base_function": {"kind": "weierstrass", "alpha": 0.7},
        "scales": [8, 15],
        "tolerance_below": 0.1,
        "tolerance_above": 0.1,
    },
    "weierstrass-dim": {
        "domain": _INTERVAL_1D,
        "alpha": None,
        "base_function": {"kind": "weierstrass", "alpha": 0.5, "truncation": 48, "phases": "random"},
        "tolerance_below": 0.1,
        "tolerance_above": 0.1,
    },
    "holder-bound": {
        "domain": _INTERVAL_1D,
        "alpha": None,
        "base_function": {"kind": "cusp", "beta": 0.8},
        "tolerance_below": 0.1,
        "tolerance_above": 0.1,
    },
    "energy-scan": {
        "domain": {"kind": "interval", "d": 1, "resolution": 2**12},
        "alpha": 0.5,
        "base_function": {"kind": "constant"},
        "scales": [3, 9],
        "tolerance_below": 0.15,
        "tolerance_above": 0.1,
        "energy": {"levels": [4, 5, 6, 7, 8, 9, 10, 11, 12], "s_min": 1.2, "s_max": 1.8, "s_step": 0.025},
    },
    "lemma-check": {
        "domain": _INTERVAL_1D,
        "alpha": 0.5,
        "base_function": {"kind": "constant"},
        "replicates": 1,
        "tolerance_below": 0.15,
        "tolerance_above": 0.15,
        "lemma": {
            "s": 1.5,
            "lambdas": [0.0, 0.1, 1.0, 10.0],
            "h_exponents": [2, 3, 4, 5, 6, 7, 8, 9],
            "samples": 100_000,
            "max_spread": 10.0,
        },
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    domain: dict
    alpha: Optional[float]
    base_function: dict
    replicates: int = 16
    master_seed: int = 0
    scales: Optional[list] = None
    field_resolution: Optional[int] = None
    tolerance_below: float = 0.1
    tolerance_above: float = 0.1
    energy: Optional[dict] = None
    lemma: Optional[dict] = None
    output: Optional[str] = None
    format: str = "json"
    workers: int = 4

    @property
    def direction(self) -> str:
        return DIRECTION[self.experiment]

    def scale_window(self, d: int) -> tuple:
        if self.scales is not None:
            return int(self.scales[0]), int(self.scales[1])
        return (3, 10) if d == 1 else (2, 7)

    def to_dict(self) -> dict:
        # Where and how results are written does not belong in the echo.
        out = asdict(self)
        for key in ("output", "format", "workers"):
            out.pop(key)
        return out


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _number(data: dict, key: str, path: str, *, kind=float, allow_none=False):
    value = data.get(key)
    if value is None and allow_none:
        return None
    try:
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        if isinstance(value, bool):
            raise ValueError
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}{key}", f"expected {kind.__name__}, got {value!r}") from None


def _check_domain(spec: Any, path: str) -> dict:
    _require(isinstance(spec, dict), path, "expected a mapping")
    kind = spec.get("kind")
    if kind == "interval":
        out = {"kind": "interval", "d": _number(spec, "d", path + ".", kind=int), "resolution": _number(spec, "resolution", path + ".", kind=int)}
        _require(out["d"] >= 1, path + ".d", "must be >= 1")
        _require(out["resolution"] >= 1, path + ".resolution", "must be >= 1")
        return out
    if kind == "cantor":
        digits = spec.get("digits")
        _require(isinstance(digits, list) and digits, path + ".digits", "expected a nonempty list of digits")
        out = {
            "kind": "cantor",
            "base": _number(spec, "base", path + ".", kind=int),
            "digits": [int(x) for x in digits],
            "level": _number(spec, "level", path + ".", kind=int),
        }
        try:
            CantorSpec(out["base"], tuple(out["digits"]), out["level"])
        except ParameterError as exc:
            raise ConfigError(path, str(exc)) from None
        return out
    if kind == "product":
        factors = spec.get("factors")
        _require(isinstance(factors, list) and len(factors) >= 2, path + ".factors", "expected a list of at least two domains")
        return {"kind": "product", "factors": [_check_domain(f, f"{path}.factors[{i}]") for i, f in enumerate(factors)]}
    raise ConfigError(path + ".kind", f"unknown domain kind {kind!r} (interval, cantor, product)")


def build_domain(spec: dict) -> CompactSetModel:
    kind = spec["kind"]
    if kind == "interval":
        return build_interval(spec["d"], spec["resolution"])
    if kind == "cantor":
        return build_cantor(CantorSpec(spec["base"], tuple(spec["digits"]), spec["level"]))
    models = [build_domain(f) for f in spec["factors"]]
    out = models[0]
    for m in models[1:]:
        out = build_product(out, m)
    return out


def _check_function(spec: Any, path: str) -> dict:
    _require(isinstance(spec, dict), path, "expected a mapping")
    kind = spec.get("kind")
    if kind in ("constant", "linear"):
        return {"kind": kind}
    if kind == "cusp":
        beta = _number(spec, "beta", path + ".")
        _require(0 < beta <= 1, path + ".beta", "must lie in (0, 1]")
        return {"kind": "cusp", "beta": beta}
    if kind == "weierstrass":
        a = _number(spec, "alpha", path + ".")
        _require(0 < a < 1, path + ".alpha", "must lie in (0, 1)")
        trunc = _number({"t": spec.get("truncation", 48)}, "t", path + ".truncation", kind=int)
        _require(trunc >= 1, path + ".truncation", "must be >= 1")
        phases = spec.get("phases", "none")
        _require(phases in ("none", "random"), path + ".phases", "expected 'none' or 'random'")
        return {"kind": "weierstrass", "alpha": a, "truncation": trunc, "phases": phases}
    raise ConfigError(path + ".kind", f"unknown function kind {kind!r} (constant, linear, cusp, weierstrass)")


def _function_for(spec: dict, seed: RngSeed) -> Callable:
    kind = spec["kind"]
    if kind == "weierstrass":
        if spec["phases"] == "random":
            ws = random_phase_weierstrass(spec["alpha"], spec["truncation"], seed)
        else:
            ws = WeierstrassSpec(spec["alpha"], spec["truncation"])
        return lambda x: weierstrass(ws, x)
    return lambda x: holder_test_function(kind, x, beta=spec.get("beta"))


def _function_exponent(spec: dict) -> float:
    if spec["kind"] == "weierstrass":
        return spec["alpha"]
    return holder_exponent(spec["kind"], spec.get("beta"))


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("domain", "base_function") else v
    return out


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a parsed configuration mapping; errors name the offending field."""
    _require(isinstance(data, dict), "", "configuration must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        _require(key in known, str(key), "unknown field")
    exp = data.get("experiment")
    _require(exp in EXPERIMENTS, "experiment", f"expected one of {', '.join(EXPERIMENTS)}, got {exp!r}")
    merged = _merge(DEFAULTS[exp], data)

    cfg = ExperimentConfig(
        experiment=exp,
        domain=_check_domain(merged["domain"], "domain"),
        alpha=_number(merged, "alpha", "", allow_none=True),
        base_function=_check_function(merged["base_function"], "base_function"),
        replicates=_number({"replicates": merged.get("replicates", 16)}, "replicates", "", kind=int),
        master_seed=_number({"master_seed": merged.get("master_seed", 0)}, "master_seed", "", kind=int),
        scales=merged.get("scales"),
        field_resolution=_number(merged, "field_resolution", "", kind=int, allow_none=True),
        tolerance_below=_number(merged, "tolerance_below", ""),
        tolerance_above=_number(merged, "tolerance_above", ""),
        energy=merged.get("energy"),
        lemma=merged.get("lemma"),
        output=merged.get("output"),
        format=merged.get("format", "json"),
        workers=_number({"workers": merged.get("workers", 4)}, "workers", "", kind=int),
    )
    _require(cfg.replicates >= 1, "replicates", "must be >= 1")
    _require(0 <= cfg.master_seed < 2**64, "master_seed", "must be a 64-bit unsigned integer")
    _require(cfg.workers >= 1, "workers", "must be >= 1")
    _require(cfg.format in ("json", "csv"), "format", "expected 'json' or 'csv'")
    _require(cfg.tolerance_below >= 0 and cfg.tolerance_above >= 0, "tolerance_below", "tolerances must be nonnegative")
    needs_field = exp in ("fbm-graph-dim", "perturbed-graph-dim", "cantor-graph-dim", "energy-scan", "lemma-check")
    if needs_field or cfg.alpha is not None:
        _require(cfg.alpha is not None and 0 < cfg.alpha < 1, "alpha", "must lie in (0, 1)")
    if cfg.scales is not None:
        sc = cfg.scales
        _require(isinstance(sc, (list, tuple)) and len(sc) == 2 and all(isinstance(v, int) for v in sc), "scales", "expected [min_exp, max_exp]")
        _require(sc[1] - sc[0] >= 3, "scales", "need at least 4 scales")
    if exp == "energy-scan":
        en = cfg.energy
        _require(isinstance(en, dict), "energy", "expected a mapping")
        _require(isinstance(en.get("levels"), list) and len(en["levels"]) >= 3, "energy.levels", "need at least three levels")
        for key in ("s_min", "s_max", "s_step"):
            _number(en, key, "energy.")
        _require(en["s_step"] > 0 and en["s_max"] > en["s_min"] > 0, "energy.s_step", "need 0 < s_min < s_max and s_step > 0")
    if exp == "lemma-check":
        lm = cfg.lemma
        _require(isinstance(lm, dict), "lemma", "expected a mapping")
        s = _number(lm, "s", "lemma.")
        _require(s > 0 and s != 1, "lemma.s", "must be positive and different from 1")
        _require(_number(lm, "samples", "lemma.", kind=int) >= 10_000, "lemma.samples", "need at least 10^4 samples")
    return cfg


# ------------------------------------------------------------------ records


@dataclass
class ReplicateResult:
    index: int
    seed: int
    slope: float
    r2: float
    half_width: float
    intercept: float
    scales: list

    @classmethod
    def from_estimate(cls, index: int, seed: int, est: dim.DimensionEstimate) -> "ReplicateResult":
        return cls(index, seed, est.slope, est.r_squared, est.half_width, est.intercept, [list(p) for p in est.scales_used])


@dataclass
class ResultRecord:
    config: dict
    replicates: list
    theoretical: float
    direction: str
    summary: dict = field(default_factory=dict)
    passed: bool = False
    status: str = "fail"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.replicates:
            raise ParameterError("a result record needs at least one replicate")
        if not self.summary:
            self.summary = summarize(self.replicates)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "replicates": [
                {
                    "index": r.index,
                    "seed": r.seed,
                    "slope": r.slope,
                    "r2": r.r2,
                    "half_width": r.half_width,
                    "intercept": r.intercept,
                    "scales": r.scales,
                }
                for r in self.replicates
            ],
            "summary": self.summary,
            "theoretical": self.theoretical,
            "direction": self.direction,
            "pass": self.passed,
            "status": self.status,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRecord":
        reps = [
            ReplicateResult(r["index"], r["seed"], r["slope"], r["r2"], r["half_width"], r["intercept"], r["scales"])
            for r in data["replicates"]
        ]
        return cls(
            config=data["config"],
            replicates=reps,
            theoretical=data["theoretical"],
            direction=data["direction"],
            summary=data["summary"],
            passed=data["pass"],
            status=data["status"],
            details=data.get("details", {}),
        )


def summarize(replicates: list) -> dict:
    ordered = sorted(replicates, key=lambda r: r.index)
    slopes = np.array([r.slope for r in ordered])
    r2 = np.array([r.r2 for r in ordered])
    return {
        "count": int(slopes.size),
        "mean": float(slopes.mean()),
        "std": float(slopes.std(ddof=1)) if slopes.size > 1 else 0.0,
        "min": float(slopes.min()),
        "max": float(slopes.max()),
        "nonconforming_fraction": float(np.mean(r2 < dim.R2_THRESHOLD)),
    }


def _judge(value: float, theo: float, cfg: ExperimentConfig) -> bool:
    lo, hi = theo - cfg.tolerance_below, theo + cfg.tolerance_above
    if cfg.direction == "lower":
        return value >= lo
    if cfg.direction == "upper":
        return value <= hi
    return lo <= value <= hi


# -------------------------------------------------------------- experiments


def _map_replicates(fn: Callable[[int], Any], count: int, workers: int) -> list:
    if workers <= 1 or count == 1:
        return [fn(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _theoretical(cfg: ExperimentConfig, model: CompactSetModel) -> float:
    if model.reference_dimension is None:
        raise ParameterError("domain has no reference dimension")
    if cfg.experiment == "lemma-check":
        return 0.0
    if cfg.experiment in ("weierstrass-dim", "holder-bound"):
        return dim.theoretical_graph_dimension(model.reference_dimension, _function_exponent(cfg.base_function))
    return dim.theoretical_graph_dimension(model.reference_dimension, cfg.alpha)


def _graph_replicate(cfg: ExperimentConfig, model: CompactSetModel, index: int) -> ReplicateResult:
    seed = RngSeed(cfg.master_seed, index)
    f = None if cfg.base_function["kind"] == "constant" else _function_for(cfg.base_function, seed)
    fld = None
    if cfg.alpha is not None and cfg.experiment != "holder-bound":
        fld = sample_additive_field(model.d, cfg.field_resolution or model.resolution, cfg.alpha, seed)
    graph = dim.graph_points(f, model, fld)
    lo, hi = cfg.scale_window(model.d)
    return ReplicateResult.from_estimate(index, seed.derived(), dim.box_dimension(graph, lo, hi))


def _finish(cfg: ExperimentConfig, model: CompactSetModel, reps: list, theo: float, value: float, details: dict) -> ResultRecord:
    summary = summarize(reps)
    ceiling = model.reference_dimension + 1 + CEILING_SLACK
    summary["ceiling"] = ceiling
    summary["ceiling_ok"] = bool(all(r.slope <= ceiling for r in reps))
    passed = _judge(value, theo, cfg) and summary["ceiling_ok"]
    if cfg.experiment != "lemma-check" and summary["nonconforming_fraction"] > INCONCLUSIVE_FRACTION:
        status = "inconclusive"
    else:
        status = "pass" if passed else "fail"
    return ResultRecord(cfg.to_dict(), reps, theo, cfg.direction, summary, passed, status, details)


def _s_grid(en: dict) -> list:
    count = int(math.floor((en["s_max"] - en["s_min"]) / en["s_step"] + 1e-9)) + 1
    return [round(en["s_min"] + i * en["s_step"], 12) for i in range(count)]


def _energy_run(cfg: ExperimentConfig, model: CompactSetModel, theo: float) -> ResultRecord:
    if model.d != 1 or cfg.domain["kind"] != "interval":
        # the level-indexed refinement below is dyadic on [0, 1]
        raise ParameterError("energy-scan runs on the 1-d interval domain")
    en = cfg.energy
    levels = [int(v) for v in en["levels"]]
    n = cfg.field_resolution or 2 ** max(levels)
    if n % 2 ** max(levels):
        raise ParameterError(f"field grid n={n} does not refine level {max(levels)}")
    fields_ = [sample_additive_field(1, n, cfg.alpha, RngSeed(cfg.master_seed, r)) for r in range(cfg.replicates)]
    f = None if cfg.base_function["kind"] == "constant" else _function_for(cfg.base_function, RngSeed(cfg.master_seed, 0))

    def builder(level):
        m = natural_measure(build_interval(1, 2**level))
        return [dim.lift_measure(m, f, fl) for fl in fields_]

    reports = dim.energy_scan(builder, _s_grid(en), levels)
    estimate = dim.energy_dimension(reports)
    graph_model = build_interval(1, n)
    lo, hi = cfg.scale_window(1)

    def replicate(r):
        g = dim.graph_points(f, graph_model, fields_[r])
        return ReplicateResult.from_estimate(r, RngSeed(cfg.master_seed, r).derived(), dim.box_dimension(g, lo, hi))

    reps = _map_replicates(replicate, cfg.replicates, cfg.workers)
    details = {
        "energy_dimension": estimate,
        "reports": [
            {
                "s": rep.s,
                "verdict": rep.verdict,
                "increment_ratio": _finite(rep.increment_ratio),
                "relative_increment": _finite(rep.relative_increment),
                "levels": rep.levels,
                "energies": rep.energies,
            }
            for rep in reports
        ],
    }
    value = estimate if estimate is not None else -math.inf
    return _finish(cfg, model, reps, theo, value, details)


def _lemma_run(cfg: ExperimentConfig, model: CompactSetModel) -> ResultRecord:
    lm = cfg.lemma
    h_grid = [2.0 ** -int(k) for k in lm["h_exponents"]]
    seed = RngSeed(cfg.master_seed, 0)
    rep = dim.lemma1_bound_check(
        cfg.alpha, lm["s"], lm["lambdas"], h_grid, int(lm["samples"]), seed, max_spread=float(lm.get("max_spread", 10.0)), max_trend=cfg.tolerance_above
    )
    # The single "replicate" is the trend fit of log ratio against log |h|.
    est = ReplicateResult(0, seed.derived(), rep.trend_slope, rep.trend_r_squared, rep.trend_half_width, 0.0, [])
    details = {
        "branch": rep.branch,
        "h_norms": rep.h_norms.tolist(),
        "lambdas": rep.lambdas.tolist(),
        "ratios": rep.ratios.tolist(),
        "std_errors": rep.std_errors.tolist(),
        "spread": rep.spread,
        "argmax_lambda": rep.argmax_lambda.tolist(),
    }
    record = ResultRecord(cfg.to_dict(), [est], 0.0, cfg.direction, {}, rep.passed, "pass" if rep.passed else "fail", details)
    record.summary["spread"] = rep.spread
    return record


def _finite(x: float):
    return float(x) if math.isfinite(x) else None


def run_experiment(cfg: ExperimentConfig) -> ResultRecord:
    """Run every replicate of ``cfg`` and compare against the predicted dimension."""
    model = build_domain(cfg.domain)
    theo = _theoretical(cfg, model)
    if cfg.experiment == "lemma-check":
        return _lemma_run(cfg, model)
    if cfg.experiment == "energy-scan":
        return _energy_run(cfg, model, theo)
    reps = _map_replicates(lambda r: _graph_replicate(cfg, model, r), cfg.replicates, cfg.workers)
    return _finish(cfg, model, reps, theo, summarize(reps)["mean"], {})


# ----------------------------------------------------------------- emitters


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        raise ParameterError(f"cannot serialize non-finite value {x!r}")
    return format(x, ".17g")


def _encode(obj) -> str:
    # json.dumps gives no control over float formatting; floats get 17 digits.
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_record(record: ResultRecord) -> str:
    return _encode(record.to_dict()) + "\n"


def load_record(path) -> ResultRecord:
    with open(path, encoding="utf-8") as fh:
        return ResultRecord.from_dict(json.load(fh))


def _csv_text(rows: list) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _write(path, text: str):
    try:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def render_results(record: ResultRecord, format: str = "json") -> str:
    """Text of :func:`emit_results` without touching the filesystem."""
    if format == "json":
        return dumps_record(record)
    if format == "csv":
        rows = [["seed", "slope", "r2", "half_width", "theoretical", "pass"]]
        for r in sorted(record.replicates, key=lambda r: r.index):
            rows.append([r.seed, _fmt(r.slope), _fmt(r.r2), _fmt(r.half_width), _fmt(record.theoretical), str(record.passed).lower()])
        return _csv_text(rows)
    raise ParameterError(f"unknown format {format!r}")


def emit_results(record: ResultRecord, path, format: str = "json") -> str:
    """Write ``record`` as JSON (one object) or CSV (one row per replicate)."""
    text = render_results(record, format)
    _write(path, text)
    return text


def plot_data(record: ResultRecord, path) -> str:
    """Regression data per replicate: ``log(1/eps), log N(eps)`` and the fitted line."""
    rows = [["scale", "logN", "fitted"]]
    for r in sorted(record.replicates, key=lambda r: r.index):
        for eps, count in r.scales:
            x = math.log(1.0 / eps)
            rows.append([_fmt(x), _fmt(math.log(count)), _fmt(r.slope * x + r.intercept)])
    text = _csv_text(rows)
    _write(path, text)
    return text
