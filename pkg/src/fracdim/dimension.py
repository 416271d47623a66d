"""
Dimension machinery for graphs ``{(x, f(x) + W(x)) : x in K}``.

Two box counts are provided. :func:`box_count` counts occupied cells of a
dyadic grid and is right for point sets such as Cantor iterates. Sampled
graphs of rough functions need :func:`oscillation_count`: at fine scales a
column holds fewer samples than the graph crosses boxes, and occupancy
saturates. The oscillation count covers each domain column with the
``max(1, osc/eps)`` boxes its vertical extent requires.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .domains import CompactSetModel, DiscreteMeasure
from .errors import DegeneratePairError, ParameterError
from .stochastic import FbmField, _alpha, _as_seed, increment_variance

__all__ = [
    "GraphCloud",
    "DimensionEstimate",
    "EnergyReport",
    "LemmaReport",
    "graph_points",
    "normalize_cloud",
    "box_count",
    "oscillation_count",
    "box_dimension",
    "lift_measure",
    "discrete_energy",
    "discrete_energies",
    "energy_scan",
    "energy_dimension",
    "lemma1_bound_check",
    "theoretical_graph_dimension",
]

R2_THRESHOLD = 0.98
STABILIZE_RATIO = 0.99
DIVERGE_RATIO = 1.01
RELATIVE_INCREMENT = 0.05


@dataclass(frozen=True, eq=False)
class GraphCloud:
    points: np.ndarray
    source_set: CompactSetModel
    f_description: str = ""

    @property
    def d(self) -> int:
        return self.source_set.d

    @property
    def values(self) -> np.ndarray:
        return self.points[:, -1]


@dataclass
class DimensionEstimate:
    slope: float
    intercept: float
    scales_used: list
    r_squared: float
    half_width: float
    method: str = "occupancy"

    @property
    def conforming(self) -> bool:
        return self.r_squared >= R2_THRESHOLD

    def fitted(self, eps) -> np.ndarray:
        """Regression line ``log N`` evaluated at box size(s) ``eps``."""
        return self.slope * np.log(1.0 / np.asarray(eps, dtype=float)) + self.intercept


@dataclass
class EnergyReport:
    s: float
    levels: list
    energies: list
    verdict: str
    increment_ratio: float = float("nan")
    relative_increment: float = float("nan")


@dataclass
class LemmaReport:
    alpha: float
    s: float
    branch: str
    h_norms: np.ndarray
    lambdas: np.ndarray
    ratios: np.ndarray = field(repr=False)
    std_errors: np.ndarray = field(repr=False)
    trend_slope: float = float("nan")
    trend_r_squared: float = float("nan")
    trend_half_width: float = float("nan")
    spread: float = float("nan")
    passed: bool = False

    @property
    def per_h_max(self) -> np.ndarray:
        return self.ratios.max(axis=1)

    @property
    def argmax_lambda(self) -> np.ndarray:
        return self.lambdas[self.ratios.argmax(axis=1)]


# --------------------------------------------------------------------- graphs


def _field_indices(model: CompactSetModel, fld: FbmField) -> np.ndarray:
    if fld.d != model.d:
        raise ParameterError(f"field has {fld.d} axes but the set lives in R^{model.d}")
    if fld.n % model.resolution:
        raise ParameterError(f"field grid n={fld.n} is not a refinement of set resolution {model.resolution}")
    return model.indices * (fld.n // model.resolution)


def graph_points(f: Optional[Callable], model: CompactSetModel, fld: Optional[FbmField] = None, label: str = "") -> GraphCloud:
    """Graph cloud ``(x, f(x) + W(x))`` over the sample points of ``model``.

    ``f`` maps an ``(N, d)`` array to ``N`` values; ``None`` means ``f = 0``.
    """
    x = model.sample_points
    y = np.zeros(len(model)) if f is None else np.asarray(f(x), dtype=float).reshape(len(model))
    if fld is not None:
        y = y + fld.at_index(_field_indices(model, fld))
    return GraphCloud(np.column_stack([x, y]), model, label)


def normalize_cloud(points) -> tuple:
    """Translate to the origin and shrink isotropically into ``[0,1]^k``.

    Returns ``(normalized, scale)``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    lo = pts.min(axis=0)
    span = float((pts.max(axis=0) - lo).max())
    scale = 1.0 / span if span > 0 else 1.0
    return (pts - lo) * scale, scale


def _cell_keys(cells: np.ndarray, m: int) -> np.ndarray:
    # Mixed-radix key; falls back to row-unique when m**k overflows int64.
    k = cells.shape[1]
    if k * math.log2(max(m, 2)) < 62:
        return np.ravel_multi_index(tuple(cells.T), (m,) * k)
    return np.unique(cells, axis=0, return_inverse=True)[1].ravel()


def box_count(points, epsilon: float) -> int:
    """Number of cells of the grid of mesh ``epsilon`` holding at least one point."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ParameterError("box count of an empty cloud")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if pts.min() < -1e-12 or pts.max() > 1 + 1e-12:
        raise ParameterError("cloud must be normalized into [0,1]^k before box counting")
    m = int(math.ceil(1.0 / epsilon - 1e-9))
    # The nudge keeps points on a grid line (k * epsilon up to rounding) in cell k.
    cells = np.clip(np.floor(pts / epsilon + 1e-9).astype(np.int64), 0, m - 1)
    return int(np.unique(_cell_keys(cells, m)).size)


def _column_ranges(graph: GraphCloud, scale: float):
    """Vertical extent of the interpolated graph over each sample's cell.

    The cell with lower corner ``p`` is spanned by the samples at its
    ``2^d`` corners ``p + e``, ``e in {0,1}^d``; corners missing from the set
    (gaps of a Cantor domain, the far edge) are skipped.
    """
    model = graph.source_set
    y = (graph.values - graph.values.min()) * scale
    lo, hi = y.copy(), y.copy()
    r, d = model.resolution, model.d
    keys = np.ravel_multi_index(tuple(model.indices.T), (r,) * d)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    for offset in itertools.product((0, 1), repeat=d):
        if not any(offset):
            continue
        off = np.asarray(offset)
        inside = np.all(model.indices + off < r, axis=1)
        target = np.ravel_multi_index(tuple(np.minimum(model.indices + off, r - 1).T), (r,) * d)
        pos = np.clip(np.searchsorted(sorted_keys, target), 0, len(keys) - 1)
        hit = inside & (sorted_keys[pos] == target)
        p = np.nonzero(hit)[0]
        q = order[pos[hit]]
        lo[p] = np.minimum(lo[p], y[q])
        hi[p] = np.maximum(hi[p], y[q])
    return lo, hi


def oscillation_count(graph: GraphCloud, epsilon: float, *, _prepared=None) -> float:
    """Boxes of side ``epsilon`` needed to cover the graph column by column.

    Each nonempty domain column contributes ``max(1, osc / epsilon)`` where
    ``osc`` is the vertical extent of the piecewise-linear graph over the
    column, taken from the corner samples of every cell in it. Cells are
    never joined across gaps of the set.
    Coordinates are normalized isotropically as in :func:`normalize_cloud`.
    """
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if _prepared is None:
        _prepared = _prepare_oscillation(graph)
    x, lo, hi = _prepared
    m = int(math.ceil(1.0 / epsilon - 1e-9))
    cols = _cell_keys(np.clip(np.floor(x / epsilon + 1e-9).astype(np.int64), 0, m - 1), m)
    order = np.argsort(cols, kind="stable")
    cs = cols[order]
    starts = np.concatenate([[0], np.nonzero(np.diff(cs))[0] + 1])
    top = np.maximum.reduceat(hi[order], starts)
    bottom = np.minimum.reduceat(lo[order], starts)
    return float(np.maximum(1.0, (top - bottom) / epsilon).sum())


def _prepare_oscillation(graph: GraphCloud):
    if len(graph.source_set) == 0:
        raise ParameterError("box count of an empty cloud")
    _, scale = normalize_cloud(graph.points)
    x = (graph.points[:, :-1] - graph.points[:, :-1].min(axis=0)) * scale
    lo, hi = _column_ranges(graph, scale)
    return x, lo, hi


def _fit(log_inv_eps: np.ndarray, log_n: np.ndarray):
    m = log_inv_eps.size
    if np.ptp(log_n) == 0:
        return 0.0, float(log_n[0]), 1.0, 0.0
    res = stats.linregress(log_inv_eps, log_n)
    r2 = float(res.rvalue**2)
    half = float(stats.t.ppf(0.975, m - 2) * res.stderr) if m > 2 else float("inf")
    return float(res.slope), float(res.intercept), min(r2, 1.0), half


def box_dimension(
    cloud, scale_min_exp: int, scale_max_exp: int, *, method: Optional[str] = None, base: int = 2
) -> DimensionEstimate:
    """Least-squares slope of ``log N(eps)`` against ``log(1/eps)``, ``eps = base^-k``.

    Parameters
    ----------
    cloud : GraphCloud or array_like
        A graph cloud or a bare point cloud. Bare clouds are normalized
        with :func:`normalize_cloud` first.
    scale_min_exp, scale_max_exp : int
        Inclusive range of ``k``; at least four scales are required.
    method : {"occupancy", "oscillation"}, optional
        Defaults to ``oscillation`` for graph clouds, ``occupancy`` otherwise.
    base : int
        Scale ratio between consecutive boxes; use 3 for triadic sets.
    """
    ks = np.arange(int(scale_min_exp), int(scale_max_exp) + 1)
    if ks.size < 4:
        raise ParameterError(f"need at least 4 scales, got {ks.size} ({scale_min_exp}..{scale_max_exp})")
    is_graph = isinstance(cloud, GraphCloud)
    method = method or ("oscillation" if is_graph else "occupancy")
    if int(base) < 2:
        raise ParameterError(f"scale base must be >= 2, got {base}")
    eps = float(base) ** -ks.astype(float)
    if is_graph:
        _, scale = normalize_cloud(cloud.points)
        if cloud.source_set.side * scale > eps[-1] / 2:
            raise ParameterError(
                f"set resolution 1/{cloud.source_set.resolution} too coarse for box size {base}^-{ks[-1]}"
            )
    if method == "oscillation":
        if not is_graph:
            raise ParameterError("oscillation counting needs a GraphCloud")
        prep = _prepare_oscillation(cloud)
        counts = [oscillation_count(cloud, e, _prepared=prep) for e in eps]
    elif method == "occupancy":
        pts = cloud.points if is_graph else cloud
        norm, _ = normalize_cloud(pts)
        counts = [box_count(norm, e) for e in eps]
    else:
        raise ParameterError(f"unknown counting method {method!r}")
    slope, intercept, r2, half = _fit(ks * math.log(float(base)), np.log(counts))
    return DimensionEstimate(
        slope=slope,
        intercept=intercept,
        scales_used=[(float(e), float(c)) for e, c in zip(eps, counts)],
        r_squared=r2,
        half_width=half,
        method=method,
    )


# ------------------------------------------------------------------ energies


def lift_measure(m: DiscreteMeasure, f: Optional[Callable], fld: Optional[FbmField] = None) -> DiscreteMeasure:
    """Push ``m`` forward along ``x -> (x, f(x) + W(x))``; weights are kept."""
    x = m.points
    y = np.zeros(len(m)) if f is None else np.asarray(f(x), dtype=float).reshape(len(m))
    if fld is not None:
        if fld.d != x.shape[1]:
            raise ParameterError(f"field has {fld.d} axes but the measure lives in R^{x.shape[1]}")
        y = y + fld(x)
    return DiscreteMeasure(np.column_stack([x, y]), m.weights)


def discrete_energies(m: DiscreteMeasure, s_values, *, block_pairs: int = 1 << 22) -> np.ndarray:
    """``sum_{i != j} w_i w_j |X_i - X_j|^{-s}`` for every ``s`` in ``s_values``.

    Blocks of rows are reduced in a fixed order, so the result does not
    depend on how the work is scheduled.
    """
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    if np.any(s_values <= 0):
        raise ParameterError("energy exponent must be positive")
    pts, w = m.points, m.weights
    n = pts.shape[0]
    out = np.zeros(s_values.size)
    if n < 2:
        return out
    rows = max(1, block_pairs // n)
    gaps = np.diff(s_values)
    arithmetic = s_values.size > 2 and np.allclose(gaps, gaps[0], rtol=0, atol=1e-12)
    for a in range(0, n - 1, rows):
        b = min(n - 1, a + rows)
        # rows a..b-1 against columns a+1..n-1; only j > i is kept.
        diff = pts[a:b, None, :] - pts[None, a + 1 :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        upper = np.arange(a + 1, n)[None, :] > np.arange(a, b)[:, None]
        if np.any(upper & (d2 <= 0)):
            i, j = np.argwhere(upper & (d2 <= 0))[0]
            raise DegeneratePairError(int(a + i), int(a + 1 + j))
        # masked pairs get unit distance and zero weight
        d2[~upper] = 1.0
        half_log = -0.5 * np.log(d2)
        ww = np.where(upper, w[a:b, None] * w[None, a + 1 :], 0.0)
        if arithmetic:
            # d^-s on an arithmetic s grid by repeated multiplication.
            term = ww * np.exp(s_values[0] * half_log)
            step = np.exp((s_values[1] - s_values[0]) * half_log)
            for t in range(s_values.size):
                out[t] += float(term.sum())
                term *= step
        else:
            for t, s in enumerate(s_values):
                out[t] += float(np.sum(ww * np.exp(s * half_log)))
    out *= 2.0
    return out


def discrete_energy(m: DiscreteMeasure, s: float) -> float:
    """Discrete ``s``-energy of ``m`` with the diagonal excluded."""
    return float(discrete_energies(m, [s])[0])


def _verdict(energies: np.ndarray, stabilize_ratio: float, diverge_ratio: float):
    inc = np.diff(energies)
    last = float(energies[-1])
    rel = float(inc[-1] / last) if last > 0 else 0.0
    span = 3 if inc.size >= 3 else 2
    if np.any(inc[-span:] <= 0):
        return ("stabilizing" if abs(rel) < RELATIVE_INCREMENT else "inconclusive"), float("nan"), rel
    q = float((inc[-1] / inc[-span]) ** (1.0 / (span - 1)))
    if q < stabilize_ratio:
        return "stabilizing", q, rel
    if q > diverge_ratio:
        return "diverging", q, rel
    return "inconclusive", q, rel


def energy_scan(
    m_builder: Callable,
    s_grid: Sequence[float],
    levels: Sequence[int],
    *,
    stabilize_ratio: float = STABILIZE_RATIO,
    diverge_ratio: float = DIVERGE_RATIO,
) -> list:
    """Classify the ``s``-energies of a refining family of measures.

    ``m_builder(level)`` returns a :class:`DiscreteMeasure` or a sequence of
    them (independent realizations, whose energies are averaged). With
    ``delta_l = I(l) - I(l-1)`` the geometric growth rate ``q`` of the
    last three increments (two with only three levels) decides the verdict: increments
    that shrink geometrically (``q < stabilize_ratio``) sum to a finite
    limit, growing ones (``q > diverge_ratio``) do not.
    """
    s_grid = [float(s) for s in s_grid]
    if not s_grid:
        raise ParameterError("empty s grid")
    if any(b <= a for a, b in zip(s_grid, s_grid[1:])):
        raise ParameterError("s grid must be increasing")
    levels = [int(lv) for lv in levels]
    if len(levels) < 3:
        raise ParameterError("need at least three levels to judge convergence")
    table = np.zeros((len(levels), len(s_grid)))
    for row, level in enumerate(levels):
        built = m_builder(level)
        measures = [built] if isinstance(built, DiscreteMeasure) else list(built)
        table[row] = np.mean([discrete_energies(mu, s_grid) for mu in measures], axis=0)
    reports = []
    for col, s in enumerate(s_grid):
        verdict, q, rel = _verdict(table[:, col], stabilize_ratio, diverge_ratio)
        reports.append(EnergyReport(s, list(levels), table[:, col].tolist(), verdict, q, rel))
    return reports


def energy_dimension(reports: Sequence[EnergyReport]) -> Optional[float]:
    """Largest ``s`` whose energies stabilize (a lower estimate of dimension)."""
    stable = [r.s for r in reports if r.verdict == "stabilizing"]
    return max(stable) if stable else None


# ---------------------------------------------------------- increment bound


def lemma1_bound_check(
    alpha,
    s: float,
    lambda_grid: Sequence[float],
    h_grid: Sequence,
    replicates: int = 100_000,
    seed=0,
    *,
    max_spread: float = 10.0,
    max_trend: float = 0.15,
) -> LemmaReport:
    """Monte Carlo check that ``E[(|h|^2 + (lam + dW)^2)^{-s/2}]`` scales as claimed.

    ``dW ~ N(0, sigma^2(h))``. The expectation is divided by
    ``|h|^{1-s-alpha}`` when ``s > 1`` and by ``|h|^{-alpha s}`` when
    ``s < 1``. The check passes when the per-``h`` maxima over ``lam`` stay
    within a factor ``max_spread`` of each other and show no trend in
    ``|h|`` (log-log slope within ``max_trend`` of 0).
    """
    a = _alpha(alpha)
    s = float(s)
    if s == 1.0:
        raise ParameterError("s = 1 is not covered by the bound")
    if s <= 0:
        raise ParameterError(f"s must be positive, got {s}")
    if int(replicates) < 10_000:
        raise ParameterError(f"need at least 10^4 samples, got {replicates}")
    z = _as_seed(seed).generator(0x4C31).standard_normal(int(replicates))
    lambdas = np.asarray(lambda_grid, dtype=float)
    hs = [np.atleast_1d(np.asarray(h, dtype=float)) for h in h_grid]
    norms = np.array([np.linalg.norm(h) for h in hs])
    if np.any(norms <= 0):
        raise ParameterError("offsets must be nonzero")
    ratios = np.zeros((len(hs), lambdas.size))
    errs = np.zeros_like(ratios)
    for i, (h, hn) in enumerate(zip(hs, norms)):
        sigma = math.sqrt(increment_variance(h, a))
        ref = hn ** (1.0 - s - a) if s > 1 else hn ** (-a * s)
        for j, lam in enumerate(lambdas):
            sample = (hn * hn + (lam + sigma * z) ** 2) ** (-0.5 * s)
            ratios[i, j] = sample.mean() / ref
            errs[i, j] = sample.std(ddof=1) / math.sqrt(z.size) / ref
    per_h = ratios.max(axis=1)
    slope, _, r2, half = _fit(np.log(norms), np.log(per_h)) if len(hs) >= 3 else (float("nan"),) * 4
    spread = float(per_h.max() / per_h.min())
    passed = bool(np.isfinite(spread) and spread < max_spread and abs(slope) <= max_trend)
    return LemmaReport(
        alpha=a,
        s=s,
        branch="s>1" if s > 1 else "s<1",
        h_norms=norms,
        lambdas=lambdas,
        ratios=ratios,
        std_errors=errs,
        trend_slope=slope,
        trend_r_squared=r2,
        trend_half_width=half,
        spread=spread,
        passed=passed,
    )


def theoretical_graph_dimension(dim_k: float, alpha: float) -> float:
    """``min(dim_K / alpha, dim_K + 1 - alpha)``.

    ``alpha = 1`` is accepted for Lipschitz functions and returns ``dim_K``.
    """
    if not dim_k > 0:
        raise ParameterError(f"dim_K must be positive, got {dim_k}")
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    return min(dim_k / alpha, dim_k + 1.0 - alpha)
