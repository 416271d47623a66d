"""
Test functions on ``[0,1]^d``: the (random-phase) Weierstrass series and a few
elementary Hoelder functions.

The Weierstrass series lives on ``[0, 2*pi]``; we evaluate it on ``[0, 1]``
through ``x -> 2*pi*x``. On ``d``-dimensional inputs it acts additively,
``f(x) = sum_i w(x_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .stochastic import _as_seed

__all__ = [
    "WeierstrassSpec",
    "weierstrass",
    "random_phase_weierstrass",
    "holder_test_function",
    "HOLDER_KINDS",
    "holder_exponent",
]

DEFAULT_TRUNCATION = 48
HOLDER_KINDS = ("constant", "linear", "cusp")


@dataclass(frozen=True)
class WeierstrassSpec:
    alpha: float
    truncation: int = DEFAULT_TRUNCATION
    phases: Optional[tuple] = None

    def __post_init__(self):
        if not 0.0 < float(self.alpha) < 1.0:
            raise ParameterError(f"Weierstrass exponent must lie in (0, 1), got {self.alpha}")
        if int(self.truncation) < 1:
            raise ParameterError(f"truncation must be >= 1, got {self.truncation}")
        if self.phases is not None:
            ph = tuple(float(p) for p in self.phases)
            if len(ph) != self.truncation + 1:
                raise ParameterError(f"need {self.truncation + 1} phases (k = 0..K_max), got {len(ph)}")
            object.__setattr__(self, "phases", ph)

    @property
    def tail_bound(self) -> float:
        """Bound on the neglected terms ``k > K_max`` of the series."""
        a = float(self.alpha)
        return 2.0 ** (-(self.truncation + 1) * a) / (1.0 - 2.0**-a)

    @property
    def sup_bound(self) -> float:
        return 1.0 / (1.0 - 2.0 ** -float(self.alpha))


def _weierstrass_1d(spec: WeierstrassSpec, x: np.ndarray) -> np.ndarray:
    a = float(spec.alpha)
    out = np.zeros_like(x)
    for k in range(spec.truncation + 1):
        # 2^k * x is exact in floating point, so the reduction mod 1 is exact too.
        t = np.mod(np.ldexp(x, k), 1.0)
        theta = spec.phases[k] if spec.phases is not None else 0.0
        out += 2.0 ** (-k * a) * np.cos(2.0 * np.pi * t + theta)
    return out


def weierstrass(spec: WeierstrassSpec, x):
    """Partial sum ``sum_{k=0}^{K_max} 2^{-k a} cos(2^k (2 pi x) + theta_k)``.

    ``x`` may be a scalar, an array of shape ``(n,)`` (1-d points) or
    ``(n, d)``; the result is a float or an array of shape ``(n,)``.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return float(_weierstrass_1d(spec, arr.reshape(1))[0])
    if arr.ndim == 1:
        return _weierstrass_1d(spec, arr)
    return sum(_weierstrass_1d(spec, arr[:, i]) for i in range(arr.shape[1]))


def random_phase_weierstrass(alpha: float, K_max: int, seed) -> WeierstrassSpec:
    """Weierstrass spec with i.i.d. uniform phases on ``[0, 2 pi)``."""
    if not 0.0 < float(alpha) < 1.0:
        raise ParameterError(f"Weierstrass exponent must lie in (0, 1), got {alpha}")
    rng = _as_seed(seed).generator(0x5748)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=int(K_max) + 1)
    return WeierstrassSpec(alpha=float(alpha), truncation=int(K_max), phases=tuple(phases))


def holder_exponent(kind: str, beta: Optional[float] = None) -> float:
    """Hoelder exponent certified by :func:`holder_test_function`."""
    if kind in ("constant", "linear"):
        return 1.0
    if kind == "cusp":
        return float(beta)
    raise ParameterError(f"unknown Hoelder test function {kind!r}")


def holder_test_function(kind: str, x, beta: Optional[float] = None, center=None):
    """Evaluate an elementary Hoelder function at point(s) ``x``.

    ``constant`` is identically 0, ``linear`` is ``sum_i x_i`` and
    ``cusp`` is ``||x - c||^beta`` with ``c`` the centre of ``[0,1]^d``.
    A scalar or 1-d ``x`` is one point; a 2-d ``x`` is a batch of rows.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim < 2
    pts = arr.reshape(1, -1) if single else arr
    if kind == "constant":
        out = np.zeros(pts.shape[0])
    elif kind == "linear":
        out = pts.sum(axis=1)
    elif kind == "cusp":
        if beta is None or not 0.0 < float(beta) <= 1.0:
            raise ParameterError(f"cusp exponent must lie in (0, 1], got {beta}")
        c = np.full(pts.shape[1], 0.5) if center is None else np.asarray(center, dtype=float)
        out = np.linalg.norm(pts - c, axis=1) ** float(beta)
    else:
        raise ParameterError(f"unknown Hoelder test function {kind!r}")
    return float(out[0]) if single else out
