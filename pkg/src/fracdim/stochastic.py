"""
Exact sampling of fractional Gaussian noise, fractional Brownian motion and
the additive field ``W(x) = W_1(x_1) + ... + W_d(x_d)``.

The sampler is circulant embedding (Davies-Harte); when the embedding
spectrum has an eigenvalue below ``-EIGEN_TOL`` we fall back to a dense
Cholesky factorisation of the Toeplitz covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .errors import ParameterError

__all__ = [
    "RngSeed",
    "HurstParameter",
    "FbmPath",
    "FbmField",
    "fgn_autocovariance",
    "sample_fgn",
    "sample_fbm_path",
    "sample_additive_field",
    "increment_variance",
]

EIGEN_TOL = 1e-10
_U64 = 2**64


@dataclass(frozen=True)
class RngSeed:
    """A master seed plus a replicate index.

    Streams are derived through :class:`numpy.random.SeedSequence`, so the
    generator is a pure function of ``(master_seed, replicate_index, *path)``.
    """

    master_seed: int
    replicate_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < _U64:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.replicate_index) < 0:
            raise ParameterError(f"replicate_index must be non-negative, got {self.replicate_index}")

    def sequence(self, *path: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([int(self.master_seed), int(self.replicate_index), *map(int, path)])

    def generator(self, *path: int) -> np.random.Generator:
        """Independent generator for the sub-stream addressed by ``path``."""
        return np.random.Generator(np.random.PCG64(self.sequence(*path)))

    def derived(self, *path: int) -> int:
        """64-bit integer identifying the derived stream (reported in results)."""
        return int(self.sequence(*path).generate_state(1, dtype=np.uint64)[0])

    def child(self, replicate_index: int) -> "RngSeed":
        return RngSeed(self.master_seed, replicate_index)


def _as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    return RngSeed(int(seed))


@dataclass(frozen=True)
class HurstParameter:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not np.isfinite(a) or not 0.0 < a < 1.0:
            raise ParameterError(f"Hurst parameter must satisfy 0 < alpha < 1, got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    def __float__(self):
        return self.alpha


def _alpha(alpha) -> float:
    if isinstance(alpha, HurstParameter):
        return alpha.alpha
    return HurstParameter(alpha).alpha


def fgn_autocovariance(k, alpha) -> np.ndarray:
    """Autocovariance of unit-spacing fractional Gaussian noise at lag(s) ``k``.

    ``gamma(k) = (|k+1|^{2a} - 2|k|^{2a} + |k-1|^{2a}) / 2``
    """
    a2 = 2.0 * _alpha(alpha)
    k = np.abs(np.asarray(k, dtype=float))
    return 0.5 * (np.abs(k + 1) ** a2 - 2.0 * k**a2 + np.abs(k - 1) ** a2)


def _embedding_eigenvalues(n: int, alpha: float) -> np.ndarray:
    gamma = fgn_autocovariance(np.arange(n + 1), alpha)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(row).real


def _circulant_fgn(n: int, eig: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    m = eig.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    # Re(F diag(sqrt(eig/m)) z) has covariance exactly equal to the circulant.
    y = np.fft.fft(np.sqrt(np.clip(eig, 0.0, None) / m) * z)
    return y.real[:n]


def _dense_fgn(n: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    cov = toeplitz(fgn_autocovariance(np.arange(n), alpha))
    lower = cholesky(cov, lower=True)
    return lower @ rng.standard_normal(n)


def sample_fgn(n: int, alpha, seed, *, method: str = "auto", _stream: Sequence[int] = ()) -> np.ndarray:
    """Sample ``n`` unit-spacing fractional Gaussian noise increments.

    Parameters
    ----------
    n : int
        Number of increments, ``n >= 1``.
    alpha : float or HurstParameter
        Hurst parameter in (0, 1).
    seed : RngSeed or int
        Seed; identical ``(n, alpha, seed)`` give bit-identical output.
    method : {"auto", "circulant", "dense"}
        ``auto`` uses circulant embedding and falls back to the dense
        factorisation when the embedding is not nonnegative definite.

    Returns
    -------
    numpy.ndarray
        Stationary centred Gaussian vector with autocovariance
        :func:`fgn_autocovariance`.
    """
    a = _alpha(alpha)
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    n = int(n)
    rng = _as_seed(seed).generator(*_stream)
    if method == "dense":
        return _dense_fgn(n, a, rng)
    if method not in ("auto", "circulant"):
        raise ParameterError(f"unknown sampling method {method!r}")
    eig = _embedding_eigenvalues(n, a)
    if eig.min() < -EIGEN_TOL:
        if method == "circulant":
            raise ParameterError(f"circulant embedding not nonnegative definite (min eigenvalue {eig.min():.3g})")
        return _dense_fgn(n, a, rng)
    return _circulant_fgn(n, eig, rng)


@dataclass(frozen=True)
class FbmPath:
    """fBm sampled on the uniform grid ``k/n``, ``k = 0..n``."""

    alpha: float
    values: np.ndarray
    seed: int = 0

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)

    def at_index(self, idx) -> np.ndarray:
        return self.values[idx]


def sample_fbm_path(n: int, alpha, seed, *, _stream: Sequence[int] = ()) -> FbmPath:
    """Fractional Brownian motion on ``[0, 1]`` with ``n`` steps, started at 0.

    The increments are rescaled by ``(1/n)^alpha`` so ``Var W(t) = t^{2 alpha}``.
    """
    a = _alpha(alpha)
    s = _as_seed(seed)
    inc = sample_fgn(n, a, s, _stream=_stream) * (1.0 / n) ** a
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(inc, out=values[1:])
    return FbmPath(alpha=a, values=values, seed=s.derived(*_stream))


@dataclass(frozen=True)
class FbmField:
    """Additive field built from ``d`` independent fBm paths on a common grid."""

    alpha: float
    components: tuple = field(default_factory=tuple)

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def n(self) -> int:
        return self.components[0].n

    def at_index(self, idx) -> np.ndarray:
        """Evaluate at integer grid coordinates ``idx`` of shape ``(..., d)``."""
        idx = np.asarray(idx)
        if idx.shape[-1] != self.d:
            raise ParameterError(f"expected {self.d} grid coordinates, got {idx.shape[-1]}")
        out = np.zeros(idx.shape[:-1])
        for i, comp in enumerate(self.components):
            out = out + comp.values[idx[..., i]]
        return out

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points of ``[0,1]^d`` lying on the grid ``k/n``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        idx = np.rint(x * self.n).astype(np.int64)
        if np.any(np.abs(idx - x * self.n) > 1e-6) or idx.min() < 0 or idx.max() > self.n:
            raise ParameterError("field evaluated off its sampling grid")
        return self.at_index(idx)


def sample_additive_field(d: int, n: int, alpha, seed) -> FbmField:
    """Sample ``W(x) = W_1(x_1) + ... + W_d(x_d)`` with independent axes."""
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d}")
    a = _alpha(alpha)
    s = _as_seed(seed)
    comps = tuple(sample_fbm_path(n, a, s, _stream=(axis,)) for axis in range(int(d)))
    return FbmField(alpha=a, components=comps)


def increment_variance(h, alpha) -> float:
    """Variance of ``W(x) - W(y)`` for offset ``h = x - y``: ``sum_i |h_i|^{2 alpha}``."""
    a = _alpha(alpha)
    h = np.abs(np.atleast_1d(np.asarray(h, dtype=float)))
    return float(np.sum(h ** (2.0 * a)))
