"""
Finite-resolution models of compact sets in ``[0,1]^d`` and their natural
probability measures.

A :class:`CompactSetModel` is a set of axis-aligned cubes of side
``1/resolution`` addressed by integer grid coordinates. Representative
points are the lower-left cell corners.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError

__all__ = [
    "CantorSpec",
    "CompactSetModel",
    "DiscreteMeasure",
    "build_interval",
    "build_cantor",
    "build_product",
    "natural_measure",
]


@dataclass(frozen=True)
class CantorSpec:
    """Digit-restricted self-similar subset of [0, 1]."""

    base: int
    digits: tuple
    level: int

    def __post_init__(self):
        digits = tuple(sorted(set(int(x) for x in self.digits)))
        if len(digits) == 0:
            raise ParameterError("Cantor digit set is empty")
        if int(self.base) < 2:
            raise ParameterError(f"base must be >= 2, got {self.base}")
        if digits[0] < 0 or digits[-1] >= self.base:
            raise ParameterError(f"digits {digits} not in 0..{self.base - 1}")
        if len(digits) < 2:
            raise ParameterError("a single digit gives a dimension-0 set; need at least two digits")
        if int(self.level) < 0:
            raise ParameterError(f"level must be >= 0, got {self.level}")
        object.__setattr__(self, "digits", digits)
        object.__setattr__(self, "base", int(self.base))
        object.__setattr__(self, "level", int(self.level))

    @property
    def similarity_dimension(self) -> float:
        return math.log(len(self.digits)) / math.log(self.base)


@dataclass(frozen=True, eq=False)
class CompactSetModel:
    d: int
    resolution: int
    indices: np.ndarray = field(repr=False)
    reference_dimension: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, self.d)
        if idx.size and (idx.min() < 0 or idx.max() >= self.resolution):
            raise ParameterError("cell indices fall outside [0,1]^d")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.indices.shape[0]

    @property
    def side(self) -> float:
        return 1.0 / self.resolution

    @property
    def sample_points(self) -> np.ndarray:
        return self.indices / self.resolution

    @property
    def cells(self) -> list:
        """``(corner, side)`` pairs, one per cell."""
        return [(tuple(p), self.side) for p in self.sample_points]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "resolution": self.resolution,
            "indices": self.indices.tolist(),
            "reference_dimension": self.reference_dimension,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CompactSetModel":
        return cls(
            d=int(data["d"]),
            resolution=int(data["resolution"]),
            indices=np.asarray(data["indices"], dtype=np.int64).reshape(-1, int(data["d"])),
            reference_dimension=data.get("reference_dimension"),
            label=data.get("label", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CompactSetModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.size:
            raise ParameterError(f"{pts.shape[0]} points but {w.size} weights")
        if w.size == 0:
            raise ParameterError("measure has no atoms")
        if np.any(w < 0):
            raise ParameterError("negative weight")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ParameterError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        return cls(np.asarray(data["points"], dtype=float), np.asarray(data["weights"], dtype=float))


def build_interval(d: int, resolution: int) -> CompactSetModel:
    """``[0,1]^d`` as the full grid of ``resolution**d`` cells."""
    if int(d) < 1 or int(resolution) < 1:
        raise ParameterError(f"need d >= 1 and resolution >= 1, got d={d}, resolution={resolution}")
    d, r = int(d), int(resolution)
    axes = np.meshgrid(*[np.arange(r)] * d, indexing="ij")
    idx = np.stack([a.ravel() for a in axes], axis=1)
    return CompactSetModel(d=d, resolution=r, indices=idx, reference_dimension=float(d), label=f"interval(d={d})")


def build_cantor(spec: CantorSpec) -> CompactSetModel:
    """Level-``spec.level`` iterate of the digit-restricted Cantor set."""
    b = spec.base
    idx = np.zeros(1, dtype=np.int64)
    digits = np.asarray(spec.digits, dtype=np.int64)
    for _ in range(spec.level):
        idx = (idx[:, None] * b + digits[None, :]).ravel()
    return CompactSetModel(
        d=1,
        resolution=b**spec.level,
        indices=idx[:, None],
        reference_dimension=spec.similarity_dimension,
        label=f"cantor(b={b},D={list(spec.digits)},level={spec.level})",
    )


def build_product(a: CompactSetModel, b: CompactSetModel) -> CompactSetModel:
    """Cartesian product; both factors must share the same cell side."""
    if a.resolution != b.resolution:
        raise ParameterError(f"incompatible resolutions {a.resolution} and {b.resolution}")
    ia = np.repeat(a.indices, len(b), axis=0)
    ib = np.tile(b.indices, (len(a), 1))
    ref = None
    if a.reference_dimension is not None and b.reference_dimension is not None:
        ref = a.reference_dimension + b.reference_dimension
    return CompactSetModel(
        d=a.d + b.d,
        resolution=a.resolution,
        indices=np.concatenate([ia, ib], axis=1),
        reference_dimension=ref,
        label=f"{a.label} x {b.label}",
    )


def natural_measure(model: CompactSetModel) -> DiscreteMeasure:
    """Uniform mass on one representative point per cell."""
    n = len(model)
    if n == 0:
        raise ParameterError("cannot put a probability measure on an empty set")
    return DiscreteMeasure(model.sample_points, np.full(n, 1.0 / n))

