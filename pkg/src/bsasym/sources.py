"""Forcing terms ``f(x) >= 0`` with closed-form metadata.

Every source exposes ``eval`` (vectorized over coordinate arrays), its
maximum value, its support radius and a Lipschitz bound, which the
invariant monitors consume.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Field, GridSpec

__all__ = [
    "SourceTerm",
    "RadialCone",
    "L1Cone",
    "TwinCones",
    "BallIndicator",
    "TwinBalls",
    "RadialTable",
    "ZeroSource",
    "eval_source",
    "max_value",
    "support_radius",
    "lipschitz_bound",
    "sample_to_field",
    "source_from_config",
]


class SourceTerm:
    """Base class; subclasses implement ``__call__(x1, x2)``."""

    radial = False

    def __call__(self, x1, x2):
        raise NotImplementedError

    @property
    def max_value(self) -> float:
        raise NotImplementedError

    @property
    def support_radius(self) -> float:
        raise NotImplementedError

    @property
    def lipschitz_bound(self) -> float:
        raise NotImplementedError

    def profile(self, r):
        """Radial profile ``f~(r)``; only for radial sources."""
        raise TypeError(f"{type(self).__name__} is not radially symmetric")


@dataclass(frozen=True)
class ZeroSource(SourceTerm):
    radial = True

    def __call__(self, x1, x2):
        return np.zeros(np.broadcast(np.asarray(x1), np.asarray(x2)).shape)

    def profile(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    max_value = 0.0
    support_radius = 0.0
    lipschitz_bound = 0.0


def _positive(name, v):
    if not (np.isfinite(v) and v > 0):
        raise ValueError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class RadialCone(SourceTerm):
    """``(r - |x|)_+``."""

    r: float
    radial = True

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"cone radius must be nonnegative, got {self.r!r}")

    def __call__(self, x1, x2):
        return np.maximum(self.r - np.hypot(x1, x2), 0.0)

    def profile(self, r):
        return np.maximum(self.r - np.asarray(r, dtype=float), 0.0)

    @property
    def max_value(self):
        return float(self.r)

    @property
    def support_radius(self):
        return float(self.r)

    @property
    def lipschitz_bound(self):
        return 1.0 if self.r > 0 else 0.0


@dataclass(frozen=True)
class L1Cone(SourceTerm):
    """``(r - |x1| - |x2|)_+``."""

    r: float

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"cone radius must be nonnegative, got {self.r!r}")

    def __call__(self, x1, x2):
        return np.maximum(self.r - np.abs(x1) - np.abs(x2), 0.0)

    @property
    def max_value(self):
        return float(self.r)

    @property
    def support_radius(self):
        return float(self.r)

    @property
    def lipschitz_bound(self):
        # Euclidean norm of the gradient (+-1, +-1)
        return math.sqrt(2.0) if self.r > 0 else 0.0


@dataclass(frozen=True)
class TwinCones(SourceTerm):
    """Sum of two cones of radius ``R0`` centred at ``(+-offset, 0)``."""

    R0: float
    offset: float = 0.0

    def __post_init__(self):
        _positive("R0", self.R0)
        if not (np.isfinite(self.offset) and self.offset >= 0):
            raise ValueError(f"offset must be nonnegative, got {self.offset!r}")

    def __call__(self, x1, x2):
        a = self.offset
        return (np.maximum(self.R0 - np.hypot(x1 - a, x2), 0.0)
                + np.maximum(self.R0 - np.hypot(x1 + a, x2), 0.0))

    @property
    def max_value(self):
        # Where both cones are active the sum is 2 R0 - |x - a| - |x + a|,
        # largest (2 (R0 - offset)) on the segment joining the centres.
        return float(max(self.R0, 2 * (self.R0 - self.offset)))

    @property
    def support_radius(self):
        return float(self.R0 + self.offset)

    @property
    def lipschitz_bound(self):
        return 2.0 if self.offset < self.R0 else 1.0


@dataclass(frozen=True)
class BallIndicator(SourceTerm):
    """Indicator of the closed disc of radius ``R0`` about the origin."""

    R0: float
    radial = True

    def __post_init__(self):
        _positive("R0", self.R0)

    def __call__(self, x1, x2):
        return (np.hypot(x1, x2) <= self.R0).astype(float)

    def profile(self, r):
        return (np.asarray(r, dtype=float) <= self.R0).astype(float)

    max_value = 1.0

    @property
    def support_radius(self):
        return float(self.R0)

    lipschitz_bound = math.inf


@dataclass(frozen=True)
class TwinBalls(SourceTerm):
    """Indicator of two closed discs of radius ``R0`` centred at ``(+-offset, 0)``."""

    R0: float
    offset: float = 0.8

    def __post_init__(self):
        _positive("R0", self.R0)

    def __call__(self, x1, x2):
        a = self.offset
        inside = (np.hypot(x1 - a, x2) <= self.R0) | (np.hypot(x1 + a, x2) <= self.R0)
        return inside.astype(float)

    max_value = 1.0

    @property
    def support_radius(self):
        return float(self.R0 + abs(self.offset))

    lipschitz_bound = math.inf


@dataclass(frozen=True, eq=False)
class RadialTable(SourceTerm):
    """Tabulated radial profile, linearly interpolated, zero past the last radius."""

    radii: tuple
    values: tuple
    radial = True

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ValueError("radii and values must be 1-d sequences of equal length >= 2")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("radii must be nonnegative and strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("table values must be finite and nonnegative")
        object.__setattr__(self, "radii", tuple(r))
        object.__setattr__(self, "values", tuple(v))

    @classmethod
    def from_csv(cls, path) -> RadialTable:
        with Path(path).open(newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
        if rows and rows[0][0].strip().lower() == "radius":
            rows = rows[1:]
        radii = [float(a) for a, _ in rows]
        values = [float(b) for _, b in rows]
        return cls(tuple(radii), tuple(values))

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        rr, vv = np.asarray(self.radii), np.asarray(self.values)
        out = np.interp(r, rr, vv)
        return np.where(r > rr[-1], 0.0, out)

    def __call__(self, x1, x2):
        return self.profile(np.hypot(x1, x2))

    @property
    def max_value(self):
        return float(max(self.values))

    @property
    def support_radius(self):
        nz = [r for r, v in zip(self.radii, self.values) if v > 0]
        if not nz:
            return 0.0
        k = self.radii.index(nz[-1])
        return float(self.radii[min(k + 1, len(self.radii) - 1)])

    @property
    def lipschitz_bound(self):
        if self.values[-1] > 0:
            return math.inf  # jump to zero past the table
        slopes = np.abs(np.diff(self.values) / np.diff(self.radii))
        return float(slopes.max())

    def __eq__(self, other):
        return (isinstance(other, RadialTable) and self.radii == other.radii
                and self.values == other.values)

    __hash__ = None


def eval_source(src: SourceTerm, x) -> float:
    return float(src(np.asarray(x[0], dtype=float), np.asarray(x[1], dtype=float)))


def max_value(src: SourceTerm) -> float:
    return src.max_value


def support_radius(src: SourceTerm) -> float:
    return src.support_radius


def lipschitz_bound(src: SourceTerm) -> float:
    return src.lipschitz_bound


def sample_to_field(src: SourceTerm, spec: GridSpec) -> Field:
    x1, x2 = spec.mesh()
    return Field(spec, src(x1, x2))


_KINDS = {
    "zero": (ZeroSource, ()),
    "radial_cone": (RadialCone, ("r",)),
    "l1_cone": (L1Cone, ("r",)),
    "twin_cones": (TwinCones, ("R0", "offset")),
    "ball_indicator": (BallIndicator, ("R0",)),
    "twin_balls": (TwinBalls, ("R0", "offset")),
}


def source_from_config(kind: str, **params) -> SourceTerm:
    """Build a source from ``source.kind`` and its numeric parameters."""
    if kind == "radial_table":
        path = params.get("table_path")
        if path is None:
            raise ValueError("radial_table source needs source.table_path")
        return RadialTable.from_csv(path)
    if kind not in _KINDS:
        raise ValueError(f"unknown source kind {kind!r}")
    cls, names = _KINDS[kind]
    kwargs = {k: float(params[k]) for k in names if params.get(k) is not None}
    return cls(**kwargs)
