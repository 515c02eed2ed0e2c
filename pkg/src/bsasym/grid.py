"""Uniform square grid on [-R, R]^2 and scalar fields sampled on it."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "node_coord",
    "neumann_get",
    "mean",
    "l2_seminorm",
    "sup",
    "inf",
    "write_heightmap",
    "read_heightmap",
]


@dataclass(frozen=True)
class GridSpec:
    """Node set ``x_ij = (i dx, j dx)`` for ``-N <= i, j <= N``.

    Only ``R`` and ``N`` are stored; ``dx`` is always derived from them.
    """

    R: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R > 0):
            raise ValueError(f"half width R must be positive, got {self.R!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"index radius N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def dx(self) -> float:
        return self.R / self.N

    @property
    def n_nodes(self) -> int:
        """Nodes per axis, ``2N + 1``."""
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_nodes, self.n_nodes)

    def axis(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1) * self.dx

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(x1, x2)``, each indexed ``[j + N, i + N]``."""
        a = self.axis()
        x2, x1 = np.meshgrid(a, a, indexing="ij")
        return x1, x2

    def radius(self) -> np.ndarray:
        x1, x2 = self.mesh()
        return np.hypot(x1, x2)


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar samples on a :class:`GridSpec`.

    ``values[j + N, i + N]`` holds the sample at node ``(i, j)``, so the
    array is row-major in ``j`` then ``i``.
    """

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != self.spec.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, spec: GridSpec) -> Field:
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def constant(cls, spec: GridSpec, c: float) -> Field:
        return cls(spec, np.full(spec.shape, float(c)))

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> Field:
        """Sample ``func(x1, x2)`` (vectorized over coordinate arrays)."""
        x1, x2 = spec.mesh()
        return cls(spec, np.broadcast_to(func(x1, x2), spec.shape))

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        N = self.spec.N
        if not (-N <= i <= N and -N <= j <= N):
            raise IndexError(f"node ({i}, {j}) outside [-{N}, {N}]^2")
        return float(self.values[j + N, i + N])

    def _other(self, other):
        if isinstance(other, Field):
            if other.spec != self.spec:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.spec, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.spec, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.spec, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.spec, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.spec, self.values / self._other(other))

    def __neg__(self):
        return Field(self.spec, -self.values)

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.values, other.values)

    __hash__ = None


def _check_index(spec: GridSpec, i: int, j: int, reach: int = 0) -> None:
    lim = spec.N + reach
    if not (-lim <= i <= lim and -lim <= j <= lim):
        raise IndexError(f"index ({i}, {j}) outside [-{lim}, {lim}]^2")


def node_coord(spec: GridSpec, i: int, j: int) -> tuple[float, float]:
    _check_index(spec, i, j)
    return (i * spec.dx, j * spec.dx)


def neumann_get(u: Field, i: int, j: int) -> float:
    """Value at ``(i, j)`` with out-of-range indices clamped to the boundary.

    Valid for ``|i|, |j| <= N + 2``; this is the zero-normal-derivative
    ghost rule applied once per missing layer.
    """
    N = u.spec.N
    _check_index(u.spec, i, j, reach=2)
    ic = min(max(i, -N), N)
    jc = min(max(j, -N), N)
    return float(u.values[jc + N, ic + N])


def pad_neumann(values: np.ndarray, width: int = 2) -> np.ndarray:
    """Array with ``width`` ghost layers filled by the clamping rule."""
    return np.pad(values, width, mode="edge")


def mean(u: Field) -> float:
    return float(np.mean(u.values))


def l2_seminorm(u: Field) -> float:
    dx = u.spec.dx
    return float(np.sqrt(np.sum(u.values**2) * dx * dx))


def sup(u: Field) -> float:
    return float(np.max(u.values))


def inf(u: Field) -> float:
    return float(np.min(u.values))


def write_heightmap(path, u: Field, t: float) -> None:
    """Write ``u`` as text: a ``# R= N= t=`` header then one CSV row per ``j``."""
    spec = u.spec
    lines = [f"# R={spec.R!r} N={spec.N} t={float(t)!r}"]
    for row in u.values:
        lines.append(",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_heightmap(path) -> tuple[Field, float]:
    text = Path(path).read_text().splitlines()
    header = text[0]
    if not header.startswith("#"):
        raise ValueError("heightmap header missing")
    kv = dict(tok.split("=", 1) for tok in header[1:].split())
    spec = GridSpec(float(kv["R"]), int(kv["N"]))
    values = np.array([[float(v) for v in line.split(",")] for line in text[1:] if line])
    return Field(spec, values), float(kv["t"])
