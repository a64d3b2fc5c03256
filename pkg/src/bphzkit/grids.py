"""Periodic spacetime grids, coordinates, weights, noise, and field IO.

The fundamental cell is [0,T) x [0,L)^d with N_t x N_x^d nodes; the time
direction scales parabolically (one time derivative counts as order 2).
Fields are real float64 arrays in C order, time axis first.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

__all__ = [
    "Grid",
    "GridField",
    "snorm",
    "sample_noise",
    "write_field",
    "read_field",
    "NOISE_LAWS",
]

_MAGIC = b"BPHZFL01"
_SCALING_TAG = b"parabolic-2ticks"  # 16 bytes: time counts twice in |.|_s


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """A periodic (1+d)-dimensional grid; extents default to a unit cell."""

    d: int
    nt: int
    nx: int
    T: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("spatial dimension must be >= 1")
        if not (_is_pow2(self.nt) and _is_pow2(self.nx)):
            raise ValueError("grid sizes must be powers of two")
        if not (self.T > 0 and self.L > 0):
            raise ValueError("extents must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nt,) + (self.nx,) * self.d

    @property
    def dim(self) -> int:
        return 1 + self.d

    @property
    def spacings(self) -> tuple[float, ...]:
        return (self.T / self.nt,) + (self.L / self.nx,) * self.d

    @property
    def extents(self) -> tuple[float, ...]:
        return (self.T,) + (self.L,) * self.d

    @property
    def cell_volume(self) -> float:
        out = 1.0
        for h in self.spacings:
            out *= h
        return out

    @property
    def size(self) -> int:
        return self.nt * self.nx**self.d

    def axis_coords(self, axis: int) -> np.ndarray:
        n = self.nt if axis == 0 else self.nx
        return np.arange(n) * self.spacings[axis]

    def coords(self) -> list[np.ndarray]:
        """Plain cell coordinates per axis, broadcastable to `shape`."""
        return list(
            np.meshgrid(*(self.axis_coords(i) for i in range(self.dim)), indexing="ij", sparse=True)
        )

    def minimage_coords(self) -> list[np.ndarray]:
        """Coordinates folded to the centered cell [-E/2, E/2) per axis."""
        out = []
        for i, c in enumerate(self.coords()):
            e = self.extents[i]
            out.append((c + e / 2) % e - e / 2)
        return out

    def minimage_axis(self, axis: int) -> np.ndarray:
        """1-d folded coordinates along one axis."""
        e = self.extents[axis]
        return (self.axis_coords(axis) + e / 2) % e - e / 2

    def snorm_field(self) -> np.ndarray:
        """|x|_s of the minimal-image offset of every node from the origin."""
        cs = self.minimage_coords()
        return snorm(cs)

    def weight(self, a: float) -> np.ndarray:
        """w_a(x) = (1+|x|_s)^(-a) on minimal-image offsets."""
        if a == 0:
            return np.ones(self.shape)
        return (1.0 + self.snorm_field()) ** (-a)

    def thetas(self) -> list[np.ndarray]:
        """Angular frequencies per axis, broadcastable to `shape`."""
        axes = []
        for i in range(self.dim):
            n = self.nt if i == 0 else self.nx
            axes.append(2 * np.pi * np.fft.fftfreq(n, d=self.spacings[i]))
        return list(np.meshgrid(*axes, indexing="ij", sparse=True))

    def zero_field(self) -> "GridField":
        return GridField(self, np.zeros(self.shape))

    def constant_field(self, value: float) -> "GridField":
        return GridField(self, np.full(self.shape, float(value)))


def snorm(offsets: Iterable[np.ndarray]) -> np.ndarray:
    """The parabolic norm sqrt(|x_1|) + sum_j |x_j| of an offset."""
    it = iter(offsets)
    total = np.sqrt(np.abs(next(it)))
    for c in it:
        total = total + np.abs(c)
    return total


@dataclass
class GridField:
    """Real values on a grid, with optional provenance metadata."""

    grid: Grid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def with_values(self, values: np.ndarray, label: str | None = None) -> "GridField":
        return GridField(self.grid, values, self.label if label is None else label)

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self.grid, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        return GridField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridField":
        return GridField(self.grid, self.values * scalar)

    __rmul__ = __mul__


NOISE_LAWS = ("gaussian-white", "uniform-white")


def sample_noise(grid: Grid, law: str, seed: int, stream: int = 0) -> GridField:
    """One white-noise realization: i.i.d. unit-variance node values
    scaled by cell_volume^(-1/2), so <xi, phi> has variance ~ |phi|_L2^2.

    The RNG is keyed on (seed, stream): distinct streams are independent
    and reproducible.
    """
    rng = np.random.default_rng([int(seed), int(stream)])
    scale = grid.cell_volume ** (-0.5)
    if law == "gaussian-white":
        vals = rng.standard_normal(grid.shape) * scale
    elif law == "uniform-white":
        half = np.sqrt(3.0)  # U(-sqrt3, sqrt3) has unit variance
        vals = rng.uniform(-half, half, grid.shape) * scale
    else:
        raise ValueError(f"unknown noise law {law!r}; known: {NOISE_LAWS}")
    return GridField(grid, vals, label=law)


# ---------------------------------------------------------------------------
# binary field files

_HEADER = struct.Struct("<8sIIII dd 16s")


def write_field(path, f: GridField) -> None:
    g = f.grid
    header = _HEADER.pack(
        _MAGIC, 1, g.d, g.nt, g.nx, float(g.T), float(g.L), _SCALING_TAG
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path) -> GridField:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise ValueError("truncated field file header")
        magic, version, d, nt, nx, T, L, tag = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError("not a field file (bad magic)")
        if version != 1:
            raise ValueError(f"unsupported field file version {version}")
        if tag.rstrip(b"\0") != _SCALING_TAG.rstrip(b"\0"):
            raise ValueError(f"unknown scaling tag {tag!r}")
        grid = Grid(d, nt, nx, T, L)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != grid.size:
        raise ValueError("field payload size does not match header")
    return GridField(grid, data.reshape(grid.shape).copy())
