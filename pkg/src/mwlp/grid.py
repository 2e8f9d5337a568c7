"""Periodic cell-center grids, vector-valued grid functions and coefficient sequences.

The domain is the unit torus ``[0, 1)^n`` (``n`` is 1 or 2) sampled at the
cell centers ``(i + 1/2) / N`` with ``N = 2**J`` points per axis.  Grid arrays
always carry the spatial axes first, followed by value axes: a vector field
with ``m`` components has shape ``(N,)*n + (m,)`` and a matrix field
``(N,)*n + (m, m)``.

Dyadic cubes of level ``j <= J`` are unions of whole cells, so cube-wise
reductions are plain reshapes (:func:`cube_blocks`, :func:`block_mean`).
"""
from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .dyadic import DyadicCube
from .errors import EmptyCube, MissingCube

__all__ = [
    "GridFunction",
    "CoeffSequence",
    "frequencies",
    "frequency_radius",
    "apply_multiplier",
    "fourier_coefficients",
    "from_fourier_coefficients",
    "cube_blocks",
    "block_mean",
    "block_max",
    "expand_levels",
    "roll_cells",
    "grid_level",
]


def grid_level(N: int) -> int:
    J = int(round(math.log2(N)))
    if 2**J != N:
        raise ValueError(f"grid size {N} is not a power of two")
    return J


def frequencies(N: int, n: int) -> list[np.ndarray]:
    """Integer wavenumbers per axis, in FFT order, shaped for broadcasting."""
    nu = np.fft.fftfreq(N, 1.0 / N)
    out = []
    for axis in range(n):
        shape = [1] * n
        shape[axis] = N
        out.append(nu.reshape(shape))
    return out


def frequency_radius(N: int, n: int) -> np.ndarray:
    """Euclidean length of the integer wavenumber on the FFT lattice."""
    nus = frequencies(N, n)
    return np.sqrt(sum(v**2 for v in nus))


def _grid_axes(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def apply_multiplier(values: np.ndarray, multiplier: np.ndarray, n: int) -> np.ndarray:
    """Fourier-multiply each component of ``values`` by a lattice multiplier.

    The half-cell phase of the cell-center sampling cancels between the
    forward and inverse transforms, so no correction is needed here.
    """
    axes = _grid_axes(n)
    spec = np.fft.fftn(values, axes=axes)
    extra = values.ndim - n
    spec *= multiplier.reshape(multiplier.shape + (1,) * extra)
    return np.fft.ifftn(spec, axes=axes)


def _half_cell_phase(N: int, n: int) -> np.ndarray:
    nus = frequencies(N, n)
    return np.exp(-1j * np.pi * sum(nus) / N)


def fourier_coefficients(values: np.ndarray, n: int) -> np.ndarray:
    """Torus Fourier coefficients ``f^(nu) = ∫ f e^{-2πi nu·x}`` of a sampled
    trigonometric polynomial, in FFT order."""
    N = values.shape[0]
    spec = np.fft.fftn(values, axes=_grid_axes(n)) / N**n
    phase = _half_cell_phase(N, n)
    return spec * phase.reshape(phase.shape + (1,) * (values.ndim - n))


def from_fourier_coefficients(coeffs: np.ndarray, n: int) -> np.ndarray:
    N = coeffs.shape[0]
    phase = np.conj(_half_cell_phase(N, n))
    spec = coeffs * phase.reshape(phase.shape + (1,) * (coeffs.ndim - n)) * N**n
    return np.fft.ifftn(spec, axes=_grid_axes(n))


def cube_blocks(a: np.ndarray, level: int, n: int) -> np.ndarray:
    """View a grid array as ``(2^level,)*n + (cells per cube,) + rest``."""
    N = a.shape[0]
    J = grid_level(N)
    if level > J:
        raise EmptyCube(f"level {level} is finer than the grid (J={J})")
    if level < 0:
        raise EmptyCube("negative levels are not torus cubes")
    c, b = 2**level, N >> level
    rest = a.shape[n:]
    if n == 1:
        return a.reshape((c, b) + rest)
    blk = a.reshape((c, b, c, b) + rest)
    blk = np.moveaxis(blk, 2, 1)
    return blk.reshape((c, c, b * b) + rest)


def block_mean(a: np.ndarray, level: int, n: int) -> np.ndarray:
    return cube_blocks(a, level, n).mean(axis=n)


def block_max(a: np.ndarray, level: int, n: int) -> np.ndarray:
    return cube_blocks(a, level, n).max(axis=n)


def expand_levels(c: np.ndarray, level: int, J: int, n: int) -> np.ndarray:
    """Broadcast per-cube values of ``level`` back onto the ``2**J`` grid."""
    b = 2 ** (J - level)
    out = c
    for axis in range(n):
        out = np.repeat(out, b, axis=axis)
    return out


def roll_cells(a: np.ndarray, shift: tuple[int, ...], n: int) -> np.ndarray:
    """Periodically translate so that cell ``shift`` becomes cell 0."""
    return np.roll(a, tuple(-s for s in shift), axis=_grid_axes(n))


@dataclass
class GridFunction:
    """A ``C^m``-valued function sampled at the cell centers of the torus."""

    values: np.ndarray
    n: int = 1
    mean_zero: bool = False

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == self.n:
            v = v[..., None]
        if v.ndim != self.n + 1:
            raise ValueError(f"expected {self.n} grid axes plus one component axis, got shape {v.shape}")
        N = v.shape[0]
        grid_level(N)
        if any(s != N for s in v.shape[: self.n]):
            raise ValueError(f"grid must be square, got shape {v.shape}")
        self.values = v.astype(complex, copy=False)
        if self.mean_zero:
            means = np.abs(self.values.reshape(-1, self.m).mean(axis=0))
            scale = max(np.abs(self.values).max(), 1e-300)
            if np.any(means > 1e-12 * scale):
                raise ValueError("mean_zero flag set but component means do not vanish")

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def J(self) -> int:
        return grid_level(self.N)

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    @property
    def cell_volume(self) -> float:
        return float(self.N) ** (-self.n)

    @classmethod
    def zeros(cls, J: int, n: int = 1, m: int = 1) -> "GridFunction":
        return cls(np.zeros((2**J,) * n + (m,), dtype=complex), n)

    @classmethod
    def from_callable(cls, func, J: int, n: int = 1) -> "GridFunction":
        """Sample ``func(x)`` where ``x`` has shape ``(N,)*n + (n,)``."""
        return cls(np.asarray(func(cell_centers(J, n))), n)

    @classmethod
    def from_fourier(cls, coeffs: np.ndarray, n: int = 1) -> "GridFunction":
        return cls(from_fourier_coefficients(coeffs, n), n)

    def fourier(self) -> np.ndarray:
        return fourier_coefficients(self.values, self.n)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(values, self.n)

    def l2_norm(self) -> float:
        return float(np.sqrt((np.abs(self.values) ** 2).sum() * self.cell_volume))

    def component_means(self) -> np.ndarray:
        return self.values.reshape(-1, self.m).mean(axis=0)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "GridFunction":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def transform(self, matrix: np.ndarray) -> "GridFunction":
        """Apply a constant ``m' x m`` matrix to every sample."""
        return self.with_values(self.values @ np.asarray(matrix).T)

    # -- file format -------------------------------------------------------

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.n} {self.N} {self.m}\n")
        flat = self.values.reshape(-1, self.m)
        for row in flat:
            fields = []
            for z in row:
                fields.append(repr(float(z.real)))
                fields.append(repr(float(z.imag)))
            buf.write(" ".join(fields) + "\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "GridFunction":
        lines = text.split("\n")
        n, N, m = (int(t) for t in lines[0].split())
        rows = [ln for ln in lines[1:] if ln.strip()]
        if len(rows) != N**n:
            raise ValueError(f"expected {N**n} sample rows, found {len(rows)}")
        data = np.array([[float(t) for t in ln.split()] for ln in rows])
        if data.shape[1] != 2 * m:
            raise ValueError(f"expected {2 * m} fields per row, found {data.shape[1]}")
        vals = data[:, 0::2] + 1j * data[:, 1::2]
        return cls(vals.reshape((N,) * n + (m,)), n)

    def to_bytes(self) -> bytes:
        header = f"{self.n} {self.N} {self.m}\n".encode("ascii")
        flat = np.empty(self.values.size * 2, dtype="<f8")
        v = self.values.reshape(-1)
        flat[0::2], flat[1::2] = v.real, v.imag
        return header + flat.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridFunction":
        head, _, body = data.partition(b"\n")
        n, N, m = (int(t) for t in head.split())
        flat = np.frombuffer(body, dtype="<f8")
        if flat.size != 2 * m * N**n:
            raise ValueError("binary payload size does not match header")
        vals = flat[0::2] + 1j * flat[1::2]
        return cls(vals.reshape((N,) * n + (m,)), n)

    def save(self, path, binary: bool = False) -> None:
        path = Path(path)
        if binary:
            path.write_bytes(self.to_bytes())
        else:
            path.write_text(self.dumps(), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path, binary: bool = False) -> "GridFunction":
        path = Path(path)
        if binary:
            return cls.from_bytes(path.read_bytes())
        return cls.loads(path.read_text(encoding="utf-8"))


def cell_centers(J: int, n: int) -> np.ndarray:
    N = 2**J
    x = (np.arange(N) + 0.5) / N
    grids = np.meshgrid(*([x] * n), indexing="ij")
    return np.stack(grids, axis=-1)


@dataclass
class CoeffSequence:
    """Cube-indexed ``C^m`` coefficients, stored level by level.

    ``levels[j]`` has shape ``(2**j,)*n + (m,)`` indexed by the cube index
    ``k``.  ``homogeneous=False`` marks sequences whose level 0 carries the
    low-pass coefficients.
    """

    levels: dict[int, np.ndarray]
    n: int = 1
    homogeneous: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.levels = {int(j): np.asarray(v, dtype=complex) for j, v in sorted(self.levels.items())}
        for j, v in self.levels.items():
            if v.shape[: self.n] != (2**j,) * self.n or v.ndim != self.n + 1:
                raise ValueError(f"level {j} has shape {v.shape}")

    @property
    def m(self) -> int:
        return next(iter(self.levels.values())).shape[-1]

    @property
    def jmin(self) -> int:
        return min(self.levels)

    @property
    def jmax(self) -> int:
        return max(self.levels)

    def __getitem__(self, Q: DyadicCube) -> np.ndarray:
        try:
            return self.levels[Q.j][Q.k]
        except (KeyError, IndexError):
            raise MissingCube(str(Q)) from None

    def __setitem__(self, Q: DyadicCube, value) -> None:
        if Q.j not in self.levels:
            raise MissingCube(str(Q))
        self.levels[Q.j][Q.k] = value

    def items(self) -> Iterator[tuple[DyadicCube, np.ndarray]]:
        for j, arr in self.levels.items():
            for k in np.ndindex(arr.shape[: self.n]):
                yield DyadicCube(j, k), arr[k]

    def zeros_like(self) -> "CoeffSequence":
        return CoeffSequence({j: np.zeros_like(v) for j, v in self.levels.items()},
                             self.n, self.homogeneous)

    def map(self, func) -> "CoeffSequence":
        return CoeffSequence({j: func(v) for j, v in self.levels.items()}, self.n,
                             self.homogeneous)

    def __add__(self, other: "CoeffSequence") -> "CoeffSequence":
        return CoeffSequence({j: v + other.levels[j] for j, v in self.levels.items()},
                             self.n, self.homogeneous)

    def __mul__(self, c) -> "CoeffSequence":
        return self.map(lambda v: v * c)

    __rmul__ = __mul__

    def flat(self) -> np.ndarray:
        """Stack all cubes as rows ``(num_cubes, m)`` ordered by level then index."""
        return np.concatenate([v.reshape(-1, v.shape[-1]) for v in self.levels.values()])

    @classmethod
    def from_flat(cls, flat: np.ndarray, levels, n: int, homogeneous: bool = True) -> "CoeffSequence":
        out, pos = {}, 0
        for j in levels:
            size = 2 ** (j * n)
            out[j] = flat[pos: pos + size].reshape((2**j,) * n + (flat.shape[-1],))
            pos += size
        return cls(out, n, homogeneous)

    def to_csv_rows(self, generator: int | None = None) -> Iterator[list]:
        for Q, v in self.items():
            row = [] if generator is None else [generator]
            row += [Q.j, *Q.k]
            for z in v:
                row += [float(z.real), float(z.imag)]
            yield row
