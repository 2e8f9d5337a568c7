"""Dyadic cubes, scale ranges and the almost-diagonal decay weight.

A cube ``Q_{j,k}`` has side ``2**-j`` and lower corner ``2**-j * k``.  Geometry
is kept in exact dyadic rationals (:class:`fractions.Fraction`) so containment
tests never suffer from rounding.  Distances may be taken on the unit torus
``[0, 1)^n`` with the minimum-image convention.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import CoveringCapExceeded, ScaleOutOfRange

__all__ = [
    "DyadicCube",
    "ScaleRange",
    "cube_geometry",
    "distance_factor",
    "omega",
    "covering_level",
    "fit_covering_constant",
    "torus_cubes",
    "omega_matrix",
]


@dataclass(frozen=True, order=True)
class DyadicCube:
    j: int
    k: tuple[int, ...]

    def __post_init__(self):
        k = tuple(int(v) for v in np.atleast_1d(self.k))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "j", int(self.j))
        if len(k) not in (1, 2):
            raise ValueError(f"cube dimension must be 1 or 2, got {len(k)}")

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** (-self.j)

    @property
    def corner(self) -> tuple[Fraction, ...]:
        s = self.side
        return tuple(s * ki for ki in self.k)

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.j * self.n)

    def on_torus(self) -> bool:
        return self.j >= 0 and all(0 <= ki < 2**self.j for ki in self.k)

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.j - 1, tuple(ki // 2 for ki in self.k))

    def children(self) -> list["DyadicCube"]:
        offsets = itertools.product((0, 1), repeat=self.n)
        return [DyadicCube(self.j + 1, tuple(2 * ki + o for ki, o in zip(self.k, off)))
                for off in offsets]

    def contains(self, other: "DyadicCube") -> bool:
        """Closed-cube containment ``other ⊆ self`` in exact arithmetic."""
        return _interval_contains(self.corner, self.side, other.corner, other.side)

    def __str__(self) -> str:
        return f"{self.j}:" + ",".join(str(ki) for ki in self.k)

    @classmethod
    def parse(cls, text: str) -> "DyadicCube":
        level, _, idx = text.strip().partition(":")
        if not idx:
            raise ValueError(f"malformed cube {text!r}, expected 'j:k1,...,kn'")
        return cls(int(level), tuple(int(v) for v in idx.split(",")))


@dataclass(frozen=True)
class ScaleRange:
    """Inclusive range of levels ``jmin..jmax``.

    Inhomogeneous ranges start at level 0, where the low-pass function takes
    the place of the band-pass one.
    """

    jmin: int
    jmax: int
    homogeneous: bool = True

    def __post_init__(self):
        if self.jmin > self.jmax:
            raise ValueError(f"empty scale range [{self.jmin}, {self.jmax}]")
        if not self.homogeneous and self.jmin != 0:
            raise ValueError("inhomogeneous ranges must start at level 0")

    @classmethod
    def default(cls, J: int, homogeneous: bool = True) -> "ScaleRange":
        return cls(1 if homogeneous else 0, J - 1, homogeneous)

    def levels(self) -> range:
        return range(self.jmin, self.jmax + 1)

    def __contains__(self, j) -> bool:
        return self.jmin <= j <= self.jmax

    def __len__(self) -> int:
        return self.jmax - self.jmin + 1

    def check_grid(self, J: int, allow_finest: bool = True) -> None:
        top = J if allow_finest else J - 1
        if self.jmin < 0 or self.jmax > top:
            raise ScaleOutOfRange(
                f"scale range [{self.jmin}, {self.jmax}] outside [0, {top}] for J={J}")

    def grow(self, levels: int) -> "ScaleRange":
        return ScaleRange(self.jmin, self.jmax + levels, self.homogeneous)


def _interval_contains(outer_corner, outer_side, inner_corner, inner_side) -> bool:
    return all(oc <= ic and ic + inner_side <= oc + outer_side
               for oc, ic in zip(outer_corner, inner_corner))


def cube_geometry(Q: DyadicCube) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Side length and lower corner of ``Q``, exact."""
    return Q.side, Q.corner


def _separation(Q: DyadicCube, P: DyadicCube, periodic: bool) -> float:
    if Q.n != P.n:
        raise ValueError(f"dimension mismatch: {Q.n} vs {P.n}")
    diff = [float(a - b) for a, b in zip(Q.corner, P.corner)]
    if periodic:
        diff = [d - round(d) for d in diff]
    return math.hypot(*diff)


def distance_factor(Q: DyadicCube, P: DyadicCube, periodic: bool = False) -> float:
    """``1 + |x_Q - x_P| / max(l(Q), l(P))``."""
    scale = float(max(Q.side, P.side))
    return 1.0 + _separation(Q, P, periodic) / scale


def omega(Q: DyadicCube, P: DyadicCube, a1: float, a2: float, R: float,
          periodic: bool = False) -> float:
    if R < 0:
        raise ValueError("R must be nonnegative")
    ratio = 2.0 ** (Q.j - P.j)  # l(P) / l(Q)
    size = min(ratio**a1, ratio ** (-a2))
    return size * distance_factor(Q, P, periodic) ** (-R)


def covering_level(Q: DyadicCube, P: DyadicCube, periodic: bool = False,
                   cap: int = 64) -> int:
    """Least ``j >= 0`` with ``Q`` inside the concentric dilate ``2^j P``.

    On the torus the dilate wraps around, so every cube is covered once the
    dilate has side at least 1.
    """
    if Q.n != P.n:
        raise ValueError(f"dimension mismatch: {Q.n} vs {P.n}")
    half = P.side / 2
    center = tuple(c + half for c in P.corner)
    qc = Q.corner
    if periodic:
        # shift Q by integers so its corner is nearest to the center of P
        shifted = []
        for c, x in zip(center, qc):
            mid = x + Q.side / 2
            shifted.append(x - round(mid - c))
        qc = tuple(shifted)
    for j in range(cap + 1):
        side = P.side * 2**j
        if periodic and side >= 1:
            return j
        corner = tuple(c - side / 2 for c in center)
        if _interval_contains(corner, side, qc, Q.side):
            return j
    raise CoveringCapExceeded(f"{Q} not covered by 2^j {P} for j <= {cap}")


def fit_covering_constant(cubes: Sequence[DyadicCube], periodic: bool = False) -> float:
    """Smallest ``c`` with ``2^j <= c max(1, l(Q)/l(P)) (1 + |x_P-x_Q|/max l)``
    over all ordered pairs of ``cubes``."""
    worst = 0.0
    for Q in cubes:
        for P in cubes:
            j = covering_level(Q, P, periodic)
            bound = max(1.0, float(Q.side / P.side)) * distance_factor(Q, P, periodic)
            worst = max(worst, 2.0**j / bound)
    return worst


def torus_cubes(level: int, n: int) -> Iterator[DyadicCube]:
    """All level-``level`` cubes of the unit torus in row-major index order."""
    if level < 0:
        raise ScaleOutOfRange("negative levels have no cubes on the unit torus")
    for k in itertools.product(range(2**level), repeat=n):
        yield DyadicCube(level, k)


def _level_coords(level: int, n: int) -> np.ndarray:
    idx = np.indices((2**level,) * n).reshape(n, -1).T
    return idx * 2.0 ** (-level)


def omega_matrix(levels: Sequence[int], n: int, a1: float, a2: float, R: float,
                 periodic: bool = True) -> np.ndarray:
    """Dense matrix ``omega(Q, P)`` over all torus cubes of ``levels``.

    Rows and columns are ordered by level, then row-major cube index, which is
    the flattening order used by :class:`mwlp.grid.CoeffSequence`.
    """
    corners = np.concatenate([_level_coords(j, n) for j in levels])
    jj = np.concatenate([np.full(2 ** (j * n), j) for j in levels])
    diff = corners[:, None, :] - corners[None, :, :]
    if periodic:
        diff -= np.round(diff)
    dist = np.sqrt((diff**2).sum(-1))
    side = 2.0 ** (-np.minimum(jj[:, None], jj[None, :]))
    ratio = 2.0 ** (jj[:, None] - jj[None, :]).astype(float)
    size = np.minimum(ratio**a1, ratio ** (-a2))
    return size * (1.0 + dist / side) ** (-R)
