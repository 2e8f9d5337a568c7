"""Littlewood-Paley systems on the periodic grid.

Frequencies are angular: the lattice wavenumber ``nu`` corresponds to
``xi = 2*pi*nu`` and the level-``j`` dilate has multiplier
``phi_hat(2**-j * xi)``.  With this convention the level-``j`` pieces have
spectrum inside ``|nu| <= 2**j / pi``, strictly below the Nyquist frequency
of a ``2**j`` point subsample, so sampling at cube points and resynthesis are
exact.

The window is of Meyer type: ``phi_hat**2`` rises on ``[1/2, 1]`` and falls on
``[1, 2]`` along the polynomial bump ``t**4 (35 - 84 t + 70 t**2 - 20 t**3)``
so the dilated squares sum to one and the dual function equals ``phi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dyadic import DyadicCube, ScaleRange
from .errors import ScaleOutOfRange
from .grid import (CoeffSequence, GridFunction, apply_multiplier, frequencies,
                   frequency_radius)

__all__ = [
    "bump",
    "window",
    "low_window",
    "AdmissibleSystem",
    "build_admissible",
    "lp_convolve",
    "phi_coeffs",
    "synthesize",
    "psi_molecule",
    "riesz",
    "derivative",
    "kernel_size_check",
    "molecule_decay_check",
]

_KINDS = ("phi", "psi", "Phi", "Psi")


def bump(t):
    """Smooth step from 0 to 1 on ``[0, 1]``, with ``v(t) + v(1 - t) = 1``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t**4 * (35.0 - 84.0 * t + 70.0 * t**2 - 20.0 * t**3)


def window(xi):
    """Band-pass profile, supported in ``1/2 <= |xi| <= 2``."""
    r = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(r)
    up = (r >= 0.5) & (r <= 1.0)
    down = (r > 1.0) & (r <= 2.0)
    out[up] = np.sqrt(bump(2.0 * r[up] - 1.0))
    out[down] = np.sqrt(1.0 - bump(r[down] - 1.0))
    return out


def low_window(xi):
    """Low-pass profile: 1 on ``|xi| <= 1``, vanishing beyond 2.

    Its square is the sum of the squared band-pass dilates at levels ``j <= 0``.
    """
    r = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    down = (r > 1.0) & (r <= 2.0)
    out[down] = np.sqrt(1.0 - bump(r[down] - 1.0))
    return out


@dataclass
class AdmissibleSystem:
    """Tabulated Meyer-type analysis/synthesis pair on a ``2**J`` grid.

    Attributes
    ----------
    J, n : int
        Grid level and spatial dimension.
    lower_bound : float
        ``min |phi_hat|`` over ``3/5 <= |xi| <= 5/3``.
    """

    J: int
    n: int = 1
    lower_bound: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return 2**self.J

    @property
    def band_limit(self) -> int:
        """Largest ``|nu|`` at which the truncated partition is still exact."""
        return int(math.floor(2 ** (self.J - 1) / (2 * math.pi)))

    def default_range(self, homogeneous: bool = True) -> ScaleRange:
        return ScaleRange.default(self.J, homogeneous)

    def angular_radius(self) -> np.ndarray:
        return 2 * np.pi * frequency_radius(self.N, self.n)

    def multiplier(self, j: int, which: str = "phi") -> np.ndarray:
        if which not in _KINDS:
            raise ValueError(f"unknown filter {which!r}, expected one of {_KINDS}")
        low = which in ("Phi", "Psi")
        if low and j != 0:
            raise ScaleOutOfRange("the low-pass filter lives at level 0 only")
        if not low and not 1 <= j <= self.J - 1:
            raise ScaleOutOfRange(f"band-pass level {j} outside [1, {self.J - 1}]")
        key = (j, low)
        if key not in self._cache:
            xi = self.angular_radius()
            self._cache[key] = low_window(xi) if low else window(xi * 2.0 ** (-j))
        return self._cache[key]

    def partition_sum(self, homogeneous: bool = True) -> np.ndarray:
        rng = self.default_range(homogeneous)
        total = np.zeros((self.N,) * self.n)
        for j in rng.levels():
            which = "Phi" if (j == 0 and not homogeneous) else "phi"
            total += self.multiplier(j, which) ** 2
        return total

    def band_mask(self) -> np.ndarray:
        """Lattice frequencies where the truncated partition sums to one."""
        return frequency_radius(self.N, self.n) <= self.band_limit


def build_admissible(J: int, n: int = 1) -> AdmissibleSystem:
    if J < 4:
        raise ValueError(f"J must be at least 4, got {J}")
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    t = np.linspace(0.6, 5.0 / 3.0, 20001)
    return AdmissibleSystem(J, n, float(window(t).min()))


def _check_grid(f: GridFunction, sys: AdmissibleSystem) -> None:
    if f.N != sys.N or f.n != sys.n:
        raise ValueError(f"grid (n={f.n}, N={f.N}) does not match system (n={sys.n}, N={sys.N})")


def lp_convolve(f: GridFunction, sys: AdmissibleSystem, j: int, which: str = "phi") -> GridFunction:
    """Componentwise ``phi_j * f`` (or the low-pass ``Phi * f`` at ``j = 0``)."""
    _check_grid(f, sys)
    return f.with_values(apply_multiplier(f.values, sys.multiplier(j, which), f.n))


def _level_filter(j: int, homogeneous: bool, low: str, band: str) -> tuple[int, str]:
    return (j, low) if (j == 0 and not homogeneous) else (j, band)


def _check_range(rng: ScaleRange, sys: AdmissibleSystem) -> None:
    lo = 1 if rng.homogeneous else 0
    if rng.jmin < lo or rng.jmax > sys.J - 1:
        raise ScaleOutOfRange(
            f"scale range [{rng.jmin}, {rng.jmax}] outside [{lo}, {sys.J - 1}]")


def _subsample(values: np.ndarray, stride: int, n: int) -> np.ndarray:
    return values[(slice(None, None, stride),) * n]


def phi_coeffs(f: GridFunction, sys: AdmissibleSystem,
               rng: ScaleRange | None = None) -> CoeffSequence:
    """Analysis coefficients ``s_Q = |Q|^{1/2} (phi_j * f)(x_Q)``.

    ``x_Q`` is taken as the cell center next to the lower corner of ``Q``, a
    fixed half-cell offset shared by every cube.
    """
    _check_grid(f, sys)
    rng = rng or sys.default_range()
    _check_range(rng, sys)
    levels = {}
    for j in rng.levels():
        jj, which = _level_filter(j, rng.homogeneous, "Phi", "phi")
        conv = apply_multiplier(f.values, sys.multiplier(jj, which), f.n)
        levels[j] = 2.0 ** (-j * f.n / 2) * _subsample(conv, 2 ** (sys.J - j), f.n)
    return CoeffSequence(levels, f.n, rng.homogeneous)


def synthesize(s: CoeffSequence, sys: AdmissibleSystem) -> GridFunction:
    """``sum_Q s_Q psi_Q`` evaluated on the grid."""
    n, N = s.n, sys.N
    if n != sys.n:
        raise ValueError("dimension mismatch between coefficients and system")
    rng = ScaleRange(s.jmin, s.jmax, s.homogeneous)
    _check_range(rng, sys)
    out = np.zeros((N,) * n + (s.m,), dtype=complex)
    for j, coeffs in s.levels.items():
        jj, which = _level_filter(j, s.homogeneous, "Psi", "psi")
        spikes = np.zeros_like(out)
        spikes[(slice(None, None, 2 ** (sys.J - j)),) * n] = coeffs * float(N) ** n
        out += 2.0 ** (-j * n / 2) * apply_multiplier(spikes, sys.multiplier(jj, which), n)
    return GridFunction(out, n)


def psi_molecule(sys: AdmissibleSystem, P: DyadicCube, m: int = 1, component: int = 0) -> GridFunction:
    """The synthesis function ``psi_P`` times a unit vector."""
    level = np.zeros((2**P.j,) * sys.n + (m,), dtype=complex)
    level[P.k + (component,)] = 1.0
    homogeneous = P.j >= 1
    return synthesize(CoeffSequence({P.j: level}, sys.n, homogeneous), sys)


def riesz(f: GridFunction, beta: float) -> GridFunction:
    """Fourier multiplier ``|xi|**(-beta)``; the zero mode is always removed."""
    xi = 2 * np.pi * frequency_radius(f.N, f.n)
    mult = np.zeros_like(xi)
    nz = xi > 0
    mult[nz] = xi[nz] ** (-float(beta))
    return f.with_values(apply_multiplier(f.values, mult, f.n))


def derivative(f: GridFunction, multi_index: Sequence[int]) -> GridFunction:
    """Spectral ``D^beta`` with multiplier ``prod (2 pi i nu_l)**beta_l``."""
    beta = tuple(int(b) for b in multi_index)
    if len(beta) != f.n or any(b < 0 for b in beta):
        raise ValueError(f"multi-index {beta} invalid for n={f.n}")
    mult = np.ones((f.N,) * f.n, dtype=complex)
    for nu, b in zip(frequencies(f.N, f.n), beta):
        if b:
            mult = mult * (2j * np.pi * nu) ** b
    return f.with_values(apply_multiplier(f.values, mult, f.n))


def _displacement_radius(N: int, n: int) -> np.ndarray:
    """Minimum-image length of the lattice displacement ``i / N``."""
    d = np.fft.fftfreq(N, 1.0)  # i/N wrapped into [-1/2, 1/2)
    grids = np.meshgrid(*([d] * n), indexing="ij")
    return np.sqrt(sum(g**2 for g in grids))


def _physical_filter(sys: AdmissibleSystem, j: int, which: str = "phi") -> np.ndarray:
    """Periodized ``phi_j`` sampled at lattice displacements."""
    return np.real(np.fft.ifftn(sys.multiplier(j, which))) * float(sys.N) ** sys.n


def kernel_size_check(sys: AdmissibleSystem, rng: ScaleRange | None = None,
                      radius_window: tuple[float, float] | None = None) -> dict:
    """Fit ``C = max |x|^n (sum_j |phi_j(x)|^2)^{1/2}`` over lattice points.

    Points closer to the origin than one grid spacing are skipped, and by
    default so are points beyond ``1/4``, where the periodized coarse levels
    stop resembling their counterparts on ``R^n``.
    """
    rng = rng or sys.default_range()
    _check_range(rng, sys)
    sq = np.zeros((sys.N,) * sys.n)
    for j in rng.levels():
        jj, which = _level_filter(j, rng.homogeneous, "Phi", "phi")
        sq += _physical_filter(sys, jj, which) ** 2
    r = _displacement_radius(sys.N, sys.n)
    lo, hi = radius_window or (1.0 / sys.N, 0.25)
    mask = (r >= lo - 1e-15) & (r <= hi + 1e-15)
    scaled = r[mask] ** sys.n * np.sqrt(sq[mask])
    i = int(np.argmax(scaled))
    return {
        "c_phi": float(scaled[i]),
        "argmax_radius": float(r[mask][i]),
        "jmin": rng.jmin,
        "jmax": rng.jmax,
        "radii": r[mask],
        "profile": scaled,
    }


def molecule_decay_check(sys: AdmissibleSystem, molecules: Mapping[DyadicCube, GridFunction],
                         params: tuple[float, float, float, float] = (2, 2, 3, 1.0),
                         rng: ScaleRange | None = None, radius: float = 0.25) -> dict:
    """Fit the constant in the two-sided molecule decay estimates.

    For a molecule ``m_P`` with ``l(P) = 2**-k`` the bound is

    * ``j >= k``: ``c 2^{kn/2} 2^{-(j-k)(K+delta)} (1 + 2^k |x - x_P|)^{-M}``
    * ``j <= k``: ``c 2^{kn/2} 2^{-(k-j)(N+1+n)} (1 + 2^j |x - x_P|)^{-M}``

    Only points within ``radius`` of ``x_P`` (periodic distance) are used,
    since periodization adds far-field tails absent on the line.
    """
    N_mom, K, M, delta = params
    rng = rng or sys.default_range()
    _check_range(rng, sys)
    n = sys.n
    worst = 0.0
    per_pair = {}
    for P, m_P in molecules.items():
        _check_grid(m_P, sys)
        k = P.j
        shift = tuple(ki * 2 ** (sys.J - k) for ki in P.k)
        # distances from the sampling point of P
        dist = np.roll(_displacement_radius(sys.N, n), shift, axis=tuple(range(n)))
        near = dist <= radius
        for j in rng.levels():
            jj, which = _level_filter(j, rng.homogeneous, "Phi", "phi")
            conv = apply_multiplier(m_P.values, sys.multiplier(jj, which), n)
            mag = np.linalg.norm(conv, axis=-1)
            if j >= k:
                rhs = 2.0 ** (k * n / 2 - (j - k) * (K + delta)) * (1 + 2.0**k * dist) ** (-M)
            else:
                rhs = 2.0 ** (k * n / 2 - (k - j) * (N_mom + 1 + n)) * (1 + 2.0**j * dist) ** (-M)
            ratio = float((mag[near] / rhs[near]).max())
            per_pair[(str(P), j)] = ratio
            worst = max(worst, ratio)
    return {"c": worst, "per_pair": per_pair, "params": tuple(params)}
