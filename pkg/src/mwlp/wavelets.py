"""Orthonormal periodic wavelet systems.

Two families are provided.

Meyer
    Defined in frequency with the same polynomial bump as the
    Littlewood-Paley window.  Coefficients are evaluated exactly on the
    lattice: the level-``j`` coefficients are a folded inverse FFT of
    ``f^(nu) conj(psi^(2 pi nu / 2**j))``.
Daubechies
    Filter taps from the spectral factorization of the Daubechies
    polynomial; coefficients by the periodic filter bank, with the grid
    samples divided by ``sqrt(N)`` standing in for the finest scaling
    coefficients.

For ``n = 2`` the generators are the tensor products ``psi x phi``,
``phi x psi`` and ``psi x psi`` (in that order, numbered 1 to 3).  Detail
levels run from 0 to ``J - 1``; level 0 also carries the single scaling
coefficient, which on the torus is the mean.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .dyadic import DyadicCube, ScaleRange
from .errors import ScaleOutOfRange
from .grid import (CoeffSequence, GridFunction, fourier_coefficients, frequencies,
                   from_fourier_coefficients)
from .lpcore import bump
from .spaces import NormReport, SpaceParams, seq_norm_W

__all__ = [
    "WaveletSystem",
    "WaveletCoeffs",
    "meyer_system",
    "daubechies_system",
    "daubechies_filter",
    "meyer_psi_hat",
    "meyer_phi_hat",
    "cascade",
    "wavelet_coeffs",
    "wavelet_synthesize",
    "wavelet_function",
    "meyer_molecule",
    "wavelet_seq_norm",
    "gram_deviation",
    "verify_wavelet_hypotheses",
]

# (axis-0 factor, axis-1 factor) per generator; True marks the wavelet
_TENSOR = {1: ((True,),), 2: ((True, False), (False, True), (True, True))}


# ---------------------------------------------------------------------------
# 1-D building blocks


def meyer_phi_hat(xi):
    """Meyer scaling function in frequency (real, even)."""
    r = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(r)
    out[r <= 2 * np.pi / 3] = 1.0
    mid = (r > 2 * np.pi / 3) & (r <= 4 * np.pi / 3)
    out[mid] = np.cos(np.pi / 2 * bump(3 * r[mid] / (2 * np.pi) - 1))
    return out


def meyer_psi_hat(xi):
    """Meyer wavelet in frequency, centered at ``x = 1/2``."""
    xi = np.asarray(xi, dtype=float)
    r = np.abs(xi)
    amp = np.zeros_like(r)
    up = (r >= 2 * np.pi / 3) & (r <= 4 * np.pi / 3)
    down = (r > 4 * np.pi / 3) & (r <= 8 * np.pi / 3)
    amp[up] = np.sin(np.pi / 2 * bump(3 * r[up] / (2 * np.pi) - 1))
    amp[down] = np.cos(np.pi / 2 * bump(3 * r[down] / (4 * np.pi) - 1))
    return amp * np.exp(0.5j * xi)


def daubechies_filter(N: int) -> np.ndarray:
    """Minimum-phase low-pass taps with ``N`` vanishing moments, ``sum h = sqrt 2``."""
    if N < 1:
        raise ValueError("need at least one vanishing moment")
    # P(y) = sum_k C(N-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z) / 4
    P = [comb(N - 1 + k, k, exact=True) for k in range(N)]
    yroots = np.roots(P[::-1]) if N > 1 else np.array([])
    zroots = []
    for y in yroots:
        # z^2 - (2 - 4y) z + 1 = 0; keep the root inside the unit circle
        z = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        zroots.append(z[np.argmin(np.abs(z))])
    h = np.real(np.poly(np.concatenate([-np.ones(N), np.asarray(zroots, dtype=complex)])))
    return h * math.sqrt(2.0) / h.sum()


def _highpass(h: np.ndarray) -> np.ndarray:
    L = len(h) - 1
    return np.array([(-1) ** k * h[L - k] for k in range(L + 1)])


def cascade(h: np.ndarray, resolution: int = 10) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaling function and wavelet on the dyadic grid of step ``2**-resolution``.

    Values at the integers come from the eigenvector of the two-scale matrix;
    each refinement halves the step exactly.

    Returns
    -------
    x, phi, psi : ndarray
        Sample points on ``[0, len(h) - 1]`` and the two functions there.
    """
    L = len(h) - 1
    g = _highpass(h)
    T = np.zeros((L + 1, L + 1))
    for i in range(L + 1):
        for j in range(L + 1):
            if 0 <= 2 * i - j <= L:
                T[i, j] = math.sqrt(2.0) * h[2 * i - j]
    vals, vecs = np.linalg.eig(T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    v = v / v.sum()  # partition of unity: sum_k phi(k) = 1
    for s in range(resolution):
        step = 2**s
        new = np.zeros(L * 2 * step + 1)
        for k, hk in enumerate(h):
            lo = k * step
            # new[m] += sqrt2 h_k v[m - k*step]
            idx = np.arange(len(new)) - lo
            ok = (idx >= 0) & (idx < len(v))
            new[ok] += math.sqrt(2.0) * hk * v[idx[ok]]
        v = new
    step = 2**resolution
    psi = np.zeros_like(v)
    m = np.arange(len(v))
    for k, gk in enumerate(g):
        idx = 2 * m - k * step
        ok = (idx >= 0) & (idx < len(v))
        psi[ok] += math.sqrt(2.0) * gk * v[idx[ok]]
    x = m / step
    return x, v, psi


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class WaveletSystem:
    """A tensor wavelet system on the ``n``-torus.

    Attributes
    ----------
    kind : str
        ``"meyer"`` or ``"daubechies"``.
    vanishing : float
        Number of vanishing moments, so orders ``0 .. vanishing - 1`` vanish
        (``inf`` for Meyer).
    decay : float
        Declared polynomial decay exponent of the generators.
    smoothness : float
        Declared number of bounded derivatives.
    taps : ndarray or None
        Low-pass filter for Daubechies.
    """

    kind: str
    n: int = 1
    vanishing: float = math.inf
    decay: float = 4.0
    smoothness: float = math.inf
    taps: np.ndarray | None = field(default=None, compare=False)

    @property
    def generators(self) -> int:
        return 2**self.n - 1

    @property
    def name(self) -> str:
        return "meyer" if self.kind == "meyer" else f"db{int(self.vanishing)}"


def meyer_system(n: int = 1) -> WaveletSystem:
    # the bump is C^3 with a bounded fourth derivative, hence |psi| <~ |x|^-4
    return WaveletSystem("meyer", n, math.inf, 4.0, math.inf)


def daubechies_system(N: int, n: int = 1) -> WaveletSystem:
    # Holder regularity of dbN grows like 0.2 N; decay is unlimited (compact support)
    return WaveletSystem("daubechies", n, float(N), math.inf, float(int(0.2 * N)),
                         daubechies_filter(N))


@dataclass
class WaveletCoeffs:
    """Detail sequences per generator plus the level-0 scaling coefficient."""

    details: list
    scaling: np.ndarray
    system: str
    n: int

    def to_csv_rows(self):
        for k in np.ndindex(self.scaling.shape[: self.n]):
            row = [0, 0, *k]
            for z in self.scaling[k]:
                row += [float(z.real), float(z.imag)]
            yield row
        for i, s in enumerate(self.details, start=1):
            yield from s.to_csv_rows(generator=i)

    def energy(self) -> float:
        e = float(np.sum(np.abs(self.scaling) ** 2))
        for s in self.details:
            e += sum(float(np.sum(np.abs(v) ** 2)) for v in s.levels.values())
        return e


def _default_range(J: int) -> ScaleRange:
    return ScaleRange(0, J - 1, True)


def _check_range(rng: ScaleRange, J: int) -> None:
    if rng.jmin < 0 or rng.jmax > J - 1:
        raise ScaleOutOfRange(f"wavelet levels [{rng.jmin}, {rng.jmax}] outside [0, {J - 1}]")


def _fold(a: np.ndarray, M: int, n: int) -> np.ndarray:
    """Sum FFT-ordered lattice values over residues mod ``M`` on each axis."""
    N = a.shape[0]
    rest = a.shape[n:]
    if n == 1:
        return a.reshape((N // M, M) + rest).sum(axis=0)
    return a.reshape((N // M, M, N // M, M) + rest).sum(axis=(0, 2))


def _tile(a: np.ndarray, N: int, n: int) -> np.ndarray:
    M = a.shape[0]
    reps = (N // M,) * n + (1,) * (a.ndim - n)
    return np.tile(a, reps)


def _meyer_symbol(N: int, n: int, j: int, pattern) -> np.ndarray:
    out = np.ones((N,) * n, dtype=complex)
    top = 2 ** (j + 1) == N
    for nu, is_psi in zip(frequencies(N, n), pattern):
        xi = 2 * np.pi * nu / 2**j
        if is_psi and top:
            # the falling tail of the finest wavelet lies past Nyquist and
            # folds onto frequencies where it would add to the rising part;
            # holding the amplitude at 1 keeps the lattice system orthonormal
            hat = meyer_psi_hat(xi)
            hat[np.abs(xi) >= 4 * np.pi / 3] = np.exp(0.5j * xi[np.abs(xi) >= 4 * np.pi / 3])
            out = out * hat
        else:
            out = out * (meyer_psi_hat(xi) if is_psi else meyer_phi_hat(xi))
    return out


def _meyer_coeffs(f: GridFunction, sys: WaveletSystem, rng: ScaleRange) -> WaveletCoeffs:
    n, N = f.n, f.N
    fh = fourier_coefficients(f.values, n)
    axes = tuple(range(n))
    details = []
    for pattern in _TENSOR[n]:
        levels = {}
        for j in rng.levels():
            M = 2**j
            sym = np.conj(_meyer_symbol(N, n, j, pattern))
            g = fh * sym.reshape(sym.shape + (1,))
            levels[j] = 2.0 ** (-j * n / 2) * M**n * np.fft.ifftn(_fold(g, M, n), axes=axes)
        details.append(CoeffSequence(levels, n, True))
    scaling = fh[(slice(0, 1),) * n].copy()
    return WaveletCoeffs(details, scaling, sys.name, n)


def _meyer_synthesize(c: WaveletCoeffs, J: int) -> GridFunction:
    n, N = c.n, 2**J
    m = c.scaling.shape[-1]
    axes = tuple(range(n))
    fh = np.zeros((N,) * n + (m,), dtype=complex)
    fh[(slice(0, 1),) * n] = c.scaling
    for pattern, s in zip(_TENSOR[n], c.details):
        for j, v in s.levels.items():
            sym = _meyer_symbol(N, n, j, pattern)
            spec = _tile(np.fft.fftn(v, axes=axes), N, n)
            fh += 2.0 ** (-j * n / 2) * sym.reshape(sym.shape + (1,)) * spec
    return GridFunction(from_fourier_coefficients(fh, n), n)


def _analysis_step(a: np.ndarray, h: np.ndarray, g: np.ndarray, axis: int):
    a = np.moveaxis(a, axis, 0)
    M = a.shape[0]
    base = 2 * np.arange(M // 2)
    lo = np.zeros((M // 2,) + a.shape[1:], dtype=complex)
    hi = np.zeros_like(lo)
    for l, (hl, gl) in enumerate(zip(h, g)):
        rows = a[(base + l) % M]
        lo += hl * rows
        hi += gl * rows
    return np.moveaxis(lo, 0, axis), np.moveaxis(hi, 0, axis)


def _synthesis_step(lo: np.ndarray, hi: np.ndarray, h: np.ndarray, g: np.ndarray, axis: int):
    lo = np.moveaxis(lo, axis, 0)
    hi = np.moveaxis(hi, axis, 0)
    M = 2 * lo.shape[0]
    base = 2 * np.arange(M // 2)
    out = np.zeros((M,) + lo.shape[1:], dtype=complex)
    for l, (hl, gl) in enumerate(zip(h, g)):
        np.add.at(out, (base + l) % M, hl * lo + gl * hi)
    return np.moveaxis(out, 0, axis)


def _dwt_level(a: np.ndarray, h, g, n: int):
    """One analysis level; returns the low-pass and the per-generator details."""
    if n == 1:
        lo, hi = _analysis_step(a, h, g, 0)
        return lo, [hi]
    L0, H0 = _analysis_step(a, h, g, 0)
    LL, LH = _analysis_step(L0, h, g, 1)
    HL, HH = _analysis_step(H0, h, g, 1)
    return LL, [HL, LH, HH]


def _idwt_level(lo: np.ndarray, det: list, h, g, n: int):
    if n == 1:
        return _synthesis_step(lo, det[0], h, g, 0)
    HL, LH, HH = det
    L0 = _synthesis_step(lo, LH, h, g, 1)
    H0 = _synthesis_step(HL, HH, h, g, 1)
    return _synthesis_step(L0, H0, h, g, 0)


def _daub_coeffs(f: GridFunction, sys: WaveletSystem, rng: ScaleRange) -> WaveletCoeffs:
    n, N, J = f.n, f.N, f.J
    h = sys.taps
    g = _highpass(h)
    a = f.values.astype(complex) / math.sqrt(N) ** n
    per = {i: {} for i in range(sys.generators)}
    for j in range(J - 1, -1, -1):
        a, det = _dwt_level(a, h, g, n)
        if j in rng:
            for i, d in enumerate(det):
                per[i][j] = d
    details = [CoeffSequence(dict(sorted(per[i].items())), n, True) for i in range(sys.generators)]
    return WaveletCoeffs(details, a, sys.name, n)


def _daub_synthesize(c: WaveletCoeffs, J: int, sys: WaveletSystem) -> GridFunction:
    n = c.n
    h = sys.taps
    g = _highpass(h)
    a = c.scaling.astype(complex)
    m = a.shape[-1]
    for j in range(J):
        det = []
        for s in c.details:
            v = s.levels.get(j)
            det.append(np.zeros((2**j,) * n + (m,), dtype=complex) if v is None else v)
        a = _idwt_level(a, det, h, g, n)
    return GridFunction(a * math.sqrt(2**J) ** n, n)


def wavelet_coeffs(f: GridFunction, sys: WaveletSystem, rng: ScaleRange | None = None) -> WaveletCoeffs:
    """Inner products of ``f`` with the wavelets of ``rng`` and with the scaling function.

    Raises
    ------
    ScaleOutOfRange
        If the range leaves ``[0, J - 1]``.
    """
    if f.n != sys.n:
        raise ValueError("dimension mismatch between function and wavelet system")
    rng = rng or _default_range(f.J)
    _check_range(rng, f.J)
    if sys.kind == "meyer":
        return _meyer_coeffs(f, sys, rng)
    return _daub_coeffs(f, sys, rng)


def wavelet_synthesize(c: WaveletCoeffs, sys: WaveletSystem, J: int) -> GridFunction:
    """Grid values of ``<c, wavelets>``; levels absent from ``c`` count as zero."""
    for s in c.details:
        _check_range(ScaleRange(s.jmin, s.jmax, True), J)
    if sys.kind == "meyer":
        return _meyer_synthesize(c, J)
    return _daub_synthesize(c, J, sys)


def wavelet_function(sys: WaveletSystem, J: int, i: int, Q: DyadicCube | None = None,
                     m: int = 1) -> GridFunction:
    """The generator ``i`` at cube ``Q``; ``i = 0`` gives the scaling function."""
    n = sys.n
    scaling = np.zeros((1,) * n + (m,), dtype=complex)
    details = [None] * sys.generators
    if i == 0:
        scaling[(0,) * n + (0,)] = 1.0
        details = [CoeffSequence({0: np.zeros((1,) * n + (m,))}, n, True)
                   for _ in range(sys.generators)]
    else:
        if Q is None or not 1 <= i <= sys.generators:
            raise ValueError("a cube and a generator index in 1..2^n-1 are required")
        for t in range(sys.generators):
            lev = np.zeros((2**Q.j,) * n + (m,), dtype=complex)
            if t == i - 1:
                lev[Q.k + (0,)] = 1.0
            details[t] = CoeffSequence({Q.j: lev}, n, True)
    return wavelet_synthesize(WaveletCoeffs(details, scaling, sys.name, n), sys, J)


def meyer_molecule(J: int, P: DyadicCube, offset: int = 2, m: int = 1) -> GridFunction:
    """Meyer wavelet used as a smooth molecule for the cube ``P``.

    The Littlewood-Paley filters of level ``j`` live at ``|nu| ~ 2**j / (2 pi)``,
    while the Meyer wavelet of level ``j`` lives at ``|nu| ~ 2**j``; taking the
    generator ``offset`` levels coarser (``2**offset`` close to ``2 pi``)
    matches the two frequency bands.  The coarser lattice has no wavelet
    peaked at ``x_P`` (the generator peaks half a cube before its corner
    along wavelet axes), so the level ``P.j - offset`` generator is
    translated by whole grid cells until its peak sits on ``x_P``.
    """
    n = len(P.k)
    level = max(P.j - offset, 0)
    base = wavelet_function(meyer_system(n), J, 1, DyadicCube(level, (0,) * n), m)
    half = 2 ** (J - level - 1)
    shift = tuple(ki * 2 ** (J - P.j) + (half if is_psi else 0)
                  for ki, is_psi in zip(P.k, _TENSOR[n][0]))
    return GridFunction(np.roll(base.values, shift, axis=tuple(range(n))), n)


def wavelet_seq_norm(c: WaveletCoeffs, W, params: SpaceParams) -> NormReport:
    """Sum over generators of the weighted discrete norms of the details."""
    reports = [seq_norm_W(s, W, params) for s in c.details]
    total = float(sum(r.value for r in reports))
    first = reports[0]
    return NormReport(total, [r.value for r in reports], params.alpha, params.p, params.q,
                      True, first.jmin, first.jmax, W.weight_id, {"system": c.system})


def gram_deviation(sys: WaveletSystem, J: int, levels=(1, 2)) -> float:
    """``max |G - I|`` for the scaling function and all wavelets on ``levels``."""
    funcs = [wavelet_function(sys, J, 0)]
    for j in levels:
        for i in range(1, sys.generators + 1):
            for k in np.ndindex((2**j,) * sys.n):
                funcs.append(wavelet_function(sys, J, i, DyadicCube(j, k)))
    V = np.stack([f.values[..., 0].ravel() for f in funcs])
    G = V @ V.conj().T / V.shape[1]
    return float(np.max(np.abs(G - np.eye(len(funcs)))))


# ---------------------------------------------------------------------------
# hypotheses


def _meyer_line(which: str, width: float, step: float, order: int):
    """``D^order`` of the Meyer function on a centered line window.

    Inverse Fourier transform on a period equal to the window width; the
    periodization error is below the generator's decay at half the width.
    """
    M = int(round(width / step))
    k = np.fft.fftfreq(M, 1.0 / M)
    xi = 2 * np.pi * k / width
    hat = meyer_psi_hat(xi) if which == "psi" else meyer_phi_hat(xi).astype(complex)
    hat = hat * (1j * xi) ** order
    x = (np.arange(M) - M // 2) * step
    # sample at x: (1/width) sum hat(xi) e^{i xi x}
    vals = np.fft.ifft(hat * np.exp(1j * xi * x[0])) * M / width
    return x, vals


def _meyer_moment(which: str, gamma: int) -> float:
    """``int x^gamma f = (i d/dxi)^gamma f^(0)`` from a centered difference."""
    hat = meyer_psi_hat if which == "psi" else meyer_phi_hat
    if gamma == 0:
        return float(abs(hat(np.array([0.0]))[0]))
    d = 0.05
    pts = d * (np.arange(gamma + 1) - gamma / 2)
    w = np.array([(-1) ** (gamma - r) * comb(gamma, r) for r in range(gamma + 1)])
    return float(abs(np.dot(w, hat(pts)) / d**gamma))


def _daub_line(sys: WaveletSystem, which: str, order: int, resolution: int = 10):
    x, phi, psi = cascade(sys.taps, resolution)
    v = (psi if which == "psi" else phi).astype(float)
    step = x[1] - x[0]
    for _ in range(order):
        pad = np.concatenate([np.zeros(2), v, np.zeros(2)])
        v = (-pad[4:] + 8 * pad[3:-1] - 8 * pad[1:-3] + pad[:-4]) / (12 * step)
    return x, v


def _moments_1d(sys: WaveletSystem, which: str, top: int) -> list[float]:
    if sys.kind == "meyer":
        return [_meyer_moment(which, g) for g in range(top + 1)]
    x, v = _daub_line(sys, which, 0)
    step = x[1] - x[0]
    return [float(abs(np.sum(x**g * v) * step)) for g in range(top + 1)]


def verify_wavelet_hypotheses(sys: WaveletSystem, N0: int = 2, R: float = 2.0,
                              S: int = 1, tol: float = 1e-8) -> dict:
    """Measured vanishing moments and decay constants of the generators.

    Parameters
    ----------
    N0 : int
        Moments ``int x^gamma psi`` are evaluated for ``|gamma| <= N0``.
    R : float
        Decay exponent in ``sup (1 + |x|)^R |D^gamma psi(x)|``.
    S : int
        Derivative orders ``|gamma| <= S`` for the decay constants.

    Returns
    -------
    dict
        ``moments`` (max over generators, keyed by the multi-index),
        ``verified_N0`` (largest order with every moment below ``tol``, or -1),
        ``decay`` (keyed by the multi-index) and the declared parameters.
    """
    n = sys.n
    mom = {"psi": _moments_1d(sys, "psi", N0), "phi": _moments_1d(sys, "phi", N0)}
    moments = {}
    for gamma in itertools.product(range(N0 + 1), repeat=n):
        if sum(gamma) > N0:
            continue
        worst = 0.0
        for pattern in _TENSOR[n]:
            val = 1.0
            for g, is_psi in zip(gamma, pattern):
                val *= mom["psi" if is_psi else "phi"][g]
            worst = max(worst, val)
        moments[gamma] = worst
    verified = -1
    for order in range(N0 + 1):
        if all(v <= tol for g, v in moments.items() if sum(g) == order):
            verified = order
        else:
            break

    lines = {}
    for which in ("psi", "phi"):
        for order in range(S + 1):
            if sys.kind == "meyer":
                x, v = _meyer_line(which, 64.0, 1.0 / 32, order)
            else:
                x, v = _daub_line(sys, which, order, resolution=8)
            lines[which, order] = (x, np.abs(v))
    decay = {}
    for gamma in itertools.product(range(S + 1), repeat=n):
        if sum(gamma) > S:
            continue
        worst = 0.0
        for pattern in _TENSOR[n]:
            parts = [lines["psi" if p else "phi", g] for g, p in zip(gamma, pattern)]
            if n == 1:
                x, v = parts[0]
                val = np.max((1 + np.abs(x)) ** R * v)
            else:
                (x1, v1), (x2, v2) = parts
                rad = np.hypot(x1[::4, None], x2[None, ::4])
                val = np.max((1 + rad) ** R * v1[::4, None] * v2[None, ::4])
            worst = max(worst, float(val))
        decay[gamma] = worst
    key = lambda g: ",".join(map(str, g))
    return {
        "system": sys.name,
        "n": n,
        "moments": {key(g): v for g, v in moments.items()},
        "max_moment": max(moments.values()),
        "verified_N0": verified,
        "decay": {key(g): v for g, v in decay.items()},
        "R": R,
        "S": S,
        "declared": {"N0": sys.vanishing - 1, "R": sys.decay, "S": sys.smoothness},
    }
