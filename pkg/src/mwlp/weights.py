"""Matrix weights on the torus and their Muckenhoupt-type diagnostics.

A weight is an analytic model (:class:`MatrixWeight`) sampled at cell centers
into a :class:`WeightGrid`, which caches the spectral decomposition and the
fractional powers ``W^{1/p}`` and ``W^{-1/p}`` used everywhere else.

Suprema over "all cubes" are approximated by the dyadic cubes of each level
together with their translates by half a side along every subset of axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dyadic import ScaleRange
from .errors import EmptyCube, NotPositiveDefinite
from .grid import block_mean, cell_centers, cube_blocks, roll_cells

__all__ = [
    "EPS_PD",
    "matrix_power",
    "op_norm",
    "MatrixWeight",
    "WeightGrid",
    "ApReport",
    "ap_constant",
    "ap_constant_small_p",
    "ap_refinement",
    "direction_sample",
    "direction_profile",
    "doubling_exponent",
    "goldberg_profile",
    "shipped_weight",
]

EPS_PD = 1e-12


def _hermitian_part(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))


def _eigh_checked(A: np.ndarray, eps: float = EPS_PD):
    lam, U = np.linalg.eigh(_hermitian_part(A))
    top = np.maximum(lam[..., -1], 0.0)
    if np.any(lam[..., 0] <= eps * top) or np.any(top <= 0):
        raise NotPositiveDefinite(
            f"minimum eigenvalue {float(lam[..., 0].min()):.3e} is not above "
            f"{eps:g} times the largest")
    return lam, U


def _from_spectrum(lam: np.ndarray, U: np.ndarray) -> np.ndarray:
    out = (U * lam[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    return _hermitian_part(out)


def matrix_power(A, t: float, eps: float = EPS_PD) -> np.ndarray:
    """Fractional power of Hermitian positive definite matrices.

    Parameters
    ----------
    A : array_like, shape (..., m, m)
        Hermitian positive definite, batched along leading axes.
    t : float
        Exponent.
    eps : float
        Eigenvalues must exceed ``eps`` times the largest one.

    Returns
    -------
    ndarray
        ``U diag(lambda**t) U^*``, real when ``A`` is real.

    Raises
    ------
    NotPositiveDefinite
    """
    A = np.asarray(A)
    lam, U = _eigh_checked(A, eps)
    out = _from_spectrum(lam**t, U)
    return out.real if not np.iscomplexobj(A) else out


def op_norm(A: np.ndarray) -> np.ndarray:
    """Spectral norm of a batch of square matrices ``(..., m, m)``."""
    m = A.shape[-1]
    if m == 1:
        return np.abs(A[..., 0, 0])
    if m == 2:
        fro = (np.abs(A) ** 2).sum(axis=(-2, -1))
        det = np.abs(A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0])
        disc = np.sqrt(np.maximum(fro**2 - 4.0 * det**2, 0.0))
        return np.sqrt(0.5 * (fro + disc))
    return np.linalg.norm(A, ord=2, axis=(-2, -1))


def _torus_distance(x: np.ndarray, center: np.ndarray) -> np.ndarray:
    d = x - center
    d -= np.round(d)
    return np.sqrt((d**2).sum(axis=-1))


def _rotation(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


@dataclass(frozen=True)
class MatrixWeight:
    """Analytic matrix weight model.

    Use the constructors :meth:`constant`, :meth:`scalar_power`,
    :meth:`diagonal_power` and :meth:`rotated_diagonal`.
    """

    model: str
    m: int
    params: tuple = ()
    _evaluator: Callable = field(compare=False, repr=False, default=None)

    @property
    def weight_id(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.model}({inner})"

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Weight matrices at points ``x`` of shape ``(..., n)``."""
        return self._evaluator(np.asarray(x, dtype=float))

    def sample(self, J: int, n: int = 1, p: float = 2.0) -> "WeightGrid":
        return WeightGrid(self.evaluate(cell_centers(J, n)), n, p, self)

    @classmethod
    def constant(cls, C) -> "MatrixWeight":
        C = np.atleast_2d(np.asarray(C))
        _eigh_checked(C)
        C = _hermitian_part(C)
        if not np.iscomplexobj(C) or np.allclose(C.imag, 0):
            C = np.real(C)

        def ev(x):
            return np.broadcast_to(C, x.shape[:-1] + C.shape).copy()

        return cls("constant", C.shape[0], (("matrix", tuple(np.ravel(C).tolist())),), ev)

    @classmethod
    def scalar_power(cls, a: float, center=0.5, m: int = 1) -> "MatrixWeight":
        """``dist(x, center)**a`` times the identity."""
        a = float(a)

        def ev(x):
            d = _torus_distance(x, np.broadcast_to(center, x.shape[-1:]))
            return d[..., None, None] ** a * np.eye(m)

        return cls("scalar_power", m, (("a", a), ("center", center), ("m", m)), ev)

    @classmethod
    def diagonal_power(cls, a: Sequence[float], center=0.5) -> "MatrixWeight":
        a = tuple(float(v) for v in a)

        def ev(x):
            d = _torus_distance(x, np.broadcast_to(center, x.shape[-1:]))
            diag = d[..., None] ** np.array(a)
            return diag[..., None] * np.eye(len(a))

        return cls("diagonal_power", len(a), (("a", a), ("center", center)), ev)

    @classmethod
    def rotated_diagonal(cls, a: Sequence[float], angle_freq: int = 1,
                         amplitude: float = math.pi / 4, center=0.5) -> "MatrixWeight":
        """``R(theta) diag(dist**a_i) R(theta)^T`` with a trigonometric angle field."""
        a = tuple(float(v) for v in a)
        if len(a) != 2:
            raise ValueError("rotated_diagonal is defined for m = 2")

        def ev(x):
            d = _torus_distance(x, np.broadcast_to(center, x.shape[-1:]))
            theta = amplitude * np.sin(2 * np.pi * angle_freq * x).sum(axis=-1)
            R = _rotation(theta)
            D = d[..., None] ** np.array(a)
            return (R * D[..., None, :]) @ np.swapaxes(R, -1, -2)

        params = (("a", a), ("angle_freq", angle_freq), ("amplitude", amplitude),
                  ("center", center))
        return cls("rotated_diagonal", 2, params, ev)


def shipped_weight(m: int = 2, a: float = 0.5) -> MatrixWeight:
    """The reference weight ``|x - 1/2|**a`` times the ``m x m`` identity."""
    return MatrixWeight.scalar_power(a, 0.5, m)


class WeightGrid:
    """A weight sampled on the cell-center grid, with cached powers.

    Parameters
    ----------
    samples : ndarray, shape ``(N,)*n + (m, m)``
    n : int
    p : float
        Order used for the cached ``W^{1/p}`` and ``W^{-1/p}``.
    model : MatrixWeight, optional
        Kept so the same weight can be resampled at other resolutions.
    """

    def __init__(self, samples: np.ndarray, n: int, p: float, model: MatrixWeight | None = None,
                 weight_id: str | None = None):
        samples = np.asarray(samples)
        if samples.ndim == n:
            samples = samples[..., None, None]
        self.samples = _hermitian_part(samples)
        if not np.iscomplexobj(samples):
            self.samples = self.samples.real
        self.n = n
        self.p = float(p)
        if self.p <= 0:
            raise ValueError("p must be positive")
        self.model = model
        self.weight_id = weight_id or (model.weight_id if model else "sampled")
        self._lam, self._U = _eigh_checked(self.samples)
        self._powers: dict[float, np.ndarray] = {}

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def J(self) -> int:
        return int(round(math.log2(self.N)))

    @property
    def m(self) -> int:
        return self.samples.shape[-1]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.samples)

    def power(self, t: float) -> np.ndarray:
        t = float(t)
        if t not in self._powers:
            out = _from_spectrum(self._lam**t, self._U)
            self._powers[t] = out.real if self.is_real else out
        return self._powers[t]

    @property
    def root(self) -> np.ndarray:
        """``W^{1/p}`` at every sample."""
        return self.power(1.0 / self.p)

    @property
    def inv_root(self) -> np.ndarray:
        """``W^{-1/p}`` at every sample."""
        return self.power(-1.0 / self.p)

    def with_p(self, p: float) -> "WeightGrid":
        other = WeightGrid.__new__(WeightGrid)
        other.__dict__.update(self.__dict__)
        other.p = float(p)
        other._powers = self._powers
        return other

    def scaled(self, c: float) -> "WeightGrid":
        return WeightGrid(self.samples * c, self.n, self.p, None, f"{c}*{self.weight_id}")

    def conjugated(self, U: np.ndarray) -> "WeightGrid":
        U = np.asarray(U)
        return WeightGrid(U @ self.samples @ np.conj(U.T), self.n, self.p, None,
                          f"conj({self.weight_id})")

    def roundtrip_error(self) -> float:
        """Largest relative deviation of ``(W^{1/p})^p`` from ``W``."""
        back = matrix_power(self.root, self.p)
        scale = np.linalg.norm(self.samples, axis=(-2, -1))
        return float((np.linalg.norm(back - self.samples, axis=(-2, -1)) / scale).max())

    def scalar_density(self) -> np.ndarray:
        if self.m != 1:
            raise ValueError("scalar density is only defined for m = 1")
        return self.samples[..., 0, 0].real

    def isotropic_density(self) -> np.ndarray | None:
        """``w`` when every sample equals ``w(x) I``, else ``None``."""
        if self.m == 1:
            return self.scalar_density()
        w = self.samples[..., 0, 0].real
        iso = w[..., None, None] * np.eye(self.m)
        if np.abs(self.samples - iso).max() <= 1e-14 * np.abs(w).max():
            return w
        return None

    def resample(self, J: int) -> "WeightGrid":
        if self.model is None:
            raise ValueError("weight has no analytic model to resample")
        return self.model.sample(J, self.n, self.p)


@dataclass
class ApReport:
    """Estimate of an A_p-type constant.

    ``per_scale`` lists the maximum over the cubes of each level (dyadic and
    shifted); ``trend`` holds successive ratios across grid refinements when
    available.
    """

    estimate: float
    per_scale: list
    levels: list
    p: float
    trend: list = field(default_factory=list)
    estimates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "per_scale": list(self.per_scale),
                "levels": list(self.levels), "p": self.p, "trend": list(self.trend),
                "estimates": list(self.estimates)}


def _shifts(level: int, J: int, n: int, shifted: bool):
    half = 2 ** (J - level) // 2
    if not shifted or level == 0 or half == 0:
        return [(0,) * n]
    combos = np.indices((2,) * n).reshape(n, -1).T
    return [tuple(int(c) * half for c in row) for row in combos]


def _cube_cells(a: np.ndarray, level: int, n: int, shift, max_cells: int | None) -> np.ndarray:
    """Cells of every (shifted) level cube: ``(num_cubes, cells, rest...)``.

    With ``max_cells`` large cubes are thinned to a regular sub-lattice.
    """
    a = roll_cells(a, shift, n)
    N = a.shape[0]
    side = N >> level
    stride = 1
    if max_cells is not None:
        while (side // stride) ** n > max_cells:
            stride *= 2
    if stride > 1:
        a = a[(slice(None, None, stride),) * n]
    blocks = cube_blocks(a, level, n)
    return blocks.reshape((-1,) + blocks.shape[n:])


def _cell_cap(level: int, n: int, max_cells: int, pair_budget: int) -> int:
    """Cells kept per cube so one level costs at most ``pair_budget`` pairs."""
    cubes = 2 ** (level * n)
    return max(1, min(max_cells, int(math.sqrt(pair_budget / cubes))))


def _default_ap_range(J: int) -> ScaleRange:
    return ScaleRange(0, J - 1)


def _pair_norm_chunks(P: np.ndarray, Q: np.ndarray, budget: int = 1 << 21):
    """Yield ``||P_x Q_y||`` over cell pairs, ``(cubes, cells_x, cells_y)``, in
    chunks of cubes so that each chunk holds about ``budget`` pairs."""
    C, b = P.shape[:2]
    step = max(1, budget // (b * b))
    for c0 in range(0, C, step):
        yield op_norm(P[c0:c0 + step, :, None] @ Q[c0:c0 + step, None, :])


def ap_constant(W: WeightGrid, p: float | None = None, rng: ScaleRange | None = None,
                shifted: bool = True, max_cells: int = 1024,
                pair_budget: int = 1 << 24) -> ApReport:
    """A_p constant for ``p > 1`` by equal-weight quadrature over cube cells.

    For every cube ``Q`` the quantity is
    ``mean_x (mean_y ||W^{1/p}(x) W^{-1/p}(y)||^{p'})^{p/p'}``; the estimate is
    its maximum.  Scalar (and scalar-times-identity) weights use the
    factorized form exactly; other matrix weights thin each cube to a regular
    sub-lattice of at most ``max_cells`` cells, fewer at levels where the
    cell pairs of all cubes would exceed ``pair_budget``.
    """
    p = W.p if p is None else float(p)
    if p <= 1:
        raise ValueError("ap_constant needs p > 1; use ap_constant_small_p")
    Wp = W if p == W.p else W.with_p(p)
    rng = rng or _default_ap_range(W.J)
    rng.check_grid(W.J)
    n, J = W.n, W.J
    pp = p / (p - 1.0)
    per_scale = []
    w = W.isotropic_density()
    if w is not None:
        dual = w ** (-pp / p)
        for j in rng.levels():
            best = 0.0
            for sh in _shifts(j, J, n, shifted):
                a = _cube_cells(w, j, n, sh, None).mean(axis=1)
                b = _cube_cells(dual, j, n, sh, None).mean(axis=1)
                best = max(best, float((a * b ** (p / pp)).max()))
            per_scale.append(best)
    else:
        root, inv = Wp.root, Wp.inv_root
        for j in rng.levels():
            best = 0.0
            for sh in _shifts(j, J, n, shifted):
                cap = _cell_cap(j, n, max_cells, pair_budget)
                R = _cube_cells(root, j, n, sh, cap)
                V = _cube_cells(inv, j, n, sh, cap)
                for K in _pair_norm_chunks(R, V):
                    inner = (K**pp).mean(axis=2) ** (p / pp)
                    best = max(best, float(inner.mean(axis=1).max()))
            per_scale.append(best)
    return ApReport(max(per_scale), per_scale, list(rng.levels()), p)


def ap_constant_small_p(W: WeightGrid, p: float | None = None, rng: ScaleRange | None = None,
                        shifted: bool = True, max_cells: int = 1024,
                        pair_budget: int = 1 << 24) -> ApReport:
    """A_p constant for ``0 < p <= 1``: the grid maximum over ``y`` in ``Q`` of
    ``mean_x ||W^{1/p}(x) W^{-1/p}(y)||^p``."""
    p = W.p if p is None else float(p)
    if not 0 < p <= 1:
        raise ValueError("ap_constant_small_p needs 0 < p <= 1")
    Wp = W if p == W.p else W.with_p(p)
    rng = rng or _default_ap_range(W.J)
    rng.check_grid(W.J)
    n, J = W.n, W.J
    per_scale = []
    w = W.isotropic_density()
    if w is not None:
        for j in rng.levels():
            best = 0.0
            for sh in _shifts(j, J, n, shifted):
                cells = _cube_cells(w, j, n, sh, None)
                best = max(best, float((cells.mean(axis=1) / cells.min(axis=1)).max()))
            per_scale.append(best)
    else:
        root, inv = Wp.root, Wp.inv_root
        for j in rng.levels():
            best = 0.0
            for sh in _shifts(j, J, n, shifted):
                cap = _cell_cap(j, n, max_cells, pair_budget)
                R = _cube_cells(root, j, n, sh, cap)
                V = _cube_cells(inv, j, n, sh, cap)
                for K in _pair_norm_chunks(R, V):
                    best = max(best, float((K**p).mean(axis=1).max()))
            per_scale.append(best)
    return ApReport(max(per_scale), per_scale, list(rng.levels()), p)


def ap_refinement(model: MatrixWeight, p: float, Js: Sequence[int], n: int = 1,
                  **kwargs) -> ApReport:
    """Recompute the A_p estimate at several grid levels and record the ratios."""
    reports = []
    for J in Js:
        W = model.sample(J, n, p)
        fn = ap_constant if p > 1 else ap_constant_small_p
        reports.append(fn(W, p, **kwargs))
    ests = [r.estimate for r in reports]
    last = reports[-1]
    last.estimates = ests
    last.trend = [b / a for a, b in zip(ests, ests[1:])]
    return last


def direction_sample(m: int, D: int | None = None, complex_phases: bool = False,
                     seed: int = 0) -> np.ndarray:
    """Deterministic unit directions in ``R^m`` (or ``C^m``), shape ``(D, m)``.

    Real half-circle for ``m = 2``, Fibonacci sphere for ``m = 3``.  With
    ``complex_phases`` each real direction is repeated with seeded random
    phases on its components.
    """
    if D is None:
        D = {1: 1, 2: 64, 3: 256}.get(m, 64 * m)
    if m == 1:
        dirs = np.ones((1, 1))
    elif m == 2:
        t = np.pi * np.arange(D) / D
        dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
    elif m == 3:
        i = np.arange(D) + 0.5
        z = 1.0 - 2.0 * i / D
        r = np.sqrt(1.0 - z**2)
        phi = np.pi * (1.0 + 5**0.5) * i
        dirs = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    else:
        g = np.random.default_rng(seed).normal(size=(D, m))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    if complex_phases:
        ph = np.random.default_rng(seed).uniform(0, 2 * np.pi, size=dirs.shape)
        ph[:, 0] = 0.0
        dirs = np.concatenate([dirs.astype(complex), dirs * np.exp(1j * ph)])
    return dirs


def direction_profile(W: WeightGrid, directions: np.ndarray, p: float | None = None) -> np.ndarray:
    """``w_y(x) = |W^{1/p}(x) y|^p`` on the grid for each direction: ``(N,)*n + (D,)``."""
    p = W.p if p is None else float(p)
    root = W.root if p == W.p else W.with_p(p).root
    vec = np.einsum("...ab,db->...da", root, directions)
    return np.linalg.norm(vec, axis=-1) ** p


def _window_sums(a: np.ndarray, length: int, n: int) -> np.ndarray:
    """``out[i] = sum of a over the periodic box [i, i + length)`` per axis."""
    out = a
    for axis in range(n):
        N = out.shape[axis]
        tiled = np.concatenate([out, out], axis=axis)
        cs = np.cumsum(tiled, axis=axis)
        zero = np.zeros_like(np.take(cs, [0], axis=axis))
        cs = np.concatenate([zero, cs], axis=axis)
        hi = np.take(cs, np.arange(N) + length, axis=axis)
        lo = np.take(cs, np.arange(N), axis=axis)
        out = hi - lo
    return out


def doubling_exponent(W: WeightGrid, p: float | None = None, rng: ScaleRange | None = None,
                      directions: np.ndarray | None = None, shifted: bool = True) -> dict:
    """Largest ``log2(w_y(2Q) / w_y(Q))`` over cubes and directions.

    ``2Q`` is concentric with ``Q`` and wraps around the torus.  Levels must lie
    in ``[1, J - 1]`` so that ``Q`` has an even number of cells per side and
    ``2Q`` fits in the torus.
    """
    J, n = W.J, W.n
    rng = rng or ScaleRange(1, J - 1)
    if rng.jmin < 1 or rng.jmax > J - 1:
        raise EmptyCube(f"doubling needs levels in [1, {J - 1}], got [{rng.jmin}, {rng.jmax}]")
    if directions is None:
        directions = direction_sample(W.m)
    V = direction_profile(W, directions, p)
    beta, per_scale, where = -np.inf, [], None
    for j in rng.levels():
        b = 2 ** (J - j)
        inner = _window_sums(V, b, n)
        outer = _window_sums(V, 2 * b, n)
        starts = []
        for sh in _shifts(j, J, n, shifted):
            idx = [np.arange(2**j) * b + s for s in sh]
            starts.append(idx)
        best = -np.inf
        for idx in starts:
            sel_in = inner[np.ix_(*idx)]
            sel_out = outer[np.ix_(*[(i - b // 2) % W.N for i in idx])]
            ratio = np.log2(sel_out / sel_in)
            k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
            if ratio[k] > best:
                best = float(ratio[k])
                if best > beta:
                    where = (j, tuple(int(idx[a][k[a]]) for a in range(n)))
        per_scale.append(best)
        beta = max(beta, best)
    return {"beta": float(beta), "per_scale": per_scale, "argmax": where}


def _level_operator_fields(family, J: int):
    from .grid import expand_levels
    for j in family.range.levels():
        A = family.operators[j]
        yield j, expand_levels(A, j, J, family.n), expand_levels(family.inverse(j), j, J, family.n)


def _goldberg_quantities(W: WeightGrid, family, r: float) -> tuple[float, float, float]:
    n, J = W.n, W.J
    X, Y = {}, {}
    for j, A, Ainv in _level_operator_fields(family, J):
        X[j] = op_norm(A @ W.inv_root)
        Y[j] = op_norm(W.root @ Ainv)
    levels = sorted(X)
    q1 = max(float(block_mean(X[j] ** r, j, n).max()) for j in levels)
    q2 = max(float(block_mean(Y[j] ** r, j, n).max()) for j in levels)
    q3 = 0.0
    running = np.zeros_like(Y[levels[0]])
    for j in reversed(levels):
        running = np.maximum(running, Y[j])
        q3 = max(q3, float(block_mean(running**r, j, n).max()))
    return q1, q2, q3


def goldberg_profile(W: WeightGrid, family, r_values: Sequence[float],
                     threshold: float = 100.0, bisection_steps: int = 30) -> dict:
    """Tabulate the three reverse-Hoelder type suprema as functions of ``r``.

    Rows of the returned ``table`` are ``(r, row1, row2, row3)`` where, with
    ``Q`` over the family's cubes,

    * ``row1 = sup_Q mean_Q ||A_Q W^{-1/p}||^r``
    * ``row2 = sup_Q mean_Q ||W^{1/p} A_Q^{-1}||^r``
    * ``row3 = sup_Q mean_Q sup_{x in P subset Q} ||W^{1/p}(x) A_P^{-1}||^r``

    ``delta`` holds, per row, the empirical exponent gain: the largest ``r`` in
    ``[base, 4 base]`` at which the row stays below ``threshold`` times its
    value at ``base`` (found by bisection), expressed as ``r / base - 1``.
    The base is the dual exponent ``p'`` for row 1 (``p`` when ``p <= 1``) and
    ``p`` for rows 2 and 3.
    """
    p = family.p
    Wp = W if W.p == p else W.with_p(p)
    table = [(float(r),) + _goldberg_quantities(Wp, family, r) for r in r_values]
    bases = [p / (p - 1.0) if p > 1 else p, p, p]
    deltas, r_hat = [], []
    for row, base in enumerate(bases):
        def value(r, row=row):
            return _goldberg_quantities(Wp, family, r)[row]

        limit = threshold * value(base)
        lo, hi = base, 4.0 * base
        if value(hi) <= limit:
            lo = hi
        else:
            for _ in range(bisection_steps):
                mid = 0.5 * (lo + hi)
                if value(mid) <= limit:
                    lo = mid
                else:
                    hi = mid
        r_hat.append(lo)
        deltas.append(lo / base - 1.0)
    return {"table": table, "r_hat": r_hat, "delta": deltas, "bases": bases}
