"""Operators on cube-indexed sequences and level-indexed grid fields.

Contents: almost-diagonal matrices, the dyadic averaging operators
``E_j``, the dyadic maximal function, the Carleson functional of a family
of nonnegative fields, the ``gamma_j`` fields built from a weight and its
reducing operators, and measured-ratio checks of the inequalities relating
them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube, ScaleRange, omega_matrix
from .errors import HypothesisUnverifiable, MissingCube, ScaleOutOfRange
from .grid import (CoeffSequence, GridFunction, apply_multiplier, block_max, block_mean,
                   expand_levels, frequency_radius, grid_level)
from .reducing import ReducingFamily
from .spaces import SpaceParams, lq_lp, seq_norm_AQ
from .weights import WeightGrid, op_norm

__all__ = [
    "AlmostDiagonalSpec",
    "admissibility_thresholds",
    "almost_diag_apply",
    "almost_diag_norm",
    "averaging",
    "dyadic_maximal",
    "carleson_norm",
    "carleson_inequality_check",
    "gamma_fields",
    "random_level_fields",
    "nazarov_check",
    "fefferman_stein_check",
]

MAX_DENSE_CUBES = 16384


def admissibility_thresholds(alpha: float, p: float, q: float, beta: float, n: int) -> dict:
    """Lower bounds that ``(a1, a2, R)`` must exceed for boundedness."""
    r = min(1.0, p, q)
    return {
        "a1": -alpha - n / 2 + (beta - n) / p + n / r,
        "a2": alpha + n / 2 + n / p,
        "R": n / r + beta / p,
    }


@dataclass
class AlmostDiagonalSpec:
    """A cube-indexed matrix ``b_QP``.

    Either synthetic, ``b_QP = scale * omega(Q, P; a1, a2, R)`` with periodic
    distances, or given by explicit sparse ``entries`` keyed by ``(Q, P)``.
    """

    a1: float
    a2: float
    R: float
    scale: float = 1.0
    entries: dict | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def synthetic(cls, alpha: float, p: float, q: float, beta: float, n: int,
                  margin: float = 0.5, scale: float = 1.0) -> "AlmostDiagonalSpec":
        t = admissibility_thresholds(alpha, p, q, beta, n)
        spec = cls(t["a1"] + margin, t["a2"] + margin, t["R"] + margin, scale)
        spec.meta = {"thresholds": t, "margin": margin, "alpha": alpha, "p": p, "q": q,
                     "beta": beta, "n": n}
        return spec

    @classmethod
    def identity(cls) -> "AlmostDiagonalSpec":
        return cls(0.0, 0.0, 0.0, entries="identity")

    def margins(self, alpha: float, p: float, q: float, beta: float, n: int) -> dict:
        t = admissibility_thresholds(alpha, p, q, beta, n)
        return {"a1": self.a1 - t["a1"], "a2": self.a2 - t["a2"], "R": self.R - t["R"]}

    def admissible(self, alpha: float, p: float, q: float, beta: float, n: int) -> bool:
        return all(v > 0 for v in self.margins(alpha, p, q, beta, n).values())


def _apply_entries(B: AlmostDiagonalSpec, s: CoeffSequence, rng: ScaleRange) -> dict:
    out = {j: np.zeros((2**j,) * s.n + (s.m,), dtype=complex) for j in rng.levels()}
    if B.entries == "identity":
        for j in rng.levels():
            if j in s.levels:
                out[j] = s.levels[j].copy()
        return out
    for (Q, P), b in B.entries.items():
        if Q.j not in out or P.j not in s.levels:
            continue
        out[Q.j][Q.k] += b * s.levels[P.j][P.k]
    return out


def almost_diag_apply(B: AlmostDiagonalSpec, s: CoeffSequence,
                      rng: ScaleRange | None = None) -> CoeffSequence:
    """``t_Q = sum_P b_QP s_P`` for every cube ``Q`` of ``rng``.

    The sum runs over the cubes of ``s`` whose level lies in ``rng``.
    """
    rng = rng or ScaleRange(s.jmin, s.jmax, s.homogeneous)
    if B.entries is not None:
        return CoeffSequence(_apply_entries(B, s, rng), s.n, s.homogeneous)
    levels = list(rng.levels())
    total = sum(2 ** (j * s.n) for j in levels)
    if total > MAX_DENSE_CUBES:
        raise ValueError(f"{total} cubes exceed the dense limit {MAX_DENSE_CUBES}")
    flat = np.concatenate([
        (s.levels[j] if j in s.levels else np.zeros((2**j,) * s.n + (s.m,))).reshape(-1, s.m)
        for j in levels])
    mat = B.scale * omega_matrix(levels, s.n, B.a1, B.a2, B.R, periodic=True)
    return CoeffSequence.from_flat(mat @ flat, levels, s.n, s.homogeneous)


def _random_sequence(gen: np.random.Generator, rng: ScaleRange, n: int, m: int) -> CoeffSequence:
    return CoeffSequence({j: gen.standard_normal((2**j,) * n + (m,)) for j in rng.levels()},
                         n, rng.homogeneous)


def almost_diag_norm(B: AlmostDiagonalSpec, family: ReducingFamily, params: SpaceParams,
                     rng: ScaleRange, trials: int = 50, seed: int = 0) -> dict:
    """Largest ``||Bs|| / ||s||`` in the reducing-operator sequence norm.

    Sequences have independent standard normal components on every cube.
    """
    gen = np.random.default_rng(seed)
    params = params.with_(range=None, homogeneous=rng.homogeneous)
    rows = []
    for trial in range(trials):
        s = _random_sequence(gen, rng, family.n, family.m)
        lhs = seq_norm_AQ(almost_diag_apply(B, s, rng), family, params).value
        rhs = seq_norm_AQ(s, family, params).value
        rows.append((trial, lhs, rhs, lhs / rhs))
    return {"max_ratio": max(r[3] for r in rows), "rows": rows,
            "jmin": rng.jmin, "jmax": rng.jmax}


# ---------------------------------------------------------------------------
# averaging and maximal functions


def _field_level(a: np.ndarray, n: int) -> int:
    return grid_level(a.shape[0])


def averaging(f, j: int, n: int | None = None):
    """``E_j f``: each level-``j`` cube's values replaced by their mean.

    Accepts a :class:`GridFunction` or a bare grid array (scalar field of
    dimension ``n``, inferred from ``ndim`` when omitted).
    """
    if isinstance(f, GridFunction):
        return f.with_values(averaging(f.values, j, f.n))
    a = np.asarray(f)
    n = a.ndim if n is None else n
    J = _field_level(a, n)
    if not 0 <= j <= J:
        raise ScaleOutOfRange(f"averaging level {j} outside [0, {J}]")
    mean = block_mean(a, j, n)
    # cubes that are already constant keep their value, so E_j is idempotent bitwise
    lo = -block_max(-a, j, n)
    mean = np.where(lo == block_max(a, j, n), lo, mean)
    return expand_levels(mean, j, J, n)


def _magnitude(f, n: int | None):
    if isinstance(f, GridFunction):
        return np.linalg.norm(f.values, axis=-1), f.n
    a = np.abs(np.asarray(f))
    return a, (a.ndim if n is None else n)


def dyadic_maximal(f, rng: ScaleRange | None = None, n: int | None = None) -> np.ndarray:
    """``Mf(x) = max_{Q containing x, level in rng} avg_Q |f|``.

    Vector-valued inputs use the pointwise Euclidean length.
    """
    a, n = _magnitude(f, n)
    J = _field_level(a, n)
    rng = rng or ScaleRange(0, J, False)
    if rng.jmin < 0 or rng.jmax > J:
        raise ScaleOutOfRange(f"levels [{rng.jmin}, {rng.jmax}] outside [0, {J}]")
    out = None
    for j in rng.levels():
        e = averaging(a, j, n)
        out = e if out is None else np.maximum(out, e)
    return out


def carleson_norm(alphas: dict, rng: ScaleRange | None = None, n: int | None = None) -> float:
    """``sup_Q avg_Q sup_{j >= level(Q)} alpha_j`` over cubes with levels in ``rng``.

    ``alphas`` maps level to a nonnegative grid field; levels absent from
    the mapping count as zero.
    """
    levels = sorted(alphas)
    first = np.asarray(alphas[levels[0]])
    n = first.ndim if n is None else n
    J = _field_level(first, n)
    rng = rng or ScaleRange(0, max(levels), False)
    if rng.jmin < 0 or rng.jmax > J:
        raise ScaleOutOfRange(f"levels [{rng.jmin}, {rng.jmax}] outside [0, {J}]")
    if any(np.min(alphas[j]) < 0 for j in levels):
        raise ValueError("Carleson families must be nonnegative")
    best = 0.0
    running = np.zeros_like(first, dtype=float)
    top = max(rng.jmax, max(levels))
    for l in range(top, rng.jmin - 1, -1):
        if l in alphas:
            running = np.maximum(running, alphas[l])
        if l in rng:
            best = max(best, float(block_mean(running, l, n).max()))
    return best


def carleson_inequality_check(alphas: dict, gs: dict, n: int | None = None) -> dict:
    """Both sides of ``||sup_j |alpha_j g_j| ||_1 <= ||alpha||_C ||sup_j |g_j| ||_1``."""
    levels = sorted(gs)
    lhs = np.max(np.stack([np.abs(alphas.get(j, 0.0) * gs[j]) for j in levels]), axis=0)
    rhs_field = np.max(np.stack([np.abs(gs[j]) for j in levels]), axis=0)
    C = carleson_norm(alphas, n=n)
    lhs_v, rhs_v = float(np.mean(lhs)), float(np.mean(rhs_field))
    return {"lhs": lhs_v, "rhs": C * rhs_v, "carleson": C,
            "ratio": lhs_v / (C * rhs_v) if C * rhs_v > 0 else 0.0}


# ---------------------------------------------------------------------------
# gamma fields and the Nazarov inequalities


def gamma_fields(W: WeightGrid, family: ReducingFamily, p: float | None = None,
                 rng: ScaleRange | None = None) -> dict:
    """``gamma_j(x) = ||W^{1/p}(x) A_Q^{-1}||`` for the level-``j`` cube ``Q`` of ``x``."""
    p = family.p if p is None else float(p)
    rng = rng or family.range
    root = (W if W.p == p else W.with_p(p)).root
    out = {}
    for j in rng.levels():
        if j not in family.operators:
            raise MissingCube(f"reducing family has no cubes at level {j}")
        inv = expand_levels(family.inverse(j), j, W.J, W.n)
        out[j] = op_norm(root @ inv)
    return out


def random_level_fields(rng: ScaleRange, J: int, n: int, trials: int, seed: int = 0) -> list:
    """Fixed-seed random families ``{f_j}``.

    Each ``f_j`` is a standard normal grid field low-passed to wavenumbers
    ``|nu| <= 2**(j + 1)``.
    """
    gen = np.random.default_rng(seed)
    radius = frequency_radius(2**J, n)
    out = []
    for _ in range(trials):
        fam = {}
        for j in rng.levels():
            noise = gen.standard_normal((2**J,) * n)
            mask = (radius <= 2 ** (j + 1)).astype(float)
            fam[j] = np.real(apply_multiplier(noise, mask, n))
        out.append(fam)
    return out


def _lpq(fields: dict, p: float, q: float, n: int) -> float:
    return lq_lp((np.abs(fields[j]) for j in sorted(fields)), p, q, n)[0]


def nazarov_check(gammas: dict, fs: list, p: float, q: float, mode: str = "i",
                  delta: float = 0.1, threshold: float = 1e8, n: int | None = None) -> dict:
    """Measured constant in ``||{gamma_j E_j f_j}|| <= c ||{...}||`` over trials.

    Parameters
    ----------
    mode : {"i", "ii"}
        ``"i"`` compares with ``||{E_j f_j}||_{L^p(l^q)}`` and needs
        ``0 < q <= p``; ``"ii"`` compares with ``||{f_j}||_{L^p(l^q)}`` and needs
        ``1 < p`` and ``q >= 1``.
    delta : float
        Exponent margin in the hypothesis quantity, which is the uniform
        cube average of ``gamma_j^{p(1+delta)}`` (mode i) or its Carleson
        norm (mode ii).

    Raises
    ------
    HypothesisUnverifiable
        If the hypothesis quantity exceeds ``threshold``.
    """
    levels = sorted(gammas)
    n = np.asarray(gammas[levels[0]]).ndim if n is None else n
    power = p * (1 + delta)
    if mode == "i":
        if not 0 < q <= p:
            raise ValueError("mode i needs 0 < q <= p")
        hyp = max(float(block_mean(gammas[j] ** power, j, n).max()) for j in levels)
    elif mode == "ii":
        if not (p > 1 and q >= 1):
            raise ValueError("mode ii needs p > 1 and q >= 1")
        hyp = carleson_norm({j: gammas[j] ** power for j in levels}, n=n)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not math.isfinite(hyp) or hyp > threshold:
        raise HypothesisUnverifiable(f"hypothesis quantity {hyp:.3g} exceeds {threshold:.3g}")
    rows = []
    for trial, f in enumerate(fs):
        avg = {j: averaging(f[j], j, n) for j in levels}
        lhs = _lpq({j: gammas[j] * avg[j] for j in levels}, p, q, n)
        rhs = _lpq(avg if mode == "i" else {j: f[j] for j in levels}, p, q, n)
        rows.append((trial, lhs, rhs, lhs / rhs if rhs > 0 else 0.0))
    return {"max_ratio": max(r[3] for r in rows), "hypothesis_value": hyp, "rows": rows,
            "mode": mode, "p": p, "q": q}


def fefferman_stein_check(fs: list, p: float, n: int | None = None) -> dict:
    """Measured ``||(sum (M f_j)^2)^{1/2}||_p / ||(sum f_j^2)^{1/2}||_p`` over trials."""
    rows = []
    for trial, f in enumerate(fs):
        levels = sorted(f)
        nn = np.asarray(f[levels[0]]).ndim if n is None else n
        maxed = {j: dyadic_maximal(f[j], n=nn) for j in levels}
        lhs = _lpq(maxed, p, 2.0, nn)
        rhs = _lpq(f, p, 2.0, nn)
        rows.append((trial, lhs, rhs, lhs / rhs))
    return {"max_ratio": max(r[3] for r in rows), "rows": rows}
