"""Reducing operators: matrices ``A_Q`` with ``|A_Q y|`` comparable to the
``p``-average of ``|W^{1/p}(x) y|`` over the cube ``Q``.

Three constructions are available:

``gram2``
    ``p = 2``: ``A_Q = (mean_Q W)^{1/2}``, exact.
``scalar``
    ``W = w I`` (in particular ``m = 1``): ``A_Q = (mean_Q w)^{1/p} I``, exact.
``mvee``
    General case: the minimum-volume centered ellipsoid enclosing sampled
    points of the unit sphere of the averaged norm, found with a batched
    Khachiyan iteration with away steps.  By John's theorem the sandwich
    constants satisfy ``c2 / c1 <= sqrt(m)`` up to sampling error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dyadic import DyadicCube, ScaleRange
from .errors import EmptyCube, MissingCube, MveeNonConvergence
from .grid import block_mean, cube_blocks, expand_levels
from .weights import (WeightGrid, direction_profile, direction_sample, matrix_power,
                      op_norm)

__all__ = [
    "ReducingFamily",
    "average_norm",
    "average_norms",
    "mvee",
    "build_reducing",
    "verify_reducing",
    "doubling_constants",
]


@dataclass
class ReducingFamily:
    """Positive definite matrices indexed by the torus cubes of a scale range.

    ``operators[j]`` has shape ``(2**j,)*n + (m, m)``.
    """

    p: float
    operators: dict
    n: int
    strategy: str
    range: ScaleRange
    c1: float | None = None
    c2: float | None = None
    meta: dict = field(default_factory=dict)
    _inverses: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return next(iter(self.operators.values())).shape[-1]

    def __getitem__(self, Q: DyadicCube) -> np.ndarray:
        try:
            return self.operators[Q.j][Q.k]
        except (KeyError, IndexError):
            raise MissingCube(str(Q)) from None

    def covers(self, rng: ScaleRange) -> bool:
        return all(j in self.operators for j in rng.levels())

    def level(self, j: int) -> np.ndarray:
        if j not in self.operators:
            raise MissingCube(f"family has no cubes at level {j}")
        return self.operators[j]

    def inverse(self, j: int) -> np.ndarray:
        if j not in self._inverses:
            self._inverses[j] = np.linalg.inv(self.level(j))
        return self._inverses[j]

    def on_grid(self, j: int, J: int) -> np.ndarray:
        """``A_Q`` broadcast to every cell of ``Q`` on the ``2**J`` grid."""
        return expand_levels(self.level(j), j, J, self.n)

    def items(self) -> Iterator[tuple[DyadicCube, np.ndarray]]:
        for j, arr in self.operators.items():
            for k in np.ndindex(arr.shape[: self.n]):
                yield DyadicCube(j, k), arr[k]

    def to_csv_rows(self) -> Iterator[list]:
        for Q, A in self.items():
            row = [Q.j, *Q.k]
            for z in np.ravel(A):
                row += [float(np.real(z))] if np.isrealobj(A) else [float(z.real), float(z.imag)]
            yield row

    @classmethod
    def identity(cls, rng: ScaleRange, n: int, m: int = 1, p: float = 2.0) -> "ReducingFamily":
        ops = {j: np.broadcast_to(np.eye(m), (2**j,) * n + (m, m)).copy() for j in rng.levels()}
        return cls(p, ops, n, "identity", rng, 1.0, 1.0)

    def scaled(self, c: float) -> "ReducingFamily":
        return ReducingFamily(self.p, {j: c * A for j, A in self.operators.items()}, self.n,
                              self.strategy, self.range, self.c1, self.c2)


def _check_cube(W: WeightGrid, Q: DyadicCube) -> None:
    if Q.n != W.n:
        raise ValueError(f"cube dimension {Q.n} does not match weight dimension {W.n}")
    if Q.j > W.J or not Q.on_torus():
        raise EmptyCube(f"cube {Q} contains no cell of the 2^{W.J} grid")


def average_norm(W: WeightGrid, p: float, Q: DyadicCube, y) -> float:
    """``(mean_{x in Q} |W^{1/p}(x) y|^p)^{1/p}`` over the cells of ``Q``."""
    _check_cube(W, Q)
    y = np.asarray(y).reshape(1, -1)
    V = direction_profile(W, y, p)[..., 0]
    return float(cube_blocks(V, Q.j, W.n)[Q.k].mean() ** (1.0 / p))


def average_norms(W: WeightGrid, p: float, level: int, directions: np.ndarray) -> np.ndarray:
    """``rho_Q(y_d)`` for all cubes of a level: ``(2**level,)*n + (D,)``."""
    if level > W.J:
        raise EmptyCube(f"level {level} is finer than the grid")
    V = direction_profile(W, directions, p)
    return block_mean(V, level, W.n) ** (1.0 / p)


def _sym_basis(d: int) -> np.ndarray:
    """Orthonormal basis of real symmetric ``d x d`` matrices, ``(P, d, d)``."""
    out = []
    for i in range(d):
        for j in range(i, d):
            B = np.zeros((d, d))
            if i == j:
                B[i, i] = 1.0
            else:
                B[i, j] = B[j, i] = 2**-0.5
            out.append(B)
    return np.array(out)


def mvee_khachiyan(points: np.ndarray, tol: float = 1e-8, max_iter: int = 100_000) -> np.ndarray:
    """Centered MVEE by Khachiyan's iteration with Todd-Yildirim away steps.

    Same contract as :func:`mvee`.  Converges slowly when the points nearly
    lie on an ellipse, since the optimal design then spreads over all points.
    """
    pts = np.asarray(points, dtype=float)
    C, D, d = pts.shape
    pi = np.full((C, D), 1.0 / D)
    outer = pts[..., :, None] * pts[..., None, :]
    idx = np.arange(C)
    for _ in range(max_iter):
        X = np.einsum("cd,cdij->cij", pi, outer)
        Xinv = np.linalg.inv(X)
        kappa = np.einsum("cdi,cij,cdj->cd", pts, Xinv, pts)
        kmax_i = np.argmax(kappa, axis=1)
        kmax = kappa[idx, kmax_i]
        active = kmax > d * (1.0 + tol)
        if not active.any():
            return Xinv / d
        masked = np.where(pi > 0, kappa, np.inf)
        kmin_i = np.argmin(masked, axis=1)
        kmin = kappa[idx, kmin_i]
        # toward step gains kmax/d - 1, away step gains 1 - kmin/d
        toward = (kmax / d - 1.0) >= (1.0 - kmin / d)
        j = np.where(toward, kmax_i, kmin_i)
        kj = np.where(toward, kmax, kmin)
        pj = pi[idx, j]
        drop = -pj / (1.0 - pj)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = (kj / d - 1.0) / (kj - 1.0)
        # an away point with kappa <= 1 is dropped outright
        lam = np.where(toward, lam, np.where(kj <= 1.0, drop, np.maximum(lam, drop)))
        lam = np.where(active, lam, 0.0)
        pi *= (1.0 - lam)[:, None]
        pi[idx, j] += lam
        np.maximum(pi, 0.0, out=pi)
    raise MveeNonConvergence(f"no convergence within {max_iter} iterations")


def mvee(points: np.ndarray, tol: float = 1e-8, max_iter: int = 100_000,
         method: str = "barrier") -> np.ndarray:
    """Minimum-volume centered ellipsoids of symmetric point sets.

    The default solver minimizes ``-log det M`` subject to ``u^T M u <= 1``
    with a batched log-barrier Newton method on the entries of ``M``;
    ``method="khachiyan"`` selects the first-order design iteration.

    Parameters
    ----------
    points : ndarray, shape (C, D, d)
        ``C`` independent real point sets; each is treated as ``{+u, -u}``.
    tol : float
        Barrier: stop once the duality gap bound ``D / t`` is below
        ``tol * 1e-3``.  Khachiyan: stop once ``max u^T X^{-1} u <= d (1 + tol)``.
    max_iter : int
        Budget of Newton (or design) iterations.

    Returns
    -------
    ndarray, shape (C, d, d)
        ``M`` with ellipsoid ``{u : u^T M u <= 1}`` containing every point.

    Raises
    ------
    MveeNonConvergence
    """
    if method == "khachiyan":
        return mvee_khachiyan(points, tol, max_iter)
    if method != "barrier":
        raise ValueError(f"unknown MVEE method {method!r}")
    raw = np.asarray(points, dtype=float)
    C, D, d = raw.shape
    # the problem is affinely equivariant, so solve it in whitened coordinates
    gram = np.einsum("cdi,cdj->cij", raw, raw) / D
    lam_g, U_g = np.linalg.eigh(gram)
    white = (U_g * lam_g[:, None, :] ** -0.5) @ np.swapaxes(U_g, -1, -2)
    pts = np.einsum("cij,cdj->cdi", white, raw)
    basis = _sym_basis(d)
    g = np.einsum("cdi,aij,cdj->cda", pts, basis, pts)  # u^T B_a u
    scale = (pts**2).sum(-1).max(axis=1)
    x = np.einsum("a,c->ca", np.einsum("aii->a", basis), 1.0 / (1.01 * scale))
    t, used = 1.0, 0
    gap_target = tol * 1e-3
    while True:
        for _ in range(100):
            M = np.einsum("ca,aij->cij", x, basis)
            Minv = np.linalg.inv(M)
            slack = 1.0 - np.einsum("cda,ca->cd", g, x)
            MB = np.einsum("cij,ajk->caik", Minv, basis)
            grad = -t * np.einsum("caii->ca", MB) + np.einsum("cda,cd->ca", g, 1.0 / slack)
            hess = t * np.einsum("caij,cbji->cab", MB, MB) + np.einsum(
                "cda,cdb,cd->cab", g, g, slack**-2.0)
            step = -np.linalg.solve(hess, grad[..., None])[..., 0]
            dec = -(grad * step).sum(-1)
            used += 1
            if used > max_iter:
                raise MveeNonConvergence(f"no convergence within {max_iter} iterations")
            if dec.max() <= 1e-14:
                break
            # damped Newton step, which stays inside the Dikin ellipsoid
            lam_n = np.sqrt(np.maximum(dec, 0.0))
            alpha = np.where(lam_n > 0.25, 1.0 / (1.0 + lam_n), 1.0)
            x = x + alpha[:, None] * step
        if D / t <= gap_target:
            break
        t *= 10.0
    M = white @ np.einsum("ca,aij->cij", x, basis) @ white
    worst = np.einsum("cdi,cij,cdj->cd", raw, M, raw).max(axis=1)
    return M / worst[:, None, None]


def _realify(dirs: np.ndarray) -> np.ndarray:
    return np.concatenate([dirs.real, dirs.imag], axis=-1)


def _complexify(M: np.ndarray, m: int) -> np.ndarray:
    """Hermitian matrix whose realification is the complex-structure part of ``M``."""
    a, b = M[..., :m, :m], M[..., :m, m:]
    c, e = M[..., m:, :m], M[..., m:, m:]
    return 0.5 * (a + e) + 0.5j * (c - b)


def cube_direction_norms(W: WeightGrid, p: float, level: int, dirs: np.ndarray,
                         chunk: int = 16) -> np.ndarray:
    """``rho_Q(y_{Q,d})`` for per-cube directions ``dirs``: ``(2**level,)*n + (D, m)``."""
    n, J = W.n, W.J
    root = W.root if p == W.p else W.with_p(p).root
    out = []
    for d0 in range(0, dirs.shape[-2], chunk):
        block = expand_levels(dirs[..., d0:d0 + chunk, :], level, J, n)
        vec = np.einsum("...ab,...db->...da", root, block)
        out.append(block_mean(np.linalg.norm(vec, axis=-1) ** p, level, n))
    return np.concatenate(out, axis=-1) ** (1.0 / p)


def _frame_directions(frame_inv: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Directions ``B^{-1} e_d`` per cube, unit length: ``(..., D, m)``."""
    y = np.einsum("...ab,db->...da", frame_inv, base)
    return y / np.linalg.norm(y, axis=-1, keepdims=True)


def _level_mvee(W: WeightGrid, p: float, level: int, base: np.ndarray, tol: float,
                max_iter: int) -> np.ndarray:
    # sample the averaged-norm sphere evenly in the frame of a Gram ellipsoid
    gram = block_mean(W.power(2.0 / p), level, W.n)
    frame_inv = matrix_power(gram, -0.5)
    dirs = _frame_directions(frame_inv, base)
    rho = cube_direction_norms(W, p, level, dirs)
    shape = rho.shape[:-1]
    m = W.m
    pts = (dirs / rho[..., None]).reshape(-1, base.shape[0], m)
    if np.iscomplexobj(pts):
        pts = _realify(pts)
    M = mvee(pts, tol, max_iter)
    if np.iscomplexobj(base) or np.iscomplexobj(W.samples):
        M = _complexify(M, m)
    A = matrix_power(M, 0.5)
    return A.reshape(shape + A.shape[-2:])


def build_reducing(W: WeightGrid, p: float | None = None, rng: ScaleRange | None = None,
                   strategy: str | None = None, directions: np.ndarray | None = None,
                   tol: float = 1e-8, max_iter: int = 100_000) -> ReducingFamily:
    """Build ``A_Q`` for every torus cube of ``rng`` (default ``[0, J-1]``).

    ``strategy`` defaults to ``gram2`` for ``p = 2``, ``scalar`` for weights of
    the form ``w I``, and ``mvee`` otherwise.
    """
    p = W.p if p is None else float(p)
    Wp = W if p == W.p else W.with_p(p)
    rng = rng or ScaleRange(0, W.J - 1)
    if rng.jmin < 0 or rng.jmax > W.J:
        raise EmptyCube(f"scale range [{rng.jmin}, {rng.jmax}] not resolved by the 2^{W.J} grid")
    iso = W.isotropic_density()
    if strategy is None:
        strategy = "gram2" if p == 2 else ("scalar" if iso is not None else "mvee")
    ops = {}
    if strategy == "gram2":
        if p != 2:
            raise ValueError("gram2 needs p = 2")
        for j in rng.levels():
            ops[j] = matrix_power(block_mean(W.samples, j, W.n), 0.5)
    elif strategy == "scalar":
        if iso is None:
            raise ValueError("scalar strategy needs a weight of the form w I")
        eye = np.eye(W.m)
        for j in rng.levels():
            ops[j] = block_mean(iso, j, W.n)[..., None, None] ** (1.0 / p) * eye
    elif strategy == "mvee":
        if directions is None:
            directions = direction_sample(W.m, complex_phases=not W.is_real)
        for j in rng.levels():
            ops[j] = _level_mvee(Wp, p, j, directions, tol, max_iter)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return ReducingFamily(p, ops, W.n, strategy, rng, meta={"weight_id": W.weight_id})


def verify_reducing(W: WeightGrid, family: ReducingFamily,
                    directions: np.ndarray | None = None,
                    adaptive: bool = True) -> tuple[float, float]:
    """Sandwich constants ``c1 = min rho_Q(y)/|A_Q y|`` and ``c2 = max``.

    The default directions differ from the construction sample (twice as
    many, with phases for complex weights).  With ``adaptive`` they are also
    mapped through each ``A_Q^{-1}``, which resolves strongly elongated
    averaged-norm balls.  The result is also stored on the family.
    """
    if directions is None:
        D = {1: 1, 2: 128, 3: 512}.get(W.m, 128 * W.m)
        directions = direction_sample(W.m, D, complex_phases=not W.is_real, seed=1)
    lo, hi = np.inf, 0.0
    for j in family.range.levels():
        A = family.level(j)
        rho = average_norms(W, family.p, j, directions)
        Ay = np.linalg.norm(np.einsum("...ab,db->...da", A, directions), axis=-1)
        ratio = rho / Ay
        if adaptive:
            # the same directions pulled back through each A_Q
            dirs = _frame_directions(family.inverse(j), directions)
            rho_a = cube_direction_norms(W, family.p, j, dirs)
            Ay_a = np.linalg.norm(np.einsum("...ab,...db->...da", A, dirs), axis=-1)
            ratio = np.concatenate([ratio, rho_a / Ay_a], axis=-1)
        lo, hi = min(lo, float(ratio.min())), max(hi, float(ratio.max()))
    family.c1, family.c2 = lo, hi
    return lo, hi


def _fit_cubes(family: ReducingFamily, levels, max_per_level: int):
    """Corner coordinates, levels and matrices of a stratified cube sample."""
    n = family.n
    corners, js, mats, invs = [], [], [], []
    for j in levels:
        side = 2**j
        stride = 1
        while (side // stride) ** n > max_per_level:
            stride *= 2
        idx = np.arange(0, side, stride)
        grid = np.stack(np.meshgrid(*([idx] * n), indexing="ij"), -1).reshape(-1, n)
        A, Ai = family.level(j), family.inverse(j)
        sel = tuple(grid[:, a] for a in range(n))
        corners.append(grid * 2.0 ** (-j))
        js.append(np.full(len(grid), j))
        mats.append(A[sel])
        invs.append(Ai[sel])
    return (np.concatenate(corners), np.concatenate(js), np.concatenate(mats),
            np.concatenate(invs))


def _max_or_zero(values: np.ndarray) -> float:
    return float(values.max()) if values.size else 0.0


def doubling_constants(family: ReducingFamily, beta_step: float = 0.1, beta_max: float = 8.0,
                       slack: float = 2**0.05, max_per_level: int = 256,
                       levels=None) -> dict:
    """Fit strong and weak doubling orders of a reducing family.

    For each grid value of the exponent the best constant is
    ``c(beta) = max LHS / shape_beta`` over cube pairs.  Any exponent gives a
    finite constant on a finite cube set, so the fitted order is the smallest
    grid value at which the constant stops growing with resolution: adding
    the finest level raises it by at most ``slack``.  Same-level pairs with
    the periodic index distance are fitted the same way for weak doubling,
    with the extra requirement that the weak constant not exceed the strong
    one (weak doubling is the same-level restriction of strong doubling).

    Returns
    -------
    dict
        ``beta``, ``c_strong``, ``r``, ``c_weak`` and the grids scanned.
    """
    p, n = family.p, family.n
    levels = sorted(levels or [j for j in family.range.levels() if j >= 1] or family.range.levels())
    if len(levels) < 2:
        raise ValueError("doubling constants need at least two levels")
    corners, js, A, Ai = _fit_cubes(family, levels, max_per_level)
    lhs = op_norm(A[:, None] @ Ai[None, :])  # ||A_Q A_P^{-1}||, rows Q
    diff = corners[:, None, :] - corners[None, :, :]
    diff -= np.round(diff)
    dist = np.sqrt((diff**2).sum(-1))
    lq, lp = 2.0 ** (-js[:, None]), 2.0 ** (-js[None, :])
    dfac = 1.0 + dist / np.maximum(lq, lp)
    coarse = (js[:, None] < levels[-1]) & (js[None, :] < levels[-1])
    same = js[:, None] == js[None, :]
    # periodic index distance for same-level pairs equals dist / side
    kdist = 1.0 + dist / lq
    betas = np.round(np.arange(0.0, beta_max + 1e-9, beta_step), 10)
    log_l = np.log(lhs)
    log_d = np.log(dfac)
    log_ratio = np.log(lp / lq)  # log(l(P)/l(Q))

    strong = []
    for b in betas:
        shape = np.maximum(n * log_ratio, (b - n) * -log_ratio) + b * log_d
        excess = p * log_l - shape
        strong.append((math.exp(_max_or_zero(excess)), math.exp(_max_or_zero(excess[coarse]))))
    weak = []
    log_k = np.log(kdist)
    for r in betas:
        excess = log_l - r * log_k
        weak.append((math.exp(_max_or_zero(excess[same])), math.exp(_max_or_zero(excess[same & coarse]))))

    def pick(rows, cap=np.inf):
        for b, (full, drop) in zip(betas, rows):
            if full <= slack * drop and full <= cap * (1 + 1e-12):
                return float(b), full
        return float(betas[-1]), rows[-1][0]

    beta, c_strong = pick(strong)
    r, c_weak = pick(weak, cap=c_strong)
    return {"beta": beta, "c_strong": c_strong, "r": r, "c_weak": c_weak,
            "grid": betas.tolist(), "strong": strong, "weak": weak, "levels": levels}
