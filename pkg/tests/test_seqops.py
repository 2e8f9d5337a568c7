import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from mwlp.dyadic import DyadicCube, ScaleRange, omega, torus_cubes
from mwlp.errors import HypothesisUnverifiable, ScaleOutOfRange
from mwlp.grid import CoeffSequence, GridFunction
from mwlp.reducing import ReducingFamily, build_reducing
from mwlp.seqops import (
    AlmostDiagonalSpec,
    admissibility_thresholds,
    almost_diag_apply,
    almost_diag_norm,
    averaging,
    carleson_inequality_check,
    carleson_norm,
    dyadic_maximal,
    fefferman_stein_check,
    gamma_fields,
    nazarov_check,
    random_level_fields,
)
from mwlp.spaces import SpaceParams
from mwlp.weights import MatrixWeight


def random_sequence(levels, n, m, seed):
    g = np.random.default_rng(seed)
    return CoeffSequence({j: g.normal(size=(2**j,) * n + (m,)) for j in levels}, n)


def test_thresholds_closed_form():
    t = admissibility_thresholds(0.5, 2.0, 1.0, 1.0, 1)
    assert t == pytest.approx({"a1": -0.5 - 0.5 + 0.0 + 1.0, "a2": 0.5 + 0.5 + 0.5, "R": 1.0 + 0.5})
    r = admissibility_thresholds(0.0, 0.5, 2.0, 2.0, 2)
    assert r["R"] == pytest.approx(2 / 0.5 + 2 / 0.5)


def test_synthetic_spec_sits_above_thresholds():
    B = AlmostDiagonalSpec.synthetic(0.5, 2.0, 2.0, 1.0, 1, margin=0.25)
    assert B.admissible(0.5, 2.0, 2.0, 1.0, 1)
    assert B.margins(0.5, 2.0, 2.0, 1.0, 1) == pytest.approx({"a1": 0.25, "a2": 0.25, "R": 0.25})
    assert not AlmostDiagonalSpec.synthetic(0.5, 2.0, 2.0, 1.0, 1, margin=-0.1).admissible(
        0.5, 2.0, 2.0, 1.0, 1)


def test_identity_matrix_returns_the_sequence():
    s = random_sequence([1, 2, 3], 1, 2, 0)
    t = almost_diag_apply(AlmostDiagonalSpec.identity(), s)
    assert all(np.array_equal(t.levels[j], s.levels[j]) for j in s.levels)


def test_single_entry_moves_one_coefficient():
    s = random_sequence([2, 3], 1, 2, 1)
    Q, P = DyadicCube(2, (1,)), DyadicCube(3, (6,))
    B = AlmostDiagonalSpec(0, 0, 0, entries={(Q, P): 2.5})
    t = almost_diag_apply(B, s)
    assert np.allclose(t.levels[2][1], 2.5 * s.levels[3][6])
    t.levels[2][1] = 0
    assert all(np.all(v == 0) for v in t.levels.values())


@pytest.mark.parametrize("n, levels", [(1, [1, 2, 3]), (2, [1, 2])])
def test_dense_apply_matches_pairwise_omega(n, levels):
    B = AlmostDiagonalSpec(1.5, 2.0, 2.5, scale=0.7)
    s = random_sequence(levels, n, 2, 2)
    t = almost_diag_apply(B, s)
    cubes = [Q for j in levels for Q in torus_cubes(j, n)]
    for Q in cubes:
        ref = sum(0.7 * omega(Q, P, 1.5, 2.0, 2.5, periodic=True) * s[P] for P in cubes)
        assert np.allclose(t[Q], ref, atol=1e-12)


@given(st.integers(0, 200), st.floats(-3, 3))
def test_apply_is_linear(seed, c):
    B = AlmostDiagonalSpec(1.0, 2.0, 2.0)
    u, v = random_sequence([1, 2, 3], 1, 1, seed), random_sequence([1, 2, 3], 1, 1, seed + 1)
    lhs = almost_diag_apply(B, u * c + v)
    a, b = almost_diag_apply(B, u), almost_diag_apply(B, v)
    assert all(np.allclose(lhs.levels[j], c * a.levels[j] + b.levels[j], atol=1e-12) for j in lhs.levels)


def test_apply_is_monotone_in_entries():
    s = random_sequence([1, 2, 3], 1, 1, 3)
    s = CoeffSequence({j: np.abs(v) for j, v in s.levels.items()}, 1)
    small = almost_diag_apply(AlmostDiagonalSpec(2.0, 2.0, 3.0), s)
    big = almost_diag_apply(AlmostDiagonalSpec(1.0, 1.0, 2.0), s)
    assert all(np.all(big.levels[j].real >= small.levels[j].real - 1e-14) for j in s.levels)


def test_almost_diag_norm_of_identity_is_one():
    rng = ScaleRange(1, 4)
    fam = ReducingFamily.identity(rng, 1, 2)
    rep = almost_diag_norm(AlmostDiagonalSpec.identity(), fam, SpaceParams(0.5, 2.0, 2.0), rng, trials=5)
    assert rep["max_ratio"] == pytest.approx(1.0, abs=1e-12)
    assert len(rep["rows"]) == 5


@pytest.mark.parametrize("n, J, j", [(1, 6, 0), (1, 6, 3), (1, 6, 6), (2, 4, 2)])
def test_averaging_matches_oracle_and_basic_laws(n, J, j, rng):
    a = rng.normal(size=(2**J,) * n)
    e = averaging(a, j, n)
    assert np.allclose(e, oracles.average(a, j, n), atol=1e-14)
    assert np.array_equal(averaging(e, j, n), e)
    assert e.mean() == pytest.approx(a.mean(), abs=1e-13)
    assert np.abs(e).mean() <= np.abs(a).mean() + 1e-14
    assert (e**2).mean() <= (a**2).mean() + 1e-14
    c = np.full_like(a, 2.5)
    assert np.array_equal(averaging(c, j, n), c)


def test_averaging_grid_function_and_range(rng):
    f = GridFunction(rng.normal(size=(16, 2)), 1)
    assert averaging(f, 2).values.shape == (16, 2)
    with pytest.raises(ScaleOutOfRange):
        averaging(np.zeros(16), 5, 1)


@pytest.mark.parametrize("n, J", [(1, 6), (2, 4)])
def test_maximal_matches_oracle(n, J, rng):
    a = rng.normal(size=(2**J,) * n)
    assert np.allclose(dyadic_maximal(a, n=n), oracles.maximal(a, range(0, J + 1), n), atol=1e-14)


def test_maximal_basic_laws(rng):
    a, b = rng.normal(size=64), rng.normal(size=64)
    assert np.allclose(dyadic_maximal(np.full(64, -3.0)), 3.0)
    M = dyadic_maximal(a)
    for j in range(7):
        assert np.all(M >= np.abs(averaging(a, j)) - 1e-14)
    assert np.all(dyadic_maximal(a + b) <= M + dyadic_maximal(b) + 1e-12)
    assert np.all(M >= np.abs(a) - 1e-14)


def test_maximal_of_indicator_by_hand():
    # J = 4, indicator of the first cell; cubes containing x = 0 have length 2^-j
    a = np.zeros(16)
    a[0] = 1.0
    M = dyadic_maximal(a)
    assert M[0] == 1.0 and M[1] == 0.5
    assert M[2] == M[3] == 0.25
    assert np.all(M[4:8] == 0.125) and np.all(M[8:] == 1 / 16)


def test_carleson_examples(rng):
    ones = {j: np.ones(32) for j in range(6)}
    assert carleson_norm(ones) == 1.0
    single = {3: rng.random(32)}
    expect = max(float(single[3].mean()), max(float(single[3][k * 4:(k + 1) * 4].mean()) for k in range(8)))
    assert carleson_norm(single, ScaleRange(0, 3, False)) == pytest.approx(expect)
    with pytest.raises(ValueError):
        carleson_norm({1: -np.ones(8)})


@pytest.mark.parametrize("n, J", [(1, 5), (2, 3)])
def test_carleson_matches_oracle(n, J, rng):
    alphas = {j: rng.random((2**J,) * n) for j in range(J + 1)}
    assert carleson_norm(alphas, n=n) == pytest.approx(oracles.carleson(alphas, range(0, J + 1), n), rel=1e-12)


def test_carleson_inequality_over_random_pairs(rng):
    for _ in range(50):
        alphas = {j: rng.random(32) ** 3 for j in range(6)}
        gs = {j: rng.normal(size=32) for j in range(6)}
        rep = carleson_inequality_check(alphas, gs)
        assert rep["lhs"] <= rep["rhs"] * (1 + 1e-12)


def test_gamma_fields_constant_weight_is_one():
    W = MatrixWeight.constant(np.array([[2.0, 0.3], [0.3, 1.0]])).sample(6, 1, 2.0)
    g = gamma_fields(W, build_reducing(W, 2.0))
    assert all(np.allclose(v, 1.0, atol=1e-6) for v in g.values())


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_gamma_fields_scalar_formula(p):
    W = MatrixWeight.scalar_power(0.5).sample(7, 1, p)
    fam = build_reducing(W, p)
    g = gamma_fields(W, fam)
    w = W.scalar_density()
    for j in (1, 4):
        expect = (w / oracles.average(w, j, 1)) ** (1 / p)
        assert np.allclose(g[j], expect, rtol=1e-10)
    assert all(np.all(v > 0) for v in g.values())


def test_nazarov_control_case_is_exactly_one():
    rng = ScaleRange(1, 6)
    gammas = {j: np.ones(128) for j in rng.levels()}
    fs = random_level_fields(rng, 7, 1, trials=4, seed=3)
    rep = nazarov_check(gammas, fs, 2.0, 2.0, "i")
    assert rep["max_ratio"] == 1.0 and rep["hypothesis_value"] == 1.0


def test_nazarov_mode_ii_on_shipped_weight():
    W = MatrixWeight.rotated_diagonal((0.5, -0.3)).sample(8, 1, 2.0)
    fam = build_reducing(W, 2.0)
    g = gamma_fields(W, fam)
    fs = random_level_fields(fam.range, 8, 1, trials=5)
    rep = nazarov_check(g, fs, 2.0, 2.0, "ii")
    assert math.isfinite(rep["max_ratio"]) and rep["max_ratio"] > 0


def test_nazarov_rejects_bad_inputs():
    gammas = {1: np.full(16, 1e6)}
    fs = random_level_fields(ScaleRange(1, 1), 4, 1, trials=1)
    with pytest.raises(HypothesisUnverifiable):
        nazarov_check(gammas, fs, 2.0, 2.0, "i", threshold=1e3)
    with pytest.raises(ValueError):
        nazarov_check({1: np.ones(16)}, fs, 2.0, 3.0, "i")
    with pytest.raises(ValueError):
        nazarov_check({1: np.ones(16)}, fs, 1.0, 2.0, "ii")


def test_fefferman_stein_is_finite_and_at_least_one():
    fs = random_level_fields(ScaleRange(1, 6), 7, 1, trials=5, seed=1)
    rep = fefferman_stein_check(fs, 2.0)
    assert all(1.0 - 1e-12 <= r[3] < math.inf for r in rep["rows"])
