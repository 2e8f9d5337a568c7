import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from mwlp.dyadic import DyadicCube, ScaleRange
from mwlp.errors import ScaleOutOfRange
from mwlp.grid import GridFunction
from mwlp.lpcore import build_admissible
from mwlp.runner import band_limited_family, on_grid
from mwlp.wavelets import (
    cascade,
    daubechies_filter,
    daubechies_system,
    gram_deviation,
    meyer_system,
    verify_wavelet_hypotheses,
    wavelet_coeffs,
    wavelet_function,
    wavelet_synthesize,
)

DB2 = np.array([1 + math.sqrt(3), 3 + math.sqrt(3), 3 - math.sqrt(3), 1 - math.sqrt(3)]) / (4 * math.sqrt(2))


def band_limited(J, n, m=1, seed=0):
    band = build_admissible(J, n).band_limit
    return on_grid(band_limited_family(1, n, m, band, seed, False)[0], J, n)


def test_db2_taps_closed_form():
    assert np.allclose(daubechies_filter(2), DB2, atol=1e-14)
    assert np.allclose(daubechies_filter(1), [1 / math.sqrt(2)] * 2, atol=1e-15)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 6])
def test_daubechies_filter_is_orthonormal(N):
    h = daubechies_filter(N)
    assert len(h) == 2 * N and h.sum() == pytest.approx(math.sqrt(2), abs=1e-13)
    for shift in range(N):
        dot = float(np.dot(h[2 * shift:], h[: len(h) - 2 * shift]))
        assert dot == pytest.approx(1.0 if shift == 0 else 0.0, abs=1e-12)


def test_cascade_partition_of_unity():
    x, phi, psi = cascade(daubechies_filter(2), resolution=8)
    step = x[1] - x[0]
    assert np.sum(phi) * step == pytest.approx(1.0, abs=1e-10)
    assert np.sum(psi) * step == pytest.approx(0.0, abs=1e-10)
    assert np.sum(phi**2) * step == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("n, J", [(1, 10), (2, 7)])
@pytest.mark.parametrize("seed", [0, 1])
def test_meyer_parseval(n, J, seed):
    f = band_limited(J, n, m=2, seed=seed)
    c = wavelet_coeffs(f, meyer_system(n))
    assert abs(c.energy() - f.l2_norm() ** 2) <= 1e-8 * f.l2_norm() ** 2


@pytest.mark.parametrize("sys", [meyer_system(1), daubechies_system(2), daubechies_system(4)],
                         ids=["meyer", "db2", "db4"])
def test_round_trip_1d(sys, rng):
    f = GridFunction(rng.normal(size=(256, 2)), 1)
    back = wavelet_synthesize(wavelet_coeffs(f, sys), sys, 8)
    assert (back - f).l2_norm() <= 1e-10 * f.l2_norm()


@pytest.mark.parametrize("n, i, Q", [
    (1, 1, DyadicCube(4, (5,))),
    (1, 1, DyadicCube(0, (0,))),
    (2, 2, DyadicCube(3, (1, 6))),
    (2, 3, DyadicCube(2, (0, 3))),
])
@pytest.mark.parametrize("kind", ["meyer", "db3"])
def test_single_wavelet_has_one_coefficient(n, i, Q, kind):
    sys = meyer_system(n) if kind == "meyer" else daubechies_system(3, n)
    J = 8 if n == 1 else 6
    c = wavelet_coeffs(wavelet_function(sys, J, i, Q), sys)
    for t, s in enumerate(c.details, start=1):
        for P, v in s.items():
            expect = 1.0 if (t == i and P == Q) else 0.0
            assert abs(v[0] - expect) <= 1e-8
    assert np.abs(c.scaling).max() <= 1e-8


@pytest.mark.parametrize("j, k", [(1, 1), (3, 2), (5, 17), (6, 40)])
def test_meyer_coefficients_match_lattice_quadrature(j, k):
    J = 8
    f = band_limited(J, 1, seed=3)
    c = wavelet_coeffs(f, meyer_system(1))
    ref = oracles.quadrature(f.values[:, 0], oracles.meyer_wavelet(2**J, j, k))
    assert abs(c.details[0].levels[j][k, 0] - ref) <= 1e-8


def test_meyer_generator_matches_explicit_sum():
    J = 7
    g = wavelet_function(meyer_system(1), J, 1, DyadicCube(3, (2,)))
    assert np.allclose(g.values[:, 0], oracles.meyer_wavelet(2**J, 3, 2), atol=1e-10)


@pytest.mark.parametrize("sys, J, levels, tol", [
    (meyer_system(1), 8, (1, 2, 3), 1e-8),
    (meyer_system(2), 6, (1, 2), 1e-8),
    (daubechies_system(2), 8, (1, 2, 3), 1e-6),
    (daubechies_system(3, 2), 6, (1, 2), 1e-6),
], ids=["meyer1", "meyer2", "db2", "db3-2d"])
def test_gram_matrix_is_identity(sys, J, levels, tol):
    assert gram_deviation(sys, J, levels) <= tol


def test_meyer_moments_vanish():
    rep = verify_wavelet_hypotheses(meyer_system(1), N0=4)
    assert max(rep["moments"].values()) <= 1e-10
    assert rep["verified_N0"] == 4


def test_db2_moments_stop_at_order_two():
    rep = verify_wavelet_hypotheses(daubechies_system(2), N0=2)
    m = rep["moments"]
    assert m["0"] <= 1e-8 and m["1"] <= 1e-8
    assert m["2"] > 1e-3
    assert rep["verified_N0"] == 1


def test_decay_constants_are_finite():
    for sys in (daubechies_system(3), meyer_system(1), meyer_system(2)):
        rep = verify_wavelet_hypotheses(sys, N0=1, R=2.0, S=1)
        assert all(math.isfinite(v) and v > 0 for v in rep["decay"].values())


@given(st.integers(0, 500), st.floats(-2, 2), st.floats(-2, 2))
def test_coefficients_are_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    f = GridFunction(rng.normal(size=(64, 1)), 1)
    g = GridFunction(rng.normal(size=(64, 1)), 1)
    for sys in (meyer_system(1), daubechies_system(2)):
        lhs = wavelet_coeffs(f * a + g * b, sys)
        cf, cg = wavelet_coeffs(f, sys), wavelet_coeffs(g, sys)
        for j, v in lhs.details[0].levels.items():
            assert np.allclose(v, a * cf.details[0].levels[j] + b * cg.details[0].levels[j], atol=1e-12)


@pytest.mark.parametrize("sys", [meyer_system(1), daubechies_system(2)], ids=["meyer", "db2"])
def test_finest_shift_permutes_finest_coefficients(sys, rng):
    J = 8
    f = GridFunction(rng.normal(size=(2**J, 1)), 1)
    shifted = GridFunction(np.roll(f.values, 2, axis=0), 1)
    a = wavelet_coeffs(f, sys).details[0].levels[J - 1]
    b = wavelet_coeffs(shifted, sys).details[0].levels[J - 1]
    # two finest cells are one cube of the finest wavelet level
    assert np.allclose(np.roll(a, 1, axis=0), b, atol=1e-10)


def test_2d_generators_are_tensor_products():
    J = 6
    sys1, sys2 = meyer_system(1), meyer_system(2)
    Q = DyadicCube(3, (2, 5))
    psi_x = wavelet_function(sys1, J, 1, DyadicCube(3, (2,))).values[:, 0]
    psi_y = wavelet_function(sys1, J, 1, DyadicCube(3, (5,))).values[:, 0]
    both = wavelet_function(sys2, J, 3, Q).values[..., 0]
    assert np.allclose(both, np.outer(psi_x, psi_y), atol=1e-8)


def test_range_checks():
    f = GridFunction.zeros(6)
    with pytest.raises(ScaleOutOfRange):
        wavelet_coeffs(f, meyer_system(1), ScaleRange(0, 6, True))
    with pytest.raises(ValueError):
        wavelet_coeffs(f, meyer_system(2))


@pytest.mark.parametrize("n, J, levels", [(1, 6, (3, 4, 5)), (2, 5, (3, 4))])
def test_meyer_gram_includes_finest_levels(n, J, levels):
    assert gram_deviation(meyer_system(n), J, levels) <= 1e-8


@pytest.mark.parametrize("n, J", [(1, 9), (2, 6)])
def test_meyer_parseval_for_white_noise(n, J, rng):
    f = GridFunction(rng.normal(size=(2**J,) * n + (2,)), n)
    assert wavelet_coeffs(f, meyer_system(n)).energy() == pytest.approx(f.l2_norm() ** 2, rel=1e-8)


def test_pure_tensor_coefficients_factor(rng):
    J = 6
    a, b = rng.normal(size=2**J), rng.normal(size=2**J)
    f = GridFunction(np.outer(a, b)[..., None], 2)
    c2 = wavelet_coeffs(f, meyer_system(2))
    ca = wavelet_coeffs(GridFunction(a[:, None], 1), meyer_system(1)).details[0]
    cb = wavelet_coeffs(GridFunction(b[:, None], 1), meyer_system(1)).details[0]
    for j in (1, 3, 5):
        expect = np.outer(ca.levels[j][:, 0], cb.levels[j][:, 0])
        assert np.allclose(c2.details[2].levels[j][..., 0], expect, atol=1e-8)
