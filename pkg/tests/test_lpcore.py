import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from mwlp.dyadic import DyadicCube, ScaleRange
from mwlp.errors import ScaleOutOfRange
from mwlp.grid import CoeffSequence, GridFunction, cell_centers
from mwlp.lpcore import (
    build_admissible,
    derivative,
    kernel_size_check,
    lp_convolve,
    molecule_decay_check,
    phi_coeffs,
    psi_molecule,
    riesz,
    synthesize,
    window,
)
from mwlp.runner import band_limited_family, on_grid
from mwlp.wavelets import meyer_molecule


def plane_wave(J, n, k, m=1, comp=0):
    x = cell_centers(J, n)
    phase = np.exp(2j * np.pi * (x @ np.asarray(k, float)))
    v = np.zeros(phase.shape + (m,), dtype=complex)
    v[..., comp] = phase
    return GridFunction(v, n)


def random_band_limited(J, n, m=1, seed=0, mean_zero=True):
    band = build_admissible(J, n).band_limit
    return on_grid(band_limited_family(1, n, m, band, seed, mean_zero)[0], J, n)


@pytest.fixture(scope="module")
def sys10():
    return build_admissible(10, 1)


def test_window_support_and_lower_bound(sys10):
    assert np.all(window(np.array([2.1, 0.49, 0.0, 5.0])) == 0)
    assert sys10.lower_bound > 0


@pytest.mark.parametrize("n, J", [(1, 10), (2, 7)])
def test_partition_inside_band(n, J):
    s = build_admissible(J, n)
    mask = s.band_mask()
    origin = (0,) * n
    hom = s.partition_sum(True)
    inh = s.partition_sum(False)
    sel = mask.copy()
    sel[origin] = False
    assert np.abs(hom[sel] - 1).max() <= 1e-12
    assert np.abs(inh[mask] - 1).max() <= 1e-12


def test_partition_at_random_frequencies(sys10, rng):
    nus = rng.integers(1, sys10.band_limit + 1, size=20)
    total = [sum(oracles.band_profile(2 * math.pi * nu * 2.0**-j) ** 2 for j in range(1, 10))
             for nu in nus]
    assert np.abs(np.array(total) - 1).max() <= 1e-12
    lib = sys10.partition_sum()
    assert np.abs(lib[nus] - 1).max() <= 1e-12


@pytest.mark.parametrize("j", [2, 4, 6])
def test_lp_convolve_eigenfunction(sys10, j):
    for k in (1, 3, 9, 40):
        f = plane_wave(10, 1, [k], m=2, comp=1)
        g = lp_convolve(f, sys10, j)
        factor = oracles.multiplier_value((k,), j, "phi")
        assert np.allclose(g.values, factor * f.values, atol=1e-12)


def test_lp_convolve_kills_frequencies_outside_support(sys10):
    j = 5
    lo, hi = 2.0**j / (4 * math.pi), 2.0 ** (j + 1) / (2 * math.pi)
    for k in (1, 2, int(hi) + 1, 100):
        if lo <= k <= hi:
            continue
        g = lp_convolve(plane_wave(10, 1, [k]), sys10, j)
        assert np.abs(g.values).max() <= 1e-13


def test_lp_convolve_commutes_with_constant_matrices(sys10, rng):
    f = random_band_limited(10, 1, m=2, seed=4)
    M = rng.normal(size=(3, 2))
    a = lp_convolve(f.transform(M), sys10, 4)
    b = lp_convolve(f, sys10, 4).transform(M)
    assert np.abs(a.values - b.values).max() <= 1e-12 * np.abs(b.values).max()


@pytest.mark.parametrize("n, J", [(1, 10), (2, 7)])
def test_square_partition_parseval(n, J):
    s = build_admissible(J, n)
    f = random_band_limited(J, n, seed=2)
    total = sum(lp_convolve(f, s, j).l2_norm() ** 2 for j in range(1, J))
    assert total == pytest.approx(f.l2_norm() ** 2, rel=1e-12)


def test_phi_coeffs_of_zero(sys10):
    s = phi_coeffs(GridFunction.zeros(10), sys10)
    assert all(np.all(v == 0) for v in s.levels.values())


def test_phi_coeffs_closed_form_for_plane_wave(sys10):
    k = 7
    f = plane_wave(10, 1, [k])
    s = phi_coeffs(f, sys10)
    for j in s.levels:
        xq = (np.arange(2**j) * 2 ** (10 - j) + 0.5) / 1024
        expect = 2.0 ** (-j / 2) * oracles.multiplier_value((k,), j, "phi") * np.exp(2j * np.pi * k * xq)
        assert np.allclose(s.levels[j][:, 0], expect, atol=1e-12)


@pytest.mark.parametrize("n, J", [(1, 10), (2, 8)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_round_trips(n, J, seed):
    s = build_admissible(J, n)
    f = random_band_limited(J, n, m=2, seed=seed)
    back = synthesize(phi_coeffs(f, s), s)
    assert (back - f).l2_norm() <= 1e-10 * f.l2_norm()
    g = random_band_limited(J, n, m=2, seed=seed, mean_zero=False)
    assert abs(g.component_means()).max() > 1e-3
    back = synthesize(phi_coeffs(g, s, s.default_range(False)), s)
    assert (back - g).l2_norm() <= 1e-10 * g.l2_norm()


def test_synthesize_single_cube_is_psi_q(sys10):
    Q = DyadicCube(5, (11,))
    lev = np.zeros((32, 1), dtype=complex)
    lev[11, 0] = 1.0
    out = synthesize(CoeffSequence({5: lev}, 1), sys10)
    assert np.array_equal(out.values, psi_molecule(sys10, Q).values)
    # psi_Q is the translate of the level filter scaled by |Q|^{1/2}
    assert out.l2_norm() == pytest.approx(
        math.sqrt(sum(oracles.band_profile(2 * math.pi * abs(nu) / 32) ** 2
                      for nu in oracles.wavenumbers(1024)) / 32), rel=1e-12)


@given(st.integers(0, 1000), st.floats(-3, 3), st.floats(-3, 3))
def test_analysis_and_synthesis_are_linear(seed, a, b):
    s = build_admissible(6, 1)
    rng = np.random.default_rng(seed)
    f = GridFunction(rng.normal(size=(64, 2)), 1)
    g = GridFunction(rng.normal(size=(64, 2)), 1)
    lhs = phi_coeffs(f * a + g * b, s)
    rhs = phi_coeffs(f, s) * a + phi_coeffs(g, s) * b
    assert all(np.allclose(lhs.levels[j], rhs.levels[j], atol=1e-12) for j in lhs.levels)
    u, v = phi_coeffs(f, s), phi_coeffs(g, s)
    assert np.allclose(synthesize(u + v, s).values,
                       (synthesize(u, s) + synthesize(v, s)).values, atol=1e-12)


def test_range_checks(sys10):
    f = GridFunction.zeros(10)
    with pytest.raises(ScaleOutOfRange):
        phi_coeffs(f, sys10, ScaleRange(1, 10))
    with pytest.raises(ScaleOutOfRange):
        lp_convolve(f, sys10, 3, "Phi")


@pytest.mark.parametrize("beta", [-2.0, -1.0, 1.0, 2.0])
def test_riesz_round_trip(beta):
    f = random_band_limited(10, 1, m=2, seed=5)
    back = riesz(riesz(f, beta), -beta)
    assert (back - f).l2_norm() <= 1e-12 * f.l2_norm()


def test_riesz_zero_order_and_laplacian():
    f = random_band_limited(8, 2, seed=6)
    assert np.allclose(riesz(f, 0).values, f.values, atol=1e-13)
    lap = derivative(f, (2, 0)) + derivative(f, (0, 2))
    lhs = riesz(f, -2)
    assert (lhs + lap).l2_norm() <= 1e-10 * lhs.l2_norm()


def test_derivative_closed_forms():
    const = GridFunction(np.full((16, 16, 1), 3.0 + 1j), 2)
    assert np.abs(derivative(const, (1, 0)).values).max() == 0
    k = (3, -2)
    f = plane_wave(5, 2, k)
    assert np.allclose(derivative(f, (1, 0)).values, 2j * math.pi * k[0] * f.values, atol=1e-10)
    g = random_band_limited(6, 2, seed=1)
    # the mixed derivative is one multiplier, whichever axis is listed first
    mixed = derivative(g, (1, 1))
    a = derivative(derivative(g, (1, 0)), (0, 1))
    b = derivative(derivative(g, (0, 1)), (1, 0))
    scale = np.abs(mixed.values).max()
    assert np.abs(a.values - mixed.values).max() <= 1e-12 * scale
    assert np.abs(b.values - mixed.values).max() <= 1e-12 * scale


def test_kernel_size_stable_and_far_field(sys10):
    full = kernel_size_check(sys10)
    small = kernel_size_check(sys10, ScaleRange(1, 8))
    assert math.isfinite(full["c_phi"])
    assert abs(full["c_phi"] / small["c_phi"] - 1) <= 0.20
    rad, prof = full["radii"], full["profile"]
    for r in (8 / 1024, 16 / 1024, 32 / 1024, 1 / 16):
        a, b = prof[np.isclose(rad, r)].max(), prof[np.isclose(rad, 2 * r)].max()
        assert abs(b / a - 1) < 0.5


def test_kernel_single_scale_is_bounded(sys10):
    r = kernel_size_check(sys10, ScaleRange(6, 6))
    assert 0 < r["c_phi"] < 1


@pytest.mark.parametrize("n, J", [(1, 10), (2, 8)])
def test_molecule_constants(n, J):
    s = build_admissible(J, n)
    cubes = [DyadicCube(j, (0,) * n) for j in (2, 4, 6)] + [DyadicCube(3, (5,) * n)]
    psi = molecule_decay_check(s, {P: psi_molecule(s, P) for P in cubes})["c"]
    mey = molecule_decay_check(s, {P: meyer_molecule(J, P) for P in cubes})["c"]
    assert math.isfinite(psi) and math.isfinite(mey)
    assert mey <= 10 * psi


def test_molecule_same_level_is_a_decay_fit(sys10):
    P = DyadicCube(5, (3,))
    rep = molecule_decay_check(sys10, {P: psi_molecule(sys10, P)}, rng=ScaleRange(5, 5))
    assert 0 < rep["c"] < math.inf
