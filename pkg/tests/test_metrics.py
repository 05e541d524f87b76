import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffbeam.array import ArrayGeometry, steering_vector, wavenumber
from diffbeam.errors import DegenerateDenominator, DimensionMismatch, ZeroFilter
from diffbeam.metrics import (beampattern, cbar_matrix, directivity_factor, gamma_matrix,
                              ideal_directivity_factor, mse_quadratic, q_coupling_matrix, white_noise_gain)
from diffbeam.pattern import solve_coefficients
from diffbeam.quadrature import cbar_oracle, gamma_matrix_oracle, mse_direct, q_coupling_oracle
from diffbeam.solvers import build_constraints, solve_inc, solve_mwng, solve_nc, wmax

from conftest import NULL_OFFSETS, random_geometry


def _inc(geom, pattern, f, v=10.0):
    k = wavenumber(f)
    cs = build_constraints(geom, k, pattern.steer_theta_s, pattern.null_offsets)
    gamma = gamma_matrix(geom, k)
    q = q_coupling_matrix(geom, k, pattern.steer_theta_s, pattern.order_N) @ pattern.coeffs
    return solve_inc(cs, gamma, q, v).weights, k


def test_gamma_single_omni_is_one():
    geom = ArrayGeometry.from_positions([0.0], ["omni"])
    assert gamma_matrix(geom, 3.0)[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_gamma_single_bidirectional_is_half():
    # average of sin^2 over the circle
    geom = ArrayGeometry.from_positions([0.0], ["bidirectional"])
    assert gamma_matrix(geom, 3.0)[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_gamma_two_omnis_is_j0():
    from scipy.special import j0
    geom = ArrayGeometry.from_positions([0.0, 0.05], ["omni", "omni"])
    k = wavenumber(1500.0)
    assert gamma_matrix(geom, k)[0, 1] == pytest.approx(j0(k * 0.05), abs=1e-13)


def test_gamma_at_zero_frequency_all_omni():
    geom = ArrayGeometry.uniform(0.01, ["omni"] * 4)
    assert np.allclose(gamma_matrix(geom, 0.0), np.ones((4, 4)), atol=1e-15)


def test_q_single_omni_first_order():
    geom = ArrayGeometry.from_positions([0.0], ["omni"])
    Q = q_coupling_matrix(geom, 2.0, 0.4, 1)
    assert np.allclose(Q, [[1.0, 0.0]], atol=1e-15)


def test_q_single_bidirectional():
    # mean of sin(t) cos(t - ts) = sin(ts)/2
    geom = ArrayGeometry.from_positions([0.0], ["bidirectional"])
    Q = q_coupling_matrix(geom, 2.0, 0.4, 1)
    assert np.allclose(Q, [[0.0, math.sin(0.4) / 2]], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), f=st.floats(50.0, 8000.0), ts=st.floats(0, 2 * math.pi),
       N=st.integers(0, 4))
def test_closed_forms_match_quadrature(seed, f, ts, N):
    geom = random_geometry(np.random.default_rng(seed))
    k = wavenumber(f)
    assert np.max(np.abs(gamma_matrix(geom, k) - gamma_matrix_oracle(geom, k))) <= 1e-10
    assert np.max(np.abs(q_coupling_matrix(geom, k, ts, N) - q_coupling_oracle(geom, k, ts, N))) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), f=st.floats(0.0, 8000.0))
def test_gamma_hermitian_psd(seed, f):
    geom = random_geometry(np.random.default_rng(seed))
    G = gamma_matrix(geom, wavenumber(f))
    assert np.array_equal(G, G.conj().T)
    assert np.linalg.eigvalsh(G).min() >= -1e-12


@pytest.mark.parametrize("N", [0, 1, 2, 5])
@pytest.mark.parametrize("ts", [0.0, 1.3])
def test_cbar_against_oracle(N, ts):
    C = cbar_matrix(N)
    assert np.allclose(np.diag(C), [1.0] + [0.5] * N, atol=0)
    assert np.max(np.abs(C - cbar_oracle(N, ts))) <= 1e-12


def test_beampattern_omni_array_broadside():
    geom = ArrayGeometry.uniform(0.02, ["omni"] * 5)
    h = np.full(5, 0.2)
    assert beampattern(h, geom, 10.0, math.pi / 2) == pytest.approx(1.0, abs=1e-15)


def test_beampattern_vectorised_matches_scalar(hybrid_geom, k1k):
    rng = np.random.default_rng(2)
    h = rng.normal(size=11) + 1j * rng.normal(size=11)
    thetas = np.linspace(0, 2 * math.pi, 17).reshape(1, 17)
    vec = beampattern(h, hybrid_geom, k1k, thetas)
    assert vec.shape == (1, 17)
    for t, b in zip(thetas.ravel(), vec.ravel()):
        assert b == pytest.approx(beampattern(h, hybrid_geom, k1k, float(t)), abs=1e-14)


def test_dimension_mismatch(hybrid_geom, k1k):
    with pytest.raises(DimensionMismatch):
        beampattern(np.ones(3), hybrid_geom, k1k, 0.0)
    with pytest.raises(DimensionMismatch):
        white_noise_gain(np.ones(10), hybrid_geom, k1k, 0.0)


def test_wng_delay_and_sum():
    geom = ArrayGeometry.uniform(0.01, ["omni"] * 11)
    k = wavenumber(1000.0)
    h = steering_vector(geom, k, math.pi / 2) / 11
    assert white_noise_gain(h, geom, k, math.pi / 2) == pytest.approx(10 * math.log10(11), abs=1e-12)


def test_wng_zero_filter(hybrid_geom, k1k):
    with pytest.raises(ZeroFilter):
        white_noise_gain(np.zeros(11), hybrid_geom, k1k, 0.0)


def test_mwng_filter_reaches_wmax(hybrid_geom, k1k):
    cs = build_constraints(hybrid_geom, k1k, math.pi / 2, NULL_OFFSETS)
    h = solve_mwng(cs).weights
    assert abs(white_noise_gain(h, hybrid_geom, k1k, math.pi / 2) - wmax(cs)) <= 1e-10


def test_df_single_omni_is_zero_db():
    geom = ArrayGeometry.from_positions([0.0], ["omni"])
    assert directivity_factor(np.ones(1), geom, 5.0, 0.3) == pytest.approx(0.0, abs=1e-12)


def test_df_degenerate(hybrid_geom, k1k):
    with pytest.raises(DegenerateDenominator):
        directivity_factor(np.zeros(11), hybrid_geom, k1k, 0.0)


def test_ideal_df_second_order(target_pattern):
    # xi = a0^2 + (a1^2 + a2^2)/2 with a = [2-r3, 2r3-3, 2-r3]
    r3 = math.sqrt(3)
    xi = (2 - r3) ** 2 + ((2 * r3 - 3) ** 2 + (2 - r3) ** 2) / 2
    assert ideal_directivity_factor(target_pattern) == pytest.approx(-10 * math.log10(xi), abs=1e-12)
    assert ideal_directivity_factor(target_pattern) == pytest.approx(6.67, abs=0.01)


def test_inc_df_flat_across_frequency(hybrid_geom, target_pattern):
    h1, k1 = _inc(hybrid_geom, target_pattern, 1000.0)
    h4, k4 = _inc(hybrid_geom, target_pattern, 4000.0)
    df1 = directivity_factor(h1, hybrid_geom, k1, math.pi / 2)
    df4 = directivity_factor(h4, hybrid_geom, k4, math.pi / 2)
    assert abs(df1 - df4) <= 1.0
    assert abs(df1 - ideal_directivity_factor(target_pattern)) <= 0.5


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), f=st.floats(50.0, 6000.0), ts=st.floats(0, 2 * math.pi),
       N=st.integers(0, 3))
def test_quadratic_mse_matches_direct_integral(seed, f, ts, N):
    rng = np.random.default_rng(seed)
    geom = random_geometry(rng)
    offsets = np.linspace(0.5, math.pi, N) if N else []
    pattern = solve_coefficients(ts, offsets, N)
    h = (rng.normal(size=geom.M) + 1j * rng.normal(size=geom.M)) / geom.M
    k = wavenumber(f)
    quad = mse_quadratic(h, geom, k, pattern, db=False)
    direct = mse_direct(h, geom, k, pattern, db=False)
    assert abs(quad - direct) <= 1e-9
    assert quad >= -1e-12


def test_mse_exactly_zero_omni_dc():
    geom = ArrayGeometry.uniform(0.01, ["omni"] * 3)
    pattern = solve_coefficients(0.0, [], 0)
    h = np.array([0.2, 0.5, 0.3])
    assert abs(mse_quadratic(h, geom, 0.0, pattern, db=False)) <= 1e-15


def test_mse_exactly_zero_dipole():
    # sin(theta) equals cos(theta - pi/2), nulls at pi/2 offsets
    geom = ArrayGeometry.from_positions([0.0], ["bidirectional"])
    pattern = solve_coefficients(math.pi / 2, [math.pi / 2], 1)
    assert np.allclose(pattern.coeffs, [0.0, 1.0], atol=1e-15)
    assert abs(mse_quadratic(np.ones(1), geom, 7.0, pattern, db=False)) <= 1e-15


def test_inc_mse_below_minus_forty_at_2khz(hybrid_geom, target_pattern):
    h, k = _inc(hybrid_geom, target_pattern, 2000.0)
    assert mse_quadratic(h, hybrid_geom, k, target_pattern) <= -40.0


def test_nc_mse_worse_than_inc(hybrid_geom, target_pattern):
    k = wavenumber(2000.0)
    cs = build_constraints(hybrid_geom, k, math.pi / 2, NULL_OFFSETS)
    h_nc = solve_nc(cs).weights
    h_inc, _ = _inc(hybrid_geom, target_pattern, 2000.0)
    assert mse_quadratic(h_nc, hybrid_geom, k, target_pattern) > mse_quadratic(h_inc, hybrid_geom, k, target_pattern)
