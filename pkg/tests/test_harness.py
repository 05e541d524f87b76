import math

import numpy as np
import pytest

from diffbeam.array import steering_matrix, wavenumber
from diffbeam.errors import DimensionMismatch
from diffbeam.harness import (MeasuredSteeringSet, PerturbationModel, apply_filter, default_angles_deg,
                              monte_carlo_wng, offline_beampattern, offline_pattern_csv, score_offline_pattern,
                              synth_snapshot, synth_steering_set)
from diffbeam.metrics import beampattern, gamma_matrix, q_coupling_matrix, white_noise_gain
from diffbeam.solvers import build_constraints, solve_inc, solve_nc

from conftest import NULL_OFFSETS

NULL_TARGETS = [0.0, 180.0, 240.0, 300.0]   # 90 -/+ 90, 90 +/- 150


def _inc_filter(geom, pattern, f):
    k = wavenumber(f)
    cs = build_constraints(geom, k, math.pi / 2, NULL_OFFSETS)
    gamma = gamma_matrix(geom, k)
    q = q_coupling_matrix(geom, k, math.pi / 2, 2) @ pattern.coeffs
    return solve_inc(cs, gamma, q, 10.0).weights, k, cs


def test_default_angle_grid():
    angles = default_angles_deg()
    assert len(angles) == 73 and angles[0] == 0 and angles[-1] == 360


def test_zero_perturbation_is_ideal_steering(hybrid_geom, k1k):
    s = synth_steering_set(hybrid_geom, k1k)
    assert np.array_equal(s.vectors, steering_matrix(hybrid_geom, k1k, np.radians(s.angles_deg)).T)


def test_offline_pattern_equals_analytic(hybrid_geom, target_pattern):
    h, k, _ = _inc_filter(hybrid_geom, target_pattern, 1000.0)
    s = synth_steering_set(hybrid_geom, k)
    values = offline_beampattern(s, h)
    assert np.allclose(values, beampattern(h, hybrid_geom, k, np.radians(s.angles_deg)), atol=1e-14)


def test_perturbation_deterministic(hybrid_geom, k1k):
    p = PerturbationModel(0.5, 2.0, 1e-4, sensor_noise_db=-40, seed=11)
    a = synth_steering_set(hybrid_geom, k1k, p)
    b = synth_steering_set(hybrid_geom, k1k, p)
    assert np.array_equal(a.vectors, b.vectors)
    c = synth_steering_set(hybrid_geom, k1k, PerturbationModel(0.5, 2.0, 1e-4, sensor_noise_db=-40, seed=12))
    assert not np.array_equal(a.vectors, c.vectors)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        PerturbationModel(gain_sigma_db=-1)


def test_unperturbed_scores(hybrid_geom, target_pattern):
    h, k, _ = _inc_filter(hybrid_geom, target_pattern, 2000.0)
    s = synth_steering_set(hybrid_geom, k)
    score = score_offline_pattern(s.angles_deg, offline_beampattern(s, h), 90.0, NULL_TARGETS)
    assert score.mainlobe_error_deg == 0.0
    for n in score.nulls:
        assert n.depth_db <= -60.0
        assert n.measured_deg == pytest.approx(n.target_deg % 360)


def test_mild_perturbation_keeps_mainlobe(hybrid_geom, target_pattern):
    h, k, _ = _inc_filter(hybrid_geom, target_pattern, 1000.0)
    s = synth_steering_set(hybrid_geom, k, PerturbationModel(0.2, 1.0, 1e-4, seed=7))
    score = score_offline_pattern(s.angles_deg, offline_beampattern(s, h), 90.0, NULL_TARGETS)
    assert score.mainlobe_error_deg <= 5.0
    # superdirective designs are sensitive: nulls fill in but remain clear
    assert all(n.depth_db <= -15.0 for n in score.nulls)


def test_inc_more_fragile_than_nc(hybrid_geom, target_pattern):
    # the minimum-norm NC filter has the higher white noise gain, so mismatch hurts INC more
    h_inc, k, cs = _inc_filter(hybrid_geom, target_pattern, 500.0)
    h_nc = solve_nc(cs).weights
    errs = {"inc": [], "nc": []}
    for seed in range(10):
        s = synth_steering_set(hybrid_geom, k, PerturbationModel(0.5, 2.0, 0.0, seed=seed))
        ideal = steering_matrix(hybrid_geom, k, np.radians(s.angles_deg)).T
        for name, h in (("inc", h_inc), ("nc", h_nc)):
            errs[name].append(np.linalg.norm(s.vectors @ h.conj() - ideal @ h.conj()))
    assert np.mean(errs["inc"]) > np.mean(errs["nc"])


def test_filter_length_checked(hybrid_geom, k1k):
    s = synth_steering_set(hybrid_geom, k1k)
    with pytest.raises(DimensionMismatch):
        offline_beampattern(s, np.ones(4))


def test_steering_set_csv_round_trip(hybrid_geom, k1k):
    s = synth_steering_set(hybrid_geom, k1k, PerturbationModel(0.3, 1.0, 0.0, seed=3), frequency_hz=1000.0)
    back = MeasuredSteeringSet.from_csv(s.to_csv(), 1000.0)
    assert np.array_equal(back.angles_deg, s.angles_deg)
    assert np.array_equal(back.vectors, s.vectors)


def test_steering_set_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        MeasuredSteeringSet.from_csv("a,b,c\n1,2,3\n")


def test_offline_pattern_csv(hybrid_geom, target_pattern):
    h, k, _ = _inc_filter(hybrid_geom, target_pattern, 1000.0)
    s = synth_steering_set(hybrid_geom, k)
    lines = offline_pattern_csv(s, offline_beampattern(s, h)).splitlines()
    assert lines[0] == "theta_deg,magnitude_db,phase_deg"
    assert len(lines) == 74
    row90 = lines[1 + 18].split(",")
    assert float(row90[0]) == 90.0 and abs(float(row90[1])) <= 1e-9


def test_snapshot_noiseless(hybrid_geom, k1k):
    y = synth_snapshot(hybrid_geom, k1k, math.pi / 2, math.inf)
    assert np.allclose(y, steering_matrix(hybrid_geom, k1k, [math.pi / 2])[:, 0], atol=0)
    y = synth_snapshot(hybrid_geom, k1k, math.pi / 2, 20.0, n_snapshots=5)
    assert y.shape == (5, 11)


def test_distortionless_output(hybrid_geom, target_pattern):
    h, k, _ = _inc_filter(hybrid_geom, target_pattern, 1000.0)
    z = apply_filter(h, synth_snapshot(hybrid_geom, k, math.pi / 2, math.inf, x=0.7 - 0.2j))
    assert z == pytest.approx(0.7 - 0.2j, abs=1e-9)


def test_noise_power_matches_snr(hybrid_geom, k1k):
    rng = np.random.default_rng(1)
    y = synth_snapshot(hybrid_geom, k1k, math.pi / 2, 10.0, x=0.0, n_snapshots=20000, rng=rng)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(0.1, rel=0.03)


@pytest.mark.parametrize("f", [200.0, 1000.0, 5000.0])
def test_monte_carlo_wng_tracks_analytic(hybrid_geom, target_pattern, f):
    h, k, _ = _inc_filter(hybrid_geom, target_pattern, f)
    analytic = white_noise_gain(h, hybrid_geom, k, math.pi / 2)
    estimates = [monte_carlo_wng(h, hybrid_geom, k, math.pi / 2, seed=s) for s in range(5)]
    assert all(abs(e - analytic) <= 0.5 for e in estimates)
