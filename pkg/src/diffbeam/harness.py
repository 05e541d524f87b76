"""Offline evaluation on synthetic (or measured) plane-wave transfer functions.

Stands in for a turntable measurement: per-angle array responses are
synthesised with optional per-microphone gain, phase and position errors, and
filters are scored on them exactly as they would be on chamber data.

Random draws come from ``numpy.random.default_rng(seed)`` (PCG64) in a fixed
order: gains, phases, positions, then sensor noise.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .array import ArrayGeometry, plane_wave_response
from .errors import DimensionMismatch

DISTRIBUTIONS = {
    "gain": "lognormal: gain in dB ~ normal(0, gain_sigma_db)",
    "phase": "normal(0, phase_sigma_deg)",
    "position": "normal(0, position_sigma_m), drawn once per set",
    "sensor_noise": "circular complex normal, power sensor_noise_db relative to unit signal",
    "generator": "numpy PCG64",
}


@dataclass(frozen=True)
class PerturbationModel:
    gain_sigma_db: float = 0.0
    phase_sigma_deg: float = 0.0
    position_sigma_m: float = 0.0
    sensor_noise_db: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("gain_sigma_db", "phase_sigma_deg", "position_sigma_m"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")

    def describe(self) -> dict:
        return {**asdict(self), "distributions": DISTRIBUTIONS}


@dataclass(frozen=True)
class MicrophoneErrors:
    gains: np.ndarray
    phases: np.ndarray
    position_offsets: np.ndarray


def draw_errors(M: int, perturb: PerturbationModel, rng: np.random.Generator) -> MicrophoneErrors:
    gain_db = rng.normal(0.0, 1.0, M) * perturb.gain_sigma_db
    phase = np.radians(rng.normal(0.0, 1.0, M) * perturb.phase_sigma_deg)
    offsets = rng.normal(0.0, 1.0, M) * perturb.position_sigma_m
    return MicrophoneErrors(10.0 ** (gain_db / 20.0), phase, offsets)


def _responses(geom: ArrayGeometry, err: MicrophoneErrors, k: float, thetas) -> np.ndarray:
    """Perturbed steering vectors, shape (len(thetas), M)."""
    d = plane_wave_response(geom.positions + err.position_offsets, geom.directivities, k, thetas)
    return d.T * (err.gains * np.exp(1j * err.phases))


@dataclass(frozen=True)
class MeasuredSteeringSet:
    angles_deg: np.ndarray
    vectors: np.ndarray            # (n_angles, M)
    frequency_hz: Optional[float] = None

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.angles_deg):
            raise DimensionMismatch("one steering vector per angle is required")

    @property
    def M(self) -> int:
        return self.vectors.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["theta_deg", "mic_index", "re", "im"])
        for t, vec in zip(self.angles_deg, self.vectors):
            for m, v in enumerate(vec):
                writer.writerow([f"{t:.10g}", m, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, frequency_hz: Optional[float] = None) -> "MeasuredSteeringSet":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != ["theta_deg", "mic_index", "re", "im"]:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        table: dict[float, dict[int, complex]] = {}
        for row in reader:
            table.setdefault(float(row["theta_deg"]), {})[int(row["mic_index"])] = complex(
                float(row["re"]), float(row["im"]))
        angles = sorted(table)
        M = len(table[angles[0]])
        vectors = np.empty((len(angles), M), dtype=complex)
        for i, t in enumerate(angles):
            if sorted(table[t]) != list(range(M)):
                raise ValueError(f"angle {t} does not list microphones 0..{M - 1}")
            vectors[i] = [table[t][m] for m in range(M)]
        return cls(np.array(angles), vectors, frequency_hz)


def default_angles_deg(step_deg: float = 5.0) -> np.ndarray:
    """0 to 360 degrees inclusive; 73 points at the default step."""
    return np.linspace(0.0, 360.0, int(round(360.0 / step_deg)) + 1)


def synth_steering_set(geom: ArrayGeometry, k: float, perturb: PerturbationModel = PerturbationModel(),
                       angles_deg: Optional[Sequence[float]] = None,
                       frequency_hz: Optional[float] = None) -> MeasuredSteeringSet:
    angles = default_angles_deg() if angles_deg is None else np.asarray(angles_deg, dtype=float)
    rng = np.random.default_rng(perturb.seed)
    err = draw_errors(geom.M, perturb, rng)
    vectors = _responses(geom, err, k, np.radians(angles))
    if perturb.sensor_noise_db is not None:
        sigma = math.sqrt(10.0 ** (perturb.sensor_noise_db / 10.0) / 2.0)
        vectors = vectors + sigma * (rng.standard_normal(vectors.shape) + 1j * rng.standard_normal(vectors.shape))
    return MeasuredSteeringSet(angles, vectors, frequency_hz)


def offline_beampattern(steering_set: MeasuredSteeringSet, h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape != (steering_set.M,):
        raise DimensionMismatch(f"filter length {h.shape} does not match {steering_set.M} microphones")
    return steering_set.vectors @ h.conj()


def _angle_error_deg(a: float, b: float) -> float:
    return abs((a - b + 180.0) % 360.0 - 180.0)


@dataclass(frozen=True)
class NullScore:
    target_deg: float
    measured_deg: float
    depth_db: float


@dataclass(frozen=True)
class OfflineScore:
    mainlobe_deg: float
    mainlobe_error_deg: float
    nulls: tuple[NullScore, ...]

    def to_json_dict(self) -> dict:
        return asdict(self)


def score_offline_pattern(angles_deg: Sequence[float], values: np.ndarray, steer_deg: float,
                          null_targets_deg: Sequence[float], window_deg: float = 5.0) -> OfflineScore:
    """Main-lobe direction and, for each target null, the deepest grid point within the window."""
    angles = np.asarray(angles_deg, dtype=float)
    mag = np.abs(values)
    mainlobe = float(angles[int(np.argmax(mag))]) % 360.0
    nulls = []
    for target in null_targets_deg:
        target = target % 360.0
        dist = np.array([_angle_error_deg(a, target) for a in angles])
        idx = np.flatnonzero(dist <= window_deg + 1e-9)
        best = idx[int(np.argmin(mag[idx]))]
        depth = float(20.0 * np.log10(max(mag[best], 1e-15)))
        nulls.append(NullScore(target, float(angles[best]) % 360.0, depth))
    return OfflineScore(mainlobe, _angle_error_deg(mainlobe, steer_deg), tuple(nulls))


def offline_pattern_csv(steering_set: MeasuredSteeringSet, values: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_deg", "magnitude_db", "phase_deg"])
    for t, v in zip(steering_set.angles_deg, values):
        writer.writerow([f"{t:.10g}", f"{20.0 * math.log10(max(abs(v), 1e-15)):.10g}",
                         f"{math.degrees(math.atan2(v.imag, v.real)):.10g}"])
    return buf.getvalue()


def synth_snapshot(geom: ArrayGeometry, k: float, theta_s: float, snr_db: float,
                   perturb: PerturbationModel = PerturbationModel(), x: complex = 1.0,
                   n_snapshots: Optional[int] = None,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Received vector ``d(theta_s) x + v`` with white circular noise at ``snr_db``.

    The desired signal has unit power when ``|x| = 1``. With ``n_snapshots``
    the result has shape (n_snapshots, M), otherwise (M,). An infinite SNR
    gives the noiseless vector.
    """
    if math.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    if rng is None:
        rng = np.random.default_rng(perturb.seed)
    err = draw_errors(geom.M, perturb, rng)
    d = _responses(geom, err, k, [theta_s])[0]
    shape = (geom.M,) if n_snapshots is None else (n_snapshots, geom.M)
    y = np.broadcast_to(d * x, shape).astype(complex)
    if math.isinf(snr_db) and snr_db > 0:
        return y
    sigma = math.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
    return y + sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_filter(h, y: np.ndarray) -> np.ndarray:
    """Beamformer output ``h^H y`` for one snapshot or a stack of them."""
    return np.asarray(y) @ np.asarray(h, dtype=complex).conj()


def monte_carlo_wng(h, geom: ArrayGeometry, k: float, theta_s: float, n_snapshots: int = 10_000,
                    snr_db: float = 40.0, seed: int = 0) -> float:
    """SNR improvement (dB) measured on simulated snapshots with x = 1.

    Output signal power is taken from the sample mean of ``h^H y``, output
    noise power from its sample variance. The high default input SNR keeps
    the mean estimate accurate even for filters with strongly negative WNG.
    """
    rng = np.random.default_rng(seed)
    y = synth_snapshot(geom, k, theta_s, snr_db, n_snapshots=n_snapshots, rng=rng)
    z = apply_filter(h, y)
    signal = abs(z.mean()) ** 2
    noise = float(np.var(z))
    input_snr = 10.0 ** (snr_db / 10.0)
    return float(10.0 * np.log10(signal / noise / input_snr))
