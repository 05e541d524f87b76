"""Broadband design: configuration parsing, per-frequency solves and reporting."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .array import SPEED_OF_SOUND, ArrayGeometry, steering_matrix, wavenumber
from .errors import ConfigInvalid, DesignFailed, DiffBeamError
from .metrics import directivity_factor, gamma_matrix, mse_quadratic, q_coupling_matrix, white_noise_gain
from .pattern import IdealPattern, solve_coefficients
from .solvers import (BeamformerFilter, Method, build_constraints, solve_inc, solve_mwng, solve_nc)

DEFAULT_FMIN = 200.0
DEFAULT_FMAX = 5000.0
DEFAULT_FCOUNT = 49
DEFAULT_SLACK_DB = 10.0
EVAL_STEP_DEG = 0.5
NULL_WINDOW_DEG = 5.0
PLOT_FLOOR_DB = -60.0
METRICS_HEADER = ["frequency_hz", "df_db", "wng_db", "mse_db", "wmax_db", "mainlobe_deg", "status"]

_TOP_LEVEL_KEYS = {"description", "order", "steer_deg", "nulls_deg", "wng_slack_db", "speed_of_sound",
                   "method", "frequencies", "frequencies_hz", "array"}


def frequency_grid(fmin: float = DEFAULT_FMIN, fmax: float = DEFAULT_FMAX, count: int = DEFAULT_FCOUNT,
                   spacing: str = "log") -> tuple[float, ...]:
    if not (0 < fmin < fmax) or count < 2:
        raise ValueError("need 0 < fmin < fmax and at least two points")
    if spacing == "log":
        grid = np.geomspace(fmin, fmax, count)
    elif spacing == "linear":
        grid = np.linspace(fmin, fmax, count)
    else:
        raise ValueError(f"unknown grid spacing {spacing!r}")
    return tuple(float(f) for f in grid)


@dataclass(frozen=True)
class DesignSpec:
    order_N: int
    steer_theta_s: float
    null_offsets: tuple[float, ...]
    wng_slack_v: float = DEFAULT_SLACK_DB
    freq_grid: tuple[float, ...] = field(default_factory=frequency_grid)
    speed_of_sound: float = SPEED_OF_SOUND
    method: Method = Method.INC

    def __post_init__(self):
        object.__setattr__(self, "null_offsets", tuple(self.null_offsets))
        object.__setattr__(self, "freq_grid", tuple(float(f) for f in self.freq_grid))
        object.__setattr__(self, "method", Method(self.method))
        if self.order_N < 0:
            raise ConfigInvalid("order", "must be non-negative")
        if not self.wng_slack_v >= 0:
            raise ConfigInvalid("wng_slack_db", "must be non-negative")
        f = self.freq_grid
        if not f or f[0] <= 0 or any(b <= a for a, b in zip(f, f[1:])):
            raise ConfigInvalid("frequencies", "grid must be positive and strictly increasing")
        if not self.speed_of_sound > 0:
            raise ConfigInvalid("speed_of_sound", "must be positive")
        if self.method not in (Method.NC, Method.INC):
            raise ConfigInvalid("method", "must be NC or INC")

    def to_config(self) -> dict:
        return {
            "order": self.order_N,
            "steer_deg": math.degrees(self.steer_theta_s),
            "nulls_deg": [math.degrees(o) for o in self.null_offsets],
            "wng_slack_db": self.wng_slack_v,
            "speed_of_sound": self.speed_of_sound,
            "method": self.method.value,
            "frequencies_hz": list(self.freq_grid),
        }


def _number(doc: Mapping, key: str, default=None) -> float:
    value = doc.get(key, default)
    if value is None:
        raise ConfigInvalid(key, "is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigInvalid(key, f"must be a finite number, got {value!r}")
    return float(value)


def _frequencies(doc: Mapping) -> tuple[float, ...]:
    if "frequencies_hz" in doc:
        freqs = doc["frequencies_hz"]
        if not isinstance(freqs, list) or not freqs:
            raise ConfigInvalid("frequencies_hz", "must be a non-empty list")
        return tuple(_number({"frequencies_hz": f}, "frequencies_hz") for f in freqs)
    grid = doc.get("frequencies", {})
    if not isinstance(grid, Mapping):
        raise ConfigInvalid("frequencies", "must be an object")
    fmin = _number(grid, "min_hz", DEFAULT_FMIN)
    fmax = _number(grid, "max_hz", DEFAULT_FMAX)
    count = grid.get("count", DEFAULT_FCOUNT)
    spacing = grid.get("spacing", "log")
    if isinstance(count, bool) or not isinstance(count, int):
        raise ConfigInvalid("frequencies.count", "must be an integer")
    try:
        return frequency_grid(fmin, fmax, count, spacing)
    except ValueError as exc:
        raise ConfigInvalid("frequencies", str(exc)) from None


def parse_design_config(document: Union[str, bytes, Mapping]) -> tuple[DesignSpec, ArrayGeometry]:
    """Validate a JSON design document; angles come in degrees, levels in dB."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid("document", f"not valid JSON ({exc})") from None
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise ConfigInvalid("document", "top level must be an object")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigInvalid(sorted(unknown)[0], "unknown field")

    order = doc.get("order")
    if isinstance(order, bool) or not isinstance(order, int) or order < 0:
        raise ConfigInvalid("order", "must be a non-negative integer")
    steer = math.radians(_number(doc, "steer_deg"))
    nulls = doc.get("nulls_deg")
    if not isinstance(nulls, list):
        raise ConfigInvalid("nulls_deg", "must be a list")
    if len(nulls) != order:
        raise ConfigInvalid("nulls_deg", f"order {order} needs exactly {order} null offsets, got {len(nulls)}")
    offsets = []
    for i, value in enumerate(nulls):
        deg = _number({f"nulls_deg[{i}]": value}, f"nulls_deg[{i}]")
        if not 0.0 < deg <= 180.0:
            raise ConfigInvalid(f"nulls_deg[{i}]", f"offset {deg} must lie in (0, 180] degrees")
        offsets.append(math.radians(deg))
    if len(set(offsets)) != len(offsets):
        raise ConfigInvalid("nulls_deg", "coincident null offsets are not supported")
    offsets.sort()

    method = doc.get("method", "INC")
    if not isinstance(method, str) or method.upper() not in ("NC", "INC"):
        raise ConfigInvalid("method", "must be 'NC' or 'INC'")
    spec = DesignSpec(
        order_N=order,
        steer_theta_s=steer,
        null_offsets=tuple(offsets),
        wng_slack_v=_number(doc, "wng_slack_db", DEFAULT_SLACK_DB),
        freq_grid=_frequencies(doc),
        speed_of_sound=_number(doc, "speed_of_sound", SPEED_OF_SOUND),
        method=Method(method.upper()),
    )
    if "array" not in doc:
        raise ConfigInvalid("array", "is required")
    geom = ArrayGeometry.from_config(doc["array"])
    needed = 2 * order + 1 - (1 if offsets and math.isclose(offsets[-1], math.pi) else 0)
    if geom.M < needed:
        raise ConfigInvalid("array.elements", f"order {order} needs at least {needed} microphones, got {geom.M}")
    return spec, geom


@dataclass(frozen=True)
class MetricsRow:
    frequency_hz: float
    df_db: float
    wng_db: float
    mse_db: float
    wmax_db: float
    mainlobe_theta: float
    null_depths_db: tuple[float, ...]
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class MetricsReport:
    rows: tuple[MetricsRow, ...]
    spec: DesignSpec
    geometry: ArrayGeometry

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for r in self.rows:
            writer.writerow([_fmt(r.frequency_hz), _fmt(r.df_db), _fmt(r.wng_db), _fmt(r.mse_db),
                             _fmt(r.wmax_db), _fmt(math.degrees(r.mainlobe_theta)), r.status])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "design": self.spec.to_config(),
            "array": self.geometry.to_config(),
            "rows": [asdict(r) for r in self.rows],
        }


def _fmt(x: float) -> str:
    return "nan" if x != x else f"{x:.10g}"


def _null_angles(spec: DesignSpec) -> list[float]:
    angles = []
    for o in spec.null_offsets:
        angles.append(spec.steer_theta_s + o)
        if not math.isclose(o, math.pi):
            angles.append(spec.steer_theta_s - o)
    return angles


def pattern_features(h: np.ndarray, geom: ArrayGeometry, k: float, null_angles: Sequence[float],
                     step_deg: float = EVAL_STEP_DEG, window_deg: float = NULL_WINDOW_DEG):
    """Main-lobe direction (argmax |B| on a grid) and min |B| in dB near each null."""
    grid_deg = np.arange(0.0, 360.0, step_deg)
    mag = np.abs(h.conj() @ steering_matrix(geom, k, np.radians(grid_deg)))
    mainlobe = math.radians(float(grid_deg[int(np.argmax(mag))]))
    depths = []
    for t in null_angles:
        t_deg = math.degrees(t) % 360.0
        dist = np.abs((grid_deg - t_deg + 180.0) % 360.0 - 180.0)
        window = mag[dist <= window_deg + 1e-9]
        depths.append(float(20.0 * np.log10(max(window.min(), 1e-15))))
    return mainlobe, tuple(depths)


def design_frequency(spec: DesignSpec, geom: ArrayGeometry, pattern: IdealPattern,
                     frequency_hz: float) -> tuple[BeamformerFilter, MetricsRow]:
    """Run the design steps at one frequency and score the result."""
    k = wavenumber(frequency_hz, spec.speed_of_sound)
    cs = build_constraints(geom, k, spec.steer_theta_s, spec.null_offsets, frequency_hz=frequency_hz)
    h_ref = solve_mwng(cs).weights
    w_max = float(-10.0 * np.log10(np.vdot(h_ref, h_ref).real))
    gamma = gamma_matrix(geom, k)
    q = q_coupling_matrix(geom, k, spec.steer_theta_s, spec.order_N) @ pattern.coeffs
    if spec.method is Method.INC:
        filt = solve_inc(cs, gamma, q, spec.wng_slack_v)
    else:
        filt = solve_nc(cs)
    h = filt.weights
    mse = mse_quadratic(h, geom, k, pattern, gamma=gamma, q=q)
    filt = replace(filt, mse_db=mse)
    mainlobe, depths = pattern_features(h, geom, k, _null_angles(spec))
    row = MetricsRow(
        frequency_hz=frequency_hz,
        df_db=directivity_factor(h, geom, k, spec.steer_theta_s, gamma=gamma),
        wng_db=white_noise_gain(h, geom, k, spec.steer_theta_s),
        mse_db=mse,
        wmax_db=w_max,
        mainlobe_theta=mainlobe,
        null_depths_db=depths,
    )
    return filt, row


def _failed_row(spec: DesignSpec, frequency_hz: float, exc: Exception) -> MetricsRow:
    nan = float("nan")
    return MetricsRow(frequency_hz, nan, nan, nan, nan, nan, tuple(nan for _ in _null_angles(spec)),
                      status=f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " "))


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.environ.get("DIFFBEAM_THREADS", "1") or 1)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def design_broadband(spec: DesignSpec, geom: ArrayGeometry,
                     workers: Optional[int] = None) -> tuple[list[BeamformerFilter], MetricsReport]:
    """Design one filter per grid frequency.

    Failures at individual frequencies are recorded in that row's status; only
    a sweep in which every frequency fails raises :class:`DesignFailed`.
    """
    pattern = solve_coefficients(spec.steer_theta_s, spec.null_offsets, spec.order_N)

    def one(f):
        try:
            return design_frequency(spec, geom, pattern, f)
        except (DiffBeamError, np.linalg.LinAlgError) as exc:
            return None, _failed_row(spec, f, exc)

    n_workers = min(resolve_workers(workers), len(spec.freq_grid))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, spec.freq_grid))
    else:
        results = [one(f) for f in spec.freq_grid]

    filters = [filt for filt, _ in results if filt is not None]
    report = MetricsReport(tuple(row for _, row in results), spec, geom)
    if not filters:
        raise DesignFailed("design failed at every frequency: " + report.rows[0].status)
    return filters, report


def filters_to_json(filters: Sequence[BeamformerFilter]) -> str:
    return json.dumps([f.to_json_dict() for f in filters], indent=2) + "\n"


def filters_from_json(text: str) -> list[BeamformerFilter]:
    return [BeamformerFilter.from_json_dict(d) for d in json.loads(text)]


def beampattern_grid_csv(filters: Sequence[BeamformerFilter], geom: ArrayGeometry,
                         speed_of_sound: float = SPEED_OF_SOUND) -> str:
    """Magnitude response on a 1 degree grid per filter, floored at -60 dB."""
    theta_deg = np.arange(360)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_deg", "frequency_hz", "magnitude_db"])
    for filt in filters:
        k = wavenumber(filt.frequency_hz, speed_of_sound)
        mag = np.abs(filt.weights.conj() @ steering_matrix(geom, k, np.radians(theta_deg)))
        mag_db = np.maximum(20.0 * np.log10(np.maximum(mag, 1e-300)), PLOT_FLOOR_DB)
        for t, m in zip(theta_deg, mag_db):
            writer.writerow([int(t), _fmt(filt.frequency_hz), _fmt(float(m))])
    return buf.getvalue()
