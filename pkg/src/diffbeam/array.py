"""Uniform line arrays of omnidirectional and first-order directional microphones.

All microphones sit on the x axis and look along +y (alpha = pi/2), so the
directional response of element m reduces to ``a_m + (1 - a_m) sin(theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import ConfigInvalid

LOOK_DIRECTION = math.pi / 2
SPEED_OF_SOUND = 340.0

PRESETS = {
    "omni": 1.0,
    "bidirectional": 0.0,
    "cardioid": 0.5,
    "hypercardioid": 1.0 / 3.0,
    "supercardioid": math.sqrt(2.0) - 1.0,
}

ElementSpec = Union[str, float, dict]


@dataclass(frozen=True)
class MicrophoneElement:
    position_x: float
    directivity_a: float

    def __post_init__(self):
        if not math.isfinite(self.position_x):
            raise ValueError("position_x must be finite")
        if not 0.0 <= self.directivity_a <= 1.0:
            raise ValueError(f"directivity_a must lie in [0, 1], got {self.directivity_a}")


def directivity_from_spec(spec: ElementSpec) -> float:
    """Map a preset name, a bare number or ``{"a": value}`` to a directivity coefficient."""
    if isinstance(spec, str):
        try:
            return PRESETS[spec.lower()]
        except KeyError:
            raise ValueError(f"unknown microphone type {spec!r}") from None
    if isinstance(spec, dict):
        if set(spec) != {"a"}:
            raise ValueError(f"element objects take a single key 'a', got {sorted(spec)}")
        spec = spec["a"]
    if isinstance(spec, bool) or not isinstance(spec, (int, float)):
        raise ValueError(f"cannot interpret element {spec!r}")
    a = float(spec)
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"directivity coefficient {a} outside [0, 1]")
    return a


@dataclass(frozen=True)
class ArrayGeometry:
    elements: tuple[MicrophoneElement, ...]
    look_direction_alpha: float = LOOK_DIRECTION

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if len(self.elements) < 1:
            raise ValueError("an array needs at least one microphone")
        if self.look_direction_alpha != LOOK_DIRECTION:
            raise ValueError("only the broadside look direction alpha = pi/2 is supported")
        x = [e.position_x for e in self.elements]
        if any(b <= a for a, b in zip(x, x[1:])):
            raise ValueError("element positions must be strictly increasing")

    @classmethod
    def uniform(cls, spacing: float, kinds: Sequence[ElementSpec]) -> "ArrayGeometry":
        """Centred uniform array, ``x_m = -(M + 1) spacing / 2 + m spacing``."""
        if not spacing > 0:
            raise ValueError("spacing must be positive")
        M = len(kinds)
        elements = [
            MicrophoneElement((m - (M + 1) / 2.0) * spacing, directivity_from_spec(kind))
            for m, kind in enumerate(kinds, start=1)
        ]
        return cls(tuple(elements))

    @classmethod
    def from_positions(cls, positions: Sequence[float], kinds: Sequence[ElementSpec]) -> "ArrayGeometry":
        if len(positions) != len(kinds):
            raise ValueError("positions and element kinds differ in length")
        return cls(tuple(MicrophoneElement(float(x), directivity_from_spec(k))
                         for x, k in zip(positions, kinds)))

    @classmethod
    def from_config(cls, doc: dict) -> "ArrayGeometry":
        """Build from ``{"spacing_m": float, "elements": [...]}``.

        ``"positions_m"`` may replace ``"spacing_m"`` for an explicit layout.
        """
        if not isinstance(doc, dict):
            raise ConfigInvalid("array", "must be an object")
        kinds = doc.get("elements")
        if not isinstance(kinds, list) or not kinds:
            raise ConfigInvalid("array.elements", "must be a non-empty list")
        for i, kind in enumerate(kinds):
            try:
                directivity_from_spec(kind)
            except ValueError as exc:
                raise ConfigInvalid(f"array.elements[{i}]", str(exc)) from None
        if "positions_m" in doc:
            try:
                return cls.from_positions([float(p) for p in doc["positions_m"]], kinds)
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid("array.positions_m", str(exc)) from None
        spacing = doc.get("spacing_m")
        if isinstance(spacing, bool) or not isinstance(spacing, (int, float)) or not spacing > 0:
            raise ConfigInvalid("array.spacing_m", "must be a positive number")
        return cls.uniform(float(spacing), kinds)

    def to_config(self) -> dict:
        return {
            "positions_m": [e.position_x for e in self.elements],
            "elements": [{"a": e.directivity_a} for e in self.elements],
        }

    @property
    def M(self) -> int:
        return len(self.elements)

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([e.position_x for e in self.elements])

    @cached_property
    def directivities(self) -> np.ndarray:
        return np.array([e.directivity_a for e in self.elements])


def directivity_gain(element: MicrophoneElement, theta: float) -> float:
    a = element.directivity_a
    return a + (1.0 - a) * math.sin(theta)


def wavenumber(frequency_hz: float, c: float = SPEED_OF_SOUND) -> float:
    return 2.0 * math.pi * frequency_hz / c


def steering_vector(geom: ArrayGeometry, k: float, theta: float) -> np.ndarray:
    """Directional steering vector ``g_m(theta) exp(j k x_m cos(theta))``, shape (M,)."""
    if k < 0:
        raise ValueError("wavenumber must be non-negative")
    a = geom.directivities
    gains = a + (1.0 - a) * math.sin(theta)
    return gains * np.exp(1j * k * geom.positions * math.cos(theta))


def plane_wave_response(positions, directivities, k: float, thetas) -> np.ndarray:
    """Steering vectors for raw position/directivity arrays, shape (M, len(thetas))."""
    if k < 0:
        raise ValueError("wavenumber must be non-negative")
    thetas = np.asarray(thetas, dtype=float)
    a = np.asarray(directivities, dtype=float)[:, None]
    gains = a + (1.0 - a) * np.sin(thetas)[None, :]
    return gains * np.exp(1j * k * np.outer(positions, np.cos(thetas)))


def steering_matrix(geom: ArrayGeometry, k: float, thetas) -> np.ndarray:
    """Steering vectors for many angles stacked as columns, shape (M, len(thetas))."""
    return plane_wave_response(geom.positions, geom.directivities, k, thetas)
