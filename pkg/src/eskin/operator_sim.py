"""Simulated operator-side skin: touch gestures to zeroed sensor streams.

Presses and slides on the virtual pad run through the same forward
model as the robot skin, are zeroed against the rest field, and leave
as 24-channel samples at the operator frame rate (50 Hz). The browser
touchpad reproduces exactly this parameterization, so robot-side
gesture classification behaves identically for both sources.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import skin
from .protocol.messages import SensorFrame

FRAME_RATE_HZ = 50.0
TOUCH_RADIUS_MM = 6.0
MAX_TOUCH_DEPTH_MM = 3.2
CENTI_UT_LIMIT = 32767


@dataclass
class TouchParams:
    """Constants the gateway serves to the UI so both ends synthesize
    identical frames."""

    frame_rate_hz: float = FRAME_RATE_HZ
    touch_radius_mm: float = TOUCH_RADIUS_MM
    max_touch_depth_mm: float = MAX_TOUCH_DEPTH_MM

    def to_dict(self) -> dict:
        return {
            "frame_rate_hz": self.frame_rate_hz,
            "touch_radius_mm": self.touch_radius_mm,
            "max_touch_depth_mm": self.max_touch_depth_mm,
        }


RESPONSE_GRID_NX = 11
RESPONSE_GRID_NY = 17
RESPONSE_PRESSURES = (0.25, 0.5, 0.75, 1.0)


class OperatorSkin:
    """Forward-model synthesis of the operator pad's zeroed stream."""

    def __init__(self, geom: skin.SkinGeometry | None = None,
                 params: TouchParams = TouchParams()):
        self.geom = geom or skin.SkinGeometry()
        self.params = params
        self.film = skin.make_film(self.geom)
        self._rest = skin.sensor_field(self.film, self.geom).reshape(24)

    def response_grid(self, nx: int = RESPONSE_GRID_NX,
                      ny: int = RESPONSE_GRID_NY,
                      pressures=RESPONSE_PRESSURES) -> dict:
        """Sampled touch responses served to the UI: zeroed 24-channel
        readings on an (nx, ny) position lattice at several pressure
        levels. The browser interpolates trilinearly, so both ends of
        the link synthesize frames from the same forward model."""
        xs = np.linspace(0.0, self.geom.width_mm, nx)
        ys = np.linspace(0.0, self.geom.height_mm, ny)
        values = np.empty((len(pressures), nx, ny, 24))
        for pi, p in enumerate(pressures):
            for xi, x in enumerate(xs):
                for yi, y in enumerate(ys):
                    values[pi, xi, yi] = self.zeroed_at((x, y), p)
        return {
            "nx": nx, "ny": ny,
            "pressures": list(pressures),
            "values": np.round(values, 2).ravel().tolist(),
        }

    def zeroed_at(self, position_mm, pressure: float) -> np.ndarray:
        """Zeroed 24-channel reading for one touch point."""
        if pressure <= 0.0:
            return np.zeros(24)
        depth = min(pressure, 1.0) * self.params.max_touch_depth_mm
        d = skin.Press(tuple(position_mm), depth, self.params.touch_radius_mm)
        reading = skin.sensor_field(skin.deform(self.film, d), self.geom)
        return reading.reshape(24) - self._rest

    def press_stream(self, region: int, pressure: float = 0.9,
                     duration_ms: float = 300.0, start_ms: float = 0.0,
                     tail_ms: float = 200.0) -> list[tuple[float, np.ndarray]]:
        """(t_ms, zeroed values) samples for a press over one sensor
        region, with a quiet tail so detectors see the release."""
        pos = self.geom.sensor_positions_mm[region]
        return self._stream(lambda frac: (pos, pressure),
                            duration_ms, start_ms, tail_ms)

    def slide_stream(self, from_region: int, to_region: int,
                     pressure: float = 0.9, duration_ms: float = 250.0,
                     start_ms: float = 0.0,
                     tail_ms: float = 200.0) -> list[tuple[float, np.ndarray]]:
        """Samples for a straight drag between two sensor regions."""
        a = self.geom.sensor_positions_mm[from_region]
        b = self.geom.sensor_positions_mm[to_region]
        return self._stream(lambda frac: (a + frac * (b - a), pressure),
                            duration_ms, start_ms, tail_ms)

    def _stream(self, touch_at, duration_ms, start_ms, tail_ms):
        dt = 1000.0 / self.params.frame_rate_hz
        samples = []
        t = start_ms
        while t < start_ms + duration_ms:
            frac = (t - start_ms) / duration_ms
            pos, pressure = touch_at(frac)
            samples.append((t, self.zeroed_at(pos, pressure)))
            t += dt
        tail_end = start_ms + duration_ms + tail_ms
        while t <= tail_end:
            samples.append((t, np.zeros(24)))
            t += dt
        return samples


def to_sensor_frame(seq: int, zeroed_ut: np.ndarray) -> SensorFrame:
    """Quantize zeroed µT values into the i16 centi-µT wire field."""
    centi = np.clip(np.round(np.asarray(zeroed_ut) * 100.0),
                    -CENTI_UT_LIMIT, CENTI_UT_LIMIT).astype(int)
    return SensorFrame(seq, tuple(int(v) for v in centi))


def from_sensor_frame(frame: SensorFrame) -> np.ndarray:
    return np.asarray(frame.values_centi_ut, dtype=float) / 100.0
