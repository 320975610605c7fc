"""Gesture recognition on zeroed operator-skin streams.

A gesture is read off a sliding window of 24-channel samples: the
per-sensor field-change magnitude localizes the touch to one of the 8
sensor regions; dwell time and region trajectory separate presses,
long presses, and slides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import skin
from .messages import ControlCode
from .session import Stage


@dataclass(frozen=True)
class PressAt:
    region: int          # 0-7
    strength_ut: float


@dataclass(frozen=True)
class LongPress:
    region: int
    strength_ut: float


@dataclass(frozen=True)
class Slide:
    axis: str            # "+x", "-x", "+y", "-y"
    strength_ut: float


@dataclass(frozen=True)
class NoGesture:
    pass


Gesture = PressAt | LongPress | Slide | NoGesture


@dataclass(frozen=True)
class GestureConfig:
    press_threshold_ut: float = 10.0
    press_min_ms: float = 100.0
    long_press_ms: float = 800.0
    slide_window_ms: float = 400.0
    adjacency_mm: float = 21.0  # region centers this close count as adjacent


def _region_magnitudes(values_ut: np.ndarray) -> np.ndarray:
    """Per-sensor |ΔB| (vector norm over the 3 axes) from 24 channels."""
    return np.linalg.norm(np.asarray(values_ut).reshape(8, 3), axis=1)


def classify_gesture(samples, config: GestureConfig = GestureConfig(),
                     geom: skin.SkinGeometry | None = None) -> Gesture:
    """Classify one window of zeroed (timestamp_ms, values) samples.

    Press: one region above threshold with a stable peak for >= 100 ms.
    LongPress: the same held >= 800 ms. Slide: the peak region crosses
    to an adjacent region within 400 ms. NoGesture otherwise.
    """
    geom = geom or skin.SkinGeometry()
    times, regions, strengths = [], [], []
    for s in samples:
        t = s.timestamp_ms if hasattr(s, "timestamp_ms") else s[0]
        v = s.values_ut if hasattr(s, "values_ut") else s[1]
        mags = _region_magnitudes(v)
        peak = int(np.argmax(mags))
        if mags[peak] >= config.press_threshold_ut:
            times.append(float(t))
            regions.append(peak)
            strengths.append(float(mags[peak]))
    if not times:
        return NoGesture()

    strength = max(strengths)
    pos = geom.sensor_positions_mm

    # slide: first and last visited regions differ and the trajectory
    # steps through adjacent regions quickly enough
    if regions[0] != regions[-1]:
        for i in range(len(times) - 1):
            for j in range(i + 1, len(times)):
                if regions[j] == regions[i]:
                    continue
                dt = times[j] - times[i]
                if dt > config.slide_window_ms:
                    break
                gap = np.linalg.norm(pos[regions[j]] - pos[regions[i]])
                if gap <= config.adjacency_mm:
                    delta = pos[regions[-1]] - pos[regions[0]]
                    axis = ("+x" if delta[0] > 0 else "-x") \
                        if abs(delta[0]) >= abs(delta[1]) \
                        else ("+y" if delta[1] > 0 else "-y")
                    return Slide(axis, strength)

    # press/long-press: dominant region dwell time
    dominant = int(np.bincount(regions, minlength=8).argmax())
    dwell = [t for t, r in zip(times, regions) if r == dominant]
    duration = dwell[-1] - dwell[0] if len(dwell) > 1 else 0.0
    if duration >= config.long_press_ms:
        return LongPress(dominant, strength)
    if duration >= config.press_min_ms:
        return PressAt(dominant, strength)
    return NoGesture()


class GestureDetector:
    """Streaming wrapper: buffers zeroed samples and emits each gesture
    once per contact episode (an episode ends after `quiet_ms` below
    threshold)."""

    def __init__(self, config: GestureConfig = GestureConfig(),
                 geom: skin.SkinGeometry | None = None,
                 quiet_ms: float = 160.0):
        self.config = config
        self.geom = geom or skin.SkinGeometry()
        self.quiet_ms = quiet_ms
        self._buffer = []
        self._last_active_ms = None
        self._long_press_fired = False

    def push(self, timestamp_ms: float, values_ut) -> Gesture | None:
        """Feed one zeroed sample; returns a gesture when an episode
        completes (or a LongPress as soon as its dwell is reached)."""
        mags = _region_magnitudes(values_ut)
        active = bool(np.max(mags) >= self.config.press_threshold_ut)
        if active:
            self._buffer.append((timestamp_ms, np.array(values_ut)))
            self._last_active_ms = timestamp_ms
            gesture = classify_gesture(self._buffer, self.config, self.geom)
            if isinstance(gesture, LongPress) and not self._long_press_fired:
                self._long_press_fired = True
                return gesture
            return None
        if self._buffer and self._last_active_ms is not None \
                and timestamp_ms - self._last_active_ms >= self.quiet_ms:
            gesture = classify_gesture(self._buffer, self.config, self.geom)
            fired_long = self._long_press_fired
            self._buffer = []
            self._last_active_ms = None
            self._long_press_fired = False
            if isinstance(gesture, NoGesture) or fired_long:
                return None
            if isinstance(gesture, LongPress):
                return None  # already fired at dwell
            return gesture
        return None


# ---------------------------------------------------------------------------
# Stage-dependent gesture -> control-code table

def gesture_to_command(gesture: Gesture, stage: Stage) -> ControlCode | None:
    """Fixed mapping table from operator gestures to robot commands.

    SET_TARGET: no gesture commands (the target arrives as a
                TargetWeight message and advances the session itself).
    APPROACH:   slides move in x/y, region 4/5 presses move z up/down,
                region 7 press closes the gripper (GRASP).
    GRASP:      region 0 press reopens (RELEASE); the grasp itself
                completes internally.
    POSITION:   slides move, region 6/5 presses tilt the spoon up/down,
                region 0 press starts dispensing vibration.
    DISPENSE:   region 0 press (re)starts vibration, a long press stops
                it, region 6/5 tilt, region 7 press confirms (-> stage 6).
    CONFIRM:    region 0 press releases the tool.
    """
    if isinstance(gesture, NoGesture):
        return None
    if isinstance(gesture, Slide):
        if stage in (Stage.APPROACH, Stage.POSITION):
            return {
                "+x": ControlCode.MOVE_XP, "-x": ControlCode.MOVE_XN,
                "+y": ControlCode.MOVE_YP, "-y": ControlCode.MOVE_YN,
            }[gesture.axis]
        return None
    if isinstance(gesture, LongPress):
        if stage is Stage.DISPENSE:
            return ControlCode.VIB_STOP
        return None
    # PressAt
    region = gesture.region
    table = {
        Stage.SET_TARGET: {},
        Stage.APPROACH: {4: ControlCode.MOVE_ZP, 5: ControlCode.MOVE_ZN,
                         7: ControlCode.GRASP},
        Stage.GRASP: {0: ControlCode.RELEASE},
        Stage.POSITION: {6: ControlCode.TILT_UP, 5: ControlCode.TILT_DOWN,
                         0: ControlCode.VIB_START},
        Stage.DISPENSE: {0: ControlCode.VIB_START, 6: ControlCode.TILT_UP,
                         5: ControlCode.TILT_DOWN, 7: ControlCode.CONFIRM},
        Stage.CONFIRM: {0: ControlCode.RELEASE},
    }
    return table.get(stage, {}).get(region)
