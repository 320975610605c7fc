"""Programmable 8-channel vibration scheduling.

A program is a list of per-channel duty-cycle commands on a millisecond
timeline. Motors follow their duty target through a first-order lag
(ERM motors spin up, they do not step), so the instantaneous amplitude
is the lag response to the command sequence. Other modules consume the
steady-state amplitude fraction as "vibration intensity".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

N_CHANNELS = 8
SUPPLY_VOLTAGE = 3.7        # V, full-duty equivalent
RISE_TAU_MS = 30.0          # first-order motor time constant
TAIL_CUTOFF_TAU = 5.0       # decay is truncated to exactly zero past 5 tau


class ProgramError(ValueError):
    """Invalid vibration program."""


@dataclass(frozen=True)
class VibrationCommand:
    channel: int
    duty: float
    start_ms: float
    duration_ms: float

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.duration_ms


@dataclass
class VibrationProgram:
    commands: list[VibrationCommand] = field(default_factory=list)
    name: str | None = None

    @property
    def end_ms(self) -> float:
        return max((c.end_ms for c in self.commands), default=0.0)


@dataclass
class MotorState:
    """Instantaneous per-channel amplitudes with PWM-equivalent voltages."""

    amplitudes: np.ndarray  # (8,) in [0, 1]

    @property
    def voltages(self) -> np.ndarray:
        return self.amplitudes * SUPPLY_VOLTAGE


def validate(program: VibrationProgram) -> None:
    """Enforce program invariants; raises ProgramError."""
    per_channel: dict[int, list[VibrationCommand]] = {}
    for cmd in program.commands:
        if not 0 <= cmd.channel < N_CHANNELS:
            raise ProgramError(f"channel {cmd.channel} out of range")
        if not 0.0 <= cmd.duty <= 1.0:
            raise ProgramError(f"duty {cmd.duty} outside [0, 1]")
        if cmd.duration_ms <= 0:
            raise ProgramError("command duration must be > 0")
        per_channel.setdefault(cmd.channel, []).append(cmd)
    for channel, cmds in per_channel.items():
        cmds = sorted(cmds, key=lambda c: c.start_ms)
        for a, b in zip(cmds, cmds[1:]):
            if b.start_ms < a.end_ms:
                raise ProgramError(
                    f"overlapping commands on channel {channel} "
                    f"at {b.start_ms} ms")


def _channel_amplitude(cmds: list[VibrationCommand], t_ms: float,
                       tau_ms: float) -> float:
    """First-order lag response of one channel at time t.

    Commands are non-overlapping; walk them in order, propagating the
    amplitude through each hold/gap analytically.
    """
    amp = 0.0
    now = None
    for cmd in sorted(cmds, key=lambda c: c.start_ms):
        if cmd.start_ms >= t_ms:
            break
        if now is not None:
            amp = _decay(amp, cmd.start_ms - now, tau_ms)
        seg_end = min(cmd.end_ms, t_ms)
        amp = cmd.duty + (amp - cmd.duty) * np.exp(
            -(seg_end - cmd.start_ms) / tau_ms)
        now = seg_end
    if now is not None and t_ms > now:
        amp = _decay(amp, t_ms - now, tau_ms)
    return amp


def _decay(amp: float, dt_ms: float, tau_ms: float) -> float:
    if dt_ms >= TAIL_CUTOFF_TAU * tau_ms:
        return 0.0
    return amp * np.exp(-dt_ms / tau_ms)


def amplitude_at(program: VibrationProgram, t_ms: float,
                 tau_ms: float = RISE_TAU_MS) -> np.ndarray:
    """Per-channel amplitudes (8,) at time t, including rise/fall lag."""
    out = np.zeros(N_CHANNELS)
    for channel in range(N_CHANNELS):
        cmds = [c for c in program.commands if c.channel == channel]
        if cmds:
            out[channel] = _channel_amplitude(cmds, t_ms, tau_ms)
    return out


def motor_state_at(program: VibrationProgram, t_ms: float) -> MotorState:
    return MotorState(amplitude_at(program, t_ms))


def rms_intensity(amplitudes: np.ndarray) -> float:
    """Aggregate vibration intensity over the 8 channels (RMS), in [0, 1]."""
    a = np.asarray(amplitudes, dtype=float)
    return float(np.sqrt(np.mean(a**2)))


# ---------------------------------------------------------------------------
# Presets

def preset(name: str, *, n: int = 8, duty: float = 0.5,
           duration_ms: float = 1000.0, stagger_ms: float = 50.0,
           pulse_ms: float = 100.0, gap_ms: float = 100.0,
           pulses: int = 4) -> VibrationProgram:
    """Named spatiotemporal patterns.

    all-on: every channel at `duty` for the duration.
    n-motors: first n channels at `duty` simultaneously.
    wave: starts staggered across channels by `stagger_ms`.
    pulse-train: `pulses` on/off bursts on the first n channels.
    """
    cmds: list[VibrationCommand] = []
    if name == "all-on":
        cmds = [VibrationCommand(c, duty, 0.0, duration_ms)
                for c in range(N_CHANNELS)]
    elif name == "n-motors":
        if not 0 <= n <= N_CHANNELS:
            raise ProgramError(f"n-motors needs 0 <= n <= 8, got {n}")
        cmds = [VibrationCommand(c, duty, 0.0, duration_ms) for c in range(n)]
    elif name == "wave":
        cmds = [VibrationCommand(c, duty, c * stagger_ms, duration_ms)
                for c in range(N_CHANNELS)]
    elif name == "pulse-train":
        for c in range(min(n, N_CHANNELS)):
            for p in range(pulses):
                cmds.append(VibrationCommand(
                    c, duty, p * (pulse_ms + gap_ms), pulse_ms))
    else:
        raise ProgramError(f"unknown preset {name!r}")
    program = VibrationProgram(cmds, name=name)
    validate(program)
    return program


# ---------------------------------------------------------------------------
# Program files

def program_to_json(program: VibrationProgram) -> str:
    return json.dumps([
        {"channel": c.channel, "duty": c.duty,
         "start_ms": c.start_ms, "duration_ms": c.duration_ms}
        for c in program.commands
    ], indent=2)


def program_from_json(text: str) -> VibrationProgram:
    raw = json.loads(text)
    cmds = [VibrationCommand(int(e["channel"]), float(e["duty"]),
                             float(e["start_ms"]), float(e["duration_ms"]))
            for e in raw]
    program = VibrationProgram(cmds)
    validate(program)
    return program
