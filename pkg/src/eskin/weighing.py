"""Granular discharge from a tilted spoon under vibration.

Per step, two release mechanisms add up:

  continuous flow = base_flow * max(0, sin(tilt) - sin(repose))
                    * (flow_baseline + vib_gain * vib) * dt
  clump events    ~ Poisson(clump_rate_no_vib * humidity_clump_factor
                    * tilt_excess * suppression(vib) * dt),
                    each releasing clump_mass_mean * U(0.5, 1.5)
                    * suppression(vib) grams

where suppression(vib) = max(0, 1 - vib / CLUMP_CUTOFF) vanishes at the
cutoff amplitude and tilt_excess is the repose-threshold factor
normalized to 1 at 90 degrees. Clump-prone materials (flour) have zero
flow_baseline: without vibration they release only sporadic lumps, which
is what limits weighing resolution; vibration suppresses the lumps and
opens a fine continuous flow.

The resolution metric over a trace m_1..m_n for interval a is the mean
absolute nonzero mass change: sum |m_{i+a} - m_i| / N over the N indices
where the difference is nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import actuation

DT_S = 0.05                 # 20 Hz scale readout
CLUMP_CUTOFF = 0.6          # vibration amplitude that fully suppresses clumps


class ConstantTraceError(ValueError):
    """Epsilon is undefined on a trace with no mass changes."""


@dataclass(frozen=True)
class Material:
    name: str
    angle_of_repose_deg: float
    base_flow_g_per_s: float
    vib_gain: float
    clump_mass_mean_g: float
    clump_rate_no_vib_hz: float
    humidity_clump_factor: float = 1.0
    flow_baseline: float = 0.0  # continuous-flow factor without vibration

    def __post_init__(self):
        if not 0.0 < self.angle_of_repose_deg < 90.0:
            raise ValueError("angle of repose must be in (0, 90) degrees")
        for v in (self.base_flow_g_per_s, self.vib_gain, self.clump_mass_mean_g,
                  self.clump_rate_no_vib_hz, self.humidity_clump_factor,
                  self.flow_baseline):
            if v < 0:
                raise ValueError("material parameters must be nonnegative")


FLOUR = Material("flour", angle_of_repose_deg=45.0, base_flow_g_per_s=1.2,
                 vib_gain=1.0, clump_mass_mean_g=0.2,
                 clump_rate_no_vib_hz=1.2, humidity_clump_factor=1.3,
                 flow_baseline=0.0)
SUGAR = Material("white_sugar", angle_of_repose_deg=35.0,
                 base_flow_g_per_s=2.0, vib_gain=1.5, clump_mass_mean_g=0.08,
                 clump_rate_no_vib_hz=0.3, flow_baseline=0.3)
SESAME = Material("sesame", angle_of_repose_deg=25.0, base_flow_g_per_s=2.0,
                  vib_gain=1.5, clump_mass_mean_g=0.02,
                  clump_rate_no_vib_hz=0.0, flow_baseline=0.8)
MATERIALS = {m.name: m for m in (FLOUR, SUGAR, SESAME)}


@dataclass
class SpoonState:
    tilt_deg: float
    load_remaining_g: float

    def __post_init__(self):
        if not 0.0 <= self.tilt_deg <= 90.0:
            raise ValueError("tilt must be in [0, 90] degrees")
        if self.load_remaining_g < 0:
            raise ValueError("load must be >= 0")


@dataclass
class WeighTrace:
    dt_s: float
    masses_g: np.ndarray  # cumulative scale mass, m_0 = 0

    def __post_init__(self):
        self.masses_g = np.asarray(self.masses_g, dtype=float)
        if self.masses_g[0] != 0.0:
            raise ValueError("trace must start at zero mass")
        if np.any(np.diff(self.masses_g) < 0):
            raise ValueError("trace must be nondecreasing")

    @property
    def t_s(self) -> np.ndarray:
        return np.arange(len(self.masses_g)) * self.dt_s


@dataclass(frozen=True)
class EpsilonParams:
    a: int = 1

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("interval a must be a positive integer")


def _tilt_excess(tilt_deg: float, repose_deg: float) -> float:
    """Repose-threshold drive, 0 below the repose angle, 1 at 90 degrees."""
    s = math.sin(math.radians(tilt_deg)) - math.sin(math.radians(repose_deg))
    return max(0.0, s) / (1.0 - math.sin(math.radians(repose_deg)))


def step(state: SpoonState, material: Material, vib_amplitude: float,
         dt_s: float, rng: np.random.Generator) -> tuple[float, SpoonState]:
    """One discharge step; returns (released grams, new state).

    Mass is conserved exactly: released never exceeds the remaining load.
    """
    if dt_s <= 0:
        raise ValueError("dt must be > 0")
    excess = _tilt_excess(state.tilt_deg, material.angle_of_repose_deg)
    suppression = max(0.0, 1.0 - vib_amplitude / CLUMP_CUTOFF)

    released = (material.base_flow_g_per_s * excess
                * (material.flow_baseline + material.vib_gain * vib_amplitude)
                * dt_s)

    rate = (material.clump_rate_no_vib_hz * material.humidity_clump_factor
            * excess * suppression)
    if rate > 0:
        for _ in range(rng.poisson(rate * dt_s)):
            released += (material.clump_mass_mean_g * rng.uniform(0.5, 1.5)
                         * suppression)

    released = min(released, state.load_remaining_g)
    return released, SpoonState(state.tilt_deg,
                                state.load_remaining_g - released)


@dataclass(frozen=True)
class TiltSchedule:
    """Piecewise-linear tilt profile from (time, degrees) knots."""

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.knots:
            raise ValueError("schedule needs at least one knot")
        times = [t for t, _ in self.knots]
        if sorted(times) != times:
            raise ValueError("knots must be time-ordered")

    @property
    def end_s(self) -> float:
        return self.knots[-1][0]

    def tilt_at(self, t_s: float) -> float:
        ts = [k[0] for k in self.knots]
        vs = [k[1] for k in self.knots]
        return float(np.interp(t_s, ts, vs))


def ramp_schedule(duration_s: float = 20.0, start_deg: float = 0.0,
                  end_deg: float = 90.0) -> TiltSchedule:
    return TiltSchedule(((0.0, start_deg), (duration_s, end_deg)))


def hold_schedule(duration_s: float, tilt_deg: float) -> TiltSchedule:
    return TiltSchedule(((0.0, tilt_deg), (duration_s, tilt_deg)))


def run_trial(tilt_schedule: TiltSchedule,
              program: actuation.VibrationProgram, material: Material,
              load_g: float, seed: int, dt_s: float = DT_S,
              duration_s: float | None = None) -> WeighTrace:
    """Integrate the discharge model over the schedule; deterministic per
    seed. The horizon defaults to the tilt schedule's end."""
    duration = duration_s if duration_s is not None else tilt_schedule.end_s
    if tilt_schedule.end_s < duration - 1e-9:
        raise ValueError("tilt schedule does not span the horizon")
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt_s))
    masses = np.zeros(n + 1)
    state = SpoonState(tilt_schedule.tilt_at(0.0), load_g)
    cumulative = 0.0
    for i in range(n):
        t = i * dt_s
        amps = actuation.amplitude_at(program, t * 1e3)
        vib = actuation.rms_intensity(amps)
        state = SpoonState(tilt_schedule.tilt_at(t), state.load_remaining_g)
        released, state = step(state, material, vib, dt_s, rng)
        cumulative += released
        masses[i + 1] = cumulative
    return WeighTrace(dt_s, masses)


def epsilon(trace, params: EpsilonParams = EpsilonParams()) -> float:
    """Mean absolute nonzero mass change over interval a.

    Accepts a WeighTrace or any mass sequence (the metric itself only
    looks at differences)."""
    m = trace.masses_g if isinstance(trace, WeighTrace) \
        else np.asarray(trace, dtype=float)
    if params.a >= len(m):
        raise ValueError("interval a must be smaller than the trace length")
    diffs = m[params.a:] - m[:-params.a]
    nonzero = diffs[diffs != 0.0]
    if nonzero.size == 0:
        raise ConstantTraceError("no nonzero mass differences in trace")
    return float(np.mean(np.abs(nonzero)))


def time_to_half(trace: WeighTrace, load_g: float) -> float:
    """First time the scale reaches half the initial load; inf if never."""
    idx = np.argmax(trace.masses_g >= load_g / 2.0)
    if trace.masses_g[idx] < load_g / 2.0:
        return math.inf
    return float(idx * trace.dt_s)


# ---------------------------------------------------------------------------
# Experiments

COMBO_ANGLES_DEG = (30.0, 45.0, 50.0)
COMBO_MOTOR_COUNTS = (2, 4, 8)
COMBO_DUTY = 0.5


@dataclass
class ComboFamily:
    label: int          # 1..9, Fig-style identifiers
    tilt_deg: float
    motors: int
    traces: list[WeighTrace]
    t50_s: list[float]

    @property
    def mean_t50_s(self) -> float:
        return float(np.mean(self.t50_s))


def nine_combo_experiment(material: Material = SESAME, seed_count: int = 5,
                          load_g: float = 10.0, duration_s: float = 60.0,
                          base_seed: int = 0) -> list[ComboFamily]:
    """3 tilt angles x {2, 4, 8} motors at 50% duty; label 1 is
    (30 deg, 2 motors), label 2 is (30 deg, 4 motors), and so on."""
    if seed_count < 1:
        raise ValueError("seed_count must be >= 1")
    families = []
    label = 1
    for angle in COMBO_ANGLES_DEG:
        for motors in COMBO_MOTOR_COUNTS:
            program = actuation.preset("n-motors", n=motors, duty=COMBO_DUTY,
                                       duration_ms=duration_s * 1e3)
            schedule = hold_schedule(duration_s, angle)
            traces = [run_trial(schedule, program, material, load_g,
                                seed=base_seed + 1000 * label + s)
                      for s in range(seed_count)]
            families.append(ComboFamily(
                label, angle, motors, traces,
                [time_to_half(tr, load_g) for tr in traces]))
            label += 1
    return families


@dataclass
class ResolutionComparison:
    """Flour poured over a 0-90 degree ramp, with and without vibration."""

    eps_no_vib: list[float]
    eps_vib: list[float]

    @property
    def ratio(self) -> float:
        return float(np.mean(self.eps_no_vib) / np.mean(self.eps_vib))


def resolution_comparison(material: Material = FLOUR, seeds: int = 20,
                          load_g: float = 10.0, ramp_s: float = 20.0,
                          motors: int = 8, duty: float = 0.5,
                          base_seed: int = 0,
                          program: actuation.VibrationProgram | None = None
                          ) -> ResolutionComparison:
    """Mean epsilon(a=1) without vibration vs with `motors` at `duty`
    (or an explicit vibration program)."""
    schedule = ramp_schedule(ramp_s)
    quiet = actuation.VibrationProgram([])
    vib = program if program is not None else actuation.preset(
        "n-motors", n=motors, duty=duty, duration_ms=ramp_s * 1e3)
    eps_no, eps_vib = [], []
    for s in range(seeds):
        tr_no = run_trial(schedule, quiet, material, load_g, base_seed + s)
        tr_vb = run_trial(schedule, vib, material, load_g,
                          base_seed + 10_000 + s)
        eps_no.append(epsilon(tr_no))
        eps_vib.append(epsilon(tr_vb))
    return ResolutionComparison(eps_no, eps_vib)
