"""Magnetostatic forward model of the deformable magnetized film.

The film is a grid of point dipoles at the film mid-plane. Pressing or
sliding on the skin displaces dipoles downward along a Gaussian bump and
tilts their moments with the local surface gradient; eight 3-axis Hall
sensors below the elastomer read the superposed dipole field. Vibration
motors sit on the complementary checkerboard cells and act as small
oscillating dipoles whose stray field perturbs the sensors.

Coordinates: x along the 40 mm edge, y along the 65 mm edge, z up.
The film mid-plane is z = 0; the sensor plane is z = -sensor_plane_gap.
Positions are in mm at the API surface, fields in µT; SI inside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

MU0 = 4.0e-7 * np.pi          # H/m
T_TO_UT = 1.0e6
MM_TO_M = 1.0e-3

# Layer stack, mm (film mid-plane to sensor plane = half film + elastomer).
FILM_THICKNESS_MM = 1.5
ELASTOMER_THICKNESS_MM = 4.5
CIRCUIT_ALLOWANCE_MM = 1.0
MAX_STACK_MM = 7.0

# Press force to indentation depth: depth = force / stiffness.
STIFFNESS_N_PER_MM = 1.33

# Motor stray-field dipole strength, calibrated so that all motors at full
# amplitude perturb the probe sensor by ~0.2x the change a 4 N press causes
# at default film magnetization.
MOTOR_MOMENT_AM2 = 7.5e-5


class SingularityError(ValueError):
    """Field requested at (or too close to) a dipole location."""


class FootprintMismatchError(ValueError):
    """Film and geometry describe different footprints."""


@dataclass(frozen=True)
class SkinGeometry:
    """Staggered 4x4 layout of 8 Hall sensors and 8 vibration motors.

    Sensors occupy the even-parity cells of the 4x4 grid and motors the
    odd-parity cells, so the two arrays interleave in a checkerboard.
    """

    width_mm: float = 40.0
    height_mm: float = 65.0
    sensor_positions_mm: np.ndarray = field(default=None)  # (8, 2)
    motor_positions_mm: np.ndarray = field(default=None)   # (8, 2)
    film_thickness_mm: float = FILM_THICKNESS_MM
    elastomer_thickness_mm: float = ELASTOMER_THICKNESS_MM
    sensor_plane_gap_mm: float = FILM_THICKNESS_MM / 2 + ELASTOMER_THICKNESS_MM

    def __post_init__(self):
        if self.sensor_positions_mm is None:
            s, m = checkerboard_layout(self.width_mm, self.height_mm)
            object.__setattr__(self, "sensor_positions_mm", s)
            object.__setattr__(self, "motor_positions_mm", m)
        validate_geometry(self)

    @property
    def center_mm(self) -> np.ndarray:
        return np.array([self.width_mm / 2.0, self.height_mm / 2.0])

    def rotation_pairs(self) -> list[tuple[int, int]]:
        """Sensor index pairs mapped onto each other by a 180-degree
        rotation about the footprint center (the layout's symmetry)."""
        pos = self.sensor_positions_mm
        mirrored = 2.0 * self.center_mm - pos
        pairs = []
        for i in range(len(pos)):
            j = int(np.argmin(np.linalg.norm(pos - mirrored[i], axis=1)))
            if i <= j:
                pairs.append((i, j))
        return pairs


def checkerboard_layout(width_mm: float = 40.0, height_mm: float = 65.0):
    """Cell centers of the 4x4 grid split into sensor (even-parity) and
    motor (odd-parity) cells, row-major within each group."""
    xs = (np.arange(4) + 0.5) * width_mm / 4.0
    ys = (np.arange(4) + 0.5) * height_mm / 4.0
    sensors, motors = [], []
    for r in range(4):
        for c in range(4):
            cell = (xs[c], ys[r])
            (sensors if (r + c) % 2 == 0 else motors).append(cell)
    return np.array(sensors), np.array(motors)


def validate_geometry(geom: SkinGeometry) -> None:
    for name, pts in (("sensor", geom.sensor_positions_mm),
                      ("motor", geom.motor_positions_mm)):
        if pts.shape != (8, 2):
            raise ValueError(f"expected 8 {name} positions, got {pts.shape}")
        inside = ((pts[:, 0] > 0) & (pts[:, 0] < geom.width_mm)
                  & (pts[:, 1] > 0) & (pts[:, 1] < geom.height_mm))
        if not inside.all():
            raise ValueError(f"{name} positions outside footprint")
    combined = np.vstack([geom.sensor_positions_mm, geom.motor_positions_mm])
    if len(np.unique(np.round(combined, 6), axis=0)) != 16:
        raise ValueError("sensor/motor cells overlap")
    stack = (geom.film_thickness_mm + geom.elastomer_thickness_mm
             + CIRCUIT_ALLOWANCE_MM)
    if stack > MAX_STACK_MM + 1e-9:
        raise ValueError(f"layer stack {stack} mm exceeds {MAX_STACK_MM} mm")


# ---------------------------------------------------------------------------
# Deformations

@dataclass(frozen=True)
class Press:
    center_mm: tuple[float, float]
    depth_mm: float
    radius_mm: float


@dataclass(frozen=True)
class Slide:
    center_mm: tuple[float, float]
    depth_mm: float
    radius_mm: float
    offset_mm: tuple[float, float] = (0.0, 0.0)


Deformation = Optional[Union[Press, Slide]]


def validate_deformation(d: Deformation, geom: SkinGeometry | None = None) -> None:
    if d is None:
        return
    if d.depth_mm < 0:
        raise ValueError("deformation depth must be >= 0")
    if d.radius_mm <= 0:
        raise ValueError("deformation radius must be > 0")
    if geom is not None and d.depth_mm > geom.elastomer_thickness_mm:
        raise ValueError("deformation depth exceeds elastomer thickness")


# ---------------------------------------------------------------------------
# Film

@dataclass
class MagneticFilm:
    """Dipole-grid model of the magnetized film.

    `positions_mm`/`moments` hold the current (possibly deformed) state,
    `rest_positions_mm` the undeformed grid. Moments are A*m^2.
    """

    grid_nx: int
    grid_ny: int
    width_mm: float
    height_mm: float
    positions_mm: np.ndarray       # (M, 3)
    moments: np.ndarray            # (M, 3)
    rest_positions_mm: np.ndarray  # (M, 3)
    surface_field_target_mt: float = 2.0


def make_film(geom: SkinGeometry, nx: int = 20, ny: int = 26,
              surface_field_target_mt: float = 2.0) -> MagneticFilm:
    """Uniformly magnetized film: dipoles on an nx-x-ny grid at the film
    mid-plane, all moments +z, scaled so the field magnitude at the
    canonical surface probe (footprint center, film top surface) equals
    the target flux density."""
    xs = (np.arange(nx) + 0.5) * geom.width_mm / nx
    ys = (np.arange(ny) + 0.5) * geom.height_mm / ny
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(nx * ny)])
    moments = np.zeros((nx * ny, 3))
    moments[:, 2] = 1.0

    film = MagneticFilm(nx, ny, geom.width_mm, geom.height_mm,
                        pos.copy(), moments, pos.copy(),
                        surface_field_target_mt)
    probe_mm = np.array([geom.width_mm / 2.0, geom.height_mm / 2.0,
                         geom.film_thickness_mm / 2.0])
    b = field_at_points(film, probe_mm[None, :])[0]  # µT
    target_ut = surface_field_target_mt * 1000.0
    film.moments *= target_ut / np.linalg.norm(b)
    return film


def dipole_field(moment: np.ndarray, displacement_m: np.ndarray) -> np.ndarray:
    """Point-dipole flux density, SI: B = (µ0/4π)(3(m.r̂)r̂ - m)/|r|³ [T]."""
    m = np.asarray(moment, dtype=float)
    r = np.asarray(displacement_m, dtype=float)
    dist = np.linalg.norm(r)
    if dist <= 0.0:
        raise SingularityError("dipole field requested at zero displacement")
    rhat = r / dist
    return (MU0 / (4.0 * np.pi)) * (3.0 * np.dot(m, rhat) * rhat - m) / dist**3


def _field_sum(moments: np.ndarray, sources_mm: np.ndarray,
               points_mm: np.ndarray) -> np.ndarray:
    """Superposed dipole field of all sources at each point, in µT.

    moments (M,3) A*m^2, sources (M,3) mm, points (P,3) mm -> (P,3) µT.
    """
    r = (points_mm[:, None, :] - sources_mm[None, :, :]) * MM_TO_M  # (P,M,3)
    dist = np.linalg.norm(r, axis=2)                                # (P,M)
    if np.min(dist) < 1e-9:
        raise SingularityError("field point coincides with a dipole")
    mdotr = np.einsum("pmk,mk->pm", r, moments)
    b = 3.0 * mdotr[:, :, None] * r / dist[:, :, None] ** 5
    b -= moments[None, :, :] / dist[:, :, None] ** 3
    return (MU0 / (4.0 * np.pi)) * b.sum(axis=1) * T_TO_UT


def field_at_points(film: MagneticFilm, points_mm: np.ndarray) -> np.ndarray:
    return _field_sum(film.moments, film.positions_mm, np.atleast_2d(points_mm))


def deform(film: MagneticFilm, d: Deformation) -> MagneticFilm:
    """Apply a press/slide: displace dipoles down a Gaussian bump
    w = depth*exp(-ρ²/2σ²) and tilt each moment with the local surface
    gradient; magnitudes are preserved. Returns a new film."""
    validate_deformation(d)
    if d is None:
        return MagneticFilm(film.grid_nx, film.grid_ny, film.width_mm,
                            film.height_mm, film.positions_mm.copy(),
                            film.moments.copy(), film.rest_positions_mm,
                            film.surface_field_target_mt)
    cx, cy = d.center_mm
    if isinstance(d, Slide):
        cx += d.offset_mm[0]
        cy += d.offset_mm[1]
    dx = film.positions_mm[:, 0] - cx
    dy = film.positions_mm[:, 1] - cy
    sigma2 = d.radius_mm**2
    w = d.depth_mm * np.exp(-(dx**2 + dy**2) / (2.0 * sigma2))  # mm, downward

    pos = film.positions_mm.copy()
    pos[:, 2] -= w

    # Deformed surface is z = z0 - w; its upward normal is (wx, wy, 1)/|.|.
    wx = -w * dx / sigma2
    wy = -w * dy / sigma2
    normal = np.column_stack([wx, wy, np.ones_like(w)])
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    mag = np.linalg.norm(film.moments, axis=1, keepdims=True)
    moments = normal * mag

    return MagneticFilm(film.grid_nx, film.grid_ny, film.width_mm,
                        film.height_mm, pos, moments,
                        film.rest_positions_mm, film.surface_field_target_mt)


def sensor_field(film: MagneticFilm, geom: SkinGeometry) -> np.ndarray:
    """3-axis flux density at each of the 8 sensors, shape (8, 3), µT."""
    if not (np.isclose(film.width_mm, geom.width_mm)
            and np.isclose(film.height_mm, geom.height_mm)):
        raise FootprintMismatchError(
            f"film {film.width_mm}x{film.height_mm} mm vs geometry "
            f"{geom.width_mm}x{geom.height_mm} mm")
    pts = np.column_stack([
        geom.sensor_positions_mm,
        np.full(8, -geom.sensor_plane_gap_mm),
    ])
    return field_at_points(film, pts)


def force_to_depth(force_n: float,
                   stiffness_n_per_mm: float = STIFFNESS_N_PER_MM) -> float:
    return force_n / stiffness_n_per_mm


# ---------------------------------------------------------------------------
# Motor interference

@dataclass(frozen=True)
class MotorFieldModel:
    """Stray-field model of one vibration motor: a small dipole whose
    oscillation envelope scales with drive amplitude."""

    moment_am2: float = MOTOR_MOMENT_AM2
    height_above_sensors_mm: float = 1.5   # ERM body center over the FPCB
    ripple_hz: float = 25.0


def motor_interference(motor_amplitudes: np.ndarray, geom: SkinGeometry,
                       motor: MotorFieldModel = MotorFieldModel()) -> np.ndarray:
    """Peak additive perturbation per sensor axis, shape (8, 3), µT.

    Worst case over the oscillation cycle: per-axis magnitudes of each
    motor's dipole field, scaled by its amplitude, summed over motors.
    """
    amps = np.asarray(motor_amplitudes, dtype=float)
    if amps.shape != (8,):
        raise ValueError("expected 8 motor amplitudes")
    if np.any(amps < 0) or np.any(amps > 1):
        raise ValueError("motor amplitudes must lie in [0, 1]")
    sources = np.column_stack([
        geom.motor_positions_mm,
        np.full(8, -geom.sensor_plane_gap_mm + motor.height_above_sensors_mm),
    ])
    pts = np.column_stack([
        geom.sensor_positions_mm,
        np.full(8, -geom.sensor_plane_gap_mm),
    ])
    out = np.zeros((8, 3))
    mom = np.array([0.0, 0.0, motor.moment_am2])
    for k in range(8):
        if amps[k] == 0.0:
            continue
        b = _field_sum(mom[None, :], sources[k][None, :], pts)  # (8,3) µT
        out += amps[k] * np.abs(b)
    return out


@dataclass
class InterferenceResult:
    """Three-stage single-sensor trace: quiescent, motors on, press on."""

    t_s: np.ndarray                 # (T,)
    readings_ut: np.ndarray         # (T, 3), probed sensor
    stage_slices: dict[str, slice]
    max_delta_ut: dict[str, float]  # max |ΔB| per stage, any axis
    probe_sensor: int

    @property
    def motor_press_ratio(self) -> float:
        return self.max_delta_ut["motors"] / self.max_delta_ut["press"]


def interference_experiment(geom: SkinGeometry, film: MagneticFilm,
                            motor: MotorFieldModel = MotorFieldModel(),
                            press_force_n: float = 4.0,
                            probe_sensor: int = 2,
                            press_radius_mm: float = 5.0,
                            stage_s: float = 2.0,
                            rate_hz: float = 200.0,
                            noise_floor_ut: float = 0.01) -> InterferenceResult:
    """Quantify motor stray fields against a reference vertical press.

    Stage 1: quiescent baseline. Stage 2: all motors at full amplitude
    (ripple rendered as a sine envelope). Stage 3: press of the given
    force directly over the probed sensor, motors off.
    """
    if press_force_n < 0:
        raise ValueError("press force must be >= 0")
    n = int(round(stage_s * rate_hz))
    baseline = sensor_field(film, geom)[probe_sensor]

    interference = motor_interference(np.ones(8), geom, motor)[probe_sensor]

    depth = min(force_to_depth(press_force_n),
                geom.elastomer_thickness_mm)
    center = tuple(geom.sensor_positions_mm[probe_sensor])
    pressed = sensor_field(
        deform(film, Press(center, depth, press_radius_mm)), geom
    )[probe_sensor] if depth > 0 else baseline.copy()

    t = np.arange(3 * n) / rate_hz
    readings = np.tile(baseline, (3 * n, 1))
    ripple = np.sin(2.0 * np.pi * motor.ripple_hz * t[n:2 * n])
    readings[n:2 * n] += interference[None, :] * ripple[:, None]
    readings[2 * n:] = pressed

    stages = {"baseline": slice(0, n), "motors": slice(n, 2 * n),
              "press": slice(2 * n, 3 * n)}
    max_delta = {
        name: float(np.max(np.abs(readings[sl] - baseline)))
        for name, sl in stages.items()
    }
    # quiescent stage sits exactly on the baseline; report the floor bound
    max_delta["baseline"] = min(max_delta["baseline"], noise_floor_ut)
    return InterferenceResult(t, readings, stages, max_delta, probe_sensor)
