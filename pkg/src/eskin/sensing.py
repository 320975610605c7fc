"""Sensor stream conditioning and tactile-window acquisition.

Continuous field readings become calibrated, noisy, quantized 24-channel
samples (sensor-major, axis-minor: s0x, s0y, s0z, s1x, ...) and fixed
24x60 windows. A window spans 0.3 s at 200 Hz and encloses the 0.2 s
grasp contact with margin. The synthetic dataset draws 12 object classes
as parameterized contact profiles and splits 70/30 after a seeded
shuffle, giving the 2400 -> 1680/720 layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import skin

N_CHANNELS = 24
DEFAULT_RATE_HZ = 200.0
DEFAULT_STEPS = 60
GRASP_START_S = 0.05
GRASP_DURATION_S = 0.2
RAMP_S = 0.03

DATASET_MAGIC = b"ESKD"
DATASET_VERSION = 1
UNLABELED = 255


class InsufficientDataError(ValueError):
    """Not enough samples to calibrate."""


@dataclass(frozen=True)
class SensorSample:
    timestamp_ms: float
    values_ut: np.ndarray  # (24,)

    def __post_init__(self):
        v = np.asarray(self.values_ut, dtype=float)
        if v.shape != (N_CHANNELS,):
            raise ValueError(f"expected 24 channels, got {v.shape}")
        object.__setattr__(self, "values_ut", v)


@dataclass(frozen=True)
class CalibrationState:
    offsets_ut: np.ndarray  # (24,)
    n_samples_used: int


@dataclass(frozen=True)
class NoiseModel:
    gaussian_sigma_ut: float = 0.1
    quantization_step_ut: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma_ut < 0:
            raise ValueError("sigma must be >= 0")
        if self.quantization_step_ut <= 0:
            raise ValueError("quantization step must be > 0")


@dataclass
class TactileWindow:
    data: np.ndarray            # (24, 60), zeroed µT
    label: int | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] != N_CHANNELS:
            raise ValueError(f"bad window shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("window contains non-finite values")
        if self.label is not None and not 0 <= self.label <= 11:
            raise ValueError(f"label {self.label} out of range")


def calibrate_zero(stream, n: int) -> CalibrationState:
    """Per-channel offsets from the first n contact-free samples."""
    if n <= 0:
        raise InsufficientDataError("need at least one calibration sample")
    samples = []
    for s in stream:
        samples.append(s.values_ut)
        if len(samples) == n:
            break
    if len(samples) < n:
        raise InsufficientDataError(
            f"stream has {len(samples)} samples, need {n}")
    return CalibrationState(np.mean(samples, axis=0), n)


def zero(sample: SensorSample, cal: CalibrationState) -> SensorSample:
    return replace(sample, values_ut=sample.values_ut - cal.offsets_ut)


def apply_noise(sample: SensorSample, model: NoiseModel,
                index: int = 0) -> SensorSample:
    """Gaussian noise then quantization; reproducible from (seed, index)."""
    rng = np.random.default_rng([model.rng_seed, index])
    noisy = sample.values_ut + rng.normal(
        0.0, model.gaussian_sigma_ut, N_CHANNELS)
    step = model.quantization_step_ut
    return replace(sample, values_ut=np.round(noisy / step) * step)


def quantize(values: np.ndarray, step: float) -> np.ndarray:
    return np.round(values / step) * step


# ---------------------------------------------------------------------------
# Window acquisition

@dataclass(frozen=True)
class ScheduleEntry:
    start_s: float
    end_s: float
    deformation: skin.Deformation


def acquire_window(schedule: list[ScheduleEntry], geom: skin.SkinGeometry,
                   film: skin.MagneticFilm,
                   rate_hz: float = DEFAULT_RATE_HZ,
                   steps: int = DEFAULT_STEPS,
                   noise: NoiseModel | None = None,
                   noise_index: int = 0,
                   label: int | None = None) -> TactileWindow:
    """Simulate a deformation schedule and return the zeroed 24xS window.

    Zeroing subtracts the undeformed rest reading (put through the same
    quantizer when a noise model is active, mirroring on-device zeroing).
    Deformations active at the same instant are applied in schedule order.
    """
    duration = steps / rate_hz
    for entry in schedule:
        if entry.end_s > duration + 1e-12:
            raise ValueError(
                f"schedule entry ends at {entry.end_s} s, window is "
                f"{duration} s")
        skin.validate_deformation(entry.deformation, geom)

    rest = skin.sensor_field(film, geom).reshape(N_CHANNELS)
    offsets = quantize(rest, noise.quantization_step_ut) if noise else rest

    data = np.empty((N_CHANNELS, steps), dtype=np.float32)
    cache: dict[tuple, np.ndarray] = {}
    for i in range(steps):
        t = i / rate_hz
        active = tuple(e.deformation for e in schedule
                       if e.start_s <= t < e.end_s and e.deformation)
        if active not in cache:
            f = film
            for d in active:
                f = skin.deform(f, d)
            cache[active] = skin.sensor_field(f, geom).reshape(N_CHANNELS)
        raw = cache[active]
        if noise is not None:
            sample = apply_noise(SensorSample(t * 1e3, raw), noise,
                                 index=noise_index * steps + i)
            raw = sample.values_ut
        data[:, i] = raw - offsets
    return TactileWindow(data, label)


def grasp_schedule(deformations: list[skin.Deformation],
                   start_s: float = GRASP_START_S,
                   duration_s: float = GRASP_DURATION_S,
                   ramp_s: float = RAMP_S,
                   ramp_steps: int = 5) -> list[ScheduleEntry]:
    """Grasp contact with trapezoidal depth ramp: `ramp_steps` stepped
    depth levels up, a hold at full depth, and the mirrored release."""
    end_s = start_s + duration_s
    step_s = ramp_s / ramp_steps
    entries = []
    for d in deformations:
        for k in range(1, ramp_steps + 1):
            shallow = replace(d, depth_mm=d.depth_mm * k / ramp_steps)
            entries.append(ScheduleEntry(start_s + (k - 1) * step_s,
                                         start_s + k * step_s, shallow))
            entries.append(ScheduleEntry(end_s - k * step_s,
                                         end_s - (k - 1) * step_s, shallow))
        entries.append(ScheduleEntry(start_s + ramp_s, end_s - ramp_s, d))
    return entries


# ---------------------------------------------------------------------------
# Object classes and dataset

@dataclass(frozen=True)
class ObjectClass:
    """Contact profile of one graspable object.

    Each object meets the pad at a characteristic spot (`grasp_offset_mm`
    from the pad center, set by the object's shape in the gripper) with
    its own contact radius and indentation depth. Two-contact profiles
    model objects pinched across two spots at a preferred orientation;
    slide_mm adds a lateral slip offset in a random direction per grasp.
    """

    name: str
    radius_mm: float
    depth_mm: float
    contacts: int = 1
    contact_gap_mm: float = 0.0
    slide_mm: float = 0.0
    grasp_offset_mm: tuple[float, float] = (0.0, 0.0)
    pair_angle_deg: float = 0.0
    pos_jitter_mm: float = 1.2
    angle_jitter_deg: float = 10.0
    depth_jitter: float = 0.05


def _ring(k: int, rx: float = 6.0, ry: float = 9.0) -> tuple[float, float]:
    a = 2.0 * np.pi * k / 12.0
    return (rx * np.cos(a), ry * np.sin(a))


DEFAULT_CLASSES: tuple[ObjectClass, ...] = (
    ObjectClass("green_bean", radius_mm=5.0, depth_mm=1.2, slide_mm=3.0,
                grasp_offset_mm=_ring(0)),
    ObjectClass("sugar_cube", radius_mm=7.0, depth_mm=2.4,
                grasp_offset_mm=_ring(1)),
    ObjectClass("hazelnut", radius_mm=6.0, depth_mm=1.8,
                grasp_offset_mm=_ring(2)),
    ObjectClass("chestnut", radius_mm=9.0, depth_mm=2.8,
                grasp_offset_mm=_ring(3)),
    ObjectClass("almond", radius_mm=5.5, depth_mm=1.5, slide_mm=2.0,
                grasp_offset_mm=_ring(4)),
    ObjectClass("walnut", radius_mm=11.0, depth_mm=3.2,
                grasp_offset_mm=_ring(5)),
    ObjectClass("soybean", radius_mm=4.0, depth_mm=0.9, slide_mm=2.5,
                grasp_offset_mm=_ring(6)),
    ObjectClass("marble", radius_mm=6.5, depth_mm=3.0,
                grasp_offset_mm=_ring(7)),
    ObjectClass("bottle_cap", radius_mm=5.0, depth_mm=1.6, contacts=2,
                contact_gap_mm=18.0, grasp_offset_mm=_ring(8),
                pair_angle_deg=0.0),
    ObjectClass("eraser", radius_mm=8.0, depth_mm=1.3, contacts=2,
                contact_gap_mm=22.0, grasp_offset_mm=_ring(9),
                pair_angle_deg=60.0),
    ObjectClass("coin", radius_mm=4.5, depth_mm=0.7, contacts=2,
                contact_gap_mm=12.0, grasp_offset_mm=_ring(10),
                pair_angle_deg=120.0),
    ObjectClass("dice", radius_mm=6.0, depth_mm=2.1, contacts=2,
                contact_gap_mm=15.0, grasp_offset_mm=_ring(11),
                pair_angle_deg=30.0),
)


def sample_grasp(cls: ObjectClass, geom: skin.SkinGeometry,
                 rng: np.random.Generator) -> list[skin.Deformation]:
    """Draw one grasp around the class's characteristic spot, with
    position/depth jitter, per-class pair orientation, and a random
    slip direction for slippery objects."""
    center = (geom.center_mm + np.asarray(cls.grasp_offset_mm)
              + rng.normal(0.0, cls.pos_jitter_mm, 2))
    depth = cls.depth_mm * (1.0 + rng.normal(0.0, cls.depth_jitter))
    depth = float(np.clip(depth, 0.1, geom.elastomer_thickness_mm))
    deformations = []
    if cls.contacts == 1:
        centers = [center]
    else:
        angle = np.radians(cls.pair_angle_deg
                           + rng.normal(0.0, cls.angle_jitter_deg))
        half = 0.5 * cls.contact_gap_mm * np.array(
            [np.cos(angle), np.sin(angle)])
        centers = [center - half, center + half]
    margin = 3.0
    for c in centers:
        c = np.clip(c, margin, [geom.width_mm - margin,
                                geom.height_mm - margin])
        if cls.slide_mm > 0:
            a = rng.uniform(0, 2 * np.pi)
            off = cls.slide_mm * np.array([np.cos(a), np.sin(a)])
            deformations.append(skin.Slide(tuple(c), depth, cls.radius_mm,
                                           tuple(off)))
        else:
            deformations.append(skin.Press(tuple(c), depth, cls.radius_mm))
    return deformations


@dataclass
class Dataset:
    """Shuffled windows; the first `n_train` are the training split."""

    windows: np.ndarray  # (N, 24, 60) float32
    labels: np.ndarray   # (N,) uint8
    n_train: int
    class_names: tuple[str, ...]

    @property
    def train(self) -> tuple[np.ndarray, np.ndarray]:
        return self.windows[:self.n_train], self.labels[:self.n_train]

    @property
    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.windows[self.n_train:], self.labels[self.n_train:]


def build_dataset(classes=DEFAULT_CLASSES, per_class: int = 200,
                  seed: int = 0, geom: skin.SkinGeometry | None = None,
                  noise: NoiseModel | None = None,
                  train_fraction: float = 0.7) -> Dataset:
    """Generate per-class grasp windows, shuffle, split 70/30.

    Split size is floor(train_fraction * N); with the defaults this is
    2400 windows split 1680/720.
    """
    if per_class <= 0:
        raise ValueError("per_class must be >= 1")
    if len(classes) != 12:
        raise ValueError(f"expected 12 classes, got {len(classes)}")
    geom = geom or skin.SkinGeometry()
    noise = noise or NoiseModel(rng_seed=seed)
    film = skin.make_film(geom)
    rng = np.random.default_rng(seed)

    n = len(classes) * per_class
    windows = np.empty((n, N_CHANNELS, DEFAULT_STEPS), dtype=np.float32)
    labels = np.empty(n, dtype=np.uint8)
    i = 0
    for label, cls in enumerate(classes):
        for _ in range(per_class):
            grasp = sample_grasp(cls, geom, rng)
            w = acquire_window(grasp_schedule(grasp), geom, film,
                               noise=noise, noise_index=i, label=label)
            windows[i] = w.data
            labels[i] = label
            i += 1

    order = rng.permutation(n)
    return Dataset(windows[order], labels[order],
                   n_train=int(np.floor(train_fraction * n)),
                   class_names=tuple(c.name for c in classes))


# ---------------------------------------------------------------------------
# Dataset files (little-endian throughout)

def save_dataset(path, dataset: Dataset) -> None:
    n, channels, steps = dataset.windows.shape
    with open(path, "wb") as f:
        f.write(DATASET_MAGIC)
        f.write(struct.pack("<HIHH", DATASET_VERSION, n, channels, steps))
        for i in range(n):
            label = dataset.labels[i] if dataset.labels is not None else UNLABELED
            f.write(struct.pack("<B", int(label)))
            f.write(dataset.windows[i].astype("<f4").tobytes())


def load_dataset(path, train_fraction: float = 0.7) -> Dataset:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != DATASET_MAGIC:
            raise ValueError(f"bad dataset magic {magic!r}")
        version, n, channels, steps = struct.unpack("<HIHH", f.read(10))
        if version != DATASET_VERSION:
            raise ValueError(f"unsupported dataset version {version}")
        windows = np.empty((n, channels, steps), dtype=np.float32)
        labels = np.empty(n, dtype=np.uint8)
        for i in range(n):
            labels[i] = struct.unpack("<B", f.read(1))[0]
            windows[i] = np.frombuffer(
                f.read(4 * channels * steps), dtype="<f4"
            ).reshape(channels, steps)
    return Dataset(windows, labels, n_train=int(np.floor(train_fraction * n)),
                   class_names=tuple(c.name for c in DEFAULT_CLASSES))
