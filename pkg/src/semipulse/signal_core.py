"""Frequency-domain and correlation math for pulse waveforms.

Spectral power is evaluated by direct projection onto cosine/sine probes at
the per-BPM class frequencies, not by a padded FFT: the probe grid then lands
exactly on the heart-rate classes and the whole map stays linear in the
signal, hence differentiable. Signals are mean-centered before projection so
DC never leaks into the lowest class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    ConstantSignal,
    DegenerateSignal,
    LengthMismatch,
    NonFiniteInput,
)

# Slack added to the peak-window comparison so a class mathematically at
# exactly delta_f from the peak is never dropped by float rounding.
FREQ_TOLERANCE_HZ = 1e-9

# Denominator floor used when a power vector is normalized to a distribution.
NORMALIZE_EPS = 1e-12


@dataclass(frozen=True)
class BvpSignal:
    """A sampled pulse waveform: `samples` at `fps` frames per second."""

    samples: np.ndarray
    fps: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.shape[0] < 2:
            raise ValueError("signal must be 1-D with at least 2 samples")
        if not self.fps > 0:
            raise ValueError("fps must be positive")

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class BandConfig:
    """Heart-rate band [f_low, f_high] Hz, split into one class per BPM.

    `n_classes` is derived from the band width; with the defaults
    (0.67-3 Hz) there are 141 classes and class c sits at (40 + c)/60 Hz,
    i.e. class 0 is 40 BPM and class 140 is 180 BPM. `delta_f` is the
    half-width of the peak window used by the signal-to-noise ratio.
    """

    f_low: float = 0.67
    f_high: float = 3.0
    delta_f: float = 0.1
    n_classes: int = field(init=False)

    def __post_init__(self):
        if not (0 < self.f_low < self.f_high):
            raise ValueError("need 0 < f_low < f_high")
        if not self.delta_f > 0:
            raise ValueError("delta_f must be positive")
        object.__setattr__(
            self, "n_classes", int(round((self.f_high - self.f_low) * 60.0)) + 1
        )

    @property
    def bpm_low(self) -> int:
        return int(round(self.f_low * 60.0))

    def class_freqs(self) -> np.ndarray:
        """Probe frequency (Hz) of every class."""
        return _class_freqs(self)

    def bpm_of_class(self, class_index: int) -> int:
        return self.bpm_low + class_index

    def class_of_bpm(self, bpm: int) -> int:
        c = int(bpm) - self.bpm_low
        if not 0 <= c < self.n_classes:
            raise ValueError(f"{bpm} BPM is outside the {self.bpm_low}-"
                             f"{self.bpm_low + self.n_classes - 1} BPM band")
        return c


DEFAULT_BAND = BandConfig()


@dataclass(frozen=True)
class PsdDistribution:
    """Spectral power per heart-rate class, with the class frequencies."""

    power: np.ndarray
    class_freqs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "power", np.asarray(self.power, dtype=np.float64))
        object.__setattr__(
            self, "class_freqs", np.asarray(self.class_freqs, dtype=np.float64)
        )
        if self.power.shape != self.class_freqs.shape:
            raise ValueError("power and class_freqs must align")


@dataclass(frozen=True)
class HrClass:
    """A heart-rate class index and its BPM value."""

    class_index: int
    bpm: int


@lru_cache(maxsize=None)
def _class_freqs(band: BandConfig) -> np.ndarray:
    freqs = (band.bpm_low + np.arange(band.n_classes, dtype=np.float64)) / 60.0
    freqs.setflags(write=False)
    return freqs


@lru_cache(maxsize=32)
def probe_bank(band: BandConfig, n_samples: int, fps: float):
    """Cosine and sine probe matrices, shape (n_classes, n_samples) each.

    A mean-centered signal x maps to per-class power
    (cos_bank @ x)**2 + (sin_bank @ x)**2. Shared by the plain path here and
    the differentiable path in the loss code so the two agree bitwise.
    """
    phase = 2.0 * np.pi * np.outer(_class_freqs(band), np.arange(n_samples) / fps)
    cos_bank = np.cos(phase)
    sin_bank = np.sin(phase)
    cos_bank.setflags(write=False)
    sin_bank.setflags(write=False)
    return cos_bank, sin_bank


def _checked_samples(signal: BvpSignal) -> np.ndarray:
    x = signal.samples
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("signal contains NaN or Inf samples")
    return x


def psd_probe(signal: BvpSignal, band: BandConfig = DEFAULT_BAND) -> PsdDistribution:
    """Per-class spectral power of `signal` over the heart-rate band.

    power[c] = A_c**2 + B_c**2 with A_c = sum_t x_t cos(2 pi f_c t / fps)
    and B_c the sine projection, after mean-centering x. Frequencies outside
    the band are never represented.

    Raises NonFiniteInput on NaN/Inf samples and DegenerateSignal when the
    signal is constant (its centered spectrum would be identically zero).
    """
    x = _checked_samples(signal)
    if np.ptp(x) == 0.0:
        raise DegenerateSignal("constant signal has an all-zero spectrum")
    centered = x - x.mean()
    cos_bank, sin_bank = probe_bank(band, len(x), float(signal.fps))
    a = cos_bank @ centered
    b = sin_bank @ centered
    return PsdDistribution(a * a + b * b, band.class_freqs())


def hr_class_of(signal: BvpSignal, band: BandConfig = DEFAULT_BAND) -> HrClass:
    """Heart-rate class of the strongest spectral peak (ties go low)."""
    psd = psd_probe(signal, band)
    peak = int(np.argmax(psd.power))
    if psd.power[peak] <= 0.0:
        raise DegenerateSignal("no positive power in the band")
    return HrClass(peak, band.bpm_of_class(peak))


def snr(psd: PsdDistribution, band: BandConfig = DEFAULT_BAND) -> float:
    """Fraction of band power concentrated within delta_f of the peak.

    The peak is the band argmax (ties to the lower class); the window is
    truncated at the band edges rather than wrapped, since power outside the
    band was already discarded as noise.
    """
    total = float(psd.power.sum())
    if total <= 0.0:
        raise DegenerateSignal("zero total band power")
    peak = int(np.argmax(psd.power))
    peak_freq = psd.class_freqs[peak]
    window = np.abs(psd.class_freqs - peak_freq) <= band.delta_f + FREQ_TOLERANCE_HZ
    return float(psd.power[window].sum()) / total


def ipr(
    signal: BvpSignal,
    band: BandConfig = DEFAULT_BAND,
    full_grid_step: float = 1.0 / 60.0,
) -> float:
    """Fraction of total spectral power that falls outside the band.

    The spectrum is probed on a grid covering 0 Hz to fps/2: below and above
    the band the grid uses `full_grid_step` (default 1/60 Hz, matching the
    class spacing), and inside the band the probe points are exactly the
    class frequencies.
    """
    if not full_grid_step > 0:
        raise ValueError("full_grid_step must be positive")
    x = _checked_samples(signal)
    if np.ptp(x) == 0.0:
        raise DegenerateSignal("constant signal has zero total power")
    centered = x - x.mean()
    class_freqs = band.class_freqs()
    low = np.arange(0.0, class_freqs[0] - FREQ_TOLERANCE_HZ, full_grid_step)
    nyquist = signal.fps / 2.0
    high = np.arange(
        class_freqs[-1] + full_grid_step, nyquist + FREQ_TOLERANCE_HZ, full_grid_step
    )
    grid = np.concatenate([low, class_freqs, high])
    phase = 2.0 * np.pi * np.outer(grid, np.arange(len(x)) / signal.fps)
    power = (np.cos(phase) @ centered) ** 2 + (np.sin(phase) @ centered) ** 2
    total = float(power.sum())
    if total <= 0.0:
        raise DegenerateSignal("zero total power on the probe grid")
    in_band = float(power[len(low):len(low) + band.n_classes].sum())
    return (total - in_band) / total


def pearson_r(a: BvpSignal, b: BvpSignal) -> float:
    """Pearson correlation coefficient of two equal-length waveforms."""
    xa = _checked_samples(a)
    xb = _checked_samples(b)
    if len(xa) != len(xb):
        raise LengthMismatch(f"lengths differ: {len(xa)} vs {len(xb)}")
    da = xa - xa.mean()
    db = xb - xb.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        raise ConstantSignal("Pearson correlation needs non-constant signals")
    return float(da @ db) / (np.sqrt(va) * np.sqrt(vb))
