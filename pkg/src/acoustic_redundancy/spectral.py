"""Time-domain windows to magnitude spectra, octave-band levels and SPL.

Samples are pressures in pascals. Levels are dB re 20 uPa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import AlignmentError, DegenerateInputError, FFTSizeError, UnresolvableBandError

PREF = 20e-6

NOMINAL_CENTERS = (31.5, 63.0, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0, 16000.0)


@dataclass(frozen=True)
class SampleBlock:
    """One channel's samples for one analysis window.

    ``n_valid`` is the number of real samples before any zero padding; the
    band-level calibration divides by it rather than by the padded length.
    """

    samples: np.ndarray
    sample_rate: int
    channel_id: int = 1
    window_gain: float = 1.0
    power_gain: float = 1.0
    n_valid: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.n_valid is None:
            object.__setattr__(self, "n_valid", len(self.samples))


@dataclass(frozen=True)
class MagnitudeSpectrum:
    bins: np.ndarray
    bin_hz: float
    window_gain: float = 1.0
    power_gain: float = 1.0
    fft_size: int = 0
    n_valid: int = 0

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=float)
        object.__setattr__(self, "bins", bins)
        if not self.fft_size:
            object.__setattr__(self, "fft_size", max(2 * (len(bins) - 1), 1))
        if not self.n_valid:
            object.__setattr__(self, "n_valid", self.fft_size)

    @property
    def frequencies(self):
        return np.arange(len(self.bins)) * self.bin_hz


def _exact_center(nominal):
    # Nominal centers (31.5, 63, ...) are labels for the base-2 series 1000 * 2**k.
    return 1000.0 * 2.0 ** round(math.log2(nominal / 1000.0))


@dataclass(frozen=True)
class OctaveBands:
    """Octave bands labelled by nominal center frequency.

    Edges come from the exact base-2 midband frequencies so that adjacent
    bands share an edge; 31.5 Hz spans 22.10 to 44.19 Hz.
    """

    centers: tuple
    edges: tuple = field(default=())

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        object.__setattr__(self, "centers", centers)
        if not self.edges:
            r2 = math.sqrt(2.0)
            edges = tuple((_exact_center(c) / r2, _exact_center(c) * r2) for c in centers)
            object.__setattr__(self, "edges", edges)

    @classmethod
    def default(cls):
        return cls(NOMINAL_CENTERS)

    def select(self, centers):
        """Subset of these bands, by nominal center."""
        wanted = [float(c) for c in centers]
        missing = [c for c in wanted if c not in self.centers]
        if missing:
            raise ValueError(f"unknown band centers: {missing}")
        keep = [i for i, c in enumerate(self.centers) if c in wanted]
        return OctaveBands(tuple(self.centers[i] for i in keep), tuple(self.edges[i] for i in keep))

    @property
    def highest_edge(self):
        return max(hi for _, hi in self.edges)

    def __len__(self):
        return len(self.centers)


def overall_level(levels_db):
    """Energy sum of band levels, in dB.

    Shifted by the largest level so a single band comes back unchanged and
    equal bands sum without rounding drift.
    """
    levels = np.asarray(levels_db, dtype=float)
    if levels.size == 0:
        return -math.inf
    top = float(np.max(levels))
    if top == -math.inf:
        return -math.inf
    return top + 10.0 * math.log10(float(np.sum(10.0 ** ((levels - top) / 10.0))))


@dataclass(frozen=True)
class BandLevels:
    levels_db: np.ndarray
    overall_db: float
    channel_id: int = 1
    centers: tuple = NOMINAL_CENTERS

    @classmethod
    def from_levels(cls, levels_db, channel_id=1, centers=NOMINAL_CENTERS):
        levels = np.asarray(levels_db, dtype=float)
        return cls(levels, overall_level(levels), channel_id, tuple(centers))


def spl_db(p_rms, pref=PREF):
    """Sound pressure level of an RMS pressure."""
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.asarray(p_rms, dtype=float) / pref)


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n):
    if n <= 1:
        return 1
    return 1 << (int(n) - 1).bit_length()


def hann_taper(n):
    if n < 2:
        raise DegenerateInputError(f"Hann window needs at least 2 samples, got {n}")
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / (n - 1)))


def hann_window(block: SampleBlock) -> SampleBlock:
    """Symmetric Hann taper; records its coherent and power gains."""
    taper = hann_taper(len(block.samples))
    return replace(
        block,
        samples=block.samples * taper,
        window_gain=float(np.mean(taper)),
        power_gain=float(np.mean(taper**2)),
    )


def zero_pad(block: SampleBlock, size: int) -> SampleBlock:
    n = len(block.samples)
    if size < n:
        raise FFTSizeError(f"cannot pad {n} samples down to {size}")
    padded = np.zeros(size)
    padded[:n] = block.samples
    return replace(block, samples=padded, n_valid=block.n_valid)


def fft(x):
    """Radix-2 decimation-in-time FFT over the last axis."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise FFTSizeError(f"FFT length must be a power of two, got {n}")
    lead = x.shape[:-1]
    # Column c of the (m, n/m) view holds the DFT of the stride-(n/m) subsequence x[c::n/m].
    out = x.reshape(-1, 1, n)
    m = 1
    while m < n:
        half = out.shape[2] // 2
        even = out[:, :, :half]
        odd = out[:, :, half:] * np.exp(-1j * np.pi * np.arange(m) / m)[None, :, None]
        merged = np.empty((out.shape[0], 2 * m, half), dtype=complex)
        np.add(even, odd, out=merged[:, :m])
        np.subtract(even, odd, out=merged[:, m:])
        out = merged
        m *= 2
    return out.reshape(*lead, n)


def rfft(x):
    """One-sided DFT of real input (n/2 + 1 bins) via a half-length complex FFT."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise FFTSizeError(f"FFT length must be a power of two, got {n}")
    if n == 1:
        return x.astype(complex)
    h = n // 2
    z = fft(x[..., 0::2] + 1j * x[..., 1::2])
    zr = np.conj(np.roll(z[..., ::-1], 1, axis=-1))
    even = 0.5 * (z + zr)
    odd = -0.5j * (z - zr)
    out = np.empty(x.shape[:-1] + (h + 1,), dtype=complex)
    out[..., :h] = even + np.exp(-2j * np.pi * np.arange(h) / n) * odd
    out[..., h] = even[..., 0] - odd[..., 0]
    return out


def one_sided_magnitudes(x):
    """Folded magnitudes: DC and Nyquist as-is, interior bins doubled."""
    mags = np.abs(rfft(x))
    n = np.shape(x)[-1]
    if n > 1:
        mags[..., 1 : n // 2] *= 2.0
    return mags


def fft_magnitude(block: SampleBlock) -> MagnitudeSpectrum:
    n = len(block.samples)
    if not is_power_of_two(n):
        raise FFTSizeError(f"FFT length must be a power of two, got {n}")
    return MagnitudeSpectrum(
        bins=one_sided_magnitudes(block.samples),
        bin_hz=block.sample_rate / n,
        window_gain=block.window_gain,
        power_gain=block.power_gain,
        fft_size=n,
        n_valid=block.n_valid,
    )


def bin_powers(spec: MagnitudeSpectrum):
    """Mean-square pressure carried by each one-sided bin.

    Normalised by the taper's power gain so that broadband and tonal
    content both sum to the time-domain mean square (Parseval).
    """
    amp = calibrated_amplitudes(spec)
    power = amp**2 / 2.0
    power[0] *= 2.0
    if spec.fft_size > 1 and len(power) == spec.fft_size // 2 + 1:
        power[-1] *= 2.0
    return power


def calibrated_amplitudes(spec: MagnitudeSpectrum):
    """Bin magnitudes in pascals of equivalent sinusoid amplitude."""
    scale = math.sqrt(spec.fft_size * spec.n_valid * spec.power_gain)
    return spec.bins / scale


def band_bin_masks(freqs, bands: OctaveBands):
    return [(freqs >= lo) & (freqs < hi) for lo, hi in bands.edges]


def band_powers(spec: MagnitudeSpectrum, bands: OctaveBands):
    if spec.bin_hz <= 0:
        raise DegenerateInputError("bin spacing must be positive")
    power = bin_powers(spec)
    masks = band_bin_masks(spec.frequencies, bands)
    empty = [c for c, m in zip(bands.centers, masks) if not m.any()]
    if empty:
        raise UnresolvableBandError(empty, spec.bin_hz)
    return np.array([power[m].sum() for m in masks])


def band_levels(spec: MagnitudeSpectrum, bands: OctaveBands | None = None, pref: float = PREF, channel_id: int = 1) -> BandLevels:
    bands = bands or OctaveBands.default()
    power = band_powers(spec, bands)
    with np.errstate(divide="ignore"):
        levels = 10.0 * np.log10(power / pref**2)
    return BandLevels.from_levels(levels, channel_id, bands.centers)


@dataclass(frozen=True)
class SampleFrame:
    """Time-aligned samples of all channels for one window (channels x samples)."""

    start_s: float
    samples: np.ndarray
    sample_rate: int

    @property
    def n_channels(self):
        return self.samples.shape[0]

    def block(self, index) -> SampleBlock:
        return SampleBlock(self.samples[index], self.sample_rate, channel_id=index + 1)


def frame_stream(signal: Sequence, sample_rate: int, window_s: float = 0.5, hop_s: float | None = None) -> list:
    """Tile a multichannel signal into time-aligned windows.

    A window holds round(window_s * sample_rate) samples; a trailing partial
    window is dropped.
    """
    if hop_s is None:
        hop_s = window_s
    channels = [np.asarray(ch, dtype=float) for ch in signal]
    if not channels:
        return []
    lengths = {len(ch) for ch in channels}
    if len(lengths) != 1:
        raise AlignmentError(f"channel lengths differ: {sorted(lengths)}")
    data = np.vstack(channels)
    n = data.shape[1]
    width = int(round(window_s * sample_rate))
    hop = int(round(hop_s * sample_rate))
    if width < 2 or hop < 1:
        raise DegenerateInputError(f"window of {width} samples / hop of {hop} samples is too short")
    if n < width:
        return []
    count = (n - width) // hop + 1
    return [SampleFrame(i * hop / sample_rate, data[:, i * hop : i * hop + width], sample_rate) for i in range(count)]


def frame_band_levels(frame: SampleFrame, bands: OctaveBands | None = None, fft_size: int | None = None, calibration_scale: float = 1.0, pref: float = PREF) -> list:
    """Hann, zero-pad to a power of two, FFT, and band levels for every channel."""
    bands = bands or OctaveBands.default()
    width = frame.samples.shape[1]
    size = fft_size or next_power_of_two(width)
    taper = hann_taper(width)
    window_gain, power_gain = float(np.mean(taper)), float(np.mean(taper**2))
    padded = np.zeros((frame.n_channels, size))
    padded[:, :width] = frame.samples * calibration_scale * taper
    mags = one_sided_magnitudes(padded)
    out = []
    for ch in range(frame.n_channels):
        spec = MagnitudeSpectrum(mags[ch], frame.sample_rate / size, window_gain, power_gain, size, width)
        out.append(band_levels(spec, bands, pref, channel_id=ch + 1))
    return out
