"""Synthetic chamber data with scripted channel faults.

Two modes share one fault model: band-level frames (fast, for exercising the
voter) and multichannel waveforms (for the full FFT path).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import AliasingError, ScenarioError
from .redundancy import MultichannelFrame, Status
from .spectral import NOMINAL_CENTERS, PREF, BandLevels, OctaveBands, overall_level

SILENCE_FLOOR_DB = -80.0
NOMINAL_BAND_DB = 140.0
LOW_FAULT_GAIN = 0.25
HIGH_FAULT_GAIN = 2.0


@dataclass(frozen=True)
class SpectrumProfile:
    name: str
    band_targets_db: tuple
    duration_s: float = 10.0
    centers: tuple = NOMINAL_CENTERS

    def __post_init__(self):
        object.__setattr__(self, "band_targets_db", tuple(float(v) for v in self.band_targets_db))
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        if len(self.band_targets_db) != len(self.centers):
            raise ValueError(f"{len(self.band_targets_db)} band targets for {len(self.centers)} bands")
        if not self.duration_s > 0:
            raise ValueError(f"duration must be positive, got {self.duration_s}")

    @property
    def overall_db(self):
        return overall_level(self.band_targets_db)

    @property
    def bands(self):
        return OctaveBands(self.centers)

    @classmethod
    def flat(cls, band_db=NOMINAL_BAND_DB, duration_s=10.0, name="flat", centers=NOMINAL_CENTERS):
        return cls(name, (band_db,) * len(centers), duration_s, centers)


class Tier(str, enum.Enum):
    QUALIFICATION = "Qualification"
    ACCEPTANCE = "Acceptance"
    LOW_LEVEL = "LowLevel"


@dataclass(frozen=True)
class TestProfile:
    __test__ = False

    tier: Tier
    max_overall_db: float
    durations_s: tuple

    @property
    def duration_s(self):
        """Longest nominal duration of the tier."""
        return max(self.durations_s)

    def spectrum(self, duration_s=None, centers=NOMINAL_CENTERS):
        """Flat spectrum whose overall level equals the tier maximum."""
        band_db = self.max_overall_db - 10.0 * math.log10(len(centers))
        return SpectrumProfile.flat(band_db, duration_s or self.duration_s, self.tier.value, centers)


TEST_PROFILES = {
    Tier.QUALIFICATION: TestProfile(Tier.QUALIFICATION, 156.0, (120.0,)),
    Tier.ACCEPTANCE: TestProfile(Tier.ACCEPTANCE, 153.0, (60.0, 90.0)),
    Tier.LOW_LEVEL: TestProfile(Tier.LOW_LEVEL, 150.0, (30.0,)),
}


@dataclass(frozen=True)
class FaultSpec:
    """Gain applied to one channel over [start_s, end_s).

    gain < 1 is a low fault, gain > 1 a high fault, gain == 0 a dropout.
    """

    channel_id: int
    gain: float
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.gain < 0 or not math.isfinite(self.gain):
            raise ValueError(f"fault gain must be finite and >= 0, got {self.gain}")
        if not 0 <= self.start_s < self.end_s:
            raise ValueError(f"fault interval must satisfy 0 <= start < end, got [{self.start_s}, {self.end_s})")

    @property
    def expected_status(self):
        if self.gain < 1.0:
            return Status.BAD_LOW
        if self.gain > 1.0:
            return Status.BAD_HIGH
        return Status.GOOD

    @property
    def offset_db(self):
        return 20.0 * math.log10(self.gain) if self.gain > 0 else -math.inf


def window_starts(duration_s, window_s):
    count = int(math.floor(duration_s / window_s + 1e-9))
    return [i * window_s for i in range(count)]


def synth_band_levels(profile: SpectrumProfile, n_channels: int = 6, jitter_db: float = 1.0, seed: int = 0, window_s: float = 0.5) -> list:
    """Band-level frames: target plus uniform jitter in [-jitter_db, +jitter_db]."""
    if jitter_db < 0:
        raise ValueError(f"jitter must be >= 0, got {jitter_db}")
    rng = np.random.default_rng(seed)
    targets = np.asarray(profile.band_targets_db)
    frames = []
    for start in window_starts(profile.duration_s, window_s):
        shape = (n_channels, len(targets))
        noise = rng.uniform(-jitter_db, jitter_db, size=shape) if jitter_db else np.zeros(shape)
        frames.append(MultichannelFrame.from_matrix(start, targets + noise, profile.centers))
    return frames


def _band_tones(lo, hi, spacing, margin):
    first = math.ceil((lo + margin) / spacing)
    last = math.ceil((hi - margin) / spacing) - 1
    if last < first:
        # band narrower than the margins: a single tone at its geometric center
        return np.array([spacing * max(1, round(math.sqrt(lo * hi) / spacing))])
    return spacing * np.arange(first, last + 1)


def synth_waveform(
    profile: SpectrumProfile,
    n_channels: int = 6,
    sample_rate: int = 48000,
    seed: int = 0,
    jitter_db: float = 0.0,
    window_s: float = 0.5,
) -> np.ndarray:
    """Shaped multisine noise, one independent realisation per channel.

    Each band is a sum of equal-amplitude random-phase tones spaced
    3 / window_s apart and kept 2 / window_s inside the band edges. That
    spacing keeps tones orthogonal under a Hann window of length window_s,
    so each analysed band reproduces its RMS target with little scatter.
    ``jitter_db`` offsets each channel's band targets by a fixed uniform
    amount, standing in for spatial non-uniformity of the field.
    """
    bands = profile.bands
    if sample_rate < 2 * bands.highest_edge:
        raise AliasingError(f"sample rate {sample_rate} Hz is below twice the top band edge ({bands.highest_edge:.1f} Hz)")
    period = max(1, round(sample_rate * window_s / 3))
    spacing = sample_rate / period
    margin = 2.0 / window_s
    n_samples = int(round(profile.duration_s * sample_rate))
    rng = np.random.default_rng(seed)
    targets = np.asarray(profile.band_targets_db)

    tones = [_band_tones(lo, hi, spacing, margin) for lo, hi in bands.edges]
    out = np.empty((n_channels, n_samples))
    for ch in range(n_channels):
        offsets = rng.uniform(-jitter_db, jitter_db, size=len(targets)) if jitter_db else np.zeros(len(targets))
        # one period of the multisine, built on the period's DFT grid
        spectrum = np.zeros(period // 2 + 1, dtype=complex)
        for freqs, level, off in zip(tones, targets, offsets):
            rms = PREF * 10.0 ** ((level + off) / 20.0)
            amp = math.sqrt(2.0 * rms**2 / len(freqs))
            k = np.rint(freqs / spacing).astype(int)
            phases = rng.uniform(0.0, 2.0 * np.pi, size=len(k))
            spectrum[k] += amp * period / 2.0 * np.exp(1j * phases)
        one_period = np.fft.irfft(spectrum, n=period)
        reps = -(-n_samples // period)
        out[ch] = np.tile(one_period, reps)[:n_samples]
    return out


def inject_fault(data, fault: FaultSpec, sample_rate: int | None = None, silence_floor_db: float = SILENCE_FLOOR_DB):
    """Apply one fault; returns a new object of the same shape.

    Frames: adds 20*log10(gain) dB to the channel's bands in every window whose
    start lies in [start_s, end_s); a zero gain drops the bands by
    ``silence_floor_db`` instead. Waveforms (channels x samples, needs
    ``sample_rate``): multiplies the samples in the interval by the gain.
    """
    if isinstance(data, np.ndarray):
        return _inject_waveform(data, fault, sample_rate)
    return _inject_frames(list(data), fault, silence_floor_db)


def _inject_frames(frames, fault, silence_floor_db):
    out = []
    for frame in frames:
        index = _channel_index(frame.channel_ids, fault.channel_id)
        if fault.start_s <= frame.start_s < fault.end_s and fault.gain != 1.0:
            ch = frame.channels[index]
            offset = fault.offset_db if fault.gain > 0 else silence_floor_db
            shifted = BandLevels.from_levels(ch.levels_db + offset, ch.channel_id, ch.centers)
            channels = frame.channels[:index] + (shifted,) + frame.channels[index + 1 :]
            frame = replace(frame, channels=channels)
        out.append(frame)
    return out


def _inject_waveform(signal, fault, sample_rate):
    if sample_rate is None:
        raise ValueError("waveform fault injection needs sample_rate")
    if not 1 <= fault.channel_id <= signal.shape[0]:
        raise ValueError(f"channel {fault.channel_id} not in 1..{signal.shape[0]}")
    duration = signal.shape[1] / sample_rate
    if fault.end_s > duration + 1e-9:
        raise ValueError(f"fault ends at {fault.end_s} s beyond signal end {duration} s")
    out = signal.copy()
    a = int(round(fault.start_s * sample_rate))
    b = int(round(fault.end_s * sample_rate))
    out[fault.channel_id - 1, a:b] *= fault.gain
    return out


def _channel_index(channel_ids, channel_id):
    try:
        return channel_ids.index(channel_id)
    except ValueError:
        raise ValueError(f"channel {channel_id} not in {channel_ids}") from None


def apply_faults(data, faults: Sequence[FaultSpec], sample_rate=None, silence_floor_db=SILENCE_FLOOR_DB):
    for fault in faults:
        data = inject_fault(data, fault, sample_rate, silence_floor_db)
    return data


def expected_timeline(faults: Sequence[FaultSpec], starts: Sequence[float], n_channels: int = 6) -> list:
    """Status each channel should receive in each window."""
    timeline = []
    for start in starts:
        row = [Status.GOOD] * n_channels
        for fault in faults:
            if fault.start_s <= start < fault.end_s:
                row[fault.channel_id - 1] = fault.expected_status
        timeline.append(tuple(row))
    return timeline


SCENARIO_DURATION_S = 10.0
SCENARIO_WINDOW_S = 0.5

# (channel, "low" | "high", start_s); every fault runs to the end of the record
_SCENARIOS = {
    1: ((5, "low", 4.0),),
    2: ((2, "high", 2.5),),
    3: ((6, "low", 3.5),),
    4: ((2, "high", 2.5), (5, "low", 4.0)),
    5: ((2, "low", 1.0), (6, "low", 3.5)),
}


@dataclass(frozen=True)
class Scenario:
    index: int
    faults: tuple
    frames: list
    expected: list

    @property
    def starts(self):
        return [f.start_s for f in self.frames]

    def __iter__(self):
        return iter((self.frames, self.expected))


def scenario_faults(index: int, low_gain: float = LOW_FAULT_GAIN, high_gain: float = HIGH_FAULT_GAIN) -> tuple:
    if index not in _SCENARIOS:
        raise ScenarioError(f"scenario must be one of {sorted(_SCENARIOS)}, got {index}")
    gains = {"low": low_gain, "high": high_gain}
    return tuple(FaultSpec(ch, gains[kind], start, SCENARIO_DURATION_S) for ch, kind, start in _SCENARIOS[index])


def paper_scenario(index: int, seed: int = 0, jitter_db: float = 1.0, low_gain: float = LOW_FAULT_GAIN, high_gain: float = HIGH_FAULT_GAIN) -> Scenario:
    """One of the five built-in six-channel fault cases, as band-level frames."""
    faults = scenario_faults(index, low_gain, high_gain)
    profile = SpectrumProfile.flat(duration_s=SCENARIO_DURATION_S, name=f"scenario-{index}")
    clean = synth_band_levels(profile, 6, jitter_db, seed, SCENARIO_WINDOW_S)
    frames = apply_faults(clean, faults)
    return Scenario(index, faults, frames, expected_timeline(faults, [f.start_s for f in frames], 6))


def scenario_waveform(index: int, sample_rate: int = 48000, seed: int = 0, jitter_db: float = 1.0, low_gain: float = LOW_FAULT_GAIN, high_gain: float = HIGH_FAULT_GAIN):
    """Waveform version of a scenario: (signal, faults, expected timeline)."""
    faults = scenario_faults(index, low_gain, high_gain)
    profile = SpectrumProfile.flat(duration_s=SCENARIO_DURATION_S, name=f"scenario-{index}")
    signal = synth_waveform(profile, 6, sample_rate, seed, jitter_db, SCENARIO_WINDOW_S)
    signal = apply_faults(signal, faults, sample_rate)
    starts = window_starts(SCENARIO_DURATION_S, SCENARIO_WINDOW_S)
    return signal, faults, expected_timeline(faults, starts, 6)
