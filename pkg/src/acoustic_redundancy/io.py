"""Recordings in, reports out, and the key=value config format."""

from __future__ import annotations

import csv
import enum
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .redundancy import VoterConfig
from .simulator import FaultSpec, SpectrumProfile
from .spectral import NOMINAL_CENTERS, OctaveBands

REPORT_COLUMNS = ("start_s", "channel", "status", "max_dev_db", "exceed_count", "masked_overall_db")
CONSENSUS_COLUMNS = ("start_s", "consensus_overall_db", "n_good", "bad_channels", "unreliable", "error")
TIMELINE_COLUMNS = ("start_s", "channel", "status")
FAULT_COLUMNS = ("channel", "gain", "start_s", "end_s")

STEP_TOLERANCE = 1e-6


class Layout(str, enum.Enum):
    CSV = "CsvTimeSeries"
    WAV = "WavMultichannel"


@dataclass
class Recording:
    signal: np.ndarray
    sample_rate: int
    layout: Layout = Layout.CSV
    path: Path | None = None

    @property
    def n_channels(self):
        return self.signal.shape[0]

    def __iter__(self):
        return iter((self.signal, self.sample_rate))


def _number(text, line, path, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r} in column {column}", line, path) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r} in column {column}", line, path)
    return value


def read_csv(path) -> Recording:
    """Read ``time_s,ch1,...,chN`` rows; the sample rate comes from the time step."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1, path) from None
        expected = ["time_s"] + [f"ch{i}" for i in range(1, len(header))]
        if len(header) < 2 or header != expected:
            raise ParseError(f"header must be {','.join(expected[:2])},...,chN; got {','.join(header)}", 1, path)
        width = len(header)
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", line, path)
            rows.append([_number(cell, line, path, header[i]) for i, cell in enumerate(row)])
    if len(rows) < 2:
        raise ParseError("need at least two data rows to infer the sample rate", None, path)
    data = np.array(rows)
    steps = np.diff(data[:, 0])
    step = float(np.median(steps))
    if step <= 0:
        raise ParseError("time column is not increasing", None, path)
    bad = np.flatnonzero((steps <= 0) | (np.abs(steps - step) > STEP_TOLERANCE * step))
    if bad.size:
        # steps[i] ends at data row i + 1, which is file line i + 3
        raise ParseError(f"non-uniform or non-increasing time step ({steps[bad[0]]:.9g} s vs {step:.9g} s)", int(bad[0]) + 3, path)
    rate = 1.0 / step
    if abs(rate - round(rate)) > STEP_TOLERANCE * rate:
        raise ParseError(f"time step {step:.12g} s does not give an integer sample rate", None, path)
    return Recording(np.ascontiguousarray(data[:, 1:].T), int(round(rate)), Layout.CSV, path)


def write_csv(path, signal, sample_rate):
    """Write samples with 9 significant digits; times carry full precision."""
    signal = np.atleast_2d(np.asarray(signal, dtype=float))
    n_channels, n = signal.shape
    times = np.arange(n) / sample_rate
    header = ",".join(["time_s"] + [f"ch{i}" for i in range(1, n_channels + 1)])
    table = np.column_stack([times, signal.T])
    fmt = ["%.17g"] + ["%.9g"] * n_channels
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        np.savetxt(fh, table, fmt=fmt, delimiter=",", header=header, comments="")


def read_wav(path, calibration_scale=1.0) -> Recording:
    """Linear PCM (16/24/32-bit int) or 32-bit float WAV, at least 3 channels.

    Integer samples are normalised to [-1, 1), then multiplied by
    ``calibration_scale`` (pascals per full scale).
    """
    from scipy.io import wavfile

    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise ParseError(f"unsupported WAV: {exc}", None, path) from None
    if data.ndim == 1 or data.shape[1] < 3:
        n = 1 if data.ndim == 1 else data.shape[1]
        raise ParseError(f"need at least 3 channels, got {n}", None, path)
    # scipy returns 24-bit PCM left-justified in int32
    scales = {np.dtype(np.int16): 2.0**15, np.dtype(np.int32): 2.0**31}
    if data.dtype in scales:
        samples = data.astype(float) / scales[data.dtype]
    elif data.dtype == np.float32:
        samples = data.astype(float)
    else:
        raise ParseError(f"unsupported sample format {data.dtype}", None, path)
    return Recording(np.ascontiguousarray(samples.T) * calibration_scale, int(rate), Layout.WAV, path)


def write_wav(path, signal, sample_rate, bits=24, full_scale=1.0):
    """Write a multichannel PCM (16/24/32-bit) or float32 (bits=-32) WAV.

    ``signal`` (channels x samples) is divided by ``full_scale`` first.
    """
    data = np.atleast_2d(np.asarray(signal, dtype=float)).T / full_scale
    n_frames, n_channels = data.shape
    if bits == -32:
        payload = data.astype("<f4").tobytes()
        fmt_tag, width = 3, 4
    elif bits in (16, 24, 32):
        top = 2 ** (bits - 1)
        ints = np.ascontiguousarray(np.clip(np.round(data * top), -top, top - 1).astype("<i4"))
        width = bits // 8
        # low `width` bytes of each little-endian int32
        payload = ints.view(np.uint8).reshape(-1, 4)[:, :width].tobytes()
        fmt_tag = 1
    else:
        raise ValueError(f"unsupported bit depth {bits}")
    block = n_channels * width
    fmt_chunk = struct.pack("<HHIIHH", fmt_tag, n_channels, int(sample_rate), int(sample_rate) * block, block, width * 8)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + 8 + len(fmt_chunk) + 8 + len(payload)) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload)


def read_recording(path, calibration_scale=1.0) -> Recording:
    path = Path(path)
    if path.suffix.lower() == ".wav":
        return read_wav(path, calibration_scale)
    rec = read_csv(path)
    if calibration_scale != 1.0:
        rec = replace(rec, signal=rec.signal * calibration_scale)
    return rec


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6f}"
    return str(value)


def consensus_path(path):
    path = Path(path)
    return path.with_name(f"{path.stem}_consensus{path.suffix or '.csv'}")


def write_report(reports, path):
    """Per-(window, channel) verdict CSV plus a per-window consensus sidecar.

    Returns the two paths written.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            for v, masked in zip(report.verdicts, report.masked_overall):
                writer.writerow([_fmt(float(report.start_s)), v.channel_id, v.status.value, _fmt(v.max_dev_db), v.exceed_count, _fmt(float(masked))])
    side = consensus_path(path)
    with open(side, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CONSENSUS_COLUMNS)
        for report in reports:
            n_good = sum(1 for v in report.verdicts if not v.status.is_bad)
            bad = " ".join(str(c) for c in report.bad_channels)
            writer.writerow([_fmt(float(report.start_s)), _fmt(float(report.consensus_overall_db)), n_good, bad, int(report.unreliable), report.error or ""])
    return path, side


def write_series(reports, path):
    """Overall level per channel before and after masking, one row per window."""
    n = max((len(r.masked_overall) for r in reports), default=0)
    header = ["start_s"] + [f"ch{i}_in_db" for i in range(1, n + 1)] + [f"ch{i}_out_db" for i in range(1, n + 1)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in reports:
            overall = r.overall_db or (math.nan,) * n
            writer.writerow([_fmt(float(r.start_s))] + [_fmt(float(x)) for x in overall] + [_fmt(float(x)) for x in r.masked_overall])
    return Path(path)


def read_table(path):
    """Rows of a CSV written by this module, as dicts of strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_timeline(path, starts, timeline):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMELINE_COLUMNS)
        for start, row in zip(starts, timeline):
            for c, status in enumerate(row, start=1):
                writer.writerow([_fmt(float(start)), c, str(status)])
    return Path(path)


def write_faults(path, faults):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FAULT_COLUMNS)
        for f in faults:
            writer.writerow([f.channel_id, repr(float(f.gain)), repr(float(f.start_s)), repr(float(f.end_s))])
    return Path(path)


@dataclass(frozen=True)
class RunConfig:
    voter: VoterConfig = field(default_factory=VoterConfig)
    window_s: float = 0.5
    hop_s: float = 0.5
    bands: OctaveBands = field(default_factory=OctaveBands.default)
    calibration_scale: float = 1.0
    scenario: int | None = None
    profile: str | None = None
    seed: int = 0
    jitter_db: float = 1.0

    def __post_init__(self):
        if not self.window_s > 0:
            raise ConfigError("window_s", f"must be positive, got {self.window_s}")
        if not 0 < self.hop_s <= self.window_s:
            raise ConfigError("hop_s", f"must satisfy 0 < hop_s <= window_s ({self.window_s}), got {self.hop_s}")
        if not self.calibration_scale > 0:
            raise ConfigError("calibration_scale", f"must be positive, got {self.calibration_scale}")
        if self.jitter_db < 0:
            raise ConfigError("jitter_db", f"must be >= 0, got {self.jitter_db}")
        if self.scenario is not None and self.scenario not in range(1, 6):
            raise ConfigError("scenario", f"must be 1..5, got {self.scenario}")


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _centers(text):
    return tuple(float(c) for c in text.split(",") if c.strip())


# key -> (target, attribute, parser)
CONFIG_KEYS = {
    "threshold_db": ("voter", "threshold_db", float),
    "min_bands": ("voter", "min_bands", int),
    "max_faulty": ("voter", "max_faulty", int),
    "debounce": ("voter", "debounce_windows", int),
    "floor_db": ("voter", "floor_db", _optional_float),
    "max_spread_db": ("voter", "max_spread_db", _optional_float),
    "window_s": ("run", "window_s", float),
    "hop_s": ("run", "hop_s", float),
    "bands": ("run", "bands", _centers),
    "calibration_scale": ("run", "calibration_scale", float),
    "scenario": ("run", "scenario", int),
    "profile": ("run", "profile", str),
    "seed": ("run", "seed", int),
    "jitter_db": ("run", "jitter_db", float),
}


def _key_values(text, path=None):
    """(line, key, value) triples from key=value text with # comments."""
    out = []
    for line, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ParseError(f"expected key=value, got {content!r}", line, path)
        key, value = (part.strip() for part in content.split("=", 1))
        out.append((line, key, value))
    return out


def parse_config_text(text, n_channels=6, path=None) -> RunConfig:
    voter_kw, run_kw = {}, {}
    seen_hop = False
    for line, key, value in _key_values(text, path):
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"unknown key (line {line})")
        target, attr, parse = CONFIG_KEYS[key]
        try:
            parsed = parse(value)
        except ValueError:
            raise ConfigError(key, f"cannot parse {value!r} (line {line})") from None
        if isinstance(parsed, float) and not math.isfinite(parsed):
            raise ConfigError(key, f"must be finite, got {value!r}")
        if key == "bands":
            try:
                parsed = OctaveBands.default().select(parsed)
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        seen_hop |= key == "hop_s"
        (voter_kw if target == "voter" else run_kw)[attr] = parsed
    if "window_s" in run_kw and not seen_hop:
        run_kw["hop_s"] = run_kw["window_s"]
    voter = VoterConfig(**voter_kw)
    voter.check_channels(n_channels)
    return RunConfig(voter=voter, **run_kw)


def parse_config(path, n_channels=6) -> RunConfig:
    """Read a key=value config file; absent keys take their defaults."""
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), n_channels, path)


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for key, (target, attr, _) in CONFIG_KEYS.items():
        value = getattr(cfg.voter if target == "voter" else cfg, attr)
        if key == "bands":
            value = ",".join(f"{c:g}" for c in value.centers)
        elif value is None:
            if key in ("scenario", "profile"):
                continue
            value = "none"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


PROFILE_KEYS = ("name", "duration_s", "band_db", "band_targets_db", "bands", "fault")


def read_profile(path):
    """Spectrum profile and optional faults from a key=value file.

    ``band_db`` sets every band to one level, ``band_targets_db`` lists them
    per band; ``fault=channel,gain,start_s,end_s`` may repeat.
    """
    path = Path(path)
    name, duration, centers = path.stem, 10.0, NOMINAL_CENTERS
    flat, targets, faults = None, None, []
    for line, key, value in _key_values(path.read_text(encoding="utf-8"), path):
        try:
            if key == "name":
                name = value
            elif key == "duration_s":
                duration = float(value)
            elif key == "band_db":
                flat = float(value)
            elif key == "band_targets_db":
                targets = tuple(float(v) for v in value.split(","))
            elif key == "bands":
                centers = OctaveBands.default().select(_centers(value)).centers
            elif key == "fault":
                ch, gain, start, end = value.split(",")
                faults.append(FaultSpec(int(ch), float(gain), float(start), float(end)))
            else:
                raise ConfigError(key, f"unknown profile key (line {line})")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(key, f"{exc} (line {line})") from None
    if targets is None:
        targets = (140.0 if flat is None else flat,) * len(centers)
    try:
        profile = SpectrumProfile(name, targets, duration, centers)
    except ValueError as exc:
        raise ConfigError("band_targets_db", str(exc)) from None
    for f in faults:
        if f.end_s > duration:
            raise ConfigError("fault", f"fault on channel {f.channel_id} ends after the profile duration {duration} s")
    return profile, tuple(faults)
