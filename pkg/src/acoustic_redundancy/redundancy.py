"""Cross-channel voting: median reference, per-channel verdicts, masking."""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, RedundancyError, ShapeError
from .spectral import NOMINAL_CENTERS, BandLevels, overall_level


class Status(str, enum.Enum):
    GOOD = "Good"
    BAD_LOW = "BadLow"
    BAD_HIGH = "BadHigh"

    def __str__(self):
        return self.value

    @property
    def is_bad(self):
        return self is not Status.GOOD


@dataclass(frozen=True)
class MultichannelFrame:
    """Band levels of every channel for one analysis window."""

    start_s: float
    channels: tuple

    def __post_init__(self):
        channels = tuple(self.channels)
        object.__setattr__(self, "channels", channels)
        if len(channels) < 3:
            raise ShapeError(f"voting needs at least 3 channels, got {len(channels)}")
        first = channels[0]
        for ch in channels[1:]:
            if tuple(ch.centers) != tuple(first.centers) or len(ch.levels_db) != len(first.levels_db):
                raise ShapeError(f"channel {ch.channel_id} band set differs from channel {first.channel_id}")

    @classmethod
    def from_matrix(cls, start_s, levels_db, centers=None, channel_ids=None):
        """Build from an (N channels x B bands) dB matrix."""
        levels = np.asarray(levels_db, dtype=float)
        ids = channel_ids or range(1, levels.shape[0] + 1)
        if centers is None:
            centers = NOMINAL_CENTERS if levels.shape[1] == len(NOMINAL_CENTERS) else tuple(float(i) for i in range(levels.shape[1]))
        return cls(start_s, tuple(BandLevels.from_levels(row, cid, centers) for row, cid in zip(levels, ids)))

    @property
    def levels(self):
        return np.vstack([ch.levels_db for ch in self.channels])

    @property
    def n_channels(self):
        return len(self.channels)

    @property
    def channel_ids(self):
        return tuple(ch.channel_id for ch in self.channels)

    @property
    def centers(self):
        return self.channels[0].centers


@dataclass(frozen=True)
class VoterConfig:
    """Voting thresholds.

    ``floor_db`` is an optional absolute floor: bands below it count as low
    exceedances regardless of the cross-channel reference.

    ``max_spread_db`` bounds how far apart the channels left Good may sit in
    any band (default: ``threshold_db``). A wider spread means the median was
    dragged by an undetected majority of faults, so the window is marked
    unreliable even when few channels were flagged.
    """

    threshold_db: float = 3.0
    min_bands: int = 1
    max_faulty: int = 2
    debounce_windows: int = 1
    floor_db: float | None = None
    max_spread_db: float | None = None

    def __post_init__(self):
        if not self.threshold_db > 0:
            raise ConfigError("threshold_db", f"must be positive, got {self.threshold_db}")
        if self.min_bands < 1:
            raise ConfigError("min_bands", f"must be >= 1, got {self.min_bands}")
        if self.max_faulty < 0:
            raise ConfigError("max_faulty", f"must be >= 0, got {self.max_faulty}")
        if self.debounce_windows < 1:
            raise ConfigError("debounce", f"must be >= 1, got {self.debounce_windows}")
        if self.max_spread_db is not None and not self.max_spread_db > 0:
            raise ConfigError("max_spread_db", f"must be positive, got {self.max_spread_db}")

    @property
    def spread_limit(self):
        return self.threshold_db if self.max_spread_db is None else self.max_spread_db

    def check_channels(self, n_channels):
        """Reject ``max_faulty`` beyond the median's breakdown point for N channels."""
        limit = (n_channels - 1) // 2
        if self.max_faulty > limit:
            raise ConfigError("max_faulty", f"{self.max_faulty} exceeds the breakdown point {limit} for {n_channels} channels")


@dataclass(frozen=True)
class ChannelVerdict:
    channel_id: int
    status: Status
    exceed_count: int
    max_dev_db: float


@dataclass(frozen=True)
class VoteReport:
    start_s: float
    verdicts: tuple
    reference_db: np.ndarray
    deviations_db: np.ndarray
    masked_overall: tuple
    consensus_overall_db: float
    unreliable: bool = False
    raw_statuses: tuple = ()
    overall_db: tuple = ()
    error: str | None = None

    @property
    def statuses(self):
        return tuple(v.status for v in self.verdicts)

    @property
    def bad_channels(self):
        return tuple(v.channel_id for v in self.verdicts if v.status.is_bad)


def reference_estimate(frame: MultichannelFrame):
    """Per-band median across channels (mean of the two middle values for even N)."""
    return np.median(frame.levels, axis=0)


def deviations(frame: MultichannelFrame, reference):
    levels = frame.levels
    reference = np.asarray(reference, dtype=float)
    if reference.shape != (levels.shape[1],):
        raise ShapeError(f"reference has {reference.shape} bands, frame has {levels.shape[1]}")
    return levels - reference


def classify_channel(dev_row, cfg: VoterConfig, channel_id: int = 1, levels_db=None) -> ChannelVerdict:
    dev = np.asarray(dev_row, dtype=float)
    exceeding = np.abs(dev) > cfg.threshold_db
    if cfg.floor_db is not None and levels_db is not None:
        below = np.asarray(levels_db, dtype=float) < cfg.floor_db
        exceeding = exceeding | below
    else:
        below = np.zeros_like(exceeding)
    count = int(exceeding.sum())
    max_dev = float(dev[np.argmax(np.abs(dev))]) if dev.size else 0.0
    if count < cfg.min_bands:
        status = Status.GOOD
    else:
        negative = int(((dev < 0) | below)[exceeding].sum())
        status = Status.BAD_LOW if negative > count - negative else Status.BAD_HIGH
    return ChannelVerdict(channel_id, status, count, max_dev)


def _consensus(overall, good):
    chosen = [o for o, g in zip(overall, good) if g]
    if not chosen:
        return math.nan
    # energy mean of the good channels
    return overall_level(chosen) - 10.0 * math.log10(len(chosen))


def _good_spread(levels, good):
    rows = levels[np.asarray(good, dtype=bool)]
    if len(rows) < 2:
        return 0.0
    with np.errstate(invalid="ignore"):
        spread = np.nanmax(rows.max(axis=0) - rows.min(axis=0))
    return float(spread)


def vote_window(frame: MultichannelFrame, cfg: VoterConfig | None = None, history: Sequence = ()) -> VoteReport:
    """Vote one window.

    ``history`` holds raw statuses of up to ``debounce_windows - 1`` preceding
    windows, oldest first. A channel is reported bad only when it was raw-bad
    in all of them and in this window.
    """
    cfg = cfg or VoterConfig()
    cfg.check_channels(frame.n_channels)
    reference = reference_estimate(frame)
    dev = deviations(frame, reference)
    levels = frame.levels
    raw = [classify_channel(dev[i], cfg, cid, levels[i]) for i, cid in enumerate(frame.channel_ids)]

    recent = list(history)[-(cfg.debounce_windows - 1):] if cfg.debounce_windows > 1 else []
    verdicts = []
    for i, v in enumerate(raw):
        confirmed = len(recent) == cfg.debounce_windows - 1 and all(
            i < len(past) and Status(past[i]).is_bad for past in recent
        )
        if v.status.is_bad and not confirmed:
            v = ChannelVerdict(v.channel_id, Status.GOOD, v.exceed_count, v.max_dev_db)
        verdicts.append(v)

    overall = tuple(ch.overall_db for ch in frame.channels)
    good = [v.status is Status.GOOD for v in verdicts]
    masked = tuple(o if g else 0.0 for o, g in zip(overall, good))
    n_bad = len(good) - sum(good)
    spread = _good_spread(levels, good)
    return VoteReport(
        start_s=frame.start_s,
        verdicts=tuple(verdicts),
        reference_db=reference,
        deviations_db=dev,
        masked_overall=masked,
        consensus_overall_db=_consensus(overall, good),
        unreliable=n_bad > cfg.max_faulty or spread > cfg.spread_limit,
        raw_statuses=tuple(v.status for v in raw),
        overall_db=overall,
    )


def _failed_report(frame, exc):
    n = len(getattr(frame, "channels", ()))
    return VoteReport(
        start_s=getattr(frame, "start_s", math.nan),
        verdicts=(),
        reference_db=np.array([]),
        deviations_db=np.empty((n, 0)),
        masked_overall=(0.0,) * n,
        consensus_overall_db=math.nan,
        unreliable=True,
        error=str(exc),
    )


def run_pipeline(frames: Sequence[MultichannelFrame], cfg: VoterConfig | None = None) -> list:
    """Vote every window in order, threading the debounce history.

    A window that fails comes back as an unreliable report carrying the
    error message; later windows are still voted.
    """
    cfg = cfg or VoterConfig()
    history = deque(maxlen=max(cfg.debounce_windows - 1, 0))
    reports = []
    for frame in frames:
        try:
            report = vote_window(frame, cfg, tuple(history))
        except RedundancyError as exc:
            reports.append(_failed_report(frame, exc))
            continue
        if history.maxlen:
            history.append(report.raw_statuses)
        reports.append(report)
    return reports
