"""Glue between waveforms, band levels and the voter."""

from __future__ import annotations

from dataclasses import dataclass, field

from .redundancy import MultichannelFrame, Status, VoterConfig, run_pipeline
from .simulator import SCENARIO_WINDOW_S, paper_scenario, scenario_waveform
from .spectral import PREF, OctaveBands, frame_band_levels, frame_stream


def analyze_signal(signal, sample_rate, window_s=0.5, hop_s=None, bands=None, calibration_scale=1.0, pref=PREF):
    """Waveform (channels x samples) to one MultichannelFrame per window."""
    bands = bands or OctaveBands.default()
    frames = []
    for frame in frame_stream(signal, sample_rate, window_s, hop_s):
        levels = frame_band_levels(frame, bands, calibration_scale=calibration_scale, pref=pref)
        frames.append(MultichannelFrame(frame.start_s, tuple(levels)))
    return frames


def vote_signal(signal, sample_rate, voter=None, **analysis):
    return run_pipeline(analyze_signal(signal, sample_rate, **analysis), voter or VoterConfig())


@dataclass
class TimelineCheck:
    mismatches: list = field(default_factory=list)
    unreliable_windows: list = field(default_factory=list)
    missing_windows: int = 0

    @property
    def passed(self):
        return not self.mismatches and not self.unreliable_windows and not self.missing_windows


def compare_timeline(reports, expected, tolerance_windows=1):
    """Check produced statuses against an expected timeline.

    A mismatch at window w is forgiven when the produced status is what the
    timeline expects within ``tolerance_windows`` of w, i.e. a fault edge
    landing one window early or late.
    """
    check = TimelineCheck(missing_windows=abs(len(reports) - len(expected)))
    for w, (report, row) in enumerate(zip(reports, expected)):
        if report.unreliable:
            check.unreliable_windows.append(report.start_s)
        got = report.statuses
        for c, want in enumerate(row):
            have = got[c] if c < len(got) else None
            if have == want:
                continue
            lo, hi = max(0, w - tolerance_windows), min(len(expected), w + tolerance_windows + 1)
            if any(expected[v][c] == have for v in range(lo, hi)):
                continue
            check.mismatches.append((report.start_s, c + 1, str(want), str(have)))
    return check


@dataclass
class ScenarioResult:
    index: int
    faults: tuple
    reports: list
    expected: list
    check: TimelineCheck
    signal: object = None

    @property
    def passed(self):
        return self.check.passed

    def flagged(self):
        """(channel, status, first window start) for every channel ever flagged."""
        seen = {}
        for report in self.reports:
            for v in report.verdicts:
                if v.status is not Status.GOOD and v.channel_id not in seen:
                    seen[v.channel_id] = (v.status, report.start_s)
        return [(ch, status, start) for ch, (status, start) in sorted(seen.items())]


def run_scenario(index, voter=None, mode="waveform", seed=0, jitter_db=1.0, sample_rate=48000, tolerance_windows=1):
    """Run one built-in scenario end to end and grade it."""
    voter = voter or VoterConfig()
    signal = None
    if mode == "waveform":
        signal, faults, expected = scenario_waveform(index, sample_rate, seed, jitter_db)
        frames = analyze_signal(signal, sample_rate, SCENARIO_WINDOW_S)
    elif mode == "bands":
        scenario = paper_scenario(index, seed, jitter_db)
        faults, frames, expected = scenario.faults, scenario.frames, scenario.expected
    else:
        raise ValueError(f"mode must be 'waveform' or 'bands', got {mode!r}")
    reports = run_pipeline(frames, voter)
    return ScenarioResult(index, faults, reports, expected, compare_timeline(reports, expected, tolerance_windows), signal)
