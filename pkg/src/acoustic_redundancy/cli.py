"""Command line: simulate, analyze, verify-scenarios.

Exit codes: 0 success, 1 scenario verification failed, 2 usage or input
error, 3 at least one window was consensus-unreliable.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import io
from .errors import RedundancyError
from .pipeline import run_scenario, vote_signal
from .simulator import SCENARIO_DURATION_S, SCENARIO_WINDOW_S, apply_faults, expected_timeline, scenario_waveform, synth_waveform, window_starts

log = logging.getLogger("acoustic_redundancy")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_UNRELIABLE = 3


def _load_config(path, n_channels=6):
    return io.parse_config(path, n_channels) if path else io.RunConfig()


def _describe(faults):
    return "; ".join(f"ch{f.channel_id} {f.expected_status.value} from {f.start_s:g} s" for f in faults) or "no faults"


def cmd_simulate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.scenario is not None:
        signal, faults, timeline = scenario_waveform(args.scenario, args.sample_rate, args.seed, args.jitter_db)
        starts = window_starts(SCENARIO_DURATION_S, SCENARIO_WINDOW_S)
    else:
        profile, faults = io.read_profile(args.profile)
        signal = synth_waveform(profile, args.channels, args.sample_rate, args.seed, args.jitter_db)
        signal = apply_faults(signal, faults, args.sample_rate)
        starts = window_starts(profile.duration_s, SCENARIO_WINDOW_S)
        timeline = expected_timeline(faults, starts, args.channels)
    io.write_csv(out / "input.csv", signal, args.sample_rate)
    io.write_faults(out / "faults.csv", faults)
    io.write_timeline(out / "expected_timeline.csv", starts, timeline)
    print(f"wrote {out / 'input.csv'} ({signal.shape[0]} channels, {signal.shape[1]} samples at {args.sample_rate} Hz)")
    print(f"expected: {_describe(faults)}")
    return EXIT_OK


def cmd_analyze(args):
    cfg = _load_config(args.config)
    rec = io.read_recording(args.input, cfg.calibration_scale)
    if rec.n_channels < 3:
        raise RedundancyError(f"{args.input}: voting needs at least 3 channels, got {rec.n_channels}")
    cfg.voter.check_channels(rec.n_channels)
    reports = vote_signal(rec.signal, rec.sample_rate, cfg.voter, window_s=cfg.window_s, hop_s=cfg.hop_s, bands=cfg.bands)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_report(reports, out / "report.csv")
    io.write_series(reports, out / "series.csv")
    if not args.no_plots:
        from .plotting import plot_report_pair

        plot_report_pair(reports, out, title=Path(args.input).name)
    unreliable = [r.start_s for r in reports if r.unreliable]
    flagged = sorted({(v.channel_id, v.status.value) for r in reports for v in r.verdicts if v.status.is_bad})
    print(f"{len(reports)} windows, {rec.n_channels} channels")
    for ch, status in flagged:
        first = min(r.start_s for r in reports if any(v.channel_id == ch and v.status.value == status for v in r.verdicts))
        print(f"  ch{ch} {status} from {first:g} s")
    if unreliable:
        print(f"consensus unreliable in {len(unreliable)} window(s), first at {unreliable[0]:g} s")
        return EXIT_UNRELIABLE
    return EXIT_OK


def cmd_verify_scenarios(args):
    cfg = _load_config(args.config)
    voter = cfg.voter if args.threshold_db is None else replace(cfg.voter, threshold_db=args.threshold_db)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    passed = 0
    started = time.perf_counter()
    rows = []
    for index in range(1, 6):
        result = run_scenario(index, voter, mode=args.mode, seed=args.seed, jitter_db=cfg.jitter_db)
        verdict = "PASS" if result.passed else "FAIL"
        passed += result.passed
        got = "; ".join(f"ch{ch} {status.value} from {start:g} s" for ch, status, start in result.flagged()) or "nothing flagged"
        print(f"scenario {index}: {verdict}  expected [{_describe(result.faults)}]  got [{got}]")
        if not result.passed:
            for start, ch, want, have in result.check.mismatches[:5]:
                print(f"    t={start:g} s ch{ch}: expected {want}, got {have}")
            if result.check.unreliable_windows:
                print(f"    consensus unreliable in {len(result.check.unreliable_windows)} window(s)")
        rows.append((index, verdict, _describe(result.faults), got))
        if out:
            io.write_report(result.reports, out / f"scenario{index}_report.csv")
            if not args.no_plots:
                from .plotting import plot_report_pair

                plot_report_pair(result.reports, out, stem=f"scenario{index}_", title=f"scenario {index}")
    if out:
        with open(out / "verify_summary.csv", "w", encoding="utf-8") as fh:
            fh.write("scenario,result,expected,flagged\n")
            for index, verdict, want, got in rows:
                fh.write(f'{index},{verdict},"{want}","{got}"\n')
    log.info("verified in %.2f s", time.perf_counter() - started)
    print(f"{passed}/5 PASS")
    return EXIT_OK if passed == 5 else EXIT_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="acoustic-redundancy", description="Six-channel acoustic redundancy management.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    sim = sub.add_parser("simulate", help="synthesise a multichannel recording with scripted faults")
    source = sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", type=int, choices=range(1, 6), metavar="{1..5}")
    source.add_argument("--profile", help="key=value profile file")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--sample-rate", type=int, default=48000)
    sim.add_argument("--jitter-db", type=float, default=1.0)
    sim.add_argument("--channels", type=int, default=6, help="channel count for --profile runs")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="vote a recorded CSV or WAV file")
    ana.add_argument("--input", required=True)
    ana.add_argument("--config")
    ana.add_argument("--out", required=True)
    ana.add_argument("--no-plots", action="store_true")
    ana.set_defaults(func=cmd_analyze)

    ver = sub.add_parser("verify-scenarios", help="run the five built-in fault scenarios")
    ver.add_argument("--out")
    ver.add_argument("--config")
    ver.add_argument("--threshold-db", type=float)
    ver.add_argument("--mode", choices=("waveform", "bands"), default="waveform")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--no-plots", action="store_true")
    ver.set_defaults(func=cmd_verify_scenarios)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RedundancyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
