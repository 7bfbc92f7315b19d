"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line, printed immediately and again in the
terminal summary.
"""

import math
import time

import numpy as np
import pytest

from acoustic_redundancy.cli import main
from acoustic_redundancy.pipeline import analyze_signal, run_scenario
from acoustic_redundancy.redundancy import MultichannelFrame, Status, VoterConfig, run_pipeline, vote_window
from acoustic_redundancy.simulator import TEST_PROFILES, SpectrumProfile, Tier, synth_band_levels, synth_waveform
from acoustic_redundancy.spectral import PREF, BandLevels, OctaveBands, SampleBlock, fft, fft_magnitude, frame_band_levels, frame_stream, spl_db

from conftest import ACCEPTANCE
from oracles import brute_dft, brute_one_sided

GOLDEN = {
    1: {5: (Status.BAD_LOW, 4.0)},
    2: {2: (Status.BAD_HIGH, 2.5)},
    3: {6: (Status.BAD_LOW, 3.5)},
    4: {2: (Status.BAD_HIGH, 2.5), 5: (Status.BAD_LOW, 4.0)},
    5: {2: (Status.BAD_LOW, 1.0), 6: (Status.BAD_LOW, 3.5)},
}
WINDOW_S = 0.5


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}"
    ACCEPTANCE[number] = (ok, line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def golden_results():
    started = time.perf_counter()
    results = {i: run_scenario(i) for i in GOLDEN}
    return results, time.perf_counter() - started


def _scenario_errors(result, expected):
    errors = []
    for w, report in enumerate(result.reports):
        for v in report.verdicts:
            want = Status.GOOD
            if v.channel_id in expected:
                status, onset = expected[v.channel_id]
                if report.start_s >= onset:
                    want = status
                if abs(report.start_s - onset) <= WINDOW_S and v.status in (Status.GOOD, status):
                    continue
            if v.status is not want:
                errors.append(f"t={report.start_s:g} ch{v.channel_id} {v.status.value}!={want.value}")
        if report.unreliable:
            errors.append(f"t={report.start_s:g} unreliable")
    return errors


def test_golden_scenarios(golden_results):
    results, _ = golden_results
    errors = {i: _scenario_errors(results[i], GOLDEN[i]) for i in GOLDEN}
    # wall-clock of the whole command, figures excluded
    started = time.perf_counter()
    code = main(["verify-scenarios", "--no-plots"])
    elapsed = time.perf_counter() - started
    bad = {i: e[:3] for i, e in errors.items() if e}
    ok = not bad and code == 0 and elapsed < 5.0
    record(1, "golden scenarios", ok, f"{5 - len(bad)}/5 match within one window, exit {code}, {elapsed:.2f} s (limit 5 s) {bad or ''}".rstrip())


def test_masking_exact(golden_results):
    results, _ = golden_results
    problems = []
    for i, result in results.items():
        for report in result.reports:
            for c, v in enumerate(report.verdicts):
                masked, raw = report.masked_overall[c], report.overall_db[c]
                if v.status.is_bad and masked != 0.0:
                    problems.append(f"s{i} t={report.start_s:g} ch{c + 1} flagged but {masked}")
                if not v.status.is_bad and masked != raw:
                    problems.append(f"s{i} t={report.start_s:g} ch{c + 1} masked while Good")
    flagged = sum(v.status.is_bad for r in results.values() for rep in r.reports for v in rep.verdicts)
    record(2, "masking", not problems and flagged > 0, f"{flagged} flagged channel-windows all exactly 0.0, no clean channel masked {problems[:3] or ''}".rstrip())


def _trial(rng, n_faults, cfg):
    levels = 140.0 + rng.uniform(-1.0, 1.0, (6, 10))
    channels = rng.choice(6, size=n_faults, replace=False)
    expected = [Status.GOOD] * 6
    for ch in channels:
        magnitude = rng.uniform(cfg.threshold_db + 1.0, 30.0)
        sign = rng.choice((-1.0, 1.0))
        levels[ch] += sign * magnitude
        expected[ch] = Status.BAD_HIGH if sign > 0 else Status.BAD_LOW
    return vote_window(MultichannelFrame.from_matrix(0.0, levels), cfg), expected


def test_breakdown_property():
    cfg = VoterConfig()
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    few_wrong = 0
    for t in range(500):
        report, expected = _trial(rng, t % 3, cfg)
        if list(report.statuses) != expected or report.unreliable:
            few_wrong += 1
    flagged = silent = 0
    for _ in range(500):
        report, expected = _trial(rng, 3, cfg)
        if report.unreliable:
            flagged += 1
        elif list(report.statuses) != expected:
            silent += 1
    elapsed = time.perf_counter() - started
    ok = few_wrong == 0 and flagged >= 475 and silent == 0 and elapsed < 30.0
    record(
        3,
        "breakdown property",
        ok,
        f"<=2 faults {500 - few_wrong}/500 exact; 3 faults flagged {flagged}/500 (need 475), silently wrong {silent}; {elapsed:.2f} s",
    )


def test_spectral_oracle():
    rng = np.random.default_rng(11)
    worst_mag = worst_parseval = 0.0
    failures = 0
    for n in (2, 4, 8, 16, 32, 64):
        for _ in range(100):
            x = rng.normal(size=n) * rng.uniform(0.1, 1e3)
            got = fft_magnitude(SampleBlock(x, 48000)).bins
            want = np.array(brute_one_sided(list(x)))
            scale = max(1.0, want.max())
            err = np.abs(got - want) / np.maximum(np.abs(want), scale)
            worst_mag = max(worst_mag, float(err.max()))
            full = np.array(brute_dft(list(x)))
            if not np.allclose(fft(x), full, rtol=1e-9, atol=1e-9 * np.abs(full).max()):
                failures += 1
            energy = float(np.sum(x**2))
            spectral = float(np.sum(np.abs(fft(x)) ** 2)) / n
            worst_parseval = max(worst_parseval, abs(energy - spectral) / energy)
    ok = worst_mag <= 1e-9 and worst_parseval <= 1e-9 and failures == 0
    record(4, "spectral oracle", ok, f"600 signals, worst magnitude rel err {worst_mag:.1e}, worst Parseval rel err {worst_parseval:.1e}, complex mismatches {failures}")


def test_spl_arithmetic():
    overall = BandLevels.from_levels([146.0] * 10).overall_db
    zero = float(spl_db(PREF))
    rng = np.random.default_rng(5)
    x = rng.normal(size=(3, 24000))
    bands = OctaveBands.default()
    base = np.array([b.levels_db for b in frame_band_levels(frame_stream(x, 48000, 0.5)[0], bands)])
    doubled = np.array([b.levels_db for b in frame_band_levels(frame_stream(2.0 * x, 48000, 0.5)[0], bands)])
    shift = float(np.max(np.abs(doubled - base - 20 * math.log10(2))))
    ok = abs(overall - 156.0) <= 1e-9 and zero == 0.0 and shift <= 1e-9
    record(5, "SPL arithmetic", ok, f"10x146 dB -> {overall!r} dB; 20 uPa -> {zero!r} dB; gain x2 worst band error {shift:.1e} dB")


def test_waveform_round_trip():
    profile = SpectrumProfile.flat(140.0, duration_s=2.0)
    signal = synth_waveform(profile, n_channels=6, sample_rate=48000, seed=3)
    frames = analyze_signal(signal, 48000, 0.5)
    levels = np.array([f.levels for f in frames])
    worst = float(np.max(np.abs(levels - 140.0)))
    record(6, "waveform round-trip", worst <= 0.5, f"{levels.size} band readings at 140 dB, worst error {worst:.2e} dB (limit 0.5)")


def _invariance_counts(n_cases=200):
    rng = np.random.default_rng(99)
    counts = dict.fromkeys(("common-mode", "permutation", "seed determinism", "monotone threshold"), 0)

    def jittered():
        levels = 140.0 + rng.uniform(-1.0, 1.0, (6, 10))
        for ch in rng.choice(6, size=rng.integers(0, 3), replace=False):
            levels[ch] += rng.uniform(-20, 20)
        return levels

    for _ in range(n_cases):
        levels = jittered()
        a = vote_window(MultichannelFrame.from_matrix(0.0, levels))
        b = vote_window(MultichannelFrame.from_matrix(0.0, levels + rng.uniform(-60, 60)))
        counts["common-mode"] += a.statuses == b.statuses and np.allclose(a.deviations_db, b.deviations_db, atol=1e-9)

        perm = rng.permutation(6)
        c = vote_window(MultichannelFrame.from_matrix(0.0, levels[perm]))
        counts["permutation"] += c.statuses == tuple(a.statuses[p] for p in perm)

        low = rng.uniform(0.1, 10)
        strict = vote_window(MultichannelFrame.from_matrix(0.0, levels), VoterConfig(threshold_db=low))
        loose = vote_window(MultichannelFrame.from_matrix(0.0, levels), VoterConfig(threshold_db=low + rng.uniform(0, 10)))
        counts["monotone threshold"] += all(not (s is Status.GOOD and l is not Status.GOOD) for s, l in zip(strict.statuses, loose.statuses))

    profile = SpectrumProfile.flat(140.0, duration_s=1.0)
    for seed in range(n_cases):
        one = run_pipeline(synth_band_levels(profile, seed=seed))
        two = run_pipeline(synth_band_levels(profile, seed=seed))
        counts["seed determinism"] += [r.statuses for r in one] == [r.statuses for r in two] and all(
            np.array_equal(p.deviations_db, q.deviations_db) for p, q in zip(one, two)
        )
    return counts


def test_invariance_suite():
    counts = _invariance_counts(200)
    ok = all(v == 200 for v in counts.values())
    record(7, "invariance suite", ok, ", ".join(f"{k} {v}/200" for k, v in counts.items()))


def test_tier_presets():
    got = {t.value: (p.max_overall_db, p.durations_s) for t, p in TEST_PROFILES.items()}
    want = {"Qualification": (156.0, (120.0,)), "Acceptance": (153.0, (60.0, 90.0)), "LowLevel": (150.0, (30.0,))}
    spectra_ok = all(abs(TEST_PROFILES[t].spectrum().overall_db - TEST_PROFILES[t].max_overall_db) <= 1e-9 for t in Tier)
    record(8, "test-profile presets", got == want and spectra_ok, "; ".join(f"{k} {v[0]:g} dB / {'/'.join(f'{d:g}' for d in v[1])} s" for k, v in got.items()))
