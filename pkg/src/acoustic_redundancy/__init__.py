"""Redundancy management for multichannel acoustic test measurements.

Octave-band spectra of N microphones (six by default) are compared against
their per-band median; channels outside a dB threshold are flagged low or
high and masked to zero.
"""

from .errors import RedundancyError
from .io import read_recording
from .pipeline import analyze_signal, run_scenario, vote_signal
from .redundancy import (
    ChannelVerdict,
    MultichannelFrame,
    Status,
    VoteReport,
    VoterConfig,
    classify_channel,
    deviations,
    reference_estimate,
    run_pipeline,
    vote_window,
)
from .simulator import (
    TEST_PROFILES,
    FaultSpec,
    SpectrumProfile,
    TestProfile,
    Tier,
    inject_fault,
    paper_scenario,
    synth_band_levels,
    synth_waveform,
)
from .spectral import (
    BandLevels,
    MagnitudeSpectrum,
    OctaveBands,
    SampleBlock,
    band_levels,
    fft_magnitude,
    frame_stream,
    hann_window,
)

__version__ = "0.1.0"
