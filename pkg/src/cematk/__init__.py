"""Correlation electromagnetic analysis toolkit for the PRESENT cipher.

Library layout:

* :mod:`cematk.present` — PRESENT-80/128 with round-reduced execution
* :mod:`cematk.leakage` — Hamming weight/distance and the affine model
* :mod:`cematk.simulate` — seeded synthesis of EM-like trace sets
* :mod:`cematk.dsp` — FFT, zero-phase bandpass, alignment, spectral diff
* :mod:`cematk.attack` — hypothesis matrices, Pearson surfaces, ranking
* :mod:`cematk.evaluate` — success curves and leakage probability tables
* :mod:`cematk.traceio` — the .cemt binary trace format
* :mod:`cematk.cli` — the ``cematk`` command-line front end
"""

from .attack import (AttackResult, CorrelationSurface, HypothesisMatrix,
                     KeyRanking, attack_round_key, build_hypotheses,
                     correlate, pearson, rank_keys, recover_full_key)
from .dsp import (SpectralDiffReport, Spectrum, align, average, bandpass,
                  fft_magnitude, spectral_diff)
from .errors import (AmbiguousKeyError, CematkError, ConfigError,
                     TraceFileError, TraceFileLengthError,
                     TraceFileMagicError, TraceFileVersionError)
from .evaluate import (LeakageReport, SuccessCurve, collect_trial_rankings,
                       guessing_entropy, leakage_probability_report,
                       run_trials)
from .leakage import (Intermediate, LeakParams, hamming_distance,
                      hamming_weight, leak_energy, round1_intermediate_byte)
from .present import (KeyRegister, decrypt_block, encrypt_block,
                      encrypt_rounds, key_schedule, p_layer, sbox, sbox_inv,
                      sbox_layer)
from .simulate import (SimConfig, Trace, TraceSet, default_config,
                       default_sweep_plaintexts, simulate_idle_set,
                       simulate_set, simulate_trace)
from .traceio import read_traceset, write_traceset

__version__ = "0.1.0"
