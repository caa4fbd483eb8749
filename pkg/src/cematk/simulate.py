"""Seeded synthesis of EM-like trace sets under the affine HW leakage model.

Each simulated encryption trace is built from:

* a constant baseline ``b``,
* one rectangular pulse per state byte, placed at that byte's leak index,
  with amplitude ``a * HW(round-1 S-box output byte)`` and optionally
  modulated by a carrier sinusoid,
* i.i.d. Gaussian noise per sample,
* an optional per-repetition integer jitter of the whole leak pattern
  (clock-asynchronism countermeasure),

averaged over ``repetitions`` independent draws, mirroring an acquisition
that averages several encryption cycles per plaintext.

Randomness comes from one xoshiro256** substream per (trace, repetition),
keyed by (seed, trace_index, repetition); the first draw of every
substream is reserved for the jitter shift, the rest feed the Gaussian
noise. Traces are therefore reproducible bit-for-bit and independent of
generation order, and trace ``i`` of a set equals ``simulate_trace`` run
alone with ``trace_index=i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .leakage import HW8_TABLE, LeakParams
from .present import KeyRegister, SBOX_BYTE_TABLE, key_schedule
from .rng import Xoshiro256StarStar, stream_seed

DEFAULT_N_SAMPLES = 5000
DEFAULT_SAMPLE_RATE = 250e6
DEFAULT_CARRIER_FREQ = 45.08e6
DEFAULT_LEAK_INDICES = (500, 1000, 1500, 2000, 2500, 3000, 3500, 4000)
DEFAULT_LEAK_WIDTH = 40
DEFAULT_REPETITIONS = 5


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulated acquisition campaign."""

    key: KeyRegister
    seed: int
    n_samples: int = DEFAULT_N_SAMPLES
    sample_rate: float = DEFAULT_SAMPLE_RATE
    leak_params: LeakParams = field(default_factory=lambda: LeakParams(1.0, 0.0))
    noise_std: float = 0.0
    leak_indices: tuple = DEFAULT_LEAK_INDICES
    leak_width: int = DEFAULT_LEAK_WIDTH
    carrier_freq: Optional[float] = None
    jitter_max: int = 0
    repetitions: int = DEFAULT_REPETITIONS

    def __post_init__(self):
        object.__setattr__(self, "leak_indices", tuple(int(i) for i in self.leak_indices))
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if not (np.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ValueError("sample_rate must be positive")
        if not (np.isfinite(self.noise_std) and self.noise_std >= 0):
            raise ValueError("noise_std must be non-negative")
        if len(self.leak_indices) != 8:
            raise ValueError("leak_indices must list one position per state byte (8)")
        if self.leak_width < 1:
            raise ValueError("leak_width must be at least 1")
        if self.jitter_max < 0:
            raise ValueError("jitter_max must be non-negative")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if min(self.leak_indices) - self.jitter_max < 0:
            raise ValueError("leak pulses may be jittered below sample 0")
        if max(self.leak_indices) + self.leak_width + self.jitter_max > self.n_samples:
            raise ValueError("leak pulses may be jittered past the trace end")
        if self.carrier_freq is not None and not (
                0 < self.carrier_freq < self.sample_rate / 2):
            raise ValueError("carrier_freq must lie below the Nyquist frequency")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must be a 64-bit value")

    def summary(self) -> dict:
        """Key-free provenance record for a simulated set."""
        return {
            "n_samples": self.n_samples,
            "sample_rate": self.sample_rate,
            "gain": self.leak_params.a,
            "baseline": self.leak_params.b,
            "noise_std": self.noise_std,
            "leak_indices": list(self.leak_indices),
            "leak_width": self.leak_width,
            "carrier_freq": self.carrier_freq,
            "jitter_max": self.jitter_max,
            "repetitions": self.repetitions,
            "seed": self.seed,
        }


@dataclass
class Trace:
    """One sampled waveform with the plaintext that produced it."""

    samples: np.ndarray
    plaintext: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        self.plaintext = np.asarray(self.plaintext, dtype=np.uint8)
        if self.plaintext.shape != (8,):
            raise ValueError("plaintext must be 8 bytes")
        if not np.isfinite(self.samples).all():
            raise ValueError("trace samples must all be finite")


@dataclass
class TraceSet:
    """A matrix of equal-length traces plus per-trace plaintexts."""

    traces: np.ndarray
    plaintexts: np.ndarray
    sample_rate: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.traces = np.ascontiguousarray(self.traces, dtype=np.float32)
        self.plaintexts = np.ascontiguousarray(self.plaintexts, dtype=np.uint8)
        if self.traces.ndim != 2 or self.traces.shape[0] < 1:
            raise ValueError("traces must be a non-empty 2-D matrix")
        if self.plaintexts.shape != (self.traces.shape[0], 8):
            raise ValueError("plaintext rows must match trace rows")
        if not np.isfinite(self.traces).all():
            raise ValueError("trace samples must all be finite")

    @property
    def n_traces(self) -> int:
        return self.traces.shape[0]

    @property
    def n_samples(self) -> int:
        return self.traces.shape[1]

    def trace(self, i: int) -> Trace:
        return Trace(self.traces[i], self.plaintexts[i], self.sample_rate)


def default_sweep_plaintexts() -> list:
    """The default acquisition sweep: state i has every byte equal to i."""
    return [i * 0x0101010101010101 for i in range(256)]


def _states_to_bytes(plaintexts: Sequence[int]) -> np.ndarray:
    out = np.empty((len(plaintexts), 8), dtype=np.uint8)
    for i, p in enumerate(plaintexts):
        if not 0 <= p < (1 << 64):
            raise ValueError("plaintext must be a 64-bit value")
        out[i] = list(p.to_bytes(8, "big"))
    return out


def _leak_amplitudes(pt_bytes: np.ndarray, cfg: SimConfig) -> np.ndarray:
    """(n_traces, 8) leak amplitudes a*HW of the round-1 S-box output."""
    k1 = key_schedule(cfg.key)[0]
    k1_bytes = np.frombuffer(k1.to_bytes(8, "big"), dtype=np.uint8)
    inter = SBOX_BYTE_TABLE[pt_bytes ^ k1_bytes[None, :]]
    return cfg.leak_params.a * HW8_TABLE[inter].astype(np.float64)


def _leak_pattern(amps: np.ndarray, cfg: SimConfig) -> np.ndarray:
    """(n_traces, n_samples) float64 patterns without baseline or noise."""
    n = amps.shape[0]
    pattern = np.zeros((n, cfg.n_samples), dtype=np.float64)
    overlap = False
    spans = sorted((idx, idx + cfg.leak_width) for idx in cfg.leak_indices)
    for (a0, a1), (b0, _) in zip(spans, spans[1:]):
        if b0 < a1:
            overlap = True
    if overlap:
        warnings.warn("leak pulses overlap; attack byte positions will interfere",
                      stacklevel=3)
    for j, idx in enumerate(cfg.leak_indices):
        if cfg.carrier_freq is None:
            pulse = 1.0
        else:
            t = np.arange(idx, idx + cfg.leak_width, dtype=np.float64)
            pulse = np.sin(2.0 * np.pi * cfg.carrier_freq * t / cfg.sample_rate)
        pattern[:, idx:idx + cfg.leak_width] += amps[:, j:j + 1] * pulse
    return pattern


def _synthesize(pt_bytes: np.ndarray, cfg: SimConfig, trace_indices: np.ndarray,
                with_leaks: bool) -> np.ndarray:
    """Core synthesis: returns the (n, n_samples) float32 trace matrix."""
    n = pt_bytes.shape[0]
    reps = cfg.repetitions

    lane_traces = np.repeat(trace_indices.astype(np.uint64), reps)
    lane_reps = np.tile(np.arange(reps, dtype=np.uint64), n)
    gen = Xoshiro256StarStar(stream_seed(cfg.seed, lane_traces, lane_reps))

    # First draw of every substream is the jitter shift, consumed even when
    # jitter is disabled so noise samples do not depend on jitter settings.
    jitter_bits = gen.next_u64()
    acc = np.zeros((n, cfg.n_samples), dtype=np.float64)

    if with_leaks:
        pattern = _leak_pattern(_leak_amplitudes(pt_bytes, cfg), cfg)
        if cfg.jitter_max == 0:
            acc += pattern
        else:
            shifts = ((jitter_bits % np.uint64(2 * cfg.jitter_max + 1))
                      .astype(np.int64) - cfg.jitter_max).reshape(n, reps)
            cols = np.arange(cfg.n_samples)
            for r in range(reps):
                gather = (cols[None, :] - shifts[:, r:r + 1]) % cfg.n_samples
                acc += np.take_along_axis(pattern, gather, axis=1)
            acc /= reps

    if cfg.noise_std > 0.0:
        noise = gen.standard_normals(cfg.n_samples).reshape(n, reps, cfg.n_samples)
        acc += cfg.noise_std * noise.mean(axis=1)

    acc += cfg.leak_params.b
    return acc.astype(np.float32)


def simulate_trace(p: int, cfg: SimConfig, trace_index: int = 0) -> Trace:
    """Simulate one encryption trace; fully determined by (seed, trace_index)."""
    pt_bytes = _states_to_bytes([p])
    samples = _synthesize(pt_bytes, cfg, np.array([trace_index]), with_leaks=True)
    return Trace(samples[0], pt_bytes[0], cfg.sample_rate)


def simulate_set(plaintexts: Sequence[int], cfg: SimConfig) -> TraceSet:
    """Simulate one trace per plaintext (trace i uses trace_index i)."""
    if len(plaintexts) == 0:
        raise ValueError("plaintext list must not be empty")
    pt_bytes = _states_to_bytes(plaintexts)
    samples = _synthesize(pt_bytes, cfg, np.arange(len(plaintexts)),
                          with_leaks=True)
    provenance = {"kind": "encryption", **cfg.summary()}
    return TraceSet(samples, pt_bytes, cfg.sample_rate, provenance)


def simulate_idle_set(n_traces: int, cfg: SimConfig) -> TraceSet:
    """Simulate non-encryption traces: baseline plus noise, no leaks, no carrier.

    Plaintext rows are zero-filled and the set is flagged idle. Substreams
    are keyed exactly as for encryption sets, so an idle set with the same
    seed carries the same noise realization.
    """
    if n_traces < 1:
        raise ValueError("n_traces must be at least 1")
    pt_bytes = np.zeros((n_traces, 8), dtype=np.uint8)
    samples = _synthesize(pt_bytes, cfg, np.arange(n_traces), with_leaks=False)
    provenance = {"kind": "idle", **cfg.summary()}
    return TraceSet(samples, pt_bytes, cfg.sample_rate, provenance)


def default_config(key: KeyRegister, seed: int, **overrides) -> SimConfig:
    """A SimConfig with the library defaults, overridable per field."""
    return replace(SimConfig(key=key, seed=seed), **overrides)


def leak_windows(cfg: SimConfig, pad: int = 0) -> dict:
    """Per-byte sample windows around each configured leak pulse.

    This is the simulator-side stand-in for trigger-based localisation of
    each byte's S-box operation; feed it to the attack's per-byte window
    option. ``pad`` widens each window (clipped to the trace), e.g. to
    cover jitter.
    """
    return {
        j: (max(0, idx - pad),
            min(cfg.n_samples, idx + cfg.leak_width + pad))
        for j, idx in enumerate(cfg.leak_indices)
    }
