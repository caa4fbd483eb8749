"""Signal conditioning and automated trace-set spectral comparison.

Filtering is zero-phase and frequency-domain: each trace is FFT'd, bins
outside the passband are zeroed (optionally with a raised-cosine
transition band), and the trace is rebuilt by inverse FFT. This removes
group-delay effects entirely; the transition-band width is the only
tuning knob. With the default hard band edges the filter is exactly
idempotent.

All operations return new traces/sets and never mutate their inputs.
Internal math runs in float64; trace sets come back as float32.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulate import Trace, TraceSet


@dataclass
class Spectrum:
    """One-sided magnitude spectrum of a real trace.

    ``magnitudes[k]`` is ``|X_k|`` of the unnormalized DFT for bins
    0..n_samples//2. Parseval's identity then reads
    ``sum(x**2) == (2*sum(|X_k|^2) - |X_0|^2 - [n even]*|X_{N/2}|^2) / N``.
    """

    magnitudes: np.ndarray
    freq_resolution: float

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[0]

    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.freq_resolution


@dataclass
class SpectralDiffReport:
    """Differences between encryption and idle average spectra.

    ``new_components``: (freq_hz, magnitude) for spectral lines present in
    the encryption set but absent from the idle set, strongest first.
    ``amplified_components``: (freq_hz, ratio) for lines present in both
    whose magnitude grew by at least ``amp_ratio``.
    ``mean_amplitude_enc/idle`` expose the raw time-domain mean amplitude
    comparison; no pass/fail claim is attached to it.
    """

    new_components: list
    amplified_components: list
    new_ratio: float
    amp_ratio: float
    noise_floor: float
    mean_amplitude_enc: float
    mean_amplitude_idle: float


def fft_magnitude(t: Trace) -> Spectrum:
    """Magnitude spectrum of a single trace (rectangular window)."""
    x = np.asarray(t.samples, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("trace must have at least 2 samples")
    mags = np.abs(np.fft.rfft(x))
    return Spectrum(mags, t.sample_rate / x.shape[0])


def bandpass(ts: TraceSet, f_lo: float, f_hi: float,
             transition_hz: float = 0.0) -> TraceSet:
    """Zero-phase bandpass: keep spectral content in [f_lo, f_hi].

    ``transition_hz`` widens each band edge with a raised-cosine ramp
    *outside* the passband; the default 0 gives hard (idempotent) edges.
    """
    nyquist = ts.sample_rate / 2.0
    if not 0 <= f_lo < f_hi <= nyquist:
        raise ValueError(f"band must satisfy 0 <= lo < hi <= Nyquist ({nyquist:g} Hz)")
    if transition_hz < 0:
        raise ValueError("transition width must be non-negative")

    n = ts.n_samples
    freqs = np.fft.rfftfreq(n, d=1.0 / ts.sample_rate)
    mask = ((freqs >= f_lo) & (freqs <= f_hi)).astype(np.float64)
    if transition_hz > 0:
        lo_ramp = (freqs >= f_lo - transition_hz) & (freqs < f_lo)
        mask[lo_ramp] = 0.5 * (1 + np.cos(np.pi * (f_lo - freqs[lo_ramp]) / transition_hz))
        hi_ramp = (freqs > f_hi) & (freqs <= f_hi + transition_hz)
        mask[hi_ramp] = 0.5 * (1 + np.cos(np.pi * (freqs[hi_ramp] - f_hi) / transition_hz))

    spectra = np.fft.rfft(ts.traces.astype(np.float64), axis=1)
    filtered = np.fft.irfft(spectra * mask, n=n, axis=1)
    provenance = dict(ts.provenance)
    provenance["bandpass"] = [f_lo, f_hi, transition_hz]
    return TraceSet(filtered.astype(np.float32), ts.plaintexts.copy(),
                    ts.sample_rate, provenance)


def align(ts: TraceSet, reference: int = 0, max_shift: int = 0) -> TraceSet:
    """Circularly shift each trace to best match the reference trace.

    For every trace the integer lag in [-max_shift, +max_shift] maximizing
    the circular cross-correlation with the reference is applied. Ties go
    to the smallest |lag| (so already-aligned traces are untouched).
    Circular shifts suit stationary simulated traces; captures with edge
    transients need zero-padded alignment instead.
    """
    if not 0 <= reference < ts.n_traces:
        raise ValueError("reference trace index out of range")
    if not 0 <= max_shift < ts.n_samples / 2:
        raise ValueError("max_shift must be below half the trace length")

    ref = ts.traces[reference].astype(np.float64)
    lags = sorted(range(-max_shift, max_shift + 1), key=lambda s: (abs(s), s))
    out = np.empty_like(ts.traces)
    for i in range(ts.n_traces):
        x = ts.traces[i].astype(np.float64)
        best_lag, best_score = 0, -np.inf
        for lag in lags:
            score = float(np.dot(np.roll(x, lag), ref))
            if score > best_score:
                best_lag, best_score = lag, score
        out[i] = np.roll(ts.traces[i], best_lag)
    provenance = dict(ts.provenance)
    provenance["aligned"] = {"reference": reference, "max_shift": max_shift}
    return TraceSet(out, ts.plaintexts.copy(), ts.sample_rate, provenance)


def average(ts: TraceSet) -> Trace:
    """Per-sample arithmetic mean of all traces (plaintext zeroed)."""
    mean = ts.traces.astype(np.float64).mean(axis=0)
    return Trace(mean.astype(np.float32), np.zeros(8, dtype=np.uint8),
                 ts.sample_rate)


def _grouped_peaks(qualifying: np.ndarray, values: np.ndarray) -> list:
    """Collapse runs of adjacent qualifying bins to their strongest bin."""
    peaks = []
    idx = np.flatnonzero(qualifying)
    if idx.size == 0:
        return peaks
    run_start = idx[0]
    prev = idx[0]
    for k in list(idx[1:]) + [None]:
        if k is None or k != prev + 1:
            run = np.arange(run_start, prev + 1)
            peaks.append(int(run[np.argmax(values[run])]))
            run_start = k
        prev = k
    return peaks


def spectral_diff(enc: TraceSet, idle: TraceSet, new_ratio: float = 5.0,
                  amp_ratio: float = 2.0) -> SpectralDiffReport:
    """Compare average spectra of an encryption set and an idle set.

    The noise floor is the median bin magnitude of the idle spectrum
    (robust to a few strong ambient lines). A bin is a *new* component
    when it is below the floor in the idle set but above
    ``new_ratio * floor`` in the encryption set; it is *amplified* when it
    is a real line in both sets (above ``new_ratio * floor`` in the idle
    set) and grew by at least ``amp_ratio``. Adjacent qualifying bins are
    grouped and reported at their strongest bin.
    """
    if enc.sample_rate != idle.sample_rate or enc.n_samples != idle.n_samples:
        raise ValueError("encryption and idle sets must share sample_rate and n_samples")
    if new_ratio <= 1 or amp_ratio <= 1:
        raise ValueError("detection ratios must exceed 1")

    spec_enc = fft_magnitude(average(enc))
    spec_idle = fft_magnitude(average(idle))
    m_enc, m_idle = spec_enc.magnitudes, spec_idle.magnitudes
    floor = float(np.median(m_idle))
    res = spec_enc.freq_resolution

    if floor == 0.0:
        new_mask = m_enc > 0
        present = m_idle > 0
    else:
        new_mask = (m_idle < floor) & (m_enc > new_ratio * floor)
        present = m_idle > new_ratio * floor
    if enc.n_samples % 2 == 0:  # keep reported frequencies strictly below Nyquist
        new_mask[-1] = False
        present[-1] = False
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(m_idle > 0, m_enc / np.where(m_idle > 0, m_idle, 1.0), np.inf)
    amp_mask = present & (ratio >= amp_ratio)

    new_components = [(k * res, float(m_enc[k]))
                      for k in _grouped_peaks(new_mask, m_enc)]
    new_components.sort(key=lambda c: -c[1])
    amplified = [(k * res, float(ratio[k]))
                 for k in _grouped_peaks(amp_mask, ratio)]
    amplified.sort(key=lambda c: -c[1])

    return SpectralDiffReport(
        new_components=new_components,
        amplified_components=amplified,
        new_ratio=new_ratio,
        amp_ratio=amp_ratio,
        noise_floor=floor,
        mean_amplitude_enc=float(enc.traces.astype(np.float64).mean()),
        mean_amplitude_idle=float(idle.traces.astype(np.float64).mean()),
    )
