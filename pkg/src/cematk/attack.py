"""Correlation attack core: hypotheses, Pearson surfaces, key ranking.

For one target byte position the attack builds a 256 x n_traces matrix of
Hamming-weight predictions (one row per key-byte hypothesis), correlates
every row against every trace sample column, and ranks hypotheses by the
peak |rho| across samples. Absolute value is used because leakage shows
up as troughs (negative peaks) as readily as peaks; the sign at the peak
is kept for diagnostics.

Zero-variance rows/columns (dead filtered regions, constant plaintext
bytes) correlate as 0 and are flagged in a companion mask instead of
raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .dsp import bandpass
from .errors import AmbiguousKeyError
from .leakage import HW8_TABLE
from .present import (KeyRegister, SBOX_BYTE_TABLE, batch_encrypt80,
                      encrypt_block)
from .simulate import TraceSet


@dataclass
class HypothesisMatrix:
    """256 x n_traces Hamming-weight predictions for one byte position."""

    hw: np.ndarray
    byte_index: int

    @property
    def n_traces(self) -> int:
        return self.hw.shape[1]


@dataclass
class CorrelationSurface:
    """Pearson coefficients over (key hypothesis, sample index).

    ``degenerate`` marks cells whose hypothesis row or sample column had
    zero variance; their ``rho`` is 0 by convention.
    """

    rho: np.ndarray
    degenerate: np.ndarray
    byte_index: int


class RankEntry(NamedTuple):
    key_byte: int
    score: float
    sample_index: int
    sign: int


@dataclass
class KeyRanking:
    """All 256 key-byte candidates, best first.

    Ordered by descending peak |rho|; ties break toward the smaller key
    byte value. ``sample_index`` is the first sample attaining the peak.
    """

    entries: list
    byte_index: int

    def rank_of(self, key_byte: int) -> int:
        """0-based position of a key byte in the ranking."""
        for rank, e in enumerate(self.entries):
            if e.key_byte == key_byte:
                return rank
        raise ValueError("key byte not present in ranking")

    @property
    def best(self) -> RankEntry:
        return self.entries[0]


@dataclass
class AttackResult:
    """Round-key recovery output for the attacked byte positions.

    ``rankings`` maps byte_index (0 = most significant byte of the 64-bit
    round key K1) to that position's KeyRanking. ``recovered_k1`` is
    assembled from the rank-1 bytes and is only set when all 8 positions
    were attacked.
    """

    rankings: dict
    recovered_k1: Optional[int]
    full_key: Optional[KeyRegister] = None
    diagnostics: dict = field(default_factory=dict)
    surfaces: dict = field(default_factory=dict)


def build_hypotheses(plaintexts: np.ndarray, byte_index: int) -> HypothesisMatrix:
    """HW of the round-1 S-box output for all 256 key hypotheses.

    ``hw[k, t] = HW(S(hi)||S(lo) of plaintext_t[byte_index] XOR k)``.
    """
    plaintexts = np.asarray(plaintexts, dtype=np.uint8)
    if plaintexts.ndim != 2 or plaintexts.shape[1] != 8:
        raise ValueError("plaintexts must be an n_traces x 8 byte matrix")
    if not 0 <= byte_index < 8:
        raise ValueError("byte_index must be in 0..7")
    pt = plaintexts[:, byte_index]
    guesses = np.arange(256, dtype=np.uint8)[:, None]
    hw = HW8_TABLE[SBOX_BYTE_TABLE[pt[None, :] ^ guesses]]
    return HypothesisMatrix(hw, byte_index)


class PearsonResult(NamedTuple):
    rho: float
    degenerate: bool


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Sample Pearson coefficient of two equal-length sequences.

    Zero-variance input yields ``rho=0`` with the degenerate flag set
    rather than an exception: constant columns are a normal feature of
    filtered traces and simply carry no information.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("inputs must be equal-length 1-D sequences of length >= 2")
    if x.max() == x.min() or y.max() == y.min():
        return PearsonResult(0.0, True)
    xc = x - x.mean()
    yc = y - y.mean()
    rho = float(np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    return PearsonResult(rho, False)


def correlate(ts: TraceSet, h: HypothesisMatrix,
              chunk_samples: Optional[int] = None) -> CorrelationSurface:
    """Pearson coefficient of every hypothesis row against every sample column.

    Vectorized two-pass computation (center, then normalized cross
    product), numerically matching the per-cell definition to better than
    1e-12. ``chunk_samples`` bounds memory by processing sample columns in
    slices; any chunking stays within the same 1e-12 envelope (column
    means and variances are per-column, only the BLAS summation order of
    the cross product can differ).
    """
    if ts.n_traces != h.n_traces:
        raise ValueError("trace count does not match hypothesis columns")
    if ts.n_traces < 2:
        raise ValueError("correlation needs at least 2 traces")

    hw = h.hw.astype(np.float64)
    hc = hw - hw.mean(axis=1, keepdims=True)
    ss_h = np.einsum("ij,ij->i", hc, hc)
    row_degen = h.hw.max(axis=1) == h.hw.min(axis=1)

    n_samples = ts.n_samples
    if chunk_samples is None or chunk_samples >= n_samples:
        chunk_samples = n_samples
    rho = np.empty((256, n_samples), dtype=np.float64)
    col_degen = np.empty(n_samples, dtype=bool)

    denom_h = np.sqrt(ss_h)
    denom_h[row_degen] = 1.0
    for lo in range(0, n_samples, chunk_samples):
        hi = lo + min(chunk_samples, n_samples - lo)
        t = ts.traces[:, lo:hi].astype(np.float64)
        tc = t - t.mean(axis=0, keepdims=True)
        ss_t = np.einsum("ij,ij->j", tc, tc)
        degen = t.max(axis=0) == t.min(axis=0)
        col_degen[lo:hi] = degen
        denom_t = np.sqrt(ss_t)
        denom_t[degen] = 1.0
        rho[:, lo:hi] = (hc @ tc) / (denom_h[:, None] * denom_t[None, :])

    degenerate = row_degen[:, None] | col_degen[None, :]
    rho[degenerate] = 0.0
    return CorrelationSurface(rho, degenerate, h.byte_index)


def rank_keys(surface: CorrelationSurface) -> KeyRanking:
    """Order key hypotheses by peak |rho| across samples."""
    abs_rho = np.abs(surface.rho)
    scores = abs_rho.max(axis=1)
    peak_idx = abs_rho.argmax(axis=1)
    order = sorted(range(256), key=lambda k: (-scores[k], k))
    entries = []
    for k in order:
        s = peak_idx[k]
        entries.append(RankEntry(
            key_byte=k,
            score=float(scores[k]),
            sample_index=int(s),
            sign=int(np.sign(surface.rho[k, s])),
        ))
    return KeyRanking(entries, surface.byte_index)


def attack_round_key(ts: TraceSet, band: Optional[tuple] = None,
                     window=None,
                     byte_indices: Sequence[int] = tuple(range(8)),
                     chunk_samples: Optional[int] = None,
                     keep_surfaces: bool = False) -> AttackResult:
    """Full round-1 attack: per-byte hypotheses, correlation and ranking.

    ``band`` optionally bandpass-filters the set first; ``window``
    restricts correlation to a sample range [lo, hi) to emulate
    trigger-based localisation, either one range for all bytes or a
    ``{byte_index: (lo, hi)}`` mapping when each byte's operation has been
    located individually. Per-byte windows are what disambiguates the
    uniform acquisition sweep, whose identical plaintext bytes make all 8
    positions correlate equally well with every true key byte.

    K1 is assembled from the rank-1 bytes (byte_index 0 contributing the
    most significant byte). ``keep_surfaces`` retains the per-byte
    correlation surfaces (large) on the result; their sample indices are
    relative to the byte's window.
    """
    if ts.n_traces < 2:
        raise ValueError("attack needs at least 2 traces")
    byte_indices = tuple(byte_indices)
    if not byte_indices or any(not 0 <= b < 8 for b in byte_indices):
        raise ValueError("byte indices must be within 0..7")

    diagnostics = {"n_traces": ts.n_traces, "band": None, "window": None}
    if band is not None:
        f_lo, f_hi = band
        ts = bandpass(ts, f_lo, f_hi)
        diagnostics["band"] = [f_lo, f_hi]

    per_byte_window = isinstance(window, dict)
    if window is not None and not per_byte_window:
        lo, hi = window
        if not 0 <= lo < hi <= ts.n_samples:
            raise ValueError("window out of range")
        ts = TraceSet(ts.traces[:, lo:hi], ts.plaintexts, ts.sample_rate,
                      dict(ts.provenance))
        diagnostics["window"] = [int(lo), int(hi)]
    diagnostics["n_samples_used"] = ts.n_samples

    rankings = {}
    surfaces = {}
    for b in byte_indices:
        sub = ts
        if per_byte_window:
            if b not in window:
                raise ValueError(f"no window given for byte {b}")
            lo, hi = window[b]
            if not 0 <= lo < hi <= ts.n_samples:
                raise ValueError(f"window for byte {b} out of range")
            sub = TraceSet(ts.traces[:, lo:hi], ts.plaintexts,
                           ts.sample_rate, dict(ts.provenance))
        h = build_hypotheses(sub.plaintexts, b)
        surface = correlate(sub, h, chunk_samples=chunk_samples)
        rankings[b] = rank_keys(surface)
        if keep_surfaces:
            surfaces[b] = surface
    if per_byte_window:
        diagnostics["window"] = {b: [int(window[b][0]), int(window[b][1])]
                                 for b in byte_indices}

    recovered = None
    if len(byte_indices) == 8:
        recovered = 0
        for b in range(8):
            recovered |= rankings[b].best.key_byte << (8 * (7 - b))
    return AttackResult(rankings, recovered, diagnostics=diagnostics,
                        surfaces=surfaces)


def recover_full_key(k1: int, known_pair: tuple) -> Optional[KeyRegister]:
    """Complete an 80-bit key from its leading 64 bits and one known pair.

    Enumerates all 2^16 register values whose top 64 bits equal ``k1`` and
    returns the unique key encrypting the known plaintext to the known
    ciphertext; ``None`` when no candidate matches. More than one match
    raises :class:`AmbiguousKeyError`.
    """
    if not 0 <= k1 < (1 << 64):
        raise ValueError("k1 must be a 64-bit value")
    pt, ct = known_pair
    lows = np.arange(1 << 16, dtype=np.uint64)
    highs = np.full(lows.shape, np.uint64(k1), dtype=np.uint64)
    cts = batch_encrypt80(pt, highs, lows)
    matches = np.flatnonzero(cts == np.uint64(ct))
    if matches.size == 0:
        return None
    if matches.size > 1:
        raise AmbiguousKeyError(
            f"{matches.size} candidate keys encrypt the known pair")
    key = KeyRegister((k1 << 16) | int(matches[0]), 80)
    # paranoia: the scalar path must agree with the batch search
    assert encrypt_block(pt, key) == ct
    return key
