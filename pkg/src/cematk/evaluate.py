"""Statistical evaluation of attack performance over repeated experiments.

Every trial simulates a fresh seeded trace set (uniform random plaintexts,
decorrelating the 8 byte positions), runs the full round-key attack and
records the rank of each true key byte. Trials, counts and plaintexts are
all derived from one base seed, so a whole evaluation campaign reproduces
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.stats import beta

from .attack import attack_round_key
from .present import key_schedule
from .rng import Xoshiro256StarStar, stream_seed
from .simulate import SimConfig, simulate_set


@dataclass
class SuccessCurve:
    """Attack success as a function of trace count."""

    trace_counts: list
    trials: int
    success_rate: np.ndarray        # aggregate over bytes, one per count
    ci_half_width: np.ndarray       # 95%, normal approximation
    mean_rank: np.ndarray           # aggregate 0-based rank of the true byte
    per_byte_success: np.ndarray    # (n_counts, 8)
    per_byte_mean_rank: np.ndarray  # (n_counts, 8)
    ranks: np.ndarray               # (n_counts, trials, 8) raw ranks


@dataclass
class LeakageReport:
    """Top-R leakage probabilities in the style of a leakage summary table."""

    per_byte: np.ndarray   # marginal P(true byte within top R), per position
    at_a_time: dict        # {k: P(exactly k bytes within top R simultaneously)}
    top_r: int
    trials: int


def _random_plaintexts(key, n: int) -> list:
    """n uniform 64-bit plaintexts from one substream key."""
    gen = Xoshiro256StarStar(key)
    bits = np.empty(n, dtype=np.uint64)
    for i in range(n):
        bits[i] = gen.next_u64()[0]
    return [int(b) for b in bits]


def true_k1_bytes(cfg: SimConfig) -> np.ndarray:
    """The 8 bytes of the first round key of the configured cipher key."""
    k1 = key_schedule(cfg.key)[0]
    return np.frombuffer(k1.to_bytes(8, "big"), dtype=np.uint8).copy()


def collect_trial_rankings(cfg: SimConfig, n_traces: int, trials: int,
                           seed: int, band: Optional[tuple] = None,
                           window: Optional[tuple] = None) -> list:
    """Run seeded attack trials at one trace count.

    Returns one ``{byte_index: KeyRanking}`` mapping per trial. Trial t
    draws its plaintexts from substream (seed, n_traces, t, 0) and its
    simulation seed from (seed, n_traces, t, 1).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n_traces < 2:
        raise ValueError("n_traces must be at least 2")
    rankings = []
    for t in range(trials):
        pt_key = stream_seed(seed, n_traces, t, 0)
        sim_seed = int(stream_seed(seed, n_traces, t, 1))
        plaintexts = _random_plaintexts(pt_key, n_traces)
        ts = simulate_set(plaintexts, replace(cfg, seed=sim_seed))
        result = attack_round_key(ts, band=band, window=window)
        rankings.append(result.rankings)
    return rankings


def ranks_from_rankings(rankings: Sequence[dict], true_key: Sequence[int]) -> np.ndarray:
    """(trials, 8) 0-based rank of each true key byte."""
    true_key = list(true_key)
    if len(true_key) != 8:
        raise ValueError("true key must give 8 bytes")
    out = np.empty((len(rankings), 8), dtype=np.int64)
    for t, per_byte in enumerate(rankings):
        for b in range(8):
            out[t, b] = per_byte[b].rank_of(int(true_key[b]))
    return out


def run_trials(cfg: SimConfig, trace_counts: Sequence[int], trials: int,
               seed: int, band: Optional[tuple] = None,
               window: Optional[tuple] = None) -> SuccessCurve:
    """Success rate, CI and mean rank for each trace count."""
    counts = [int(c) for c in trace_counts]
    if not counts or any(b >= a for a, b in zip(counts[1:], counts)):
        raise ValueError("trace_counts must be non-empty and strictly ascending")
    if min(counts) < 2:
        raise ValueError("trace counts must be at least 2")
    if trials < 1:
        raise ValueError("trials must be at least 1")

    true_bytes = true_k1_bytes(cfg)
    n_counts = len(counts)
    ranks = np.empty((n_counts, trials, 8), dtype=np.int64)
    for ci, count in enumerate(counts):
        rankings = collect_trial_rankings(cfg, count, trials, seed,
                                          band=band, window=window)
        ranks[ci] = ranks_from_rankings(rankings, true_bytes)

    hit = ranks == 0
    per_byte_success = hit.mean(axis=1)
    success = hit.mean(axis=(1, 2))
    # CI from the per-trial recovered fraction, which respects the
    # correlation between byte positions within a trial.
    if trials > 1:
        frac = hit.mean(axis=2)
        ci_hw = 1.96 * frac.std(axis=1, ddof=1) / np.sqrt(trials)
    else:
        ci_hw = np.full(n_counts, np.nan)
    return SuccessCurve(
        trace_counts=counts,
        trials=trials,
        success_rate=success,
        ci_half_width=ci_hw,
        mean_rank=ranks.mean(axis=(1, 2)),
        per_byte_success=per_byte_success,
        per_byte_mean_rank=ranks.mean(axis=1),
        ranks=ranks,
    )


def guessing_entropy(rankings: Sequence[dict], true_key: Sequence[int]) -> np.ndarray:
    """Mean 0-based rank of the true byte, per byte position."""
    if len(rankings) == 0:
        raise ValueError("at least one trial required")
    return ranks_from_rankings(rankings, true_key).mean(axis=0)


def leakage_probability_report(rankings: Sequence[dict], true_key: Sequence[int],
                               top_r: int = 5) -> LeakageReport:
    """Top-R leakage probabilities, marginal and "k bytes at a time".

    A byte position *leaks* in a trial when its true value ranks within
    the top ``top_r`` candidates. The joint row tabulates, per k, the
    fraction of trials in which exactly k positions leak simultaneously;
    those fractions partition the trials, so they sum to at most 1.
    """
    if top_r < 1:
        raise ValueError("top_r must be at least 1")
    if len(rankings) == 0:
        raise ValueError("at least one trial required")
    ranks = ranks_from_rankings(rankings, true_key)
    leaked = ranks < top_r
    trials = leaked.shape[0]
    counts = leaked.sum(axis=1)
    at_a_time = {k: float((counts == k).mean()) for k in range(1, 9)}
    return LeakageReport(
        per_byte=leaked.mean(axis=0),
        at_a_time=at_a_time,
        top_r=top_r,
        trials=trials,
    )


def binomial_ci(successes: int, trials: int, confidence: float = 0.95) -> tuple:
    """Exact (Clopper-Pearson) two-sided binomial confidence interval.

    Preferred over the normal approximation when trials are few (the
    success-curve field itself always reports the normal half-width).
    """
    if not 0 <= successes <= trials or trials < 1:
        raise ValueError("need 0 <= successes <= trials, trials >= 1")
    alpha = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(
        beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(
        beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi
