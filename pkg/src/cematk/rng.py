"""Deterministic, splittable random streams for trace synthesis.

The simulator must produce bit-identical output for a given seed regardless
of platform, execution order or library defaults, so randomness comes from
an explicit, published generator rather than numpy's global RNG:

* substream keys are derived by hash-chaining splitmix64 over
  ``(seed, index0, index1, ...)``,
* each substream is an independent xoshiro256** generator whose four state
  words are seeded from a splitmix64 run, as recommended by the xoshiro
  authors,
* uniforms are built from the top 53 bits of each 64-bit output (exact
  float arithmetic), and standard normals via Acklam's rational
  approximation of the inverse normal CDF (relative error < 1.2e-9).

Everything is vectorized over substreams: state arrays have one lane per
substream and a Python loop runs only along the sample axis.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U5 = np.uint64(5)
_U7 = np.uint64(7)
_U9 = np.uint64(9)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_U45 = np.uint64(45)
_U57 = np.uint64(57)

_INV_2_53 = 2.0 ** -53


def _sm64_output(state: np.ndarray) -> np.ndarray:
    """splitmix64 output function (finalizer) for an already-advanced state."""
    z = state.copy()
    z ^= z >> _U30
    z *= _MIX1
    z ^= z >> _U27
    z *= _MIX2
    z ^= z >> _U31
    return z


def stream_seed(seed: int, *indices):
    """Derive 64-bit substream keys from a base seed and integer indices.

    Each index is hashed in with one splitmix64 step, so adjacent indices
    yield statistically independent keys. Indices may be scalars (the
    result is a uint64 scalar) or numpy integer arrays, broadcast together
    into a uint64 array.
    """
    scalar = all(np.ndim(idx) == 0 for idx in indices)
    z = np.atleast_1d(np.asarray(seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
    z = _sm64_output(z + _GOLDEN)
    for idx in indices:
        k = np.atleast_1d(np.asarray(idx, dtype=np.uint64))
        z = _sm64_output((z ^ k) + _GOLDEN)
    return np.uint64(z[0]) if scalar else z


class Xoshiro256StarStar:
    """A bank of independent xoshiro256** generators, one lane per substream.

    State words are seeded from a splitmix64 sequence started at each
    lane's stream key. All lanes advance in lockstep; outputs for lane i
    depend only on that lane's key.
    """

    def __init__(self, stream_seeds: np.ndarray):
        s = np.atleast_1d(np.asarray(stream_seeds, dtype=np.uint64)).copy()
        words = []
        for _ in range(4):
            s = s + _GOLDEN
            words.append(_sm64_output(s))
        self._s0, self._s1, self._s2, self._s3 = words
        self.n_lanes = s.shape[0]

    @staticmethod
    def _rotl(x: np.ndarray, k: np.uint64, inv_k: np.uint64) -> np.ndarray:
        return (x << k) | (x >> inv_k)

    def next_u64(self) -> np.ndarray:
        """One 64-bit output per lane."""
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = self._rotl(s1 * _U5, _U7, _U57) * _U9
        t = s1 << _U17
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = self._rotl(s3, _U45, np.uint64(19))
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniforms(self, n: int) -> np.ndarray:
        """(n_lanes, n) array of float64 uniforms in the open interval (0, 1)."""
        out = np.empty((n, self.n_lanes), dtype=np.float64)
        for i in range(n):
            bits = self.next_u64()
            out[i] = ((bits >> _U11).astype(np.float64) + 0.5) * _INV_2_53
        return out.T

    def standard_normals(self, n: int) -> np.ndarray:
        """(n_lanes, n) array of standard normal draws."""
        return norm_ppf(self.uniforms(n))

    def integers_below(self, bound: int) -> np.ndarray:
        """One integer in [0, bound) per lane, from a single 64-bit draw.

        Uses plain modulo; for the small bounds used here (jitter windows)
        the modulo bias is below 2^-50 and irrelevant.
        """
        return (self.next_u64() % np.uint64(bound)).astype(np.int64)


# Coefficients of Acklam's inverse normal CDF approximation.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_ppf(p: np.ndarray) -> np.ndarray:
    """Inverse standard normal CDF (Acklam), elementwise over (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    out = np.empty_like(p)

    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    q = p[mid] - 0.5
    r = q * q
    num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    out[mid] = q * num / den

    ql = np.sqrt(-2.0 * np.log(p[lo]))
    num = ((((_C[0] * ql + _C[1]) * ql + _C[2]) * ql + _C[3]) * ql + _C[4]) * ql + _C[5]
    den = (((_D[0] * ql + _D[1]) * ql + _D[2]) * ql + _D[3]) * ql + 1.0
    out[lo] = num / den

    qh = np.sqrt(-2.0 * np.log(1.0 - p[hi]))
    num = ((((_C[0] * qh + _C[1]) * qh + _C[2]) * qh + _C[3]) * qh + _C[4]) * qh + _C[5]
    den = (((_D[0] * qh + _D[1]) * qh + _D[2]) * qh + _D[3]) * qh + 1.0
    out[hi] = -num / den

    return out
