"""Hamming-weight/distance leakage models and the round-1 attack target.

The emission model is affine in the Hamming weight of an intermediate
value: energy = gain * HW(value) + baseline. The baseline here is a
deterministic offset; stochastic noise is added separately by the trace
simulator so the two effects can be controlled independently.

The attacked intermediate is one byte of the round-1 S-box output,
S(hi nibble) || S(lo nibble) of (plaintext byte XOR key byte) — the same
value the cipher computes in its first sBoxLayer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .present import SBOX, SBOX_BYTE_TABLE

HW8_TABLE = np.array([bin(v).count("1") for v in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class LeakParams:
    """Affine leakage coefficients: gain per HW unit and baseline offset."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("leakage parameters must be finite")


@dataclass(frozen=True)
class Intermediate:
    """A round-1 S-box output byte at a given state byte position."""

    value: int
    byte_index: int

    def __post_init__(self):
        if not 0 <= self.value <= 0xFF:
            raise ValueError("intermediate value must be one byte")
        if not 0 <= self.byte_index < 8:
            raise ValueError("byte_index must be in 0..7")


def hamming_weight(v: int, width: int) -> int:
    """Number of set bits of ``v``, which must fit in ``width`` bits."""
    if not 1 <= width <= 64:
        raise ValueError("width must be in 1..64")
    if not 0 <= v < (1 << width):
        raise ValueError(f"value does not fit in {width} bits")
    return v.bit_count()


def hamming_distance(x: int, y: int, width: int) -> int:
    """Number of differing bits: HW(x XOR y)."""
    if not 1 <= width <= 64:
        raise ValueError("width must be in 1..64")
    if not 0 <= x < (1 << width) or not 0 <= y < (1 << width):
        raise ValueError(f"values do not fit in {width} bits")
    return (x ^ y).bit_count()


def leak_energy(d: Intermediate, params: LeakParams) -> float:
    """Hypothesised emission energy a * HW(d) + b."""
    return params.a * d.value.bit_count() + params.b


def round1_intermediate_byte(p_byte: int, k_byte: int) -> int:
    """S-box output byte for one state byte after the round-1 key addition."""
    if not 0 <= p_byte <= 0xFF or not 0 <= k_byte <= 0xFF:
        raise ValueError("inputs must be single bytes")
    x = p_byte ^ k_byte
    return (SBOX[x >> 4] << 4) | SBOX[x & 0xF]


def round1_intermediate_bytes(p_bytes: np.ndarray, k_byte: int) -> np.ndarray:
    """Vectorized :func:`round1_intermediate_byte` over an array of bytes."""
    p = np.asarray(p_bytes, dtype=np.uint8)
    return SBOX_BYTE_TABLE[p ^ np.uint8(k_byte)]
