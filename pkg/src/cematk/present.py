"""PRESENT-80/128 block cipher with round-reduced execution.

Bit numbering convention, used everywhere in this package: the 64-bit
state is an integer whose bit 63 is the leftmost / most significant bit;
byte 0 of the state is its most significant byte. Hex I/O is uppercase,
most significant byte first.

The cipher is a 31-round SPN (addRoundKey, sBoxLayer, pLayer) followed by
a final key addition, so a full encryption consumes 32 round keys. The
bit permutation moves bit i to position 16*i mod 63 (bit 63 fixed); it is
precomputed as a table from that closed form at import time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

SBOX = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD,
        0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)
SBOX_INV = tuple(SBOX.index(x) for x in range(16))

PBOX = tuple((16 * i) % 63 if i < 63 else 63 for i in range(64))
PBOX_INV = tuple(PBOX.index(x) for x in range(64))

_MASK64 = (1 << 64) - 1

# Byte-wide tables so the per-round layers cost 8 lookups instead of 16
# nibble / 64 bit operations.
_SBOX_BYTE = tuple((SBOX[b >> 4] << 4) | SBOX[b & 0xF] for b in range(256))
_SBOX_INV_BYTE = tuple((SBOX_INV[b >> 4] << 4) | SBOX_INV[b & 0xF]
                       for b in range(256))


def _byte_perm_tables(pbox):
    tables = []
    for byte_pos in range(8):  # byte 0 holds bits 63..56
        shift = 8 * (7 - byte_pos)
        table = []
        for value in range(256):
            out = 0
            for bit in range(8):
                if value >> bit & 1:
                    out |= 1 << pbox[shift + bit]
            table.append(out)
        tables.append(tuple(table))
    return tuple(tables)


_PLAYER_BYTE = _byte_perm_tables(PBOX)
_PLAYER_INV_BYTE = _byte_perm_tables(PBOX_INV)

SBOX_BYTE_TABLE = np.array(_SBOX_BYTE, dtype=np.uint8)


@dataclass(frozen=True)
class KeyRegister:
    """An 80- or 128-bit key register value."""

    bits: int
    width: int = 80

    def __post_init__(self):
        if self.width not in (80, 128):
            raise ValueError(f"key width must be 80 or 128, got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"key value does not fit in {self.width} bits")

    @classmethod
    def from_hex(cls, text: str) -> "KeyRegister":
        """Parse an uppercase/lowercase hex key; width inferred from length."""
        text = text.strip().replace(" ", "")
        if len(text) == 20:
            width = 80
        elif len(text) == 32:
            width = 128
        else:
            raise ValueError(
                f"key must be 20 or 32 hex digits, got {len(text)}")
        return cls(int(text, 16), width)

    def to_hex(self) -> str:
        return f"{self.bits:0{self.width // 4}X}"


@dataclass(frozen=True)
class RoundCapture:
    """Intermediate states captured for one round (None when not captured)."""

    round_no: int
    addkey_out: Optional[int]
    sbox_out: Optional[int]


def _check_state(s: int, name: str = "state") -> int:
    if not 0 <= s <= _MASK64:
        raise ValueError(f"{name} must be a 64-bit value")
    return s


def sbox(x: int) -> int:
    """4-bit S-box lookup."""
    if not 0 <= x <= 15:
        raise ValueError("S-box input must be a 4-bit value")
    return SBOX[x]


def sbox_inv(y: int) -> int:
    """Inverse 4-bit S-box lookup."""
    if not 0 <= y <= 15:
        raise ValueError("S-box input must be a 4-bit value")
    return SBOX_INV[y]


def sbox_layer(s: int) -> int:
    """Apply the S-box to each of the 16 state nibbles."""
    _check_state(s)
    out = 0
    for i in range(0, 64, 8):
        out |= _SBOX_BYTE[(s >> i) & 0xFF] << i
    return out


def sbox_layer_inv(s: int) -> int:
    _check_state(s)
    out = 0
    for i in range(0, 64, 8):
        out |= _SBOX_INV_BYTE[(s >> i) & 0xFF] << i
    return out


def p_layer(s: int) -> int:
    """Bit permutation: bit i moves to position 16*i mod 63 (bit 63 fixed)."""
    _check_state(s)
    t = _PLAYER_BYTE
    return (t[0][(s >> 56) & 0xFF] | t[1][(s >> 48) & 0xFF]
            | t[2][(s >> 40) & 0xFF] | t[3][(s >> 32) & 0xFF]
            | t[4][(s >> 24) & 0xFF] | t[5][(s >> 16) & 0xFF]
            | t[6][(s >> 8) & 0xFF] | t[7][s & 0xFF])


def p_layer_inv(s: int) -> int:
    _check_state(s)
    t = _PLAYER_INV_BYTE
    return (t[0][(s >> 56) & 0xFF] | t[1][(s >> 48) & 0xFF]
            | t[2][(s >> 40) & 0xFF] | t[3][(s >> 32) & 0xFF]
            | t[4][(s >> 24) & 0xFF] | t[5][(s >> 16) & 0xFF]
            | t[6][(s >> 8) & 0xFF] | t[7][s & 0xFF])


def add_round_key(s: int, k: int) -> int:
    _check_state(s)
    _check_state(k, "round key")
    return s ^ k


def key_schedule(key: KeyRegister) -> tuple:
    """Expand a key register into the 32 round keys K1..K32.

    K1 is the leftmost 64 bits of the initial register. Between rounds the
    register is rotated left by 61 bits, the top nibble (top two nibbles
    for 128-bit keys) passes through the S-box, and the round counter is
    XORed into bits 19..15 (66..62 for 128-bit keys).
    """
    reg = key.bits
    round_keys = []
    if key.width == 80:
        for i in range(1, 33):
            round_keys.append(reg >> 16)
            reg = ((reg & (1 << 19) - 1) << 61) | (reg >> 19)
            reg = (SBOX[reg >> 76] << 76) | (reg & (1 << 76) - 1)
            reg ^= i << 15
    else:
        for i in range(1, 33):
            round_keys.append(reg >> 64)
            reg = ((reg & (1 << 67) - 1) << 61) | (reg >> 67)
            reg = ((SBOX[reg >> 124] << 124)
                   | (SBOX[(reg >> 120) & 0xF] << 120)
                   | (reg & (1 << 120) - 1))
            reg ^= i << 62
    return tuple(round_keys)


def encrypt_block(p: int, key: KeyRegister) -> int:
    """Full 31-round encryption plus final key addition."""
    _check_state(p, "plaintext")
    rk = key_schedule(key)
    state = p
    for i in range(31):
        state = sbox_layer(state ^ rk[i])
        state = p_layer(state)
    return state ^ rk[31]


def decrypt_block(c: int, key: KeyRegister) -> int:
    """Exact inverse of :func:`encrypt_block`."""
    _check_state(c, "ciphertext")
    rk = key_schedule(key)
    state = c ^ rk[31]
    for i in range(30, -1, -1):
        state = sbox_layer_inv(p_layer_inv(state))
        state ^= rk[i]
    return state


def encrypt_rounds(p: int, key: KeyRegister, n_rounds: int,
                   capture: str = "both"):
    """Run only the first ``n_rounds`` rounds, recording intermediates.

    Each round is addRoundKey + sBoxLayer + pLayer; the returned state is
    the value after round ``n_rounds`` *before* any final key addition
    (``encrypt_block`` equals ``encrypt_rounds(p, key, 31)`` followed by
    XOR with K32). ``capture`` selects which stage outputs to record:
    ``"addkey"``, ``"sbox"`` or ``"both"``.

    Returns ``(state, captures)`` where ``captures`` is a list of
    :class:`RoundCapture`, one per executed round.
    """
    _check_state(p, "plaintext")
    if not 1 <= n_rounds <= 31:
        raise ValueError("n_rounds must be in 1..31")
    if capture not in ("addkey", "sbox", "both"):
        raise ValueError("capture must be 'addkey', 'sbox' or 'both'")
    want_addkey = capture in ("addkey", "both")
    want_sbox = capture in ("sbox", "both")

    rk = key_schedule(key)
    state = p
    captures = []
    for r in range(n_rounds):
        after_key = state ^ rk[r]
        after_sbox = sbox_layer(after_key)
        captures.append(RoundCapture(
            round_no=r + 1,
            addkey_out=after_key if want_addkey else None,
            sbox_out=after_sbox if want_sbox else None,
        ))
        state = p_layer(after_sbox)
    return state, captures


def state_bytes(s: int) -> bytes:
    """State as 8 bytes, most significant byte first (byte 0 = MSB)."""
    _check_state(s)
    return s.to_bytes(8, "big")


def state_from_bytes(b: bytes) -> int:
    if len(b) != 8:
        raise ValueError("state must be exactly 8 bytes")
    return int.from_bytes(b, "big")


# --- batch encryption over many 80-bit keys (numpy) -----------------------
#
# recover_full_key enumerates 2^16 candidate keys; a scalar loop over
# encrypt_block would take tens of seconds, so the schedule and the round
# function are replicated on uint64 lanes. The 80-bit register is carried
# as (top 64 bits, low 16 bits).

_SBOX_U64 = np.array(SBOX, dtype=np.uint64)
_SBOX_BYTE_U64 = np.array(_SBOX_BYTE, dtype=np.uint64)
_PLAYER_BYTE_U64 = tuple(np.array(t, dtype=np.uint64) for t in _PLAYER_BYTE)


def _batch_sbox_layer(state: np.ndarray) -> np.ndarray:
    out = np.zeros_like(state)
    for i in range(0, 64, 8):
        sh = np.uint64(i)
        out |= _SBOX_BYTE_U64[((state >> sh) & np.uint64(0xFF)).astype(np.int64)] << sh
    return out


def _batch_p_layer(state: np.ndarray) -> np.ndarray:
    out = np.zeros_like(state)
    for j in range(8):
        sh = np.uint64(8 * (7 - j))
        out |= _PLAYER_BYTE_U64[j][((state >> sh) & np.uint64(0xFF)).astype(np.int64)]
    return out


def batch_encrypt80(p: int, keys_hi: np.ndarray, keys_lo: np.ndarray) -> np.ndarray:
    """Encrypt one plaintext under many 80-bit keys at once.

    ``keys_hi`` holds each key's top 64 bits, ``keys_lo`` its low 16 bits.
    Returns the ciphertexts as a uint64 array.
    """
    _check_state(p, "plaintext")
    hi = np.asarray(keys_hi, dtype=np.uint64).copy()
    lo = np.asarray(keys_lo, dtype=np.uint64).copy()
    state = np.full(hi.shape, np.uint64(p), dtype=np.uint64)

    m16 = np.uint64(0xFFFF)
    m60 = np.uint64((1 << 60) - 1)
    for i in range(1, 33):
        rk = hi.copy()
        if i <= 31:
            state = _batch_p_layer(_batch_sbox_layer(state ^ rk))
        else:
            state ^= rk
            break
        # register update: rotate left 61, S-box on top nibble, counter XOR
        chunk19 = ((hi & np.uint64(7)) << np.uint64(16)) | lo
        new_hi = (chunk19 << np.uint64(45)) | (hi >> np.uint64(19))
        new_lo = (hi >> np.uint64(3)) & m16
        new_hi = (_SBOX_U64[(new_hi >> np.uint64(60)).astype(np.int64)]
                  << np.uint64(60)) | (new_hi & m60)
        new_hi ^= np.uint64(i >> 1)
        new_lo ^= np.uint64((i & 1) << 15)
        hi, lo = new_hi, new_lo
    return state
