"""Binary trace-set file format (.cemt).

Layout, all little-endian:

====== ====== ===========================================
offset size   field
====== ====== ===========================================
0      4      magic ``b"CEMT"``
4      4      version (uint32, currently 1)
8      4      n_traces (uint32, > 0)
12     4      n_samples (uint32, > 0)
16     8      sample_rate in Hz (float64)
24     4      flags (uint32; bit 0 set = idle set)
28     8      seed (uint64)
36     28     reserved, must be zero
64     8*T    plaintexts, 8 bytes per trace, MSB first
...    4*T*S  samples, row-major float32
====== ====== ===========================================

Total size is exactly ``64 + 8*n_traces + 4*n_traces*n_samples`` bytes.
Plaintexts live inside the file so an attack needs a single artifact; the
key is never stored.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (TraceFileError, TraceFileLengthError,
                     TraceFileMagicError, TraceFileVersionError)
from .simulate import TraceSet

MAGIC = b"CEMT"
VERSION = 1
HEADER_SIZE = 64
FLAG_IDLE = 0x1

_HEADER = struct.Struct("<4sIIIdIQ28x")
assert _HEADER.size == HEADER_SIZE


def file_size(n_traces: int, n_samples: int) -> int:
    """Exact byte count of a trace file with the given geometry."""
    return HEADER_SIZE + 8 * n_traces + 4 * n_traces * n_samples


def write_traceset(ts: TraceSet, path) -> None:
    """Write a trace set; bit-exact and platform-independent."""
    path = Path(path)
    flags = FLAG_IDLE if ts.provenance.get("kind") == "idle" else 0
    seed = int(ts.provenance.get("seed", 0)) & 0xFFFFFFFFFFFFFFFF
    header = _HEADER.pack(MAGIC, VERSION, ts.n_traces, ts.n_samples,
                          float(ts.sample_rate), flags, seed)
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(ts.plaintexts.astype("<u1").tobytes())
            f.write(ts.traces.astype("<f4").tobytes())
    except OSError as e:
        raise TraceFileError(f"cannot write trace file {path}: {e}") from e


def read_traceset(path) -> TraceSet:
    """Read and validate a trace set written by :func:`write_traceset`."""
    path = Path(path)
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise TraceFileError(f"cannot read trace file {path}: {e}") from e

    if len(data) < 4 or data[:4] != MAGIC:
        raise TraceFileMagicError(f"{path}: not a CEMT trace file")
    if len(data) < HEADER_SIZE:
        raise TraceFileLengthError(f"{path}: truncated header "
                                   f"({len(data)} of {HEADER_SIZE} bytes)")
    magic, version, n_traces, n_samples, sample_rate, flags, seed = \
        _HEADER.unpack_from(data)
    if version != VERSION:
        raise TraceFileVersionError(
            f"{path}: unsupported trace file version {version}")
    if n_traces == 0 or n_samples == 0:
        raise TraceFileLengthError(f"{path}: empty trace geometry in header")
    expected = file_size(n_traces, n_samples)
    if len(data) != expected:
        raise TraceFileLengthError(
            f"{path}: file is {len(data)} bytes but header geometry "
            f"({n_traces} x {n_samples}) requires {expected}")

    pt_end = HEADER_SIZE + 8 * n_traces
    plaintexts = np.frombuffer(data[HEADER_SIZE:pt_end],
                               dtype=np.uint8).reshape(n_traces, 8)
    traces = np.frombuffer(data[pt_end:],
                           dtype="<f4").reshape(n_traces, n_samples)
    provenance = {
        "kind": "idle" if flags & FLAG_IDLE else "encryption",
        "seed": seed,
    }
    return TraceSet(traces.copy(), plaintexts.copy(), sample_rate, provenance)
