"""Flat key/value simulation config files.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored. Keys mirror the simulation parameters:

=============  =====================================================
key            value
=============  =====================================================
key            cipher key as 20 (80-bit) or 32 (128-bit) hex digits
seed           64-bit integer (falls back to $CEMATK_SEED if absent)
n_samples      samples per trace
sample_rate    Hz
gain           leak amplitude per Hamming-weight unit
baseline       constant trace offset
noise_std      Gaussian noise standard deviation per sample
leak_indices   8 comma-separated sample positions
leak_width     samples per leak pulse
carrier_freq   Hz, or ``none`` for baseband pulses
jitter_max     max per-repetition shift in samples
repetitions    encryption cycles averaged per trace
=============  =====================================================

Unknown keys are rejected. ``key`` is required; every other field has
the library default.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .leakage import LeakParams
from .present import KeyRegister
from .simulate import (DEFAULT_LEAK_INDICES, DEFAULT_LEAK_WIDTH,
                       DEFAULT_N_SAMPLES, DEFAULT_REPETITIONS,
                       DEFAULT_SAMPLE_RATE, SimConfig)

SEED_ENV_VAR = "CEMATK_SEED"

_KNOWN_KEYS = {"key", "seed", "n_samples", "sample_rate", "gain", "baseline",
               "noise_std", "leak_indices", "leak_width", "carrier_freq",
               "jitter_max", "repetitions"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into a raw string dict, rejecting unknown keys."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for '{key}'")
        values[key] = value
    return values


def _to_int(values: dict, key: str, default: int, source: str) -> int:
    if key not in values:
        return default
    try:
        return int(values[key], 0)
    except ValueError:
        raise ConfigError(f"{source}: '{key}' must be an integer, "
                          f"got '{values[key]}'") from None


def _to_float(values: dict, key: str, default: float, source: str) -> float:
    if key not in values:
        return default
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"{source}: '{key}' must be a number, "
                          f"got '{values[key]}'") from None


def sim_config_from_values(values: dict, source: str = "<config>",
                           env: Optional[dict] = None) -> SimConfig:
    """Build a SimConfig from parsed values, applying defaults and the
    CEMATK_SEED environment fallback."""
    env = os.environ if env is None else env
    if "key" not in values:
        raise ConfigError(f"{source}: required key 'key' is missing")
    try:
        key = KeyRegister.from_hex(values["key"])
    except ValueError as e:
        raise ConfigError(f"{source}: bad cipher key: {e}") from None

    if "seed" in values:
        seed = _to_int(values, "seed", 0, source)
    elif SEED_ENV_VAR in env:
        try:
            seed = int(env[SEED_ENV_VAR], 0)
        except ValueError:
            raise ConfigError(f"${SEED_ENV_VAR} must be an integer, "
                              f"got '{env[SEED_ENV_VAR]}'") from None
    else:
        raise ConfigError(f"{source}: no 'seed' in config and "
                          f"${SEED_ENV_VAR} is not set")

    if "leak_indices" in values:
        try:
            indices = tuple(int(p.strip(), 0)
                            for p in values["leak_indices"].split(","))
        except ValueError:
            raise ConfigError(f"{source}: 'leak_indices' must be "
                              "comma-separated integers") from None
    else:
        indices = DEFAULT_LEAK_INDICES

    carrier = None
    if "carrier_freq" in values and values["carrier_freq"].lower() != "none":
        carrier = _to_float(values, "carrier_freq", 0.0, source)

    try:
        return SimConfig(
            key=key,
            seed=seed,
            n_samples=_to_int(values, "n_samples", DEFAULT_N_SAMPLES, source),
            sample_rate=_to_float(values, "sample_rate", DEFAULT_SAMPLE_RATE, source),
            leak_params=LeakParams(
                a=_to_float(values, "gain", 1.0, source),
                b=_to_float(values, "baseline", 0.0, source),
            ),
            noise_std=_to_float(values, "noise_std", 0.0, source),
            leak_indices=indices,
            leak_width=_to_int(values, "leak_width", DEFAULT_LEAK_WIDTH, source),
            carrier_freq=carrier,
            jitter_max=_to_int(values, "jitter_max", 0, source),
            repetitions=_to_int(values, "repetitions", DEFAULT_REPETITIONS, source),
        )
    except ValueError as e:
        raise ConfigError(f"{source}: {e}") from None


def load_sim_config(path, env: Optional[dict] = None) -> SimConfig:
    """Read and validate a simulation config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    return sim_config_from_values(parse_config_text(text, str(path)),
                                  str(path), env)
