"""Reporting-side log base. The library always computes in bits; the scale
is applied once, at the reporting boundary, to scalar entropies and rates.
Distributions are never rescaled.

Resolution order: explicit set_log_base call, then the COMIB_LOG_BASE
environment variable, then a flat key=value comib.toml in the working
directory, then bits.
"""

from __future__ import annotations

import math
import os

from .errors import DomainError

_VALID = ("bits", "nats")
_explicit: str | None = None


def _from_config_file() -> str | None:
    path = os.path.join(os.getcwd(), "comib.toml")
    if not os.path.isfile(path):
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line or "=" not in line:
                    continue
                key, _, val = line.partition("=")
                if key.strip() == "log_base":
                    return val.strip().strip("\"'")
    except OSError:
        return None
    return None


def set_log_base(base: str | None) -> None:
    """Pin the reporting base, or reset to the environment/config lookup
    with None."""
    global _explicit
    if base is not None and base not in _VALID:
        raise DomainError(f"log base must be one of {_VALID}, got {base!r}")
    _explicit = base


def get_log_base() -> str:
    if _explicit is not None:
        return _explicit
    env = os.environ.get("COMIB_LOG_BASE")
    if env:
        if env not in _VALID:
            raise DomainError(f"COMIB_LOG_BASE must be one of {_VALID}, got {env!r}")
        return env
    cfg = _from_config_file()
    if cfg:
        if cfg not in _VALID:
            raise DomainError(f"comib.toml log_base must be one of {_VALID}, got {cfg!r}")
        return cfg
    return "bits"


def scale_from_bits(x: float) -> float:
    """Scale a scalar in bits to the active reporting base: exact multiply
    by ln 2 for nats, identity for bits."""
    if get_log_base() == "nats":
        return x * math.log(2.0)
    return x
