"""Stable child seeds so that every trial is a pure function of (master seed, tag, index)."""

from __future__ import annotations

import hashlib
import os

import numpy as np

SEED_ENV = "CPSVERIFY_SEED"
DEFAULT_SEED = 0


def derive_seed(master: int, tag: str, index: int = 0) -> int:
    """64-bit child seed from a BLAKE2b digest; unaffected by other tags or indices."""
    digest = hashlib.blake2b(f"{int(master)}|{tag}|{int(index)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_rng(master: int, tag: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, tag, index))


def resolve_seed(cli_seed: int | None, config_seed: int | None = None) -> int:
    """Command line beats config, config beats ``CPSVERIFY_SEED``, else 0."""
    if cli_seed is not None:
        return int(cli_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{SEED_ENV}={env!r} is not an integer") from None
        if value < 0:
            raise ValueError(f"{SEED_ENV} must be non-negative")
        return value
    return DEFAULT_SEED
