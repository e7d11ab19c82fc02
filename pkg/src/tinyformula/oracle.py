"""Synthetic accuracy oracle standing in for real training runs.

The numbers it produces are fixtures, not measurements. The curve saturates
with FLOPs, rewards resolutions near 1.1x the baseline and mildly penalizes
widths above 1x, so that a frontier built on it prefers to keep resolution
when shrinking. Noise is drawn from a PCG64 stream keyed by the oracle seed
and a digest of the record id, so a record's accuracy does not depend on
what else is in the store.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .search import ExperimentRecord

PLATEAU = 0.82
DROP = 0.04
EXPONENT = 0.35
RESOLUTION_BONUS = 0.015
RESOLUTION_PEAK = 1.1
RESOLUTION_WIDTH = 0.18
WIDTH_PENALTY = 0.01


@dataclass(frozen=True)
class OracleConfig:
    noise_sd: float = 0.003
    seed: int = 0

    def __post_init__(self):
        if not self.noise_sd >= 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _id_key(rid: str) -> int:
    return int.from_bytes(hashlib.sha256(rid.encode("utf-8")).digest()[:8], "little")


def oracle_accuracy(record: ExperimentRecord, cfg: OracleConfig = OracleConfig()) -> float:
    acc = PLATEAU - DROP * record.ratio ** (-EXPONENT)
    acc += RESOLUTION_BONUS * math.exp(-((record.r - RESOLUTION_PEAK) ** 2) / RESOLUTION_WIDTH)
    acc -= WIDTH_PENALTY * max(0.0, record.w - 1.0)
    if cfg.noise_sd > 0:
        seq = np.random.SeedSequence((cfg.seed, _id_key(record.id)))
        acc += cfg.noise_sd * np.random.Generator(np.random.PCG64(seq)).standard_normal()
    return float(min(1.0, max(0.0, acc)))


def label(records: Iterable[ExperimentRecord], cfg: OracleConfig = OracleConfig(),
          overwrite: bool = False) -> list[ExperimentRecord]:
    """Fill in synthetic accuracies; existing ones are kept unless ``overwrite``."""
    return [
        rec if rec.accuracy is not None and not overwrite
        else replace(rec, accuracy=oracle_accuracy(rec, cfg))
        for rec in records
    ]
