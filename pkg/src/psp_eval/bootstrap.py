"""Clustered percentile bootstrap for 95% confidence intervals.

Utterances are the default resampling unit: tokens inside one utterance
share acoustic context, so resampling whole utterances is the conservative
choice. Each replicate draws its random stream from
``numpy.random.default_rng([seed, replicate_index])`` (PCG64 behind a
SeedSequence), so results are identical regardless of execution order or
thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput

STATISTICS = ("pooled_mean", "collapse_rate")


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 1000
    alpha: float = 0.05
    seed: int = 0
    resample_unit: str = "utterance"  # or "token"

    def __post_init__(self):
        if self.replicates < 100:
            raise ValueError(f"replicates must be >= 100, got {self.replicates}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.resample_unit not in ("utterance", "token"):
            raise ValueError(f"unknown resample unit {self.resample_unit!r}")


def bootstrap_ci(
    groups: Sequence[Sequence[float]],
    statistic: str = "pooled_mean",
    config: BootstrapConfig = BootstrapConfig(),
) -> tuple[float, float]:
    """Percentile CI for a pooled statistic over per-utterance value lists.

    For ``pooled_mean`` the values are the token statistics themselves; for
    ``collapse_rate`` they are 0/1 collapse indicators (the pooled mean of
    indicators is the collapse fraction). Empty groups are dropped. Returns
    (low, high) at the (alpha/2, 1-alpha/2) percentiles of the replicate
    distribution.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    kept = [np.asarray(g, dtype=np.float64) for g in groups if len(g) > 0]
    if not kept:
        raise EmptyInput("no utterance groups with tokens")

    if config.resample_unit == "token":
        pooled = np.concatenate(kept)
        sums, counts = pooled, np.ones_like(pooled)
    else:
        sums = np.array([g.sum() for g in kept])
        counts = np.array([float(g.size) for g in kept])

    n = sums.shape[0]
    stats = np.empty(config.replicates)
    for r in range(config.replicates):
        rng = np.random.default_rng([config.seed, r])
        idx = rng.integers(0, n, size=n)
        stats[r] = sums[idx].sum() / counts[idx].sum()
    low, high = np.quantile(stats, [config.alpha / 2.0, 1.0 - config.alpha / 2.0])
    return float(low), float(high)
