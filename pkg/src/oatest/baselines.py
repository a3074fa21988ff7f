"""Non-evolutionary one-shot selectors used as comparison points."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .engine import EvolveConfig, Individual
from .mirt import MirtModel, fisher_scalars

SELECTORS = ("peoat", "peoat_basic", "random", "greedy_fisher")


def basic_config(config: EvolveConfig) -> EvolveConfig:
    """The plain evolutionary variant: all three guided components switched off."""
    return replace(
        config,
        use_personalized_init=False,
        use_cognitive_operators=False,
        use_diversity_selection=False,
    )


def _pool(candidate_pool, length):
    pool = np.unique(np.asarray(list(candidate_pool), dtype=np.int64))
    if pool.size < length:
        raise ValueError(f"pool of {pool.size} questions cannot fill a form of length {length}")
    return pool


def select_random(candidate_pool, length: int, rng=None) -> Individual:
    """``length`` distinct questions drawn uniformly without replacement."""
    pool = _pool(candidate_pool, length)
    return Individual(np.random.default_rng(rng).choice(pool, size=length, replace=False))


def select_greedy_fisher(model: MirtModel, theta0, candidate_pool, length: int) -> Individual:
    """The ``length`` most informative questions at ``theta0``; ties go to the smaller id."""
    pool = _pool(candidate_pool, length)
    info = fisher_scalars(model, theta0, pool)
    order = np.lexsort((pool, -info))
    return Individual(pool[order[:length]])
