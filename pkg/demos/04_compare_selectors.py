"""
Comparing selectors
===================

Score the evolutionary selector, its ablations and the two one-shot
baselines on the same students. Each run applies a single ability update
from the chosen form and scores the held-out test responses.
"""
from dataclasses import replace

from oatest import EvolveConfig, ExperimentConfig, prepare, run_experiment
from oatest.config import DataSource
from oatest.data import SynthSpec

base = ExperimentConfig(data=DataSource(synth=SynthSpec()), test_lengths=(10,),
                        master_seed=42, max_students=20)
ws = prepare(base)

runs = {
    "random": replace(base, selector="random"),
    "greedy_fisher": replace(base, selector="greedy_fisher"),
    "peoat_basic": replace(base, selector="peoat_basic"),
    "peoat": base,
    "w/o PI": replace(base, evolve=EvolveConfig(use_personalized_init=False)),
    "w/o CE": replace(base, evolve=EvolveConfig(use_cognitive_operators=False)),
    "w/o ES": replace(base, evolve=EvolveConfig(use_diversity_selection=False)),
}
print(f"{'selector':>14}  {'ACC':>6}  {'AUC':>6}  {'fitness':>7}")
for name, cfg in runs.items():
    (agg,) = run_experiment(cfg, ws, write=False).aggregates
    print(f"{name:>14}  {agg['mean_acc']:.4f}  {agg['mean_auc']:.4f}  {agg['mean_fitness']:.4f}")
