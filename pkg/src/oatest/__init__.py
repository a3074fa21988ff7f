"""One-shot adaptive testing: assemble a whole test form per student in a single shot."""
from .baselines import select_greedy_fisher, select_random
from .config import ExperimentConfig, load_config
from .data import (
    Dataset,
    GroundTruth,
    Interaction,
    SplitConfig,
    StudentSplit,
    SynthSpec,
    load_dataset,
    synthesize_dataset,
)
from .engine import (
    EvolveConfig,
    Individual,
    Population,
    build_distance_vector,
    crossover,
    environmental_selection,
    evaluate_fitness,
    evolve,
    init_population,
    mutate,
)
from .errors import ConfigError, DataError, ExperimentError, OatError, TrainingError
from .metrics import hybrid_score, metric_acc, metric_auc
from .mirt import (
    MirtModel,
    PretrainConfig,
    UpdateConfig,
    fisher_scalar,
    init_theta0,
    predict,
    pretrain,
    virtual_update,
)
from .harness import OatReport, prepare, run_experiment, run_tau_sweep

__version__ = "0.1.0"
