"""Per-student evolutionary search for a one-shot test form.

An individual is a fixed-length tuple of distinct question ids drawn from the
student's candidate pool. The search alternates uniform crossover with
duplicate repair, information-weighted single-gene mutation, and a
(mu + lambda) survivor selection that keeps the top half by fitness and fills
the rest with individuals far (in set difference) from those already kept.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, StudentSplit
from .metrics import hybrid_score
from .mirt import MirtModel, UpdateConfig, fisher_scalars, predict_proba, virtual_update


@dataclass(frozen=True)
class EvolveConfig:
    population_size: int = 20
    generations: int = 15
    crossover_rate: float = 0.8
    mutation_rate: float = 0.2
    tau_coeff: float = 1.0
    diversity_base: float = 0.15
    max_fill_attempts: int = 3
    use_personalized_init: bool = True
    use_cognitive_operators: bool = True
    use_diversity_selection: bool = True

    def __post_init__(self):
        if not (0 <= self.crossover_rate <= 1 and 0 <= self.mutation_rate <= 1):
            raise ValueError("crossover and mutation rates must lie in [0, 1]")
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be an even number >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.max_fill_attempts < 1:
            raise ValueError("max_fill_attempts must be >= 1")

    def threshold(self, length: int) -> float:
        """Minimum set-difference distance a non-elite survivor must exceed."""
        return self.tau_coeff * self.diversity_base * length


@dataclass(frozen=True)
class Individual:
    genes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(int(g) for g in self.genes))

    def __len__(self):
        return len(self.genes)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.genes))


@dataclass
class Population:
    members: list[Individual]
    fitness: list[float | None]
    generation: int = 0

    def __len__(self):
        return len(self.members)

    def best(self) -> tuple[Individual, float]:
        i = max(range(len(self)), key=lambda j: (self.fitness[j], -j))
        return self.members[i], self.fitness[i]


@dataclass(frozen=True)
class DistanceVector:
    """Ability-to-item Euclidean distances over a candidate pool."""

    pool: np.ndarray
    values: np.ndarray

    def ascending(self) -> np.ndarray:
        return self.pool[np.argsort(self.values, kind="stable")]


@dataclass
class SelectionInfo:
    elites: list[int]
    passes_used: int
    admission_pass: dict[int, int] = field(default_factory=dict)


@dataclass
class EvolveResult:
    best: Individual
    best_fitness: float
    trace: list[tuple[int, float, float]]
    evaluations: int
    timed_out: bool = False


def check_individual(ind: Individual, length: int, pool) -> None:
    """Raise ValueError unless ``ind`` has ``length`` distinct genes from ``pool``."""
    genes = ind.genes
    if len(genes) != length:
        raise ValueError(f"expected {length} genes, got {len(genes)}")
    if len(set(genes)) != length:
        raise ValueError(f"duplicate genes in {genes}")
    allowed = set(int(q) for q in pool)
    outside = [g for g in genes if g not in allowed]
    if outside:
        raise ValueError(f"genes {outside} are not in the candidate pool")


def set_distance(a: Individual, b: Individual) -> int:
    """L - |a & b|, half the Hamming distance of the characteristic bit vectors."""
    return len(a.genes) - len(set(a.genes) & set(b.genes))


def build_distance_vector(model: MirtModel, theta0, candidate_pool) -> DistanceVector:
    pool = np.asarray(candidate_pool, dtype=np.int64)
    if pool.size == 0:
        raise ValueError("candidate pool is empty")
    diff = model.alpha[pool] - np.asarray(theta0, dtype=float)
    return DistanceVector(pool, np.sqrt(np.einsum("ij,ij->i", diff, diff)))


def _sample(rng, ids, length):
    return Individual(rng.choice(ids, size=length, replace=False))


def init_individual(dist: DistanceVector, length: int, strategy: str, rng) -> Individual:
    """One individual from the ``match``, ``diverse``, ``rand`` or ``uniform`` strategy."""
    asc = dist.ascending()
    if strategy == "match":
        return _sample(rng, asc[:2 * length], length)
    if strategy == "diverse":
        return _sample(rng, asc[::-1][:2 * length], length)
    if strategy == "rand":
        middle = asc[2 * length:len(asc) - 2 * length]
        return _sample(rng, middle if len(middle) >= length else asc, length)
    if strategy == "uniform":
        return _sample(rng, asc, length)
    raise ValueError(f"unknown strategy {strategy!r}")


STRATEGIES = ("match", "diverse", "rand")


def init_population(dist: DistanceVector, length: int, config: EvolveConfig, rng=None) -> Population:
    rng = np.random.default_rng(rng)
    if len(dist.pool) <= 4 * length:
        raise ValueError(f"candidate pool of {len(dist.pool)} is too small for length {length}")
    members = []
    for _ in range(config.population_size):
        if config.use_personalized_init:
            strategy = STRATEGIES[rng.integers(len(STRATEGIES))]
        else:
            strategy = "uniform"
        members.append(init_individual(dist, length, strategy, rng))
    return Population(members, [None] * len(members), 0)


def repair(genes, pool, rng) -> Individual:
    """Replace repeated genes, left to right, with fresh draws from the pool."""
    child = [int(g) for g in genes]
    pool = np.sort(np.asarray(pool, dtype=np.int64))
    seen = set()
    for k, g in enumerate(child):
        if g in seen:
            available = pool[~np.isin(pool, child)]
            if available.size == 0:
                raise ValueError("candidate pool too small to repair offspring")
            child[k] = int(available[rng.integers(available.size)])
        seen.add(child[k])
    return Individual(child)


def crossover(parent_a: Individual, parent_b: Individual, candidate_pool, rng=None,
              mask=None, uniform: bool = True) -> tuple[Individual, Individual]:
    """Positionwise swap under a Bernoulli(0.5) mask, then repair both children.

    ``mask[k] == 1`` keeps parent_a's gene in the first child. With
    ``uniform=False`` a single cut point is used instead.
    """
    rng = np.random.default_rng(rng)
    a = np.asarray(parent_a.genes)
    b = np.asarray(parent_b.genes)
    if mask is None:
        if uniform:
            mask = rng.random(len(a)) < 0.5
        else:
            cut = rng.integers(1, len(a)) if len(a) > 1 else 1
            mask = np.arange(len(a)) < cut
    mask = np.asarray(mask, dtype=bool)
    c1 = np.where(mask, a, b)
    c2 = np.where(mask, b, a)
    return repair(c1, candidate_pool, rng), repair(c2, candidate_pool, rng)


def mutate(individual: Individual, model: MirtModel, theta0, candidate_pool,
           config: EvolveConfig, rng=None, information=None) -> Individual:
    """With probability p_m swap one uniformly chosen gene for an unselected one.

    The incoming question is drawn proportionally to its Fisher information
    at ``theta0`` (uniformly when cognitive operators are off or every
    candidate carries zero information). ``information`` may supply
    precomputed values aligned with ``candidate_pool``.
    """
    rng = np.random.default_rng(rng)
    if rng.random() >= config.mutation_rate:
        return individual
    pool = np.asarray(candidate_pool, dtype=np.int64)
    order = np.argsort(pool, kind="stable")
    pool = pool[order]
    free = ~np.isin(pool, individual.genes)
    z = pool[free]
    if z.size == 0:
        raise ValueError("no unselected candidates to mutate into")
    pos = int(rng.integers(len(individual)))
    weights = None
    if config.use_cognitive_operators:
        if information is None:
            info = fisher_scalars(model, theta0, z)
        else:
            info = np.asarray(information, dtype=float)[order][free]
        total = info.sum()
        if total > 0:
            weights = info / total
    new = int(z[rng.choice(z.size, p=weights)])
    genes = list(individual.genes)
    genes[pos] = new
    return Individual(genes)


def evaluate_fitness(individual: Individual, model: MirtModel, theta0, split: StudentSplit,
                     update: UpdateConfig | None = None) -> float:
    """Hybrid AUC/accuracy on the test split after updating on the form's responses."""
    if len(split.test_q) == 0:
        raise ValueError("test split is empty")
    recorded = split.candidate_responses
    try:
        responses = [(q, recorded[q]) for q in individual.key]
    except KeyError as exc:
        raise ValueError(f"question {exc.args[0]} has no recorded response") from None
    theta = virtual_update(model, theta0, responses, update)
    eps = (update or UpdateConfig()).probability_clip
    return hybrid_score(predict_proba(model, theta, split.test_q, eps), split.test_r)


def _rank(fitness):
    return sorted(range(len(fitness)), key=lambda i: (-fitness[i], i))


def environmental_selection(parents: Population, offspring: list[Individual],
                            offspring_fitness: list[float], config: EvolveConfig,
                            return_info: bool = False):
    """Pick the next generation from parents plus offspring.

    The top half by fitness survives outright; remaining slots go, in
    descending fitness order, to individuals whose set distance to every
    survivor exceeds the threshold. Each further pass lowers the threshold
    linearly, and the last pass admits without constraint.
    """
    members = list(parents.members) + list(offspring)
    fitness = list(parents.fitness) + list(offspring_fitness)
    if any(f is None for f in fitness):
        raise ValueError("all fitness values must be evaluated before selection")
    size = config.population_size
    ranked = _rank(fitness)
    info = SelectionInfo(elites=[], passes_used=0)

    if not config.use_diversity_selection:
        chosen = ranked[:size]
        info.elites = chosen
    else:
        k = size // 2
        chosen = ranked[:k]
        info.elites = list(chosen)
        rest = ranked[k:]
        length = len(members[0])
        threshold = config.threshold(length)
        passes = config.max_fill_attempts
        for p in range(passes):
            if len(chosen) >= size:
                break
            info.passes_used = p + 1
            final = p == passes - 1
            limit = threshold * (1 - p / (passes - 1)) if passes > 1 else 0.0
            for i in rest:
                if len(chosen) >= size:
                    break
                if i in info.admission_pass or i in chosen:
                    continue
                if final or all(set_distance(members[i], members[j]) > limit for j in chosen):
                    chosen.append(i)
                    info.admission_pass[i] = p

    pop = Population([members[i] for i in chosen], [fitness[i] for i in chosen], parents.generation + 1)
    if return_info:
        # index into the returned population rather than the merged pool
        where = {i: n for n, i in enumerate(chosen)}
        info.elites = [where[i] for i in info.elites]
        info.admission_pass = {where[i]: p for i, p in info.admission_pass.items()}
        return pop, info
    return pop


class FitnessCache:
    """Memoized fitness for one student, keyed by the sorted gene set."""

    def __init__(self, model, theta0, split, update):
        self.model = model
        self.theta0 = np.asarray(theta0, dtype=float)
        self.split = split
        self.update = update
        self.table: dict[tuple[int, ...], float] = {}

    def __call__(self, ind: Individual) -> float:
        key = ind.key
        if key not in self.table:
            self.table[key] = evaluate_fitness(ind, self.model, self.theta0, self.split, self.update)
        return self.table[key]


def evolve(student: int, dataset: Dataset, model: MirtModel, config: EvolveConfig | None = None,
           update: UpdateConfig | None = None, length: int = 10, rng=None,
           theta0=None, time_limit: float | None = None) -> EvolveResult:
    """Search for the test form of ``length`` questions that maximizes fitness.

    ``theta0`` defaults to the student's row of ``model.theta``. The returned
    trace holds ``(generation, best, mean)`` for generation 0 (the initial
    population) through ``config.generations``.
    """
    config = config or EvolveConfig()
    rng = np.random.default_rng(rng)
    split = dataset.splits[student]
    theta0 = model.theta[student] if theta0 is None else np.asarray(theta0, dtype=float)
    pool = np.sort(split.candidate_q)
    information = fisher_scalars(model, theta0, pool)
    fit = FitnessCache(model, theta0, split, update)
    started = time.monotonic()

    pop = init_population(build_distance_vector(model, theta0, pool), length, config, rng)
    pop.fitness = [fit(ind) for ind in pop.members]
    best, best_f = pop.best()
    trace = [(0, best_f, float(np.mean(pop.fitness)))]
    timed_out = False

    for g in range(1, config.generations + 1):
        if time_limit is not None and time.monotonic() - started > time_limit:
            timed_out = True
            break
        perm = rng.permutation(len(pop))
        children = []
        for i in range(0, len(perm), 2):
            a, b = pop.members[perm[i]], pop.members[perm[i + 1]]
            if rng.random() < config.crossover_rate:
                a, b = crossover(a, b, pool, rng, uniform=config.use_cognitive_operators)
            children.append(mutate(a, model, theta0, pool, config, rng, information))
            children.append(mutate(b, model, theta0, pool, config, rng, information))
        child_fitness = [fit(c) for c in children]
        pop = environmental_selection(pop, children, child_fitness, config)
        cand, cand_f = pop.best()
        if cand_f > best_f:
            best, best_f = cand, cand_f
        trace.append((g, cand_f, float(np.mean(pop.fitness))))

    return EvolveResult(best, best_f, trace, len(fit.table), timed_out)
