"""Genetic algorithm maximizing the separation objective over unmixing
matrices.

Individuals are complex sources x elements matrices with unit-norm rows.
Selection is roulette (fitness-proportional), crossover exchanges a random
subset of rows between two parents, and mutation adds small complex
Gaussian perturbations. Elitism keeps the best individual, so the best
fitness never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import modelsep
from .errors import ParameterError
from .scenario import SlowTimeSeries


@dataclass
class GAConfig:
    population: int = 100
    generations: int = 50
    seed: int = 0
    mutation_rate: float = 0.1  # per-entry perturbation probability
    mutation_scale: float = 0.1  # perturbation std relative to the row rms
    elitism: int = 1
    init_spread: float = 0.05  # std of the initial diversity perturbation

    def __post_init__(self):
        if self.population < 2:
            raise ParameterError("population must be >= 2")
        if self.generations < 1:
            raise ParameterError("generations must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ParameterError("mutation_rate must be in [0, 1]")
        if self.mutation_scale < 0 or self.init_spread < 0:
            raise ParameterError("scales must be >= 0")
        if not 0 <= self.elitism < self.population:
            raise ParameterError("elitism must be in [0, population)")


@dataclass
class Individual:
    """One candidate unmixing matrix and its fitness."""

    w: np.ndarray
    fitness: float


@dataclass
class GenerationRecord:
    """Best-of-generation snapshot for logs and convergence plots."""

    generation: int  # 1-based
    best_fitness: float
    mean_fitness: float
    best_w: np.ndarray
    breakdown: dict

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "best_fitness": self.best_fitness,
            "mean_fitness": self.mean_fitness,
            **{k: self.breakdown[k] for k in ("f1", "f2", "f3", "f4")},
        }


@dataclass
class GARunResult:
    history: list[GenerationRecord] = field(default_factory=list)
    best: Individual | None = None

    @property
    def best_fitness_trace(self) -> np.ndarray:
        return np.array([rec.best_fitness for rec in self.history])

    def best_w_at(self, generation: int) -> np.ndarray:
        """Best unmixing matrix of a 1-based generation index."""
        return self.history[generation - 1].best_w


def initialize(config: GAConfig, n_sources: int, n_elements: int, rng=None) -> np.ndarray:
    """Initial population around the all-ones matrix.

    Individual 0 is exactly the all-ones matrix with normalized rows; the
    others add a small seeded complex perturbation so the population is
    not degenerate. Shape: (population, n_sources, n_elements).
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    ones = np.ones((n_sources, n_elements), dtype=complex)
    pop = np.empty((config.population, n_sources, n_elements), dtype=complex)
    pop[0] = modelsep.normalize_rows(ones)
    for i in range(1, config.population):
        noise = config.init_spread * (
            rng.standard_normal((n_sources, n_elements))
            + 1j * rng.standard_normal((n_sources, n_elements))
        )
        pop[i] = modelsep.normalize_rows(ones + noise)
    return pop


def select(fitness: np.ndarray, rng, n_pairs: int) -> np.ndarray:
    """Roulette selection: parent index pairs drawn proportional to fitness.

    Falls back to uniform selection when every fitness is zero.
    """
    fitness = np.asarray(fitness, dtype=float)
    if np.any(fitness < 0):
        raise ParameterError("fitness values must be >= 0")
    total = fitness.sum()
    probs = None if total == 0 else fitness / total
    return rng.choice(len(fitness), size=(n_pairs, 2), p=probs)


def crossover(parent_a: np.ndarray, parent_b: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """Exchange a uniformly chosen nonempty proper subset of rows.

    With a single row the children are the swapped parents. Rows are
    re-normalized, which is a no-op when the parents already have unit rows.
    """
    if parent_a.shape != parent_b.shape:
        raise ParameterError("parents must have the same shape")
    n = parent_a.shape[0]
    if n == 1:
        return parent_b.copy(), parent_a.copy()
    while True:
        mask = rng.integers(0, 2, size=n).astype(bool)
        if mask.any() and not mask.all():
            break
    child_a = parent_a.copy()
    child_b = parent_b.copy()
    child_a[mask] = parent_b[mask]
    child_b[mask] = parent_a[mask]
    return modelsep.normalize_rows(child_a), modelsep.normalize_rows(child_b)


def mutate(w: np.ndarray, config: GAConfig, rng) -> np.ndarray:
    """Perturb entries with probability mutation_rate, then re-normalize.

    Perturbations are complex Gaussian with std mutation_scale times the
    row rms, so mutation strength is scale-free. The random draw count is
    independent of the mask, keeping runs reproducible.
    """
    mask = rng.random(w.shape) < config.mutation_rate
    noise = (rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape)) / np.sqrt(2.0)
    row_rms = np.linalg.norm(w, axis=1, keepdims=True) / np.sqrt(w.shape[1])
    mutated = w + mask * noise * (config.mutation_scale * row_rms)
    return modelsep.normalize_rows(mutated)


def run(
    x: SlowTimeSeries,
    n_sources: int,
    config: GAConfig,
    wavenumber: float,
    gamma: float = modelsep.DEFAULT_GAMMA,
    **objective_kwargs,
) -> GARunResult:
    """Evolve unmixing matrices and return the best-of-generation history.

    Fitness is the separation objective; candidates that fail to evaluate
    get fitness 0 and stay in the pool. Deterministic given (data, config).
    """
    if n_sources < 1 or n_sources > x.n_channels:
        raise ParameterError("n_sources must be in [1, n_channels]")
    rng = np.random.default_rng(config.seed)
    pop = initialize(config, n_sources, x.n_channels, rng)
    result = GARunResult()

    for gen in range(1, config.generations + 1):
        breakdowns = [
            modelsep.objective(w, x, wavenumber, gamma=gamma, **objective_kwargs)
            for w in pop
        ]
        fitness = np.array([b.f_total for b in breakdowns])
        best_idx = int(np.argmax(fitness))
        result.history.append(
            GenerationRecord(
                generation=gen,
                best_fitness=float(fitness[best_idx]),
                mean_fitness=float(fitness.mean()),
                best_w=pop[best_idx].copy(),
                breakdown=breakdowns[best_idx].to_dict(),
            )
        )
        if gen == config.generations:
            result.best = Individual(pop[best_idx].copy(), float(fitness[best_idx]))
            break

        next_pop = np.empty_like(pop)
        elite_order = np.argsort(-fitness)[: config.elitism]
        for slot, idx in enumerate(elite_order):
            next_pop[slot] = pop[idx]
        n_offspring = config.population - config.elitism
        pairs = select(fitness, rng, (n_offspring + 1) // 2)
        slot = config.elitism
        for ia, ib in pairs:
            child_a, child_b = crossover(pop[ia], pop[ib], rng)
            for child in (child_a, child_b):
                if slot < config.population:
                    next_pop[slot] = mutate(child, config, rng)
                    slot += 1
        pop = next_pop
    return result
