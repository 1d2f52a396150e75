"""Genomes and the generational loop's genetic operators.

A genome stores the innate weights of both controller networks. Evolution is
strictly Darwinian here: each generation evaluates freshly spawned phenotype
copies, and whatever the lifetime learning did to those copies is thrown
away. Selection is fitness proportionate with replacement, crossover picks
each weight position from the fitter parent with probability one half, and
mutation independently jitters a small fraction of weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from bisect import bisect_right

import numpy as np

from .neural import LayerSpec, NetworkWeights, SelfTaughtController, init_weights


class GenomeMismatchError(ValueError):
    """Raised when two genomes cannot be crossed because shapes differ."""


@dataclass
class EvolutionParams:
    population_size: int = 20
    mutation_rate: float = 0.05
    mutation_amplitude: float = 0.05

    def validate(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be at least 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not self.mutation_amplitude >= 0.0:
            raise ValueError("mutation_amplitude must be nonnegative")


@dataclass
class Genome:
    """Heritable weights: the innate state of both controller networks."""

    innate_action: NetworkWeights
    innate_reinforcement: NetworkWeights

    def flat(self) -> np.ndarray:
        """All weights as one vector: action w_ih, action w_ho, then the
        reinforcement pair in the same order, each raveled row-major."""
        return np.concatenate(
            [
                self.innate_action.w_ih.ravel(),
                self.innate_action.w_ho.ravel(),
                self.innate_reinforcement.w_ih.ravel(),
                self.innate_reinforcement.w_ho.ravel(),
            ]
        )

    @classmethod
    def from_flat(cls, values: np.ndarray, template: "Genome") -> "Genome":
        """Rebuild a genome from a flat vector, using template's shapes."""
        mats = []
        offset = 0
        for src in (
            template.innate_action.w_ih,
            template.innate_action.w_ho,
            template.innate_reinforcement.w_ih,
            template.innate_reinforcement.w_ho,
        ):
            n = src.size
            mats.append(values[offset : offset + n].reshape(src.shape).copy())
            offset += n
        return cls(NetworkWeights(mats[0], mats[1]), NetworkWeights(mats[2], mats[3]))

    def copy(self) -> "Genome":
        return Genome(self.innate_action.copy(), self.innate_reinforcement.copy())


def random_genome(spec: LayerSpec, rng: np.random.Generator) -> Genome:
    """Fresh genome with every weight N(0, 1); action half drawn first."""
    return Genome(init_weights(spec, rng), init_weights(spec, rng))


def spawn_phenotype(genome: Genome, learning_rate: float = 0.01) -> SelfTaughtController:
    """Deep-copy the innate weights into a controller ready to live and learn.

    The copies keep lifetime learning from ever touching the genome, which is
    what makes the process Darwinian rather than Lamarckian.
    """
    return SelfTaughtController(
        genome.innate_action.copy(),
        genome.innate_reinforcement.copy(),
        learning_rate,
    )


def _pick_proportionate(cumulative, total, n, rng: np.random.Generator) -> int:
    if total == 0:
        return int(rng.integers(n))
    r = rng.random() * total
    idx = bisect_right(cumulative, r)
    return min(idx, n - 1)


def select_parent_pair(fitnesses: list[int], rng: np.random.Generator) -> tuple[int, int]:
    """Two independent fitness-proportionate draws (with replacement).

    Zero-fitness individuals are never selected unless every fitness is zero,
    in which case both picks fall back to uniform draws. One random draw per
    pick, first parent first.
    """
    n = len(fitnesses)
    if n == 0:
        raise ValueError("cannot select from an empty population")
    total = sum(fitnesses)
    cumulative = list(accumulate(fitnesses))
    first = _pick_proportionate(cumulative, total, n, rng)
    second = _pick_proportionate(cumulative, total, n, rng)
    return first, second


def crossover(
    parent1: Genome,
    fitness1: int,
    parent2: Genome,
    fitness2: int,
    rng: np.random.Generator,
) -> Genome:
    """Positionwise recombination biased toward neither position ordering.

    For every weight position one uniform draw u decides the donor: the
    fitter parent's value when u > 0.5, the other parent's otherwise. On
    equal fitness parent1 counts as the fitter one. The child contains only
    copied parental values.
    """
    a = parent1.flat()
    b = parent2.flat()
    if a.size != b.size:
        raise GenomeMismatchError(
            f"genome sizes differ: {a.size} vs {b.size}"
        )
    if fitness1 >= fitness2:
        fitter, other = a, b
    else:
        fitter, other = b, a
    u = rng.random(a.size)
    child = np.where(u > 0.5, fitter, other)
    return Genome.from_flat(child, parent1)


def mutate(genome: Genome, params: EvolutionParams, rng: np.random.Generator) -> Genome:
    """Independent per-weight jitter.

    Each position mutates with probability mutation_rate; a mutated weight
    gets a uniform offset from [-amplitude, amplitude) added. Draw order: one
    uniform per position for the coin flips, then one uniform per mutated
    position for the offsets.
    """
    flat = genome.flat()
    u = rng.random(flat.size)
    mask = u < params.mutation_rate
    count = int(mask.sum())
    if count:
        amp = params.mutation_amplitude
        flat[mask] += -amp + (2.0 * amp) * rng.random(count)
    return Genome.from_flat(flat, genome)


def next_generation(
    genomes: list[Genome],
    fitnesses: list[int],
    params: EvolutionParams,
    rng: np.random.Generator,
) -> list[Genome]:
    """Breed a full replacement population; no survivors, no elitism.

    Repeats population_size times: select a parent pair, cross them, mutate
    the child. Parents come from the evaluated genomes only, so learned
    lifetime weights cannot leak into the offspring.
    """
    if len(genomes) != params.population_size or len(fitnesses) != params.population_size:
        raise ValueError(
            "genomes and fitnesses must both match population_size "
            f"({params.population_size}), got {len(genomes)} and {len(fitnesses)}"
        )
    children = []
    for _ in range(params.population_size):
        i, j = select_parent_pair(fitnesses, rng)
        child = crossover(genomes[i], fitnesses[i], genomes[j], fitnesses[j], rng)
        children.append(mutate(child, params, rng))
    return children
