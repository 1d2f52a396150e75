"""Experiment regimes, replicate orchestration and result summaries.

Three regimes share one generational loop:

  EVO               innate controllers only, no lifetime learning
  EVO_SELF_TAUGHT   lifetime learning on top of evolved controllers
  SELF_TAUGHT_ALONE lifetime learning on fresh random controllers every
                    generation, with no evolution at all

Each replicate runs on its own PCG64 stream derived from (base_seed,
run_id), so replicates are independent and their results do not depend on
the order they are executed in.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import engine
from .engine import TraceBuffer
from .evolution import EvolutionParams, Genome, next_generation, random_genome, spawn_phenotype
from .neural import LayerSpec, SelfTaughtController, init_weights
from .world import WorldConfig, init_world


class Mode(str, enum.Enum):
    EVO = "EVO"
    EVO_SELF_TAUGHT = "EVO_SELF_TAUGHT"
    SELF_TAUGHT_ALONE = "SELF_TAUGHT_ALONE"

    def __str__(self) -> str:
        return self.value


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a full experiment."""

    mode: Mode = Mode.EVO
    world: WorldConfig = field(default_factory=WorldConfig)
    evo: EvolutionParams = field(default_factory=EvolutionParams)
    layers: LayerSpec = field(default_factory=LayerSpec)
    learning_rate: float = 0.01
    n_generations: int = 100
    steps_per_generation: int = 5000
    n_runs: int = 30
    base_seed: int = 0

    def validate(self) -> None:
        if not isinstance(self.mode, Mode):
            raise ValueError(f"mode must be a Mode, got {self.mode!r}")
        self.world.validate()
        self.evo.validate()
        self.layers.validate()
        if self.evo.population_size != self.world.n_agents:
            raise ValueError(
                "population_size must equal n_agents (every genome is "
                f"evaluated as one agent), got {self.evo.population_size} "
                f"and {self.world.n_agents}"
            )
        if self.layers.n_input != 3 or self.layers.n_output != 3:
            raise ValueError(
                "the arena provides 3 sensors and accepts 3 actions, so "
                "n_input and n_output must both be 3"
            )
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        for name in ("n_generations", "steps_per_generation", "n_runs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be nonnegative")


@dataclass
class GenerationStats:
    """One row of the stats table."""

    run_id: int
    generation: int
    mode: Mode
    map: str
    best_fitness: int
    mean_fitness: float


@dataclass
class GenerationResult:
    """Everything observable from one generation of one run."""

    fitnesses: list[int]
    respawns: int
    teach_steps: int
    trace: Optional[TraceBuffer] = None


def derive_run_rng(base_seed: int, run_id: int) -> np.random.Generator:
    """The replicate's private stream, pinned by the (base_seed, run_id) pair."""
    return np.random.default_rng(np.random.SeedSequence([base_seed, run_id]))


def run_generation(
    genomes: Optional[list[Genome]],
    config: ExperimentConfig,
    rng: np.random.Generator,
    trace: bool = False,
) -> GenerationResult:
    """Evaluate one generation from scratch: spawn, place, step, tally.

    In the evolutionary modes each genome is spawned into one phenotype
    agent (copies, so genomes stay untouched). In SELF_TAUGHT_ALONE the
    genomes argument is ignored and every agent instead gets fresh N(0, 1)
    weights drawn from rng, agent by agent, action network first.
    Fitness is the agent's energy total at the end of the generation.
    """
    wc = config.world
    if config.mode is Mode.SELF_TAUGHT_ALONE:
        controllers = []
        for _ in range(wc.n_agents):
            act = init_weights(config.layers, rng)
            reinf = init_weights(config.layers, rng)
            controllers.append(SelfTaughtController(act, reinf, config.learning_rate))
    else:
        if genomes is None or len(genomes) != wc.n_agents:
            got = "none" if genomes is None else str(len(genomes))
            raise ValueError(f"need {wc.n_agents} genomes, got {got}")
        controllers = [spawn_phenotype(g, config.learning_rate) for g in genomes]

    world = init_world(wc, controllers, rng)
    buf = None
    if trace:
        buf = TraceBuffer.allocate(config.steps_per_generation, wc.n_agents)
    learn = config.mode is not Mode.EVO
    respawns, taught = engine.run_generation_steps(
        world, rng, config.steps_per_generation, learn, buf
    )
    fitnesses = [agent.energy for agent in world.agents]
    return GenerationResult(fitnesses, respawns, taught, buf)


def run_experiment(
    config: ExperimentConfig,
    run_id: int = 0,
    trace_gens: Optional[set[int]] = None,
    on_trace: Optional[Callable[[int, GenerationResult], None]] = None,
) -> list[GenerationStats]:
    """One full replicate: n_generations of evaluate-record-breed.

    Tracing happens only when on_trace is given; trace_gens limits it to the
    listed generations (None traces all of them). The evolutionary modes
    breed a replacement population after every generation; SELF_TAUGHT_ALONE
    skips breeding entirely since its controllers never descend from the
    previous generation.
    """
    config.validate()
    rng = derive_run_rng(config.base_seed, run_id)
    evolving = config.mode is not Mode.SELF_TAUGHT_ALONE
    genomes = None
    if evolving:
        genomes = [random_genome(config.layers, rng) for _ in range(config.evo.population_size)]

    stats = []
    for gen in range(config.n_generations):
        want_trace = on_trace is not None and (trace_gens is None or gen in trace_gens)
        result = run_generation(genomes, config, rng, trace=want_trace)
        if want_trace:
            result.trace.generation = gen
            on_trace(gen, result)
        best = max(result.fitnesses)
        mean = sum(result.fitnesses) / len(result.fitnesses)
        stats.append(
            GenerationStats(run_id, gen, config.mode, config.world.map, best, mean)
        )
        if evolving:
            genomes = next_generation(genomes, result.fitnesses, config.evo, rng)
    return stats


def run_replicates(
    config: ExperimentConfig,
    progress: Optional[Callable[[int], None]] = None,
) -> list[GenerationStats]:
    """All n_runs replicates, run_id 0 through n_runs-1, concatenated."""
    config.validate()
    stats = []
    for run_id in range(config.n_runs):
        stats.extend(run_experiment(config, run_id))
        if progress is not None:
            progress(run_id)
    return stats


@dataclass
class AggregateRow:
    """Cross-run quartile summary of one generation (or of whole runs)."""

    scope: str  # "generation" or "whole_run"
    generation: Optional[int]
    best_mean: float
    best_median: float
    best_q1: float
    best_q3: float
    mean_mean: float
    mean_median: float
    mean_q1: float
    mean_q3: float


def _median(sorted_vals: list[float]) -> float:
    n = len(sorted_vals)
    mid = n // 2
    if n % 2:
        return float(sorted_vals[mid])
    return (sorted_vals[mid - 1] + sorted_vals[mid]) / 2.0


def _quartiles(values: list[float]) -> tuple[float, float, float]:
    # Tukey hinges: medians of the lower and upper halves, median excluded
    # from both halves when the count is odd.
    s = sorted(values)
    n = len(s)
    med = _median(s)
    if n == 1:
        return med, med, med
    half = n // 2
    return _median(s[:half]), med, _median(s[n - half :])


def _aggregate(scope, generation, bests, means) -> AggregateRow:
    bq1, bmed, bq3 = _quartiles(bests)
    mq1, mmed, mq3 = _quartiles(means)
    return AggregateRow(
        scope=scope,
        generation=generation,
        best_mean=sum(bests) / len(bests),
        best_median=bmed,
        best_q1=bq1,
        best_q3=bq3,
        mean_mean=sum(means) / len(means),
        mean_median=mmed,
        mean_q1=mq1,
        mean_q3=mq3,
    )


def summarize(stats: list[GenerationStats]) -> list[AggregateRow]:
    """Cross-run aggregates: one row per generation plus one whole-run row.

    Per-generation rows pool the runs' best_fitness and mean_fitness at that
    generation. The whole-run row pools each run's peak best_fitness and its
    mean_fitness averaged over all generations.
    """
    if not stats:
        raise ValueError("cannot summarize an empty stats list")
    by_gen: dict[int, tuple[list[float], list[float]]] = {}
    by_run: dict[int, tuple[list[float], list[float]]] = {}
    for s in stats:
        by_gen.setdefault(s.generation, ([], []))
        by_gen[s.generation][0].append(float(s.best_fitness))
        by_gen[s.generation][1].append(s.mean_fitness)
        by_run.setdefault(s.run_id, ([], []))
        by_run[s.run_id][0].append(float(s.best_fitness))
        by_run[s.run_id][1].append(s.mean_fitness)

    rows = []
    for gen in sorted(by_gen):
        bests, means = by_gen[gen]
        rows.append(_aggregate("generation", gen, bests, means))
    run_peaks = []
    run_means = []
    for run_id in sorted(by_run):
        bests, means = by_run[run_id]
        run_peaks.append(max(bests))
        run_means.append(sum(means) / len(means))
    rows.append(_aggregate("whole_run", None, run_peaks, run_means))
    return rows
