"""evoforage: deterministic foraging-agent neuroevolution experiments.

Agents with paired action/reinforcement networks forage on a toroidal map;
evolution shapes their innate weights while, in the learning regimes, each
agent also teaches its own action network during its lifetime. Everything is
reproducible bit-for-bit from a seed, whether the compiled kernel or the
pure-Python engine does the stepping.
"""

from .engine import TraceBuffer, active_engine, run_generation_steps, use_engine
from .evolution import (
    EvolutionParams,
    Genome,
    GenomeMismatchError,
    crossover,
    mutate,
    next_generation,
    random_genome,
    select_parent_pair,
    spawn_phenotype,
)
from .experiment import (
    AggregateRow,
    ExperimentConfig,
    GenerationResult,
    GenerationStats,
    Mode,
    derive_run_rng,
    run_experiment,
    run_generation,
    run_replicates,
    summarize,
)
from .neural import (
    Action,
    LayerSpec,
    NetworkWeights,
    SelfTaughtController,
    SensoryInput,
    choose_action,
    forward,
    gradient_check,
    init_weights,
    self_teach,
)
from .world import (
    AgentState,
    FoodRegion,
    World,
    WorldConfig,
    apply_action,
    check_eat,
    food_region,
    init_world,
    relative_bearing,
    sense,
    world_step,
    wrap_angle,
    wrap_position,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AgentState",
    "AggregateRow",
    "EvolutionParams",
    "ExperimentConfig",
    "FoodRegion",
    "GenerationResult",
    "GenerationStats",
    "Genome",
    "GenomeMismatchError",
    "LayerSpec",
    "Mode",
    "NetworkWeights",
    "SelfTaughtController",
    "SensoryInput",
    "TraceBuffer",
    "World",
    "WorldConfig",
    "active_engine",
    "apply_action",
    "check_eat",
    "choose_action",
    "crossover",
    "derive_run_rng",
    "food_region",
    "forward",
    "gradient_check",
    "init_weights",
    "init_world",
    "mutate",
    "next_generation",
    "random_genome",
    "relative_bearing",
    "run_experiment",
    "run_generation",
    "run_generation_steps",
    "run_replicates",
    "select_parent_pair",
    "self_teach",
    "sense",
    "spawn_phenotype",
    "summarize",
    "use_engine",
    "world_step",
    "wrap_angle",
    "wrap_position",
]
