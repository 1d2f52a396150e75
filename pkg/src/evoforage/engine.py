"""Engine selection: compiled generation loop with a pure-Python fallback.

Both engines run the exact same float operations in the exact same order and
draw from the same PCG64 stream, so their outputs are bit-identical; the
compiled one is simply faster. The active engine is chosen at import time
(compiled when the extension built, pure otherwise) and can be forced with
the EVOFORAGE_ENGINE environment variable or use_engine().
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .world import World, world_step

try:
    from . import _kernel
except ImportError:
    _kernel = None

ENGINE_ENV_VAR = "EVOFORAGE_ENGINE"
_VALID = ("compiled", "pure")


def _default_engine() -> str:
    forced = os.environ.get(ENGINE_ENV_VAR, "").strip().lower()
    if forced:
        if forced not in _VALID:
            raise ValueError(
                f"{ENGINE_ENV_VAR} must be one of {_VALID}, got {forced!r}"
            )
        if forced == "compiled" and _kernel is None:
            raise ImportError(
                f"{ENGINE_ENV_VAR}=compiled but the evoforage._kernel extension "
                "is not built"
            )
        return forced
    return "compiled" if _kernel is not None else "pure"


_active = _default_engine()


def active_engine() -> str:
    return _active


def use_engine(name: str) -> None:
    """Force an engine ('compiled' or 'pure'); mostly for tests and benchmarks."""
    global _active
    if name not in _VALID:
        raise ValueError(f"engine must be one of {_VALID}, got {name!r}")
    if name == "compiled" and _kernel is None:
        raise ImportError("the evoforage._kernel extension is not built")
    _active = name


@dataclass
class TraceBuffer:
    """Flat per-(step, agent) record of one traced generation.

    Rows are laid out step-major then agent-minor, matching execution order.
    Each row holds the agent's pose and energy at the end of its sub-step
    plus the action it took.
    """

    generation: int
    n_steps: int
    n_agents: int
    step: np.ndarray
    agent_id: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    energy: np.ndarray
    action: np.ndarray

    @classmethod
    def allocate(cls, n_steps: int, n_agents: int, generation: int = 0) -> "TraceBuffer":
        n = n_steps * n_agents
        return cls(
            generation=generation,
            n_steps=n_steps,
            n_agents=n_agents,
            step=np.zeros(n, dtype=np.int32),
            agent_id=np.zeros(n, dtype=np.int32),
            x=np.zeros(n, dtype=np.float64),
            y=np.zeros(n, dtype=np.float64),
            heading=np.zeros(n, dtype=np.float64),
            energy=np.zeros(n, dtype=np.int64),
            action=np.zeros(n, dtype=np.int8),
        )

    def __len__(self) -> int:
        return self.step.shape[0]


def run_generation_steps(
    world: World,
    rng: np.random.Generator,
    n_steps: int,
    learn: bool,
    trace: Optional[TraceBuffer] = None,
) -> tuple[int, int]:
    """Advance the world n_steps with the active engine.

    Mutates the world (and the rng state) in place and fills trace when one
    is given. Returns (total respawns, total self-teach calls).
    """
    if _active == "compiled" and _homogeneous_lr(world):
        return _run_compiled(world, rng, n_steps, learn, trace)
    return _run_pure(world, rng, n_steps, learn, trace)


def _homogeneous_lr(world) -> bool:
    # the kernel takes a single learning rate; mixed-rate worlds (never
    # produced by the experiment layer) must take the pure path
    agents = world.agents
    return all(
        a.controller.learning_rate == agents[0].controller.learning_rate
        for a in agents
    )


def _run_pure(world, rng, n_steps, learn, trace):
    respawns = 0
    taught = 0
    n_agents = len(world.agents)
    on_agent = None
    if trace is not None:
        step_box = [0]

        def on_agent(i, agent, action):
            row = step_box[0] * n_agents + i
            trace.step[row] = step_box[0]
            trace.agent_id[row] = i
            trace.x[row] = agent.x
            trace.y[row] = agent.y
            trace.heading[row] = agent.heading
            trace.energy[row] = agent.energy
            trace.action[row] = int(action)

    for step in range(n_steps):
        if trace is not None:
            step_box[0] = step
        r, t = world_step(world, rng, learn, on_agent)
        respawns += r
        taught += t
    return respawns, taught


def _run_compiled(world, rng, n_steps, learn, trace):
    agents = world.agents
    config = world.config
    region = world.region
    n_agents = len(agents)

    # marshal: stack controller weights and poses into flat C-ready arrays
    a_wih = np.stack([a.controller.action.w_ih for a in agents])
    a_who = np.stack([a.controller.action.w_ho for a in agents])
    r_wih = np.stack([a.controller.reinforcement.w_ih for a in agents])
    r_who = np.stack([a.controller.reinforcement.w_ho for a in agents])
    xs = np.array([a.x for a in agents], dtype=np.float64)
    ys = np.array([a.y for a in agents], dtype=np.float64)
    headings = np.array([a.heading for a in agents], dtype=np.float64)
    energies = np.array([a.energy for a in agents], dtype=np.int64)
    food_x = np.array([f[0] for f in world.foods], dtype=np.float64)
    food_y = np.array([f[1] for f in world.foods], dtype=np.float64)

    if trace is not None:
        tracing = True
        t_arrays = (trace.step, trace.agent_id, trace.x, trace.y,
                    trace.heading, trace.energy, trace.action)
    else:
        tracing = False
        t_arrays = (
            np.zeros(1, dtype=np.int32), np.zeros(1, dtype=np.int32),
            np.zeros(1, dtype=np.float64), np.zeros(1, dtype=np.float64),
            np.zeros(1, dtype=np.float64), np.zeros(1, dtype=np.int64),
            np.zeros(1, dtype=np.int8),
        )

    learning_rate = agents[0].controller.learning_rate if agents else 0.01
    with rng.bit_generator.lock:
        respawns, taught = _kernel.run_generation(
            a_wih, a_who, r_wih, r_who,
            xs, ys, headings, energies,
            food_x, food_y,
            config.width, config.height,
            config.vision_radius, config.eat_distance,
            config.base_speed, config.turn_angle,
            region.x_min, region.x_max, region.y_min, region.y_max,
            learning_rate, n_steps, learn,
            rng.bit_generator,
            tracing, *t_arrays,
        )

    # unmarshal: write everything the kernel touched back into the world
    for i, agent in enumerate(agents):
        agent.x = float(xs[i])
        agent.y = float(ys[i])
        agent.heading = float(headings[i])
        agent.energy = int(energies[i])
        agent.controller.action.w_ih[:] = a_wih[i]
        agent.controller.action.w_ho[:] = a_who[i]
    world.foods = [(float(food_x[i]), float(food_y[i])) for i in range(len(world.foods))]
    return respawns, taught
