"""Toroidal foraging arena: geometry, sensing and per-step dynamics.

The arena is a width x height torus with a y-down coordinate frame, so
headings and bearings grow clockwise. Agents move at a fixed speed, turn in
fixed angular increments, and eat any food item within reach; eaten food
reappears immediately at a fresh uniform position inside the map's food
region, which is the only stochastic event inside a step.

The float recipes in this module (wrapping, toroidal deltas, bearings,
displacement) are mirrored operation-for-operation by the compiled kernel;
change them only in both places.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .neural import (
    Action,
    SelfTaughtController,
    SensoryInput,
    choose_action,
    forward,
    self_teach,
)

DEG_TO_RAD = math.pi / 180.0
RAD_TO_DEG = 180.0 / math.pi

# Agents start inside a disc of this radius around (width/4, height/4).
SPAWN_DISC_RADIUS = 40.0

# Sensor cone half-widths, degrees clockwise from the heading.
FRONT_HALF_ANGLE = 15.0
SIDE_CONE_LIMIT = 45.0


@dataclass
class WorldConfig:
    """Arena dimensions, population counts and motion/sensing constants."""

    width: float = 640.0
    height: float = 640.0
    n_agents: int = 20
    n_food: int = 50
    body_size: float = 10.0
    vision_radius: float = 40.0
    eat_distance: float = 10.0
    base_speed: float = 1.0
    turn_angle: float = 9.0
    map: str = "A"

    def validate(self) -> None:
        if not self.width > 0 or not self.height > 0:
            raise ValueError("width and height must be positive")
        if self.n_agents < 1:
            raise ValueError("n_agents must be at least 1")
        if self.n_food < 1:
            raise ValueError("n_food must be at least 1")
        for name in ("body_size", "vision_radius", "eat_distance", "base_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.turn_angle < 360.0:
            raise ValueError("turn_angle must lie in (0, 360)")
        if self.map not in ("A", "B"):
            raise ValueError(f"map must be 'A' or 'B', got {self.map!r}")


@dataclass(frozen=True)
class FoodRegion:
    """Axis-aligned rectangle food respawns into."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float


def food_region(config: WorldConfig) -> FoodRegion:
    """The map's food rectangle.

    Map A places food up and to the right of the agents' spawn disc, within
    easy reach of a straight-line path. Map B uses the same x band but
    mirrors the y band to the bottom of the arena, far from the spawn disc.
    """
    w, h = config.width, config.height
    if config.map == "A":
        return FoodRegion(w * 5.0 / 8.0, w * 7.0 / 8.0, h * 1.0 / 8.0, h * 3.0 / 8.0)
    return FoodRegion(w * 5.0 / 8.0, w * 7.0 / 8.0, h * 5.0 / 8.0, h * 7.0 / 8.0)


@dataclass
class AgentState:
    """Pose, per-generation energy tally and the controller driving it."""

    x: float
    y: float
    heading: float
    energy: int
    controller: SelfTaughtController


@dataclass
class World:
    config: WorldConfig
    agents: list[AgentState]
    foods: list[tuple[float, float]]
    region: FoodRegion = field(init=False)

    def __post_init__(self):
        self.region = food_region(self.config)


def _wrap_coord(v: float, size: float) -> float:
    v = math.fmod(v, size)
    if v < 0.0:
        v += size
    if v >= size:
        v -= size
    return v


def wrap_position(x: float, y: float, config: WorldConfig) -> tuple[float, float]:
    """Map any finite point onto the torus, each coordinate into [0, size)."""
    return _wrap_coord(x, config.width), _wrap_coord(y, config.height)


def wrap_angle(deg: float) -> float:
    """Normalize an angle in degrees into [0, 360)."""
    deg = math.fmod(deg, 360.0)
    if deg < 0.0:
        deg += 360.0
    if deg >= 360.0:
        deg -= 360.0
    return deg


def torus_delta(a: float, b: float, size: float) -> float:
    """Shortest signed displacement from a to b along one wrapped axis.

    Both inputs must already lie in [0, size); the result is in
    [-size/2, size/2].
    """
    d = b - a
    if d > 0.5 * size:
        d -= size
    elif d < -0.5 * size:
        d += size
    return d


def relative_bearing(agent: AgentState, point: tuple[float, float], config: WorldConfig) -> float:
    """Clockwise angle from the agent's heading to a point, in [0, 360).

    Uses the shortest toroidal displacement. A point exactly on the agent has
    no direction and reports bearing 0.
    """
    ax, ay = wrap_position(agent.x, agent.y, config)
    px, py = wrap_position(point[0], point[1], config)
    dx = torus_delta(ax, px, config.width)
    dy = torus_delta(ay, py, config.height)
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return wrap_angle(math.atan2(dy, dx) * RAD_TO_DEG - agent.heading)


def sense(agent: AgentState, foods: list[tuple[float, float]], config: WorldConfig) -> SensoryInput:
    """Binary three-sector reading of the nearest visible food item.

    Only food within vision_radius counts; the nearest one (lowest index on
    exact distance ties) is classified by its bearing theta:

      front  theta < 15 or theta > 345
      right  15 < theta < 45
      left   315 < theta < 345

    Sector bounds are strict, so food exactly on a boundary reads as all
    zeros, as does an empty visual field.
    """
    r2 = config.vision_radius * config.vision_radius
    best_d2 = -1.0
    best_dx = 0.0
    best_dy = 0.0
    for fx, fy in foods:
        dx = torus_delta(agent.x, fx, config.width)
        dy = torus_delta(agent.y, fy, config.height)
        d2 = dx * dx + dy * dy
        if d2 <= r2 and (best_d2 < 0.0 or d2 < best_d2):
            best_d2 = d2
            best_dx = dx
            best_dy = dy
    if best_d2 < 0.0:
        return SensoryInput(0, 0, 0)
    if best_dx == 0.0 and best_dy == 0.0:
        theta = 0.0
    else:
        theta = wrap_angle(math.atan2(best_dy, best_dx) * RAD_TO_DEG - agent.heading)
    if theta < FRONT_HALF_ANGLE or theta > 360.0 - FRONT_HALF_ANGLE:
        return SensoryInput(0, 1, 0)
    if FRONT_HALF_ANGLE < theta < SIDE_CONE_LIMIT:
        return SensoryInput(0, 0, 1)
    if 360.0 - SIDE_CONE_LIMIT < theta < 360.0 - FRONT_HALF_ANGLE:
        return SensoryInput(1, 0, 0)
    return SensoryInput(0, 0, 0)


def apply_action(agent: AgentState, action: Action, config: WorldConfig) -> None:
    """Turn and/or advance the agent, wrapping its position onto the torus.

    FORWARD moves two base-speed units along the current heading; the turn
    actions first rotate by turn_angle (left is counterclockwise, i.e.
    decreasing, in this clockwise frame) and then advance one unit.
    """
    if action == Action.FORWARD:
        dist = 2.0 * config.base_speed
    else:
        if action == Action.TURN_LEFT:
            agent.heading = wrap_angle(agent.heading - config.turn_angle)
        else:
            agent.heading = wrap_angle(agent.heading + config.turn_angle)
        dist = config.base_speed
    hr = agent.heading * DEG_TO_RAD
    agent.x = _wrap_coord(agent.x + dist * math.cos(hr), config.width)
    agent.y = _wrap_coord(agent.y + dist * math.sin(hr), config.height)


def check_eat(agent: AgentState, world: World, rng: np.random.Generator) -> int:
    """Eat every food item within eat_distance and respawn each immediately.

    Respawned items take a fresh uniform position in the food region (two
    rng.random() draws, x then y, redrawn in the probability-zero case of
    landing exactly on the eaten spot), so the food count never changes.
    Returns the number of items eaten, which is also added to the agent's
    energy.
    """
    config = world.config
    region = world.region
    e2 = config.eat_distance * config.eat_distance
    gain = 0
    for idx, (fx, fy) in enumerate(world.foods):
        dx = torus_delta(agent.x, fx, config.width)
        dy = torus_delta(agent.y, fy, config.height)
        if dx * dx + dy * dy <= e2:
            gain += 1
            while True:
                nx = region.x_min + (region.x_max - region.x_min) * rng.random()
                ny = region.y_min + (region.y_max - region.y_min) * rng.random()
                if nx != fx or ny != fy:
                    break
            world.foods[idx] = (nx, ny)
    agent.energy += gain
    return gain


def init_world(
    config: WorldConfig,
    controllers: list[SelfTaughtController],
    rng: np.random.Generator,
) -> World:
    """Place agents and food for a fresh generation.

    Draw order: for each agent in turn, a radius draw then an angle draw
    (uniform over the spawn disc via r = R*sqrt(u)); then for each food item
    an x draw then a y draw, uniform over the food region. Agents start with
    heading 0 (facing +x) and zero energy.
    """
    if len(controllers) != config.n_agents:
        raise ValueError(
            f"need exactly {config.n_agents} controllers, got {len(controllers)}"
        )
    cx = config.width / 4.0
    cy = config.height / 4.0
    agents = []
    for controller in controllers:
        rad = SPAWN_DISC_RADIUS * math.sqrt(rng.random())
        ang = 2.0 * math.pi * rng.random()
        x = _wrap_coord(cx + rad * math.cos(ang), config.width)
        y = _wrap_coord(cy + rad * math.sin(ang), config.height)
        agents.append(AgentState(x, y, 0.0, 0, controller))
    region = food_region(config)
    foods = []
    for _ in range(config.n_food):
        fx = region.x_min + (region.x_max - region.x_min) * rng.random()
        fy = region.y_min + (region.y_max - region.y_min) * rng.random()
        foods.append((fx, fy))
    return World(config, agents, foods)


def world_step(
    world: World,
    rng: np.random.Generator,
    learn: bool = False,
    on_agent: Optional[Callable[[int, AgentState, Action], None]] = None,
) -> tuple[int, int]:
    """Advance every agent one step, in fixed index order.

    Each agent senses, acts and eats before the next agent moves, so a food
    item respawned by agent i is already in place when agent i+1 senses.
    With learn=True each agent also takes one self-teaching step on the
    sensory input it saw this step. Returns (respawn count, teach count) for
    the step; on_agent, when given, is called after each agent's sub-step.
    """
    respawns = 0
    taught = 0
    for i, agent in enumerate(world.agents):
        x = sense(agent, world.foods, world.config)
        outputs = forward(agent.controller.action, x)
        action = choose_action(outputs)
        apply_action(agent, action, world.config)
        respawns += check_eat(agent, world, rng)
        if learn:
            self_teach(agent.controller, x)
            taught += 1
        if on_agent is not None:
            on_agent(i, agent, action)
    return respawns, taught
