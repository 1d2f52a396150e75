#!/usr/bin/env python3
"""Time the compiled kernel against the pure-Python engine.

Both engines run the identical generation (same seed, same draws), so besides
timing this doubles as an end-to-end parity check: the final poses, energies
and rng state must match bit for bit.

Usage:
    python3 benchmarks/bench_engines.py [--steps N] [--agents N] [--repeats N]
                                        [--map A|B] [--no-learn]
"""

import argparse
import time

import numpy as np

import evoforage.engine as engine
from evoforage import (
    LayerSpec,
    SelfTaughtController,
    WorldConfig,
    init_weights,
    init_world,
    run_generation_steps,
    use_engine,
)


def build_world(seed, n_agents, map):
    rng = np.random.default_rng(seed)
    cfg = WorldConfig(n_agents=n_agents, map=map)
    spec = LayerSpec()
    controllers = [
        SelfTaughtController(init_weights(spec, rng), init_weights(spec, rng), 0.01)
        for _ in range(n_agents)
    ]
    return init_world(cfg, controllers, rng), rng


def fingerprint(world, rng, counts):
    poses = tuple((a.x, a.y, a.heading, a.energy) for a in world.agents)
    return counts, poses, tuple(world.foods), rng.bit_generator.state["state"]["state"]


def time_engine(name, args):
    use_engine(name)
    best = float("inf")
    fp = None
    for _ in range(args.repeats):
        world, rng = build_world(args.seed, args.agents, args.map)
        t0 = time.perf_counter()
        counts = run_generation_steps(world, rng, args.steps, not args.no_learn)
        best = min(best, time.perf_counter() - t0)
        fp = fingerprint(world, rng, counts)
    return best, fp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--agents", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--map", choices=("A", "B"), default="A")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-learn", action="store_true")
    args = ap.parse_args()

    agent_steps = args.steps * args.agents
    names = ["pure"]
    if engine._kernel is not None:
        names.append("compiled")
    else:
        print("note: compiled kernel not built, timing the pure engine only")

    results = {}
    for name in names:
        secs, fp = time_engine(name, args)
        results[name] = (secs, fp)
        per = secs / agent_steps
        print(
            f"{name:9s} {args.steps} steps x {args.agents} agents "
            f"(best of {args.repeats}): {secs:8.4f} s   "
            f"{per * 1e6:8.3f} us/agent-step"
        )

    if len(results) == 2:
        speedup = results["pure"][0] / results["compiled"][0]
        match = results["pure"][1] == results["compiled"][1]
        print(f"speedup   {speedup:.1f}x")
        print(f"parity    outputs {'bit-identical' if match else 'DIVERGED'}")
        if not match:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
