"""Command-line interface.

Three verbs:

  run        one replicate, stats CSV to --out, optional JSONL trace
  replicate  all replicates of an experiment, optional summary CSV
  gradcheck  numeric audit of the self-teaching gradient step

Configuration is a flat key = value file ('#' comments, blank lines ok);
unknown keys are errors, as are out-of-range values. Every run is fully
pinned by the config plus --seed. File outputs are written to a temp file
and renamed into place, so readers never observe a partial file.

Exit codes: 0 success, 1 gradcheck failure, 2 bad flags, 3 bad config,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from typing import Callable, Iterable, Optional, TextIO

from .engine import TraceBuffer, active_engine
from .evolution import EvolutionParams
from .experiment import (
    AggregateRow,
    ExperimentConfig,
    GenerationStats,
    Mode,
    run_experiment,
    run_replicates,
    summarize,
)
from .neural import Action, LayerSpec, gradient_check
from .world import WorldConfig

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4

GRADCHECK_TOLERANCE = 1e-4

STATS_HEADER = "run_id,generation,mode,map,best_fitness,mean_fitness"
SUMMARY_HEADER = (
    "scope,generation,best_mean,best_median,best_q1,best_q3,"
    "mean_mean,mean_median,mean_q1,mean_q3"
)


class ConfigError(Exception):
    """A config file problem: unknown key, bad value or broken invariant."""


def _parse_int(text: str) -> int:
    try:
        return int(text, 10)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _parse_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {text!r}")
    return value


def _parse_mode(text: str) -> Mode:
    try:
        return Mode(text)
    except ValueError:
        valid = ", ".join(m.value for m in Mode)
        raise ConfigError(f"mode must be one of {valid}, got {text!r}") from None


def _parse_map(text: str) -> str:
    return text


def _fmt_plain(v) -> str:
    return str(v)


# key -> (section, parser); sections mirror ExperimentConfig's nesting.
_KEYS: dict[str, tuple[str, Callable[[str], object]]] = {
    "mode": ("exp", _parse_mode),
    "map": ("world", _parse_map),
    "base_seed": ("exp", _parse_int),
    "n_runs": ("exp", _parse_int),
    "n_generations": ("exp", _parse_int),
    "steps_per_generation": ("exp", _parse_int),
    "width": ("world", _parse_float),
    "height": ("world", _parse_float),
    "n_agents": ("world", _parse_int),
    "n_food": ("world", _parse_int),
    "body_size": ("world", _parse_float),
    "vision_radius": ("world", _parse_float),
    "eat_distance": ("world", _parse_float),
    "base_speed": ("world", _parse_float),
    "turn_angle": ("world", _parse_float),
    "population_size": ("evo", _parse_int),
    "mutation_rate": ("evo", _parse_float),
    "mutation_amplitude": ("evo", _parse_float),
    "learning_rate": ("exp", _parse_float),
    "n_input": ("layers", _parse_int),
    "n_hidden": ("layers", _parse_int),
    "n_output": ("layers", _parse_int),
}

PROFILES = {
    "full": {},
    "desk": {"n_generations": "20", "steps_per_generation": "2000", "n_runs": "10"},
}


def _default_values() -> dict[str, object]:
    exp = ExperimentConfig()
    sections = {"exp": exp, "world": exp.world, "evo": exp.evo, "layers": exp.layers}
    return {key: getattr(sections[sec], key) for key, (sec, _) in _KEYS.items()}


def build_config(overrides: dict[str, object]) -> ExperimentConfig:
    """Assemble and validate an ExperimentConfig from flat key/value pairs."""
    values = _default_values()
    for key, value in overrides.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = value
    world = WorldConfig(
        width=values["width"],
        height=values["height"],
        n_agents=values["n_agents"],
        n_food=values["n_food"],
        body_size=values["body_size"],
        vision_radius=values["vision_radius"],
        eat_distance=values["eat_distance"],
        base_speed=values["base_speed"],
        turn_angle=values["turn_angle"],
        map=values["map"],
    )
    evo = EvolutionParams(
        population_size=values["population_size"],
        mutation_rate=values["mutation_rate"],
        mutation_amplitude=values["mutation_amplitude"],
    )
    layers = LayerSpec(
        n_input=values["n_input"],
        n_hidden=values["n_hidden"],
        n_output=values["n_output"],
    )
    config = ExperimentConfig(
        mode=values["mode"],
        world=world,
        evo=evo,
        layers=layers,
        learning_rate=values["learning_rate"],
        n_generations=values["n_generations"],
        steps_per_generation=values["steps_per_generation"],
        n_runs=values["n_runs"],
        base_seed=values["base_seed"],
    )
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def parse_config(text: str, profile: str = "full") -> ExperimentConfig:
    """Parse a flat key = value config; later lines win on repeats."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    raw: dict[str, str] = dict(PROFILES[profile])
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        raw[key] = value
    overrides = {}
    for key, value in raw.items():
        _, parser = _KEYS[key]
        try:
            overrides[key] = parser(value)
        except ConfigError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
    return build_config(overrides)


def effective_config_text(config: ExperimentConfig) -> str:
    """The config echoed back as a parseable key = value document."""
    sections = {
        "exp": config,
        "world": config.world,
        "evo": config.evo,
        "layers": config.layers,
    }
    lines = []
    for key, (sec, _) in _KEYS.items():
        lines.append(f"{key} = {_fmt_plain(getattr(sections[sec], key))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- output


def format_stats_row(s: GenerationStats) -> str:
    return f"{s.run_id},{s.generation},{s.mode},{s.map},{s.best_fitness},{s.mean_fitness:.6f}"


def emit_stats(stats: Iterable[GenerationStats], f: TextIO) -> None:
    f.write(STATS_HEADER + "\n")
    for s in stats:
        f.write(format_stats_row(s) + "\n")


def emit_summary(rows: Iterable[AggregateRow], f: TextIO) -> None:
    f.write(SUMMARY_HEADER + "\n")
    for r in rows:
        gen = "" if r.generation is None else str(r.generation)
        reals = (
            r.best_mean, r.best_median, r.best_q1, r.best_q3,
            r.mean_mean, r.mean_median, r.mean_q1, r.mean_q3,
        )
        f.write(f"{r.scope},{gen}," + ",".join(f"{v:.6f}" for v in reals) + "\n")


def write_trace_rows(trace: TraceBuffer, f: TextIO) -> None:
    """One JSON object per (step, agent) row, in execution order."""
    gen = trace.generation
    for row in range(len(trace)):
        record = {
            "generation": gen,
            "step": int(trace.step[row]),
            "agent_id": int(trace.agent_id[row]),
            "x": float(trace.x[row]),
            "y": float(trace.y[row]),
            "heading": float(trace.heading[row]),
            "energy": int(trace.energy[row]),
            "action": Action(int(trace.action[row])).name,
        }
        f.write(json.dumps(record, separators=(",", ":")) + "\n")


class _AtomicFile:
    """Write-to-temp-then-rename output file; never leaves partial files."""

    def __init__(self, path: str):
        self.path = path
        directory = os.path.dirname(os.path.abspath(path)) or "."
        fd, self.tmp_path = tempfile.mkstemp(
            dir=directory, prefix=".evoforage-", suffix=".part"
        )
        self.file = os.fdopen(fd, "w")

    def commit(self) -> None:
        self.file.close()
        os.replace(self.tmp_path, self.path)

    def abort(self) -> None:
        try:
            self.file.close()
        finally:
            try:
                os.unlink(self.tmp_path)
            except OSError:
                pass


def _write_output(path: str, writer: Callable[[TextIO], None]) -> None:
    if path == "-":
        writer(sys.stdout)
        return
    out = _AtomicFile(path)
    try:
        writer(out.file)
    except BaseException:
        out.abort()
        raise
    out.commit()


# ---------------------------------------------------------------- verbs


def _load_config(args) -> ExperimentConfig:
    text = ""
    if args.config:
        with open(args.config, "r") as f:
            text = f.read()
    config = parse_config(text, profile=args.profile)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        config = replace(config, base_seed=args.seed)
    return config


def _parse_trace_gens(text: str) -> set[int]:
    gens = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            gen = int(part, 10)
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"--trace-gens wants comma-separated integers, got {part!r}"
            ) from None
        if gen < 0:
            raise argparse.ArgumentTypeError("--trace-gens entries must be >= 0")
        gens.add(gen)
    if not gens:
        raise argparse.ArgumentTypeError("--trace-gens must list at least one generation")
    return gens


def cmd_run(args) -> int:
    config = _load_config(args)
    if args.print_config:
        sys.stdout.write(effective_config_text(config))
        return EXIT_OK

    stats: list[GenerationStats]
    if args.trace_out:
        trace_file = _AtomicFile(args.trace_out)
        try:
            def on_trace(gen, result):
                write_trace_rows(result.trace, trace_file.file)

            stats = run_experiment(
                config, 0, trace_gens=args.trace_gens, on_trace=on_trace
            )
        except BaseException:
            trace_file.abort()
            raise
        trace_file.commit()
    else:
        stats = run_experiment(config, 0)

    _write_output(args.out, lambda f: emit_stats(stats, f))
    print(
        f"run complete: {len(stats)} generations, engine={active_engine()}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_replicate(args) -> int:
    config = _load_config(args)
    if args.print_config:
        sys.stdout.write(effective_config_text(config))
        return EXIT_OK

    def progress(run_id):
        print(f"run {run_id + 1}/{config.n_runs} done", file=sys.stderr)

    stats = run_replicates(config, progress=progress)
    _write_output(args.out, lambda f: emit_stats(stats, f))
    if args.summary_out:
        rows = summarize(stats)
        _write_output(args.summary_out, lambda f: emit_summary(rows, f))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    err = gradient_check(n_trials=args.trials, eps=args.eps, seed=args.seed)
    ok = err < GRADCHECK_TOLERANCE
    verdict = "PASS" if ok else "FAIL"
    print(
        f"gradcheck {verdict}: max relative error {err:.3e} over "
        f"{args.trials} trials (eps {args.eps:g}, tolerance {GRADCHECK_TOLERANCE:g})"
    )
    return EXIT_OK if ok else EXIT_FAIL


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a key = value config file")
    p.add_argument(
        "--profile",
        choices=sorted(PROFILES),
        default="full",
        help="baseline scale: 'full' (100 gens x 5000 steps x 30 runs) or "
        "'desk' (20 x 2000 x 10); config file keys override it",
    )
    p.add_argument("--seed", type=int, default=None, help="override base_seed")
    p.add_argument(
        "--print-config",
        action="store_true",
        help="echo the effective config and exit without running",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoforage",
        description="deterministic foraging-agent evolution experiments",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one replicate (run_id 0)")
    _add_common_flags(p_run)
    p_run.add_argument("--out", default="-", help="stats CSV path, '-' for stdout")
    p_run.add_argument("--trace-out", help="JSONL per-step trace path")
    p_run.add_argument(
        "--trace-gens",
        type=_parse_trace_gens,
        default=None,
        help="comma-separated generations to trace (default: all, "
        "only used with --trace-out)",
    )
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("replicate", help="run every replicate back to back")
    _add_common_flags(p_rep)
    p_rep.add_argument("--out", default="-", help="stats CSV path, '-' for stdout")
    p_rep.add_argument("--summary-out", help="cross-run aggregate CSV path")
    p_rep.set_defaults(func=cmd_replicate)

    p_grad = sub.add_parser("gradcheck", help="audit the learning-step gradients")
    p_grad.add_argument("--trials", type=int, default=100)
    p_grad.add_argument("--eps", type=float, default=1e-5)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
