import pytest

from evoforage import ExperimentConfig, Mode, WorldConfig, run_experiment

TRACE_GENS = {0, 10, 19}


def desk_config(mode, map):
    """Desk-scale experiment: 20 generations x 2000 steps x 10 runs."""
    return ExperimentConfig(
        mode=mode,
        world=WorldConfig(map=map),
        n_generations=20,
        steps_per_generation=2000,
        n_runs=10,
        base_seed=0,
    )


@pytest.fixture(scope="session")
def desk():
    """Stats for every (mode, map) desk batch, plus traced generations for two.

    Built once per session; the statistical tests all read from this pool.
    Keys are (mode value, map) pairs, values hold the concatenated run stats
    and, for the two traced batches, run 0's traced GenerationResults.
    """
    traced_batches = {(Mode.EVO, "B"), (Mode.EVO_SELF_TAUGHT, "A")}
    out = {}
    for mode in (Mode.EVO, Mode.EVO_SELF_TAUGHT, Mode.SELF_TAUGHT_ALONE):
        for map in ("A", "B"):
            cfg = desk_config(mode, map)
            stats = []
            traced = {}
            for run_id in range(cfg.n_runs):
                if run_id == 0 and (mode, map) in traced_batches:
                    stats.extend(
                        run_experiment(
                            cfg,
                            run_id,
                            trace_gens=TRACE_GENS,
                            on_trace=lambda g, r: traced.__setitem__(g, r),
                        )
                    )
                else:
                    stats.extend(run_experiment(cfg, run_id))
            out[(mode.value, map)] = {"stats": stats, "traced": traced}
    return out
