import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouvex.config import parse_config, render
from liouvex.errors import ConfigError
from liouvex.gedmd import WindowSpec
from liouvex.hamiltonian import ChainSpec
from liouvex.plan import ExperimentPlan, member_seed, member_seeds
from liouvex.propagator import EvolutionSchedule


def test_empty_chain_section_gives_default_couplings():
    plan = parse_config("[chain]\n[experiment]\nkind = hydro\n")
    assert (plan.chain.j, plan.chain.delta, plan.chain.j2) == (1.0, 1.0, 0.5)
    assert plan.schedule.dt == 0.002 and plan.ensemble_size == 500
    assert plan.samples_per_window() == 300
    assert plan.t1 == plan.t_max == 3.0


def test_dt_cg_off_grid_rejected_with_key_and_line():
    text = "[experiment]\nkind = hydro\n[window]\nderiv_mode = finite\ndt_cg = 0.003\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == "dt_cg" and err.value.line == 5


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("[experiment]\nkind = hydro\n\n[chain]\nlength = 4\n")
    assert err.value.key == "length" and err.value.line == 5


def test_unknown_section_and_bad_type():
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nkind = hydro\n[physics]\nx = 1\n")
    with pytest.raises(ConfigError) as err:
        parse_config("[experiment]\nkind = hydro\n[chain]\nn_sites = ten\n")
    assert err.value.line == 4


@pytest.mark.parametrize("text", [
    "[chain]\nn_sites = 4\n",                                    # no kind
    "[experiment]\nkind = fly\n",
    "[experiment]\nkind = quench\ncut_after_site = 9\n",         # cut outside chain
    "[experiment]\nkind = hydro\ndictionaries = A\n",
    "[experiment]\nkind = sweep\n",                               # no dt_cg values
    "[experiment]\nkind = hydro\n[analysis]\nmargin = 6\n",
    "[experiment]\nkind = hydro\n[window]\nstride = 0.0031\n",
    "[experiment]\nkind = hydro\n[ensemble]\nbase_seed = -1\n",
])
def test_constraint_violations(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_quench_defaults():
    plan = parse_config("[experiment]\nkind = quench\n")
    assert plan.chain.n_sites == 10
    assert plan.quench.cut_after_site == 1 and plan.quench.t_q == 4.0
    assert plan.dictionaries == ("S", "L", "E")


plans = st.builds(
    lambda kind, n, j, dt_k, steps, size, seed, margin, cgs, dur: ExperimentPlan(
        kind=kind,
        chain=ChainSpec(n, j, 1.0, 0.5),
        schedule=EvolutionSchedule(0.001 * dt_k, steps * 50, 1),
        window=WindowSpec(0.001 * dt_k * dur, 0.001 * dt_k * 5),
        ensemble_size=size,
        base_seed=seed,
        margin=margin,
        dt_cg_list=tuple(0.001 * dt_k * c for c in cgs),
    ),
    kind=st.sampled_from(["hydro", "sweep"]),
    n=st.integers(5, 14),
    j=st.floats(0.1, 3.0),
    dt_k=st.sampled_from([1, 2, 4]),
    steps=st.integers(2, 20),
    size=st.integers(1, 600),
    seed=st.integers(0, 2 ** 64 - 1),
    margin=st.integers(0, 2),
    cgs=st.lists(st.integers(1, 19), min_size=1, max_size=4, unique=True),
    dur=st.integers(20, 100),
)


@settings(max_examples=60, deadline=None)
@given(plans)
def test_render_round_trip(plan):
    assert parse_config(render(plan)) == plan


def test_round_trip_quench_plan():
    plan = parse_config("[experiment]\nkind = quench\nt_q = 3.001\n[analysis]\ndt_cg_list = 0.04\n")
    again = parse_config(render(plan))
    assert again == plan
    assert dataclasses.replace(plan, base_seed=7) != plan


def test_member_seeds_distinct_and_stable():
    seeds = member_seeds(12345, 64)
    assert len(set(seeds)) == 64
    assert seeds[3] == member_seed(12345, 3)
    assert member_seeds(12346, 4) != seeds[:4]
    assert all(0 <= s < 2 ** 64 for s in seeds)
