import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import four_irs_doc, random_instance, rp
from irsroute.allocator import solve_dynamic, solve_static
from irsroute.errors import InvalidArgumentError
from irsroute.phase_randomizer import (constraint_system, monte_carlo_average_power,
                                       phase_uniformity_pvalue, solve_common_phases,
                                       uniform_block, uniform_blocks)
from irsroute.scenario import build_los_graph, load_scenario


def test_worked_example_elimination():
    sys_ = constraint_system({1: [rp(5, 1, 4), rp(5, 2, 3)]}, 4)
    assert sys_.free == (2, 3, 4)
    assert sys_.dependent == {1: {2: Fraction(1), 3: Fraction(1), 4: Fraction(-1)}}
    om = solve_common_phases({1: [rp(5, 1, 4), rp(5, 2, 3)]}, seed=3, n_irs=4).omega
    assert abs(((om[1] + om[4]) - (om[2] + om[3]) + math.pi) % (2 * math.pi) - math.pi) < 1e-12


def test_single_path_has_no_equations():
    sys_ = constraint_system({1: [rp(9, 2, 5)]}, 6)
    assert sys_.equations == [] and sys_.free == tuple(range(1, 7))


def test_overlapping_bundle_rejected():
    with pytest.raises(InvalidArgumentError):
        constraint_system({1: [rp(5, 1, 4), rp(5, 2, 4)]}, 4)


def test_fixed_seed_is_deterministic():
    sets = {1: [rp(5, 1, 4), rp(5, 2, 3)]}
    a = solve_common_phases(sets, seed=11, n_irs=4, draw=5).omega
    b = solve_common_phases(sets, seed=11, n_irs=4, draw=5).omega
    c = solve_common_phases(sets, seed=11, n_irs=4, draw=6).omega
    assert a == b and a != c


@given(st.integers(0, 2 ** 32), st.integers(0, 500), st.integers(1, 13), st.integers(1, 40))
def test_draw_blocks_are_stream_slices(seed, start, n, draws):
    block = uniform_blocks(seed, draws, n, start)
    for i in (0, draws - 1):
        assert np.array_equal(block[i], uniform_block(seed, start + i, n))
    full = np.random.Generator(np.random.Philox(key=seed)).random((start + draws) * n)
    assert np.array_equal(block.ravel(), full[start * n:])


@st.composite
def disjoint_bundles(draw):
    J = draw(st.integers(2, 12))
    ids = draw(st.permutations(list(range(1, J + 1))))
    K = draw(st.integers(1, 3))
    sets, pos = {}, 0
    for k in range(1, K + 1):
        n_paths = draw(st.integers(1, 3))
        ps = []
        for _ in range(n_paths):
            ln = draw(st.integers(1, 3))
            if pos + ln > J:
                break
            ps.append(rp(100 + k, *ids[pos:pos + ln]))
            pos += ln
        if ps:
            sets[k] = ps
    return J, sets


@given(disjoint_bundles(), st.integers(0, 10_000))
def test_assignment_satisfies_every_equation(case, seed):
    J, sets = case
    sys_ = solve_common_phases(sets, seed, n_irs=J)
    assert max(sys_.residuals(), default=0.0) <= 1e-9
    for k, ps in sets.items():
        exprs = {tuple(sorted(sys_.path_expression(p).items())) for p in ps}
        assert len(exprs) == 1
    # dependents are never free and the free set is large enough
    assert not set(sys_.free) & set(sys_.dependent)
    assert len(sys_.free) + len(sys_.dependent) == J
    assert len(sys_.dependent) == len(sys_.equations)


def _fig6():
    scn = load_scenario(four_irs_doc())
    g = build_los_graph(scn)
    return scn, g, solve_dynamic(scn, g, U=8)


def test_no_interference_means_exact_designed_mean():
    scn = load_scenario({
        "rf": {"carrier_hz": 5e9, "beta_db": -46.0},
        "bs": {"position": [0, 0, 2], "antennas": 4, "axis": [0, 1, 0], "tx_power_dbm": 30},
        "irs_defaults": {"m1": 4, "m2": 4, "codebook_h": 8, "codebook_v": 8},
        "irs": [{"position": [8, 4, 2], "normal": [0.2, -0.98, 0]},
                {"position": [16, -4, 2], "normal": [-0.2, 0.98, 0]}],
        "eus": [{"position": [24, 4, 2]}],
        "explicit_los": [[0, 1], [1, 2], [2, 3]],
    })
    g = build_los_graph(scn)
    plan = solve_dynamic(scn, g)
    res = monte_carlo_average_power(scn, g, plan, 1, 1000, seed=1)
    assert res.interference == []
    assert abs(res.mean - res.e_max) <= 1e-12 * res.e_max
    assert res.stderr <= 1e-12 * res.e_max
    assert abs(res.designed - plan.powers[0]) <= 1e-12 * res.designed


def test_fig6_signal_coherent_and_groups_distinct():
    scn, g, plan = _fig6()
    res = monte_carlo_average_power(scn, g, plan, 1, 20_000, seed=5)
    assert res.coherence_error <= 1e-10
    assert abs(res.e_av_exact - res.e_av) <= 1e-12 * res.e_av
    assert res.e_av >= res.e_max and 0 <= res.approximation_gap < 1
    mean, stderr = res
    assert (mean, stderr) == (res.mean, res.stderr)


def test_monte_carlo_is_reproducible_and_chunk_invariant():
    scn, g, plan = _fig6()
    a = monte_carlo_average_power(scn, g, plan, 1, 5000, seed=9)
    b = monte_carlo_average_power(scn, g, plan, 1, 5000, seed=9, chunk=333)
    assert abs(a.mean - b.mean) <= 1e-12 * a.mean
    c = monte_carlo_average_power(scn, g, plan, 1, 5000, seed=10)
    assert a.mean != c.mean


def test_stderr_scales_as_inverse_sqrt():
    scn, g, plan = _fig6()
    small = monte_carlo_average_power(scn, g, plan, 1, 4000, seed=21)
    big = monte_carlo_average_power(scn, g, plan, 1, 64_000, seed=21)
    assert 2.8 < small.stderr / big.stderr < 5.6  # ideal ratio 4


def test_monte_carlo_rejects_bad_inputs():
    scn, g, plan = _fig6()
    with pytest.raises(InvalidArgumentError):
        monte_carlo_average_power(scn, g, plan, 1, 0, seed=1)


@given(st.integers(0, 2000))
def test_static_plans_stay_coherent(seed):
    scn, g = random_instance(seed, J=6, K=2)
    plan = solve_static(scn, g)
    for k in range(1, 3):
        if plan.paths_of(k):
            r = monte_carlo_average_power(scn, g, plan, k, 200, seed=seed)
            assert r.coherence_error <= 1e-10
            assert r.e_av >= r.e_max * (1 - 1e-12)


def test_uniformity_pvalue():
    rng = np.random.default_rng(0)
    assert phase_uniformity_pvalue(rng.uniform(0, 2 * np.pi, 5000)) > 0.01
    assert phase_uniformity_pvalue(rng.normal(1.0, 0.1, 5000)) < 1e-6
