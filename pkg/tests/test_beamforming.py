import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import four_irs_doc, random_instance, rp
from irsroute.beamforming import (BeamModel, best_bs_beam, best_irs_beam, build_bs_codebook,
                                  build_irs_codebook, path_gain, split_bs_beam)
from irsroute.channel import (IrsConfiguration, bs_response, enumerate_all_paths, irs_response,
                              path_channel, subsurface_channel)
from irsroute.errors import InvalidArgumentError
from irsroute.geometry import steering_vector
from irsroute.scenario import build_los_graph, load_scenario


def test_two_point_bs_codebook():
    cb = build_bs_codebook(2, 2)
    assert np.allclose(cb.vectors, np.array([[1, 1], [1, -1]]) / np.sqrt(2))


@pytest.mark.parametrize("n", [1, 4, 32])
def test_square_codebook_orthonormal(n):
    v = build_bs_codebook(n, n).vectors
    assert np.allclose(v.conj() @ v.T, np.eye(n), atol=1e-12)
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-12)


def test_single_irs_codeword_and_unit_modulus():
    assert np.allclose(build_irs_codebook(3, 2, 1, 1).vectors, np.ones((1, 6)))
    assert np.allclose(np.abs(build_irs_codebook(4, 3, 8, 5).vectors), 1.0, atol=1e-12)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 9), st.integers(1, 9), st.data())
def test_irs_codebook_kronecker_index(m1, m2, qh, qv, data):
    u, v = data.draw(st.integers(0, qh - 1)), data.draw(st.integers(0, qv - 1))
    vec = build_irs_codebook(m1, m2, qh, qv).vectors[u * qv + v]
    for p in range(m1):
        for q in range(m2):
            want = np.exp(-1j * np.pi * (2 * u / qh * p + 2 * v / qv * q))
            assert abs(vec[p * m2 + q] - want) < 1e-12


def test_matched_bs_beam_hits_array_gain():
    n = 16
    h = steering_vector(2 * 5 / n, n)
    w, hop = best_bs_beam(build_bs_codebook(n, n), h)
    assert hop.chosen_index == 5 and abs(hop.value - n) < 1e-9


@given(st.integers(1, 20), st.integers(1, 40), st.floats(-1, 1))
def test_bs_gain_cauchy_schwarz(n, q, phi):
    _, hop = best_bs_beam(build_bs_codebook(n, q), steering_vector(phi, n))
    assert 0 <= hop.value <= n * (1 + 1e-12)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 10_000))
def test_continuous_irs_beam(m1, m2, seed):
    rng = np.random.default_rng(seed)
    inc = steering_vector(rng.uniform(-1, 1), m1 * m2)
    dep = steering_vector(rng.uniform(-1, 1), m1 * m2)
    theta, hop = best_irs_beam(None, inc, dep)
    assert hop.value == float(m1 * m2) ** 2
    assert np.allclose(theta, np.exp(-1j * np.angle(dep.conj() * inc)))
    assert abs(abs(np.sum(dep.conj() * theta * inc)) ** 2 - hop.value) <= 1e-9 * hop.value


def test_single_element_irs_gain_is_one():
    _, hop = best_irs_beam(build_irs_codebook(1, 1, 8, 8), np.array([1j]), np.array([-1.0]))
    assert abs(hop.value - 1.0) < 1e-12


def test_length_mismatch_rejected():
    with pytest.raises(InvalidArgumentError):
        best_irs_beam(None, np.ones(4), np.ones(3))
    with pytest.raises(InvalidArgumentError):
        best_bs_beam(build_bs_codebook(4, 4), np.ones(5))


def _one_hop(n_b=32, m=10, d=10.0):
    return load_scenario({
        "rf": {"carrier_hz": 5e9, "beta_db": -46.0},
        "bs": {"position": [0, 0, 0], "antennas": n_b, "axis": [0, 1, 0], "tx_power_dbm": 30},
        "irs_defaults": {"m1": m, "m2": m, "codebook_h": 16, "codebook_v": 16},
        "irs": [{"position": [d, 0, 0], "normal": [-0.7071067811865476, 0.7071067811865476, 0]}],
        "eus": [{"position": [d, d, 0]}],
    })


def test_single_hop_continuous_example():
    scn = _one_hop()
    g = build_los_graph(scn)
    got = path_gain(scn, g, rp(2, 1), "continuous")
    want = 32 * 10 ** -9.2
    assert abs(got - want) <= 1e-9 * want
    assert abs(got - 2.0189e-8) <= 1e-4 * got  # the rounded figure
    # full matrix-product oracle with optimal continuous phases
    theta = np.exp(-1j * np.angle(irs_response(scn, 1, 2).conj() * irs_response(scn, 1, 0)))
    h = bs_response(scn, 1)
    w = h / np.linalg.norm(h)
    amp = path_channel(scn, g, rp(2, 1), w, IrsConfiguration({1: theta}))
    assert abs(abs(amp) ** 2 - want) <= 1e-9 * want


@given(st.integers(0, 5000))
def test_codebook_never_beats_continuous(seed):
    scn, g = random_instance(seed, J=5, K=1)
    cb, ct = BeamModel(scn, g, "codebook"), BeamModel(scn, g, "continuous")
    for p in enumerate_all_paths(g, scn.eu_node(1), 5):
        a, b = cb.path_gain(p), ct.path_gain(p)
        assert 0 < a <= b * (1 + 1e-12)


@given(st.integers(0, 5000))
def test_codebook_gain_equals_realized_channel(seed):
    scn, g = random_instance(seed, J=4, K=1)
    model = BeamModel(scn, g, "codebook")
    for p in enumerate_all_paths(g, scn.eu_node(1), 4):
        cfg = model.configuration([p])
        amp = path_channel(scn, g, p, model.bs_beam(p.irs[0])[0], cfg)
        assert abs(abs(amp) ** 2 - model.path_gain(p)) <= 1e-9 * model.path_gain(p)


@given(st.integers(0, 5000))
def test_doubling_m_scales_continuous_gain(seed):
    scn, g = random_instance(seed, J=4, K=1, m=(1, 3))
    m1, m2 = scn.irs[0].array.m1, scn.irs[0].array.m2
    big = scn.with_irs_elements(2 * m1, m2)
    small = scn.with_irs_elements(m1, m2)
    for p in enumerate_all_paths(g, scn.eu_node(1), 4):
        a = BeamModel(small, g, "continuous").path_gain(p)
        b = BeamModel(big, g, "continuous").path_gain(p)
        assert abs(b / a - 4.0 ** p.hops) <= 1e-9 * 4.0 ** p.hops


def test_codebook_refinement_is_monotone():
    base = _one_hop(n_b=8, m=8)
    g = build_los_graph(base)
    cont = BeamModel(base, g, "continuous").path_gain(rp(2, 1))
    prev = 0.0
    for q in (1, 2, 4, 8, 16, 32, 64):
        doc_scn = load_scenario({
            "rf": {"carrier_hz": 5e9, "beta_db": -46.0},
            "bs": {"position": [0, 0, 0], "antennas": 8, "axis": [0, 1, 0], "tx_power_dbm": 30,
                   "codebook_size": 8 * q},
            "irs_defaults": {"m1": 8, "m2": 8, "codebook_h": q, "codebook_v": q},
            "irs": [{"position": [10, 0, 0],
                     "normal": [-0.7071067811865476, 0.7071067811865476, 0]}],
            "eus": [{"position": [10, 10, 0]}],
        })
        val = BeamModel(doc_scn, g, "codebook").path_gain(rp(2, 1))
        assert prev * (1 - 1e-12) <= val <= cont * (1 + 1e-12)
        prev = val
    assert prev / cont > 0.9


def test_subsurface_gain_continuous(four_irs):
    scn, g = four_irs
    two = scn.with_eus(1)
    model = BeamModel(two, g, "continuous")
    p = rp(5, 1, 4)
    full = model.path_gain(p)
    assert abs(model.subsurface_path_gain(p, {1: (1.0,), 4: (1.0,)}) - full) <= 1e-12 * full


def test_subsurface_gain_matches_sliced_oracle():
    doc = four_irs_doc()
    doc["eus"].append({"position": [30.0, 10.0, 2.0]})
    scn = load_scenario(doc)
    g = build_los_graph(scn)
    split = {j: (0.25, 0.75) for j in range(1, 5)}
    model = BeamModel(scn, g, "continuous")
    for k in (1, 2):
        for p in enumerate_all_paths(g, scn.eu_node(k), 4):
            kappa = model.kappa(p)
            mu = np.prod([split[j][k - 1] ** 2 for j in p.irs])
            closed = mu * scn.bs.array.m1 * np.prod(
                [float(scn.irs_array(j).n_elements) ** 2 for j in p.irs]) * kappa
            assert abs(model.subsurface_path_gain(p, split) - closed) <= 1e-9 * closed
            # sliced matrix product with phase-aligned subsurfaces
            nodes = p.nodes
            mats = [subsurface_channel(scn, g, a, b, split, k, k)
                    for a, b in zip(nodes[:-1], nodes[1:])]
            row = mats[0]
            for l in range(1, len(mats)):
                t = np.exp(-1j * np.angle(mats[l][0, :] * mats[l - 1][:, 0]))
                row = mats[l] @ (t[:, None] * row)
            oracle = float(np.sum(np.abs(row) ** 2))
            assert abs(oracle - closed) <= 1e-9 * closed


def test_split_bs_beam(four_irs):
    scn, g = four_irs
    model = BeamModel(scn, g, "codebook")
    w, order, _ = split_bs_beam(model, {1: 1.0})
    assert order == [1] and abs(np.linalg.norm(w) - 1) < 1e-12
    assert np.allclose(w, model.bs_beam(1)[0])
    w, order, cross = split_bs_beam(model, {1: 0.5, 2: 0.5})
    assert order == [1, 2]
    assert np.all(np.diag(cross) > 0.5)
    with pytest.raises(InvalidArgumentError):
        split_bs_beam(model, {1: 1.5, 2: -0.5})
    with pytest.raises(InvalidArgumentError):
        split_bs_beam(model, {3: 1.0})
