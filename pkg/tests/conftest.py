from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.optimize import minimize

from irsroute.beamforming import BeamModel
from irsroute.channel import ReflectionPath, enumerate_all_paths
from irsroute.scenario import build_los_graph, load_scenario

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def _normal_toward(p, nbrs):
    """Unit normal maximizing the smallest cosine toward the neighbours."""
    if not nbrs:
        return [1.0, 0.0, 0.0]
    dirs = np.array([(q - p) / np.linalg.norm(q - p) for q in nbrs])
    x0 = dirs.sum(axis=0)
    x0 = x0 / np.linalg.norm(x0) if np.linalg.norm(x0) > 1e-9 else np.array([1.0, 0.0, 0.0])
    res = minimize(lambda x: -x[3], np.append(x0, (dirs @ x0).min()), method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda x: dirs @ x[:3] - x[3]},
                                {"type": "ineq", "fun": lambda x: 1.0 - x[:3] @ x[:3]}])
    n = res.x[:3]
    return (n / np.linalg.norm(n)).tolist() if np.linalg.norm(n) > 1e-9 else x0.tolist()


def random_doc(rng: np.random.Generator, J: int, K: int, *, m=(2, 4), n_b=(2, 8),
               edge_p: float = 0.6, q=(4, 8)) -> dict:
    """Random deployment whose LoS list is a random DAG in BS-distance order.

    IRSs get staggered heights so that both incoming and outgoing neighbours
    can sit in front of a surface.
    """
    bs = np.array([0.0, 0.0, 3.0])
    radii = np.sort(rng.uniform(4.0, 30.0, J))
    irs = []
    for t, r in enumerate(radii):
        ang = rng.uniform(-1.0, 1.0)
        irs.append(np.array([r * np.cos(ang), r * np.sin(ang), 6.0 if t % 2 == 0 else 1.5]))
    eus = [np.array([rng.uniform(10, 40), rng.uniform(-20, 20), 0.5]) for _ in range(K)]
    pos = [bs] + irs + eus
    links = set()
    for j in range(1, J + 1):
        if j <= 2 or rng.random() < 0.4:
            links.add((0, j))
    for i in range(1, J + 1):
        for j in range(i + 1, J + 1):
            if rng.random() < edge_p:
                links.add((i, j))
    for k in range(K):
        for j in rng.choice(np.arange(1, J + 1), size=min(J, int(rng.integers(1, 4))),
                            replace=False):
            links.add((int(j), J + 1 + k))
    irs_docs = []
    for j in range(1, J + 1):
        nb = [pos[b] for a, b in links if a == j] + [pos[a] for a, b in links if b == j]
        irs_docs.append({"position": irs[j - 1].tolist(), "normal": _normal_toward(irs[j - 1], nb),
                         "m1": int(rng.integers(m[0], m[1] + 1)),
                         "m2": int(rng.integers(m[0], m[1] + 1)),
                         "codebook_h": int(rng.integers(q[0], q[1] + 1)),
                         "codebook_v": int(rng.integers(q[0], q[1] + 1))})
    nb_ = int(rng.integers(n_b[0], n_b[1] + 1))
    return {
        "rf": {"carrier_hz": 5e9, "beta_db": -46.0},
        "bs": {"position": bs.tolist(), "antennas": nb_, "axis": [0.0, 1.0, 0.0],
               "codebook_size": int(rng.integers(nb_, 2 * nb_ + 1)), "tx_power_dbm": 30.0},
        "irs": irs_docs,
        "eus": [{"position": e.tolist()} for e in eus],
        "explicit_los": [list(x) for x in sorted(links)],
        "limits": {"max_hops": J, "candidates_per_eu": 8},
    }


def random_instance(seed: int, J: int, K: int, *, require_paths: bool = True, **kw):
    """(scenario, graph) with every EU reachable when ``require_paths``."""
    rng = np.random.default_rng(seed)
    for _ in range(200):
        scn = load_scenario(random_doc(rng, J, K, **kw))
        graph = build_los_graph(scn)
        if not require_paths or all(enumerate_all_paths(graph, scn.eu_node(k), J)
                                    for k in range(1, K + 1)):
            return scn, graph
    raise RuntimeError("could not draw a connected scenario")


FOUR_IRS_LINKS = [(0, 1), (0, 2), (1, 4), (2, 3), (2, 4), (3, 4), (4, 5), (3, 5)]


def four_irs_doc(m: int = 4) -> dict:
    """Four IRSs, one EU: signal paths {1,4} and {2,3}, leakage paths {2,4} and {2,3,4}."""
    pos = {0: [0.0, 0.0, 2.0], 1: [10.0, 5.0, 2.0], 2: [10.0, -5.0, 2.0],
           3: [20.0, -8.0, 2.0], 4: [25.0, 3.0, 2.0], 5: [35.0, -2.0, 2.0]}
    irs = []
    for j in range(1, 5):
        p = np.array(pos[j])
        nb = [np.array(pos[b]) for a, b in FOUR_IRS_LINKS if a == j]
        nb += [np.array(pos[a]) for a, b in FOUR_IRS_LINKS if b == j]
        irs.append({"position": pos[j], "normal": _normal_toward(p, nb)})
    return {
        "rf": {"carrier_hz": 5e9, "beta_db": -46.0},
        "bs": {"position": pos[0], "antennas": 8, "axis": [0.0, 1.0, 0.0], "codebook_size": 16,
               "tx_power_dbm": 30.0},
        "irs_defaults": {"m1": m, "m2": m, "codebook_h": 16, "codebook_v": 16},
        "irs": irs,
        "eus": [{"position": pos[5]}],
        "explicit_los": [list(x) for x in FOUR_IRS_LINKS],
        "limits": {"max_hops": 4, "candidates_per_eu": 8},
    }


@pytest.fixture
def four_irs():
    scn = load_scenario(four_irs_doc())
    return scn, build_los_graph(scn)


def rp(eu: int, *irs: int) -> ReflectionPath:
    return ReflectionPath(eu, tuple(irs))


def model_for(scn, graph, mode="codebook") -> BeamModel:
    return BeamModel(scn, graph, mode)


# acceptance criteria report ------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n} {title}: {'PASS' if ok else 'FAIL'} {detail}")
