"""Power splitting, time sharing and the four routing schemes.

Every scheme returns an :class:`AllocationPlan` made of time slots.  A slot
carries the reflection paths active in it, the EU power shares ``rho`` and the
BS power shares ``alpha`` over first-reflecting IRSs.  Received powers are in
watts and already include the BS transmit power.

* dynamic: each EU gets its own slot of length ``eta_k`` and its best bundle
  of node-disjoint candidate paths; ``eta`` follows the harmonic closed form.
* static: one slot; a single maximal clique of the all-EU path graph serves
  everyone at once, with harmonic power shares across EUs.
* equal-time: dynamic routing with ``eta_k = 1/K``.
* subsurface: IRS elements are split into per-EU column blocks; evaluated for
  given splits, with a coarse grid search provided for experiments.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .beamforming import BeamModel
from .channel import ReflectionPath, Split, validate_split
from .errors import InvalidArgumentError
from .pathfind import (DEFAULT_CLIQUE_CAP, Candidate, build_path_graph, candidate_paths,
                       maximal_cliques)
from .scenario import LoSGraph, Scenario

SCHEMES = ("static", "dynamic", "subsurface", "equal-time")
SHARE_TOL = 1e-12


@dataclass
class Slot:
    tau: float
    paths: dict[int, tuple[ReflectionPath, ...]] = field(default_factory=dict)
    rho: dict[int, float] = field(default_factory=dict)
    alpha: dict[int, float] = field(default_factory=dict)
    gains: dict[ReflectionPath, float] = field(default_factory=dict)


@dataclass
class AllocationPlan:
    scheme: str
    mode: str
    slots: list[Slot]
    powers: list[float]  # per EU, watts; index k-1
    unreachable: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    split: dict[int, tuple[float, ...]] | None = None
    epsilon: list[float] | None = None

    @property
    def K(self) -> int:
        return len(self.powers)

    @property
    def objective(self) -> float:
        return min(self.powers) if self.powers else 0.0

    def eta(self) -> dict[tuple[int, int], float]:
        """``eta[(k, t)] = tau_t * rho_{k,t}``."""
        return {(k, t): s.tau * r for t, s in enumerate(self.slots) for k, r in s.rho.items()}

    def paths_of(self, k: int) -> list[ReflectionPath]:
        out = []
        for s in self.slots:
            out.extend(s.paths.get(k, ()))
        return out


def check_plan(plan: AllocationPlan, tol: float = 1e-9) -> None:
    """Raise ``AssertionError`` unless the plan's shares lie on their simplices."""
    taus = [s.tau for s in plan.slots]
    assert all(t >= -SHARE_TOL for t in taus), "negative slot length"
    assert abs(sum(taus) - 1.0) <= tol, f"slot lengths sum to {sum(taus)}"
    for t, s in enumerate(plan.slots):
        if s.rho:
            assert all(r >= -SHARE_TOL for r in s.rho.values()), f"negative rho in slot {t}"
            assert abs(sum(s.rho.values()) - 1.0) <= tol, f"rho of slot {t} sums to {sum(s.rho.values())}"
        if s.alpha:
            assert all(a >= -SHARE_TOL for a in s.alpha.values()), f"negative alpha in slot {t}"
            assert abs(sum(s.alpha.values()) - 1.0) <= tol, f"alpha of slot {t} sums to {sum(s.alpha.values())}"
        for k, ps in s.paths.items():
            for a, b in itertools.combinations(ps, 2):
                assert a.disjoint(b), f"EU {k} paths {a.irs} and {b.irs} share an IRS"
    if plan.scheme != "subsurface":
        used: dict[int, int] = {}
        for t, s in enumerate(plan.slots):
            used.clear()
            for k, ps in s.paths.items():
                for p in ps:
                    for j in p.irs:
                        assert used.setdefault(j, k) == k, f"IRS {j} serves two EUs in slot {t}"
    eta = plan.eta()
    if eta:
        assert abs(sum(eta.values()) - 1.0) <= tol or any(not s.rho for s in plan.slots), \
            "eta does not sum to 1"


# --------------------------------------------------------------------------
# closed forms

def combine_paths(gains: Sequence[float], rho: float = 1.0) -> tuple[float, list[float]]:
    """Cauchy-Schwarz optimal power split over node-disjoint paths of one EU.

    Returns ``(power, alpha)`` with ``power = rho * sum(gains)`` and
    ``alpha_q = rho * H_q / sum(gains)``.
    """
    g = [float(x) for x in gains]
    if any(x < 0 or not math.isfinite(x) for x in g):
        raise InvalidArgumentError("path gains must be finite and >= 0")
    if not 0.0 <= rho <= 1.0:
        raise InvalidArgumentError(f"rho must lie in [0, 1], got {rho}")
    total = math.fsum(g)
    if total == 0.0:
        return 0.0, [0.0] * len(g)
    return rho * total, [rho * x / total for x in g]


def _harmonic_shares(values: Sequence[float]) -> list[float]:
    """Shares proportional to 1/v over positive entries (0 elsewhere; uniform if none)."""
    inv = [1.0 / v if v > 0 else 0.0 for v in values]
    s = math.fsum(inv)
    if s == 0.0:
        return [1.0 / len(values)] * len(values) if values else []
    return [x / s for x in inv]


def solve_p22(h_max: Sequence[float]) -> tuple[list[float], float]:
    """Max-min time shares ``eta_k = H_k^-1 / sum H^-1`` with value ``1 / sum H^-1``.

    If some ``H_k`` is 0 the value is 0; the remaining shares still follow the
    harmonic rule over the reachable EUs.
    """
    h = [float(x) for x in h_max]
    if not h:
        raise InvalidArgumentError("need at least one EU")
    if any(x < 0 or not math.isfinite(x) for x in h):
        raise InvalidArgumentError("gains must be finite and >= 0")
    eta = _harmonic_shares(h)
    if any(x == 0.0 for x in h):
        return eta, 0.0
    return eta, 1.0 / math.fsum(1.0 / x for x in h)


def harmonic_combine(e: Sequence[float]) -> tuple[float, list[float]]:
    """``E = 1 / sum E_k^-1`` (0 if any ``E_k`` is 0) and ``rho_k`` proportional to ``E_k^-1``."""
    if any(x == 0.0 for x in e):
        return 0.0, _harmonic_shares(e)
    rho = _harmonic_shares(e)
    return 1.0 / math.fsum(1.0 / x for x in e), rho


def _alpha_for(members: Sequence[Candidate], rho: Mapping[int, float],
               totals: Mapping[int, float]) -> dict[int, float]:
    alpha: dict[int, float] = {}
    for c in members:
        k_total = totals[c.eu]
        if k_total > 0:
            j = c.path.irs[0]
            alpha[j] = alpha.get(j, 0.0) + rho[c.eu] * c.gain / k_total
    return alpha


# --------------------------------------------------------------------------
# candidate handling

def _model(scn: Scenario, graph: LoSGraph, mode: str, model: BeamModel | None) -> BeamModel:
    if model is not None:
        return model
    return BeamModel(scn, graph, mode)


def all_candidates(model: BeamModel, U: int | None = None,
                   max_hops: int | None = None) -> dict[int, list[Candidate]]:
    scn = model.scn
    u = scn.candidates_per_eu if U is None else U
    return {k: candidate_paths(model, k, u, max_hops) for k in range(1, scn.K + 1)}


def best_bundle(cands: Sequence[Candidate], cap: int = DEFAULT_CLIQUE_CAP
                ) -> tuple[float, list[Candidate]]:
    """Highest total-gain set of node-disjoint candidates of one EU."""
    if not cands:
        return 0.0, []
    pg = build_path_graph(cands)
    best, members = -1.0, []
    for c in maximal_cliques(pg, cap):
        g = math.fsum(pg.vertices[v].gain for v in c.members)
        if g > best:
            best, members = g, [pg.vertices[v] for v in c.members]
    return best, members


def _time_shared(scheme: str, model: BeamModel, cands: Mapping[int, Sequence[Candidate]],
                 cap: int, equal: bool) -> AllocationPlan:
    scn = model.scn
    K = scn.K
    bundles = [best_bundle(cands.get(k, ()), cap) for k in range(1, K + 1)]
    h = [b[0] for b in bundles]
    if equal:
        eta = [1.0 / K] * K
    else:
        eta, _ = solve_p22(h)
    slots, powers = [], []
    for k in range(1, K + 1):
        g, members = bundles[k - 1]
        paths = tuple(c.path for c in members)
        gains = {c.path: c.gain for c in members}
        _, alpha = combine_paths([c.gain for c in members], 1.0)
        a: dict[int, float] = {}
        for c, x in zip(members, alpha):
            a[c.path.irs[0]] = a.get(c.path.irs[0], 0.0) + x
        slots.append(Slot(eta[k - 1], {k: paths} if paths else {}, {k: 1.0}, a, gains))
        powers.append(scn.tx_power * eta[k - 1] * g)
    unreachable = [k for k in range(1, K + 1) if h[k - 1] == 0.0]
    notes = [f"EU {k} has no reflection path" for k in unreachable]
    return AllocationPlan(scheme, model.mode, slots, powers, unreachable, notes)


def solve_dynamic(scn: Scenario, graph: LoSGraph,
                  candidates: Mapping[int, Sequence[Candidate]] | None = None,
                  U: int | None = None, *, mode: str = "codebook",
                  max_hops: int | None = None, model: BeamModel | None = None,
                  cap: int = DEFAULT_CLIQUE_CAP) -> AllocationPlan:
    """Optimal dynamic routing: one slot per EU with harmonic time shares."""
    m = _model(scn, graph, mode, model)
    cands = all_candidates(m, U, max_hops) if candidates is None else candidates
    return _time_shared("dynamic", m, cands, cap, equal=False)


def solve_equal_time(scn: Scenario, graph: LoSGraph,
                     candidates: Mapping[int, Sequence[Candidate]] | None = None,
                     U: int | None = None, *, mode: str = "codebook",
                     max_hops: int | None = None, model: BeamModel | None = None,
                     cap: int = DEFAULT_CLIQUE_CAP) -> AllocationPlan:
    """Dynamic routing with uniform time shares ``1/K``."""
    m = _model(scn, graph, mode, model)
    cands = all_candidates(m, U, max_hops) if candidates is None else candidates
    return _time_shared("equal-time", m, cands, cap, equal=True)


def solve_static(scn: Scenario, graph: LoSGraph,
                 candidates: Mapping[int, Sequence[Candidate]] | None = None,
                 U: int | None = None, *, mode: str = "codebook",
                 max_hops: int | None = None, model: BeamModel | None = None,
                 cap: int = DEFAULT_CLIQUE_CAP) -> AllocationPlan:
    """Best single clique of the all-EU path graph, harmonic EU power shares."""
    m = _model(scn, graph, mode, model)
    cands = all_candidates(m, U, max_hops) if candidates is None else candidates
    K = scn.K
    pool = [c for k in range(1, K + 1) for c in cands.get(k, ())]
    pg = build_path_graph(pool)
    cliques = maximal_cliques(pg, cap)
    best = None
    for c in cliques:
        e = [c.gain(pg, k) for k in range(1, K + 1)]
        score, _ = harmonic_combine(e)
        if best is None or score > best[0]:
            best = (score, c, e)
    if best is None:
        slot = Slot(1.0, {}, {k: 1.0 / K for k in range(1, K + 1)}, {}, {})
        plan = AllocationPlan("static", m.mode, [slot], [0.0] * K, list(range(1, K + 1)),
                              ["no candidate paths for any EU"])
        return plan
    score, clique, e = best
    _, rho_list = harmonic_combine(e)
    rho = {k: rho_list[k - 1] for k in range(1, K + 1)}
    members = clique.candidates(pg)
    gains = {c.path: c.gain for c in members}
    paths: dict[int, tuple[ReflectionPath, ...]] = {}
    for c in members:
        paths[c.eu] = paths.get(c.eu, ()) + (c.path,)
    totals = {k: e[k - 1] for k in range(1, K + 1)}
    alpha = _alpha_for(members, rho, totals)
    powers = [scn.tx_power * rho[k] * e[k - 1] for k in range(1, K + 1)]
    unreachable = [k for k in range(1, K + 1) if e[k - 1] == 0.0]
    notes = []
    if score == 0.0:
        no_cand = [k for k in range(1, K + 1) if not cands.get(k)]
        if no_cand:
            notes.append(f"EUs {no_cand} have no reflection path")
        notes.append("no set of node-disjoint paths reaches every EU; static objective is 0")
    plan = AllocationPlan("static", m.mode, [Slot(1.0, paths, rho, alpha, gains)],
                          powers, unreachable, notes)
    if sum(alpha.values()) == 0.0:
        plan.slots[0].alpha = {}
    elif abs(sum(alpha.values()) - 1.0) > 1e-12:
        # some EUs unreached: spread their share over the reached ones
        s = sum(alpha.values())
        plan.slots[0].alpha = {j: a / s for j, a in alpha.items()}
    return plan


# --------------------------------------------------------------------------
# subsurfaces

def _check_subsurface_inputs(model: BeamModel, paths: Mapping[int, Sequence[ReflectionPath]],
                             split: Split, alpha: Mapping[int, float]) -> None:
    scn = model.scn
    validate_split(scn, split)
    n0 = set(model.graph.first_reflecting)
    for j, a in alpha.items():
        if j not in n0:
            raise InvalidArgumentError(f"IRS {j} has no LoS edge from the BS")
        if a < 0 or not math.isfinite(a):
            raise InvalidArgumentError(f"alpha of IRS {j} must be >= 0")
    if abs(math.fsum(alpha.values()) - 1.0) > 1e-9:
        raise InvalidArgumentError("alpha must sum to 1")
    for k, ps in paths.items():
        if not 1 <= k <= scn.K:
            raise InvalidArgumentError(f"unknown EU index {k}")
        for p in ps:
            if p.eu != scn.eu_node(k):
                raise InvalidArgumentError(f"path {p.irs} does not end at EU {k}")
        for a, b in itertools.combinations(ps, 2):
            if not a.disjoint(b):
                raise InvalidArgumentError(f"EU {k} subsurface paths {a.irs} and {b.irs} overlap")


def subsurface_gains(model: BeamModel, paths: Mapping[int, Sequence[ReflectionPath]],
                     split: Split) -> dict[ReflectionPath, float]:
    return {p: model.subsurface_path_gain(p, split) for ps in paths.values() for p in ps}


def eval_subsurface(model: BeamModel, paths: Mapping[int, Sequence[ReflectionPath]],
                    split: Split, alpha: Mapping[int, float]) -> list[float]:
    """Per-EU received power (watts) under subsurface routing.

    ``E_k = P * (sum_r sqrt(alpha_{first IRS} * H_sub(B_r)))**2``.
    """
    _check_subsurface_inputs(model, paths, split, alpha)
    scn = model.scn
    gains = subsurface_gains(model, paths, split)
    out = []
    for k in range(1, scn.K + 1):
        amp = math.fsum(math.sqrt(alpha.get(p.irs[0], 0.0) * gains[p]) for p in paths.get(k, ()))
        out.append(scn.tx_power * amp * amp)
    return out


def _mu(scn: Scenario, split: Split, j: int, k: int) -> float:
    if j in split:
        return float(split[j][k - 1])
    return 1.0 if scn.K == 1 else 0.0


@dataclass
class SubsurfaceComparison:
    e_s: list[float]
    e_d: list[float]
    epsilon: list[float]
    plan: AllocationPlan

    @property
    def certified(self) -> bool:
        return (all(d >= s * (1.0 - 1e-9) for d, s in zip(self.e_d, self.e_s))
                and math.fsum(self.epsilon) <= 1.0 + 1e-12)


def dynamic_from_subsurface(model: BeamModel, paths: Mapping[int, Sequence[ReflectionPath]],
                            split: Split, alpha: Mapping[int, float]) -> SubsurfaceComparison:
    """Build a dynamic plan that matches or beats a subsurface solution for every EU.

    EU ``k`` gets a slot of length ``eps_k = sum_r alpha * prod mu**2`` in which
    its paths use whole IRSs.  Leftover time forms an idle slot.
    """
    if not model.continuous:
        raise InvalidArgumentError("the subsurface-to-dynamic construction needs continuous mode")
    scn = model.scn
    e_s = eval_subsurface(model, paths, split, alpha)
    eps, e_d, slots = [], [], []
    for k in range(1, scn.K + 1):
        ps = tuple(paths.get(k, ()))
        ek = 0.0
        for p in ps:
            prod = alpha.get(p.irs[0], 0.0)
            for j in p.irs:
                prod *= _mu(scn, split, j, k) ** 2
            ek += prod
        eps.append(ek)
        gains = {p: model.path_gain(p) for p in ps}
        power, a = combine_paths([gains[p] for p in ps], 1.0)
        al: dict[int, float] = {}
        for p, x in zip(ps, a):
            al[p.irs[0]] = al.get(p.irs[0], 0.0) + x
        e_d.append(scn.tx_power * ek * power)
        slots.append(Slot(ek, {k: ps} if ps else {}, {k: 1.0}, al, gains))
    idle = 1.0 - math.fsum(eps)
    notes = []
    if idle > 0:
        slots.append(Slot(idle))
        notes.append(f"idle slot of length {idle:.6g}")
    plan = AllocationPlan("dynamic", model.mode, slots, e_d, [k for k in range(1, scn.K + 1)
                                                             if e_d[k - 1] == 0.0], notes)
    plan.epsilon = eps
    return SubsurfaceComparison(e_s, e_d, eps, plan)


def optimize_alpha(model: BeamModel, paths: Mapping[int, Sequence[ReflectionPath]],
                   gains: Mapping[ReflectionPath, float]) -> tuple[dict[int, float], float]:
    """Max-min BS power shares for fixed subsurface paths.

    With ``s = sqrt(alpha)`` each EU's amplitude is linear in ``s``, so the
    problem is ``max t`` s.t. ``A s >= t``, ``|s| <= 1``, ``s >= 0``.
    Returns ``(alpha, min_k E_k / P)``.
    """
    scn = model.scn
    firsts = sorted({p.irs[0] for ps in paths.values() for p in ps})
    if not firsts:
        return {}, 0.0
    col = {j: c for c, j in enumerate(firsts)}
    A = np.zeros((scn.K, len(firsts)))
    for k in range(1, scn.K + 1):
        for p in paths.get(k, ()):
            A[k - 1, col[p.irs[0]]] += math.sqrt(gains[p])
    if np.any(A.sum(axis=1) == 0.0):
        alpha = {j: 1.0 / len(firsts) for j in firsts}
        return alpha, 0.0
    scale = A.max()
    An = A / scale
    n = len(firsts)
    s0 = np.full(n, 1.0 / math.sqrt(n))
    x0 = np.append(s0, (An @ s0).min())
    res = minimize(
        lambda x: -x[-1], x0, method="SLSQP",
        jac=lambda x: np.append(np.zeros(n), -1.0),
        bounds=[(0.0, 1.0)] * n + [(0.0, None)],
        constraints=[
            {"type": "ineq", "fun": lambda x: An @ x[:-1] - x[-1],
             "jac": lambda x: np.hstack([An, -np.ones((An.shape[0], 1))])},
            {"type": "ineq", "fun": lambda x: 1.0 - x[:-1] @ x[:-1],
             "jac": lambda x: np.append(-2.0 * x[:-1], 0.0)},
        ],
        options={"maxiter": 500, "ftol": 1e-14},
    )
    s = np.clip(res.x[:-1], 0.0, None)
    if not np.any(s):
        s = s0
    s = s / np.linalg.norm(s)
    alpha = {j: float(s[col[j]] ** 2) for j in firsts}
    tot = math.fsum(alpha.values())
    alpha = {j: a / tot for j, a in alpha.items()}
    amps = A @ np.sqrt([alpha[j] for j in firsts])
    return alpha, float(np.min(amps ** 2))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def solve_subsurface(scn: Scenario, graph: LoSGraph,
                     candidates: Mapping[int, Sequence[Candidate]] | None = None,
                     U: int | None = None, *, mode: str = "codebook",
                     max_hops: int | None = None, model: BeamModel | None = None,
                     cap: int = DEFAULT_CLIQUE_CAP, sweeps: int = 2) -> AllocationPlan:
    """Coarse subsurface routing for experiments.

    Each EU keeps its best dynamic bundle.  IRSs used by one EU go entirely to
    it; splits of shared IRSs are improved by coordinate descent over whole
    columns (granularity ``1/m1``), with BS shares re-optimized at each step.
    """
    m = _model(scn, graph, mode, model)
    cands = all_candidates(m, U, max_hops) if candidates is None else candidates
    K = scn.K
    paths: dict[int, tuple[ReflectionPath, ...]] = {}
    for k in range(1, K + 1):
        _, members = best_bundle(cands.get(k, ()), cap)
        if members:
            paths[k] = tuple(c.path for c in members)
    users: dict[int, list[int]] = {}
    for k, ps in paths.items():
        for p in ps:
            for j in p.irs:
                users.setdefault(j, []).append(k)

    def share(j: int, owners: Sequence[int], cols: Sequence[int]) -> tuple[float, ...]:
        m1 = scn.irs_array(j).m1
        mu = [0.0] * K
        for k, c in zip(owners, cols):
            mu[k - 1] = c / m1
        return tuple(mu)

    split: dict[int, tuple[float, ...]] = {}
    for j in range(1, scn.J + 1):
        owners = sorted(set(users.get(j, [1])))
        m1 = scn.irs_array(j).m1
        base = [m1 // len(owners)] * len(owners)
        base[0] += m1 - sum(base)
        split[j] = share(j, owners, base)

    def score(sp):
        gains = subsurface_gains(m, paths, sp)
        alpha, val = optimize_alpha(m, paths, gains)
        return val, alpha

    val, alpha = score(split)
    shared = sorted(j for j, ks in users.items() if len(set(ks)) > 1)
    for _ in range(sweeps):
        improved = False
        for j in shared:
            owners = sorted(set(users[j]))
            m1 = scn.irs_array(j).m1
            for cols in _compositions(m1, len(owners)):
                trial = dict(split)
                trial[j] = share(j, owners, cols)
                if trial[j] == split[j]:
                    continue
                v, a = score(trial)
                if v > val * (1.0 + 1e-12):
                    val, alpha, split, improved = v, a, trial, True
        if not improved:
            break
    if not alpha:
        firsts = sorted(m.graph.first_reflecting)
        alpha = {j: 1.0 / len(firsts) for j in firsts} if firsts else {}
    gains = subsurface_gains(m, paths, split)
    if alpha:
        powers = eval_subsurface(m, paths, split, alpha)
    else:
        powers = [0.0] * K
    unreachable = [k for k in range(1, K + 1) if powers[k - 1] == 0.0]
    notes = [f"EU {k} receives no power" for k in unreachable]
    notes.append("splits from coordinate descent over whole columns; not a global optimum")
    plan = AllocationPlan("subsurface", m.mode, [Slot(1.0, paths, {}, dict(alpha), gains)],
                          powers, unreachable, notes, split=split)
    return plan


def solve(scheme: str, scn: Scenario, graph: LoSGraph, **kw) -> AllocationPlan:
    fn = {"static": solve_static, "dynamic": solve_dynamic,
          "subsurface": solve_subsurface, "equal-time": solve_equal_time}.get(scheme)
    if fn is None:
        raise InvalidArgumentError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return fn(scn, graph, **kw)
