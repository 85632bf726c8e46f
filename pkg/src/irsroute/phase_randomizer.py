"""Random common phase shifts and Monte-Carlo interference averaging.

Adding a common phase ``omega_j`` to every element of IRS ``j`` rotates each
path through ``j`` by ``omega_j`` and leaves all path gains unchanged.  Keeping
``omega(P) = sum_{j in P} omega_j`` equal over the paths serving one EU keeps
those paths coherent, while unintended (interference) paths pick up phases
that vary from draw to draw and so add up in power on average.

Random draws come from one Philox stream keyed by the seed.  Draw ``i`` reads
the ``J`` uniforms at stream positions ``i*J .. i*J+J-1`` (one per IRS id), so
a draw depends only on ``(seed, i)`` and can be regenerated in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .allocator import AllocationPlan, Slot
from .beamforming import BeamModel
from .channel import IrsConfiguration, ReflectionPath, enumerate_all_paths, path_channel
from .errors import InvalidArgumentError, IrsRouteError
from .scenario import LoSGraph, Scenario

TWO_PI = 2.0 * math.pi


@dataclass
class PhaseConstraintSystem:
    """Linear constraints ``omega(P_q) - omega(P_1) = 0`` and their solution.

    ``dependent[j]`` maps each free IRS id to its exact coefficient in the
    expression of the dependent ``omega_j``.
    """

    n_irs: int
    equations: list[dict[int, int]]
    dependent: dict[int, dict[int, Fraction]]
    free: tuple[int, ...]
    omega: dict[int, float] = field(default_factory=dict)
    seed: int | None = None
    draw: int | None = None

    def expression(self, j: int) -> dict[int, Fraction]:
        """``omega_j`` as a combination of free variables."""
        if j in self.dependent:
            return self.dependent[j]
        return {j: Fraction(1)}

    def path_expression(self, path: ReflectionPath) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for j in path.irs:
            for f, c in self.expression(j).items():
                out[f] = out.get(f, Fraction(0)) + c
        return {f: c for f, c in out.items() if c != 0}

    def assign(self, free_values: Mapping[int, float]) -> dict[int, float]:
        omega = {j: float(free_values[j]) % TWO_PI for j in self.free}
        for j, expr in self.dependent.items():
            omega[j] = math.fsum(float(c) * omega[f] for f, c in expr.items()) % TWO_PI
        return dict(sorted(omega.items()))

    def residuals(self, omega: Mapping[int, float] | None = None) -> list[float]:
        """Wrapped residual of every equation, in ``[0, pi]``."""
        om = self.omega if omega is None else omega
        out = []
        for eq in self.equations:
            r = math.fsum(c * om[j] for j, c in eq.items()) % TWO_PI
            out.append(min(r, TWO_PI - r))
        return out


def _equations(path_sets: Mapping[int, Sequence[ReflectionPath]]) -> list[dict[int, int]]:
    eqs = []
    for k in sorted(path_sets):
        ps = list(path_sets[k])
        for a in range(len(ps)):
            for b in range(a + 1, len(ps)):
                if not ps[a].disjoint(ps[b]):
                    raise InvalidArgumentError(
                        f"paths {ps[a].irs} and {ps[b].irs} of EU {k} share an IRS")
        for q in ps[1:]:
            eq: dict[int, int] = {}
            for j in q.irs:
                eq[j] = eq.get(j, 0) + 1
            for j in ps[0].irs:
                eq[j] = eq.get(j, 0) - 1
            eqs.append({j: c for j, c in sorted(eq.items()) if c})
    return eqs


def constraint_system(path_sets: Mapping[int, Sequence[ReflectionPath]],
                      n_irs: int) -> PhaseConstraintSystem:
    """Exact elimination of the common-phase equations.

    Each equation makes one variable dependent: the smallest IRS id among
    those still carrying a nonzero coefficient.  All other IRSs stay free.
    """
    eqs = _equations(path_sets)
    pivots: dict[int, dict[int, Fraction]] = {}  # pivot -> expression in non-pivots
    for eq in eqs:
        row = {j: Fraction(c) for j, c in eq.items()}
        # substitute existing pivots
        reduced: dict[int, Fraction] = {}
        for j, c in row.items():
            for f, cf in pivots.get(j, {j: Fraction(1)}).items():
                reduced[f] = reduced.get(f, Fraction(0)) + c * cf
        reduced = {j: c for j, c in reduced.items() if c != 0}
        if not reduced:
            raise IrsRouteError("redundant common-phase equation; bundle paths must be disjoint")
        p = min(reduced)
        cp = reduced.pop(p)
        expr = {j: -c / cp for j, c in reduced.items()}
        for q, e in pivots.items():
            if p in e:
                cq = e.pop(p)
                for j, c in expr.items():
                    e[j] = e.get(j, Fraction(0)) + cq * c
                pivots[q] = {j: c for j, c in e.items() if c != 0}
        pivots[p] = expr
    free = tuple(j for j in range(1, n_irs + 1) if j not in pivots)
    dep = {p: dict(sorted(e.items())) for p, e in sorted(pivots.items())}
    return PhaseConstraintSystem(n_irs, eqs, dep, free)


def uniform_block(seed: int, draw: int, n: int) -> np.ndarray:
    """``n`` uniforms on ``[0, 1)`` of draw ``draw`` from the Philox stream of ``seed``."""
    if draw < 0 or n < 0:
        raise InvalidArgumentError("draw index and block size must be >= 0")
    pos = draw * n
    bg = np.random.Philox(key=seed)
    bg.advance(pos // 4)  # one counter step yields four 64-bit outputs
    return np.random.Generator(bg).random(pos % 4 + n)[pos % 4:]


def uniform_blocks(seed: int, draws: int, n: int, start: int = 0) -> np.ndarray:
    """Rows ``start .. start+draws-1`` of the per-draw uniforms, shape ``(draws, n)``."""
    pos = start * n
    bg = np.random.Philox(key=seed)
    bg.advance(pos // 4)
    flat = np.random.Generator(bg).random(pos % 4 + draws * n)[pos % 4:]
    return flat.reshape(draws, n)


def solve_common_phases(path_sets: Mapping[int, Sequence[ReflectionPath]], seed: int,
                        n_irs: int | None = None, draw: int = 0) -> PhaseConstraintSystem:
    """Constraint system with free phases drawn uniformly on ``[0, 2 pi)``."""
    n = n_irs if n_irs is not None else max(
        (j for ps in path_sets.values() for p in ps for j in p.irs), default=0)
    system = constraint_system(path_sets, n)
    u = uniform_block(seed, draw, n) * TWO_PI
    system.omega = system.assign({j: u[j - 1] for j in system.free})
    system.seed, system.draw = seed, draw
    return system


# --------------------------------------------------------------------------
# Monte Carlo

@dataclass
class MonteCarloResult:
    mean: float
    stderr: float
    e_max: float  # coherent signal-only power
    e_av: float  # e_max plus the power sum over interference paths
    e_av_exact: float  # expectation with identically-phased paths grouped
    coherence_error: float  # worst relative loss of in-bundle coherence over draws
    designed: float  # in-slot power the plan designs for this EU
    draws: int
    seed: int
    signal: list[ReflectionPath]
    interference: list[ReflectionPath]
    phase_differences: np.ndarray | None = None

    def __iter__(self):
        return iter((self.mean, self.stderr))

    @property
    def approximation_gap(self) -> float:
        """Relative gap between the average power and the coherent-only value."""
        return (self.e_av - self.e_max) / self.e_av if self.e_av > 0 else 0.0


def _slot_of(plan: AllocationPlan, k: int) -> Slot:
    for s in plan.slots:
        if s.paths.get(k):
            return s
    raise InvalidArgumentError(f"plan serves EU {k} with no reflection path")


def aligned_configuration(model: BeamModel, slot: Slot, w: np.ndarray) -> IrsConfiguration:
    """Plan beams with each path's last IRS rotated so a bundle's paths add in phase."""
    scn, graph = model.scn, model.graph
    paths = [p for ps in slot.paths.values() for p in ps]
    config = model.configuration(paths)
    for k, ps in slot.paths.items():
        amps = [path_channel(scn, graph, p, w, config) for p in ps]
        ref = np.angle(amps[0])
        for p, a in zip(ps[1:], amps[1:]):
            last = p.irs[-1]
            config.theta[last] = config.theta[last] * np.exp(1j * (ref - np.angle(a)))
    return config


def monte_carlo_average_power(scn: Scenario, graph: LoSGraph, plan: AllocationPlan, eu: int,
                              draws: int, seed: int, *, model: BeamModel | None = None,
                              max_hops: int | None = None, chunk: int = 65536,
                              keep_phase_reference: ReflectionPath | None = None
                              ) -> MonteCarloResult:
    """Average received power of EU ``eu`` (1-based) under random common phases.

    The configuration is the plan's slot serving ``eu``.  All BS-to-EU paths up
    to ``max_hops`` IRSs are summed coherently in each draw.  Powers are
    instantaneous (within the slot) in watts.
    """
    if draws < 1:
        raise InvalidArgumentError("draws must be >= 1")
    m = model if model is not None else BeamModel(scn, graph, plan.mode)
    slot = _slot_of(plan, eu)
    w = np.zeros(scn.bs.array.m1, dtype=complex)
    for j, a in slot.alpha.items():
        w += math.sqrt(a) * m.bs_beam(j)[0]
    config = aligned_configuration(m, slot, w)
    node = scn.eu_node(eu)
    hops = scn.max_hops if max_hops is None else max_hops
    signal = list(slot.paths[eu])
    sig_set = set(signal)
    everything = enumerate_all_paths(graph, node, hops)
    interference = [p for p in everything if p not in sig_set]
    h_sig = np.array([path_channel(scn, graph, p, w, config) for p in signal])
    h_int = np.array([path_channel(scn, graph, p, w, config) for p in interference],
                     dtype=complex)

    system = constraint_system(slot.paths, scn.J)
    J = scn.J
    # path phase = sum over its IRSs of omega_j; omega is linear in the free uniforms
    def incidence(paths):
        A = np.zeros((len(paths), J))
        for r, p in enumerate(paths):
            for j in p.irs:
                A[r, j - 1] += 1.0
        return A
    dep = np.eye(J)
    for j, expr in system.dependent.items():
        dep[:, j - 1] = 0.0
        for f, c in expr.items():
            dep[f - 1, j - 1] = float(c)
    A_sig, A_int = incidence(signal), incidence(interference)

    P = scn.tx_power
    abs_sig = float(np.sum(np.abs(h_sig)))
    e_max = P * abs_sig ** 2
    e_av = e_max + P * float(np.sum(np.abs(h_int) ** 2))
    # moments are accumulated about e_av so a constant power gives zero variance
    total = 0.0
    total_sq = 0.0
    worst = 0.0
    diffs = []
    ref_row = None
    if keep_phase_reference is not None:
        ref_row = incidence([keep_phase_reference])[0]
    for start in range(0, draws, chunk):
        n = min(chunk, draws - start)
        free = uniform_blocks(seed, n, J, start) * TWO_PI
        omega = np.mod(free @ dep, TWO_PI)
        s = (np.exp(1j * (omega @ A_sig.T)) * h_sig).sum(axis=1)
        x = s + (np.exp(1j * (omega @ A_int.T)) * h_int).sum(axis=1) if len(h_int) else s
        dev = P * np.abs(x) ** 2 - e_av
        total += float(dev.sum())
        total_sq += float((dev ** 2).sum())
        if abs_sig > 0:
            worst = max(worst, float(np.max(1.0 - np.abs(s) / abs_sig)))
        if ref_row is not None:
            ph_sig = omega @ A_sig[0] + np.angle(h_sig[0])
            ph_ref = omega @ ref_row
            diffs.append(np.mod(ph_sig - ph_ref, TWO_PI))
    shift = total / draws
    var = max(total_sq - draws * shift * shift, 0.0) / (draws - 1) if draws > 1 else 0.0
    mean = e_av + shift
    stderr = math.sqrt(var / draws)
    e_exact = _grouped_expectation(system, signal, interference, h_sig, h_int) * P
    designed = plan.powers[eu - 1] / slot.tau if slot.tau > 0 else 0.0
    return MonteCarloResult(mean, stderr, e_max, e_av, e_exact, worst, designed, draws, seed,
                            signal, interference,
                            np.concatenate(diffs) if diffs else None)


def _grouped_expectation(system: PhaseConstraintSystem, signal, interference, h_sig, h_int):
    """Exact mean of ``|sum h e^{j phase}|**2`` for integer phase combinations.

    Paths whose phases are the same combination of free variables add
    coherently; any two different integer combinations average out.
    """
    groups: dict[tuple, complex] = {}
    for p, h in list(zip(signal, h_sig)) + list(zip(interference, h_int)):
        expr = system.path_expression(p)
        key = tuple(sorted(expr.items()))
        groups[key] = groups.get(key, 0j) + complex(h)
    return float(sum(abs(v) ** 2 for v in groups.values()))


def phase_uniformity_pvalue(diffs: np.ndarray) -> float:
    """Kolmogorov-Smirnov p-value of ``diffs`` against uniform on ``[0, 2 pi)``."""
    return float(stats.kstest(np.asarray(diffs) / TWO_PI, "uniform").pvalue)
