"""DFT codebooks, beam selection and end-to-end path gains.

Two modes are supported.  ``"codebook"`` selects BS and IRS beams from DFT
codebooks; ``"continuous"`` lets every element take any phase, in which case
hop gains are exactly ``N_B`` (BS) and ``M**2`` (IRS) and are reported
symbolically rather than by evaluating the optimized inner products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .channel import (ReflectionPath, IrsConfiguration, Split, bs_response, check_path,
                      column_counts, irs_response, sub_response)
from .errors import InvalidArgumentError
from .geometry import steering_vector
from .scenario import LoSGraph, Scenario

MODES = ("codebook", "continuous")
# codewords whose gain is within this relative distance of the best count as tied
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class Codebook:
    """Beam vectors stacked as rows.

    IRS codebooks keep their horizontal and vertical DFT factors so that the
    full ``qh*qv`` scan reduces to two small matrix products.
    """

    vectors: NDArray[np.complex128]
    kind: str
    factors: tuple[NDArray[np.complex128], NDArray[np.complex128]] | None = None

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class HopGain:
    value: float
    chosen_index: int | str


def build_bs_codebook(n: int, q: int) -> Codebook:
    """Unit-norm DFT beams ``e(2u/q, n) / sqrt(n)``, ``u = 0..q-1``."""
    if q < 1 or n < 1:
        raise InvalidArgumentError("codebook size and antenna count must be >= 1")
    vecs = np.stack([steering_vector(2.0 * u / q, n) for u in range(q)]) / np.sqrt(n)
    return Codebook(vecs, "bs")


@lru_cache(maxsize=64)
def _irs_factors(m1: int, m2: int, qh: int, qv: int):
    hf = np.stack([steering_vector(2.0 * u / qh, m1) for u in range(qh)])
    vf = np.stack([steering_vector(2.0 * v / qv, m2) for v in range(qv)])
    return hf, vf


def build_irs_codebook(m1: int, m2: int, qh: int, qv: int) -> Codebook:
    """Kronecker DFT beams ``e(2u/qh, m1) x e(2v/qv, m2)``; flat index ``u*qv + v``."""
    if min(m1, m2, qh, qv) < 1:
        raise InvalidArgumentError("IRS codebook dimensions must be >= 1")
    hf, vf = _irs_factors(m1, m2, qh, qv)
    vecs = (hf[:, None, :, None] * vf[None, :, None, :]).reshape(qh * qv, m1 * m2)
    return Codebook(vecs, "irs", (hf, vf))


def _first_best(gains: NDArray[np.float64]) -> int:
    top = gains.max()
    return int(np.flatnonzero(gains >= top * (1.0 - TIE_RTOL))[0])


def best_bs_beam(codebook: Codebook | None, h_tilde: NDArray[np.complex128]):
    """Codeword maximizing ``|h~^H w|``; lowest index wins ties.

    ``codebook=None`` selects the continuous (matched) beam.
    Returns ``(w, HopGain)`` with the gain ``|h~^H w|**2``.
    """
    h = np.asarray(h_tilde, dtype=complex)
    if codebook is None:
        w = h / np.linalg.norm(h)
        return w, HopGain(float(h.size), "continuous")
    if codebook.vectors.shape[1] != h.size:
        raise InvalidArgumentError("BS codebook and channel lengths differ")
    gains = np.abs(codebook.vectors @ h.conj()) ** 2
    u = _first_best(gains)
    return codebook.vectors[u], HopGain(float(gains[u]), u)


def best_irs_beam(codebook: Codebook | None, incident: NDArray[np.complex128],
                  departure: NDArray[np.complex128]):
    """Passive beam maximizing ``|departure^H diag(theta) incident|``.

    ``codebook=None`` gives the continuous optimum: every element cancels the
    phase of ``conj(departure) * incident`` and the gain is ``M**2``.
    """
    inc = np.asarray(incident, dtype=complex)
    dep = np.asarray(departure, dtype=complex)
    if inc.shape != dep.shape:
        raise InvalidArgumentError("incident and departure responses differ in length")
    c = dep.conj() * inc
    if codebook is None:
        theta = np.exp(-1j * np.angle(c))
        return theta, HopGain(float(c.size) ** 2, "continuous")
    if codebook.vectors.shape[1] != c.size:
        raise InvalidArgumentError("IRS codebook and response lengths differ")
    if codebook.factors is not None:
        hf, vf = codebook.factors
        amp = hf @ c.reshape(hf.shape[1], vf.shape[1]) @ vf.T
        gains = (np.abs(amp) ** 2).ravel()
    else:
        gains = np.abs(codebook.vectors @ c) ** 2
    u = _first_best(gains)
    return codebook.vectors[u], HopGain(float(gains[u]), u)


class BeamModel:
    """Beam selections and gains for one scenario, graph and mode, with caching."""

    def __init__(self, scn: Scenario, graph: LoSGraph, mode: str = "codebook"):
        if mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
        self.scn = scn
        self.graph = graph
        self.mode = mode
        self._bs_cb = None
        self._bs: dict[int, tuple] = {}
        self._irs: dict[tuple, tuple] = {}
        self._sub: dict[tuple, tuple] = {}

    @property
    def continuous(self) -> bool:
        return self.mode == "continuous"

    def bs_codebook(self) -> Codebook | None:
        if self.continuous:
            return None
        if self._bs_cb is None:
            self._bs_cb = build_bs_codebook(self.scn.bs.array.m1, self.scn.bs.codebook_size)
        return self._bs_cb

    def irs_codebook(self, j: int, m1: int | None = None) -> Codebook | None:
        if self.continuous:
            return None
        s = self.scn.irs[j - 1]
        return build_irs_codebook_cached(s.array.m1 if m1 is None else m1, s.array.m2,
                                         s.codebook_h, s.codebook_v)

    # ---- per-hop selections

    def bs_beam(self, j: int):
        """Optimal BS beam toward first-reflecting IRS ``j``: ``(w, HopGain)``."""
        if j not in self._bs:
            self._bs[j] = best_bs_beam(self.bs_codebook(), bs_response(self.scn, j))
        return self._bs[j]

    def irs_beam(self, prev: int, j: int, nxt: int):
        """Optimal beam of IRS ``j`` reflecting from ``prev`` to ``nxt``."""
        key = (prev, j, nxt)
        if key not in self._irs:
            self._irs[key] = best_irs_beam(self.irs_codebook(j), irs_response(self.scn, j, prev),
                                           irs_response(self.scn, j, nxt))
        return self._irs[key]

    def link_gain(self, i: int, j: int) -> float:
        """Free-space factor ``beta / d**2`` of one link."""
        return self.scn.beta / self.scn.distance(i, j) ** 2

    def kappa(self, path: ReflectionPath) -> float:
        """Squared end-to-end LoS amplitude ``beta^(L+1) prod d^-2``."""
        out = 1.0
        for i, j in path.links:
            out *= self.link_gain(i, j)
        return out

    def path_gain(self, path: ReflectionPath) -> float:
        """Maximum channel power gain over ``path`` with optimized beams."""
        check_path(self.graph, path)
        if self.continuous:
            cpb = 1.0
            for j in path.irs:
                cpb *= float(self.scn.irs_array(j).n_elements) ** 2
            return self.kappa(path) * cpb * self.scn.bs.array.m1
        g = self.bs_beam(path.irs[0])[1].value
        for t in path.triples():
            g *= self.irs_beam(*t)[1].value
        return self.kappa(path) * g

    def configuration(self, paths: Sequence[ReflectionPath]) -> IrsConfiguration:
        """IRS beams implementing node-disjoint ``paths``; unused IRSs keep codeword 0."""
        theta = {}
        for p in paths:
            for t in p.triples():
                if t[1] in theta:
                    raise InvalidArgumentError(f"IRS {t[1]} appears on two selected paths")
                theta[t[1]] = self.irs_beam(*t)[0]
        for j in range(1, self.scn.J + 1):
            theta.setdefault(j, np.ones(self.scn.irs_array(j).n_elements, dtype=complex))
        return IrsConfiguration(theta)

    # ---- subsurfaces

    def _mu(self, split: Split, j: int) -> Sequence[float]:
        if j in split:
            return split[j]
        if self.scn.K == 1:
            return (1.0,)
        raise InvalidArgumentError(f"no element split given for IRS {j}")

    def sub_irs_beam(self, prev: int, j: int, nxt: int, split: Split, k: int):
        """Beam of subsurface ``j_k`` reflecting from ``prev`` to ``nxt``."""
        mu = self._mu(split, j)
        key = (prev, j, nxt, tuple(mu), k)
        if key not in self._sub:
            cols = column_counts(self.scn.irs_array(j).m1, mu)[k - 1]
            if cols == 0:
                self._sub[key] = (np.zeros(0, dtype=complex), HopGain(0.0, "empty"))
            else:
                inc = sub_response(self.scn, split, j, prev, k)
                dep = sub_response(self.scn, split, j, nxt, k)
                self._sub[key] = best_irs_beam(self.irs_codebook(j, cols), inc, dep)
        return self._sub[key]

    def subsurface_path_gain(self, path: ReflectionPath, split: Split) -> float:
        """Gain of a path whose every IRS uses its subsurface for EU ``path.eu``."""
        check_path(self.graph, path)
        k = self.scn.eu_index(path.eu)
        if self.continuous:
            cpb = 1.0
            for j in path.irs:
                a = self.scn.irs_array(j)
                cpb *= float(column_counts(a.m1, self._mu(split, j))[k - 1] * a.m2) ** 2
            return self.kappa(path) * cpb * self.scn.bs.array.m1
        g = self.bs_beam(path.irs[0])[1].value
        for t in path.triples():
            g *= self.sub_irs_beam(*t, split, k)[1].value
        return self.kappa(path) * g


@lru_cache(maxsize=64)
def build_irs_codebook_cached(m1: int, m2: int, qh: int, qv: int) -> Codebook:
    return build_irs_codebook(m1, m2, qh, qv)


def path_gain(scn: Scenario, graph: LoSGraph, path: ReflectionPath, mode: str = "codebook") -> float:
    return BeamModel(scn, graph, mode).path_gain(path)


def split_bs_beam(model: BeamModel, alpha: Mapping[int, float]):
    """Superpose per-IRS BS beams with power shares ``alpha``.

    Returns ``(w, irs_order, cross)`` where ``cross[a, b]`` is
    ``|h~_{j_a}^H w_B(j_b)|**2 / N_B``; its off-diagonal entries measure how far
    the beams are from being mutually isolated.
    """
    n0 = set(model.graph.first_reflecting)
    for j, a in alpha.items():
        if j not in n0:
            raise InvalidArgumentError(f"IRS {j} has no LoS edge from the BS")
        if not np.isfinite(a) or a < 0:
            raise InvalidArgumentError(f"power share of IRS {j} must be >= 0, got {a}")
    if abs(sum(alpha.values()) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"power shares must sum to 1, got {sum(alpha.values())}")
    order = sorted(alpha)
    n_b = model.scn.bs.array.m1
    w = np.zeros(n_b, dtype=complex)
    for j in order:
        w += np.sqrt(alpha[j]) * model.bs_beam(j)[0]
    cross = np.empty((len(order), len(order)))
    for a, j in enumerate(order):
        h = bs_response(model.scn, j)
        for b, i in enumerate(order):
            cross[a, b] = abs(np.vdot(h, model.bs_beam(i)[0])) ** 2 / n_b
    return w, order, cross


__all__ = [
    "MODES", "Codebook", "HopGain", "BeamModel", "build_bs_codebook", "build_irs_codebook",
    "best_bs_beam", "best_irs_beam", "path_gain", "split_bs_beam",
]
