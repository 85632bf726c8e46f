"""LoS link channels, cascaded reflection-path channels and subsurface slicing."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidArgumentError, NoLineOfSightError
from .geometry import bs_array_response, irs_array_response
from .scenario import BS, LoSGraph, Scenario


@dataclass(frozen=True, order=True)
class ReflectionPath:
    """Ordered IRS sequence carrying the signal from the BS to EU node ``eu``."""

    eu: int
    irs: tuple[int, ...]

    def __post_init__(self):
        if len(self.irs) < 1:
            raise InvalidArgumentError("a reflection path visits at least one IRS")
        if len(set(self.irs)) != len(self.irs):
            raise InvalidArgumentError(f"path {self.irs} repeats an IRS")

    @property
    def hops(self) -> int:
        return len(self.irs)

    @property
    def nodes(self) -> tuple[int, ...]:
        """Full node sequence ``(0, a_1, ..., a_L, eu)``."""
        return (BS, *self.irs, self.eu)

    @property
    def links(self) -> list[tuple[int, int]]:
        n = self.nodes
        return list(zip(n[:-1], n[1:]))

    def triples(self) -> list[tuple[int, int, int]]:
        """(previous, irs, next) for every reflecting IRS on the path."""
        n = self.nodes
        return [(n[l - 1], n[l], n[l + 1]) for l in range(1, len(n) - 1)]

    def disjoint(self, other: "ReflectionPath") -> bool:
        return not set(self.irs) & set(other.irs)


def check_path(graph: LoSGraph, path: ReflectionPath) -> None:
    for i, j in path.links:
        if not graph.has_edge(i, j):
            raise NoLineOfSightError(f"path {path.irs} uses missing edge {i}->{j}")


@dataclass
class IrsConfiguration:
    """Per-IRS passive beams ``theta`` and common phase shifts ``omega`` (radians)."""

    theta: dict[int, NDArray[np.complex128]] = field(default_factory=dict)
    omega: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for j, t in self.theta.items():
            if not np.allclose(np.abs(t), 1.0, atol=1e-12, rtol=0.0):
                raise InvalidArgumentError(f"theta of IRS {j} has non-unit-modulus entries")

    def reflection(self, j: int) -> NDArray[np.complex128]:
        return self.theta[j] * np.exp(1j * self.omega.get(j, 0.0))


# --------------------------------------------------------------------------
# array responses in node terms

def bs_response(scn: Scenario, target: int) -> NDArray[np.complex128]:
    """BS transmit response toward ``target`` (the h~_{j,1} factor)."""
    return bs_array_response(scn.bs.array, scn.position(target), scn.bs.position, scn.wavelength)


def irs_response(scn: Scenario, j: int, node: int) -> NDArray[np.complex128]:
    """Response of IRS ``j`` toward/from ``node``."""
    s = scn.irs[j - 1]
    return irs_array_response(s.array, scn.position(node), s.position, scn.wavelength)


def link_scale(scn: Scenario, i: int, j: int) -> complex:
    d = scn.distance(i, j)
    return np.sqrt(scn.beta) / d * np.exp(-2j * np.pi * d / scn.wavelength)


def link_channel(scn: Scenario, graph: LoSGraph, i: int, j: int) -> NDArray[np.complex128]:
    """LoS channel matrix from node ``i`` to node ``j``.

    Shapes: ``M x N_B`` from the BS, ``M_j x M_i`` between IRSs and ``1 x M``
    into an EU.  Every matrix is rank one.
    """
    if not graph.has_edge(i, j):
        raise NoLineOfSightError(f"no LoS edge {i}->{j}")
    c = link_scale(scn, i, j)
    if i == BS:
        return c * np.outer(irs_response(scn, j, BS), bs_response(scn, j).conj())
    if scn.is_eu(j):
        return c * irs_response(scn, i, j).conj()[None, :]
    return c * np.outer(irs_response(scn, j, i), irs_response(scn, i, j).conj())


def path_channel(scn: Scenario, graph: LoSGraph, path: ReflectionPath,
                 bs_beam: NDArray[np.complex128], config: IrsConfiguration) -> complex:
    """End-to-end BS-EU channel over ``path`` by sequential matrix-vector products."""
    w = np.asarray(bs_beam, dtype=complex)
    if w.shape != (scn.bs.array.m1,):
        raise InvalidArgumentError(f"BS beam must have length {scn.bs.array.m1}")
    check_path(graph, path)
    x = link_channel(scn, graph, BS, path.irs[0]) @ w
    for i, j in zip(path.irs[:-1], path.irs[1:]):
        x = link_channel(scn, graph, i, j) @ (config.reflection(i) * x)
    last = path.irs[-1]
    return complex((link_channel(scn, graph, last, path.eu) @ (config.reflection(last) * x))[0])


def total_received_power(scn: Scenario, graph: LoSGraph, eu: int,
                         all_paths: Sequence[ReflectionPath],
                         bs_beam: NDArray[np.complex128], config: IrsConfiguration) -> float:
    """Received power (watts) at ``eu`` from the coherent sum over ``all_paths``."""
    total = 0j
    for p in all_paths:
        if p.eu != eu:
            raise InvalidArgumentError(f"path {p.irs} ends at node {p.eu}, not {eu}")
        total += path_channel(scn, graph, p, bs_beam, config)
    return scn.tx_power * abs(total) ** 2


def enumerate_all_paths(graph: LoSGraph, eu: int, max_hops: int) -> list[ReflectionPath]:
    """Every BS-to-``eu`` path through at most ``max_hops`` IRSs, in lexicographic order."""
    if max_hops < 1:
        raise InvalidArgumentError("max_hops must be >= 1")
    out: list[ReflectionPath] = []
    stack: list[tuple[int, tuple[int, ...]]] = [(j, (j,)) for j in graph.succ.get(BS, ())
                                                if j <= graph.n_irs]
    while stack:
        node, seq = stack.pop()
        for nxt in graph.succ.get(node, ()):
            if nxt == eu:
                out.append(ReflectionPath(eu, seq))
            elif nxt <= graph.n_irs and nxt not in seq and len(seq) < max_hops:
                stack.append((nxt, seq + (nxt,)))
    out.sort(key=lambda p: p.irs)
    return out


# --------------------------------------------------------------------------
# subsurfaces

Split = Mapping[int, Sequence[float]]


def column_counts(m1: int, mu: Sequence[float]) -> list[int]:
    """Whole horizontal columns given to each EU; rejects non-integral shares."""
    counts = []
    for k, share in enumerate(mu):
        if share < 0:
            raise InvalidArgumentError(f"negative element share {share} for EU {k + 1}")
        cols = share * m1
        r = round(cols)
        if abs(cols - r) > 1e-9:
            raise InvalidArgumentError(
                f"share {share} of EU {k + 1} is not a multiple of 1/{m1} (m1 = {m1})")
        counts.append(int(r))
    if abs(sum(mu) - 1.0) > 1e-9 or sum(counts) != m1:
        raise InvalidArgumentError(f"element shares {list(mu)} must sum to 1")
    return counts


def subsurface_slice(m1: int, m2: int, mu: Sequence[float], k: int) -> slice:
    """Flat-index slice of the sub-array allotted to EU ``k`` (1-based).

    Contiguous blocks of whole columns, i.e. elements
    ``M * sum_{s<k} mu_s + 1 .. M * sum_{s<=k} mu_s`` in one-based terms.
    """
    counts = column_counts(m1, mu)
    start = sum(counts[: k - 1])
    return slice(start * m2, (start + counts[k - 1]) * m2)


def validate_split(scn: Scenario, split: Split) -> None:
    for j, mu in split.items():
        if not scn.is_irs(j):
            raise InvalidArgumentError(f"split given for non-IRS node {j}")
        if len(mu) != scn.K:
            raise InvalidArgumentError(f"split of IRS {j} needs {scn.K} shares")
        column_counts(scn.irs_array(j).m1, mu)


def _split_of(scn: Scenario, split: Split, j: int) -> Sequence[float]:
    if j in split:
        return split[j]
    if scn.K == 1:
        return (1.0,)
    raise InvalidArgumentError(f"no element split given for IRS {j}")


def sub_response(scn: Scenario, split: Split, j: int, node: int, k: int) -> NDArray[np.complex128]:
    """Slice of IRS ``j``'s response toward ``node`` on the subsurface of EU ``k``."""
    a = scn.irs_array(j)
    return irs_response(scn, j, node)[subsurface_slice(a.m1, a.m2, _split_of(scn, split, j), k)]


def subsurface_channel(scn: Scenario, graph: LoSGraph, i: int, j: int, split: Split,
                       from_sub: int | None, to_sub: int | None) -> NDArray[np.complex128]:
    """Channel from subsurface ``i_{from_sub}`` to subsurface ``j_{to_sub}``.

    BS and EU endpoints are not split; their sub-index is ignored.
    """
    if not graph.has_edge(i, j):
        raise NoLineOfSightError(f"no LoS edge {i}->{j}")
    c = link_scale(scn, i, j)
    if i == BS:
        return c * np.outer(sub_response(scn, split, j, BS, to_sub), bs_response(scn, j).conj())
    if scn.is_eu(j):
        return c * sub_response(scn, split, i, j, from_sub).conj()[None, :]
    return c * np.outer(sub_response(scn, split, j, i, to_sub),
                        sub_response(scn, split, i, j, from_sub).conj())
