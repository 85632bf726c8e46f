"""Candidate reflection paths and node-disjoint path bundles.

Candidates for an EU are the ``U`` highest-gain BS-to-EU paths, found with
Yen's algorithm on a line graph of the LoS graph.  A line-graph vertex is a
LoS edge ``(i, j)``; an arc ``(i, j) -> (j, r)`` carries ``-log`` of the gain
picked up by reflecting at ``j`` toward ``r`` (free-space factor of the
``j -> r`` link times the optimized IRS hop gain), and the source arc into
``(0, j)`` carries the BS link and beam gain.  A full path therefore weighs
``-log H`` and shortest paths are highest-gain paths.  Weights may be
negative, so shortest paths are computed by dynamic programming over the
(acyclic) line graph rather than by Dijkstra.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import _kernels
from .beamforming import BeamModel
from .channel import ReflectionPath
from .errors import InvalidArgumentError, ResourceLimitError
from .scenario import BS, LoSGraph, Scenario

SOURCE = ("source",)
SINK = ("sink",)
DEFAULT_CLIQUE_CAP = 60


@dataclass
class LineGraph:
    eu: int
    model: BeamModel
    arcs: dict[tuple, dict[tuple, float]]
    order: list[tuple]  # topological, SOURCE first and SINK last

    def weight(self, vertices: Sequence[tuple]) -> float:
        return sum(self.arcs[a][b] for a, b in zip(vertices[:-1], vertices[1:]))


def _adds_irs(v: tuple, n_irs: int) -> int:
    # a vertex (i, j) means the signal reaches j; count it if j is an IRS
    return 1 if len(v) == 2 and 1 <= v[1] <= n_irs else 0


def build_line_graph(model: BeamModel, eu: int) -> LineGraph:
    """Line graph of the LoS graph restricted to paths ending at EU node ``eu``."""
    graph = model.graph
    J = graph.n_irs
    arcs: dict[tuple, dict[tuple, float]] = {SOURCE: {}}

    def add(a, b, gain):
        arcs.setdefault(a, {})
        arcs.setdefault(b, {})
        if gain > 0.0:  # zero-gain hops cannot carry power
            arcs[a][b] = -math.log(gain)

    for j in graph.succ.get(BS, ()):
        if 1 <= j <= J:
            add(SOURCE, (BS, j), model.link_gain(BS, j) * model.bs_beam(j)[1].value)
    for (i, j) in sorted(graph.edges):
        if not 1 <= j <= J:
            continue
        for r in graph.succ.get(j, ()):
            if r == eu or 1 <= r <= J:
                add((i, j), (j, r), model.link_gain(j, r) * model.irs_beam(i, j, r)[1].value)
        if graph.has_edge(j, eu):
            arcs.setdefault((j, eu), {})[SINK] = 0.0
    arcs.setdefault(SINK, {})

    indeg = {v: 0 for v in arcs}
    for a in arcs:
        for b in arcs[a]:
            indeg[b] += 1
    ready = [v for v, d in indeg.items() if d == 0]
    order = []
    while ready:
        ready.sort(key=repr)
        v = ready.pop(0)
        order.append(v)
        for b in arcs[v]:
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    if len(order) != len(arcs):
        raise InvalidArgumentError("line graph is not acyclic")
    return LineGraph(eu, model, arcs, order)


def _shortest(lg: LineGraph, start: tuple, budget: int, banned_v: set, banned_a: set):
    """Cheapest ``start -> SINK`` route entering at most ``budget`` more IRSs."""
    J = lg.model.graph.n_irs
    inf = math.inf
    # cost[v][b]: cheapest v -> SINK with at most b further IRS vertices
    cost: dict[tuple, list[float]] = {}
    nxt: dict[tuple, list] = {}
    pos = lg.order.index(start)
    for v in reversed(lg.order[pos:]):
        if v == SINK:
            cost[v] = [0.0] * (budget + 1)
            nxt[v] = [None] * (budget + 1)
            continue
        cv = [inf] * (budget + 1)
        nv = [None] * (budget + 1)
        if v not in banned_v or v == start:
            for w, wt in lg.arcs[v].items():
                if w in banned_v or (v, w) in banned_a or w not in cost:
                    continue
                c = _adds_irs(w, J)
                for b in range(c, budget + 1):
                    total = wt + cost[w][b - c]
                    if total < cv[b]:
                        cv[b], nv[b] = total, w
        cost[v], nxt[v] = cv, nv
    if budget < 0 or cost[start][budget] == inf:
        return None
    route, v, b = [start], start, budget
    while v != SINK:
        w = nxt[v][b]
        b -= _adds_irs(w, J)
        route.append(w)
        v = w
    return route


def _irs_sequence(vertices: Sequence[tuple], n_irs: int) -> tuple[int, ...]:
    return tuple(v[1] for v in vertices if len(v) == 2 and 1 <= v[1] <= n_irs)


def top_u_paths(lg: LineGraph, U: int, max_hops: int | None = None) -> list[ReflectionPath]:
    """The ``U`` highest-gain paths to ``lg.eu`` (fewer if fewer exist), best first.

    Equal-gain paths are ordered lexicographically by IRS sequence.
    """
    if U < 1:
        raise InvalidArgumentError("U must be >= 1")
    J = lg.model.graph.n_irs
    hops = J if max_hops is None else min(int(max_hops), J)
    first = _shortest(lg, SOURCE, hops, set(), set())
    if first is None:
        return []
    found = [first]
    seen = {tuple(first)}
    heap: list = []
    while len(found) < U:
        prev = found[-1]
        for idx in range(len(prev) - 1):
            root = prev[: idx + 1]
            spur = root[-1]
            banned_a = {(p[idx], p[idx + 1]) for p in found if p[: idx + 1] == root}
            banned_v = set(root[:-1])
            budget = hops - sum(_adds_irs(v, J) for v in root)
            tail = _shortest(lg, spur, budget, banned_v, banned_a)
            if tail is None:
                continue
            cand = root[:-1] + tail
            key = tuple(cand)
            if key in seen:
                continue
            seen.add(key)
            heapq.heappush(heap, (lg.weight(cand), _irs_sequence(cand, J), cand))
        if not heap:
            break
        found.append(heapq.heappop(heap)[2])
    model = lg.model
    paths = [ReflectionPath(lg.eu, _irs_sequence(p, J)) for p in found]
    gains = {p: model.path_gain(p) for p in paths}
    return sorted(paths, key=lambda p: (-gains[p], p.irs))


@dataclass(frozen=True)
class Candidate:
    eu: int  # 1-based EU index
    path: ReflectionPath
    gain: float


def candidate_paths(model: BeamModel, k: int, U: int,
                    max_hops: int | None = None) -> list[Candidate]:
    """Top-``U`` candidates of EU ``k`` with their gains."""
    scn = model.scn
    hops = scn.max_hops if max_hops is None else max_hops
    lg = build_line_graph(model, scn.eu_node(k))
    return [Candidate(k, p, model.path_gain(p)) for p in top_u_paths(lg, U, hops)]


@dataclass(frozen=True)
class PathGraph:
    """Compatibility graph: vertices are candidates, edges join IRS-disjoint paths."""

    vertices: tuple[Candidate, ...]
    adj: tuple[int, ...]  # neighbour bitmasks

    def __len__(self) -> int:
        return len(self.vertices)

    def adjacent(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    @property
    def edges(self) -> list[tuple[int, int]]:
        n = len(self.vertices)
        return [(u, v) for u in range(n) for v in range(u + 1, n) if self.adjacent(u, v)]


def build_path_graph(candidates: Iterable[Candidate]) -> PathGraph:
    verts = tuple(candidates)
    sets = [frozenset(c.path.irs) for c in verts]
    adj = []
    for u, su in enumerate(sets):
        mask = 0
        for v, sv in enumerate(sets):
            if u != v and not su & sv:
                mask |= 1 << v
        adj.append(mask)
    return PathGraph(verts, tuple(adj))


@dataclass(frozen=True, order=True)
class Clique:
    members: tuple[int, ...]

    def candidates(self, pg: PathGraph, k: int | None = None) -> list[Candidate]:
        """Member candidates, optionally only those of EU ``k``."""
        return [pg.vertices[v] for v in self.members if k is None or pg.vertices[v].eu == k]

    def gain(self, pg: PathGraph, k: int) -> float:
        """Sum of candidate gains of EU ``k`` in this clique (0 if none)."""
        return sum(c.gain for c in self.candidates(pg, k))


def maximal_cliques(pg: PathGraph, cap: int = DEFAULT_CLIQUE_CAP,
                    backend: str | None = None) -> list[Clique]:
    """All maximal cliques of ``pg`` in lexicographic order of sorted members.

    Raises ``ResourceLimitError`` when the graph has more than ``cap`` vertices.
    """
    n = len(pg)
    if n > cap:
        raise ResourceLimitError(
            f"path graph has {n} vertices, above the clique cap of {cap}; "
            "reduce the number of candidate paths per EU (U)")
    masks = _kernels.maximal_clique_masks(list(pg.adj), backend)
    cliques = [Clique(tuple(v for v in range(n) if m >> v & 1)) for m in masks]
    cliques.sort()
    return cliques


# --------------------------------------------------------------------------
# DOT export

def los_graph_dot(graph: LoSGraph, scn: Scenario | None = None) -> str:
    J = graph.n_irs

    def label(n: int) -> str:
        if n == BS:
            return "BS"
        return f"IRS{n}" if n <= J else f"EU{n - J}"

    lines = ["digraph los {", "  rankdir=LR;"]
    nodes = {BS} | {n for e in graph.edges for n in e}
    for n in sorted(nodes):
        shape = "box" if n == BS else ("ellipse" if n <= J else "doublecircle")
        lines.append(f'  n{n} [label="{label(n)}", shape={shape}];')
    for i, j in sorted(graph.edges):
        extra = f' [label="{graph.distance[(i, j)]:.2f} m"]' if scn is not None else ""
        lines.append(f"  n{i} -> n{j}{extra};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def path_graph_dot(pg: PathGraph) -> str:
    lines = ["graph paths {"]
    for v, c in enumerate(pg.vertices):
        seq = "-".join(map(str, c.path.irs))
        lines.append(f'  v{v} [label="EU{c.eu}: {seq}\\nH={c.gain:.3e}"];')
    for u, v in pg.edges:
        lines.append(f"  v{u} -- v{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
