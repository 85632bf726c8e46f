"""Deployment descriptions, scenario files and the line-of-sight graph.

Node ids follow the usual labelling: ``0`` is the BS, ``1..J`` are the IRSs
and ``J + k`` is energy user ``k`` (``k = 1..K``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
import yaml

from .errors import ValidationError
from .geometry import ArraySpec, default_x_axis

SPEED_OF_LIGHT = 299_792_458.0
SCHEMA = "irsroute-scenario/1"

BS = 0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts: float) -> float | None:
    """dBm value of ``watts``; ``None`` for zero power."""
    if watts <= 0.0:
        return None
    return 10.0 * math.log10(watts / 1e-3)


@dataclass(frozen=True)
class BaseStation:
    position: np.ndarray
    array: ArraySpec
    codebook_size: int
    tx_power: float  # watts


@dataclass(frozen=True)
class Irs:
    position: np.ndarray
    array: ArraySpec
    codebook_h: int
    codebook_v: int


@dataclass(frozen=True)
class EnergyUser:
    position: np.ndarray


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box obstacle."""

    lo: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True)
class Scenario:
    bs: BaseStation
    irs: tuple[Irs, ...]
    eus: tuple[EnergyUser, ...]
    carrier_hz: float
    beta_db: float
    obstacles: tuple[Box, ...] = ()
    explicit_los: frozenset[frozenset[int]] | None = None
    max_hops: int = 4
    candidates_per_eu: int = 8
    name: str = ""
    notes: str = ""

    @property
    def J(self) -> int:
        return len(self.irs)

    @property
    def K(self) -> int:
        return len(self.eus)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def beta(self) -> float:
        """Linear LoS path gain at 1 m."""
        return 10.0 ** (self.beta_db / 10.0)

    @property
    def tx_power(self) -> float:
        return self.bs.tx_power

    def eu_node(self, k: int) -> int:
        """Node id of EU ``k`` (1-based)."""
        if not 1 <= k <= self.K:
            raise ValidationError(f"EU index {k} out of range 1..{self.K}")
        return self.J + k

    def eu_index(self, node: int) -> int:
        return node - self.J

    def is_irs(self, node: int) -> bool:
        return 1 <= node <= self.J

    def is_eu(self, node: int) -> bool:
        return self.J < node <= self.J + self.K

    def position(self, node: int) -> np.ndarray:
        if node == BS:
            return self.bs.position
        if self.is_irs(node):
            return self.irs[node - 1].position
        if self.is_eu(node):
            return self.eus[node - self.J - 1].position
        raise ValidationError(f"node id {node} out of range 0..{self.J + self.K}")

    def distance(self, a: int, b: int) -> float:
        return float(np.linalg.norm(self.position(a) - self.position(b)))

    def irs_array(self, node: int) -> ArraySpec:
        return self.irs[node - 1].array

    @property
    def nodes(self) -> range:
        return range(self.J + self.K + 1)

    def with_eus(self, count: int) -> "Scenario":
        """Copy keeping only the first ``count`` EUs."""
        if not 1 <= count <= self.K:
            raise ValidationError(f"EU count must be in 1..{self.K}, got {count}")
        los = self.explicit_los
        if los is not None:
            # EU node ids are unchanged for the retained prefix
            last = self.J + count
            los = frozenset(p for p in los if max(p) <= last)
        return replace(self, eus=self.eus[:count], explicit_los=los)

    def with_irs_elements(self, m1: int, m2: int) -> "Scenario":
        """Copy with every IRS resized to ``m1 x m2`` elements."""
        irs = tuple(replace(s, array=s.array.with_size(m1, m2)) for s in self.irs)
        return replace(self, irs=irs)

    def with_limits(self, *, max_hops: int | None = None,
                    candidates_per_eu: int | None = None) -> "Scenario":
        out = replace(
            self,
            max_hops=self.max_hops if max_hops is None else int(max_hops),
            candidates_per_eu=self.candidates_per_eu if candidates_per_eu is None
            else int(candidates_per_eu),
        )
        _check_limits(out.max_hops, out.candidates_per_eu)
        return out


def _check_limits(max_hops: int, u: int) -> None:
    if max_hops < 1:
        raise ValidationError("must be >= 1", "limits.max_hops")
    if u < 1:
        raise ValidationError("must be >= 1", "limits.candidates_per_eu")


# --------------------------------------------------------------------------
# document parsing

def _get(doc: Mapping, key: str, path: str, default: Any = ...):
    if not isinstance(doc, Mapping):
        raise ValidationError("expected a mapping", path)
    if key not in doc:
        if default is ...:
            raise ValidationError("missing required field", f"{path}.{key}" if path else key)
        return default
    return doc[key]


_FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)[eE][+-]?\d+")


def _number(value: Any, path: str) -> float:
    # YAML 1.1 loaders read exponent literals without a sign (5.0e9) as strings
    if isinstance(value, str) and _FLOAT_RE.fullmatch(value.strip()):
        value = float(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"expected a number, got {value!r}", path)
    if not math.isfinite(value):
        raise ValidationError("must be finite", path)
    return float(value)


def _integer(value: Any, path: str, minimum: int = 1) -> int:
    # no silent coercion: 4.0 or "4" are rejected
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"expected an integer, got {value!r}", path)
    if value < minimum:
        raise ValidationError(f"must be >= {minimum}", path)
    return value


def _vector(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ValidationError("expected a list of 3 numbers", path)
    return np.array([_number(c, f"{path}[{i}]") for i, c in enumerate(value)])


def _unit(value: Any, path: str) -> np.ndarray:
    v = _vector(value, path)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValidationError("must be a nonzero vector", path)
    return v / n


def _check_keys(doc: Mapping, allowed: Iterable[str], path: str) -> None:
    extra = set(doc) - set(allowed)
    if extra:
        where = f"{path}.{sorted(extra)[0]}" if path else sorted(extra)[0]
        raise ValidationError("unknown field", where)


def scenario_from_dict(doc: Mapping) -> Scenario:
    """Build and validate a :class:`Scenario` from a parsed document."""
    if not isinstance(doc, Mapping):
        raise ValidationError("scenario document must be a mapping")
    _check_keys(doc, {"schema", "name", "notes", "rf", "bs", "irs_defaults", "irs", "eus",
                      "obstacles", "explicit_los", "limits"}, "")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ValidationError(f"unsupported schema {schema!r}, expected {SCHEMA!r}", "schema")

    rf = _get(doc, "rf", "")
    _check_keys(rf, {"carrier_hz", "beta_db"}, "rf")
    carrier = _number(_get(rf, "carrier_hz", "rf"), "rf.carrier_hz")
    if carrier <= 0:
        raise ValidationError("must be > 0", "rf.carrier_hz")
    beta_db = _number(_get(rf, "beta_db", "rf"), "rf.beta_db")
    wavelength = SPEED_OF_LIGHT / carrier

    b = _get(doc, "bs", "")
    _check_keys(b, {"position", "antennas", "spacing_wavelengths", "axis", "codebook_size",
                    "tx_power_dbm"}, "bs")
    n_b = _integer(_get(b, "antennas", "bs"), "bs.antennas")
    bs_spacing = _number(_get(b, "spacing_wavelengths", "bs", 0.5), "bs.spacing_wavelengths")
    if bs_spacing <= 0:
        raise ValidationError("must be > 0", "bs.spacing_wavelengths")
    axis = _unit(_get(b, "axis", "bs", [1.0, 0.0, 0.0]), "bs.axis")
    bs = BaseStation(
        position=_vector(_get(b, "position", "bs"), "bs.position"),
        array=ArraySpec.ula(n_b, bs_spacing * wavelength, axis),
        codebook_size=_integer(_get(b, "codebook_size", "bs", n_b), "bs.codebook_size"),
        tx_power=dbm_to_watts(_number(_get(b, "tx_power_dbm", "bs"), "bs.tx_power_dbm")),
    )

    defaults = doc.get("irs_defaults", {}) or {}
    irs_keys = {"position", "normal", "x_axis", "m1", "m2", "spacing_wavelengths",
                "codebook_h", "codebook_v"}
    _check_keys(defaults, irs_keys - {"position", "normal", "x_axis"}, "irs_defaults")
    irs_docs = _get(doc, "irs", "")
    if not isinstance(irs_docs, list) or not irs_docs:
        raise ValidationError("need at least one IRS", "irs")
    irs = []
    for idx, d in enumerate(irs_docs):
        p = f"irs[{idx}]"
        if not isinstance(d, Mapping):
            raise ValidationError("expected a mapping", p)
        _check_keys(d, irs_keys, p)
        merged = {**defaults, **d}
        normal = _unit(_get(merged, "normal", p), f"{p}.normal")
        if "x_axis" in merged:
            x_axis = _unit(merged["x_axis"], f"{p}.x_axis")
            if abs(float(np.dot(x_axis, normal))) > 1e-9:
                raise ValidationError("must be orthogonal to normal", f"{p}.x_axis")
            x_axis = x_axis - np.dot(x_axis, normal) * normal
            x_axis /= np.linalg.norm(x_axis)
        else:
            x_axis = default_x_axis(normal)
        m1 = _integer(_get(merged, "m1", p), f"{p}.m1")
        m2 = _integer(_get(merged, "m2", p), f"{p}.m2")
        spacing = _number(_get(merged, "spacing_wavelengths", p, 0.25), f"{p}.spacing_wavelengths")
        if spacing <= 0:
            raise ValidationError("must be > 0", f"{p}.spacing_wavelengths")
        irs.append(Irs(
            position=_vector(_get(merged, "position", p), f"{p}.position"),
            array=ArraySpec.ura(m1, m2, spacing * wavelength, normal, x_axis),
            codebook_h=_integer(_get(merged, "codebook_h", p), f"{p}.codebook_h"),
            codebook_v=_integer(_get(merged, "codebook_v", p), f"{p}.codebook_v"),
        ))

    eu_docs = _get(doc, "eus", "")
    if not isinstance(eu_docs, list) or not eu_docs:
        raise ValidationError("need at least one EU", "eus")
    eus = []
    for idx, d in enumerate(eu_docs):
        _check_keys(d if isinstance(d, Mapping) else {}, {"position"}, f"eus[{idx}]")
        eus.append(EnergyUser(_vector(_get(d, "position", f"eus[{idx}]"), f"eus[{idx}].position")))

    boxes = []
    for idx, d in enumerate(doc.get("obstacles", []) or []):
        p = f"obstacles[{idx}]"
        _check_keys(d if isinstance(d, Mapping) else {}, {"min", "max"}, p)
        lo = _vector(_get(d, "min", p), f"{p}.min")
        hi = _vector(_get(d, "max", p), f"{p}.max")
        if np.any(lo > hi):
            raise ValidationError("min must not exceed max", p)
        boxes.append(Box(lo, hi))

    n_nodes = 1 + len(irs) + len(eus)
    los = None
    if doc.get("explicit_los") is not None:
        pairs = set()
        for idx, pr in enumerate(doc["explicit_los"]):
            p = f"explicit_los[{idx}]"
            if not isinstance(pr, (list, tuple)) or len(pr) != 2:
                raise ValidationError("expected a pair of node ids", p)
            a = _integer(pr[0], f"{p}[0]", 0)
            c = _integer(pr[1], f"{p}[1]", 0)
            if a >= n_nodes or c >= n_nodes or a == c:
                raise ValidationError("invalid node id pair", p)
            pairs.add(frozenset((a, c)))
        los = frozenset(pairs)

    limits = doc.get("limits", {}) or {}
    _check_keys(limits, {"max_hops", "candidates_per_eu"}, "limits")
    max_hops = _integer(limits.get("max_hops", 4), "limits.max_hops")
    u = _integer(limits.get("candidates_per_eu", 8), "limits.candidates_per_eu")

    scn = Scenario(
        bs=bs, irs=tuple(irs), eus=tuple(eus), carrier_hz=carrier, beta_db=beta_db,
        obstacles=tuple(boxes), explicit_los=los, max_hops=max_hops, candidates_per_eu=u,
        name=str(doc.get("name", "")), notes=str(doc.get("notes", "")),
    )
    validate_scenario(scn)
    return scn


def validate_scenario(scn: Scenario) -> None:
    if scn.J < 1 or scn.K < 1:
        raise ValidationError("need J >= 1 and K >= 1")
    if scn.tx_power <= 0:
        raise ValidationError("must be > 0", "bs.tx_power_dbm")
    _check_limits(scn.max_hops, scn.candidates_per_eu)
    pos = np.array([scn.position(n) for n in scn.nodes])
    for a in range(len(pos)):
        for b in range(a + 1, len(pos)):
            if np.array_equal(pos[a], pos[b]):
                raise ValidationError(f"nodes {a} and {b} share the position {pos[a].tolist()}",
                                      "positions")


def load_scenario(source: str | Path | Mapping) -> Scenario:
    """Load a scenario from a YAML/JSON file path, a document string or a mapping."""
    if isinstance(source, Mapping):
        return scenario_from_dict(source)
    text: str
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and not source.lstrip().startswith("{")):
        path = Path(source)
        if not path.is_file():
            raise ValidationError(f"scenario file not found: {path}")
        text = path.read_text()
    else:
        text = str(source)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"malformed scenario document: {exc}") from exc
    return scenario_from_dict(doc)


def default_scenario_path() -> Path:
    return Path(__file__).with_name("data") / "default_13irs_5eu.yaml"


def default_scenario() -> Scenario:
    """The shipped 13-IRS / 5-EU reconstruction of the simulation layout."""
    return load_scenario(default_scenario_path())


# --------------------------------------------------------------------------
# line of sight

def segment_hits_box(p: np.ndarray, q: np.ndarray, box: Box) -> bool:
    """Slab test for the closed segment ``p``-``q`` against a closed box.

    Touching a face, edge or corner counts as a hit.
    """
    d = q - p
    t0, t1 = 0.0, 1.0
    for axis in range(3):
        if d[axis] == 0.0:
            if p[axis] < box.lo[axis] or p[axis] > box.hi[axis]:
                return False
            continue
        a = (box.lo[axis] - p[axis]) / d[axis]
        b = (box.hi[axis] - p[axis]) / d[axis]
        if a > b:
            a, b = b, a
        t0 = max(t0, a)
        t1 = min(t1, b)
        if t0 > t1:
            return False
    return True


def line_of_sight(scn: Scenario, a: int, b: int) -> bool:
    if a == b:
        raise ValidationError("line_of_sight needs two distinct nodes")
    if scn.explicit_los is not None:
        return frozenset((a, b)) in scn.explicit_los
    p, q = scn.position(a), scn.position(b)
    return not any(segment_hits_box(p, q, box) for box in scn.obstacles)


def in_half_space(scn: Scenario, irs_node: int, other: int) -> bool:
    """True iff ``other`` lies strictly in front of IRS ``irs_node``."""
    s = scn.irs[irs_node - 1]
    return float(np.dot(s.array.normal, scn.position(other) - s.position)) > 0.0


@dataclass(frozen=True)
class LoSGraph:
    """Directed graph of feasible reflection hops."""

    n_irs: int
    n_eu: int
    edges: frozenset[tuple[int, int]]
    distance: Mapping[tuple[int, int], float]
    succ: Mapping[int, tuple[int, ...]] = field(repr=False)
    pred: Mapping[int, tuple[int, ...]] = field(repr=False)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    @property
    def first_reflecting(self) -> tuple[int, ...]:
        """IRSs with a direct BS edge."""
        return self.succ.get(BS, ())

    def irs_topological_order(self) -> list[int]:
        indeg = {j: 0 for j in range(1, self.n_irs + 1)}
        for i, j in self.edges:
            if 1 <= i <= self.n_irs and 1 <= j <= self.n_irs:
                indeg[j] += 1
        ready = sorted(j for j, d in indeg.items() if d == 0)
        order = []
        while ready:
            j = ready.pop(0)
            order.append(j)
            for r in self.succ.get(j, ()):
                if r in indeg:
                    indeg[r] -= 1
                    if indeg[r] == 0:
                        ready.append(r)
                        ready.sort()
        if len(order) != self.n_irs:
            raise ValidationError("IRS subgraph contains a cycle")
        return order


def make_graph(n_irs: int, n_eu: int, edges: Iterable[tuple[int, int]],
               distance: Mapping[tuple[int, int], float] | None = None) -> LoSGraph:
    edges = frozenset((int(i), int(j)) for i, j in edges)
    succ: dict[int, list[int]] = {}
    pred: dict[int, list[int]] = {}
    for i, j in sorted(edges):
        succ.setdefault(i, []).append(j)
        pred.setdefault(j, []).append(i)
    dist = dict(distance) if distance is not None else {e: 1.0 for e in edges}
    return LoSGraph(n_irs, n_eu, edges, dist,
                    {k: tuple(v) for k, v in succ.items()},
                    {k: tuple(v) for k, v in pred.items()})


def build_los_graph(scn: Scenario) -> LoSGraph:
    """Apply the LoS, half-space and outward-distance rules to every node pair."""
    J = scn.J
    d0 = {n: scn.distance(BS, n) for n in range(1, J + 1)}
    edges = []
    for i in range(0, J + 1):  # edges leave the BS or an IRS
        for j in range(1, J + scn.K + 1):  # and enter an IRS or an EU
            if i == j or (i == BS and scn.is_eu(j)):
                continue
            if scn.is_irs(j) and not (d0[j] > (d0[i] if i != BS else 0.0)):
                continue
            if scn.is_irs(i) and not in_half_space(scn, i, j):
                continue
            if scn.is_irs(j) and not in_half_space(scn, j, i):
                continue
            if not line_of_sight(scn, i, j):
                continue
            edges.append((i, j))
    dist = {e: scn.distance(*e) for e in edges}
    return make_graph(J, scn.K, edges, dist)


def check_graph_invariants(graph: LoSGraph) -> None:
    """Raise ``ValidationError`` if ``graph`` breaks a structural invariant."""
    J = graph.n_irs
    for i, j in graph.edges:
        if i == j:
            raise ValidationError(f"self loop at {i}")
        if j == BS:
            raise ValidationError(f"edge {i}->{j} enters the BS")
        if i > J:
            raise ValidationError(f"edge {i}->{j} leaves an EU")
    graph.irs_topological_order()
