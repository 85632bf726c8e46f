"""Result records, flat CSV rows and route exports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .allocator import AllocationPlan
from .errors import InvalidArgumentError
from .scenario import Scenario, watts_to_dbm

RESULT_SCHEMA = "irsroute-result/1"
CSV_FIELDS = ("index", "sweep", "sweep_value", "scheme", "mode", "K", "U", "eu",
              "power_w", "power_dbm", "objective_w", "objective_dbm")
ROUTE_FIELDS = ("eu", "slot", "path", "gain", "alpha", "rho", "tau", "power_w")


def _path_str(irs) -> str:
    return "-".join(str(j) for j in irs)


def plan_summary(plan: AllocationPlan, scn: Scenario) -> dict[str, Any]:
    """JSON-ready description of ``plan``; keys are strings, values plain numbers."""
    J = scn.J
    slots = []
    for s in plan.slots:
        slots.append({
            "tau": s.tau,
            "rho": {str(k): v for k, v in sorted(s.rho.items())},
            "alpha": {str(j): v for j, v in sorted(s.alpha.items())},
            "paths": {str(k): [list(p.irs) for p in ps] for k, ps in sorted(s.paths.items())},
            "gains": {f"{p.eu - J}:{_path_str(p.irs)}": g
                      for p, g in sorted(s.gains.items(), key=lambda x: (x[0].eu, x[0].irs))},
        })
    out = {
        "scheme": plan.scheme,
        "mode": plan.mode,
        "objective_w": plan.objective,
        "objective_dbm": watts_to_dbm(plan.objective),
        "powers": [{"eu": k + 1, "watts": p, "dbm": watts_to_dbm(p)}
                   for k, p in enumerate(plan.powers)],
        "slots": slots,
        "unreachable": list(plan.unreachable),
        "notes": list(plan.notes),
    }
    if plan.split is not None:
        out["split"] = {str(j): list(mu) for j, mu in sorted(plan.split.items())}
    if plan.epsilon is not None:
        out["epsilon"] = list(plan.epsilon)
    return out


@dataclass
class ResultRecord:
    index: int
    sweep: str
    sweep_value: int | None
    config: dict[str, Any]
    schemes: dict[str, dict[str, Any]]
    notes: list[str] = field(default_factory=list)
    monte_carlo: dict[str, Any] | None = None
    timing: dict[str, float] | None = None
    schema: str = RESULT_SCHEMA

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        if d["monte_carlo"] is None:
            del d["monte_carlo"]
        if d["timing"] is None:
            del d["timing"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ResultRecord":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls.from_dict(json.loads(text))

    def csv_rows(self) -> list[dict[str, Any]]:
        rows = []
        for name, s in self.schemes.items():
            for p in s["powers"]:
                rows.append({
                    "index": self.index, "sweep": self.sweep,
                    "sweep_value": "" if self.sweep_value is None else self.sweep_value,
                    "scheme": name, "mode": s["mode"], "K": len(s["powers"]),
                    "U": self.config.get("U"), "eu": p["eu"],
                    "power_w": repr(p["watts"]), "power_dbm": _fmt(p["dbm"]),
                    "objective_w": repr(s["objective_w"]),
                    "objective_dbm": _fmt(s["objective_dbm"]),
                })
        return rows


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(x)


def write_results(records: list[ResultRecord], out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    jl = out_dir / "results.jsonl"
    with jl.open("w", newline="\n") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")
    cp = out_dir / "results.csv"
    with cp.open("w", newline="") as fh:
        w = csv.DictWriter(fh, CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerows(r.csv_rows())
    return jl, cp


def read_results(path: Path) -> list[ResultRecord]:
    return [ResultRecord.from_json(line) for line in Path(path).read_text().splitlines() if line]


# --------------------------------------------------------------------------
# route export

def routes_csv(plan: AllocationPlan | None, scn: Scenario | None = None) -> str:
    """One row per (slot, path): EU, slot, IRS sequence, gain and shares.

    ``alpha`` is the BS share of the path's first IRS, so per slot the column
    sums to 1 whenever the slot carries paths.
    """
    buf = io.StringIO()
    w = csv.DictWriter(buf, ROUTE_FIELDS, lineterminator="\n")
    w.writeheader()
    if plan is None:
        return buf.getvalue()
    for t, s in enumerate(plan.slots):
        # a first IRS may feed several paths only across EUs (subsurfaces); split evenly
        feeds: dict[int, int] = {}
        for ps in s.paths.values():
            for p in ps:
                feeds[p.irs[0]] = feeds.get(p.irs[0], 0) + 1
        for k, ps in sorted(s.paths.items()):
            for p in ps:
                w.writerow({
                    "eu": k, "slot": t, "path": _path_str(p.irs),
                    "gain": repr(s.gains.get(p, 0.0)),
                    "alpha": repr(s.alpha.get(p.irs[0], 0.0) / feeds[p.irs[0]]),
                    "rho": repr(s.rho.get(k, 0.0)), "tau": repr(s.tau),
                    "power_w": repr(plan.powers[k - 1]),
                })
    return buf.getvalue()


_COLORS = ("red", "blue", "darkgreen", "orange", "purple", "brown", "magenta", "cyan")


def routes_dot(plan: AllocationPlan | None, scn: Scenario) -> str:
    """DOT digraph with one cluster per slot and the selected paths colored by EU."""
    J = scn.J

    def label(n: int) -> str:
        if n == 0:
            return "BS"
        return f"IRS{n}" if n <= J else f"EU{n - J}"

    lines = ["digraph routes {", "  rankdir=LR;"]
    if plan is not None:
        for t, s in enumerate(plan.slots):
            if not s.paths:
                continue
            lines.append(f"  subgraph cluster_slot{t} {{")
            lines.append(f'    label="slot {t} (tau={s.tau:.4g})";')
            nodes = sorted({n for ps in s.paths.values() for p in ps for n in p.nodes})
            for n in nodes:
                lines.append(f'    s{t}_n{n} [label="{label(n)}"];')
            for k, ps in sorted(s.paths.items()):
                color = _COLORS[(k - 1) % len(_COLORS)]
                for p in ps:
                    for a, b in p.links:
                        lines.append(f'    s{t}_n{a} -> s{t}_n{b} [color={color}, label="EU{k}"];')
            lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_routes(plan: AllocationPlan | None, scn: Scenario, fmt: str, path: Path) -> Path:
    fmt = fmt.lower()
    if fmt == "csv":
        text = routes_csv(plan, scn)
    elif fmt == "dot":
        text = routes_dot(plan, scn)
    else:
        raise InvalidArgumentError(f"unknown route format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
