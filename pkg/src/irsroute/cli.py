"""``irsroute`` command line: solve routing schemes on a scenario and sweep parameters.

Exit status is 0 on success (a zero-power result is still a success), 2 for
invalid input and 3 when a combinatorial cap is exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import __version__
from .allocator import SCHEMES, check_plan, solve
from .beamforming import MODES, BeamModel
from .errors import InvalidArgumentError, ResourceLimitError, ValidationError
from .phase_randomizer import monte_carlo_average_power
from .results import ResultRecord, plan_summary, routes_csv, routes_dot, write_results
from .scenario import build_los_graph, default_scenario_path, load_scenario

SWEEPS = ("none", "eu-count", "elements-per-dimension", "candidates")
DEFAULT_OUT = "irsroute-out"
OUT_ENV = "IRSROUTE_OUT"
EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE = 0, 2, 3


@dataclass
class RunConfig:
    scenario: Path
    schemes: tuple[str, ...] = ("dynamic", "static", "equal-time")
    mode: str = "codebook"
    U: int | None = None
    max_hops: int | None = None
    draws: int = 0
    seed: int | None = None
    sweep: str = "none"
    values: tuple[int, ...] = ()
    out: Path = Path(DEFAULT_OUT)
    jobs: int = 1
    timing: bool = False
    routes: bool = True

    def validate(self) -> None:
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValidationError(f"unknown scheme {s!r}; choose from {SCHEMES}", "--scheme")
        if not self.schemes:
            raise ValidationError("at least one scheme is required", "--scheme")
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}", "--mode")
        if self.sweep not in SWEEPS:
            raise ValidationError(f"unknown sweep {self.sweep!r}", "--sweep")
        if self.U is not None and self.U < 1:
            raise ValidationError("must be >= 1", "--u")
        if self.max_hops is not None and self.max_hops < 1:
            raise ValidationError("must be >= 1", "--max-hops")
        if self.draws < 0:
            raise ValidationError("must be >= 0", "--draws")
        if self.draws > 0 and self.seed is None:
            raise ValidationError("a seed is required when Monte-Carlo draws are requested",
                                  "--seed")
        if self.values and self.sweep == "none":
            raise ValidationError("values given without a sweep axis", "--values")
        if self.jobs < 1:
            raise ValidationError("must be >= 1", "--jobs")

    def echo(self) -> dict:
        data = Path(self.scenario).read_bytes()
        return {
            "scenario": str(self.scenario), "scenario_sha256": hashlib.sha256(data).hexdigest(),
            "schemes": list(self.schemes), "mode": self.mode, "U": self.U,
            "max_hops": self.max_hops, "draws": self.draws, "seed": self.seed,
            "sweep": self.sweep, "version": __version__,
        }


def _grid(config: RunConfig, K: int) -> list[int | None]:
    if config.sweep == "none":
        return [None]
    if config.values:
        return list(config.values)
    if config.sweep == "eu-count":
        return list(range(1, K + 1))
    if config.sweep == "elements-per-dimension":
        return [12, 16, 20, 24]
    return [1, 2, 4, 8]


def _apply(scn, sweep: str, value: int | None):
    if sweep == "eu-count":
        return scn.with_eus(value)
    if sweep == "elements-per-dimension":
        if value < 1:
            raise ValidationError("must be >= 1", "--values")
        return scn.with_irs_elements(value, value)
    if sweep == "candidates":
        return scn.with_limits(candidates_per_eu=value)
    return scn


def run_point(config: RunConfig, index: int, value: int | None) -> tuple[ResultRecord, dict]:
    """Solve every requested scheme at one grid point."""
    base = load_scenario(config.scenario)
    scn = _apply(base, config.sweep, value)
    if config.U is not None and config.sweep != "candidates":
        scn = scn.with_limits(candidates_per_eu=config.U)
    if config.max_hops is not None:
        scn = scn.with_limits(max_hops=config.max_hops)
    graph = build_los_graph(scn)
    model = BeamModel(scn, graph, config.mode)
    schemes, plans, timing, notes = {}, {}, {}, []
    for name in config.schemes:
        t0 = time.perf_counter()
        plan = solve(name, scn, graph, model=model)
        timing[name] = time.perf_counter() - t0
        check_plan(plan)
        plans[name] = plan
        schemes[name] = plan_summary(plan, scn)
    mc = None
    if config.draws > 0:
        mc = {}
        for name, plan in plans.items():
            if name == "subsurface":
                notes.append("Monte-Carlo skipped for the subsurface scheme")
                continue
            per_eu = {}
            for k in range(1, scn.K + 1):
                if not plan.paths_of(k):
                    continue
                r = monte_carlo_average_power(scn, graph, plan, k, config.draws, config.seed,
                                              model=model)
                per_eu[str(k)] = {"mean_w": r.mean, "stderr_w": r.stderr, "e_max_w": r.e_max,
                                  "e_av_w": r.e_av, "designed_w": r.designed,
                                  "interference_paths": len(r.interference)}
            mc[name] = per_eu
    cfg = config.echo()
    cfg.update({"U": scn.candidates_per_eu, "max_hops": scn.max_hops, "K": scn.K,
                "J": scn.J, "m1": scn.irs[0].array.m1, "m2": scn.irs[0].array.m2})
    rec = ResultRecord(index, config.sweep, value, cfg, schemes, notes, mc,
                       {k: round(v, 6) for k, v in timing.items()} if config.timing else None)
    return rec, plans


def _run_point_records(args):
    config, index, value = args
    rec, plans = run_point(config, index, value)
    routes = {}
    if config.routes:
        scn = _apply(load_scenario(config.scenario), config.sweep, value)
        routes = {name: (routes_dot(p, scn), routes_csv(p, scn)) for name, p in plans.items()}
    return rec, routes


def run(config: RunConfig) -> list[ResultRecord]:
    """Run all grid points, write outputs and return the records in grid order."""
    config.validate()
    scn = load_scenario(config.scenario)
    grid = _grid(config, scn.K)
    work = [(config, i, v) for i, v in enumerate(grid)]
    if config.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as ex:
            done = list(ex.map(_run_point_records, work))  # map keeps grid order
    else:
        done = [_run_point_records(w) for w in work]
    out = Path(config.out)
    records = [rec for rec, _ in done]
    write_results(records, out)
    for index, (_, routes) in enumerate(done):
        for name, (dot, table) in routes.items():
            stem = out / "routes" / f"{index:03d}_{name}"
            stem.parent.mkdir(parents=True, exist_ok=True)
            stem.with_suffix(".dot").write_text(dot)
            stem.with_suffix(".csv").write_text(table)
    return records


def _int_list(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {part!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty value list")
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="irsroute",
        description="Multi-IRS beam routing and max-min power allocation for wireless power "
                    "transfer.")
    p.add_argument("scenario", nargs="?", type=Path, default=None,
                   help="scenario YAML file (default: the shipped 13-IRS/5-EU layout)")
    p.add_argument("--scheme", action="append", choices=SCHEMES, dest="schemes",
                   help="scheme to solve; repeatable (default: dynamic, static, equal-time)")
    p.add_argument("--mode", choices=MODES, default="codebook")
    p.add_argument("--u", type=int, default=None, help="candidate paths per EU")
    p.add_argument("--max-hops", type=int, default=None)
    p.add_argument("--draws", type=int, default=0, help="Monte-Carlo draws (needs --seed)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sweep", choices=SWEEPS, default="none")
    p.add_argument("--values", type=_int_list, default=(),
                   help="comma-separated sweep values")
    p.add_argument("--out", type=Path, default=None,
                   help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--timing", action="store_true", help="record solve times in results")
    p.add_argument("--no-routes", action="store_true", help="skip DOT/CSV route exports")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    out = ns.out if ns.out is not None else Path(os.environ.get(OUT_ENV, DEFAULT_OUT))
    return RunConfig(
        scenario=ns.scenario if ns.scenario is not None else default_scenario_path(),
        schemes=tuple(dict.fromkeys(ns.schemes)) if ns.schemes else RunConfig.schemes,
        mode=ns.mode, U=ns.u, max_hops=ns.max_hops, draws=ns.draws, seed=ns.seed,
        sweep=ns.sweep, values=ns.values, out=out, jobs=ns.jobs, timing=ns.timing,
        routes=not ns.no_routes,
    )


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        config = config_from_args(ns)
        records = run(config)
    except ResourceLimitError as exc:
        print(f"irsroute: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValidationError, InvalidArgumentError, OSError) as exc:
        print(f"irsroute: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for r in records:
        tag = "" if r.sweep == "none" else f"[{r.sweep}={r.sweep_value}] "
        parts = []
        for name, s in r.schemes.items():
            dbm = s["objective_dbm"]
            parts.append(f"{name}={'-inf' if dbm is None else f'{dbm:.2f}'} dBm")
        print(tag + ", ".join(parts))
    print(f"wrote {Path(config.out) / 'results.jsonl'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
