"""Regenerate src/irsroute/data/default_13irs_5eu.yaml.

Node positions are a qualitative layout (BS on the left, three IRS tiers, EUs
fanned out on the right, one EU close to the BS).  IRS normals are chosen to
maximize the smallest cosine toward any LoS neighbour, so every listed link
passes the half-space rule with margin.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import yaml
from scipy.optimize import minimize

BS = (0.0, 0.0, 3.0)
IRS = [
    (5.0, 8.0, 6.0), (6.0, 3.0, 6.0), (6.0, -3.0, 6.0), (5.0, -8.0, 6.0), (3.0, 0.0, 6.0),
    (12.0, 10.0, 2.0), (13.0, 3.0, 2.0), (13.0, -3.0, 2.0), (12.0, -10.0, 2.0),
    (20.0, 13.0, 6.0), (21.0, 5.0, 6.0), (21.0, -5.0, 6.0), (20.0, -13.0, 6.0),
]
EUS = [(27.0, 15.0, 1.0), (26.0, 8.0, 1.0), (10.0, 0.0, 1.0), (26.0, -8.0, 1.0), (27.0, -15.0, 1.0)]
J = len(IRS)


def eu(k: int) -> int:
    return J + k


LINKS = (
    [(0, j) for j in range(1, 6)]
    + [(1, 6), (1, 7), (2, 7), (5, 7), (5, 8), (3, 8), (4, 8), (4, 9)]
    + [(6, 10), (6, 11), (7, 10), (7, 11), (8, 12), (8, 13), (9, 12), (9, 13)]
    + [(10, eu(1)), (11, eu(1)), (10, eu(2)), (2, eu(3)), (3, eu(3)),
       (13, eu(4)), (12, eu(5)), (13, eu(5))]
)


def position(n: int) -> np.ndarray:
    if n == 0:
        return np.array(BS)
    if n <= J:
        return np.array(IRS[n - 1])
    return np.array(EUS[n - J - 1])


def max_margin_normal(dirs: np.ndarray) -> tuple[np.ndarray, float]:
    x0 = dirs.sum(axis=0)
    x0 /= np.linalg.norm(x0)
    # maximize t s.t. n . u_i >= t, |n| <= 1
    res = minimize(lambda x: -x[3], np.append(x0, (dirs @ x0).min()), method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda x: dirs @ x[:3] - x[3]},
                                {"type": "ineq", "fun": lambda x: 1.0 - x[:3] @ x[:3]}])
    n = res.x[:3] / np.linalg.norm(res.x[:3])
    return n, float((dirs @ n).min())


def main(out: Path) -> None:
    irs_docs = []
    for j in range(1, J + 1):
        nbrs = sorted({b for a, b in LINKS if a == j} | {a for a, b in LINKS if b == j})
        p = position(j)
        dirs = np.array([(position(m) - p) / np.linalg.norm(position(m) - p) for m in nbrs])
        n, margin = max_margin_normal(dirs)
        if margin < 0.05:
            raise SystemExit(f"IRS {j}: half-space margin {margin:.3f} too small")
        irs_docs.append({"position": list(map(float, p)),
                         "normal": [round(float(c), 4) for c in n]})
    doc = {
        "schema": "irsroute-scenario/1",
        "name": "default-13irs-5eu",
        "notes": ("Reconstructed layout with 13 IRSs and 5 EUs. Exact published coordinates "
                  "are unavailable, so positions, facing directions and LoS links are a "
                  "qualitative reconstruction: EUs 1/2 and 4/5 compete for shared IRSs and "
                  "EU 3 sits near the BS with two single-reflection links."),
        "rf": {"carrier_hz": 5.0e9, "beta_db": -46.0},
        "bs": {"position": list(BS), "antennas": 32, "spacing_wavelengths": 0.5,
               "axis": [0.0, 1.0, 0.0], "codebook_size": 32, "tx_power_dbm": 30.0},
        "irs_defaults": {"m1": 20, "m2": 20, "spacing_wavelengths": 0.25,
                         "codebook_h": 64, "codebook_v": 64},
        "irs": irs_docs,
        "eus": [{"position": list(e)} for e in EUS],
        "explicit_los": [list(link) for link in LINKS],
        "limits": {"max_hops": 4, "candidates_per_eu": 8},
    }
    text = ("# Generated by tools/make_default_scenario.py; edit that script, not this file.\n"
            + yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100))
    out.write_text(text)


if __name__ == "__main__":
    here = Path(__file__).resolve().parents[1]
    main(Path(sys.argv[1]) if len(sys.argv) > 1
         else here / "src" / "irsroute" / "data" / "default_13irs_5eu.yaml")
