"""Run every desk-scale experiment through the CLI into one output tree.

Usage: python3 scripts/reproduce.py [OUT_DIR] [--quick]

--quick skips the pathological sweep (a few minutes on one core).
"""
import math
import sys
import time
from pathlib import Path

from qflow.cli import main

ROOT = Path(__file__).resolve().parent.parent
NET = ROOT / "netlists"

RUNS = [
    ("reduce", ["reduce", str(NET / "fig1a.net")]),
    ("reduce_regularized", ["reduce", str(NET / "fig1a.net"), "--regularize", "1e-6"]),
    ("reduce_kepler", ["reduce", str(NET / "kepler.net")]),
    ("reduce_transformer", ["reduce", str(NET / "transformer.net")]),
    ("kepler", ["kepler", "--beta", "2", "--phi", "3.14159"]),
    ("flow_josephson", ["bo-sweep", str(NET / "jj_series.net")]),
    ("flow_powerlaw4", ["bo-sweep", str(NET / "powerlaw_series.net")]),
    ("classify", ["classify", "--spec", '{"kind": "powerlaw", "beta": 1, "gamma": 1.5}']),
    ("snail_2d", ["snail", "--mode", "2d", "--full", "--params",
                  '{"EJ1": 0.5, "EJ2": 1, "k2": 0.1, "EC": 0.001, "k1": 0.1, "Phi": 0.3}']),
    ("gyrator_flow_cosine", ["gyrator", "--study", "flow", "--spec", '{"kind": "cosine", "EJ": 1}']),
    ("gyrator_mathieu", ["gyrator", "--study", "mathieu", "--G", repr(1 / (4 * math.pi))]),
    ("gyrator_transformer", ["gyrator", "--study", "transformer", "--G", "1", "--G2", "2",
                             "--spec", '{"kind": "cosine", "EJ": 1}', "--shunt", '{"kind": "quadratic", "L": 2}']),
    ("asymmetric", ["asymmetric", "--a", "1", "--b", "1"]),
    ("pathological", ["pathological"]),
]


def run_all(out: Path, quick: bool = False) -> int:
    failures = 0
    for name, argv in RUNS:
        if quick and name == "pathological":
            continue
        t0 = time.perf_counter()
        code = main(argv + ["--out", str(out / name)])
        print(f"{name:24s} exit {code}  {time.perf_counter() - t0:7.1f} s", flush=True)
        failures += code != 0
    return failures


if __name__ == "__main__":
    args = [a for a in sys.argv[1:] if not a.startswith("--")]
    out = Path(args[0]) if args else ROOT / "results"
    sys.exit(1 if run_all(out, quick="--quick" in sys.argv) else 0)
