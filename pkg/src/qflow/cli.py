"""Command-line front end. Every subcommand writes a CSV table and a JSON sidecar.

Exit codes: 0 on success, 2 for invalid input, 3 when a numerical method
fails to converge.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DomainError
from .potentials import Cosine, PowerLaw, Quadratic, Sum, spec_from_dict

SCHEMA_VERSION = 1
FLOAT_FMT = "%.12e"


@dataclass
class RunReport:
    command: list
    config_hash: str
    status: str = "ok"
    files: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise DomainError(f"{self.prog}: {message}")


def parse_log_range(text: str, per_decade: int = 1) -> np.ndarray:
    """'1e0:1e-6' -> decades from the first to the second value."""
    from .boflow import decade_grid

    parts = text.split(":")
    if len(parts) != 2:
        raise DomainError(f"expected start:stop, got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
    except ValueError:
        raise DomainError(f"malformed range {text!r}") from None
    if a <= 0 or b <= 0:
        raise DomainError(f"range {text!r} must be positive")
    return decade_grid(a, b, per_decade)


def parse_lin_range(text: str) -> np.ndarray:
    """'-6.28:6.28:33' -> linspace."""
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError(f"expected lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise DomainError(f"malformed range {text!r}") from None
    if n < 2 or not hi > lo:
        raise DomainError(f"range {text!r} needs hi > lo and n >= 2")
    return np.linspace(lo, hi, n)


def load_json(text: str) -> dict:
    """JSON given inline or as a path to a file."""
    p = Path(text)
    src = p.read_text() if not text.lstrip().startswith(("{", "[")) and p.is_file() else text
    try:
        return json.loads(src)
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid JSON: {exc}") from None


def load_spec(text: str):
    return spec_from_dict(load_json(text))


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def config_hash(args: argparse.Namespace) -> str:
    """sha256 of the canonical arguments, with input files hashed by content."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "jobs", "dry_run", "func")}
    for key in ("netlist",):
        if key in cfg and cfg[key] is not None and Path(cfg[key]).is_file():
            cfg[key] = hashlib.sha256(Path(cfg[key]).read_bytes()).hexdigest()
    blob = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class Output:
    """Collects tables for one run and writes them with the sidecar."""

    def __init__(self, report: RunReport, out: Path, stem: str):
        self.report = report
        self.out = out
        self.stem = stem

    def table(self, name, columns, rows):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f"{self.stem}{'_' + name if name else ''}.csv"
        write_csv(path, columns, rows)
        self.report.files.append(str(path))
        self.report.columns[path.name] = list(columns)

    def sidecar(self):
        path = self.out / f"{self.stem}.json"
        self.report.files.append(str(path))
        meta = {"schema_version": SCHEMA_VERSION, **asdict(self.report)}
        path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")


# subcommands: each takes (args, out) and returns a summary dict, or None on dry run


def cmd_reduce(args, out):
    from .diracberg import reduce
    from .lagrangian import assemble, legendre_regular, regularize
    from .netlist import load_netlist

    net = load_netlist(args.netlist)
    lag = assemble(net)
    if args.dry_run:
        return None
    rh = reduce(lag)
    rows = [("n", 0, rh.n), ("l", 0, rh.l), ("j", 0, rh.j), ("dof", 0, rh.dof),
            ("max_branches", 0, rh.max_branches)]
    summary = {"branched": rh.branched, "dof": rh.dof, "max_branches": rh.max_branches}
    if rh.is_linear:
        M = rh.linear_form()
        if not np.any(lag.A):
            for i in range(rh.dof):
                rows.append(("L_eff", i, 1.0 / M[i, i]))
                rows.append(("C_eff", i, 1.0 / M[rh.dof + i, rh.dof + i]))
        w = rh.frequencies()
        rows += [("frequency", i, v) for i, v in enumerate(w)]
        if args.regularize:
            full = legendre_regular(regularize(lag, args.regularize)).frequencies()
            rows += [("frequency_regularized", i, v) for i, v in enumerate(full)]
        summary["frequencies"] = w
    out.table("", ["quantity", "index", "value"], rows)
    return summary


def _series_elements(net):
    from .netlist import Inductor, Junction

    linear, nonlinear = [], []
    for b in net.branches:
        if isinstance(b, Junction):
            nonlinear.append(Cosine(b.EJ))
        elif isinstance(b, Inductor):
            (linear if isinstance(b.spec, Quadratic) else nonlinear).append(b.spec)
    if len(linear) != 1 or len(nonlinear) != 1:
        raise DomainError("bo-sweep needs exactly one linear inductor and one nonlinear element")
    return linear[0].L, nonlinear[0]


def cmd_bo_sweep(args, out):
    from .boflow import flow_sweep
    from .netlist import load_netlist

    L, spec = _series_elements(load_netlist(args.netlist))
    cprimes = parse_log_range(args.cprime, args.per_decade)
    phi = parse_lin_range(args.phi)
    if args.dry_run:
        return None
    r = flow_sweep(L, spec, cprimes, phi, jobs=args.jobs)
    out.table("", ["cprime", "phi", "U_BO"],
              [(c, p, u) for c, row in zip(r.cprimes, r.U) for p, u in zip(r.phi, row)])
    names = list(r.distances)
    out.table("distances", ["cprime", *names], [(c, *(r.distances[n][i] for n in names))
                                                for i, c in enumerate(r.cprimes)])
    print(f"verdict: {r.verdict}")
    return {"verdict": r.verdict, "extrapolated": r.extrapolated, "decreasing": r.decreasing,
            "classification": r.classification.kind if r.classification else None, "L": L}


def cmd_classify(args, out):
    from .boflow import classify

    spec = load_spec(args.spec)
    if args.dry_run:
        return None
    c = classify(spec)
    out.table("", ["kind", "gamma", "Lfrak", "expected_verdict"],
              [(c.kind, c.gamma if c.gamma is not None else math.nan,
                c.Lfrak if c.Lfrak is not None else math.nan, c.expected_verdict or "none")])
    print(c.kind)
    return {"kind": c.kind, "reason": c.reason}


def cmd_kepler(args, out):
    from .diracberg import effective_potential_branches

    if args.L <= 0 or args.beta <= 0:
        raise DomainError("beta and L must be positive")
    if args.dry_run:
        return None
    br = effective_potential_branches(args.L, Cosine(args.beta / args.L), args.phi)
    out.table("", ["branch", "phi_c", "U_eff", "residual"], [(i, c, u, r) for i, (c, u, r) in enumerate(br)])
    print(f"{len(br)} branch{'es' if len(br) != 1 else ''}")
    return {"branches": len(br)}


def cmd_snail(args, out):
    from . import snail

    try:
        p = snail.SnailParams(**load_json(args.params))
    except TypeError as exc:
        raise DomainError(f"bad SNAIL parameters: {exc}") from None
    x1 = parse_lin_range(args.x1)
    if args.dry_run:
        return None
    if args.mode in ("cl", "ho"):
        r = snail.single_phase(p, x1)
        out.table("", ["x1", "U_cl", "U_ho", "valid"], list(zip(r.x1, r.U_cl, r.U_ho, r.valid)))
        return {"EJ2_renormalized": r.EJ2_renormalized, "harmonic_ok": r.harmonic_ok, "regime": p.regime}
    if args.mode == "charge":
        r = snail.small_cap_limit(p, x1)
        out.table("", ["x1", "U_BO", "deviation", "predicted_deviation"],
                  list(zip(r.x1, r.U_BO, r.deviation, r.predicted_deviation)))
        return {"sup_relative": r.sup_relative, "d1EC": r.d1EC, "parallel_EC": r.parallel_EC}
    t = snail.validate_2d(p, x1, full=args.full)
    out.table("", ["x1", "U_cl", "U_ho", "U_charge", "U_grid", "harmonic_better"],
              list(zip(t.x1, t.U_cl, t.U_ho, t.U_charge, t.U_grid, t.harmonic_better)))
    return {"charge_vs_grid": t.charge_vs_grid, "numerical_only": t.numerical_only,
            "E_2d": t.E_2d, "E_bo": t.E_bo, "regime": p.regime}


def cmd_gyrator(args, out):
    from . import nonrecip as nr

    spec = load_spec(args.spec) if args.spec else None
    if args.dry_run:
        return None
    if args.study == "cap":
        r = nr.gyrator_cap_reduce(spec or Cosine(1.0), args.C1, load_spec(args.shunt) if args.shunt else Quadratic(1.0),
                                  args.G, args.Q2)
        E = r.spectrum()
        out.table("", ["level", "energy"], list(enumerate(E)))
        return {"L_eff": r.L_eff, "Q2": args.Q2}
    if args.study == "ind":
        r = nr.gyrator_ind_reduce(spec or PowerLaw(1.0, 4.0), args.G)
        v = np.linspace(-2.0, 2.0, 41)
        out.table("", ["v", "kinetic"], list(zip(v, r.kinetic(v))))
        return {"exponent": r.exponent, "coefficient": r.coefficient, "C_eff": r.C_eff}
    if args.study == "flow":
        r = nr.gyrator_bo_flow(spec or Cosine(1.0), args.L1, args.C1, args.G, jobs=args.jobs)
        out.table("", ["c2", "inverse_capacitance", "frequency"], list(zip(r.c2s, r.inverse_capacitance, r.frequencies)))
        print(f"verdict: {r.verdict}")
        return {"verdict": r.verdict, "frequency_extrapolated": r.frequency_extrapolated,
                "expected_frequency": r.expected_frequency}
    if args.study == "mathieu":
        grid = nr.suggest_grid(args.G)
        if grid is None:
            raise DomainError(f"no commensurate grid found for G = {args.G}")
        am = nr.almost_mathieu_build(args.EJ1, args.EJ2, args.G, grid)
        E = am.spectrum(args.levels)
        out.table("", ["level", "energy"], list(enumerate(E)))
        return {"gkp": am.gkp, "grid_points": grid.n, "shift": am.shift}
    r = nr.transformer_reduce(args.G, args.G2, spec or Cosine(1.0), load_spec(args.shunt) if args.shunt else Cosine(1.0),
                              args.c, args.C1, args.C2)
    out.table("", ["level", "energy"], list(enumerate(r.levels)))
    return {"turns_ratio": r.n, "mass": r.mass, "linear": r.linear}


def cmd_pathological(args, out):
    from .boflow import pathological_study

    masses = parse_log_range(args.masses, args.per_decade)
    if args.dry_run:
        return None
    r = pathological_study(masses, jobs=args.jobs)
    ip = int(np.argmin(np.abs(r.x - 10.0)))
    out.table("", ["mass", "E0", "U_BO_probe"], list(zip(r.masses, r.E0, r.U[:, ip])))
    print(f"verdict: {r.flow.verdict}")
    return {"verdict": r.flow.verdict, "scaling_ratios": r.scaling_ratios,
            "fit_residual": r.fit_residual, "amplitude": r.amplitude}


def cmd_asymmetric(args, out):
    from .boflow import asymmetric_study

    cprimes = parse_log_range(args.cprime, args.per_decade)
    if args.dry_run:
        return None
    r = asymmetric_study(args.a, args.b, cprimes=cprimes, jobs=args.jobs)
    out.table("", ["cprime", "c1", "c2", "c1_pred", "phi_m", "dphi"],
              list(zip(r.cprimes, r.c1, r.c2, r.c1_pred, r.phi_m, r.dphi)))
    return {"c1_limit": r.c1_limit, "c1_extrapolated": r.c1_extrapolated,
            "dphi_increasing": r.dphi_increasing, "ratio_decreasing": r.ratio_decreasing}


def build_parser() -> argparse.ArgumentParser:
    from .boflow import default_jobs

    common = _Parser(add_help=False)
    common.add_argument("--out", default="qflow_out", help="output directory")
    common.add_argument("--dry-run", action="store_true", help="validate inputs only")
    common.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes (default $QFLOW_JOBS)")

    ap = _Parser(prog="qflow", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("reduce", parents=[common], help="constrained reduction of a netlist")
    s.add_argument("netlist")
    s.add_argument("--regularize", type=float, default=None, metavar="EPS",
                   help="also report frequencies with EPS capacitance added to bare nodes")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("bo-sweep", parents=[common], help="BO flow of a series L + nonlinear element")
    s.add_argument("netlist")
    s.add_argument("--cprime", default="1e0:1e-6")
    s.add_argument("--per-decade", type=int, default=1)
    s.add_argument("--phi", default="-6.28:6.28:33")
    s.set_defaults(func=cmd_bo_sweep)

    s = sub.add_parser("classify", parents=[common], help="growth class of a potential")
    s.add_argument("--spec", required=True, help="JSON text or file")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("kepler", parents=[common], help="constraint branches of a series L + JJ")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--L", type=float, default=1.0)
    s.set_defaults(func=cmd_kepler)

    s = sub.add_parser("snail", parents=[common], help="SNAIL single-phase approximations")
    s.add_argument("--params", required=True, help="JSON text or file with SnailParams fields")
    s.add_argument("--mode", choices=["cl", "ho", "charge", "2d"], default="ho")
    s.add_argument("--x1", default=f"{-math.pi * 0.9}:{math.pi * 0.9}:13")
    s.add_argument("--full", action="store_true", help="2d mode: also solve the full two-variable problem")
    s.set_defaults(func=cmd_snail)

    s = sub.add_parser("gyrator", parents=[common], help="gyrator reductions")
    s.add_argument("--study", choices=["cap", "ind", "flow", "mathieu", "transformer"], required=True)
    s.add_argument("--spec", default=None, help="JSON potential of the primary element")
    s.add_argument("--shunt", default=None, help="JSON potential of the shunt or second element")
    s.add_argument("--G", type=float, default=1.0)
    s.add_argument("--G2", type=float, default=2.0)
    s.add_argument("--C1", type=float, default=1.0)
    s.add_argument("--C2", type=float, default=1.0)
    s.add_argument("--L1", type=float, default=1.0)
    s.add_argument("--Q2", type=float, default=0.0)
    s.add_argument("--c", type=float, default=0.0)
    s.add_argument("--EJ1", type=float, default=1.0)
    s.add_argument("--EJ2", type=float, default=1.0)
    s.add_argument("--levels", type=int, default=8)
    s.set_defaults(func=cmd_gyrator)

    s = sub.add_parser("pathological", parents=[common], help="BO flow of the log-periodic potential")
    s.add_argument("--masses", default="1e-4:1e-20")
    s.add_argument("--per-decade", type=int, default=2)
    s.set_defaults(func=cmd_pathological)

    s = sub.add_parser("asymmetric", parents=[common], help="BO flow of the piecewise-linear potential")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--cprime", default="1e0:1e-8")
    s.add_argument("--per-decade", type=int, default=1)
    s.set_defaults(func=cmd_asymmetric)
    return ap


def run(argv=None):
    """Execute one subcommand; returns (exit code, RunReport or None)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    report = None
    try:
        args = build_parser().parse_args(argv)
        if args.jobs < 1:
            raise DomainError("--jobs must be at least 1")
        report = RunReport(["qflow", *argv], config_hash(args))
        out = Output(report, Path(args.out), args.command.replace("-", "_"))
        t0 = time.perf_counter()
        summary = args.func(args, out)
        if summary is None:
            report.status = "dry-run"
            print("inputs ok")
            return 0, report
        report.timings["total_s"] = time.perf_counter() - t0
        report.summary = summary
        out.sidecar()
        return 0, report
    except SystemExit as exc:
        # --help exits 0; anything else from argparse is a usage error
        return (0 if not exc.code else 2), report
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if report:
            report.status = "domain-error"
        return 2, report
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        if report:
            report.status = "convergence-error"
        return 3, report
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, report


def main(argv=None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
