#!/usr/bin/env python3
"""
TRS-C Solver & Certifier - command line

Subcommands: solve, local, verify, generate, sample, example.
Exit codes are listed in config.EXIT_CODES and docs/CLI.md.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import logging
from pathlib import Path
import sys

import numpy as np
import pandas as pd

from config import DATA_DIR, EXIT_CODES, LOG_LEVEL, REPORTS_DIR, format_float, format_vector
from trsc.builder import CANNED_C, CANNED_H, build_psi, canned_example, psi_to_f0
from trsc.certify import CertificateKind, certify_local, reduced_hessian_at
from trsc.convexlib import (
    TrscInstance, TrslInstance, oracles_of, psi_general_sweep, psi_trsl, psi_trsl_d1,
)
from trsc.errors import BadSequence, InstanceFormatError, InvalidInstance, TrscError
from trsc.global_solver import check_instance_certificate, kkt_residuals, solve_global
from trsc.instance_io import load_candidate, load_instance, save_candidate, save_instance
from trsc.local import (
    CandidatePoint, Classification, NoLocalNonGlobal, enumerate_roots, materialize, precheck,
)
from trsc.spectral import decompose, phi, phi_d1

logger = logging.getLogger(__name__)


def _banner(title: str):
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def _require_trsl(inst) -> TrslInstance:
    if not isinstance(inst, TrslInstance):
        raise InvalidInstance("this command needs a linear-coupling (trsl) instance")
    return inst


# ===== solve =====

def _solve_one(path: Path) -> dict:
    """Solve one file; used by the batch runner, never raises"""
    row = {"file": path.name, "status": "ok", "mu": np.nan, "objective": np.nan,
           "hard_case": None, "certificate": None, "exit_code": EXIT_CODES["ok"], "error": ""}
    try:
        inst = _require_trsl(load_instance(path))
        sol = solve_global(inst)
        cert = check_instance_certificate(inst, sol.x, sol.y, [sol.mu])
        row.update(mu=sol.mu, objective=sol.objective, hard_case=sol.hard_case,
                   certificate=cert.status.value)
        if not cert.valid:
            row.update(status="no_certificate", exit_code=EXIT_CODES["no_certificate"])
    except InstanceFormatError as exc:
        row.update(status="parse_error", exit_code=EXIT_CODES["parse_error"], error=str(exc))
    except TrscError as exc:
        row.update(status="solver_error", exit_code=EXIT_CODES["solver_error"],
                   error=f"{type(exc).__name__}: {exc}")
    return row


def cmd_solve(args) -> int:
    if args.batch:
        files = sorted(Path(args.batch).glob("*.json"))
        logger.info(f"Solving {len(files)} instances from {args.batch} with {args.workers} workers")
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_solve_one, files))
        df = pd.DataFrame(rows)
        summary = Path(args.summary) if args.summary else REPORTS_DIR / "batch_summary.csv"
        summary.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(summary, index=False, float_format="%.17g")
        _banner("BATCH SOLVE")
        print(df[["file", "status", "mu", "objective", "hard_case"]].to_string(index=False))
        print(f"\nSummary: {summary}")
        return int(df["exit_code"].max()) if len(df) else EXIT_CODES["ok"]

    if not args.instance:
        raise InstanceFormatError("solve needs an instance file or --batch DIR")
    inst = _require_trsl(load_instance(args.instance))
    sol = solve_global(inst)
    cert = check_instance_certificate(inst, sol.x, sol.y, [sol.mu])

    _banner(f"GLOBAL SOLUTION: {inst.name}")
    print(f"  mu*        : {sol.mu:.10g}")
    print(f"  x          : {format_vector(sol.x, 6)}")
    print(f"  y          : {sol.y:.10g}")
    print(f"  objective  : {sol.objective:.10g}")
    print(f"  hard case  : {sol.hard_case}")
    print(f"  certificate: {cert.status.value}" + (f" {cert.violations}" if cert.violations else ""))
    print(f"  unchecked  : {', '.join(cert.unchecked)}")
    if args.out:
        save_candidate(args.out, sol.x, sol.y, [sol.mu])
        print(f"  candidate  : {args.out}")
    return EXIT_CODES["ok"] if cert.valid else EXIT_CODES["no_certificate"]


# ===== local =====

def cmd_local(args) -> int:
    inst = load_instance(args.instance)
    pre = precheck(inst)
    if isinstance(pre, NoLocalNonGlobal):
        print(f"no local non-global minimizer (precheck: {pre.reason})")
        return EXIT_CODES["ok"]

    roots = enumerate_roots(inst, args.grid)
    rows = []
    for r in roots:
        point = materialize(inst, r)
        try:
            min_eig = reduced_hessian_at(inst, r.mu, point.y).min_eig
        except TrscError as exc:
            logger.warning(f"B({r.mu:.6g}) unavailable: {exc}")
            min_eig = np.nan
        rows.append({
            "mu": r.mu,
            "residual": r.residual,
            "gap_d1": r.gap_d1,
            "classification": r.classification.value,
            "point": format_vector(point.point, 4),
            "B_min_eig": min_eig,
        })

    lo, hi = pre.interval
    _banner(f"LOCAL ROOTS: {inst.name} on ({lo:.6g}, {hi:.6g})")
    if rows:
        print(pd.DataFrame(rows).to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    strict = sum(r.classification == Classification.STRICT_LOCAL for r in roots)
    print(f"\n{len(roots)} roots, {strict} StrictLocal")
    return EXIT_CODES["ok"]


# ===== verify =====

def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    cand = load_candidate(args.candidate)
    cert = check_instance_certificate(inst, cand["x"], cand["y"], cand["mus"])
    _banner(f"VERIFY: {inst.name}")
    print(f"  global certificate: {cert.status.value}" +
          (f" {cert.violations}" if cert.violations else ""))
    if cert.valid:
        return EXIT_CODES["ok"]

    k = inst.k if isinstance(inst, TrscInstance) else 1
    if k != 1:
        return EXIT_CODES["no_certificate"]
    mu = float(cand["mus"][0])
    f0_oracle, constraints = oracles_of(inst)
    residuals = kkt_residuals(inst.H, inst.c, f0_oracle, constraints, cand["x"], cand["y"], [mu])
    local = certify_local(inst, CandidatePoint(mu, cand["x"], cand["y"], residuals))
    print(f"  local certificate : {local.kind.value}")
    if "min_eig" in local.evidence:
        print(f"  min eig B(mu)     : {format_float(local.evidence['min_eig'])}")
    ok = local.kind in (CertificateKind.STRICT_LOCAL_NON_GLOBAL, CertificateKind.GLOBAL_MIN)
    return EXIT_CODES["ok"] if ok else EXIT_CODES["no_certificate"]


# ===== generate =====

def cmd_generate(args) -> int:
    if len(args.mus) != 2 * args.d:
        raise BadSequence(f"--d {args.d} needs {2 * args.d} multipliers, got {len(args.mus)}")
    H = np.diag(args.diag) if args.diag else CANNED_H
    c = np.asarray(args.c, dtype=float) if args.c else CANNED_C
    psi = build_psi(decompose(H, c), args.mus, o_overrides=args.o_overrides,
                    blend_radius=args.blend_radius)
    inst = TrslInstance(H, c, 1.0, 0.0, psi_to_f0(psi), name=args.name or f"generated_d{args.d}")
    path = save_instance(inst, args.out)
    print(f"Wrote {path} ({args.d} local non-global minimizers by construction)")
    return EXIT_CODES["ok"]


# ===== sample =====

def sample_curves(inst, mus: np.ndarray, log_columns: bool = False) -> pd.DataFrame:
    """phi, psi and their slopes on a grid"""
    s = inst.spectrum
    if isinstance(inst, TrscInstance):
        psi, psi_d1, _ = psi_general_sweep(inst, mus)
    else:
        psi, psi_d1 = psi_trsl(inst, mus), psi_trsl_d1(inst, mus)
    df = pd.DataFrame({
        "mu": mus,
        "phi": phi(s, mus),
        "psi": psi,
        "phi_d1": phi_d1(s, mus),
        "psi_d1": psi_d1,
    })
    df["gap"] = df["phi"] - df["psi"]
    if log_columns:
        df["ln_phi"] = np.log(df["phi"])
        df["ln_psi"] = np.log(df["psi"].where(df["psi"] > 0))
    return df


def cmd_sample(args) -> int:
    inst = load_instance(args.instance)
    mus = np.linspace(args.mu_from, args.mu_to, args.points)
    df = sample_curves(inst, mus, args.log)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out, index=False, float_format="%.17g")
    logger.info(f"Saved: {out} ({len(df)} rows)")
    return EXIT_CODES["ok"]


# ===== example =====

def cmd_example(args) -> int:
    inst = canned_example(args.which)
    out = Path(args.out) if args.out else DATA_DIR / f"{inst.name}.json"
    save_instance(inst, out)
    print(f"Wrote {out}")
    return EXIT_CODES["ok"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hcx", description="Hidden-convex TRS-C solver and certifier")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="global solve with certificate")
    p.add_argument("instance", nargs="?")
    p.add_argument("--batch", metavar="DIR", help="solve every *.json in DIR")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--summary", help="batch summary CSV (default reports/batch_summary.csv)")
    p.add_argument("--out", help="write the solution as a candidate file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("local", help="enumerate and classify local non-global candidates")
    p.add_argument("instance")
    p.add_argument("--grid", type=int, default=None)
    p.set_defaults(func=cmd_local)

    p = sub.add_parser("verify", help="certify a candidate point")
    p.add_argument("instance")
    p.add_argument("candidate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="build an instance with d local non-global minimizers")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--mus", type=float, nargs="+", required=True)
    p.add_argument("--o-overrides", type=float, nargs="*", default=None)
    p.add_argument("--blend-radius", type=float, default=None)
    p.add_argument("--diag", type=float, nargs="+", help="eigenvalues of a diagonal H")
    p.add_argument("--c", type=float, nargs="+")
    p.add_argument("--name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="phi/psi curves as CSV")
    p.add_argument("instance")
    p.add_argument("--from", dest="mu_from", type=float, required=True)
    p.add_argument("--to", dest="mu_to", type=float, required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--log", action="store_true", help="add ln_phi and ln_psi columns")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("example", help="write a canned instance file")
    p.add_argument("--which", choices=["example1", "example2d3"], required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_example)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else getattr(logging, LOG_LEVEL, logging.INFO))
    try:
        return args.func(args)
    except InstanceFormatError as exc:
        logger.error(f"parse error: {exc}")
        return EXIT_CODES["parse_error"]
    except BadSequence as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_CODES["bad_sequence"]
    except TrscError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_CODES["solver_error"]


if __name__ == "__main__":
    sys.exit(main())
