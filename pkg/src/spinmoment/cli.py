"""Command-line frontend: moment-file checks, witness extraction, region scans
and the self-validation suite.

Moment files are JSON with the spin number transported as the integer
``two_j`` plus either a full 3x3 complex matrix "M" (entries as [re, im]
pairs) or renormalized coordinates "coords": {"u": [...], "v": [...]}.
Exit codes for ``check``: 0 quantum, 1 non-quantum, 2 boundary, 3 input or
validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import feasibility, matcore, reduction, sdp, spinalg
from .scan import scan_grid
from .spinalg import MomentMatrix

EXIT_QUANTUM = 0
EXIT_NON_QUANTUM = 1
EXIT_BOUNDARY = 2
EXIT_INPUT_ERROR = 3


class MomentFileError(ValueError):
    pass


def parse_spin(text: str) -> int:
    """Parse a spin number like "5", "2.5" or "5/2" into two_j."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        if den.strip() != "2":
            raise MomentFileError(f"spin fractions must have denominator 2, got {text!r}")
        two_j = int(num)
    else:
        j = float(text)
        two_j = round(2 * j)
        if abs(2 * j - two_j) > 1e-9:
            raise MomentFileError(f"spin {text!r} is not an integer or half-integer")
    if two_j < 1:
        raise MomentFileError(f"spin must be positive, got {text!r}")
    return two_j


def _spin_label(two_j: int) -> str:
    return str(two_j // 2) if two_j % 2 == 0 else f"{two_j}/2"


def _parse_complex_entry(entry, where: str) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        re, im = entry
        if isinstance(re, (int, float)) and isinstance(im, (int, float)):
            return complex(re, im)
    raise MomentFileError(f"{where} must be a number or an [re, im] pair, got {entry!r}")


def load_moment_file(path: str) -> tuple[MomentMatrix, str]:
    """Parse and validate a JSON moment file, returning (matrix, label)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise MomentFileError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MomentFileError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MomentFileError("moment file must be a JSON object")
    if "two_j" not in data:
        raise MomentFileError('missing field "two_j"')
    two_j = data["two_j"]
    if not isinstance(two_j, int) or two_j < 1:
        raise MomentFileError(f'"two_j" must be a positive integer, got {two_j!r}')
    label = data.get("label", "")
    if not isinstance(label, str):
        raise MomentFileError('"label" must be a string')
    has_m = "M" in data
    has_coords = "coords" in data
    if has_m == has_coords:
        raise MomentFileError('exactly one of "M" or "coords" must be present')

    if has_m:
        raw = data["M"]
        if not isinstance(raw, list) or len(raw) != 3:
            raise MomentFileError('"M" must be a 3x3 array')
        m = np.zeros((3, 3), dtype=complex)
        for k, row in enumerate(raw):
            if not isinstance(row, list) or len(row) != 3:
                raise MomentFileError(f"M[{k}] must be a row of 3 entries")
            for l, entry in enumerate(row):
                m[k, l] = _parse_complex_entry(entry, f"M[{k}][{l}]")
        try:
            return MomentMatrix.from_matrix(two_j, m), label
        except ValueError as exc:
            raise MomentFileError(str(exc)) from exc

    raw = data["coords"]
    if not isinstance(raw, dict) or set(raw) - {"u", "v"} or "u" not in raw or "v" not in raw:
        raise MomentFileError('"coords" must be an object with fields "u" and "v"')
    vectors = {}
    for name in ("u", "v"):
        seq = raw[name]
        if not isinstance(seq, list) or len(seq) != 3 or not all(
            isinstance(x, (int, float)) for x in seq
        ):
            raise MomentFileError(f'coords.{name} must be a list of 3 numbers')
        vectors[name] = np.array(seq, dtype=float)
    try:
        coords = reduction.RenormalizedCoords(u=vectors["u"], v=vectors["v"], two_j=two_j)
        return reduction.moments_from_coords(coords), label
    except ValueError as exc:
        raise MomentFileError(str(exc)) from exc


def _print_stages(records) -> None:
    print(f"  {'stage':<14} {'outcome':<24} {'time':>9}  detail")
    for rec in records:
        print(f"  {rec.name:<14} {rec.outcome:<24} {rec.seconds:>8.3f}s  {rec.detail}")


def _witness_json(witness: feasibility.Witness) -> dict:
    return {
        "value": witness.value,
        "z": [float(x) for x in witness.z],
        "min_eigenvalue": matcore.min_eigenvalue(witness.matrix),
        "trace": float(np.trace(witness.matrix).real),
    }


def cmd_check(args) -> int:
    try:
        m, label = load_moment_file(args.input)
        verdict = feasibility.classify(m, tol=args.tol)
    except (MomentFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    title = label or args.input
    print(f"moment check: {title}")
    print(f"  j = {_spin_label(m.two_j)} (two_j = {m.two_j})")
    _print_stages(verdict.tests_run)
    print(f"verdict: {verdict.status} (decided by the {verdict.stage} stage)")
    report = {
        "status": verdict.status,
        "stage": verdict.stage,
        "t_star": verdict.t_star,
    }
    if verdict.witness is not None:
        report["witness"] = _witness_json(verdict.witness)
    if verdict.certificate_state is not None:
        vals, _ = matcore.hermitian_eig(verdict.certificate_state)
        report["certificate_spectrum"] = [float(x) for x in vals]
    print(json.dumps(report))
    return {
        feasibility.STATUS_QUANTUM: EXIT_QUANTUM,
        feasibility.STATUS_NON_QUANTUM: EXIT_NON_QUANTUM,
        feasibility.STATUS_BOUNDARY: EXIT_BOUNDARY,
    }[verdict.status]


def cmd_witness(args) -> int:
    try:
        m, label = load_moment_file(args.input)
        if m.two_j == 1:
            feasibility._validate_half_spin_structure(m)
            witness = feasibility.witness_for_first_moments(m.first_moments, m.two_j)
        else:
            witness = feasibility.witness_search(m)
    except (MomentFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    title = label or args.input
    print(f"witness search: {title}")
    zvals, _ = matcore.hermitian_eig(witness.matrix)
    print(f"  value z.t = {witness.value:.9g}")
    print(f"  Z spectrum: {np.array2string(zvals, precision=8)}")
    print(f"  tr Z = {float(np.trace(witness.matrix).real):.12g}")
    print("  z over the orthonormalized basis:")
    print(f"    {np.array2string(witness.z, precision=8)}")
    print("  coefficients over the original operators:")
    for name, coeff in zip(witness.op_labels, witness.op_coefficients):
        print(f"    {name:<4} {coeff:+.9g}")
    print(json.dumps(_witness_json(witness)))
    if witness.separates:
        print("verdict: hyperplane separates the input from the quantum set")
        return 0
    print("no witness exists: the input is quantum (or on the boundary)")
    return 1


def cmd_scan(args) -> int:
    try:
        two_j = args.two_j if args.two_j else parse_spin(args.j)
        u = np.array([float(x) for x in args.u.split(",")])
        if u.shape != (3,):
            raise MomentFileError("--u needs three comma-separated numbers")
        sets = tuple(s.strip().upper() for s in args.sets.split(",") if s.strip())
        if float(np.linalg.norm(u)) > 1.0 + 1e-12:
            print("warning: |u| > 1, all regions will be empty", file=sys.stderr)
        t0 = time.perf_counter()
        result = scan_grid(
            two_j,
            u,
            v1_range=(args.v1_min, args.v1_max),
            v2_range=(args.v2_min, args.v2_max),
            resolution=args.grid,
            sets=sets,
            tol=args.tol,
            workers=args.workers,
        )
        result.to_csv(args.out)
        if args.svg:
            result.to_svg(args.svg)
    except (MomentFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    elapsed = time.perf_counter() - t0
    areas = [f"area({name}) = {result.area(name)}" for name in ("R", "S", "T") if name in sets or name in "RT"]
    print(
        f"scanned {args.grid}x{args.grid} grid at j = {_spin_label(two_j)} "
        f"in {elapsed:.1f}s; " + ", ".join(areas)
    )
    print(f"wrote {args.out}" + (f" and {args.svg}" if args.svg else ""))
    return 0


def _run_validation(j_max: int, seed: int, inject_fault: bool) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    checks: list[tuple[str, bool, str]] = []

    worst_comm = worst_cas = 0.0
    for two_j in range(1, j_max + 1):
        report = spinalg.validate_algebra(spinalg.spin_operators(two_j))
        worst_comm = max(worst_comm, report.commutator_residual)
        worst_cas = max(worst_cas, report.casimir_residual)
    limit = 1e-30 if inject_fault else 1e-10
    checks.append(
        (
            "spin-algebra",
            worst_comm < limit and worst_cas < limit,
            f"two_j <= {j_max}: commutator {worst_comm:.2e}, Casimir {worst_cas:.2e}"
            + (" [fault injected: limit 1e-30]" if inject_fault else ""),
        )
    )

    analytic_ok = True
    detail = []
    prob = sdp.SdpProblem.build(
        2, np.eye(2, dtype=complex), [(np.diag([1.0, 0.0]).astype(complex), 1.0)]
    )
    sol = sdp.solve(prob)
    analytic_ok &= sol.status == sdp.STATUS_OPTIMAL and abs(sol.primal_objective - 1.0) < 1e-7
    detail.append(f"min tr: {sol.primal_objective:.9f}")
    prob = sdp.SdpProblem.build(
        2, np.diag([1.0, 2.0]).astype(complex), [(np.eye(2, dtype=complex), 1.0)]
    )
    sol = sdp.solve(prob)
    analytic_ok &= sol.status == sdp.STATUS_OPTIMAL and abs(sol.primal_objective - 1.0) < 1e-7
    detail.append(f"eig-min: {sol.primal_objective:.9f}")
    basis = matcore.hermitian_basis(3)
    constraints = [(b, matcore.hs_inner(b, np.eye(3, dtype=complex) / 3.0)) for b in basis]
    p1 = sdp.phase1_min_t(constraints, 3)
    analytic_ok &= abs(p1.t_star + 1.0 / 3.0) < 1e-6
    detail.append(f"phase1(I/3): t* = {p1.t_star:.9f}")
    checks.append(("sdp-analytic", analytic_ok, "; ".join(detail)))

    sol_a = sdp.solve(prob)
    sol_b = sdp.solve(prob)
    same = sol_a.iterations == sol_b.iterations and all(
        a == b for a, b in zip(sol_a.iterate_log, sol_b.iterate_log)
    )
    checks.append(("sdp-determinism", same, f"{sol_a.iterations} identical iterations"))

    violations = 0
    total = 0
    for two_j in (2, 4):
        for _ in range(40):
            g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            rho = g @ g.conj().T
            rho /= np.trace(rho).real
            ops = reduction.reduction_operators(two_j)
            m = np.empty((3, 3), dtype=complex)
            for k in range(3):
                for l in range(3):
                    m[k, l] = np.trace(ops.lam2[k][l] @ rho)
            mm = MomentMatrix.from_matrix(two_j, m)
            in_r = reduction.ppt_inner_test(rho)
            exact = feasibility.exact_test_direct(mm).accepted
            in_t = matcore.is_psd(reduction.tau(rho, two_j), tol=1e-7)
            total += 1
            if (in_r and not exact) or (exact and not in_t):
                violations += 1
    checks.append(("sandwich", violations == 0, f"{total} samples, {violations} violations"))

    worst = 0.0
    tested = 0
    for v in ((1.1, -0.05), (1.3, -0.2), (-0.4, 0.8)):
        coords = reduction.RenormalizedCoords(
            u=np.zeros(3), v=np.array([v[0], v[1], 1.0 - v[0] - v[1]]), two_j=4
        )
        mm = reduction.moments_from_coords(coords)
        verdict = feasibility.exact_test_direct(mm)
        if verdict.status == feasibility.STATUS_NON_QUANTUM:
            witness = feasibility.witness_search(mm)
            worst = max(worst, abs(witness.value + verdict.t_star))
            tested += 1
    checks.append(
        ("witness-duality", tested > 0 and worst < 1e-6, f"{tested} points, max |value + t*| = {worst:.2e}")
    )

    mism = 0
    for _ in range(60):
        ell = rng.standard_normal(3)
        ell *= rng.uniform(0.0, 2.3) / np.linalg.norm(ell)
        closed = float(np.linalg.norm(ell)) <= 1.5
        via_sdp = feasibility.exact_test_first_moments(ell, 3).accepted
        if abs(np.linalg.norm(ell) - 1.5) > 1e-6 and closed != via_sdp:
            mism += 1
    checks.append(("first-moment", mism == 0, f"60 samples at j=3/2, {mism} mismatches"))

    return checks


def cmd_validate(args) -> int:
    t0 = time.perf_counter()
    checks = _run_validation(args.j_max, args.seed, args.inject_fault)
    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, detail in checks:
        mark = " ok " if ok else "FAIL"
        print(f"[{mark}] {name}: {detail}")
    print(f"ran {len(checks)} suites in {time.perf_counter() - t0:.1f}s")
    if failed:
        print(f"failing: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinmoment",
        description="Decide whether first and second spin-operator moments admit a quantum state.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="classify a moment file")
    p.add_argument("--input", required=True, help="JSON moment file")
    p.add_argument("--tol", type=float, default=matcore.PSD_TOL, help="PSD tolerance")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("witness", help="search for a separating hyperplane")
    p.add_argument("--input", required=True, help="JSON moment file")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("scan", help="scan the (v1, v2) plane at fixed u")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--j", help='spin number, e.g. "5" or "5/2"')
    group.add_argument("--two-j", dest="two_j", type=int, help="twice the spin number")
    p.add_argument("--u", required=True, help="first moments u1,u2,u3 (renormalized)")
    p.add_argument("--grid", type=int, default=101, help="grid resolution per axis")
    p.add_argument("--sets", default="R,S,T", help="which sets to evaluate (subset of R,S,T)")
    p.add_argument("--v1-min", type=float, default=-0.2)
    p.add_argument("--v1-max", type=float, default=1.0)
    p.add_argument("--v2-min", type=float, default=-0.2)
    p.add_argument("--v2-max", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", help="optional SVG rendering path")
    p.add_argument("--tol", type=float, default=matcore.PSD_TOL)
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help="scan processes (default: SPINMOMENT_THREADS or 1)",
    )
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("validate", help="run the self-validation suites")
    p.add_argument("--j-max", type=int, default=20, help="largest two_j for algebra checks")
    p.add_argument("--seed", type=int, default=2024, help="seed for all sampling")
    p.add_argument(
        "--inject-fault",
        action="store_true",
        help="force a failing tolerance (self-test of the validator)",
    )
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
