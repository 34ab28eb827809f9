from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from algebra import require_lie
from classification import canonical_algebra, classify, extract_profile, recover_parameters
from config import get_settings
from errors import AcbmError, ClassificationError, InputError, ReportIOError, VerificationFailure
from expgroups import (
    closed_form_exp,
    reference_expm,
    relative_error,
    spectral_exp,
    table1_coefficients,
    table1_matrix,
)
from known_groups import FIXTURE_NAMES, export, run_fixtures
from models import (
    BASIC_CLASSES,
    PROFILE_FIELDS,
    TWO_PARAMETER_CLASSES,
    AlgebraFile,
    StructureConstants,
)
from verify import build_report, write_report

settings = get_settings()
logging.basicConfig(level=settings.log_level.upper())
logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """Usage errors become InputError so they share exit code 1 with bad input."""

    def error(self, message: str):
        raise InputError(f"{self.prog}: {message}")


def fmt(value: float) -> str:
    return format(value + 0.0, ".10g")


def describe_validation(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(p) for p in error["loc"])
        parts.append(f"{location}: {error['msg']}" if location else error["msg"])
    return "; ".join(parts)


def parse_algebra_file(path: str) -> StructureConstants:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from exc
    try:
        document = AlgebraFile.model_validate(raw)
    except ValidationError as exc:
        raise InputError(f"{path}: {describe_validation(exc)}") from exc
    constants = document.to_structure()
    require_lie(constants)
    return constants


def parse_coords(text: str) -> List[float]:
    parts = text.split(",")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise InputError(f"--coords must be three comma-separated reals, got {text!r}") from exc
    if len(values) != 3 or not all(np.isfinite(values)):
        raise InputError(f"--coords must be three comma-separated reals, got {text!r}")
    return values


def format_matrix(m: np.ndarray) -> str:
    return "\n".join("  [" + "  ".join(f"{v + 0.0: .12g}" for v in row) + " ]" for row in m)


def cmd_classify(args) -> int:
    constants = parse_algebra_file(args.input)
    profile = extract_profile(constants)
    signature = classify(profile, args.tol)
    params = None
    if len(signature.members) == 1:
        try:
            params = recover_parameters(constants, signature.members[0])
        except ClassificationError as exc:
            logger.warning("parameters not recovered: %s", exc.detail)
    if args.json:
        document = {
            "signature": list(signature.members),
            "label": signature.label,
            "is_f0": signature.is_f0,
            "profile": profile.scalars(),
            "alpha": params[0] if params else None,
            "beta": params[1] if params else None,
        }
        print(json.dumps(document, indent=2, ensure_ascii=False))
        return 0
    line = signature.label
    if params is not None:
        tag = signature.members[0]
        line += f", α = {fmt(params[0])}"
        if tag in TWO_PARAMETER_CLASSES:
            line += f", β = {fmt(params[1])}"
    print(line)
    for name in PROFILE_FIELDS:
        print(f"  {name} = {fmt(getattr(profile, name))}")
    return 0


def cmd_canonical(args) -> int:
    constants = canonical_algebra(args.cls, args.alpha, args.beta)
    document = AlgebraFile.from_structure(
        constants,
        name=f"{args.cls} canonical",
        description=f"alpha={fmt(args.alpha)}, beta={fmt(args.beta)}",
    )
    text = json.dumps(document.model_dump(exclude_none=True), indent=2, ensure_ascii=False)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write(text + "\n")
        except OSError as exc:
            raise ReportIOError(f"cannot write {args.out}: {exc.strerror}") from exc
        logger.info("wrote %s canonical algebra to %s", args.cls, args.out)
    else:
        print(text)
    return 0


def cmd_exp(args) -> int:
    a, b, c = parse_coords(args.coords)
    A = table1_matrix(args.cls, args.alpha, args.beta, a, b, c)
    coeffs = table1_coefficients(args.cls, A, args.mode)
    closed = closed_form_exp(A, coeffs)
    error = relative_error(closed, reference_expm(A))
    print("A =")
    print(format_matrix(A))
    print(f"t = {fmt(coeffs.t)}, u = {fmt(coeffs.u)}")
    print(f"branch = {coeffs.branch}, mode = {coeffs.mode}")
    print("e^A =")
    print(format_matrix(closed))
    print(f"error vs reference_expm = {error:.3e}")
    spectral = spectral_exp(A)
    spectral_error = relative_error(closed, spectral.matrix)
    print(f"error vs spectral_exp = {spectral_error:.3e} ({spectral.method})")
    return 0


def cmd_verify(args) -> int:
    report = build_report(args.samples, args.seed, args.tol)
    if args.report:
        write_report(report, args.report)
    for cell in report.cells:
        status = "ok" if cell.passed else ("DIVERGES" if cell.mode == "printed" else "FAIL")
        print(
            f"{cell.class_tag:<4} {cell.branch:<16} {cell.mode:<9} "
            f"n={cell.samples:<5d} max={cell.max_error:.3e} "
            f"spectral={cell.max_spectral_error:.3e} {status}"
        )
    for entry in report.reconciliation:
        print(f"reconciliation: [{entry.source}] {entry.identity}: {entry.verdict}")
    print(f"digest {report.body_digest}")
    if not report.all_corrected_pass:
        raise VerificationFailure("corrected-mode cells failed verification")
    if not report.tensor_reconciliation_ok:
        raise VerificationFailure("tensor formulas disagree with the connection oracle")
    return 0


def cmd_fixtures(args) -> int:
    if args.export_dir:
        for path in export(args.export_dir):
            print(f"exported {path}")
    checks = run_fixtures(args.name)
    for check in checks:
        status = "ok" if check.passed else ("FAIL" if check.asserted else "reported")
        error = "" if check.max_error is None else f" max={check.max_error:.3e}"
        print(f"{check.name:<14} {check.check:<16} {status:<8}{error} {check.detail}".rstrip())
    failures = [check for check in checks if check.asserted and not check.passed]
    if failures:
        raise VerificationFailure(
            "fixture checks failed: " + ", ".join(f"{c.name} {c.check}" for c in failures)
        )
    return 0


def build_parser() -> CliParser:
    parser = CliParser(prog="acbm", description="Almost contact B-metric Lie algebra toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify an algebra file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("canonical", help="write the canonical algebra of a class")
    p.add_argument("--class", dest="cls", required=True, choices=BASIC_CLASSES)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_canonical)

    p = sub.add_parser("exp", help="closed-form exponential of a class matrix")
    p.add_argument("--class", dest="cls", required=True, choices=BASIC_CLASSES)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--coords", required=True)
    p.add_argument("--mode", choices=("printed", "corrected"), default="corrected")
    p.set_defaults(handler=cmd_exp)

    p = sub.add_parser("verify", help="run the exponential sweep and oracle reconciliation")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("fixtures", help="check the known-group fixtures")
    p.add_argument("--name", choices=FIXTURE_NAMES, default=None)
    p.add_argument("--export-dir", dest="export_dir", default=None)
    p.set_defaults(handler=cmd_fixtures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except AcbmError as exc:
        logger.debug("%s failed with exit code %d", type(exc).__name__, exc.exit_code)
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("unexpected failure")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
