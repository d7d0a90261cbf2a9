"""Command-line front end.

Every subcommand ends up as a manifest dictionary that goes through
``parse_manifest`` and ``run_manifest``; the focused subcommands just build a
one-entry manifest from their options.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import ManifestError, MomentDetError
from .manifest import parse_manifest
from .report import emit, run_manifest

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from None


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("numerics and output")
    g.add_argument("--tol", type=float, help="quadrature tolerance")
    g.add_argument("--max-degree", type=int, help="largest polynomial degree for density analyses")
    g.add_argument("--seed", type=int, help="seed for Monte Carlo integration")
    g.add_argument("--deterministic", action="store_true", help="never fall back to Monte Carlo")
    g.add_argument("--output", metavar="DIR", help="write report.json (and CSV series) into DIR")
    g.add_argument("--format", choices=("json", "csv"), help="json report only, or report plus CSV series")
    g.add_argument("--no-timestamp", action="store_true", help="omit timestamps and wall-clock times")


def _measure_args(p, required=True):
    p.add_argument("--measure", type=_json_arg, required=required, help="measure object as JSON")
    p.add_argument("--dimension", type=int, default=1)
    p.add_argument("--basis", type=_json_arg, help="basis matrix (columns are vectors) as JSON")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _common(common)
    ap = argparse.ArgumentParser(prog="momentdet", description="Numerical determinacy checks for moment problems.")
    ap.add_argument("--version", action="version", version=f"momentdet {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="run a manifest file")
    p.add_argument("manifest", help="path to a JSON manifest, or - for stdin")

    p = sub.add_parser("moments", parents=[common], help="directional and mixed moment tables")
    _measure_args(p)
    p.add_argument("--M", type=int)
    p.add_argument("--A", type=int, help="largest total degree of mixed moments")

    p = sub.add_parser("carleman", parents=[common], help="extended Carleman series")
    _measure_args(p)
    p.add_argument("--M", type=int)
    p.add_argument("--mode", choices=("hamburger", "stieltjes"), default="hamburger")
    p.add_argument("--cone", type=_json_arg, help='cone: true, or {"basis": matrix}')

    p = sub.add_parser("classify-weight", parents=[common], help="quasi-analyticity of a weight")
    p.add_argument("--weight", type=_json_arg, required=True)
    p.add_argument("--dimension", type=int, default=1)
    p.add_argument("--max-m", type=int)

    p = sub.add_parser("criterion", parents=[common], help="integral determinacy criterion")
    _measure_args(p)
    p.add_argument("--spec", type=_json_arg, required=True, help="criterion object as JSON")
    p.add_argument("--cone", type=_json_arg)
    p.add_argument("--no-strengthen", action="store_true")

    p = sub.add_parser("density", parents=[common], help="polynomial and trigonometric projection errors")
    _measure_args(p)
    p.add_argument("--target", required=True, help="target function expression")
    p.add_argument("--trig-grid", type=_json_arg, action="append", default=[],
                   help="list of frequencies; repeat for a refinement sequence")

    p = sub.add_parser("stieltjes", parents=[common], help="moment relation under the square-root map")
    _measure_args(p)
    p.add_argument("--e", type=int, nargs="+", required=True, help="multi-index")
    p.add_argument("--cone", type=_json_arg, default=True)
    p.add_argument("--relation-tol", type=float)
    return ap


def _single(args, entry: dict) -> dict:
    doc = {"dimension": args.dimension, "analyses": [entry]}
    if getattr(args, "measure", None) is not None:
        doc["measure"] = args.measure
    if getattr(args, "basis", None) is not None:
        doc["basis"] = args.basis
    if getattr(args, "cone", None) is not None:
        doc["cone"] = args.cone
    return doc


def manifest_document(args) -> dict:
    """The manifest dictionary described by parsed command-line arguments."""
    if args.command == "analyze":
        try:
            if args.manifest == "-":
                text = sys.stdin.read()
            else:
                with open(args.manifest, encoding="utf-8") as fh:
                    text = fh.read()
        except OSError as exc:
            raise ManifestError(args.manifest, f"cannot read manifest: {exc.strerror}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(args.manifest, f"invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ManifestError(args.manifest, "expected a JSON object")
    else:
        entry = {"kind": args.command.replace("-", "_")}
        if args.command in ("moments", "carleman") and args.M is not None:
            entry["M"] = args.M
        if args.command == "moments" and args.A is not None:
            entry["A"] = args.A
        if args.command == "carleman":
            entry["mode"] = args.mode
        elif args.command == "classify-weight":
            entry["weight"] = args.weight
            if args.max_m is not None:
                entry["max_m"] = args.max_m
        elif args.command == "criterion":
            entry["spec"] = args.spec
            entry["strengthen"] = not args.no_strengthen
        elif args.command == "density":
            entry["target"] = args.target
            entry["trig_grids"] = args.trig_grid
        elif args.command == "stieltjes":
            entry = {"kind": "stieltjes_relation", "e": args.e}
            if args.relation_tol is not None:
                entry["tol"] = args.relation_tol
        doc = _single(args, entry)

    num = doc.get("numerics", {})
    if isinstance(num, dict):     # anything else is left for the manifest validator to reject
        num = dict(num)
        for flag, key in (("tol", "tol"), ("max_degree", "max_degree"), ("seed", "seed")):
            if getattr(args, flag) is not None:
                num[key] = getattr(args, flag)
        if args.deterministic:
            num["deterministic"] = True
        if num:
            doc["numerics"] = num
    return doc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        m = parse_manifest(manifest_document(args))
    except MomentDetError as exc:
        print(f"momentdet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_manifest(m, timestamps=not args.no_timestamp)
    out_dir = args.output or m.output["dir"]
    fmt = args.format or m.output["format"]
    if out_dir is None:
        if fmt == "csv":
            print("momentdet: --format csv needs --output", file=sys.stderr)
            return EXIT_USAGE
        sys.stdout.write(report.to_json())
    else:
        try:
            for path in emit(report, out_dir, fmt):
                print(path, file=sys.stderr)
        except MomentDetError as exc:
            print(f"momentdet: {exc}", file=sys.stderr)
            return EXIT_FAILED
    for r in report.data["results"]:
        if r["status"] != "ok":
            print(f"momentdet: {r['id']}: {r['error']}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
