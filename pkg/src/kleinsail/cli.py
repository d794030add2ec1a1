"""Command line entry point: ``kleinsail <command> [options]``.

Exit status is 0 on success, 1 when a check fails (the failing record is
in the output) and 2 for input or precision errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .contfrac import cf_expand, convergents, mu_estimate
from .errors import InsufficientDepth, KleinError, ParseError, PerturbationTooLarge, PrecisionExhausted
from .klein2d import build_polygon, duality_all, is_reduced, mu_via_vertices, polygons_json, polygons_svg
from .klein3d import SimplicialCone, build_patch
from .lattice import FormMatrix, LatticeSpec, omega_estimate
from .numeric import ExactReal, format_real, parse_real, set_precision_ceiling
from .verify import (
    counterexample_build,
    hyperbolic_normalize,
    prop1_scan,
    scan_patches,
    shortest_vector_check,
    theorem1_report,
)

SCHEMA_VERSION = 1

OK, CHECK_FAILED, INPUT_ERROR = 0, 1, 2


class ConfigError(ParseError):
    pass


# -- configuration ---------------------------------------------------------

def load_config(path: str) -> dict:
    """Read a lattice config: ``{"schema_version": 1, "matrix": [[...], ...]}``.

    Matrix entries are numeric text encodings ("3/4", "1+2*sqrt(5)", ...).
    A ``rays`` list of integer triples may replace ``matrix`` for cone input.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{path}: field 'schema_version' must be {SCHEMA_VERSION}, got {version!r}")
    if ("matrix" in data) == ("rays" in data):
        raise ConfigError(f"{path}: exactly one of 'matrix' or 'rays' is required")
    return data


def config_matrix(data: dict, path: str = "<config>") -> FormMatrix:
    rows = data.get("matrix")
    if not isinstance(rows, list) or not rows:
        raise ConfigError(f"{path}: field 'matrix' must be a nonempty list of rows")
    parsed = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ConfigError(f"{path}: field 'matrix[{i}]' must be a list")
        out = []
        for j, entry in enumerate(row):
            try:
                out.append(parse_real(str(entry)))
            except ParseError as exc:
                raise ConfigError(f"{path}: field 'matrix[{i}][{j}]': {exc}") from None
        parsed.append(out)
    try:
        return FormMatrix(parsed)
    except ValueError as exc:
        raise ConfigError(f"{path}: field 'matrix': {exc}") from None


def parse_rays(text: str) -> List[tuple]:
    try:
        rays = [tuple(int(c) for c in part.split(",")) for part in text.split(";")]
    except ValueError:
        raise ConfigError(f"--rays: expected 'a,b,c;d,e,f;g,h,i', got {text!r}") from None
    if len(rays) != 3 or any(len(r) != 3 for r in rays):
        raise ConfigError("--rays: need three integer triples")
    return rays


def parse_signs(text: str) -> tuple:
    if len(text) not in (2, 3) or any(c not in "+-" for c in text):
        raise ConfigError(f"--signs: expected a string like '+-+', got {text!r}")
    return tuple(1 if c == "+" else -1 for c in text)


def _fraction(text: str, flag: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{flag}: not a rational number: {text!r}") from None


# -- output --------------------------------------------------------------

class Output:
    """Artifacts go to stdout, or into ``--out`` with a metadata sidecar."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.dir = Path(args.out) if args.out else None
        self.command = args.command
        self.written: List[str] = []

    def emit(self, name: str, text: str) -> None:
        if self.dir is None:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text)
        self.written.append(name)

    def close(self, argv: Sequence[str], status: int) -> None:
        if self.dir is None or not self.written:
            return
        meta = {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "argv": list(argv),
            "status": status,
            "files": self.written,
            "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        (self.dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def dump(obj: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2, sort_keys=True) + "\n"


# -- commands ----------------------------------------------------------------

def cmd_cf(args, out: Output) -> int:
    x = parse_real(args.value)
    cf = cf_expand(x, args.depth)
    if args.format != "json":
        out.emit("cf.txt", str(cf))
        return OK
    conv = convergents(cf)
    try:
        mu = mu_estimate(cf).to_json()
    except InsufficientDepth:
        mu = None
    out.emit(
        "cf.json",
        dump({
            "value": format_real(x),
            "expansion": str(cf),
            "termination": cf.termination,
            "preperiod": cf.preperiod,
            "period": cf.period,
            "convergents": conv.to_json(),
            "mu": mu,
        }),
    )
    return OK


def _forms_2d(args) -> FormMatrix:
    if args.lattice:
        forms = config_matrix(load_config(args.lattice), args.lattice)
    elif args.theta1 is not None and args.theta2 is not None:
        forms = FormMatrix([[parse_real(args.theta1), -1], [parse_real(args.theta2), -1]])
    else:
        raise ConfigError("give either --lattice or both --theta1 and --theta2")
    if forms.n != 2:
        raise ConfigError("polygon needs a 2x2 matrix")
    return forms


def cmd_polygon(args, out: Output) -> int:
    forms = _forms_2d(args)
    polys = build_polygon(forms, args.window, strict=args.strict_forms)
    if args.format == "svg":
        out.emit("polygons.svg", polygons_svg(forms, polys))
        return OK
    reduced = is_reduced(forms)
    match = duality_all(polys, reduced=reduced)
    report = mu_via_vertices(forms, args.window, polys)
    out.emit(
        "polygons.json",
        dump({
            "matrix": forms.to_text(),
            "window": args.window,
            "polygons": json.loads(polygons_json(polys)),
            "duality": match.to_json(),
            "exponents": report.to_json(),
        }),
    )
    return OK if match.ok else CHECK_FAILED


def _forms_3d(args) -> FormMatrix:
    if not args.lattice:
        raise ConfigError("--lattice is required")
    data = load_config(args.lattice)
    if "rays" in data:
        raise ConfigError(f"{args.lattice}: this command needs a 'matrix'")
    forms = config_matrix(data, args.lattice)
    if forms.n != 3:
        raise ConfigError(f"{args.lattice}: field 'matrix' must be 3x3")
    return forms


def cmd_sail(args, out: Output) -> int:
    if args.rays:
        cone = SimplicialCone.from_rays(parse_rays(args.rays))
    elif args.lattice:
        data = load_config(args.lattice)
        if "rays" in data:
            cone = SimplicialCone.from_rays(data["rays"])
        else:
            cone = SimplicialCone(config_matrix(data, args.lattice), parse_signs(args.signs))
    else:
        raise ConfigError("give --rays or --lattice")
    patch = build_patch(cone, args.radius)
    if args.format == "off":
        out.emit("sail.off", patch.to_off())
    else:
        out.emit("sail.json", dump(patch.to_json()))
    return OK


def cmd_exponent(args, out: Output) -> int:
    data = load_config(args.lattice) if args.lattice else None
    if data is None:
        raise ConfigError("--lattice is required")
    lattice = LatticeSpec(config_matrix(data, args.lattice))
    radii = []
    r = 4
    while r < args.radius:
        radii.append(r)
        r *= 2
    radii.append(args.radius)
    if args.format == "json":
        rows = []
        for r in radii:
            rows.append({"R": r, **omega_estimate(lattice, r).to_json()})
        out.emit("exponent.json", dump({"matrix": lattice.forms.to_text(), "sweep": rows}))
        return OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R", "value", "lo", "hi", "running_max", "witness"])
    for r in radii:
        e = omega_estimate(lattice, r)
        wit = " ".join(map(str, e.witness)) if e.witness else ""
        w.writerow([r, repr(e.value), repr(e.enclosure[0]), repr(e.enclosure[1]), repr(e.running_max), wit])
    out.emit("exponent.csv", buf.getvalue())
    return OK


def cmd_verify(args, out: Output) -> int:
    if args.check == "duality":
        forms = _forms_2d(args)
        polys = build_polygon(forms, args.window, strict=args.strict_forms)
        match = duality_all(polys, reduced=is_reduced(forms))
        out.emit("duality.json", dump(match.to_json()))
        return OK if match.ok else CHECK_FAILED

    lattice = LatticeSpec(_forms_3d(args))
    if args.check == "prop1":
        scan = prop1_scan(lattice, args.radius)
        if args.format == "json":
            out.emit("prop1.json", dump(scan.to_json()))
        else:
            out.emit("prop1.csv", scan.to_csv())
        return OK if scan.positive else CHECK_FAILED
    if args.check == "theorem1":
        rep = theorem1_report(lattice, args.radius)
        out.emit("theorem1.json", dump(rep.to_json()))
        return OK if rep.chain_ok else CHECK_FAILED
    # shortest
    results = []
    for signs, patch in scan_patches(lattice, args.radius).items():
        for z in patch.certified:
            res = shortest_vector_check(hyperbolic_normalize(lattice, z))
            results.append({"cone": list(signs), "v": list(z), **res.to_json()})
    ok = all(r["ok"] for r in results)
    out.emit("shortest.json", dump({"ok": ok, "checked": len(results), "results": results}))
    return OK if ok else CHECK_FAILED


def cmd_counterexample(args, out: Output) -> int:
    eps = _fraction(args.eps, "--eps") if args.eps is not None else Fraction(0)
    rep = counterexample_build(args.n, eps, args.radius)
    out.emit("counterexample.json", dump(rep.to_json()))
    return OK if rep.ok else CHECK_FAILED


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write artifacts into this directory instead of stdout")
    common.add_argument("--format", choices=["json", "csv", "svg", "off"], default=None)
    common.add_argument("--precision-bits", type=int, default=None, help="refinement ceiling for sign decisions")
    common.add_argument("--strict-forms", action="store_true", help="refuse forms vanishing at enumerated points")

    p = argparse.ArgumentParser(prog="kleinsail", description="Klein polygons and polyhedra, edge stars and lattice exponents.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("cf", parents=[common], help="continued fraction, convergents and mu")
    s.add_argument("--value", required=True)
    s.add_argument("--depth", type=int, default=20)

    s = sub.add_parser("polygon", parents=[common], help="Klein polygons, duality and exponents")
    s.add_argument("--theta1")
    s.add_argument("--theta2")
    s.add_argument("--lattice")
    s.add_argument("--window", type=int, default=100)

    s = sub.add_parser("sail", parents=[common], help="truncated Klein polyhedron of a cone")
    s.add_argument("--rays")
    s.add_argument("--lattice")
    s.add_argument("--signs", default="+++")
    s.add_argument("--radius", type=int, default=20)

    s = sub.add_parser("exponent", parents=[common], help="lattice exponent sweep over radii")
    s.add_argument("--lattice", required=True)
    s.add_argument("--radius", type=int, default=1000)

    s = sub.add_parser("verify", parents=[common], help="prop1, theorem1, duality or shortest-vector checks")
    s.add_argument("check", choices=["prop1", "theorem1", "duality", "shortest"])
    s.add_argument("--lattice")
    s.add_argument("--theta1")
    s.add_argument("--theta2")
    s.add_argument("--radius", type=int, default=50)
    s.add_argument("--window", type=int, default=100)

    s = sub.add_parser("counterexample", parents=[common], help="star determinant versus Pi on the explicit cone")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eps")
    s.add_argument("--radius", type=int, default=None)
    return p


COMMANDS = {
    "cf": cmd_cf,
    "polygon": cmd_polygon,
    "sail": cmd_sail,
    "exponent": cmd_exponent,
    "verify": cmd_verify,
    "counterexample": cmd_counterexample,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    saved_bits = ExactReal.max_bits
    out = Output(args)
    try:
        if args.precision_bits is not None:
            set_precision_ceiling(args.precision_bits)
        status = COMMANDS[args.command](args, out)
    except PerturbationTooLarge as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        status = CHECK_FAILED
    except (ParseError, PrecisionExhausted, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = INPUT_ERROR
    except KleinError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = INPUT_ERROR
    finally:
        ExactReal.max_bits = saved_bits
    out.close(argv, status)
    return status


if __name__ == "__main__":
    sys.exit(main())
