"""``dc-split`` command line: decompose, check and restrict."""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from .curves import (
    ClosedConvexCurve,
    dc_condition_estimate,
    rectangle,
    regular_polygon,
    theta_bounds_check,
    variation_of_slope,
)
from .decompose import dc_decompose, lipschitz_audit
from .document import SCHEMA, DocumentError, build_field, dump_json, load_document
from .envelope import check_convexity, convex_minorant
from .errors import DCSplitError
from .field import PLField, restrict_to_curve
from .presets import preset_factory

__all__ = ["main", "cmd_decompose", "cmd_check", "cmd_restrict", "parse_curve"]

EXIT_OK, EXIT_INPUT, EXIT_STALLED, EXIT_MAX_ITER = 0, 1, 2, 3
_VERDICT = {"converged": "decomposed", "stalled": "stalled", "max_iter": "max_iter"}
_EXIT = {"decomposed": EXIT_OK, "stalled": EXIT_STALLED, "max_iter": EXIT_MAX_ITER}


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _diagnostic_field(doc, field: PLField):
    """Level-tied factory for the oscillating preset, the field itself otherwise."""
    if doc.preset == "osc" and doc.grid is not None:
        return preset_factory("osc", domain=field.mesh.domain)
    return field


def _condition(doc, field, levels: int, seed: int) -> dict:
    est = dc_condition_estimate(_diagnostic_field(doc, field), levels, seed)
    return {
        "levels": levels,
        "seed": seed,
        "variation": list(est.variation),
        "turn": list(est.turn),
        "variation_class": "plateau" if est.variation_plateau else "growth",
        "turn_class": "plateau" if est.turn_plateau else "growth",
    }


def _convex_part(field: PLField) -> dict:
    planes = np.unique(convex_minorant(field).planes + 0.0, axis=0)
    return {"values": field.values.tolist(), "planes": planes.tolist()}


def cmd_decompose(source: str, eps: float, max_iter: int, out: str | None = None,
                  levels: int = 2, seed: int = 0) -> int:
    doc = load_document(source)
    f = build_field(doc)
    t0 = time.perf_counter()
    pair, trace = dc_decompose(f, eps, max_iter)
    t1 = time.perf_counter()
    audit = lipschitz_audit(f, trace)
    condition = _condition(doc, f, levels, seed)
    t2 = time.perf_counter()
    verdict = _VERDICT[trace.termination]
    report = {
        "verdict": verdict,
        "eps": eps,
        "max_iter": max_iter,
        "residual_sup": pair.residual_sup,
        "depths_used": trace.depths_used,
        "h_series": trace.h_series,
        "lipschitz": audit.lipschitz,
        "audit": {"bound": audit.bound, "max_gradient": audit.max_gradient, "ok": audit.ok},
        "convex": {"g": check_convexity(pair.g).is_convex, "h": check_convexity(pair.h).is_convex},
        "condition": condition,
    }
    result = {
        "schema": SCHEMA,
        "kind": "decomposition",
        "input": doc.model_dump(by_alias=True, exclude_none=True, exclude={"values", "mesh"}),
        "g": _convex_part(pair.g),
        "h": _convex_part(pair.h),
        "trace": {
            "termination": trace.termination,
            "depths": [vars(r) for r in trace.records],
            "finite_functions": [
                {"depth": t.finite.depth, "path": list(t.finite.index_path),
                 "support_triangles": len(t.finite.support_triangles), "sup": t.finite.sup,
                 "sign": t.sign, "convex": t.convex}
                for t in trace.terms
            ],
            "discarded": len(trace.discarded),
        },
        "report": report,
    }
    _emit(dump_json(result), out)
    # wall-clock figures vary between runs, so they stay out of the document
    print(f"dc-split: decompose {t1 - t0:.3f} s, diagnostics {t2 - t1:.3f} s",
          file=sys.stderr)
    return _EXIT[verdict]


def cmd_check(source: str, levels: int = 5, seed: int = 0, out: str | None = None) -> int:
    doc = load_document(source)
    f = build_field(doc)
    if levels < 1:
        raise DocumentError("--levels must be >= 1")
    result = {"schema": SCHEMA, "kind": "check", **_condition(doc, f, levels, seed)}
    _emit(dump_json(result), out)
    return EXIT_OK


def parse_curve(spec: str) -> ClosedConvexCurve:
    """``square:s``, ``kgon:k:r:cx:cy`` or ``rect:w:h:angle:cx:cy`` (angle in degrees)."""
    kind, _, rest = spec.partition(":")
    try:
        nums = [float(x) for x in rest.split(":")] if rest else []
        if kind == "square" and len(nums) == 1:
            s = nums[0]
            return ClosedConvexCurve([(-s, -s), (s, -s), (s, s), (-s, s)])
        if kind == "kgon" and len(nums) == 4 and nums[0] == int(nums[0]):
            return regular_polygon(int(nums[0]), nums[1], (nums[2], nums[3]))
        if kind == "rect" and len(nums) == 5:
            w, h, ang, cx, cy = nums
            return rectangle(w, h, math.radians(ang), (cx, cy))
    except ValueError as exc:
        raise DocumentError(f"--curve {spec!r}: {exc}") from None
    raise DocumentError(f"--curve {spec!r}: expected square:s, kgon:k:r:cx:cy "
                        "or rect:w:h:angle:cx:cy")


def cmd_restrict(source: str, curve_spec: str, plot: str | None = None,
                 out: str | None = None) -> int:
    doc = load_document(source)
    f = build_field(doc)
    curve = parse_curve(curve_spec)
    r = restrict_to_curve(f, curve)
    tb = theta_bounds_check(f, curve)
    if plot is not None:
        slopes = np.append(r.slopes, r.slopes[0])
        lines = ["# t phi dphi"]
        lines += [f"{t!r} {v!r} {s!r}" for t, v, s in
                  zip(r.breakpoints.tolist(), r.values.tolist(), slopes.tolist())]
        Path(plot).write_text("\n".join(lines) + "\n")
    result = {
        "schema": SCHEMA,
        "kind": "restriction",
        "curve": curve_spec,
        "length": r.length,
        "breakpoints": len(r.breakpoints),
        "variation": variation_of_slope(r),
        "turn": tb.turn,
        "theta": {"lower": tb.lower, "upper": tb.upper, "scale": tb.scale, "ok": tb.ok},
    }
    _emit(dump_json(result), out)
    return EXIT_OK


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors; exit status 2 is reserved for stalled runs."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dc-split", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    src_help = "field document path, or preset:NAME"

    d = sub.add_parser("decompose", help="write a field as g - h with g, h convex")
    d.add_argument("input", help=src_help)
    d.add_argument("--eps", type=float, default=1e-6)
    d.add_argument("--max-iter", type=_positive_int, default=50)
    d.add_argument("--levels", type=_positive_int, default=2,
                   help="curve-family levels for the report's condition estimate")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")

    c = sub.add_parser("check", help="slope-variation and turn series over curve families")
    c.add_argument("input", help=src_help)
    c.add_argument("--levels", type=_positive_int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")

    r = sub.add_parser("restrict", help="restriction of the field to a closed curve")
    r.add_argument("input", help=src_help)
    r.add_argument("--curve", required=True)
    r.add_argument("--plot", help="write columns t, phi, dphi to this file")
    r.add_argument("--out")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "decompose":
            return cmd_decompose(args.input, args.eps, args.max_iter, args.out, args.levels, args.seed)
        if args.command == "check":
            return cmd_check(args.input, args.levels, args.seed, args.out)
        return cmd_restrict(args.input, args.curve, args.plot, args.out)
    except (DCSplitError, ValueError, OSError) as exc:
        print(f"dc-split: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
