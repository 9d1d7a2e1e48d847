"""Command-line front end.

Every command writes one artifact (JSON, CSV or SVG) that embeds the library
version and a hash of the parsed configuration.  Exit codes: 0 success,
2 parse errors, 3 domain errors, 4 I/O errors; failures print an error JSON
object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import re
import sys
import tempfile
from fractions import Fraction
from typing import Any

from . import __version__
from .core_geom import Ball, BoxSet, as_scalar, format_scalar
from .covering_balls import (DEFAULT_SAMPLES, DensityBallFamily, cf_select, certificate_checks,
                             dilation_cover_check, tauberian_upper_from_selection)
from .iterated_chain import AlphaChain, run_chain
from .lab.fit import fit_exponent
from .lab.sampler import Candidates, OperatorFamily, SweepRecord
from .lab.slab import OptimizerError, slab_halo_height
from .lab.sweep import SlabSpec, alpha_sweep
from .maximal_1d import MixedIndicator, lemma1_bound, superlevel_indicator, superlevel_mixed
from .plot import emit_plot

EXIT_PARSE, EXIT_DOMAIN, EXIT_IO = 2, 3, 4

CSV_COLUMNS = ["alpha", "lower_ratio", "upper_bound", "family", "grid", "seed", "set", "candidates",
               "version", "config_hash"]


class ParseError(Exception):
    pass


class CliIOError(Exception):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


# ---------------------------------------------------------------------------
# parsing helpers


def parse_scalar(text: str, what: str = "scalar") -> Fraction:
    try:
        return as_scalar(text)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ParseError(f"{what}: {exc}") from None


_LADDER = re.compile(r"1-2\^-(\d+)")


def parse_alphas(text: str) -> list[float]:
    """'1-2^-4..1-2^-12' (dyadic ladder), or a comma list of decimals, p/q or 1-2^-k terms."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        m_lo, m_hi = _LADDER.fullmatch(lo.strip()), _LADDER.fullmatch(hi.strip())
        if not (m_lo and m_hi):
            raise ParseError(f"malformed level ladder {text!r}")
        k_lo, k_hi = int(m_lo.group(1)), int(m_hi.group(1))
        if k_hi < k_lo:
            raise ParseError("ladder must run toward 1")
        return [1 - 2.0 ** -k for k in range(k_lo, k_hi + 1)]
    out = []
    for part in text.split(","):
        part = part.strip()
        m = _LADDER.fullmatch(part)
        out.append(1 - 2.0 ** -int(m.group(1)) if m else float(parse_scalar(part, "alpha")))
    if not out:
        raise ParseError("empty level list")
    return out


def read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliIOError(f"cannot read {path}: {exc.strerror or exc}", path) from None


def load_geometry(path: str) -> dict[str, Any]:
    """{"dim": n, "boxes": [[[lo, hi], ...], ...], "balls": [{"c": [...], "r": ...}]}."""
    try:
        doc = json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict) or "dim" not in doc:
        raise ParseError(f"{path}: geometry needs a 'dim' field")
    dim = doc["dim"]
    if dim not in (1, 2, 3):
        raise ParseError(f"{path}: unsupported dimension {dim!r}")
    boxes = []
    for box in doc.get("boxes", []):
        if len(box) != dim:
            raise ParseError(f"{path}: box {box!r} does not have {dim} sides")
        sides = []
        for side in box:
            if len(side) != 2:
                raise ParseError(f"{path}: malformed side {side!r}")
            sides.append((parse_scalar(str(side[0]), "box"), parse_scalar(str(side[1]), "box")))
        boxes.append(sides)
    balls = []
    for b in doc.get("balls", []):
        try:
            balls.append(Ball(tuple(float(as_scalar(str(c))) for c in b["c"]), float(as_scalar(str(b["r"])))))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{path}: malformed ball {b!r} ({exc})") from None
    try:
        E = BoxSet(dim, boxes)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return {"dim": dim, "set": E, "balls": balls}


def geometry_json(S: BoxSet) -> dict:
    return {"dim": S.dim, "boxes": [[[format_scalar(lo), format_scalar(hi)] for lo, hi in b.bounds()] for b in S]}


# ---------------------------------------------------------------------------
# output helpers


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_atomic(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".halo-", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliIOError(f"cannot write {path}: {exc.strerror or exc}", path) from None


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _stamp(doc: dict, config: dict) -> dict:
    doc = dict(doc)
    doc["version"] = __version__
    doc["config_hash"] = config_hash(config)
    doc["config"] = config
    return doc


def records_to_csv(records: list[SweepRecord], config: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    h = config_hash(config)
    for r in records:
        w.writerow([repr(r.alpha), repr(r.lower_ratio), "" if r.upper_bound is None else repr(r.upper_bound),
                    r.family, r.grid, r.seed, r.set_label, r.candidates, __version__, h])
    return buf.getvalue()


def read_csv_column(path: str, col: str) -> list[tuple[float, float]]:
    rows = list(csv.DictReader(io.StringIO(read_text(path))))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    if col not in rows[0] or "alpha" not in rows[0]:
        raise ParseError(f"{path}: needs columns 'alpha' and {col!r}")
    try:
        return [(float(r["alpha"]), float(r[col])) for r in rows if r[col] != ""]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _svg(text: str, config: dict) -> str:
    return f"<!-- halo {__version__} config {config_hash(config)} -->\n" + text


# ---------------------------------------------------------------------------
# commands


def cmd_superlevel(args) -> tuple[str, dict]:
    geo = load_geometry(args.set)
    alpha = parse_scalar(args.alpha, "alpha")
    gamma = parse_scalar(args.gamma, "gamma") if args.gamma else Fraction(0)
    if geo["dim"] != 1:
        raise ParseError("superlevel needs a one-dimensional set")
    config = {"command": "superlevel", "set": geometry_json(geo["set"]), "alpha": format_scalar(alpha),
              "gamma": format_scalar(gamma)}
    E = geo["set"].to_interval_set()
    res = superlevel_mixed(MixedIndicator(E, gamma), alpha) if gamma else superlevel_indicator(E, alpha)
    doc = {"level": format_scalar(alpha), "gamma": format_scalar(gamma),
           "intervals": [[format_scalar(lo), format_scalar(hi)] for lo, hi in res.set.pairs()],
           "measure": format_scalar(res.set.measure), "ratio": format_scalar(res.ratio),
           "E_measure": format_scalar(E.measure)}
    return dump_json(_stamp(doc, config)), config


def cmd_lemma1(args) -> tuple[str, dict]:
    alpha = parse_scalar(args.alpha, "alpha")
    gamma = parse_scalar(args.gamma, "gamma") if args.gamma else Fraction(0)
    config = {"command": "lemma1", "alpha": format_scalar(alpha), "gamma": format_scalar(gamma)}
    doc = {"alpha": format_scalar(alpha), "gamma": format_scalar(gamma),
           "bound": format_scalar(lemma1_bound(alpha, gamma))}
    if args.set:
        geo = load_geometry(args.set)
        if geo["dim"] != 1:
            raise ParseError("lemma1 needs a one-dimensional set")
        config["set"] = geometry_json(geo["set"])
        E = geo["set"].to_interval_set()
        res = superlevel_mixed(MixedIndicator(E, gamma), alpha)
        doc["measure"] = format_scalar(res.set.measure)
        doc["E_measure"] = format_scalar(E.measure)
        doc["holds"] = res.set.measure <= lemma1_bound(alpha, gamma) * E.measure
    return dump_json(_stamp(doc, config)), config


def cmd_chain(args) -> tuple[str, dict]:
    geo = load_geometry(args.set)
    alpha1 = parse_scalar(args.alpha1, "alpha1")
    n = geo["dim"]
    if args.axes:
        try:
            axes = [int(a) - 1 for a in args.axes.split(",")]
        except ValueError:
            raise ParseError(f"malformed axes {args.axes!r}") from None
    else:
        axes = list(range(n))
    config = {"command": "chain", "set": geometry_json(geo["set"]), "alpha1": format_scalar(alpha1),
              "axes": [a + 1 for a in axes]}
    trace = run_chain(geo["set"], alpha1, axes)
    chain = AlphaChain(alpha1, n)
    doc = {"alpha1": format_scalar(alpha1), "axes": [a + 1 for a in axes],
           "thresholds": [format_scalar(a) for a in chain.thresholds],
           "bound_factor": format_scalar(trace.bound_factor),
           "steps": [{"boxes": geometry_json(s)["boxes"], "measure": format_scalar(s.measure)} for s in trace.sets],
           "bounds_hold": trace.bounds_hold()}
    return dump_json(_stamp(doc, config)), config


def cmd_cover(args) -> tuple[str, dict]:
    geo = load_geometry(args.set)
    balls = load_geometry(args.balls)["balls"] if args.balls else geo["balls"]
    alpha = float(parse_scalar(args.alpha, "alpha"))
    delta = float(parse_scalar(args.delta, "delta"))
    config = {"command": "cover", "set": geometry_json(geo["set"]),
              "balls": [{"c": list(b.center), "r": b.radius} for b in balls], "alpha": alpha, "delta": delta,
              "seed": args.seed, "samples": args.samples, "drop_sparse": args.drop_sparse}
    family = DensityBallFamily.build(geo["set"], balls, alpha, seed=args.seed, samples=args.samples,
                                     drop_sparse=args.drop_sparse)
    result = cf_select(family, delta)
    cert = tauberian_upper_from_selection(family, result)
    cover = dilation_cover_check(family, result)
    idx = family.input_index
    doc = {"order": idx, "selected": [idx[j] for j in result.selected], "flagged": [idx[j] for j in result.flagged],
           "dilation": result.dilation,
           "densities": [{"ball": idx[j], "density": float(d), "band": float(b)}
                         for j, (d, b) in enumerate(zip(family.density, family.density_band))],
           "pieces": [{"ball": idx[j], "volume": v, "band": b, "density": d, "E_volume": e}
                      for j, v, b, d, e in zip(result.selected, result.piece_volume, result.piece_band,
                                               result.piece_density, result.piece_E_volume)],
           "bound_chain": {"certified_upper": cert.upper, "band": cert.upper_band,
                           "theorem_bound_times_E": cert.theorem_bound, "E_measure": cert.E_measure,
                           "holds": cert.holds},
           "checks": certificate_checks(family, result),
           "cover": {"samples": cover.sample_count, "counterexamples": cover.counterexamples[:10], "ok": cover.ok}}
    return dump_json(_stamp(doc, config)), config


def cmd_slab(args) -> tuple[str, dict]:
    alphas = parse_alphas(args.alphas)
    config = {"command": "slab", "shape": args.shape, "n": args.n, "alphas": alphas, "seed": args.seed}
    heights = [slab_halo_height(args.shape, args.n, a, seed=args.seed) for a in alphas]
    doc: dict[str, Any] = {"shape": args.shape, "n": args.n,
                           "heights": [{"alpha": h.alpha, "height": h.height, "scale": h.scale, "center": h.center}
                                       for h in heights]}
    fit = None
    if args.fit or args.svg:
        # the height itself is the excess: fit log h against log(1/α - 1)
        fit = fit_exponent([(h.alpha, 1 + h.height) for h in heights])
        doc["fit"] = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual,
                      "window": list(fit.window)}
    if args.svg:
        write_atomic(args.svg, _svg(emit_plot([fit], title=f"{args.shape} slab halo, n={args.n}",
                                              ylabel="h"), config))
    return dump_json(_stamp(doc, config)), config


def cmd_sweep(args) -> tuple[str, dict]:
    try:
        family = OperatorFamily.parse(args.family)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    alphas = parse_alphas(args.alphas)
    step = parse_scalar(args.grid, "grid")
    if bool(args.set) == bool(args.slab):
        raise ParseError("give exactly one of --set or --slab")
    if args.slab:
        E = SlabSpec(family.dim, parse_scalar(args.half_thickness, "half-thickness"),
                     parse_scalar(args.half_length, "half-length"))
        set_desc: Any = {"slab": [format_scalar(E.half_thickness), format_scalar(E.half_length)]}
        set_label = E.label
    else:
        E = load_geometry(args.set)["set"]
        set_desc = geometry_json(E)
        set_label = os.path.splitext(os.path.basename(args.set))[0]
    cand = Candidates(args.ratio) if args.ratio else None
    config = {"command": "sweep", "family": family.label, "set": set_desc, "alphas": alphas,
              "grid": format_scalar(step), "seed": args.seed, "ratio": args.ratio, "exact": args.exact}
    records = alpha_sweep(family, E, alphas, step, cand, exact_1d=args.exact, seed=args.seed, set_label=set_label)
    if args.format == "json":
        rows = [{"alpha": r.alpha, "lower_ratio": r.lower_ratio, "upper_bound": r.upper_bound, "family": r.family,
                 "grid": r.grid, "seed": r.seed, "set": r.set_label, "candidates": r.candidates} for r in records]
        return dump_json(_stamp({"records": rows}, config)), config
    return records_to_csv(records, config), config


def cmd_fit(args) -> tuple[str, dict]:
    pts = read_csv_column(args.input, args.col)
    config = {"command": "fit", "points": pts, "col": args.col}
    fit = fit_exponent(pts)
    if args.svg:
        write_atomic(args.svg, _svg(emit_plot([fit], ylabel=f"{args.col} - 1"), config))
    doc = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual, "window": list(fit.window),
           "points": [list(p) for p in fit.points]}
    return dump_json(_stamp(doc, config)), config


def cmd_plot(args) -> tuple[str, dict]:
    pts = read_csv_column(args.input, args.col)
    config = {"command": "plot", "points": pts, "col": args.col, "fit": args.fit}
    items: list = list(pts)
    if args.fit:
        items = [fit_exponent(pts)]
    return _svg(emit_plot(items, ylabel=f"{args.col} - 1"), config), config


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="halo", description="Superlevel sets and halo constants of maximal operators.")
    p.add_argument("--version", action="version", version=f"halo {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help="output path (default stdout)"):
        sp.add_argument("--out", default=None, help=out_help)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("superlevel", help="exact 1D superlevel set of M(χ_E + γχ_E^c)")
    sp.add_argument("--set", required=True)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--gamma", default=None)
    common(sp)
    sp.set_defaults(func=cmd_superlevel)

    sp = sub.add_parser("lemma1", help="the 1D bound 1 + 4(1-α)/(α-γ), optionally checked on a set")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--gamma", default=None)
    sp.add_argument("--set", default=None)
    common(sp)
    sp.set_defaults(func=cmd_lemma1)

    sp = sub.add_parser("chain", help="exact majorant chain for the iterated operator")
    sp.add_argument("--set", required=True)
    sp.add_argument("--alpha1", required=True)
    sp.add_argument("--axes", default=None, help="1-based axis order, e.g. 2,1")
    common(sp)
    sp.set_defaults(func=cmd_chain)

    sp = sub.add_parser("cover", help="greedy ball selection with certificates")
    sp.add_argument("--set", required=True)
    sp.add_argument("--balls", default=None, help="geometry JSON holding the balls (default: --set)")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--delta", required=True)
    sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sp.add_argument("--drop-sparse", action="store_true", help="skip balls whose density is not above alpha")
    common(sp)
    sp.set_defaults(func=cmd_cover)

    sp = sub.add_parser("slab", help="slab halo heights h(α)")
    sp.add_argument("--shape", choices=["ball", "cube"], required=True)
    sp.add_argument("--n", type=int, choices=[2, 3], required=True)
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--fit", action="store_true")
    sp.add_argument("--svg", default=None)
    common(sp)
    sp.set_defaults(func=cmd_slab)

    sp = sub.add_parser("sweep", help="sampled lower bounds across levels")
    sp.add_argument("--family", required=True, help="e.g. balls2d, cubes2d, iterated2d, intervals1d")
    sp.add_argument("--set", default=None)
    sp.add_argument("--slab", action="store_true", help="use the slab [-L,L]^(n-1) x [-t,t]")
    sp.add_argument("--half-thickness", default="1")
    sp.add_argument("--half-length", default="100")
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--grid", default="1/64")
    sp.add_argument("--ratio", type=float, default=None, help="candidate size ladder ratio")
    sp.add_argument("--exact", action="store_true", help="use the exact engine (intervals1d only)")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fit", help="log-log exponent fit of a sweep column")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--col", default="lower_ratio")
    sp.add_argument("--svg", default=None)
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("plot", help="SVG log-log plot of a sweep column")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--col", default="lower_ratio")
    sp.add_argument("--fit", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_plot)
    return p


def _fail(code: int, kind: str, message: str, path: str | None = None) -> int:
    err = {"error": kind, "message": message, "exit_code": code}
    if path:
        err["path"] = path
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ParseError as exc:
        return _fail(EXIT_PARSE, "parse", str(exc))
    try:
        text, _ = args.func(args)
        write_atomic(args.out, text)
    except ParseError as exc:
        return _fail(EXIT_PARSE, "parse", str(exc))
    except CliIOError as exc:
        return _fail(EXIT_IO, "io", str(exc), exc.path)
    except (ValueError, ZeroDivisionError, ArithmeticError, OptimizerError) as exc:
        return _fail(EXIT_DOMAIN, "domain", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
