"""Command-line front end.

Every subcommand prints one JSON document to stdout (or writes it to
``--output``) and a one-line summary to stderr.  The document embeds the
run configuration and the library version, and the same configuration
always produces byte-identical output.

Exit codes: 0 success, 2 usage or parse error, 3 numeric error or cap hit.
The environment variable ``FILTERLAB_HORIZON_CAP`` bounds every horizon,
checkpoint, count and cut-search length (default 10**8).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .convergence import LimitConfig, f_limit_check, parse_seq_expr, slln_experiment, statistical_limit_search
from .density import NumericError, classify, density_estimate, parse_ideal, parse_weights
from .setexpr import HorizonError, ParseError, parse_set_expr
from .ultralab import THEOREMS, PrincipalUltrafilter, elements, sweep
from .witness import (
    BlockPartition, CapExceeded, MismatchedIdeal, erdos_ulam_blocks, frechet_blocks,
    summable_blocks, verify_conglomeration,
)

CAP_ENV = "FILTERLAB_HORIZON_CAP"
DEFAULT_CAP = 10 ** 8

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValueError):
    pass


def horizon_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(float(raw))
    except ValueError:
        raise UsageError(f"{CAP_ENV} must be a number, got {raw!r}") from None
    if cap < 1:
        raise UsageError(f"{CAP_ENV} must be positive")
    return cap


def _natural(text: str) -> int:
    """Accept ``1000``, ``1e3`` or ``10**3``."""
    t = text.strip()
    try:
        if "**" in t:
            base, exp = t.split("**")
            value = int(base) ** int(exp)
        elif "e" in t.lower():
            f = float(t)
            if not f.is_integer():
                raise ValueError
            value = int(f)
        else:
            value = int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a natural number") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return value


def _checkpoints(text: str) -> list:
    cps = [_natural(t) for t in text.split(",") if t.strip()]
    if not cps:
        raise argparse.ArgumentTypeError("empty checkpoint list")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise argparse.ArgumentTypeError("checkpoints must be increasing")
    return cps


def _reals(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a list of numbers") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _within_cap(name: str, value: int, cap: int):
    if value > cap:
        raise UsageError(f"{name} {value} exceeds the horizon cap {cap} (set {CAP_ENV} to raise it)")


def _load_blocks(specs) -> dict:
    out = {}
    for spec in specs or ():
        name, sep, path = spec.partition("=")
        if not sep or not name.isidentifier():
            raise UsageError(f"--blocks expects name=path.json, got {spec!r}")
        try:
            out[name] = BlockPartition.from_json(Path(path).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read block partition {path!r}: {exc}") from None
    return out


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)

    def to_dict(self):
        return {"subcommand": self.subcommand, **self.options}


def _config(args) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    return RunConfig(args.command, opts)


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, summary, exit code)

def cmd_density(args, cap):
    blocks = _load_blocks(args.blocks)
    a = parse_set_expr(args.set, blocks)
    s = parse_weights(args.weights)
    _within_cap("checkpoint", args.checkpoints[-1], cap)
    est = density_estimate(s, a, args.checkpoints)
    summary = f"density: limsup~{est.running_limsup_estimate:.6g}, exact={est.exact}"
    return {"estimate": est.to_dict()}, summary, EXIT_OK


def cmd_classify(args, cap):
    blocks = _load_blocks(args.blocks)
    a = parse_set_expr(args.set, blocks)
    ideal = parse_ideal(args.ideal)
    _within_cap("horizon", args.horizon, cap)
    v = classify(ideal, a, args.horizon, args.checkpoints, args.threshold)
    return {"verdict": v.to_dict()}, f"classify: {v.side.value} ({v.certainty.value})", EXIT_OK


def cmd_witness(args, cap):
    _within_cap("count", args.count, cap)
    search_cap = args.cap if args.cap is not None else cap
    _within_cap("cap", search_cap, cap)
    if args.kind == "frechet":
        bp = frechet_blocks(args.count)
    else:
        s = parse_weights(args.weights)
        build = summable_blocks if args.kind == "summable" else erdos_ulam_blocks
        try:
            bp = build(s, args.count, search_cap)
        except CapExceeded as exc:
            payload = {"partition": exc.partial.to_dict(), "error": str(exc)}
            return payload, f"witness: {exc}", EXIT_NUMERIC
    payload = {"partition": bp.to_dict(),
               "blocks": [[lo, hi] for lo, hi in bp.blocks()] if bp.cuts[-1] <= 10 ** 4 else None}
    summary = f"witness: {bp.count} {bp.kind} blocks, last cut {bp.cuts[-1]}"
    if args.index is not None:
        m = parse_set_expr(args.index)
        ideal = parse_ideal(args.kind if args.kind == "frechet" else
                            f"{args.kind}:{bp.weights.spec()}")
        horizon = args.horizon or bp.cuts[-1]
        _within_cap("horizon", horizon, cap)
        rep = verify_conglomeration(bp, ideal, m, horizon)
        payload["report"] = rep.to_dict()
        summary += f"; {rep.conclusion}"
    return payload, summary, EXIT_OK


def cmd_limit(args, cap):
    blocks = _load_blocks(args.blocks)
    x = parse_seq_expr(args.seq, blocks)
    _within_cap("horizon", args.horizon, cap)
    candidate = args.candidate
    searched = False
    if candidate is None:
        searched = True
        candidate = statistical_limit_search(x, args.horizon, args.grid)
        if candidate is None:
            return {"search": {"grid": args.grid, "candidate": None}, "report": None}, \
                "limit: no candidate found", EXIT_OK
    ideal = parse_ideal(args.ideal)
    config = LimitConfig(args.horizon, tuple(args.checkpoints) if args.checkpoints else None, args.threshold)
    rep = f_limit_check(x, candidate, ideal, args.eps, config)
    payload = {"report": rep.to_dict()}
    if searched:
        payload["search"] = {"grid": args.grid, "candidate": candidate}
    return payload, f"limit: {rep.verdict} for candidate {candidate:g}", EXIT_OK


def cmd_slln(args, cap):
    _within_cap("n", args.n, cap)
    r = slln_experiment(args.n, args.trials, args.seed)
    summary = f"slln: grand mean {r.grand_mean:.6f}, max |mean - 1/2| {r.max_abs_deviation_from_half:.6f}"
    return {"report": r.to_dict()}, summary, EXIT_OK


def cmd_ultralab(args, cap):
    if args.mode == "sweep":
        reports = sweep(args.theorem, args.n, args.seed)
        bad = sum(len(r.violations) for r in reports)
        payload = {"reports": [r.to_dict() for r in reports]}
        summary = f"ultralab: {len(reports)} sweep(s) at n={args.n}, {bad} violation(s)"
        return payload, summary, EXIT_OK
    from .ultralab import (
        intersect_collection, inavoidability_check, is_minimal, partition_for_collection,
    )
    pts = sorted(set(args.points))
    w = [PrincipalUltrafilter(args.n, p) for p in pts]
    f = intersect_collection(w)
    payload = {"intersection": f.describe()}
    if len(w) >= 2:
        payload["minimal"] = is_minimal(w)
        payload["partition"] = partition_for_collection(w).to_dict()
    payload["inavoidable"] = {}
    for u in w:
        r = inavoidability_check(f, u)
        payload["inavoidable"][str(u.point)] = {
            "inavoidable": r.inavoidable,
            "witness": list(elements(r.witness)) if r.witness is not None else None,
            "cross_validated": r.cross_validated,
        }
    return payload, f"ultralab: checked W = {pts} on n={args.n}", EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="filterlab", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--output", help="write the JSON document here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="weighted prefix density of a set")
    d.add_argument("--set", required=True, help='set expression, e.g. "arith(2,2)"')
    d.add_argument("--weights", default="constant(1)")
    d.add_argument("--checkpoints", type=_checkpoints, default=_checkpoints("1e2,1e4,1e6"))
    d.add_argument("--blocks", action="append", metavar="NAME=PATH",
                   help="block partition JSON usable as blockunion(NAME, ...)")
    d.set_defaults(func=cmd_density)

    c = sub.add_parser("classify", help="ideal or grill membership of a set")
    c.add_argument("--set", required=True)
    c.add_argument("--ideal", default="st", help="frechet, st, summable:<weights> or eu:<weights>")
    c.add_argument("--horizon", type=_natural, default=10 ** 6)
    c.add_argument("--checkpoints", type=_checkpoints)
    c.add_argument("--threshold", type=float, default=0.01)
    c.add_argument("--blocks", action="append", metavar="NAME=PATH")
    c.set_defaults(func=cmd_classify)

    w = sub.add_parser("witness", help="greedy block partition witnessing conglomeration")
    w.add_argument("--kind", choices=("summable", "erdos_ulam", "frechet"), required=True)
    w.add_argument("--weights", default="constant(1)")
    w.add_argument("--count", type=_natural, required=True)
    w.add_argument("--cap", type=_natural, help="longest block searched for (default: the horizon cap)")
    w.add_argument("--index", help="block index set M to verify, e.g. squares")
    w.add_argument("--horizon", type=_natural, help="verify blocks ending up to here (default: last cut)")
    w.set_defaults(func=cmd_witness)

    lim = sub.add_parser("limit", help="filter limit of a sequence")
    lim.add_argument("--seq", required=True, help='sequence expression, e.g. "piecewise(squares, const(1), const(0))"')
    lim.add_argument("--candidate", type=float, help="limit to test (default: grid search)")
    lim.add_argument("--ideal", default="st")
    lim.add_argument("--eps", type=_reals, default=[0.5, 0.1, 0.01])
    lim.add_argument("--horizon", type=_natural, default=10 ** 6)
    lim.add_argument("--checkpoints", type=_checkpoints)
    lim.add_argument("--threshold", type=float, default=0.01)
    lim.add_argument("--grid", type=float, default=0.01)
    lim.add_argument("--blocks", action="append", metavar="NAME=PATH")
    lim.set_defaults(func=cmd_limit)

    s = sub.add_parser("slln", help="Cesàro means of fair coin flips")
    s.add_argument("--n", type=_natural, required=True)
    s.add_argument("--trials", type=_natural, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_slln)

    u = sub.add_parser("ultralab", help="finite-universe filter checks")
    usub = u.add_subparsers(dest="mode", required=True)
    sw = usub.add_parser("sweep", help="exhaustive theorem sweep")
    sw.add_argument("--n", type=int, required=True)
    sw.add_argument("--theorem", default="all", choices=sorted(THEOREMS) + ["all"])
    sw.add_argument("--seed", type=int, default=0)
    ck = usub.add_parser("check", help="inspect one collection of principal ultrafilters")
    ck.add_argument("--n", type=int, required=True)
    ck.add_argument("--points", type=lambda t: [int(x) for x in t.split(",")], required=True)
    u.set_defaults(func=cmd_ultralab)
    return p


def _emit(doc: dict, output: Optional[str]):
    text = json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _config(args)
    try:
        cap = horizon_cap()
        payload, summary, code = args.func(args, cap)
    except (CapExceeded, NumericError, HorizonError, OverflowError) as exc:
        print(f"filterlab: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ParseError, MismatchedIdeal, ValueError) as exc:
        print(f"filterlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = {"config": config.to_dict(), "version": __version__, **payload}
    _emit(doc, args.output)
    print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
