"""Command line: ``imagestar verify`` and ``imagestar reach``.

Exit codes of ``verify``: 0 Robust, 1 NotRobust, 2 Unknown, 3 error.
``reach`` exits 0 on success and 3 on error.
"""

import argparse
import json
import logging
import os
import sys

from . import fileio
from .errors import ImageStarError
from .layers.base import Scheme
from .network import DEFAULT_BUDGET, reach
from .robustness import (
    Verdict,
    brightening_set,
    interpolation_set,
    output_ranges,
    verify_robustness,
    zonotope_brightening_set,
)

EXIT_CODES = {Verdict.ROBUST: 0, Verdict.NOT_ROBUST: 1, Verdict.UNKNOWN: 2}
EXIT_ERROR = 3

log = logging.getLogger("imagestar")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _common(p):
    p.add_argument("--network", required=True, metavar="PATH", help="network JSON file")
    p.add_argument("--image", required=True, metavar="PATH", help="image CSV file")
    p.add_argument("--attack", required=True, choices=["brightening", "interp", "zono"])
    p.add_argument("--d", type=float, help="brightening threshold")
    p.add_argument("--delta", type=float, help="brightening / zonotope bound in [0, 1]")
    p.add_argument("--pixel-max", default="255", help="top of the pixel scale, or 'pixel' for delta*x_i bounds")
    p.add_argument("--adv", metavar="PATH", help="adversarial image CSV (interp)")
    p.add_argument("--l", type=float, help="interpolation start fraction (interp)")
    p.add_argument("--delta-max", type=float, help="interpolation width (interp)")
    p.add_argument("--scheme", choices=["exact", "approx"], default="approx")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="cap on exact-scheme star count")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="REPORT.json")
    p.add_argument("--ranges", metavar="RANGES.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="imagestar", description="ImageStar reachability and robustness verification")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="prove or refute robustness of one classification")
    _common(v)
    v.add_argument("--target", required=True, help="label name or index that must stay on top")
    v.add_argument("--falsify-samples", type=int, default=0, help="random simulations when the result is Unknown")
    v.add_argument("--counterexamples", type=int, default=5, help="how many counterexamples to extract")
    r = sub.add_parser("reach", help="compute and summarise the output reachable set")
    _common(r)
    return parser


def _attack(args, image):
    kind = args.attack
    meta = {"kind": kind}
    if kind == "brightening":
        if args.d is None or args.delta is None:
            raise _UsageError("--attack brightening needs --d and --delta")
        pixel_max = None if args.pixel_max == "pixel" else float(args.pixel_max)
        meta.update(d=args.d, delta=args.delta, pixel_max=pixel_max)
        s = brightening_set(image, args.d, args.delta, pixel_max)
    elif kind == "interp":
        if args.adv is None or args.l is None or args.delta_max is None:
            raise _UsageError("--attack interp needs --adv, --l and --delta-max")
        adv = fileio.load_image(args.adv)
        meta.update(adv=args.adv, l=args.l, delta_max=args.delta_max)
        s = interpolation_set(image, adv, args.l, args.delta_max)
    else:
        if args.delta is None:
            raise _UsageError("--attack zono needs --delta")
        meta.update(delta=args.delta)
        s = zonotope_brightening_set(image, args.delta)
    meta["predicate_variables"] = s.n_vars
    return s, meta


class _UsageError(Exception):
    pass


def _target_index(net, target):
    if target in net.labels:
        return net.labels.index(target)
    try:
        idx = int(target)
    except ValueError:
        raise _UsageError(f"unknown target label {target!r}") from None
    if not 0 <= idx < net.n_outputs:
        raise _UsageError(f"target index {idx} out of range 0..{net.n_outputs - 1}")
    return idx


def _ranges_block(net, sets):
    lo, hi = output_ranges(sets)
    return lo, hi, [
        {"label": name, "lo": float(a), "hi": float(b)} for name, a, b in zip(net.labels, lo, hi)
    ]


def _base_report(args, meta, stats, sets):
    return {
        "command": args.command,
        "scheme": args.scheme,
        "network": args.network,
        "image": args.image,
        "attack": meta,
        "n_output_sets": len(sets),
        "stars_per_layer": list(stats.stars_per_layer),
        "lp_calls": int(stats.lp_calls),
        "elapsed_seconds": float(stats.elapsed),
        "seed": args.seed,
    }


def _emit(args, report, net, lo, hi):
    if args.ranges:
        fileio.save_ranges(net.labels, lo, hi, args.ranges)
    if args.out:
        fileio.save_report(report, args.out)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))


def cmd_verify(args):
    net = fileio.load_network(args.network)
    image = fileio.load_image(args.image)
    target = _target_index(net, args.target)
    input_set, meta = _attack(args, image)
    res = verify_robustness(
        net,
        input_set,
        target,
        Scheme.parse(args.scheme),
        budget=args.budget,
        n_counterexamples=args.counterexamples,
        seed=args.seed,
        falsify_samples=args.falsify_samples,
        workers=args.workers,
    )
    lo, hi, ranges = _ranges_block(net, res.output_sets)
    code = EXIT_CODES[res.verdict]
    report = _base_report(args, meta, res.stats, res.output_sets)
    cex = []
    for n, c in enumerate(res.counterexamples):
        ref = None
        if args.out:
            stem = os.path.splitext(args.out)[0]
            path = f"{stem}_cex_{n}.csv"
            fileio.save_image(c.image, path)
            ref = os.path.basename(path)  # relative to the report's folder
        cex.append({"file": ref, "label": net.labels[c.label]})
    report.update(
        verdict=res.verdict.value,
        exit_code=code,
        target=target,
        target_label=net.labels[target],
        violating_label=None if res.violating_label is None else net.labels[res.violating_label],
        output_ranges=ranges,
        counterexamples=cex,
        rejected_counterexamples=res.rejected,
        falsify_samples=args.falsify_samples,
    )
    _emit(args, report, net, lo, hi)
    print(f"{res.verdict.value}", file=sys.stderr)
    return code


def cmd_reach(args):
    net = fileio.load_network(args.network)
    image = fileio.load_image(args.image)
    input_set, meta = _attack(args, image)
    res = reach(net, input_set, Scheme.parse(args.scheme), budget=args.budget, workers=args.workers)
    lo, hi, ranges = _ranges_block(net, res.output_sets)
    report = _base_report(args, meta, res.stats, res.output_sets)
    report["output_ranges"] = ranges
    _emit(args, report, net, lo, hi)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_reach(args)
    except (_UsageError, ImageStarError, OSError, ValueError) as exc:
        print(f"imagestar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
