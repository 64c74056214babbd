"""Command-line interface.

Verbs: ``validate``, ``infer``, ``gen``, ``compress``, ``bench``.
Exit codes: 0 on success, 1 on usage errors (bad flags, unknown names,
malformed or invalid networks), 2 on inference errors such as evidence with
probability zero.
"""

from __future__ import annotations

import argparse
import sys

from .bench import run_campaign
from .engine_cve import cve_query
from .engine_tve import tve_query
from .engine_ve import ve_query
from .errors import CtxveError, ZeroEvidenceError
from .bench import enum_query
from .network import load, save
from .orders import min_size_order
from .structure import (
    CompressionConfig,
    GenConfig,
    compress_network,
    generate_biased_cbn,
    generate_random_cbn,
)

USAGE_ERROR = 1
INFERENCE_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxve",
        description="Exact inference for discrete belief networks with "
        "context-specific independence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network file")
    p.add_argument("network")

    p = sub.add_parser("infer", help="compute a posterior")
    p.add_argument("network")
    p.add_argument("--query", required=True, help="comma-separated variable names")
    p.add_argument("--evidence", default="", help="A=val,B=val")
    p.add_argument(
        "--engine", default="cve", choices=["ve", "cve", "tve", "enum"]
    )
    p.add_argument("--order", default=None, help="comma-separated elimination order")
    p.add_argument(
        "--heuristic",
        default="min-size",
        choices=["min-size"],
        help="order heuristic when --order is not given",
    )
    p.add_argument("--stats", action="store_true", help="print cost counters to stderr")
    p.add_argument(
        "--audit", action="store_true", help="check engine invariants while running"
    )

    p = sub.add_parser("gen", help="generate a random contextual network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--biased", action="store_true")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("compress", help="compress tabular families into confactors")
    p.add_argument("network")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--accept-ratio", type=float, default=0.51)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--report", default=None)

    p = sub.add_parser("bench", help="run a benchmark campaign")
    p.add_argument("networks", nargs="+")
    p.add_argument("--queries-per-net", type=int, default=1)
    p.add_argument("--obs-counts", default="0,5,10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engines", default="ve,cve,tve")
    p.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    return parser


def _cmd_validate(args) -> int:
    net = load(args.network, force=True)
    violations = net.validate()
    if violations:
        for line in violations:
            print(line, file=sys.stderr)
        return USAGE_ERROR
    print("OK")
    return 0


def _cmd_infer(args) -> int:
    net = load(args.network)
    cat = net.catalog
    query = [cat.index(name.strip()) for name in args.query.split(",") if name.strip()]
    if not query:
        raise ValueError("empty query")
    obs = cat.parse_context(args.evidence)
    overlap = set(query) & set(obs.vars())
    if overlap:
        names = [cat.names[v] for v in sorted(overlap)]
        raise ValueError(f"query variables are observed: {names}")
    order = None
    if args.order:
        order = [cat.index(name.strip()) for name in args.order.split(",")]
    if args.engine == "enum":
        posterior = enum_query(net, query, obs)
        counters = None
    elif args.engine == "ve":
        posterior, counters = ve_query(net, query, obs, order)
    elif args.engine == "tve":
        posterior, counters = tve_query(net, query, obs, order)
    else:
        posterior, counters = cve_query(net, query, obs, order, audit=args.audit)
    for line in posterior.lines():
        print(line)
    if args.stats and counters is not None:
        used_order = order if order is not None else min_size_order(net, query, obs)
        print(
            "order=" + ",".join(cat.names[v] for v in used_order),
            file=sys.stderr,
        )
        print(
            f"mults={counters.multiplications} adds={counters.additions} "
            f"splits={counters.splits} max_table={counters.max_table_size} "
            f"max_elim={counters.max_elim_size}",
            file=sys.stderr,
        )
    return 0


def _cmd_gen(args) -> int:
    cfg = GenConfig(n=args.n, s=args.s, p=args.p, seed=args.seed, biased=args.biased)
    net = generate_biased_cbn(cfg) if args.biased else generate_random_cbn(cfg)
    save(net, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_compress(args) -> int:
    net = load(args.network)
    cfg = CompressionConfig(threshold=args.threshold, accept_ratio=args.accept_ratio)
    compressed, report = compress_network(net, cfg)
    save(compressed, args.output)
    lines = [
        f"{row['variable']}: {row['tabular_size']} -> {row['compressed_size']} "
        f"entries in {row['confactors']} confactors "
        f"(residual {row['residual']:.3g})"
        for row in report
    ]
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        for line in lines:
            print(line, file=sys.stderr)
    print(f"wrote {args.output}")
    return 0


def _cmd_bench(args) -> int:
    nets = [(path, load(path)) for path in args.networks]
    obs_counts = [int(x) for x in args.obs_counts.split(",") if x.strip()]
    engines = [x.strip() for x in args.engines.split(",") if x.strip()]
    _, csv = run_campaign(
        nets,
        queries_per_net=args.queries_per_net,
        obs_counts=obs_counts,
        seed=args.seed,
        engines=engines,
    )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(csv)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(csv)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "validate": _cmd_validate,
        "infer": _cmd_infer,
        "gen": _cmd_gen,
        "compress": _cmd_compress,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except ZeroEvidenceError as exc:
        print(f"inference error: {exc}", file=sys.stderr)
        return INFERENCE_ERROR
    except (CtxveError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
