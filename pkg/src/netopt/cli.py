"""``netopt`` command line.

Exit codes: 0 success, 1 invalid input, 2 a flow has no path.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .experiments import ExperimentConfig, queue_study, run_scenario
from .interference import load_interference_map, random_interference_map
from .routers import make_router
from .simulator import fairness
from .topology import NoPathError, TopologyError, load_flows, load_topology, random_topology

EXIT_OK, EXIT_INVALID, EXIT_NO_PATH = 0, 1, 2


def _cmd_run(args):
    config = ExperimentConfig.from_file(args.config)
    if args.jobs:
        config.n_jobs = args.jobs
    result = run_scenario(config, args.out)
    for metric, text in result["tables"].items():
        print(f"# {metric}")
        print(text, end="")
    return EXIT_OK


def _cmd_queues(args):
    config = ExperimentConfig.from_file(args.config)
    text, _ = queue_study(config, args.flows, args.out)
    if args.out is None:
        print(text, end="")
    return EXIT_OK


def _cmd_route(args):
    graph = load_topology(args.topology)
    flows = load_flows(args.flows)
    if args.imap:
        imap = load_interference_map(args.imap, graph)
    else:
        imap = random_interference_map(graph, np.random.default_rng(args.seed))
    router = make_router(args.algo, lam=args.lam, rounds=args.rounds, seed=args.seed)
    router.fit(graph, flows, imap)
    rates = router.flow_rates()
    out = {
        "algorithm": router.algorithm,
        "params": router.get_params(),
        "rounds_run": router.n_rounds_,
        "converged": router.converged_,
        "flows": [
            {
                "id": f.id,
                "src": f.source,
                "dst": f.destination,
                "lambda": f.lam,
                "path": list(p.nodes),
                "hops": p.hops,
                "rate_bps": float(r),
            }
            for f, p, r in zip(router.flows_, router.predict(), rates)
        ],
        "avg_rate_mbps": float(np.mean(rates) / 1e6),
        "fairness": fairness(rates),
    }
    json.dump(out, sys.stdout, indent=1)
    print()
    return EXIT_OK


def _cmd_gen(args):
    graph = random_topology(args.nodes, args.edges, args.seed)
    text = graph.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="netopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write per-metric CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="results")
    p.add_argument("--jobs", type=int, default=0, help="parallel seed workers")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("route", help="allocate paths for a flow file, JSON to stdout")
    p.add_argument("--topology", required=True, help="topology file or embedded name")
    p.add_argument("--flows", required=True)
    p.add_argument("--algo", default="rro", choices=["rro", "ima", "ospf", "rga"])
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="override every flow's lambda")
    p.add_argument("--imap", help="interference map file (default: random map from --seed)")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_route)

    p = sub.add_parser("queues", help="max-queue time series per algorithm")
    p.add_argument("--config", required=True)
    p.add_argument("--flows", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_queues)

    p = sub.add_parser("gen", help="generate a random connected topology")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NoPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except (TopologyError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
