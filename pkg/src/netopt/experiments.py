"""Scenario orchestration: seeded draws, allocation, simulation, CSV output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .interference import DEFAULT_GAMMA, DEFAULT_P_INT, DEFAULT_SIGMA2, random_interference_map
from .routers import ALGORITHMS, allocate_all
from .simulator import SimConfig, run_simulation
from .topology import (
    DEFAULT_BANDWIDTH_RANGE,
    DEFAULT_POWER_RANGE,
    EMBEDDED_TOPOLOGIES,
    Flow,
    NetworkGraph,
    load_topology,
    random_topology,
)

logger = logging.getLogger(__name__)

METRICS = ("avg_data_rate", "avg_delay", "fairness")
DEFAULT_DEMAND_RANGE = (0.05, 0.35)


def load_class(num_flows, num_nodes):
    if num_flows <= 0.5 * num_nodes:
        return "lightly-loaded"
    if num_flows <= num_nodes:
        return "moderately-loaded"
    return "heavily-loaded"


def canonical_algorithms(algorithms):
    names = [a.upper() for a in algorithms]
    unknown = sorted(set(names) - set(ALGORITHMS))
    if unknown:
        raise ValueError(f"unknown algorithm(s) {unknown}; choose from {list(ALGORITHMS)}")
    return [a for a in ALGORITHMS if a in names]


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a scenario.

    ``topology`` is ``{"name": "nsfnet"}``, ``{"file": path}`` or
    ``{"random": {"nodes": V, "edges": E, "seed": s}}``. ``lam`` is a scalar or
    one value per flow. Demands are drawn per flow, uniformly from
    ``demand_range`` packets per step.
    """

    topology: dict = field(default_factory=lambda: {"name": "nsfnet"})
    flows: list = field(default_factory=lambda: [10])
    lam: float | list = 0.1
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    seed_count: int = 20
    base_seed: int = 0
    rounds: int = 3
    rga_k: int = 10
    share_aware: bool = True
    demand_range: tuple = DEFAULT_DEMAND_RANGE
    bandwidth_range: tuple = DEFAULT_BANDWIDTH_RANGE
    power_range: tuple = DEFAULT_POWER_RANGE
    gamma: float = DEFAULT_GAMMA
    p_int: float = DEFAULT_P_INT
    sigma2: float = DEFAULT_SIGMA2
    horizon: int = 2000
    warmup: int = 200
    packet_size: float = 1500 * 8
    dt: float = 1e-3
    arrival_model: str = "deterministic"
    mode: str = "centralized"
    n_jobs: int = 1

    def __post_init__(self):
        self.flows = [int(n) for n in (self.flows if isinstance(self.flows, (list, tuple)) else [self.flows])]
        self.algorithms = canonical_algorithms(self.algorithms)
        self.demand_range = tuple(float(x) for x in self.demand_range)
        self.bandwidth_range = tuple(float(x) for x in self.bandwidth_range)
        self.power_range = tuple(float(x) for x in self.power_range)
        problems = []
        if not self.flows or min(self.flows) < 1:
            problems.append("every flow count must be >= 1")
        if self.seed_count < 1:
            problems.append("seed_count must be >= 1")
        if self.rounds < 1:
            problems.append("rounds must be >= 1")
        if self.rga_k < 1:
            problems.append("rga_k must be >= 1")
        if not 0 <= self.demand_range[0] <= self.demand_range[1]:
            problems.append("demand_range must satisfy 0 <= low <= high")
        lams = self.lam if isinstance(self.lam, (list, tuple)) else [self.lam]
        if any(float(x) < 0 for x in lams):
            problems.append("lambda must be non-negative")
        if isinstance(self.lam, (list, tuple)) and len(self.lam) < max(self.flows, default=0):
            problems.append("per-flow lambda list shorter than the largest flow count")
        if self.mode not in ("centralized", "distributed"):
            problems.append("mode must be 'centralized' or 'distributed'")
        if sum(k in self.topology for k in ("name", "file", "random")) != 1:
            problems.append("topology needs exactly one of 'name', 'file', 'random'")
        elif "name" in self.topology and self.topology["name"].lower() not in EMBEDDED_TOPOLOGIES:
            problems.append(f"unknown embedded topology {self.topology['name']!r}")
        if problems:
            raise ValueError("invalid experiment config: " + "; ".join(problems))
        # Raises on horizon/warmup/packet problems.
        self.sim_config(())

    @classmethod
    def from_dict(cls, data):
        data = dict(data.get("config", data))
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        seeds = data.pop("seeds", None)
        if seeds is not None:
            data.setdefault("seed_count", seeds.get("count", 20))
            data.setdefault("base_seed", seeds.get("base", 0))
        sim = data.pop("sim", None)
        if sim:
            for key in ("horizon", "warmup", "packet_size", "dt", "arrival_model"):
                if key in sim:
                    data.setdefault(key, sim[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        return cls.from_dict(json.loads(FsPath(path).read_text()))

    def to_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        for key in ("demand_range", "bandwidth_range", "power_range"):
            out[key] = list(out[key])
        return out

    def lam_for(self, flow_id):
        return float(self.lam[flow_id]) if isinstance(self.lam, (list, tuple)) else float(self.lam)

    def sim_config(self, demands, seed=0):
        return SimConfig(horizon=self.horizon, demands=tuple(demands), packet_size=self.packet_size,
                         dt=self.dt, arrival_model=self.arrival_model, warmup=self.warmup,
                         seed=seed)

    def base_graph(self) -> NetworkGraph:
        topo = self.topology
        if "random" in topo:
            r = topo["random"]
            return random_topology(r["nodes"], r["edges"], r.get("seed", 0),
                                   self.bandwidth_range, self.power_range)
        if "name" in topo:
            return load_topology(topo["name"], 0, self.bandwidth_range, self.power_range)
        return load_topology(topo["file"])


@dataclass
class Instance:
    """One seeded draw: link parameters, interference map, flows, sim seed."""

    graph: NetworkGraph
    imap: object
    flows: list
    sim_seed: int
    seed_key: list


def sample_pairs(rng, num_nodes, n):
    """Distinct ordered (s, d) pairs, without replacement while enough exist."""
    total = num_nodes * (num_nodes - 1)
    if n <= total:
        picks = rng.choice(total, size=n, replace=False)
    else:
        picks = rng.integers(total, size=n)
    pairs = []
    for k in picks.tolist():
        s, r = divmod(k, num_nodes - 1)
        pairs.append((s, r if r < s else r + 1))
    return pairs


def draw_instance(config: ExperimentConfig, base_graph: NetworkGraph, num_flows, seed_index):
    """Draw the random quantities of run ``seed_index`` for ``num_flows`` flows.

    The keyed seed ``[base_seed, num_flows, seed_index]`` fully determines the draw.
    """
    key = [int(config.base_seed), int(num_flows), int(seed_index)]
    rng = np.random.default_rng(key)
    if "file" in config.topology:
        graph = base_graph
    else:
        graph = base_graph.with_random_params(rng, config.bandwidth_range, config.power_range)
    imap = random_interference_map(graph, rng, config.gamma, config.p_int, config.sigma2)
    pairs = sample_pairs(rng, graph.num_nodes, num_flows)
    lo, hi = config.demand_range
    demands = rng.uniform(lo, hi, size=num_flows).tolist()
    flows = [Flow(i, s, d, config.lam_for(i), demands[i]) for i, (s, d) in enumerate(pairs)]
    sim_seed = int(rng.integers(2**31))
    return Instance(graph, imap, flows, sim_seed, key)


def evaluate_instance(config: ExperimentConfig, inst: Instance, algorithm):
    allocation, trace = allocate_all(inst.graph, inst.imap, inst.flows, algorithm,
                                     rounds=config.rounds, seed=inst.sim_seed, K=config.rga_k,
                                     share_aware=config.share_aware)
    sim = config.sim_config([f.demand for f in inst.flows], inst.sim_seed)
    report = run_simulation(inst.graph, inst.imap, allocation, sim)
    rates = np.asarray(report.analytic_rates)
    return {
        "avg_data_rate": float(np.mean(rates) / 1e6),
        "avg_delay": report.avg_delay,
        "fairness": report.fairness,
        "final_max_queue": report.max_queue_series[-1],
        "rounds": len(trace.rounds),
        "converged": trace.converged,
        "report": report,
        "allocation": allocation,
    }


def _run_one(args):
    config, num_flows, seed_index = args
    base = config.base_graph()
    inst = draw_instance(config, base, num_flows, seed_index)
    out = {}
    for alg in config.algorithms:
        res = evaluate_instance(config, inst, alg)
        out[alg] = {k: res[k] for k in ("avg_data_rate", "avg_delay", "fairness",
                                        "final_max_queue", "rounds", "converged")}
    return num_flows, seed_index, inst.seed_key, out


def _mean(values):
    finite = [v for v in values if not math.isnan(v)]
    return sum(finite) / len(finite) if finite else math.nan


def _fmt(x):
    return "nan" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def metric_csv(table, algorithms, metric):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["flows", *algorithms])
    for n in sorted(table):
        writer.writerow([n, *(_fmt(table[n][a][metric]) for a in algorithms)])
    return buf.getvalue()


def run_scenario(config: ExperimentConfig, out_dir=None):
    """Run every (flow count, seed, algorithm) combination and average over seeds.

    Returns ``{"tables": {metric: csv_text}, "means": ..., "runs": ..., "manifest": ...}``
    and, when ``out_dir`` is given, writes one CSV per metric, ``runs.json`` and
    ``manifest.json`` there.
    """
    base = config.base_graph()
    jobs = [(config, n, i) for n in config.flows for i in range(config.seed_count)]
    logger.info("%s scenario: %d runs on %d nodes", config.mode, len(jobs), base.num_nodes)
    if config.n_jobs > 1:
        with ProcessPoolExecutor(config.n_jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    runs = []
    per = {}
    for n, i, key, out in results:
        runs.append({"flows": n, "seed_index": i, "seed_key": key, "results": out})
        for alg, vals in out.items():
            per.setdefault(n, {}).setdefault(alg, []).append(vals)
    means = {
        n: {alg: {m: _mean([v[m] for v in vals]) for m in METRICS} for alg, vals in algs.items()}
        for n, algs in per.items()
    }
    tables = {m: metric_csv(means, config.algorithms, m) for m in METRICS}
    manifest = {
        "config": config.to_dict(),
        "graph": {"nodes": base.num_nodes, "edges": base.num_edges, "links": base.num_links},
        "load_classes": {str(n): load_class(n, base.num_nodes) for n in config.flows},
        "runs": [{"flows": r["flows"], "seed_index": r["seed_index"], "seed_key": r["seed_key"]}
                 for r in runs],
        "csv_columns": ["flows", *config.algorithms],
    }
    if out_dir is not None:
        out = FsPath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for m, text in tables.items():
            (out / f"{m}.csv").write_text(text)
        (out / "runs.json").write_text(json.dumps(runs, indent=1))
        (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return {"tables": tables, "means": means, "runs": runs, "manifest": manifest}


def queue_study(config: ExperimentConfig, num_flows, out_dir=None, seed_index=0):
    """Per-step maximum queue length for each algorithm on one seeded draw.

    Returns the CSV text (``time_step`` then one column per algorithm) and the
    raw series keyed by algorithm.
    """
    base = config.base_graph()
    inst = draw_instance(config, base, num_flows, seed_index)
    series = {}
    for alg in config.algorithms:
        series[alg] = evaluate_instance(config, inst, alg)["report"].max_queue_series
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time_step", *config.algorithms])
    for t in range(config.horizon):
        writer.writerow([t, *(series[a][t] for a in config.algorithms)])
    text = buf.getvalue()
    if out_dir is not None:
        out = FsPath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"max_queue_N{num_flows}.csv").write_text(text)
        manifest = {"config": config.to_dict(), "flows": num_flows, "seed_index": seed_index,
                    "seed_key": inst.seed_key}
        (out / f"max_queue_N{num_flows}_manifest.json").write_text(json.dumps(manifest, indent=1))
    return text, series
