"""Discrete-time packet simulator and flow-level metrics."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .interference import InterferenceMap, link_rate
from .topology import NetworkGraph, PathAllocation

DEFAULT_PACKET_SIZE = 1500 * 8
DEFAULT_DT = 1e-3
FAIRNESS_EPS = 1e-6


@dataclass(frozen=True)
class SimConfig:
    """Traffic and timing parameters of one simulation run.

    ``demands`` holds packets per step for each flow. ``arrival_model`` is
    ``"deterministic"`` (fractional carry) or ``"bernoulli"`` (the fractional
    part of each step's demand becomes a seeded coin flip).
    """

    horizon: int = 2000
    demands: tuple = ()
    packet_size: float = DEFAULT_PACKET_SIZE
    dt: float = DEFAULT_DT
    arrival_model: str = "deterministic"
    warmup: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.horizon > self.warmup >= 0:
            raise ValueError(f"need horizon > warmup >= 0, got {self.horizon}, {self.warmup}")
        if not self.packet_size > 0:
            raise ValueError("packet_size must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.arrival_model not in ("deterministic", "bernoulli"):
            raise ValueError(f"unknown arrival model {self.arrival_model!r}")
        if any(d < 0 for d in self.demands):
            raise ValueError("demands must be non-negative")


@dataclass
class SimReport:
    analytic_rates: list          # bits/s per flow
    throughput: list              # delivered bits/step per flow
    avg_delay: float              # steps, over delivered packets created after warmup
    fairness: float
    max_queue_series: list        # per-step maximum queue length over (node, flow)
    injected: list = field(default_factory=list)
    delivered: list = field(default_factory=list)
    in_queue: list = field(default_factory=list)
    flow_delay: list = field(default_factory=list)
    flow_min_delay: list = field(default_factory=list)

    def to_dict(self):
        out = asdict(self)
        out["avg_delay"] = None if math.isnan(self.avg_delay) else self.avg_delay
        out["flow_delay"] = [None if math.isnan(x) else x for x in self.flow_delay]
        out["flow_min_delay"] = [None if math.isinf(x) else x for x in self.flow_min_delay]
        return out

    def to_json(self):
        return json.dumps(self.to_dict())


def _per_flow_link_rates(graph, imap, allocation):
    """Rate each flow gets on each of its links: own-excluded rate over sharers."""
    paths = allocation.paths
    for n, p in enumerate(paths):
        if p is None:
            raise ValueError(f"flow {n} has no allocated path")
    usage = allocation.link_usage(graph.num_links)
    out = []
    for p in paths:
        own = np.zeros(graph.num_links)
        own[list(p.links)] += 1.0
        interference = imap.interference(usage - own)
        links = list(p.links)
        rates = link_rate(graph.bandwidth[links], graph.power[links], imap.sigma2,
                          interference[links])
        out.append(rates / usage[links])
    return out


def analytic_flow_rates(graph: NetworkGraph, imap: InterferenceMap,
                        allocation: PathAllocation) -> np.ndarray:
    """Bottleneck rate of each flow in bit/s.

    Each link's rate is computed with every other flow's interference active
    and then split equally among the flows routed over it.
    """
    shares = _per_flow_link_rates(graph, imap, allocation)
    return np.array([float(s.min()) for s in shares])


def fairness(rates) -> float:
    """Mean natural-log rate in Mbps, with zero rates clamped to 1e-6 Mbps."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise ValueError("fairness of an empty flow set is undefined")
    if np.any(rates < 0):
        raise ValueError("rates must be non-negative")
    return float(np.mean(np.log(np.maximum(rates / 1e6, FAIRNESS_EPS))))


def run_simulation(graph: NetworkGraph, imap: InterferenceMap, allocation: PathAllocation,
                   config: SimConfig) -> SimReport:
    """Drive every flow's packets along its path for ``config.horizon`` steps.

    Each step injects arrivals at sources, then every (link, flow) pair serves
    whole packets from its queue using accumulated service credit. Queues are
    served from the last hop backwards so a packet advances at most one hop per
    step. A packet created at step ``t`` and reaching its destination at the end
    of step ``t'`` records a delay of ``t' + 1 - t``.
    """
    num_flows = len(allocation)
    demands = list(config.demands) if config.demands else [0.0] * num_flows
    if len(demands) != num_flows:
        raise ValueError(f"{len(demands)} demands for {num_flows} flows")
    analytic = analytic_flow_rates(graph, imap, allocation) if num_flows else np.zeros(0)
    shares = _per_flow_link_rates(graph, imap, allocation) if num_flows else []
    quanta = [(s * config.dt / config.packet_size).tolist() for s in shares]

    rng = np.random.default_rng(config.seed)
    bernoulli = config.arrival_model == "bernoulli"
    queues = [[deque() for _ in p.links] for p in allocation.paths]
    credit = [[0.0] * len(p.links) for p in allocation.paths]
    arrival_carry = [0.0] * num_flows
    injected = [0] * num_flows
    delivered = [0] * num_flows
    delay_sum = [0] * num_flows
    delay_count = [0] * num_flows
    min_delay = [math.inf] * num_flows
    max_queue = np.zeros(config.horizon, dtype=np.int64)
    warmup = config.warmup

    for t in range(config.horizon):
        for n in range(num_flows):
            lam = demands[n]
            if lam <= 0:
                continue
            if bernoulli:
                whole = math.floor(lam)
                arrivals = whole + int(rng.random() < lam - whole)
            else:
                arrival_carry[n] += lam
                arrivals = math.floor(arrival_carry[n])
                arrival_carry[n] -= arrivals
            if arrivals:
                queues[n][0].extend([t] * arrivals)
                injected[n] += arrivals

        peak = 0
        for n in range(num_flows):
            qs = queues[n]
            cr = credit[n]
            qn = quanta[n]
            last = len(qs) - 1
            for j in range(last, -1, -1):
                q = qs[j]
                c = cr[j] + qn[j]
                serve = min(math.floor(c), len(q))
                c -= serve
                if serve:
                    if j == last:
                        for _ in range(serve):
                            born = q.popleft()
                            if born >= warmup:
                                delay = t + 1 - born
                                delay_sum[n] += delay
                                delay_count[n] += 1
                                if delay < min_delay[n]:
                                    min_delay[n] = delay
                        delivered[n] += serve
                    else:
                        nxt = qs[j + 1]
                        for _ in range(serve):
                            nxt.append(q.popleft())
                if not q:
                    c -= math.floor(c)
                cr[j] = c
            for q in qs:
                if len(q) > peak:
                    peak = len(q)
        max_queue[t] = peak

    total_count = sum(delay_count)
    avg_delay = sum(delay_sum) / total_count if total_count else math.nan
    flow_delay = [s / c if c else math.nan for s, c in zip(delay_sum, delay_count)]
    throughput = [d * config.packet_size / config.horizon for d in delivered]
    in_queue = [sum(len(q) for q in qs) for qs in queues]
    return SimReport(
        analytic_rates=analytic.tolist(),
        throughput=throughput,
        avg_delay=avg_delay,
        fairness=fairness(analytic) if num_flows else math.nan,
        max_queue_series=max_queue.tolist(),
        injected=injected,
        delivered=delivered,
        in_queue=in_queue,
        flow_delay=flow_delay,
        flow_min_delay=min_delay,
    )
