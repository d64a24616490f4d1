"""Multi-flow allocation: the sequential update loop and estimator wrappers.

Flows are routed one at a time in id order. Each flow sees the current paths
of every other flow, recomputes link rates and weights, picks a path, and the
allocation is updated before the next flow moves. Repeating the sweep for a
few rounds lets early flows react to later ones.

The estimators follow the scikit-learn conventions::

    router = RRORouter(lam=0.1).fit(graph, flows, imap)
    router.allocation_, router.predict()
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .interference import InterferenceMap, compute_link_rate_table, rate_to_weights
from .routing import RoutingResult, evaluate, ima_route, ospf_route, rga_route, rro_route
from .simulator import analytic_flow_rates
from .topology import NoPathError, PathAllocation
from .validation import check_flows, check_graph, check_imap, check_lambda

ALGORITHMS = ("RRO", "IMA", "OSPF", "RGA")


class AllocationError(NoPathError):
    """A flow could not be routed; carries the flow id and round."""

    def __init__(self, flow, round_, cause: NoPathError):
        self.flow = flow
        self.round = round_
        super().__init__(cause.source, cause.destination,
                         f"flow {flow}, round {round_}: {cause}")


@dataclass(frozen=True)
class TraceEntry:
    round: int
    flow: int
    result: RoutingResult
    weights: np.ndarray = field(repr=False, compare=False)


@dataclass
class AllocationTrace:
    rounds: list = field(default_factory=list)
    converged: bool = False

    def entries(self):
        for r in self.rounds:
            yield from r

    def paths(self, round_index):
        return [e.result.path for e in self.rounds[round_index]]


def flow_rate_table(graph, imap, allocation, flow_id, share_aware=True):
    """Rate ``flow_id`` could get on each link given the other flows' paths.

    With ``share_aware`` the SINR rate is split with the flows already routed
    over the link, matching how :func:`analytic_flow_rates` scores paths.
    """
    rates = compute_link_rate_table(graph, imap, allocation, flow_id)
    if share_aware:
        rates = rates / (1.0 + allocation.link_usage(graph.num_links, exclude=flow_id))
    return rates


def route_flow(graph, imap, allocation, flow, algorithm, *, K=10, seed=0, share_aware=True):
    """Route one flow against ``allocation`` (its own entry is ignored).

    Returns the result scored under the flow's weight table, and that table.
    """
    others = allocation.excluding(flow.id)
    weights = rate_to_weights(flow_rate_table(graph, imap, others, flow.id, share_aware))
    s, d, lam = flow.source, flow.destination, flow.lam
    if algorithm == "RRO":
        result = rro_route(graph, weights, s, d, lam)
    elif algorithm == "OSPF":
        result = evaluate(ospf_route(graph, s, d), weights, lam)
    elif algorithm == "IMA":
        result = evaluate(ima_route(graph, imap, others, s, d), weights, lam)
    elif algorithm == "RGA":
        # same walks every round; later rounds re-score them under new weights
        rng = np.random.default_rng([int(seed), int(flow.id)])
        result = rga_route(graph, weights, others, s, d, lam, K=K, seed=rng)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    return result, weights


def allocate_all(graph, imap, flows, algorithm="RRO", rounds=3, seed=0, K=10, share_aware=True):
    """Sequentially route every flow for up to ``rounds`` sweeps.

    Stops early once a full sweep leaves every path unchanged; the trace then
    reports ``converged``. Returns ``(allocation, trace)``.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    allocation = PathAllocation(len(flows))
    trace = AllocationTrace()
    for r in range(1, rounds + 1):
        changed = False
        entries = []
        for flow in flows:
            try:
                result, weights = route_flow(graph, imap, allocation, flow, algorithm,
                                             K=K, seed=seed, share_aware=share_aware)
            except NoPathError as exc:
                raise AllocationError(flow.id, r, exc) from exc
            if allocation[flow.id] != result.path:
                changed = True
            allocation[flow.id] = result.path
            entries.append(TraceEntry(r, flow.id, result, weights))
        trace.rounds.append(entries)
        if not changed:
            trace.converged = True
            break
    return allocation, trace


class BaseRouter(BaseEstimator):
    """Shared ``fit``/``predict`` plumbing; subclasses set ``algorithm``."""

    algorithm: str = ""

    def _flows(self, graph, flows):
        flows = check_flows(flows, graph)
        lam = getattr(self, "lam", None)
        if lam is not None:
            lam = check_lambda(lam)
            flows = [replace(f, lam=lam) for f in flows]
        return flows

    def fit(self, graph, flows, imap: InterferenceMap | None = None):
        graph = check_graph(graph)
        imap = check_imap(imap, graph)
        flows = self._flows(graph, flows)
        allocation, trace = allocate_all(
            graph, imap, flows, self.algorithm, rounds=self.rounds,
            seed=getattr(self, "seed", 0), K=getattr(self, "K", 10),
            share_aware=getattr(self, "share_aware", True),
        )
        self.graph_ = graph
        self.imap_ = imap
        self.flows_ = flows
        self.allocation_ = allocation
        self.trace_ = trace
        self.converged_ = trace.converged
        self.n_rounds_ = len(trace.rounds)
        return self

    def predict(self):
        """Selected path of every fitted flow."""
        check_is_fitted(self, "allocation_")
        return list(self.allocation_.paths)

    def fit_predict(self, graph, flows, imap=None):
        return self.fit(graph, flows, imap).predict()

    def flow_rates(self):
        """Bottleneck rate (bit/s) of each flow under the fitted allocation."""
        check_is_fitted(self, "allocation_")
        return analytic_flow_rates(self.graph_, self.imap_, self.allocation_)

    def score(self):
        """Mean flow rate in Mbps."""
        return float(np.mean(self.flow_rates()) / 1e6)


class RRORouter(BaseRouter):
    """Regularized bottleneck routing.

    ``lam`` overrides every flow's own regularization weight when set.
    ``share_aware=False`` builds weights from raw SINR rates only.
    """

    algorithm = "RRO"

    def __init__(self, lam=None, rounds=3, share_aware=True):
        self.lam = lam
        self.rounds = rounds
        self.share_aware = share_aware


class OSPFRouter(BaseRouter):
    algorithm = "OSPF"

    def __init__(self, rounds=3):
        self.rounds = rounds


class IMARouter(BaseRouter):
    algorithm = "IMA"

    def __init__(self, rounds=3):
        self.rounds = rounds


class RGARouter(BaseRouter):
    algorithm = "RGA"

    def __init__(self, lam=None, K=10, rounds=3, seed=0, share_aware=True):
        self.lam = lam
        self.K = K
        self.rounds = rounds
        self.seed = seed
        self.share_aware = share_aware


ROUTERS = {"RRO": RRORouter, "IMA": IMARouter, "OSPF": OSPFRouter, "RGA": RGARouter}


def make_router(algorithm, **params) -> BaseRouter:
    try:
        cls = ROUTERS[algorithm.upper()]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}") from None
    return cls(**{k: v for k, v in params.items() if k in cls._get_param_names()})
