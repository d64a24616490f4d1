"""Single-flow route computation: regularized bottleneck search and baselines.

All routers share one tie-breaking rule: the frontier pops the smallest label,
then the smallest node index, and a label is only replaced by a strictly
better one.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .interference import InterferenceMap
from .topology import NetworkGraph, NoPathError, Path, PathAllocation

BRUTE_FORCE_MAX_NODES = 12


@dataclass(frozen=True)
class RoutingResult:
    """A routed path and its scores.

    ``cost`` is what the producing algorithm minimised (hops for OSPF, summed
    interference for IMA, the regularized objective for RRO and RGA).
    ``regularized_cost`` and ``bottleneck_weight`` are ``None`` when the result
    was produced without a weight table.
    """

    path: Path
    hop_count: int
    cost: float
    regularized_cost: float | None = None
    bottleneck_weight: float | None = None


@dataclass
class SearchStats:
    """Operation counters; set ``keep_labels`` to also capture the final labels.

    ``labels`` then maps every settled node to ``(d, m, h, predecessor)``.
    """

    extractions: int = 0
    edge_relaxations: int = 0
    keep_labels: bool = False
    labels: dict | None = None


def hop_cost(lam, hops):
    """``lam * hops`` accumulated one hop at a time, as the label search does."""
    h = 0.0
    for _ in range(hops):
        h = h + lam
    return h


def path_cost(path: Path, weights, lam):
    """Return ``(bottleneck, hops, regularized_cost)`` for ``path``.

    The bottleneck is the largest link weight; the regularized cost adds the
    hop penalty in the same order of operations as :func:`rro_route`, so the
    two agree to the last bit on identical paths.
    """
    n_links = len(weights)
    m = 0.0
    for link in path.links:
        if not 0 <= link < n_links:
            raise KeyError(f"path uses unknown link {link}")
        w = float(weights[link])
        m = m if m > w else w
    hops = len(path.links)
    return m, hops, m + hop_cost(lam, hops)


def _unfold(graph, pred, source, destination):
    nodes = [destination]
    links = []
    v = destination
    while v != source:
        u, link = pred[v]
        nodes.append(u)
        links.append(link)
        v = u
    nodes.reverse()
    links.reverse()
    return Path(tuple(nodes), tuple(links))


def _check_endpoints(graph, source, destination):
    for v in (source, destination):
        if not 0 <= v < graph.num_nodes:
            raise ValueError(f"unknown node {v}")
    if source == destination:
        raise ValueError(f"source equals destination ({source})")


def rro_route(graph: NetworkGraph, weights, source, destination, lam,
              stats: SearchStats | None = None) -> RoutingResult:
    """Regularized bottleneck route: minimise max link weight + ``lam`` * hops.

    Label-setting search keeping, per node, the regularized distance ``d``, the
    largest weight seen ``m`` and the hop penalty ``h``. A neighbour ``v`` of the
    settled node ``u`` is offered ``max(m(u), w(u, v)) + (h(u) + lam)``. Stops as
    soon as ``destination`` is extracted. Pass ``stats`` to count extractions
    and edge relaxations.
    """
    _check_endpoints(graph, source, destination)
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    w = weights.tolist() if isinstance(weights, np.ndarray) else list(weights)
    if len(w) != graph.num_links:
        raise ValueError(f"weight table has {len(w)} entries, graph has {graph.num_links} links")

    n = graph.num_nodes
    inf = math.inf
    d = [inf] * n
    m = [0.0] * n
    h = [0.0] * n
    pred: list = [None] * n
    settled = bytearray(n)
    adjacency = graph.adjacency
    d[source] = 0.0
    frontier = [(0.0, source)]
    extractions = relaxations = 0
    found = False

    while frontier:
        du, u = heapq.heappop(frontier)
        if settled[u] or du > d[u]:
            continue
        extractions += 1
        if u == destination:
            found = True
            break
        settled[u] = 1
        mu = m[u]
        hv = h[u] + lam
        for v, link in adjacency[u]:
            if settled[v]:
                continue
            relaxations += 1
            wl = w[link]
            mv = mu if mu > wl else wl
            dv = mv + hv
            if dv < d[v]:
                d[v] = dv
                m[v] = mv
                h[v] = hv
                pred[v] = (u, link)
                heapq.heappush(frontier, (dv, v))

    if stats is not None:
        stats.extractions += extractions
        stats.edge_relaxations += relaxations
        if stats.keep_labels:
            done = [v for v in range(n) if settled[v]] + ([destination] if found else [])
            stats.labels = {v: (d[v], m[v], h[v], pred[v][0] if pred[v] else None) for v in done}
    if not found:
        raise NoPathError(source, destination)
    path = _unfold(graph, pred, source, destination)
    return RoutingResult(path, path.hops, d[destination], d[destination], m[destination])


def relaxation_count(graph, weights, source, destination, lam):
    """Run :func:`rro_route` instrumented; return ``(extractions, edge_relaxations)``."""
    stats = SearchStats()
    rro_route(graph, weights, source, destination, lam, stats=stats)
    return stats.extractions, stats.edge_relaxations


def _additive_dijkstra(graph, link_cost, source, destination):
    """Dijkstra on ``(sum of link_cost, hops)`` compared lexicographically."""
    n = graph.num_nodes
    inf = (math.inf, 0)
    best = [inf] * n
    pred: list = [None] * n
    settled = bytearray(n)
    best[source] = (0.0, 0)
    frontier = [(0.0, 0, source)]
    while frontier:
        c, k, u = heapq.heappop(frontier)
        if settled[u] or (c, k) > best[u]:
            continue
        if u == destination:
            path = _unfold(graph, pred, source, destination)
            return path, c
        settled[u] = 1
        for v, link in graph.adjacency[u]:
            if settled[v]:
                continue
            cand = (c + link_cost[link], k + 1)
            if cand < best[v]:
                best[v] = cand
                pred[v] = (u, link)
                heapq.heappush(frontier, (cand[0], cand[1], v))
    raise NoPathError(source, destination)


def ospf_route(graph: NetworkGraph, source, destination) -> RoutingResult:
    """Fewest-hops route."""
    _check_endpoints(graph, source, destination)
    path, _ = _additive_dijkstra(graph, [0] * graph.num_links, source, destination)
    return RoutingResult(path, path.hops, float(path.hops))


def ima_route(graph: NetworkGraph, imap: InterferenceMap, allocation: PathAllocation,
              source, destination) -> RoutingResult:
    """Route minimising the summed interference absorbed along the path.

    Link cost is the interference at each link's receiver from ``allocation``
    (the other flows). Equal-interference candidates fall back to fewer hops.
    """
    _check_endpoints(graph, source, destination)
    costs = imap.interference(allocation.link_usage(graph.num_links)).tolist()
    path, total = _additive_dijkstra(graph, costs, source, destination)
    return RoutingResult(path, path.hops, total)


def _random_simple_path(graph, source, destination, rng, budget):
    """Loop-erased random walk from ``source``; ``None`` if the budget runs out."""
    adjacency = graph.adjacency
    nodes = [source]
    links = []
    position = {source: 0}
    steps = 0
    while steps < budget:
        u = nodes[-1]
        out = adjacency[u]
        if not out:
            nodes, links, position = [source], [], {source: 0}
            steps += 1
            continue
        v, link = out[int(rng.integers(len(out)))]
        steps += 1
        if v in position:
            cut = position[v]
            for x in nodes[cut + 1:]:
                del position[x]
            del nodes[cut + 1:]
            del links[cut:]
            continue
        position[v] = len(nodes)
        nodes.append(v)
        links.append(link)
        if v == destination:
            return Path(tuple(nodes), tuple(links))
    return None


def rga_route(graph: NetworkGraph, weights, allocation, source, destination, lam,
              K=10, seed=None) -> RoutingResult:
    """Best of ``K`` random simple paths under the regularized objective.

    ``allocation`` is accepted for interface symmetry with the other routers;
    its influence arrives through ``weights``. Each trial gets ``50 * |V|``
    walk steps.
    """
    _check_endpoints(graph, source, destination)
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    budget = 50 * graph.num_nodes
    best = None
    for _ in range(K):
        path = _random_simple_path(graph, source, destination, rng, budget)
        if path is None:
            continue
        m, hops, cost = path_cost(path, weights, lam)
        if best is None or cost < best.cost:
            best = RoutingResult(path, hops, cost, cost, m)
    if best is None:
        raise NoPathError(source, destination,
                          f"no path from node {source} to node {destination} in {K} random trials")
    return best


def brute_force_rmep(graph: NetworkGraph, weights, source, destination, lam) -> RoutingResult:
    """Exhaustive minimum of the regularized objective over all simple paths.

    Refuses graphs with more than 12 nodes.
    """
    if graph.num_nodes > BRUTE_FORCE_MAX_NODES:
        raise ValueError(
            f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, graph has {graph.num_nodes}"
        )
    _check_endpoints(graph, source, destination)
    best = None
    on_path = [False] * graph.num_nodes
    on_path[source] = True
    nodes = [source]
    links: list[int] = []
    stack = [iter(graph.adjacency[source])]
    while stack:
        step = next(stack[-1], None)
        if step is None:
            stack.pop()
            on_path[nodes.pop()] = False
            if links:
                links.pop()
            continue
        v, link = step
        if on_path[v]:
            continue
        if v == destination:
            path = Path(tuple(nodes) + (v,), tuple(links) + (link,))
            m, hops, cost = path_cost(path, weights, lam)
            if best is None or cost < best.cost:
                best = RoutingResult(path, hops, cost, cost, m)
            continue
        on_path[v] = True
        nodes.append(v)
        links.append(link)
        stack.append(iter(graph.adjacency[v]))
    if best is None:
        raise NoPathError(source, destination)
    return best


def evaluate(result: RoutingResult, weights, lam) -> RoutingResult:
    """Attach the regularized score under ``weights`` to any router's result."""
    m, hops, cost = path_cost(result.path, weights, lam)
    return RoutingResult(result.path, hops, result.cost, cost, m)
