"""Reference computations that share no code with the routers under test."""

import itertools
import math
from collections import deque

import networkx as nx
import numpy as np


def bfs_hops(graph, source, destination):
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v, _ in graph.adjacency[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist.get(destination, math.inf)


def widest_path_value(graph, weights, source, destination):
    """Smallest threshold t such that links with weight <= t connect source to destination."""
    thresholds = sorted(set(float(w) for w in weights))
    lo, hi = 0, len(thresholds) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _reachable_under(graph, weights, source, destination, thresholds[mid]):
            hi = mid
        else:
            lo = mid + 1
    return thresholds[lo]


def _reachable_under(graph, weights, source, destination, t):
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if u == destination:
            return True
        for v, link in graph.adjacency[u]:
            if weights[link] <= t and v not in seen:
                seen.add(v)
                queue.append(v)
    return False


def to_digraph(graph):
    g = nx.DiGraph()
    g.add_nodes_from(range(graph.num_nodes))
    for link, (u, v) in enumerate(zip(graph.tails.tolist(), graph.heads.tolist())):
        g.add_edge(u, v, link=link)
    return g


def simple_paths(graph, source, destination):
    """Every simple path as a list of link ids, via networkx enumeration."""
    g = to_digraph(graph)
    for nodes in nx.all_simple_paths(g, source, destination):
        yield [g[u][v]["link"] for u, v in zip(nodes, nodes[1:])]


def enumerate_objective(graph, weights, source, destination, lam):
    """Minimum of max-weight + lam*hops over all simple paths (plain arithmetic)."""
    best = math.inf
    for links in simple_paths(graph, source, destination):
        best = min(best, max(weights[l] for l in links) + lam * len(links))
    return best


def direct_interference(gain_dense, paths, link):
    """Per-flow double sum of gains at ``link``'s receiver."""
    total = 0.0
    for path_links in paths:
        for tx in path_links:
            if tx != link:
                total += gain_dense[link][tx]
    return total


def random_instance(seed, n_range=(4, 10)):
    """Random connected graph, weights in [0, 1) and an endpoint pair."""
    from netopt.topology import random_topology

    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(n - 1, n * (n - 1) // 2 + 1))
    graph = random_topology(n, m, seed=seed)
    weights = rng.uniform(0.0, 1.0, graph.num_links)
    s, d = (int(x) for x in rng.choice(n, size=2, replace=False))
    return graph, weights, s, d


def all_pairs(n):
    return [(s, d) for s, d in itertools.permutations(range(n), 2)]
