"""Network graphs, flows, paths and topology sources.

A :class:`NetworkGraph` holds directed links. Every undirected edge read from a
file or produced by a generator becomes two links, ``2k`` for ``(u, v)`` and
``2k + 1`` for ``(v, u)``, which share a bandwidth but carry independent
received powers.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np

DEFAULT_BANDWIDTH_RANGE = (5e6, 20e6)
DEFAULT_POWER_RANGE = (0.05, 0.2)

# Standard 14-node / 21-edge NSFNET backbone.
NSFNET_EDGES = (
    (0, 1), (0, 2), (0, 3), (1, 2), (1, 7), (2, 5), (3, 4), (3, 8), (4, 5),
    (4, 6), (5, 12), (5, 13), (6, 7), (7, 10), (8, 9), (8, 11), (9, 10),
    (9, 12), (10, 11), (10, 13), (11, 12),
)

# Standard 24-node / 37-edge GEANT2 backbone.
GEANT2_EDGES = (
    (0, 1), (0, 2), (1, 3), (1, 6), (1, 9), (2, 3), (2, 4), (3, 5), (3, 6),
    (4, 7), (5, 8), (6, 8), (6, 11), (7, 8), (7, 11), (8, 11), (8, 12),
    (8, 17), (8, 18), (8, 20), (9, 10), (9, 12), (9, 13), (10, 13), (11, 14),
    (11, 20), (12, 13), (12, 19), (12, 21), (14, 15), (15, 16), (16, 17),
    (17, 18), (18, 21), (19, 23), (21, 22), (22, 23),
)

EMBEDDED_TOPOLOGIES = {
    "nsfnet": (14, NSFNET_EDGES),
    "geant2": (24, GEANT2_EDGES),
}


class TopologyError(ValueError):
    """Raised for malformed, disconnected or otherwise invalid topologies."""


class NoPathError(RuntimeError):
    """Raised when a destination cannot be reached from a source."""

    def __init__(self, source, destination, message=None):
        self.source = source
        self.destination = destination
        super().__init__(message or f"no path from node {source} to node {destination}")


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Immutable directed graph with per-link bandwidth (Hz) and received power (W).

    Build instances with :meth:`from_edges`; the constructor trusts its inputs.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    tails: np.ndarray
    heads: np.ndarray
    bandwidth: np.ndarray
    power: np.ndarray
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)
    link_index: dict = field(repr=False)

    @classmethod
    def from_edges(cls, num_nodes, edges, bandwidth_hz, power_uv, power_vu):
        """Build a graph from undirected edges, adding both directions of each.

        ``bandwidth_hz``, ``power_uv`` and ``power_vu`` are per undirected edge.
        Raises :class:`TopologyError` on self-loops, duplicates, unknown nodes,
        non-positive parameters or a disconnected node set.
        """
        num_nodes = int(num_nodes)
        if num_nodes < 1:
            raise TopologyError(f"graph needs at least one node, got {num_nodes}")
        edges = tuple((int(u), int(v)) for u, v in edges)
        bandwidth_hz = np.asarray(bandwidth_hz, dtype=float)
        power_uv = np.asarray(power_uv, dtype=float)
        power_vu = np.asarray(power_vu, dtype=float)
        m = len(edges)
        for name, arr in (("bandwidth_hz", bandwidth_hz), ("power_w_uv", power_uv),
                          ("power_w_vu", power_vu)):
            if arr.shape != (m,):
                raise TopologyError(f"{name} must have one entry per edge ({m}), got shape {arr.shape}")

        seen = set()
        for k, (u, v) in enumerate(edges):
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise TopologyError(f"edge {k} ({u}, {v}) references a node outside [0, {num_nodes})")
            if u == v:
                raise TopologyError(f"edge {k} ({u}, {v}) is a self-loop")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise TopologyError(f"edge {k} ({u}, {v}) duplicates an earlier edge")
            seen.add(key)
            for name, arr in (("bandwidth_hz", bandwidth_hz), ("power_w_uv", power_uv),
                              ("power_w_vu", power_vu)):
                if not (np.isfinite(arr[k]) and arr[k] > 0):
                    raise TopologyError(f"edge {k} ({u}, {v}) has non-positive {name}={arr[k]}")

        tails = np.empty(2 * m, dtype=np.int64)
        heads = np.empty(2 * m, dtype=np.int64)
        tails[0::2] = [u for u, _ in edges]
        heads[0::2] = [v for _, v in edges]
        tails[1::2] = heads[0::2]
        heads[1::2] = tails[0::2]
        bandwidth = np.repeat(bandwidth_hz, 2)
        power = np.empty(2 * m)
        power[0::2] = power_uv
        power[1::2] = power_vu

        adj: list[list[tuple[int, int]]] = [[] for _ in range(num_nodes)]
        for link, (t, h) in enumerate(zip(tails.tolist(), heads.tolist())):
            adj[t].append((h, link))
        adjacency = tuple(tuple(sorted(a)) for a in adj)

        missing = _unreached_nodes(num_nodes, adjacency)
        if missing:
            raise TopologyError(f"graph is disconnected: node(s) {missing} unreachable from node 0")

        for arr in (tails, heads, bandwidth, power):
            arr.setflags(write=False)
        link_index = {(t, h): i for i, (t, h) in enumerate(zip(tails.tolist(), heads.tolist()))}
        return cls(num_nodes, edges, tails, heads, bandwidth, power, adjacency, link_index)

    @property
    def num_links(self) -> int:
        return len(self.tails)

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (half the directed link count)."""
        return len(self.edges)

    def link_id(self, tail: int, head: int) -> int:
        try:
            return self.link_index[(tail, head)]
        except KeyError:
            raise KeyError(f"no link ({tail}, {head}) in graph") from None

    def out_links(self, node: int):
        return self.adjacency[node]

    def with_params(self, bandwidth_hz, power_uv, power_vu) -> "NetworkGraph":
        """Same structure, new per-edge parameters."""
        return NetworkGraph.from_edges(self.num_nodes, self.edges, bandwidth_hz, power_uv, power_vu)

    def with_random_params(self, rng, bandwidth_range=DEFAULT_BANDWIDTH_RANGE,
                           power_range=DEFAULT_POWER_RANGE) -> "NetworkGraph":
        bw, puv, pvu = _draw_params(rng, self.num_edges, bandwidth_range, power_range)
        return self.with_params(bw, puv, pvu)

    def to_dict(self) -> dict:
        return {
            "nodes": self.num_nodes,
            "edges": [
                {
                    "u": u,
                    "v": v,
                    "bandwidth_hz": float(self.bandwidth[2 * k]),
                    "power_w_uv": float(self.power[2 * k]),
                    "power_w_vu": float(self.power[2 * k + 1]),
                }
                for k, (u, v) in enumerate(self.edges)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def __eq__(self, other):
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.edges == other.edges
            and np.array_equal(self.bandwidth, other.bandwidth)
            and np.array_equal(self.power, other.power)
        )

    __hash__ = None


def _unreached_nodes(num_nodes, adjacency):
    seen = [False] * num_nodes
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v, _ in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return [v for v in range(num_nodes) if not seen[v]]


def _draw_params(rng, m, bandwidth_range, power_range):
    bw = rng.uniform(bandwidth_range[0], bandwidth_range[1], size=m)
    puv = rng.uniform(power_range[0], power_range[1], size=m)
    pvu = rng.uniform(power_range[0], power_range[1], size=m)
    return bw, puv, pvu


def graph_from_dict(data) -> NetworkGraph:
    if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
        raise TopologyError("topology must be an object with 'nodes' and 'edges'")
    edges, bw, puv, pvu = [], [], [], []
    for k, e in enumerate(data["edges"]):
        try:
            edges.append((int(e["u"]), int(e["v"])))
            bw.append(float(e["bandwidth_hz"]))
            puv.append(float(e["power_w_uv"]))
            pvu.append(float(e["power_w_vu"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise TopologyError(f"edge {k} is malformed: {e!r} ({exc})") from None
    return NetworkGraph.from_edges(data["nodes"], edges, bw, puv, pvu)


def load_topology(source, seed=0, bandwidth_range=DEFAULT_BANDWIDTH_RANGE,
                  power_range=DEFAULT_POWER_RANGE) -> NetworkGraph:
    """Load a graph from a JSON file or by embedded name (``"nsfnet"``, ``"geant2"``).

    Embedded topologies have no published link parameters, so they are drawn
    uniformly from the given ranges using ``seed``.
    """
    if isinstance(source, str) and source.lower() in EMBEDDED_TOPOLOGIES:
        n, edges = EMBEDDED_TOPOLOGIES[source.lower()]
        rng = np.random.default_rng(seed)
        bw, puv, pvu = _draw_params(rng, len(edges), bandwidth_range, power_range)
        return NetworkGraph.from_edges(n, edges, bw, puv, pvu)
    path = FsPath(source)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise TopologyError(f"topology file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise TopologyError(f"topology file {path} is not valid JSON: {exc}") from None
    return graph_from_dict(data)


def save_topology(graph: NetworkGraph, path) -> None:
    FsPath(path).write_text(graph.to_json())


def random_topology(num_nodes, num_undirected_edges, seed,
                    bandwidth_range=DEFAULT_BANDWIDTH_RANGE,
                    power_range=DEFAULT_POWER_RANGE) -> NetworkGraph:
    """Connected random graph with exactly the requested node and edge counts.

    A uniform random spanning tree (random permutation, each node attached to a
    random earlier one) guarantees connectivity; distinct non-tree edges are then
    sampled until the target count is reached.
    """
    n, m = int(num_nodes), int(num_undirected_edges)
    if n < 1:
        raise TopologyError(f"num_nodes must be >= 1, got {n}")
    max_edges = n * (n - 1) // 2
    if m < n - 1 or m > max_edges:
        raise TopologyError(
            f"infeasible edge count {m} for {n} nodes (need {n - 1} <= edges <= {max_edges})"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(n).tolist()
    edges = []
    present = set()
    for i in range(1, n):
        u, v = order[i], order[int(rng.integers(i))]
        key = (min(u, v), max(u, v))
        present.add(key)
        edges.append(key)
    remaining = m - len(edges)
    if remaining:
        if remaining > max_edges // 2:
            candidates = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in present]
            picks = rng.choice(len(candidates), size=remaining, replace=False)
            edges.extend(candidates[i] for i in sorted(picks.tolist()))
        else:
            while remaining:
                u, v = rng.integers(n, size=2).tolist()
                key = (min(u, v), max(u, v))
                if u == v or key in present:
                    continue
                present.add(key)
                edges.append(key)
                remaining -= 1
    bw, puv, pvu = _draw_params(rng, m, bandwidth_range, power_range)
    return NetworkGraph.from_edges(n, edges, bw, puv, pvu)


@dataclass(frozen=True)
class Flow:
    id: int
    source: int
    destination: int
    lam: float = 0.1
    demand: float = 0.0


@dataclass(frozen=True)
class Path:
    """Simple path as node sequence plus the matching link ids."""

    nodes: tuple[int, ...]
    links: tuple[int, ...]

    @classmethod
    def from_nodes(cls, graph: NetworkGraph, nodes: Sequence[int]) -> "Path":
        nodes = tuple(int(v) for v in nodes)
        if len(nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"path {nodes} repeats a node")
        links = tuple(graph.link_id(u, v) for u, v in zip(nodes, nodes[1:]))
        return cls(nodes, links)

    @property
    def hops(self) -> int:
        return len(self.links)

    def __len__(self):
        return len(self.nodes)


class PathAllocation:
    """Per-flow selected paths; ``None`` until a flow is first routed."""

    def __init__(self, num_flows: int, paths: Iterable | None = None):
        self.paths: list[Path | None] = list(paths) if paths is not None else [None] * num_flows
        if len(self.paths) != num_flows:
            raise ValueError("paths length does not match num_flows")

    def __len__(self):
        return len(self.paths)

    def __getitem__(self, n):
        return self.paths[n]

    def __setitem__(self, n, path):
        self.paths[n] = path

    def copy(self) -> "PathAllocation":
        return PathAllocation(len(self.paths), self.paths)

    def excluding(self, n: int) -> "PathAllocation":
        """The allocation with flow ``n`` masked out."""
        other = self.copy()
        other.paths[n] = None
        return other

    def link_usage(self, num_links: int, exclude: int | None = None) -> np.ndarray:
        """Number of allocated flows (other than ``exclude``) whose path uses each link."""
        usage = np.zeros(num_links)
        for i, p in enumerate(self.paths):
            if p is None or i == exclude:
                continue
            usage[list(p.links)] += 1.0
        return usage

    def __eq__(self, other):
        return isinstance(other, PathAllocation) and self.paths == other.paths

    def __repr__(self):
        return f"PathAllocation({self.paths!r})"


def flows_from_records(records) -> list[Flow]:
    """Build flows from the flow-file records (``src``, ``dst``, ``lambda``, ``demand_pps``)."""
    flows = []
    for i, r in enumerate(records):
        try:
            flows.append(Flow(i, int(r["src"]), int(r["dst"]),
                              float(r.get("lambda", 0.1)), float(r.get("demand_pps", 0.0))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"flow {i} is malformed: {r!r} ({exc})") from None
    return flows


def load_flows(path) -> list[Flow]:
    data = json.loads(FsPath(path).read_text())
    if not isinstance(data, list):
        raise ValueError("flow file must contain a JSON list")
    return flows_from_records(data)


def flows_to_records(flows) -> list[dict]:
    return [{"src": f.source, "dst": f.destination, "lambda": f.lam, "demand_pps": f.demand}
            for f in flows]


def validate_flow_set(graph: NetworkGraph, flows) -> list[str]:
    """Return per-flow diagnostics; an empty list means the flow set is valid."""
    errors = []
    reach_cache: dict[int, set] = {}
    for f in flows:
        s, d = f.source, f.destination
        bad = False
        for role, v in (("source", s), ("destination", d)):
            if not (0 <= v < graph.num_nodes):
                errors.append(f"flow {f.id}: unknown {role} node {v}")
                bad = True
        if bad:
            continue
        if s == d:
            errors.append(f"flow {f.id}: source equals destination ({s})")
            continue
        if f.lam < 0:
            errors.append(f"flow {f.id}: negative lambda {f.lam}")
        if f.demand < 0:
            errors.append(f"flow {f.id}: negative demand {f.demand}")
        if s not in reach_cache:
            reach_cache[s] = _reachable(graph, s)
        if d not in reach_cache[s]:
            errors.append(f"flow {f.id}: destination {d} unreachable from source {s}")
    return errors


def _reachable(graph, s):
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v, _ in graph.adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen
