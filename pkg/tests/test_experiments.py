import csv
import io
import json

import numpy as np
import pytest

from conftest import make_graph
from netopt.experiments import (
    ExperimentConfig,
    draw_instance,
    load_class,
    queue_study,
    run_scenario,
    sample_pairs,
)
from netopt.interference import InterferenceMap, rate_to_weights
from netopt.routers import AllocationError, allocate_all, flow_rate_table
from netopt.routing import brute_force_rmep
from netopt.topology import Flow, NetworkGraph, PathAllocation, load_topology


def small_config(**kw):
    base = dict(topology={"name": "nsfnet"}, flows=[4], seed_count=2, horizon=150, warmup=20)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("algorithm", ["RRO", "IMA", "OSPF", "RGA"])
def test_single_flow_converges_after_one_sweep(algorithm):
    g = load_topology("nsfnet")
    imap = InterferenceMap(np.full((g.num_links, g.num_links), 0.01))
    alloc, trace = allocate_all(g, imap, [Flow(0, 0, 13)], algorithm, rounds=5)
    # round 2 repeats round 1 and the loop stops
    assert trace.converged and len(trace.rounds) == 2
    assert trace.paths(0) == trace.paths(1) == [alloc[0]]


@pytest.fixture
def coupled():
    # two parallel 2-hop routes 0-1-4 and 0-2-4, plus 3-1 and 3-2 for flow 1
    g = make_graph(5, [(0, 1), (1, 4), (0, 2), (2, 4), (3, 1), (3, 2)])
    gain = np.zeros((g.num_links, g.num_links))
    for a in range(g.num_links):
        for b in range(g.num_links):
            if a != b and g.heads[a] == g.heads[b]:
                gain[a, b] = 0.05
    imap = InterferenceMap(gain, sigma2=0.01)
    flows = [Flow(0, 0, 4, lam=0.0), Flow(1, 3, 4, lam=0.0)]
    return g, imap, flows


def test_trace_steps_are_exhaustive_optima(coupled):
    g, imap, flows = coupled
    _, trace = allocate_all(g, imap, flows, "RRO", rounds=4)
    for entry in trace.entries():
        f = flows[entry.flow]
        best = brute_force_rmep(g, entry.weights, f.source, f.destination, f.lam)
        assert entry.result.cost == best.cost


def test_sequential_replay_reproduces_weights(coupled):
    g, imap, flows = coupled
    alloc, trace = allocate_all(g, imap, flows, "RRO", rounds=3)
    replay = PathAllocation(len(flows))
    for entry in trace.entries():
        others = replay.excluding(entry.flow)
        w = rate_to_weights(flow_rate_table(g, imap, others, entry.flow))
        np.testing.assert_array_equal(w, entry.weights)
        replay[entry.flow] = entry.result.path
    assert replay == alloc


def test_allocation_is_deterministic(coupled):
    g, imap, flows = coupled
    for alg in ("RRO", "RGA"):
        a, ta = allocate_all(g, imap, flows, alg, seed=7)
        b, tb = allocate_all(g, imap, flows, alg, seed=7)
        assert a == b
        assert [e.result for e in ta.entries()] == [e.result for e in tb.entries()]


def test_allocation_error_names_the_flow():
    g = make_graph(3, [(0, 1), (1, 2)])
    cut = NetworkGraph(g.num_nodes, g.edges, g.tails, g.heads, g.bandwidth, g.power,
                       (g.adjacency[0], (), g.adjacency[2]), g.link_index)
    with pytest.raises(AllocationError) as info:
        allocate_all(cut, InterferenceMap.empty(cut.num_links), [Flow(0, 0, 2)], "RRO")
    assert info.value.flow == 0 and info.value.round == 1
    with pytest.raises(ValueError, match="rounds"):
        allocate_all(g, InterferenceMap.empty(g.num_links), [Flow(0, 0, 2)], rounds=0)


@pytest.mark.parametrize("n, label", [(10, "lightly-loaded"), (12, "lightly-loaded"),
                                      (20, "moderately-loaded"), (24, "moderately-loaded"),
                                      (30, "heavily-loaded")])
def test_load_classes(n, label):
    assert load_class(n, 24) == label


def test_sample_pairs_distinct_and_valid():
    rng = np.random.default_rng(0)
    pairs = sample_pairs(rng, 5, 20)
    assert len(set(pairs)) == 20 and all(s != d for s, d in pairs)
    many = sample_pairs(rng, 3, 10)
    assert len(many) == 10 and all(s != d for s, d in many)


def test_draws_are_keyed_by_seed():
    cfg = small_config()
    base = cfg.base_graph()
    a = draw_instance(cfg, base, 4, 1)
    b = draw_instance(cfg, base, 4, 1)
    c = draw_instance(cfg, base, 4, 2)
    assert a.graph == b.graph and a.imap == b.imap and a.flows == b.flows
    assert a.flows != c.flows
    lo, hi = cfg.demand_range
    assert all(lo <= f.demand <= hi for f in a.flows)


def test_csv_columns_and_rows(tmp_path):
    cfg = small_config(flows=[3, 5])
    out = run_scenario(cfg, tmp_path)
    for metric in ("avg_data_rate", "avg_delay", "fairness"):
        rows = list(csv.reader(io.StringIO((tmp_path / f"{metric}.csv").read_text())))
        assert rows[0] == ["flows", "RRO", "IMA", "OSPF", "RGA"]
        assert [r[0] for r in rows[1:]] == ["3", "5"]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["csv_columns"] == ["flows", "RRO", "IMA", "OSPF", "RGA"]
    assert len(manifest["runs"]) == 4
    assert out["means"][3]["RRO"]["avg_data_rate"] > 0


def test_ospf_only_config():
    out = run_scenario(small_config(algorithms=["ospf"], seed_count=1))
    header = out["tables"]["avg_delay"].splitlines()[0]
    assert header == "flows,OSPF"


def test_manifest_rerun_is_bit_identical(tmp_path):
    first = tmp_path / "a"
    run_scenario(small_config(topology={"random": {"nodes": 10, "edges": 15, "seed": 3}}), first)
    cfg = ExperimentConfig.from_file(first / "manifest.json")
    second = tmp_path / "b"
    run_scenario(cfg, second)
    for name in ("avg_data_rate.csv", "avg_delay.csv", "fairness.csv", "runs.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_parallel_matches_serial():
    a = run_scenario(small_config(seed_count=3))
    b = run_scenario(small_config(seed_count=3, n_jobs=2))
    assert a["tables"] == b["tables"]


def test_file_topology_keeps_parameters(tmp_path):
    from netopt.topology import save_topology

    g = load_topology("nsfnet", seed=5)
    save_topology(g, tmp_path / "g.json")
    cfg = small_config(topology={"file": str(tmp_path / "g.json")})
    inst = draw_instance(cfg, cfg.base_graph(), 4, 0)
    assert inst.graph == g


def test_queue_study_shape(tmp_path):
    cfg = small_config(horizon=80, warmup=0)
    text, series = queue_study(cfg, 6, tmp_path)
    rows = text.splitlines()
    assert rows[0] == "time_step,RRO,IMA,OSPF,RGA"
    assert len(rows) == 81
    assert set(series) == {"RRO", "IMA", "OSPF", "RGA"}
    assert all(len(s) == 80 for s in series.values())
    assert (tmp_path / "max_queue_N6.csv").read_text() == text


def test_queue_study_zero_demand():
    cfg = small_config(horizon=60, warmup=0, demand_range=(0.0, 0.0))
    _, series = queue_study(cfg, 5)
    assert all(v == 0 for s in series.values() for v in s)


@pytest.mark.parametrize("data, match", [
    ({"flows": [0]}, "flow count"),
    ({"algorithms": ["XYZ"]}, "unknown algorithm"),
    ({"topology": {"name": "arpanet"}}, "unknown embedded"),
    ({"bogus": 1}, "unknown config"),
    ({"horizon": 10, "warmup": 10}, "horizon"),
])
def test_config_validation(data, match):
    with pytest.raises(ValueError, match=match):
        ExperimentConfig.from_dict(data)


def test_config_aliases():
    cfg = ExperimentConfig.from_dict({"lambda": 0.2, "seeds": {"count": 3, "base": 9},
                                      "sim": {"horizon": 500}})
    assert (cfg.lam, cfg.seed_count, cfg.base_seed, cfg.horizon) == (0.2, 3, 9, 500)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
