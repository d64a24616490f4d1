import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from netopt.interference import random_interference_map
from netopt.routers import IMARouter, OSPFRouter, RGARouter, RRORouter, make_router
from netopt.topology import Flow, load_topology
from netopt.validation import FlowValidationError


@pytest.fixture
def problem():
    g = load_topology("nsfnet")
    imap = random_interference_map(g, np.random.default_rng(0))
    flows = [Flow(0, 0, 13), Flow(1, 3, 10), Flow(2, 6, 1)]
    return g, imap, flows


def test_params_and_clone():
    r = RRORouter(lam=0.2, rounds=4)
    assert r.get_params() == {"lam": 0.2, "rounds": 4, "share_aware": True}
    c = clone(r.set_params(rounds=2))
    assert c.get_params()["rounds"] == 2 and c is not r
    assert RGARouter().get_params() == {"lam": None, "K": 10, "rounds": 3, "seed": 0,
                                        "share_aware": True}


@pytest.mark.parametrize("cls", [RRORouter, OSPFRouter, IMARouter, RGARouter])
def test_fit_predict(cls, problem):
    g, imap, flows = problem
    router = cls().fit(g, flows, imap)
    paths = router.predict()
    assert [(p.nodes[0], p.nodes[-1]) for p in paths] == [(f.source, f.destination) for f in flows]
    assert len(router.flow_rates()) == 3 and router.score() > 0
    assert 1 <= router.n_rounds_ <= 3


def test_not_fitted():
    with pytest.raises(NotFittedError):
        RRORouter().predict()


def test_lambda_override(problem):
    g, imap, flows = problem
    r = RRORouter(lam=2.0).fit(g, flows, imap)
    assert all(f.lam == 2.0 for f in r.flows_)
    with pytest.raises(ValueError):
        RRORouter(lam=-1.0).fit(g, flows, imap)


def test_records_and_default_imap():
    g = load_topology("nsfnet")
    r = OSPFRouter().fit(g, [{"src": 0, "dst": 5}, {"src": 5, "dst": 0}])
    assert r.imap_.gain.nnz == 0
    assert [f.id for f in r.flows_] == [0, 1]


def test_invalid_flows_reported_together(problem):
    g, imap, _ = problem
    with pytest.raises(FlowValidationError) as info:
        RRORouter().fit(g, [Flow(0, 1, 1), Flow(1, 0, 77)], imap)
    assert len(info.value.errors) == 2


def test_imap_size_checked(problem):
    g, _, flows = problem
    other = random_interference_map(load_topology("geant2"), np.random.default_rng(0))
    with pytest.raises(ValueError):
        RRORouter().fit(g, flows, other)


def test_make_router_filters_params():
    r = make_router("ospf", lam=0.3, rounds=2, seed=5)
    assert isinstance(r, OSPFRouter) and r.get_params() == {"rounds": 2}
    with pytest.raises(ValueError, match="unknown algorithm"):
        make_router("bgp")
