"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

from .interference import InterferenceMap
from .topology import Flow, NetworkGraph, flows_from_records, validate_flow_set


class FlowValidationError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid flow set:\n  " + "\n  ".join(self.errors))


def check_graph(graph) -> NetworkGraph:
    if not isinstance(graph, NetworkGraph):
        raise TypeError(f"expected a NetworkGraph, got {type(graph).__name__}")
    return graph


def check_flows(flows, graph: NetworkGraph) -> list[Flow]:
    """Coerce ``flows`` (Flow objects or flow-file records) and validate them.

    Flow ids are reassigned to list positions.
    """
    flows = list(flows)
    if not flows:
        raise FlowValidationError(["flow set is empty"])
    if all(isinstance(f, Flow) for f in flows):
        flows = [Flow(i, f.source, f.destination, f.lam, f.demand) for i, f in enumerate(flows)]
    else:
        flows = flows_from_records(flows)
    errors = validate_flow_set(graph, flows)
    if errors:
        raise FlowValidationError(errors)
    return flows


def check_imap(imap, graph: NetworkGraph) -> InterferenceMap:
    if imap is None:
        return InterferenceMap.empty(graph.num_links)
    if not isinstance(imap, InterferenceMap):
        raise TypeError(f"expected an InterferenceMap, got {type(imap).__name__}")
    if imap.num_links != graph.num_links:
        raise ValueError(
            f"interference map covers {imap.num_links} links, graph has {graph.num_links}"
        )
    return imap


def check_lambda(lam):
    lam = float(lam)
    if not lam >= 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    return lam
