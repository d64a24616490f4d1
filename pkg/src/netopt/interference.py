"""Interference map, SINR link rates and the rate-to-weight transform."""

from __future__ import annotations

import json
from pathlib import Path as FsPath

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .topology import NetworkGraph, PathAllocation

DEFAULT_SIGMA2 = 1e-3
DEFAULT_GAMMA = 0.1
DEFAULT_P_INT = 0.3


class InterferenceMap:
    """Pairwise interference gains between directed links.

    ``gain[l, l']`` is the power (W) absorbed at the receiver of link ``l`` while
    link ``l'`` transmits. Only strictly positive entries are stored; they form
    the interference range of ``l``. The diagonal is always empty.
    """

    def __init__(self, gain, sigma2=DEFAULT_SIGMA2):
        gain = sp.csr_matrix(gain, dtype=float)
        if gain.shape[0] != gain.shape[1]:
            raise ValueError(f"gain matrix must be square, got {gain.shape}")
        if gain.nnz and (not np.all(np.isfinite(gain.data)) or gain.data.min() < 0):
            raise ValueError("gains must be finite and non-negative")
        if not sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {sigma2}")
        gain.setdiag(0.0)
        gain.eliminate_zeros()
        gain.sort_indices()
        self.gain = gain
        self.sigma2 = float(sigma2)

    @classmethod
    def empty(cls, num_links, sigma2=DEFAULT_SIGMA2):
        return cls(sp.csr_matrix((num_links, num_links)), sigma2)

    @property
    def num_links(self):
        return self.gain.shape[0]

    def neighbors(self, link):
        """Links inside the interference range of ``link``."""
        row = self.gain.getrow(link)
        return row.indices.tolist()

    def interference(self, usage):
        """Interference at every receiver given per-link active-flow counts."""
        return self.gain @ np.asarray(usage, dtype=float)

    def to_dict(self, graph: NetworkGraph):
        coo = self.gain.tocoo()
        entries = [
            {
                "rx_link": [int(graph.tails[r]), int(graph.heads[r])],
                "tx_link": [int(graph.tails[c]), int(graph.heads[c])],
                "gain_w": float(g),
            }
            for r, c, g in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
        ]
        return {"sigma2_w": self.sigma2, "entries": entries}

    def __eq__(self, other):
        if not isinstance(other, InterferenceMap):
            return NotImplemented
        return (
            self.sigma2 == other.sigma2
            and self.gain.shape == other.gain.shape
            and (self.gain != other.gain).nnz == 0
        )

    __hash__ = None


def imap_from_dict(data, graph: NetworkGraph) -> InterferenceMap:
    rows, cols, vals = [], [], []
    for k, e in enumerate(data.get("entries", [])):
        try:
            r = graph.link_id(*map(int, e["rx_link"]))
            c = graph.link_id(*map(int, e["tx_link"]))
            g = float(e["gain_w"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"interference entry {k} is malformed: {e!r} ({exc})") from None
        rows.append(r)
        cols.append(c)
        vals.append(g)
    n = graph.num_links
    gain = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return InterferenceMap(gain, data.get("sigma2_w", DEFAULT_SIGMA2))


def load_interference_map(path, graph: NetworkGraph) -> InterferenceMap:
    return imap_from_dict(json.loads(FsPath(path).read_text()), graph)


def save_interference_map(imap: InterferenceMap, graph: NetworkGraph, path) -> None:
    FsPath(path).write_text(json.dumps(imap.to_dict(graph), indent=1))


def random_interference_map(graph: NetworkGraph, rng, gamma=DEFAULT_GAMMA,
                            p_int=DEFAULT_P_INT, sigma2=DEFAULT_SIGMA2) -> InterferenceMap:
    """Each other link joins a receiver's range with probability ``p_int``.

    A member ``l'`` contributes ``gamma * P_l'``.
    """
    n = graph.num_links
    rows, cols = [], []
    others = np.arange(n - 1)
    for r in range(n):
        k = int(rng.binomial(n - 1, p_int)) if n > 1 else 0
        if not k:
            continue
        picks = np.sort(rng.choice(others, size=k, replace=False))
        picks[picks >= r] += 1
        rows.append(np.full(k, r))
        cols.append(picks)
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
    else:
        rows = cols = np.zeros(0, dtype=int)
    vals = gamma * graph.power[cols]
    gain = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return InterferenceMap(gain, sigma2)


def aggregate_interference(imap: InterferenceMap, allocation: PathAllocation, link: int) -> float:
    """Total interference at the receiver of ``link`` from every allocated flow.

    Pass the allocation with the flow being routed already masked out. Each flow
    contributes the gains of its own path links in range, so two flows sharing a
    link count it twice.
    """
    if not 0 <= link < imap.num_links:
        raise KeyError(f"unknown link {link}")
    usage = allocation.link_usage(imap.num_links)
    row = imap.gain.getrow(link)
    return float(row.data @ usage[row.indices]) if row.nnz else 0.0


def link_rate(bandwidth, power, sigma2, interference):
    """Shannon rate ``B * log2(1 + P / (I + sigma2))`` in bit/s."""
    return bandwidth * np.log2(1.0 + power / (interference + sigma2))


def compute_link_rate_table(graph: NetworkGraph, imap: InterferenceMap,
                            allocation: PathAllocation, flow: int | None = None) -> np.ndarray:
    """Achievable rate of every link for ``flow``, ignoring that flow's own path."""
    usage = allocation.link_usage(graph.num_links, exclude=flow)
    interference = imap.interference(usage)
    return link_rate(graph.bandwidth, graph.power, imap.sigma2, interference)


class RateWeightTransformer(TransformerMixin, BaseEstimator):
    """Affine map from link rates onto [0, 1] with the order reversed.

    The fastest link seen in ``fit`` maps to 0 and the slowest to 1. When all
    fitted rates are equal every weight is 0.
    """

    def fit(self, X, y=None):
        rates = _check_rates(X)
        self.rate_max_ = float(rates.max())
        self.rate_min_ = float(rates.min())
        return self

    def transform(self, X):
        check_is_fitted(self, ("rate_max_", "rate_min_"))
        rates = _check_rates(X)
        span = self.rate_max_ - self.rate_min_
        if span == 0:
            return np.zeros_like(rates)
        return (self.rate_max_ - rates) / span


def _check_rates(X):
    rates = np.asarray(X, dtype=float).ravel()
    if rates.size == 0:
        raise ValueError("rate table is empty")
    if not np.all(np.isfinite(rates)):
        raise ValueError("rate table contains non-finite values")
    return rates


def rate_to_weights(rates) -> np.ndarray:
    return RateWeightTransformer().fit_transform(rates)
