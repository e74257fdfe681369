"""Structural evidence: homophily by relation type, triad census, follow-back ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

RELATIONS = ("reciprocal", "one_way", "disconnected")


@dataclass
class ShareEstimate:
    p: float
    n: int
    se: float

    @classmethod
    def from_counts(cls, shared, n):
        if n == 0:
            return cls(float("nan"), 0, float("nan"))
        p = shared / n
        return cls(p, int(n), math.sqrt(p * (1 - p) / n))

    def to_dict(self):
        if self.n == 0:
            return {"p": None, "n": 0, "se": None}
        return {"p": self.p, "n": self.n, "se": self.se}


@dataclass
class HomophilyReport:
    reciprocal: ShareEstimate
    one_way: ShareEstimate
    disconnected: ShareEstimate

    def to_dict(self):
        return {k: getattr(self, k).to_dict() for k in RELATIONS}


def _shared(member, u, v):
    return (member[u] & member[v]).any(axis=1)


def homophily(g, member, n_samples_disconnected=10_000_000, rng_seed=0, batch=1_000_000):
    """Probability that two labelled users share a group, per relation type.

    Reciprocal and one-way pairs are enumerated exactly; disconnected pairs
    are estimated from uniform draws of labelled pairs, rejecting any pair
    joined by an edge in either direction.
    """
    member = np.asarray(member, dtype=bool)
    labeled = member.any(axis=1)
    if labeled.sum() < 2:
        raise DomainError("homophily needs at least two labelled nodes")

    rs, rd = g.recip_edges()
    keep = (rs < rd) & labeled[rs] & labeled[rd]
    recip = ShareEstimate.from_counts(int(_shared(member, rs[keep], rd[keep]).sum()), int(keep.sum()))

    src, dst = g.edges()
    n = g.n_nodes
    keys = src * n + dst
    mutual = np.isin(keys, dst * n + src, assume_unique=True)
    keep = ~mutual & labeled[src] & labeled[dst]
    oneway = ShareEstimate.from_counts(int(_shared(member, src[keep], dst[keep]).sum()), int(keep.sum()))

    nodes = np.flatnonzero(labeled)
    k = nodes.size
    connected_pairs = int(((rs < rd) & labeled[rs] & labeled[rd]).sum()) + int(keep.sum())
    if n_samples_disconnected <= 0 or connected_pairs >= k * (k - 1) // 2:
        disc = ShareEstimate.from_counts(0, 0)
    else:
        rng = np.random.default_rng(rng_seed)
        got = shared = 0
        while got < n_samples_disconnected:
            draw = min(batch, 2 * (n_samples_disconnected - got) + 16)
            a = nodes[rng.integers(0, k, draw)]
            b = nodes[rng.integers(0, k, draw)]
            ok = a != b
            a, b = a[ok], b[ok]
            linked = _has_key(keys, a * n + b) | _has_key(keys, b * n + a)
            a, b = a[~linked], b[~linked]
            a, b = a[: n_samples_disconnected - got], b[: n_samples_disconnected - got]
            shared += int(_shared(member, a, b).sum())
            got += a.size
        disc = ShareEstimate.from_counts(shared, got)
    return HomophilyReport(recip, oneway, disc)


def _has_key(sorted_keys, q):
    if sorted_keys.size == 0:
        return np.zeros(q.size, dtype=bool)
    pos = np.searchsorted(sorted_keys, q)
    pos[pos == sorted_keys.size] = 0
    return sorted_keys[pos] == q


@dataclass
class TriangleCensus:
    type_I: int
    type_II: int
    other: int

    @property
    def ratio(self):
        return self.type_I / self.type_II if self.type_II else float("nan")

    def to_dict(self):
        return {
            "type_I": self.type_I,
            "type_II": self.type_II,
            "other": self.other,
            "ratio": None if self.type_II == 0 else self.ratio,
        }


def triangle_census(g):
    """Count node triples joined by exactly three directed links.

    Three one-way links form either a transitive triad (type I) or a directed
    cycle (type II).  A reciprocal pair plus one one-way link to a third node
    also has three links; those are tallied as ``other``.
    """
    n = g.n_nodes
    src, dst = g.edges()
    keys = src * n + dst
    mutual = np.isin(keys, dst * n + src, assume_unique=True)
    osrc, odst = src[~mutual], dst[~mutual]
    directed = set((osrc * n + odst).tolist())

    # undirected one-way graph, oriented from lower to higher (degree, index)
    und = [[] for _ in range(n)]
    for a, b in zip(osrc.tolist(), odst.tolist()):
        und[a].append(b)
        und[b].append(a)
    deg = [len(x) for x in und]
    higher = [set(v for v in und[u] if (deg[v], v) > (deg[u], u)) for u in range(n)]

    t1 = t2 = 0
    for u in range(n):
        hu = higher[u]
        for v in hu:
            for w in hu & higher[v]:
                outs = ((u * n + v in directed) + (u * n + w in directed),
                        (v * n + u in directed) + (v * n + w in directed),
                        (w * n + u in directed) + (w * n + v in directed))
                if outs == (1, 1, 1):
                    t2 += 1
                else:
                    t1 += 1

    # reciprocal pair {u, v} plus a one-way link from exactly one of them to w,
    # with w unlinked to the other
    adj = [set() for _ in range(n)]
    for a, b in zip(src.tolist(), dst.tolist()):
        adj[a].add(b)
        adj[b].add(a)
    ow = [set(x) for x in und]
    other = 0
    rs, rd = g.recip_edges()
    for u, v in zip(rs.tolist(), rd.tolist()):
        if u < v:
            other += len(ow[u] - adj[v]) + len(ow[v] - adj[u])
    return TriangleCensus(t1, t2, other)


@dataclass
class FollowBack:
    ratio: float
    included: int
    excluded: int

    def to_dict(self):
        return {
            "ratio": None if math.isnan(self.ratio) else self.ratio,
            "included": self.included,
            "excluded": self.excluded,
        }


def follow_back_ratio(g, nodes=None):
    """Mean over ``nodes`` of friends / followers; nodes without followers are excluded."""
    nodes = np.arange(g.n_nodes) if nodes is None else np.asarray(nodes)
    if nodes.dtype == bool:
        nodes = np.flatnonzero(nodes)
    fin = g.in_degree()[nodes]
    fr = g.recip_degree()[nodes]
    ok = fin > 0
    ratio = float(np.mean(fr[ok] / fin[ok])) if ok.any() else float("nan")
    return FollowBack(ratio, int(ok.sum()), int((~ok).sum()))
