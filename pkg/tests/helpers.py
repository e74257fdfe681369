"""Small graph builders shared by the test modules."""

import numpy as np

from statusnet.graph import SocialGraph


def graph_from_pairs(pairs, n=None):
    """Graph on integer nodes from ``[(u, v), ...]``."""
    pairs = list(pairs)
    if n is None:
        n = 1 + max((max(p) for p in pairs), default=-1)
    src = [p[0] for p in pairs]
    dst = [p[1] for p in pairs]
    return SocialGraph.from_edges(n, src, dst)


def random_digraph(n, p, rng, p_recip=0.0):
    """Erdos-Renyi digraph; ``p_recip`` adds extra reciprocal pairs."""
    a = rng.random((n, n)) < p
    if p_recip:
        r = np.triu(rng.random((n, n)) < p_recip, 1)
        a |= r | r.T
    np.fill_diagonal(a, False)
    src, dst = np.nonzero(a)
    return SocialGraph.from_edges(n, src, dst), a


def dense(g):
    a = np.zeros((g.n_nodes, g.n_nodes), dtype=bool)
    src, dst = g.edges()
    a[src, dst] = True
    return a
