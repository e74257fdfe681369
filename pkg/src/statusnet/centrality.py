"""Node status scores: follower count, eigenvector centrality, PageRank."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._parallel import row_product
from .errors import DomainError, ValidationError

MEASURES = ("followers", "eigenvector", "pagerank", "reversed_pagerank")


@dataclass
class StatusScores:
    measure: str
    values: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    # largest |sum(P) - 1| seen over all iterates (PageRank only)
    mass_error: float = 0.0
    history: list = field(default_factory=list)

    def __len__(self):
        return self.values.size

    def stats(self):
        return {
            "measure": self.measure,
            "n_nodes": int(self.values.size),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "converged": bool(self.converged),
            "mass_error": float(self.mass_error),
        }


def _in_matrix(g, data):
    """CSR with rows = destinations, columns = sources (ascending)."""
    n = g.n_nodes
    return sp.csr_matrix((data, g.in_idx, g.in_ptr), shape=(n, n))


def follower_count(g):
    return StatusScores("followers", g.in_degree().astype(float))


def eigenvector_centrality(g, tol=1e-9, max_iter=1000):
    """Principal eigenvector of ``A^T`` by power iteration.

    Iterates ``x <- (A^T + I) x``; the identity shift keeps the eigenvectors
    and removes the oscillation that pure ``A^T`` shows on periodic graphs.
    """
    if g.n_edges == 0:
        raise DomainError("eigenvector centrality is undefined on an edgeless graph")
    n = g.n_nodes
    at = _in_matrix(g, np.ones(g.n_edges))
    x = np.full(n, 1.0 / np.sqrt(n))
    residual = np.inf
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        y = row_product(at, x) + x
        norm = np.linalg.norm(y)
        y /= norm
        residual = float(np.linalg.norm(y - x))
        history.append(residual)
        x = y
        if residual < tol:
            break
    return StatusScores(
        "eigenvector", x, iterations=it, residual=residual,
        converged=residual < tol, history=history,
    )


def rayleigh_residual(g, x):
    """``||A^T x - lambda x||`` with lambda the Rayleigh quotient of unit ``x``."""
    at = _in_matrix(g, np.ones(g.n_edges))
    ax = at @ x
    lam = float(x @ ax) / float(x @ x)
    return float(np.linalg.norm(ax - lam * x)), lam


def pagerank(g, d=0.85, tol=1e-12, max_iter=200, measure="pagerank"):
    """Power iteration of the random-surfer chain with damping ``d``.

    Mass sitting on nodes without followees is spread uniformly, so the
    iterate stays a probability vector.  ``tol`` is per node: iteration stops
    once the L1 change falls below ``tol * n``.
    """
    if not 0.0 < d < 1.0:
        raise ValidationError(f"damping must lie in (0, 1), got {d}")
    n = g.n_nodes
    if n == 0:
        raise DomainError("PageRank of an empty graph")
    out_deg = g.out_degree()
    dangling = out_deg == 0
    inv = np.zeros(n)
    inv[~dangling] = 1.0 / out_deg[~dangling]
    m = _in_matrix(g, inv[g.in_idx])

    p = np.full(n, 1.0 / n)
    teleport = (1.0 - d) / n
    mass_error = abs(p.sum() - 1.0)
    residual = np.inf
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        dmass = p[dangling].sum()
        nxt = d * row_product(m, p) + (d * dmass / n + teleport)
        residual = float(np.abs(nxt - p).sum())
        mass_error = max(mass_error, abs(nxt.sum() - 1.0))
        history.append(residual)
        p = nxt
        if residual < tol * n:
            break
    return StatusScores(
        measure, p, iterations=it, residual=residual,
        converged=residual < tol * n, mass_error=float(mass_error), history=history,
    )


def reversed_pagerank(g, d=0.85, tol=1e-12, max_iter=200):
    """PageRank on the graph with every edge reversed."""
    return pagerank(g.transpose(), d=d, tol=tol, max_iter=max_iter, measure="reversed_pagerank")


def compute(g, measure, **kw):
    """Dispatch by measure name."""
    if measure == "followers":
        return follower_count(g)
    if measure == "eigenvector":
        return eigenvector_centrality(g, **kw)
    if measure == "pagerank":
        return pagerank(g, **kw)
    if measure == "reversed_pagerank":
        return reversed_pagerank(g, **kw)
    raise ValidationError(f"unknown measure {measure!r}; choose from {MEASURES}")
