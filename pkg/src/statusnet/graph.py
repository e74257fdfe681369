"""Directed follower graph with followee, follower and reciprocal-friend adjacency.

An edge ``(u, v)`` means *u follows v*.  Node indices are dense and assigned in
order of first appearance, so the same edge file always yields the same
indexing.  All three adjacencies are stored as CSR arrays with each row sorted
ascending, which keeps intersections linear merges and summations in a fixed
order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidationError

KINDS = ("out", "in", "recip")


def _csr(n, rows, cols):
    """Row-sorted CSR (indptr, indices) for the pairs ``rows[i] -> cols[i]``."""
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, cols.astype(np.int64, copy=True)


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Immutable directed graph.

    Build with :meth:`from_edges` or :func:`load_graph`; the constructor trusts
    its arguments.
    """

    ids: tuple
    out_ptr: np.ndarray
    out_idx: np.ndarray
    in_ptr: np.ndarray
    in_idx: np.ndarray
    recip_ptr: np.ndarray
    recip_idx: np.ndarray
    index: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_edges(cls, n_nodes, src, dst, ids=None):
        """Build from index arrays. Rejects self-loops, duplicates and bad indices."""
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValidationError("src and dst must have the same length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n_nodes):
            raise ValidationError("edge endpoint out of range")
        if np.any(src == dst):
            raise ValidationError("self-loops are not allowed")
        key = src * n_nodes + dst
        if np.unique(key).size != key.size:
            raise ValidationError("duplicate edges")
        if ids is None:
            ids = tuple(str(i) for i in range(n_nodes))
        else:
            ids = tuple(str(x) for x in ids)
            if len(ids) != n_nodes:
                raise ValidationError("ids length does not match n_nodes")
        index = {x: i for i, x in enumerate(ids)}
        if len(index) != n_nodes:
            raise ValidationError("external ids must be unique")

        out_ptr, out_idx = _csr(n_nodes, src, dst)
        in_ptr, in_idx = _csr(n_nodes, dst, src)
        # reciprocal pairs: (u, v) with (v, u) also present
        rev = dst * n_nodes + src
        mutual = np.isin(key, rev, assume_unique=True)
        recip_ptr, recip_idx = _csr(n_nodes, src[mutual], dst[mutual])
        for arr in (out_ptr, out_idx, in_ptr, in_idx, recip_ptr, recip_idx):
            arr.setflags(write=False)
        return cls(ids, out_ptr, out_idx, in_ptr, in_idx, recip_ptr, recip_idx, index)

    @property
    def n_nodes(self):
        return len(self.ids)

    @property
    def n_edges(self):
        return int(self.out_idx.size)

    @property
    def n_reciprocal(self):
        """Number of ordered reciprocal pairs (twice the number of friendships)."""
        return int(self.recip_idx.size)

    def edges(self):
        """``(src, dst)`` index arrays in ascending (src, dst) order."""
        src = np.repeat(np.arange(self.n_nodes, dtype=np.int64), np.diff(self.out_ptr))
        return src, self.out_idx.copy()

    def recip_edges(self):
        """Ordered reciprocal pairs ``(u, v)``, both orientations, ascending."""
        src = np.repeat(np.arange(self.n_nodes, dtype=np.int64), np.diff(self.recip_ptr))
        return src, self.recip_idx.copy()

    def out_degree(self):
        return np.diff(self.out_ptr)

    def in_degree(self):
        return np.diff(self.in_ptr)

    def recip_degree(self):
        return np.diff(self.recip_ptr)

    def neighbors(self, u, kind="out"):
        """Sorted neighbor indices of ``u``: followees, followers or friends."""
        if not 0 <= u < self.n_nodes:
            raise IndexError(f"node index {u} out of range for {self.n_nodes} nodes")
        if kind == "out":
            ptr, idx = self.out_ptr, self.out_idx
        elif kind == "in":
            ptr, idx = self.in_ptr, self.in_idx
        elif kind == "recip":
            ptr, idx = self.recip_ptr, self.recip_idx
        else:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        return idx[ptr[u]:ptr[u + 1]]

    def has_edge(self, u, v):
        row = self.neighbors(u, "out")
        i = np.searchsorted(row, v)
        return bool(i < row.size and row[i] == v)

    def adjacency(self):
        """Sparse ``A`` with ``A[u, v] = 1`` iff u follows v."""
        n = self.n_nodes
        data = np.ones(self.n_edges)
        return sp.csr_matrix((data, self.out_idx, self.out_ptr), shape=(n, n))

    def transpose(self):
        """Same nodes, every edge reversed."""
        src, dst = self.edges()
        return SocialGraph.from_edges(self.n_nodes, dst, src, self.ids)

    def __eq__(self, other):
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return self.ids == other.ids and all(
            np.array_equal(getattr(self, a), getattr(other, a))
            for a in ("out_ptr", "out_idx", "in_ptr", "in_idx", "recip_ptr", "recip_idx")
        )

    __hash__ = None


def neighbors(g, u, kind="out"):
    return g.neighbors(u, kind)


def transpose(g):
    return g.transpose()


def load_graph(path, dedupe=False):
    """Read a ``src<TAB>dst`` edge file.

    ``#`` lines and blank lines are skipped.  Self-loops are dropped with a
    warning (their endpoint still becomes a node).  Duplicate edges are dropped
    when ``dedupe`` is set and rejected otherwise.
    """
    path = Path(path)
    index = {}
    ids = []
    src, dst = [], []
    self_loops = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError("expected 'src<TAB>dst'", path, lineno)
            a, b = parts
            for x in (a, b):
                if x not in index:
                    index[x] = len(ids)
                    ids.append(x)
            if a == b:
                self_loops += 1
                continue
            src.append(index[a])
            dst.append(index[b])
    if self_loops:
        warnings.warn(f"{path}: dropped {self_loops} self-loop(s)", stacklevel=2)

    n = len(ids)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    key = src * max(n, 1) + dst
    uniq, first = np.unique(key, return_index=True)
    if uniq.size != key.size:
        if not dedupe:
            dup = np.setdiff1d(np.arange(key.size), first)[0]
            raise ValidationError(
                f"{path}: duplicate edge {ids[src[dup]]!r} -> {ids[dst[dup]]!r} (use dedupe)"
            )
        keep = np.sort(first)
        src, dst = src[keep], dst[keep]
    return SocialGraph.from_edges(n, src, dst, ids)


def save_graph(g, path):
    """Write ``g`` as a ``src<TAB>dst`` edge file in ascending index order.

    Reloading gives the same edge set keyed by external id; indices follow
    first appearance in the written file, and isolated nodes are not
    representable.  Use :func:`save_npz` for an exact copy.
    """
    src, dst = g.edges()
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in zip(src.tolist(), dst.tolist()):
            fh.write(f"{g.ids[a]}\t{g.ids[b]}\n")


def save_npz(g, path):
    """Binary cache; round-trips bit-exactly through :func:`load_npz`."""
    np.savez(
        path,
        ids=np.array(g.ids, dtype=object),
        out_ptr=g.out_ptr,
        out_idx=g.out_idx,
    )


def load_npz(path):
    with np.load(path, allow_pickle=True) as z:
        ids = tuple(z["ids"].tolist())
        out_ptr = z["out_ptr"]
        out_idx = z["out_idx"]
    src = np.repeat(np.arange(len(ids), dtype=np.int64), np.diff(out_ptr))
    return SocialGraph.from_edges(len(ids), src, out_idx, ids)
