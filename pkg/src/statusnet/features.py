"""Per-edge feature vectors for every ordered reciprocal pair.

Column layout (0-based)::

    0 followers(u)  1 followees(u)  2 friends(u)  3 pagerank(u)  4 rev_pagerank(u)
    5 followers(v)  6 followees(v)  7 friends(v)  8 pagerank(v)  9 rev_pagerank(v)
    10 common friends of u and v

Rows follow the graph's reciprocal CSR order (ascending ``(u, v)``), so a
row-aligned strength vector can be dropped straight into the propagation
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

FEATURE_NAMES = (
    "followers_u", "followees_u", "friends_u", "pagerank_u", "rev_pagerank_u",
    "followers_v", "followees_v", "friends_v", "pagerank_v", "rev_pagerank_v",
    "common_friends",
)
# columns that get log1p before standardization
COUNT_COLUMNS = (0, 1, 2, 5, 6, 7, 10)


@dataclass(frozen=True)
class NormParams:
    shift: np.ndarray
    scale: np.ndarray
    log_columns: tuple = COUNT_COLUMNS
    constant: tuple = ()

    def to_dict(self):
        return {
            "shift": [float(x) for x in self.shift],
            "scale": [float(x) for x in self.scale],
            "log_columns": list(self.log_columns),
            "constant": list(self.constant),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["shift"], dtype=float),
            np.asarray(d["scale"], dtype=float),
            tuple(d.get("log_columns", COUNT_COLUMNS)),
            tuple(d.get("constant", ())),
        )


@dataclass(frozen=True)
class EdgeFeatures:
    src: np.ndarray
    dst: np.ndarray
    x: np.ndarray
    normalized: bool = False
    norm_params: NormParams | None = None
    names: tuple = field(default=FEATURE_NAMES)

    @property
    def n_edges(self):
        return self.src.size

    @property
    def n_features(self):
        return self.x.shape[1]

    def edge_index(self, u, v):
        """Row of the ordered pair ``(u, v)``; KeyError if absent."""
        lo = np.searchsorted(self.src, u, side="left")
        hi = np.searchsorted(self.src, u, side="right")
        j = lo + np.searchsorted(self.dst[lo:hi], v)
        if j >= hi or self.dst[j] != v:
            raise KeyError(f"no features for edge ({u}, {v})")
        return int(j)


def common_friends(g, src, dst):
    """``|N_R(u) & N_R(v)|`` for each pair, by sorted-list intersection."""
    out = np.zeros(src.size, dtype=np.int64)
    ptr, idx = g.recip_ptr, g.recip_idx
    for e, (u, v) in enumerate(zip(src.tolist(), dst.tolist())):
        if v < u:
            continue  # symmetric; filled from the (v, u) row below
        a = idx[ptr[u]:ptr[u + 1]]
        b = idx[ptr[v]:ptr[v + 1]]
        out[e] = np.intersect1d(a, b, assume_unique=True).size
    # mirror values onto the v < u orientation
    key = src * g.n_nodes + dst
    rev = dst * g.n_nodes + src
    lower = dst < src
    pos = np.searchsorted(key, rev[lower])
    out[lower] = out[pos]
    return out


def extract_features(g, pr, rpr):
    """Raw 11-column features for every ordered reciprocal pair of ``g``."""
    n = g.n_nodes
    if len(pr) != n or len(rpr) != n:
        raise ValidationError("score vectors do not match the graph size")
    src, dst = g.recip_edges()
    node = np.column_stack([
        g.in_degree().astype(float),
        g.out_degree().astype(float),
        g.recip_degree().astype(float),
        np.asarray(pr.values, dtype=float),
        np.asarray(rpr.values, dtype=float),
    ])
    cf = common_friends(g, src, dst).astype(float)
    x = np.hstack([node[src], node[dst], cf[:, None]])
    return EdgeFeatures(src, dst, x)


def fit_norm(feat, fit_on=None):
    """Per-column shift/scale from the rows ``fit_on`` (all rows by default)."""
    rows = feat.x if fit_on is None else feat.x[np.asarray(fit_on)]
    if rows.shape[0] == 0:
        raise ValidationError("cannot fit normalization on an empty edge subset")
    log_cols = tuple(c for c in COUNT_COLUMNS if c < feat.n_features)
    t = rows.copy()
    t[:, log_cols] = np.log1p(t[:, log_cols])
    shift = t.mean(axis=0)
    scale = t.std(axis=0)
    constant = tuple(int(c) for c in np.flatnonzero(scale <= 1e-12 * np.maximum(1.0, np.abs(shift))))
    scale[list(constant)] = 1.0
    return NormParams(shift, scale, log_cols, constant)


def apply_norm(feat, params):
    if feat.normalized:
        raise ValidationError("features are already normalized")
    t = feat.x.copy()
    cols = list(params.log_columns)
    t[:, cols] = np.log1p(t[:, cols])
    t = (t - params.shift) / params.scale
    t[:, list(params.constant)] = 0.0
    return replace(feat, x=t, normalized=True, norm_params=params)


def normalize(feat, fit_on=None):
    """log1p on count columns, then z-score using statistics of ``fit_on``.

    Constant columns map to zero and are listed in ``norm_params.constant``.
    """
    if feat.normalized:
        raise ValidationError("features are already normalized")
    return apply_norm(feat, fit_norm(feat, fit_on))


def write_csv(feat, ids, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("u,v," + ",".join(f"x{i + 1}" for i in range(feat.n_features)) + "\n")
        for u, v, row in zip(feat.src.tolist(), feat.dst.tolist(), feat.x.tolist()):
            fh.write(f"{ids[u]},{ids[v]}," + ",".join(repr(float(a)) for a in row) + "\n")
