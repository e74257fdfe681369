"""Label files, score/membership CSVs and JSON artifacts."""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .inference import GroupCatalog


def load_labels(path, graph, groups=None):
    """Read ``node_id<TAB>group`` lines into ``(catalog, member)``.

    A node may appear on several lines (multi-membership).  Groups are ordered
    by first appearance unless ``groups`` fixes the catalog.  Nodes absent
    from the graph are skipped with a warning.
    """
    path = Path(path)
    pairs = []
    names = list(groups) if groups is not None else []
    seen = set(names)
    missing = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError("expected 'node_id<TAB>group'", path, lineno)
            node, grp = parts
            if grp not in seen:
                if groups is not None:
                    raise ParseError(f"unknown group {grp!r}", path, lineno)
                seen.add(grp)
                names.append(grp)
            if node not in graph.index:
                missing += 1
                continue
            pairs.append((graph.index[node], grp))
    if missing:
        warnings.warn(f"{path}: {missing} label line(s) name nodes outside the graph", stacklevel=2)
    if not names:
        raise ValidationError(f"{path}: no labels")
    catalog = GroupCatalog(tuple(names))
    col = {g: i for i, g in enumerate(names)}
    member = np.zeros((graph.n_nodes, len(names)), dtype=bool)
    for u, grp in pairs:
        member[u, col[grp]] = True
    return catalog, member


def write_labels(member, ids, groups, path):
    with open(path, "w", encoding="utf-8") as fh:
        for u, row in enumerate(np.asarray(member, dtype=bool)):
            for i in np.flatnonzero(row).tolist():
                fh.write(f"{ids[u]}\t{groups[i]}\n")


def label_map(member, ids, groups):
    """``{node_id: [group, ...]}`` for every node with at least one group."""
    return {ids[u]: [groups[i] for i in np.flatnonzero(row)]
            for u, row in enumerate(np.asarray(member, dtype=bool)) if row.any()}


def write_scores(scores, ids, path):
    """``node_id,score`` sorted by descending score, ties by node index."""
    v = np.asarray(scores.values, dtype=float)
    order = np.lexsort((np.arange(v.size), -v))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_id,score\n")
        for u in order.tolist():
            fh.write(f"{ids[u]},{float(v[u])!r}\n")


def read_scores(path, graph):
    values = np.full(graph.n_nodes, np.nan)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "node_id,score":
            raise ParseError("expected header 'node_id,score'", path, 1)
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                node, val = line.rstrip("\n").rsplit(",", 1)
                values[graph.index[node]] = float(val)
            except (ValueError, KeyError) as exc:
                raise ParseError(f"bad score row ({exc})", path, lineno) from None
    if np.isnan(values).any():
        raise ValidationError(f"{path}: scores missing for {int(np.isnan(values).sum())} node(s)")
    return values


def write_q(q, ids, groups, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_id," + ",".join(groups) + "\n")
        for u, row in enumerate(np.asarray(q, dtype=float).tolist()):
            fh.write(ids[u] + "," + ",".join(repr(x) for x in row) + "\n")


def read_q(path, graph):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if not header or header[0] != "node_id" or len(header) < 2:
            raise ParseError("expected header 'node_id,group_1,...'", path, 1)
        groups = tuple(header[1:])
        q = np.full((graph.n_nodes, len(groups)), np.nan)
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(header) or parts[0] not in graph.index:
                raise ParseError("bad membership row", path, lineno)
            q[graph.index[parts[0]]] = [float(x) for x in parts[1:]]
    if np.isnan(q).any():
        raise ValidationError(f"{path}: membership rows missing")
    return groups, q


def write_predictions(pred, ids, groups, path, nodes=None):
    nodes = range(len(ids)) if nodes is None else nodes
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_id,group\n")
        for u in nodes:
            p = int(pred[u])
            fh.write(f"{ids[u]},{groups[p] if p >= 0 else ''}\n")


def read_predictions(path, graph, groups):
    col = {g: i for i, g in enumerate(groups)}
    pred = np.full(graph.n_nodes, -1, dtype=np.int64)
    listed = np.zeros(graph.n_nodes, dtype=bool)
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            node, grp = line.rstrip("\n").split(",", 1)
            if node not in graph.index:
                raise ParseError(f"unknown node {node!r}", path, lineno)
            u = graph.index[node]
            listed[u] = True
            if grp:
                if grp not in col:
                    raise ParseError(f"unknown group {grp!r}", path, lineno)
                pred[u] = col[grp]
    return pred, listed


def read_node_list(path, graph):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if s not in graph.index:
                raise ParseError(f"unknown node {s!r}", path, lineno)
            out.append(graph.index[s])
    return np.asarray(sorted(set(out)), dtype=np.int64)


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def digest(obj):
    return hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()
