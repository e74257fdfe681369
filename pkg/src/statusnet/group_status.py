"""Group status: membership-weighted mean of member status scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class GroupStatus:
    pi: np.ndarray          # NaN marks an undefined (zero-support) group
    support: np.ndarray
    ranking: np.ndarray     # defined groups, descending pi, ties by index

    @property
    def defined(self):
        return ~np.isnan(self.pi)

    def rows(self, groups):
        """``(rank, group, pi, support)`` tuples; undefined groups last, rank None."""
        out = [(r + 1, groups[i], float(self.pi[i]), float(self.support[i]))
               for r, i in enumerate(self.ranking.tolist())]
        for i in np.flatnonzero(~self.defined).tolist():
            out.append((None, groups[i], None, float(self.support[i])))
        return out


def _values(p):
    return np.asarray(getattr(p, "values", p), dtype=float)


def group_status(q, p, restrict=None, min_strength=0.0):
    """``pi_i = sum_v q[v, i] P_v / sum_v q[v, i]`` over the (restricted) nodes.

    ``restrict`` is a boolean mask or index array; ``min_strength`` zeroes
    strengths below it before summing.
    """
    q = np.asarray(getattr(q, "q", q), dtype=float)
    pv = _values(p)
    if q.shape[0] != pv.size:
        raise ValidationError("membership rows and status scores differ in length")
    if restrict is not None:
        mask = np.zeros(q.shape[0], dtype=bool)
        mask[np.asarray(restrict)] = True
        q = q[mask]
        pv = pv[mask]
    if min_strength > 0:
        q = np.where(q >= min_strength, q, 0.0)
    support = q.sum(axis=0)
    weighted = q.T @ pv
    pi = np.full(q.shape[1], np.nan)
    ok = support > 0
    pi[ok] = weighted[ok] / support[ok]
    defined = np.flatnonzero(ok)
    ranking = defined[np.lexsort((defined, -pi[defined]))]
    return GroupStatus(pi, support, ranking)


def pr_baseline(member, p):
    """Plain average score of each group's known members, no inference."""
    member = np.asarray(member, dtype=bool)
    known = member.any(axis=1)
    return group_status(member.astype(float), p, restrict=known)


def write_csv(gs, groups, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rank,group,pi,support\n")
        for rank, name, pi, support in gs.rows(groups):
            fh.write(f"{'' if rank is None else rank},{name},"
                     f"{'' if pi is None else repr(pi)},{repr(support)}\n")


def read_csv(path):
    """``{group: pi}`` from a file written by :func:`write_csv` (undefined -> NaN)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:3] != ["rank", "group", "pi"]:
            raise ValidationError(f"{path}: not a group-status CSV")
        for line in fh:
            if not line.strip():
                continue
            _, name, pi, _ = line.rstrip("\n").split(",")
            out[name] = float(pi) if pi else float("nan")
    return out
