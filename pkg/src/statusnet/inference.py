"""Membership inference over reciprocal friendships.

Three inference modes share one data model, a ``MembershipTable`` holding an
``n x m`` strength matrix with known rows clamped to their 0/1 indicator:

* uniform propagation (every friend weighs the same),
* supervised propagation (friend weights ``f(u, v) = sigmoid(x_uv . w)`` with
  ``w`` learned from a seed/target split of the known users),
* hard label propagation (majority vote among labelled friends).

Strength rows are independent per group and never normalized to sum to one;
multi-group users are multi-hot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from ._parallel import row_product
from .errors import DivergenceError, DomainError, ValidationError

log = logging.getLogger(__name__)

UNKNOWN, SEED, TARGET = 0, 1, 2
PRIOR = 0.5


@dataclass(frozen=True)
class GroupCatalog:
    groups: tuple

    def __post_init__(self):
        if len(self.groups) < 1:
            raise ValidationError("a group catalog needs at least one group")
        if len(set(self.groups)) != len(self.groups):
            raise ValidationError("group names must be unique")

    def __len__(self):
        return len(self.groups)

    def index(self, name):
        return self.groups.index(name)


@dataclass
class MembershipTable:
    q: np.ndarray
    known: np.ndarray
    role: np.ndarray

    @property
    def n_groups(self):
        return self.q.shape[1]

    def copy(self):
        return MembershipTable(self.q.copy(), self.known.copy(), self.role.copy())


@dataclass
class TieWeights:
    w: np.ndarray
    training_log: list = field(default_factory=list)


@dataclass
class TrainResult:
    weights: TieWeights
    table: MembershipTable
    iterations: int
    attempts: int
    converged: bool
    stop_reason: str
    seeds: np.ndarray
    targets: np.ndarray


def membership_table(member, prior=PRIOR):
    """Table with known rows = indicator, unknown rows = ``prior``.

    ``member`` is a boolean ``n x m`` matrix; a node is known iff its row has
    at least one True.
    """
    member = np.asarray(member, dtype=bool)
    known = member.any(axis=1)
    q = np.where(known[:, None], member.astype(float), prior)
    role = np.where(known, SEED, UNKNOWN).astype(np.int8)
    return MembershipTable(q, known, role)


def strengths(feat, w):
    """``sigmoid(x_uv . w)`` for every feature row."""
    w = np.asarray(w, dtype=float)
    if w.shape != (feat.n_features,):
        raise ValidationError(f"weight vector has shape {w.shape}, expected ({feat.n_features},)")
    return expit(feat.x @ w)


def tie_strength(feat, w, u, v):
    j = feat.edge_index(u, v)
    return float(expit(feat.x[j] @ np.asarray(w, dtype=float)))


def _check_aligned(g, feat):
    if feat.n_edges != g.n_reciprocal or not np.array_equal(feat.dst, g.recip_idx):
        raise ValidationError("edge features do not match the graph's reciprocal edges")


def _weight_matrix(g, strength):
    """Row-normalized CSR: ``W[u, v] = f(u, v) / sum_v f(u, v)``; row sums."""
    n = g.n_nodes
    src = np.repeat(np.arange(n), g.recip_degree())
    total = np.bincount(src, weights=strength, minlength=n)
    norm = strength / total[src] if strength.size else strength
    w = sp.csr_matrix((norm, g.recip_idx, g.recip_ptr), shape=(n, n))
    return w, total


def propagate_step(g, table, strength, _w=None):
    """One Jacobi sweep of weighted averaging over friends.

    Clamped rows and rows without friends keep their values.
    """
    w = _weight_matrix(g, np.asarray(strength, dtype=float))[0] if _w is None else _w
    avg = row_product(w, table.q)
    update = ~table.known & (g.recip_degree() > 0)
    q = table.q.copy()
    q[update] = avg[update]
    return MembershipTable(q, table.known, table.role)


def _iterate(g, table, strength, tol, max_iter):
    if not table.known.any():
        raise DomainError("propagation needs at least one known node")
    w, _ = _weight_matrix(g, np.asarray(strength, dtype=float))
    free = ~table.known & (g.recip_degree() > 0)
    if not free.any():
        return table.copy(), 0, True
    cur = table
    for it in range(1, max_iter + 1):
        nxt = propagate_step(g, cur, None, _w=w)
        change = float(np.abs(nxt.q - cur.q).max())
        cur = nxt
        if change < tol:
            return cur, it, True
    return cur, max_iter, False


def infer_up(g, table, tol=1e-6, max_iter=100):
    """Uniform propagation to a fixed point. Returns ``(table, iterations, converged)``."""
    return _iterate(g, table, np.ones(g.n_reciprocal), tol, max_iter)


def infer_sp(g, feat, weights, table, tol=1e-6, max_iter=100):
    """Propagation with learned tie strengths, every known node clamped."""
    _check_aligned(g, feat)
    w = weights.w if isinstance(weights, TieWeights) else weights
    return _iterate(g, table, strengths(feat, w), tol, max_iter)


def predict(q):
    """Most probable group per row; ties go to the lowest index."""
    return np.argmax(np.asarray(q), axis=1)


def predict_group(table, u):
    q = table.q if isinstance(table, MembershipTable) else np.asarray(table)
    return int(np.argmax(q[u]))


def infer_lp(g, member, max_iter=100, rng_seed=0):
    """Hard label propagation; returns ``(labels, iterations, converged)``.

    Every node unlabelled at the start takes, synchronously, the most frequent
    label among its currently labelled friends.  Known nodes vote with each of
    their groups and keep them.  Ties are broken uniformly at random, drawing
    in ascending node order.  Nodes that never receive a label get ``-1``;
    known nodes report their lowest-index group.
    """
    member = np.asarray(member, dtype=bool)
    known = member.any(axis=1)
    if not known.any():
        raise DomainError("label propagation needs at least one labelled node")
    n, m = member.shape
    rng = np.random.default_rng(rng_seed)
    adj = sp.csr_matrix((np.ones(g.n_reciprocal), g.recip_idx, g.recip_ptr), shape=(n, n))
    labels = np.where(known, np.argmax(member, axis=1), -1)
    free = np.flatnonzero(~known & (g.recip_degree() > 0))
    votes = member.astype(float)

    for it in range(1, max_iter + 1):
        counts = row_product(adj, votes)[free]
        best = counts.max(axis=1)
        new = labels.copy()
        for row, u in enumerate(free.tolist()):
            if best[row] <= 0:
                continue
            tied = np.flatnonzero(counts[row] == best[row])
            new[u] = tied[0] if tied.size == 1 else rng.choice(tied)
        changed = not np.array_equal(new, labels)
        labels = new
        votes = member.astype(float)
        inferred = np.flatnonzero(~known & (labels >= 0))
        votes[inferred, labels[inferred]] = 1.0
        if not changed:
            return labels, it, True
    return labels, max_iter, False


def split_known(known, seed_fraction=0.8, rng=None):
    """Random seed/target split of the known nodes. Returns index arrays."""
    rng = np.random.default_rng(rng)
    idx = np.flatnonzero(known)
    perm = rng.permutation(idx)
    n_seed = int(round(seed_fraction * idx.size))
    return np.sort(perm[:n_seed]), np.sort(perm[n_seed:])


class SPObjective:
    """Loss of the joint tie-strength / membership problem and its gradient.

    ``L(w, Q) = 1/2 sum_{targets} |qhat_u - Q0_u|^2
              + lam/2 sum_{unknown} |qhat_u - q_u|^2 + mu/2 |w|^2``

    where ``qhat_u`` is the ``f``-weighted average of friends' rows.  Seeds are
    clamped to ``Q0``; target and unknown rows with at least one friend are free.
    Nodes without friends are constant and contribute nothing.
    """

    def __init__(self, g, feat, q0, seeds, targets, lam=1.0, mu=1.0):
        _check_aligned(g, feat)
        n = g.n_nodes
        self.g = g
        self.x = feat.x
        self.q0 = np.asarray(q0, dtype=float)
        self.lam = float(lam)
        self.mu = float(mu)
        self.src = np.repeat(np.arange(n), g.recip_degree())
        self.dst = g.recip_idx
        has_friends = g.recip_degree() > 0
        seed = np.zeros(n, dtype=bool)
        seed[seeds] = True
        target = np.zeros(n, dtype=bool)
        target[targets] = True
        if seed.any() and (seed & target).any():
            raise ValidationError("seed and target sets overlap")
        self.seed = seed
        self.target = target
        self.err_rows = target & has_friends
        self.cons_rows = ~seed & ~target & has_friends
        self.free = ~seed & has_friends

    def _forward(self, w, q):
        f = expit(self.x @ w)
        n = self.g.n_nodes
        total = np.bincount(self.src, weights=f, minlength=n)
        safe = np.where(total > 0, total, 1.0)
        wmat = sp.csr_matrix((f / safe[self.src], self.dst, self.g.recip_ptr), shape=(n, n))
        qhat = row_product(wmat, q)
        qhat[total == 0] = q[total == 0]
        return f, safe, wmat, qhat

    def loss(self, w, q):
        _, _, _, qhat = self._forward(w, q)
        e = qhat[self.err_rows] - self.q0[self.err_rows]
        c = qhat[self.cons_rows] - q[self.cons_rows]
        return 0.5 * float((e * e).sum()) + 0.5 * self.lam * float((c * c).sum()) + 0.5 * self.mu * float(w @ w)

    def gradient(self, w, q, rows=None, reg_scale=1.0):
        """``(loss, dL/dw, dL/dQ)``; ``rows`` restricts the data terms to a batch."""
        f, total, wmat, qhat = self._forward(w, q)
        err = self.err_rows if rows is None else self.err_rows & rows
        cons = self.cons_rows if rows is None else self.cons_rows & rows
        e = qhat[err] - self.q0[err]
        c = qhat[cons] - q[cons]
        loss = (0.5 * float((e * e).sum()) + 0.5 * self.lam * float((c * c).sum())
                + 0.5 * reg_scale * self.mu * float(w @ w))

        r = np.zeros_like(q)
        r[err] = e
        r[cons] = self.lam * c
        gq = np.asarray(wmat.T @ r)
        gq[cons] -= self.lam * c
        gq[~self.free] = 0.0

        coef = np.einsum("ej,ej->e", r[self.src], q[self.dst] - qhat[self.src])
        coef *= f * (1.0 - f) / total[self.src]
        gw = self.x.T @ coef + reg_scale * self.mu * w
        return loss, gw, gq


def train_sp(g, feat, table, split=None, lam=1.0, mu=1.0, eta=0.1, rel_improve=0.01,
             max_iter=200, rng_seed=0, batch_size=None, seed_fraction=0.8,
             init_q="propagate", min_eta=1e-10):
    """Learn tie-strength weights and memberships jointly by gradient descent.

    ``split`` is ``(seed_idx, target_idx)``; by default a random
    ``seed_fraction`` split of the known nodes.  Each iteration is one pass
    over the loss terms (all of them when ``batch_size`` is None, else shuffled
    mini-batches of nodes).  A pass that raises the loss is undone and the
    step size halved.  Training stops once an accepted pass improves the loss
    by less than ``rel_improve`` relative, or after ``max_iter`` passes.

    With ``init_q="propagate"`` the free rows start at the propagation fixed
    point under the initial weights (targets hidden); ``"prior"`` starts them
    at 1/2.
    """
    rng = np.random.default_rng(rng_seed)
    w = rng.uniform(-0.1, 0.1, size=feat.n_features)
    if split is None:
        seeds, targets = split_known(table.known, seed_fraction, rng)
    else:
        seeds, targets = (np.sort(np.asarray(s, dtype=np.int64)) for s in split)
        covered = np.zeros(g.n_nodes, dtype=bool)
        covered[seeds] = True
        covered[targets] = True
        if not np.array_equal(covered, table.known):
            raise ValidationError("seeds and targets must cover exactly the known nodes")
    if targets.size == 0:
        raise DomainError("training needs at least one target node")
    if seeds.size == 0:
        raise DomainError("training needs at least one seed node")

    obj = SPObjective(g, feat, table.q, seeds, targets, lam, mu)
    role = np.full(g.n_nodes, UNKNOWN, dtype=np.int8)
    role[seeds] = SEED
    role[targets] = TARGET
    clamp = MembershipTable(table.q.copy(), obj.seed.copy(), role)
    clamp.q[~obj.seed] = PRIOR
    if init_q == "propagate":
        clamp, _, _ = _iterate(g, clamp, strengths(feat, w), 1e-6, 100)
    elif init_q != "prior":
        raise ValidationError(f"init_q must be 'propagate' or 'prior', got {init_q!r}")
    q = clamp.q.copy()

    terms = np.flatnonzero(obj.err_rows | obj.cons_rows)
    if batch_size is None or batch_size >= terms.size:
        batches = None
    else:
        batches = int(batch_size)

    cur = obj.loss(w, q)
    if not np.isfinite(cur):
        raise DivergenceError("initial loss is not finite", w, q, [])
    history = [cur]
    accepted = 0
    attempts = 0
    converged = False
    stop = "max_iter"
    while attempts < max_iter:
        attempts += 1
        w_new, q_new = w.copy(), q.copy()
        for rows, scale in _passes(terms, batches, g.n_nodes, rng):
            _, gw, gq = obj.gradient(w_new, q_new, rows, scale)
            w_new -= eta * gw
            q_new -= eta * gq
            np.clip(q_new, 0.0, 1.0, out=q_new)
        new = obj.loss(w_new, q_new)
        if not np.isfinite(new) or not np.all(np.isfinite(w_new)):
            raise DivergenceError(f"loss became non-finite at pass {attempts}", w, q, history)
        if new > cur:
            eta *= 0.5
            log.debug("pass %d: loss %.6g > %.6g, step halved to %g", attempts, new, cur, eta)
            if eta < min_eta:
                stop = "step_underflow"
                break
            continue
        w, q = w_new, q_new
        accepted += 1
        improvement = (cur - new) / cur if cur > 0 else 0.0
        history.append(new)
        cur = new
        if improvement < rel_improve:
            converged = True
            stop = "rel_improve"
            break

    out = MembershipTable(q, table.known.copy(), role)
    return TrainResult(TieWeights(w, history), out, accepted, attempts, converged, stop, seeds, targets)


def _passes(terms, batch, n, rng):
    if batch is None:
        yield None, 1.0
        return
    order = rng.permutation(terms)
    chunks = [order[i:i + batch] for i in range(0, order.size, batch)]
    for chunk in chunks:
        rows = np.zeros(n, dtype=bool)
        rows[chunk] = True
        yield rows, chunk.size / terms.size


def deployed(result, table, q_source="optimized", g=None, feat=None, tol=1e-6, max_iter=100):
    """Membership table used downstream after training.

    ``optimized`` keeps the jointly optimized rows and resets every known row
    to its indicator; ``repropagated`` reruns weighted propagation with all
    known nodes clamped.
    """
    if q_source == "optimized":
        q = result.table.q.copy()
        q[table.known] = table.q[table.known]
        return replace(result.table, q=q)
    if q_source == "repropagated":
        if g is None or feat is None:
            raise ValidationError("repropagated mode needs the graph and features")
        out, _, _ = infer_sp(g, feat, result.weights, table, tol, max_iter)
        out.role = result.table.role.copy()
        return out
    raise ValidationError(f"q_source must be 'optimized' or 'repropagated', got {q_source!r}")
