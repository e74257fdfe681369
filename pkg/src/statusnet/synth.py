"""Synthetic follower graphs with planted groups, homophily and status.

Every unordered pair of nodes independently becomes a friendship (edges both
ways), a one-way follow, or stays disconnected, with probabilities that depend
only on whether the two nodes share a group.  One-way follows point from the
less to the more popular node with Bradley-Terry odds, where a node's
popularity is its group's planted status times a Pareto draw.  This gives a
block-model homophily structure plus a status-ordered follower structure.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .graph import SocialGraph

BIAS_MODES = ("uniform", "popularity_biased")
# Probability that two users share a group (region column of the reference data)
REGION_TARGETS = {"recip_p": 0.530, "oneway_p": 0.381, "disc_p": 0.240}


@dataclass(frozen=True)
class SynthConfig:
    n_nodes: int = 2000
    m_groups: int = 4
    group_sizes: tuple | None = None
    planted_status: tuple | None = None
    p_recip_within: float = 0.02
    p_recip_cross: float = 0.002
    p_oneway_within: float = 0.01
    p_oneway_cross: float = 0.005
    popularity_exponent: float = 1.5
    observed_fraction: float = 0.2
    bias_mode: str = "uniform"
    bias_strength: float = 3.0
    # cross-group friendships favour popular endpoints by (1+c) q^c, q the
    # popularity quantile; mean factor 1, so block-level shares are kept
    cross_popularity_coupling: float = 0.0
    rng_seed: int = 0

    def sizes(self):
        if self.group_sizes is not None:
            return tuple(int(s) for s in self.group_sizes)
        base, extra = divmod(self.n_nodes, self.m_groups)
        return tuple(base + (1 if i < extra else 0) for i in range(self.m_groups))

    def status(self):
        if self.planted_status is not None:
            return tuple(float(s) for s in self.planted_status)
        # evenly spaced on a log scale, group 0 highest
        return tuple(float(x) for x in np.geomspace(4.0, 1.0, self.m_groups)) if self.m_groups > 1 else (1.0,)

    def validate(self):
        if self.n_nodes < 1 or self.m_groups < 1:
            raise ConfigError("n_nodes and m_groups must be positive")
        sizes = self.sizes()
        if len(sizes) != self.m_groups:
            raise ConfigError(f"{len(sizes)} group sizes given for {self.m_groups} groups")
        if min(sizes) < 1 or sum(sizes) != self.n_nodes:
            raise ConfigError(f"group sizes must be positive and sum to n_nodes={self.n_nodes}")
        for name in ("p_recip_within", "p_recip_cross", "p_oneway_within", "p_oneway_cross"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name}={p} outside [0, 1]")
        status = self.status()
        if len(status) != self.m_groups:
            raise ConfigError("planted_status needs one value per group")
        if len(set(status)) != len(status) or min(status) <= 0:
            raise ConfigError("planted status values must be positive and distinct")
        if not 0.0 < self.observed_fraction <= 1.0:
            raise ConfigError("observed_fraction must lie in (0, 1]")
        if self.bias_mode not in BIAS_MODES:
            raise ConfigError(f"bias_mode must be one of {BIAS_MODES}")
        if self.popularity_exponent <= 0:
            raise ConfigError("popularity_exponent must be positive")
        if self.cross_popularity_coupling < 0:
            raise ConfigError("cross_popularity_coupling must be non-negative")
        return self

    def to_dict(self):
        d = asdict(self)
        d["group_sizes"] = list(self.sizes())
        d["planted_status"] = list(self.status())
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("group_sizes", "planted_status"):
            if d.get(k) is not None:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class SynthGraph:
    graph: SocialGraph
    groups: tuple
    full_labels: np.ndarray       # bool n x m
    observed_labels: np.ndarray   # bool n x m, rows of unobserved nodes all False
    planted_ranking: np.ndarray   # group indices by descending planted status
    popularity: np.ndarray
    config: SynthConfig = field(repr=False, default=None)

    def top_groups(self, k):
        """Indicator of the ``k`` groups with highest planted status."""
        top = np.zeros(len(self.groups), dtype=bool)
        top[self.planted_ranking[:k]] = True
        return top


def generate(cfg, block_rows=256):
    """Sample a graph, its full labels and an observed subset from ``cfg``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.rng_seed)
    n, m = cfg.n_nodes, cfg.m_groups
    sizes = np.asarray(cfg.sizes())
    sigma = np.asarray(cfg.status())
    group = rng.permutation(np.repeat(np.arange(m), sizes))
    z = 1.0 + rng.pareto(cfg.popularity_exponent, n)
    pop = sigma[group] * z
    c = cfg.cross_popularity_coupling
    quantile = (np.argsort(np.argsort(z, kind="stable"), kind="stable") + 0.5) / n
    h = (1.0 + c) * quantile ** c

    pr = np.array([cfg.p_recip_cross, cfg.p_recip_within])
    po = np.array([cfg.p_oneway_cross, cfg.p_oneway_within])
    src_parts, dst_parts = [], []
    for lo in range(0, n, block_rows):
        hi = min(n, lo + block_rows)
        rows = np.arange(lo, hi)[:, None]
        cols = np.arange(n)[None, :]
        upper = cols > rows
        same = (group[lo:hi, None] == group[None, :]).astype(np.int64)
        u = rng.random((hi - lo, n))
        p_r = pr[same]
        if c > 0:
            cross = same == 0
            p_r = np.where(cross, np.minimum(1.0, p_r * h[lo:hi, None] * h[None, :]), p_r)
        recip = upper & (u < p_r)
        oneway = upper & ~recip & (u < p_r + (1.0 - p_r) * po[same])
        i, j = np.nonzero(recip)
        i += lo
        src_parts += [i, j]
        dst_parts += [j, i]
        i, j = np.nonzero(oneway)
        i += lo
        # follow the more popular endpoint with Bradley-Terry odds
        to_j = rng.random(i.size) < pop[j] / (pop[i] + pop[j])
        src_parts.append(np.where(to_j, i, j))
        dst_parts.append(np.where(to_j, j, i))
    src = np.concatenate(src_parts) if src_parts else np.zeros(0, dtype=np.int64)
    dst = np.concatenate(dst_parts) if dst_parts else np.zeros(0, dtype=np.int64)
    g = SocialGraph.from_edges(n, src, dst, [f"u{i}" for i in range(n)])

    full = np.zeros((n, m), dtype=bool)
    full[np.arange(n), group] = True
    n_obs = max(1, int(round(cfg.observed_fraction * n)))
    if cfg.bias_mode == "uniform":
        obs = rng.choice(n, size=n_obs, replace=False)
    else:
        obs = rng.choice(n, size=n_obs, replace=False, p=_observation_weights(cfg, group, z, sigma))
    observed = np.zeros_like(full)
    observed[obs] = full[obs]
    ranking = np.argsort(-sigma, kind="stable")
    groups = tuple(f"g{i}" for i in range(m))
    return SynthGraph(g, groups, full, observed, ranking, pop, cfg)


def _observation_weights(cfg, group, z, sigma):
    # high-status groups are observed broadly; low-status groups mostly through
    # their most popular members
    span = sigma.max() - sigma.min()
    t = (sigma.max() - sigma[group]) / span if span > 0 else np.zeros(group.size)
    w = (sigma[group] / sigma.max()) * z ** (cfg.bias_strength * t)
    return w / w.sum()


@dataclass
class Calibration:
    config: SynthConfig
    expected: dict
    residual: dict


def _pair_counts(sizes):
    sizes = np.asarray(sizes, dtype=np.int64)
    n = int(sizes.sum())
    within = int((sizes * (sizes - 1) // 2).sum())
    return within, n * (n - 1) // 2 - within


def expected_shares(cfg):
    """Expected same-group probability per relation class under ``cfg``."""
    wp, cp = _pair_counts(cfg.sizes())
    rw, rc = cfg.p_recip_within, cfg.p_recip_cross
    aw = (1 - rw) * cfg.p_oneway_within
    ac = (1 - rc) * cfg.p_oneway_cross

    def share(a, b):
        return a / (a + b) if a + b > 0 else float("nan")

    return {
        "recip_p": share(wp * rw, cp * rc),
        "oneway_p": share(wp * aw, cp * ac),
        "disc_p": share(wp * (1 - rw - aw), cp * (1 - rc - ac)),
    }


def _sizes_for_within_pairs(n, m, target):
    """Integer group sizes (descending, each >= 1) whose within-pair count is
    as close as possible to ``target``: a geometric profile found by
    bisection, then single-node moves that shrink the remaining gap."""
    def profile(r):
        w = r ** np.arange(m)
        s = np.maximum(1, np.floor(w / w.sum() * n)).astype(np.int64)
        s[0] += n - s.sum()
        return s

    lo, hi = 1e-9, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if _pair_counts(profile(mid))[0] > target:
            lo = mid
        else:
            hi = mid
    sizes = profile(hi)
    for _ in range(10 * n):
        gap = target - _pair_counts(sizes)[0]
        if gap == 0:
            break
        # moving a node from a to b changes the within count by s_b - s_a + 1
        best = None
        for a in range(m):
            if sizes[a] <= 1:
                continue
            for b in range(m):
                if a == b:
                    continue
                delta = int(sizes[b] - sizes[a] + 1)
                score = abs(gap - delta)
                if score < abs(gap) and (best is None or score < best[0]):
                    best = (score, a, b)
        if best is None:
            break
        sizes[best[1]] -= 1
        sizes[best[2]] += 1
    return tuple(int(s) for s in sorted(sizes.tolist(), reverse=True))


def calibrate_to_table1(target, sizes=None, n_nodes=5000, m_groups=34,
                        mean_friends=25.0, mean_oneway=30.0, disc_tol=1e-3, **overrides):
    """Block-model probabilities reproducing target same-group shares.

    ``target`` holds ``recip_p`` and ``oneway_p`` and optionally ``disc_p``.
    ``mean_friends`` and ``mean_oneway`` fix the expected per-node number of
    friendships and one-way links.  The disconnected share is fixed by the
    group-size mix: with ``sizes=None`` sizes are solved to hit ``disc_p``
    (equal sizes if ``disc_p`` is absent); with explicit sizes a ``disc_p``
    further than ``disc_tol`` from what they imply is an error.
    """
    t_r = float(target["recip_p"])
    t_o = float(target["oneway_p"])
    t_d = target.get("disc_p")
    for name, v in (("recip_p", t_r), ("oneway_p", t_o)) + ((("disc_p", t_d),) if t_d is not None else ()):
        if not 0.0 < v < 1.0:
            raise ConfigError(f"target {name}={v} must lie in (0, 1)")
    n = int(n_nodes if sizes is None else sum(sizes))
    total = n * (n - 1) // 2
    r_pairs = n * mean_friends / 2
    o_pairs = n * mean_oneway / 2
    if r_pairs + o_pairs >= total:
        raise ConfigError("requested degrees exceed the number of node pairs")

    if sizes is None:
        if t_d is None:
            sizes = SynthConfig(n_nodes=n, m_groups=m_groups).sizes()
        else:
            need = t_d * (total - r_pairs - o_pairs) + t_r * r_pairs + t_o * o_pairs
            lo_wp = _pair_counts(SynthConfig(n_nodes=n, m_groups=m_groups).sizes())[0]
            hi_wp = _pair_counts((n - m_groups + 1,) + (1,) * (m_groups - 1))[0]
            if need < lo_wp:
                lo_d = (lo_wp - t_r * r_pairs - t_o * o_pairs) / (total - r_pairs - o_pairs)
                raise ConfigError(f"disc_p={t_d} below the minimum {lo_d:.4f} reachable with "
                                  f"{m_groups} groups (equal sizes)")
            if need > hi_wp:
                raise ConfigError(f"disc_p={t_d} above the maximum reachable with {m_groups} groups")
            sizes = _sizes_for_within_pairs(n, m_groups, round(need))
    sizes = tuple(int(s) for s in sizes)
    wp, cp = _pair_counts(sizes)
    if wp == 0 or cp == 0:
        raise ConfigError("need at least one within-group and one cross-group pair")

    p_rw = t_r * r_pairs / wp
    p_rc = (1 - t_r) * r_pairs / cp
    a_w = t_o * o_pairs / wp
    a_c = (1 - t_o) * o_pairs / cp
    if p_rw + a_w > 1.0:
        raise ConfigError(f"within-group link probability {p_rw + a_w:.3f} exceeds 1; "
                          f"lower recip_p/oneway_p or the degrees")
    if p_rc + a_c > 1.0:
        raise ConfigError(f"cross-group link probability {p_rc + a_c:.3f} exceeds 1")
    cfg = SynthConfig(
        n_nodes=n, m_groups=len(sizes), group_sizes=sizes,
        p_recip_within=p_rw, p_recip_cross=p_rc,
        p_oneway_within=a_w / (1 - p_rw), p_oneway_cross=a_c / (1 - p_rc),
    )
    cfg = replace(cfg, **overrides).validate()
    expected = expected_shares(cfg)
    residual = {"recip_p": expected["recip_p"] - t_r, "oneway_p": expected["oneway_p"] - t_o}
    if t_d is not None:
        residual["disc_p"] = expected["disc_p"] - t_d
        if abs(residual["disc_p"]) > disc_tol:
            raise ConfigError(f"disc_p={t_d} not reachable with the given group sizes "
                              f"(they imply {expected['disc_p']:.4f})")
    return Calibration(cfg, expected, residual)


def preset(name, n_nodes=None, m_groups=None, rng_seed=0, **overrides):
    """Named configurations.

    ``default``: region-level reciprocal/one-way homophily on equal groups,
    with popular users befriending across groups more often.
    ``region``: all three region shares including the disconnected one, with
    solved unequal group sizes.
    """
    if name == "default":
        overrides.setdefault("cross_popularity_coupling", 1.0)
        cal = calibrate_to_table1(
            {"recip_p": REGION_TARGETS["recip_p"], "oneway_p": REGION_TARGETS["oneway_p"]},
            n_nodes=n_nodes or 2000, m_groups=m_groups or 4, rng_seed=rng_seed, **overrides)
    elif name == "region":
        cal = calibrate_to_table1(REGION_TARGETS, n_nodes=n_nodes or 5000,
                                  m_groups=m_groups or 34, rng_seed=rng_seed, **overrides)
    else:
        raise ConfigError(f"unknown synthetic preset {name!r}")
    return cal.config


def analytic_shares(sizes, p_within, p_cross):
    """Same-group share among pairs linked with the given block probabilities."""
    wp, cp = _pair_counts(sizes)
    a, b = wp * p_within, cp * p_cross
    return a / (a + b) if a + b > 0 else math.nan
