"""End-to-end run: graph and labels -> membership -> status -> group status -> evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import centrality, evaluation, features, inference, io, synth
from .group_status import group_status, pr_baseline, write_csv as write_group_csv

log = logging.getLogger(__name__)

ALGOS = ("sp", "up", "lp")
Q_SOURCES = ("optimized", "repropagated")


@dataclass
class InferenceParams:
    algo: str = "sp"
    lam: float = 1.0
    mu: float = 1.0
    eta: float = 0.1
    rel_improve: float = 0.01
    train_max_iter: int = 200
    batch_size: int | None = None
    seed_fraction: float = 0.8
    tol: float = 1e-6
    max_iter: int = 100
    q_source: str = "repropagated"
    damping: float = 0.85

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class InferenceOutput:
    q: np.ndarray                  # membership strengths used downstream
    pred: np.ndarray               # group index per node, -1 if none
    info: dict = field(default_factory=dict)
    train: inference.TrainResult | None = None
    feat: features.EdgeFeatures | None = None


def edge_features(g, damping=0.85, pr=None):
    pr = centrality.pagerank(g, d=damping) if pr is None else pr
    rpr = centrality.reversed_pagerank(g, d=damping)
    return features.normalize(features.extract_features(g, pr, rpr))


def run_inference(g, member, params, rng_seed=0, pr=None):
    """Infer memberships for the unlabelled nodes of ``g`` with ``params.algo``."""
    table = inference.membership_table(member)
    if params.algo == "up":
        out, it, conv = inference.infer_up(g, table, params.tol, params.max_iter)
        return InferenceOutput(out.q, inference.predict(out.q),
                               {"iterations": it, "converged": conv})
    if params.algo == "lp":
        labels, it, conv = inference.infer_lp(g, member, params.max_iter, rng_seed)
        q = np.zeros(member.shape, dtype=float)
        q[table.known] = member[table.known]
        inferred = np.flatnonzero(~table.known & (labels >= 0))
        q[inferred, labels[inferred]] = 1.0
        return InferenceOutput(q, labels, {"iterations": it, "converged": conv})
    if params.algo == "sp":
        feat = edge_features(g, params.damping, pr)
        res = inference.train_sp(
            g, feat, table, lam=params.lam, mu=params.mu, eta=params.eta,
            rel_improve=params.rel_improve, max_iter=params.train_max_iter,
            rng_seed=rng_seed, batch_size=params.batch_size, seed_fraction=params.seed_fraction,
        )
        dep = inference.deployed(res, table, params.q_source, g, feat, params.tol, params.max_iter)
        info = {
            "train_iterations": res.iterations,
            "train_attempts": res.attempts,
            "train_converged": res.converged,
            "stop_reason": res.stop_reason,
            "n_seeds": int(res.seeds.size),
            "n_targets": int(res.targets.size),
            "w": res.weights.w.tolist(),
            "training_log": list(res.weights.training_log),
        }
        return InferenceOutput(dep.q, inference.predict(dep.q), info, res, feat)
    raise ValueError(f"algo must be one of {ALGOS}")


def run_pipeline(out_dir, *, synth_cfg=None, graph=None, groups=None, member=None,
                 truth=None, reference=None, positives=None, params=None,
                 measure="pagerank", top_k=None, rng_seed=0, config_extra=None):
    """Run every stage and write artifacts to ``out_dir``; returns the summary dict.

    Either ``synth_cfg`` or ``graph``/``groups``/``member`` must be given.
    ``truth`` (full membership) enables accuracy; ``reference`` (per-group
    values) enables Spearman; ``positives`` (group mask) enables ROC/AUC.  For
    synthetic input these come from the planted structure, with the ``top_k``
    highest-status groups as positives.
    """
    params = params or InferenceParams()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = {"inference": params.to_dict(), "measure": measure, "seed": rng_seed}

    if synth_cfg is not None:
        s = synth.generate(synth_cfg)
        graph, groups, member, truth = s.graph, s.groups, s.observed_labels, s.full_labels
        reference = np.asarray(synth_cfg.status())
        k = top_k if top_k is not None else max(1, len(groups) // 3)
        positives = s.top_groups(k)
        resolved["synth"] = synth_cfg.to_dict()
        resolved["top_k"] = k
        io.write_json({
            "groups": list(groups),
            "planted_status": list(synth_cfg.status()),
            "planted_ranking": [groups[i] for i in s.planted_ranking],
            "top_groups": [groups[i] for i in np.flatnonzero(positives)],
            "full_labels": io.label_map(truth, graph.ids, groups),
        }, out / "ground-truth.json")
    if config_extra:
        resolved.update(config_extra)
    io.write_json(resolved, out / "resolved-config.json")

    pr = centrality.pagerank(graph, d=params.damping)
    if measure == "pagerank":
        status = pr
    elif measure == "reversed_pagerank":
        status = centrality.reversed_pagerank(graph, d=params.damping)
    else:
        status = centrality.compute(graph, measure)
    io.write_scores(status, graph.ids, out / "scores.csv")
    io.write_json(status.stats(), out / "scores.json")

    res = run_inference(graph, member, params, rng_seed, pr=pr)
    known = member.any(axis=1)
    io.write_q(res.q, graph.ids, groups, out / "q.csv")
    io.write_predictions(res.pred, graph.ids, groups, out / "predictions.csv")
    if res.train is not None:
        io.write_json({
            "w": res.train.weights.w.tolist(),
            "feature_names": list(res.feat.names),
            "norm_params": res.feat.norm_params.to_dict(),
            "training_log": res.train.weights.training_log,
            "config_digest": io.digest(resolved),
        }, out / "model.json")

    gs = group_status(res.q, status)
    base = pr_baseline(member, status)
    write_group_csv(gs, groups, out / "group-status.csv")
    write_group_csv(base, groups, out / "group-status-pr.csv")

    summary = {"algo": params.algo, "measure": measure, "inference": res.info,
               "n_nodes": graph.n_nodes, "n_edges": graph.n_edges, "n_known": int(known.sum())}
    report = evaluation.EvalReport()
    if truth is not None:
        ev = np.flatnonzero(truth.any(axis=1) & ~known)
        if ev.size:
            acc, bal, per = evaluation.accuracy(res.pred, truth, ev)
            report.accuracy, report.balanced_accuracy = acc, bal
            report.per_group_accuracy = {groups[i]: v for i, v in per.items()}
            truth_major = truth[ev].sum(axis=0).max() / ev.size
            summary["majority_baseline"] = float(truth_major)
            summary["n_evaluated"] = int(ev.size)
    if positives is not None:
        report.auc, report.roc_points = evaluation.roc_auc(gs.pi, positives)
        evaluation.write_roc_csv(report.roc_points, out / "roc.csv")
        if base.defined[positives].any() and base.defined[~positives].any():
            auc_pr, roc_pr = evaluation.roc_auc(base.pi, positives)
            summary["auc_pr_baseline"] = auc_pr
            evaluation.write_roc_csv(roc_pr, out / "roc-pr.csv")
    if reference is not None:
        report.spearman = evaluation.spearman(gs.pi, reference)
        summary["spearman_pr_baseline"] = evaluation.spearman(base.pi, reference)
    summary["eval"] = report.to_dict()
    io.write_json(report.to_dict(), out / "eval.json")
    io.write_json(summary, out / "summary.json")
    return summary
