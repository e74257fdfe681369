"""Command-line entry point: ``statusnet <subcommand> [flags]``.

Exit status: 0 on success, 2 for usage and input errors, 3 for numerical
failures.  Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _parallel, analysis, centrality, evaluation, features, io, synth
from .errors import (ConfigError, DivergenceError, DomainError, ParseError, StatusNetError,
                     ValidationError)
from .graph import load_graph, save_graph
from .group_status import group_status, pr_baseline, read_csv as read_group_csv
from .group_status import write_csv as write_group_csv
from .pipeline import ALGOS, Q_SOURCES, InferenceParams, run_inference, run_pipeline

log = logging.getLogger("statusnet")

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(StatusNetError):
    code = "usage"


def _formatter(prog):
    return argparse.ArgumentDefaultsHelpFormatter(prog, max_help_position=34)


def _common(p, graph=True):
    p.add_argument("--out", type=Path, default=Path("out"), help="artifact directory")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap; results do not depend on it")
    if graph:
        p.add_argument("--edges", type=Path, help="edge file, one 'src<TAB>dst' per line")
        p.add_argument("--dedupe", action="store_true", help="drop duplicate edges instead of failing")


def _inference_flags(p):
    p.add_argument("--algo", choices=ALGOS, default="sp", help="inference algorithm")
    p.add_argument("--lam", type=float, default=1.0, help="weight of the propagation-consistency term")
    p.add_argument("--mu", type=float, default=1.0, help="L2 penalty on tie-strength weights")
    p.add_argument("--eta", type=float, default=0.1, help="initial gradient step (halved on loss increase)")
    p.add_argument("--rel-improve", type=float, default=0.01,
                   help="stop training when the relative loss improvement drops below this")
    p.add_argument("--train-max-iter", type=int, default=200, help="training pass cap")
    p.add_argument("--batch-size", type=int, default=None,
                   help="loss terms per gradient step (default: all)")
    p.add_argument("--seed-fraction", type=float, default=0.8,
                   help="share of known nodes used as seeds during training")
    p.add_argument("--tol", type=float, default=1e-6, help="propagation tolerance (max entry change)")
    p.add_argument("--max-iter", type=int, default=100, help="propagation iteration cap")
    p.add_argument("--q-source", choices=Q_SOURCES, default="repropagated",
                   help="membership used after training")
    p.add_argument("--damping", type=float, default=0.85, help="PageRank damping factor")


def _params(args):
    return InferenceParams(
        algo=args.algo, lam=args.lam, mu=args.mu, eta=args.eta, rel_improve=args.rel_improve,
        train_max_iter=args.train_max_iter, batch_size=args.batch_size,
        seed_fraction=args.seed_fraction, tol=args.tol, max_iter=args.max_iter,
        q_source=args.q_source, damping=args.damping,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="statusnet", formatter_class=_formatter,
        description="Membership inference and group status on directed follower graphs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("pagerank", formatter_class=_formatter, help="PageRank scores")
    _common(p)
    p.add_argument("--damping", type=float, default=0.85, help="damping factor")
    p.add_argument("--tol", type=float, default=1e-12, help="per-node L1 tolerance")
    p.add_argument("--max-iter", type=int, default=200, help="iteration cap")
    p.add_argument("--reverse", action="store_true", help="reversed PageRank")

    p = sub.add_parser("centrality", formatter_class=_formatter, help="node status scores")
    _common(p)
    p.add_argument("--measure", choices=centrality.MEASURES, default="pagerank", help="status measure")
    p.add_argument("--damping", type=float, default=0.85, help="PageRank damping factor")

    p = sub.add_parser("infer", formatter_class=_formatter, help="infer unknown memberships")
    _common(p)
    p.add_argument("--labels", type=Path, help="known memberships, 'node_id<TAB>group' per line")
    p.add_argument("--dump-features", action="store_true", help="write edge feature CSVs (sp only)")
    _inference_flags(p)

    p = sub.add_parser("group-status", formatter_class=_formatter, help="group status scores")
    _common(p)
    p.add_argument("--q", type=Path, help="membership CSV from 'infer'")
    p.add_argument("--labels", type=Path, help="known memberships (for --pr-baseline)")
    p.add_argument("--pr-baseline", action="store_true", help="average over known members only")
    p.add_argument("--scores", type=Path, help="precomputed 'node_id,score' CSV")
    p.add_argument("--measure", choices=centrality.MEASURES, default="pagerank",
                   help="status measure when --scores is absent")
    p.add_argument("--min-strength", type=float, default=0.0, help="ignore strengths below this")

    p = sub.add_parser("eval", formatter_class=_formatter, help="evaluate predictions")
    _common(p)
    p.add_argument("--metric", choices=("accuracy", "cv", "auc", "spearman"), required=True,
                   help="what to evaluate")
    p.add_argument("--pred", type=Path, help="predictions CSV (accuracy)")
    p.add_argument("--truth", type=Path, help="true memberships TSV (accuracy)")
    p.add_argument("--eval-nodes", type=Path, help="node list restricting accuracy")
    p.add_argument("--labels", type=Path, help="known memberships (cv)")
    p.add_argument("--folds", type=int, default=10, help="number of folds (cv)")
    p.add_argument("--group-status", type=Path, help="group-status CSV (auc, spearman)")
    p.add_argument("--positives", type=Path, help="positive group names, one per line (auc)")
    p.add_argument("--reference", type=Path, help="'group,value' CSV (spearman)")
    _inference_flags(p)

    p = sub.add_parser("homophily", formatter_class=_formatter, help="same-group share by relation")
    _common(p)
    p.add_argument("--labels", type=Path, help="memberships TSV")
    p.add_argument("--samples", type=int, default=10_000_000, help="disconnected-pair draws")

    p = sub.add_parser("triangles", formatter_class=_formatter, help="three-link triad census")
    _common(p)

    p = sub.add_parser("followback", formatter_class=_formatter, help="follow-back ratio")
    _common(p)
    p.add_argument("--nodes", type=Path, help="node list (default: all nodes)")
    p.add_argument("--labels", type=Path, help="memberships TSV, with --group")
    p.add_argument("--group", help="restrict to members of this group")

    p = sub.add_parser("synth", formatter_class=_formatter, help="generate a synthetic dataset")
    _common(p, graph=False)
    _synth_flags(p)

    p = sub.add_parser("pipeline", formatter_class=_formatter, help="run every stage")
    _common(p)
    p.add_argument("--synth", metavar="PRESET|CONFIG",
                   help="synthetic preset name or config JSON instead of --edges/--labels")
    _synth_flags(p, with_preset=False)
    p.add_argument("--labels", type=Path, help="known memberships TSV")
    p.add_argument("--truth", type=Path, help="full memberships TSV for accuracy")
    p.add_argument("--reference", type=Path, help="'group,value' CSV for Spearman")
    p.add_argument("--positives", type=Path, help="positive group names for ROC/AUC")
    p.add_argument("--top-k", type=int, default=None,
                   help="positives = top-k planted groups (synthetic; default m//3)")
    p.add_argument("--measure", choices=centrality.MEASURES, default="pagerank", help="status measure")
    _inference_flags(p)
    return parser


def _synth_flags(p, with_preset=True):
    if with_preset:
        p.add_argument("--preset", default="default", choices=("default", "region"),
                       help="named configuration")
        p.add_argument("--config", type=Path, help="SynthConfig JSON (overrides --preset)")
    p.add_argument("--n", type=int, default=None, help="number of nodes (preset default)")
    p.add_argument("--m", type=int, default=None, help="number of groups (preset default)")
    p.add_argument("--observed-fraction", type=float, default=None,
                   help="share of nodes with observed labels (preset default 0.2)")
    p.add_argument("--bias-mode", choices=synth.BIAS_MODES, default=None,
                   help="observation sampling (preset default uniform)")


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.command} requires {', '.join(missing)}")


def _graph(args):
    _need(args, "edges")
    return load_graph(args.edges, dedupe=args.dedupe)


def _synth_config(args, name=None, path=None):
    overrides = {}
    if args.observed_fraction is not None:
        overrides["observed_fraction"] = args.observed_fraction
    if args.bias_mode is not None:
        overrides["bias_mode"] = args.bias_mode
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            # a ground-truth.json from 'synth' nests the config
            cfg = synth.SynthConfig.from_dict(raw.get("config", raw))
        except (OSError, json.JSONDecodeError, TypeError, AttributeError) as exc:
            raise ConfigError(f"cannot read synthetic config {path}: {exc}") from None
        if args.n is not None or args.m is not None:
            raise UsageError("--n/--m cannot be combined with a config file")
        return replace(cfg, rng_seed=args.seed, **overrides).validate()
    return synth.preset(name, n_nodes=args.n, m_groups=args.m, rng_seed=args.seed, **overrides)


def _write_config(args, out, extra=None):
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
           if k not in ("threads", "verbose", "func")}
    if extra:
        cfg.update(extra)
    io.write_json(cfg, out / "resolved-config.json")


def _read_group_values(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#") or (lineno == 1 and not _is_number(s.rsplit(",", 1)[-1])):
                continue
            try:
                name, val = s.rsplit(",", 1)
                out[name] = float(val)
            except ValueError:
                raise ParseError("expected 'group,value'", path, lineno) from None
    return out


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def _read_names(path):
    with open(path, encoding="utf-8") as fh:
        return [s.strip() for s in fh if s.strip() and not s.startswith("#")]


def cmd_pagerank(args, out):
    g = _graph(args)
    fn = centrality.reversed_pagerank if args.reverse else centrality.pagerank
    scores = fn(g, d=args.damping, tol=args.tol, max_iter=args.max_iter)
    io.write_scores(scores, g.ids, out / "scores.csv")
    io.write_json(scores.stats(), out / "scores.json")
    _write_config(args, out)
    print(f"{scores.measure}: {g.n_nodes} nodes, {scores.iterations} iterations, "
          f"residual {scores.residual:.3g}, converged={scores.converged}")


def cmd_centrality(args, out):
    g = _graph(args)
    kw = {"d": args.damping} if args.measure in ("pagerank", "reversed_pagerank") else {}
    scores = centrality.compute(g, args.measure, **kw)
    io.write_scores(scores, g.ids, out / "scores.csv")
    io.write_json(scores.stats(), out / "scores.json")
    _write_config(args, out)
    print(f"{scores.measure}: {g.n_nodes} nodes, converged={scores.converged}")


def cmd_infer(args, out):
    _need(args, "edges", "labels")
    g = _graph(args)
    catalog, member = io.load_labels(args.labels, g)
    params = _params(args)
    res = run_inference(g, member, params, args.seed)
    groups = catalog.groups
    io.write_q(res.q, g.ids, groups, out / "q.csv")
    io.write_predictions(res.pred, g.ids, groups, out / "predictions.csv")
    _write_config(args, out)
    if res.train is not None:
        io.write_json({
            "w": res.train.weights.w.tolist(),
            "feature_names": list(res.feat.names),
            "norm_params": res.feat.norm_params.to_dict(),
            "training_log": res.train.weights.training_log,
            "config_digest": io.digest(json.loads((out / "resolved-config.json").read_text())),
        }, out / "model.json")
        if args.dump_features:
            pr = centrality.pagerank(g, d=args.damping)
            raw = features.extract_features(g, pr, centrality.reversed_pagerank(g, d=args.damping))
            features.write_csv(raw, g.ids, out / "features-raw.csv")
            features.write_csv(res.feat, g.ids, out / "features-normalized.csv")
            io.write_json(res.feat.norm_params.to_dict(), out / "norm-params.json")
    io.write_json(res.info, out / "inference.json")
    print(f"{args.algo}: {int((~member.any(axis=1)).sum())} unknown nodes inferred")


def cmd_group_status(args, out):
    g = _graph(args)
    if args.scores is not None:
        p = io.read_scores(args.scores, g)
    else:
        kw = {"d": 0.85} if args.measure in ("pagerank", "reversed_pagerank") else {}
        p = centrality.compute(g, args.measure, **kw).values
    if args.pr_baseline:
        if args.q is not None:
            raise UsageError("--pr-baseline uses --labels, not --q")
        _need(args, "labels")
        catalog, member = io.load_labels(args.labels, g)
        groups = catalog.groups
        gs = pr_baseline(member, p)
    else:
        _need(args, "q")
        groups, q = io.read_q(args.q, g)
        gs = group_status(q, p, min_strength=args.min_strength)
    write_group_csv(gs, groups, out / "group-status.csv")
    _write_config(args, out)
    for rank, name, pi, support in gs.rows(groups):
        print(f"{'-' if rank is None else rank:>4}  {name:<24} "
              f"{'undefined' if pi is None else f'{pi:.6g}':>12}  support={support:.4g}")


def cmd_eval(args, out):
    report = evaluation.EvalReport()
    if args.metric == "accuracy":
        _need(args, "edges", "pred", "truth")
        g = _graph(args)
        catalog, truth = io.load_labels(args.truth, g)
        pred, listed = io.read_predictions(args.pred, g, catalog.groups)
        ev = listed & truth.any(axis=1)
        if args.eval_nodes is not None:
            mask = np.zeros(g.n_nodes, dtype=bool)
            mask[io.read_node_list(args.eval_nodes, g)] = True
            ev &= mask
        acc, bal, per = evaluation.accuracy(pred, truth, np.flatnonzero(ev))
        report.accuracy, report.balanced_accuracy = acc, bal
        report.per_group_accuracy = {catalog.groups[i]: v for i, v in per.items()}
    elif args.metric == "cv":
        _need(args, "edges", "labels")
        g = _graph(args)
        catalog, member = io.load_labels(args.labels, g)
        params = _params(args)
        known = np.flatnonzero(member.any(axis=1))
        accs, bals = [], []
        for k, (train, test) in enumerate(evaluation.kfold(known, member, args.folds, args.seed)):
            masked = member.copy()
            masked[test] = False
            res = run_inference(g, masked, params, args.seed + k)
            acc, bal, _ = evaluation.accuracy(res.pred, member, test)
            accs.append(acc)
            bals.append(bal)
            report.fold_results.append({"fold": k, "n_test": int(test.size),
                                        "accuracy": acc, "balanced_accuracy": bal})
        report.accuracy = float(np.mean(accs))
        report.balanced_accuracy = float(np.mean(bals))
    elif args.metric == "auc":
        _need(args, "group_status", "positives")
        pi = read_group_csv(args.group_status)
        names = list(pi)
        pos_names = set(_read_names(args.positives))
        unknown = pos_names - set(names)
        if unknown:
            raise ValidationError(f"positive groups not in the group-status file: {sorted(unknown)}")
        report.auc, report.roc_points = evaluation.roc_auc(
            [pi[n] for n in names], np.array([n in pos_names for n in names]))
        evaluation.write_roc_csv(report.roc_points, out / "roc.csv")
    elif args.metric == "spearman":
        _need(args, "group_status", "reference")
        pi = read_group_csv(args.group_status)
        ref = _read_group_values(args.reference)
        names = [n for n in pi if n in ref]
        report.spearman = evaluation.spearman([pi[n] for n in names], [ref[n] for n in names])
    io.write_json(report.to_dict(), out / "eval.json")
    _write_config(args, out)
    d = report.to_dict()
    print(json.dumps({k: d[k] for k in ("accuracy", "balanced_accuracy", "auc", "spearman")}))


def cmd_homophily(args, out):
    _need(args, "edges", "labels")
    g = _graph(args)
    _, member = io.load_labels(args.labels, g)
    rep = analysis.homophily(g, member, args.samples, args.seed)
    io.write_json(rep.to_dict(), out / "homophily.json")
    _write_config(args, out)
    print(f"{'relation':<14}{'p(same group)':>15}{'pairs':>12}{'se':>12}")
    for name in analysis.RELATIONS:
        e = getattr(rep, name)
        p = "undefined" if e.n == 0 else f"{e.p:.4f}"
        se = "" if e.n == 0 else f"{e.se:.2e}"
        print(f"{name:<14}{p:>15}{e.n:>12}{se:>12}")


def cmd_triangles(args, out):
    g = _graph(args)
    tc = analysis.triangle_census(g)
    io.write_json(tc.to_dict(), out / "triangles.json")
    _write_config(args, out)
    ratio = "undefined" if tc.type_II == 0 else f"{tc.ratio:.3f}"
    print(f"type I (transitive): {tc.type_I}\ntype II (cyclic):    {tc.type_II}\n"
          f"other (reciprocal pair + one link): {tc.other}\nratio I/II: {ratio}")


def cmd_followback(args, out):
    g = _graph(args)
    nodes = None
    if args.nodes is not None:
        nodes = io.read_node_list(args.nodes, g)
    if args.group is not None:
        _need(args, "labels")
        catalog, member = io.load_labels(args.labels, g)
        if args.group not in catalog.groups:
            raise ValidationError(f"unknown group {args.group!r}")
        in_group = member[:, catalog.index(args.group)]
        nodes = np.flatnonzero(in_group) if nodes is None else np.intersect1d(nodes, np.flatnonzero(in_group))
    fb = analysis.follow_back_ratio(g, nodes)
    io.write_json(fb.to_dict(), out / "followback.json")
    _write_config(args, out)
    ratio = "undefined" if np.isnan(fb.ratio) else f"{fb.ratio:.4f}"
    print(f"follow-back ratio {ratio} over {fb.included} node(s); {fb.excluded} without followers excluded")


def cmd_synth(args, out):
    cfg = _synth_config(args, args.preset, args.config)
    s = synth.generate(cfg)
    g = s.graph
    save_graph(g, out / "edges.tsv")
    io.write_labels(s.observed_labels, g.ids, s.groups, out / "labels.tsv")
    io.write_labels(s.full_labels, g.ids, s.groups, out / "truth.tsv")
    io.write_json({
        "config": cfg.to_dict(),
        "groups": list(s.groups),
        "planted_status": list(cfg.status()),
        "planted_ranking": [s.groups[i] for i in s.planted_ranking],
        "expected_shares": synth.expected_shares(cfg),
        "full_labels": io.label_map(s.full_labels, g.ids, s.groups),
    }, out / "ground-truth.json")
    with open(out / "reference.csv", "w", encoding="utf-8") as fh:
        fh.write("group,value\n")
        for name, sigma in zip(s.groups, cfg.status()):
            fh.write(f"{name},{sigma!r}\n")
    _write_config(args, out, {"synth": cfg.to_dict()})
    print(f"synthetic graph: {g.n_nodes} nodes, {g.n_edges} edges, "
          f"{int(s.observed_labels.any(axis=1).sum())} observed labels")


def cmd_pipeline(args, out):
    params = _params(args)
    if args.synth is not None:
        if args.edges is not None or args.labels is not None:
            raise UsageError("--synth conflicts with --edges/--labels")
        path = Path(args.synth)
        cfg = _synth_config(args, None, path) if args.synth.endswith(".json") else \
            _synth_config(args, args.synth, None)
        summary = run_pipeline(out, synth_cfg=cfg, params=params, measure=args.measure,
                               top_k=args.top_k, rng_seed=args.seed,
                               config_extra={"argv": _argv_record(args)})
    else:
        _need(args, "edges", "labels")
        g = _graph(args)
        catalog, member = io.load_labels(args.labels, g)
        groups = catalog.groups
        truth = io.load_labels(args.truth, g, groups)[1] if args.truth is not None else None
        reference = positives = None
        if args.reference is not None:
            ref = _read_group_values(args.reference)
            reference = np.array([ref.get(n, np.nan) for n in groups])
        if args.positives is not None:
            names = set(_read_names(args.positives))
            positives = np.array([n in names for n in groups])
        summary = run_pipeline(out, graph=g, groups=groups, member=member, truth=truth,
                               reference=reference, positives=positives, params=params,
                               measure=args.measure, rng_seed=args.seed,
                               config_extra={"argv": _argv_record(args)})
    ev = summary["eval"]
    print(json.dumps({k: ev[k] for k in ("accuracy", "balanced_accuracy", "auc", "spearman")}))


def _argv_record(args):
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
            if k not in ("threads", "verbose", "func", "out")}


COMMANDS = {
    "pagerank": cmd_pagerank,
    "centrality": cmd_centrality,
    "infer": cmd_infer,
    "group-status": cmd_group_status,
    "eval": cmd_eval,
    "homophily": cmd_homophily,
    "triangles": cmd_triangles,
    "followback": cmd_followback,
    "synth": cmd_synth,
    "pipeline": cmd_pipeline,
}


def _fail(code, exit_status, message):
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return exit_status


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        return _fail("usage", EXIT_USAGE, "--threads must be at least 1")
    _parallel.set_threads(args.threads)
    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](args, out)
    except (UsageError, ParseError, ValidationError, ConfigError) as exc:
        return _fail(exc.code, EXIT_USAGE, str(exc))
    except FileNotFoundError as exc:
        return _fail("missing-input", EXIT_USAGE, str(exc))
    except (DomainError, DivergenceError, FloatingPointError) as exc:
        return _fail(getattr(exc, "code", "numeric"), EXIT_NUMERIC, str(exc))
    finally:
        _parallel.set_threads(1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
