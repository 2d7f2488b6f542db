"""Command-line front end.

Subcommands: ``audit dupes``, ``audit labels``, ``catalog build|show``,
``partition make``, ``features extract``, ``eval run|compare|relabel``,
``report perfect``. Exit codes: 0 success, 1 audit findings under
``--strict``, 2 errors. Every command is deterministic given its inputs,
flags and seed; randomized commands print their effective seed in the
report header. ``AUDIT_THREADS`` caps the fingerprinting worker count
(0 or unset = auto).
"""

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import classify, evaluate, faults, features, fingerprint, tagscore
from .corpus import Corpus, load_audio, load_metadata, load_tags
from .errors import AuditError

# fixed default so reruns without an explicit seed are reproducible
DEFAULT_SEED = 1234


def _worker_count() -> int:
    raw = os.environ.get("AUDIT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _load_corpus(args) -> Corpus:
    corpus = load_metadata(args.metadata)
    if getattr(args, "audio_dir", None):
        audio_dir = Path(args.audio_dir)
        corpus = Corpus(
            labels=corpus.labels,
            excerpts=tuple(dataclasses.replace(ex, audio_path=audio_dir / f"{ex.id}.wav")
                           for ex in corpus.excerpts),
            sample_rate=corpus.sample_rate,
            excerpt_duration=corpus.excerpt_duration)
    return corpus


def _fingerprint_corpus(corpus: Corpus, params=fingerprint.DEFAULT_PARAMS):
    def one(ex):
        samples = load_audio(ex, corpus.sample_rate)
        return ex.id, fingerprint.compute_fingerprint(samples, params, owner=ex.id)

    workers = _worker_count()
    if workers <= 1:
        return dict(one(ex) for ex in corpus.excerpts)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return dict(pool.map(one, corpus.excerpts))


def _write_text(path, text: str):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_json(path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_audit_dupes(args) -> int:
    corpus = _load_corpus(args)
    if args.cache and Path(args.cache).exists():
        hashsets = fingerprint.read_cache(args.cache)
    else:
        hashsets = _fingerprint_corpus(corpus)
        if args.cache:
            fingerprint.write_cache(args.cache, hashsets)
    matches = fingerprint.match_all([hashsets[ex.id] for ex in corpus.excerpts],
                                    threshold=args.threshold)
    matches.sort(key=lambda m: tuple(sorted(m.pair)))
    lines = ["id_a,id_b,score,offset_frames"]
    for m in matches:
        a, b = sorted(m.pair)
        lines.append(f"{a},{b},{m.score:.6f},{m.offset_mode}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 1 if args.strict and matches else 0


def cmd_audit_labels(args) -> int:
    corpus = load_metadata(args.metadata)
    tags = load_tags(args.tags, corpus)
    profiles = _profiles(corpus, tags)
    matrix = tagscore.score_matrix(profiles, delta_rule=args.delta_rule)
    verdicts = tagscore.detect_mislabelings(corpus, tags, profiles, matrix)
    lines = ["id,label,own_score,diagonal,best_other_label,best_other_score,delta,rule"]
    flagged = 0
    for v in verdicts:
        g = matrix.index(v.label)
        lines.append(
            f"{v.excerpt_id},{v.label},{v.own_score:.6f},{matrix.scores[g, g]:.6f},"
            f"{v.best_other_label or ''},{v.best_other_score:.6f},"
            f"{matrix.deltas[g]:.6f},{v.rule}")
        flagged += v.flagged
    _write_text(args.out, "\n".join(lines) + "\n")
    return 1 if args.strict and flagged else 0


def _profiles(corpus: Corpus, tags) -> list[tagscore.LabelProfile]:
    profiles = []
    for label in corpus.labels:
        sets = [tags[ex.id] for ex in corpus.with_label(label)
                if ex.identified and ex.id in tags and tags[ex.id].pairs]
        if sets:
            profiles.append(tagscore.label_profile(label, sets))
    return profiles


def _read_dupe_groups(path, threshold):
    """Exact-repetition groups from an ``audit dupes`` CSV."""
    edges = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            if float(row["score"]) >= threshold:
                edges.append((row["id_a"], row["id_b"]))
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for node in parent:
        groups.setdefault(find(node), set()).add(node)
    return sorted(tuple(sorted(g)) for g in groups.values() if len(g) > 1)


def cmd_catalog_build(args) -> int:
    corpus = load_metadata(args.metadata)
    exact_groups = _read_dupe_groups(args.dupes, args.threshold) if args.dupes else []
    recording_groups = []
    if args.recordings:
        recording_groups = json.loads(Path(args.recordings).read_text(encoding="utf-8"))
    distortions = []
    if args.distortions:
        distortions = [faults.Distortion(excerpt_id=d["id"], note=d.get("note", ""),
                                         usable_prefix_seconds=d.get("usable_prefix_seconds"))
                       for d in json.loads(Path(args.distortions).read_text(encoding="utf-8"))]
    verdicts, deltas = [], {}
    if args.tags:
        tags = load_tags(args.tags, corpus)
        profiles = _profiles(corpus, tags)
        matrix = tagscore.score_matrix(profiles, delta_rule=args.delta_rule)
        verdicts = [v for v in tagscore.detect_mislabelings(corpus, tags, profiles, matrix)
                    if v.flagged]
        deltas = {label: float(matrix.deltas[i]) for i, label in enumerate(matrix.labels)}
    catalog = faults.build_catalog(corpus, exact_groups=exact_groups,
                                   verdicts=verdicts, distortions=distortions,
                                   recording_groups=recording_groups, deltas=deltas)
    faults.save_catalog(catalog, args.out)
    return 0


def cmd_catalog_show(args) -> int:
    catalog = faults.load_catalog(args.catalog)
    by_kind = {}
    for g in catalog.repetitions:
        by_kind.setdefault(g.kind, []).append(g)
    lines = ["fault catalog"]
    lines.append(f"  labels: {', '.join(catalog.labels)}")
    lines.append(f"  exclusions: {len(catalog.exclusions())}")
    for kind in faults.REPETITION_KINDS:
        groups = by_kind.get(kind, [])
        members = sum(len(g.members) for g in groups)
        lines.append(f"  {kind} repetitions: {len(groups)} groups, {members} excerpts")
        for g in groups:
            lines.append(f"    ({', '.join(g.members)})")
    lines.append(f"  mislabelings: {len(catalog.mislabelings)}")
    for v in catalog.mislabelings:
        lines.append(f"    {v.excerpt_id} [{v.label}] rule={v.rule} "
                     f"own={v.own_score:.5f} best_other={v.best_other_label}")
    lines.append(f"  distortions: {len(catalog.distortions)}")
    for d in catalog.distortions:
        suffix = "" if d.usable_prefix_seconds is None else \
            f" (usable prefix {d.usable_prefix_seconds:g} s)"
        lines.append(f"    {d.excerpt_id}: {d.note}{suffix}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_partition_make(args) -> int:
    corpus = load_metadata(args.metadata)
    catalog = faults.load_catalog(args.catalog) if args.catalog else None
    artist_folds = None
    if args.artist_folds:
        artist_folds = json.loads(Path(args.artist_folds).read_text(encoding="utf-8"))
    partition = evaluate.make_partition(corpus, args.scheme, seed=args.seed,
                                        catalog=catalog, artist_folds=artist_folds,
                                        realization=args.realization)
    _write_json(args.out, {
        "scheme": partition.scheme,
        "seed": partition.seed,
        "realization": partition.realization,
        "folds": [list(f) for f in partition.folds],
    })
    return 0


def cmd_features_extract(args) -> int:
    corpus = _load_corpus(args)
    feats = {}
    for ex in corpus.excerpts:
        samples = load_audio(ex, corpus.sample_rate)
        feats[ex.id] = features.excerpt_features(samples, corpus.sample_rate)
    features.write_feature_cache(args.out, feats)
    return 0


def _report_from_results(corpus, results, scheme, kind, seed):
    realizations = []
    for res in results:
        folds = []
        for table in res.tables:
            fom = evaluate.figures_of_merit(table)
            folds.append({
                "confusion": [[round(v, 10) for v in row] for row in fom.confusion],
                "recall": fom.recall,
                "precision": fom.precision,
                "fscore": fom.fscore,
                "accuracy": fom.accuracy,
            })
        realizations.append({
            "folds": folds,
            "predictions": [{"id": p.excerpt_id, "true": p.true_label,
                             "predicted": p.predicted_label, "fold": p.fold}
                            for p in res.predictions],
        })
    mean, std = evaluate.accuracy_summary(results)
    return {
        "scheme": scheme,
        "classifier": kind,
        "seed": seed,
        "labels": list(corpus.labels),
        "accuracy_mean": mean,
        "accuracy_std": std,
        "realizations": realizations,
    }


def cmd_eval_run(args) -> int:
    corpus = load_metadata(args.metadata)
    feats = features.read_feature_cache(args.features)
    catalog = faults.load_catalog(args.catalog) if args.catalog else None
    artist_folds = None
    if args.artist_folds:
        artist_folds = json.loads(Path(args.artist_folds).read_text(encoding="utf-8"))
    results = []
    for realization in range(args.realizations):
        partition = evaluate.make_partition(
            corpus, args.scheme, seed=args.seed, catalog=catalog,
            artist_folds=artist_folds, realization=realization)
        results.append(evaluate.run_experiment(corpus, partition, args.classifier,
                                               feats, seed=args.seed))
    _write_json(args.out, _report_from_results(corpus, results, args.scheme,
                                               args.classifier, args.seed))
    return 0


def _predictions_from_report(path):
    report = json.loads(Path(path).read_text(encoding="utf-8"))
    preds = {}
    for realization in report["realizations"]:
        for p in realization["predictions"]:
            preds[p["id"]] = (p["true"], p["predicted"])
    return report, [(eid, t, p) for eid, (t, p) in preds.items()]


def cmd_eval_compare(args) -> int:
    _, preds_a = _predictions_from_report(args.report_a)
    _, preds_b = _predictions_from_report(args.report_b)
    res = evaluate.significance_test(preds_a, preds_b)
    _write_json(args.out, {
        "n_disagreements": res.n,
        "t12": res.t12,
        "t21": res.n - res.t12,
        "p": res.p,
        "alpha": evaluate.ALPHA,
        "reject": res.reject,
        "conclusion": "reject" if res.reject else "fail to reject",
    })
    return 0


def cmd_eval_relabel(args) -> int:
    catalog = faults.load_catalog(args.catalog)
    report, _ = _predictions_from_report(args.predictions)
    index = {label: i for i, label in enumerate(catalog.labels)}
    new_labels = {}
    for v in catalog.mislabelings:
        if v.flagged and v.scores:
            ranked = sorted(v.scores.items(), key=lambda p: (-p[1], index[p[0]]))
            if ranked[0][1] > 0.0:
                new_labels[v.excerpt_id] = ranked[0][0]

    out_realizations = []
    accs = []
    n = len(catalog.labels)
    for realization in report["realizations"]:
        by_fold = {}
        for p in realization["predictions"]:
            by_fold.setdefault(p["fold"], []).append(p)
        folds = []
        for fold in sorted(by_fold):
            counts = np.zeros((n, n))
            for p in by_fold[fold]:
                true = new_labels.get(p["id"], p["true"])
                counts[index[p["predicted"]], index[true]] += 1
            fom = evaluate.figures_of_merit(
                evaluate.ConfusionTable(labels=catalog.labels, counts=counts))
            accs.append(fom.accuracy)
            folds.append({
                "confusion": [[round(v, 10) for v in row] for row in fom.confusion],
                "recall": fom.recall,
                "precision": fom.precision,
                "fscore": fom.fscore,
                "accuracy": fom.accuracy,
            })
        out_realizations.append({"folds": folds})
    _write_json(args.out, {
        "relabeled": sorted(new_labels),
        "accuracy_mean": float(np.mean(accs)),
        "accuracy_std": float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0,
        "realizations": out_realizations,
    })
    return 0


def _perfect_confusion_from_catalog(catalog) -> faults.PerfectConfusion:
    index = {label: i for i, label in enumerate(catalog.labels)}
    n = len(catalog.labels)
    matrix = np.zeros((n, n))
    flagged_per_label = {label: 0 for label in catalog.labels}
    for v in catalog.mislabelings:
        if not v.flagged:
            continue
        flagged_per_label[v.label] += 1
        col = index[v.label]
        ranked = sorted(v.scores.items(), key=lambda p: (-p[1], index[p[0]]))
        best_label, best = ranked[0]
        if best == 0.0:
            matrix[:, col] += 1.0 / n
            continue
        delta = catalog.deltas[v.label]
        if len(ranked) > 1 and ranked[1][1] >= best - delta:
            matrix[index[best_label], col] += 0.5
            matrix[index[ranked[1][0]], col] += 0.5
        else:
            matrix[index[best_label], col] += 1.0
    for label, total in catalog.label_counts.items():
        i = index[label]
        matrix[i, i] += total - flagged_per_label[label]
    return faults.PerfectConfusion(labels=catalog.labels, matrix=matrix)


def cmd_report_perfect(args) -> int:
    catalog = faults.load_catalog(args.catalog)
    pc = _perfect_confusion_from_catalog(catalog)
    fom = faults.perfect_statistics(pc)
    labels = catalog.labels
    if args.format == "json":
        _write_json(args.out, {
            "labels": list(labels),
            "matrix": [[round(v, 10) for v in row] for row in pc.matrix],
            "recall": fom.recall,
            "precision": fom.precision,
            "fscore": fom.fscore,
            "accuracy": fom.accuracy,
        })
        return 0
    # values rendered x10^-2 with one decimal, like the matrix itself
    width = max(9, max(len(lb) for lb in labels) + 1)
    header = " " * width + "".join(f"{lb[:8]:>9}" for lb in labels) + f"{'Prec':>9}"
    lines = ["perfect-classifier estimate (values x10^-2)", header]
    for i, row_label in enumerate(labels):
        cells = "".join(f"{100 * pc.matrix[i, j]:9.1f}" for j in range(len(labels)))
        p = fom.precision[row_label]
        cells += f"{100 * p:9.1f}" if p is not None else f"{'-':>9}"
        lines.append(f"{row_label:<{width}}" + cells)
    frow = "".join(
        f"{100 * fom.fscore[lb]:9.1f}" if fom.fscore[lb] is not None else f"{'-':>9}"
        for lb in labels)
    lines.append(f"{'F-score':<{width}}" + frow + f"{'':>9}")
    lines.append(f"accuracy: {100 * fom.accuracy:.1f}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpusaudit",
        description="Corpus-integrity auditing and fault-aware evaluation "
                    "for labeled audio datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    audit = sub.add_parser("audit", help="run integrity audits")
    audit_sub = audit.add_subparsers(dest="subcommand", required=True)

    dupes = audit_sub.add_parser("dupes", help="fingerprint-based duplicate audit")
    dupes.add_argument("--metadata", required=True)
    dupes.add_argument("--audio-dir", required=True)
    dupes.add_argument("--cache", help="binary fingerprint cache to reuse or create")
    dupes.add_argument("--threshold", type=float, default=fingerprint.DEFAULT_THRESHOLD)
    dupes.add_argument("--out")
    dupes.add_argument("--strict", action="store_true",
                       help="exit 1 when any duplicate is found")
    dupes.set_defaults(func=cmd_audit_dupes)

    labels_p = audit_sub.add_parser("labels", help="tag-score mislabeling audit")
    labels_p.add_argument("--metadata", required=True)
    labels_p.add_argument("--tags", required=True)
    labels_p.add_argument("--delta-rule", choices=tagscore.DELTA_RULES,
                          default="adjacent-gap")
    labels_p.add_argument("--out")
    labels_p.add_argument("--strict", action="store_true")
    labels_p.set_defaults(func=cmd_audit_labels)

    catalog = sub.add_parser("catalog", help="fault catalog assembly")
    catalog_sub = catalog.add_subparsers(dest="subcommand", required=True)
    cbuild = catalog_sub.add_parser("build")
    cbuild.add_argument("--metadata", required=True)
    cbuild.add_argument("--tags")
    cbuild.add_argument("--dupes", help="CSV from 'audit dupes'")
    cbuild.add_argument("--recordings", help="JSON list of manual recording groups")
    cbuild.add_argument("--distortions", help="JSON list of distortion entries")
    cbuild.add_argument("--threshold", type=float, default=fingerprint.DEFAULT_THRESHOLD)
    cbuild.add_argument("--delta-rule", choices=tagscore.DELTA_RULES,
                        default="adjacent-gap")
    cbuild.add_argument("--out", required=True)
    cbuild.set_defaults(func=cmd_catalog_build)
    cshow = catalog_sub.add_parser("show")
    cshow.add_argument("--catalog", required=True)
    cshow.add_argument("--out")
    cshow.set_defaults(func=cmd_catalog_show)

    partition = sub.add_parser("partition", help="fold construction")
    partition_sub = partition.add_subparsers(dest="subcommand", required=True)
    pmake = partition_sub.add_parser("make")
    pmake.add_argument("--metadata", required=True)
    pmake.add_argument("--scheme", choices=evaluate.SCHEMES, required=True)
    pmake.add_argument("--seed", type=int, default=DEFAULT_SEED)
    pmake.add_argument("--realization", type=int, default=0)
    pmake.add_argument("--catalog")
    pmake.add_argument("--artist-folds", help="JSON {fold1: [...], fold2: [...]}")
    pmake.add_argument("--out")
    pmake.set_defaults(func=cmd_partition_make)

    feats = sub.add_parser("features", help="feature extraction")
    feats_sub = feats.add_subparsers(dest="subcommand", required=True)
    fextract = feats_sub.add_parser("extract")
    fextract.add_argument("--metadata", required=True)
    fextract.add_argument("--audio-dir", required=True)
    fextract.add_argument("--out", required=True)
    fextract.set_defaults(func=cmd_features_extract)

    evalp = sub.add_parser("eval", help="classification experiments")
    eval_sub = evalp.add_subparsers(dest="subcommand", required=True)
    erun = eval_sub.add_parser("run")
    erun.add_argument("--metadata", required=True)
    erun.add_argument("--features", required=True)
    erun.add_argument("--scheme", choices=evaluate.SCHEMES, required=True)
    erun.add_argument("--classifier", choices=classify.KINDS, required=True)
    erun.add_argument("--seed", type=int, default=DEFAULT_SEED)
    erun.add_argument("--realizations", type=int, default=1)
    erun.add_argument("--catalog")
    erun.add_argument("--artist-folds")
    erun.add_argument("--out")
    erun.set_defaults(func=cmd_eval_run)
    ecompare = eval_sub.add_parser("compare")
    ecompare.add_argument("report_a")
    ecompare.add_argument("report_b")
    ecompare.add_argument("--out")
    ecompare.set_defaults(func=cmd_eval_compare)
    erelabel = eval_sub.add_parser("relabel")
    erelabel.add_argument("--catalog", required=True)
    erelabel.add_argument("--predictions", required=True,
                          help="report JSON from 'eval run'")
    erelabel.add_argument("--out")
    erelabel.set_defaults(func=cmd_eval_relabel)

    report = sub.add_parser("report", help="summary reports")
    report_sub = report.add_subparsers(dest="subcommand", required=True)
    rperfect = report_sub.add_parser("perfect")
    rperfect.add_argument("--catalog", required=True)
    rperfect.add_argument("--format", choices=("text", "json"), default="text")
    rperfect.add_argument("--out")
    rperfect.set_defaults(func=cmd_report_perfect)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
