"""Fault catalog assembly and the upper-bound "perfect classifier" estimate.

The catalog collects four kinds of repetition (exact groups come from
fingerprinting; recording groups from a manual-evidence list; artist and
version groups from metadata), the mislabeling verdicts, and distortion
notes. Its exclusion set drives the fault-filtered partitions: every
member of an exact or recording group beyond the lexicographically
smallest, plus distortions whose usable prefix falls below 5 seconds.

The perfect-classifier confusion distributes one unit of weight per
excerpt across predicted labels according to its mislabel verdict.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, normalize_text
from .errors import (
    DegenerateClassError,
    IncompleteVerdictError,
    IoError,
    ParseError,
    UnknownExcerptError,
)
from .tagscore import MislabelVerdict

REPETITION_KINDS = ("exact", "recording", "artist", "version")

MIN_USABLE_PREFIX_SECONDS = 5.0


@dataclass(frozen=True)
class RepetitionGroup:
    kind: str                   # exact | recording | artist | version
    members: tuple[str, ...]    # sorted, >= 2
    evidence: str               # fingerprint | metadata | manual


@dataclass(frozen=True)
class Distortion:
    excerpt_id: str
    note: str = ""
    usable_prefix_seconds: float | None = None

    @property
    def excluded(self) -> bool:
        return (self.usable_prefix_seconds is not None
                and self.usable_prefix_seconds < MIN_USABLE_PREFIX_SECONDS)


@dataclass
class FaultCatalog:
    labels: tuple[str, ...]
    label_counts: dict[str, int]
    repetitions: list[RepetitionGroup]
    mislabelings: list[MislabelVerdict]
    distortions: list[Distortion]
    deltas: dict[str, float] = field(default_factory=dict)

    def exclusions(self) -> frozenset[str]:
        """Ids removed by fault filtering; one representative per group stays."""
        out = set()
        for group in self.repetitions:
            if group.kind in ("exact", "recording"):
                out.update(sorted(group.members)[1:])
        for d in self.distortions:
            if d.excluded:
                out.add(d.excerpt_id)
        return frozenset(out)


def _metadata_groups(corpus: Corpus, key_fn, kind: str) -> list[RepetitionGroup]:
    groups: dict[str, list[str]] = {}
    for ex in corpus.excerpts:
        if not ex.identified:
            continue
        key = key_fn(ex)
        if key:
            groups.setdefault(key, []).append(ex.id)
    return [RepetitionGroup(kind=kind, members=tuple(sorted(ids)), evidence="metadata")
            for key, ids in sorted(groups.items()) if len(ids) >= 2]


def build_catalog(corpus: Corpus, exact_groups=(), verdicts=(), distortions=(),
                  recording_groups=(), deltas=None) -> FaultCatalog:
    """Assemble the catalog from audit outputs and metadata.

    ``exact_groups`` are id groups from fingerprinting; ``recording_groups``
    come from a manual-evidence source and are never inferred here. Artist
    groups share a normalized artist string; version groups share a
    normalized title without already sitting inside one exact/recording
    group.
    """
    repetitions = [RepetitionGroup(kind="exact", members=tuple(sorted(g)),
                                   evidence="fingerprint")
                   for g in sorted(tuple(sorted(g)) for g in exact_groups)]
    repetitions += [RepetitionGroup(kind="recording", members=tuple(sorted(g)),
                                    evidence="manual")
                    for g in sorted(tuple(sorted(g)) for g in recording_groups)]

    same_recording = [set(g.members) for g in repetitions]
    repetitions += _metadata_groups(
        corpus, lambda ex: normalize_text(ex.artist) if ex.artist else None, "artist")
    for group in _metadata_groups(
            corpus, lambda ex: normalize_text(ex.title) if ex.title else None, "version"):
        if not any(set(group.members) <= members for members in same_recording):
            repetitions.append(group)

    dist_list = []
    for d in distortions:
        if not isinstance(d, Distortion):
            d = Distortion(*d) if isinstance(d, (tuple, list)) else Distortion(**d)
        if d.excerpt_id not in corpus:
            raise UnknownExcerptError(f"distortion names unknown excerpt {d.excerpt_id!r}")
        dist_list.append(d)
    dist_list.sort(key=lambda d: d.excerpt_id)

    counts = {label: len(corpus.with_label(label)) for label in corpus.labels}
    return FaultCatalog(
        labels=corpus.labels,
        label_counts=counts,
        repetitions=repetitions,
        mislabelings=sorted(verdicts, key=lambda v: v.excerpt_id),
        distortions=dist_list,
        deltas=dict(deltas) if deltas else {},
    )


def artist_bounds(corpus: Corpus) -> tuple[int, int]:
    """(min, max) possible distinct-artist counts.

    The minimum assumes every unidentified excerpt is by an already-known
    artist; the maximum assumes each is by a new one.
    """
    artists = {normalize_text(ex.artist) for ex in corpus.excerpts
               if ex.artist is not None}
    unidentified = sum(1 for ex in corpus.excerpts if not ex.identified)
    return len(artists), len(artists) + unidentified


@dataclass(frozen=True)
class PerfectConfusion:
    labels: tuple[str, ...]
    matrix: np.ndarray  # [predicted, true] fractional weights


def perfect_confusion(corpus: Corpus, verdicts, deltas) -> PerfectConfusion:
    """Confusion of the hypothetical system whose only errors are mislabelings.

    Each excerpt contributes one unit of weight in its true-label column:
    unflagged (or unverdicted) excerpts put it on the diagonal; flagged
    ones put it on their highest-scoring label, split 0.5/0.5 when the
    runner-up lies within the label's margin of the best, or spread
    1/|labels| everywhere when every score is zero.
    """
    labels = corpus.labels
    index = {label: i for i, label in enumerate(labels)}
    by_id = {v.excerpt_id: v for v in verdicts}
    matrix = np.zeros((len(labels), len(labels)))
    for ex in corpus.excerpts:
        col = index[ex.label]
        v = by_id.get(ex.id)
        if v is None or not v.flagged:
            matrix[col, col] += 1.0
            continue
        if not v.scores:
            raise IncompleteVerdictError(
                f"verdict for {ex.id!r} carries no score vector")
        ranked = sorted(v.scores.items(), key=lambda p: (-p[1], index[p[0]]))
        best_label, best = ranked[0]
        if best == 0.0:
            matrix[:, col] += 1.0 / len(labels)
            continue
        delta = deltas[ex.label]
        if len(ranked) > 1 and ranked[1][1] >= best - delta:
            matrix[index[best_label], col] += 0.5
            matrix[index[ranked[1][0]], col] += 0.5
        else:
            matrix[index[best_label], col] += 1.0
    return PerfectConfusion(labels=labels, matrix=matrix)


def perfect_statistics(pc: PerfectConfusion):
    """Figures of merit of the perfect confusion; delegates to the eval module."""
    from .evaluate import ConfusionTable, figures_of_merit

    if np.any(pc.matrix.sum(axis=0) == 0):
        raise DegenerateClassError("a label column has zero total weight")
    return figures_of_merit(ConfusionTable(labels=pc.labels, counts=pc.matrix))


def apply_relabeling(corpus: Corpus, catalog: FaultCatalog) -> Corpus:
    """Reassign each flagged excerpt to its highest-scoring label.

    Excerpts whose scores are zero everywhere keep their original label.
    """
    index = {label: i for i, label in enumerate(corpus.labels)}
    new_labels = {}
    for v in catalog.mislabelings:
        if not v.flagged or not v.scores:
            continue
        ranked = sorted(v.scores.items(), key=lambda p: (-p[1], index[p[0]]))
        if ranked[0][1] > 0.0:
            new_labels[v.excerpt_id] = ranked[0][0]
    excerpts = tuple(
        ex if ex.id not in new_labels else
        type(ex)(id=ex.id, label=new_labels[ex.id], artist=ex.artist,
                 title=ex.title, audio_path=ex.audio_path)
        for ex in corpus.excerpts)
    return Corpus(labels=corpus.labels, excerpts=excerpts,
                  sample_rate=corpus.sample_rate,
                  excerpt_duration=corpus.excerpt_duration)


def catalog_to_json(catalog: FaultCatalog) -> dict:
    return {
        "labels": list(catalog.labels),
        "label_counts": dict(catalog.label_counts),
        "repetitions": [
            {"kind": g.kind, "members": list(g.members), "evidence": g.evidence}
            for g in catalog.repetitions],
        "mislabelings": [
            {"id": v.excerpt_id, "label": v.label, "own_score": v.own_score,
             "scores": dict(v.scores), "best_other_label": v.best_other_label,
             "best_other_score": v.best_other_score, "flagged": v.flagged,
             "rule": v.rule}
            for v in catalog.mislabelings],
        "distortions": [
            {"id": d.excerpt_id, "note": d.note,
             "usable_prefix_seconds": d.usable_prefix_seconds}
            for d in catalog.distortions],
        "deltas": dict(catalog.deltas),
    }


def catalog_from_json(data: dict) -> FaultCatalog:
    try:
        return FaultCatalog(
            labels=tuple(data["labels"]),
            label_counts={k: int(v) for k, v in data["label_counts"].items()},
            repetitions=[RepetitionGroup(kind=g["kind"],
                                         members=tuple(g["members"]),
                                         evidence=g["evidence"])
                         for g in data["repetitions"]],
            mislabelings=[MislabelVerdict(
                excerpt_id=v["id"], label=v["label"], own_score=v["own_score"],
                scores=dict(v["scores"]),
                best_other_label=v["best_other_label"],
                best_other_score=v["best_other_score"],
                flagged=v["flagged"], rule=v["rule"])
                for v in data["mislabelings"]],
            distortions=[Distortion(excerpt_id=d["id"], note=d.get("note", ""),
                                    usable_prefix_seconds=d.get("usable_prefix_seconds"))
                         for d in data["distortions"]],
            deltas={k: float(v) for k, v in data.get("deltas", {}).items()},
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed catalog JSON: {exc}") from None


def save_catalog(catalog: FaultCatalog, path) -> None:
    Path(path).write_text(
        json.dumps(catalog_to_json(catalog), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def load_catalog(path) -> FaultCatalog:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise IoError(f"catalog not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    return catalog_from_json(data)
