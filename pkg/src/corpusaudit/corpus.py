"""Data model and ingestion for excerpts, metadata, tag snapshots and audio.

File formats:
  - metadata CSV: header ``id,label,artist,title``, UTF-8, RFC-4180 quoting.
  - tag snapshot JSON: array of
    ``{"id": str, "source": "song"|"artist", "tags": [{"tag": str, "count": int}]}``.
  - audio: RIFF WAVE, mono, PCM 16-bit or 32-bit float, at the corpus rate.

All loaded structures are treated as immutable after construction and are
safe to share across workers.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import (
    DuplicateIdError,
    FormatError,
    IoError,
    LabelError,
    ParseError,
    UnknownExcerptError,
)

DEFAULT_SAMPLE_RATE = 22050
DEFAULT_EXCERPT_DURATION = 30.0

METADATA_HEADER = ["id", "label", "artist", "title"]

TAG_SOURCES = ("song", "artist")


def normalize_text(s: str) -> str:
    """Lower-case, trim, and collapse internal whitespace."""
    return " ".join(s.lower().split())


@dataclass(frozen=True)
class Excerpt:
    """One labeled audio clip with identification metadata."""

    id: str
    label: str
    artist: str | None = None
    title: str | None = None
    audio_path: Path | None = None

    @property
    def identified(self) -> bool:
        return self.artist is not None or self.title is not None


@dataclass(frozen=True)
class TagCountSet:
    """Tag->count pairs for one excerpt, already normalized and merged."""

    owner: str
    pairs: tuple[tuple[str, int], ...]
    source: str = "song"

    def total(self) -> int:
        return sum(c for _, c in self.pairs)

    def normalized(self) -> tuple[tuple[str, float], ...]:
        """Counts divided by the set's total, so they sum to 1."""
        total = self.total()
        return tuple((t, c / total) for t, c in self.pairs)


@dataclass
class Corpus:
    """An ordered label set plus the excerpts drawn from it."""

    labels: tuple[str, ...]
    excerpts: tuple[Excerpt, ...]
    sample_rate: int = DEFAULT_SAMPLE_RATE
    excerpt_duration: float = DEFAULT_EXCERPT_DURATION
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.excerpts = tuple(self.excerpts)
        by_id = {}
        label_set = set(self.labels)
        for ex in self.excerpts:
            if ex.id in by_id:
                raise DuplicateIdError(f"duplicate excerpt id {ex.id!r}")
            if ex.label not in label_set:
                raise LabelError(f"excerpt {ex.id!r} has unknown label {ex.label!r}")
            by_id[ex.id] = ex
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.excerpts)

    def __contains__(self, excerpt_id: str) -> bool:
        return excerpt_id in self._by_id

    def get(self, excerpt_id: str) -> Excerpt:
        try:
            return self._by_id[excerpt_id]
        except KeyError:
            raise UnknownExcerptError(f"unknown excerpt id {excerpt_id!r}") from None

    def with_label(self, label: str) -> list[Excerpt]:
        return [ex for ex in self.excerpts if ex.label == label]

    def identification_tally(self) -> tuple[int, int]:
        """(identified, unidentified) excerpt counts."""
        n_id = sum(1 for ex in self.excerpts if ex.identified)
        return n_id, len(self.excerpts) - n_id


def load_metadata(path, labels=None, sample_rate=DEFAULT_SAMPLE_RATE,
                  excerpt_duration=DEFAULT_EXCERPT_DURATION) -> Corpus:
    """Read a metadata CSV into a Corpus.

    ``labels`` fixes the valid label set; when omitted, labels are taken in
    order of first appearance in the file.
    """
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected header "
                             f"{','.join(METADATA_HEADER)}") from None
        if [h.strip() for h in header] != METADATA_HEADER:
            raise ParseError(f"{path}: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            rows.append((lineno, row))

    seen_labels: list[str] = []
    excerpts = []
    for lineno, (eid, label, artist, title) in rows:
        eid = eid.strip()
        label = label.strip()
        if not eid:
            raise ParseError(f"{path}:{lineno}: empty id")
        if labels is not None and label not in labels:
            raise LabelError(f"{path}:{lineno}: unknown label {label!r}")
        if label not in seen_labels:
            seen_labels.append(label)
        excerpts.append(Excerpt(
            id=eid,
            label=label,
            artist=artist.strip() or None,
            title=title.strip() or None,
        ))
    label_order = tuple(labels) if labels is not None else tuple(seen_labels)
    return Corpus(labels=label_order, excerpts=tuple(excerpts),
                  sample_rate=sample_rate, excerpt_duration=excerpt_duration)


def save_metadata(corpus: Corpus, path) -> None:
    """Write a Corpus back to metadata CSV; inverse of load_metadata."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METADATA_HEADER)
        for ex in corpus.excerpts:
            writer.writerow([ex.id, ex.label, ex.artist or "", ex.title or ""])


def load_tags(path, corpus: Corpus) -> dict[str, TagCountSet]:
    """Read a tag snapshot JSON file keyed by excerpt id.

    Tags are lower-cased and whitespace-collapsed; zero-count entries are
    dropped; duplicate tags are merged by summing counts.
    """
    path = Path(path)
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise IoError(f"tag snapshot not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(entries, list):
        raise ParseError(f"{path}: expected a JSON array")

    result: dict[str, TagCountSet] = {}
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "id" not in entry:
            raise ParseError(f"{path}: entry {i} is not an object with an 'id'")
        eid = entry["id"]
        if eid not in corpus:
            raise UnknownExcerptError(f"{path}: entry {i}: unknown excerpt id {eid!r}")
        source = entry.get("source", "song")
        if source not in TAG_SOURCES:
            raise ParseError(f"{path}: entry {i}: bad source {source!r}")
        merged: dict[str, int] = {}
        for tag_obj in entry.get("tags", []):
            tag = normalize_text(str(tag_obj["tag"]))
            count = tag_obj["count"]
            if not isinstance(count, int) or isinstance(count, bool):
                raise ParseError(f"{path}: entry {i}: non-integer count {count!r}")
            if count < 0:
                raise ParseError(f"{path}: entry {i}: negative count {count}")
            if count == 0 or not tag:
                continue
            merged[tag] = merged.get(tag, 0) + count
        if eid in result:
            # duplicate snapshot entries for one excerpt merge into one set
            prev = result[eid]
            combined = dict(prev.pairs)
            for tag, count in merged.items():
                combined[tag] = combined.get(tag, 0) + count
            merged = combined
            source = prev.source
        result[eid] = TagCountSet(owner=eid, pairs=tuple(sorted(merged.items())),
                                  source=source)
    return result


def tag_coverage(corpus: Corpus, tags: dict[str, TagCountSet]) -> dict[str, dict[str, int]]:
    """Per-label counts of song-sourced, artist-sourced, and untagged excerpts."""
    report = {label: {"song": 0, "artist": 0, "untagged": 0} for label in corpus.labels}
    for ex in corpus.excerpts:
        tcs = tags.get(ex.id)
        if tcs is None or not tcs.pairs:
            report[ex.label]["untagged"] += 1
        else:
            report[ex.label][tcs.source] += 1
    return report


def load_audio(excerpt: Excerpt, sample_rate: int = DEFAULT_SAMPLE_RATE) -> np.ndarray:
    """Load an excerpt's WAV file as float64 samples in [-1, 1]."""
    if excerpt.audio_path is None:
        raise IoError(f"excerpt {excerpt.id!r} has no audio path")
    path = Path(excerpt.audio_path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise IoError(f"audio file not found: {path}") from None
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if data.ndim != 1:
        raise FormatError(f"{path}: expected mono, got {data.shape[1]} channels")
    if rate != sample_rate:
        raise FormatError(f"{path}: sample rate {rate}, expected {sample_rate}")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise FormatError(f"{path}: unsupported sample format {data.dtype}")
