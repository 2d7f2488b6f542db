"""Landmark fingerprinting for exact-repetition detection.

Spectral peaks of the log-magnitude spectrogram are paired into
(anchor bin, target bin, frame delta) hashes. Two excerpts match when
many hashes agree on a single time offset; the score normalizes the
aligned count by the smaller hash count so truncated copies still score
high. The peak floor is relative (median log-magnitude + 10 dB), making
peak locations invariant to overall gain.
"""

import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter

from .corpus import Corpus, load_audio
from .errors import IoError, ParseError
from .features import stft_magnitude

DEFAULT_THRESHOLD = 0.25

CACHE_MAGIC = b"DFPK1"


@dataclass(frozen=True)
class FingerprintParams:
    frame_size: int = 1024
    hop: int = 512
    neighborhood: int = 15         # local-max window, frames x bins
    max_peaks_per_frame: int = 5
    floor_db: float = 10.0         # above the median log magnitude
    fan_out: int = 8               # targets per anchor
    min_delta: int = 1             # frames
    max_delta: int = 64


DEFAULT_PARAMS = FingerprintParams()


@dataclass(frozen=True)
class PeakConstellation:
    owner: str
    peaks: tuple[tuple[int, int, float], ...]  # (frame, bin, magnitude dB)


@dataclass(frozen=True)
class HashSet:
    owner: str
    hashes: tuple[tuple[int, int], ...]  # (packed key, anchor frame)


@dataclass(frozen=True)
class MatchScore:
    pair: tuple[str, str]
    aligned_hits: int
    offset_mode: int
    score: float


def pack_key(anchor_bin: int, target_bin: int, delta: int) -> int:
    return (anchor_bin << 17) | (target_bin << 7) | delta


def find_peaks(samples: np.ndarray, params: FingerprintParams = DEFAULT_PARAMS,
               owner: str = "") -> PeakConstellation:
    """Pick local maxima of the log-magnitude spectrogram.

    A bin qualifies when it is the maximum of its neighborhood and sits
    at least ``floor_db`` above the median log magnitude; at most
    ``max_peaks_per_frame`` strongest peaks are kept per frame.
    """
    mag = stft_magnitude(samples, params.frame_size, params.hop)
    log_mag = 20.0 * np.log10(mag + 1e-10)
    local_max = maximum_filter(
        log_mag, size=(params.neighborhood, params.neighborhood)) == log_mag
    floor = np.median(log_mag) + params.floor_db
    candidates = np.argwhere(local_max & (log_mag > floor))

    by_frame: dict[int, list[tuple[float, int]]] = {}
    for frame, fbin in candidates:
        by_frame.setdefault(int(frame), []).append((float(log_mag[frame, fbin]), int(fbin)))
    peaks = []
    for frame in sorted(by_frame):
        strongest = sorted(by_frame[frame], reverse=True)[:params.max_peaks_per_frame]
        for magnitude, fbin in sorted(strongest, key=lambda p: p[1]):
            peaks.append((frame, fbin, magnitude))
    return PeakConstellation(owner=owner, peaks=tuple(peaks))


def compute_fingerprint(samples: np.ndarray,
                        params: FingerprintParams = DEFAULT_PARAMS,
                        owner: str = "") -> HashSet:
    """Hash peak pairs: each anchor pairs with up to ``fan_out`` later peaks."""
    constellation = find_peaks(samples, params, owner)
    peaks = constellation.peaks
    hashes = []
    for i, (t1, f1, _) in enumerate(peaks):
        paired = 0
        for t2, f2, _ in peaks[i + 1:]:
            delta = t2 - t1
            if delta < params.min_delta:
                continue
            if delta > params.max_delta:
                break
            hashes.append((pack_key(f1, f2, delta), t1))
            paired += 1
            if paired >= params.fan_out:
                break
    return HashSet(owner=owner, hashes=tuple(hashes))


def match(a: HashSet, b: HashSet) -> MatchScore:
    """Score two hash sets by their modal-offset aligned hash count.

    Agreement is at hop resolution: a delay that is not a whole number
    of hops moves each peak's frame up or down by one, so the lookup
    probes the frame delta one either side of exact (key +/- 1 probes
    delta +/- 1 by construction of the packing) and offsets within one
    frame of the mode count as aligned.
    """
    pair = (a.owner, b.owner)
    if not a.hashes or not b.hashes:
        return MatchScore(pair=pair, aligned_hits=0, offset_mode=0, score=0.0)
    index: dict[int, list[int]] = {}
    for key, frame in b.hashes:
        index.setdefault(key, []).append(frame)
    offsets: Counter = Counter()
    for key, frame in a.hashes:
        for probe in (key - 1, key, key + 1):
            for bframe in index.get(probe, ()):
                offsets[frame - bframe] += 1
    if not offsets:
        return MatchScore(pair=pair, aligned_hits=0, offset_mode=0, score=0.0)
    pooled = {off: offsets[off - 1] + offsets[off] + offsets[off + 1]
              for off in offsets}
    # modal offset; ties resolved toward the smallest offset magnitude
    aligned, offset = max(
        ((count, off) for off, count in pooled.items()),
        key=lambda co: (co[0], -abs(co[1]), co[1]))
    score = min(1.0, aligned / min(len(a.hashes), len(b.hashes)))
    return MatchScore(pair=pair, aligned_hits=aligned, offset_mode=offset, score=score)


def match_all(hashsets: list[HashSet], threshold: float | None = None) -> list[MatchScore]:
    """All-pairs matching; optionally keep only scores >= threshold."""
    out = []
    for i in range(len(hashsets)):
        for j in range(i + 1, len(hashsets)):
            ms = match(hashsets[i], hashsets[j])
            if threshold is None or ms.score >= threshold:
                out.append(ms)
    return out


def find_exact_repetitions(corpus: Corpus, threshold: float = DEFAULT_THRESHOLD,
                           params: FingerprintParams = DEFAULT_PARAMS,
                           hashsets: dict[str, HashSet] | None = None) -> list[tuple[str, ...]]:
    """Connected components of the match graph at the given threshold.

    Fingerprints are computed from corpus audio unless precomputed hash
    sets are supplied. Groups and their members are sorted
    lexicographically.
    """
    if hashsets is None:
        hashsets = {}
        for ex in corpus.excerpts:
            if ex.audio_path is None:
                raise IoError(f"excerpt {ex.id!r} has no audio")
            samples = load_audio(ex, corpus.sample_rate)
            hashsets[ex.id] = compute_fingerprint(samples, params, owner=ex.id)
    ids = sorted(hashsets)
    parent = {eid: eid for eid in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if match(hashsets[ids[i]], hashsets[ids[j]]).score >= threshold:
                ra, rb = find(ids[i]), find(ids[j])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    groups: dict[str, list[str]] = {}
    for eid in ids:
        groups.setdefault(find(eid), []).append(eid)
    return sorted(tuple(sorted(g)) for g in groups.values() if len(g) > 1)


def write_cache(path, hashsets: dict[str, HashSet]) -> None:
    """Binary fingerprint cache: magic, count, then per-excerpt records."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<I", len(hashsets)))
        for eid in sorted(hashsets):
            encoded = eid.encode("utf-8")
            hs = hashsets[eid]
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", len(hs.hashes)))
            for key, frame in hs.hashes:
                fh.write(struct.pack("<II", key, frame))


def read_cache(path) -> dict[str, HashSet]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise IoError(f"fingerprint cache not found: {path}") from None
    if data[:5] != CACHE_MAGIC:
        raise ParseError(f"{path}: not a fingerprint cache")
    pos = 5
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    out = {}
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        eid = data[pos:pos + id_len].decode("utf-8")
        pos += id_len
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        hashes = []
        for _ in range(n):
            key, frame = struct.unpack_from("<II", data, pos)
            pos += 8
            hashes.append((key, frame))
        out[eid] = HashSet(owner=eid, hashes=tuple(hashes))
    return out
