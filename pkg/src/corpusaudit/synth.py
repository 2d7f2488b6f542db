"""Synthetic audio and corpora for demos and self-checks.

The tone-cloud generator makes clips with sustained spectral peaks, the
structure the fingerprinter relies on; white noise would decorrelate
under sub-hop time offsets and is a poor stand-in for music.
"""

import numpy as np

from .corpus import Corpus, Excerpt


def tone_cloud(rng: np.random.Generator, duration: float = 10.0,
               sample_rate: int = 22050, n_tones: int = 60,
               n_partials: int = 4) -> np.ndarray:
    """A clip of random plucked notes, each a stack of decaying partials."""
    n = int(duration * sample_rate)
    # low-level dither keeps the median log magnitude meaningful so the
    # peak picker's relative floor rejects leakage sidelobes
    out = rng.normal(0.0, 1e-3, size=n)
    for _ in range(n_tones):
        f0 = np.exp(rng.uniform(np.log(100.0), np.log(2500.0)))
        length = int(rng.uniform(0.2, 1.0) * sample_rate)
        onset = rng.integers(0, max(1, n - length))
        amp = rng.uniform(0.1, 0.3)
        t = np.arange(length) / sample_rate
        note = np.zeros(length)
        for p in range(1, n_partials + 1):
            note += (amp / p) * np.sin(
                2 * np.pi * f0 * p * t + rng.uniform(0, 2 * np.pi))
        # sharp attack then exponential decay: each note has one
        # unambiguous energy maximum per partial, so peak picking stays
        # stable under small time offsets
        ramp = min(64, max(1, length // 8))
        env = np.exp(-3.0 * np.arange(length) / length)
        env[:ramp] *= np.linspace(0, 1, ramp)
        out[onset:onset + length] += note * env
    peak = np.max(np.abs(out))
    return out / peak if peak > 1.0 else out


def delayed_copy(samples: np.ndarray, delay_seconds: float, gain: float,
                 sample_rate: int = 22050) -> np.ndarray:
    """The same clip shifted later in time and scaled, same length.

    The shift is circular so the clip stays fully populated, like a
    re-cut of the same recording rather than one padded with silence.
    """
    shift = int(round(delay_seconds * sample_rate))
    return gain * np.roll(samples, shift)


def two_class_feature_corpus(n_per_class: int = 100, n_duplicate_pairs: int = 20,
                             separation: float = 0.8, seed: int = 0,
                             n_windows: int = 9, dim: int = 32):
    """A 2-class corpus of synthetic texture vectors with planted duplicates.

    Returns (corpus, features, duplicate_pairs). Class clouds overlap so
    the classifiers sit well below perfect accuracy; each duplicate is an
    exact feature copy of another excerpt in the same class.
    """
    rng = np.random.default_rng(seed)
    labels = ("alpha", "beta")
    excerpts = []
    features = {}
    for c, label in enumerate(labels):
        for i in range(n_per_class):
            eid = f"{label}.{i:03d}"
            center = rng.normal(c * separation, 1.0, size=dim)
            features[eid] = center + rng.normal(0, 0.3, size=(n_windows, dim))
            excerpts.append(Excerpt(id=eid, label=label, artist=f"artist-{eid}"))
    pairs = []
    originals = rng.choice([ex.id for ex in excerpts], size=n_duplicate_pairs,
                           replace=False)
    for k, orig in enumerate(sorted(originals)):
        label = orig.split(".")[0]
        dup_id = f"{label}.dup{k:02d}"
        excerpts.append(Excerpt(id=dup_id, label=label, artist=f"artist-{dup_id}"))
        features[dup_id] = features[orig].copy()
        pairs.append(tuple(sorted((orig, dup_id))))
    corpus = Corpus(labels=labels, excerpts=tuple(excerpts))
    return corpus, features, sorted(pairs)
