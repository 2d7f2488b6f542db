"""Nearest-neighbor, minimum-distance and Mahalanobis classifiers.

All three operate on normalized texture vectors and label a whole
excerpt from its windows: NN takes a majority vote over per-window
nearest neighbors, breaking ties uniformly at random with a seeded
generator; MD and MMD sum equal-prior Gaussian log posteriors over the
windows and take the argmax, breaking ties by label order. MD uses an
identity covariance (negative squared Euclidean distance); MMD uses the
total covariance of the training set, regularized by lambda*I with
lambda = 1e-6 * trace / dim.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptyClassError

KINDS = ("nn", "md", "mmd")

COV_REG_SCALE = 1e-6


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    labels: tuple[str, ...]
    seed: int = 0
    train_x: np.ndarray | None = None       # NN
    train_y: np.ndarray | None = None       # NN, label indices
    means: np.ndarray | None = None         # MD/MMD, (n_labels, dim)
    cov_inv: np.ndarray | None = None       # MMD


def train(kind: str, vectors: np.ndarray, labels, label_order=None,
          seed: int = 0) -> TrainedModel:
    """Fit a model on training vectors with one label per vector."""
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    vectors = np.asarray(vectors, dtype=float)
    labels = list(labels)
    if label_order is None:
        label_order = tuple(dict.fromkeys(labels))
    else:
        label_order = tuple(label_order)
    index = {label: i for i, label in enumerate(label_order)}
    y = np.array([index[label] for label in labels])

    if kind == "nn":
        return TrainedModel(kind=kind, labels=label_order, seed=seed,
                            train_x=vectors.copy(), train_y=y)

    means = np.empty((len(label_order), vectors.shape[1]))
    for i, label in enumerate(label_order):
        mask = y == i
        if not np.any(mask):
            raise EmptyClassError(f"no training vectors for label {label!r}")
        means[i] = vectors[mask].mean(axis=0)
    if kind == "md":
        return TrainedModel(kind=kind, labels=label_order, seed=seed, means=means)

    centered = vectors - vectors.mean(axis=0)
    denom = max(vectors.shape[0] - 1, 1)
    cov = centered.T @ centered / denom
    lam = COV_REG_SCALE * np.trace(cov) / cov.shape[0]
    cov_reg = cov + lam * np.eye(cov.shape[0])
    return TrainedModel(kind=kind, labels=label_order, seed=seed, means=means,
                        cov_inv=np.linalg.inv(cov_reg))


def log_posteriors(model: TrainedModel, vectors: np.ndarray) -> np.ndarray:
    """Per-class log posterior sums over the given windows (MD/MMD only)."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    diffs = vectors[:, None, :] - model.means[None, :, :]
    if model.kind == "md":
        sq = np.sum(diffs * diffs, axis=2)
    elif model.kind == "mmd":
        sq = np.einsum("vld,de,vle->vl", diffs, model.cov_inv, diffs)
    else:
        raise ValueError("log posteriors are defined for MD/MMD only")
    return -0.5 * np.sum(sq, axis=0)


def nearest_labels(model: TrainedModel, vectors: np.ndarray) -> np.ndarray:
    """Per-window nearest-training-neighbor label indices (NN only).

    Distance ties resolve to the earliest training index.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    dists = cdist(vectors, model.train_x)
    return model.train_y[np.argmin(dists, axis=1)]


def vote(label_indices: np.ndarray, n_labels: int, rng: np.random.Generator) -> int:
    """Majority vote; a uniform random draw decides between modal labels."""
    counts = np.bincount(label_indices, minlength=n_labels)
    modal = np.flatnonzero(counts == counts.max())
    if len(modal) == 1:
        return int(modal[0])
    return int(rng.choice(modal))


def classify_excerpt(model: TrainedModel, vectors: np.ndarray,
                     rng: np.random.Generator | None = None) -> str:
    """Label one excerpt from its window vectors."""
    if model.kind == "nn":
        if rng is None:
            rng = np.random.default_rng(model.seed)
        winners = nearest_labels(model, vectors)
        return model.labels[vote(winners, len(model.labels), rng)]
    return model.labels[int(np.argmax(log_posteriors(model, vectors)))]
