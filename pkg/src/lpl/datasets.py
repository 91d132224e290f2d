"""Seeded synthetic dataset generators and CSV ingestion.

Generators are pure functions of (parameters, seed). Datasets carry their
provenance so that saved copies can be regenerated exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import ClassProfile
from .core import RngStream
from .theory import TheoryParams

__all__ = [
    "Dataset",
    "gen_gaussian_binary",
    "gen_longtail_multiclass",
    "gen_multilabel",
    "load_csv",
    "save_csv",
]


@dataclass(frozen=True)
class Dataset:
    """Feature matrix, one-/multi-hot label matrix, class profile, provenance."""

    features: np.ndarray
    labels: np.ndarray
    profile: ClassProfile
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels must have equal row counts")
        tallies = self.labels.sum(axis=0).astype(int)
        if not np.array_equal(tallies, self.profile.counts):
            raise ValueError("profile counts do not match label tallies")

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.labels.shape[1])

    @property
    def multilabel(self) -> bool:
        return self.profile.multilabel


def _one_hot(indices: np.ndarray, C: int) -> np.ndarray:
    out = np.zeros((indices.size, C))
    out[np.arange(indices.size), indices] = 1.0
    return out


def gen_gaussian_binary(p: TheoryParams, n_plus: int, rng: RngStream) -> Dataset:
    """The theory model: n_plus samples of class +1 from N(theta, sigma^2 I)
    and ceil(Gamma * n_plus) samples of class -1 from N(-theta, (K sigma)^2 I).

    The majority class -1 is label column 0 (head) and +1 is column 1,
    keeping the descending-count convention when Gamma > 1.
    """
    if n_plus < 1:
        raise ValueError("n_plus must be at least 1")
    gen = rng.generator()
    n_minus = math.ceil(p.gamma * n_plus)
    theta = np.full(p.d, p.eta)
    x_minus = gen.normal(0.0, 1.0, size=(n_minus, p.d)) * (p.K * p.sigma) - theta
    x_plus = gen.normal(0.0, 1.0, size=(n_plus, p.d)) * p.sigma + theta
    features = np.vstack([x_minus, x_plus])
    labels = _one_hot(np.concatenate([np.zeros(n_minus, dtype=int),
                                      np.ones(n_plus, dtype=int)]), 2)
    profile = ClassProfile.from_counts([n_minus, n_plus])
    prov = {"generator": "gaussian_binary", "seed": rng.seed,
            "stream": rng.stream, "n_plus": n_plus, "d": p.d, "eta": p.eta,
            "sigma": p.sigma, "gamma": p.gamma, "K": p.K}
    return Dataset(features, labels, profile, prov)


def gen_longtail_multiclass(C: int, imbalance_ratio: float, n_head: int,
                            d: int, separation: float, rng: RngStream) -> Dataset:
    """Long-tail multiclass Gaussians with geometric count decay.

    Class c (0-based) gets round(n_head * ratio^(-c/(C-1))) samples drawn from
    N(mu_c, I) with class means placed on a sphere of radius chosen so that
    pairwise distances are at least `separation`. Classes are ordered by
    descending count.
    """
    if C < 2:
        raise ValueError("need at least two classes")
    if imbalance_ratio < 1:
        raise ValueError("imbalance ratio must be >= 1")
    counts = np.array([round(n_head * imbalance_ratio ** (-c / (C - 1)))
                       for c in range(C)], dtype=int)
    if counts[-1] < 1:
        raise ValueError("tail class would be empty; raise n_head or lower the ratio")
    gen = rng.generator()
    means = _spread_means(C, d, separation)
    feats, labs = [], []
    for c in range(C):
        feats.append(gen.normal(0.0, 1.0, size=(counts[c], d)) + means[c])
        labs.append(np.full(counts[c], c, dtype=int))
    features = np.vstack(feats)
    labels = _one_hot(np.concatenate(labs), C)
    profile = ClassProfile.from_counts(counts)
    prov = {"generator": "longtail_multiclass", "seed": rng.seed,
            "stream": rng.stream, "C": C, "imbalance_ratio": imbalance_ratio,
            "n_head": n_head, "d": d, "separation": separation}
    return Dataset(features, labels, profile, prov)


def _spread_means(C: int, d: int, separation: float) -> np.ndarray:
    """Deterministic well-separated class means.

    Uses orthogonal axes when d >= C, otherwise points spread on a circle in
    the first two dimensions; scaled so min pairwise distance >= separation.
    """
    if d >= C:
        means = np.eye(C, d)
    else:
        if d < 2:
            means = np.arange(C, dtype=float).reshape(C, 1)
        else:
            angles = 2 * np.pi * np.arange(C) / C
            means = np.zeros((C, d))
            means[:, 0] = np.cos(angles)
            means[:, 1] = np.sin(angles)
    dists = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=-1)
    min_dist = dists[~np.eye(C, dtype=bool)].min()
    return means * (separation / min_dist)


def gen_multilabel(C: int, n: int, head_frac: float, label_density: float,
                   rng: RngStream) -> Dataset:
    """Multi-label set with long-tail positive frequencies and additive
    class prototypes.

    Per-class positive probabilities decay geometrically from head to tail
    (controlled by head_frac, the tail/head probability ratio driver); every
    sample keeps at least one positive label; the mean number of positives
    per sample is label_density * C. Features are the sum of the active
    classes' prototypes plus unit Gaussian noise.
    """
    if not 0 < label_density < 1:
        raise ValueError("label_density must lie in (0, 1)")
    if not 0 < head_frac <= 1:
        raise ValueError("head_frac must lie in (0, 1]")
    gen = rng.generator()
    decay = head_frac ** (np.arange(C) / max(C - 1, 1))
    probs = decay / decay.sum() * label_density * C
    probs = np.clip(probs, 1e-6, 1 - 1e-6)
    labels = (gen.random(size=(n, C)) < probs).astype(float)
    empty = labels.sum(axis=1) == 0
    if empty.any():
        # guarantee >= 1 positive, biased by the same frequency profile
        forced = gen.choice(C, size=int(empty.sum()), p=probs / probs.sum())
        labels[np.flatnonzero(empty), forced] = 1.0
    d = max(C, 2)
    prototypes = np.eye(C, d) * 3.0
    features = labels @ prototypes + gen.normal(0.0, 1.0, size=(n, d))
    counts = labels.sum(axis=0).astype(int)
    if np.any(counts == 0):
        raise ValueError("a class received no positives; increase n or density")
    profile = ClassProfile(counts=counts, total=n, multilabel=True)
    prov = {"generator": "multilabel", "seed": rng.seed, "stream": rng.stream,
            "C": C, "n": n, "head_frac": head_frac,
            "label_density": label_density}
    return Dataset(features, labels, profile, prov)


def save_csv(dataset: Dataset, path) -> None:
    """Write `f1..fd,label` (single-label) or `f1..fd,y1..yC` (multi-label),
    plus a sidecar `<path>.meta` with key=value provenance."""
    d = dataset.features.shape[1]
    C = dataset.num_classes
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if dataset.multilabel:
            writer.writerow([f"f{j+1}" for j in range(d)]
                            + [f"y{c+1}" for c in range(C)])
            for x, y in zip(dataset.features, dataset.labels):
                writer.writerow([repr(float(v)) for v in x]
                                + [str(int(v)) for v in y])
        else:
            writer.writerow([f"f{j+1}" for j in range(d)] + ["label"])
            ks = np.argmax(dataset.labels, axis=1)
            for x, k in zip(dataset.features, ks):
                writer.writerow([repr(float(v)) for v in x] + [str(int(k))])
    with open(str(path) + ".meta", "w") as fh:
        for key, value in dataset.provenance.items():
            fh.write(f"{key}={value}\n")


def load_csv(path) -> Dataset:
    """Parse the schema written by :func:`save_csv`; rejects malformed rows
    with the offending line number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        feat_cols = [h for h in header if h.startswith("f")]
        d = len(feat_cols)
        multilabel = header[-1] != "label"
        C = len(header) - d if multilabel else 0
        feats, labs = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} "
                                 f"columns, got {len(row)}")
            try:
                x = [float(v) for v in row[:d]]
                y = [float(v) for v in row[d:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from None
            feats.append(x)
            labs.append(y)
    features = np.array(feats)
    if multilabel:
        labels = np.array(labs)
        if not np.all((labels == 0.0) | (labels == 1.0)):
            raise ValueError(f"{path}: multi-hot labels must be 0/1")
        counts = labels.sum(axis=0).astype(int)
        profile = ClassProfile(counts=counts, total=labels.shape[0],
                               multilabel=True)
    else:
        ks = np.array([int(v[0]) for v in labs])
        C = int(ks.max()) + 1
        labels = _one_hot(ks, C)
        profile = ClassProfile.from_counts(labels.sum(axis=0).astype(int))
    return Dataset(features, labels, profile, {"generator": "csv",
                                               "path": str(path)})
