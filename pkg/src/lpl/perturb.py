"""Learned class-level logit perturbation: category-set splitting, per-class
perturbation bounds, the PGD-like inner loop, and the resulting training
losses for single-label and multi-label tasks.

Class indices are 0-based throughout; thresholds on the class-index scale
(`split_by_index`, the multi-label threshold) follow the 1-based convention of
the long-tail ordering, i.e. class 0 carries index 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import la_offset, perturbed_ce, ClassProfile
from .core import softmax, softplus

__all__ = [
    "PerturbationSpec",
    "CategorySplit",
    "BoundVector",
    "class_mean_confidence",
    "split_by_performance",
    "split_by_index",
    "compute_bounds",
    "pgd_perturb",
    "lpl_loss_single",
    "multilabel_delta",
    "lpl_loss_multilabel",
    "combined_la_lpl_loss",
]


@dataclass(frozen=True)
class PerturbationSpec:
    """Hyper-parameters that fully determine the inner optimization.

    mode: 'balanced-performance' splits on mean confidence against a
    performance threshold; 'longtail-index' and 'multilabel' split on the
    (1-based) class index against tau.
    """

    mode: str
    tau: float
    epsilon: float
    delta_epsilon: float = 0.0
    alpha: float = 0.01
    bound_form: str = "absolute-difference"

    def __post_init__(self):
        if self.mode not in ("balanced-performance", "longtail-index", "multilabel"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.epsilon < 0 or self.delta_epsilon < 0:
            raise ValueError("bounds must be nonnegative")
        if self.bound_form not in ("absolute-difference", "ratio"):
            raise ValueError(f"unknown bound form {self.bound_form!r}")
        if self.bound_form == "ratio" and self.mode != "longtail-index":
            raise ValueError("ratio bounds are only defined for longtail-index mode")

    @property
    def disabled(self) -> bool:
        return self.epsilon == 0 and self.delta_epsilon == 0


@dataclass(frozen=True)
class CategorySplit:
    """Disjoint partition of {0..C-1} into negatively and positively augmented
    category sets."""

    negative: frozenset
    positive: frozenset

    def __post_init__(self):
        if self.negative & self.positive:
            raise ValueError("augmentation sets must be disjoint")

    @property
    def num_classes(self) -> int:
        return len(self.negative) + len(self.positive)

    def maximize(self, c: int) -> bool:
        if c in self.positive:
            return True
        if c in self.negative:
            return False
        raise ValueError(f"class {c} not covered by the split")


@dataclass(frozen=True)
class BoundVector:
    """Per-class perturbation bounds and the derived PGD step counts."""

    epsilons: np.ndarray
    alpha: float

    def __post_init__(self):
        eps = np.asarray(self.epsilons, dtype=float)
        object.__setattr__(self, "epsilons", eps)
        if np.any(eps < 0):
            raise ValueError("bounds must be nonnegative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def steps(self) -> np.ndarray:
        return np.floor(self.epsilons / self.alpha).astype(int)


def class_mean_confidence(logits, labels) -> np.ndarray:
    """Mean true-class softmax probability per class; NaN for absent classes."""
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if logits.ndim != 2 or logits.shape != labels.shape:
        raise ValueError("logits and labels must be matching (N, C) arrays")
    probs = softmax(logits)
    k = np.argmax(labels, axis=1)
    C = logits.shape[1]
    out = np.full(C, np.nan)
    for c in range(C):
        mask = k == c
        if mask.any():
            out[c] = probs[mask, c].mean()
    return out


def split_by_performance(qbar, tau: float) -> CategorySplit:
    """Positively augment classes whose mean confidence is at or below tau.

    The tie tau == qbar_c goes to the positive set (signum(0) = +1). Classes
    with missing confidence default to positive augmentation.
    """
    qbar = np.asarray(qbar, dtype=float)
    pos, neg = [], []
    for c, q in enumerate(qbar):
        if np.isnan(q) or tau - q >= 0:
            pos.append(c)
        else:
            neg.append(c)
    return CategorySplit(frozenset(neg), frozenset(pos))


def split_by_index(num_classes: int, tau: float) -> CategorySplit:
    """Positively augment tail classes: 1-based index c joins the positive set
    iff c - tau >= 0. Classes are assumed ordered by descending prior."""
    pos = frozenset(c for c in range(num_classes) if (c + 1) - tau >= 0)
    neg = frozenset(range(num_classes)) - pos
    return CategorySplit(neg, pos)


def compute_bounds(qbar, spec: PerturbationSpec) -> BoundVector:
    """Per-class bounds eps_c from the base bound and the confidence profile.

    absolute-difference: eps_c = eps + d_eps * |tau - qbar_c|.
    ratio (longtail-index only, 1-based tau): eps + d_eps * qbar_c/qbar_head
    for c <= tau, eps + d_eps * qbar_tail/qbar_c for c > tau.
    Classes with missing confidence fall back to the base bound.
    """
    qbar = np.asarray(qbar, dtype=float)
    C = qbar.size
    eps = np.full(C, spec.epsilon)
    if spec.delta_epsilon > 0:
        if spec.bound_form == "absolute-difference":
            extra = spec.delta_epsilon * np.abs(spec.tau - qbar)
            eps = eps + np.where(np.isnan(extra), 0.0, extra)
        else:
            if np.isnan(qbar[0]) or np.isnan(qbar[-1]):
                raise ValueError("ratio bounds need head and tail confidences")
            if qbar[0] == 0 or np.any(qbar == 0):
                raise ValueError("ratio bounds need nonzero confidences")
            head, tail = qbar[0], qbar[-1]
            for c in range(C):
                if np.isnan(qbar[c]):
                    continue
                if (c + 1) <= spec.tau:
                    eps[c] += spec.delta_epsilon * qbar[c] / head
                else:
                    eps[c] += spec.delta_epsilon * tail / qbar[c]
    return BoundVector(eps, spec.alpha)


def pgd_perturb(logits, labels, epsilon: float, alpha: float, maximize: bool) -> np.ndarray:
    """PGD-like inner loop for one category's samples.

    Runs floor(epsilon/alpha) steps; each step moves all logits by
    +/- (alpha/n) * sum_j (softmax(u_j) - y_j) and the accumulated offset is
    returned. All rows must belong to the same true class.
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if logits.ndim != 2 or logits.shape[0] == 0:
        raise ValueError("need at least one sample")
    if logits.shape != labels.shape:
        raise ValueError("logits and labels must be matching (N, C) arrays")
    if epsilon < 0 or alpha <= 0:
        raise ValueError("need epsilon >= 0 and alpha > 0")
    steps = int(np.floor(epsilon / alpha))
    sign = 1.0 if maximize else -1.0
    n = logits.shape[0]
    delta = np.zeros(logits.shape[1])
    u = logits
    for _ in range(steps):
        grad = np.sum(softmax(u) - labels, axis=0) / n
        delta = delta + sign * alpha * grad
        u = logits + delta
    return delta


def lpl_loss_single(logits, labels, split: CategorySplit, bounds: BoundVector):
    """Single-label perturbed training loss.

    For each class present in the batch the offset is inferred by
    :func:`pgd_perturb` (ascent for positively augmented classes, descent
    otherwise); absent classes get a zero offset. Returns the mean perturbed
    cross-entropy and the (C, C) per-class offset matrix.
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    C = logits.shape[1]
    k = np.argmax(labels, axis=1)
    offsets = np.zeros((C, C))
    for c in range(C):
        mask = k == c
        if not mask.any():
            continue
        offsets[c] = pgd_perturb(logits[mask], labels[mask],
                                 bounds.epsilons[c], bounds.alpha,
                                 maximize=split.maximize(c))
    loss = perturbed_ce(logits, labels, offsets[k])
    return loss, offsets


def multilabel_delta(c: int, tau: float, epsilon: float) -> float:
    """Scalar offset for binary task c: magnitude epsilon, sign +1 for tail
    tasks ((c+1) - tau >= 0, positive-branch loss maximized) and -1 for head
    tasks."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    sign = 1.0 if (c + 1) - tau >= 0 else -1.0
    return sign * epsilon


def lpl_loss_multilabel(logits, labels, tau: float, bounds: BoundVector) -> float:
    """Multi-label perturbed loss averaged over samples and classes.

    Per class c, with delta_c from :func:`multilabel_delta`:
    y*log(1+e^{-u+delta_c}) + (1-y)*log(1+e^{u-delta_c}).
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if logits.ndim != 2 or logits.shape != labels.shape:
        raise ValueError("logits and labels must be matching (N, C) arrays")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise ValueError("labels must be multi-hot (0/1)")
    C = logits.shape[1]
    delta = np.array([multilabel_delta(c, tau, bounds.epsilons[c]) for c in range(C)])
    pos = softplus(-logits + delta)
    neg = softplus(logits - delta)
    return float(np.mean(labels * pos + (1.0 - labels) * neg))


def combined_la_lpl_loss(logits, labels, profile: ClassProfile, strength: float,
                         split: CategorySplit, bounds: BoundVector):
    """LA offset followed by the LPL inner optimization on the shifted logits.

    strength=0 recovers the plain LPL loss; zero bounds recover the LA loss.
    """
    logits = np.asarray(logits, dtype=float)
    base = la_offset(profile, strength)
    loss, offsets = lpl_loss_single(logits + base, labels, split, bounds)
    return loss, offsets
