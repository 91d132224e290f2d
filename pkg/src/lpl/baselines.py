"""The five published class-level logit offsets (LA, ISDA, LDAM, NTR, LC),
their perturbed losses, and the relative loss-variation statistic.

Offsets are additive vectors on logits. For single-label losses the offset is
added inside the softmax; for the multi-label binary decomposition the offset
enters the positive branch as +mu and the negative branch with its own sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import binary_logistic_loss, cross_entropy, softplus

__all__ = [
    "ClassProfile",
    "IsdaInputs",
    "LcParams",
    "la_offset",
    "isda_offset",
    "ldam_offset",
    "ntr_offset",
    "ntr_loss",
    "lc_loss",
    "perturbed_ce",
    "relative_loss_variation",
    "per_class_variation",
]


@dataclass(frozen=True)
class ClassProfile:
    """Per-class sample counts and priors.

    For single-label tasks priors sum to 1 and equal counts/total. For
    multi-label tasks counts are per-class positive counts and priors may sum
    to more than 1.
    """

    counts: np.ndarray
    total: int
    multilabel: bool = False

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=int)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError("counts must be a non-empty 1-D array")
        if np.any(counts <= 0):
            raise ValueError("every class count must be positive")
        if not self.multilabel and int(counts.sum()) != self.total:
            raise ValueError("single-label counts must sum to total")

    @classmethod
    def from_counts(cls, counts, multilabel: bool = False) -> "ClassProfile":
        counts = np.asarray(counts, dtype=int)
        total = int(counts.sum()) if not multilabel else int(counts.max())
        return cls(counts=counts, total=total, multilabel=multilabel)

    @property
    def num_classes(self) -> int:
        return int(self.counts.size)

    @property
    def priors(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def is_descending(self) -> bool:
        return bool(np.all(np.diff(self.counts) <= 0))


@dataclass(frozen=True)
class IsdaInputs:
    """Class covariances and logit-layer weights for the ISDA offset.

    covariances: (C, d, d) stack of symmetric PSD matrices.
    weights: (C, d) rows of the logit layer.
    """

    covariances: np.ndarray
    weights: np.ndarray
    strength: float = 1.0

    def __post_init__(self):
        cov = np.asarray(self.covariances, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "covariances", cov)
        object.__setattr__(self, "weights", w)
        if cov.ndim != 3 or cov.shape[1] != cov.shape[2]:
            raise ValueError("covariances must be a (C, d, d) stack")
        if w.ndim != 2 or w.shape[0] != cov.shape[0] or w.shape[1] != cov.shape[1]:
            raise ValueError("weights must be (C, d) matching covariances")
        if self.strength < 0:
            raise ValueError("strength must be nonnegative")
        if not np.allclose(cov, np.swapaxes(cov, 1, 2), atol=1e-9):
            raise ValueError("each covariance must be symmetric")
        for k in range(cov.shape[0]):
            if np.min(np.linalg.eigvalsh(cov[k])) < -1e-9:
                raise ValueError(f"covariance {k} is not PSD")


@dataclass(frozen=True)
class LcParams:
    """Learned per-class mean offsets of the logit-compensation loss.

    Only the mean shifts are modeled; variance scaling of logits is not.
    """

    mu_pos: np.ndarray
    mu_neg: np.ndarray

    def __post_init__(self):
        mp = np.asarray(self.mu_pos, dtype=float)
        mn = np.asarray(self.mu_neg, dtype=float)
        object.__setattr__(self, "mu_pos", mp)
        object.__setattr__(self, "mu_neg", mn)
        if mp.shape != mn.shape or mp.ndim != 1:
            raise ValueError("mu_pos and mu_neg must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(mp)) and np.all(np.isfinite(mn))):
            raise ValueError("offsets must be finite")


def la_offset(profile: ClassProfile, strength: float) -> np.ndarray:
    """Logit-adjustment offset: strength * log(prior) per class.

    The same vector is applied to every sample (corpus level).
    """
    priors = profile.priors
    if np.any(priors <= 0):
        raise ValueError("all priors must be positive")
    if not np.isfinite(strength):
        raise ValueError("strength must be finite")
    return strength * np.log(priors)


def isda_offset(inputs: IsdaInputs, k: int) -> np.ndarray:
    """ISDA implicit offset for true class k.

    Element c is (strength/2) * (w_c - w_k)^T Sigma_k (w_c - w_k); element k is
    exactly zero and all elements are nonnegative up to round-off.
    """
    C = inputs.weights.shape[0]
    if not 0 <= k < C:
        raise ValueError(f"class index {k} out of range for {C} classes")
    diff = inputs.weights - inputs.weights[k]
    quad = np.einsum("ci,ij,cj->c", diff, inputs.covariances[k], diff)
    out = 0.5 * inputs.strength * quad
    out[k] = 0.0
    return out


def ldam_offset(profile: ClassProfile, k: int, scale: float) -> np.ndarray:
    """LDAM margin offset: -scale * C_const * prior_k^(-1/4) at index k.

    The margin constant is absorbed into `scale` together with the class-count
    reading of the published formula; both reduce to one scalar knob.
    """
    priors = profile.priors
    if not 0 <= k < priors.size:
        raise ValueError(f"class index {k} out of range")
    if priors[k] <= 0:
        raise ValueError("prior of the true class must be positive")
    out = np.zeros(priors.size)
    out[k] = -scale * priors[k] ** -0.25
    return out


def ntr_offset(profile: ClassProfile, psi: float) -> np.ndarray:
    """Negative-tolerant regularization offset: -psi * log(N/N_c - 1)."""
    counts = profile.counts
    N = profile.total
    if np.any(counts >= N) or np.any(counts <= 0):
        raise ValueError("each class count must satisfy 0 < N_c < N")
    return -psi * np.log(N / counts - 1.0)


def _check_multihot(logits: np.ndarray, labels: np.ndarray) -> None:
    if logits.shape != labels.shape or logits.ndim != 2:
        raise ValueError("logits and labels must be matching (N, C) arrays")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise ValueError("labels must be multi-hot (0/1)")


def ntr_loss(logits, labels, profile: ClassProfile, lam: float, psi: float) -> float:
    """Mean negative-tolerant binary loss over samples and classes.

    Positive branch log(1+exp(-u+v_c)); negative branch scaled by 1/lam with
    slope lam; v_c = psi * log(N/N_c - 1). With psi=0, lam=1 this is the plain
    binary logistic loss.
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    _check_multihot(logits, labels)
    if lam <= 0:
        raise ValueError("lam must be positive")
    v = -ntr_offset(profile, psi) if psi != 0 else np.zeros(profile.num_classes)
    pos = softplus(-(logits - v))
    neg = softplus(lam * (logits - v)) / lam
    return float(np.mean(labels * pos + (1.0 - labels) * neg))


def lc_loss(logits, labels, params: LcParams) -> float:
    """Mean logit-compensation loss with unit variance scaling.

    Positive branch log(1+exp(-(u + mu_pos))); negative branch
    log(1+exp(u + mu_neg)).
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    _check_multihot(logits, labels)
    pos = softplus(-(logits + params.mu_pos))
    neg = softplus(logits + params.mu_neg)
    return float(np.mean(labels * pos + (1.0 - labels) * neg))


def _ce_rows(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    logz = np.log(np.sum(np.exp(shifted), axis=1))
    k = np.argmax(labels, axis=1)
    return logz - shifted[np.arange(logits.shape[0]), k]


def perturbed_ce(logits, labels, offsets) -> float:
    """Mean cross-entropy of (logits + offsets) against one-hot labels.

    `offsets` may be a single length-C vector (applied to every row) or an
    (N, C) array of per-sample offsets.
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    if logits.ndim != 2 or logits.shape != labels.shape:
        raise ValueError("logits and labels must be matching (N, C) arrays")
    if offsets.shape not in (logits.shape, logits.shape[1:]):
        raise ValueError("offsets must be length C or shape (N, C)")
    if not np.all(np.sum(labels == 1.0, axis=1) == 1):
        raise ValueError("labels must be one-hot rows")
    return float(np.mean(_ce_rows(logits + offsets, labels)))


def per_class_variation(base_losses: np.ndarray,
                        new_losses: np.ndarray,
                        labels: np.ndarray,
                        multilabel: bool = False):
    """Relative loss variation (l' - l)/l aggregated per class.

    Single-label: `base_losses`/`new_losses` are per-sample vectors and each
    sample contributes to its true class; returns a length-C array with NaN for
    classes absent from the batch.

    Multi-label: the loss arrays are (N, C) per-sample-per-class matrices;
    returns a (pos, neg) pair of length-C arrays split by label polarity.
    """
    labels = np.asarray(labels, dtype=float)
    C = labels.shape[1]
    if multilabel:
        pos = np.full(C, np.nan)
        neg = np.full(C, np.nan)
        for c in range(C):
            mask = labels[:, c] == 1.0
            if mask.any():
                b = base_losses[mask, c].mean()
                pos[c] = (new_losses[mask, c].mean() - b) / b
            if (~mask).any():
                b = base_losses[~mask, c].mean()
                neg[c] = (new_losses[~mask, c].mean() - b) / b
        return pos, neg
    out = np.full(C, np.nan)
    k = np.argmax(labels, axis=1)
    for c in range(C):
        mask = k == c
        if mask.any():
            b = base_losses[mask].mean()
            out[c] = (new_losses[mask].mean() - b) / b
    return out


def relative_loss_variation(logits, labels, offsets, multilabel: bool = False):
    """Per-class relative loss variation induced by additive logit offsets.

    Single-label: offsets as in :func:`perturbed_ce`; the statistic for class c
    averages over that class's samples. Multi-label: `offsets` is a length-C
    scalar vector entering the positive branch as +offset and the negative
    branch as -offset; separate statistics are returned for positive and
    negative samples.
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    if multilabel:
        _check_multihot(logits, labels)
        base = labels * softplus(-logits) + (1 - labels) * softplus(logits)
        new = (labels * softplus(-(logits - offsets))
               + (1 - labels) * softplus(logits - offsets))
        return per_class_variation(base, new, labels, multilabel=True)
    base = _ce_rows(logits, labels)
    new = _ce_rows(logits + offsets, labels)
    return per_class_variation(base, new, labels, multilabel=False)
