"""Shared numerical primitives: softmax, cross-entropy, binary logistic losses,
the standard normal CDF, and seeded random streams.

All functions are pure and operate on plain numpy arrays. Logit vectors are 1-D
float arrays; batches are 2-D with one row per sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "RngStream",
    "softmax",
    "cross_entropy",
    "ce_logit_gradient",
    "binary_logistic_loss",
    "std_normal_cdf",
]

# softplus switches to its asymptote here; exp(-30) ~ 9e-14 is below float64
# resolution of log1p near these magnitudes
_SOFTPLUS_CUTOFF = 30.0


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by (seed, stream id).

    Identical (seed, stream) pairs always yield identical draw sequences.
    Each concurrent task should own its own stream.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream]))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


def _as_logits(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.size == 0:
        raise ValueError("empty logit vector")
    if not np.all(np.isfinite(u)):
        raise ValueError("logits must be finite")
    return u


def softmax(u) -> np.ndarray:
    """Numerically stable softmax along the last axis.

    Accepts a single logit vector or a batch of rows; output sums to 1 within
    1e-9 along the last axis.
    """
    u = _as_logits(u)
    shifted = u - np.max(u, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def _check_one_hot(u: np.ndarray, y: np.ndarray) -> int:
    if y.shape != u.shape:
        raise ValueError(f"label shape {y.shape} does not match logits {u.shape}")
    hot = np.flatnonzero(y == 1.0)
    if hot.size != 1 or not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("label must be one-hot")
    return int(hot[0])


def _log_softmax(u: np.ndarray) -> np.ndarray:
    shifted = u - np.max(u, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def cross_entropy(u, y) -> float:
    """Cross-entropy -log softmax(u)_k for the one-hot label y."""
    u = _as_logits(u)
    y = np.asarray(y, dtype=float)
    k = _check_one_hot(u, y)
    return float(-_log_softmax(u)[k])


def ce_logit_gradient(u, y) -> np.ndarray:
    """Gradient of cross_entropy with respect to the logits: softmax(u) - y."""
    u = _as_logits(u)
    y = np.asarray(y, dtype=float)
    _check_one_hot(u, y)
    return softmax(u) - y


def softplus(x) -> np.ndarray:
    """log(1 + e^x) with an overflow-safe branch at |x| >= 30."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    hi = x >= _SOFTPLUS_CUTOFF
    lo = x <= -_SOFTPLUS_CUTOFF
    mid = ~(hi | lo)
    out[hi] = x[hi]
    out[lo] = np.exp(x[lo])
    out[mid] = np.log1p(np.exp(x[mid]))
    return out


def binary_logistic_loss(u, y) -> np.ndarray:
    """Per-element binary logistic loss on raw logits.

    y=1 -> log(1 + e^{-u}), y=0 -> log(1 + e^{u}).
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("logits must be finite")
    y = np.asarray(y, dtype=float)
    sign = np.where(y == 1.0, -1.0, 1.0)
    return softplus(sign * u)


def std_normal_cdf(x):
    """Standard normal CDF via erf; accurate to machine precision (< 1e-15)."""
    x = np.asarray(x, dtype=float)
    out = ndtr(x)
    if out.ndim == 0:
        return float(out)
    return out
