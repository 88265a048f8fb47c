"""Probability-vector arithmetic: tempered softmax and KL divergences.

All functions operate on the last axis, so a single K-vector and an
(n, K) batch of vectors are both accepted.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidConfig, InvalidInput, ShapeMismatch

KL_EPS = 1e-12
PROB_ATOL = 1e-9


def _as_float(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def check_prob_dist(p, atol: float = PROB_ATOL) -> np.ndarray:
    """Validate that ``p`` holds probability vectors along its last axis."""
    p = _as_float(p)
    if p.ndim == 0 or p.shape[-1] < 2:
        raise InvalidInput("a probability vector needs at least 2 entries")
    if not np.all(np.isfinite(p)):
        raise InvalidInput("probabilities must be finite")
    if np.any(p < 0):
        raise InvalidInput("probabilities must be non-negative")
    if not np.allclose(p.sum(axis=-1), 1.0, rtol=0.0, atol=atol):
        raise InvalidInput("probabilities must sum to 1")
    return p


def log_softmax(z, temperature: float = 1.0) -> np.ndarray:
    if not temperature > 0:
        raise InvalidConfig(f"temperature must be positive, got {temperature}")
    z = _as_float(z)
    if not np.all(np.isfinite(z)):
        raise InvalidInput("logits must be finite")
    u = z / temperature
    u = u - u.max(axis=-1, keepdims=True)
    return u - np.log(np.exp(u).sum(axis=-1, keepdims=True))


def softmax(z, temperature: float = 1.0) -> np.ndarray:
    """softmax(z / temperature), stabilised by max-subtraction."""
    if not temperature > 0:
        raise InvalidConfig(f"temperature must be positive, got {temperature}")
    z = _as_float(z)
    if not np.all(np.isfinite(z)):
        raise InvalidInput("logits must be finite")
    u = z / temperature
    e = np.exp(u - u.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def kl_div(p, q, eps: float = KL_EPS):
    """KL(p || q) = sum_i p_i log(p_i / q_i).

    Entries of ``q`` are floored at ``eps``; terms with p_i == 0 contribute 0.
    Returns a float for vector input, an array for batched input.
    """
    p = _as_float(p)
    q = _as_float(q)
    if p.shape != q.shape:
        raise ShapeMismatch(f"shape mismatch: {p.shape} vs {q.shape}")
    q = np.maximum(q, eps)
    pos = p > 0
    safe_p = np.where(pos, p, 1.0)
    terms = np.where(pos, p * (np.log(safe_p) - np.log(q)), 0.0)
    out = np.maximum(terms.sum(axis=-1), 0.0)
    return float(out) if out.ndim == 0 else out


def sym_kl(p, q, eps: float = KL_EPS):
    """Mean of the two KL directions; symmetric in its arguments."""
    return 0.5 * (kl_div(p, q, eps) + kl_div(q, p, eps))


def argmax_lowest(p) -> np.ndarray | int:
    """argmax along the last axis; ties resolve to the lowest index."""
    out = np.argmax(_as_float(p), axis=-1)
    return int(out) if np.ndim(out) == 0 else out
