"""Adaptive curriculum regularization: progress-gated, stability-aware weight inversion."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .numerics import kl_div


@dataclass(frozen=True)
class AcrConfig:
    eta: float = 6.0
    rho: float = 0.25
    sigma: float = 0.05
    lam: float = 0.2
    gamma: float = 1.0
    h: int = 10
    min_history: int = 2

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidConfig("eta must be positive")
        if not 0 <= self.rho <= 1:
            raise InvalidConfig("rho must lie in [0, 1]")
        if not self.sigma > 0:
            raise InvalidConfig("sigma must be positive")
        if not 0 <= self.lam <= 1:
            raise InvalidConfig("lambda must lie in [0, 1]")
        if not 0 <= self.gamma <= 1:
            raise InvalidConfig("gamma must lie in [0, 1]")
        if self.h < 1 or self.min_history < 1:
            raise InvalidConfig("h and min_history must be >= 1")


class HistoryBuffer:
    """FIFO of the most recent ``h`` predicted distributions for one sample."""

    def __init__(self, h: int = 10):
        if h < 1:
            raise InvalidConfig("history size must be >= 1")
        self.h = h
        self._items: deque[np.ndarray] = deque(maxlen=h)

    def push(self, p) -> None:
        self._items.append(np.array(p, dtype=np.float64))

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def mean(self) -> np.ndarray:
        return np.mean(np.stack(self._items), axis=0)


def push_history(buffer: HistoryBuffer, p) -> None:
    buffer.push(p)


def inversion_probability(e_frac: float, eta: float = 6.0) -> float:
    if not eta > 0:
        raise InvalidConfig("eta must be positive")
    return 1.0 - math.exp(-eta * e_frac)


def selection_cap(n: int, rho: float) -> int:
    return math.floor(rho * n + 1e-9)


def select_candidates(n: int, p_inv: float, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Indices picked for inversion: u_i < p_inv, thinned uniformly to floor(rho * n).

    Returned sorted ascending.
    """
    if n < 1:
        raise InvalidConfig("batch size must be >= 1")
    u = rng.random(n)
    candidates = np.flatnonzero(u < p_inv)
    cap = selection_cap(n, rho)
    if candidates.size > cap:
        candidates = np.sort(rng.choice(candidates, size=cap, replace=False))
    return candidates


def stability_kl(current, buffer: HistoryBuffer, min_history: int = 2) -> float | None:
    """KL(current || mean of stored distributions), or None during warm-up."""
    if len(buffer) < min_history:
        return None
    return kl_div(current, buffer.mean())


def invert_weight(w, lam: float):
    return (1 - w) * lam + w * (1 - lam)


def adjust_weight(w: float, confidence: float, d_kl: float | None, cfg: AcrConfig) -> tuple[float, bool]:
    """Partially invert ``w`` for stable over-confident or low-confidence samples."""
    stable_overconfident = d_kl is not None and d_kl < cfg.sigma and confidence > cfg.gamma
    if stable_overconfident or confidence < cfg.gamma:
        return invert_weight(w, cfg.lam), True
    return w, False
