"""Reliability scores and pace functions mapping (r, progress) to a loss weight."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidConfig, InvalidInput
from .numerics import sym_kl

W_MIN, W_MAX = 0.0, 1.0


@dataclass(frozen=True)
class ReliabilityOnly:
    pass


@dataclass(frozen=True)
class Exponential:
    beta: float = 0.6
    growth: bool = True


@dataclass(frozen=True)
class Linear:
    beta: float = 0.6


@dataclass(frozen=True)
class Sigmoid:
    beta: float = 0.6


@dataclass(frozen=True)
class Stepwise:
    n: int = 4


PaceKind = Union[ReliabilityOnly, Exponential, Linear, Sigmoid, Stepwise]

PACE_NAMES = ("reliability", "exponential", "linear", "sigmoid", "stepwise")


def make_pace(name: str, beta: float = 0.6, steps: int = 4, growth: bool = True) -> PaceKind:
    if name == "reliability":
        return ReliabilityOnly()
    if name == "exponential":
        return Exponential(beta, growth)
    if name == "linear":
        return Linear(beta)
    if name == "sigmoid":
        return Sigmoid(beta)
    if name == "stepwise":
        return Stepwise(steps)
    raise InvalidConfig(f"unknown pace function {name!r}; choose from {PACE_NAMES}")


def _validate_pace(pace: PaceKind) -> None:
    beta = getattr(pace, "beta", None)
    if beta is not None and not beta > 0:
        raise InvalidConfig("pace beta must be positive")
    if isinstance(pace, Stepwise) and pace.n < 1:
        raise InvalidConfig("stepwise pace needs n >= 1")


@dataclass(frozen=True)
class CurriculumConfig:
    alpha: float = 0.5
    pace: PaceKind = field(default_factory=Exponential)

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidConfig("alpha must be positive")
        _validate_pace(self.pace)


def reliability(p_teach, p_oracle, alpha: float = 0.5):
    """exp(-alpha * symmetric KL); 1 when the two distributions coincide."""
    if not alpha > 0:
        raise InvalidConfig("alpha must be positive")
    r = np.exp(-alpha * np.asarray(sym_kl(p_teach, p_oracle)))
    return float(r) if r.ndim == 0 else r


def pace_weight(r, e_frac: float, pace: PaceKind):
    """Curriculum weight w in [0, 1] for reliability ``r`` at progress ``e_frac``."""
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(~(r_arr > 0)) or np.any(r_arr > 1):
        raise InvalidInput("reliability must lie in (0, 1]")
    if not 0.0 <= e_frac <= 1.0:
        raise InvalidInput("e_frac must lie in [0, 1]")
    _validate_pace(pace)

    if isinstance(pace, ReliabilityOnly):
        w = r_arr
    elif isinstance(pace, Exponential):
        sign = 1.0 if pace.growth else -1.0
        w = r_arr * math.exp(sign * pace.beta * e_frac)
    elif isinstance(pace, Linear):
        w = r_arr * (1 + pace.beta * e_frac)
    elif isinstance(pace, Sigmoid):
        r_eqv = r_arr * (W_MAX - r_arr)
        w = r_eqv + 1.0 / (1.0 + math.exp(-pace.beta * (12 * e_frac - 6)))
    elif isinstance(pace, Stepwise):
        w = r_arr + math.floor(pace.n * e_frac) * (W_MAX - r_arr) / pace.n
    else:
        raise InvalidConfig(f"unsupported pace kind {pace!r}")
    w = np.clip(w, W_MIN, W_MAX)
    return float(w) if w.ndim == 0 else w
