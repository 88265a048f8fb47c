"""Collaborative pseudo-labeling: MatchOrConf fusion and the MaxConf threshold."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidConfig, InvalidInput, ShapeMismatch
from .models import REJECTED


class Provenance(str, Enum):
    MATCH = "match"
    TEACHER_CONF = "teacher_conf"
    ORACLE_CONF = "oracle_conf"
    REJECTED = "rejected"


@dataclass(frozen=True)
class FusionConfig:
    psi_s: float = 0.1
    psi_c: float = 0.1

    def __post_init__(self):
        if not (0 <= self.psi_s <= 1 and 0 <= self.psi_c <= 1):
            raise InvalidConfig("fusion thresholds must lie in [0, 1]")


@dataclass(frozen=True)
class FusionDecision:
    label: int
    source: Provenance
    teacher_conf: float
    oracle_conf: float

    @property
    def rejected(self) -> bool:
        return self.label == REJECTED


def match_or_conf(p_teach, p_oracle, cfg: FusionConfig = FusionConfig()) -> FusionDecision:
    p_teach = np.asarray(p_teach, dtype=np.float64)
    p_oracle = np.asarray(p_oracle, dtype=np.float64)
    if p_teach.shape != p_oracle.shape or p_teach.ndim != 1:
        raise ShapeMismatch(f"shape mismatch: {p_teach.shape} vs {p_oracle.shape}")
    y_s, y_c = int(np.argmax(p_teach)), int(np.argmax(p_oracle))
    c_s, c_c = float(p_teach[y_s]), float(p_oracle[y_c])

    if y_s == y_c:
        return FusionDecision(y_s, Provenance.MATCH, c_s, c_c)
    s_ok, c_ok = c_s >= cfg.psi_s, c_c >= cfg.psi_c
    if s_ok and not c_ok:
        return FusionDecision(y_s, Provenance.TEACHER_CONF, c_s, c_c)
    if c_ok and not s_ok:
        return FusionDecision(y_c, Provenance.ORACLE_CONF, c_s, c_c)
    if s_ok and c_ok:
        if c_s > c_c:
            return FusionDecision(y_s, Provenance.TEACHER_CONF, c_s, c_c)
        return FusionDecision(y_c, Provenance.ORACLE_CONF, c_s, c_c)
    return FusionDecision(REJECTED, Provenance.REJECTED, c_s, c_c)


# integer codes used by the vectorised path
SRC_MATCH, SRC_TEACHER, SRC_ORACLE, SRC_REJECTED = 0, 1, 2, 3
PROVENANCE_BY_CODE = (
    Provenance.MATCH, Provenance.TEACHER_CONF, Provenance.ORACLE_CONF, Provenance.REJECTED,
)


def fuse_batch(p_teach, p_oracle, cfg: FusionConfig = FusionConfig()):
    """Row-wise MatchOrConf over (n, K) arrays.

    Returns ``(labels, source_codes, teacher_conf, oracle_conf)``.
    """
    p_teach = np.asarray(p_teach, dtype=np.float64)
    p_oracle = np.asarray(p_oracle, dtype=np.float64)
    if p_teach.shape != p_oracle.shape or p_teach.ndim != 2:
        raise ShapeMismatch(f"shape mismatch: {p_teach.shape} vs {p_oracle.shape}")
    y_s, y_c = p_teach.argmax(axis=1), p_oracle.argmax(axis=1)
    rows = np.arange(len(y_s))
    c_s, c_c = p_teach[rows, y_s], p_oracle[rows, y_c]
    agree = y_s == y_c
    s_ok, c_ok = c_s >= cfg.psi_s, c_c >= cfg.psi_c
    teacher_wins = ~agree & s_ok & (~c_ok | (c_s > c_c))
    oracle_wins = ~agree & c_ok & ~teacher_wins
    codes = np.select(
        [agree, teacher_wins, oracle_wins], [SRC_MATCH, SRC_TEACHER, SRC_ORACLE], SRC_REJECTED
    )
    labels = np.select([agree | teacher_wins, oracle_wins], [y_s, y_c], REJECTED)
    return labels, codes, c_s, c_c


def compute_gamma(teacher_preds, oracle_preds) -> float:
    """Highest teacher confidence among samples where teacher and oracle agree.

    Falls back to 1.0 when no sample agrees.
    """
    p_t = np.atleast_2d(np.asarray(teacher_preds, dtype=np.float64))
    p_c = np.atleast_2d(np.asarray(oracle_preds, dtype=np.float64))
    if p_t.size == 0 or p_t.shape[0] == 0:
        raise InvalidInput("gamma needs at least one sample")
    if p_t.shape != p_c.shape:
        raise ShapeMismatch(f"shape mismatch: {p_t.shape} vs {p_c.shape}")
    agree = p_t.argmax(axis=1) == p_c.argmax(axis=1)
    if not agree.any():
        return 1.0
    return float(p_t.max(axis=1)[agree].max())
