"""Accuracy, lower/upper bounds and the closed-gap score."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .datagen import LabeledDataset
from .errors import InvalidInput


def accuracy(predict: Callable[[np.ndarray], np.ndarray], data: LabeledDataset) -> float:
    """Percentage of rows whose argmax prediction equals the label."""
    if len(data) == 0:
        raise InvalidInput("accuracy of an empty dataset is undefined")
    probs = np.asarray(predict(data.features))
    return 100.0 * float(np.mean(probs.argmax(axis=1) == data.labels))


def closed_gap(method: float, lb: float, ub: float) -> Optional[float]:
    """Share of the LB-to-UB gap recovered, in percent, clipped to [0, 100].

    Returns None when lb >= ub.
    """
    if lb >= ub:
        return None
    return min(100.0, max(0.0, (method - lb) / (ub - lb) * 100.0))


@dataclass(frozen=True)
class BoundsReport:
    lb: float
    ub: float
    method: float

    @property
    def cg(self) -> Optional[float]:
        return closed_gap(self.method, self.lb, self.ub)
