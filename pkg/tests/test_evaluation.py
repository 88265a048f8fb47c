import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collab_adapt.datagen import LabeledDataset
from collab_adapt.errors import InvalidInput
from collab_adapt.evaluation import BoundsReport, accuracy, closed_gap

import reported_values


def balanced(k=4, per=25):
    labels = np.repeat(np.arange(k), per)
    return LabeledDataset(np.random.default_rng(0).normal(size=(k * per, 2)), labels, k)


class TestAccuracy:
    def test_constant_predictor(self):
        data = balanced()
        const = lambda x: np.tile([0.1, 0.6, 0.2, 0.1], (len(x), 1))
        assert accuracy(const, data) == pytest.approx(25.0)

    def test_perfect_predictor(self):
        data = balanced()
        perfect = lambda x: np.eye(4)[data.labels]
        assert accuracy(perfect, data) == 100.0

    def test_empty(self):
        with pytest.raises(InvalidInput):
            accuracy(lambda x: x, LabeledDataset(np.zeros((0, 2)), np.zeros(0, dtype=int), 2))


class TestClosedGap:
    def test_examples(self):
        assert closed_gap(55.8, 40.0, 66.3) == pytest.approx(60.1, abs=0.05)
        assert closed_gap(92.8, 83.0, 92.0) == 100.0
        assert closed_gap(40.0, 40.0, 66.3) == 0.0
        assert closed_gap(66.3, 40.0, 66.3) == pytest.approx(100.0)
        assert closed_gap(60.0, 50.0, 50.0) is None
        assert closed_gap(60.0, 55.0, 50.0) is None

    def test_negative_clamped(self):
        assert closed_gap(30.0, 40.0, 66.3) == 0.0

    @pytest.mark.parametrize("task,lb,method,ub,cg", list(reported_values.cells()))
    def test_reported_cells(self, task, lb, method, ub, cg):
        got = closed_gap(method, lb, ub)
        if cg is None:
            assert got is None
        else:
            assert got == pytest.approx(cg, abs=0.1)

    @given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 100), st.floats(0, 100))
    def test_range_and_monotone(self, m1, m2, lb, ub):
        if lb >= ub:
            assert closed_gap(m1, lb, ub) is None
            return
        a, b = closed_gap(min(m1, m2), lb, ub), closed_gap(max(m1, m2), lb, ub)
        assert 0.0 <= a <= b <= 100.0

    def test_report_property(self):
        assert BoundsReport(40.0, 66.3, 55.8).cg == pytest.approx(60.076, abs=1e-3)
        assert BoundsReport(50.0, 50.0, 55.0).cg is None
