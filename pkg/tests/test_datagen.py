import math

import numpy as np
import pytest

from collab_adapt.datagen import (
    DomainSpec, LabeledDataset, ShiftSpec, circle_means, default_domain_spec, default_shift,
    make_domain_pair, read_csv, shifted_means, write_csv,
)
from collab_adapt.errors import InvalidConfig, InvalidInput, ShapeMismatch
from collab_adapt.evaluation import accuracy
from collab_adapt.models import SourceTrainConfig, forward, init_model, train_source


def spec4(n=250, cov=1.0):
    return DomainSpec(circle_means(4, 2, 3.0), cov, n)


def test_deterministic_given_seed():
    a = make_domain_pair(spec4(), ShiftSpec(math.pi / 2, None, 1.0), seed=11)
    b = make_domain_pair(spec4(), ShiftSpec(math.pi / 2, None, 1.0), seed=11)
    for x, y in zip(a, b):
        assert x.features.tobytes() == y.features.tobytes()
        assert x.labels.tobytes() == y.labels.tobytes()


def test_different_seeds_differ():
    a, _ = make_domain_pair(spec4(), default_shift(), seed=1)
    b, _ = make_domain_pair(spec4(), default_shift(), seed=2)
    assert not np.array_equal(a.features, b.features)


def test_shapes_and_labels():
    src, tgt = make_domain_pair(default_domain_spec(), default_shift(), seed=0)
    assert src.features.shape == (1000, 2) and tgt.features.shape == (1000, 2)
    assert np.bincount(src.labels).tolist() == [250] * 4
    assert src.num_classes == tgt.num_classes == 4


def test_shifted_means_closed_form():
    means = np.array([[1.0, 0.0, 5.0], [0.0, 2.0, -1.0]])
    spec = DomainSpec(means, 1.0, 1)
    out = shifted_means(spec, ShiftSpec(math.pi / 2, [1.0, 0.0, 0.5], 1.0))
    np.testing.assert_allclose(out, [[1.0, 1.0, 5.5], [-1.0, 0.0, -0.5]], atol=1e-15)


def test_target_means_match_rotated_translated_source_means():
    spec = spec4(n=250)
    shift = ShiftSpec(math.pi / 6, [1.0, 0.0], 1.5)
    _, tgt = make_domain_pair(spec, shift, seed=3)
    c, s = math.cos(math.pi / 6), math.sin(math.pi / 6)
    expected = spec.class_means @ np.array([[c, s], [-s, c]]) + np.array([1.0, 0.0])
    sigma = math.sqrt(spec.covariance_scale * shift.noise_scale_multiplier)
    bound = 3 * sigma / math.sqrt(spec.samples_per_class)
    for k in range(4):
        emp = tgt.features[tgt.labels == k].mean(axis=0)
        assert np.all(np.abs(emp - expected[k]) < bound)


def test_class_means_converge_at_large_n():
    spec = spec4(n=10_000, cov=2.0)
    src, _ = make_domain_pair(spec, ShiftSpec(), seed=4)
    bound = 3 * math.sqrt(2.0) / math.sqrt(10_000)
    for k in range(4):
        emp = src.features[src.labels == k].mean(axis=0)
        assert np.all(np.abs(emp - spec.class_means[k]) < bound)
        var = src.features[src.labels == k].var(axis=0)
        np.testing.assert_allclose(var, 2.0, rtol=0.05)


def test_zero_shift_gives_matching_accuracy():
    spec = default_domain_spec()
    cfg = SourceTrainConfig(epochs=20)
    src_acc, tgt_acc = [], []
    for seed in range(10):
        src, tgt = make_domain_pair(spec, ShiftSpec(0.0, np.zeros(2), 1.0), seed)
        model = train_source(init_model(4, 2, 0.01, seed), src, cfg, seed)
        src_acc.append(accuracy(lambda x: forward(model, x), src))
        tgt_acc.append(accuracy(lambda x: forward(model, x), tgt))
    assert abs(np.mean(src_acc) - np.mean(tgt_acc)) < 3.0


@pytest.mark.parametrize(
    "means, cov, n",
    [
        ([[0.0, 0.0]], 1.0, 10),  # K = 1
        ([[0.0], [1.0]], 1.0, 10),  # d = 1
        ([[0.0, 0.0], [0.0, 0.0]], 1.0, 10),  # coincident means
        ([[0.0, 0.0], [1.0, 0.0]], 0.0, 10),
        ([[0.0, 0.0], [1.0, 0.0]], 1.0, 0),
    ],
)
def test_degenerate_domain_spec(means, cov, n):
    with pytest.raises(InvalidConfig):
        DomainSpec(np.array(means), cov, n)


def test_invalid_shift():
    with pytest.raises(InvalidConfig):
        ShiftSpec(0.0, None, 0.0)
    with pytest.raises(InvalidConfig):
        make_domain_pair(spec4(), ShiftSpec(0.0, [1.0, 2.0, 3.0], 1.0), 0)


def test_labeled_dataset_validation():
    with pytest.raises(ShapeMismatch):
        LabeledDataset(np.zeros((3, 2)), np.zeros(2, dtype=int))
    with pytest.raises(InvalidInput):
        LabeledDataset(np.zeros((2, 2)), np.array([0, 5]), num_classes=3)


def test_csv_roundtrip(tmp_path):
    src, _ = make_domain_pair(spec4(n=5), default_shift(), seed=0)
    path = tmp_path / "s.csv"
    write_csv(src, path)
    assert path.read_text().splitlines()[0] == "f0,f1,label"
    back = read_csv(path, 4)
    np.testing.assert_array_equal(back.features, src.features)
    np.testing.assert_array_equal(back.labels, src.labels)


def test_csv_rejects_empty(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("f0,f1,label\n")
    with pytest.raises(InvalidInput):
        read_csv(path)
