import math

import numpy as np
import pytest

from collab_adapt import config
from collab_adapt.curriculum import Stepwise
from collab_adapt.errors import InvalidConfig


class TestDefaults:
    def test_core_hyperparameters(self):
        c = config.defaults()
        expected = {
            "curriculum.alpha": 0.5, "curriculum.beta": 0.6, "acr.eta": 6.0, "acr.rho": 0.25,
            "acr.sigma": 0.05, "acr.lambda": 0.2, "adapt.tau": 2.0, "adapt.delta": 0.999,
            "adapt.epochs": 30, "acr.h": 10, "fusion.psi_s": 0.1, "fusion.psi_c": 0.1,
            "oracle.tau_c": 0.5, "optim.lr": 0.001, "optim.weight_decay": 0.2,
            "adapt.batch_size": 32, "curriculum.pace": "exponential", "curriculum.sign": "growth",
        }
        for key, value in expected.items():
            assert c[key] == value, key

    def test_benchmark_defaults(self):
        c = config.defaults()
        assert (c["data.num_classes"], c["data.feature_dim"], c["data.samples_per_class"]) == (4, 2, 250)
        assert c["shift.rotation"] == pytest.approx(math.pi / 5)
        assert c["shift.translation"] == [1.0, 0.5] and c["shift.noise_multiplier"] == 1.5

    def test_setup_carries_defaults(self):
        s = config.experiment_setup(config.defaults())
        a = s.adapt
        assert (a.curriculum.alpha, a.curriculum.pace.beta, a.acr.eta, a.acr.lam) == (0.5, 0.6, 6.0, 0.2)
        assert s.oracle.temperature == 0.5 and s.domain.num_classes == 4
        np.testing.assert_allclose(np.linalg.norm(s.domain.class_means, axis=1), 3.0)


class TestParsing:
    def test_text(self):
        cfg = config.parse_text("# comment\nacr.h = 5\n\ncurriculum.pace = stepwise  # trailing\n"
                                "shift.translation = [0, 1]\nadapt.kl_tau_squared = true\n")
        assert cfg == {"acr.h": 5, "curriculum.pace": "stepwise", "shift.translation": [0.0, 1.0],
                       "adapt.kl_tau_squared": True}

    def test_round_trip(self):
        c = config.defaults()
        assert config.resolve(config.parse_text(config.dump_text(c))) == c

    def test_load_file_and_sets(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("acr.h = 5\nseed = 3\n")
        c = config.load(p, ["acr.h=7", "curriculum.pace=stepwise", "curriculum.steps=3"])
        assert (c["acr.h"], c["seed"]) == (7, 3)
        pace = config.adaptation_config(c).curriculum.pace
        assert isinstance(pace, Stepwise) and pace.n == 3

    @pytest.mark.parametrize("key,raw", [
        ("nope.key", "1"), ("acr.h", "1.5"), ("acr.h", "0"), ("acr.rho", "2"),
        ("curriculum.pace", "cubic"), ("adapt.tau", "abc"), ("adapt.kl_tau_squared", "maybe"),
        ("adapt.epochs", "true"), ("variant", "everything"), ("adapt.tau", "null"),
    ])
    def test_invalid(self, key, raw):
        with pytest.raises(InvalidConfig):
            config.parse_value(key, raw)

    def test_missing_equals(self):
        with pytest.raises(InvalidConfig):
            config.parse_text("acr.h 5\n")
        with pytest.raises(InvalidConfig):
            config.load(None, ["acr.h"])

    def test_shape_checks(self):
        with pytest.raises(InvalidConfig):
            config.shift_spec(config.resolve({"shift.translation": "[1, 2, 3]"}))
        with pytest.raises(InvalidConfig):
            config.domain_spec(config.resolve({"data.class_means": "[[0, 0], [1, 1]]"}))

    def test_explicit_means(self):
        c = config.resolve({"data.num_classes": "2", "data.class_means": "[[0, 0], [3, 0]]"})
        np.testing.assert_array_equal(config.domain_spec(c).class_means, [[0, 0], [3, 0]])
