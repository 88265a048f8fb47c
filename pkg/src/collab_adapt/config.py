"""Flat dotted-key run configuration: schema, parsing and conversion.

A config file holds one ``key = value`` per line; ``#`` starts a comment.
Lists and matrices are written as JSON, e.g. ``shift.translation = [1.0, 0.5]``.
Unknown keys and out-of-range values raise :class:`InvalidConfig`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .acr import AcrConfig
from .curriculum import PACE_NAMES, CurriculumConfig, make_pace
from .datagen import DomainSpec, ShiftSpec, circle_means
from .errors import InvalidConfig
from .models import OptimizerConfig, SourceTrainConfig
from .pseudo import FusionConfig
from .trainer import AdaptationConfig, ExperimentSetup, OracleParams, Variant


@dataclass(frozen=True)
class Key:
    kind: str  # int | float | bool | str | vector | matrix
    default: Any
    doc: str
    choices: tuple[str, ...] | None = None
    check: Callable[[Any], bool] | None = None


def _pos(v) -> bool:
    return v > 0


def _unit(v) -> bool:
    return 0 <= v <= 1


def _nonneg(v) -> bool:
    return v >= 0


SCHEMA: dict[str, Key] = {
    "seed": Key("int", 0, "run seed; every random stream derives from it", check=_nonneg),
    "variant": Key("str", "full", "ablation variant", choices=tuple(v.value for v in Variant)),
    "data.num_classes": Key("int", 4, "K", check=lambda v: v >= 2),
    "data.feature_dim": Key("int", 2, "d", check=lambda v: v >= 2),
    "data.samples_per_class": Key("int", 250, "samples per class per domain", check=_pos),
    "data.mean_radius": Key("float", 3.0, "radius of circle-layout class means", check=_pos),
    "data.class_means": Key("matrix", None, "explicit (K, d) class means; overrides the circle layout"),
    "data.covariance_scale": Key("float", 1.0, "isotropic source covariance", check=_pos),
    "data.source_csv": Key("str", "", "load source set from CSV instead of generating"),
    "data.target_csv": Key("str", "", "load target set from CSV instead of generating"),
    "shift.rotation": Key("float", math.pi / 5, "rotation (radians) of the first two dims"),
    "shift.translation": Key("vector", [1.0, 0.5], "target translation; length d"),
    "shift.noise_multiplier": Key("float", 1.5, "target covariance multiplier", check=_pos),
    "oracle.m": Key("int", 8, "templates per class", check=_pos),
    "oracle.perturbation_scale": Key("float", 0.5, "template jitter std", check=_nonneg),
    "oracle.logit_scale": Key("float", 5.0, "similarity scale", check=_pos),
    "oracle.tau_c": Key("float", 0.5, "oracle softmax temperature", check=_pos),
    "source.epochs": Key("int", 50, "source training epochs", check=_nonneg),
    "source.batch_size": Key("int", 32, "source training batch size", check=_pos),
    "source.lr": Key("float", 0.01, "source training learning rate", check=_pos),
    "source.weight_decay": Key("float", 0.0, "source training weight decay", check=_nonneg),
    "source.init_scale": Key("float", 0.01, "std of initial weights", check=_nonneg),
    "adapt.epochs": Key("int", 30, "E", check=lambda v: v >= 1),
    "adapt.batch_size": Key("int", 32, "N", check=lambda v: v >= 1),
    "adapt.tau": Key("float", 2.0, "distillation temperature", check=_pos),
    "adapt.delta": Key("float", 0.999, "EMA decay", check=_unit),
    "adapt.ema_per": Key("str", "step", "EMA cadence", choices=("step", "epoch")),
    "adapt.kl_tau_squared": Key("bool", False, "scale the KL term by tau^2"),
    "adapt.gamma_mode": Key("str", "once", "gamma schedule", choices=("once", "per_epoch")),
    "optim.lr": Key("float", 0.001, "student learning rate", check=_pos),
    "optim.weight_decay": Key("float", 0.2, "decoupled weight decay", check=_nonneg),
    "optim.beta1": Key("float", 0.9, "first-moment coefficient", check=_unit),
    "optim.beta2": Key("float", 0.999, "second-moment coefficient", check=_unit),
    "optim.eps": Key("float", 1e-8, "denominator epsilon", check=_pos),
    "curriculum.alpha": Key("float", 0.5, "reliability sensitivity", check=_pos),
    "curriculum.pace": Key("str", "exponential", "pace function", choices=PACE_NAMES),
    "curriculum.beta": Key("float", 0.6, "pace rate", check=_pos),
    "curriculum.sign": Key("str", "growth", "exponential pace direction", choices=("growth", "decay")),
    "curriculum.steps": Key("int", 4, "stepwise pace steps", check=_pos),
    "acr.eta": Key("float", 6.0, "inversion-probability rate", check=_pos),
    "acr.rho": Key("float", 0.25, "max fraction inverted per batch", check=_unit),
    "acr.sigma": Key("float", 0.05, "stability KL threshold", check=_pos),
    "acr.lambda": Key("float", 0.2, "inversion strength", check=_unit),
    "acr.h": Key("int", 10, "history buffer length", check=_pos),
    "acr.min_history": Key("int", 2, "history needed before the stability test", check=_pos),
    "fusion.psi_s": Key("float", 0.1, "teacher confidence threshold", check=_unit),
    "fusion.psi_c": Key("float", 0.1, "oracle confidence threshold", check=_unit),
}


def defaults() -> dict[str, Any]:
    return {k: v.default for k, v in SCHEMA.items()}


def parse_value(key: str, raw: Any) -> Any:
    """Coerce ``raw`` (a string or already-typed value) to the schema type of ``key``."""
    if key not in SCHEMA:
        raise InvalidConfig(f"unknown config key {key!r}")
    spec = SCHEMA[key]
    try:
        if isinstance(raw, str) and spec.kind != "str":
            text = raw.strip()
            if spec.kind == "bool":
                if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(text)
                value: Any = text.lower() in ("true", "1", "yes")
            elif text.lower() in ("null", "none", ""):
                value = None
            else:
                value = json.loads(text)
        else:
            value = raw
        if value is None:
            if spec.default is not None:
                raise ValueError("null not allowed")
        elif spec.kind == "int":
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(value)
            value = int(value)
        elif spec.kind == "float":
            if isinstance(value, bool):
                raise ValueError(value)
            value = float(value)
        elif spec.kind == "bool":
            if not isinstance(value, bool):
                raise ValueError(value)
        elif spec.kind == "str":
            value = str(value).strip()
            if len(value) >= 2 and value[0] == value[-1] == '"':
                value = json.loads(value)
        elif spec.kind == "vector":
            value = [float(v) for v in value]
        elif spec.kind == "matrix":
            value = [[float(v) for v in row] for row in value]
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"bad value for {key}: {raw!r} ({exc})") from None
    if value is not None:
        if spec.choices is not None and value not in spec.choices:
            raise InvalidConfig(f"{key} must be one of {spec.choices}, got {value!r}")
        if spec.check is not None and not spec.check(value):
            raise InvalidConfig(f"{key}={value!r} is out of range")
    return value


def parse_text(text: str) -> dict[str, Any]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        out[key] = parse_value(key, raw)
    return out


def resolve(overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """Defaults with ``overrides`` applied and validated."""
    cfg = defaults()
    for key, raw in (overrides or {}).items():
        cfg[key] = parse_value(key, raw)
    return cfg


def load(path=None, sets: list[str] | None = None) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if path is not None:
        with open(path) as fh:
            overrides.update(parse_text(fh.read()))
    for item in sets or []:
        if "=" not in item:
            raise InvalidConfig(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        overrides[key.strip()] = parse_value(key.strip(), raw)
    return resolve(overrides)


def dump_text(cfg: dict[str, Any]) -> str:
    return "".join(f"{k} = {json.dumps(cfg[k])}\n" for k in SCHEMA)


def domain_spec(cfg: dict[str, Any]) -> DomainSpec:
    k, d = cfg["data.num_classes"], cfg["data.feature_dim"]
    means = cfg["data.class_means"]
    if means is None:
        means = circle_means(k, d, cfg["data.mean_radius"])
    means = np.asarray(means, dtype=np.float64)
    if means.shape != (k, d):
        raise InvalidConfig(f"data.class_means must be {k}x{d}, got {means.shape}")
    return DomainSpec(means, cfg["data.covariance_scale"], cfg["data.samples_per_class"])


def shift_spec(cfg: dict[str, Any]) -> ShiftSpec:
    t = np.asarray(cfg["shift.translation"], dtype=np.float64)
    if t.shape != (cfg["data.feature_dim"],):
        raise InvalidConfig("shift.translation length must equal data.feature_dim")
    return ShiftSpec(cfg["shift.rotation"], t, cfg["shift.noise_multiplier"])


def adaptation_config(cfg: dict[str, Any]) -> AdaptationConfig:
    pace = make_pace(
        cfg["curriculum.pace"], cfg["curriculum.beta"], cfg["curriculum.steps"],
        growth=cfg["curriculum.sign"] == "growth",
    )
    return AdaptationConfig(
        epochs=cfg["adapt.epochs"],
        batch_size=cfg["adapt.batch_size"],
        tau=cfg["adapt.tau"],
        ema_decay=cfg["adapt.delta"],
        ema_per=cfg["adapt.ema_per"],
        kl_tau_squared=cfg["adapt.kl_tau_squared"],
        gamma_mode=cfg["adapt.gamma_mode"],
        curriculum=CurriculumConfig(cfg["curriculum.alpha"], pace),
        acr=AcrConfig(
            eta=cfg["acr.eta"], rho=cfg["acr.rho"], sigma=cfg["acr.sigma"],
            lam=cfg["acr.lambda"], h=cfg["acr.h"], min_history=cfg["acr.min_history"],
        ),
        fusion=FusionConfig(cfg["fusion.psi_s"], cfg["fusion.psi_c"]),
        optimizer=OptimizerConfig(
            cfg["optim.lr"], cfg["optim.weight_decay"], cfg["optim.beta1"],
            cfg["optim.beta2"], cfg["optim.eps"],
        ),
        seed=cfg["seed"],
    )


def experiment_setup(cfg: dict[str, Any]) -> ExperimentSetup:
    return ExperimentSetup(
        domain=domain_spec(cfg),
        shift=shift_spec(cfg),
        oracle=OracleParams(
            cfg["oracle.m"], cfg["oracle.perturbation_scale"],
            cfg["oracle.logit_scale"], cfg["oracle.tau_c"],
        ),
        source=SourceTrainConfig(
            cfg["source.epochs"], cfg["source.batch_size"], cfg["source.lr"],
            cfg["source.weight_decay"], cfg["source.init_scale"],
        ),
        adapt=adaptation_config(cfg),
    )
