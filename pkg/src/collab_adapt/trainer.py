"""The collaborative curriculum self-training loop and ablation variants."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import acr as acr_ops
from .acr import AcrConfig, HistoryBuffer
from .curriculum import CurriculumConfig, pace_weight, reliability
from .datagen import DomainSpec, LabeledDataset, ShiftSpec, make_domain_pair
from .errors import InvalidConfig, InvalidInput, ShapeMismatch
from .evaluation import BoundsReport, accuracy
from .models import (
    AdamW, LinearSoftmaxModel, OptimizerConfig, SourceTrainConfig, TemplateOracle,
    batch_loss_and_grad, ema_update, forward, init_model, make_oracle, oracle_predict,
    train_source,
)
from .pseudo import (
    PROVENANCE_BY_CODE, SRC_MATCH, FusionConfig, FusionDecision, compute_gamma, fuse_batch,
)

log = logging.getLogger(__name__)

# named sub-streams derived from the run seed
STREAMS = {"data": 1, "init": 2, "source": 3, "upper": 4, "oracle": 5, "shuffle": 6, "acr": 7}


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng([seed, STREAMS[name], *extra])


def stream_seed(seed: int, name: str) -> int:
    return int(np.random.SeedSequence([seed, STREAMS[name]]).generate_state(1)[0])


@dataclass(frozen=True)
class AdaptationConfig:
    epochs: int = 30
    batch_size: int = 32
    tau: float = 2.0
    ema_decay: float = 0.999
    ema_per: str = "step"  # step | epoch
    kl_tau_squared: bool = False
    gamma_mode: str = "once"  # once | per_epoch
    pseudo_labels: str = "fusion"  # fusion | teacher
    weighting: str = "curriculum"  # curriculum | fixed
    fixed_weight: float = 1.0
    acr_enabled: bool = True
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    acr: AcrConfig = field(default_factory=AcrConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig("epochs and batch_size must be >= 1")
        if not self.tau > 0:
            raise InvalidConfig("tau must be positive")
        if not 0 <= self.ema_decay <= 1:
            raise InvalidConfig("ema_decay must lie in [0, 1]")
        if not 0 <= self.fixed_weight <= 1:
            raise InvalidConfig("fixed_weight must lie in [0, 1]")
        for name, value, allowed in (
            ("ema_per", self.ema_per, ("step", "epoch")),
            ("gamma_mode", self.gamma_mode, ("once", "per_epoch")),
            ("pseudo_labels", self.pseudo_labels, ("fusion", "teacher")),
            ("weighting", self.weighting, ("curriculum", "fixed")),
        ):
            if value not in allowed:
                raise InvalidConfig(f"{name} must be one of {allowed}, got {value!r}")


@dataclass
class SampleState:
    id: int
    features: np.ndarray
    oracle_pred: np.ndarray
    history: HistoryBuffer
    last_weight: float = float("nan")
    last_reliability: float = float("nan")
    last_decision: FusionDecision | None = None


@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    mean_max_confidence: float
    min_batch_weight_mean: float
    target_accuracy: float
    rejected_fraction: float
    inverted_fraction: float
    mean_reliability: float


@dataclass
class AdaptResult:
    student: LinearSoftmaxModel
    teacher: LinearSoftmaxModel
    traces: list[EpochTrace]
    gamma: float
    states: list[SampleState]


def epoch_fraction(e: int, total: int) -> float:
    if total < 1 or not 0 <= e < total:
        raise InvalidInput(f"epoch {e} outside [0, {total})")
    return e / total


def adapt(
    student: LinearSoftmaxModel,
    teacher: LinearSoftmaxModel,
    oracle: TemplateOracle,
    target: LabeledDataset,
    cfg: AdaptationConfig,
) -> AdaptResult:
    """Adapt ``student`` to unlabeled ``target``; both models are updated in place.

    ``target.labels`` feed only the per-epoch accuracy trace.
    """
    n = len(target)
    if n == 0:
        raise InvalidInput("target set is empty")
    if student.W.shape != teacher.W.shape or student.feature_dim != target.feature_dim:
        raise ShapeMismatch("student, teacher and target dimensions disagree")

    X = target.features
    oracle_preds = oracle_predict(oracle, X)
    states = [
        SampleState(i, X[i], oracle_preds[i], HistoryBuffer(cfg.acr.h)) for i in range(n)
    ]
    acr_cfg = cfg.acr
    gamma = compute_gamma(forward(teacher, X), oracle_preds)
    acr_cfg = dataclasses.replace(acr_cfg, gamma=gamma)

    opt = AdamW(student, cfg.optimizer)
    traces = []
    for epoch in range(cfg.epochs):
        e_frac = epoch_fraction(epoch, cfg.epochs)
        if cfg.gamma_mode == "per_epoch" and epoch > 0:
            gamma = compute_gamma(forward(teacher, X), oracle_preds)
            acr_cfg = dataclasses.replace(acr_cfg, gamma=gamma)
        p_inv = acr_ops.inversion_probability(e_frac, acr_cfg.eta)
        order = stream(cfg.seed, "shuffle", epoch).permutation(n)

        conf_sum = rel_sum = 0.0
        n_rejected = n_inverted = 0
        batch_min_weights = []
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            xb = X[idx]
            p_t = forward(teacher, xb)
            p_c = oracle_preds[idx]

            if cfg.pseudo_labels == "fusion":
                labels, codes, c_s, c_c = fuse_batch(p_t, p_c, cfg.fusion)
                r = reliability(p_t, p_c, cfg.curriculum.alpha)
            else:
                labels = p_t.argmax(axis=1)
                codes = np.full(len(idx), SRC_MATCH)
                c_s = c_c = p_t.max(axis=1)
                r = reliability(p_t, p_t, cfg.curriculum.alpha)
            r = np.atleast_1d(r)

            if cfg.weighting == "curriculum":
                w = np.atleast_1d(pace_weight(r, e_frac, cfg.curriculum.pace)).copy()
            else:
                w = np.full(len(idx), cfg.fixed_weight)

            p_s = forward(student, xb)
            inverted = np.zeros(len(idx), dtype=bool)
            if cfg.acr_enabled:
                sel = acr_ops.select_candidates(
                    len(idx), p_inv, acr_cfg.rho, stream(cfg.seed, "acr", epoch, b)
                )
                for i in sel:
                    d_kl = acr_ops.stability_kl(
                        p_s[i], states[idx[i]].history, acr_cfg.min_history
                    )
                    w[i], inverted[i] = acr_ops.adjust_weight(
                        w[i], float(p_s[i].max()), d_kl, acr_cfg
                    )

            _, grad = batch_loss_and_grad(
                student, teacher, xb, labels, w, cfg.tau, cfg.kl_tau_squared
            )
            opt.step(grad)
            if cfg.ema_per == "step":
                ema_update(teacher, student, cfg.ema_decay)

            for j, i in enumerate(idx):
                st = states[i]
                st.history.push(p_s[j])
                st.last_weight = float(w[j])
                st.last_reliability = float(r[j])
                st.last_decision = FusionDecision(
                    int(labels[j]), PROVENANCE_BY_CODE[codes[j]], float(c_s[j]), float(c_c[j])
                )

            conf_sum += float(p_s.max(axis=1).sum())
            rel_sum += float(r.sum())
            n_rejected += int(np.sum(labels < 0))
            n_inverted += int(inverted.sum())
            batch_min_weights.append(float(w.min()))

        if cfg.ema_per == "epoch":
            ema_update(teacher, student, cfg.ema_decay)

        trace = EpochTrace(
            epoch=epoch,
            mean_max_confidence=conf_sum / n,
            min_batch_weight_mean=float(np.mean(batch_min_weights)),
            target_accuracy=accuracy(lambda x: forward(student, x), target),
            rejected_fraction=n_rejected / n,
            inverted_fraction=n_inverted / n,
            mean_reliability=rel_sum / n,
        )
        log.debug("epoch %d: %s", epoch, trace)
        traces.append(trace)
    return AdaptResult(student, teacher, traces, gamma, states)


class Variant(str, Enum):
    TEACHER_ONLY = "teacher-only"
    ORACLE_ONLY = "oracle-only"
    FUSION = "no-curriculum"
    FUSION_CURRICULUM = "no-acr"
    FULL = "full"


def variant_config(variant: Variant, cfg: AdaptationConfig) -> AdaptationConfig:
    """Switch components off to reproduce one row of the ablation."""
    variant = Variant(variant)
    if variant is Variant.TEACHER_ONLY:
        return dataclasses.replace(
            cfg, pseudo_labels="teacher", weighting="fixed", fixed_weight=1.0, acr_enabled=False
        )
    if variant is Variant.FUSION:
        return dataclasses.replace(
            cfg, pseudo_labels="fusion", weighting="fixed", fixed_weight=1.0, acr_enabled=False
        )
    if variant is Variant.FUSION_CURRICULUM:
        return dataclasses.replace(
            cfg, pseudo_labels="fusion", weighting="curriculum", acr_enabled=False
        )
    return cfg


@dataclass(frozen=True)
class OracleParams:
    templates_per_class: int = 8
    perturbation_scale: float = 0.5
    logit_scale: float = 5.0
    temperature: float = 0.5


@dataclass(frozen=True)
class ExperimentSetup:
    domain: DomainSpec
    shift: ShiftSpec
    oracle: OracleParams = field(default_factory=OracleParams)
    source: SourceTrainConfig = field(default_factory=SourceTrainConfig)
    adapt: AdaptationConfig = field(default_factory=AdaptationConfig)


@dataclass
class ExperimentResult:
    variant: Variant
    seed: int
    bounds: BoundsReport
    traces: list[EpochTrace]
    gamma: float | None = None


def prepare(setup: ExperimentSetup, seed: int, datasets=None):
    """Data, source-trained teacher, target-supervised reference and oracle for ``seed``.

    ``datasets`` optionally supplies a pre-built ``(source, target)`` pair.
    """
    spec = setup.domain
    if datasets is None:
        source, target = make_domain_pair(spec, setup.shift, stream_seed(seed, "data"))
    else:
        source, target = datasets
        if source.feature_dim != spec.feature_dim or target.feature_dim != spec.feature_dim:
            raise ShapeMismatch("dataset feature dimension disagrees with the config")
    k, d = spec.num_classes, spec.feature_dim
    init = init_model(k, d, setup.source.init_scale, stream_seed(seed, "init"))
    teacher = train_source(init, source, setup.source, stream_seed(seed, "source"))
    upper = train_source(init, target, setup.source, stream_seed(seed, "upper"))
    op = setup.oracle
    oracle = make_oracle(
        spec, setup.shift, op.templates_per_class, op.perturbation_scale,
        op.logit_scale, stream_seed(seed, "oracle"), op.temperature,
    )
    return source, target, teacher, upper, oracle


def run_experiment(
    setup: ExperimentSetup, variant: Variant, seed: int, datasets=None
) -> ExperimentResult:
    variant = Variant(variant)
    _, target, teacher, upper, oracle = prepare(setup, seed, datasets)
    lb = accuracy(lambda x: forward(teacher, x), target)
    ub = accuracy(lambda x: forward(upper, x), target)
    if variant is Variant.ORACLE_ONLY:
        method = accuracy(lambda x: oracle_predict(oracle, x), target)
        return ExperimentResult(variant, seed, BoundsReport(lb, ub, method), [])
    cfg = variant_config(variant, dataclasses.replace(setup.adapt, seed=seed))
    result = adapt(teacher.copy(), teacher.copy(), oracle, target, cfg)
    method = accuracy(lambda x: forward(result.student, x), target)
    return ExperimentResult(variant, seed, BoundsReport(lb, ub, method), result.traces, result.gamma)


def ablation_run(variant: Variant, setup: ExperimentSetup, seed: int) -> float:
    """Final target accuracy (percent) of one ablation variant."""
    return run_experiment(setup, variant, seed).bounds.method
