"""Linear-softmax student/teacher, template-ensemble oracle, losses, optimizer."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datagen import DomainSpec, LabeledDataset, ShiftSpec, shifted_means
from .errors import InvalidConfig, InvalidInput, ShapeMismatch
from .numerics import KL_EPS, log_softmax, softmax

REJECTED = -1


@dataclass
class LinearSoftmaxModel:
    W: np.ndarray  # (K, d)
    b: np.ndarray  # (K,)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeMismatch(f"W {self.W.shape} and b {self.b.shape} disagree")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise InvalidInput("model parameters must be finite")

    @classmethod
    def zeros(cls, num_classes: int, feature_dim: int) -> "LinearSoftmaxModel":
        return cls(np.zeros((num_classes, feature_dim)), np.zeros(num_classes))

    @property
    def num_classes(self) -> int:
        return self.W.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "LinearSoftmaxModel":
        return LinearSoftmaxModel(self.W.copy(), self.b.copy())

    def logits(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.feature_dim:
            raise ShapeMismatch(f"expected {self.feature_dim} features, got {x.shape[-1]}")
        return x @ self.W.T + self.b

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.b])

    def to_json(self) -> dict:
        return {"k": self.num_classes, "d": self.feature_dim,
                "w": self.W.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "LinearSoftmaxModel":
        model = cls(np.array(obj["w"], dtype=np.float64), np.array(obj["b"], dtype=np.float64))
        if model.W.shape != (obj["k"], obj["d"]):
            raise ShapeMismatch("checkpoint k/d disagree with stored weights")
        return model


@dataclass
class GradientRecord:
    dW: np.ndarray
    db: np.ndarray


def forward(model: LinearSoftmaxModel, x, temperature: float = 1.0) -> np.ndarray:
    """softmax((W x + b) / temperature); x may be a vector or an (n, d) batch."""
    return softmax(model.logits(x), temperature)


@dataclass
class TemplateOracle:
    templates: np.ndarray  # (K, m, d)
    logit_scale: float = 1.0
    temperature: float = 0.5

    def __post_init__(self):
        self.templates = np.asarray(self.templates, dtype=np.float64)
        if self.templates.ndim != 3 or self.templates.shape[1] < 1:
            raise InvalidConfig("templates must be a (K, m, d) array with m >= 1")
        if not np.all(np.isfinite(self.templates)):
            raise InvalidConfig("templates must be finite")
        if not self.temperature > 0:
            raise InvalidConfig("oracle temperature must be positive")
        if not self.logit_scale > 0:
            raise InvalidConfig("logit_scale must be positive")

    @property
    def num_classes(self) -> int:
        return self.templates.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.templates.shape[2]

    def to_json(self) -> dict:
        k, m, d = self.templates.shape
        return {"k": k, "m": m, "d": d, "templates": self.templates.tolist(),
                "logit_scale": self.logit_scale, "temperature": self.temperature}

    @classmethod
    def from_json(cls, obj: dict) -> "TemplateOracle":
        return cls(np.array(obj["templates"]), float(obj["logit_scale"]),
                   float(obj["temperature"]))


def _unit(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(norm > 0, norm, 1.0), norm[..., 0]


def oracle_predict(oracle: TemplateOracle, x) -> np.ndarray:
    """Cosine similarity to each template, averaged per class, then softmax.

    Zero-norm inputs map to the uniform distribution.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != oracle.feature_dim:
        raise ShapeMismatch(f"expected {oracle.feature_dim} features, got {x.shape[-1]}")
    x_hat, norm = _unit(x)
    t_hat, _ = _unit(oracle.templates)
    sims = oracle.logit_scale * np.einsum("...d,kmd->...km", x_hat, t_hat)
    probs = softmax(sims.mean(axis=-1), oracle.temperature)
    k = oracle.num_classes
    return np.where((norm > 0)[..., None], probs, 1.0 / k)


def make_oracle(
    spec: DomainSpec,
    shift: ShiftSpec,
    m: int,
    perturbation_scale: float,
    logit_scale: float,
    seed: int,
    temperature: float = 0.5,
) -> TemplateOracle:
    """Templates centred between source and shifted class means, jittered."""
    if m < 1:
        raise InvalidConfig("need at least one template per class")
    if perturbation_scale < 0:
        raise InvalidConfig("perturbation_scale must be >= 0")
    center = 0.5 * (spec.class_means + shifted_means(spec, shift))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((spec.num_classes, m, spec.feature_dim))
    templates = center[:, None, :] + perturbation_scale * noise
    return TemplateOracle(templates, logit_scale, temperature)


def _check_weight(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
        raise InvalidConfig("loss weight w must lie in [0, 1]")
    return w


def batch_loss_and_grad(
    student: LinearSoftmaxModel,
    teacher: LinearSoftmaxModel,
    X,
    labels,
    w,
    tau: float = 2.0,
    kl_tau_squared: bool = False,
) -> tuple[float, GradientRecord]:
    """Mean over the batch of (1 - w) * KL(p_stud || p_teach) + w * CE.

    KL uses both models at temperature ``tau``; CE uses the student at
    temperature 1. Rows with ``labels == REJECTED`` drop the CE term.
    Gradients are taken with respect to the student only.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    n = X.shape[0]
    w = np.broadcast_to(_check_weight(w), (n,))
    k = student.num_classes
    if labels.shape != (n,):
        raise ShapeMismatch("one label per row required")
    if np.any((labels < REJECTED) | (labels >= k)):
        raise InvalidInput("pseudo-label out of range")

    z_s = student.logits(X)
    z_t = teacher.logits(X)

    # KL(p_s || p_t) at temperature tau
    log_ps = log_softmax(z_s, tau)
    ps = np.exp(log_ps)
    log_pt = np.maximum(log_softmax(z_t, tau), np.log(KL_EPS))
    diff = log_ps - log_pt
    kl = np.sum(ps * diff, axis=1)
    g_kl = ps * (diff - kl[:, None]) / tau
    if kl_tau_squared:
        kl = kl * tau**2
        g_kl = g_kl * tau**2

    # CE at temperature 1
    accepted = labels != REJECTED
    safe = np.where(accepted, labels, 0)
    log_p1 = log_softmax(z_s, 1.0)
    ce = np.where(accepted, -log_p1[np.arange(n), safe], 0.0)
    g_ce = np.exp(log_p1)
    g_ce[np.arange(n), safe] -= 1.0
    g_ce *= accepted[:, None]

    loss = (1 - w) * kl + w * ce
    g = ((1 - w)[:, None] * g_kl + w[:, None] * g_ce) / n
    return float(loss.mean()), GradientRecord(g.T @ X, g.sum(axis=0))


def grad_total_loss(
    student: LinearSoftmaxModel,
    teacher: LinearSoftmaxModel,
    x,
    pseudo_label: int,
    w: float,
    tau: float = 2.0,
    kl_tau_squared: bool = False,
) -> tuple[float, GradientRecord]:
    """Per-sample weighted loss and its closed-form gradient."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatch("grad_total_loss takes a single feature vector")
    return batch_loss_and_grad(
        student, teacher, x[None, :], [pseudo_label], w, tau, kl_tau_squared
    )


def ema_update(
    teacher: LinearSoftmaxModel, student: LinearSoftmaxModel, decay: float
) -> LinearSoftmaxModel:
    """teacher <- decay * teacher + (1 - decay) * student, in place."""
    if not 0.0 <= decay <= 1.0:
        raise InvalidConfig(f"EMA decay must be in [0, 1], got {decay}")
    if teacher.W.shape != student.W.shape:
        raise ShapeMismatch("teacher and student shapes differ")
    teacher.W *= decay
    teacher.W += (1 - decay) * student.W
    teacher.b *= decay
    teacher.b += (1 - decay) * student.b
    return teacher


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 0.001
    weight_decay: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class AdamW:
    """Adam with decoupled weight decay over a LinearSoftmaxModel."""

    def __init__(self, model: LinearSoftmaxModel, cfg: OptimizerConfig):
        self.model = model
        self.cfg = cfg
        self.t = 0
        self.m = [np.zeros_like(model.W), np.zeros_like(model.b)]
        self.v = [np.zeros_like(model.W), np.zeros_like(model.b)]

    def step(self, grad: GradientRecord) -> None:
        c = self.cfg
        self.t += 1
        bc1 = 1 - c.beta1**self.t
        bc2 = 1 - c.beta2**self.t
        for i, (p, g) in enumerate(((self.model.W, grad.dW), (self.model.b, grad.db))):
            p *= 1 - c.lr * c.weight_decay
            self.m[i] = c.beta1 * self.m[i] + (1 - c.beta1) * g
            self.v[i] = c.beta2 * self.v[i] + (1 - c.beta2) * g * g
            p -= c.lr * (self.m[i] / bc1) / (np.sqrt(self.v[i] / bc2) + c.eps)


@dataclass(frozen=True)
class SourceTrainConfig:
    epochs: int = 50
    batch_size: int = 32
    lr: float = 0.01
    weight_decay: float = 0.0
    init_scale: float = 0.01


def init_model(num_classes: int, feature_dim: int, scale: float, seed) -> LinearSoftmaxModel:
    rng = np.random.default_rng(seed)
    return LinearSoftmaxModel(
        scale * rng.standard_normal((num_classes, feature_dim)), np.zeros(num_classes)
    )


def train_source(
    model: LinearSoftmaxModel, data: LabeledDataset, cfg: SourceTrainConfig, seed
) -> LinearSoftmaxModel:
    """Minimise mean cross-entropy on labeled data; returns a trained copy."""
    if len(data) == 0:
        raise InvalidInput("cannot train on an empty dataset")
    if cfg.epochs < 0 or cfg.batch_size < 1:
        raise InvalidConfig("epochs must be >= 0 and batch_size >= 1")
    model = model.copy()
    opt = AdamW(model, OptimizerConfig(lr=cfg.lr, weight_decay=cfg.weight_decay))
    rng = np.random.default_rng(seed)
    n = len(data)
    no_teacher = model  # KL term carries zero weight at w = 1
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grad = batch_loss_and_grad(
                model, no_teacher, data.features[idx], data.labels[idx], 1.0, 1.0
            )
            opt.step(grad)
    return model


def save_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj.to_json(), fh)
