"""Collaborative curriculum self-training for source-free domain adaptation."""
from .acr import AcrConfig, HistoryBuffer, adjust_weight, inversion_probability, select_candidates, stability_kl
from .curriculum import CurriculumConfig, pace_weight, reliability
from .datagen import DomainSpec, LabeledDataset, ShiftSpec, make_domain_pair
from .errors import InvalidConfig, InvalidInput, ShapeMismatch
from .evaluation import BoundsReport, accuracy, closed_gap
from .models import LinearSoftmaxModel, TemplateOracle, ema_update, forward, grad_total_loss, oracle_predict
from .numerics import kl_div, softmax, sym_kl
from .pseudo import FusionConfig, compute_gamma, match_or_conf
from .trainer import AdaptationConfig, Variant, adapt, ablation_run

__version__ = "0.1.0"
