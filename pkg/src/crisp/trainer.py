"""Alternating prior estimation and risk minimisation.

One call to :func:`train` runs the assume-negative warm-up, then for each
epoch re-estimates the class priors on the full training set (unless they
are fixed) and makes one pass of mini-batch AdamW steps on the
prior-weighted, logit-shifted risk.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import MultiLabelDataset, SinglePositiveDataset
from .metrics import MetricsReport, evaluate_all
from .model import Classifier, backward, forward_logits, forward_probs
from .optim import AdamW
from .prior import EstimatorConfig, MissingPositivesError, PriorEstimate, estimate_all_priors
from .risk import RiskConfig, loss_value, positive_sets_from_observed, risk_gradients

log = logging.getLogger(__name__)

METHODS = ("crisp", "an")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    warmup_epochs: int = 2
    batch_size: int = 8
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    seed: int = 0
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    lam: float = 1.0
    prior_refresh_every: int = 1
    fixed_priors: tuple | None = None
    method: str = "crisp"

    def __post_init__(self):
        if self.epochs < 0 or self.warmup_epochs < 0:
            raise ValueError("epochs and warmup_epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and >= 0")
        if self.prior_refresh_every < 1:
            raise ValueError("prior_refresh_every must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.fixed_priors is not None:
            fp = tuple(float(p) for p in self.fixed_priors)
            if not all(0.0 < p <= 1.0 for p in fp):
                raise ValueError("fixed priors must lie in (0, 1]")
            object.__setattr__(self, "fixed_priors", fp)


@dataclass
class EpochRecord:
    epoch: int
    priors: list
    mean_loss: float
    wall_time: float
    prior_time: float
    estimated: bool
    abs_error: list | None = None
    val_metrics: dict | None = None
    estimate: dict | None = None


@dataclass
class TrainReport:
    epochs: list = field(default_factory=list)
    warmup_losses: list = field(default_factory=list)
    true_priors: list | None = None
    checkpoint: str | None = None

    @property
    def final_priors(self) -> np.ndarray | None:
        return np.asarray(self.epochs[-1].priors) if self.epochs else None

    def to_dict(self) -> dict:
        return {
            "epochs": [asdict(e) for e in self.epochs],
            "warmup_losses": list(self.warmup_losses),
            "true_priors": self.true_priors,
            "checkpoint": self.checkpoint,
        }


class _Session:
    """Model + optimiser + shuffling stream shared by warm-up and training."""

    def __init__(self, model: Classifier, sp: SinglePositiveDataset, cfg: TrainConfig):
        self.model = model
        self.sp = sp
        self.cfg = cfg
        self.opt = AdamW(model.params(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
        self.rng = np.random.default_rng(int(cfg.seed))

    def epoch(self, which: str, risk_cfg: RiskConfig | None) -> float:
        sp, bs = self.sp, self.cfg.batch_size
        order = self.rng.permutation(sp.n)
        total, seen = 0.0, 0
        for start in range(0, sp.n, bs):
            idx = order[start:start + bs]
            X = sp.features[idx]
            sets = positive_sets_from_observed(sp.observed[idx], sp.c)
            G = forward_logits(self.model, X)
            total += loss_value(G, sets, risk_cfg, which) * idx.size
            seen += idx.size
            up = risk_gradients(G, sets, risk_cfg, which)
            self.opt.step(backward(self.model, X, up).params())
        return total / seen


def warmup(model: Classifier, sp: SinglePositiveDataset, cfg: TrainConfig) -> Classifier:
    """``cfg.warmup_epochs`` passes of assume-negative training on a copy."""
    session = _Session(model.copy(), sp, cfg)
    for _ in range(cfg.warmup_epochs):
        session.epoch("an", None)
    return session.model


def _check_positives(sp: SinglePositiveDataset, cfg: TrainConfig):
    if cfg.fixed_priors is not None:
        if len(cfg.fixed_priors) != sp.c:
            raise ValueError(f"fixed priors have {len(cfg.fixed_priors)} entries for c={sp.c}")
        return
    missing = np.flatnonzero(sp.positive_counts() == 0)
    if missing.size:
        raise MissingPositivesError(int(missing[0]))


def train(model: Classifier, sp: SinglePositiveDataset, cfg: TrainConfig,
          val: MultiLabelDataset | None = None, true_priors=None) -> tuple[Classifier, TrainReport]:
    """Warm up, then alternate prior estimation and one epoch of risk
    minimisation for ``cfg.epochs`` epochs.  The input model is not modified."""
    if model.n_inputs != sp.q or model.n_outputs != sp.c:
        raise ValueError(f"model dims {model.layer_dims} do not fit data (q={sp.q}, c={sp.c})")
    _check_positives(sp, cfg)

    session = _Session(model.copy(), sp, cfg)
    report = TrainReport(true_priors=None if true_priors is None else [float(p) for p in true_priors])
    for _ in range(cfg.warmup_epochs):
        report.warmup_losses.append(session.epoch("an", None))

    priors = None if cfg.fixed_priors is None else np.asarray(cfg.fixed_priors)
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        estimate: PriorEstimate | None = None
        if cfg.fixed_priors is None and epoch % cfg.prior_refresh_every == 0:
            probs = forward_probs(session.model, sp.features)
            estimate = estimate_all_priors(probs, sp, cfg.estimator, previous=priors)
            priors = estimate.pi_hat
        prior_time = time.perf_counter() - t0

        if cfg.method == "crisp":
            mean_loss = session.epoch("crisp8", RiskConfig(priors, cfg.lam))
        else:
            mean_loss = session.epoch("an", None)

        rec = EpochRecord(
            epoch=epoch + 1,
            priors=priors.tolist(),
            mean_loss=float(mean_loss),
            wall_time=time.perf_counter() - t0,
            prior_time=prior_time,
            estimated=estimate is not None,
            estimate=None if estimate is None else estimate.to_dict(),
        )
        if true_priors is not None:
            rec.abs_error = np.abs(priors - np.asarray(true_priors, dtype=np.float64)).tolist()
        if val is not None:
            rec.val_metrics = evaluate(session.model, val).values
        report.epochs.append(rec)
        log.info("epoch %d loss=%.5f priors=%s", rec.epoch, rec.mean_loss,
                 np.array2string(priors, precision=4))
    return session.model, report


def evaluate(model: Classifier, test: MultiLabelDataset) -> MetricsReport:
    if model.n_inputs != test.q or model.n_outputs != test.c:
        raise ValueError(f"model dims {model.layer_dims} do not fit data (q={test.q}, c={test.c})")
    return evaluate_all(forward_probs(model, test.features), test.labels)
