"""Risk functionals for single-positive multi-label training.

* ``an_warmup_loss`` - binary cross-entropy with every unobserved label
  treated as negative (the warm-up objective).
* ``full_supervised_risk`` / ``decomposed_risk`` - the fully supervised
  absolute-loss risk and its prior-weighted rewrite; the two are equal on any
  dataset where every label has a positive, which the tests exploit.
* ``crisp_empirical_risk`` - positive-only term weighted by the priors plus
  the absolute prior-alignment term.
* ``crisp_biased_risk`` - as above but the positive term is evaluated on the
  logit shifted by ``-lambda * (1 - prior)``.

Positive sets are given per label as index arrays into the batch.  A label
with no positive in the batch contributes only its alignment term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import sigmoid

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class RiskConfig:
    priors: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.priors, dtype=np.float64).ravel()
        if not np.all((p > 0.0) & (p <= 1.0)):
            raise ValueError("priors must lie in (0, 1]")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError("lambda must be finite and >= 0")
        object.__setattr__(self, "priors", p)

    @property
    def bias(self) -> np.ndarray:
        return 1.0 - self.priors


@dataclass
class LossValue:
    total: float
    per_label_positive_term: np.ndarray
    per_label_alignment_term: np.ndarray


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def positive_sets_from_observed(observed, c: int) -> list[np.ndarray]:
    observed = np.asarray(observed)
    return [np.flatnonzero(observed == j) for j in range(c)]


def full_supervised_risk(probs, labels) -> float:
    """Mean over instances of sum_j |f_j - y_j|."""
    F, Y = _check_pair(probs, labels)
    return float(np.mean(np.sum(Y * (1.0 - F) + (1.0 - Y) * F, axis=1)))


def decomposed_risk(probs, labels) -> float:
    """sum_j 2 p_j E[1 - f_j | y_j = 1] + (E[f_j] - p_j) with empirical
    priors and conditional means."""
    F, Y = _check_pair(probs, labels)
    n_pos = Y.sum(axis=0)
    if np.any(n_pos == 0):
        raise ValueError(f"labels {np.flatnonzero(n_pos == 0).tolist()} have no positive instance")
    p = n_pos / F.shape[0]
    cond = (Y * (1.0 - F)).sum(axis=0) / n_pos
    return float(np.sum(2.0 * p * cond + (F.mean(axis=0) - p)))


def _validate(F, positive_sets, cfg):
    if F.ndim != 2 or F.shape[0] == 0:
        raise ValueError("expected a non-empty n x c matrix")
    if len(positive_sets) != F.shape[1] or cfg.priors.shape != (F.shape[1],):
        raise ValueError("positive_sets / priors do not match the number of labels")


def _crisp(pos_probs_fn, F, positive_sets, cfg) -> LossValue:
    n, c = F.shape
    pi = cfg.priors
    pos_term = np.zeros(c)
    for j, S in enumerate(positive_sets):
        S = np.asarray(S, dtype=np.intp)
        if S.size:
            pos_term[j] = 2.0 * pi[j] / S.size * np.sum(1.0 - pos_probs_fn(S, j))
    align = np.abs(F.mean(axis=0) - pi)
    return LossValue(float(np.sum(pos_term + align)), pos_term, align)


def crisp_empirical_risk(probs, positive_sets, cfg: RiskConfig) -> LossValue:
    """Prior-weighted positive risk plus |mean f_j - pi_j| per label.
    ``cfg.lam`` is ignored here."""
    F = np.asarray(probs, dtype=np.float64)
    _validate(F, positive_sets, cfg)
    return _crisp(lambda S, j: F[S, j], F, positive_sets, cfg)


def crisp_biased_risk(logits, positive_sets, cfg: RiskConfig) -> LossValue:
    G = np.asarray(logits, dtype=np.float64)
    F = sigmoid(G)
    _validate(F, positive_sets, cfg)
    shift = cfg.lam * cfg.bias
    return _crisp(lambda S, j: sigmoid(G[S, j] - shift[j]), F, positive_sets, cfg)


def an_warmup_loss(probs, one_hot) -> float:
    """Mean over instances of the summed binary cross-entropy against the
    observed one-hot vectors."""
    F, L = _check_pair(probs, one_hot)
    F = np.clip(F, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(np.mean(-np.sum(L * np.log(F) + (1.0 - L) * np.log1p(-F), axis=1)))


def risk_gradients(logits, positive_sets, cfg: RiskConfig | None, which: str) -> np.ndarray:
    """dL/dlogits for ``which`` in {"an", "crisp7", "crisp8"}.

    The absolute value uses sign() as its subgradient, so a label whose
    batch mean equals its prior exactly gets no alignment gradient.
    """
    G = np.asarray(logits, dtype=np.float64)
    F = sigmoid(G)
    n, c = G.shape
    if which == "an":
        L = np.zeros_like(G)
        for j, S in enumerate(positive_sets):
            L[np.asarray(S, dtype=np.intp), j] = 1.0
        return (F - L) / n
    if which not in ("crisp7", "crisp8"):
        raise ValueError(f"unknown loss {which!r}")
    _validate(F, positive_sets, cfg)
    pi = cfg.priors
    dF = F * (1.0 - F)
    out = np.sign(F.mean(axis=0) - pi) / n * dF
    shift = cfg.lam * cfg.bias if which == "crisp8" else np.zeros(c)
    for j, S in enumerate(positive_sets):
        S = np.asarray(S, dtype=np.intp)
        if S.size == 0:
            continue
        s = sigmoid(G[S, j] - shift[j])
        out[S, j] -= 2.0 * pi[j] / S.size * s * (1.0 - s)
    return out


def loss_value(logits, positive_sets, cfg: RiskConfig | None, which: str) -> float:
    """Scalar loss matching :func:`risk_gradients`."""
    G = np.asarray(logits, dtype=np.float64)
    if which == "an":
        L = np.zeros_like(G)
        for j, S in enumerate(positive_sets):
            L[np.asarray(S, dtype=np.intp), j] = 1.0
        return an_warmup_loss(sigmoid(G), L)
    if which == "crisp7":
        return crisp_empirical_risk(sigmoid(G), positive_sets, cfg).total
    if which == "crisp8":
        return crisp_biased_risk(G, positive_sets, cfg).total
    raise ValueError(f"unknown loss {which!r}")
