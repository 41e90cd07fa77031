"""Class-prior estimation from single-positive supervision.

For label j, a score threshold z is chosen to minimise an upper confidence
bound on the ratio between the fraction of *all* instances scoring >= z and
the fraction of *observed-positive* instances scoring >= z.  The prior
estimate is that ratio at the chosen threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import SinglePositiveDataset, positive_set


class MissingPositivesError(ValueError):
    """A label has no observed positives and no fallback prior."""

    def __init__(self, label: int):
        super().__init__(f"label {label} has no observed positives and no fallback prior")
        self.label = label


@dataclass(frozen=True)
class EstimatorConfig:
    delta: float = 0.01
    tau: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass
class PriorEstimate:
    pi_hat: np.ndarray
    z_hat: np.ndarray
    objective: np.ndarray
    n: int
    n_p: np.ndarray
    reused: np.ndarray  # True where the estimate was carried over from a fallback

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "pi_hat": self.pi_hat.tolist(),
            "z_hat": _nan_to_none(self.z_hat),
            "objective": _nan_to_none(self.objective),
            "n_p": self.n_p.tolist(),
            "reused": self.reused.tolist(),
        }


def _nan_to_none(a):
    return [None if np.isnan(v) else float(v) for v in a]


def q_hat(scores, z: float) -> float:
    """Fraction of scores >= z."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("empty score vector")
    return float(np.count_nonzero(s >= z)) / s.size


def q_hat_p(scores, labeled_idx, z: float) -> float:
    """Fraction of the observed-positive scores >= z."""
    idx = np.asarray(labeled_idx, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("no observed positives for label")
    return q_hat(np.asarray(scores, dtype=np.float64)[idx], z)


def confidence_penalty(n: int, n_p: int, cfg: EstimatorConfig) -> float:
    """``sqrt(log(4/delta)/2n) + sqrt(log(4/delta)/2n_p)``, natural log."""
    log_term = math.log(4.0 / cfg.delta)
    return math.sqrt(log_term / (2 * n)) + math.sqrt(log_term / (2 * n_p))


def ucb_objective(scores, labeled_idx, z: float, cfg: EstimatorConfig) -> float:
    s = np.asarray(scores, dtype=np.float64)
    idx = np.asarray(labeled_idx, dtype=np.intp)
    qp = q_hat_p(s, idx, z)
    if qp == 0.0:
        raise ValueError(f"threshold {z} is above every observed-positive score")
    pen = confidence_penalty(s.size, idx.size, cfg)
    return q_hat(s, z) / qp + (1.0 + cfg.tau) / qp * pen


def estimate_prior(scores, labeled_idx, cfg: EstimatorConfig) -> tuple[float, float, float]:
    """Exhaustive threshold search over the observed scores.

    Returns ``(pi_hat, z_hat, objective)``.  Candidates above the largest
    observed-positive score are skipped; ties in the objective go to the
    smallest threshold.  ``pi_hat`` is clamped to ``[1/n, 1]``.
    """
    s = np.asarray(scores, dtype=np.float64)
    idx = np.asarray(labeled_idx, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("no observed positives for label")
    n, n_p = s.size, idx.size
    s_sorted = np.sort(s)
    p_sorted = np.sort(s[idx])

    cand = np.unique(s)
    cand = cand[cand <= p_sorted[-1]]
    count_all = n - np.searchsorted(s_sorted, cand, side="left")
    count_pos = n_p - np.searchsorted(p_sorted, cand, side="left")
    q = count_all / n
    qp = count_pos / n_p

    pen = confidence_penalty(n, n_p, cfg)
    obj = q / qp + (1.0 + cfg.tau) / qp * pen
    k = int(np.argmin(obj))
    pi = min(max(q[k] / qp[k], 1.0 / n), 1.0)
    return float(pi), float(cand[k]), float(obj[k])


def estimate_all_priors(probs, sp: SinglePositiveDataset, cfg: EstimatorConfig,
                        previous=None) -> PriorEstimate:
    """Run :func:`estimate_prior` on every label column.

    Labels with no observed positive reuse ``previous[j]`` when given and
    raise :class:`MissingPositivesError` otherwise.
    """
    P = np.asarray(probs, dtype=np.float64)
    if P.shape != (sp.n, sp.c):
        raise ValueError(f"score matrix {P.shape} does not match dataset ({sp.n}, {sp.c})")
    c = sp.c
    pi = np.empty(c)
    z = np.full(c, np.nan)
    obj = np.full(c, np.nan)
    n_p = np.zeros(c, dtype=np.int64)
    reused = np.zeros(c, dtype=bool)
    for j in range(c):
        idx = positive_set(sp, j)
        n_p[j] = idx.size
        if idx.size == 0:
            if previous is None:
                raise MissingPositivesError(j)
            pi[j] = float(previous[j])
            reused[j] = True
            continue
        pi[j], z[j], obj[j] = estimate_prior(P[:, j], idx, cfg)
    return PriorEstimate(pi, z, obj, sp.n, n_p, reused)
