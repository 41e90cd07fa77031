"""Synthetic fixtures with exactly known class priors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MultiLabelDataset


@dataclass(frozen=True)
class SynthConfig:
    n: int
    q: int
    c: int
    target_priors: tuple
    separability: float = 1.0
    label_correlation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        pri = tuple(float(p) for p in self.target_priors)
        object.__setattr__(self, "target_priors", pri)
        if self.q < 1 or self.c < 1:
            raise ValueError("q and c must be >= 1")
        if len(pri) != self.c:
            raise ValueError(f"prior count mismatch: {len(pri)} priors for c={self.c}")
        if not all(0.0 < p < 1.0 for p in pri):
            raise ValueError("target priors must lie in (0, 1)")
        if self.n < 10 * self.c:
            raise ValueError(f"n={self.n} is below 10*c={10 * self.c}")
        if self.separability < 0:
            raise ValueError("separability must be >= 0")
        if not 0.0 <= self.label_correlation < 1.0:
            raise ValueError("label_correlation must lie in [0, 1)")

    def positive_counts(self) -> list[int]:
        counts = [int(np.floor(self.n * p + 0.5)) for p in self.target_priors]
        for j, k in enumerate(counts):
            if not 0 < k < self.n:
                raise ValueError(f"label {j}: round(n*pi)={k} leaves no positives or no negatives")
        return counts


def generate(cfg: SynthConfig) -> tuple[MultiLabelDataset, np.ndarray]:
    """Gaussian features with linear, quantile-thresholded labels.

    Label j is ``1[w_j . x + t_j > 0]`` where ``t_j`` places exactly
    ``round(n * pi_j)`` instances on the positive side.  Each instance is then
    shifted by ``separability`` along a dual basis of the ``w_j`` so every
    projection moves away from its own boundary without disturbing the other
    labels' projections (exact when c <= q).
    """
    counts = cfg.positive_counts()
    rng = np.random.default_rng(int(cfg.seed))
    X = rng.standard_normal((cfg.n, cfg.q))

    W = rng.standard_normal((cfg.q, cfg.c))
    if cfg.c <= cfg.q:
        # orthonormal directions: uncorrelated labels when label_correlation=0
        W = np.linalg.qr(W)[0]
    W /= np.linalg.norm(W, axis=0)
    if cfg.label_correlation > 0:
        shared = rng.standard_normal((cfg.q, 1))
        shared /= np.linalg.norm(shared)
        W = np.sqrt(1.0 - cfg.label_correlation) * W + np.sqrt(cfg.label_correlation) * shared
    W /= np.linalg.norm(W, axis=0)

    proj = X @ W
    Y = np.zeros((cfg.n, cfg.c), dtype=np.int8)
    for j, k in enumerate(counts):
        top = np.argsort(-proj[:, j], kind="stable")[:k]
        Y[top, j] = 1

    if cfg.separability > 0:
        dual = np.linalg.pinv(W.T)  # q x c with W.T @ dual = I when c <= q
        signs = 2.0 * Y - 1.0
        X = X + cfg.separability * signs @ dual.T

    ds = MultiLabelDataset(X, Y)
    return ds, ds.priors()


def score_fixture(n: int, pi: float, pos_low: float = 0.6, pos_high: float = 1.0,
                  neg_low: float = 0.0, neg_high: float = 0.4, labeled_frac: float = 0.2,
                  seed: int = 0):
    """Scores drawn directly, bypassing any model.

    ``round(n*pi)`` positives get Uniform[pos_low, pos_high] scores, the rest
    Uniform[neg_low, neg_high]; ``round(labeled_frac * n_pos)`` positives are
    marked as observed.  Returns ``(scores, labeled_idx, true_pi)``.
    """
    if not 0.0 <= pos_low <= pos_high <= 1.0 or not 0.0 <= neg_low <= neg_high <= 1.0:
        raise ValueError("score ranges must lie inside [0, 1]")
    n_pos = int(np.floor(n * pi + 0.5))
    n_lab = int(np.floor(labeled_frac * n_pos + 0.5))
    if n_lab < 1:
        raise ValueError("labeled set is empty")
    rng = np.random.default_rng(int(seed))
    scores = np.concatenate([
        rng.uniform(pos_low, pos_high, n_pos),
        rng.uniform(neg_low, neg_high, n - n_pos),
    ])
    labeled = rng.choice(n_pos, size=n_lab, replace=False)
    perm = rng.permutation(n)
    inv = np.empty(n, dtype=np.intp)
    inv[perm] = np.arange(n)
    return scores[perm], np.sort(inv[labeled]), n_pos / n
