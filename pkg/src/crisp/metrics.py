"""Multi-label evaluation measures.

Rank convention: the rank of label j within an instance is the number of
labels scoring >= f_j (rank 1 is the top; tied scores share the worst rank
among them).  The same convention is used over instances for label-wise
mean average precision.

Instances (or labels) on which a measure is undefined are excluded from its
average; :func:`evaluate_all` reports how many were excluded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METRIC_NAMES = ("mAP", "ranking_loss", "hamming_loss", "one_error", "coverage", "average_precision")


@dataclass
class MetricsReport:
    values: dict[str, float]
    n: int
    c: int
    excluded: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self) -> dict:
        return {"n": self.n, "c": self.c, "values": dict(self.values), "excluded": dict(self.excluded)}


def _check(probs, labels):
    F = np.asarray(probs, dtype=np.float64)
    Y = np.asarray(labels)
    if F.ndim != 2 or F.shape != Y.shape:
        raise ValueError(f"shape mismatch: scores {F.shape} vs labels {Y.shape}")
    return F, Y.astype(bool)


def _ranks_desc(row: np.ndarray) -> np.ndarray:
    """Number of entries >= each entry."""
    srt = np.sort(row)
    return row.size - np.searchsorted(srt, row, side="left")


def hamming_loss(probs, labels, threshold: float = 0.5) -> float:
    F, Y = _check(probs, labels)
    return float(np.mean((F >= threshold) != Y))


def _ranking_loss_rows(F, Y):
    vals = []
    for f, y in zip(F, Y):
        rel, irr = f[y], np.sort(f[~y])
        if rel.size == 0 or irr.size == 0:
            continue
        right = np.searchsorted(irr, rel, side="right")
        left = np.searchsorted(irr, rel, side="left")
        bad = np.sum(irr.size - right) + 0.5 * np.sum(right - left)
        vals.append(bad / (rel.size * irr.size))
    return vals


def ranking_loss(probs, labels) -> float:
    """Fraction of (relevant, irrelevant) pairs ordered wrongly; ties count 1/2."""
    F, Y = _check(probs, labels)
    vals = _ranking_loss_rows(F, Y)
    if not vals:
        raise ValueError("ranking loss undefined: no instance has both relevant and irrelevant labels")
    return float(np.mean(vals))


def one_error(probs, labels) -> float:
    F, Y = _check(probs, labels)
    keep = Y.any(axis=1)
    if not keep.any():
        raise ValueError("one-error undefined: no instance has a relevant label")
    top = np.argmax(F[keep], axis=1)
    return float(np.mean(~Y[keep][np.arange(top.size), top]))


def coverage(probs, labels) -> float:
    """(worst rank of a relevant label - 1) / c, averaged."""
    F, Y = _check(probs, labels)
    vals = [(_ranks_desc(f)[y].max() - 1) / f.size for f, y in zip(F, Y) if y.any()]
    if not vals:
        raise ValueError("coverage undefined: no instance has a relevant label")
    return float(np.mean(vals))


def _precision_at_positives(scores: np.ndarray, pos: np.ndarray) -> float:
    ranks = _ranks_desc(scores)[pos]
    pos_sorted = np.sort(scores[pos])
    hits = pos_sorted.size - np.searchsorted(pos_sorted, scores[pos], side="left")
    return float(np.mean(hits / ranks))


def average_precision(probs, labels) -> float:
    """Example-based average precision."""
    F, Y = _check(probs, labels)
    vals = [_precision_at_positives(f, y) for f, y in zip(F, Y) if y.any()]
    if not vals:
        raise ValueError("average precision undefined: no instance has a relevant label")
    return float(np.mean(vals))


def mean_average_precision(probs, labels) -> float:
    """Label-macro AP over the instance ranking of each column."""
    F, Y = _check(probs, labels)
    vals = [_precision_at_positives(F[:, j], Y[:, j]) for j in range(F.shape[1]) if Y[:, j].any()]
    if not vals:
        raise ValueError("mAP undefined: no label has a positive instance")
    return float(np.mean(vals))


def evaluate_all(probs, labels, threshold: float = 0.5) -> MetricsReport:
    F, Y = _check(probs, labels)
    n, c = F.shape
    no_rel = int(np.sum(~Y.any(axis=1)))
    degenerate = int(np.sum(~Y.any(axis=1) | Y.all(axis=1)))
    values = {
        "mAP": mean_average_precision(F, Y),
        "ranking_loss": ranking_loss(F, Y),
        "hamming_loss": hamming_loss(F, Y, threshold),
        "one_error": one_error(F, Y),
        "coverage": coverage(F, Y),
        "average_precision": average_precision(F, Y),
    }
    excluded = {
        "mAP": int(np.sum(~Y.any(axis=0))),
        "ranking_loss": degenerate,
        "hamming_loss": 0,
        "one_error": no_rel,
        "coverage": no_rel,
        "average_precision": no_rel,
    }
    return MetricsReport(values, n, c, excluded)
