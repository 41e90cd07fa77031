"""Datasets, text I/O, seeded splits and single-positive masking.

On-disk format (one instance per line)::

    <labels> <idx>:<val> <idx>:<val> ...

``<labels>`` is a comma-separated list of 1-based class indices, or a lone
``,`` when the instance has no relevant label.  Feature indices are 1-based
and unlisted features are zero.  The single-positive variant replaces the
label list with one 1-based class index.

Files written by this package start with a header comment ``# c=<int> q=<int>``
so that readers do not have to guess the dimensions; the parsers skip any
line starting with ``#``.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "ParseError",
    "MultiLabelDataset",
    "SinglePositiveDataset",
    "SplitSpec",
    "parse_dataset",
    "format_dataset",
    "parse_single_positive",
    "format_single_positive",
    "read_header",
    "load_dataset",
    "save_dataset",
    "load_single_positive",
    "save_single_positive",
    "split",
    "split_indices",
    "mask_single_positive",
    "positive_set",
]

_HEADER_RE = re.compile(r"^#\s*c=(\d+)\s+q=(\d+)\s*$")


class ParseError(ValueError):
    """Malformed dataset text; ``line`` is 1-based."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class MultiLabelDataset:
    """Dense features plus the full binary label matrix."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        Y = np.ascontiguousarray(self.labels, dtype=np.int8)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("features and labels must be 2-D")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"row mismatch: {X.shape[0]} features vs {Y.shape[0]} labels")
        if min(X.shape) < 1 or Y.shape[1] < 1:
            raise ValueError("n, q and c must all be >= 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if not np.all((Y == 0) | (Y == 1)):
            raise ValueError("labels must be 0/1")
        X.flags.writeable = False
        Y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", Y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def q(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int:
        return self.labels.shape[1]

    def priors(self) -> np.ndarray:
        """Empirical positive rate of every label."""
        return self.labels.mean(axis=0)

    def subset(self, idx) -> "MultiLabelDataset":
        idx = np.asarray(idx, dtype=np.intp)
        return MultiLabelDataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class SinglePositiveDataset:
    """Features plus one observed positive class index per instance.

    ``source_index`` maps each row back to the dataset it was masked from
    (identity when built directly).
    """

    features: np.ndarray
    observed: np.ndarray
    c: int
    source_index: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        g = np.ascontiguousarray(self.observed, dtype=np.intp)
        if X.ndim != 2 or g.ndim != 1 or X.shape[0] != g.shape[0]:
            raise ValueError("features must be n x q and observed must have length n")
        if X.shape[0] < 1:
            raise ValueError("empty single-positive dataset")
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if np.any(g < 0) or np.any(g >= self.c):
            raise ValueError(f"observed class index outside [0, {self.c})")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        src = np.arange(X.shape[0]) if self.source_index is None else np.asarray(self.source_index, dtype=np.intp)
        for a in (X, g, src):
            a.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "observed", g)
        object.__setattr__(self, "source_index", src)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def q(self) -> int:
        return self.features.shape[1]

    def one_hot(self) -> np.ndarray:
        """The l vectors: an n x c 0/1 matrix with one 1 per row."""
        L = np.zeros((self.n, self.c), dtype=np.int8)
        L[np.arange(self.n), self.observed] = 1
        return L

    def positive_counts(self) -> np.ndarray:
        return np.bincount(self.observed, minlength=self.c)

    def subset(self, idx) -> "SinglePositiveDataset":
        idx = np.asarray(idx, dtype=np.intp)
        return SinglePositiveDataset(self.features[idx], self.observed[idx], self.c, self.source_index[idx])


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.8
    val_frac: float = 0.1
    test_frac: float = 0.1
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if not all(0.0 < f < 1.0 for f in fracs):
            raise ValueError("split fractions must lie in (0, 1)")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {sum(fracs)!r}, expected 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------

def _lines(source: str | TextIO | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _parse_features(tokens: list[str], q: int, lineno: int, row: np.ndarray) -> None:
    seen = set()
    for tok in tokens:
        idx_s, sep, val_s = tok.partition(":")
        if not sep:
            raise ParseError(lineno, f"malformed feature token {tok!r}")
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise ParseError(lineno, f"malformed feature token {tok!r}") from None
        if not 1 <= idx <= q:
            raise ParseError(lineno, f"feature index {idx} out of range")
        if idx in seen:
            raise ParseError(lineno, f"duplicate feature index {idx}")
        if not math.isfinite(val):
            raise ParseError(lineno, f"non-finite feature value {val_s!r}")
        seen.add(idx)
        row[idx - 1] = val


def parse_dataset(source, c: int, q: int) -> MultiLabelDataset:
    """Parse the multi-label text format into a dense dataset."""
    X_rows, Y_rows = [], []
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        label_tok, feats = tokens[0], tokens[1:]
        if ":" in label_tok:
            raise ParseError(lineno, f"missing label list before {label_tok!r}")
        y = np.zeros(c, dtype=np.int8)
        for part in label_tok.split(","):
            if part == "":
                continue
            try:
                j = int(part)
            except ValueError:
                raise ParseError(lineno, f"malformed label {part!r}") from None
            if not 1 <= j <= c:
                raise ParseError(lineno, f"label index {j} out of range")
            y[j - 1] = 1
        x = np.zeros(q, dtype=np.float64)
        _parse_features(feats, q, lineno, x)
        X_rows.append(x)
        Y_rows.append(y)
    if not X_rows:
        raise ParseError(0, "no instances")
    return MultiLabelDataset(np.vstack(X_rows), np.vstack(Y_rows))


def _format_features(x: np.ndarray) -> str:
    return " ".join(f"{k + 1}:{float(x[k])!r}" for k in np.flatnonzero(x))


def format_dataset(ds: MultiLabelDataset, header: bool = True) -> str:
    """Inverse of :func:`parse_dataset`; values are written with ``repr`` so
    they round-trip exactly."""
    out = [f"# c={ds.c} q={ds.q}"] if header else []
    for x, y in zip(ds.features, ds.labels):
        labels = ",".join(str(j + 1) for j in np.flatnonzero(y)) or ","
        feats = _format_features(x)
        out.append(f"{labels} {feats}" if feats else labels)
    return "\n".join(out) + "\n"


def parse_single_positive(source, c: int, q: int) -> SinglePositiveDataset:
    X_rows, gamma = [], []
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            g = int(tokens[0])
        except ValueError:
            raise ParseError(lineno, f"malformed observed label {tokens[0]!r}") from None
        if not 1 <= g <= c:
            raise ParseError(lineno, f"label index {g} out of range")
        x = np.zeros(q, dtype=np.float64)
        _parse_features(tokens[1:], q, lineno, x)
        X_rows.append(x)
        gamma.append(g - 1)
    if not X_rows:
        raise ParseError(0, "no instances")
    return SinglePositiveDataset(np.vstack(X_rows), np.asarray(gamma), c)


def format_single_positive(sp: SinglePositiveDataset, header: bool = True) -> str:
    out = [f"# c={sp.c} q={sp.q}"] if header else []
    for x, g in zip(sp.features, sp.observed):
        feats = _format_features(x)
        out.append(f"{g + 1} {feats}" if feats else f"{g + 1}")
    return "\n".join(out) + "\n"


def read_header(path) -> tuple[int, int] | None:
    """Return ``(c, q)`` from a ``# c=.. q=..`` first line, else None."""
    with open(path) as fh:
        first = fh.readline()
    m = _HEADER_RE.match(first.strip())
    return (int(m.group(1)), int(m.group(2))) if m else None


def _dims(path, c, q):
    hdr = read_header(path)
    if hdr is None:
        if c is None or q is None:
            raise ValueError(f"{path}: no '# c=.. q=..' header; pass the class and feature counts explicitly")
        return c, q
    if (c is not None and c != hdr[0]) or (q is not None and q != hdr[1]):
        raise ValueError(f"{path}: header says c={hdr[0]} q={hdr[1]}, expected c={c} q={q}")
    return hdr


def load_dataset(path, c: int | None = None, q: int | None = None) -> MultiLabelDataset:
    c, q = _dims(path, c, q)
    with open(path) as fh:
        return parse_dataset(fh, c, q)


def save_dataset(ds: MultiLabelDataset, path) -> None:
    Path(path).write_text(format_dataset(ds))


def load_single_positive(path, c: int | None = None, q: int | None = None) -> SinglePositiveDataset:
    c, q = _dims(path, c, q)
    with open(path) as fh:
        return parse_single_positive(fh, c, q)


def save_single_positive(sp: SinglePositiveDataset, path) -> None:
    Path(path).write_text(format_single_positive(sp))


# --------------------------------------------------------------------------
# splitting and masking
# --------------------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded shuffle-then-slice; val/test take ``round(n*frac)`` rows and
    train takes the remainder."""
    n_val = _round_half_up(n * spec.val_frac)
    n_test = _round_half_up(n * spec.test_frac)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"empty split for n={n} with fractions "
                         f"({spec.train_frac}, {spec.val_frac}, {spec.test_frac})")
    perm = np.random.default_rng(int(spec.seed)).permutation(n)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def split(ds: MultiLabelDataset, spec: SplitSpec):
    tr, va, te = split_indices(ds.n, spec)
    return ds.subset(tr), ds.subset(va), ds.subset(te)


def mask_single_positive(ds: MultiLabelDataset, seed: int) -> tuple[SinglePositiveDataset, int]:
    """Keep one uniformly chosen relevant label per instance.

    Rows without any relevant label are dropped; returns the masked dataset
    and the number of dropped rows.
    """
    counts = ds.labels.sum(axis=1)
    keep = np.flatnonzero(counts > 0)
    if keep.size == 0:
        raise ValueError("no positive labels in any instance")
    rng = np.random.default_rng(int(seed))
    u = rng.random(ds.n)
    gamma = np.empty(keep.size, dtype=np.intp)
    for out, i in enumerate(keep):
        pos = np.flatnonzero(ds.labels[i])
        gamma[out] = pos[min(int(u[i] * pos.size), pos.size - 1)]
    sp = SinglePositiveDataset(ds.features[keep], gamma, ds.c, source_index=keep)
    return sp, int(ds.n - keep.size)


def positive_set(sp: SinglePositiveDataset, j: int) -> np.ndarray:
    """Indices of instances whose observed positive is ``j``."""
    if not 0 <= j:
        raise ValueError(f"class index {j} is negative")
    return np.flatnonzero(sp.observed == j)
