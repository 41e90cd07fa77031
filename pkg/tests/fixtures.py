"""Shared synthetic training fixture for trainer and acceptance tests."""

from dataclasses import dataclass

import numpy as np

from crisp.data import MultiLabelDataset, SinglePositiveDataset, SplitSpec, mask_single_positive, split
from crisp.synth import SynthConfig, generate


@dataclass
class Fixture:
    full_train: MultiLabelDataset  # masked rows only, with their complete labels
    sp: SinglePositiveDataset
    val: MultiLabelDataset
    test: MultiLabelDataset
    priors: np.ndarray  # label frequencies over the masked training rows


def make_fixture(seed=0, n=5000, q=20, priors=(0.5, 0.3, 0.1), separability=1.0):
    ds, _ = generate(SynthConfig(n, q, len(priors), tuple(priors), separability=separability, seed=seed))
    tr, va, te = split(ds, SplitSpec(seed=seed))
    sp, _ = mask_single_positive(tr, seed)
    kept = tr.subset(sp.source_index)
    return Fixture(kept, sp, va, te, kept.priors())
