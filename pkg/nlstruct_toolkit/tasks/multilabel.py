"""
Synthetic multilabel task: Ising-style label sets with label-conditioned Gaussian-mixture features.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit

from ..constants import TaskKind
from ..exceptions import StructuralException
from .datasets import Dataset
from .words import SPLITS

# Set up logging
logger = logging.getLogger(__name__)


class MultilabelTaskSpec(BaseModel):
    """Label count, feature size, pair budget and generator parameters of the multilabel task."""
    model_config = ConfigDict(extra="forbid")

    n_labels: int = Field(12, ge=2, description="Number of binary labels L")
    feature_dim: int = Field(20, ge=1, description="Feature dimension F")
    pair_budget: int = Field(15, ge=0, description="Pairs P kept by co-occurrence")
    train_size: int = Field(300, ge=1)
    val_size: int = Field(100, ge=0)
    test_size: int = Field(100, ge=0)
    seed: int = Field(0)
    field_scale: float = Field(1.0, ge=0, description="Spread of the label biases")
    coupling_scale: float = Field(1.0, ge=0, description="Spread of the pairwise couplings")
    coupling_density: float = Field(0.3, ge=0, le=1, description="Fraction of label pairs that are coupled")
    gibbs_sweeps: int = Field(30, ge=1, description="Gibbs sweeps per sampled label set")
    components: int = Field(2, ge=1, description="Mixture components per label")
    feature_noise: float = Field(1.0, ge=0, description="Standard deviation of the feature noise")

    @model_validator(mode="after")
    def check_pair_budget(self) -> "MultilabelTaskSpec":
        if self.pair_budget > self.n_labels * (self.n_labels - 1) // 2:
            raise ValueError("pair_budget exceeds the number of label pairs")
        return self

    def split_sizes(self) -> Dict[str, int]:
        return {"train": self.train_size, "val": self.val_size, "test": self.test_size}


@dataclass
class IsingGenerator:
    """Ground-truth label model and the feature means of every (label, component)."""
    fields: np.ndarray
    couplings: np.ndarray
    means: np.ndarray

    @classmethod
    def from_spec(cls, spec: MultilabelTaskSpec) -> "IsingGenerator":
        rng = np.random.default_rng([spec.seed, len(SPLITS)])
        L = spec.n_labels
        fields = rng.normal(-0.5, spec.field_scale, size=L)
        couplings = np.triu(rng.normal(0.0, spec.coupling_scale, size=(L, L)), k=1)
        couplings *= np.triu(rng.uniform(size=(L, L)) < spec.coupling_density, k=1)
        couplings = couplings + couplings.T
        means = rng.normal(0.0, 1.0, size=(L, spec.components, spec.feature_dim))
        return cls(fields, couplings, means)

    def sample_labels(self, rng: np.random.Generator, sweeps: int) -> np.ndarray:
        x = (rng.uniform(size=self.fields.size) < 0.5).astype(np.int64)
        for _ in range(sweeps):
            for l in range(self.fields.size):
                p = expit(self.fields[l] + self.couplings[l] @ x)
                x[l] = int(rng.uniform() < p)
        return x

    def sample_features(self, x: np.ndarray, rng: np.random.Generator, noise: float) -> np.ndarray:
        components = rng.integers(self.means.shape[1], size=x.size)
        active = np.flatnonzero(x)
        mean = self.means[active, components[active]].sum(axis=0) if active.size else 0.0
        return mean + noise * rng.normal(size=self.means.shape[2])


def gen_multilabel(spec: MultilabelTaskSpec) -> Dict[str, Dataset]:
    """Generate the train, val and test splits; each example uses its own (seed, split, index) stream."""
    generator = IsingGenerator.from_spec(spec)
    splits = {}
    for split_index, split in enumerate(SPLITS):
        size = spec.split_sizes()[split]
        features = np.empty((size, spec.feature_dim))
        labels = np.empty((size, spec.n_labels), dtype=np.int64)
        for i in range(size):
            rng = np.random.default_rng([spec.seed, split_index, i])
            labels[i] = generator.sample_labels(rng, spec.gibbs_sweeps)
            features[i] = generator.sample_features(labels[i], rng, spec.feature_noise)
        splits[split] = Dataset(TaskKind.MULTILABEL, features, labels, 2)
        logger.info(f"Generated {size} {split} label sets, mean cardinality {labels.sum(axis=1).mean():.2f}")
    return splits


def cooccurrence_counts(labels: np.ndarray) -> np.ndarray:
    """Number of examples in which both labels i and j are on."""
    on = np.asarray(labels, dtype=np.int64)
    return on.T @ on


def select_pairs(dataset: Dataset, P: int) -> List[Tuple[int, int]]:
    """
    The P label pairs appearing together most often in a dataset.

    Ties are broken lexicographically; the result is returned in ascending pair order.

    Raises:
        StructuralException: If P exceeds the number of label pairs
    """
    L = dataset.n_variables
    if P > L * (L - 1) // 2 or P < 0:
        raise StructuralException(f"Cannot select {P} pairs out of {L * (L - 1) // 2}")
    counts = cooccurrence_counts(dataset.labels)
    candidates = [(-int(counts[i, j]), i, j) for i in range(L) for j in range(i + 1, L)]
    chosen = sorted(candidates)[:P]
    return sorted((i, j) for _, i, j in chosen)
