"""
In-memory datasets and their binary file format.

File layout, all little-endian: magic ``NLSD``, format version (u32), task code
(u32), example count (u32), variable count (u32), labels per variable (u32),
feature rank (u32) and each feature dimension (u32); then one record per example
holding its features as float64 followed by its labels as u16.
"""
import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from ..constants import TaskKind
from ..exceptions import ArtifactIOException, StructuralException
from ..learning import Example

# Set up logging
logger = logging.getLogger(__name__)

MAGIC = b"NLSD"
VERSION = 1
_U32 = struct.Struct("<I")


@dataclass
class Dataset:
    """Examples of one split: features (N, *feature_shape) and labels (N, K)."""
    task: str
    features: np.ndarray
    labels: np.ndarray
    n_labels: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.task not in TaskKind.CODES:
            raise StructuralException(f"Unknown task kind: {self.task}")
        if self.labels.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise StructuralException(
                f"Features {self.features.shape} and labels {self.labels.shape} do not describe the same examples")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_labels):
            raise StructuralException(f"Labels out of range for {self.n_labels} classes")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_variables(self) -> int:
        return self.labels.shape[1]

    @property
    def feature_shape(self) -> Tuple[int, ...]:
        return tuple(self.features.shape[1:])

    def examples(self) -> List[Example]:
        return [Example(context=self.features[i], labels=self.labels[i], example_id=i) for i in range(len(self))]

    def to_bytes(self) -> bytes:
        header = [MAGIC, _U32.pack(VERSION), _U32.pack(TaskKind.CODES[self.task]), _U32.pack(len(self)),
                  _U32.pack(self.n_variables), _U32.pack(self.n_labels), _U32.pack(len(self.feature_shape))]
        header.extend(_U32.pack(d) for d in self.feature_shape)
        records = []
        for i in range(len(self)):
            records.append(np.ascontiguousarray(self.features[i], dtype="<f8").tobytes())
            records.append(np.ascontiguousarray(self.labels[i], dtype="<u2").tobytes())
        return b"".join(header + records)

    @classmethod
    def from_bytes(cls, buffer: bytes) -> "Dataset":
        """
        Decode a dataset file.

        Raises:
            ArtifactIOException: If the magic, version or sizes are wrong
        """
        if buffer[:4] != MAGIC:
            raise ArtifactIOException("Not a dataset file (bad magic)")
        offset = 4
        fields = []
        for _ in range(6):
            if offset + 4 > len(buffer):
                raise ArtifactIOException("Truncated dataset header")
            fields.append(_U32.unpack_from(buffer, offset)[0])
            offset += 4
        version, code, count, n_variables, n_labels, rank = fields
        if version != VERSION:
            raise ArtifactIOException(f"Unsupported dataset version {version}")
        tasks = {value: key for key, value in TaskKind.CODES.items()}
        if code not in tasks:
            raise ArtifactIOException(f"Unknown task code {code}")
        if offset + 4 * rank > len(buffer):
            raise ArtifactIOException("Truncated dataset header")
        shape = tuple(_U32.unpack_from(buffer, offset + 4 * i)[0] for i in range(rank))
        offset += 4 * rank
        n_features = int(np.prod(shape, dtype=np.int64))
        record = 8 * n_features + 2 * n_variables
        if len(buffer) - offset != count * record:
            raise ArtifactIOException(
                f"Dataset body has {len(buffer) - offset} bytes, expected {count * record}")
        features = np.empty((count,) + shape)
        labels = np.empty((count, n_variables), dtype=np.int64)
        for i in range(count):
            start = offset + i * record
            features[i] = np.frombuffer(buffer, dtype="<f8", count=n_features, offset=start).reshape(shape)
            labels[i] = np.frombuffer(buffer, dtype="<u2", count=n_variables, offset=start + 8 * n_features)
        try:
            return cls(tasks[code], features, labels, n_labels)
        except StructuralException as e:
            raise ArtifactIOException(f"Inconsistent dataset file: {e.message}") from e


def write_dataset(path: Union[str, Path], dataset: Dataset) -> str:
    """Write a dataset file and return the sha256 of its bytes."""
    data = dataset.to_bytes()
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise ArtifactIOException(f"Cannot write dataset {path}: {e}") from e
    logger.info(f"Wrote {len(dataset)} {dataset.task} examples to {path}")
    return hashlib.sha256(data).hexdigest()


def read_dataset(path: Union[str, Path]) -> Dataset:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOException(f"Cannot read dataset {path}: {e}") from e
    return Dataset.from_bytes(data)


def file_sha256(path: Union[str, Path]) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise ArtifactIOException(f"Cannot read {path}: {e}") from e
