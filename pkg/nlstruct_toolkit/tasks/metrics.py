"""
Task metrics: word and character accuracy, Hamming loss and macro-F1, each with its counts.
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..exceptions import StructuralException


@dataclass
class MetricReport:
    n_examples: int
    n_variables: int
    words_correct: int
    chars_correct: int
    mismatches: int
    macro_f1: float
    f1_classes: int

    @property
    def word_accuracy(self) -> float:
        return self.words_correct / self.n_examples if self.n_examples else 0.0

    @property
    def char_accuracy(self) -> float:
        total = self.n_examples * self.n_variables
        return self.chars_correct / total if total else 0.0

    @property
    def hamming_loss(self) -> float:
        """Mean number of mismatched variables per example."""
        return self.mismatches / self.n_examples if self.n_examples else 0.0

    def to_dict(self) -> Dict[str, float]:
        return {
            "word_accuracy": self.word_accuracy,
            "char_accuracy": self.char_accuracy,
            "hamming_loss": self.hamming_loss,
            "macro_f1": self.macro_f1,
            "n_examples": float(self.n_examples),
            "words_correct": float(self.words_correct),
            "chars_correct": float(self.chars_correct),
            "mismatches": float(self.mismatches),
        }

    def to_table(self, delimiter: str = "\t") -> str:
        rows = [
            ("word_accuracy", f"{self.word_accuracy:.6f}", f"{self.words_correct}/{self.n_examples}"),
            ("char_accuracy", f"{self.char_accuracy:.6f}",
             f"{self.chars_correct}/{self.n_examples * self.n_variables}"),
            ("hamming_loss", f"{self.hamming_loss:.6f}", f"{self.mismatches}/{self.n_examples}"),
            ("macro_f1", f"{self.macro_f1:.6f}", f"{self.f1_classes} classes"),
        ]
        lines = [delimiter.join(["metric", "value", "counts"])]
        lines.extend(delimiter.join(row) for row in rows)
        return "\n".join(lines) + "\n"


def _f1(tp: int, fp: int, fn: int) -> float:
    denominator = 2 * tp + fp + fn
    return 2.0 * tp / denominator if denominator else 0.0


def macro_f1(predictions: np.ndarray, labels: np.ndarray, binary_columns: bool = False):
    """
    Macro-averaged F1 and the number of classes averaged.

    With ``binary_columns`` every variable is a label whose positive class is 1
    (multilabel); otherwise every label value is a class pooled over all positions.
    Classes absent from both labels and predictions are left out of the average.
    """
    if binary_columns:
        tp = np.sum((predictions == 1) & (labels == 1), axis=0)
        fp = np.sum((predictions == 1) & (labels == 0), axis=0)
        fn = np.sum((predictions == 0) & (labels == 1), axis=0)
        scores = [_f1(a, b, c) for a, b, c in zip(tp, fp, fn) if a + b + c > 0]
    else:
        scores = []
        for cls in np.union1d(np.unique(predictions), np.unique(labels)):
            tp = int(np.sum((predictions == cls) & (labels == cls)))
            fp = int(np.sum((predictions == cls) & (labels != cls)))
            fn = int(np.sum((predictions != cls) & (labels == cls)))
            scores.append(_f1(tp, fp, fn))
    return (float(np.mean(scores)) if scores else 1.0), len(scores)


def compute_metrics(predictions: np.ndarray, labels: np.ndarray, binary_columns: bool = False) -> MetricReport:
    """
    Aggregate metrics of a set of decoded assignments.

    Args:
        predictions: Decoded assignments, shape (N, K)
        labels: Ground truth, shape (N, K)
        binary_columns: Treat each variable as a binary label for macro-F1

    Returns:
        The metric report

    Raises:
        StructuralException: If the shapes differ
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape or labels.ndim != 2:
        raise StructuralException(f"Predictions {predictions.shape} and labels {labels.shape} differ")
    matches = predictions == labels
    f1, classes = macro_f1(predictions, labels, binary_columns)
    return MetricReport(
        n_examples=labels.shape[0],
        n_variables=labels.shape[1],
        words_correct=int(np.sum(np.all(matches, axis=1))),
        chars_correct=int(np.sum(matches)),
        mismatches=int(np.sum(~matches)),
        macro_f1=f1,
        f1_classes=classes,
    )
