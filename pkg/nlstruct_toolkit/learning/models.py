"""
Configuration and record types for structured max-margin learning.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..diffnet import ParamVector
from ..inference import SaddleConfig


class TrainConfig(BaseModel):
    """Hyperparameters of minibatch structured hinge learning."""
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(0.01, gt=0, description="Learning rate")
    C: float = Field(1e-4, ge=0, description="L2 regularization weight")
    minibatch: int = Field(10, ge=1, description="Examples per weight update")
    epochs: int = Field(10, ge=1, description="Passes over the training split")
    saddle: SaddleConfig = Field(default_factory=SaddleConfig, description="Inference controls")
    loss_scale: float = Field(1.0, ge=0, description="Per-variable Hamming weight of the loss augmentation")
    seed: int = Field(0, description="Seed of the per-epoch shuffles")
    inference_mode: Literal["auto", "exact-dp", "message-passing", "saddle"] = Field(
        "auto", description="Loss-augmented inference procedure; auto picks message passing for linear tops")
    eval_train: bool = Field(True, description="Compute training-split metrics every epoch")
    keep_best: bool = Field(True, description="Return the best-validation parameters instead of the last")
    warm_start: bool = Field(False, description="Seed each example's inference with its previous lambda and y")
    threads: int = Field(1, ge=1, description="Worker threads for per-example inference")


class StageSpec(BaseModel):
    """One stage of a staged training plan."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["unary-only", "pairwise-given-unary", "top-given-potentials", "joint"] = Field(
        ..., description="Which parameter group the stage learns")
    epochs: Optional[int] = Field(None, ge=1, description="Overrides TrainConfig.epochs")
    alpha: Optional[float] = Field(None, gt=0, description="Overrides TrainConfig.alpha")
    frozen: List[str] = Field(default_factory=list, description="Additional block names or prefixes to freeze")


@dataclass
class Example:
    """Conditioning input and ground-truth assignment."""
    context: np.ndarray
    labels: np.ndarray
    example_id: int = 0


@dataclass
class MarginTerms:
    """The two top scores entering the structured hinge, plus the loss of the inferred assignment."""
    top_inferred: float
    top_true: float
    loss: float

    @property
    def hinge(self) -> float:
        return self.top_inferred + self.loss - self.top_true


@dataclass
class EpochRecord:
    """One row of the training history."""
    epoch: int
    objective: float
    train_metrics: Dict[str, float] = field(default_factory=dict)
    val_metrics: Dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0


HISTORY_METRICS = ("word_accuracy", "char_accuracy", "hamming_loss", "macro_f1")


def history_table(stages: Sequence[Tuple[str, List[EpochRecord]]], delimiter: str = "\t") -> str:
    """Training history of (stage name, records) pairs as a delimited table; wall time is left to the run log."""
    header = ["stage", "epoch", "objective"]
    header += [f"train_{name}" for name in HISTORY_METRICS]
    header += [f"val_{name}" for name in HISTORY_METRICS]
    lines = [delimiter.join(header)]
    for stage, records in stages:
        for record in records:
            row = [stage, str(record.epoch), f"{record.objective:.10g}"]
            for metrics in (record.train_metrics, record.val_metrics):
                row += [f"{metrics[name]:.6f}" if name in metrics else "" for name in HISTORY_METRICS]
            lines.append(delimiter.join(row))
    return "\n".join(lines) + "\n"


@dataclass
class StagedOutcome:
    """Parameters after the last stage, one history per stage and the final shuffle RNG state."""
    params: ParamVector
    histories: List[List[EpochRecord]]
    rng_state: Optional[dict] = None
