"""
Decode every example of a split and aggregate task metrics.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional, Sequence

import numpy as np

from ..constants import InferenceMode
from ..diffnet import ParamVector
from ..inference import SaddleConfig, SpenConfig, spen_relaxed_infer
from ..learning import Example, StructuredModel
from .metrics import MetricReport, compute_metrics

# Set up logging
logger = logging.getLogger(__name__)


def predict(model: StructuredModel, params: ParamVector, example: Example, mode: str,
            saddle: Optional[SaddleConfig] = None, spen: Optional[SpenConfig] = None) -> np.ndarray:
    """Decoded assignment of one example under an inference mode."""
    f = model.potentials(params, example.context)
    if mode == InferenceMode.SPEN_RELAXED:
        spen = spen or SpenConfig()
        return spen_relaxed_infer(model.graph, f, model.top, params, spen.steps, spen.step_size,
                                  spen.restarts, spen.seed)
    return model.run_inference(params, f, mode, saddle).x_hat


def predict_all(model: StructuredModel, params: ParamVector, examples: Sequence[Example], mode: str,
                saddle: Optional[SaddleConfig] = None, spen: Optional[SpenConfig] = None,
                threads: int = 1) -> np.ndarray:
    """Decoded assignments of all examples, in example order."""
    if mode != InferenceMode.SPEN_RELAXED:
        model.resolve_mode(params, mode)
    if not examples:
        return np.zeros((0, model.graph.K), dtype=np.int64)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        rows = list(executor.map(lambda example: predict(model, params, example, mode, saddle, spen), examples))
    return np.stack(rows)


def evaluate(model: StructuredModel, params: ParamVector, examples: Sequence[Example], mode: str,
             saddle: Optional[SaddleConfig] = None, spen: Optional[SpenConfig] = None,
             binary_columns: bool = False, threads: int = 1) -> MetricReport:
    """
    Decode every example and aggregate metrics.

    Args:
        model: Structured model
        params: Its parameters
        examples: Examples to decode
        mode: One of exact-dp, message-passing, saddle, spen-relaxed (or auto)
        saddle: Saddle and message-passing controls
        spen: Relaxed-inference controls
        binary_columns: Score macro-F1 per binary label (multilabel task)
        threads: Worker threads

    Returns:
        The metric report

    Raises:
        StructuralException: If the mode does not fit the model or graph
    """
    predictions = predict_all(model, params, examples, mode, saddle, spen, threads)
    labels = np.stack([np.asarray(example.labels) for example in examples]) if examples \
        else np.zeros((0, model.graph.K), dtype=np.int64)
    report = compute_metrics(predictions, labels, binary_columns)
    logger.debug(f"Evaluated {len(examples)} examples with {mode}: char accuracy {report.char_accuracy:.4f}")
    return report


class SplitEvaluator:
    """Per-epoch metric callback for the trainer."""

    def __init__(self, mode: str = InferenceMode.AUTO, saddle: Optional[SaddleConfig] = None,
                 binary_columns: bool = False, threads: int = 1):
        self.mode = mode
        self.saddle = saddle
        self.binary_columns = binary_columns
        self.threads = threads

    def __call__(self, model: StructuredModel, params: ParamVector, examples: Sequence[Example],
                 split: str) -> Dict[str, float]:
        report = evaluate(model, params, examples, self.mode, self.saddle,
                          binary_columns=self.binary_columns, threads=self.threads)
        return report.to_dict()
