"""
Central finite-difference check of the margin gradient, block by block.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..diffnet import ParamVector
from .models import Example
from .trainer import StructuredTrainer

# Set up logging
logger = logging.getLogger(__name__)


@dataclass
class BlockCheck:
    name: str
    checked: int
    relative_error: float
    passed: bool


def margin_value(trainer: StructuredTrainer, params: ParamVector, example: Example, x_hat: np.ndarray) -> float:
    """T(c, H(x_hat, c, w), w) - T(c, H(x, c, w), w)."""
    model = trainer.model
    f = model.potentials(params, example.context)
    return (model.top.value(params, model.graph.mask(f, x_hat))
            - model.top.value(params, model.graph.mask(f, example.labels)))


def check_gradients(trainer: StructuredTrainer, params: ParamVector, example: Example,
                    x_hat: Optional[np.ndarray] = None, eps: float = 1e-5, tol: float = 1e-4,
                    coords_per_block: int = 6, seed: int = 0, floor: float = 1e-8) -> List[BlockCheck]:
    """
    Compare example_gradient against central differences of the margin at fixed x_hat.

    The error of a block is ||analytic - numeric|| / max(||analytic||, ||numeric||, floor) over its sampled
    coordinates.

    Args:
        trainer: Trainer whose model is checked
        params: Parameters to check at
        example: Example providing the context and ground truth
        x_hat: Competing assignment (the loss-augmented prediction when omitted)
        eps: Finite-difference step
        tol: Largest accepted relative error
        coords_per_block: Coordinates sampled per block (all of them for small blocks)
        seed: Seed of the coordinate sampling
        floor: Smallest denominator of the relative error

    Returns:
        One row per parameter block
    """
    if x_hat is None:
        x_hat = trainer.loss_augmented_infer(params, example).x_hat
    analytic, _ = trainer.example_gradient(params, example, x_hat)
    rng = np.random.default_rng(seed)
    shifted = params.copy()
    rows = []
    for name in params.names:
        block_slice = params.block_slice(name)
        indices = np.arange(block_slice.start, block_slice.stop)
        if indices.size > coords_per_block:
            indices = np.sort(rng.choice(indices, size=coords_per_block, replace=False))
        exact = analytic.values[indices]
        numeric = np.empty(indices.size)
        for position, index in enumerate(indices):
            original = shifted.values[index]
            shifted.values[index] = original + eps
            upper = margin_value(trainer, shifted, example, x_hat)
            shifted.values[index] = original - eps
            lower = margin_value(trainer, shifted, example, x_hat)
            shifted.values[index] = original
            numeric[position] = (upper - lower) / (2.0 * eps)
        scale = max(np.linalg.norm(exact), np.linalg.norm(numeric), floor)
        error = float(np.linalg.norm(exact - numeric) / scale)
        rows.append(BlockCheck(name, int(indices.size), error, error <= tol))
        logger.debug(f"Gradient check {name}: {indices.size} coordinates, relative error {error:.3e}")
    return rows


def gradcheck_table(rows: List[BlockCheck], delimiter: str = "\t") -> str:
    lines = [delimiter.join(["block", "checked", "relative_error", "status"])]
    for row in rows:
        lines.append(delimiter.join([row.name, str(row.checked), f"{row.relative_error:.3e}",
                                     "pass" if row.passed else "FAIL"]))
    return "\n".join(lines) + "\n"
