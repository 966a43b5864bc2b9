"""
Relaxed gradient-ascent inference over soft binary labels, used as a baseline.
"""
import logging
from functools import reduce
from typing import List

import numpy as np

from ..diffnet import ParamVector, TopTransform
from ..exceptions import NumericalFailureException, StructuralException
from ..structure import RegionGraph

# Set up logging
logger = logging.getLogger(__name__)


def _label_probs(b: np.ndarray) -> List[np.ndarray]:
    return [np.array([1.0 - value, value]) for value in b]


def soft_mask(graph: RegionGraph, f: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Relaxed counterpart of mask: every slot is f weighted by the product of its labels' soft values.

    Args:
        graph: Region graph with binary variables
        f: Potential vector
        b: Soft value in [0, 1] of label 1 for every variable

    Returns:
        The soft-masked potential vector
    """
    probs = _label_probs(b)
    out = np.empty(graph.D)
    for r, region in enumerate(graph.regions):
        weights = reduce(np.multiply.outer, [probs[k] for k in region])
        out[graph.region_slice(r)] = (graph.region_table(f, r) * weights).ravel()
    return out


def _contract_except(table: np.ndarray, vectors: List[np.ndarray], skip: int) -> np.ndarray:
    result = table
    for position in range(table.ndim - 1, -1, -1):
        if position != skip:
            result = np.tensordot(result, vectors[position], axes=([position], [0]))
    return result


def _soft_gradient(graph: RegionGraph, f: np.ndarray, b: np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    probs = _label_probs(b)
    grad_b = np.zeros(graph.K)
    for r, region in enumerate(graph.regions):
        weighted = graph.region_table(f, r) * graph.region_table(grad_y, r)
        local = [probs[k] for k in region]
        for position, k in enumerate(region):
            along = _contract_except(weighted, local, position)
            grad_b[k] += along[1] - along[0]
    return grad_b


def spen_relaxed_infer(graph: RegionGraph, f: np.ndarray, top: TopTransform, params: ParamVector,
                       steps: int = 100, step_size: float = 0.1, restarts: int = 5,
                       seed: int = 0) -> np.ndarray:
    """
    Maximize T over soft binary labels by projected gradient ascent, then round.

    Args:
        graph: Region graph whose variables are all binary
        f: Potential vector
        top: Top transformation
        params: Parameters of the top transformation
        steps: Ascent steps per restart
        step_size: Ascent step size
        restarts: Number of random initializations
        seed: Seed of the initializations

    Returns:
        The rounded assignment with the highest T(mask(f, x)) over restarts

    Raises:
        StructuralException: If a variable is not binary
    """
    if any(d != 2 for d in graph.domains):
        raise StructuralException("Relaxed inference requires binary variables")
    f = graph.check_vector(f, "potential vector")
    rng = np.random.default_rng(seed)
    best_value = -np.inf
    best = None
    for restart in range(max(1, restarts)):
        b = rng.uniform(0.0, 1.0, size=graph.K)
        for _ in range(steps):
            grad_y = top.grad_y(params, soft_mask(graph, f, b))
            b = np.clip(b + step_size * _soft_gradient(graph, f, b, grad_y), 0.0, 1.0)
        if not np.all(np.isfinite(b)):
            raise NumericalFailureException("Relaxed inference produced non-finite labels",
                                            iteration=restart)
        x = (b > 0.5).astype(np.int64)
        value = top.value(params, graph.mask(f, x))
        logger.debug(f"Relaxed restart {restart}: T={value:.6g}")
        if value > best_value:
            best_value, best = value, x
    return best
