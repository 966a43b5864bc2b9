"""
LP-relaxation dual of the decomposed MAP problem max_x sum_r theta_r(x_r).

The dual is H^D(mu) = sum_k max beta_k + sum_r max beta_r with reparameterized
beliefs beta_k = theta_k + sum_{r ni k} mu_{r->k} and
beta_r = theta_r - sum_{k in r} mu_{r->k}. It is minimized by MPLP block
coordinate updates, one region at a time.
"""
import logging
from typing import List, Optional

import numpy as np

from ..constants import MONOTONE_TOLERANCE
from ..exceptions import StructuralException
from ..structure import RegionGraph
from .models import DualSolution, MessageSet

# Set up logging
logger = logging.getLogger(__name__)


def theta_from(lam: np.ndarray, f: np.ndarray, loss: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Build the decomposed objective theta = lambda * f (+ loss).

    Args:
        lam: Multipliers, one per slot
        f: Potentials, one per slot
        loss: Optional loss-augmentation vector in the same layout

    Returns:
        The theta vector

    Raises:
        StructuralException: If the layouts differ
    """
    lam = np.asarray(lam, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if lam.shape != f.shape:
        raise StructuralException(f"lambda shape {lam.shape} does not match potentials {f.shape}")
    theta = lam * f
    if loss is not None:
        loss = np.asarray(loss, dtype=np.float64)
        if loss.shape != f.shape:
            raise StructuralException(f"loss shape {loss.shape} does not match potentials {f.shape}")
        theta = theta + loss
    return theta


def _broadcast(vector: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = -1
    return vector.reshape(shape)


def unary_belief(messages: MessageSet, theta: np.ndarray, k: int) -> np.ndarray:
    graph = messages.graph
    return graph.region_table(theta, k) + messages.incoming(k)


def region_belief(messages: MessageSet, theta: np.ndarray, r: int) -> np.ndarray:
    graph = messages.graph
    if r < graph.K:
        return unary_belief(messages, theta, r)
    region = graph.regions[r]
    belief = graph.region_table(theta, r).copy()
    for position, k in enumerate(region):
        belief -= _broadcast(messages.tables[(r, k)], len(region), position)
    return belief


def beliefs(messages: MessageSet, theta: np.ndarray) -> List[np.ndarray]:
    """Beliefs of every region, unary regions first."""
    return [region_belief(messages, theta, r) for r in range(messages.graph.num_regions)]


def dual_value(messages: MessageSet, theta: np.ndarray) -> float:
    """
    Relaxed dual objective H^D.

    Args:
        messages: Dual variables
        theta: Decomposed objective

    Returns:
        sum_k max beta_k + sum_r max beta_r
    """
    theta = messages.graph.check_vector(theta, "theta")
    return float(sum(np.max(belief) for belief in beliefs(messages, theta)))


def _local_value(messages: MessageSet, theta: np.ndarray, r: int) -> float:
    region = messages.graph.regions[r]
    return float(np.max(region_belief(messages, theta, r))
                 + sum(np.max(unary_belief(messages, theta, k)) for k in region))


def _update_region(messages: MessageSet, theta: np.ndarray, r: int):
    graph = messages.graph
    region = graph.regions[r]
    ndim = len(region)
    gammas = [graph.region_table(theta, k) + messages.incoming(k, exclude=r) for k in region]
    total = graph.region_table(theta, r).copy()
    for position, gamma in enumerate(gammas):
        total += _broadcast(gamma, ndim, position)
    for position, k in enumerate(region):
        others = tuple(axis for axis in range(ndim) if axis != position)
        messages.tables[(r, k)] = -gammas[position] + np.max(total, axis=others) / ndim


def minimize_dual(graph: RegionGraph, theta: np.ndarray, max_sweeps: int = 200,
                  tol: float = 1e-9, init: Optional[MessageSet] = None) -> DualSolution:
    """
    Minimize H^D over messages by MPLP block coordinate descent.

    Args:
        graph: Region graph of theta
        theta: Decomposed objective
        max_sweeps: Upper bound on sweeps over the higher-order regions
        tol: Stop once a full sweep decreases H^D by no more than this
        init: Starting messages (zeros when omitted); left untouched

    Returns:
        The best messages found, their dual value, the sweeps used and the per-sweep trace
    """
    if max_sweeps < 1:
        raise StructuralException("max_sweeps must be >= 1")
    theta = graph.check_vector(theta, "theta")
    messages = init.copy() if init is not None else MessageSet(graph)
    value = dual_value(messages, theta)
    trace = [value]
    if graph.num_regions == graph.K:
        return DualSolution(messages=messages, value=value, sweeps=0, trace=trace)

    violations = 0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for r in graph.higher_order_ids:
            before = _local_value(messages, theta, r)
            _update_region(messages, theta, r)
            after = _local_value(messages, theta, r)
            if after - before > MONOTONE_TOLERANCE * max(1.0, abs(before)):
                violations += 1
                logger.warning(f"Dual increased by {after - before:.3e} on region {graph.regions[r]}")
        current = dual_value(messages, theta)
        trace.append(current)
        decrease = value - current
        value = current
        logger.debug(f"MPLP sweep {sweeps}: H^D={value:.12g}, decrease={decrease:.3e}")
        if decrease <= tol:
            break
    return DualSolution(messages=messages, value=value, sweeps=sweeps, trace=trace,
                        monotone_violations=violations)


def decode(messages: MessageSet, theta: np.ndarray) -> np.ndarray:
    """
    Decode an assignment from unary beliefs.

    Args:
        messages: Dual variables
        theta: Decomposed objective

    Returns:
        Per-variable argmax of beta_k, ties toward the smallest label
    """
    graph = messages.graph
    theta = graph.check_vector(theta, "theta")
    return np.array([int(np.argmax(unary_belief(messages, theta, k))) for k in range(graph.K)],
                    dtype=np.int64)


def grad_lambda(messages: MessageSet, theta: np.ndarray, f: np.ndarray) -> np.ndarray:
    """
    Subgradient of H^D with respect to lambda at fixed messages.

    Every region contributes f at the slot of its (tie-broken) belief argmax.

    Args:
        messages: Dual variables
        theta: lambda * f (+ loss)
        f: Potentials

    Returns:
        Vector with exactly one active slot per region
    """
    graph = messages.graph
    f = graph.check_vector(f, "potential vector")
    slots = active_slots(messages, theta)
    grad = np.zeros(graph.D)
    grad[slots] = f[slots]
    return grad


def active_slots(messages: MessageSet, theta: np.ndarray) -> np.ndarray:
    """The slot of every region's belief argmax."""
    graph = messages.graph
    theta = graph.check_vector(theta, "theta")
    return np.array([int(graph.offsets[r]) + int(np.argmax(region_belief(messages, theta, r)))
                     for r in range(graph.num_regions)], dtype=np.int64)
