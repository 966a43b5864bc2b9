"""
Exact MAP oracles: exhaustive enumeration and chain dynamic programming.
"""
from itertools import product
from typing import Tuple

import numpy as np

from ..constants import BRUTEFORCE_LIMIT
from ..exceptions import StructuralException
from ..structure import RegionGraph


def map_bruteforce(graph: RegionGraph, theta: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Maximize sum_r theta_r(x_r) by enumerating every assignment.

    Args:
        graph: Region graph
        theta: Decomposed objective

    Returns:
        The maximum and the lexicographically smallest maximizer

    Raises:
        StructuralException: If the joint space exceeds the enumeration limit
    """
    theta = graph.check_vector(theta, "theta")
    space = int(np.prod(graph.domains, dtype=np.int64))
    if space > BRUTEFORCE_LIMIT:
        raise StructuralException(f"Joint space of size {space} is too large to enumerate")
    best_value = -np.inf
    best = None
    for x in product(*(range(d) for d in graph.domains)):
        value = graph.score_decomposed(theta, x)
        if value > best_value:
            best_value, best = value, x
    return float(best_value), np.array(best, dtype=np.int64)


def map_chain_dp(graph: RegionGraph, theta: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Maximize sum_r theta_r(x_r) on a chain by dynamic programming.

    Suffix values are computed backwards; decoding runs forwards picking the
    smallest optimal label at each position, which yields the lexicographically
    smallest maximizer.

    Args:
        graph: Chain-structured region graph
        theta: Decomposed objective

    Returns:
        The maximum and the lexicographically smallest maximizer

    Raises:
        StructuralException: If the graph is not a chain
    """
    if not graph.is_chain():
        raise StructuralException("Chain DP requires pair regions (k, k+1) only")
    theta = graph.check_vector(theta, "theta")
    K = graph.K
    edge_of = {region: r for r, region in enumerate(graph.regions) if len(region) == 2}
    unary = [graph.region_table(theta, k) for k in range(K)]
    pairwise = [graph.region_table(theta, edge_of[(k, k + 1)]) for k in range(K - 1)]

    # suffix[k][x_k]: best score of variables k..K-1 given x_k, unary of k included
    suffix = [None] * K
    suffix[K - 1] = unary[K - 1].copy()
    for k in range(K - 2, -1, -1):
        suffix[k] = unary[k] + np.max(pairwise[k] + suffix[k + 1][None, :], axis=1)

    labels = np.zeros(K, dtype=np.int64)
    labels[0] = int(np.argmax(suffix[0]))
    value = float(suffix[0][labels[0]])
    for k in range(1, K):
        labels[k] = int(np.argmax(pairwise[k - 1][labels[k - 1]] + suffix[k]))
    return value, labels
