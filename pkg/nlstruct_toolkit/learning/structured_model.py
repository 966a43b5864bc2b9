"""
Structured model: unary net and pairwise tables producing the potential vector, scored by a top transformation.
"""
import copy
import logging
from typing import Dict, Optional

import numpy as np

from ..constants import BlockPrefix, InferenceMode, InitScheme, PairSharing, SymmetryMode, UnaryMode
from ..diffnet import DiffNet, PairTable, ParamVector, TopTransform
from ..exceptions import StructuralException
from ..inference import InferenceResult, MessageSet, SaddleConfig, infer, map_chain_dp, map_infer, theta_from
from ..structure import RegionGraph

# Set up logging
logger = logging.getLogger(__name__)


class StructuredModel:
    """
    Everything needed to compute H(x, c, w) and T(c, H, w) for one region graph.

    Parameters live in a single ParamVector whose block names start with
    ``unary``, ``pair`` or ``top``. The layout is fixed at construction;
    ``with_top`` swaps the scoring transformation without changing it, which is
    how the classical-score stages of a staged plan train against a model that
    also owns a nonlinear top.
    """

    def __init__(self, graph: RegionGraph, unary_net: DiffNet, top: TopTransform,
                 unary_mode: str = UnaryMode.PER_VARIABLE, pair_sharing: str = PairSharing.SHARED,
                 symmetry_mode: str = SymmetryMode.NONE):
        """
        Initialize the model.

        Args:
            graph: Region graph of the output space
            unary_net: Net producing unary scores; its name must be ``unary``
            top: Top transformation; its block names must start with ``top``
            unary_mode: per-variable (features (K, F), net F -> |X_k|) or global (features (F,), net F -> sum |X_k|)
            pair_sharing: none, shared (one table for every pair region) or per-edge
            symmetry_mode: Parameter tying of the pair tables

        Raises:
            StructuralException: If the graph, nets and modes do not fit together
        """
        if unary_mode not in UnaryMode.ALL:
            raise StructuralException(f"Unknown unary mode: {unary_mode}")
        if pair_sharing not in PairSharing.ALL:
            raise StructuralException(f"Unknown pair sharing: {pair_sharing}")
        if any(len(region) > 2 for region in graph.pair_regions):
            raise StructuralException("Structured models support unary and pairwise regions only")
        if unary_net.name != BlockPrefix.UNARY:
            raise StructuralException(f"The unary net must be named '{BlockPrefix.UNARY}', got '{unary_net.name}'")

        self.graph = graph
        self.unary_net = unary_net
        self.unary_mode = unary_mode
        self.pair_sharing = pair_sharing
        self.symmetry_mode = symmetry_mode
        self.top = top

        if unary_mode == UnaryMode.PER_VARIABLE:
            if len(set(graph.domains)) != 1 or unary_net.out_dim != graph.domains[0]:
                raise StructuralException(
                    f"Per-variable unary net of width {unary_net.out_dim} needs equal domains of that size, "
                    f"got {graph.domains}")
        elif unary_net.out_dim != sum(graph.domains):
            raise StructuralException(
                f"Global unary net must output {sum(graph.domains)} scores, got {unary_net.out_dim}")
        self.n_unary_slots = sum(graph.domains)

        # pair region id -> table
        self.tables: Dict[int, PairTable] = {}
        if pair_sharing == PairSharing.SHARED and graph.pair_regions:
            shapes = {graph.region_shapes[r] for r in graph.higher_order_ids}
            if len(shapes) != 1:
                raise StructuralException(f"A shared pair table needs equal region shapes, got {sorted(shapes)}")
            rows, cols = shapes.pop()
            shared = PairTable(BlockPrefix.PAIR, rows, cols, symmetry_mode)
            self.tables = {r: shared for r in graph.higher_order_ids}
        elif pair_sharing == PairSharing.PER_EDGE:
            for r in graph.higher_order_ids:
                i, j = graph.regions[r]
                rows, cols = graph.region_shapes[r]
                self.tables[r] = PairTable(f"{BlockPrefix.PAIR}.{i}_{j}", rows, cols, symmetry_mode)

        layout = list(unary_net.param_layout)
        seen = set()
        for table in self.tables.values():
            if table.name not in seen:
                seen.add(table.name)
                layout.extend(table.param_layout)
        layout.extend(top.param_layout)
        for name, _ in top.param_layout:
            if not name.startswith(BlockPrefix.TOP + "."):
                raise StructuralException(f"Top block '{name}' must start with '{BlockPrefix.TOP}.'")
        self.param_layout = tuple(layout)

    def __repr__(self):
        return (f"<StructuredModel(graph={self.graph!r}, unary_mode={self.unary_mode}, "
                f"pair_sharing={self.pair_sharing}, top={type(self.top).__name__})>")

    def init(self, seed: int = 0, unary_scheme: str = InitScheme.GLOROT_UNIFORM) -> ParamVector:
        """Unary net from the given scheme, pair tables at zero, top from its own scheme."""
        params = ParamVector.zeros(self.param_layout)
        params.accumulate(self.unary_net.init(unary_scheme, seed))
        params.accumulate(self.top.init(seed + 1))
        return params

    def with_top(self, top: TopTransform) -> "StructuredModel":
        """Shallow copy scoring with another top; parameter layout unchanged."""
        clone = copy.copy(self)
        clone.top = top
        return clone

    def potentials(self, params: ParamVector, context: np.ndarray) -> np.ndarray:
        """
        Compute the potential vector f = H(c, w) in the graph's flat layout.

        Args:
            params: Model parameters
            context: Conditioning input, (K, F) per-variable features or (F,) global features

        Returns:
            Potential vector of length D

        Raises:
            StructuralException: If the context shape does not fit the unary net
        """
        f = np.zeros(self.graph.D)
        scores = self.unary_net.forward(params, self._check_context(context))
        f[:self.n_unary_slots] = scores.ravel()
        for r, table in self.tables.items():
            f[self.graph.region_slice(r)] = table.matrix(params).ravel()
        return f

    def backprop_potentials(self, params: ParamVector, context: np.ndarray, cotangent: np.ndarray,
                            grads: Optional[ParamVector] = None) -> ParamVector:
        """
        Accumulate cotangent . d f / d w into a gradient vector.

        Args:
            params: Model parameters
            context: Conditioning input
            cotangent: Vector of length D
            grads: Gradient vector to accumulate into (a fresh one when omitted)

        Returns:
            The gradient vector
        """
        grads = ParamVector.zeros(self.param_layout) if grads is None else grads
        cotangent = self.graph.check_vector(cotangent, "potential cotangent")
        context = self._check_context(context)
        unary_cotangent = cotangent[:self.n_unary_slots]
        if np.any(unary_cotangent):
            if self.unary_mode == UnaryMode.PER_VARIABLE:
                unary_cotangent = unary_cotangent.reshape(self.graph.K, -1)
            _, unary_grads = self.unary_net.vjp(params, context, unary_cotangent)
            grads.accumulate(unary_grads)
        for r, table in self.tables.items():
            table.accumulate_grad(grads, self.graph.region_table(cotangent, r))
        return grads

    def _check_context(self, context: np.ndarray) -> np.ndarray:
        context = np.asarray(context, dtype=np.float64)
        expected = ((self.graph.K, self.unary_net.in_dim) if self.unary_mode == UnaryMode.PER_VARIABLE
                    else (self.unary_net.in_dim,))
        if context.shape != expected:
            raise StructuralException(f"Context has shape {context.shape}, expected {expected}")
        return context

    def linear_coefficients(self, params: ParamVector) -> Optional[np.ndarray]:
        return self.top.linear_coefficients(params, self.graph.D)

    def resolve_mode(self, params: ParamVector, mode: str) -> str:
        """
        Map ``auto`` to a concrete inference mode and check the mode fits the model.

        Raises:
            StructuralException: If a MAP mode is asked of a nonlinear top, or exact-dp of a loopy graph
        """
        linear = self.linear_coefficients(params) is not None
        if mode == InferenceMode.AUTO:
            return InferenceMode.MESSAGE_PASSING if linear else InferenceMode.SADDLE
        if mode not in InferenceMode.ALL:
            raise StructuralException(f"Unknown inference mode: {mode}")
        if mode in (InferenceMode.EXACT_DP, InferenceMode.MESSAGE_PASSING) and not linear:
            raise StructuralException(f"Inference mode {mode} requires a linear top, got {type(self.top).__name__}")
        if mode == InferenceMode.EXACT_DP and not self.graph.is_chain():
            raise StructuralException("Inference mode exact-dp requires a chain graph")
        return mode

    def run_inference(self, params: ParamVector, f: np.ndarray, mode: str,
                      config: Optional[SaddleConfig] = None, loss: Optional[np.ndarray] = None,
                      lam0: Optional[np.ndarray] = None, y0: Optional[np.ndarray] = None) -> InferenceResult:
        """
        Decode argmax_x T(H(x)) (+ loss) with one of the exact-dp, message-passing or saddle procedures.

        Args:
            params: Model parameters
            f: Potential vector
            mode: Inference mode, or auto
            config: Saddle and message-passing controls
            loss: Optional loss-augmentation vector
            lam0: Warm-start multipliers for the saddle procedure
            y0: Warm-start primal vector for the saddle procedure

        Returns:
            The inference result

        Raises:
            StructuralException: If the mode does not fit the model
        """
        mode = self.resolve_mode(params, mode)
        config = config or SaddleConfig()
        if mode == InferenceMode.SADDLE:
            return infer(self.graph, f, self.top, params, config, lam0=lam0, y0=y0, loss=loss)
        coefficients = self.linear_coefficients(params)
        if mode == InferenceMode.MESSAGE_PASSING:
            return map_infer(self.graph, f, coefficients, config, loss=loss)
        if mode == InferenceMode.EXACT_DP:
            value, x_hat = map_chain_dp(self.graph, theta_from(coefficients, f, loss))
            return InferenceResult(
                messages=MessageSet(self.graph),
                lam=coefficients.copy(),
                y=self.graph.mask(f, x_hat),
                x_hat=x_hat,
                lam_bar=coefficients.copy(),
                dual_value=value,
                duality_gap=0.0,
            )
        raise StructuralException(f"Inference mode {mode} does not return an InferenceResult")
