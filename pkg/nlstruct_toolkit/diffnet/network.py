"""
Minimal reverse-mode differentiable feed-forward networks.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from ..constants import ActivationKind, InitScheme
from ..exceptions import StructuralException
from .params import ParamVector


@dataclass(frozen=True)
class Affine:
    """Fully connected layer u -> W u + b with W of shape (out_dim, in_dim)."""
    in_dim: int
    out_dim: int


@dataclass(frozen=True)
class Activation:
    """Elementwise nonlinearity."""
    kind: str
    slope: float = 0.25

    def __post_init__(self):
        if self.kind not in ActivationKind.ALL:
            raise StructuralException(f"Unknown activation kind: {self.kind}")

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self.kind == ActivationKind.RELU:
            return np.maximum(z, 0.0)
        if self.kind == ActivationKind.LEAKY_RELU:
            return np.where(z > 0, z, self.slope * z)
        if self.kind == ActivationKind.SIGMOID:
            return expit(z)
        if self.kind == ActivationKind.HARDTANH:
            return np.clip(z, -1.0, 1.0)
        return z.copy()

    def derivative(self, z: np.ndarray, out: np.ndarray) -> np.ndarray:
        """Derivative at pre-activation z, given the activation output."""
        if self.kind == ActivationKind.RELU:
            return (z > 0).astype(np.float64)
        if self.kind == ActivationKind.LEAKY_RELU:
            return np.where(z > 0, 1.0, self.slope)
        if self.kind == ActivationKind.SIGMOID:
            return out * (1.0 - out)
        if self.kind == ActivationKind.HARDTANH:
            return (np.abs(z) < 1.0).astype(np.float64)
        return np.ones_like(z)


Layer = Union[Affine, Activation]


class DiffNet:
    """
    A chain of affine layers and activations with exact vector-Jacobian products.

    Parameters are not stored on the network; they live in a ParamVector whose
    blocks are named ``<name>.<layer index>.weight`` and ``<name>.<layer index>.bias``.
    Inputs may be a single vector or a batch of row vectors.
    """

    def __init__(self, layers: Sequence[Layer], name: str = "net"):
        """
        Initialize the network descriptor.

        Args:
            layers: Ordered layer descriptors
            name: Prefix of the parameter block names

        Raises:
            StructuralException: If adjacent affine dimensions disagree
        """
        self.layers: Tuple[Layer, ...] = tuple(layers)
        self.name = name
        affines = [layer for layer in self.layers if isinstance(layer, Affine)]
        if not affines:
            raise StructuralException("A DiffNet needs at least one Affine layer")
        for previous, current in zip(affines, affines[1:]):
            if previous.out_dim != current.in_dim:
                raise StructuralException(
                    f"Layer dimensions disagree: {previous.out_dim} -> {current.in_dim}")
        self.in_dim = affines[0].in_dim
        self.out_dim = affines[-1].out_dim

    def __repr__(self):
        return f"<DiffNet(name={self.name}, {self.in_dim}->{self.out_dim}, layers={len(self.layers)})>"

    @classmethod
    def mlp(cls, sizes: Sequence[int], activation: str, name: str = "net",
            slope: float = 0.25, output_activation: str = ActivationKind.IDENTITY) -> "DiffNet":
        """
        Build a multilayer perceptron.

        Args:
            sizes: Layer widths, input first
            activation: Hidden activation kind
            name: Parameter block prefix
            slope: Negative slope for leaky-relu
            output_activation: Activation after the last affine layer

        Returns:
            The network descriptor
        """
        layers: List[Layer] = []
        for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
            layers.append(Affine(n_in, n_out))
            last = i == len(sizes) - 2
            kind = output_activation if last else activation
            if kind != ActivationKind.IDENTITY:
                layers.append(Activation(kind, slope))
        return cls(layers, name=name)

    def _weight_name(self, index: int) -> str:
        return f"{self.name}.{index}.weight"

    def _bias_name(self, index: int) -> str:
        return f"{self.name}.{index}.bias"

    @property
    def param_layout(self) -> Tuple[Tuple[str, Tuple[int, ...]], ...]:
        layout = []
        for index, layer in enumerate(self.layers):
            if isinstance(layer, Affine):
                layout.append((self._weight_name(index), (layer.out_dim, layer.in_dim)))
                layout.append((self._bias_name(index), (layer.out_dim,)))
        return tuple(layout)

    def _check_input(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim not in (1, 2) or inputs.shape[-1] != self.in_dim:
            raise StructuralException(
                f"{self.name}: expected input of width {self.in_dim}, got shape {inputs.shape}")
        return inputs

    def _forward_with_memory(self, params: ParamVector, inputs: np.ndarray):
        memory = []
        current = inputs
        for index, layer in enumerate(self.layers):
            if isinstance(layer, Affine):
                weight = params.block(self._weight_name(index))
                bias = params.block(self._bias_name(index))
                memory.append(current)
                current = current @ weight.T + bias
            else:
                out = layer.apply(current)
                memory.append((current, out))
                current = out
        return current, memory

    def forward(self, params: ParamVector, inputs: np.ndarray) -> np.ndarray:
        """
        Evaluate the network.

        Args:
            params: Parameter vector holding this network's blocks
            inputs: Input vector or batch of row vectors

        Returns:
            Network output with the same leading shape as the input

        Raises:
            StructuralException: If the input width is wrong
        """
        inputs = self._check_input(inputs)
        output, _ = self._forward_with_memory(params, inputs)
        return output

    def vjp(self, params: ParamVector, inputs: np.ndarray,
            cotangent: np.ndarray) -> Tuple[np.ndarray, ParamVector]:
        """
        Reverse-mode derivative of cotangent . forward(params, inputs).

        Args:
            params: Parameter vector holding this network's blocks
            inputs: Input vector or batch of row vectors
            cotangent: Array shaped like the network output

        Returns:
            Gradient with respect to the input, and with respect to the parameters
            (a ParamVector in this network's layout; batch contributions are summed)

        Raises:
            StructuralException: If the cotangent shape does not match the output
        """
        memory = self._memory_for(params, inputs, cotangent)
        grads = ParamVector.zeros(self.param_layout)
        return self._backward(params, memory, cotangent, grads), grads

    def input_vjp(self, params: ParamVector, inputs: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        """
        Gradient of cotangent . forward(params, inputs) with respect to the input only.

        Equals the first element of ``vjp`` but forms no parameter gradient.

        Raises:
            StructuralException: If the cotangent shape does not match the output
        """
        memory = self._memory_for(params, inputs, cotangent)
        return self._backward(params, memory, cotangent, None)

    def _memory_for(self, params: ParamVector, inputs: np.ndarray, cotangent: np.ndarray) -> list:
        inputs = self._check_input(inputs)
        output, memory = self._forward_with_memory(params, inputs)
        if np.shape(cotangent) != output.shape:
            raise StructuralException(
                f"{self.name}: cotangent shape {np.shape(cotangent)} does not match output {output.shape}")
        return memory

    def _backward(self, params: ParamVector, memory: list, cotangent: np.ndarray,
                  grads: Optional[ParamVector]) -> np.ndarray:
        delta = np.asarray(cotangent, dtype=np.float64)
        for index in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[index]
            if isinstance(layer, Affine):
                weight = params.block(self._weight_name(index))
                if grads is not None:
                    layer_input = memory[index]
                    if delta.ndim == 1:
                        grads.block(self._weight_name(index))[...] = np.outer(delta, layer_input)
                        grads.block(self._bias_name(index))[...] = delta
                    else:
                        grads.block(self._weight_name(index))[...] = delta.T @ layer_input
                        grads.block(self._bias_name(index))[...] = delta.sum(axis=0)
                delta = delta @ weight
            else:
                pre, out = memory[index]
                delta = delta * layer.derivative(pre, out)
        return delta

    def init(self, scheme: str = InitScheme.GLOROT_UNIFORM, seed: int = 0) -> ParamVector:
        """
        Create initial parameters.

        Args:
            scheme: One of glorot-uniform, identity-ones, zeros
            seed: Seed for the random schemes

        Returns:
            A ParamVector in this network's layout

        Raises:
            StructuralException: If the scheme is unknown, or identity-ones is requested
                for a network that is not square-then-row shaped
        """
        params = ParamVector.zeros(self.param_layout)
        if scheme == InitScheme.ZEROS:
            return params
        affine_indices = [i for i, layer in enumerate(self.layers) if isinstance(layer, Affine)]
        if scheme == InitScheme.IDENTITY_ONES:
            if len(affine_indices) != 2:
                raise StructuralException("identity-ones requires exactly two affine layers")
            first, second = (self.layers[i] for i in affine_indices)
            if first.in_dim != first.out_dim:
                raise StructuralException(
                    f"identity-ones requires a square first layer, got {first.in_dim}->{first.out_dim}")
            params.block(self._weight_name(affine_indices[0]))[...] = np.eye(first.in_dim)
            params.block(self._weight_name(affine_indices[1]))[...] = 1.0
            return params
        if scheme == InitScheme.GLOROT_UNIFORM:
            rng = np.random.default_rng(seed)
            for index in affine_indices:
                layer = self.layers[index]
                limit = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
                params.block(self._weight_name(index))[...] = rng.uniform(
                    -limit, limit, size=(layer.out_dim, layer.in_dim))
            return params
        raise StructuralException(f"Unknown init scheme: {scheme}")
