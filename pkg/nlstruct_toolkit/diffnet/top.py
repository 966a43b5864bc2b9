"""
Top transformations T(y, w) mapping a potential vector to a scalar score.
"""
from typing import Optional, Tuple

import numpy as np

from ..constants import InitScheme
from ..exceptions import StructuralException
from .network import DiffNet
from .params import ParamVector


class TopTransform:
    """
    Base class for top transformations.

    Subclasses provide the value, the vector-Jacobian product with respect to both
    the input vector y and their own parameter blocks, and, when T is linear in y,
    the coefficient vector of that linear form.
    """
    param_layout: Tuple[Tuple[str, Tuple[int, ...]], ...] = ()

    def init(self, seed: int = 0) -> ParamVector:
        return ParamVector.zeros(self.param_layout)

    def value(self, params: ParamVector, y: np.ndarray) -> float:
        raise NotImplementedError

    def vjp(self, params: ParamVector, y: np.ndarray,
            cotangent: float = 1.0) -> Tuple[np.ndarray, ParamVector]:
        raise NotImplementedError

    def grad_y(self, params: ParamVector, y: np.ndarray) -> np.ndarray:
        """Gradient with respect to y alone."""
        grad_y, _ = self.vjp(params, y)
        return grad_y

    def linear_coefficients(self, params: ParamVector, dim: int) -> Optional[np.ndarray]:
        """Coefficients a with T(y) = a^T y, or None when T is not linear."""
        return None


class SumTop(TopTransform):
    """T(y) = 1^T y, the classical summed score."""

    def value(self, params, y):
        return float(np.sum(y))

    def vjp(self, params, y, cotangent=1.0):
        return np.full(np.shape(y), float(cotangent)), ParamVector.zeros(())

    def linear_coefficients(self, params, dim):
        return np.ones(dim)


class LinearTop(TopTransform):
    """T(y) = w^T y with w initialised to all ones."""

    def __init__(self, dim: int, name: str = "top"):
        self.dim = dim
        self.block_name = f"{name}.w"
        self.param_layout = ((self.block_name, (dim,)),)

    def init(self, seed: int = 0) -> ParamVector:
        params = ParamVector.zeros(self.param_layout)
        params.block(self.block_name)[...] = 1.0
        return params

    def _weights(self, params: ParamVector, y: np.ndarray) -> np.ndarray:
        weights = params.block(self.block_name)
        if np.shape(y) != weights.shape:
            raise StructuralException(f"LinearTop expects length {self.dim}, got {np.shape(y)}")
        return weights

    def value(self, params, y):
        return float(self._weights(params, y) @ y)

    def vjp(self, params, y, cotangent=1.0):
        weights = self._weights(params, y)
        grads = ParamVector.zeros(self.param_layout)
        grads.block(self.block_name)[...] = cotangent * np.asarray(y, dtype=np.float64)
        return cotangent * weights.copy(), grads

    def grad_y(self, params, y):
        return self._weights(params, y).copy()

    def linear_coefficients(self, params, dim):
        return params.block(self.block_name).copy()


class MLPTop(TopTransform):
    """T(y) = net(y / input_scale) for a DiffNet with scalar output."""

    def __init__(self, net: DiffNet, input_scale: float = 1.0,
                 init_scheme: str = InitScheme.IDENTITY_ONES):
        if net.out_dim != 1:
            raise StructuralException(f"MLPTop needs a scalar-output net, got out_dim={net.out_dim}")
        if input_scale <= 0:
            raise StructuralException("input_scale must be positive")
        self.net = net
        self.input_scale = float(input_scale)
        self.init_scheme = init_scheme
        self.param_layout = net.param_layout

    def init(self, seed: int = 0) -> ParamVector:
        return self.net.init(self.init_scheme, seed)

    def value(self, params, y):
        return float(self.net.forward(params, np.asarray(y) / self.input_scale)[0])

    def vjp(self, params, y, cotangent=1.0):
        grad_input, grads = self.net.vjp(params, np.asarray(y) / self.input_scale,
                                         np.array([float(cotangent)]))
        return grad_input / self.input_scale, grads

    def grad_y(self, params, y):
        grad_input = self.net.input_vjp(params, np.asarray(y) / self.input_scale, np.ones(1))
        return grad_input / self.input_scale


class QuadraticTop(TopTransform):
    """T(y) = -1/2 ||y - center||^2, a parameter-free concave top."""

    def __init__(self, center: np.ndarray):
        self.center = np.asarray(center, dtype=np.float64)

    def value(self, params, y):
        diff = np.asarray(y) - self.center
        return float(-0.5 * diff @ diff)

    def vjp(self, params, y, cotangent=1.0):
        return cotangent * (self.center - np.asarray(y)), ParamVector.zeros(())
