"""
Differentiable building blocks: parameter vectors, feed-forward nets, pairwise tables and top transformations.
"""

from .network import Activation, Affine, DiffNet
from .pair_table import PairTable
from .params import ParamVector
from .serializers import dump_blocks, load_blocks
from .top import LinearTop, MLPTop, QuadraticTop, SumTop, TopTransform

__all__ = [
    'Activation',
    'Affine',
    'DiffNet',
    'PairTable',
    'ParamVector',
    'dump_blocks',
    'load_blocks',
    'TopTransform',
    'SumTop',
    'LinearTop',
    'MLPTop',
    'QuadraticTop',
]
