"""
Flat parameter vectors with a named block layout.
"""
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from ..exceptions import StructuralException

Layout = Tuple[Tuple[str, Tuple[int, ...]], ...]


def _normalize_layout(layout: Iterable[Tuple[str, Sequence[int]]]) -> Layout:
    normalized = tuple((str(name), tuple(int(d) for d in shape)) for name, shape in layout)
    names = [name for name, _ in normalized]
    if len(set(names)) != len(names):
        raise StructuralException(f"Duplicate block names in layout: {names}")
    for name, shape in normalized:
        if any(d < 0 for d in shape):
            raise StructuralException(f"Negative dimension in block {name}: {shape}")
    return normalized


class ParamVector:
    """
    A flat float64 array split into named, shaped blocks.

    The layout is fixed at construction; the values may be updated in place by the
    learner. Blocks are returned as reshaped views of the flat array.
    """

    def __init__(self, values: np.ndarray, layout: Iterable[Tuple[str, Sequence[int]]]):
        """
        Initialize the parameter vector.

        Args:
            values: Flat array of parameter values
            layout: Ordered (name, shape) blocks

        Raises:
            StructuralException: If the layout size does not match the values
        """
        self._layout = _normalize_layout(layout)
        self.values = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
        self._offsets: Dict[str, Tuple[int, Tuple[int, ...]]] = {}
        offset = 0
        for name, shape in self._layout:
            self._offsets[name] = (offset, shape)
            offset += int(np.prod(shape, dtype=np.int64))
        if offset != self.values.size:
            raise StructuralException(
                f"Layout describes {offset} values but {self.values.size} were given")

    @property
    def layout(self) -> Layout:
        return self._layout

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self._layout)

    def __len__(self) -> int:
        return self.values.size

    def __contains__(self, name: str) -> bool:
        return name in self._offsets

    def __repr__(self):
        return f"<ParamVector(blocks={len(self._layout)}, size={self.values.size})>"

    @classmethod
    def zeros(cls, layout: Iterable[Tuple[str, Sequence[int]]]) -> "ParamVector":
        layout = _normalize_layout(layout)
        size = sum(int(np.prod(shape, dtype=np.int64)) for _, shape in layout)
        return cls(np.zeros(size), layout)

    def block(self, name: str) -> np.ndarray:
        """
        Get a writable view of a block.

        Args:
            name: Block name

        Returns:
            View of the block reshaped to its declared shape

        Raises:
            StructuralException: If the block does not exist
        """
        try:
            offset, shape = self._offsets[name]
        except KeyError:
            raise StructuralException(f"Unknown parameter block: {name}")
        size = int(np.prod(shape, dtype=np.int64))
        return self.values[offset:offset + size].reshape(shape)

    def block_slice(self, name: str) -> slice:
        if name not in self._offsets:
            raise StructuralException(f"Unknown parameter block: {name}")
        offset, shape = self._offsets[name]
        return slice(offset, offset + int(np.prod(shape, dtype=np.int64)))

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self._layout)

    def zeros_like(self) -> "ParamVector":
        return ParamVector(np.zeros_like(self.values), self._layout)

    def accumulate(self, other: "ParamVector", scale: float = 1.0) -> "ParamVector":
        """
        Add the blocks of another vector into the matching blocks of this one.

        Args:
            other: Vector whose blocks are a subset of this vector's blocks
            scale: Multiplier applied to the added values

        Returns:
            self, for chaining
        """
        for name, _ in other.layout:
            if scale == 1.0:
                self.block(name)[...] += other.block(name)
            else:
                self.block(name)[...] += scale * other.block(name)
        return self

    def prefix_mask(self, prefixes: Iterable[str]) -> np.ndarray:
        """Boolean mask over the flat values selecting blocks whose name starts with any prefix."""
        prefixes = tuple(prefixes)
        mask = np.zeros(self.values.size, dtype=bool)
        for name, _ in self._layout:
            if any(name == p or name.startswith(p + ".") for p in prefixes):
                mask[self.block_slice(name)] = True
        return mask

    def overwrite(self, other: "ParamVector") -> "ParamVector":
        """Copy every block of ``other`` whose name also exists here; other blocks are left alone."""
        for name, shape in other.layout:
            if name in self._offsets and self._offsets[name][1] == shape:
                self.block(name)[...] = other.block(name)
        return self
