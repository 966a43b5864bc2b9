"""
Pairwise potential tables f_ij(s, t) = W[s, t] with optional parameter tying.
"""
from typing import Tuple

import numpy as np

from ..constants import SymmetryMode
from ..exceptions import StructuralException
from .params import ParamVector


class PairTable:
    """
    A |X_i| x |X_j| table of pairwise scores.

    Under ``diag-offdiag`` the table owns two parameters, the shared diagonal and
    the shared off-diagonal value; otherwise it owns the full matrix.
    """

    def __init__(self, name: str, n_rows: int, n_cols: int, symmetry_mode: str = SymmetryMode.NONE):
        if symmetry_mode not in SymmetryMode.ALL:
            raise StructuralException(f"Unknown symmetry mode: {symmetry_mode}")
        if n_rows < 1 or n_cols < 1:
            raise StructuralException(f"Pair table {name} needs positive dimensions")
        self.name = name
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.symmetry_mode = symmetry_mode

    def __repr__(self):
        return f"<PairTable(name={self.name}, shape=({self.n_rows}, {self.n_cols}), mode={self.symmetry_mode})>"

    @property
    def block_name(self) -> str:
        return f"{self.name}.W"

    @property
    def param_layout(self) -> Tuple[Tuple[str, Tuple[int, ...]], ...]:
        if self.symmetry_mode == SymmetryMode.DIAG_OFFDIAG:
            return ((self.block_name, (2,)),)
        return ((self.block_name, (self.n_rows, self.n_cols)),)

    def init(self) -> ParamVector:
        """Pair tables start at zero so a fresh structured model scores like its unaries."""
        return ParamVector.zeros(self.param_layout)

    def matrix(self, params: ParamVector) -> np.ndarray:
        """Materialize the full table."""
        block = params.block(self.block_name)
        if self.symmetry_mode == SymmetryMode.DIAG_OFFDIAG:
            table = np.full((self.n_rows, self.n_cols), block[1])
            diag = np.arange(min(self.n_rows, self.n_cols))
            table[diag, diag] = block[0]
            return table
        return block.copy()

    def _check_labels(self, s: int, t: int):
        if not (0 <= s < self.n_rows and 0 <= t < self.n_cols):
            raise StructuralException(
                f"Labels ({s}, {t}) out of range for table {self.name} of shape ({self.n_rows}, {self.n_cols})")

    def eval(self, params: ParamVector, s: int, t: int) -> float:
        """
        Value of the table at labels (s, t).

        Raises:
            StructuralException: If a label is out of range
        """
        self._check_labels(s, t)
        block = params.block(self.block_name)
        if self.symmetry_mode == SymmetryMode.DIAG_OFFDIAG:
            return float(block[0] if s == t else block[1])
        return float(block[s, t])

    def accumulate_grad(self, grads: ParamVector, cotangent: np.ndarray):
        """
        Add a cotangent over the full table into this table's parameter block.

        Args:
            grads: Gradient vector containing this table's block
            cotangent: Array of shape (n_rows, n_cols)
        """
        cotangent = np.asarray(cotangent, dtype=np.float64)
        if cotangent.shape != (self.n_rows, self.n_cols):
            raise StructuralException(
                f"Cotangent shape {cotangent.shape} does not match table {self.name}")
        block = grads.block(self.block_name)
        if self.symmetry_mode == SymmetryMode.DIAG_OFFDIAG:
            diagonal = np.trace(cotangent)
            block[0] += diagonal
            block[1] += cotangent.sum() - diagonal
        else:
            block += cotangent

    def accumulate_entry_grad(self, grads: ParamVector, s: int, t: int, cotangent: float):
        """Add a scalar cotangent on entry (s, t), respecting tied parameters."""
        self._check_labels(s, t)
        block = grads.block(self.block_name)
        if self.symmetry_mode == SymmetryMode.DIAG_OFFDIAG:
            block[0 if s == t else 1] += cotangent
        else:
            block[s, t] += cotangent
