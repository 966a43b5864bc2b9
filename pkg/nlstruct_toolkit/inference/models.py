"""
Configuration and result records for inference.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class SaddleConfig(BaseModel):
    """Step sizes and loop controls of the primal-dual saddle-point inference."""
    model_config = ConfigDict(extra="forbid")

    alpha_y: float = Field(0.5, gt=0, description="Proximal step on y")
    alpha_lambda: float = Field(0.5, gt=0, description="Descent step on lambda")
    n: int = Field(100, ge=2, description="Outer iterations; averaging uses the last n/2")
    prox_max_iters: int = Field(50, ge=1, description="Inner iterations of the y prox solve")
    prox_step: float = Field(1.0, gt=0, le=1, description="Relaxation of the inner fixed-point step")
    prox_tol: float = Field(1e-6, gt=0, description="Sup-norm tolerance on the prox first-order residual")
    resolve_mu_every: int = Field(0, ge=0, description="Re-solve messages every m outer iterations (0 = never)")
    mplp_max_sweeps: int = Field(200, ge=1, description="Sweeps of the message solver")
    mplp_tol: float = Field(1e-9, ge=0, description="Stop the message solver when a sweep decreases the dual by less")

    @field_validator("n")
    @classmethod
    def n_must_be_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("n must be even so that the last n/2 iterates can be averaged")
        return value


class SpenConfig(BaseModel):
    """Controls of the relaxed soft-label gradient-ascent baseline."""
    model_config = ConfigDict(extra="forbid")

    steps: int = Field(100, ge=1, description="Ascent steps per restart")
    step_size: float = Field(0.1, gt=0, description="Ascent step size")
    restarts: int = Field(5, ge=1, description="Random initializations; the best rounded output by T is kept")
    seed: int = Field(0, description="Seed of the initializations")


@dataclass
class DualSolution:
    """Result of minimizing the relaxed dual over messages."""
    messages: "MessageSet"
    value: float
    sweeps: int
    trace: List[float] = field(default_factory=list)
    monotone_violations: int = 0


@dataclass
class TraceRow:
    """One outer iteration of the saddle-point loop."""
    iteration: int
    objective: float
    prox_residual: float
    lambda_step_norm: float
    prox_iterations: int


@dataclass
class ProxResult:
    """Outcome of the inner y solve."""
    y: np.ndarray
    residual: float
    iterations: int
    converged: bool


@dataclass
class InferenceResult:
    """Messages, averaged multipliers and primal vector, and the decoded assignment."""
    messages: "MessageSet"
    lam: np.ndarray
    y: np.ndarray
    x_hat: np.ndarray
    lam_bar: np.ndarray
    dual_value: float
    duality_gap: float
    trace: List[TraceRow] = field(default_factory=list)
    lam_iterates: List[np.ndarray] = field(default_factory=list)
    y_iterates: List[np.ndarray] = field(default_factory=list)
    prox_limit_hits: int = 0

    def trace_table(self, delimiter: str = "\t") -> str:
        """Diagnostic trace as a delimited text table."""
        header = delimiter.join(["iteration", "objective", "prox_residual", "lambda_step_norm"])
        rows = [delimiter.join([str(row.iteration), f"{row.objective:.10g}",
                                f"{row.prox_residual:.6g}", f"{row.lambda_step_norm:.6g}"])
                for row in self.trace]
        return "\n".join([header] + rows) + "\n"

    def diagnostics(self) -> Dict[str, float]:
        return {
            "dual_value": self.dual_value,
            "duality_gap": self.duality_gap,
            "prox_limit_hits": float(self.prox_limit_hits),
            "iterations": float(len(self.trace)),
        }


MessageKey = Tuple[int, int]


class MessageSet:
    """
    Dual variables mu_{r->k}(x_k) of the LP relaxation, one table per incidence (r, k).

    Unary regions send no messages.
    """

    def __init__(self, graph, tables: Optional[Dict[MessageKey, np.ndarray]] = None):
        self.graph = graph
        if tables is None:
            tables = {
                (r, k): np.zeros(graph.domains[k])
                for r in graph.higher_order_ids for k in graph.regions[r]}
        self.tables = tables

    def __repr__(self):
        return f"<MessageSet(incidences={len(self.tables)})>"

    def __len__(self) -> int:
        return len(self.tables)

    def copy(self) -> "MessageSet":
        return MessageSet(self.graph, {key: value.copy() for key, value in self.tables.items()})

    def incoming(self, k: int, exclude: Optional[int] = None) -> np.ndarray:
        """Sum of messages sent to variable k, optionally excluding one region."""
        total = np.zeros(self.graph.domains[k])
        for r, _ in self.graph.variable_regions[k]:
            if r != exclude:
                total += self.tables[(r, k)]
        return total
