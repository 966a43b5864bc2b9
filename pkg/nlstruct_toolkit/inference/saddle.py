"""
Primal-dual saddle-point inference coupling a top transformation to the relaxed MAP dual.

Solves min_lambda ( max_y { T(y) - lambda^T y } + H^D(mu*, lambda) ) with a proximal
step on y, a descent step on lambda, extrapolation lambda_bar = 2 lambda_i - lambda_{i-1},
and averaging over the last n/2 iterates.
"""
import logging
from typing import Optional

import numpy as np

from ..diffnet import ParamVector, TopTransform
from ..exceptions import NumericalFailureException
from ..structure import RegionGraph
from .mapsolver import decode, dual_value, grad_lambda, minimize_dual, theta_from
from .models import InferenceResult, MessageSet, ProxResult, SaddleConfig, TraceRow

# Set up logging
logger = logging.getLogger(__name__)


def prox_y(top: TopTransform, params: ParamVector, lam_bar: np.ndarray, y_prev: np.ndarray,
           alpha_y: float, config: Optional[SaddleConfig] = None) -> ProxResult:
    """
    Approximately solve argmax_y { T(y) - lam_bar^T y - ||y - y_prev||^2 / (2 alpha_y) }.

    Iterates y <- y + step * alpha_y * r with the first-order residual
    r = grad T(y) - lam_bar - (y - y_prev) / alpha_y, i.e. the damped fixed point
    y = y_prev + alpha_y (grad T(y) - lam_bar).

    Args:
        top: Top transformation
        params: Its parameters
        lam_bar: Extrapolated multipliers
        y_prev: Previous primal iterate (prox center)
        alpha_y: Proximal step size
        config: Inner-loop controls

    Returns:
        The last iterate, its residual sup-norm, the iterations used and whether the tolerance was met

    Raises:
        NumericalFailureException: If an iterate becomes non-finite
    """
    config = config or SaddleConfig()
    y = np.array(y_prev, dtype=np.float64, copy=True)
    residuals = []
    residual = np.inf
    for iteration in range(config.prox_max_iters + 1):
        step = top.grad_y(params, y) - lam_bar - (y - y_prev) / alpha_y
        residual = float(np.max(np.abs(step))) if step.size else 0.0
        residuals.append(residual)
        if not np.isfinite(residual):
            raise NumericalFailureException("Non-finite residual in the y prox solve",
                                            trace=residuals, iteration=iteration)
        if residual <= config.prox_tol:
            return ProxResult(y=y, residual=residual, iterations=iteration, converged=True)
        if iteration == config.prox_max_iters:
            break
        y = y + config.prox_step * alpha_y * step
    return ProxResult(y=y, residual=residual, iterations=config.prox_max_iters, converged=False)


def saddle_objective(y: np.ndarray, lam: np.ndarray, messages: MessageSet, theta: np.ndarray,
                     top: TopTransform, params: ParamVector) -> float:
    """T(y) - lambda^T y + H^D(mu, theta), with theta built from the same lambda."""
    return float(top.value(params, y) - lam @ y + dual_value(messages, theta))


def infer(graph: RegionGraph, f: np.ndarray, top: TopTransform, params: ParamVector,
          config: Optional[SaddleConfig] = None, lam0: Optional[np.ndarray] = None,
          y0: Optional[np.ndarray] = None, loss: Optional[np.ndarray] = None) -> InferenceResult:
    """
    Run the saddle-point inference procedure.

    Args:
        graph: Region graph
        f: Potential vector
        top: Top transformation
        params: Parameters of the top transformation
        config: Step sizes and loop controls
        lam0: Initial multipliers (all ones when omitted)
        y0: Initial primal vector (belief-consistent warm start when omitted)
        loss: Optional loss-augmentation vector added to theta

    Returns:
        Final messages, averaged lambda and y, the decoded assignment and diagnostics

    Raises:
        NumericalFailureException: If an iterate becomes non-finite
    """
    config = config or SaddleConfig()
    f = graph.check_vector(f, "potential vector")
    if config.alpha_y * config.alpha_lambda > 1.0:
        logger.warning(f"Step product alpha_y * alpha_lambda = {config.alpha_y * config.alpha_lambda:.3g} exceeds 1")

    lam = np.ones(graph.D) if lam0 is None else graph.check_vector(lam0, "lambda0").copy()
    theta = theta_from(lam, f, loss)
    messages = minimize_dual(graph, theta, config.mplp_max_sweeps, config.mplp_tol).messages
    y = grad_lambda(messages, theta, f) if y0 is None else graph.check_vector(y0, "y0").copy()
    lam_bar = lam.copy()

    half = config.n // 2
    trace = []
    lam_iterates = []
    y_iterates = []
    prox_limit_hits = 0
    for iteration in range(1, config.n + 1):
        prox = prox_y(top, params, lam_bar, y, config.alpha_y, config)
        if not prox.converged:
            prox_limit_hits += 1
        theta = theta_from(lam, f, loss)
        lam_new = lam - config.alpha_lambda * (grad_lambda(messages, theta, f) - prox.y)
        lam_bar = 2.0 * lam_new - lam
        step_norm = float(np.linalg.norm(lam_new - lam))
        lam, y = lam_new, prox.y
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(y))):
            raise NumericalFailureException(f"Non-finite iterate at saddle iteration {iteration}",
                                            trace=trace, iteration=iteration)
        objective = saddle_objective(y, lam, messages, theta_from(lam, f, loss), top, params)
        trace.append(TraceRow(iteration, objective, prox.residual, step_norm, prox.iterations))
        logger.debug(f"Saddle iteration {iteration}: objective={objective:.8g}, step={step_norm:.3e}")
        if iteration > config.n - half:
            lam_iterates.append(lam)
            y_iterates.append(y)
        if config.resolve_mu_every and iteration % config.resolve_mu_every == 0 and iteration < config.n:
            messages = minimize_dual(graph, theta_from(lam, f, loss), config.mplp_max_sweeps,
                                     config.mplp_tol, init=messages).messages

    if prox_limit_hits:
        logger.debug(f"Prox solve hit its iteration limit {prox_limit_hits} times")
    final_theta = theta_from(lam_bar, f, loss)
    final = minimize_dual(graph, final_theta, config.mplp_max_sweeps, config.mplp_tol)
    x_hat = decode(final.messages, final_theta)
    gap = final.value - graph.score_decomposed(final_theta, x_hat)
    return InferenceResult(
        messages=final.messages,
        lam=np.mean(np.stack(lam_iterates), axis=0),
        y=np.mean(np.stack(y_iterates), axis=0),
        x_hat=x_hat,
        lam_bar=lam_bar,
        dual_value=final.value,
        duality_gap=float(gap),
        trace=trace,
        lam_iterates=lam_iterates,
        y_iterates=y_iterates,
        prox_limit_hits=prox_limit_hits,
    )


def map_infer(graph: RegionGraph, f: np.ndarray, coefficients: np.ndarray,
              config: Optional[SaddleConfig] = None, loss: Optional[np.ndarray] = None) -> InferenceResult:
    """
    Direct MAP for a linear top T(y) = a^T y: message passing on theta = a * f (+ loss).

    Returns an InferenceResult with lambda = a and y = H(x_hat) so callers can treat it
    like a saddle-point result.
    """
    config = config or SaddleConfig()
    f = graph.check_vector(f, "potential vector")
    theta = theta_from(coefficients, f, loss)
    solution = minimize_dual(graph, theta, config.mplp_max_sweeps, config.mplp_tol)
    x_hat = decode(solution.messages, theta)
    return InferenceResult(
        messages=solution.messages,
        lam=np.asarray(coefficients, dtype=np.float64).copy(),
        y=graph.mask(f, x_hat),
        x_hat=x_hat,
        lam_bar=np.asarray(coefficients, dtype=np.float64).copy(),
        dual_value=solution.value,
        duality_gap=float(solution.value - graph.score_decomposed(theta, x_hat)),
    )
