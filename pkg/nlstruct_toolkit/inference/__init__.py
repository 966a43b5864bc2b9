"""
Inference: relaxed MAP dual, exact oracles, relaxed-label baseline and saddle-point inference.
"""

from .mapsolver import (
    active_slots,
    beliefs,
    decode,
    dual_value,
    grad_lambda,
    minimize_dual,
    theta_from,
)
from .models import DualSolution, InferenceResult, MessageSet, ProxResult, SaddleConfig, SpenConfig, TraceRow
from .oracles import map_bruteforce, map_chain_dp
from .relaxed import soft_mask, spen_relaxed_infer
from .saddle import infer, map_infer, prox_y, saddle_objective

__all__ = [
    'theta_from',
    'beliefs',
    'dual_value',
    'minimize_dual',
    'decode',
    'grad_lambda',
    'active_slots',
    'map_bruteforce',
    'map_chain_dp',
    'soft_mask',
    'spen_relaxed_infer',
    'prox_y',
    'infer',
    'map_infer',
    'saddle_objective',
    'SaddleConfig',
    'SpenConfig',
    'DualSolution',
    'InferenceResult',
    'MessageSet',
    'ProxResult',
    'TraceRow',
]
