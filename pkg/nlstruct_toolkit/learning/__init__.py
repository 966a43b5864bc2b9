"""
Structured max-margin learning over unary nets, pairwise tables and top transformations.
"""

from .gradcheck import BlockCheck, check_gradients, gradcheck_table, margin_value
from .models import EpochRecord, Example, MarginTerms, StagedOutcome, StageSpec, TrainConfig, history_table
from .structured_model import StructuredModel
from .trainer import StructuredTrainer, loss_vector, stage_mask, staged_training

__all__ = [
    'TrainConfig',
    'StageSpec',
    'Example',
    'MarginTerms',
    'EpochRecord',
    'StagedOutcome',
    'history_table',
    'StructuredModel',
    'StructuredTrainer',
    'loss_vector',
    'stage_mask',
    'staged_training',
    'BlockCheck',
    'check_gradients',
    'gradcheck_table',
    'margin_value',
]
