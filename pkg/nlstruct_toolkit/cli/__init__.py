"""
Command-line surface: run configurations, checkpoints, run directories and experiment commands.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .dao import BaseDao, RunDirectoryDao
from .serializers import (
    BenchSpec,
    EvalSpec,
    GraphSpec,
    ModelSpec,
    RunConfig,
    TaskSection,
    TopSpec,
    load_run_config,
    parse_run_config,
)
from .service import ExperimentService, bench_table, build_graph, build_model, build_top

__all__ = [
    'Checkpoint',
    'load_checkpoint',
    'save_checkpoint',
    'BaseDao',
    'RunDirectoryDao',
    'BenchSpec',
    'EvalSpec',
    'GraphSpec',
    'ModelSpec',
    'RunConfig',
    'TaskSection',
    'TopSpec',
    'load_run_config',
    'parse_run_config',
    'ExperimentService',
    'bench_table',
    'build_graph',
    'build_model',
    'build_top',
]
