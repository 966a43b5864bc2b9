"""
Benchmark tasks: data generation, dataset files, metrics and evaluation.
"""

from .datasets import Dataset, file_sha256, read_dataset, write_dataset
from .evaluation import SplitEvaluator, evaluate, predict, predict_all
from .glyphs import ALPHABET, glyph, render_letter, transform_image
from .metrics import MetricReport, compute_metrics, macro_f1
from .multilabel import IsingGenerator, MultilabelTaskSpec, cooccurrence_counts, gen_multilabel, select_pairs
from .words import VOCABULARY, WordTaskSpec, decode_word, encode_word, gen_words

__all__ = [
    'Dataset',
    'read_dataset',
    'write_dataset',
    'file_sha256',
    'evaluate',
    'predict',
    'predict_all',
    'SplitEvaluator',
    'ALPHABET',
    'glyph',
    'render_letter',
    'transform_image',
    'MetricReport',
    'compute_metrics',
    'macro_f1',
    'MultilabelTaskSpec',
    'IsingGenerator',
    'gen_multilabel',
    'select_pairs',
    'cooccurrence_counts',
    'VOCABULARY',
    'WordTaskSpec',
    'encode_word',
    'decode_word',
    'gen_words',
]
