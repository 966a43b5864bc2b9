"""
NLStruct Toolkit - structured prediction with a nonlinear transformation on top of structured potentials.

This package provides differentiable potential networks, region-graph bookkeeping,
LP-relaxation MAP inference, saddle-point inference through a top transformation,
structured max-margin learning, synthetic benchmark tasks and a command line.
"""

__version__ = "0.1.0"
