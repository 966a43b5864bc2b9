"""
Constants shared across the toolkit.
"""


class ActivationKind:
    """Activation kinds understood by DiffNet."""
    RELU = "relu"
    LEAKY_RELU = "leaky-relu"
    SIGMOID = "sigmoid"
    HARDTANH = "hardtanh"
    IDENTITY = "identity"

    ALL = (RELU, LEAKY_RELU, SIGMOID, HARDTANH, IDENTITY)


class InitScheme:
    """Parameter initialization schemes."""
    GLOROT_UNIFORM = "glorot-uniform"
    IDENTITY_ONES = "identity-ones"
    ZEROS = "zeros"

    ALL = (GLOROT_UNIFORM, IDENTITY_ONES, ZEROS)


class SymmetryMode:
    """Parameter tying inside a pairwise table."""
    NONE = "none"
    DIAG_OFFDIAG = "diag-offdiag"

    ALL = (NONE, DIAG_OFFDIAG)


class InferenceMode:
    """Decoding procedures available to evaluation and training."""
    EXACT_DP = "exact-dp"
    MESSAGE_PASSING = "message-passing"
    SADDLE = "saddle"
    SPEN_RELAXED = "spen-relaxed"
    AUTO = "auto"

    ALL = (EXACT_DP, MESSAGE_PASSING, SADDLE, SPEN_RELAXED)


class UnaryMode:
    """How the unary net consumes the conditioning input."""
    PER_VARIABLE = "per-variable"
    GLOBAL = "global"

    ALL = (PER_VARIABLE, GLOBAL)


class PairSharing:
    """How pair regions map to pairwise tables."""
    NONE = "none"
    SHARED = "shared"
    PER_EDGE = "per-edge"

    ALL = (NONE, SHARED, PER_EDGE)


class StageKind:
    """Stages of the staged training ladder."""
    UNARY_ONLY = "unary-only"
    PAIRWISE_GIVEN_UNARY = "pairwise-given-unary"
    TOP_GIVEN_POTENTIALS = "top-given-potentials"
    JOINT = "joint"

    ALL = (UNARY_ONLY, PAIRWISE_GIVEN_UNARY, TOP_GIVEN_POTENTIALS, JOINT)


class TopKind:
    """Top transformation families selectable from a config."""
    NONE = "none"
    LINEAR = "linear"
    MLP = "mlp"

    ALL = (NONE, LINEAR, MLP)


class TaskKind:
    """Benchmark task kinds; values are also the on-disk task codes."""
    WORDS = "words"
    MULTILABEL = "multilabel"

    CODES = {WORDS: 0, MULTILABEL: 1}


class BlockPrefix:
    """Name prefixes of the parameter blocks of a structured model."""
    UNARY = "unary"
    PAIR = "pair"
    TOP = "top"

    ALL = (UNARY, PAIR, TOP)


# Tolerance used when checking that a block update did not increase the dual
MONOTONE_TOLERANCE = 1e-9

# Largest joint configuration space the brute-force oracle enumerates
BRUTEFORCE_LIMIT = 10 ** 6
