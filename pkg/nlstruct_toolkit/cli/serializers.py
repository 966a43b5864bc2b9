"""
Serializers for run configurations.
"""
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..constants import (
    ActivationKind,
    InferenceMode,
    InitScheme,
    PairSharing,
    StageKind,
    SymmetryMode,
    TaskKind,
    TopKind,
    UnaryMode,
)
from ..exceptions import ArtifactIOException, ConfigurationException
from ..inference import SaddleConfig, SpenConfig
from ..learning import StageSpec, TrainConfig
from ..tasks import MultilabelTaskSpec, WordTaskSpec


def _one_of(value: str, allowed, what: str) -> str:
    if value not in allowed:
        raise ValueError(f"{what} must be one of {list(allowed)}, got {value!r}")
    return value


# Graph, model and NLTop defaults per task; values a config states take precedence
TASK_DEFAULTS: Dict[str, Dict[str, Any]] = {
    TaskKind.WORDS: {
        "graph": {"kind": "chain"},
        "model": {
            "unary_hidden": [128],
            "unary_activation": ActivationKind.RELU,
            "pair_sharing": PairSharing.SHARED,
            "symmetry_mode": SymmetryMode.NONE,
            "top": {"kind": TopKind.MLP, "activation": ActivationKind.SIGMOID, "init": InitScheme.IDENTITY_ONES},
        },
        "bench": {"nltop": {"kind": TopKind.MLP, "activation": ActivationKind.SIGMOID}},
    },
    TaskKind.MULTILABEL: {
        "graph": {"kind": "selected-pairs"},
        "model": {
            "unary_hidden": [64],
            "unary_activation": ActivationKind.RELU,
            "pair_sharing": PairSharing.PER_EDGE,
            "symmetry_mode": SymmetryMode.DIAG_OFFDIAG,
            "top": {"kind": TopKind.MLP, "activation": ActivationKind.LEAKY_RELU, "slope": 0.25,
                    "init": InitScheme.IDENTITY_ONES},
        },
        "bench": {"nltop": {"kind": TopKind.MLP, "activation": ActivationKind.LEAKY_RELU, "slope": 0.25}},
    },
}


def merge_defaults(defaults: Dict[str, Any], data: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively lay ``data`` over ``defaults``; values in ``data`` win."""
    merged = dict(defaults)
    for key, value in data.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_defaults(merged[key], value)
        else:
            merged[key] = value
    return merged


class TaskSection(BaseModel):
    """Which benchmark task to generate and its parameters."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["words", "multilabel"] = Field(TaskKind.WORDS, description="Task kind")
    words: WordTaskSpec = Field(default_factory=WordTaskSpec.reduced, description="Word task parameters")
    multilabel: MultilabelTaskSpec = Field(default_factory=MultilabelTaskSpec, description="Multilabel task parameters")


class GraphSpec(BaseModel):
    """Region structure over the task's variables."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["unary", "chain", "second-order", "fully-connected", "selected-pairs", "pairs"] = Field(
        "chain", description="selected-pairs keeps the task's pair_budget most co-occurring label pairs")
    pairs: Optional[List[List[int]]] = Field(None, description="Explicit pair list for kind 'pairs'")

    @model_validator(mode="after")
    def check_pairs(self) -> "GraphSpec":
        if self.kind == "pairs" and not self.pairs:
            raise ValueError("kind 'pairs' needs a non-empty pairs list")
        return self


class TopSpec(BaseModel):
    """Top transformation applied to the masked potential vector."""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(TopKind.NONE, description="none (classical sum), linear or mlp")
    hidden: Optional[int] = Field(None, ge=1, description="Hidden width of the mlp top; the potential size when omitted")
    activation: str = Field(ActivationKind.SIGMOID, description="Hidden activation of the mlp top")
    slope: float = Field(0.25, gt=0, description="Negative slope of leaky-relu")
    init: str = Field(InitScheme.IDENTITY_ONES, description="Initialization of the mlp top")
    input_scale: float = Field(1.0, gt=0, description="Potentials are divided by this before the top")

    @model_validator(mode="after")
    def check_choices(self) -> "TopSpec":
        _one_of(self.kind, TopKind.ALL, "top.kind")
        _one_of(self.activation, ActivationKind.ALL, "top.activation")
        _one_of(self.init, InitScheme.ALL, "top.init")
        return self


class ModelSpec(BaseModel):
    """Unary net, pairwise tables and top transformation."""
    model_config = ConfigDict(extra="forbid")

    unary_hidden: List[int] = Field(default_factory=list, description="Hidden widths of the unary net")
    unary_activation: str = Field(ActivationKind.RELU, description="Hidden activation of the unary net")
    unary_mode: Optional[str] = Field(None, description="per-variable or global; follows the task when omitted")
    pair_sharing: str = Field(PairSharing.SHARED, description="none, shared or per-edge pair tables")
    symmetry_mode: str = Field(SymmetryMode.NONE, description="Parameter tying inside pair tables")
    top: TopSpec = Field(default_factory=TopSpec)

    @model_validator(mode="after")
    def check_choices(self) -> "ModelSpec":
        _one_of(self.unary_activation, ActivationKind.ALL, "model.unary_activation")
        if self.unary_mode is not None:
            _one_of(self.unary_mode, UnaryMode.ALL, "model.unary_mode")
        _one_of(self.pair_sharing, PairSharing.ALL, "model.pair_sharing")
        _one_of(self.symmetry_mode, SymmetryMode.ALL, "model.symmetry_mode")
        return self


class EvalSpec(BaseModel):
    """Decoding used by eval, infer and per-epoch validation."""
    model_config = ConfigDict(extra="forbid")

    mode: str = Field(InferenceMode.AUTO, description="auto, exact-dp, message-passing, saddle or spen-relaxed")
    saddle: SaddleConfig = Field(default_factory=SaddleConfig)
    spen: SpenConfig = Field(default_factory=SpenConfig)
    threads: int = Field(1, ge=1)

    @model_validator(mode="after")
    def check_mode(self) -> "EvalSpec":
        _one_of(self.mode, InferenceMode.ALL + (InferenceMode.AUTO,), "eval.mode")
        return self


class BenchSpec(BaseModel):
    """Baseline ladder: Unary, DeepStruct, LinearTop and NLTop trained in stages."""
    model_config = ConfigDict(extra="forbid")

    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    unary_epochs: Optional[int] = Field(None, ge=1, description="Epochs of the unary stage")
    pairwise_epochs: Optional[int] = Field(None, ge=1, description="Epochs of the pairwise stage")
    top_epochs: Optional[int] = Field(None, ge=1, description="Epochs of the top stages")
    nltop: TopSpec = Field(default_factory=lambda: TopSpec(kind=TopKind.MLP), description="Top of the NLTop row")
    spen_row: bool = Field(True, description="Add relaxed inference on the NLTop model for binary tasks")


class RunConfig(BaseModel):
    """A complete experiment configuration."""
    model_config = ConfigDict(extra="forbid")

    task: TaskSection = Field(default_factory=TaskSection)
    graph: GraphSpec = Field(default_factory=GraphSpec)
    model: ModelSpec = Field(default_factory=ModelSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    stages: List[StageSpec] = Field(default_factory=list, description="Staged plan; a single joint stage when empty")
    eval: EvalSpec = Field(default_factory=EvalSpec)
    bench: BenchSpec = Field(default_factory=BenchSpec)
    seed: int = Field(0, description="Seed of the parameter initialization")
    output_dir: str = Field("runs/default", description="Run directory")

    @model_validator(mode="before")
    @classmethod
    def apply_task_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        task = data.get("task") or {}
        kind = task.get("kind", TaskKind.WORDS) if isinstance(task, dict) else getattr(task, "kind", None)
        defaults = TASK_DEFAULTS.get(kind) if isinstance(kind, str) else None
        if defaults is None:
            return data
        merged = dict(data)
        for section, values in defaults.items():
            current = data.get(section, {})
            if isinstance(current, dict):
                merged[section] = merge_defaults(values, current)
        return merged

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with the initialization and shuffle seeds replaced."""
        return self.model_copy(update={"seed": seed, "train": self.train.model_copy(update={"seed": seed})})

    def with_output_dir(self, output_dir: Union[str, Path]) -> "RunConfig":
        return self.model_copy(update={"output_dir": str(output_dir)})

    def plan(self) -> List[StageSpec]:
        return list(self.stages) or [StageSpec(kind=StageKind.JOINT)]

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def model_hash(self) -> str:
        """Hash of everything that determines the parameter layout."""
        payload = {"task": self.task.kind, "graph": self.graph.model_dump(mode="json"),
                   "model": self.model.model_dump(mode="json")}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _validation_message(error: ValidationError) -> ConfigurationException:
    first = error.errors()[0]
    field = ".".join(str(part) for part in first["loc"])
    return ConfigurationException(f"Invalid config field '{field}': {first['msg']}", field=field)


def parse_run_config(text: str) -> RunConfig:
    """
    Parse a JSON run configuration.

    Raises:
        ConfigurationException: With the line of a syntax error, or the dotted path of an invalid field
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationException(f"Config is not valid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise _validation_message(e) from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOException(f"Cannot read config {path}: {e}") from e
    return parse_run_config(text)
