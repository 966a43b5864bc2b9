"""
Service for experiment commands: data generation, training, evaluation, inference, gradient checks and the baseline bench.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..constants import BlockPrefix, InferenceMode, StageKind, TaskKind, TopKind, UnaryMode
from ..diffnet import DiffNet, LinearTop, MLPTop, ParamVector, SumTop, TopTransform
from ..exceptions import ArtifactIOException, NLStructException, NumericalFailureException, StructuralException
from ..inference import InferenceResult
from ..learning import (
    BlockCheck,
    StageSpec,
    StructuredModel,
    StructuredTrainer,
    check_gradients,
    history_table,
    staged_training,
)
from ..structure import (
    RegionGraph,
    build_chain,
    build_from_pairs,
    build_fully_connected,
    build_second_order,
)
from ..tasks import (
    Dataset,
    MetricReport,
    SplitEvaluator,
    decode_word,
    evaluate,
    gen_multilabel,
    gen_words,
    predict,
    read_dataset,
    select_pairs,
)
from ..tasks.glyphs import IMAGE_SIZE
from .checkpoint import Checkpoint, load_checkpoint
from .dao import RunDirectoryDao
from .serializers import RunConfig, TopSpec, parse_run_config

# Set up logging
logger = logging.getLogger(__name__)

LADDER = ("Unary", "DeepStruct", "LinearTop", "NLTop")
SPEN_ROW = "NLTop (SPENInf)"


def feature_dim(config: RunConfig) -> int:
    if config.task.kind == TaskKind.WORDS:
        return IMAGE_SIZE * IMAGE_SIZE
    return config.task.multilabel.feature_dim


def build_graph(config: RunConfig, train: Dataset) -> RegionGraph:
    """
    Region graph of the configured kind over the task's variables.

    Raises:
        StructuralException: If the graph kind cannot be built for the task
    """
    K, d = train.n_variables, train.n_labels
    kind = config.graph.kind
    if kind == "unary":
        return RegionGraph([d] * K)
    if kind == "chain":
        return build_chain(K, d)
    if kind == "second-order":
        return build_second_order(K, d)
    if kind == "fully-connected":
        return build_fully_connected(K, d)
    if kind == "pairs":
        return build_from_pairs(K, d, config.graph.pairs)
    if config.task.kind != TaskKind.MULTILABEL:
        raise StructuralException("selected-pairs graphs need the multilabel task")
    return build_from_pairs(K, d, select_pairs(train, config.task.multilabel.pair_budget))


def build_top(spec: TopSpec, dim: int) -> TopTransform:
    if spec.kind == TopKind.NONE:
        return SumTop()
    if spec.kind == TopKind.LINEAR:
        return LinearTop(dim, name="top")
    net = DiffNet.mlp([dim, spec.hidden or dim, 1], spec.activation, name="top", slope=spec.slope)
    return MLPTop(net, input_scale=spec.input_scale, init_scheme=spec.init)


def build_model(config: RunConfig, graph: RegionGraph, top: Optional[TopSpec] = None) -> StructuredModel:
    """Structured model of the configured shape over a graph; ``top`` overrides the configured top."""
    spec = config.model
    unary_mode = spec.unary_mode or (UnaryMode.PER_VARIABLE if config.task.kind == TaskKind.WORDS
                                     else UnaryMode.GLOBAL)
    out_dim = graph.domains[0] if unary_mode == UnaryMode.PER_VARIABLE else sum(graph.domains)
    unary = DiffNet.mlp([feature_dim(config)] + list(spec.unary_hidden) + [out_dim], spec.unary_activation,
                        name="unary")
    return StructuredModel(graph, unary, build_top(top or spec.top, graph.D), unary_mode=unary_mode,
                           pair_sharing=spec.pair_sharing, symmetry_mode=spec.symmetry_mode)


@dataclass
class TrainSummary:
    epochs: int
    final_objective: float
    best_val_char_accuracy: Optional[float]
    checkpoint: Path
    histories: List[Tuple[str, list]] = field(default_factory=list)


@dataclass
class InferSummary:
    assignment: np.ndarray
    decoded: str
    result: Optional[InferenceResult]


class ExperimentService:
    """Service for experiment commands over one run directory."""

    def __init__(self, config: RunConfig, dao: Optional[RunDirectoryDao] = None):
        """
        Initialize the experiment service.

        Args:
            config: Run configuration
            dao: Run directory access (the config's output_dir when omitted)
        """
        self.config = config
        self.dao = dao or RunDirectoryDao(config.output_dir)

    @property
    def binary_task(self) -> bool:
        return self.config.task.kind == TaskKind.MULTILABEL

    def _generate(self) -> Dict[str, Dataset]:
        if self.config.task.kind == TaskKind.WORDS:
            return gen_words(self.config.task.words)
        return gen_multilabel(self.config.task.multilabel)

    def _evaluator(self) -> SplitEvaluator:
        return SplitEvaluator(InferenceMode.AUTO, self.config.eval.saddle, self.binary_task, self.config.eval.threads)

    def gen_data(self) -> Dict[str, str]:
        """
        Generate every split into the run directory.

        Returns:
            split -> sha256 of the dataset file

        Raises:
            ArtifactIOException: If the files cannot be written
        """
        try:
            self.dao.write_config(self.config.canonical_json())
            hashes = self.dao.write_datasets(self._generate())
            logger.info(f"Generated {self.config.task.kind} data into {self.dao.root}")
            return hashes
        except NLStructException as e:
            logger.error(f"Error in gen_data service: {e.message}")
            raise

    def load_splits(self, generate_missing: bool = False) -> Dict[str, Dataset]:
        """Read the splits from the run directory, generating them first when asked and absent."""
        if generate_missing and not self.dao.has_dataset("train"):
            self.gen_data()
        return {split: self.dao.read_dataset(split) for split in ("train", "val", "test")}

    def train(self) -> TrainSummary:
        """
        Train the configured model through its staged plan.

        Writes the config snapshot, the history table, checkpoints/final.nlck and
        checkpoints/stage{N}_epoch{E}.nlck at every validation improvement;
        on numerical failure writes checkpoints/last_good.nlck before re-raising.

        Raises:
            NumericalFailureException: If training diverges
            ArtifactIOException: If the datasets are missing
        """
        config = self.config
        try:
            self.dao.write_config(config.canonical_json())
            splits = self.load_splits()
            graph = build_graph(config, splits["train"])
            model = build_model(config, graph)
            plan = config.plan()
            logger.info(f"Training {model!r} with plan {[stage.kind for stage in plan]}")

            def save_best(stage: int, epoch: int, params: ParamVector) -> None:
                self.dao.write_checkpoint(f"stage{stage}_epoch{epoch:03d}", self._checkpoint(graph, params))

            try:
                outcome = staged_training(model, plan, splits["train"].examples(), splits["val"].examples(),
                                          config.train, model.init(config.seed), self._evaluator(), save_best)
            except NumericalFailureException as e:
                if e.last_good is not None:
                    self.dao.write_checkpoint("last_good", self._checkpoint(graph, e.last_good))
                logger.error(f"Training halted on numerical failure: {e.message}")
                raise
            named = [(f"{index + 1}:{stage.kind}", history)
                     for index, (stage, history) in enumerate(zip(plan, outcome.histories))]
            self.dao.write_history(history_table(named))
            path = self.dao.write_checkpoint("final", self._checkpoint(graph, outcome.params, outcome.rng_state))
            last = [history[-1] for history in outcome.histories if history]
            val_scores = [record.val_metrics["char_accuracy"] for history in outcome.histories
                          for record in history if "char_accuracy" in record.val_metrics]
            return TrainSummary(
                epochs=sum(len(history) for history in outcome.histories),
                final_objective=last[-1].objective if last else float("nan"),
                best_val_char_accuracy=max(val_scores) if val_scores else None,
                checkpoint=path,
                histories=named,
            )
        except NLStructException as e:
            logger.error(f"Error in train service: {e.message}")
            raise

    def _checkpoint(self, graph: RegionGraph, params, rng_state: Optional[dict] = None) -> Checkpoint:
        return Checkpoint(graph, self.config.model_hash(), self.config.canonical_json(), params, rng_state)

    @staticmethod
    def restore(checkpoint: Checkpoint) -> Tuple[RunConfig, StructuredModel]:
        """
        Rebuild the run config and model a checkpoint was written with.

        Raises:
            ArtifactIOException: If the embedded config does not match the checkpoint's hash or layout
        """
        try:
            config = parse_run_config(checkpoint.config_json)
        except NLStructException as e:
            raise ArtifactIOException(f"Checkpoint carries an invalid config: {e.message}") from e
        if config.model_hash() != checkpoint.model_hash:
            raise ArtifactIOException("Checkpoint model hash does not match its embedded config")
        model = build_model(config, checkpoint.graph)
        if model.param_layout != checkpoint.params.layout:
            raise ArtifactIOException("Checkpoint parameter layout does not match its model")
        return config, model

    def evaluate(self, checkpoint_path: Union[str, Path], dataset_path: Union[str, Path],
                 mode: Optional[str] = None) -> MetricReport:
        """
        Evaluate a checkpoint on a dataset file and write metrics.tsv.

        Raises:
            StructuralException: If the mode does not fit the model or graph
            ArtifactIOException: If a file is missing or corrupt
        """
        try:
            checkpoint = load_checkpoint(checkpoint_path)
            config, model = self.restore(checkpoint)
            dataset = read_dataset(dataset_path)
            mode = mode or config.eval.mode
            report = evaluate(model, checkpoint.params, dataset.examples(), mode, config.eval.saddle,
                              config.eval.spen, dataset.task == TaskKind.MULTILABEL, config.eval.threads)
            self.dao.write_text("metrics.tsv", report.to_table())
            logger.info(f"Evaluated {len(dataset)} examples with {mode}")
            return report
        except NLStructException as e:
            logger.error(f"Error in evaluate service: {e.message}")
            raise

    def infer(self, checkpoint_path: Union[str, Path], example_path: Union[str, Path],
              mode: Optional[str] = None) -> InferSummary:
        """
        Decode the first example of a dataset file and write its diagnostic trace.

        Raises:
            ArtifactIOException: If a file is missing, corrupt or holds no example
        """
        try:
            checkpoint = load_checkpoint(checkpoint_path)
            config, model = self.restore(checkpoint)
            dataset = read_dataset(example_path)
            if not len(dataset):
                raise ArtifactIOException(f"{example_path} holds no example")
            example = dataset.examples()[0]
            mode = mode or config.eval.mode
            result = None
            if mode == InferenceMode.SPEN_RELAXED:
                assignment = predict(model, checkpoint.params, example, mode, spen=config.eval.spen)
            else:
                f = model.potentials(checkpoint.params, example.context)
                result = model.run_inference(checkpoint.params, f, mode, config.eval.saddle)
                assignment = result.x_hat
                self.dao.write_text("infer_trace.tsv", result.trace_table())
            decoded = _decode(dataset.task, assignment)
            logger.info(f"Decoded {decoded} with {mode}")
            return InferSummary(assignment, decoded, result)
        except NLStructException as e:
            logger.error(f"Error in infer service: {e.message}")
            raise

    def gradcheck(self) -> List[BlockCheck]:
        """
        Check every parameter block of the configured model on one generated example.

        The competing assignment shifts every label by one so both masks select
        different slots everywhere.
        """
        config = self.config
        try:
            task = config.task
            if task.kind == TaskKind.WORDS:
                train = gen_words(task.words.model_copy(update={"train_size": 1, "val_size": 0, "test_size": 0}))["train"]
            else:
                train = gen_multilabel(task.multilabel.model_copy(update={"val_size": 0, "test_size": 0}))["train"]
            graph = build_graph(config, train)
            model = build_model(config, graph)
            params = model.init(config.seed)
            rng = np.random.default_rng(config.seed)
            # small random pair tables and top biases keep gradients off zero and activations off kinks
            pair_mask = params.prefix_mask([BlockPrefix.PAIR])
            params.values[pair_mask] = rng.normal(0.0, 0.1, size=int(pair_mask.sum()))
            for name in params.names:
                if name.startswith(f"{BlockPrefix.TOP}.") and name.endswith(".bias"):
                    bias = params.block(name)
                    bias[...] = rng.normal(0.0, 0.1, size=bias.shape)
            example = train.examples()[0]
            x_hat = (np.asarray(example.labels) + 1) % train.n_labels
            rows = check_gradients(StructuredTrainer(model, config.train), params, example, x_hat, seed=config.seed)
            failed = [row.name for row in rows if not row.passed]
            if failed:
                logger.warning(f"Gradient check failed for blocks {failed}")
            return rows
        except NLStructException as e:
            logger.error(f"Error in gradcheck service: {e.message}")
            raise

    def bench(self) -> Dict[str, Dict[str, float]]:
        """
        Train the Unary, DeepStruct, LinearTop and NLTop ladder per bench seed and report mean test metrics.

        Unary trains the unary net against the classical score, DeepStruct then trains
        the pair tables with the unaries fixed, and both top models train only their
        top on the fixed DeepStruct potentials.
        """
        config = self.config
        bench = config.bench
        try:
            splits = self.load_splits(generate_missing=True)
            train, val, test = (splits[name].examples() for name in ("train", "val", "test"))
            graph = build_graph(config, splits["train"])
            rows: Dict[str, List[Dict[str, float]]] = {name: [] for name in LADDER}
            if self.binary_task and bench.spen_row:
                rows[SPEN_ROW] = []
            evaluator = self._evaluator()

            def score(model, params, mode=InferenceMode.AUTO):
                return evaluate(model, params, test, mode, config.eval.saddle, config.eval.spen,
                                self.binary_task, config.eval.threads).to_dict()

            for seed in bench.seeds:
                run = config.with_seed(seed)
                logger.info(f"Bench seed {seed}")
                base = build_model(run, graph, TopSpec(kind=TopKind.NONE))
                unary = staged_training(base, [StageSpec(kind=StageKind.UNARY_ONLY, epochs=bench.unary_epochs)],
                                        train, val, run.train, base.init(seed), evaluator).params
                rows["Unary"].append(score(base, unary))
                deep = staged_training(base, [StageSpec(kind=StageKind.PAIRWISE_GIVEN_UNARY,
                                                        epochs=bench.pairwise_epochs)],
                                       train, val, run.train, unary, evaluator).params
                rows["DeepStruct"].append(score(base, deep))

                for name, top in (("LinearTop", TopSpec(kind=TopKind.LINEAR)), ("NLTop", bench.nltop)):
                    model = build_model(run, graph, top)
                    start = model.init(seed).overwrite(deep)
                    params = staged_training(model, [StageSpec(kind=StageKind.TOP_GIVEN_POTENTIALS,
                                                               epochs=bench.top_epochs)],
                                             train, val, run.train, start, evaluator).params
                    mode = InferenceMode.AUTO if top.kind == TopKind.LINEAR else InferenceMode.SADDLE
                    rows[name].append(score(model, params, mode))
                    if name == "NLTop" and SPEN_ROW in rows:
                        rows[SPEN_ROW].append(score(model, params, InferenceMode.SPEN_RELAXED))

            summary = {name: {metric: float(np.mean([row[metric] for row in results]))
                              for metric in ("word_accuracy", "char_accuracy", "hamming_loss")}
                       for name, results in rows.items()}
            self.dao.write_text("bench.tsv", bench_table(summary))
            return summary
        except NLStructException as e:
            logger.error(f"Error in bench service: {e.message}")
            raise


def _decode(task: str, assignment: np.ndarray) -> str:
    if task == TaskKind.WORDS:
        return decode_word(assignment)
    return " ".join(str(int(label)) for label in assignment)


def bench_table(summary: Dict[str, Dict[str, float]], delimiter: str = "\t") -> str:
    lines = [delimiter.join(["model", "word_accuracy", "char_accuracy", "hamming_loss"])]
    for name, metrics in summary.items():
        lines.append(delimiter.join([name, f"{metrics['word_accuracy']:.4f}", f"{metrics['char_accuracy']:.4f}",
                                     f"{metrics['hamming_loss']:.4f}"]))
    return "\n".join(lines) + "\n"


def gradcheck_failed(rows: List[BlockCheck]) -> bool:
    return any(not row.passed for row in rows)
