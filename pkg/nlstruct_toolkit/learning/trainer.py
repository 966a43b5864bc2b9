"""
Structured hinge learning with loss-augmented inference and minibatch subgradient steps.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..constants import BlockPrefix, StageKind
from ..diffnet import ParamVector, SumTop
from ..exceptions import NumericalFailureException, StructuralException
from ..inference import InferenceResult
from .models import EpochRecord, Example, MarginTerms, StagedOutcome, StageSpec, TrainConfig
from .structured_model import StructuredModel

# Set up logging
logger = logging.getLogger(__name__)

# (scoring model, params, examples, split name) -> metric dictionary
Evaluator = Callable[[StructuredModel, ParamVector, Sequence[Example], str], Dict[str, float]]

# (epoch, parameters) -> None, on every validation improvement
BestCallback = Callable[[int, ParamVector], None]


def loss_vector(model: StructuredModel, x_true: np.ndarray, loss_scale: float = 1.0) -> np.ndarray:
    """Hamming loss on the unary slots: loss_scale * 1[s != x_k]; zero on higher-order slots."""
    graph = model.graph
    x_true = graph.validate_assignment(x_true)
    loss = graph.zeros()
    for k in range(graph.K):
        table = graph.region_table(loss, k)
        table[...] = loss_scale
        table[x_true[k]] = 0.0
    return loss


class StructuredTrainer:
    """Trains all parameters of a StructuredModel on the structured hinge objective."""

    def __init__(self, model: StructuredModel, config: Optional[TrainConfig] = None):
        self.model = model
        self.config = config or TrainConfig()
        self.last_good_params: Optional[ParamVector] = None
        self.rng_state: Optional[dict] = None
        self._warm: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def loss_augmented_infer(self, params: ParamVector, example: Example,
                             f: Optional[np.ndarray] = None) -> InferenceResult:
        """
        Decode argmax_x T(H(x)) + L(x_true, x) for one example.

        Args:
            params: Model parameters
            example: Training example
            f: Precomputed potentials of the example

        Returns:
            The inference result of the configured mode
        """
        f = self.model.potentials(params, example.context) if f is None else f
        loss = loss_vector(self.model, example.labels, self.config.loss_scale)
        lam0, y0 = self._warm.get(example.example_id, (None, None)) if self.config.warm_start else (None, None)
        return self.model.run_inference(params, f, self.config.inference_mode, self.config.saddle,
                                        loss=loss, lam0=lam0, y0=y0)

    def example_gradient(self, params: ParamVector, example: Example,
                         x_hat: np.ndarray) -> Tuple[ParamVector, MarginTerms]:
        """
        Gradient of T(c, H(x_hat, c, w), w) - T(c, H(x, c, w), w) at fixed x_hat.

        Cotangent reaches the potentials only through the slots selected by each mask.

        Args:
            params: Model parameters
            example: Training example holding the ground truth x
            x_hat: Loss-augmented prediction

        Returns:
            The gradient and the margin terms
        """
        graph, top = self.model.graph, self.model.top
        x_true = graph.validate_assignment(example.labels)
        x_hat = graph.validate_assignment(x_hat)
        f = self.model.potentials(params, example.context)
        y_true = graph.mask(f, x_true)
        top_true = top.value(params, y_true)
        mistakes = float(self.config.loss_scale * np.count_nonzero(x_hat != x_true))
        if np.array_equal(x_hat, x_true):
            return params.zeros_like(), MarginTerms(top_true, top_true, 0.0)

        y_hat = graph.mask(f, x_hat)
        top_hat = top.value(params, y_hat)
        grad_y_hat, top_grads_hat = top.vjp(params, y_hat)
        grad_y_true, top_grads_true = top.vjp(params, y_true)

        cotangent = graph.zeros()
        slots_hat = graph.selected_slots(x_hat)
        slots_true = graph.selected_slots(x_true)
        cotangent[slots_hat] += grad_y_hat[slots_hat]
        cotangent[slots_true] -= grad_y_true[slots_true]

        grads = self.model.backprop_potentials(params, example.context, cotangent, params.zeros_like())
        grads.accumulate(top_grads_hat)
        grads.accumulate(top_grads_true, scale=-1.0)
        return grads, MarginTerms(top_hat, top_true, mistakes)

    def _example_step(self, params: ParamVector, example: Example) -> Tuple[ParamVector, MarginTerms, InferenceResult]:
        try:
            result = self.loss_augmented_infer(params, example)
            grads, margin = self.example_gradient(params, example, result.x_hat)
        except NumericalFailureException as e:
            e.example_id = example.example_id
            raise
        if not np.all(np.isfinite(grads.values)):
            raise NumericalFailureException("Non-finite gradient", example_id=example.example_id)
        return grads, margin, result

    def train(self, train_set: Sequence[Example], val_set: Sequence[Example] = (),
              params: Optional[ParamVector] = None, trainable: Optional[np.ndarray] = None,
              evaluator: Optional[Evaluator] = None,
              on_best: Optional[BestCallback] = None) -> Tuple[ParamVector, List[EpochRecord]]:
        """
        Run minibatch subgradient descent w <- w - alpha (C w + g).

        Args:
            train_set: Training examples
            val_set: Validation examples, used for best-model selection when an evaluator is given
            params: Initial parameters (model.init(seed) when omitted)
            trainable: Boolean mask over the flat parameters; frozen entries get no update and no decay
            evaluator: Computes task metrics for a split
            on_best: Called with the epoch and a copy of the parameters whenever validation improves

        Returns:
            The selected parameters and the per-epoch history

        Raises:
            StructuralException: If the training set is empty
            NumericalFailureException: If inference or a gradient goes non-finite; last_good_params keeps the
                parameters from before the failing step
        """
        if not train_set:
            raise StructuralException("Training needs at least one example")
        config = self.config
        params = (self.model.init(config.seed) if params is None else params).copy()
        if trainable is None:
            trainable = np.ones(len(params), dtype=bool)
        step_mask = np.asarray(trainable, dtype=np.float64)
        if step_mask.shape != params.values.shape:
            raise StructuralException(f"Trainable mask has shape {step_mask.shape}, expected {params.values.shape}")

        rng = np.random.default_rng(config.seed)
        history: List[EpochRecord] = []
        best_params, best_score = params.copy(), -np.inf
        self.last_good_params = params.copy()
        logger.info(f"Training {len(params)} parameters ({int(step_mask.sum())} trainable) "
                    f"on {len(train_set)} examples for {config.epochs} epochs")

        with ThreadPoolExecutor(max_workers=config.threads) as executor:
            for epoch in range(1, config.epochs + 1):
                started = time.perf_counter()
                order = rng.permutation(len(train_set))
                hinge_total = 0.0
                for start in range(0, len(order), config.minibatch):
                    batch = np.sort(order[start:start + config.minibatch])
                    self.last_good_params = params.copy()
                    try:
                        outcomes = list(executor.map(lambda i: self._example_step(params, train_set[i]), batch))
                    except NumericalFailureException as e:
                        logger.error(f"Numerical failure in epoch {epoch} on example {e.example_id}: {e.message}")
                        e.last_good = self.last_good_params
                        raise
                    g = np.zeros_like(params.values)
                    for i, (grads, margin, result) in zip(batch, outcomes):
                        g += grads.values
                        hinge_total += max(margin.hinge, 0.0)
                        if config.warm_start:
                            self._warm[train_set[i].example_id] = (result.lam, result.y)
                    params.values -= config.alpha * step_mask * (config.C * params.values + g)
                    if not np.all(np.isfinite(params.values)):
                        logger.error(f"Non-finite parameters after an update in epoch {epoch}")
                        raise NumericalFailureException("Non-finite parameters after an update",
                                                        iteration=epoch, last_good=self.last_good_params)

                objective = 0.5 * config.C * float(params.values @ params.values) + hinge_total
                record = EpochRecord(epoch=epoch, objective=objective, wall_time=time.perf_counter() - started)
                if evaluator is not None:
                    if config.eval_train:
                        record.train_metrics = evaluator(self.model, params, train_set, "train")
                    if val_set:
                        record.val_metrics = evaluator(self.model, params, val_set, "val")
                history.append(record)
                logger.info(f"Epoch {epoch}: objective={objective:.6g} val={record.val_metrics} "
                            f"({record.wall_time:.2f}s)")

                self.rng_state = rng.bit_generator.state
                score = _selection_score(record.val_metrics)
                if score is not None and score > best_score:
                    best_score, best_params = score, params.copy()
                    if on_best is not None:
                        on_best(epoch, best_params.copy())

        self.last_good_params = params.copy()
        if config.keep_best and best_score > -np.inf:
            return best_params, history
        return params, history


def _selection_score(metrics: Dict[str, float]) -> Optional[float]:
    if "char_accuracy" in metrics:
        return metrics["char_accuracy"]
    if "hamming_loss" in metrics:
        return -metrics["hamming_loss"]
    return None


STAGE_TRAINABLE = {
    StageKind.UNARY_ONLY: (BlockPrefix.UNARY,),
    StageKind.PAIRWISE_GIVEN_UNARY: (BlockPrefix.PAIR,),
    StageKind.TOP_GIVEN_POTENTIALS: (BlockPrefix.TOP,),
    StageKind.JOINT: BlockPrefix.ALL,
}


def stage_mask(params: ParamVector, stage: StageSpec) -> np.ndarray:
    """
    Boolean mask of the entries a stage may update.

    Raises:
        StructuralException: If a frozen name matches no parameter block
    """
    for prefix in stage.frozen:
        if not params.prefix_mask([prefix]).any() and prefix not in params:
            raise StructuralException(f"Unknown parameter block: {prefix}")
    return params.prefix_mask(STAGE_TRAINABLE[stage.kind]) & ~params.prefix_mask(stage.frozen)


def staged_training(model: StructuredModel, plan: Sequence[StageSpec], train_set: Sequence[Example],
                    val_set: Sequence[Example] = (), config: Optional[TrainConfig] = None,
                    params: Optional[ParamVector] = None,
                    evaluator: Optional[Evaluator] = None,
                    on_best: Optional[Callable[[int, int, ParamVector], None]] = None) -> StagedOutcome:
    """
    Train a model stage by stage, each stage updating one parameter group.

    unary-only and pairwise-given-unary score with the classical sum of potentials;
    top-given-potentials and joint use the model's own top.

    Args:
        model: Structured model
        plan: Ordered stages
        train_set: Training examples
        val_set: Validation examples
        config: Shared training configuration, overridden per stage
        params: Initial parameters (model.init(seed) when omitted)
        evaluator: Computes task metrics for a split with the model scoring the stage
        on_best: Called with the 1-based stage index, the epoch and the parameters whenever validation improves

    Returns:
        The parameters after the last stage, one history per stage and the final RNG state
    """
    config = config or TrainConfig()
    params = model.init(config.seed) if params is None else params.copy()
    histories = []
    rng_state = None
    for index, stage in enumerate(plan):
        stage_model = model if stage.kind in (StageKind.TOP_GIVEN_POTENTIALS, StageKind.JOINT) \
            else model.with_top(SumTop())
        overrides = {key: value for key, value in (("epochs", stage.epochs), ("alpha", stage.alpha))
                     if value is not None}
        stage_config = config.model_copy(update=overrides)
        mask = stage_mask(params, stage)
        logger.info(f"Stage {index + 1}/{len(plan)}: {stage.kind}, {int(mask.sum())} trainable parameters")
        trainer = StructuredTrainer(stage_model, stage_config)
        stage_best = partial(on_best, index + 1) if on_best is not None else None
        params, history = trainer.train(train_set, val_set, params, mask, evaluator, stage_best)
        histories.append(history)
        rng_state = trainer.rng_state
    return StagedOutcome(params, histories, rng_state)
