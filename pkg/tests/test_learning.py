"""
Tests for the structured model, the max-margin trainer, staged plans and the gradient check.
"""
import numpy as np
import pytest

from nlstruct_toolkit.constants import ActivationKind, InitScheme, PairSharing, UnaryMode
from nlstruct_toolkit.diffnet import DiffNet, LinearTop, MLPTop, ParamVector, SumTop, TopTransform
from nlstruct_toolkit.exceptions import NumericalFailureException, StructuralException
from nlstruct_toolkit.inference import map_bruteforce
from nlstruct_toolkit.learning import (
    EpochRecord,
    Example,
    StageSpec,
    StructuredModel,
    StructuredTrainer,
    TrainConfig,
    check_gradients,
    history_table,
    loss_vector,
    stage_mask,
    staged_training,
)
from nlstruct_toolkit.structure import RegionGraph, build_chain, build_second_order
from nlstruct_toolkit.tasks import SplitEvaluator, evaluate


class NanTop(TopTransform):
    """A top whose gradient is never finite."""

    def value(self, params, y):
        return float("nan")

    def vjp(self, params, y, cotangent=1.0):
        return np.full(np.shape(y), np.nan), ParamVector.zeros(())


def linear_unary(n_features, n_labels):
    return DiffNet.mlp([n_features, n_labels], ActivationKind.IDENTITY, name="unary")


def one_hot_example(labels, n_labels, example_id=0):
    labels = np.asarray(labels)
    return Example(context=np.eye(n_labels)[labels], labels=labels, example_id=example_id)


@pytest.fixture
def toy_examples():
    """Create a separable two-variable task with three labels."""
    return [one_hot_example([0, 1], 3, 0), one_hot_example([2, 0], 3, 1), one_hot_example([1, 2], 3, 2)]


@pytest.fixture
def chain_model():
    """Create a chain model with a linear unary net and a shared pair table."""
    return StructuredModel(build_chain(2, 3), linear_unary(3, 3), LinearTop(2 * 3 + 3 * 3))


@pytest.fixture
def confident_params():
    """Create unary-only model parameters that already separate the toy task by a wide margin."""
    model = StructuredModel(RegionGraph([3, 3]), linear_unary(3, 3), SumTop())
    params = model.init()
    params.block("unary.0.weight")[...] = 10.0 * np.eye(3)
    params.block("unary.0.bias")[...] = 0.0
    return model, params


def test_loss_vector():
    """Test the Hamming loss layout."""
    model = StructuredModel(build_chain(2, 3), linear_unary(3, 3), SumTop())

    loss = loss_vector(model, np.array([2, 0]), loss_scale=0.5)

    np.testing.assert_array_equal(loss[:6], [0.5, 0.5, 0.0, 0.0, 0.5, 0.5])
    assert not np.any(loss[6:])


def test_potentials_layout():
    """Test that unary scores come first and pair slots repeat the shared table."""
    model = StructuredModel(build_chain(3, 4), linear_unary(5, 4), SumTop())
    params = model.init(seed=2)
    params.block("pair.W")[...] = np.arange(16.0).reshape(4, 4)
    context = np.random.default_rng(0).normal(size=(3, 5))

    f = model.potentials(params, context)

    np.testing.assert_allclose(f[:12], model.unary_net.forward(params, context).ravel())
    for r in model.graph.higher_order_ids:
        np.testing.assert_array_equal(model.graph.region_table(f, r), np.arange(16.0).reshape(4, 4))


def test_potentials_zero_params():
    """Test that zero parameters give zero potentials."""
    model = StructuredModel(build_chain(5, 26), linear_unary(8, 26), SumTop())

    f = model.potentials(ParamVector.zeros(model.param_layout), np.ones((5, 8)))

    assert f.shape == (5 * 26 + 4 * 26 * 26,)
    assert not np.any(f)


def test_global_unary_and_per_edge_tables():
    """Test the global unary mode with one table per pair region."""
    graph = build_second_order(4, 2)
    model = StructuredModel(graph, linear_unary(6, 8), SumTop(), unary_mode=UnaryMode.GLOBAL,
                            pair_sharing=PairSharing.PER_EDGE)

    names = [name for name, _ in model.param_layout]

    assert "pair.0_2.W" in names and "pair.1_3.W" in names
    assert len([name for name in names if name.startswith("pair.")]) == len(graph.pair_regions)
    assert model.potentials(model.init(), np.ones(6)).shape == (graph.D,)


def test_model_rejects_mismatches():
    """Test structural validation at construction and on contexts."""
    with pytest.raises(StructuralException):
        StructuredModel(build_chain(2, 3), linear_unary(3, 4), SumTop())
    with pytest.raises(StructuralException):
        StructuredModel(build_chain(2, 3), DiffNet.mlp([3, 3], ActivationKind.IDENTITY), SumTop())
    with pytest.raises(StructuralException):
        StructuredModel(build_chain(2, 3), linear_unary(3, 5), SumTop(), unary_mode=UnaryMode.GLOBAL)
    with pytest.raises(StructuralException):
        StructuredModel(build_chain(2, 3), linear_unary(3, 3), LinearTop(15, name="other"))

    model = StructuredModel(build_chain(2, 3), linear_unary(3, 3), SumTop())
    with pytest.raises(StructuralException):
        model.potentials(model.init(), np.ones((3, 3)))


def test_resolve_mode():
    """Test mode selection and the requirements of the MAP modes."""
    chain = build_chain(3, 2)
    mlp_top = MLPTop(DiffNet.mlp([chain.D, chain.D, 1], ActivationKind.SIGMOID, name="top"))
    linear_model = StructuredModel(chain, linear_unary(2, 2), SumTop())
    nonlinear_model = StructuredModel(chain, linear_unary(2, 2), mlp_top)
    loopy_model = StructuredModel(build_second_order(3, 2), linear_unary(2, 2), SumTop())

    assert linear_model.resolve_mode(linear_model.init(), "auto") == "message-passing"
    assert nonlinear_model.resolve_mode(nonlinear_model.init(), "auto") == "saddle"
    with pytest.raises(StructuralException):
        nonlinear_model.resolve_mode(nonlinear_model.init(), "exact-dp")
    with pytest.raises(StructuralException):
        loopy_model.resolve_mode(loopy_model.init(), "exact-dp")
    with pytest.raises(StructuralException):
        linear_model.resolve_mode(linear_model.init(), "beam")


def test_loss_augmented_matches_bruteforce(chain_model):
    """Test that loss-augmented inference maximizes score plus Hamming loss."""
    rng = np.random.default_rng(4)
    trainer = StructuredTrainer(chain_model, TrainConfig(inference_mode="exact-dp"))
    for example_id in range(20):
        params = chain_model.init(seed=example_id)
        params.block("pair.W")[...] = rng.normal(size=(3, 3))
        params.block("top.w")[...] = rng.uniform(0.5, 1.5, size=15)
        example = Example(rng.normal(size=(2, 3)), rng.integers(0, 3, size=2), example_id)
        f = chain_model.potentials(params, example.context)
        theta = params.block("top.w") * f + loss_vector(chain_model, example.labels)

        result = trainer.loss_augmented_infer(params, example)

        np.testing.assert_array_equal(result.x_hat, map_bruteforce(chain_model.graph, theta)[1])


def test_loss_augmented_score_dominance(chain_model):
    """Test T(H(x_hat)) + L(x, x_hat) >= T(H(x)) when the augmented objective is maximized exactly."""
    rng = np.random.default_rng(8)
    trainer = StructuredTrainer(chain_model, TrainConfig(inference_mode="exact-dp"))
    for example_id in range(20):
        params = chain_model.init(seed=example_id)
        params.block("pair.W")[...] = rng.normal(size=(3, 3))
        params.block("top.w")[...] = rng.uniform(0.5, 1.5, size=15)
        example = Example(rng.normal(size=(2, 3)), rng.integers(0, 3, size=2), example_id)

        x_hat = trainer.loss_augmented_infer(params, example).x_hat
        _, margin = trainer.example_gradient(params, example, x_hat)

        assert margin.top_inferred + margin.loss >= margin.top_true - 1e-9


def test_zero_potentials_flip_every_label():
    """Test that with all-zero potentials the loss alone drives every label away from the truth."""
    model = StructuredModel(RegionGraph([3, 3, 3]), linear_unary(2, 3), SumTop())
    trainer = StructuredTrainer(model, TrainConfig(inference_mode="message-passing"))
    example = Example(np.ones((3, 2)), np.array([0, 2, 1]))

    result = trainer.loss_augmented_infer(ParamVector.zeros(model.param_layout), example)

    assert np.all(result.x_hat != example.labels)


def test_example_gradient_zero_when_correct(chain_model, toy_examples):
    """Test that a correct prediction contributes no gradient."""
    trainer = StructuredTrainer(chain_model)
    params = chain_model.init(seed=1)
    example = toy_examples[0]

    grads, margin = trainer.example_gradient(params, example, example.labels)

    assert not np.any(grads.values)
    assert margin.hinge == 0.0


@pytest.mark.parametrize("top_kind", ["sum", "linear", "mlp"])
def test_gradients_match_finite_differences(top_kind):
    """Test every parameter block of the margin gradient against central differences."""
    graph = build_chain(3, 2)
    tops = {
        "sum": SumTop(),
        "linear": LinearTop(graph.D),
        "mlp": MLPTop(DiffNet.mlp([graph.D, graph.D, 1], ActivationKind.SIGMOID, name="top")),
    }
    unary = DiffNet.mlp([4, 3, 2], ActivationKind.SIGMOID, name="unary")
    model = StructuredModel(graph, unary, tops[top_kind])
    rng = np.random.default_rng(11)
    params = model.init(seed=5)
    params.block("pair.W")[...] = rng.normal(scale=0.5, size=(2, 2))
    example = Example(rng.normal(size=(3, 4)), np.array([0, 1, 1]))

    rows = check_gradients(StructuredTrainer(model), params, example, x_hat=np.array([1, 0, 0]))

    assert {row.name for row in rows} == set(params.names)
    assert all(row.passed for row in rows), [(row.name, row.relative_error) for row in rows]


class ScaledUnaryTrainer(StructuredTrainer):
    """A trainer whose unary weight gradient is off by half."""

    def example_gradient(self, params, example, x_hat=None):
        grads, margin = super().example_gradient(params, example, x_hat)
        grads.block("unary.0.weight")[...] *= 1.5
        return grads, margin


def test_gradient_check_flags_small_corrupted_gradient():
    """Test that a wrong gradient fails even when every entry is far below one."""
    graph = build_chain(3, 2)
    model = StructuredModel(graph, DiffNet.mlp([4, 3, 2], ActivationKind.SIGMOID, name="unary"), SumTop())
    rng = np.random.default_rng(11)
    params = model.init(seed=5)
    params.block("pair.W")[...] = rng.normal(scale=0.5, size=(2, 2))
    example = Example(1e-3 * rng.normal(size=(3, 4)), np.array([0, 1, 1]))

    rows = {row.name: row for row in check_gradients(ScaledUnaryTrainer(model), params, example,
                                                     x_hat=np.array([1, 0, 0]))}

    assert np.max(np.abs(ScaledUnaryTrainer(model).example_gradient(
        params, example, np.array([1, 0, 0]))[0].block("unary.0.weight"))) < 1e-2
    assert not rows["unary.0.weight"].passed
    assert rows["unary.0.weight"].relative_error == pytest.approx(1.0 / 3.0, rel=1e-3)
    assert rows["unary.0.bias"].passed
    assert rows["pair.W"].passed


def test_train_without_mistakes_leaves_params(confident_params, toy_examples):
    """Test that x_hat == x and C = 0 leave the parameters untouched."""
    model, params = confident_params
    trainer = StructuredTrainer(model, TrainConfig(alpha=0.1, C=0.0, minibatch=1, epochs=1,
                                                   inference_mode="message-passing"))

    trained, history = trainer.train(toy_examples[:1], params=params)

    np.testing.assert_array_equal(trained.values, params.values)
    assert history[0].objective == 0.0


def test_weight_decay_step(confident_params, toy_examples):
    """Test the decay factor 1 - alpha C when the gradient vanishes."""
    model, params = confident_params
    trainer = StructuredTrainer(model, TrainConfig(alpha=0.1, C=0.5, minibatch=1, epochs=1,
                                                   inference_mode="message-passing"))

    trained, _ = trainer.train(toy_examples[:1], params=params)

    np.testing.assert_allclose(trained.values, 0.95 * params.values)


def test_frozen_blocks_do_not_move(chain_model, toy_examples):
    """Test that freezing every block keeps parameters fixed, decay included."""
    params = chain_model.init(seed=3)
    plan = [StageSpec(kind="joint", frozen=["unary", "pair", "top"])]
    config = TrainConfig(alpha=0.5, C=0.1, minibatch=2, epochs=2, inference_mode="exact-dp")

    outcome = staged_training(chain_model, plan, toy_examples, config=config, params=params)

    np.testing.assert_array_equal(outcome.params.values, params.values)


def test_top_stage_updates_only_top(chain_model, toy_examples):
    """Test that the top-given-potentials stage leaves unary and pair blocks alone."""
    params = chain_model.init(seed=3)
    config = TrainConfig(alpha=0.1, C=0.01, minibatch=1, epochs=2, inference_mode="exact-dp")

    outcome = staged_training(chain_model, [StageSpec(kind="top-given-potentials")], toy_examples,
                              config=config, params=params)

    for name in ("unary.0.weight", "unary.0.bias", "pair.W"):
        np.testing.assert_array_equal(outcome.params.block(name), params.block(name))
    assert not np.array_equal(outcome.params.block("top.w"), params.block("top.w"))


def test_stage_mask_groups(chain_model):
    """Test trainable groups per stage kind and rejection of unknown frozen names."""
    params = chain_model.init()
    unary = params.prefix_mask(["unary"])

    np.testing.assert_array_equal(stage_mask(params, StageSpec(kind="unary-only")), unary)
    assert stage_mask(params, StageSpec(kind="joint", frozen=["unary.0.bias"])).sum() == len(params) - 3
    with pytest.raises(StructuralException):
        stage_mask(params, StageSpec(kind="joint", frozen=["embedding"]))


def test_staged_ladder_histories(chain_model, toy_examples):
    """Test that every stage of a plan reports its own history."""
    plan = [StageSpec(kind="unary-only", epochs=2), StageSpec(kind="pairwise-given-unary", epochs=1),
            StageSpec(kind="top-given-potentials", epochs=1), StageSpec(kind="joint", epochs=3)]
    config = TrainConfig(alpha=0.05, minibatch=2, inference_mode="exact-dp")

    outcome = staged_training(chain_model, plan, toy_examples, config=config)

    assert [len(history) for history in outcome.histories] == [2, 1, 1, 3]
    assert outcome.rng_state is not None


def test_on_best_reports_validation_improvements(chain_model, toy_examples):
    """Test that every stage reports its improving epochs with a parameter snapshot."""
    calls = []
    plan = [StageSpec(kind="unary-only", epochs=2), StageSpec(kind="joint", epochs=2)]
    config = TrainConfig(alpha=0.1, minibatch=1, inference_mode="exact-dp")

    outcome = staged_training(chain_model, plan, toy_examples, toy_examples, config,
                              evaluator=SplitEvaluator(mode="exact-dp"),
                              on_best=lambda stage, epoch, params: calls.append((stage, epoch, params)))

    assert calls[0][:2] == (1, 1)
    assert {stage for stage, _, _ in calls} == {1, 2}
    assert all(1 <= epoch <= 2 for _, epoch, _ in calls)
    assert all(params is not outcome.params for _, _, params in calls)


def test_training_is_deterministic(chain_model, toy_examples):
    """Test identical results across runs and thread counts."""
    results = []
    for threads in (1, 1, 2):
        config = TrainConfig(alpha=0.1, minibatch=2, epochs=3, inference_mode="exact-dp", threads=threads, seed=9)
        trained, _ = StructuredTrainer(chain_model, config).train(toy_examples)
        results.append(trained.values)

    np.testing.assert_array_equal(results[0], results[1])
    np.testing.assert_array_equal(results[0], results[2])


def test_toy_task_reaches_full_accuracy(toy_examples):
    """Test that a unary-only model learns a separable toy task."""
    model = StructuredModel(build_chain(2, 3), linear_unary(3, 3), SumTop(), pair_sharing=PairSharing.NONE)
    config = TrainConfig(alpha=0.1, C=0.0, minibatch=1, epochs=50, inference_mode="exact-dp")
    evaluator = SplitEvaluator(mode="exact-dp")

    trained, history = StructuredTrainer(model, config).train(toy_examples, toy_examples, evaluator=evaluator)

    assert len(history) == 50
    assert "char_accuracy" in history[0].val_metrics
    assert evaluate(model, trained, toy_examples, "exact-dp").char_accuracy == 1.0


def test_numerical_failure_keeps_last_good(toy_examples):
    """Test that a non-finite top aborts training with the example id and the last good parameters."""
    model = StructuredModel(RegionGraph([3, 3]), linear_unary(3, 3), NanTop())
    trainer = StructuredTrainer(model, TrainConfig(minibatch=1, epochs=1))

    with pytest.raises(NumericalFailureException) as excinfo:
        trainer.train(toy_examples)

    assert excinfo.value.example_id in {0, 1, 2}
    assert excinfo.value.last_good is not None
    np.testing.assert_array_equal(excinfo.value.last_good.values, model.init(0).values)


def test_history_table():
    """Test the history format."""
    records = [EpochRecord(1, 2.5, {"char_accuracy": 0.5}, {"char_accuracy": 0.25}, wall_time=1.0)]

    lines = history_table([("joint", records)]).splitlines()

    assert lines[0].split("\t")[:4] == ["stage", "epoch", "objective", "train_word_accuracy"]
    assert lines[1].startswith("joint\t1\t2.5\t")
    assert "0.250000" in lines[1]
    assert len(lines[0].split("\t")) == len(lines[1].split("\t"))


def test_init_schemes(chain_model):
    """Test that init seeds the unary net, zeroes pair tables and starts the linear top at ones."""
    params = chain_model.init(seed=0, unary_scheme=InitScheme.ZEROS)

    assert not np.any(params.block("unary.0.weight"))
    assert not np.any(params.block("pair.W"))
    np.testing.assert_array_equal(params.block("top.w"), np.ones(15))
