"""
Tests for the diffnet module.
"""
from unittest.mock import patch

import numpy as np
import pytest
from scipy.special import expit

from nlstruct_toolkit.constants import ActivationKind, InitScheme, SymmetryMode
from nlstruct_toolkit.diffnet import (
    DiffNet,
    LinearTop,
    MLPTop,
    PairTable,
    ParamVector,
    QuadraticTop,
    SumTop,
    dump_blocks,
    load_blocks,
)
from nlstruct_toolkit.exceptions import ArtifactIOException, StructuralException


def numeric_grad(fn, x, eps=1e-6):
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step.flat[i] = eps
        grad.flat[i] = (fn(x + step) - fn(x - step)) / (2 * eps)
    return grad


@pytest.fixture
def layout():
    """A two-block layout."""
    return (("a.weight", (2, 3)), ("a.bias", (2,)))


@pytest.fixture
def sigmoid_net():
    """A small sigmoid network with random parameters."""
    net = DiffNet.mlp([4, 5, 3], ActivationKind.SIGMOID, name="net")
    return net, net.init(InitScheme.GLOROT_UNIFORM, seed=3)


def test_param_vector_blocks_are_views(layout):
    """Test that blocks are writable views into the flat values."""
    params = ParamVector.zeros(layout)
    params.block("a.bias")[...] = [1.0, 2.0]

    assert len(params) == 8
    np.testing.assert_array_equal(params.values[6:], [1.0, 2.0])
    assert params.names == ("a.weight", "a.bias")
    assert "a.bias" in params


def test_param_vector_unknown_block_raises(layout):
    """Test that an unknown block name is a structural error."""
    params = ParamVector.zeros(layout)

    with pytest.raises(StructuralException):
        params.block("missing")


def test_param_vector_rejects_bad_layouts(layout):
    """Test duplicate names and size mismatches."""
    with pytest.raises(StructuralException):
        ParamVector(np.zeros(3), (("x", (1,)), ("x", (2,))))
    with pytest.raises(StructuralException):
        ParamVector(np.zeros(5), layout)


def test_param_vector_prefix_mask_and_accumulate():
    """Test prefix selection and block-wise accumulation."""
    params = ParamVector.zeros((("unary.0.weight", (2,)), ("pair.W", (2,)), ("top.w", (1,))))
    mask = params.prefix_mask(["unary", "top"])
    np.testing.assert_array_equal(mask, [True, True, False, False, True])

    update = ParamVector(np.array([1.0, 2.0]), (("pair.W", (2,)),))
    params.accumulate(update, scale=-2.0)
    np.testing.assert_array_equal(params.block("pair.W"), [-2.0, -4.0])


def test_param_vector_overwrite_copies_matching_blocks():
    """Test that overwrite copies shared blocks and leaves the rest."""
    target = ParamVector.zeros((("unary.0.weight", (2,)), ("top.w", (1,))))
    source = ParamVector(np.array([5.0, 6.0, 7.0]), (("unary.0.weight", (2,)), ("pair.W", (1,))))

    target.overwrite(source)

    np.testing.assert_array_equal(target.values, [5.0, 6.0, 0.0])


def test_forward_zero_params_is_zero():
    """Test that a purely affine net with zero parameters outputs zeros."""
    net = DiffNet.mlp([3, 4], ActivationKind.IDENTITY)
    params = net.init(InitScheme.ZEROS)

    np.testing.assert_array_equal(net.forward(params, np.ones(3)), np.zeros(4))
    assert net.forward(params, np.ones((5, 3))).shape == (5, 4)


def test_forward_rejects_wrong_width(sigmoid_net):
    """Test the input width check."""
    net, params = sigmoid_net

    with pytest.raises(StructuralException):
        net.forward(params, np.ones(5))


@pytest.mark.parametrize("kind", [ActivationKind.SIGMOID, ActivationKind.LEAKY_RELU,
                                  ActivationKind.RELU, ActivationKind.HARDTANH])
def test_vjp_matches_finite_differences(kind):
    """Test input and parameter gradients against central differences."""
    net = DiffNet.mlp([4, 6, 2], kind, name="net")
    params = net.init(InitScheme.GLOROT_UNIFORM, seed=1)
    rng = np.random.default_rng(7)
    x = rng.normal(size=4)
    cotangent = rng.normal(size=2)

    grad_x, grad_params = net.vjp(params, x, cotangent)

    np.testing.assert_allclose(grad_x, numeric_grad(lambda v: cotangent @ net.forward(params, v), x),
                               rtol=1e-5, atol=1e-7)

    def value_at(values):
        return cotangent @ net.forward(ParamVector(values, params.layout), x)

    np.testing.assert_allclose(grad_params.values, numeric_grad(value_at, params.values),
                               rtol=1e-5, atol=1e-7)


def test_vjp_sums_batch_contributions(sigmoid_net):
    """Test that a batch vjp equals the sum of per-row vjps."""
    net, params = sigmoid_net
    rng = np.random.default_rng(0)
    batch = rng.normal(size=(3, 4))
    cotangent = rng.normal(size=(3, 3))

    grad_x, grad_params = net.vjp(params, batch, cotangent)

    total = params.zeros_like()
    for row, cot in zip(batch, cotangent):
        total.accumulate(net.vjp(params, row, cot)[1])
    np.testing.assert_allclose(grad_params.values, total.values, rtol=1e-12)
    assert grad_x.shape == batch.shape


def test_init_identity_ones():
    """Test the identity-ones scheme used by nonlinear tops."""
    net = DiffNet.mlp([3, 3, 1], ActivationKind.SIGMOID, name="top")
    params = net.init(InitScheme.IDENTITY_ONES)

    np.testing.assert_array_equal(params.block("top.0.weight"), np.eye(3))
    np.testing.assert_array_equal(params.block("top.2.weight"), np.ones((1, 3)))
    np.testing.assert_array_equal(params.block("top.0.bias"), np.zeros(3))


def test_init_identity_ones_needs_square_first_layer():
    """Test that identity-ones refuses a non-square first layer."""
    net = DiffNet.mlp([3, 4, 1], ActivationKind.SIGMOID)

    with pytest.raises(StructuralException):
        net.init(InitScheme.IDENTITY_ONES)


def test_init_glorot_is_seeded_and_bounded():
    """Test glorot-uniform bounds and determinism."""
    net = DiffNet.mlp([10, 20], ActivationKind.IDENTITY)
    first = net.init(InitScheme.GLOROT_UNIFORM, seed=5)
    second = net.init(InitScheme.GLOROT_UNIFORM, seed=5)

    np.testing.assert_array_equal(first.values, second.values)
    assert np.all(np.abs(first.block("net.0.weight")) <= np.sqrt(6.0 / 30.0))


def test_pair_table_diag_offdiag():
    """Test tied pair tables evaluate and accumulate gradients by tie class."""
    table = PairTable("pair", 3, 3, SymmetryMode.DIAG_OFFDIAG)
    params = ParamVector(np.array([2.0, -1.0]), table.param_layout)

    assert table.eval(params, 1, 1) == 2.0
    assert table.eval(params, 0, 2) == -1.0

    grads = params.zeros_like()
    table.accumulate_grad(grads, np.arange(9.0).reshape(3, 3))
    np.testing.assert_array_equal(grads.block("pair.W"), [0.0 + 4.0 + 8.0, 36.0 - 12.0])

    table.accumulate_entry_grad(grads, 0, 1, 1.0)
    assert grads.block("pair.W")[1] == 25.0


def test_pair_table_out_of_range_label():
    """Test that out-of-range labels are structural errors."""
    table = PairTable("pair", 2, 3)
    params = table.init()

    with pytest.raises(StructuralException):
        table.eval(params, 2, 0)


def test_linear_top_starts_at_classical_score():
    """Test that the linear top initialised to ones sums its input."""
    top = LinearTop(4)
    params = top.init()
    y = np.array([1.0, -2.0, 0.5, 3.0])

    assert top.value(params, y) == pytest.approx(y.sum())
    np.testing.assert_array_equal(top.linear_coefficients(params, 4), np.ones(4))
    grad_y, grads = top.vjp(params, y, cotangent=2.0)
    np.testing.assert_array_equal(grad_y, 2.0 * np.ones(4))
    np.testing.assert_array_equal(grads.block("top.w"), 2.0 * y)


def test_sum_top_has_no_parameters():
    """Test the parameter-free classical top."""
    top = SumTop()

    assert top.param_layout == ()
    assert top.value(ParamVector.zeros(()), np.array([1.0, 2.0])) == 3.0
    np.testing.assert_array_equal(top.linear_coefficients(None, 3), np.ones(3))


def test_mlp_top_gradients():
    """Test the nonlinear top against finite differences in y."""
    net = DiffNet.mlp([5, 5, 1], ActivationKind.SIGMOID, name="top")
    top = MLPTop(net, input_scale=2.0)
    params = top.init()
    y = np.random.default_rng(2).normal(size=5)

    grad_y = top.grad_y(params, y)

    np.testing.assert_allclose(grad_y, numeric_grad(lambda v: top.value(params, v), y), rtol=1e-6, atol=1e-9)
    assert top.linear_coefficients(params, 5) is None


def test_mlp_top_grad_y_skips_parameter_gradients():
    """Test that the y-gradient matches the full vjp without calling it."""
    net = DiffNet.mlp([6, 6, 1], ActivationKind.SIGMOID, name="top")
    top = MLPTop(net, input_scale=3.0)
    params = net.init(InitScheme.GLOROT_UNIFORM, seed=4)
    y = np.random.default_rng(9).normal(size=6)
    expected, _ = top.vjp(params, y)

    with patch.object(DiffNet, "vjp", side_effect=AssertionError("parameter gradients formed")):
        grad_y = top.grad_y(params, y)

    np.testing.assert_array_equal(grad_y, expected)


def test_input_vjp_matches_vjp(sigmoid_net):
    """Test the input-only backward pass on single inputs and batches."""
    net, params = sigmoid_net
    rng = np.random.default_rng(11)
    batch = rng.normal(size=(4, 4))
    cotangent = rng.normal(size=(4, 3))

    np.testing.assert_array_equal(net.input_vjp(params, batch, cotangent), net.vjp(params, batch, cotangent)[0])
    np.testing.assert_array_equal(net.input_vjp(params, batch[0], cotangent[0]),
                                  net.vjp(params, batch[0], cotangent[0])[0])
    with pytest.raises(StructuralException):
        net.input_vjp(params, batch[0], np.ones(2))


def test_identity_ones_top_sums_sigmoids():
    """Test that an identity-ones sigmoid top evaluates to the sum of sigmoids of its input."""
    net = DiffNet.mlp([7, 7, 1], ActivationKind.SIGMOID, name="top")
    params = net.init(InitScheme.IDENTITY_ONES)
    u = np.random.default_rng(5).normal(scale=3.0, size=7)

    output = net.forward(params, u)

    assert output.shape == (1,)
    assert output[0] == pytest.approx(float(np.sum(expit(u))), rel=1e-14)


def test_hardtanh_and_leaky_relu_outputs():
    """Test hardtanh clamping and the leaky-relu negative slope."""
    clamp = DiffNet.mlp([3, 3], ActivationKind.IDENTITY, output_activation=ActivationKind.HARDTANH)
    leaky = DiffNet.mlp([3, 3], ActivationKind.IDENTITY, slope=0.25, output_activation=ActivationKind.LEAKY_RELU)
    params = clamp.init(InitScheme.ZEROS)
    params.block("net.0.weight")[...] = np.eye(3)
    u = np.array([-2.0, 0.5, 3.0])

    np.testing.assert_array_equal(clamp.forward(params, u), [-1.0, 0.5, 1.0])
    np.testing.assert_array_equal(leaky.forward(params, u), [-0.5, 0.5, 3.0])
    np.testing.assert_array_equal(leaky.forward(params, -u), [2.0, -0.125, -0.75])


def test_mlp_top_requires_scalar_output():
    """Test that a vector-output net cannot be a top."""
    with pytest.raises(StructuralException):
        MLPTop(DiffNet.mlp([3, 2], ActivationKind.IDENTITY))


def test_quadratic_top():
    """Test the concave quadratic top."""
    top = QuadraticTop(np.array([1.0, 2.0]))

    assert top.value(None, np.array([1.0, 0.0])) == pytest.approx(-2.0)
    np.testing.assert_array_equal(top.grad_y(None, np.array([1.0, 0.0])), [0.0, 2.0])


def test_block_format_round_trip(sigmoid_net):
    """Test that the block format restores names, shapes and values."""
    _, params = sigmoid_net
    encoded = dump_blocks(params)

    restored, offset = load_blocks(encoded)

    assert offset == len(encoded)
    assert restored.layout == params.layout
    np.testing.assert_array_equal(restored.values, params.values)
    assert dump_blocks(restored) == encoded


def test_block_format_truncated(sigmoid_net):
    """Test that truncated data raises an artifact error."""
    _, params = sigmoid_net

    with pytest.raises(ArtifactIOException):
        load_blocks(dump_blocks(params)[:-3])
