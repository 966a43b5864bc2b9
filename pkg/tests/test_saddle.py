"""
Tests for saddle-point inference, its prox solve and the relaxed baseline.
"""
import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from nlstruct_toolkit.diffnet import ParamVector, QuadraticTop, SumTop, TopTransform
from nlstruct_toolkit.exceptions import NumericalFailureException, StructuralException
from nlstruct_toolkit.inference import (
    MessageSet,
    SaddleConfig,
    infer,
    map_bruteforce,
    map_infer,
    prox_y,
    saddle_objective,
    soft_mask,
    spen_relaxed_infer,
    theta_from,
)
from nlstruct_toolkit.structure import RegionGraph, build_chain, build_second_order

EMPTY = ParamVector.zeros(())


class NanTop(TopTransform):
    """A top whose gradient is never finite."""

    def value(self, params, y):
        return float("nan")

    def vjp(self, params, y, cotangent=1.0):
        return np.full(np.shape(y), np.nan), ParamVector.zeros(())


@pytest.fixture
def analytic_problem():
    """Create two binary variables with unaries only and a quadratic top with a known saddle point."""
    graph = RegionGraph([2, 2])
    f = np.array([1.0, 2.0, -1.0, 1.5])
    top = QuadraticTop(np.array([3.0, 0.5, 0.2, 2.0]))
    return graph, f, top


def test_saddle_config_defaults_and_validation():
    """Test the default step sizes and the even-n rule."""
    config = SaddleConfig()

    assert (config.alpha_y, config.alpha_lambda, config.n) == (0.5, 0.5, 100)
    with pytest.raises(ValidationError):
        SaddleConfig(n=7)
    with pytest.raises(ValidationError):
        SaddleConfig(alpha_y=0.0)
    with pytest.raises(ValidationError):
        SaddleConfig(unknown=1)


def test_prox_matches_closed_form():
    """Test the prox solve against the closed form for a quadratic top."""
    center = np.array([1.0, -2.0, 0.5])
    top = QuadraticTop(center)
    lam_bar = np.array([0.3, 0.1, -0.4])
    y_prev = np.array([0.0, 1.0, 2.0])
    alpha = 0.5

    result = prox_y(top, EMPTY, lam_bar, y_prev, alpha, SaddleConfig(prox_tol=1e-10, prox_max_iters=200))

    expected = (center - lam_bar + y_prev / alpha) / (1.0 + 1.0 / alpha)
    assert result.converged
    np.testing.assert_allclose(result.y, expected, atol=1e-9)


def test_prox_reports_iteration_limit():
    """Test that an unconverged prox solve is reported rather than raised."""
    top = QuadraticTop(np.array([10.0]))

    result = prox_y(top, EMPTY, np.zeros(1), np.zeros(1), 0.5, SaddleConfig(prox_max_iters=1, prox_tol=1e-12))

    assert not result.converged
    assert result.iterations == 1


def test_prox_non_finite_raises():
    """Test that a non-finite residual raises a numerical failure."""
    with pytest.raises(NumericalFailureException):
        prox_y(NanTop(), EMPTY, np.zeros(2), np.zeros(2), 0.5)


def test_analytic_saddle_point(analytic_problem):
    """Test convergence to the hand-derived saddle point."""
    graph, f, top = analytic_problem

    result = infer(graph, f, top, EMPTY, SaddleConfig(n=500))

    np.testing.assert_allclose(result.lam, [2.0, 0.5, 0.2, 0.5], atol=1e-3)
    np.testing.assert_allclose(result.y, [1.0, 0.0, 0.0, 1.5], atol=1e-3)
    np.testing.assert_array_equal(result.x_hat, [0, 1])
    assert len(result.lam_iterates) == 250
    assert len(result.trace) == 500


def test_averaged_iterates_are_exact_means(analytic_problem):
    """Test that the returned lambda and y are the plain means of the stored last-half iterates."""
    graph, f, top = analytic_problem

    result = infer(graph, f, top, EMPTY, SaddleConfig(n=10))

    assert len(result.lam_iterates) == len(result.y_iterates) == 5
    np.testing.assert_array_equal(result.lam, np.mean(np.stack(result.lam_iterates), axis=0))
    np.testing.assert_array_equal(result.y, np.mean(np.stack(result.y_iterates), axis=0))


def relaxed_share(f, center):
    """Unconstrained maximizer over mu of T((1 - mu) f_0, mu f_1) for T = -1/2 ||y - center||^2."""
    return (f[0] ** 2 - f[0] * center[0] + f[1] * center[1]) / (f[0] ** 2 + f[1] ** 2)


def test_single_binary_variable_matches_enumeration():
    """Test one binary variable under T(y) = -1/2 ||y||^2 + a^T y.

    When the relaxed optimum is a vertex the decoded label is the enumeration argmax. When it lies
    inside the segment the two labels tie at the averaged multipliers, so only the averaged y is checked.
    """
    rng = np.random.default_rng(21)
    graph = RegionGraph([2])
    vertex_cases = fractional_cases = 0
    for _ in range(100):
        f = rng.choice([-1.0, 1.0], size=2) * rng.uniform(0.5, 2.0, size=2)
        a = rng.normal(scale=1.5, size=2)
        top = QuadraticTop(a)
        share = relaxed_share(f, a)

        result = infer(graph, f, top, EMPTY, SaddleConfig(n=400))

        if share < -0.2 or share > 1.2:
            vertex_cases += 1
            best = max((0, 1), key=lambda label: top.value(EMPTY, graph.mask(f, [label])))
            assert result.x_hat.tolist() == [best]
        elif 0.2 < share < 0.8:
            fractional_cases += 1
            np.testing.assert_allclose(result.y, [(1.0 - share) * f[0], share * f[1]], atol=5e-2)
    assert vertex_cases >= 10
    assert fractional_cases >= 5


def test_saddle_objective_by_hand(analytic_problem):
    """Test the objective at y equal to the quadratic center with lambda at ones."""
    graph, f, top = analytic_problem
    lam = np.ones(graph.D)

    value = saddle_objective(top.center, lam, MessageSet(graph), theta_from(lam, f), top, EMPTY)

    assert value == pytest.approx(-5.7 + 2.0 + 1.5)


def test_linear_top_reduces_to_map():
    """Test that T = 1^T y with lambda starting at ones decodes the MAP on chains."""
    rng = np.random.default_rng(7)
    matches = 0
    for _ in range(100):
        graph = build_chain(4, 3)
        f = rng.normal(size=graph.D)

        result = infer(graph, f, SumTop(), EMPTY, SaddleConfig(n=20, mplp_tol=1e-13, mplp_max_sweeps=500))

        _, x_best = map_bruteforce(graph, f)
        matches += int(np.array_equal(result.x_hat, x_best))
        np.testing.assert_allclose(result.lam, np.ones(graph.D))
    assert matches >= 95


def test_map_infer_matches_bruteforce():
    """Test the linear-top fast path."""
    rng = np.random.default_rng(3)
    graph = build_chain(4, 3)
    f = rng.normal(size=graph.D)
    coefficients = rng.uniform(0.5, 2.0, size=graph.D)

    result = map_infer(graph, f, coefficients, SaddleConfig(mplp_tol=1e-13, mplp_max_sweeps=500))

    value, x_best = map_bruteforce(graph, coefficients * f)
    np.testing.assert_array_equal(result.x_hat, x_best)
    assert result.duality_gap == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_array_equal(result.y, graph.mask(f, x_best))


def test_loss_augmentation_shifts_decoding():
    """Test that a loss vector enters theta."""
    graph = RegionGraph([3])
    f = np.zeros(3)
    loss = np.array([0.0, 1.0, 2.0])

    result = map_infer(graph, f, np.ones(3), loss=loss)

    assert result.x_hat.tolist() == [2]


def test_infer_non_finite_top_raises():
    """Test that a diverging top raises at the first prox step with its residual trace."""
    graph = build_chain(2, 2)

    with pytest.raises(NumericalFailureException) as excinfo:
        infer(graph, np.ones(graph.D), NanTop(), EMPTY, SaddleConfig(n=4))

    assert excinfo.value.iteration == 0
    assert len(excinfo.value.trace) == 1


def test_trace_table_header(analytic_problem):
    """Test the diagnostic trace format."""
    graph, f, top = analytic_problem

    result = infer(graph, f, top, EMPTY, SaddleConfig(n=4))

    lines = result.trace_table().splitlines()
    assert lines[0] == "iteration\tobjective\tprox_residual\tlambda_step_norm"
    assert len(lines) == 5


def test_infer_wrong_potential_length():
    """Test layout checks on f."""
    graph = build_chain(2, 2)

    with pytest.raises(StructuralException):
        infer(graph, np.ones(3), SumTop(), EMPTY)


def test_soft_mask_at_integral_labels():
    """Test that soft masking at 0/1 labels equals hard masking."""
    graph = build_second_order(3, 2)
    f = np.random.default_rng(0).normal(size=graph.D)

    np.testing.assert_allclose(soft_mask(graph, f, np.array([1.0, 0.0, 1.0])), graph.mask(f, [1, 0, 1]))


def test_spen_relaxed_linear_top():
    """Test the relaxed baseline saturates to the unary argmax under the summed top."""
    graph = RegionGraph([2, 2, 2])
    f = np.array([0.0, 2.0, 1.0, -1.0, 0.0, 0.5])

    x = spen_relaxed_infer(graph, f, SumTop(), EMPTY, steps=100, step_size=0.1, restarts=2, seed=0)

    assert x.tolist() == [1, 0, 1]


def test_spen_relaxed_concave_quadratic():
    """Test that single restarts find the enumeration argmax of a concave quadratic top."""
    graph = RegionGraph([2, 2])
    f = np.array([0.8, -1.2, 1.5, 0.6])
    top = QuadraticTop(np.array([0.3, -1.4, 1.6, 0.4]))
    best = max(itertools.product((0, 1), repeat=2), key=lambda x: top.value(EMPTY, graph.mask(f, x)))

    matches = sum(spen_relaxed_infer(graph, f, top, EMPTY, restarts=1, seed=seed).tolist() == list(best)
                  for seed in range(5))

    assert best == (1, 0)
    assert matches >= 4


def test_spen_relaxed_requires_binary():
    """Test the binary-domain check."""
    graph = build_chain(2, 3)

    with pytest.raises(StructuralException):
        spen_relaxed_infer(graph, np.zeros(graph.D), SumTop(), EMPTY)
