"""
Tests for the dense matrix primitives

Validates:
- matmul and transpose shape contracts
- Affine layer forward values and hand-written gradients
- LayerNorm forward statistics and hand-written gradients
- The finite-difference oracle itself
"""

import numpy as np
import pytest

from motion_engine.errors import EmptyInputError, EvaluationError, ShapeError
from motion_engine.tensor_core import (
    AffineLayer,
    LayerNormParams,
    affine_backward,
    affine_forward,
    fd_check,
    get_dtype,
    layernorm_backward,
    layernorm_forward,
    matmul,
    precision,
    transpose,
)


@pytest.fixture
def rng():
    """Seeded generator shared by the randomized tests."""
    return np.random.Generator(np.random.PCG64(1234))


def _affine_problem(rng, rows, d):
    layer = AffineLayer(weight=rng.normal(size=(d, d)), bias=rng.normal(size=d))
    return layer, rng.normal(size=(rows, d)), rng.normal(size=(rows, d))


# Test 1: matmul
def test_matmul_identity_and_hand_example():
    """I3 x M == M and a 2x2 by 2x1 product computed by hand."""
    m = np.arange(9, dtype=np.float64).reshape(3, 3)
    assert np.array_equal(matmul(np.eye(3), m), m)

    out = matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[0.0], [1.0]]))
    assert np.array_equal(out, np.array([[2.0], [4.0]]))


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
        matmul(np.ones((2, 3)), np.ones((2, 2)))


def test_matmul_associative_in_f64(rng):
    """(AB)C == A(BC) within 1e-10 on unit-scale inputs."""
    a, b, c = rng.uniform(-1, 1, (4, 5)), rng.uniform(-1, 1, (5, 6)), rng.uniform(-1, 1, (6, 3))
    assert np.max(np.abs(matmul(matmul(a, b), c) - matmul(a, matmul(b, c)))) < 1e-10


# Test 2: transpose
def test_transpose_values_and_involution(rng):
    assert np.array_equal(transpose(np.array([[1, 2], [3, 4]])), np.array([[1, 3], [2, 4]]))

    m = rng.normal(size=(50, 66)).astype(np.float32)
    t = transpose(m)
    assert t.shape == (66, 50)
    assert transpose(t).tobytes() == m.tobytes()


def test_transpose_swaps_last_two_axes_of_a_batch(rng):
    batch = rng.normal(size=(3, 5, 7))
    out = transpose(batch)
    assert out.shape == (3, 7, 5)
    assert np.array_equal(out[1], batch[1].T)


# Test 3: affine forward
def test_affine_identity_and_shift():
    x = np.array([[1.0, -2.0, 3.0], [0.5, 0.0, 4.0]])
    identity = AffineLayer(weight=np.eye(3), bias=np.zeros(3))
    shifted = AffineLayer(weight=np.eye(3), bias=np.ones(3))
    assert np.array_equal(affine_forward(identity, x), x)
    assert np.array_equal(affine_forward(shifted, x), x + 1.0)


def test_affine_hand_example():
    swap = AffineLayer(weight=np.array([[0.0, 1.0], [1.0, 0.0]]), bias=np.zeros(2))
    assert np.array_equal(affine_forward(swap, np.array([[1.0, 2.0]])), np.array([[2.0, 1.0]]))


def test_affine_rejects_non_square_weight_and_wrong_input():
    with pytest.raises(ShapeError):
        AffineLayer(weight=np.ones((2, 3)), bias=np.zeros(2))
    with pytest.raises(ShapeError):
        affine_forward(AffineLayer(weight=np.eye(2), bias=np.zeros(2)), np.ones((4, 3)))


# Test 4: affine backward
def test_affine_backward_identities(rng):
    """weight=I passes grad_out straight through; grad_bias is the column sum."""
    g = rng.normal(size=(4, 3))
    grads = affine_backward(AffineLayer(weight=np.eye(3), bias=np.zeros(3)), rng.normal(size=(4, 3)), g)
    assert np.array_equal(grads.grad_x, g)
    assert np.allclose(grads.grad_bias, g.sum(axis=0))


def _affine_fd_error(layer, x, upstream):
    grads = affine_backward(layer, x, upstream)

    def f_weight(w):
        return float(np.sum(upstream * affine_forward(AffineLayer(w, layer.bias), x)))

    def f_bias(b):
        return float(np.sum(upstream * affine_forward(AffineLayer(layer.weight, b), x)))

    def f_x(xx):
        return float(np.sum(upstream * affine_forward(layer, xx)))

    return max(
        fd_check(f_weight, layer.weight, grads.grad_weight),
        fd_check(f_bias, layer.bias, grads.grad_bias),
        fd_check(f_x, x, grads.grad_x),
    )


def test_affine_backward_matches_finite_differences_4x4(rng):
    with precision("f64"):
        assert _affine_fd_error(*_affine_problem(rng, 4, 4)) < 1e-6


def test_affine_backward_random_shapes_many_seeds():
    """Property: every random shape up to 8x8 passes at 1e-4 across 100 seeds."""
    with precision("f64"):
        for seed in range(100):
            rng = np.random.Generator(np.random.PCG64(seed))
            rows, d = int(rng.integers(1, 9)), int(rng.integers(1, 9))
            assert _affine_fd_error(*_affine_problem(rng, rows, d)) < 1e-4, f"seed {seed}"


# Test 5: layernorm forward
def test_layernorm_hand_example():
    """Row [1,2,3]: mean 2, variance 2/3."""
    p = LayerNormParams(gamma=np.ones(3), beta=np.zeros(3), epsilon=1e-12)
    out, cache = layernorm_forward(p, np.array([[1.0, 2.0, 3.0]]))
    assert np.allclose(out, [[-1.224745, 0.0, 1.224745]], atol=1e-6)
    assert np.allclose(cache.mean, [[2.0]])


def test_layernorm_constant_row_and_zero_gamma():
    p = LayerNormParams(gamma=np.ones(4), beta=np.zeros(4))
    out, _ = layernorm_forward(p, np.full((2, 4), 7.5))
    assert np.all(np.isfinite(out))
    assert np.allclose(out, 0.0)

    b = np.array([0.5, -1.0, 2.0, 3.0])
    out, _ = layernorm_forward(LayerNormParams(gamma=np.zeros(4), beta=b), np.random.default_rng(0).normal(size=(3, 4)))
    assert np.allclose(out, np.broadcast_to(b, (3, 4)))


def test_layernorm_empty_dimension_raises():
    with pytest.raises(EmptyInputError):
        layernorm_forward(LayerNormParams(gamma=np.zeros(0), beta=np.zeros(0)), np.zeros((2, 0)))


def test_layernorm_rejects_non_positive_epsilon():
    with pytest.raises(ValueError):
        LayerNormParams(gamma=np.ones(3), beta=np.zeros(3), epsilon=0.0)


def test_layernorm_output_statistics(rng):
    """gamma=1, beta=0 gives per-row mean ~0 and variance ~1."""
    with precision("f64"):
        x = rng.normal(scale=10.0, size=(20, 50))
        out, _ = layernorm_forward(LayerNormParams(gamma=np.ones(50), beta=np.zeros(50)), x)
        assert np.max(np.abs(out.mean(axis=1))) < 1e-6
        assert np.max(np.abs(out.var(axis=1) - 1.0)) < 1e-4


# Test 6: layernorm backward
def _layernorm_fd_error(p, x, upstream):
    _, cache = layernorm_forward(p, x)
    grads = layernorm_backward(p, cache, upstream)

    def f_gamma(g):
        return float(np.sum(upstream * layernorm_forward(LayerNormParams(g, p.beta), x)[0]))

    def f_beta(b):
        return float(np.sum(upstream * layernorm_forward(LayerNormParams(p.gamma, b), x)[0]))

    def f_x(xx):
        return float(np.sum(upstream * layernorm_forward(p, xx)[0]))

    return max(
        fd_check(f_gamma, p.gamma, grads.grad_gamma),
        fd_check(f_beta, p.beta, grads.grad_beta),
        fd_check(f_x, x, grads.grad_x),
    )


def test_layernorm_backward_identities(rng):
    p = LayerNormParams(gamma=np.full(5, 2.0), beta=np.zeros(5))
    x, g = rng.normal(size=(3, 5)), rng.normal(size=(3, 5))
    _, cache = layernorm_forward(p, x)
    grads = layernorm_backward(p, cache, g)
    assert np.allclose(grads.grad_beta, g.sum(axis=0))
    # Constant gamma: the input gradient of each row sums to zero.
    assert np.allclose(grads.grad_x.sum(axis=1), 0.0, atol=1e-10)


def test_layernorm_backward_matches_finite_differences_3x5(rng):
    with precision("f64"):
        p = LayerNormParams(gamma=1.0 + 0.3 * rng.normal(size=5), beta=rng.normal(size=5))
        assert _layernorm_fd_error(p, rng.normal(size=(3, 5)), rng.normal(size=(3, 5))) < 1e-6


def test_layernorm_backward_random_shapes_many_seeds():
    with precision("f64"):
        for seed in range(100):
            rng = np.random.Generator(np.random.PCG64(seed))
            rows, d = int(rng.integers(1, 9)), int(rng.integers(3, 9))
            p = LayerNormParams(gamma=1.0 + 0.3 * rng.normal(size=d), beta=rng.normal(size=d))
            error = _layernorm_fd_error(p, rng.normal(size=(rows, d)), rng.normal(size=(rows, d)))
            assert error < 1e-4, f"seed {seed}"


# Test 7: the finite-difference oracle
def test_fd_check_examples():
    def square(theta):
        return float(theta[0] ** 2)

    assert fd_check(square, np.array([3.0]), np.array([6.0]), h=1e-5) < 1e-8
    assert fd_check(lambda theta: 4.2, np.array([1.0, 2.0]), np.zeros(2)) == 0.0
    assert fd_check(square, np.array([3.0]), np.array([12.0])) == pytest.approx(1.0 / 3.0, rel=1e-6)


def test_fd_check_non_finite_raises():
    with pytest.raises(EvaluationError):
        fd_check(lambda theta: float("nan"), np.array([1.0]), np.array([0.0]))


# Test 8: precision mode
def test_precision_context_restores_previous_mode():
    before = get_dtype()
    with precision("f64"):
        assert get_dtype() == np.float64
    assert get_dtype() == before


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
