"""Autodiff engine: exact values, error contracts, finite-difference oracles."""

import numpy as np
import pytest

from subgcl import autodiff as ad
from subgcl.errors import ContractError, DimensionError, DomainError, ParameterError

from conftest import check_gradients, make_rng


def scalar(x):
    return ad.Value(np.asarray(x, dtype=np.float64), requires_grad=True)


def test_add_mul_chain_grads():
    a = scalar(2.0)
    b = scalar(3.0)
    out = a * b + b
    assert out.data == 9.0
    ad.backward(out)
    assert a.grad == 3.0  # d(ab+b)/da = b
    assert b.grad == 3.0  # d(ab+b)/db = a + 1


def test_relu_grad_negative_input_is_zero():
    x = scalar(-1.0)
    out = x.relu()
    assert out.data == 0.0
    ad.backward(out)
    assert x.grad == 0.0


def test_log_clamps_below():
    x = scalar(0.0)
    out = x.log()
    assert out.data == pytest.approx(np.log(1e-12))
    ad.backward(out)
    assert np.isfinite(x.grad)


def test_softmax_known_values():
    x = ad.Value([np.log(2.0), 0.0])
    out = ad.softmax(x)
    np.testing.assert_allclose(out.data, [2.0 / 3.0, 1.0 / 3.0], rtol=1e-12)


def test_softmax_rows_sum_to_one():
    rng = make_rng(7)
    x = ad.Value(rng.normal(size=(4, 6)))
    out = ad.softmax(x, temperature=0.5)
    np.testing.assert_allclose(out.data.sum(axis=1), np.ones(4), rtol=1e-12)


def test_backward_twice_doubles_grads():
    a = scalar(2.0)
    b = scalar(3.0)
    out = a * b + b
    ad.backward(out)
    ad.backward(out)
    assert a.grad == 6.0
    assert b.grad == 6.0
    a.zero_grad()
    assert a.grad is None


def test_backward_rejects_non_scalar_root():
    x = ad.Value(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        ad.backward(x + 1.0)


def test_elementwise_shape_mismatch():
    a = ad.Value(np.ones(3))
    b = ad.Value(np.ones(4))
    with pytest.raises(DimensionError):
        ad.add(a, b)


def test_matmul_inner_mismatch():
    a = ad.Value(np.ones((2, 3)))
    b = ad.Value(np.ones((4, 2)))
    with pytest.raises(DimensionError):
        ad.matmul(a, b)


def test_softmax_temperature_must_be_positive():
    x = ad.Value(np.ones(3))
    with pytest.raises(ParameterError):
        ad.softmax(x, temperature=0.0)
    with pytest.raises(ParameterError):
        ad.sample_gumbel_softmax(x, -1.0, make_rng(0))


def test_empty_reduction_extent():
    x = ad.Value(np.ones((0, 3)))
    with pytest.raises(DomainError):
        ad.reduce_sum(x, axis=0)
    with pytest.raises(DomainError):
        ad.reduce_mean(ad.Value(np.zeros(0)))


def test_reduce_max_tie_routes_to_lowest_index():
    x = ad.Value(np.array([1.0, 3.0, 3.0]), requires_grad=True)
    out = ad.reduce_max(x)
    assert out.data == 3.0
    ad.backward(out)
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])


def test_gather_rows_repeated_indices_accumulate():
    x = ad.Value(np.arange(6.0).reshape(3, 2), requires_grad=True)
    out = ad.reduce_sum(ad.gather_rows(x, [1, 1, 2]))
    ad.backward(out)
    np.testing.assert_array_equal(x.grad, [[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]])


def test_adjacency_from_edges_forward_and_grad():
    w = ad.Value(np.array([0.5, 2.0]), requires_grad=True)
    adj = ad.adjacency_from_edges(w, [0, 1], [1, 2], 3)
    expect = np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 2.0], [0.0, 2.0, 0.0]])
    np.testing.assert_array_equal(adj.data, expect)
    coeff = ad.Value(np.arange(9.0).reshape(3, 3))
    ad.backward(ad.reduce_sum(ad.mul(adj, coeff)))
    # dw_e = coeff[u, v] + coeff[v, u]
    np.testing.assert_array_equal(w.grad, [1.0 + 3.0, 5.0 + 7.0])


def test_adjacency_from_edges_rejects_self_loop():
    w = ad.Value(np.ones(1))
    with pytest.raises(ContractError):
        ad.adjacency_from_edges(w, [2], [2], 3)


def test_straight_through_onehot_forward_and_identity_grad():
    soft = ad.Value(np.array([[0.2, 0.5, 0.3], [0.9, 0.05, 0.05]]), requires_grad=True)
    hard = ad.straight_through_onehot(soft)
    np.testing.assert_array_equal(hard.data, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    coeff = ad.Value(np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    ad.backward(ad.reduce_sum(ad.mul(hard, coeff)))
    np.testing.assert_array_equal(soft.grad, coeff.data)


def test_straight_through_onehot_forced_indices():
    soft = ad.Value(np.array([[0.2, 0.8], [0.7, 0.3]]))
    hard = ad.straight_through_onehot(soft, indices=[0, 0])
    np.testing.assert_array_equal(hard.data, [[1.0, 0.0], [1.0, 0.0]])


def test_gumbel_hard_sample_is_exact_onehot():
    logits = ad.Value(np.array([0.3, -0.2, 1.0]), requires_grad=True)
    out = ad.gumbel_softmax(logits, temperature=0.7, hard=True, rng=make_rng(3))
    assert sorted(out.data.tolist()) == [0.0, 0.0, 1.0]
    ad.backward(ad.reduce_sum(ad.mul(out, ad.Value(np.array([1.0, 2.0, 3.0])))))
    assert np.any(logits.grad != 0.0)


def test_gumbel_argmax_frequencies_match_softmax():
    # Gumbel-max property, Monte-Carlo check (the acceptance suite runs the
    # larger 1e5-sample version over ten logit vectors).
    rng = make_rng(11)
    logits = np.array([0.5, -0.3, 0.9, 0.0])
    n = 20000
    tiled = ad.Value(np.tile(logits, (n, 1)))
    soft = ad.sample_gumbel_softmax(tiled, 0.4, rng)
    counts = np.bincount(np.argmax(soft.data, axis=1), minlength=4) / n
    np.testing.assert_allclose(counts, ad.softmax(ad.Value(logits)).data, atol=0.02)


def test_parameter_store_duplicate_name():
    store = ad.ParameterStore()
    store.add("w", np.zeros(2))
    with pytest.raises(ParameterError):
        store.add("w", np.zeros(2))


def test_parameter_store_roundtrip_exact():
    rng = make_rng(5)
    store = ad.ParameterStore()
    store.add("layer.w", rng.normal(size=(3, 4)))
    store.add("layer.b", rng.normal(size=4))
    state = store.state_dict()

    other = ad.ParameterStore()
    other.add("layer.w", np.zeros((3, 4)))
    other.add("layer.b", np.zeros(4))
    other.load_state_dict(state)
    np.testing.assert_array_equal(other["layer.w"].data, store["layer.w"].data)
    np.testing.assert_array_equal(other["layer.b"].data, store["layer.b"].data)

    bad = ad.ParameterStore()
    bad.add("layer.w", np.zeros((4, 3)))
    bad.add("layer.b", np.zeros(4))
    with pytest.raises(DimensionError):
        bad.load_state_dict(state)


def test_value_reuse_accumulates_both_paths():
    x = ad.Value(np.array([1.5, -0.5]), requires_grad=True)
    check_gradients(lambda: ad.reduce_sum(ad.mul(x, x) + ad.mul(x, ad.Value([2.0, 3.0]))), [x])


@pytest.mark.parametrize("seed", range(10))
def test_primitive_gradients_match_finite_differences(seed):
    rng = make_rng(seed)
    a = ad.Value(rng.normal(size=(3, 4)), requires_grad=True)
    b = ad.Value(rng.normal(size=(3, 4)), requires_grad=True)
    c = ad.Value(rng.normal(size=(4, 2)), requires_grad=True)
    s = ad.Value(rng.normal(), requires_grad=True)
    pos = ad.Value(rng.uniform(0.5, 2.0, size=(3, 4)), requires_grad=True)
    w = ad.Value(rng.normal(size=3), requires_grad=True)
    bias = ad.Value(rng.normal(size=4), requires_grad=True)

    check_gradients(lambda: ad.reduce_sum(ad.mul(a + b, ad.sub(a, b))), [a, b])
    check_gradients(lambda: ad.reduce_sum(ad.div(a, pos)), [a, pos])
    check_gradients(lambda: ad.reduce_sum(ad.mul(a, s)), [a, s])
    check_gradients(lambda: ad.reduce_sum(ad.matmul(a, c)), [a, c])
    check_gradients(lambda: ad.reduce_sum(ad.matmul(ad.transpose(a), b @ c)), [a, b, c])
    check_gradients(lambda: ad.reduce_sum(pos.log() + pos.sqrt() + pos.exp()), [pos])
    # keep relu inputs away from the kink
    shifted = ad.Value(rng.uniform(0.2, 1.0, size=(3, 4)) * rng.choice([-1.0, 1.0], size=(3, 4)), requires_grad=True)
    check_gradients(lambda: ad.reduce_sum(shifted.relu()), [shifted])
    check_gradients(lambda: ad.reduce_sum(ad.add_bias(a, bias)), [a, bias])
    check_gradients(lambda: ad.reduce_sum(ad.mul(ad.scale_rows(a, w), b)), [a, w])
    check_gradients(lambda: ad.reduce_sum(ad.concat([a, b], axis=1) @ ad.concat([c, c], axis=0)), [a, b, c])
    check_gradients(lambda: ad.reduce_sum(ad.gather_rows(a, [0, 2, 2])), [a])
    coeff = ad.Value(rng.normal(size=(3, 1)))
    check_gradients(lambda: ad.reduce_mean(ad.reshape(a, (4, 3)) @ coeff), [a])
    check_gradients(lambda: ad.reduce_max(a) + ad.reduce_sum(ad.reduce_max(a, axis=1)), [a])
    check_gradients(lambda: ad.reduce_sum(ad.reduce_mean(a, axis=0, keepdims=True)), [a])


@pytest.mark.parametrize("seed", range(10))
def test_softmax_jacobian_matches_finite_differences(seed):
    rng = make_rng(100 + seed)
    x = ad.Value(rng.normal(size=(2, 5)), requires_grad=True)
    coeff = ad.Value(rng.normal(size=(2, 5)))
    tau = float(rng.uniform(0.3, 2.0))
    check_gradients(lambda: ad.reduce_sum(ad.mul(ad.softmax(x, temperature=tau), coeff)), [x])


@pytest.mark.parametrize("seed", range(10))
def test_gumbel_soft_sample_gradient_with_common_noise(seed):
    # Fixing the uniform draws makes the soft sample a smooth function of the
    # logits, so central differences apply.
    rng = make_rng(200 + seed)
    logits = ad.Value(rng.normal(size=(3, 4)), requires_grad=True)
    coeff = ad.Value(rng.normal(size=(3, 4)))

    def build():
        soft = ad.sample_gumbel_softmax(logits, 0.6, make_rng(seed))
        return ad.reduce_sum(ad.mul(soft, coeff))

    check_gradients(build, [logits])


def test_adjacency_gradient_matches_finite_differences():
    rng = make_rng(42)
    w = ad.Value(rng.uniform(0.1, 1.0, size=4), requires_grad=True)
    us = np.array([0, 0, 1, 2])
    vs = np.array([1, 2, 3, 3])
    coeff = ad.Value(rng.normal(size=(4, 4)))
    check_gradients(
        lambda: ad.reduce_sum(ad.mul(ad.adjacency_from_edges(w, us, vs, 4), coeff)), [w]
    )
