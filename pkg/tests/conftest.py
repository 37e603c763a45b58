"""Shared test helpers: finite-difference gradient oracle and tiny fixtures."""

import numpy as np
import pytest

from subgcl import autodiff as ad

FD_STEP = 1e-6


def numeric_grads(f, wrts, h=FD_STEP):
    """Central finite differences of the scalar ``f()`` w.r.t. each Value.

    ``f`` must rebuild its computation from the current ``data`` of the
    ``wrts`` leaves on every call; entries are perturbed in place.
    """
    grads = []
    for w in wrts:
        flat = w.data.reshape(-1)
        g = np.zeros(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f())
            flat[i] = orig - h
            fm = float(f())
            flat[i] = orig
            g[i] = (fp - fm) / (2.0 * h)
        grads.append(g.reshape(w.data.shape))
    return grads


def check_gradients(build, wrts, rtol=1e-4, atol=1e-7, h=FD_STEP):
    """Backward pass of ``build()`` (a scalar Value) vs the numeric oracle."""
    for w in wrts:
        w.grad = None
    out = build()
    assert out.data.shape == ()
    ad.backward(out)
    numeric = numeric_grads(lambda: build().data, wrts, h=h)
    for w, num in zip(wrts, numeric):
        assert w.grad is not None, "missing analytic gradient"
        np.testing.assert_allclose(w.grad, num, rtol=rtol, atol=atol)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_rng(seed):
    return np.random.default_rng(seed)
