import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixap import _core
from fixap._core import _sampling_py


def _cdf_rows(rng, rows, cols):
    p = rng.random((rows, cols)) * (rng.random((rows, cols)) < 0.7)
    p[:, -1] += 1e-3
    return np.cumsum(p, axis=1) / p.sum(axis=1, keepdims=True)


def _tables(seed, n_s, n_e, n_k):
    rng = np.random.default_rng(seed)
    alice = _cdf_rows(rng, 1, n_s)[0]
    eve = _cdf_rows(rng, n_s, n_e) if n_e else None
    bob = _cdf_rows(rng, n_e if n_e else n_s, n_k)
    return rng.random((500, 4)), alice, eve, bob


def test_reference_inverse_cdf():
    u = np.array([[0.0, 0.0, 0.0, 0.9], [0.5, 0.5, 0.5, 0.9], [0.9999, 0.2, 0.75, 0.1]])
    alice_cdf = np.array([0.5, 1.0])
    bob_cdf = np.array([[0.25, 0.75, 1.0], [0.0, 0.5, 1.0]])
    a, e, b = _sampling_py.sample_rounds(u, alice_cdf, None, bob_cdf, loss=0.2)
    assert a.tolist() == [0, 1, 1]
    assert e.tolist() == [-1, -1, -1]
    # u == cdf[k] moves past k; the last round is lost
    assert b.tolist() == [0, 2, 2]


@pytest.mark.skipif("cython" not in _core.BACKENDS, reason="compiled kernel not built")
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(0, 7), st.integers(1, 8),
       st.sampled_from([0.0, 0.3]))
@settings(max_examples=60, deadline=None)
def test_compiled_kernel_matches_python(seed, n_s, n_e, n_k, loss):
    u, alice, eve, bob = _tables(seed, n_s, n_e, n_k)
    py = _core.get_backend("python")
    cy = _core.get_backend("cython")
    for x, y in zip(py.sample_rounds(u, alice, eve, bob, loss), cy.sample_rounds(u, alice, eve, bob, loss)):
        assert np.array_equal(x, y)
    assert np.array_equal(py.joint_histogram(u, alice, eve, bob, loss),
                          cy.joint_histogram(u, alice, eve, bob, loss))


def test_unknown_backend():
    with pytest.raises(ValueError):
        _core.get_backend("fortran")
