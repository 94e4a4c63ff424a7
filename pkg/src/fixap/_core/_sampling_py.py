"""Pure-Python round sampler (NumPy vectorized).

Each round consumes one row of four uniforms ``u``:
``u[:, 0]`` picks the sender's state, ``u[:, 1]`` the interceptor's outcome,
``u[:, 2]`` the receiver's outcome and ``u[:, 3]`` decides channel loss.
An outcome is the first index ``k`` with ``u < cdf[k]``.  The last column of
``bob_cdf`` is the no-click outcome.
"""

import numpy as np


def _search(cdf_rows, u):
    # first k with u < cdf[k]  ==  count of entries <= u
    return np.minimum((cdf_rows <= u[:, None]).sum(axis=1), cdf_rows.shape[1] - 1)


def sample_rounds(u, alice_cdf, eve_cdf, bob_cdf, loss=0.0):
    """Return ``(alice, eve, bob)`` index arrays; ``eve`` is -1 without interceptor."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    alice_cdf = np.asarray(alice_cdf, dtype=np.float64)
    bob_cdf = np.asarray(bob_cdf, dtype=np.float64)
    n = u.shape[0]
    alice = np.minimum(np.searchsorted(alice_cdf, u[:, 0], side="right"),
                       alice_cdf.size - 1).astype(np.int64)
    if eve_cdf is not None and np.size(eve_cdf):
        eve_cdf = np.asarray(eve_cdf, dtype=np.float64)
        eve = _search(eve_cdf[alice], u[:, 1]).astype(np.int64)
        row = eve
    else:
        eve = np.full(n, -1, dtype=np.int64)
        row = alice
    bob = _search(bob_cdf[row], u[:, 2]).astype(np.int64)
    if loss > 0.0:
        bob[u[:, 3] < loss] = bob_cdf.shape[1] - 1
    return alice, eve, bob


def joint_histogram(u, alice_cdf, eve_cdf, bob_cdf, loss=0.0):
    """Counts indexed ``[alice, eve + 1, bob]`` (eve slot 0 means no interceptor)."""
    alice, eve, bob = sample_rounds(u, alice_cdf, eve_cdf, bob_cdf, loss)
    n_s = len(alice_cdf)
    n_e = (np.shape(eve_cdf)[1] if eve_cdf is not None and np.size(eve_cdf) else 0) + 1
    n_k = np.shape(bob_cdf)[1]
    flat = (alice * n_e + (eve + 1)) * n_k + bob
    counts = np.bincount(flat, minlength=n_s * n_e * n_k)
    return counts.reshape(n_s, n_e, n_k).astype(np.int64)
