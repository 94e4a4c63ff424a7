"""Reference values transcribed by hand, and comparators that do not reuse package code."""

import numpy as np

from fixap.hilbert import parse_basis_state

R2 = 1 / np.sqrt(2)
I = 1j

# Polarization receiver: detector -> (meaning, reversed state).  Diagonals are
# D+ = (H+V)/sqrt2 and D- = (H-V)/sqrt2, expanded over the H/V basis.
POL_REVERSAL = {
    "ch:H": ("+:0", {"a:H": R2, "b:H": -I * R2}),
    "cv:V": ("+:1", {"a:V": R2, "b:V": -I * R2}),
    "dh:H": ("×:0", {"a:H": -I / 2, "a:V": -I / 2, "b:H": 0.5, "b:V": 0.5}),
    "dv:V": ("×:1", {"a:H": -I / 2, "a:V": I / 2, "b:H": 0.5, "b:V": -0.5}),
}

# Interferometric receiver: detector -> (meaning, reversed state).
MZ_REVERSAL = {
    "s:t0": ("z:0", {"a:t0": 0.5, "a:t-1": -0.5, "b:t0": -I / 2, "b:t-1": -I / 2}),
    "d:t0": ("z:0", {"a:t0": 0.5, "a:t-1": 0.5, "b:t0": -I / 2, "b:t-1": I / 2}),
    "s:t1": ("x:1", {"a:t1": 0.5, "a:t0": -0.5, "b:t1": -I / 2, "b:t0": -I / 2}),
    "d:t1": ("x:0", {"a:t1": 0.5, "a:t0": 0.5, "b:t1": -I / 2, "b:t0": I / 2}),
    "s:t2": ("z:1", {"a:t2": 0.5, "a:t1": -0.5, "b:t2": -I / 2, "b:t1": -I / 2}),
    "d:t2": ("z:1", {"a:t2": 0.5, "a:t1": 0.5, "b:t2": -I / 2, "b:t1": I / 2}),
}

# States Eve sends when confined to the legitimate slots t'0, t'1.
MZ_RESTRICTED = {
    "z:0": {"a:t0": R2, "b:t0": -I * R2},
    "z:1": {"a:t1": R2, "b:t1": I * R2},
    "x:0": {"a:t1": 0.5, "a:t0": 0.5, "b:t1": -I / 2, "b:t0": I / 2},
    "x:1": {"a:t1": 0.5, "a:t0": -0.5, "b:t1": -I / 2, "b:t0": -I / 2},
}

# Honest outcome probabilities, rows = Alice's state, cols = Bob's meaning.
MZ_MEANINGS = ("z:0", "z:1", "x:0", "x:1")
MZ_STATS = {
    "z:0": (0.5, 0.0, 0.25, 0.25),
    "z:1": (0.0, 0.5, 0.25, 0.25),
    "x:0": (0.25, 0.25, 0.5, 0.0),
    "x:1": (0.25, 0.25, 0.0, 0.5),
}

# Interferometer images of single-photon inputs, output time n identified with input n.
def mz_image(arm: str, n: int) -> dict:
    if arm == "a":
        return {f"s:t{n}": 0.5, f"s:t{n + 1}": -0.5, f"d:t{n}": I / 2, f"d:t{n + 1}": I / 2}
    return {f"s:t{n}": I / 2, f"s:t{n + 1}": I / 2, f"d:t{n}": -0.5, f"d:t{n + 1}": 0.5}


def dense(space, amps: dict) -> np.ndarray:
    v = np.zeros(space.dim, dtype=complex)
    for lbl, a in amps.items():
        v[space.index(parse_basis_state(lbl))] += a
    return v


def phase_aligned_error(got: np.ndarray, want: np.ndarray) -> float:
    """Max entrywise error after removing the best single global phase."""
    ov = np.vdot(got, want)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(got * ph - want)))
