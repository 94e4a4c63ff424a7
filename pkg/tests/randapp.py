"""Random apparatus generator shared by the property and acceptance suites."""

import numpy as np

from fixap.hilbert import BasisState, ModeLabel, StateVector
from fixap.optics import (
    BS,
    PBS,
    PIBS,
    PR,
    Apparatus,
    Delay,
    InputArm,
    Meaning,
    Mirror,
    OutcomeMap,
    PhaseShift,
    _full_isometry,
)

ARMS = "abcd"


def _elements(rng, kind, arms, n_el):
    live = list(arms)
    fresh = iter(f"p{k}" for k in range(100))
    out = []
    for _ in range(n_el):
        choice = rng.integers(0, 5)
        if choice == 0 and len(live) >= 2:
            i, j = rng.choice(len(live), 2, replace=False)
            x, y = live[i], live[j]
            outs = (x, y) if rng.random() < 0.5 else (y, x)
            out.append((BS if kind == "time-bin" else PIBS)((x, y), outs))
        elif choice == 1:
            out.append(PhaseShift(str(rng.choice(live)), float(rng.uniform(0, 2 * np.pi))))
        elif choice == 2:
            out.append(Mirror(str(rng.choice(live))))
        elif choice == 3 and kind == "time-bin":
            out.append(Delay(str(rng.choice(live)), int(rng.integers(1, 3))))
        elif choice == 3:
            out.append(PR(str(rng.choice(live)), float(rng.uniform(0, 2 * np.pi))))
        elif choice == 4 and kind == "polarization" and len(live) < 4:
            arm = str(rng.choice(live))
            t, r = next(fresh), next(fresh)
            out.append(PBS(arm, t, r))
            live.remove(arm)
            live += [t, r]
        else:
            out.append(PhaseShift(str(rng.choice(live)), float(rng.uniform(0, 2 * np.pi))))
    return out, sorted(live)


def random_apparatus(rng, max_group=3):
    """Random receiver over <= 4 arms and <= 6 time slots, with a random grouping."""
    while True:
        kind = "time-bin" if rng.random() < 0.6 else "polarization"
        n_arms = int(rng.integers(1, 5))
        arms = list(ARMS[:n_arms])
        width = int(rng.integers(1, 7))
        blocked = [bool(rng.random() < 0.4) for _ in arms]
        blocked[0] = False
        inputs = []
        for arm, blk in zip(arms, blocked):
            if kind == "time-bin":
                src = tuple(sorted(rng.choice(width, int(rng.integers(1, width + 1)), replace=False).tolist()))
                inputs.append(InputArm(arm, "time-bin", (0, width - 1), blk, () if blk else src))
            else:
                inputs.append(InputArm(arm, "polarization", None, blk))
        elements, live = _elements(rng, kind, arms, int(rng.integers(1, 9)))
        probe = Apparatus("probe", tuple(inputs), tuple(elements),
                          (BasisState(ModeLabel(live[0], 0 if kind == "time-bin" else "H")),))
        full = _full_isometry(probe)
        candidates = [b for b in full.codomain.basis
                      if b.mode is not None and b.mode.arm in live
                      and full.image_defect(StateVector.basis_vector(full.codomain, b)) <= 1e-10]
        if not candidates:
            continue
        k = int(rng.integers(1, min(len(candidates), 8) + 1))
        picked = [candidates[i] for i in sorted(rng.choice(len(candidates), k, replace=False))]
        order = rng.permutation(len(picked))
        entries, g, pos = [], 0, 0
        while pos < len(order):
            size = int(rng.integers(1, max_group + 1))
            for i in order[pos:pos + size]:
                entries.append((picked[i], Meaning(f"g{g}", 0)))
            pos += size
            g += 1
        return Apparatus("random", tuple(inputs), tuple(elements), tuple(picked), OutcomeMap(entries))


def random_state(rng, space):
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return StateVector(space, v / np.linalg.norm(v))
