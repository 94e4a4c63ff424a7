"""The two built-in receivers: polarization BB84 behind a beamsplitter, and the
time-bin Mach-Zehnder receiver for x/z BB84."""

from __future__ import annotations

import math

from .hilbert import LabeledSpace, Subspace, photon
from .optics import (
    BS,
    PBS,
    PIBS,
    PR,
    Apparatus,
    ApparatusError,
    Delay,
    InputArm,
    Meaning,
    Mirror,
    OutcomeMap,
    PhaseShift,
)

POLARIZATION = "polarization-bb84"
MACH_ZEHNDER = "mz-xz-bb84"
PRESET_NAMES = (POLARIZATION, MACH_ZEHNDER)

MZ_WINDOW = (-2, 3)


def preset_polarization(theta: float = 0.0, split: bool = True) -> Apparatus:
    """PIBS with blocked arm ``b``, rotator on ``d``, one PBS per output arm.

    With ``split=False`` the PBS stage is omitted and Bob's detectors are
    taken to resolve H/V directly on arms ``c`` and ``d``.
    """
    elements = [PIBS(("a", "b"), ("c", "d")), PR("d", theta)]
    if split:
        elements += [PBS("c", "ch", "cv"), PBS("d", "dh", "dv")]
        detectors = [photon("ch", "H"), photon("cv", "V"), photon("dh", "H"), photon("dv", "V")]
    else:
        detectors = [photon("c", "H"), photon("c", "V"), photon("d", "H"), photon("d", "V")]
    meanings = [Meaning("+", 0), Meaning("+", 1), Meaning("×", 0), Meaning("×", 1)]
    return Apparatus(
        name=POLARIZATION,
        inputs=(InputArm("a", "polarization", source=("H", "V")),
                InputArm("b", "polarization", blocked=True)),
        elements=tuple(elements),
        detector_basis=tuple(detectors),
        outcome_map=OutcomeMap(list(zip(detectors, meanings))),
    )


def preset_mach_zehnder(window: tuple[int, int] = MZ_WINDOW) -> Apparatus:
    """Unbalanced Mach-Zehnder with a one-slot detour on the upper path.

    The two mirrors on the detour each add a phase i; the fixed pi shifter
    cancels them.
    """
    lo, hi = window
    if lo > MZ_WINDOW[0] or hi < MZ_WINDOW[1]:
        raise ApparatusError(
            f"time window {window} must cover slots {MZ_WINDOW[0]}..{MZ_WINDOW[1]}")
    elements = (
        BS(("a", "b"), ("lo", "up")),
        Mirror("up"),
        Mirror("up"),
        PhaseShift("up", math.pi),
        Delay("up", 1),
        BS(("lo", "up"), ("s", "d")),
    )
    s = [photon("s", n) for n in range(3)]
    d = [photon("d", n) for n in range(3)]
    outcomes = OutcomeMap([
        (s[0], Meaning("z", 0)),
        (s[1], Meaning("x", 1)),
        (s[2], Meaning("z", 1)),
        (d[0], Meaning("z", 0)),
        (d[1], Meaning("x", 0)),
        (d[2], Meaning("z", 1)),
    ])
    return Apparatus(
        name=MACH_ZEHNDER,
        inputs=(InputArm("a", "time-bin", window=(lo, hi), source=(0, 1)),
                InputArm("b", "time-bin", window=(lo, hi), blocked=True)),
        elements=elements,
        detector_basis=tuple(s + d),
        outcome_map=outcomes,
    )


def preset(name: str, **kwargs) -> Apparatus:
    if name == POLARIZATION:
        return preset_polarization(**kwargs)
    if name == MACH_ZEHNDER:
        return preset_mach_zehnder(**kwargs)
    raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")


def legitimate_slots(domain: LabeledSpace, slots=(0, 1), label: str = "h01") -> Subspace:
    """Inputs occupying only the given time slots (the shutter's pass band)."""
    keep = [b for b in domain.basis
            if b.mode is not None and b.mode.is_time_bin and b.mode.kind in slots]
    return Subspace.coordinate(domain, keep, label)


def restriction_by_name(name: str, domain: LabeledSpace) -> Subspace:
    """``h01`` / ``none`` or a comma-separated list of input mode labels."""
    key = name.strip().lower()
    if key in ("h01", "01"):
        return legitimate_slots(domain)
    if key in ("none", "full", "all"):
        return Subspace.coordinate(domain, domain.basis, "none")
    from .hilbert import parse_basis_state

    states = [parse_basis_state(t) for t in name.split(",") if t.strip()]
    for st in states:
        if st not in domain:
            raise ValueError(f"restriction mode {st} is not an input mode of the apparatus")
    return Subspace.coordinate(domain, states, name)
