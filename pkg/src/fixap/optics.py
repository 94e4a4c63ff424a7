"""Linear optical elements and the composer that turns an apparatus into an isometry.

Every element acts on single-photon modes only; the vacuum passes through
unchanged.  Composition propagates each input mode through the element list
and collects the output amplitudes column by column.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .hilbert import (
    ISOMETRY_TOL,
    VACUUM,
    BasisState,
    Isometry,
    LabeledSpace,
    ModeLabel,
    StateVector,
    TwoPhotonError,
    ZERO_TOL,
    isometry_defect,
    space_of,
)

_S = 1.0 / math.sqrt(2.0)


def unit_phase(phi: float) -> complex:
    """``e^{i phi}`` with exact components at multiples of pi/2."""
    z = cmath.exp(1j * phi)
    re = round(z.real) if abs(z.real - round(z.real)) < 1e-15 else z.real
    im = round(z.imag) if abs(z.imag - round(z.imag)) < 1e-15 else z.imag
    return complex(re, im)

Amplitudes = dict[ModeLabel, complex]


class ApparatusError(ValueError):
    """Malformed apparatus description (wiring, kinds, detector list)."""


class ImageCheckError(ValueError):
    """Bob's measured space is not inside the image of his apparatus."""


class Element:
    """Base class: subclasses define ``in_arms``, ``out_arms`` and ``transfer``."""

    in_arms: tuple[str, ...] = ()
    out_arms: tuple[str, ...] = ()

    def transfer(self, mode: ModeLabel) -> Amplitudes:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _two_port(mode, in_arms, out_arms) -> Amplitudes:
    # transmitted: no phase, reflected: phase i
    a, b = in_arms
    c, d = out_arms
    if mode.arm == a:
        return {mode.with_arm(c): _S, mode.with_arm(d): 1j * _S}
    if mode.arm == b:
        return {mode.with_arm(c): 1j * _S, mode.with_arm(d): _S}
    raise ApparatusError(f"mode {mode} does not enter this beamsplitter")


@dataclass(frozen=True)
class PIBS(Element):
    """50/50 polarization-independent beamsplitter.

    ``in_arms[0]`` transmits into ``out_arms[0]`` and ``in_arms[1]`` into
    ``out_arms[1]``.
    """

    in_arms: tuple[str, str]
    out_arms: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "in_arms", tuple(self.in_arms))
        object.__setattr__(self, "out_arms", tuple(self.out_arms))
        if len(self.in_arms) != 2 or len(self.out_arms) != 2:
            raise ApparatusError("a beamsplitter has exactly two input and two output arms")
        if len(set(self.in_arms)) != 2 or len(set(self.out_arms)) != 2:
            raise ApparatusError("beamsplitter arms must be distinct")

    def transfer(self, mode):
        return _two_port(mode, self.in_arms, self.out_arms)

    def describe(self):
        return {"type": type(self).__name__, "in": list(self.in_arms), "out": list(self.out_arms)}


@dataclass(frozen=True)
class BS(PIBS):
    """50/50 beamsplitter on time-bin modes (same matrix as :class:`PIBS`)."""


@dataclass(frozen=True)
class PBS(Element):
    """Polarizing beamsplitter: H transmits with phase 1, V reflects with phase i."""

    in_arm: str
    out_transmit: str
    out_reflect: str

    def __post_init__(self):
        if self.out_transmit == self.out_reflect:
            raise ApparatusError("PBS output arms must differ")

    @property
    def in_arms(self):
        return (self.in_arm,)

    @property
    def out_arms(self):
        return (self.out_transmit, self.out_reflect)

    def transfer(self, mode):
        if mode.kind == "H":
            return {mode.with_arm(self.out_transmit): 1.0}
        if mode.kind == "V":
            return {mode.with_arm(self.out_reflect): 1j}
        raise ApparatusError(f"PBS on arm {self.in_arm} received time-bin mode {mode}")

    def describe(self):
        return {"type": "PBS", "arm": self.in_arm,
                "transmit": self.out_transmit, "reflect": self.out_reflect}


@dataclass(frozen=True)
class _OnArm(Element):
    arm: str

    @property
    def in_arms(self):
        return (self.arm,)

    @property
    def out_arms(self):
        return (self.arm,)


@dataclass(frozen=True)
class PR(_OnArm):
    """Polarization rotator: D+ -> H and D- -> e^{i theta} V."""

    theta: float = 0.0

    def transfer(self, mode):
        if mode.is_time_bin:
            raise ApparatusError(f"PR on arm {self.arm} received time-bin mode {mode}")
        ph = unit_phase(self.theta)
        h = ModeLabel(self.arm, "H")
        v = ModeLabel(self.arm, "V")
        if mode.kind == "H":
            return {h: _S, v: ph * _S}
        return {h: _S, v: -ph * _S}

    def describe(self):
        return {"type": "PR", "arm": self.arm, "theta": self.theta}


@dataclass(frozen=True)
class PhaseShift(_OnArm):
    phi: float = 0.0

    def transfer(self, mode):
        return {mode: unit_phase(self.phi)}

    def describe(self):
        return {"type": "PhaseShift", "arm": self.arm, "phi": self.phi}


@dataclass(frozen=True)
class Delay(_OnArm):
    """Shift the time-bin index of every photon on ``arm`` by ``slots``."""

    slots: int = 1

    def __post_init__(self):
        if isinstance(self.slots, bool) or not isinstance(self.slots, int) or self.slots < 1:
            raise ApparatusError(f"Delay slots must be a positive integer, got {self.slots!r}")

    def transfer(self, mode):
        if not mode.is_time_bin:
            raise ApparatusError(f"Delay on arm {self.arm} received polarization mode {mode}")
        return {ModeLabel(mode.arm, mode.kind + self.slots): 1.0}

    def describe(self):
        return {"type": "Delay", "arm": self.arm, "slots": self.slots}


@dataclass(frozen=True)
class Mirror(_OnArm):
    def transfer(self, mode):
        return {mode: 1j}

    def describe(self):
        return {"type": "Mirror", "arm": self.arm}


@dataclass(frozen=True)
class InputArm:
    """An input port of the apparatus.

    ``window`` bounds the time slots considered for time-bin arms and is
    ``None`` for polarization arms.  ``source`` lists the modes the honest
    sender drives; blocked arms are fed vacuum by Bob.
    """

    arm: str
    kind: str = "polarization"
    window: Optional[tuple[int, int]] = None
    blocked: bool = False
    source: tuple[Union[str, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ("polarization", "time-bin"):
            raise ApparatusError(f"unknown input kind {self.kind!r} on arm {self.arm}")
        if self.kind == "time-bin":
            if self.window is None:
                raise ApparatusError(f"time-bin arm {self.arm} needs a window")
            lo, hi = self.window
            if lo > hi:
                raise ApparatusError(f"empty window on arm {self.arm}")
            object.__setattr__(self, "window", (int(lo), int(hi)))
        object.__setattr__(self, "source", tuple(self.source))

    def modes(self) -> list[ModeLabel]:
        if self.kind == "polarization":
            return [ModeLabel(self.arm, "H"), ModeLabel(self.arm, "V")]
        lo, hi = self.window
        return [ModeLabel(self.arm, n) for n in range(lo, hi + 1)]

    def source_modes(self) -> list[ModeLabel]:
        if self.blocked:
            return []
        if not self.source:
            return self.modes()
        return [ModeLabel(self.arm, k) for k in self.source]


@dataclass(frozen=True)
class Meaning:
    """What Bob concludes from a click: a basis tag and a bit, or inconclusive."""

    basis: Optional[str]
    bit: Optional[int] = None

    @classmethod
    def inconclusive(cls) -> "Meaning":
        return cls(None, None)

    @classmethod
    def parse(cls, text: str) -> "Meaning":
        t = str(text).strip().strip("()").replace(" ", "")
        if t.lower() == "inconclusive":
            return cls.inconclusive()
        for sep in (",", ":"):
            if sep in t:
                tag, bit = t.rsplit(sep, 1)
                break
        else:
            tag, bit = t[:-1], t[-1:]
        tag = {"plus": "+", "times": "×", "*": "×"}.get(tag, tag)
        if not tag or bit not in ("0", "1"):
            raise ValueError(f"cannot parse meaning {text!r}")
        return cls(tag, int(bit))

    @property
    def conclusive(self) -> bool:
        return self.basis is not None

    def sort_key(self):
        return (self.basis is None, self.basis or "", self.bit or 0)

    def __str__(self):
        return "inconclusive" if self.basis is None else f"{self.basis}:{self.bit}"


@dataclass(frozen=True)
class OutcomeMap:
    """Bob's interpretation: ordered detector basis -> meaning."""

    entries: tuple[tuple[BasisState, Meaning], ...]

    def __init__(self, entries: Union[Mapping, Iterable]):
        items = entries.items() if isinstance(entries, Mapping) else entries
        items = tuple((b, m if isinstance(m, Meaning) else Meaning.parse(m)) for b, m in items)
        detectors = [b for b, _ in items]
        if len(set(detectors)) != len(detectors):
            raise ApparatusError("duplicate detector in outcome map")
        object.__setattr__(self, "entries", items)

    @property
    def detectors(self) -> tuple[BasisState, ...]:
        return tuple(b for b, _ in self.entries)

    def __getitem__(self, detector: BasisState) -> Meaning:
        for b, m in self.entries:
            if b == detector:
                return m
        raise KeyError(detector)

    def meaning_of(self, index: int) -> Meaning:
        return self.entries[index][1]

    @property
    def meanings(self) -> tuple[Meaning, ...]:
        """Distinct conclusive meanings, sorted."""
        return tuple(sorted({m for _, m in self.entries if m.conclusive}, key=Meaning.sort_key))

    def group(self, m: Meaning) -> list[BasisState]:
        return [b for b, mm in self.entries if mm == m]

    @property
    def is_injective(self) -> bool:
        ms = [m for _, m in self.entries]
        return len(set(ms)) == len(ms)


@dataclass(frozen=True)
class Apparatus:
    """A fixed receiver: input ports, element chain and detector basis."""

    name: str
    inputs: tuple[InputArm, ...]
    elements: tuple[Element, ...]
    detector_basis: tuple[BasisState, ...]
    outcome_map: Optional[OutcomeMap] = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "detector_basis", tuple(self.detector_basis))
        self.output_arms  # wiring validation
        if not self.detector_basis:
            raise ApparatusError("detector basis is empty")
        if len(set(self.detector_basis)) != len(self.detector_basis):
            raise ApparatusError("detector basis has duplicates")
        if VACUUM in self.detector_basis:
            raise ApparatusError("the vacuum cannot be a detector state")
        if self.outcome_map is not None and set(self.outcome_map.detectors) != set(self.detector_basis):
            raise ApparatusError("outcome map must cover exactly the detector basis")

    @property
    def blocked_arms(self) -> tuple[str, ...]:
        return tuple(i.arm for i in self.inputs if i.blocked)

    @property
    def output_arms(self) -> frozenset[str]:
        """Arms live after the last element; raises on cyclic or colliding wiring."""
        live = set()
        for port in self.inputs:
            if port.arm in live:
                raise ApparatusError(f"input arm {port.arm} declared twice")
            live.add(port.arm)
        dead = set()
        for k, el in enumerate(self.elements):
            for arm in el.in_arms:
                if arm in dead:
                    raise ApparatusError(
                        f"element {k} ({type(el).__name__}) reads arm {arm} after it was consumed")
                if arm not in live:
                    raise ApparatusError(
                        f"element {k} ({type(el).__name__}) reads undeclared arm {arm}")
            for arm in el.out_arms:
                if arm in el.in_arms:
                    continue
                if arm in live or arm in dead:
                    raise ApparatusError(
                        f"element {k} ({type(el).__name__}) writes arm {arm} which already exists")
            for arm in el.in_arms:
                if arm not in el.out_arms:
                    live.discard(arm)
                    dead.add(arm)
            live.update(el.out_arms)
        return frozenset(live)

    def input_modes(self) -> list[ModeLabel]:
        return sorted(m for port in self.inputs for m in port.modes())

    def source_modes(self) -> list[ModeLabel]:
        return sorted(m for port in self.inputs for m in port.source_modes())

    def propagate(self, mode: ModeLabel) -> Amplitudes:
        """Output amplitudes of one input photon."""
        state: Amplitudes = {mode: 1.0 + 0j}
        for el in self.elements:
            nxt: Amplitudes = {}
            for m, a in state.items():
                if m.arm in el.in_arms:
                    for m2, t in el.transfer(m).items():
                        nxt[m2] = nxt.get(m2, 0j) + a * t
                else:
                    nxt[m] = nxt.get(m, 0j) + a
            state = nxt
        return {m: a for m, a in state.items() if abs(a) > 1e-15}


@dataclass(frozen=True, eq=False)
class ComposedApparatus:
    """Result of :func:`compose`."""

    apparatus: Apparatus
    iso: Isometry
    full: Isometry

    @property
    def domain(self) -> LabeledSpace:
        return self.iso.domain

    @property
    def codomain(self) -> LabeledSpace:
        return self.iso.codomain

    @property
    def detector_basis(self) -> tuple[BasisState, ...]:
        return self.apparatus.detector_basis

    def detector_states(self) -> list[StateVector]:
        return [StateVector.basis_vector(self.codomain, r) for r in self.detector_basis]


def _full_isometry(app: Apparatus) -> Isometry:
    inputs = app.input_modes()
    columns = {}
    out_modes: set[ModeLabel] = set()
    for m in inputs:
        out = app.propagate(m)
        columns[m] = out
        out_modes.update(out)
    live = app.output_arms
    stray = sorted(m for m in out_modes if m.arm not in live)
    if stray:
        raise ApparatusError(f"amplitude left on consumed arm(s): {stray[:3]}")
    for r in app.detector_basis:
        if r.mode.arm not in live:
            raise ApparatusError(f"detector {r} is not on an output arm")
        out_modes.add(r.mode)
    domain = space_of(inputs)
    codomain = space_of(out_modes)
    mat = np.zeros((codomain.dim, domain.dim), dtype=complex)
    mat[codomain.index(VACUUM), domain.index(VACUUM)] = 1.0
    for m, out in columns.items():
        j = domain.index(BasisState(m))
        for m2, a in out.items():
            mat[codomain.index(BasisState(m2)), j] = a
    return Isometry(domain, codomain, mat)


def compose(app: Apparatus, tol: float = ISOMETRY_TOL) -> ComposedApparatus:
    """Build Bob's isometry on the minimal input space.

    The domain holds the vacuum, the honest source modes, and every input
    mode reached by reversing a detector state.  The image check
    ``|| M M^H r - r || <= tol`` is run for each detector state.
    """
    full = _full_isometry(app)
    detector_vecs = [StateVector.basis_vector(full.codomain, r) for r in app.detector_basis]
    for r, v in zip(app.detector_basis, detector_vecs):
        defect = full.image_defect(v)
        if defect > tol:
            raise ImageCheckError(
                f"detector state {r} is outside the apparatus image (defect {defect:.3g})")
    keep = {VACUUM} | {BasisState(m) for m in app.source_modes()}
    for v in detector_vecs:
        keep.update(full.adjoint_apply(v).support(ZERO_TOL))
    domain = LabeledSpace(keep)
    restricted = full.matrix[:, [full.domain.index(b) for b in domain.basis]]
    rows = sorted({VACUUM} | set(app.detector_basis)
                  | {full.codomain.basis[i] for i in np.flatnonzero(np.abs(restricted).max(axis=1) > 1e-15)})
    codomain = LabeledSpace(rows)
    mat = restricted[[full.codomain.index(b) for b in codomain.basis], :]
    if abs(mat[codomain.index(VACUUM), domain.index(VACUUM)] - 1.0) > tol:
        raise TwoPhotonError("vacuum does not map to vacuum")
    iso = Isometry(domain, codomain, mat, tol)
    for r in app.detector_basis:
        defect = iso.image_defect(StateVector.basis_vector(codomain, r))
        if defect > tol:
            raise ImageCheckError(
                f"detector state {r} is outside the image of the reduced apparatus (defect {defect:.3g})")
    return ComposedApparatus(app, iso, full)


def element_matrix(el: Element, modes: Sequence[ModeLabel]) -> tuple[list[ModeLabel], np.ndarray]:
    """Single-photon transfer matrix of one element over ``modes``."""
    outs: set[ModeLabel] = set()
    cols = []
    for m in modes:
        t = el.transfer(m) if m.arm in el.in_arms else {m: 1.0}
        cols.append(t)
        outs.update(t)
    out_list = sorted(outs)
    idx = {m: i for i, m in enumerate(out_list)}
    mat = np.zeros((len(out_list), len(modes)), dtype=complex)
    for j, t in enumerate(cols):
        for m, a in t.items():
            mat[idx[m], j] = a
    return out_list, mat


def element_defect(el: Element, modes: Sequence[ModeLabel]) -> float:
    return isometry_defect(element_matrix(el, modes)[1])
