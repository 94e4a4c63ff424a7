"""Labeled finite-dimensional Hilbert spaces for at-most-one-photon optics.

A space is spanned by an ordered, duplicate-free list of basis states, each
either the vacuum or a single photon in one named optical mode.  Ordering is
always lexicographic by (arm, kind) with the vacuum first, so matrices and
serialized states are reproducible.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property, total_ordering
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

ISOMETRY_TOL = 1e-10
NORM_TOL = 1e-9
PHASE_TOL = 1e-9
DROP_TOL = 1e-10
TWO_PHOTON_TOL = 1e-12
ZERO_TOL = 1e-12

POLARIZATIONS = ("H", "V")
SQRT1_2 = 1.0 / math.sqrt(2.0)


class SpaceMismatchError(ValueError):
    """Raised when a state or map is used with an incompatible space."""


class IsometryError(ValueError):
    """Raised when a matrix fails the orthonormal-columns check."""


class TwoPhotonError(ValueError):
    """Raised when an operation would populate a two-photon component."""


@total_ordering
@dataclass(frozen=True, eq=True)
class ModeLabel:
    """A single-photon optical mode: an arm plus a polarization or time slot.

    ``kind`` is ``"H"``/``"V"`` for polarization modes or an ``int`` for the
    time-bin index.  Diagonal polarizations are not modes; see
    :func:`polarization_amplitudes`.
    """

    arm: str
    kind: Union[str, int]

    def __post_init__(self):
        if not isinstance(self.arm, str) or not self.arm or ":" in self.arm:
            raise ValueError(f"invalid arm identifier {self.arm!r}")
        if isinstance(self.kind, bool):
            raise ValueError("time-bin index must be an int, not bool")
        if isinstance(self.kind, (int, np.integer)):
            object.__setattr__(self, "kind", int(self.kind))
        elif self.kind not in POLARIZATIONS:
            raise ValueError(
                f"mode kind must be 'H', 'V' or an integer time slot, got {self.kind!r}")

    @property
    def is_time_bin(self) -> bool:
        return isinstance(self.kind, int)

    def sort_key(self):
        if self.is_time_bin:
            return (self.arm, 1, "", self.kind)
        return (self.arm, 0, self.kind, 0)

    def __lt__(self, other):
        if not isinstance(other, ModeLabel):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def with_arm(self, arm: str) -> "ModeLabel":
        return ModeLabel(arm, self.kind)

    def __str__(self):
        if self.is_time_bin:
            return f"{self.arm}:t{self.kind}"
        return f"{self.arm}:{self.kind}"


@total_ordering
@dataclass(frozen=True, eq=True)
class BasisState:
    """Vacuum (``mode is None``) or one photon in ``mode``."""

    mode: ModeLabel | None = None

    @property
    def is_vacuum(self) -> bool:
        return self.mode is None

    def sort_key(self):
        if self.mode is None:
            return (0,)
        return (1,) + self.mode.sort_key()

    def __lt__(self, other):
        if not isinstance(other, BasisState):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __str__(self):
        return "V" if self.mode is None else str(self.mode)


VACUUM = BasisState()

_LABEL_RE = re.compile(r"^(?P<arm>[^:\s]+):(?:(?P<pol>[HV])|t'?(?P<slot>[+-]?\d+))$")


def parse_mode(text: str) -> ModeLabel:
    """Parse ``<arm>:<H|V>`` or ``<arm>:t<signed-int>``."""
    m = _LABEL_RE.match(text.strip())
    if m is None:
        raise ValueError(f"cannot parse mode label {text!r}")
    if m.group("pol"):
        return ModeLabel(m.group("arm"), m.group("pol"))
    return ModeLabel(m.group("arm"), int(m.group("slot")))


def parse_basis_state(text: str) -> BasisState:
    if text.strip() == "V":
        return VACUUM
    return BasisState(parse_mode(text))


def photon(arm: str, kind: Union[str, int]) -> BasisState:
    return BasisState(ModeLabel(arm, kind))


def polarization_amplitudes(pol: str) -> dict[str, complex]:
    """Expand a polarization name (H, V, D+, D-) into H/V amplitudes."""
    if pol == "H":
        return {"H": 1.0}
    if pol == "V":
        return {"V": 1.0}
    if pol in ("D+", "+45"):
        return {"H": SQRT1_2, "V": SQRT1_2}
    if pol in ("D-", "-45"):
        return {"H": SQRT1_2, "V": -SQRT1_2}
    raise ValueError(f"unknown polarization {pol!r}")


@dataclass(frozen=True)
class LabeledSpace:
    """Finite space spanned by sorted, distinct basis states."""

    basis: tuple[BasisState, ...]

    def __init__(self, basis: Iterable[BasisState]):
        states = tuple(sorted(basis))
        if not states:
            raise ValueError("a labeled space needs at least one basis state")
        if len(set(states)) != len(states):
            raise ValueError("duplicate basis states")
        object.__setattr__(self, "basis", states)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def _index(self) -> dict[BasisState, int]:
        return {b: i for i, b in enumerate(self.basis)}

    def index(self, state: BasisState) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise SpaceMismatchError(f"{state} is not a basis state of this space") from None

    def __contains__(self, state) -> bool:
        return state in self._index

    @cached_property
    def arms(self) -> frozenset[str]:
        return frozenset(b.mode.arm for b in self.basis if b.mode is not None)

    @property
    def labels(self) -> list[str]:
        return [str(b) for b in self.basis]

    def __iter__(self):
        return iter(self.basis)

    def __len__(self):
        return len(self.basis)


def space_of(modes: Iterable[ModeLabel], vacuum: bool = True) -> LabeledSpace:
    states = [BasisState(m) for m in modes]
    if vacuum:
        states.append(VACUUM)
    return LabeledSpace(states)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the basis of ``space``.

    Instances are immutable.  Arithmetic returns new vectors and does not
    renormalize; call :meth:`normalized` where a physical state is needed.
    """

    space: LabeledSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.shape[0] != self.space.dim:
            raise SpaceMismatchError(
                f"expected {self.space.dim} amplitudes, got {amps.shape[0]}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_dict(cls, space: LabeledSpace, amps: Mapping) -> "StateVector":
        """Build from ``{BasisState | ModeLabel | str: amplitude}``."""
        vec = np.zeros(space.dim, dtype=complex)
        for key, value in amps.items():
            vec[space.index(_as_basis_state(key))] += value
        return cls(space, vec)

    @classmethod
    def basis_vector(cls, space: LabeledSpace, state) -> "StateVector":
        return cls.from_dict(space, {state: 1.0})

    def amplitude(self, state) -> complex:
        return complex(self.amplitudes[self.space.index(_as_basis_state(state))])

    def as_dict(self, tol: float = 0.0) -> dict[BasisState, complex]:
        return {b: complex(a) for b, a in zip(self.space.basis, self.amplitudes)
                if abs(a) > tol}

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n <= ZERO_TOL:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        _require_same(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def canonical(self) -> "StateVector":
        """Same ray, first nonzero amplitude real and positive."""
        nz = np.flatnonzero(np.abs(self.amplitudes) > ZERO_TOL)
        if nz.size == 0:
            return self
        lead = self.amplitudes[nz[0]]
        out = self.amplitudes * (abs(lead) / lead)
        out[nz[0]] = abs(lead)
        return StateVector(self.space, out)

    def support(self, tol: float = ZERO_TOL) -> list[BasisState]:
        return [b for b, a in zip(self.space.basis, self.amplitudes) if abs(a) > tol]

    def embed(self, space: LabeledSpace) -> "StateVector":
        """Re-express in a larger space that contains every basis state here."""
        vec = np.zeros(space.dim, dtype=complex)
        for b, a in zip(self.space.basis, self.amplitudes):
            if b in space:
                vec[space.index(b)] = a
            elif abs(a) > ZERO_TOL:
                raise SpaceMismatchError(f"{b} has amplitude but is not in the target space")
        return StateVector(space, vec)

    def __add__(self, other: "StateVector") -> "StateVector":
        _require_same(self.space, other.space)
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _require_same(self.space, other.space)
        return StateVector(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.space, self.amplitudes * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "StateVector":
        return StateVector(self.space, self.amplitudes / complex(scalar))

    def __neg__(self):
        return StateVector(self.space, -self.amplitudes)

    def __repr__(self):
        terms = " + ".join(f"({_fmt_complex(a)})|{b}>" for b, a in self.as_dict(ZERO_TOL).items())
        return f"StateVector({terms or '0'})"


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}j"


def _as_basis_state(key) -> BasisState:
    if isinstance(key, BasisState):
        return key
    if isinstance(key, ModeLabel):
        return BasisState(key)
    if isinstance(key, str):
        return parse_basis_state(key)
    raise TypeError(f"cannot interpret {key!r} as a basis state")


def _require_same(a: LabeledSpace, b: LabeledSpace):
    if a != b:
        raise SpaceMismatchError("states live in different spaces")


def tensor(s1: StateVector, s2: StateVector) -> StateVector:
    """Product of states on disjoint arms, truncated to at most one photon.

    The result lives on vacuum plus every single-photon mode of both factors.
    Photon-photon components must vanish; otherwise :class:`TwoPhotonError`.
    """
    overlap = s1.space.arms & s2.space.arms
    if overlap:
        raise SpaceMismatchError(f"factors share arms {sorted(overlap)}")
    vac1 = s1.amplitude(VACUUM) if VACUUM in s1.space else 0.0
    vac2 = s2.amplitude(VACUUM) if VACUUM in s2.space else 0.0
    photons1 = {b: a for b, a in s1.as_dict().items() if not b.is_vacuum}
    photons2 = {b: a for b, a in s2.as_dict().items() if not b.is_vacuum}
    worst = max((abs(a) for a in photons1.values()), default=0.0) * max(
        (abs(a) for a in photons2.values()), default=0.0)
    if worst > TWO_PHOTON_TOL:
        raise TwoPhotonError(
            f"product populates a two-photon component (amplitude {worst:.3g})")
    modes = [b.mode for b in s1.space.basis if b.mode is not None]
    modes += [b.mode for b in s2.space.basis if b.mode is not None]
    joint = space_of(modes)
    amps = {VACUUM: vac1 * vac2}
    for b, a in photons1.items():
        amps[b] = a * vac2
    for b, a in photons2.items():
        amps[b] = vac1 * a
    return StateVector.from_dict(joint, amps)


def states_equal_up_to_global_phase(s1: StateVector, s2: StateVector,
                                    tol: float = PHASE_TOL) -> bool:
    if s1.space != s2.space:
        return False
    return abs(s1.inner(s2)) >= 1.0 - tol


def global_phase_between(s1: StateVector, s2: StateVector) -> complex:
    """Unit phase ``c`` minimizing ``|s2 - c s1|``."""
    ov = s1.inner(s2)
    return ov / abs(ov) if abs(ov) > ZERO_TOL else 1.0


@dataclass(frozen=True, eq=False)
class Isometry:
    """Linear map with orthonormal columns, ``codomain.dim x domain.dim``."""

    domain: LabeledSpace
    codomain: LabeledSpace
    matrix: np.ndarray
    tol: float = field(default=ISOMETRY_TOL, compare=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise SpaceMismatchError(
                f"matrix shape {m.shape} does not match "
                f"({self.codomain.dim}, {self.domain.dim})")
        if self.codomain.dim < self.domain.dim:
            raise IsometryError("codomain is smaller than domain")
        object.__setattr__(self, "matrix", m)
        dev = isometry_defect(m)
        if dev > self.tol:
            raise IsometryError(f"columns not orthonormal (max |M^H M - I| = {dev:.3g})")

    @classmethod
    def identity(cls, space: LabeledSpace) -> "Isometry":
        return cls(space, space, np.eye(space.dim))

    @property
    def is_unitary(self) -> bool:
        return self.domain.dim == self.codomain.dim

    def apply(self, s: StateVector) -> StateVector:
        if s.space != self.domain:
            raise SpaceMismatchError("state is not in the isometry's domain")
        return StateVector(self.codomain, self.matrix @ s.amplitudes)

    def adjoint_apply(self, s: StateVector) -> StateVector:
        if s.space != self.codomain:
            raise SpaceMismatchError("state is not in the isometry's codomain")
        return StateVector(self.domain, self.matrix.conj().T @ s.amplitudes)

    def image_defect(self, s: StateVector) -> float:
        """``|| M M^H s - s ||``; zero iff ``s`` lies in the image."""
        back = self.apply(self.adjoint_apply(s))
        return (back - s).norm()

    def restrict(self, domain: LabeledSpace) -> "Isometry":
        """Restrict to a coordinate subspace of the domain."""
        cols = [self.domain.index(b) for b in domain.basis]
        return Isometry(domain, self.codomain, self.matrix[:, cols], self.tol)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return self.apply(other)
        return NotImplemented


def isometry_defect(m: np.ndarray) -> float:
    gram = m.conj().T @ m
    return float(np.max(np.abs(gram - np.eye(m.shape[1])), initial=0.0))


def gram_schmidt(vectors: Sequence[np.ndarray], drop_tol: float = DROP_TOL) -> np.ndarray:
    """Orthonormalize columns, dropping ones dependent within ``drop_tol``.

    Uses modified Gram-Schmidt with one re-orthogonalization pass.
    Returns an ``n x k`` array.
    """
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        for _ in range(2):
            for q in basis:
                w = w - np.vdot(q, w) * q
        n = np.linalg.norm(w)
        if n > drop_tol:
            basis.append(w / n)
    if not basis:
        return np.zeros((len(vectors[0]) if len(vectors) else 0, 0), dtype=complex)
    return np.column_stack(basis)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of a set of vectors in ``ambient``, stored as orthonormal columns."""

    ambient: LabeledSpace
    basis_matrix: np.ndarray
    label: str = ""

    @classmethod
    def spanned_by(cls, ambient: LabeledSpace, vectors: Iterable[StateVector],
                   label: str = "", drop_tol: float = DROP_TOL) -> "Subspace":
        cols = []
        for v in vectors:
            if v.space != ambient:
                raise SpaceMismatchError("spanning vector outside the ambient space")
            cols.append(v.amplitudes)
        if not cols:
            return cls(ambient, np.zeros((ambient.dim, 0), dtype=complex), label)
        return cls(ambient, gram_schmidt(cols, drop_tol), label)

    @classmethod
    def coordinate(cls, ambient: LabeledSpace, states: Iterable, label: str = "") -> "Subspace":
        vecs = [StateVector.basis_vector(ambient, s) for s in states]
        return cls.spanned_by(ambient, vecs, label)

    def __post_init__(self):
        object.__setattr__(self, "basis_matrix", _frozen(self.basis_matrix))

    @property
    def dim(self) -> int:
        return self.basis_matrix.shape[1]

    @property
    def vectors(self) -> list[StateVector]:
        return [StateVector(self.ambient, self.basis_matrix[:, k]) for k in range(self.dim)]

    @cached_property
    def projector(self) -> np.ndarray:
        q = self.basis_matrix
        return q @ q.conj().T

    def project(self, s: StateVector) -> tuple[StateVector, float]:
        """Orthogonal projection and squared norm of the residual."""
        if s.space != self.ambient:
            raise SpaceMismatchError("state is not in the ambient space")
        q = self.basis_matrix
        proj = q @ (q.conj().T @ s.amplitudes)
        residual = float(np.vdot(s.amplitudes, s.amplitudes).real
                         - np.vdot(proj, proj).real)
        return StateVector(self.ambient, proj), max(residual, 0.0)

    def contains(self, s: StateVector, tol: float = DROP_TOL) -> bool:
        return self.project(s)[1] <= tol


def project_onto(sub: Subspace, s: StateVector) -> tuple[StateVector, float]:
    return sub.project(s)


# -- serialization -----------------------------------------------------------

def state_to_pairs(s: StateVector, canonical: bool = True) -> list:
    """``[[label, [re, im]], ...]`` over the full basis, in basis order."""
    v = s.canonical() if canonical else s
    return [[str(b), [float(a.real), float(a.imag)]] for b, a in zip(v.space.basis, v.amplitudes)]


def state_from_pairs(pairs: Sequence) -> StateVector:
    labels = [parse_basis_state(p[0]) for p in pairs]
    space = LabeledSpace(labels)
    return StateVector.from_dict(space, {b: complex(p[1][0], p[1][1]) for b, p in zip(labels, pairs)})

