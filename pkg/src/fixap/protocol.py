"""BB84 over a fixed receiver: encoders, measurement, interception and sessions.

Sessions are reproducible: round ``i`` draws its four uniforms from counter
``i`` of a Philox stream keyed by the session seed, so any chunking or
thread count gives the same histogram.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from . import _core
from .attack import (
    GROUPED,
    PER_OUTCOME,
    AttackPlan,
    PlanVerificationError,
    coarsen,
    detector_probabilities,
    synthesize_grouped,
    synthesize_per_outcome,
    verify_plan,
)
from .hilbert import (
    BasisState,
    Isometry,
    LabeledSpace,
    ModeLabel,
    SpaceMismatchError,
    StateVector,
    space_of,
)
from .optics import Apparatus, ComposedApparatus, Meaning, OutcomeMap, compose
from .presets import MACH_ZEHNDER, POLARIZATION, preset, restriction_by_name

NO_CLICK = "no_click"
ALARM_TOL = 1e-10
PROB_FLOOR = 1e-14
CHUNK = 1 << 16

SQ = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class ProtocolScheme:
    """Sender encodings plus the receiver they are sent into.

    ``alice_states`` maps ``Meaning(basis, bit)`` to amplitudes over the
    apparatus' source modes.
    """

    name: str
    apparatus: Apparatus
    alice_states: tuple[tuple[Meaning, StateVector], ...]
    monitored_input_modes: frozenset = frozenset()
    priors: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "alice_states", tuple(self.alice_states))
        object.__setattr__(self, "monitored_input_modes", frozenset(self.monitored_input_modes))
        if self.apparatus.outcome_map is None:
            raise ValueError("the scheme's apparatus needs an outcome map")
        by_basis: dict = {}
        for m, st in self.alice_states:
            if st.space != self.source_space:
                raise SpaceMismatchError(f"sender state {m} is not over the source modes")
            if not st.is_normalized():
                raise ValueError(f"sender state {m} is not normalized")
            by_basis.setdefault(m.basis, []).append(st)
        for tag, sts in by_basis.items():
            for i in range(len(sts)):
                for j in range(i + 1, len(sts)):
                    if abs(sts[i].inner(sts[j])) > 1e-9:
                        raise ValueError(f"sender states of basis {tag} are not orthogonal")
        if self.priors is not None:
            if len(self.priors) != len(self.alice_states) or abs(sum(self.priors) - 1) > 1e-9:
                raise ValueError("priors must give one probability per sender state, summing to 1")
        for mode in self.monitored_input_modes:
            if BasisState(mode) not in self.composed.full.domain:
                raise ValueError(f"monitored mode {mode} is not an input mode of the apparatus")

    @cached_property
    def source_space(self) -> LabeledSpace:
        return space_of(self.apparatus.source_modes(), vacuum=False)

    @cached_property
    def composed(self) -> ComposedApparatus:
        return compose(self.apparatus)

    @property
    def iso(self) -> Isometry:
        return self.composed.iso

    @property
    def mu(self) -> OutcomeMap:
        return self.apparatus.outcome_map

    @property
    def keys(self) -> list[Meaning]:
        return [m for m, _ in self.alice_states]

    @property
    def prior_array(self) -> np.ndarray:
        if self.priors is None:
            return np.full(len(self.alice_states), 1.0 / len(self.alice_states))
        return np.asarray(self.priors, dtype=float)

    @cached_property
    def embedding(self) -> Isometry:
        """Inclusion of the sender's space into the apparatus domain."""
        dom = self.iso.domain
        mat = np.zeros((dom.dim, self.source_space.dim), dtype=complex)
        for j, b in enumerate(self.source_space.basis):
            mat[dom.index(b), j] = 1.0
        return Isometry(self.source_space, dom, mat)

    def encoded(self, m: Meaning) -> StateVector:
        for k, st in self.alice_states:
            if k == m:
                return self.embedding.apply(st)
        raise KeyError(f"{m} is not a sender state of {self.name}")

    def honest_source(self) -> list[tuple[StateVector, float]]:
        return [(self.embedding.apply(st), float(p))
                for (_, st), p in zip(self.alice_states, self.prior_array)]

    def with_monitor(self, modes) -> "ProtocolScheme":
        return ProtocolScheme(self.name, self.apparatus, self.alice_states,
                              frozenset(modes), self.priors)


def _source_state(space: LabeledSpace, amps: Mapping) -> StateVector:
    return StateVector.from_dict(space, amps)


def scheme_by_name(name: str, theta: float = 0.0, monitor=(), priors=None) -> ProtocolScheme:
    if name == MACH_ZEHNDER:
        app = preset(MACH_ZEHNDER)
        space = space_of(app.source_modes(), vacuum=False)
        t0, t1 = ModeLabel("a", 0), ModeLabel("a", 1)
        states = [
            (Meaning("z", 0), _source_state(space, {t0: 1.0})),
            (Meaning("z", 1), _source_state(space, {t1: 1.0})),
            (Meaning("x", 0), _source_state(space, {t0: SQ, t1: SQ})),
            (Meaning("x", 1), _source_state(space, {t0: SQ, t1: -SQ})),
        ]
    elif name == POLARIZATION:
        app = preset(POLARIZATION, theta=theta)
        space = space_of(app.source_modes(), vacuum=False)
        h, v = ModeLabel("a", "H"), ModeLabel("a", "V")
        states = [
            (Meaning("+", 0), _source_state(space, {h: 1.0})),
            (Meaning("+", 1), _source_state(space, {v: 1.0})),
            (Meaning("×", 0), _source_state(space, {h: SQ, v: SQ})),
            (Meaning("×", 1), _source_state(space, {h: SQ, v: -SQ})),
        ]
    else:
        raise KeyError(f"unknown scheme {name!r}")
    return ProtocolScheme(name, app, tuple(states), frozenset(monitor),
                          None if priors is None else tuple(priors))


def parse_monitor(scheme_or_app, items: Sequence[str]) -> frozenset:
    """Mode labels to monitor; a bare ``t<n>`` (or ``t'<n>``) means every input arm."""
    app = scheme_or_app.apparatus if isinstance(scheme_or_app, ProtocolScheme) else scheme_or_app
    from .hilbert import parse_mode

    out = set()
    for raw in items:
        tok = raw.strip()
        if not tok:
            continue
        if ":" in tok:
            out.add(parse_mode(tok))
            continue
        slot = int(tok.lstrip("t").lstrip("'"))
        for port in app.inputs:
            if port.kind == "time-bin":
                out.add(ModeLabel(port.arm, slot))
    return frozenset(out)


# -- single-shot operations --------------------------------------------------

def alice_encode(scheme: ProtocolScheme, basis_tag: str, bit: int) -> StateVector:
    return scheme.encoded(Meaning(basis_tag, int(bit)))


def _check_incoming(scheme: ProtocolScheme, incoming: StateVector):
    if incoming.space != scheme.iso.domain:
        raise SpaceMismatchError("incoming state is not in the apparatus input space")
    if abs(incoming.norm() - 1.0) > 1e-6:
        raise ValueError(f"incoming state has norm {incoming.norm():.9g}")


def _probabilities(scheme: ProtocolScheme, incoming: StateVector) -> np.ndarray:
    p = detector_probabilities(scheme.iso, scheme.mu, incoming)
    p[p < PROB_FLOOR] = 0.0
    return p


def analytic_distribution(scheme: ProtocolScheme, incoming: StateVector) -> dict:
    """Exact outcome probabilities keyed by detector state, plus ``"no_click"``."""
    _check_incoming(scheme, incoming)
    p = _probabilities(scheme, incoming)
    out = {r: float(x) for r, x in zip(scheme.mu.detectors, p[:-1])}
    out[NO_CLICK] = float(p[-1])
    return out


def meaning_distribution(scheme: ProtocolScheme, incoming: StateVector) -> dict:
    _check_incoming(scheme, incoming)
    return coarsen(scheme.mu, _probabilities(scheme, incoming))


def _cdf(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    p[p < PROB_FLOOR] = 0.0
    total = p.sum()
    if total <= 0.0:
        out = np.zeros_like(p)
        out[-1] = 1.0
        return out
    cdf = np.cumsum(p) / total
    last = int(np.flatnonzero(p)[-1])
    cdf[last:] = 1.0
    return cdf


def bob_measure(scheme: ProtocolScheme, incoming: StateVector, rng: np.random.Generator):
    """Sample one click: a detector state, or ``"no_click"``."""
    _check_incoming(scheme, incoming)
    cdf = _cdf(_probabilities(scheme, incoming))
    k = int(np.searchsorted(cdf, rng.random(), side="right"))
    k = min(k, cdf.size - 1)
    return NO_CLICK if k == cdf.size - 1 else scheme.mu.detectors[k]


def monitor_inputs(scheme: ProtocolScheme, incoming: StateVector) -> bool:
    """True when ``incoming`` puts weight on any monitored input mode."""
    if incoming.space != scheme.iso.domain:
        raise SpaceMismatchError("incoming state is not in the apparatus input space")
    for mode in scheme.monitored_input_modes:
        b = BasisState(mode)
        if b in incoming.space and abs(incoming.amplitude(b)) ** 2 > ALARM_TOL:
            return True
    return False


# -- adversaries -------------------------------------------------------------

def make_plan(scheme: ProtocolScheme, kind: str, restriction: Optional[str] = None,
              method: str = "alternating") -> AttackPlan:
    iso = scheme.iso
    if kind == PER_OUTCOME:
        return synthesize_per_outcome(iso, scheme.mu.detectors, scheme.name)
    if kind == GROUPED:
        sub = None if restriction in (None, "", "none") else restriction_by_name(restriction, iso.domain)
        return synthesize_grouped(iso, scheme.mu, sub, scheme.name, method)
    raise ValueError(f"unknown attack kind {kind!r}")


# -- sessions ----------------------------------------------------------------

@dataclass(frozen=True)
class SessionLayout:
    """Index metadata shared by every chunk of one session."""

    scheme: str
    adversary: str
    restriction: str
    alice_keys: tuple[Meaning, ...]
    outcomes: tuple[str, ...]             # detector labels then no_click
    outcome_meanings: tuple[Optional[Meaning], ...]
    eve_keys: tuple[str, ...]             # plan keys then no_click; empty when honest
    eve_meanings: tuple[Optional[Meaning], ...]
    alarms: tuple[bool, ...]              # per alice state (honest) or per eve key


@dataclass(frozen=True)
class RoundRecord:
    alice_basis: str
    alice_bit: int
    bob_raw_outcome: str
    bob_meaning: Optional[Meaning]
    eve_record: Optional[Meaning]
    sifted: bool


@dataclass
class SessionReport:
    """Aggregated session counts; merging two reports adds their counts."""

    layout: SessionLayout
    counts: np.ndarray                    # [alice, eve slot, outcome]
    seed: Optional[int] = None

    @property
    def rounds(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "SessionReport") -> "SessionReport":
        if other.layout != self.layout:
            raise ValueError("cannot merge reports from different session layouts")
        return SessionReport(self.layout, self.counts + other.counts, self.seed)

    __add__ = merge

    @property
    def raw_histogram(self) -> dict[tuple[Meaning, str], int]:
        c = self.counts.sum(axis=1)
        return {(a, o): int(c[i, k]) for i, a in enumerate(self.layout.alice_keys)
                for k, o in enumerate(self.layout.outcomes)}

    @property
    def outcome_histogram(self) -> dict[tuple[Meaning, str], int]:
        out: dict = {}
        for (a, o), n in self.raw_histogram.items():
            k = self.layout.outcomes.index(o)
            m = self.layout.outcome_meanings[k]
            label = NO_CLICK if o == NO_CLICK else str(m)
            out[(a, label)] = out.get((a, label), 0) + n
        return out

    def _masks(self):
        lay = self.layout
        n_s, n_e, n_k = self.counts.shape
        sifted = np.zeros((n_s, n_e, n_k), dtype=bool)
        error = np.zeros_like(sifted)
        agree = np.zeros_like(sifted)
        for s, a in enumerate(lay.alice_keys):
            for k, m in enumerate(lay.outcome_meanings):
                if m is None or not m.conclusive or m.basis != a.basis:
                    continue
                sifted[s, :, k] = True
                error[s, :, k] = m.bit != a.bit
                for e in range(1, n_e):
                    agree[s, e, k] = lay.eve_meanings[e - 1] == m
        return sifted, error, agree

    @property
    def sifted_count(self) -> int:
        return int(self.counts[self._masks()[0]].sum())

    @property
    def error_count(self) -> int:
        return int(self.counts[self._masks()[1]].sum())

    @property
    def qber(self) -> Optional[float]:
        n = self.sifted_count
        return None if n == 0 else self.error_count / n

    @property
    def eve_agreement(self) -> Optional[float]:
        if not self.layout.eve_keys:
            return None
        sifted, _, agree = self._masks()
        n = int(self.counts[sifted].sum())
        return None if n == 0 else int(self.counts[agree].sum()) / n

    @property
    def basis_match_count(self) -> int:
        """Rounds with a conclusive click in the sender's basis (same as sifted)."""
        return self.sifted_count

    @property
    def no_click_count(self) -> int:
        return int(self.counts[:, :, -1].sum())

    @property
    def monitor_alarms(self) -> int:
        lay = self.layout
        if lay.eve_keys:
            flags = np.array([False] + list(lay.alarms))
            return int(self.counts[:, flags, :].sum())
        flags = np.array(lay.alarms)
        return int(self.counts[flags, :, :].sum())


def _session_tables(scheme: ProtocolScheme, plan: Optional[AttackPlan]):
    mu = scheme.mu
    detectors = list(mu.detectors)
    outcomes = tuple(str(r) for r in detectors) + (NO_CLICK,)
    outcome_meanings = tuple(mu[r] for r in detectors) + (None,)
    honest = [_probabilities(scheme, scheme.encoded(m)) for m in scheme.keys]
    alice_cdf = _cdf(scheme.prior_array)
    if plan is None:
        alarms = tuple(monitor_inputs(scheme, scheme.encoded(m)) for m in scheme.keys)
        bob_cdf = np.array([_cdf(p) for p in honest])
        layout = SessionLayout(scheme.name, "none", "none", tuple(scheme.keys), outcomes,
                               outcome_meanings, (), (), alarms)
        return layout, alice_cdf, None, bob_cdf

    keys = plan.keys
    eve_rows = []
    for p in honest:
        if plan.mode == PER_OUTCOME:
            lookup = dict(zip(detectors, p[:-1]))
            row = [lookup.get(k, 0.0) for k in keys]
        else:
            by_m = coarsen(mu, p)
            row = [by_m.get(k, 0.0) for k in keys]
        row.append(max(0.0, 1.0 - sum(row)))
        eve_rows.append(_cdf(np.array(row)))
    bob_rows, alarms = [], []
    for _, st in plan.entries:
        if st is None:
            bob_rows.append(_cdf(np.append(np.zeros(len(detectors)), 1.0)))
            alarms.append(False)
        else:
            bob_rows.append(_cdf(_probabilities(scheme, st)))
            alarms.append(monitor_inputs(scheme, st))
    bob_rows.append(_cdf(np.append(np.zeros(len(detectors)), 1.0)))
    alarms.append(False)
    eve_meanings = tuple((mu[k] if plan.mode == PER_OUTCOME else k) for k in keys) + (None,)
    layout = SessionLayout(scheme.name, plan.mode, plan.restriction_label, tuple(scheme.keys),
                           outcomes, outcome_meanings, tuple(str(k) for k in keys) + (NO_CLICK,),
                           eve_meanings, tuple(alarms))
    return layout, alice_cdf, np.array(eve_rows), np.array(bob_rows)


def round_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms of rounds ``start .. start+count-1``; shape ``(count, 4)``."""
    bitgen = np.random.Philox(key=int(seed), counter=int(start))
    return np.random.Generator(bitgen).random((count, 4))


def resolve_adversary(scheme: ProtocolScheme, adversary, restriction=None,
                      verify: bool = True) -> Optional[AttackPlan]:
    if adversary is None or adversary == "none":
        return None
    plan = adversary if isinstance(adversary, AttackPlan) else make_plan(scheme, adversary, restriction)
    if verify:
        rep = verify_plan(plan, scheme.iso, scheme.mu, scheme.honest_source())
        if not rep.ok:
            raise PlanVerificationError("attack plan failed verification:\n  " + "\n  ".join(rep.lines()))
    return plan


def run_session(scheme: ProtocolScheme, rounds: int, adversary=None, seed: int = 0,
                restriction: Optional[str] = None, loss: float = 0.0, verify: bool = True,
                workers: int = 1, backend: Optional[str] = None,
                chunk: int = CHUNK) -> SessionReport:
    """Simulate ``rounds`` rounds and aggregate them.

    ``adversary`` is ``None``/``"none"``, ``"per-outcome"``, ``"grouped"``
    or a ready :class:`AttackPlan` (verified against the scheme unless
    ``verify=False``).
    """
    if rounds <= 0:
        raise ValueError("rounds must be positive")
    if not 0.0 <= loss <= 1.0:
        raise ValueError("loss must be a probability")
    plan = resolve_adversary(scheme, adversary, restriction, verify)
    layout, alice_cdf, eve_cdf, bob_cdf = _session_tables(scheme, plan)
    kernel = _core.get_backend(backend)

    def one(start):
        n = min(chunk, rounds - start)
        u = round_uniforms(seed, start, n)
        return kernel.joint_histogram(u, alice_cdf, eve_cdf, bob_cdf, loss)

    starts = range(0, rounds, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, starts))
    else:
        parts = [one(s) for s in starts]
    counts = np.sum(parts, axis=0)
    return SessionReport(layout, counts, seed)


@dataclass
class RoundBatch:
    layout: SessionLayout
    start: int
    alice: np.ndarray
    eve: np.ndarray
    bob: np.ndarray

    def records(self) -> Iterator[RoundRecord]:
        lay = self.layout
        for s, e, k in zip(self.alice, self.eve, self.bob):
            a = lay.alice_keys[s]
            m = lay.outcome_meanings[k]
            eve = lay.eve_meanings[e] if e >= 0 else None
            sifted = m is not None and m.conclusive and m.basis == a.basis
            yield RoundRecord(a.basis, a.bit, lay.outcomes[k], m, eve, sifted)


def simulate_rounds(scheme: ProtocolScheme, rounds: int, adversary=None, seed: int = 0,
                    start: int = 0, restriction: Optional[str] = None, loss: float = 0.0,
                    verify: bool = True, backend: Optional[str] = None) -> RoundBatch:
    """Per-round outcomes for rounds ``start .. start+rounds-1`` of a session."""
    plan = resolve_adversary(scheme, adversary, restriction, verify)
    layout, alice_cdf, eve_cdf, bob_cdf = _session_tables(scheme, plan)
    u = round_uniforms(seed, start, rounds)
    a, e, b = _core.get_backend(backend).sample_rounds(u, alice_cdf, eve_cdf, bob_cdf, loss)
    return RoundBatch(layout, start, a, e, b)
