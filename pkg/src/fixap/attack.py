"""Attack synthesis against a fixed receiver.

Per-outcome plans send the adjoint image of each detector state, so the
receiver reproduces exactly the outcome Eve observed.  Grouped plans only
need the receiver to land somewhere inside the set of detector states that
share a meaning; that freedom lets the injected states avoid input slots a
shutter would block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .hilbert import (
    DROP_TOL,
    ISOMETRY_TOL,
    BasisState,
    Isometry,
    StateVector,
    Subspace,
    gram_schmidt,
    parse_basis_state,
    state_from_pairs,
    state_to_pairs,
    states_equal_up_to_global_phase,
)
from .optics import ImageCheckError, Meaning, OutcomeMap

PER_OUTCOME = "per-outcome"
GROUPED = "grouped"

AP_TOL = 1e-10
AP_MAX_ITER = 10_000

Key = Union[BasisState, Meaning]


class PlanVerificationError(RuntimeError):
    """An attack plan does not do what it claims."""


@dataclass(frozen=True, eq=False)
class AttackPlan:
    """States Eve injects, keyed by detector state or by meaning.

    ``entries`` maps each key to a normalized state in the apparatus domain,
    or to ``None`` when no valid state exists (a gap).
    """

    apparatus_id: str
    mode: str
    entries: tuple[tuple[Key, Optional[StateVector]], ...]
    restriction: Optional[Subspace] = None

    def __post_init__(self):
        if self.mode not in (PER_OUTCOME, GROUPED):
            raise ValueError(f"unknown plan mode {self.mode!r}")
        object.__setattr__(self, "entries", tuple(self.entries))
        for key, st in self.entries:
            if st is None:
                continue
            if not st.is_normalized():
                raise ValueError(f"inject state for {key} is not normalized")
            if self.restriction is not None and self.restriction.project(st)[1] > DROP_TOL:
                raise ValueError(f"inject state for {key} leaves the restriction")

    @property
    def keys(self) -> list[Key]:
        return [k for k, _ in self.entries]

    def __getitem__(self, key: Key) -> Optional[StateVector]:
        for k, st in self.entries:
            if k == key:
                return st
        raise KeyError(key)

    @property
    def gaps(self) -> list[Key]:
        return [k for k, st in self.entries if st is None]

    @property
    def restriction_label(self) -> str:
        return self.restriction.label if self.restriction is not None else "none"

    def to_json(self) -> str:
        data = {
            "apparatus": self.apparatus_id,
            "mode": self.mode,
            "restriction": self.restriction_label,
            "entries": [
                {"key": str(k), "state": None if st is None else state_to_pairs(st)}
                for k, st in self.entries
            ],
        }
        return json.dumps(data, indent=1, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str, restriction: Optional[Subspace] = None) -> "AttackPlan":
        """Inverse of :meth:`to_json`.

        The restriction subspace is not serialized; pass it back in if the
        plan should keep enforcing it.
        """
        data = json.loads(text)
        mode = data["mode"]
        parse = parse_basis_state if mode == PER_OUTCOME else Meaning.parse
        entries = []
        for e in data["entries"]:
            st = None if e["state"] is None else state_from_pairs(e["state"])
            entries.append((parse(e["key"]), st))
        return cls(data["apparatus"], mode, tuple(entries), restriction)


def _detector_vectors(iso: Isometry, detector_basis: Sequence) -> list[StateVector]:
    out = []
    for r in detector_basis:
        out.append(r if isinstance(r, StateVector) else StateVector.basis_vector(iso.codomain, r))
    return out


def _check_image(iso: Isometry, vecs: Iterable[StateVector], tol: float = ISOMETRY_TOL):
    for v in vecs:
        defect = iso.image_defect(v)
        if defect > tol:
            raise ImageCheckError(f"detector state {v} is outside the apparatus image "
                                  f"(defect {defect:.3g})")


def reversed_space(iso: Isometry, detector_basis: Sequence) -> Subspace:
    """Span of the adjoint images of the detector states."""
    vecs = _detector_vectors(iso, detector_basis)
    _check_image(iso, vecs)
    return Subspace.spanned_by(iso.domain, [iso.adjoint_apply(v) for v in vecs], "reversed")


def synthesize_per_outcome(iso: Isometry, detector_basis: Sequence,
                           apparatus_id: str = "custom") -> AttackPlan:
    vecs = _detector_vectors(iso, detector_basis)
    _check_image(iso, vecs)
    entries = []
    for key, v in zip(detector_basis, vecs):
        inject = iso.adjoint_apply(v).canonical()
        if not states_equal_up_to_global_phase(iso.apply(inject), v, ISOMETRY_TOL):
            raise PlanVerificationError(f"reversal of {key} does not reproduce it")
        entries.append((key, inject))
    return AttackPlan(apparatus_id, PER_OUTCOME, tuple(entries))


# -- subspace intersection ---------------------------------------------------

def _orthonormal(cols: np.ndarray) -> np.ndarray:
    if cols.shape[1] == 0:
        return cols
    return gram_schmidt([cols[:, k] for k in range(cols.shape[1])])


def intersect_alternating(qa: np.ndarray, qb: np.ndarray, start: np.ndarray,
                          tol: float = AP_TOL, max_iter: int = AP_MAX_ITER
                          ) -> tuple[np.ndarray, int, bool]:
    """Project ``start`` onto span(qa) ∩ span(qb) by von Neumann alternation.

    ``qa`` and ``qb`` have orthonormal columns.  Returns the limit vector,
    the iteration count and whether the stopping rule was met.  The limit is
    the orthogonal projection of ``start`` onto the intersection.
    """
    pa = qa @ qa.conj().T
    pb = qb @ qb.conj().T
    x = pa @ start
    for it in range(1, max_iter + 1):
        y = pa @ (pb @ x)
        step = np.linalg.norm(y - x)
        x = y
        # stop once x sits in both subspaces, or has decayed to nothing
        gap = max(np.linalg.norm(pb @ x - x), np.linalg.norm(pa @ x - x))
        if (gap <= tol and step <= tol) or np.linalg.norm(x) <= tol:
            return x, it, True
    return x, max_iter, False


def intersect_exact(qa: np.ndarray, qb: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of span(qa) ∩ span(qb) via the null space of [qa, -qb]."""
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.zeros((qa.shape[0], 0), dtype=complex)
    stacked = np.hstack([qa, -qb])
    _, sv, vh = np.linalg.svd(stacked)
    ncols = stacked.shape[1]
    sv_full = np.zeros(ncols)
    sv_full[: sv.size] = sv
    null = vh.conj().T[:, sv_full <= tol]
    if null.shape[1] == 0:
        return np.zeros((qa.shape[0], 0), dtype=complex)
    return _orthonormal(qa @ null[: qa.shape[1], :])


def _pick(inter: np.ndarray, target: np.ndarray) -> Optional[np.ndarray]:
    """Unit vector of the intersection closest in direction to ``target``."""
    if inter.shape[1] == 0:
        return None
    proj = inter @ (inter.conj().T @ target)
    n = np.linalg.norm(proj)
    if n > 1e-8:
        return proj / n
    return inter[:, 0]


def grouped_target(iso: Isometry, mu: OutcomeMap, m: Meaning,
                   restriction: Optional[Subspace] = None,
                   method: str = "alternating") -> Optional[StateVector]:
    """Find a normalized input whose image stays inside the group of ``m``.

    Among valid inputs, the one whose image has maximal overlap with the
    equal-weight sum of the group's detector states is returned.  ``None``
    means the intersection is trivial.
    """
    group = mu.group(m)
    if not group:
        raise KeyError(f"no detector means {m}")
    cod = iso.codomain
    qs = np.column_stack([StateVector.basis_vector(cod, r).amplitudes for r in group])
    qs = _orthonormal(qs)
    if restriction is None:
        qw = iso.matrix
    else:
        if restriction.ambient != iso.domain:
            raise ValueError("restriction is not a subspace of the apparatus domain")
        qw = _orthonormal(iso.matrix @ restriction.basis_matrix)
    target = qs.sum(axis=1) / np.sqrt(len(group))

    if method == "exact":
        out = _pick(intersect_exact(qw, qs), target)
    elif method == "alternating":
        x, _, converged = intersect_alternating(qw, qs, target)
        n = np.linalg.norm(x)
        if converged and n > 1e-8:
            out = x / n
        else:
            # target orthogonal to the intersection, or slow convergence:
            # settle it with the exact decomposition
            out = _pick(intersect_exact(qw, qs), target)
    else:
        raise ValueError(f"unknown intersection method {method!r}")
    if out is None:
        return None
    image = StateVector(cod, out)
    return iso.adjoint_apply(image).normalized().canonical()


def synthesize_grouped(iso: Isometry, mu: OutcomeMap, restriction: Optional[Subspace] = None,
                       apparatus_id: str = "custom", method: str = "alternating") -> AttackPlan:
    _check_image(iso, _detector_vectors(iso, mu.detectors))
    entries = []
    for m in mu.meanings:
        st = grouped_target(iso, mu, m, restriction, method)
        if st is not None and restriction is not None:
            # snap tiny leakage outside the restriction back in
            proj, _ = restriction.project(st)
            st = proj.normalized().canonical()
        entries.append((m, st))
    return AttackPlan(apparatus_id, GROUPED, tuple(entries), restriction)


@dataclass(frozen=True)
class RestrictionCheck:
    key: Key
    residual_norm_sq: float
    passed: bool


def check_restriction(plan: AttackPlan, allowed: Subspace, tol: float = DROP_TOL
                      ) -> list[RestrictionCheck]:
    out = []
    for key, st in plan.entries:
        if st is None:
            out.append(RestrictionCheck(key, float("nan"), False))
            continue
        _, res = allowed.project(st)
        out.append(RestrictionCheck(key, res, res <= tol))
    return out


# -- verification ------------------------------------------------------------

def detector_probabilities(iso: Isometry, mu: OutcomeMap, state: StateVector) -> np.ndarray:
    """Born probabilities over ``mu.detectors`` followed by the no-click remainder."""
    out = iso.apply(state).amplitudes
    idx = [iso.codomain.index(r) for r in mu.detectors]
    p = np.abs(out[idx]) ** 2
    rest = max(0.0, float(np.vdot(out, out).real) - float(p.sum()))
    return np.append(p, rest)


def coarsen(mu: OutcomeMap, p: np.ndarray) -> dict[Meaning, float]:
    """Sum detector probabilities by meaning; trailing entry is no-click."""
    out: dict = {}
    for (_, m), pr in zip(mu.entries, p[:-1]):
        out[m] = out.get(m, 0.0) + float(pr)
    out["no_click"] = float(p[-1])
    return out


@dataclass
class VerificationReport:
    mode: str
    determinism: dict = field(default_factory=dict)
    gaps: list = field(default_factory=list)
    raw_preserved: bool = False
    raw_max_deviation: float = float("nan")
    meaning_preserved: bool = False
    meaning_max_deviation: float = float("nan")
    eve_bob_agreement: float = float("nan")
    tol: float = 1e-10

    @property
    def deterministic(self) -> bool:
        return not self.gaps and all(p >= 1.0 - self.tol for p in self.determinism.values())

    @property
    def ok(self) -> bool:
        """Sound plan: deterministic outcomes, preserved statistics at the plan's granularity."""
        if not self.deterministic:
            return False
        if self.mode == PER_OUTCOME:
            return self.raw_preserved
        return self.meaning_preserved

    def lines(self) -> list[str]:
        out = [f"mode: {self.mode}"]
        for k, p in self.determinism.items():
            out.append(f"determinism {k}: {p:.12g}")
        for k in self.gaps:
            out.append(f"gap {k}")
        out += [
            f"raw_preserved: {self.raw_preserved} (max deviation {self.raw_max_deviation:.3g})",
            f"meaning_preserved: {self.meaning_preserved} "
            f"(max deviation {self.meaning_max_deviation:.3g})",
            f"eve_bob_agreement: {self.eve_bob_agreement:.12g}",
            f"ok: {self.ok}",
        ]
        return out


def _eve_outcome_rows(plan: AttackPlan, mu: OutcomeMap, honest_p: np.ndarray):
    """Eve's outcome distribution over plan keys for one honest state."""
    if plan.mode == PER_OUTCOME:
        lookup = {r: honest_p[i] for i, r in enumerate(mu.detectors)}
        return [lookup.get(k, 0.0) for k in plan.keys]
    by_m = coarsen(mu, honest_p)
    return [by_m.get(k, 0.0) for k in plan.keys]


def verify_plan(plan: AttackPlan, iso: Isometry, mu: OutcomeMap,
                honest_source: Sequence[tuple[StateVector, float]],
                tol: float = 1e-10) -> VerificationReport:
    """Check determinism and statistics preservation of ``plan``.

    ``honest_source`` lists the sender's states (in the apparatus domain)
    with their prior probabilities.
    """
    total = sum(p for _, p in honest_source)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"source probabilities sum to {total}, not 1")
    rep = VerificationReport(plan.mode, tol=tol)
    n_det = len(mu.detectors)
    inject_p = []
    for key, st in plan.entries:
        if st is None:
            rep.gaps.append(key)
            # nothing sent: Bob sees no click
            inject_p.append(np.append(np.zeros(n_det), 1.0))
            continue
        p = detector_probabilities(iso, mu, st)
        inject_p.append(p)
        if plan.mode == PER_OUTCOME:
            rep.determinism[key] = float(p[mu.detectors.index(key)])
        else:
            rep.determinism[key] = coarsen(mu, p).get(key, 0.0)
    inject_p = np.array(inject_p).reshape(len(plan.entries), n_det + 1)

    raw_dev = 0.0
    mean_dev = 0.0
    agree = 0.0
    keys = plan.keys
    for st, prior in honest_source:
        honest = detector_probabilities(iso, mu, st)
        eve = np.asarray(_eve_outcome_rows(plan, mu, honest))
        attacked = eve @ inject_p
        # Eve's no-click leaves Bob with nothing as well
        attacked[-1] += max(0.0, 1.0 - eve.sum())
        raw_dev = max(raw_dev, float(np.max(np.abs(attacked - honest))))
        h_m, a_m = coarsen(mu, honest), coarsen(mu, attacked)
        mean_dev = max(mean_dev, max(abs(h_m[k] - a_m.get(k, 0.0)) for k in h_m))
        for e_prob, key, row in zip(eve, keys, inject_p):
            meaning = mu[key] if plan.mode == PER_OUTCOME else key
            agree += prior * e_prob * sum(
                pr for (_, m), pr in zip(mu.entries, row[:-1]) if m == meaning)
    rep.raw_max_deviation = raw_dev
    rep.raw_preserved = raw_dev <= tol
    rep.meaning_max_deviation = mean_dev
    rep.meaning_preserved = mean_dev <= tol
    rep.eve_bob_agreement = agree
    return rep


def measured_spaces_overlap(mu: OutcomeMap, iso: Isometry) -> dict[tuple[str, str], float]:
    """Largest overlap between the detector spans of each pair of basis tags.

    Zero means the two bases are measured on orthogonal spaces, which is
    always the case for a fixed receiver with basis-state detectors.
    """
    tags = sorted({m.basis for m in mu.meanings})
    spans = {}
    for t in tags:
        cols = [StateVector.basis_vector(iso.codomain, r).amplitudes
                for r, m in mu.entries if m.basis == t]
        spans[t] = _orthonormal(np.column_stack(cols))
    out = {}
    for i, a in enumerate(tags):
        for b in tags[i + 1:]:
            s = np.linalg.svd(spans[a].conj().T @ spans[b], compute_uv=False)
            out[(a, b)] = float(s.max(initial=0.0))
    return out
