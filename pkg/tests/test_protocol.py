import numpy as np
import pytest
from scipy.stats import chisquare

from fixap import _core
from fixap.attack import PlanVerificationError, synthesize_per_outcome
from fixap.hilbert import VACUUM, StateVector, parse_basis_state, photon
from fixap.optics import Meaning
from fixap.protocol import (
    NO_CLICK,
    alice_encode,
    analytic_distribution,
    bob_measure,
    make_plan,
    meaning_distribution,
    monitor_inputs,
    parse_monitor,
    round_uniforms,
    run_session,
    scheme_by_name,
    simulate_rounds,
)

from oracles import MZ_MEANINGS, MZ_STATS, R2, dense


def test_alice_encodings(mz_scheme, pol_scheme):
    dom = mz_scheme.iso.domain
    assert alice_encode(mz_scheme, "z", 0).as_dict(1e-15) == {photon("a", 0): 1}
    x1 = alice_encode(mz_scheme, "x", 1).amplitudes
    assert np.allclose(x1, dense(dom, {"a:t0": R2, "a:t1": -R2}))
    assert alice_encode(pol_scheme, "+", 0).as_dict(1e-15) == {photon("a", "H"): 1}
    with pytest.raises(KeyError):
        alice_encode(mz_scheme, "y", 0)


def test_mz_statistics_table(mz_scheme):
    for a, row in MZ_STATS.items():
        dist = meaning_distribution(mz_scheme, mz_scheme.encoded(Meaning.parse(a)))
        for m, want in zip(MZ_MEANINGS, row):
            assert dist[Meaning.parse(m)] == pytest.approx(want, abs=1e-12)
        assert dist[NO_CLICK] == pytest.approx(0.0, abs=1e-12)


def test_raw_distributions(mz_scheme, pol_scheme):
    d = analytic_distribution(mz_scheme, mz_scheme.encoded(Meaning("z", 1)))
    for lbl in ("s:t1", "s:t2", "d:t1", "d:t2"):
        assert d[parse_basis_state(lbl)] == pytest.approx(0.25, abs=1e-12)
    d = analytic_distribution(mz_scheme, mz_scheme.encoded(Meaning("x", 0)))
    assert d[parse_basis_state("d:t1")] == pytest.approx(0.5, abs=1e-12)
    assert d[parse_basis_state("s:t1")] == pytest.approx(0.0, abs=1e-12)
    for lbl in ("s:t0", "s:t2", "d:t0", "d:t2"):
        assert d[parse_basis_state(lbl)] == pytest.approx(0.125, abs=1e-12)
    m = meaning_distribution(pol_scheme, pol_scheme.encoded(Meaning("+", 0)))
    assert m[Meaning("+", 0)] == pytest.approx(0.5, abs=1e-12)
    assert m[Meaning("×", 0)] == pytest.approx(0.25, abs=1e-12)
    assert m[Meaning("×", 1)] == pytest.approx(0.25, abs=1e-12)


def test_vacuum_never_clicks(mz_scheme):
    vac = StateVector.basis_vector(mz_scheme.iso.domain, VACUUM)
    assert analytic_distribution(mz_scheme, vac)[NO_CLICK] == 1.0
    assert bob_measure(mz_scheme, vac, np.random.default_rng(0)) == NO_CLICK


def test_distribution_sums_to_one(mz_scheme, rng):
    dom = mz_scheme.iso.domain
    for _ in range(50):
        v = rng.normal(size=dom.dim) + 1j * rng.normal(size=dom.dim)
        d = analytic_distribution(mz_scheme, StateVector(dom, v / np.linalg.norm(v)))
        assert sum(d.values()) == pytest.approx(1.0, abs=1e-12)


def test_unnormalized_input_rejected(mz_scheme):
    v = StateVector.basis_vector(mz_scheme.iso.domain, photon("a", 0)) * 1.01
    with pytest.raises(ValueError):
        bob_measure(mz_scheme, v, np.random.default_rng(0))


def test_attack_state_is_deterministic(mz_scheme):
    plan = synthesize_per_outcome(mz_scheme.iso, mz_scheme.mu.detectors)
    s1 = parse_basis_state("s:t1")
    rng = np.random.default_rng(3)
    assert {bob_measure(mz_scheme, plan[s1], rng) for _ in range(200)} == {s1}


@pytest.mark.parametrize("name", ["mz-xz-bb84", "polarization-bb84"])
def test_bob_measure_matches_born_rule(name):
    scheme = scheme_by_name(name)
    rng = np.random.default_rng(11)
    for key in scheme.keys:
        st = scheme.encoded(key)
        dist = analytic_distribution(scheme, st)
        labels = [k for k, p in dist.items() if p > 0]
        n = 20_000
        seen = [bob_measure(scheme, st, rng) for _ in range(n)]
        obs = [sum(1 for s in seen if s == k) for k in labels]
        assert sum(obs) == n
        exp = [dist[k] * n for k in labels]
        assert chisquare(obs, exp).pvalue > 0.001


@pytest.mark.parametrize("name", ["mz-xz-bb84", "polarization-bb84"])
def test_session_frequencies_chi_square(name):
    scheme = scheme_by_name(name)
    rep = run_session(scheme, 100_000, seed=21)
    raw = rep.raw_histogram
    for key in scheme.keys:
        dist = analytic_distribution(scheme, scheme.encoded(key))
        labels = [str(k) for k, p in dist.items() if p > 0]
        obs = np.array([raw[(key, lbl)] for lbl in labels])
        probs = np.array([p for p in dist.values() if p > 0])
        assert chisquare(obs, probs * obs.sum()).pvalue > 0.001
        zero = [str(k) for k, p in dist.items() if p == 0]
        assert all(raw[(key, lbl)] == 0 for lbl in zero)


def test_honest_session(mz_scheme):
    rep = run_session(mz_scheme, 100_000, seed=1)
    assert rep.rounds == 100_000
    assert sum(rep.outcome_histogram.values()) == rep.rounds
    assert rep.qber == 0.0
    assert rep.eve_agreement is None
    assert rep.no_click_count == 0
    # Bob lands in Alice's basis half the time
    sigma = np.sqrt(rep.rounds * 0.25)
    assert abs(rep.basis_match_count - rep.rounds / 2) <= 4 * sigma


def test_session_is_reproducible_and_chunk_independent(mz_scheme):
    a = run_session(mz_scheme, 50_000, "grouped", seed=7, restriction="h01")
    b = run_session(mz_scheme, 50_000, "grouped", seed=7, restriction="h01", chunk=997, workers=4)
    assert np.array_equal(a.counts, b.counts)
    c = run_session(mz_scheme, 50_000, "grouped", seed=8, restriction="h01")
    assert not np.array_equal(a.counts, c.counts)


def test_rounds_use_independent_streams():
    full = round_uniforms(5, 0, 100)
    assert np.array_equal(full[40:60], round_uniforms(5, 40, 20))


def test_merge_is_associative_and_matches_split_runs(mz_scheme):
    batches = [simulate_rounds(mz_scheme, 1000, "per-outcome", seed=3, start=s) for s in (0, 1000, 2000)]
    whole = simulate_rounds(mz_scheme, 3000, "per-outcome", seed=3)
    assert np.array_equal(np.concatenate([b.bob for b in batches]), whole.bob)
    r1 = run_session(mz_scheme, 1000, seed=4)
    r2 = run_session(mz_scheme, 2000, seed=5)
    r3 = run_session(mz_scheme, 500, seed=6)
    assert np.array_equal(((r1 + r2) + r3).counts, (r1 + (r2 + r3)).counts)
    assert np.array_equal((r1 + r2).counts, (r2 + r1).counts)
    with pytest.raises(ValueError):
        r1 + run_session(mz_scheme, 10, "per-outcome", seed=1)


def test_round_records_sifting_invariant(mz_scheme):
    batch = simulate_rounds(mz_scheme, 2000, "grouped", seed=9, restriction="h01")
    for rec in batch.records():
        m = rec.bob_meaning
        assert rec.sifted == (m is not None and m.conclusive and m.basis == rec.alice_basis)
        if rec.sifted:
            assert m.bit == rec.alice_bit
            assert rec.eve_record == m


@pytest.mark.skipif(len(_core.BACKENDS) < 2, reason="compiled kernel not built")
def test_backends_agree(mz_scheme):
    a = run_session(mz_scheme, 30_000, "per-outcome", seed=2, backend="python")
    b = run_session(mz_scheme, 30_000, "per-outcome", seed=2, backend="cython")
    assert np.array_equal(a.counts, b.counts)


def test_loss_hook(mz_scheme):
    rep = run_session(mz_scheme, 20_000, seed=2, loss=0.3)
    frac = rep.no_click_count / rep.rounds
    assert abs(frac - 0.3) <= 4 * np.sqrt(0.3 * 0.7 / rep.rounds)
    assert rep.qber == 0.0
    with pytest.raises(ValueError):
        run_session(mz_scheme, 10, seed=2, loss=1.5)
    with pytest.raises(ValueError):
        run_session(mz_scheme, 0, seed=2)


def test_monitor(mz_scheme):
    mon = parse_monitor(mz_scheme, ["t'-1", "t'2"])
    assert mon == {parse_basis_state(x).mode for x in ("a:t-1", "b:t-1", "a:t2", "b:t2")}
    scheme = mz_scheme.with_monitor(mon)
    po = make_plan(scheme, "per-outcome")
    gr = make_plan(scheme, "grouped", "h01")
    assert monitor_inputs(scheme, po[parse_basis_state("d:t0")])
    assert sum(monitor_inputs(scheme, st) for _, st in po.entries) >= 1
    assert sum(monitor_inputs(scheme, st) for _, st in gr.entries) == 0
    assert not any(monitor_inputs(scheme, scheme.encoded(k)) for k in scheme.keys)
    with pytest.raises(ValueError):
        mz_scheme.with_monitor(parse_monitor(mz_scheme, ["t5"]))


def test_unverified_plan_is_refused(mz_scheme):
    from fixap.attack import AttackPlan, GROUPED

    a0 = StateVector.basis_vector(mz_scheme.iso.domain, photon("a", 0))
    bad = AttackPlan("mz", GROUPED, tuple((m, a0) for m in mz_scheme.mu.meanings))
    with pytest.raises(PlanVerificationError):
        run_session(mz_scheme, 100, bad, seed=1)
    rep = run_session(mz_scheme, 1000, bad, seed=1, verify=False)
    assert rep.eve_agreement < 1


def test_scheme_validation(mz_scheme):
    from fixap.protocol import ProtocolScheme

    z0 = mz_scheme.alice_states[0]
    with pytest.raises(ValueError, match="orthogonal"):
        ProtocolScheme("bad", mz_scheme.apparatus, (z0, (Meaning("z", 1), z0[1])))
    with pytest.raises(ValueError, match="priors"):
        ProtocolScheme("bad", mz_scheme.apparatus, mz_scheme.alice_states, priors=(1.0,))
