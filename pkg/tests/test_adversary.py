import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suptest.adversary import (
    AdversarySchedule,
    LevelCertificate,
    build_adversary,
    build_dual_adversary,
    coarse_tail,
    dualize,
    tail_union_bound,
    verify_adversary,
)
from suptest.dist import FinitePmf, TailPmf, normalize_finite, truncate
from suptest.errors import LevelViolation, VerificationFailure
from suptest.teststat import (
    bounded_support_family,
    brute_force_expectation,
    constant_family,
    exact_split_max_expectation,
    split_max_family,
    split_max_rejection_family,
)

ALPHA = 0.05


@pytest.fixture(scope="module")
def schedule():
    return build_adversary(split_max_rejection_family(), ALPHA, 5)


@pytest.fixture(scope="module")
def bounds(schedule):
    return verify_adversary(schedule, split_max_rejection_family())


def test_schedule_structure(schedule):
    psi = [r.psi for r in schedule.ranks]
    assert schedule.ranks[0].psi == 1 and schedule.psi_values[:2] == (1, 1)
    assert all(b > a for a, b in zip(psi, psi[1:]))
    assert all(p > n * n for n, p in zip(range(2, 6), psi[1:]))
    law = schedule.final_law
    for k in range(5):
        assert law.weight(k) == 2 * schedule.psi_values[k]


def test_certificates(schedule):
    for rec in schedule.ranks:
        cert = rec.certificate
        assert cert.holds
        assert cert.bound == pytest.approx(ALPHA + 1 / rec.n)
        assert cert.label == "certified" and cert.analytic


def test_known_schedule(schedule):
    # frozen from the exact evaluator; independently spot-checked below
    assert schedule.psi_values == (1, 1, 5, 69, 16455, 1061254026)


@pytest.mark.parametrize("rank,scan", [(2, 400), (3, 3000), (4, 2000)])
def test_psi_is_minimal_and_admissible(schedule, rank, scan):
    test = split_max_rejection_family()
    mu_n = truncate(schedule.final_law, rank)
    psi = schedule.psi_values[rank]
    bound = ALPHA + 1 / rank
    floor = max(schedule.psi_values[rank - 1], rank * rank) + 1
    if psi > floor:
        assert test.closed_form(mu_n, psi - 1, 1e-13).value > bound
    for m in range(psi, psi + scan):
        assert test.closed_form(mu_n, m, 1e-13).value <= bound


def test_rank1_is_dirac(schedule):
    rec = schedule.ranks[0]
    assert truncate(schedule.final_law, 1) == FinitePmf.dirac(0)
    assert rec.c_n == 4.0  # phi(1)^2 with phi(n) = 2n


def test_never_rejecting_test():
    s = build_adversary(constant_family(0.0), 0.0, 6)
    assert [r.psi for r in s.ranks] == [1, 5, 10, 17, 26, 37]
    assert all(r.certificate.max_expectation == 0.0 for r in s.ranks)


def test_rebuild_is_bit_exact(schedule):
    again = build_adversary(split_max_rejection_family(), ALPHA, 5)
    assert again.dumps() == schedule.dumps()


def test_schedule_json_roundtrip(schedule):
    back = AdversarySchedule.from_json(schedule.to_json())
    assert back.dumps() == schedule.dumps()
    cert = schedule.ranks[3].certificate
    assert LevelCertificate.from_json(cert.to_json()) == cert


def test_verification_passes(schedule, bounds):
    assert all(b.passed for b in bounds)
    for b in bounds[1:]:
        n = b.rank
        assert b.measured <= ALPHA + 1 / n + 1 / (n - 1)


def test_bound_chain(bounds):
    # measured <= E over the truncated law + union bound on reaching the tail
    for b in bounds:
        assert b.measured <= b.within_level + b.term_tail + 1e-12
        assert b.within_level <= b.term_level + 1e-12


def test_running_minimum(bounds):
    running = [min(b.measured for b in bounds[1:i + 1]) for i in range(1, len(bounds))]
    assert all(y <= x for x, y in zip(running, running[1:]))
    for b, r in zip(bounds[1:], running):
        assert r <= ALPHA + 1 / b.rank + 1 / (b.rank - 1)


def test_rank1_bound_is_vacuous(bounds):
    assert bounds[0].total == 1.0
    assert bounds[0].coarse_tail == pytest.approx(math.pi**2 / 6)


def test_tampered_schedule_fails(schedule):
    tampered = AdversarySchedule(0.0, schedule.ranks, schedule.final_law)
    with pytest.raises(VerificationFailure) as info:
        verify_adversary(tampered, split_max_rejection_family())
    assert info.value.rank >= 2
    rows = verify_adversary(tampered, split_max_rejection_family(), strict=False)
    assert not all(r.passed for r in rows)


def test_level_violation_is_reported():
    # supports {0..3} already exceed N = 2, so 1{max > 2} tends to 1
    with pytest.raises(LevelViolation) as info:
        build_adversary(bounded_support_family(2), ALPHA, 5)
    assert info.value.rank == 4
    assert info.value.to_json()["finding"] == "level_violation"


def test_finite_horizon_is_only_a_witness():
    s = build_adversary(split_max_rejection_family(), ALPHA, 4,
                        horizon_policy={"kind": "finite_horizon", "multiplier": 2.0})
    assert [r.certificate.label for r in s.ranks[1:]] == ["heuristic witness"] * 3
    psi4 = s.ranks[3].psi
    lo, hi = s.ranks[3].certificate.checked_m_range
    assert (lo, hi) == (psi4, 2 * psi4)
    # a violation the finite horizon cannot see
    mu4 = truncate(s.final_law, 4)
    assert split_max_rejection_family().closed_form(mu4, 16454, 1e-13).value > ALPHA + 1 / 4


def test_monte_carlo_build():
    s = build_adversary(split_max_rejection_family(), ALPHA, 3, evaluator="monte_carlo", reps=2000, seed=3)
    assert [r.certificate.label for r in s.ranks[1:]] == ["probabilistic"] * 2
    again = build_adversary(split_max_rejection_family(), ALPHA, 3, evaluator="monte_carlo", reps=2000, seed=3)
    assert again.dumps() == s.dumps()


def test_dual_build_uses_dualized_test():
    s = build_dual_adversary(split_max_family(), 0.95, 3)
    direct = build_adversary(split_max_rejection_family(), 0.05, 3)
    assert s.psi_values == direct.psi_values


# --- duality ----------------------------------------------------------------


def test_dualize_constant():
    d = dualize(constant_family(0.3))
    assert d(4, (1, 2, 3, 4)) == pytest.approx(0.7)


def test_dualize_involution():
    for fam in (split_max_family(), constant_family(0.3), bounded_support_family(3)):
        assert dualize(dualize(fam)) is fam


def test_dual_expectation_uniform():
    law = FinitePmf.uniform([0, 1])
    fam = split_max_family()
    a = brute_force_expectation(fam, law, 2).value
    b = brute_force_expectation(dualize(fam), law, 2).value
    assert a + b == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=30)
@given(st.lists(st.floats(0.01, 1), min_size=1, max_size=4), st.integers(1, 3))
def test_dual_expectations_sum_to_one(ws, n):
    law = normalize_finite(ws)
    fam = split_max_family()
    a = exact_split_max_expectation(law, n).value
    b = dualize(fam).closed_form(law, n, 1e-13).value
    assert abs(a + b - 1.0) <= 1e-12


# --- tail union bound -------------------------------------------------------


def test_coarse_tail_values():
    assert coarse_tail(1) == pytest.approx(math.pi**2 / 6)
    assert coarse_tail(10) <= 1 / 9


@pytest.mark.parametrize("n", [2, 3, 10, 50, 400])
def test_quadratic_weights_obey_comparison(n):
    b = tail_union_bound(n, lambda k: k * k + 1)
    assert b.term <= b.coarse <= 1 / (n - 1)


def test_quadratic_bound_is_monotone():
    terms = [tail_union_bound(n, lambda k: k * k + 1).term for n in range(1, 60)]
    assert all(y <= x for x, y in zip(terms, terms[1:]))
    coarse = [coarse_tail(n) for n in range(1, 60)]
    assert all(y <= x for x, y in zip(coarse, coarse[1:]))


def test_tail_law_and_callable_agree():
    law = TailPmf.from_schedule((1, 1, 3, 12))
    for n in (2, 3, 5):
        a = tail_union_bound(n, law)
        b = tail_union_bound(n, law.weight)
        assert a.term == pytest.approx(b.term, abs=a.error + b.error)
