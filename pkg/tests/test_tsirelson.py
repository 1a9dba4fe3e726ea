import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suptest.dist import IDENTITY as IDENTITY_PHI
from suptest.dist import FinitePmf, GeometricPmf, TailPmf, normalize_finite, truncate
from suptest.errors import MixedModeError, NotClassifiable
from suptest.teststat import brute_force_expectation
from suptest.tsirelson import (
    Arc,
    EventFamily,
    FiniteTorusLaw,
    PathEvent,
    PushforwardLaw,
    TorusPoint,
    classify,
    event_probability,
    inject_f,
    integrate_over_u,
    path_increments,
    pushforward,
    reduce_event,
    simulate_paths,
    simulate_uniform_solution,
    torus_law_from_json,
)

HALF = TorusPoint.of(1, 2)
UNIFORM01 = FinitePmf.uniform([0, 1])

fractions = st.builds(F, st.integers(-50, 50), st.integers(1, 60))


# --- torus arithmetic -------------------------------------------------------


@given(fractions, fractions)
def test_exact_arithmetic_roundtrip(a, b):
    pa, pb = TorusPoint(a), TorusPoint(b)
    assert (pa - pb) + pb == pa
    for p in (pa, pb, pa + pb, pa - pb, -pa):
        assert 0 <= p.num < p.den and math.gcd(p.num, p.den) == 1


def test_arithmetic_bulk():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        a = TorusPoint.of(int(rng.integers(-10**6, 10**6)), int(rng.integers(1, 10**6)))
        b = TorusPoint.of(int(rng.integers(-10**6, 10**6)), int(rng.integers(1, 10**6)))
        assert (a - b) + b == a


def test_canonical_form():
    p = TorusPoint.of(7, 4)
    assert (p.num, p.den) == (3, 4)
    assert TorusPoint.of(-1, 3) == TorusPoint.of(2, 3)
    assert TorusPoint(-0.0).value == 0.0
    assert TorusPoint(-1e-300).value == 0.0  # rounds to 1.0, which wraps to 0
    assert 0.0 <= TorusPoint(-0.25).value < 1.0


def test_mixed_mode_forbidden():
    with pytest.raises(MixedModeError):
        TorusPoint.of(1, 2) + TorusPoint(0.5)
    with pytest.raises(MixedModeError):
        FiniteTorusLaw(((TorusPoint.of(1, 2), 0.5), (TorusPoint(0.25), 0.5)))


# --- injection and pushforward ----------------------------------------------


def test_inject_examples():
    assert inject_f(0) == HALF
    assert [inject_f(k) for k in (1, 2)] == [TorusPoint.of(1, 3), TorusPoint.of(1, 4)]
    assert len({inject_f(k) for k in range(10_001)}) == 10_001


def test_pushforward_examples():
    d = pushforward(FinitePmf.dirac(0))
    assert d.atoms == ((HALF, 1.0),)
    u = pushforward(UNIFORM01)
    assert dict(u.atoms) == {HALF: 0.5, TorusPoint.of(1, 3): 0.5}
    tail = pushforward(TailPmf.from_schedule((1, 1, 5)))
    assert isinstance(tail, PushforwardLaw) and not tail.finite_support


def test_torus_law_json():
    u = pushforward(UNIFORM01)
    assert torus_law_from_json(u.to_json()) == u
    assert u.to_json()["atoms"][0] == {"num": 1, "den": 3, "prob": 0.5}
    g = PushforwardLaw(GeometricPmf(0.5))
    assert torus_law_from_json(g.to_json()).to_json() == g.to_json()


def test_torus_law_validation():
    with pytest.raises(ValueError):
        FiniteTorusLaw(((HALF, 0.5), (HALF, 0.5)))
    with pytest.raises(ValueError):
        FiniteTorusLaw(((HALF, 0.5), (TorusPoint.of(1, 3), 0.6)))


# --- classification ---------------------------------------------------------


def test_classify_examples():
    assert str(classify(FiniteTorusLaw.dirac(F(3, 10)))) == "Case1"
    two = FiniteTorusLaw(((TorusPoint.of(1, 4), 0.5), (TorusPoint.of(3, 4), 0.5)))
    lab = classify(two)
    assert (lab.case, lab.p, lab.x) == (2, 2, TorusPoint.of(1, 4))
    lab = classify(pushforward(UNIFORM01))
    assert (lab.case, lab.p, lab.x) == (2, 6, TorusPoint.of(1, 3))


def test_classify_float_law():
    with pytest.raises(NotClassifiable):
        classify(FiniteTorusLaw(((TorusPoint(0.1), 0.5), (TorusPoint(0.6), 0.5))))


@st.composite
def rational_laws(draw):
    pts = draw(st.lists(st.builds(F, st.integers(0, 40), st.integers(1, 24)), min_size=1, max_size=5))
    pts = sorted({p % 1 for p in pts})
    ws = draw(st.lists(st.floats(0.05, 1.0), min_size=len(pts), max_size=len(pts)))
    total = math.fsum(ws)
    return FiniteTorusLaw(tuple((TorusPoint(p), w / total) for p, w in zip(pts, ws)))


def _divisors(p):
    return [d for d in range(1, p) if p % d == 0]


@settings(max_examples=80)
@given(rational_laws())
def test_classifier_soundness(law):
    lab = classify(law)
    if len(law.atoms) == 1:
        assert lab.case == 1
        return
    assert lab.case == 2 and lab.p >= 2
    assert lab.x == min(law.support)
    for s in law.support:
        assert ((s - lab.x).value * lab.p).denominator == 1
    for q in _divisors(lab.p):
        assert any(((s - lab.x).value * q).denominator != 1 for s in law.support)


@pytest.mark.parametrize("n", [1, 2, 5, 20, 100])
def test_finite_pushforwards_never_case3(n):
    tail = TailPmf.from_schedule((1, 1, 5, 69))
    assert classify(pushforward(truncate(tail, n))).case in (1, 2)
    assert classify(pushforward(tail)).case == 3
    assert classify(PushforwardLaw(GeometricPmf(0.5))).case == 3


# --- simulation -------------------------------------------------------------


def test_dirac_zero_path_constant():
    path = simulate_uniform_solution(FiniteTorusLaw.dirac(0), 6, seed=1)
    assert len(path) == 7 and len({p.value for p in path}) == 1


def test_dirac_half_path_alternates():
    path = simulate_uniform_solution(FiniteTorusLaw.dirac(F(1, 2)), 8, seed=2, mode="grid")
    u = path[0]
    for k, p in enumerate(path):
        assert p == u - TorusPoint(F(k, 2))
    xi, rho = path_increments(path)
    assert all(x == HALF for x in xi) and all(r == TorusPoint(0) for r in rho)


def test_constant_path_increments():
    xi, rho = path_increments([TorusPoint.of(1, 5)] * 4)
    assert all(x.value == 0 for x in xi + rho)


def test_grid_paths_are_exact():
    nu = pushforward(normalize_finite([1, 2, 3]))
    for seed in range(20):
        path = simulate_uniform_solution(nu, 12, seed, mode="grid")
        xi, _ = path_increments(path)
        assert all(p.exact for p in path) and all(x.exact for x in xi)
        for k in range(len(xi)):
            # eta_{k-1} + xi_k = eta_k with index 0 the present
            assert path[k + 1] + xi[k] == path[k]
        assert all(x in set(nu.support) for x in xi)


def test_simulation_is_deterministic():
    nu = pushforward(UNIFORM01)
    a = simulate_uniform_solution(nu, 10, 77, mode="grid")
    assert a == simulate_uniform_solution(nu, 10, 77, mode="grid")
    f1 = simulate_paths(nu, 5, 100, seed=3)
    assert np.array_equal(f1, simulate_paths(nu, 5, 100, seed=3))


@pytest.mark.parametrize("nu", [pushforward(UNIFORM01), FiniteTorusLaw.dirac(F(1, 2)),
                                PushforwardLaw(GeometricPmf(0.5))])
def test_marginals_uniform(nu):
    count, bins = 100_000, 10
    paths = simulate_paths(nu, 6, count, seed=8)
    p = 1 / bins
    se = math.sqrt(p * (1 - p) / count)
    for k in range(paths.shape[1]):
        freq = np.bincount((paths[:, k] * bins).astype(int), minlength=bins) / count
        assert np.all(np.abs(freq - p) <= 4 * se)
    assert paths.min() >= 0.0 and paths.max() < 1.0


# --- arcs and events ----------------------------------------------------------


def test_arc_semantics():
    assert Arc(F(1, 4), F(3, 4)).contains(F(1, 4)) and not Arc(F(1, 4), F(3, 4)).contains(F(3, 4))
    wrap = Arc(F(3, 4), F(1, 4))
    assert wrap.contains(F(0)) and wrap.contains(F(7, 8)) and not wrap.contains(F(1, 2))
    assert Arc(F(1, 3), F(1, 3)).intervals() == []
    assert Arc.full().is_full


def test_event_json_roundtrip():
    ev = PathEvent(3, ((Arc(0, F(1, 2)), Arc(F(3, 4), F(1, 4))),))
    assert ev.to_json() == {"arcs": [[[0, 1, 1, 2], [3, 4, 1, 4]]]}
    assert PathEvent.from_json(ev.to_json(), 3) == ev


def test_reduce_trivial_events():
    full = EventFamily(IDENTITY_PHI, lambda n: PathEvent.full(n + 1))
    empty = EventFamily(IDENTITY_PHI, lambda n: PathEvent.empty(n + 1))
    half = EventFamily.of_arcs([[Arc(0, F(1, 2))]])
    for sample in [(0, 0, 0), (3, 1, 4), (9, 9, 2)]:
        assert reduce_event(full)(3, sample) == 1.0
        assert reduce_event(empty)(3, sample) == 0.0
        assert reduce_event(half)(3, sample) == 0.5

EVENTS = [
    [[Arc(0, F(1, 2)), Arc(F(1, 3), F(5, 6))]],
    [[Arc(F(3, 4), F(1, 4)), Arc.full(), Arc(F(1, 2), 1)], [Arc(0, F(1, 3))]],
    [[Arc(F(1, 5), F(4, 5)), Arc(F(2, 3), F(1, 6)), Arc(0, F(1, 2)), Arc(F(1, 7), F(6, 7))]],
]


@pytest.mark.parametrize("products", EVENTS)
def test_reduction_identity_exact(products):
    fam = EventFamily.of_arcs(products)
    test = reduce_event(fam)
    nu = pushforward(UNIFORM01)
    for n in (3, 4, 5):
        lhs = event_probability(nu, fam, n, "grid")
        rhs = brute_force_expectation(test, UNIFORM01, n)
        assert abs(lhs.value - rhs.value) <= 1e-12


@pytest.mark.parametrize("products", EVENTS)
def test_reduction_identity_monte_carlo(products):
    fam = EventFamily.of_arcs(products)
    nu = pushforward(UNIFORM01)
    sim = event_probability(nu, fam, 3, "monte_carlo", paths=50_000, seed=4)
    exact = brute_force_expectation(reduce_event(fam), UNIFORM01, 3).value
    assert abs(sim.value - exact) <= sim.half_width
    mc_test = reduce_event(fam, mode="monte_carlo", u_samples=20_000, seed=2)
    approx = brute_force_expectation(mc_test, UNIFORM01, 3).value
    assert abs(approx - exact) <= mc_test.u_half_width


def test_integration_is_exact_rational():
    ev = PathEvent(2, ((Arc(0, F(1, 2)), Arc(F(1, 3), F(5, 6))),))
    # u in [0,1/2) and u - 1/2 in [1/3, 5/6) -> u in [0, 1/3) U [5/6, 1); overlap [0, 1/3)
    assert integrate_over_u(ev, [F(0), F(1, 2)]) == F(1, 3)


def test_event_probability_examples():
    for nu in (pushforward(UNIFORM01), FiniteTorusLaw.dirac(F(2, 7))):
        assert event_probability(nu, PathEvent.full(4), evaluator="grid").value == 1.0
        assert event_probability(nu, PathEvent(4, ((Arc(0, F(1, 2)),),)), evaluator="grid").value == 0.5
    r = event_probability(PushforwardLaw(GeometricPmf(0.5)), PathEvent(3, ((Arc(0, F(1, 2)),),)),
                          evaluator="monte_carlo", paths=40_000, seed=1)
    assert abs(r.value - 0.5) <= r.half_width


def test_unaligned_grid_is_an_approximation():
    ev = PathEvent(2, ((Arc(0, F(1, 3)), Arc(F(1, 7), F(5, 7))),))
    nu = pushforward(UNIFORM01)
    exact = event_probability(nu, ev, evaluator="grid").value
    approx = event_probability(nu, ev, evaluator="grid", grid_den=1024, align=False)
    assert approx.error_kind == "truncated"
    assert abs(approx.value - exact) <= approx.half_width


def test_predicate_event_falls_back_to_monte_carlo():
    pred = PathEvent(3, predicate=lambda pts: float(pts[0]) < 0.5)
    fam = EventFamily(IDENTITY_PHI, lambda n: pred)
    test = reduce_event(fam, u_samples=50_000)
    v = test(2, (0, 1))
    assert abs(v - 0.5) <= test.u_half_width
    assert v == test(2, (0, 1))
