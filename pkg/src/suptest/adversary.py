"""Constructive adversary against pointwise-level tests of finite support.

Given a test family whose expectation is asymptotically at most ``alpha``
under every finite-support law, :func:`build_adversary` produces an
infinite-support law ``mu2(k) = c / phi(psi(k))^2`` together with a
subsequence ``psi`` along which the test's expectation under ``mu2`` is at
most ``alpha + 1/n + (tail term)``.  Each rank records a certificate
showing that the truncated law ``mu2^n`` keeps the test below
``alpha + 1/n`` from ``psi(n)`` on.

The search for ``psi(n)`` is exact-first: with the ``analytic`` horizon the
test family must supply range bounds, and a right-to-left branch and bound
over ``m`` finds the largest violating ``m`` so the certificate covers
every ``m >= psi(n)``.  With a finite horizon only ``[psi(n), M_n]`` is
checked and the certificate is labelled a heuristic witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from . import _json
from .dist import FinitePmf, TailPmf, law_from_json, normalize_finite, truncate
from .errors import LevelViolation, VerificationFailure
from .teststat import TestFamily, brute_force_expectation, mc_expectation

DEFAULT_BUDGET = 200_000
MAX_M = 2**62


@dataclass(frozen=True)
class FiniteHorizon:
    """Check ``m`` in ``[psi, ceil(multiplier * psi)]`` only."""

    multiplier: float = 2.0

    def to_json(self):
        return {"kind": "finite_horizon", "multiplier": self.multiplier}


@dataclass(frozen=True)
class AnalyticHorizon:
    """Cover every ``m >= psi`` using the family's range bounds."""

    max_m: int = MAX_M

    def to_json(self):
        return {"kind": "analytic"}


def horizon_from_json(obj):
    if obj in ("analytic", None):
        return AnalyticHorizon()
    if isinstance(obj, (AnalyticHorizon, FiniteHorizon)):
        return obj
    kind = obj.get("kind")
    if kind == "analytic":
        return AnalyticHorizon(int(obj.get("max_m", MAX_M)))
    if kind == "finite_horizon":
        return FiniteHorizon(float(obj.get("multiplier", 2.0)))
    raise ValueError(f"unknown horizon policy {obj!r}")


@dataclass(frozen=True)
class LevelCertificate:
    rank: int
    checked_m_range: tuple
    max_expectation: float
    bound: float
    method: str
    analytic: bool
    confidence: float = 1.0
    evaluations: int = 0
    label: str = "certified"

    def holds(self) -> bool:
        return self.max_expectation <= self.bound

    def to_json(self):
        return {"rank": self.rank, "checked_m_range": list(self.checked_m_range),
                "max_expectation": self.max_expectation, "bound": self.bound,
                "method": self.method, "analytic": self.analytic, "confidence": self.confidence,
                "evaluations": self.evaluations, "label": self.label}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["rank"]), tuple(obj["checked_m_range"]), float(obj["max_expectation"]),
                   float(obj["bound"]), obj["method"], bool(obj["analytic"]),
                   float(obj.get("confidence", 1.0)), int(obj.get("evaluations", 0)),
                   obj.get("label", "certified"))


@dataclass(frozen=True)
class RankRecord:
    n: int
    psi: int
    c_n: float
    certificate: LevelCertificate

    def to_json(self):
        return {"n": self.n, "psi": self.psi, "c_n": self.c_n, "certificate": self.certificate.to_json()}


@dataclass(frozen=True)
class AdversarySchedule:
    alpha: float
    ranks: tuple
    final_law: TailPmf
    horizon: dict = field(default_factory=lambda: {"kind": "analytic"})
    evaluator: str = "exact"
    test: dict = field(default_factory=dict)

    @property
    def psi_values(self):
        """``psi(0), psi(1), ..., psi(N)``."""
        return self.final_law.psi_table

    def to_json(self):
        return {"alpha": self.alpha, "ranks": [r.to_json() for r in self.ranks],
                "final_law": self.final_law.to_json(), "horizon": self.horizon,
                "evaluator": self.evaluator, "test": self.test}

    def dumps(self) -> str:
        return _json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj):
        ranks = tuple(RankRecord(int(r["n"]), int(r["psi"]), float(r["c_n"]),
                                 LevelCertificate.from_json(r["certificate"])) for r in obj["ranks"])
        law = law_from_json(obj["final_law"])
        if not isinstance(law, TailPmf):
            raise ValueError("final_law must be a tail law")
        return cls(float(obj["alpha"]), ranks, law, obj.get("horizon", {"kind": "analytic"}),
                   obj.get("evaluator", "exact"), obj.get("test", {}))


@dataclass(frozen=True)
class RankBound:
    rank: int
    psi: int
    term_level: float
    term_tail: float
    coarse_tail: float
    total: float
    measured: float
    half_width: float
    within_level: float
    passed: bool

    def csv_row(self):
        return [self.rank, self.psi, self.measured, self.term_level, self.term_tail, self.total,
                int(self.passed)]


CSV_COLUMNS = ["rank", "psi", "measured", "term_level", "term_tail", "total", "pass"]


# ---------------------------------------------------------------------------
# Duality


def dualize(test: TestFamily, alpha_prime: float | None = None) -> TestFamily:
    """``A_n -> 1 - A_n``.

    If ``alpha_prime`` is given the dual is tagged with level
    ``1 - alpha_prime``.  Dualizing twice returns the original object.
    """
    if alpha_prime is not None and not 0.0 <= alpha_prime <= 1.0:
        raise ValueError("alpha_prime must lie in [0, 1]")
    return test.dual(None if alpha_prime is None else 1.0 - alpha_prime)


# ---------------------------------------------------------------------------
# Tail terms


@dataclass(frozen=True)
class TailUnionBound:
    term: float
    error: float
    coarse: float


def coarse_tail(n: int) -> float:
    """``sum_{k >= n} k^-2`` (``zeta(2)`` at ``n = 1``)."""
    return float(zeta(2.0, n))


def _weights_array(weight_fn, lo: int, hi: int) -> np.ndarray:
    """``w(lo), ..., w(hi - 1)``; callables that accept arrays are called once."""
    ks = np.arange(lo, hi, dtype=np.float64)
    try:
        w = np.asarray(weight_fn(ks), dtype=np.float64)
        if w.shape == ks.shape:
            return w
    except (TypeError, ValueError):
        pass
    return np.fromiter((float(weight_fn(k)) for k in range(lo, hi)), dtype=np.float64, count=hi - lo)


def tail_union_bound(n: int, weight_fn) -> TailUnionBound:
    """``w(n) * sum_{k >= n} w(k)^-2`` and the coarser ``sum_{k >= n} k^-2``.

    ``weight_fn`` is a :class:`TailPmf` (tail sums to machine precision) or
    any callable with ``w(k) > k^2`` for ``k >= n`` (summed until the
    ``1/(3(K-1)^3)`` remainder is below ``1e-13`` relative).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(weight_fn, TailPmf):
        w_n = float(weight_fn.weight(n))
        tail = weight_fn.tail_sum(n - 1)
        term = w_n * tail
        err = 8 * 2.0**-53 * term
    else:
        w_n = float(weight_fn(n))
        first = 1.0 / w_n**2
        K = max(n + 1, 1 + math.ceil((1.0 / (3e-13 * first)) ** (1.0 / 3.0)))
        K = min(K, n + 2 * 10**6)
        partial = math.fsum(1.0 / _weights_array(weight_fn, n, K) ** 2)
        rem = 1.0 / (3.0 * (K - 1) ** 3)
        term = w_n * (partial + rem / 2)
        err = w_n * rem / 2 + 8 * 2.0**-53 * term
    return TailUnionBound(term, err, coarse_tail(n))


# ---------------------------------------------------------------------------
# Evaluators on the truncated laws


class _Evaluator:
    """Upper confidence values of ``E_law[A_m]`` for one rank."""

    def __init__(self, test, method, law, rank, tol, reps, conf, seed):
        self.test, self.method, self.law, self.rank = test, method, law, rank
        self.tol, self.reps, self.conf, self.seed = tol, reps, conf, seed
        self.calls = 0
        self.cache = {}

    def upper(self, m: int) -> float:
        if m in self.cache:
            return self.cache[m]
        self.calls += 1
        if self.method == "exact":
            if self.test.closed_form is None:
                raise ValueError(f"test {self.test.name!r} has no closed-form evaluator")
            r = self.test.closed_form(self.law, m, self.tol)
            v = r.value + r.half_width
        elif self.method == "brute_force":
            v = brute_force_expectation(self.test, self.law, m).value
        elif self.method == "monte_carlo":
            rng = np.random.default_rng([self.seed, self.rank, m])
            r = mc_expectation(self.test, self.law, m, self.reps, self.conf, rng, one_sided=True)
            v = r.value + r.half_width
        else:
            raise ValueError(f"unknown evaluator {self.method!r}")
        self.cache[m] = v
        return v


def _search_analytic(test, ev: _Evaluator, lo: int, bound: float, rank: int, horizon, budget):
    law = ev.law
    if test.range_bounds is None:
        raise ValueError(f"test {test.name!r} has no range bounds; use a finite horizon")

    def tail_upper(m):
        return test.range_bounds(law, m, None)[1]

    # smallest m_star >= lo whose whole tail [m_star, inf) is within the bound
    if tail_upper(lo) <= bound:
        m_star = lo
    else:
        hi = lo
        while tail_upper(hi) > bound:
            if hi > horizon.max_m:
                raise LevelViolation(rank, hi, tail_upper(hi), bound)
            hi *= 2
        left = max(lo, hi // 2)
        while hi - left > 1:
            mid = (left + hi) // 2
            if tail_upper(mid) > bound:
                left = mid
            else:
                hi = mid
        m_star = hi
    worst = tail_upper(m_star)
    work = 0

    # right-to-left branch and bound over [lo, m_star - 1]
    stack = [(lo, m_star - 1)]
    psi = lo
    while stack:
        a, b = stack.pop()
        if a > b:
            continue
        work += 1
        if work + ev.calls > budget:
            raise LevelViolation(rank, b, test.range_bounds(law, a, b)[1], bound)
        if b - a < 4:
            violated = None
            for m in range(b, a - 1, -1):
                v = ev.upper(m)
                if v > bound:
                    violated = m
                    break
                worst = max(worst, v)
            if violated is not None:
                psi = violated + 1
                break
            continue
        upper = test.range_bounds(law, a, b)[1]
        if upper <= bound:
            worst = max(worst, upper)
            continue
        mid = (a + b) // 2
        stack.append((a, mid))
        stack.append((mid + 1, b))
    return psi, (psi, m_star), worst, work + ev.calls


def _search_finite(ev: _Evaluator, lo: int, bound: float, rank: int, horizon: FiniteHorizon, budget):
    c = lo
    while True:
        M = max(c, math.ceil(horizon.multiplier * c))
        worst, violated = -math.inf, None
        for m in range(M, c - 1, -1):
            if ev.calls >= budget and m not in ev.cache:
                bad = max(ev.cache, key=ev.cache.get)
                raise LevelViolation(rank, bad, ev.cache[bad], bound)
            v = ev.upper(m)
            if v > bound:
                violated = m
                break
            worst = max(worst, v)
        if violated is None:
            return c, (c, M), worst, ev.calls
        c = violated + 1


def build_adversary(test: TestFamily, alpha: float, num_ranks: int, horizon_policy="analytic",
                    evaluator: str = "exact", *, tol: float = 1e-13, reps: int = 20_000,
                    conf: float = 0.99, seed: int = 0, search_budget: int = DEFAULT_BUDGET,
                    eps: float = 1e-14) -> AdversarySchedule:
    """Recursively build ``psi`` and the infinite-support law ``mu2``.

    Rank 1 is ``mu2^1 = Dirac(0)`` with ``psi(0) = psi(1) = 1``.  For rank
    ``n > 1``, ``mu2^n`` puts mass proportional to ``phi(psi(k))^-2`` on
    ``{0..n-1}`` and ``psi(n)`` is the smallest integer above
    ``max(psi(n-1), n^2)`` from which ``E_{mu2^n}[A_m] <= alpha + 1/n``
    under the chosen horizon.

    Raises :class:`LevelViolation` when no such value is found within the
    search budget.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if num_ranks < 1:
        raise ValueError("num_ranks must be at least 1")
    horizon = horizon_from_json(horizon_policy)
    analytic = isinstance(horizon, AnalyticHorizon)
    phi = test.phi

    psi = [1, 1]
    ev = _Evaluator(test, evaluator, FinitePmf.dirac(0), 1, tol, reps, conf, seed)
    v1 = ev.upper(1)
    cert = LevelCertificate(1, (1, 1), v1, alpha + 1.0, evaluator, True,
                            conf if evaluator == "monte_carlo" else 1.0, 1, "certified")
    ranks = [RankRecord(1, 1, float(phi(1)) ** 2, cert)]

    for n in range(2, num_ranks + 1):
        inv = [1.0 / float(phi(psi[k])) ** 2 for k in range(n)]
        law = normalize_finite(inv)
        c_n = 1.0 / math.fsum(inv)
        bound = alpha + 1.0 / n
        lo = max(psi[n - 1], n * n) + 1
        ev = _Evaluator(test, evaluator, law, n, tol, reps, conf, seed)
        if analytic:
            value, checked, worst, work = _search_analytic(test, ev, lo, bound, n, horizon, search_budget)
            label = "certified" if evaluator != "monte_carlo" else "probabilistic"
        else:
            value, checked, worst, work = _search_finite(ev, lo, bound, n, horizon, search_budget)
            label = "heuristic witness"
        cert = LevelCertificate(n, checked, worst, bound, evaluator, analytic,
                                conf if evaluator == "monte_carlo" else 1.0, work, label)
        psi.append(value)
        ranks.append(RankRecord(n, value, c_n, cert))

    final_law = TailPmf.from_schedule(psi, phi, eps)
    return AdversarySchedule(float(alpha), tuple(ranks), final_law, horizon.to_json(), evaluator,
                             test.to_json())


def build_dual_adversary(test: TestFamily, alpha_prime: float, num_ranks: int, **kwargs) -> AdversarySchedule:
    """Run the construction on ``1 - A_n`` at level ``1 - alpha_prime``.

    If every finite-support law kept ``liminf E[A_n] > alpha_prime``, the
    dual family would have level ``1 - alpha_prime`` and the returned law
    has infinite support with ``limsup E[A_n] >= alpha_prime`` along ``psi``.
    """
    if not 0.0 < alpha_prime < 1.0:
        raise ValueError("alpha_prime must lie in (0, 1)")
    return build_adversary(dualize(test, alpha_prime), 1.0 - alpha_prime, num_ranks, **kwargs)


def verify_adversary(schedule: AdversarySchedule, test: TestFamily, evaluator: str = "exact", *,
                     tol: float = 1e-10, reps: int = 20_000, conf: float = 0.99, seed: int = 0,
                     slack: float = 1e-12, strict: bool = True) -> list:
    """Check the three-term bound at every rank of ``schedule``.

    For rank ``n`` the bound is ``alpha + 1/n`` plus the union bound
    ``phi(psi(n)) * mu2([n, inf))`` on some draw reaching ``n``.  The
    measured value is ``E_{mu2}[A_{psi(n)}]`` on the final law.
    """
    law = schedule.final_law
    out = []
    for rec in schedule.ranks:
        n, m = rec.n, rec.psi
        if evaluator == "exact":
            r = test.closed_form(law, m, tol)
            inner = test.closed_form(truncate(law, n), m, tol)
        elif evaluator == "monte_carlo":
            r = mc_expectation(test, law, m, reps, conf, np.random.default_rng([seed, n]))
            inner = mc_expectation(test, truncate(law, n), m, reps, conf,
                                   np.random.default_rng([seed, n, 1]))
        else:
            raise ValueError(f"unknown evaluator {evaluator!r}")
        tub = tail_union_bound(n, law)
        term_level = schedule.alpha + 1.0 / n
        term_tail = min(1.0, law.c * (tub.term + tub.error))
        total = min(1.0, term_level + term_tail)
        passed = r.value <= total + r.half_width + slack
        out.append(RankBound(n, m, term_level, term_tail, tub.coarse, total, r.value, r.half_width,
                             inner.value, passed))
    if strict:
        for b in out:
            if not b.passed:
                raise VerificationFailure(b.rank, out)
    return out
