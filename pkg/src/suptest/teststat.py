"""Test functionals and three ways to evaluate their expectations.

A :class:`TestFamily` is a sequence ``A_n`` of ``[0, 1]``-valued functions of
a sample of size ``phi(n)``.  Expectations ``E_mu[A_n]`` are computed by

* a closed form, when the family ships one (the split-max statistic does);
* :func:`brute_force_expectation`, enumerating every tuple of a finite law;
* :func:`mc_expectation`, seeded Monte Carlo with a Hoeffding interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dist import FinitePmf, IntegerLaw, SampleSizeMap, IDENTITY
from .errors import InvalidSample, InvalidTolerance, TooLarge

BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class ExpectationReport:
    value: float
    error_kind: str  # exact | truncated | monte_carlo
    half_width: float = 0.0
    confidence: float = 1.0
    evaluations: int = 0

    def __post_init__(self):
        if self.error_kind not in ("exact", "truncated", "monte_carlo"):
            raise ValueError(f"unknown error kind {self.error_kind!r}")
        if self.error_kind == "exact" and self.half_width != 0.0:
            raise ValueError("exact reports carry no half-width")

    def interval(self):
        return max(0.0, self.value - self.half_width), min(1.0, self.value + self.half_width)

    def to_json(self):
        return {"value": self.value, "error_kind": self.error_kind, "half_width": self.half_width,
                "confidence": self.confidence, "evaluations": self.evaluations}


@dataclass(frozen=True, eq=False)
class TestFamily:
    """A sequence of test functionals ``A_n`` with sample-size map ``phi``.

    ``batch`` optionally evaluates many samples at once (rows of a 2-D
    array).  ``closed_form(law, n, tol)`` returns an
    :class:`ExpectationReport`.  ``range_bounds(law, a, b)`` returns
    ``(lo, hi)`` with ``lo <= E_law[A_m] <= hi`` for every ``a <= m <= b``
    (``b=None`` meaning all ``m >= a``) under a finite law; it is what makes
    analytic adversary certificates possible.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    phi: SampleSizeMap
    evaluate: Callable[[int, Sequence[int]], float]
    level_claim: float | None = None
    batch: Callable[[int, np.ndarray], np.ndarray] | None = None
    closed_form: Callable[[IntegerLaw, int, float], ExpectationReport] | None = None
    range_bounds: Callable | None = None
    params: dict = field(default_factory=dict)
    _dual_of: "TestFamily | None" = field(default=None, repr=False)

    def __call__(self, n: int, sample: Sequence[int]) -> float:
        return self.evaluate(n, sample)

    def evaluate_many(self, n: int, samples: np.ndarray) -> np.ndarray:
        if self.batch is not None:
            return np.asarray(self.batch(n, samples), dtype=np.float64)
        return np.fromiter((self.evaluate(n, tuple(row)) for row in samples.tolist()),
                           dtype=np.float64, count=len(samples))

    def dual(self, level_claim: float | None = None) -> "TestFamily":
        """The family ``1 - A_n``; applying it twice returns this object.

        ``level_claim`` is the level asserted for the dual family; it is not
        derived from this family's claim.
        """
        if self._dual_of is not None:
            return self._dual_of
        cached = self.__dict__.get("_dual")
        if cached is not None and (level_claim is None or level_claim == cached.level_claim):
            return cached
        inner = self

        def evaluate(n, sample):
            return 1.0 - inner.evaluate(n, sample)

        batch = None
        if self.batch is not None:
            def batch(n, samples):
                return 1.0 - inner.batch(n, samples)

        closed = None
        if self.closed_form is not None:
            def closed(law, n, tol):
                r = inner.closed_form(law, n, tol)
                return ExpectationReport(1.0 - r.value, r.error_kind, r.half_width, r.confidence,
                                         r.evaluations)

        bounds = None
        if self.range_bounds is not None:
            def bounds(law, a, b):
                lo, hi = inner.range_bounds(law, a, b)
                return 1.0 - hi, 1.0 - lo

        name = self.name[len("dual:"):] if self.name.startswith("dual:") else f"dual:{self.name}"
        out = TestFamily(name, self.phi, evaluate, level_claim, batch, closed, bounds,
                         dict(self.params), _dual_of=self)
        if cached is None:
            object.__setattr__(self, "_dual", out)
        return out

    def to_json(self):
        return {"name": self.name, **self.params}


# ---------------------------------------------------------------------------
# Statistics


def split_max_statistic(sample: Sequence[int]) -> int:
    """1 if the two halves of ``sample`` have the same maximum, else 0."""
    if len(sample) < 2 or len(sample) % 2:
        raise InvalidSample("split-max needs an even sample of length >= 2")
    half = len(sample) // 2
    return int(max(sample[:half]) == max(sample[half:]))


def bounded_support_statistic(sample: Sequence[int], N: int) -> int:
    """``min(max(sample), N + 1)``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    if len(sample) == 0:
        raise InvalidSample("sample must be nonempty")
    return min(int(max(sample)), N + 1)


# ---------------------------------------------------------------------------
# Law of the maximum


def _power(sf: np.ndarray, n: int) -> np.ndarray:
    """``(1 - sf)^n`` without forming ``1 - sf``."""
    with np.errstate(divide="ignore"):
        return np.exp(n * np.log1p(-np.minimum(sf, 1.0)))


def max_point_masses(law: IntegerLaw, n: int, K: int):
    """Support points up to ``K`` and ``P(max of n draws = k)`` there.

    Uses ``F(k)^n - F(k^-)^n`` with ``F`` just below the first atom equal to 0.
    """
    points, _, sf = law.atoms_upto(K)
    upper = _power(sf, n)
    lower = np.empty_like(upper)
    lower[0] = 0.0
    lower[1:] = upper[:-1]
    return points, np.maximum(upper - lower, 0.0)


def max_distribution(law: FinitePmf, n: int) -> FinitePmf:
    """Exact law of ``max(X_1..X_n)`` under a finite law."""
    points, masses = max_point_masses(law, n, law.right_endpoint)
    keep = masses > 0
    return FinitePmf(tuple(points[keep].tolist()), tuple((masses[keep] / masses[keep].sum()).tolist()))


def _truncation_point(law: IntegerLaw, n: int, tol: float) -> int:
    """Smallest ``K`` with ``1 - F(K)^n <= tol``."""
    if law.finite_support:
        return law.right_endpoint
    # 1 - (1 - s)^n <= tol  <=>  s <= -expm1(log1p(-tol) / n)
    return law.cutoff(-math.expm1(math.log1p(-tol) / n))


def exact_split_max_expectation(law: IntegerLaw, n: int, tol: float = 1e-13) -> ExpectationReport:
    """``E[T_2n] = sum_k (F(k)^n - F(k-1)^n)^2``.

    Exact (up to rounding) for finite laws.  For infinite laws the sum stops
    at the smallest ``K`` with ``1 - F(K)^n <= tol``; the dropped part lies
    in ``[0, (1 - F(K)^n)^2]`` and is reported as a half-width around the
    midpoint, plus ``2n`` times the law's own TV error.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not tol > 0:
        raise InvalidTolerance("tol must be positive")
    K = _truncation_point(law, n, tol)
    points, masses = max_point_masses(law, n, K)
    partial = math.fsum(masses * masses)
    if law.finite_support and law.tv_error == 0.0:
        return ExpectationReport(min(partial, 1.0), "exact", evaluations=len(points))
    beyond = -math.expm1(n * math.log1p(-min(law.sf(K), 1.0)))
    rem = beyond * beyond
    half = rem / 2 + 2 * n * law.tv_error
    return ExpectationReport(min(partial + rem / 2, 1.0), "truncated", half, 1.0, len(points))


def _split_max_range_lower(law: FinitePmf, a: int, b: int | None) -> float:
    """Lower bound on ``E[T_2m]`` over ``a <= m <= b``.

    ``P(S_m = k) = F(k)^m - F(k^-)^m >= F(k)^b - F(k^-)^a`` on the range,
    since both powers decrease in ``m``.
    """
    points, _, sf = law.atoms_upto(law.right_endpoint)
    hi = _power(sf, a)
    lo = np.zeros_like(hi) if b is None else _power(sf, b)
    lo[-1] = 1.0  # F(right endpoint) = 1
    below = np.empty_like(hi)
    below[0] = 0.0
    below[1:] = hi[:-1]
    terms = np.maximum(lo - below, 0.0)
    return math.fsum(terms * terms)


def _split_max_range_upper(law: FinitePmf, a: int, b: int | None) -> float:
    points, _, sf = law.atoms_upto(law.right_endpoint)
    hi = _power(sf, a)
    if b is None:
        lo = np.zeros_like(hi)
        lo[-1] = 1.0
    else:
        lo = _power(sf, b)
    below = np.empty_like(lo)
    below[0] = 0.0
    below[1:] = lo[:-1]
    terms = np.clip(hi - below, 0.0, 1.0)
    return min(1.0, math.fsum(terms * terms))


def _split_max_bounds(law, a, b):
    if not law.finite_support:
        raise ValueError("range bounds need a finite-support law")
    return _split_max_range_lower(law, a, b), _split_max_range_upper(law, a, b)


def _split_max_eval(n, sample):
    if len(sample) != 2 * n:
        raise InvalidSample(f"expected a sample of length {2 * n}")
    return float(split_max_statistic(sample))


def _split_max_batch(n, samples):
    return (samples[:, :n].max(axis=1) == samples[:, n:].max(axis=1)).astype(np.float64)


def split_max_family() -> TestFamily:
    """``A_n = T_2n``: the two half-sample maxima coincide (``phi(n) = 2n``)."""
    return TestFamily("split_max", SampleSizeMap("linear", factor=2), _split_max_eval,
                      batch=_split_max_batch, closed_form=exact_split_max_expectation,
                      range_bounds=_split_max_bounds)


def split_max_rejection_family() -> TestFamily:
    """``A_n = 1 - T_2n``, which has pointwise level 0 under finite support."""
    return split_max_family().dual(level_claim=0.0)


def constant_family(value: float, phi: SampleSizeMap = IDENTITY) -> TestFamily:
    """``A_n`` identically equal to ``value``."""
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError("constant test value must lie in [0, 1]")

    def closed(law, n, tol):
        return ExpectationReport(value, "exact", evaluations=1)

    return TestFamily("constant", phi, lambda n, sample: value, value,
                      lambda n, samples: np.full(len(samples), value), closed,
                      lambda law, a, b: (value, value), {"value": value})


def _exceed_prob(s: float, m: int) -> float:
    """``1 - (1 - s)^m``."""
    if s >= 1.0:
        return 1.0
    return -math.expm1(m * math.log1p(-s))


def bounded_support_family(N: int) -> TestFamily:
    """``A_n = 1{max(X_1..X_n) > N}``: rejects support inside ``[0, N]``."""

    def closed(law, n, tol):
        v = _exceed_prob(law.sf(N), n)
        kind = "exact" if law.tv_error == 0.0 else "truncated"
        return ExpectationReport(v, kind, 0.0 if kind == "exact" else n * law.tv_error, 1.0, 1)

    def bounds(law, a, b):
        # 1 - F(N)^m increases with m
        s = law.sf(N)
        lo = _exceed_prob(s, a)
        if b is None:
            return lo, (1.0 if s > 0 else 0.0)
        return lo, _exceed_prob(s, b)

    return TestFamily("bounded_support", IDENTITY,
                      lambda n, sample: float(max(sample) > N), None,
                      lambda n, samples: (samples.max(axis=1) > N).astype(np.float64),
                      closed, bounds, {"N": N})


# ---------------------------------------------------------------------------
# Evaluators


def brute_force_expectation(test: TestFamily, law: FinitePmf, n: int,
                            limit: int = BRUTE_FORCE_LIMIT) -> ExpectationReport:
    """Exact expectation by enumerating every ``phi(n)``-tuple of the support."""
    if not law.finite_support:
        raise TypeError("brute force needs a finite-support law")
    d = test.phi(n)
    s = len(law.support)
    total = s**d
    if total > limit:
        raise TooLarge(f"{s}^{d} = {total} tuples exceeds the budget {limit}")
    support = np.asarray(law.support, dtype=np.int64)
    logw = np.log(np.asarray(law.probs, dtype=np.float64))
    place = s ** np.arange(d - 1, -1, -1, dtype=np.int64)
    parts = []
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (idx[:, None] // place) % s if d else np.zeros((len(idx), 0), dtype=np.int64)
        weights = np.exp(logw[digits].sum(axis=1))
        values = test.evaluate_many(n, support[digits])
        if np.any((values < 0) | (values > 1)):
            raise ValueError("test values must lie in [0, 1]")
        parts.append(math.fsum(weights * values))
    return ExpectationReport(min(1.0, math.fsum(parts)), "exact", evaluations=total)


def hoeffding_half_width(reps: int, conf: float, one_sided: bool = False) -> float:
    """Hoeffding half-width for the mean of ``reps`` values in ``[0, 1]``."""
    if reps < 1:
        raise ValueError("reps must be positive")
    if not 0.0 < conf < 1.0:
        raise ValueError("conf must lie in (0, 1)")
    tails = 1.0 if one_sided else 2.0
    return math.sqrt(math.log(tails / (1.0 - conf)) / (2.0 * reps))


def mc_expectation(test: TestFamily, law: IntegerLaw, n: int, reps: int, conf: float = 0.99,
                   seed=0, one_sided: bool = False) -> ExpectationReport:
    """Sample mean of ``A_n`` over ``reps`` independent seeded samples."""
    d = test.phi(n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    hw = hoeffding_half_width(reps, conf, one_sided) + d * law.tv_error
    values = []
    rows = max(1, (1 << 22) // max(d, 1))
    for start in range(0, reps, rows):
        m = min(rows, reps - start)
        draws = law.sample(rng, m * d).reshape(m, d)
        values.append(test.evaluate_many(n, draws))
    vals = np.concatenate(values)
    return ExpectationReport(math.fsum(vals) / reps, "monte_carlo", hw, conf, reps)


def expectation(test: TestFamily, law: IntegerLaw, n: int, evaluator: str = "exact", *,
                tol: float = 1e-13, reps: int = 10_000, conf: float = 0.99, seed=0) -> ExpectationReport:
    """Dispatch to one of the evaluators by name."""
    if evaluator == "exact":
        if test.closed_form is None:
            raise ValueError(f"test {test.name!r} has no closed-form evaluator")
        return test.closed_form(law, n, tol)
    if evaluator == "brute_force":
        return brute_force_expectation(test, law, n)
    if evaluator == "monte_carlo":
        return mc_expectation(test, law, n, reps, conf, seed)
    raise ValueError(f"unknown evaluator {evaluator!r}")
