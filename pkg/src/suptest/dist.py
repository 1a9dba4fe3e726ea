"""Integer-supported probability laws.

Four concrete laws share the :class:`IntegerLaw` interface:

* :class:`FinitePmf` -- finite support, stored as sorted atoms.
* :class:`GeometricPmf` -- ``p (1-p)^(k-shift)`` on ``{shift, shift+1, ...}``.
* :class:`TailPmf` -- ``c / w(k)^2`` with ``w(k) = phi(psi(k))``, the
  infinite-support law built by the adversary.
* :class:`MixturePmf` -- a finite law with a small geometric tail glued on
  beyond its right endpoint.

Every law can report its atoms up to a cutoff together with accurate
survival values ``P(X > k)``.  The survival values, not ``1 - F``, are what
the maximum-law computations raise to large powers, so they are computed
directly from tail sums.
"""

from __future__ import annotations

import bisect
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidLaw, InvalidTolerance, InvalidWeights

SUM_TOL = 1e-12
# Survival mass below which inverse-CDF sampling treats the law as exhausted;
# uniforms from numpy are multiples of 2**-53.
_SAMPLING_FLOOR = 2.0**-60
_DIRECT_LIMIT = 1 << 21
_EM_START = 10_000


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Sample-size maps


@dataclass(frozen=True)
class SampleSizeMap:
    """A strictly increasing map ``m -> phi(m)`` on the positive integers.

    ``kind`` is one of ``identity``, ``linear`` (``phi(m) = factor * m``) or
    ``table`` (``phi(1..L)`` listed explicitly, then ``phi(L) + (m - L)``).
    """

    kind: str = "identity"
    factor: int = 1
    table: tuple = ()

    def __post_init__(self):
        if self.kind == "identity":
            return
        if self.kind == "linear":
            if int(self.factor) != self.factor or self.factor < 1:
                raise ValueError("linear sample-size factor must be a positive integer")
            return
        if self.kind == "table":
            vals = tuple(int(v) for v in self.table)
            if not vals or vals[0] < 1 or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError("phi table must be a nonempty strictly increasing list of positive integers")
            object.__setattr__(self, "table", vals)
            return
        raise ValueError(f"unknown sample-size map kind {self.kind!r}")

    def __call__(self, m: int) -> int:
        m = int(m)
        if m < 0:
            raise ValueError("sample-size map is defined on nonnegative integers")
        if self.kind == "identity":
            return m
        if self.kind == "linear":
            return self.factor * m
        if m == 0:
            raise ValueError("table sample-size maps start at 1")
        L = len(self.table)
        if m <= L:
            return self.table[m - 1]
        return self.table[-1] + (m - L)

    def affine(self):
        """``(start, slope, intercept)`` with ``phi(m) = slope*m + intercept`` for ``m >= start``."""
        if self.kind == "identity":
            return 1, 1, 0
        if self.kind == "linear":
            return 1, self.factor, 0
        L = len(self.table)
        return L, 1, self.table[-1] - L

    def apply_array(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        if self.kind == "identity":
            return m
        if self.kind == "linear":
            return self.factor * m
        tab = np.asarray(self.table, dtype=np.float64)
        L = len(tab)
        idx = np.clip(m, 1, L).astype(np.int64) - 1
        return np.where(m <= L, tab[idx], tab[-1] + (m - L))

    def to_json(self):
        if self.kind == "identity":
            return "identity"
        if self.kind == "linear":
            return {"linear": self.factor}
        return {"table": list(self.table)}

    @classmethod
    def from_json(cls, obj) -> "SampleSizeMap":
        if obj == "identity":
            return cls()
        if isinstance(obj, dict) and set(obj) == {"linear"}:
            return cls("linear", factor=int(obj["linear"]))
        if isinstance(obj, dict) and set(obj) == {"table"}:
            return cls("table", table=tuple(obj["table"]))
        raise ValueError(f"cannot parse sample-size map {obj!r}")


IDENTITY = SampleSizeMap()


# ---------------------------------------------------------------------------
# Base class


class IntegerLaw(ABC):
    """A probability law on the nonnegative integers."""

    finite_support: bool = False

    @property
    def tv_error(self) -> float:
        """Certified total-variation distance to the law this object stands for."""
        return 0.0

    @abstractmethod
    def pmf(self, k: int) -> float: ...

    @abstractmethod
    def cdf(self, k: int) -> float: ...

    @abstractmethod
    def sf(self, k: int) -> float:
        """``P(X > k)``."""

    @abstractmethod
    def cutoff(self, mass: float) -> int:
        """Smallest integer ``K`` with ``sf(K) <= mass``."""

    @abstractmethod
    def atoms_upto(self, K: int):
        """Support points ``<= K`` with their masses and survival values.

        Returns three aligned arrays ``(points, probs, sf)``.
        """

    @abstractmethod
    def to_json(self) -> dict: ...

    def sample(self, seed, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. values by inversion of the survival function."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        rng = _as_rng(seed)
        points, _, sf = self._sampling_table
        v = 1.0 - rng.random(count)
        idx = np.searchsorted(-sf, -v, side="right")
        np.minimum(idx, len(points) - 1, out=idx)
        return points[idx]

    @cached_property
    def _sampling_table(self):
        K = self.right_endpoint if self.finite_support else self.cutoff(_SAMPLING_FLOOR)
        return self.atoms_upto(K)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()})"


# ---------------------------------------------------------------------------
# Finite laws


@dataclass(frozen=True, repr=False)
class FinitePmf(IntegerLaw):
    """Finite-support law stored as strictly increasing atoms with positive mass."""

    support: tuple
    probs: tuple

    finite_support = True

    def __post_init__(self):
        support = tuple(int(k) for k in self.support)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if not support or len(support) != len(probs):
            raise InvalidLaw("support and probs must be nonempty and of equal length")
        if support[0] < 0 or any(b <= a for a, b in zip(support, support[1:])):
            raise InvalidLaw("support must be strictly increasing nonnegative integers")
        if not all(0.0 < p <= 1.0 for p in probs):
            raise InvalidLaw("every stored probability must lie in (0, 1]")
        if abs(math.fsum(probs) - 1.0) > SUM_TOL:
            raise InvalidLaw(f"probabilities sum to {math.fsum(probs)!r}, not 1")

    @classmethod
    def dirac(cls, k: int) -> "FinitePmf":
        return cls((k,), (1.0,))

    @classmethod
    def uniform(cls, values: Iterable[int]) -> "FinitePmf":
        values = sorted(set(int(v) for v in values))
        return cls(tuple(values), tuple(1.0 / len(values) for _ in values))

    @property
    def right_endpoint(self) -> int:
        return self.support[-1]

    @cached_property
    def _arrays(self):
        points = np.asarray(self.support, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        sf = np.zeros_like(probs)
        if len(probs) > 1:
            sf[:-1] = np.cumsum(probs[::-1])[::-1][1:]
        return points, probs, np.clip(sf, 0.0, 1.0)

    def pmf(self, k):
        i = bisect.bisect_left(self.support, k)
        if i < len(self.support) and self.support[i] == k:
            return self.probs[i]
        return 0.0

    def cdf(self, k):
        i = bisect.bisect_right(self.support, k)
        if i == len(self.support):
            return 1.0
        return min(1.0, math.fsum(self.probs[:i]))

    def sf(self, k):
        i = bisect.bisect_right(self.support, k)
        return min(1.0, math.fsum(self.probs[i:]))

    def cutoff(self, mass):
        points, _, sf = self._arrays
        i = int(np.argmax(sf <= mass))
        if i == 0 and sf[0] > mass:
            return self.right_endpoint
        return int(points[i])

    def atoms_upto(self, K):
        points, probs, sf = self._arrays
        n = bisect.bisect_right(self.support, K)
        return points[:n], probs[:n], sf[:n]

    def to_json(self):
        return {"kind": "finite", "support": list(self.support), "probs": list(self.probs)}


def normalize_finite(raw_weights: Sequence[float], support: Sequence[int] | None = None) -> FinitePmf:
    """Normalize nonnegative weights into a :class:`FinitePmf`.

    ``support`` defaults to ``0..len(raw_weights)-1``.  Points with zero
    weight are dropped so the stored support is the true support.
    """
    weights = [float(w) for w in raw_weights]
    if support is None:
        support = range(len(weights))
    support = [int(k) for k in support]
    if len(support) != len(weights):
        raise InvalidWeights("weights and support differ in length")
    if not weights or any(not math.isfinite(w) or w < 0 for w in weights):
        raise InvalidWeights("weights must be finite and nonnegative")
    total = math.fsum(weights)
    if total <= 0:
        raise InvalidWeights("at least one weight must be positive")
    pairs = sorted((k, w) for k, w in zip(support, weights) if w > 0)
    return FinitePmf(tuple(k for k, _ in pairs), tuple(w / total for _, w in pairs))


# ---------------------------------------------------------------------------
# Geometric laws


@dataclass(frozen=True, repr=False)
class GeometricPmf(IntegerLaw):
    """``P(X = shift + j) = p (1 - p)^j`` for ``j >= 0``."""

    p: float
    shift: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidLaw("geometric parameter must lie in (0, 1)")
        if self.shift < 0:
            raise InvalidLaw("shift must be nonnegative")

    @property
    def _log_q(self):
        return math.log1p(-self.p)

    def pmf(self, k):
        if k < self.shift:
            return 0.0
        return self.p * math.exp((k - self.shift) * self._log_q)

    def sf(self, k):
        if k < self.shift:
            return 1.0
        return math.exp((k - self.shift + 1) * self._log_q)

    def cdf(self, k):
        if k < self.shift:
            return 0.0
        return -math.expm1((k - self.shift + 1) * self._log_q)

    def cutoff(self, mass):
        if mass >= 1.0:
            return 0
        if mass <= 0.0:
            raise InvalidTolerance("infinite support: mass must be positive")
        K = self.shift + max(0, math.ceil(math.log(mass) / self._log_q) - 1)
        while self.sf(K) > mass:
            K += 1
        while K > 0 and self.sf(K - 1) <= mass:
            K -= 1
        return K

    def atoms_upto(self, K):
        points = np.arange(self.shift, max(K, self.shift - 1) + 1, dtype=np.int64)
        j = (points - self.shift).astype(np.float64)
        probs = self.p * np.exp(j * self._log_q)
        sf = np.exp((j + 1.0) * self._log_q)
        return points, probs, sf

    def sample(self, seed, count):
        if count < 0:
            raise ValueError("count must be nonnegative")
        rng = _as_rng(seed)
        v = 1.0 - rng.random(count)
        return self.shift + np.floor(np.log(v) / self._log_q).astype(np.int64)

    def to_json(self):
        return {"kind": "geometric", "p": self.p, "shift": self.shift}


# ---------------------------------------------------------------------------
# Tail-form laws c / (phi(psi(k)))^2


def extend_psi(table: Sequence[int], k: int) -> int:
    """Schedule value at ``k``; beyond the table ``psi(k) = max(psi(k-1)+1, k^2+1)``."""
    N = len(table) - 1
    if k <= N:
        return int(table[k])
    # the recursion has this closed form because k^2 - k is increasing
    return max(int(table[N]) + k - N, k * k + 1)


def tail_normalizer(weight_fn: Callable[[int], float], eps: float, *, min_cutoff: int = 2,
                    batch: Callable[[int, int], np.ndarray] | None = None):
    """Certified normalizer ``c`` for ``k -> c / w(k)^2``.

    Requires ``w(k) > k^2`` for ``k >= min_cutoff``, which bounds the
    remainder beyond ``K`` by ``1 / (3 (K-1)^3)``.  Returns ``(c, c_error)``
    with ``|c - 1/sum| <= c_error``, ``|c * sum - 1| <= c_error`` and
    ``c_error <= eps``.
    """
    if not eps > 0:
        raise InvalidTolerance("eps must be positive")
    s0 = 1.0 / float(weight_fn(0)) ** 2
    target = eps * s0 * min(s0, 1.0)
    K = max(min_cutoff, 2, 1 + math.ceil((1.0 / (3.0 * target)) ** (1.0 / 3.0)))
    if batch is not None:
        w = batch(0, K)
        partial = math.fsum(1.0 / (w * w))
    else:
        partial = math.fsum(1.0 / float(weight_fn(k)) ** 2 for k in range(K))
    rem = 1.0 / (3.0 * (K - 1) ** 3)
    c = 1.0 / (partial + rem / 2)
    err = max((rem / 2) / (partial * (partial + rem / 2)), (rem / 2) / (partial + rem / 2))
    # terms are each rounded once (relative 2**-53) and fsum is exact
    err += 4 * 2.0**-53 * max(c, 1.0)
    if err > eps:
        raise InvalidTolerance(f"eps={eps:g} is below attainable precision {err:.3g}")
    return c, err


def _quad_tail(s: float, b: float, M: int) -> float:
    """``sum_{k >= M} (s k^2 + b)^-2`` by Euler-Maclaurin; needs ``M^2 >> b/s``."""
    r = b / s
    integral, i = 0.0, 0
    Mf = float(M)
    while True:
        term = (i + 1) * (-r) ** i / ((3 + 2 * i) * Mf ** (3 + 2 * i))
        integral += term
        if abs(term) < 1e-22 * abs(integral) or i > 60:
            break
        i += 1
    integral /= s * s
    g = s * Mf * Mf + b
    return integral + 0.5 / g**2 + 4 * s * Mf / g**3 / 12


def _lin_block(s: float, d: float, a: int, b: int) -> float:
    """``sum_{k=a}^{b-1} (s k + d)^-2`` by Euler-Maclaurin (large arguments only)."""
    ga, gb = s * a + d, s * b + d
    integral = (b - a) / (ga * gb)
    return integral + 0.5 * (1 / ga**2 - 1 / gb**2) + (2 * s / ga**3 - 2 * s / gb**3) / 12


@dataclass(frozen=True, repr=False)
class TailPmf(IntegerLaw):
    """Infinite-support law ``k -> c / phi(psi(k))^2``.

    ``psi_table`` lists ``psi(0..N)``; beyond it ``psi`` follows
    :func:`extend_psi`.  ``c`` carries a certified absolute error
    ``c_error``.
    """

    psi_table: tuple
    phi: SampleSizeMap
    c: float
    c_error: float

    def __post_init__(self):
        table = tuple(int(v) for v in self.psi_table)
        object.__setattr__(self, "psi_table", table)
        if not table or table[0] < 1:
            raise InvalidLaw("psi table must start with a positive integer")
        for k in range(1, len(table)):
            # psi(0) = psi(1) is the rank-1 convention; strict growth afterwards
            if table[k] < table[k - 1] or (k >= 2 and table[k] <= table[k - 1]):
                raise InvalidLaw("psi table must be increasing")
        if not self.c > 0 or not self.c_error >= 0:
            raise InvalidLaw("normalizer must be positive with nonnegative error")

    @classmethod
    def from_schedule(cls, psi_table: Sequence[int], phi: SampleSizeMap = IDENTITY,
                      eps: float = 1e-14) -> "TailPmf":
        draft = cls(tuple(psi_table), phi, 1.0, 0.0)
        c, err = tail_normalizer(draft.weight, eps, min_cutoff=len(draft.psi_table),
                                 batch=draft.weights)
        return cls(draft.psi_table, phi, c, err)

    @property
    def tv_error(self):
        # |c - c*| * sum_k w(k)^-2 with sum <= 1/(c - c_error)
        return self.c_error / max(self.c - self.c_error, 1e-300)

    def psi(self, k: int) -> int:
        return extend_psi(self.psi_table, int(k))

    def weight(self, k: int) -> int:
        return self.phi(self.psi(k))

    def weights(self, lo: int, hi: int) -> np.ndarray:
        """``w(k)`` for ``lo <= k < hi`` as floats."""
        N = len(self.psi_table) - 1
        k = np.arange(lo, hi, dtype=np.float64)
        psi = np.maximum(float(self.psi_table[N]) + k - N, k * k + 1.0)
        if lo <= N:
            inside = np.arange(lo, min(hi, N + 1))
            psi[: len(inside)] = np.asarray(self.psi_table, dtype=np.float64)[inside]
        return self.phi.apply_array(psi)

    def _direct(self, a: int, b: int) -> float:
        total = 0.0
        for lo in range(a, b, _DIRECT_LIMIT):
            w = self.weights(lo, min(b, lo + _DIRECT_LIMIT))
            total += math.fsum(1.0 / (w * w))
        return total

    @cached_property
    def _regions(self):
        N = len(self.psi_table) - 1
        top = self.psi_table[N]
        m0, slope, intercept = self.phi.affine()
        # first k > N where the quadratic branch of extend_psi takes over
        q0 = max(N + 1, math.isqrt(max(top - N, 0)))
        while q0 > N + 1 and (q0 - 1) ** 2 + 1 >= top + (q0 - 1) - N:
            q0 -= 1
        while q0 * q0 + 1 < top + q0 - N:
            q0 += 1
        a0 = max(N + 1, m0 - top + N)  # linear branch reaches the affine part of phi
        qa = max(q0, math.isqrt(max(m0 - 1, 0)) + 1)  # quadratic branch inside affine phi
        return N, top, slope, intercept, q0, a0, qa

    def tail_sum(self, K: int) -> float:
        """``sum_{k > K} w(k)^-2`` to near machine precision."""
        N, top, s, t, q0, a0, qa = self._regions
        a = max(int(K) + 1, 0)
        total = 0.0
        if a < q0:
            lin_lo = min(max(a, a0), q0)
            total += self._direct(a, lin_lo)
            if q0 - lin_lo > _DIRECT_LIMIT:
                total += _lin_block(s, s * (top - N) + t, lin_lo, q0)
            else:
                total += self._direct(lin_lo, q0)
            a = q0
        start = max(a, qa)
        total += self._direct(a, start)
        b = s + t  # w(k) = s k^2 + b on the affine quadratic branch
        M = max(start, _EM_START, math.ceil(10 * math.sqrt(abs(b) / s)))
        total += self._direct(start, M)
        return total + _quad_tail(float(s), float(b), M)

    def pmf(self, k):
        if k < 0:
            return 0.0
        return self.c / float(self.weight(k)) ** 2

    def sf(self, k):
        if k < 0:
            return 1.0
        return min(1.0, self.c * self.tail_sum(k))

    def cdf(self, k):
        if k < 0:
            return 0.0
        return min(1.0, self.c * self._direct(0, int(k) + 1))

    def cutoff(self, mass):
        if mass <= 0:
            raise InvalidTolerance("infinite support: mass must be positive")
        if self.sf(0) <= mass:
            return 0
        hi = 1
        while self.sf(hi) > mass:
            hi *= 2
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.sf(mid) > mass:
                lo = mid
            else:
                hi = mid
        return hi

    def atoms_upto(self, K):
        K = int(K)
        w = self.weights(0, K + 1)
        inv = 1.0 / (w * w)
        after = np.empty_like(inv)
        after[-1] = self.tail_sum(K)
        if K > 0:
            after[:-1] = np.cumsum(inv[:0:-1])[::-1] + after[-1]
        points = np.arange(K + 1, dtype=np.int64)
        return points, self.c * inv, np.minimum(self.c * after, 1.0)

    def to_json(self):
        phi = self.phi.to_json()
        out = {"kind": "tail", "psi_table": list(self.psi_table)}
        if phi == "identity":
            out["phi"] = "identity"
        else:
            out["phi"] = "table" if "table" in phi else "linear"
            out["phi_param"] = phi.get("table", phi.get("linear"))
        out["c"] = self.c
        out["c_error"] = self.c_error
        return out


def truncate(tail: TailPmf, n: int) -> FinitePmf:
    """Restrict ``tail`` to ``{0, ..., n-1}`` and renormalize."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return normalize_finite([1.0 / float(tail.weight(k)) ** 2 for k in range(n)])


# ---------------------------------------------------------------------------
# Mixtures for the total-variation demo


@dataclass(frozen=True, repr=False)
class MixturePmf(IntegerLaw):
    """``(1 - delta) * base + delta * tail`` with the tail beyond ``base``."""

    base: FinitePmf
    delta: float
    tail: GeometricPmf

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidLaw("delta must lie in (0, 1)")
        if self.tail.shift <= self.base.right_endpoint:
            raise InvalidLaw("tail must start beyond the base law")

    def pmf(self, k):
        return (1 - self.delta) * self.base.pmf(k) + self.delta * self.tail.pmf(k)

    def sf(self, k):
        return (1 - self.delta) * self.base.sf(k) + self.delta * self.tail.sf(k)

    def cdf(self, k):
        return (1 - self.delta) * self.base.cdf(k) + self.delta * self.tail.cdf(k)

    def cutoff(self, mass):
        return max(self.base.right_endpoint, self.tail.cutoff(mass / self.delta))

    def atoms_upto(self, K):
        bp, bprob, bsf = self.base.atoms_upto(K)
        tp, tprob, tsf = self.tail.atoms_upto(K)
        # base survival includes the whole tail from its last atom on
        return (np.concatenate([bp, tp]),
                np.concatenate([(1 - self.delta) * bprob, self.delta * tprob]),
                np.concatenate([(1 - self.delta) * bsf + self.delta, self.delta * tsf]))

    def product_tv_bound(self, n: int) -> float:
        """Union bound ``n * delta`` on TV between the n-fold products."""
        return n * self.delta

    def to_json(self):
        return {"kind": "mixture", "base": self.base.to_json(), "delta": self.delta,
                "tail": self.tail.to_json()}


def mix_with_tail(mu1: FinitePmf, delta: float) -> MixturePmf:
    """Move mass ``delta`` of ``mu1`` onto a Geometric(1/2) tail past its endpoint."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return MixturePmf(mu1, delta, GeometricPmf(0.5, mu1.right_endpoint + 1))


# ---------------------------------------------------------------------------
# Free functions


class Cdf:
    """Callable view ``k -> P(X <= k)`` of a law."""

    def __init__(self, law: IntegerLaw):
        self.law = law

    def __call__(self, k: int) -> float:
        return self.law.cdf(k)


def cdf(law: IntegerLaw, k: int) -> float:
    if k < 0:
        raise ValueError("k must be nonnegative")
    return law.cdf(k)


def sample(law: IntegerLaw, seed, count: int) -> np.ndarray:
    """``count`` i.i.d. draws; reproducible for an integer seed."""
    return law.sample(seed, count)


def tv_distance(a: IntegerLaw, b: IntegerLaw, tail_mass: float = 1e-12) -> float:
    """Total-variation distance ``1/2 sum_k |a(k) - b(k)|``.

    The sum runs to a cutoff ``K``; the remainder is accounted for through
    ``|P_a(X > K) - P_b(X > K)|``, which is exact when either law has no
    mass beyond ``K`` and otherwise off by at most ``tail_mass``.
    """
    ends = [law.right_endpoint for law in (a, b) if law.finite_support]
    if ends:
        K = max(ends) if len(ends) == 2 else ends[0]
    else:
        K = max(a.cutoff(tail_mass), b.cutoff(tail_mass))
    pa, qa, _ = a.atoms_upto(K)
    pb, qb, _ = b.atoms_upto(K)
    points = np.union1d(pa, pb)
    da = np.zeros(len(points))
    db = np.zeros(len(points))
    da[np.searchsorted(points, pa)] = qa
    db[np.searchsorted(points, pb)] = qb
    body = math.fsum(np.abs(da - db))
    tail = abs(a.sf(K) - b.sf(K))
    return min(1.0, 0.5 * (body + tail))


def law_from_json(obj: dict) -> IntegerLaw:
    kind = obj.get("kind")
    if kind == "finite":
        return FinitePmf(tuple(obj["support"]), tuple(obj["probs"]))
    if kind == "geometric":
        return GeometricPmf(float(obj["p"]), int(obj.get("shift", 0)))
    if kind == "tail":
        phi_kind = obj.get("phi", "identity")
        if phi_kind == "identity":
            phi = IDENTITY
        else:
            phi = SampleSizeMap.from_json({phi_kind: obj["phi_param"]})
        law = TailPmf(tuple(obj["psi_table"]), phi, float(obj["c"]), float(obj["c_error"]))
        return law
    if kind == "mixture":
        return MixturePmf(law_from_json(obj["base"]), float(obj["delta"]), law_from_json(obj["tail"]))
    raise InvalidLaw(f"unknown law kind {kind!r}")
