"""Tsirelson's equation on the torus T = R/Z.

Points are exact fractions or floats (never mixed).  Laws on T are either
finite lists of atoms or the image ``f(mu)`` of an integer law under the
injection ``f(k) = 1/(k+2)``.  The module simulates the uniform solution
``eta_0 = U, eta_{-n} = U - zeta_0 - ... - zeta_{-n+1}``, classifies laws
into the three cases (Dirac / coset of a finite cyclic subgroup / other),
and turns path events ``B_n`` into test functionals on integer samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .dist import IDENTITY, IntegerLaw, SampleSizeMap, law_from_json
from .errors import MixedModeError, NotClassifiable, TooLarge
from .teststat import ExpectationReport, TestFamily, hoeffding_half_width

INJECTION_TAG = "one_over_k_plus_2"
DEFAULT_GRID = 2**31


# ---------------------------------------------------------------------------
# Points


@dataclass(frozen=True)
class TorusPoint:
    """A point of R/Z, exact (reduced fraction in [0, 1)) or float."""

    value: Fraction | float

    def __post_init__(self):
        v = self.value
        if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
            object.__setattr__(self, "value", Fraction(v) % 1)
        elif isinstance(v, float):
            r = v % 1.0
            object.__setattr__(self, "value", 0.0 if r == 1.0 else r)
        else:
            raise TypeError(f"cannot build a torus point from {type(v).__name__}")

    @classmethod
    def of(cls, num: int, den: int) -> "TorusPoint":
        return cls(Fraction(num, den))

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)

    @property
    def num(self) -> int:
        return self.value.numerator

    @property
    def den(self) -> int:
        return self.value.denominator

    def _check(self, other):
        if not isinstance(other, TorusPoint):
            return NotImplemented
        if self.exact != other.exact:
            raise MixedModeError("cannot combine exact and floating torus points")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return TorusPoint(self.value + other.value)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return TorusPoint(self.value - other.value)

    def __neg__(self):
        return TorusPoint(-self.value)

    def __lt__(self, other):
        self._check(other)
        return self.value < other.value

    def __float__(self):
        return float(self.value)

    def __str__(self):
        return f"{self.num}/{self.den}" if self.exact else repr(self.value)

    def to_json(self):
        if self.exact:
            return {"num": self.num, "den": self.den}
        return {"value": self.value}


def inject_f(k: int) -> TorusPoint:
    """The injection ``k -> 1/(k+2)`` of N into Q/Z."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return TorusPoint(Fraction(1, int(k) + 2))


def _inject_float(ks: np.ndarray) -> np.ndarray:
    return 1.0 / (np.asarray(ks, dtype=np.float64) + 2.0)


# ---------------------------------------------------------------------------
# Laws


@dataclass(frozen=True)
class FiniteTorusLaw:
    atoms: tuple

    def __post_init__(self):
        atoms = tuple(sorted(((p if isinstance(p, TorusPoint) else TorusPoint(p)), float(w))
                             for p, w in self.atoms))
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("a torus law needs at least one atom")
        if len({a[0].exact for a in atoms}) > 1:
            raise MixedModeError("atoms mix exact and floating points")
        if len({a[0].value for a in atoms}) != len(atoms):
            raise ValueError("atoms must be distinct")
        if not all(w > 0 for _, w in atoms) or abs(math.fsum(w for _, w in atoms) - 1.0) > 1e-12:
            raise ValueError("atom probabilities must be positive and sum to 1")

    finite_support = True

    @classmethod
    def dirac(cls, point) -> "FiniteTorusLaw":
        return cls(((TorusPoint(point) if not isinstance(point, TorusPoint) else point, 1.0),))

    @property
    def exact(self) -> bool:
        return self.atoms[0][0].exact

    @property
    def support(self):
        return [p for p, _ in self.atoms]

    def _index_sampler(self, rng, count):
        probs = np.asarray([w for _, w in self.atoms])
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(count), side="right")
        return np.minimum(idx, len(probs) - 1)

    def sample_points(self, rng, count):
        pts = self.support
        return [pts[i] for i in self._index_sampler(rng, count)]

    def sample_values(self, rng, count) -> np.ndarray:
        vals = np.asarray([float(p) for p in self.support])
        return vals[self._index_sampler(rng, count)]

    def to_json(self):
        if not self.exact:
            return {"kind": "finite", "atoms": [{"value": float(p), "prob": w} for p, w in self.atoms]}
        return {"kind": "finite", "atoms": [{"num": p.num, "den": p.den, "prob": w} for p, w in self.atoms]}


@dataclass(frozen=True)
class PushforwardLaw:
    """Law of ``f(X)`` with ``X ~ base``; ``f`` is the 1/(k+2) injection."""

    base: IntegerLaw
    injection: str = INJECTION_TAG

    def __post_init__(self):
        if self.injection != INJECTION_TAG:
            raise ValueError(f"unsupported injection {self.injection!r}")

    exact = True

    @property
    def finite_support(self) -> bool:
        return self.base.finite_support

    def materialize(self) -> FiniteTorusLaw:
        if not self.base.finite_support:
            raise ValueError("only finite-support bases can be listed")
        return FiniteTorusLaw(tuple((inject_f(k), p) for k, p in zip(self.base.support, self.base.probs)))

    def sample_points(self, rng, count):
        return [inject_f(int(k)) for k in self.base.sample(rng, count)]

    def sample_values(self, rng, count) -> np.ndarray:
        return _inject_float(self.base.sample(rng, count))

    def to_json(self):
        return {"kind": "pushforward", "base": self.base.to_json(), "injection": self.injection}


def pushforward(mu: IntegerLaw, f: Callable[[int], TorusPoint] = inject_f):
    """Image law ``f(mu)``; finite for finite ``mu``, tagged otherwise."""
    if f is not inject_f:
        raise ValueError("only the 1/(k+2) injection is supported")
    law = PushforwardLaw(mu)
    return law.materialize() if mu.finite_support else law


def torus_law_from_json(obj):
    kind = obj.get("kind")
    if kind == "finite":
        atoms = []
        for a in obj["atoms"]:
            point = TorusPoint(Fraction(int(a["num"]), int(a["den"]))) if "num" in a else TorusPoint(float(a["value"]))
            atoms.append((point, float(a["prob"])))
        return FiniteTorusLaw(tuple(atoms))
    if kind == "pushforward":
        return PushforwardLaw(law_from_json(obj["base"]), obj.get("injection", INJECTION_TAG))
    raise ValueError(f"unknown torus law kind {kind!r}")


# ---------------------------------------------------------------------------
# Classification


@dataclass(frozen=True)
class CaseLabel:
    case: int
    p: int | None = None
    x: TorusPoint | None = None

    def __str__(self):
        if self.case == 2:
            return f"Case2(p={self.p}, x={self.x})"
        return f"Case{self.case}"

    def to_json(self):
        out = {"case": f"Case{self.case}"}
        if self.case == 2:
            out["p"] = self.p
            out["x"] = self.x.to_json()
        return out


def classify(nu) -> CaseLabel:
    """Case 1 (Dirac), Case 2(p, x) (coset ``x + {k/p}``, minimal ``p``) or Case 3.

    Needs exact atoms; floating laws raise :class:`NotClassifiable`.
    """
    if isinstance(nu, PushforwardLaw):
        if not nu.finite_support:
            return CaseLabel(3)
        nu = nu.materialize()
    if not isinstance(nu, FiniteTorusLaw):
        raise TypeError(f"cannot classify {type(nu).__name__}")
    if not nu.exact:
        raise NotClassifiable("classification needs exact rational atoms")
    support = nu.support
    if len(support) == 1:
        return CaseLabel(1)
    x = support[0]
    p = 1
    for s in support[1:]:
        p = math.lcm(p, (s - x).den)
    return CaseLabel(2, p, x)


# ---------------------------------------------------------------------------
# Simulation


def simulate_uniform_solution(nu, depth: int, seed=0, mode: str = "float",
                              grid_den: int = DEFAULT_GRID) -> list:
    """One path ``(eta_0, eta_{-1}, ..., eta_{-depth})`` of the uniform solution.

    ``mode="float"`` draws ``U`` as a double; ``mode="grid"`` draws it
    uniformly from ``{j / grid_den}`` so the whole path is exact.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if mode == "grid":
        if not nu.exact:
            raise MixedModeError("grid mode needs an exact law")
        u = TorusPoint(Fraction(int(rng.integers(grid_den)), grid_den))
        steps = nu.sample_points(rng, depth)
    elif mode == "float":
        u = TorusPoint(float(rng.random()))
        steps = [TorusPoint(float(z)) for z in nu.sample_values(rng, depth)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    path = [u]
    for z in steps:
        path.append(path[-1] - z)
    return path


def simulate_paths(nu, depth: int, count: int, seed=0) -> np.ndarray:
    """``count`` float paths as rows ``(eta_0, ..., eta_{-depth})``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(count)
    steps = nu.sample_values(rng, count * depth).reshape(count, depth)
    out = np.empty((count, depth + 1))
    out[:, 0] = u
    out[:, 1:] = u[:, None] - np.cumsum(steps, axis=1)
    np.mod(out, 1.0, out=out)
    out[out >= 1.0] = 0.0
    return out


def path_increments(path: Sequence[TorusPoint]):
    """``xi_k = eta_k - eta_{k-1}`` and ``rho_k = xi_k - xi_{k-1}`` along a path.

    ``path[i]`` is ``eta_{-i}``; both lists run from time 0 backwards.
    """
    if len(path) < 2:
        raise ValueError("need at least two points for increments")
    xi = [path[i] - path[i + 1] for i in range(len(path) - 1)]
    rho = [xi[i] - xi[i + 1] for i in range(len(xi) - 1)]
    return xi, rho


# ---------------------------------------------------------------------------
# Arcs and path events


@dataclass(frozen=True)
class Arc:
    """Closed-open arc ``[lo, hi)``; wraps through 0 when ``lo > hi``.

    ``lo == hi`` is empty, ``Arc(0, 1)`` is the whole torus.
    """

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if not (0 <= lo <= 1 and 0 <= hi <= 1):
            raise ValueError("arc endpoints must lie in [0, 1]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def full(cls) -> "Arc":
        return cls(Fraction(0), Fraction(1))

    @property
    def is_full(self) -> bool:
        return self.lo == 0 and self.hi == 1

    def intervals(self):
        """Disjoint ``[a, b)`` pieces inside ``[0, 1)``."""
        if self.lo < self.hi:
            return [(self.lo, self.hi)]
        if self.lo > self.hi:
            return [(Fraction(0), self.hi), (self.lo, Fraction(1))] if self.hi > 0 else [(self.lo, Fraction(1))]
        return []

    def contains(self, x) -> bool:
        if self.lo <= self.hi:
            return self.lo <= x < self.hi
        return x >= self.lo or x < self.hi

    def contains_array(self, x: np.ndarray) -> np.ndarray:
        lo, hi = float(self.lo), float(self.hi)
        if self.lo <= self.hi:
            return (x >= lo) & (x < hi)
        return (x >= lo) | (x < hi)

    def to_json(self):
        return [self.lo.numerator, self.lo.denominator, self.hi.numerator, self.hi.denominator]

    @classmethod
    def from_json(cls, obj):
        a, b, c, d = (int(v) for v in obj)
        return cls(Fraction(a, b), Fraction(c, d))


@dataclass(frozen=True)
class PathEvent:
    """A subset ``B`` of ``T^dim``.

    Either a finite union of arc products (``products``; a product may list
    fewer arcs than ``dim``, leaving later coordinates free), or an opaque
    ``predicate`` on tuples of points.
    """

    dim: int
    products: tuple | None = None
    predicate: Callable | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if (self.products is None) == (self.predicate is None):
            raise ValueError("give exactly one of products or predicate")
        if self.products is not None:
            prods = tuple(tuple(a if isinstance(a, Arc) else Arc(*a) for a in p) for p in self.products)
            if any(len(p) > self.dim for p in prods):
                raise ValueError("a product has more arcs than coordinates")
            object.__setattr__(self, "products", prods)

    @classmethod
    def full(cls, dim):
        return cls(dim, ((),))

    @classmethod
    def empty(cls, dim):
        return cls(dim, ())

    @property
    def has_arcs(self) -> bool:
        return self.products is not None

    def contains(self, points: Sequence) -> bool:
        if len(points) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates")
        if self.predicate is not None:
            return bool(self.predicate(points))
        vals = [p.value if isinstance(p, TorusPoint) else p for p in points]
        return any(all(arc.contains(v) for arc, v in zip(prod, vals)) for prod in self.products)

    def contains_array(self, etas: np.ndarray) -> np.ndarray:
        if self.predicate is not None:
            return np.fromiter((bool(self.predicate([TorusPoint(float(v)) for v in row])) for row in etas),
                               dtype=bool, count=len(etas))
        hit = np.zeros(len(etas), dtype=bool)
        for prod in self.products:
            ok = np.ones(len(etas), dtype=bool)
            for j, arc in enumerate(prod):
                if not arc.is_full:
                    ok &= arc.contains_array(etas[:, j])
            hit |= ok
        return hit

    def to_json(self):
        if self.products is None:
            raise ValueError("predicate events have no serial form")
        return {"arcs": [[a.to_json() for a in prod] for prod in self.products]}

    @classmethod
    def from_json(cls, obj, dim):
        return cls(dim, tuple(tuple(Arc.from_json(a) for a in prod) for prod in obj["arcs"]))


@dataclass(frozen=True)
class EventFamily:
    """Events ``B_n`` in ``T^(phi(n)+1)``."""

    phi: SampleSizeMap
    make: Callable[[int], PathEvent]

    def __call__(self, n: int) -> PathEvent:
        ev = self.make(n)
        if ev.dim != self.phi(n) + 1:
            raise ValueError(f"event at rank {n} has dim {ev.dim}, expected {self.phi(n) + 1}")
        return ev

    @classmethod
    def of_arcs(cls, products, phi: SampleSizeMap = IDENTITY) -> "EventFamily":
        """The same leading arc constraints at every rank."""
        products = tuple(tuple(a if isinstance(a, Arc) else Arc(*a) for a in p) for p in products)
        return cls(phi, lambda n: PathEvent(phi(n) + 1, products))


# ---------------------------------------------------------------------------
# Event -> test reduction


def _shifts(sample, exact=True):
    """Partial sums ``0, f(X_1), f(X_1)+f(X_2), ...`` reduced mod 1."""
    acc = Fraction(0) if exact else 0.0
    out = [acc]
    for x in sample:
        acc = (acc + (Fraction(1, int(x) + 2) if exact else 1.0 / (x + 2.0))) % 1
        out.append(acc)
    return out


def integrate_over_u(event: PathEvent, shifts: Sequence[Fraction]) -> Fraction:
    """Lebesgue measure of ``{u : (u - s_0, ..., u - s_d) in B}``.

    The integrand is piecewise constant between the shifted arc endpoints,
    so it is evaluated once per piece at the midpoint.
    """
    if not event.has_arcs:
        raise ValueError("exact integration needs an arc description")
    cuts = {Fraction(0), Fraction(1)}
    for prod in event.products:
        for arc, s in zip(prod, shifts):
            if not arc.is_full:
                cuts.add((arc.lo + s) % 1)
                cuts.add((arc.hi + s) % 1)
    cuts = sorted(cuts)
    total = Fraction(0)
    for a, b in zip(cuts, cuts[1:]):
        if a == b:
            continue
        mid = (a + b) / 2
        point = [(mid - s) % 1 for s in shifts]
        if event.contains(point):
            total += b - a
    return total


def reduce_event(B: EventFamily, f: Callable = inject_f, mode: str = "exact", *,
                 u_samples: int = 4096, seed: int = 0) -> TestFamily:
    """Test family ``A_n(X) = int_0^1 1_{B_n}(u, u - f(X_1), ...) du``.

    ``mode="exact"`` integrates arc events exactly; ``mode="monte_carlo"``
    averages over a fixed seeded set of ``u`` values (the same for every
    sample, so ``A_n`` stays a pure function).
    """
    if f is not inject_f:
        raise ValueError("only the 1/(k+2) injection is supported")
    us = np.random.default_rng(seed).random(u_samples)

    def exact_value(n, sample):
        ev = B(n)
        if len(sample) != ev.dim - 1:
            raise ValueError(f"expected a sample of length {ev.dim - 1}")
        return integrate_over_u(ev, _shifts(sample))

    def mc_value(n, sample):
        ev = B(n)
        if len(sample) != ev.dim - 1:
            raise ValueError(f"expected a sample of length {ev.dim - 1}")
        s = np.asarray(_shifts(sample, exact=False))
        etas = np.mod(us[:, None] - s[None, :], 1.0)
        etas[etas >= 1.0] = 0.0
        return float(np.mean(ev.contains_array(etas)))

    def evaluate(n, sample):
        if mode == "exact" and B(n).has_arcs:
            return float(exact_value(n, sample))
        return mc_value(n, sample)

    if mode not in ("exact", "monte_carlo"):
        raise ValueError(f"unknown mode {mode!r}")
    fam = TestFamily(f"reduced_event[{mode}]", B.phi, evaluate,
                     params={"mode": mode, "u_samples": u_samples, "seed": seed})
    object.__setattr__(fam, "exact_value", exact_value)
    object.__setattr__(fam, "u_half_width", hoeffding_half_width(u_samples, 0.99))
    return fam


# ---------------------------------------------------------------------------
# Path-event probabilities under the uniform solution


def _interval_list(arc: Arc, shift: Fraction):
    """Pieces of ``arc + shift`` inside ``[0, 1)``."""
    out = []
    for a, b in arc.intervals():
        a2, b2 = a + shift, b + shift
        k = math.floor(a2)
        a2, b2 = a2 - k, b2 - k
        if b2 <= 1:
            out.append((a2, b2))
        else:
            out.append((a2, Fraction(1)))
            out.append((Fraction(0), b2 - 1))
    return sorted(out)


def _intersect(xs, ys):
    out, i, j = [], 0, 0
    while i < len(xs) and j < len(ys):
        a, b = max(xs[i][0], ys[j][0]), min(xs[i][1], ys[j][1])
        if a < b:
            out.append((a, b))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _grid_count(intervals, Q: int) -> int:
    return sum(math.ceil(b * Q) - math.ceil(a * Q) for a, b in intervals)


def _grid_probability(law: FiniteTorusLaw, event: PathEvent, grid_den: int, align: bool,
                      limit: int = 10**6):
    d = event.dim - 1
    atoms = law.atoms
    if len(atoms) ** d > limit:
        raise TooLarge(f"{len(atoms)}^{d} increment sequences exceed {limit}")
    if len(event.products) > 16:
        raise TooLarge("inclusion-exclusion over more than 16 products")
    Q = grid_den
    if align:
        for p, _ in atoms:
            Q = math.lcm(Q, p.den)
        for prod in event.products:
            for arc in prod:
                Q = math.lcm(Q, arc.lo.denominator, arc.hi.denominator)
    total = Fraction(0)
    full = [(Fraction(0), Fraction(1))]
    for steps in itertools.product(range(len(atoms)), repeat=d):
        weight = math.prod(atoms[i][1] for i in steps)
        shift, shifts = Fraction(0), [Fraction(0)]
        for i in steps:
            shift = (shift + atoms[i][0].value) % 1
            shifts.append(shift)
        # u-sets of each product: u in arc_j + s_j for every constrained j
        sets = []
        for prod in event.products:
            cur = full
            for arc, s in zip(prod, shifts):
                if not arc.is_full:
                    cur = _intersect(cur, _interval_list(arc, s))
            sets.append(cur)
        count = 0
        for r in range(1, len(sets) + 1):
            for combo in itertools.combinations(sets, r):
                cur = combo[0]
                for other in combo[1:]:
                    cur = _intersect(cur, other)
                count += (-1) ** (r + 1) * _grid_count(cur, Q)
        total += Fraction(count, Q) * Fraction(weight)
    return float(total), Q


def event_probability(nu, B, n: int | None = None, evaluator: str = "monte_carlo", *,
                      paths: int = 100_000, conf: float = 0.99, seed: int = 0,
                      grid_den: int = DEFAULT_GRID, align: bool = True) -> ExpectationReport:
    """``P*_nu[(eta_0, ..., eta_{-phi(n)}) in B_n]`` under the uniform solution.

    ``evaluator="monte_carlo"`` simulates ``paths`` float paths.
    ``evaluator="grid"`` takes ``U`` uniform on ``{j/Q}`` and counts exactly,
    enumerating every increment sequence of a finite exact law.  With
    ``align`` the grid is refined to a multiple of every denominator
    involved, and the count then equals the continuous probability.
    """
    event = B(n) if isinstance(B, EventFamily) else B
    if evaluator == "monte_carlo":
        etas = simulate_paths(nu, event.dim - 1, paths, seed)
        hits = event.contains_array(etas)
        return ExpectationReport(float(np.mean(hits)), "monte_carlo",
                                 hoeffding_half_width(paths, conf), conf, paths)
    if evaluator == "grid":
        law = nu.materialize() if isinstance(nu, PushforwardLaw) else nu
        if not isinstance(law, FiniteTorusLaw) or not law.exact:
            raise ValueError("grid evaluation needs a finite exact law")
        if not event.has_arcs:
            raise ValueError("grid evaluation needs an arc event")
        value, _ = _grid_probability(law, event, grid_den, align)
        if align:
            return ExpectationReport(value, "exact", evaluations=len(law.atoms) ** (event.dim - 1))
        n_cuts = 2 * sum(len(p) for p in event.products)
        return ExpectationReport(value, "truncated", min(1.0, n_cuts / grid_den), 1.0,
                                 len(law.atoms) ** (event.dim - 1))
    raise ValueError(f"unknown evaluator {evaluator!r}")
