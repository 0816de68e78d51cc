"""Filters, ultrafilters and measures on a finite universe ``{1, ..., n}``.

Every ultrafilter on a finite set is principal, so this module models only
the lattice combinatorics of intersections of ultrafilters: uniqueness of
finite representations, the decomposition ``D = A ⊔ B``, the partition
recurrence, traces and inavoidability.  The arguments involved never use
freeness, so they are exercised faithfully here.  Statements that genuinely
need free ultrafilters (countable minimal collections, continuum-sized
representations) have no finite counterpart and are not modelled.

Subsets are ``n``-bit masks: bit ``i - 1`` stands for the element ``i``.
Functions that take a subset accept either a mask (``int``) or an iterable
of elements.  Families of subsets are boolean tables indexed by mask.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, NamedTuple, Optional, Sequence, Union as TUnion

import numpy as np

__all__ = [
    "MAX_N", "SWEEP_MAX_N", "Family", "FiniteFilter", "PrincipalUltrafilter", "FiniteMeasure",
    "NoWitness", "EmptyTrace", "UniverseMismatch",
    "to_mask", "elements", "intersect_collection", "union_element_check",
    "ultrafilter_membership_lemma_check", "representation_uniqueness_check",
    "is_minimal", "decompose_by_lemma", "Decomposition", "partition_for_collection",
    "PartitionResult", "trace_filter", "inavoidability_check", "Inavoidability",
    "grill_and_ideal", "measure_generated_filter", "convex_combination",
    "convex_combination_identity", "poorness_bound_check",
    "minimal_family_from_disjoint_sets", "MinimalFamily", "check_filter_axioms",
    "SweepReport", "sweep", "THEOREMS",
]

MAX_N = 20
SWEEP_MAX_N = 5
MEASURE_TOL = Fraction(1, 10 ** 12)


class NoWitness(ValueError):
    """``F_0`` is contained in ``U``, so no ``K`` in ``F_0 \\ U`` exists."""


class EmptyTrace(ValueError):
    """The set does not meet every member of the filter."""


class UniverseMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# subsets and families

def _check_n(n: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 2 <= n <= MAX_N:
        raise ValueError(f"universe size must be an integer in [2, {MAX_N}], got {n!r}")
    return int(n)


def _full(n: int) -> int:
    return (1 << n) - 1


def to_mask(subset, n: int) -> int:
    """A mask for ``subset`` (a mask already, or an iterable of elements of ``{1..n}``)."""
    if isinstance(subset, (int, np.integer)) and not isinstance(subset, bool):
        m = int(subset)
        if m < 0 or m > _full(n):
            raise ValueError(f"mask {m} is not a subset of {{1..{n}}}")
        return m
    m = 0
    for e in subset:
        e = int(e)
        if not 1 <= e <= n:
            raise ValueError(f"element {e} is outside {{1..{n}}}")
        m |= 1 << (e - 1)
    return m


def elements(mask: int) -> tuple:
    """Sorted elements of a mask."""
    out, i = [], 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


_MASKS: dict = {}


def _all_masks(n: int) -> np.ndarray:
    if n not in _MASKS:
        _MASKS[n] = np.arange(1 << n, dtype=np.int64)
    return _MASKS[n]


def _minimal_elements(n: int, table: np.ndarray) -> tuple:
    """Masks in the family none of whose one-element-smaller subsets is in it."""
    masks = _all_masks(n)
    minimal = table.copy()
    for i in range(n):
        bit = 1 << i
        has = (masks & bit) != 0
        sub_in = np.zeros_like(table)
        sub_in[has] = table[masks[has] ^ bit]
        minimal &= ~sub_in
    return tuple(int(x) for x in np.flatnonzero(minimal))


@dataclass(frozen=True, eq=False)
class Family:
    """An arbitrary family of subsets of ``{1..n}``, stored as a membership table."""
    n: int
    table: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        t = np.asarray(self.table, dtype=bool)
        if t.shape != (1 << self.n,):
            raise ValueError("table must have one entry per subset")
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    @classmethod
    def of(cls, n: int, subsets: Iterable) -> "Family":
        t = np.zeros(1 << n, dtype=bool)
        for s in subsets:
            t[to_mask(s, n)] = True
        return cls(n, t)

    def __contains__(self, subset) -> bool:
        return bool(self.table[to_mask(subset, self.n)])

    def __len__(self):
        return int(np.count_nonzero(self.table))

    def __eq__(self, other):
        return isinstance(other, Family) and self.n == other.n and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.n, self.table.tobytes()))

    def masks(self) -> tuple:
        return tuple(int(x) for x in np.flatnonzero(self.table))

    def members(self) -> list:
        return [elements(m) for m in self.masks()]

    def issubset(self, other: "Family") -> bool:
        return bool(np.all(~self.table | other.table))


def check_filter_axioms(family: Family, ground=None) -> list:
    """Violations of the filter axioms on ``ground`` (default the whole universe).

    The family must be non-empty, avoid the empty set, contain only subsets
    of ``ground``, and be closed under supersets (inside ``ground``) and
    pairwise intersections.  An empty list means the family is a filter.
    """
    n = family.n
    g = _full(n) if ground is None else to_mask(ground, n)
    t = family.table
    masks = _all_masks(n)
    out = []
    if not t.any():
        out.append("family is empty")
        return out
    if t[0]:
        out.append("contains the empty set")
    outside = t & ((masks & ~g) != 0)
    if outside.any():
        out.append(f"member {elements(int(np.flatnonzero(outside)[0]))} is not inside the ground set")
    for i in range(n):
        bit = 1 << i
        if not g & bit:
            continue
        lacking = t & ((masks & bit) == 0)
        src = masks[lacking]
        bad = ~t[src | bit]
        if bad.any():
            m = int(src[bad][0])
            out.append(f"superset {elements(m | bit)} of member {elements(m)} is missing")
            break
    # with superset closure, intersections of minimal members decide the rest
    mins = _minimal_elements(n, t)
    for a, b in itertools.combinations(mins, 2):
        if not t[a & b]:
            out.append(f"intersection {elements(a & b)} of {elements(a)} and {elements(b)} is missing")
            break
    return out


# ---------------------------------------------------------------------------
# filters, ultrafilters, measures

@dataclass(frozen=True)
class FiniteFilter:
    """Upward closure (inside ``ground``) of an antichain ``base``.

    A filter on a finite set has a single minimal member, its kernel, so a
    valid ``base`` always reduces to one non-empty set.  ``ground`` is the
    universe the filter lives on; it is ``{1..n}`` except for traces.
    """
    n: int
    base: tuple
    ground: Optional[int] = None

    def __post_init__(self):
        n = _check_n(self.n)
        g = _full(n) if self.ground is None else to_mask(self.ground, n)
        if g == 0:
            raise ValueError("ground set must be non-empty")
        base = sorted({to_mask(b, n) for b in self.base})
        if not base:
            raise ValueError("a filter needs a non-empty base")
        if any(b & ~g for b in base):
            raise ValueError("base sets must lie inside the ground set")
        base = tuple(b for b in base if not any(c != b and c & b == c for c in base))
        object.__setattr__(self, "ground", g)
        object.__setattr__(self, "base", base)
        violations = check_filter_axioms(self.family(), g)
        if violations:
            raise ValueError("not a filter: " + "; ".join(violations))

    @classmethod
    def from_family(cls, family: Family, ground=None) -> "FiniteFilter":
        return cls(family.n, _minimal_elements(family.n, family.table), ground)

    @classmethod
    def principal(cls, n: int, kernel) -> "FiniteFilter":
        return cls(n, (to_mask(kernel, n),))

    @classmethod
    def trivial(cls, n: int) -> "FiniteFilter":
        """The filter ``{Ω}``."""
        return cls(n, (_full(n),))

    @property
    def kernel(self) -> int:
        return reduce(lambda a, b: a & b, self.base)

    def table(self) -> np.ndarray:
        masks = _all_masks(self.n)
        t = np.zeros(1 << self.n, dtype=bool)
        for b in self.base:
            t |= (masks & b) == b
        t &= (masks & ~self.ground) == 0
        return t

    def family(self) -> Family:
        return Family(self.n, self.table())

    def __contains__(self, subset) -> bool:
        m = to_mask(subset, self.n)
        return m & ~self.ground == 0 and any(m & b == b for b in self.base)

    def as_filter(self) -> "FiniteFilter":
        return self

    def describe(self) -> dict:
        return {"n": self.n, "ground": list(elements(self.ground)),
                "base": [list(elements(b)) for b in self.base]}


@dataclass(frozen=True)
class PrincipalUltrafilter:
    """``{A : point in A}`` on ``{1..n}``."""
    n: int
    point: int

    def __post_init__(self):
        _check_n(self.n)
        if not 1 <= self.point <= self.n:
            raise ValueError(f"point {self.point} is outside {{1..{self.n}}}")

    def as_filter(self) -> FiniteFilter:
        return FiniteFilter(self.n, (1 << (self.point - 1),))

    def table(self) -> np.ndarray:
        return (_all_masks(self.n) & (1 << (self.point - 1))) != 0

    def family(self) -> Family:
        return Family(self.n, self.table())

    def __contains__(self, subset) -> bool:
        return bool(to_mask(subset, self.n) >> (self.point - 1) & 1)

    def __str__(self):
        return f"U@{self.point}"


FilterLike = TUnion[FiniteFilter, PrincipalUltrafilter]


@dataclass(frozen=True)
class FiniteMeasure:
    """A probability on ``{1..n}`` given by point weights; arithmetic is exact."""
    n: int
    weights: tuple

    def __post_init__(self):
        _check_n(self.n)
        w = tuple(Fraction(x) for x in self.weights)
        if len(w) != self.n:
            raise ValueError(f"need {self.n} weights, got {len(w)}")
        if any(x < 0 for x in w):
            raise ValueError("weights must be non-negative")
        if abs(sum(w) - 1) > MEASURE_TOL:
            raise ValueError(f"weights sum to {float(sum(w))}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, n: int, point: int) -> "FiniteMeasure":
        return cls(n, tuple(1 if i == point else 0 for i in range(1, n + 1)))

    @classmethod
    def uniform(cls, n: int) -> "FiniteMeasure":
        return cls(n, (Fraction(1, n),) * n)

    def __call__(self, subset) -> Fraction:
        m = to_mask(subset, self.n)
        return sum((w for i, w in enumerate(self.weights) if m >> i & 1), Fraction(0))

    @property
    def support(self) -> int:
        return sum(1 << i for i, w in enumerate(self.weights) if w > 0)


def _same_universe(items) -> int:
    ns = {x.n for x in items}
    if len(ns) != 1:
        raise UniverseMismatch(f"objects live on different universes: sizes {sorted(ns)}")
    return ns.pop()


def _intersect_tables(ws) -> np.ndarray:
    return reduce(np.logical_and, (w.table() for w in ws))


# ---------------------------------------------------------------------------
# intersections and representations

def intersect_collection(w: Sequence[FilterLike]) -> FiniteFilter:
    """The family intersection ``∩W``, re-based to its minimal members."""
    w = list(w)
    if not w:
        raise ValueError("need at least one filter")
    n = _same_universe(w)
    filters = [x.as_filter() for x in w]
    if len(set(filters)) != len(filters):
        raise ValueError("filters in a collection must be pairwise distinct")
    grounds = {f.ground for f in filters}
    if len(grounds) != 1:
        raise UniverseMismatch("filters live on different ground sets")
    return FiniteFilter.from_family(Family(n, _intersect_tables(filters)), grounds.pop())


def union_element_check(w: Sequence[FilterLike], picks: Sequence) -> bool:
    """Whether the union of one member from each filter lies in ``∩W``."""
    w = list(w)
    if len(picks) != len(w):
        raise ValueError("need exactly one pick per filter")
    n = _same_universe(w)
    masks = [to_mask(p, n) for p in picks]
    for f, m in zip(w, masks):
        if m not in f:
            raise ValueError(f"pick {elements(m)} is not a member of its filter")
    union = reduce(lambda a, b: a | b, masks)
    return union in intersect_collection(w)


def ultrafilter_membership_lemma_check(w: Sequence[PrincipalUltrafilter], u: PrincipalUltrafilter) -> bool:
    """The implication ``∩W ⊆ u  ⇒  u ∈ W``, decided by enumeration."""
    w = list(w)
    _same_universe(w + [u])
    inter = _intersect_tables(w)
    contained = bool(np.all(~inter | u.table()))
    return (not contained) or u in w


@dataclass(frozen=True)
class UniquenessReport:
    universe_n: int
    max_size: int
    collections: int
    pairs_checked: int
    violations: tuple

    def to_dict(self):
        return {"universe_n": self.universe_n, "max_size": self.max_size,
                "collections": self.collections, "pairs_checked": self.pairs_checked,
                "violations": [list(map(list, v)) for v in self.violations]}


def _collections(n: int, max_size: int, min_size: int = 1):
    for k in range(min_size, max_size + 1):
        yield from itertools.combinations(range(1, n + 1), k)


def representation_uniqueness_check(n: int, max_size: int) -> UniquenessReport:
    """All pairs ``W1 != W2`` of collections of principal ultrafilters with ``|W| <= max_size``
    are checked to have different intersections."""
    _check_n(n)
    if not 1 <= max_size <= n:
        raise ValueError("max_size must lie in [1, n]")
    seen = {}
    pairs = 0
    violations = []
    for pts in _collections(n, max_size):
        t = _intersect_tables([PrincipalUltrafilter(n, p) for p in pts])
        key = t.tobytes()
        # every earlier collection is compared with this one
        pairs += sum(len(v) for v in seen.values())
        for other in seen.get(key, ()):
            violations.append((other, pts))
        seen.setdefault(key, []).append(pts)
    total = sum(len(v) for v in seen.values())
    return UniquenessReport(n, max_size, total, pairs, tuple(violations))


def is_minimal(w: Sequence[FilterLike]) -> bool:
    """Whether dropping any single member strictly enlarges the intersection."""
    w = list(w)
    if len(w) < 2:
        raise ValueError("minimality needs at least two filters")
    _same_universe(w)
    filters = [x.as_filter() for x in w]
    if len(set(filters)) != len(filters):
        raise ValueError("filters in a collection must be pairwise distinct")
    full = _intersect_tables(filters)
    for i in range(len(filters)):
        rest = _intersect_tables(filters[:i] + filters[i + 1:])
        if np.array_equal(rest, full):
            return False
    return True


# ---------------------------------------------------------------------------
# decomposition, partition, traces

def trace_filter(f: FilterLike, a) -> FiniteFilter:
    """``{a ∩ b : b in f}`` as a filter on the ground set ``a``."""
    f = f.as_filter()
    am = to_mask(a, f.n)
    if am & ~f.ground:
        raise ValueError("the trace set must lie inside the filter's ground set")
    # a meets every member iff it meets every minimal member
    if am == 0 or any(am & b == 0 for b in f.base):
        raise EmptyTrace(f"{elements(am)} misses a member of the filter")
    return FiniteFilter(f.n, tuple(am & b for b in f.base), am)


class Decomposition(NamedTuple):
    a: int
    b: int
    witness: int
    trace_matches: bool


def decompose_by_lemma(d, f0: FilterLike, u: PrincipalUltrafilter) -> Decomposition:
    """Split ``d`` in ``F0 ∩ U`` as ``a ⊔ b`` with ``a`` in ``U`` and ``b`` in ``F0``.

    ``K`` is the lexicographically least member of ``F0 \\ U`` (comparing
    sorted element tuples), ``b = K ∩ d`` and ``a = d \\ K``.  The result
    also reports whether the trace of ``F0 ∩ U`` on ``a`` equals ``U|_a``.
    """
    f0 = f0.as_filter()
    n = _same_universe([f0, u])
    dm = to_mask(d, n)
    ut = u.table()
    cand = f0.table() & ~ut
    if not cand.any():
        raise NoWitness("F0 is contained in U")
    if dm not in f0 or dm not in u:
        raise ValueError(f"{elements(dm)} is not a member of F0 ∩ U")
    k = min((int(m) for m in np.flatnonzero(cand)), key=elements)
    b = k & dm
    a = dm & ~k
    f = FiniteFilter.from_family(Family(n, f0.table() & ut))
    matches = trace_filter(f, a) == trace_filter(u, a)
    return Decomposition(a, b, k, matches)


@dataclass(frozen=True)
class PartitionResult:
    parts: tuple
    leftover_absorbed: int
    item2_verified: bool
    subsets_checked: int

    def to_dict(self):
        return {"parts": [list(elements(p)) for p in self.parts],
                "leftover_absorbed": list(elements(self.leftover_absorbed)),
                "item2_verified": self.item2_verified, "subsets_checked": self.subsets_checked}


def partition_for_collection(w: Sequence[PrincipalUltrafilter], verify_upto: int = 6) -> PartitionResult:
    """Disjoint ``N_1, ..., N_k`` covering the universe with ``N_j`` in ``U_j``.

    Built by the recurrence ``B_{j-1} = N_j ⊔ B_j`` with ``B_0 = Ω``, each
    step using ``decompose_by_lemma`` against ``F_j = ∩_{i>j} U_i``; the last
    part is ``B_{k-1}`` and any uncovered rest is added to ``N_1``.  For
    ``n <= verify_upto`` every subset ``A`` is checked against the
    representation: ``A in ∩W`` iff ``A ∩ N_j in U_j`` for all ``j``.
    """
    w = list(w)
    if len(w) < 2:
        raise ValueError("need at least two ultrafilters")
    n = _same_universe(w)
    if len(set(w)) != len(w):
        raise ValueError("ultrafilters must be pairwise distinct")
    parts = []
    rest = _full(n)
    for j in range(len(w) - 1):
        f_j = intersect_collection(w[j + 1:])
        dec = decompose_by_lemma(rest, f_j, w[j])
        parts.append(dec.a)
        rest = dec.b
    parts.append(rest)
    leftover = _full(n) & ~reduce(lambda x, y: x | y, parts)
    parts[0] |= leftover
    verified, checked = True, 0
    if n <= verify_upto:
        masks = _all_masks(n)
        inter = _intersect_tables(w)
        rep = np.ones(1 << n, dtype=bool)
        for part, u in zip(parts, w):
            rep &= ((masks & part) >> (u.point - 1) & 1) == 1
        verified = bool(np.array_equal(rep, inter))
        checked = 1 << n
    return PartitionResult(tuple(parts), leftover, verified, checked)


class Inavoidability(NamedTuple):
    inavoidable: bool
    witness: Optional[int]
    cross_validated: Optional[bool]


def _representations(f: FiniteFilter):
    """All non-empty point sets ``W`` with ``∩ U@p (p in W) = f``."""
    target = f.table()
    for pts in _collections(f.n, f.n):
        if np.array_equal(_intersect_tables([PrincipalUltrafilter(f.n, p) for p in pts]), target):
            yield pts


def inavoidability_check(f: FilterLike, u: PrincipalUltrafilter, cross_validate_upto: int = 5) -> Inavoidability:
    """Search ``a`` in ``u`` with ``f|_a = u|_a``, largest candidates first.

    For ``n <= cross_validate_upto`` the answer is compared with the
    definition: every representation of ``f`` as an intersection of
    principal ultrafilters contains ``u``.
    """
    f = f.as_filter()
    n = _same_universe([f, u])
    if f.ground != _full(n):
        raise ValueError("inavoidability is defined for filters on the whole universe")
    if not f.family().issubset(u.family()):
        raise ValueError("precondition fails: the filter is not contained in the ultrafilter")
    candidates = [int(m) for m in np.flatnonzero(u.table())]
    candidates.sort(key=lambda m: (-bin(m).count("1"), elements(m)))
    witness = None
    for a in candidates:
        if trace_filter(f, a) == trace_filter(u, a):
            witness = a
            break
    found = witness is not None
    cross = None
    if n <= cross_validate_upto:
        reps = list(_representations(f))
        if reps:
            cross = found == all(u.point in r for r in reps)
    return Inavoidability(found, witness, cross)


# ---------------------------------------------------------------------------
# grill, measures, poorness

class GrillIdeal(NamedTuple):
    ideal: Family
    grill: Family


def grill_and_ideal(f: FilterLike) -> GrillIdeal:
    """Ideal of complements and the grill, with the grill computed two ways.

    Complements are taken inside the filter's ground set.  The grill is the
    complement of the ideal and also the family of sets meeting every
    member; a disagreement raises ``AssertionError``.
    """
    f = f.as_filter()
    n, g = f.n, f.ground
    masks = _all_masks(n)
    inside = (masks & ~g) == 0
    t = f.table()
    ideal = np.zeros(1 << n, dtype=bool)
    ideal[g ^ masks[t]] = True
    grill = inside & ~ideal
    meets = inside.copy()
    for m in np.flatnonzero(t):
        meets &= (masks & int(m)) != 0
    if not np.array_equal(grill, meets):
        raise AssertionError("grill characterisations disagree")
    return GrillIdeal(Family(n, ideal), Family(n, grill))


def measure_generated_filter(m: FiniteMeasure) -> FiniteFilter:
    """``{A : m(A) >= 1 - 1e-12}``, checked against the principal filter over the support."""
    masks = _all_masks(m.n)
    t = np.array([m(int(a)) >= 1 - MEASURE_TOL for a in masks])
    out = FiniteFilter.from_family(Family(m.n, t))
    if out.base != (m.support,):
        raise AssertionError("measure filter differs from the filter of its support")
    return out


def convex_combination(ms: Sequence[FiniteMeasure], coeffs: Sequence) -> FiniteMeasure:
    ms = list(ms)
    if not ms or len(coeffs) != len(ms):
        raise ValueError("need one coefficient per measure")
    n = _same_universe(ms)
    c = [Fraction(x) for x in coeffs]
    if any(x <= 0 for x in c) or abs(sum(c) - 1) > MEASURE_TOL:
        raise ValueError("coefficients must be positive and sum to 1")
    return FiniteMeasure(n, tuple(sum(ci * mi.weights[k] for ci, mi in zip(c, ms)) for k in range(n)))


def convex_combination_identity(ms: Sequence[FiniteMeasure], coeffs: Sequence) -> bool:
    """Filter of the combination equals the intersection of the measures' filters."""
    left = measure_generated_filter(convex_combination(ms, coeffs))
    filters = [measure_generated_filter(m) for m in ms]
    return np.array_equal(left.table(), _intersect_tables(filters))


def poorness_bound_check(m: FiniteMeasure, family: Sequence, n_inv: int) -> bool:
    """``#{A in family : m(A) > 1/n_inv} < n_inv`` for pairwise disjoint ``family``."""
    if n_inv < 1:
        raise ValueError("n_inv must be >= 1")
    masks = [to_mask(a, m.n) for a in family]
    for x, y in itertools.combinations(masks, 2):
        if x & y:
            raise ValueError(f"sets {elements(x)} and {elements(y)} overlap")
    big = sum(1 for a in masks if m(a) > Fraction(1, n_inv))
    return big < n_inv


@dataclass(frozen=True)
class MinimalFamily:
    ultrafilters: tuple
    separators: tuple
    minimal: bool
    separators_verified: bool


def minimal_family_from_disjoint_sets(n: int, sets: Sequence) -> MinimalFamily:
    """One principal ultrafilter per set, at its least element.

    For each set ``B`` the separator ``D = ⋃_{A != B} (A \\ B)`` must lie in
    the intersection of the other ultrafilters and not in ``U_B``.
    """
    _check_n(n)
    masks = [to_mask(s, n) for s in sets]
    if len(masks) < 2:
        raise ValueError("a minimal collection needs at least two members")
    if any(m == 0 for m in masks):
        raise ValueError("sets must be non-empty")
    for x, y in itertools.combinations(masks, 2):
        if x & y:
            raise ValueError(f"sets {elements(x)} and {elements(y)} overlap")
    us = [PrincipalUltrafilter(n, elements(m)[0]) for m in masks]
    seps, ok = [], True
    for j, b in enumerate(masks):
        d = reduce(lambda x, y: x | y, (a & ~b for i, a in enumerate(masks) if i != j))
        seps.append(d)
        others = us[:j] + us[j + 1:]
        ok &= d in intersect_collection(others) and d not in us[j]
    return MinimalFamily(tuple(us), tuple(seps), is_minimal(us), bool(ok))


# ---------------------------------------------------------------------------
# exhaustive sweeps

@dataclass(frozen=True)
class SweepReport:
    theorem_id: str
    universe_n: int
    cases_checked: int
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"theorem_id": self.theorem_id, "universe_n": self.universe_n,
                "cases_checked": self.cases_checked, "violations": list(self.violations)}


def _sweep_union_element(n, rng):
    checked, bad = 0, []
    masks = _all_masks(n)
    for pts in _collections(n, n):
        w = [PrincipalUltrafilter(n, p) for p in pts]
        inter = intersect_collection(w).table()
        combos = np.zeros(1, dtype=np.int64)
        for u in w:
            members = masks[u.table()]
            combos = np.bitwise_or.outer(combos, members).ravel()
        ok = inter[combos]
        checked += len(combos)
        if not ok.all():
            bad.append({"W": list(pts), "union": list(elements(int(combos[~ok][0])))})
    return checked, bad


def _sweep_membership(n, rng):
    checked, bad = 0, []
    for pts in _collections(n, min(4, n)):
        w = [PrincipalUltrafilter(n, p) for p in pts]
        for q in range(1, n + 1):
            checked += 1
            if not ultrafilter_membership_lemma_check(w, PrincipalUltrafilter(n, q)):
                bad.append({"W": list(pts), "u": q})
    return checked, bad


def _sweep_uniqueness(n, rng):
    r = representation_uniqueness_check(n, n)
    return r.pairs_checked, [{"W1": list(a), "W2": list(b)} for a, b in r.violations]


def _sweep_partition(n, rng):
    checked, bad = 0, []
    for pts in _collections(n, n, 2):
        for order in itertools.permutations(pts):
            w = [PrincipalUltrafilter(n, p) for p in order]
            r = partition_for_collection(w)
            checked += 1
            parts = r.parts
            disjoint = all(x & y == 0 for x, y in itertools.combinations(parts, 2))
            covers = reduce(lambda x, y: x | y, parts) == _full(n)
            inside = all(p in u for p, u in zip(parts, w))
            if not (disjoint and covers and inside and r.item2_verified):
                bad.append({"W": list(order), "parts": r.to_dict()["parts"]})
    return checked, bad


def _all_filters(n):
    return [FiniteFilter.principal(n, k) for k in range(1, 1 << n)]


def _sweep_grill(n, rng):
    checked, bad = 0, []
    masks = _all_masks(n)
    full = _full(n)
    filters = _all_filters(n)
    grills = {}
    for f in filters:
        gi = grill_and_ideal(f)
        grills[f] = gi.grill.table
        t = f.table()
        # A not in F  <=>  complement of A in the grill
        duality = ~t == gi.grill.table[full ^ masks]
        checked += 1 << n
        if not duality.all():
            bad.append({"filter": f.describe(), "set": list(elements(int(masks[~duality][0])))})
    for f1, f2 in itertools.product(filters, repeat=2):
        if f1.family().issubset(f2.family()):
            checked += 1
            if not np.all(~grills[f2] | grills[f1]):
                bad.append({"F1": f1.describe(), "F2": f2.describe(), "law": "monotone grill"})
    return checked, bad


def _random_measure(n, rng, support=None):
    raw = rng.random(n)
    if support is not None:
        raw = np.where([(support >> i) & 1 for i in range(n)], raw + 1e-3, 0.0)
    ints = np.floor(raw * 1000).astype(int)
    if ints.sum() == 0:
        ints[int(rng.integers(n))] = 1
    return FiniteMeasure(n, tuple(Fraction(int(v), int(ints.sum())) for v in ints))


def _random_coeffs(k, rng):
    ints = rng.integers(1, 100, size=k)
    return [Fraction(int(v), int(ints.sum())) for v in ints]


def _sweep_convex(n, rng):
    checked, bad = 0, []
    for pts in _collections(n, n):
        ms = [FiniteMeasure.point_mass(n, p) for p in pts]
        for coeffs in ([Fraction(1, len(pts))] * len(pts), _random_coeffs(len(pts), rng)):
            checked += 1
            if not convex_combination_identity(ms, coeffs):
                bad.append({"points": list(pts), "coeffs": [str(c) for c in coeffs]})
    for _ in range(200):
        k = int(rng.integers(1, 4))
        ms = [_random_measure(n, rng, int(rng.integers(1, 1 << n))) for _ in range(k)]
        coeffs = _random_coeffs(k, rng)
        checked += 1
        if not convex_combination_identity(ms, coeffs):
            bad.append({"measures": [[str(x) for x in m.weights] for m in ms]})
    return checked, bad


def _sweep_poorness(n, rng, trials=10 ** 4):
    bad = []
    for _ in range(trials):
        m = _random_measure(n, rng, int(rng.integers(1, 1 << n)))
        labels = rng.integers(0, n + 1, size=n)
        family = [sum(1 << i for i in range(n) if labels[i] == lab) for lab in range(1, n + 1)]
        family = [s for s in family if s]
        n_inv = int(rng.integers(1, n + 3))
        if not poorness_bound_check(m, family, n_inv):
            bad.append({"weights": [str(x) for x in m.weights], "family": [list(elements(s)) for s in family],
                        "n_inv": n_inv})
    return trials, bad


def _sweep_inavoidability(n, rng):
    checked, bad = 0, []
    for pts in _collections(n, n):
        f = intersect_collection([PrincipalUltrafilter(n, p) for p in pts])
        for p in pts:
            r = inavoidability_check(f, PrincipalUltrafilter(n, p))
            checked += 1
            if not r.inavoidable or r.cross_validated is False:
                bad.append({"W": list(pts), "u": p})
    return checked, bad


def _set_systems(n):
    seen = set()
    for labels in itertools.product(range(n + 1), repeat=n):
        sets = {}
        for i, lab in enumerate(labels):
            if lab:
                sets.setdefault(lab, 0)
                sets[lab] |= 1 << i
        key = tuple(sorted(sets.values()))
        if len(key) >= 2 and key not in seen:
            seen.add(key)
            yield key


def _sweep_minimality(n, rng):
    checked, bad = 0, []
    for pts in _collections(n, n, 2):
        checked += 1
        if not is_minimal([PrincipalUltrafilter(n, p) for p in pts]):
            bad.append({"W": list(pts)})
    for sets in _set_systems(n):
        checked += 1
        r = minimal_family_from_disjoint_sets(n, sets)
        if not (r.minimal and r.separators_verified):
            bad.append({"sets": [list(elements(s)) for s in sets]})
    return checked, bad


def _sweep_filter_axioms(n, rng):
    checked, bad = 0, []

    def check(label, fam, ground=None):
        nonlocal checked
        checked += 1
        v = check_filter_axioms(fam, ground)
        if v:
            bad.append({"family": label, "violations": v})

    for p in range(1, n + 1):
        u = PrincipalUltrafilter(n, p)
        check(f"U@{p}", u.family())
        t = u.table()
        full = _full(n)
        # ultrafilter dichotomy: exactly one of A and its complement
        if not np.all(t ^ t[full ^ _all_masks(n)]):
            bad.append({"family": f"U@{p}", "violations": ["dichotomy fails"]})
    for pts in _collections(n, n):
        w = [PrincipalUltrafilter(n, p) for p in pts]
        f = intersect_collection(w)
        check(f"∩{list(pts)}", f.family())
        for a in range(1, 1 << n):
            try:
                tr = trace_filter(f, a)
            except EmptyTrace:
                continue
            check(f"trace of ∩{list(pts)} on {list(elements(a))}", tr.family(), tr.ground)
    for _ in range(100):
        m = _random_measure(n, rng, int(rng.integers(1, 1 << n)))
        check("measure filter", measure_generated_filter(m).family())
    return checked, bad


THEOREMS = {
    "union_element": _sweep_union_element,
    "membership_lemma": _sweep_membership,
    "uniqueness": _sweep_uniqueness,
    "partition": _sweep_partition,
    "grill_duality": _sweep_grill,
    "convex_combination": _sweep_convex,
    "poorness": _sweep_poorness,
    "inavoidability": _sweep_inavoidability,
    "minimality": _sweep_minimality,
    "filter_axioms": _sweep_filter_axioms,
}


def sweep(theorem: str, n: int, seed: int = 0) -> list:
    """Run one named sweep (or ``"all"``) on ``{1..n}``; returns a list of ``SweepReport``."""
    _check_n(n)
    if n > SWEEP_MAX_N:
        raise ValueError(f"exhaustive sweeps are capped at n <= {SWEEP_MAX_N}")
    names = list(THEOREMS) if theorem == "all" else [theorem]
    out = []
    for name in names:
        if name not in THEOREMS:
            raise ValueError(f"unknown theorem {name!r}; choose from {sorted(THEOREMS)} or 'all'")
        rng = np.random.default_rng([seed, n, list(THEOREMS).index(name)])
        checked, bad = THEOREMS[name](n, rng)
        out.append(SweepReport(name, n, int(checked), tuple(bad)))
    return out
