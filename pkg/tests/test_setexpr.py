import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filterlab.setexpr import (
    EMPTY, NATURALS, Arithmetic, BitSource, Branch, Cofinite, Complement, Difference,
    Finite, FromPredicateTable, HorizonError, Intersection, ParseError, Primes, Shift,
    Squares, Union, almost_disjoint_report, contains, intersection_count_upto,
    members_upto, parse_set_expr, shift_set,
)
from oracles import branch_codes, is_prime, is_square


# --- parsing ---------------------------------------------------------------

def test_parse_arith_is_the_evens():
    s = parse_set_expr("arith(2,2)")
    assert s == Arithmetic(2, 2)
    assert members_upto(s, 10).members == (2, 4, 6, 8, 10)


def test_parse_naturals_minus_squares():
    s = parse_set_expr("diff(cofinite{}, squares)")
    want = tuple(n for n in range(1, 101) if not is_square(n))
    assert members_upto(s, 100).members == want


def test_parse_union_with_shifted_squares():
    s = parse_set_expr("union(finite{1,2}, shift(squares, 1))")
    want = sorted({1, 2} | {k * k + 1 for k in range(1, 40) if k * k + 1 <= 1000})
    assert list(members_upto(s, 1000).members) == want


def test_whitespace_is_insignificant():
    assert parse_set_expr(" union ( finite{ 1 , 2 } ,squares ) ") == parse_set_expr("union(finite{1,2},squares)")


@pytest.mark.parametrize("text, offset", [
    ("finite{0}", 7),
    ("arith(-1,2)", 6),
    ("arith(1,0)", 8),
    ("squares)", 7),
    ("union(squares primes)", 14),
    ("Squares", 0),
    ("shift(squares, 1.5)", 15),
])
def test_parse_errors_report_byte_offset(text, offset):
    with pytest.raises(ParseError) as err:
        parse_set_expr(text)
    assert err.value.offset == offset


def test_parse_error_offset_counts_bytes_not_characters():
    with pytest.raises(ParseError) as err:
        parse_set_expr("union(squares,  é)")
    assert err.value.offset == len("union(squares,  ".encode())


def test_unknown_blockref_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_set_expr("blockunion(bp, squares)")


# --- membership ------------------------------------------------------------

@pytest.mark.parametrize("s, n, want", [
    (Arithmetic(2, 2), 7, False),
    (Squares(), 49, True),
    (Shift(Squares(), 1), 50, True),
    (Shift(Squares(), 1), 49, False),
    (Primes(), 97, True),
    (Primes(), 91, False),
])
def test_contains_examples(s, n, want):
    assert contains(s, n) is want
    assert (n in s) is want


def test_zero_is_rejected():
    with pytest.raises(ValueError):
        contains(Squares(), 0)
    with pytest.raises(ValueError):
        Finite((0, 1))


def test_members_upto_examples():
    v = members_upto(Squares(), 10)
    assert v.members == (1, 4, 9) and v.count == 3 and v.horizon == 10
    assert members_upto(Complement(Finite((1, 2, 3))), 5).members == (4, 5)
    p = members_upto(Primes(), 20)
    assert p.members == (2, 3, 5, 7, 11, 13, 17, 19) and p.count == 8


def test_primes_match_trial_division():
    mask = Primes().mask(5000)
    assert [n for n in range(1, 5001) if mask[n]] == [n for n in range(1, 5001) if is_prime(n)]


def test_large_prime_membership_uses_exact_test():
    assert (2 ** 61 - 1) in Primes()
    assert (2 ** 61 + 1) not in Primes()


def test_prime_sieve_is_thread_safe():
    results = []

    def work(h):
        results.append(int(Primes().mask(h).sum()))

    threads = [threading.Thread(target=work, args=(10 ** 5,)) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert set(results) == {9592}


def test_table_refuses_queries_past_horizon():
    t = FromPredicateTable.from_bools([True, False, True])
    assert 3 in t
    with pytest.raises(HorizonError):
        contains(t, 4)
    with pytest.raises(HorizonError):
        t.mask(4)
    assert t.table_horizon() == 3


def test_mask_index_zero_is_false():
    for s in (NATURALS, Cofinite(()), Complement(EMPTY)):
        assert not s.mask(10)[0]


# --- shift -----------------------------------------------------------------

def test_shift_of_finite_set():
    assert members_upto(shift_set(Finite((1, 3, 5)), 1), 10).members == (2, 4, 6)


def test_shift_by_zero_is_identity():
    s = Union(Squares(), Arithmetic(3, 7))
    assert shift_set(s, 0) is s


def test_shift_odds_gives_evens():
    a = shift_set(Arithmetic(1, 2), 1)
    assert np.array_equal(a.mask(10 ** 4), Arithmetic(2, 2).mask(10 ** 4))


@given(st.integers(0, 30), st.integers(0, 30), st.integers(1, 300))
def test_shift_composition(j, k, n):
    s = Union(Squares(), Finite((2, 3, 17)))
    left = shift_set(shift_set(s, j), k)
    assert np.array_equal(left.mask(n), shift_set(s, j + k).mask(n))


# --- intersections ---------------------------------------------------------

def test_intersection_count_examples():
    assert intersection_count_upto(Squares(), Arithmetic(2, 2), 100) == 5
    assert intersection_count_upto(Primes(), Complement(Primes()), 1000) == 0
    assert intersection_count_upto(Arithmetic(1, 2), Arithmetic(2, 2), 1000) == 0


def test_almost_disjoint_finite_sets():
    r = almost_disjoint_report(Finite((1, 2)), Finite((2, 3)), 10)
    assert r.verdict == "certified_finite"
    assert r.count_at_horizon == 1 and r.last_common_element_seen == 2


def test_almost_disjoint_same_set_is_inconclusive():
    small = almost_disjoint_report(Squares(), Squares(), 100)
    big = almost_disjoint_report(Squares(), Squares(), 10 ** 4)
    assert small.verdict == big.verdict == "inconclusive"
    assert big.count_at_horizon > small.count_at_horizon


def test_almost_disjoint_branches():
    a, b = Branch(BitSource.parse("010", "0")), Branch(BitSource.parse("011", "1"))
    r = almost_disjoint_report(a, b, 10 ** 5)
    # shared prefixes "0" and "01"
    assert r.verdict == "certified_finite"
    assert r.count_at_horizon == 2
    assert r.last_common_element_seen == int("101", 2)


def test_almost_disjoint_progressions():
    r = almost_disjoint_report(Arithmetic(1, 4), Arithmetic(2, 6), 1000)
    assert r.verdict == "certified_finite" and r.count_at_horizon == 0
    r = almost_disjoint_report(Arithmetic(1, 4), Arithmetic(5, 6), 1000)
    assert r.verdict == "inconclusive"


def test_branch_members_are_prefix_codes():
    src = "0110100110"
    b = Branch(BitSource.parse(src, "1"))
    bits = src + "1" * 10
    assert list(members_upto(b, 2 ** 20).members) == [c for c in branch_codes(bits) if c <= 2 ** 20]


# --- certificates ----------------------------------------------------------

@pytest.mark.parametrize("s, fin, inf", [
    (Finite((1, 2)), True, False),
    (Squares(), False, True),
    (Cofinite((1,)), False, True),
    (Intersection(Squares(), Finite((4, 9))), True, False),
    (Difference(Squares(), Squares()), False, False),
    (Complement(Finite((1,))), False, True),
    (Shift(Arithmetic(1, 3), 5), False, True),
])
def test_certificates(s, fin, inf):
    assert s.is_certified_finite is fin
    assert s.is_certified_infinite is inf


# --- random expressions against a bitvector oracle --------------------------

H = 120


def leaves():
    nums = st.lists(st.integers(1, H + 10), max_size=6)
    return st.one_of(
        nums.map(lambda v: ("finite", tuple(v))),
        nums.map(lambda v: ("cofinite", tuple(v))),
        st.tuples(st.integers(1, 20), st.integers(1, 9)).map(lambda t: ("arith",) + t),
        st.just(("squares",)),
        st.just(("primes",)),
        st.text("01", min_size=1, max_size=5).flatmap(
            lambda p: st.text("01", min_size=1, max_size=3).map(lambda c: ("branch", p, c))),
    )


def trees():
    return st.recursive(leaves(), lambda kids: st.one_of(
        st.tuples(st.sampled_from(["union", "inter", "diff"]), kids, kids),
        kids.map(lambda k: ("compl", k)),
        st.tuples(st.just("shift"), kids, st.integers(1, 15)),
    ), max_leaves=8)


def build(t):
    op = t[0]
    if op == "finite":
        return Finite(t[1])
    if op == "cofinite":
        return Cofinite(t[1])
    if op == "arith":
        return Arithmetic(t[1], t[2])
    if op == "squares":
        return Squares()
    if op == "primes":
        return Primes()
    if op == "branch":
        return Branch(BitSource.parse(t[1], t[2]))
    if op == "compl":
        return Complement(build(t[1]))
    if op == "shift":
        return Shift(build(t[1]), t[2])
    return {"union": Union, "inter": Intersection, "diff": Difference}[op](build(t[1]), build(t[2]))


def oracle(t, h):
    """The members of ``t`` in [1, h] as a Python set, computed naively."""
    op = t[0]
    universe = set(range(1, h + 1))
    if op == "finite":
        return {v for v in t[1] if v <= h}
    if op == "cofinite":
        return universe - set(t[1])
    if op == "arith":
        return {n for n in universe if n >= t[1] and (n - t[1]) % t[2] == 0}
    if op == "squares":
        return {n for n in universe if is_square(n)}
    if op == "primes":
        return {n for n in universe if is_prime(n)}
    if op == "branch":
        bits = t[1] + t[2] * 40
        return {c for c in branch_codes(bits[:12]) if c <= h}
    if op == "compl":
        return universe - oracle(t[1], h)
    if op == "shift":
        return {n + t[2] for n in oracle(t[1], h) if n + t[2] <= h}
    a, b = oracle(t[1], h), oracle(t[2], h)
    return {"union": a | b, "inter": a & b, "diff": a - b}[op]


def check_extensional(t, h):
    s = build(t)
    want = oracle(t, h)
    got = members_upto(s, h)
    assert set(got.members) == want
    assert got.count == len(want)
    for n in (1, h // 2 or 1, h):
        assert contains(s, n) == (n in want)
    # certificates are never contradicted by the finite window
    if s.is_certified_cofinite:
        assert not s.is_certified_finite
    if s.is_certified_finite and isinstance(s, Finite):
        assert set(s.values) >= want


@settings(max_examples=500)
@given(trees(), st.integers(1, H))
def test_extensional_algebra(t, h):
    check_extensional(t, h)


@settings(max_examples=300)
@given(trees(), trees(), st.integers(1, H))
def test_de_morgan(a, b, h):
    x, y = build(a), build(b)
    assert np.array_equal(Complement(Union(x, y)).mask(h),
                          Intersection(Complement(x), Complement(y)).mask(h))


@settings(max_examples=300)
@given(trees())
def test_round_trip(t):
    s = build(t)
    assert parse_set_expr(s.to_dsl()) == s


def test_zero_shift_round_trips_to_its_inner_set():
    assert parse_set_expr(Shift(Squares(), 0).to_dsl()) == Squares()


def test_table_round_trip():
    t = FromPredicateTable.from_bools([True, False, False, True, True])
    assert parse_set_expr(t.to_dsl()) == t
    assert parse_set_expr("table(5, 10011)") == t


def test_certified_finite_sets_are_finite():
    # a set certified finite has no members far out
    for s in (Intersection(Squares(), Finite((4, 400))), Difference(Finite((1, 2)), Squares()),
              Complement(Cofinite((3, 5)))):
        assert s.is_certified_finite
        assert not s.mask(10 ** 4)[500:].any()
