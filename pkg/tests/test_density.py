import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filterlab.density import (
    Certainty, Ideal, NumericError, Side, WeightSeq, classify, classify_erdos_ulam,
    classify_frechet, classify_summable, density_estimate, erdos_ulam_normalization_advisory,
    parse_ideal, parse_weights, psum, weighted_prefix_ratio,
)
from filterlab.setexpr import (
    NATURALS, Arithmetic, BitSource, Branch, Cofinite, Complement, Difference, Finite,
    FromPredicateTable, Intersection, Primes, Shift, Squares, Union,
)
from filterlab.witness import erdos_ulam_blocks, summable_blocks, union_over_index
from oracles import kahan_sum

ONE = WeightSeq.constant(1)
H = WeightSeq.harmonic()


# --- weights ---------------------------------------------------------------

@pytest.mark.parametrize("text, want", [
    ("constant(1)", ONE),
    ("constant", ONE),
    ("harmonic", H),
    ("powerlaw(0.5)", WeightSeq.powerlaw(0.5)),
    ("powerlaw(1)", H),
    ("table(0,0,3;harmonic)", WeightSeq.table([0, 0, 3], H)),
])
def test_parse_weights(text, want):
    w = parse_weights(text)
    assert w == want
    assert parse_weights(w.spec()) == w


@pytest.mark.parametrize("text", ["constant(0)", "constant(-1)", "powerlaw(1.5)", "powerlaw(0)",
                                  "table(1,2)", "table(-1;harmonic)", "cubic", "harmonic(2)"])
def test_bad_weights_rejected(text):
    with pytest.raises(ValueError):
        parse_weights(text)


def test_weights_indexed_from_one():
    with pytest.raises(ValueError):
        H(0)


def test_table_weights_follow_tail():
    w = WeightSeq.table([5, 0], ONE)
    assert [w(k) for k in (1, 2, 3, 4)] == [5, 0, 1, 1]
    assert list(w.array(2, 4)) == [0, 1, 1]


@given(st.sampled_from([ONE, H, WeightSeq.powerlaw(0.3), WeightSeq.table([0, 2.5], H)]),
       st.integers(1, 200), st.integers(0, 200))
def test_array_matches_pointwise(w, lo, length):
    hi = lo + length
    assert np.allclose(w.array(lo, hi), [w(k) for k in range(lo, hi + 1)], rtol=1e-15)
    assert (w.array(lo, hi) >= 0).all()


def test_psum_is_compensated():
    vals = [1.0, 1e100, 1.0, -1e100] * 1000
    assert psum(vals) == 2000.0
    assert psum(np.array(vals)) == 2000.0


def test_harmonic_partial_sum_against_kahan_oracle():
    n = 10 ** 6
    assert H.partial_sum(n) == pytest.approx(kahan_sum(1.0 / k for k in range(1, n + 1)), rel=1e-14)


# --- ratios ----------------------------------------------------------------

def test_ratio_of_evens():
    assert weighted_prefix_ratio(ONE, Arithmetic(2, 2), 10) == 0.5


@pytest.mark.parametrize("w", [ONE, H, WeightSeq.powerlaw(0.7)])
@pytest.mark.parametrize("k", [1, 17, 1000])
def test_ratio_of_everything_is_one(w, k):
    assert weighted_prefix_ratio(w, Cofinite(()), k) == 1.0


def test_harmonic_ratio_of_one():
    want = Fraction(1) / sum(Fraction(1, k) for k in range(1, 5))
    assert weighted_prefix_ratio(H, Finite((1,)), 4) == pytest.approx(float(want), abs=1e-9)
    assert float(want) == 0.48


def test_zero_denominator():
    with pytest.raises(NumericError):
        weighted_prefix_ratio(WeightSeq.table([0, 0, 0], ONE), NATURALS, 3)
    with pytest.raises(ValueError):
        weighted_prefix_ratio(ONE, NATURALS, 0)


# --- estimates -------------------------------------------------------------

def test_estimate_evens():
    est = density_estimate(ONE, Arithmetic(2, 2), [10 ** 2, 10 ** 4, 10 ** 6])
    assert est.exact == 0.5
    for _, r in est.ratios_at_checkpoints:
        assert r == pytest.approx(0.5, abs=1e-2)


def test_estimate_squares():
    est = density_estimate(ONE, Squares(), [10 ** 4, 10 ** 6])
    assert est.exact == 0
    assert est.ratio_at(10 ** 6) == pytest.approx(math.isqrt(10 ** 6) / 10 ** 6, abs=1e-15)


def test_estimate_finite():
    assert density_estimate(ONE, Finite((5, 7)), [10 ** 3]).exact == 0


def test_estimate_window_is_last_half():
    # ratios of {1..10} at 10, 100, 1000, 10000 are 1, 0.1, 0.01, 0.001
    est = density_estimate(ONE, Finite(tuple(range(1, 11))), [10, 100, 1000, 10000])
    assert est.running_limsup_estimate == pytest.approx(0.01)
    assert est.running_liminf_estimate == pytest.approx(0.001)


def test_estimate_serializes():
    est = density_estimate(H, Primes(), [100, 1000])
    d = json.loads(json.dumps(est.to_dict()))
    assert d["horizon"] == 1000 and d["exact"] is None
    assert [k for k, _ in d["ratios_at_checkpoints"]] == [100, 1000]


@pytest.mark.parametrize("cps", [[], [10, 10], [100, 10], [0, 10]])
def test_estimate_rejects_bad_checkpoints(cps):
    with pytest.raises(ValueError):
        density_estimate(ONE, Squares(), cps)


def test_weighted_ratio_against_fraction_oracle():
    s = Union(Primes(), Arithmetic(3, 10))
    k = 300
    members = [n for n in range(1, k + 1) if n in s]
    want = sum(Fraction(1, n) for n in members) / sum(Fraction(1, n) for n in range(1, k + 1))
    assert weighted_prefix_ratio(H, s, k) == pytest.approx(float(want), rel=1e-13)


# --- classifiers -----------------------------------------------------------

def test_frechet_examples():
    v = classify_frechet(Finite((1, 2, 3)))
    assert (v.side, v.certainty) == (Side.IN_IDEAL, Certainty.CERTIFIED)
    v = classify_frechet(Arithmetic(1, 3))
    assert (v.side, v.certainty) == (Side.IN_GRILL, Certainty.CERTIFIED)
    t = FromPredicateTable.from_bools([k % 3 == 0 for k in range(1, 101)])
    v = classify_frechet(t)
    assert v.side is Side.UNKNOWN and v.evidence["horizon"] == 100


def test_summable_examples():
    v = classify_summable(ONE, Finite(tuple(range(1, 11))), 1000)
    assert (v.side, v.certainty) == (Side.IN_IDEAL, Certainty.CERTIFIED)
    v = classify_summable(H, Squares(), 10 ** 6)
    assert (v.side, v.certainty) == (Side.IN_IDEAL, Certainty.CERTIFIED)
    # sum over squares of 1/k is sum 1/j^2, bounded by the Basel constant
    assert v.evidence["partial_sum"] < math.pi ** 2 / 6
    assert v.evidence["partial_sum"] == pytest.approx(
        kahan_sum(1 / j ** 2 for j in range(1, 1001)), rel=1e-14)
    v = classify_summable(H, Cofinite(()), 10 ** 6)
    assert (v.side, v.certainty) == (Side.IN_GRILL, Certainty.CERTIFIED)


def test_summable_heuristic_uses_threshold():
    t = FromPredicateTable.from_bools([True] * 60)
    v = classify_summable(ONE, t, 10 ** 3)
    assert v.side is Side.IN_GRILL and v.certainty is Certainty.HEURISTIC
    assert v.evidence["partial_sum"] == 60 and v.evidence["horizon"] == 60
    t = FromPredicateTable.from_bools([True] * 40)
    v = classify_summable(ONE, t, 10 ** 3)
    assert v.side is Side.IN_IDEAL and v.certainty is Certainty.HEURISTIC
    assert v.evidence["trajectory"]


def test_summable_block_union_is_certified_grill():
    bp = summable_blocks(H, 5, 10 ** 6)
    v = classify_summable(H, union_over_index(bp, Arithmetic(1, 2)), 10 ** 4)
    assert (v.side, v.certainty) == (Side.IN_GRILL, Certainty.CERTIFIED)


def test_erdos_ulam_examples():
    v = classify_erdos_ulam(ONE, Arithmetic(2, 2), [10 ** 4], 0.01)
    assert (v.side, v.certainty) == (Side.IN_GRILL, Certainty.CERTIFIED)
    v = classify_erdos_ulam(ONE, Squares(), [10 ** 6], 0.01)
    assert (v.side, v.certainty) == (Side.IN_IDEAL, Certainty.CERTIFIED)


def test_erdos_ulam_witness_blocks():
    bp = erdos_ulam_blocks(ONE, 15, 10 ** 6)
    a = union_over_index(bp, Arithmetic(1, 2))
    cps = [c for c in bp.cuts[1:] if c <= 10 ** 4]
    v = classify_erdos_ulam(ONE, a, cps, 0.4)
    assert v.side is Side.IN_GRILL and v.certainty is Certainty.CERTIFIED
    # along the cuts closing selected (odd) blocks the ratio exceeds 1/2
    for n in range(1, len(cps) + 1, 2):
        assert weighted_prefix_ratio(ONE, a, bp.cuts[n]) > 0.5


def test_erdos_ulam_heuristic_verdicts():
    dense = FromPredicateTable.from_bools([k % 4 == 0 for k in range(1, 10 ** 4 + 1)])
    v = classify_erdos_ulam(ONE, dense, [10, 100, 1000, 10 ** 4], 0.01)
    assert v.side is Side.IN_GRILL and v.certainty is Certainty.HEURISTIC
    assert v.evidence["horizon"] == 10 ** 4 and len(v.evidence["trajectory"]) == 4
    sparse = FromPredicateTable.from_bools([k in (1, 2) for k in range(1, 10 ** 4 + 1)])
    v = classify_erdos_ulam(ONE, sparse, [10 ** 3, 5 * 10 ** 3, 10 ** 4], 0.01)
    assert v.side is Side.IN_IDEAL and v.certainty is Certainty.HEURISTIC


def test_erdos_ulam_rejects_bad_threshold():
    with pytest.raises(ValueError):
        classify_erdos_ulam(ONE, Squares(), [100], 1.0)


@pytest.mark.parametrize("a, side", [
    (Union(Squares(), Primes()), Side.IN_IDEAL),
    (Complement(Union(Squares(), Primes())), Side.IN_GRILL),
    (Difference(Arithmetic(1, 3), Squares()), Side.IN_GRILL),
    (Shift(Squares(), 3), Side.IN_IDEAL),
])
def test_erdos_ulam_structural_closure(a, side):
    v = classify_erdos_ulam(ONE, a, [10 ** 3, 10 ** 4], 0.01)
    assert v.side is side and v.certainty is Certainty.CERTIFIED
    assert v.evidence["reason"]


def test_certified_verdicts_carry_reason():
    for v in (classify_frechet(Squares()), classify_summable(H, Squares(), 100),
              classify_erdos_ulam(ONE, Squares(), [100], 0.01)):
        assert v.certified and v.evidence["reason"]


def test_parse_ideal():
    assert parse_ideal("st") == Ideal.statistical() == Ideal.erdos_ulam(ONE)
    assert parse_ideal("frechet") == Ideal.frechet()
    assert parse_ideal("summable:harmonic") == Ideal.summable(H)
    assert parse_ideal("eu:powerlaw(0.5)") == Ideal.erdos_ulam(WeightSeq.powerlaw(0.5))
    for spec in ("frechet", "summable:harmonic", "eu:constant(1)"):
        assert parse_ideal(spec).spec() == spec
    with pytest.raises(ValueError):
        parse_ideal("density")
    with pytest.raises(ValueError):
        Ideal("summable")


def test_normalization_advisory_is_information_only():
    r = erdos_ulam_normalization_advisory(ONE, 1000)
    assert r["ratio_at_horizon"] == pytest.approx(1e-3)
    r = erdos_ulam_normalization_advisory(WeightSeq.table([1, 1], ONE), 10)
    assert r["tends_to_zero"]


# --- properties ------------------------------------------------------------

WEIGHTS = st.sampled_from([ONE, H, WeightSeq.powerlaw(0.5), WeightSeq.table([3, 0, 1], H)])
BASE = st.sampled_from([Squares(), Primes(), Arithmetic(1, 3), Arithmetic(2, 5),
                        Branch(BitSource.parse("01", "1")), Finite((2, 3, 40))])


@settings(max_examples=200)
@given(WEIGHTS, BASE, BASE, st.integers(1, 5000))
def test_prefix_additivity(w, a, b, k):
    b = Difference(b, a)  # disjoint from a by construction
    lhs = weighted_prefix_ratio(w, Union(a, b), k)
    assert lhs == pytest.approx(weighted_prefix_ratio(w, a, k) + weighted_prefix_ratio(w, b, k), abs=1e-12)


@settings(max_examples=200)
@given(WEIGHTS, BASE, BASE, st.integers(1, 5000))
def test_monotonicity(w, a, b, k):
    small = Intersection(a, b)
    assert weighted_prefix_ratio(w, small, k) <= weighted_prefix_ratio(w, a, k)
    assert weighted_prefix_ratio(w, a, k) <= weighted_prefix_ratio(w, Union(a, b), k)


@settings(max_examples=100)
@given(WEIGHTS, BASE, st.lists(st.integers(1, 10 ** 4), min_size=1, max_size=4, unique=True))
def test_estimate_invariants(w, a, cps):
    est = density_estimate(w, a, sorted(cps))
    assert 0 <= est.running_liminf_estimate <= est.running_limsup_estimate <= 1
    assert all(0 <= r <= 1 for _, r in est.ratios_at_checkpoints)


IDEALS = [Ideal.frechet(), Ideal.summable(H), Ideal.summable(ONE), Ideal.statistical(),
          Ideal.erdos_ulam(H)]
SETS = [Squares(), Primes(), Arithmetic(2, 2), Finite((1, 5)), Cofinite((1, 2)),
        Branch(BitSource.parse("1", "0")), Union(Squares(), Finite((3,))), Shift(Primes(), 2)]


@pytest.mark.parametrize("ideal", IDEALS, ids=str)
@pytest.mark.parametrize("a", SETS, ids=lambda a: a.to_dsl())
def test_grill_duality(ideal, a):
    # a set and its complement are never both certified ideal members
    va = classify(ideal, a, 10 ** 4)
    vc = classify(ideal, Complement(a), 10 ** 4)
    assert not (va.certified and vc.certified and va.side is vc.side is Side.IN_IDEAL)


@pytest.mark.parametrize("ideal", IDEALS, ids=str)
@given(st.lists(st.integers(1, 10 ** 6), max_size=5))
def test_finite_sets_in_every_ideal(ideal, values):
    v = classify(ideal, Finite(tuple(values)), 10 ** 3)
    assert v.side is Side.IN_IDEAL and v.certified
