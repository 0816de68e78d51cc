"""Conglomeration witnesses and almost-disjoint families.

A filter is *conglomerated* when there are disjoint finite blocks
``D_1, D_2, ...`` such that the union of ``D_n`` over any infinite index set
``M`` lands in the grill.  For the summable ideal the blocks are cut so that
each carries weight sum >= 1; for the Erdős–Ulam ideal each block ``D_n``
makes up more than half of the total weight up to its right end::

    sum(s_i : i in D_n) / sum(s_i : i <= d_{n+1}) > 1/2

Both constructors pick every cut greedily (least admissible index), so the
output is deterministic.

Almost-disjoint families come from the binary tree: a 0/1 sequence ``b``
maps to the set of codes ``2**m + value(b_1..b_m)`` of its prefixes.  Two
sequences agreeing on exactly ``p`` leading bits give sets sharing exactly
``p`` elements.
"""
from __future__ import annotations

import bisect
import json
import math
import threading
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np

from .density import Ideal, WeightSeq, parse_weights, psum
from .setexpr import BitSource, BlockUnion, Branch, Finite, SetExpr, branch_code

__all__ = [
    "BlockPartition", "WitnessReport", "CapExceeded", "MismatchedIdeal",
    "frechet_blocks", "summable_blocks", "erdos_ulam_blocks",
    "union_over_index", "verify_conglomeration",
    "ad_family_member", "ad_family_branch", "ad_family_pairwise_check",
    "sample_non_poor_family",
]

GENERATIVE_KINDS = ("frechet", "summable", "erdos_ulam")

# harmonic cuts past this index are located with exact harmonic numbers
# instead of a linear scan
HARMONIC_ANALYTIC_FROM = 1 << 17

_SCAN_CHUNK_MIN = 1 << 12
_SCAN_CHUNK_MAX = 1 << 22


class CapExceeded(RuntimeError):
    """A cut could not be found below the cap.  ``partial`` holds the blocks found so far."""

    def __init__(self, message: str, partial: "BlockPartition"):
        super().__init__(message)
        self.partial = partial


class MismatchedIdeal(ValueError):
    pass


# ---------------------------------------------------------------------------
# greedy cut search

def _least_block_end(s: WeightSeq, d: int, target: float, strict: bool, cap: int):
    """Least ``k > d`` with ``sum(s_{d+1..k})`` ``>=`` (or ``>``) ``target``; None if ``k - d > cap``."""
    def ok(total):
        return total > target if strict else total >= target

    def block_sum(k):
        return psum(s.array(d + 1, k))

    carry = 0.0
    lo = d + 1
    cap = d + cap
    chunk = _SCAN_CHUNK_MIN
    slack = 1e-9 * max(1.0, abs(target))
    while lo <= cap:
        hi = min(cap, lo + chunk - 1)
        c = carry + np.cumsum(s.array(lo, hi))
        hits = np.flatnonzero(c >= target - slack)
        if len(hits):
            k = lo + int(hits[0])
            while not ok(block_sum(k)):
                k += 1
                if k > cap:
                    return None
            while k - 1 > d and ok(block_sum(k - 1)):
                k -= 1
            return k, block_sum(k)
        carry = float(c[-1])
        lo = hi + 1
        chunk = min(chunk * 2, _SCAN_CHUNK_MAX)
    return None


def _harmonic_number(n: int):
    return mpmath.harmonic(n) if n > 0 else mpmath.mpf(0)


def _harmonic_dps(d: int) -> int:
    return 2 * len(str(max(d, 1))) + 30


def _harmonic_least(d: int, rule: str, cap: int):
    """Exact harmonic version of ``_least_block_end`` using ``H(n) = sum_{i<=n} 1/i``."""
    with mpmath.workdps(_harmonic_dps(d)):
        hd = _harmonic_number(d)
        if rule == "summable":
            target = hd + 1

            def ok(k):
                return _harmonic_number(k) >= target
        else:
            target = 2 * hd

            def ok(k):
                return _harmonic_number(k) > target
        guess = int(mpmath.floor(mpmath.exp(target - mpmath.euler)))
        k = max(guess, d + 1)
        while not ok(k):
            k += 1
        while k - 1 > d and ok(k - 1):
            k -= 1
        if k - d > cap:
            return None
        hk = _harmonic_number(k)
        cert = hk - hd if rule == "summable" else (hk - hd) / hk
        return k, float(cert)


def _next_cut(rule: str, s: Optional[WeightSeq], cuts: Sequence[int], prefix_total: float, cap: int):
    """Return ``(next_cut, certificate, new_prefix_total)`` or None when the cap is hit."""
    d = cuts[-1]
    if rule == "frechet":
        return (d + 1, 1.0, prefix_total + 1) if cap >= 1 else None
    if s.is_harmonic and d >= HARMONIC_ANALYTIC_FROM:
        found = _harmonic_least(d, rule, cap)
        if found is None:
            return None
        return found[0], found[1], math.nan
    if rule == "summable":
        found = _least_block_end(s, d, 1.0, strict=False, cap=cap)
        if found is None:
            return None
        k, block = found
        return k, block, math.fsum([prefix_total, block])
    # Erdős–Ulam: block / (prefix + block) > 1/2  <=>  block > prefix
    if d == 0 and s(1) <= 0:
        raise ValueError("the Erdős–Ulam construction starts with D_1 = {1} and needs s_1 > 0")
    found = _least_block_end(s, d, prefix_total, strict=True, cap=cap)
    if found is None:
        return None
    k, block = found
    total = math.fsum([prefix_total, block])
    return k, block / total, total


# ---------------------------------------------------------------------------
# block partitions

@dataclass(frozen=True)
class BlockPartition:
    """Cut points ``0 = d_1 < d_2 < ...`` with blocks ``D_n = {d_n + 1, ..., d_{n+1}}``.

    ``kind`` records the construction (``frechet``, ``summable``,
    ``erdos_ulam`` or ``custom``) and ``certificates[n-1]`` the block sum or
    block ratio that construction guarantees for ``D_n``.  Partitions of a
    greedy kind are generative: blocks past the stored cuts are produced by
    the same rule when a membership query needs them.
    """
    cuts: tuple
    certificates: tuple = ()
    kind: str = "custom"
    weights: Optional[WeightSeq] = None

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cuts)
        if not cuts or cuts[0] != 0:
            raise ValueError("cuts must start at 0")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError("cuts must be strictly increasing (blocks are non-empty)")
        object.__setattr__(self, "cuts", cuts)
        object.__setattr__(self, "certificates", tuple(float(c) for c in self.certificates))
        if self.certificates and len(self.certificates) != len(cuts) - 1:
            raise ValueError("one certificate per block")
        if self.kind not in GENERATIVE_KINDS + ("custom",):
            raise ValueError(f"unknown partition kind {self.kind!r}")
        if self.kind in ("summable", "erdos_ulam") and self.weights is None:
            raise ValueError(f"{self.kind} partitions record their weights")
        object.__setattr__(self, "_ext_lock", threading.Lock())
        object.__setattr__(self, "_ext", list(cuts))

    @property
    def count(self) -> int:
        return len(self.cuts) - 1

    @property
    def is_generative(self) -> bool:
        return self.kind in GENERATIVE_KINDS

    def block(self, n: int) -> tuple:
        """``(lo, hi)`` with ``D_n = {lo, ..., hi}``."""
        if n < 1:
            raise ValueError("blocks are indexed from 1")
        cuts = self.cuts if n <= self.count else self._extended_to_index(n)
        if n >= len(cuts):
            raise IndexError(f"block {n} is beyond the {self.count} blocks of a custom partition")
        return cuts[n - 1] + 1, cuts[n]

    def blocks(self):
        return [self.block(n) for n in range(1, self.count + 1)]

    def block_index_of(self, x: int) -> Optional[int]:
        """Index ``n`` with ``x`` in ``D_n``; None past the end of a custom partition."""
        if self.kind == "frechet":
            return x
        cuts = self.cuts if x <= self.cuts[-1] else self._extended_to_point(x)
        if x > cuts[-1]:
            return None
        return bisect.bisect_left(cuts, x)

    def cuts_through(self, horizon: int) -> tuple:
        """Cuts up to and including the first cut ``>= horizon`` (all cuts for custom partitions)."""
        if self.kind == "frechet":
            return tuple(range(0, horizon + 1))
        cuts = self.cuts if horizon <= self.cuts[-1] else self._extended_to_point(horizon)
        j = bisect.bisect_left(cuts, horizon)
        return tuple(cuts[:j + 1])

    # extension of generative partitions past the stored cuts
    def _extend(self, done):
        if not self.is_generative:
            return list(self.cuts)
        with self._ext_lock:
            ext = self._ext
            if self.kind == "frechet":
                while not done(ext):
                    ext.append(ext[-1] + 1)
                return list(ext)
            s = self.weights
            total = s.partial_sum(ext[-1]) if ext[-1] else 0.0
            while not done(ext):
                step = _next_cut(self.kind, s, ext, total, cap=1 << 200)
                ext.append(step[0])
                total = step[2] if not math.isnan(step[2]) else total
            return list(ext)

    def _extended_to_point(self, x):
        return self._extend(lambda ext: ext[-1] >= x)

    def _extended_to_index(self, n):
        return self._extend(lambda ext: len(ext) > n)

    # serialisation
    def to_dict(self) -> dict:
        return {
            "cuts": list(self.cuts),
            "certificates": list(self.certificates),
            "kind": self.kind,
            "weights": self.weights.spec() if self.weights is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "BlockPartition":
        weights = data.get("weights")
        return cls(tuple(data["cuts"]), tuple(data.get("certificates") or ()),
                   data.get("kind", "custom"), parse_weights(weights) if weights else None)

    @classmethod
    def from_json(cls, text: str) -> "BlockPartition":
        return cls.from_dict(json.loads(text))


def frechet_blocks(count: int) -> BlockPartition:
    """Singleton blocks ``D_n = {n}``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return BlockPartition(tuple(range(count + 1)), (1.0,) * count, "frechet")


def _greedy(rule: str, s: WeightSeq, count: int, cap: int) -> BlockPartition:
    if count < 1:
        raise ValueError("count must be >= 1")
    cuts, certs, total = [0], [], 0.0
    while len(cuts) <= count:
        step = _next_cut(rule, s, cuts, total, cap)
        if step is None:
            partial = BlockPartition(tuple(cuts), tuple(certs), rule, s)
            need = "weight sum 1" if rule == "summable" else "prefix ratio above 1/2"
            raise CapExceeded(
                f"block {len(cuts)} does not reach {need} within {cap} indices of its start "
                f"(found {len(cuts) - 1} of {count} blocks, last cut {cuts[-1]})", partial)
        k, cert, new_total = step
        cuts.append(k)
        certs.append(cert)
        total = new_total if not math.isnan(new_total) else total
    return BlockPartition(tuple(cuts), tuple(certs), rule, s)


def summable_blocks(s: WeightSeq, count: int, cap: int) -> BlockPartition:
    """Greedy blocks with weight sum >= 1: ``d_{n+1}`` is the least ``k`` with ``sum(s_{d_n+1..k}) >= 1``.

    ``cap`` bounds the search for each cut: a block longer than ``cap``
    raises ``CapExceeded``, which carries the partial partition.
    """
    return _greedy("summable", s, count, cap)


def erdos_ulam_blocks(s: WeightSeq, count: int, cap: int) -> BlockPartition:
    """Greedy blocks with ``sum(s_i : i in D_n) / sum(s_i : i <= d_{n+1}) > 1/2``.

    Starts from ``d_1 = 0, d_2 = 1`` (``D_1 = {1}``, ratio 1).
    """
    return _greedy("erdos_ulam", s, count, cap)


def union_over_index(bp: BlockPartition, m: SetExpr, ref: Optional[str] = None) -> SetExpr:
    """``A_M = union of D_n over n in m``."""
    if not bp.is_generative:
        if isinstance(m, Finite):
            outside = sum(1 for j in m.values if j > bp.count)
            if outside:
                warnings.warn(f"{outside} block indices beyond the {bp.count} blocks were ignored",
                              stacklevel=2)
        elif not m.is_certified_finite:
            warnings.warn(f"block indices beyond {bp.count} are ignored for a custom partition",
                          stacklevel=2)
    return BlockUnion(bp, m, ref)


# ---------------------------------------------------------------------------
# verification

@dataclass(frozen=True)
class WitnessReport:
    index_set_used: SetExpr
    certificate_per_selected_block: tuple
    conclusion: str  # InGrillCertified | InGrillEmpirical | Failed
    detail: str
    selected_blocks: tuple = ()
    subsequence_ratios: tuple = ()

    def to_dict(self):
        return {
            "index_set_used": self.index_set_used.to_dsl(),
            "selected_blocks": list(self.selected_blocks),
            "certificate_per_selected_block": list(self.certificate_per_selected_block),
            "subsequence_ratios": list(self.subsequence_ratios),
            "conclusion": self.conclusion,
            "detail": self.detail,
        }


def _recompute(bp: BlockPartition, ideal: Ideal, upto: int):
    """Block certificates for blocks 1..upto, recomputed from the weights."""
    certs, sums = [], []
    s = ideal.weights
    for n in range(1, upto + 1):
        lo, hi = bp.block(n)
        if ideal.kind == "frechet":
            certs.append(float(hi - lo + 1))
            continue
        block = psum(s.array(lo, hi))
        sums.append(block)
        if ideal.kind == "summable":
            certs.append(block)
        else:
            certs.append(block / math.fsum(sums))
    return certs


def verify_conglomeration(bp: BlockPartition, ideal: Ideal, m: SetExpr, horizon: int) -> WitnessReport:
    """Check that ``union(D_n : n in m)`` is in the grill of ``ideal``.

    Blocks ``D_n`` with ``n`` in ``m`` and right end ``<= horizon`` are
    selected and their certificates recomputed from the weights (stored
    certificates are compared, never trusted).  The conclusion is
    InGrillCertified when ``m`` is structurally infinite and every selected
    block meets the construction's bound (sum >= 1, or ratio > 1/2); that
    uniform bound is what makes the union a grill member for every infinite
    ``m``.
    """
    if bp.kind != ideal.kind or (ideal.weights is not None and bp.weights != ideal.weights):
        raise MismatchedIdeal(
            f"partition built as {bp.kind}"
            f"{'/' + bp.weights.spec() if bp.weights is not None else ''} cannot witness {ideal.spec()}")
    if m.is_certified_finite:
        return WitnessReport(m, (), "Failed",
                             "finite index set: a finite union of finite blocks stays in the ideal")
    last = max((n for n in range(1, bp.count + 1) if bp.cuts[n] <= horizon), default=0)
    if last == 0:
        return WitnessReport(m, (), "Failed", f"no block ends within horizon {horizon}")
    th = m.table_horizon()
    scan = last if th is None else min(last, th)
    selected = [int(n) for n in np.flatnonzero(m.mask(scan))]
    if not selected:
        return WitnessReport(m, (), "Failed", f"no index of M among the first {scan} blocks")
    certs = _recompute(bp, ideal, max(selected))
    chosen = tuple(certs[n - 1] for n in selected)
    bound_ok = {
        "frechet": lambda c: c >= 1,
        "summable": lambda c: c >= 1.0,
        "erdos_ulam": lambda c: c > 0.5,
    }[ideal.kind]
    bad = [n for n, c in zip(selected, chosen) if not bound_ok(c)]
    stale = [n for n in selected
             if bp.certificates and not math.isclose(bp.certificates[n - 1], certs[n - 1], rel_tol=1e-9)]
    ratios = ()
    if ideal.kind == "erdos_ulam":
        ratios = tuple(chosen)
    if bad:
        return WitnessReport(m, chosen, "Failed", f"blocks {bad} miss the construction bound",
                             tuple(selected), ratios)
    if stale:
        return WitnessReport(m, chosen, "Failed",
                             f"stored certificates of blocks {stale} disagree with recomputation",
                             tuple(selected), ratios)
    bound = {"frechet": "non-empty", "summable": "weight sum >= 1", "erdos_ulam": "prefix ratio > 1/2"}[ideal.kind]
    if m.is_certified_infinite:
        return WitnessReport(m, chosen, "InGrillCertified",
                             f"{len(selected)} selected blocks within horizon {horizon} all have {bound}; "
                             f"M is infinite and the greedy rule gives every block this bound",
                             tuple(selected), ratios)
    return WitnessReport(m, chosen, "InGrillEmpirical",
                         f"{len(selected)} selected blocks have {bound}, but M is not certified infinite",
                         tuple(selected), ratios)


# ---------------------------------------------------------------------------
# almost-disjoint families

def _bits_tuple(bits, depth):
    if isinstance(bits, BitSource):
        return bits.take(depth)
    if isinstance(bits, str):
        seq = tuple(int(c) for c in bits)
    else:
        seq = tuple(int(b) for b in bits)
    if len(seq) < depth:
        raise ValueError(f"need at least {depth} bits, got {len(seq)}")
    if any(b not in (0, 1) for b in seq):
        raise ValueError("bits must be 0 or 1")
    return seq[:depth]


def ad_family_member(bits, depth: int) -> Finite:
    """``{code(b|1), ..., code(b|depth)}`` for the 0/1 sequence ``bits``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    seq = _bits_tuple(bits, depth)
    return Finite(tuple(branch_code(seq[:m]) for m in range(1, depth + 1)))


def ad_family_branch(bits) -> Branch:
    """The unbounded branch set of an eventually periodic sequence."""
    if isinstance(bits, str):
        prefix, _, cycle = bits.partition(",")
        bits = BitSource.parse(prefix, cycle or "0")
    elif not isinstance(bits, BitSource):
        bits = BitSource(tuple(bits), (0,))
    return Branch(bits)


def ad_family_pairwise_check(params: Sequence, depth: int) -> list:
    """Matrix of ``#(A_i ∩ A_j)`` for the depth-``depth`` members of ``params``.

    Intersections are counted directly from the sets; for distinct
    parameters the entry equals their common-prefix length.
    """
    seqs = [_bits_tuple(p, depth) for p in params]
    if len(set(seqs)) != len(seqs):
        raise ValueError(f"parameters are not distinct within the first {depth} bits")
    members = [set(ad_family_member(sq, depth).values) for sq in seqs]
    return [[len(a & b) for b in members] for a in members]


def sample_non_poor_family(bp: BlockPartition, ideal: Ideal, sources: Sequence[BitSource], horizon: int):
    """Build ``A_γ = union(D_n : n in branch(γ))`` for each source and check them.

    Returns ``(sets, reports, pairwise)`` where ``pairwise[i][j]`` is the
    ``almost_disjoint_report`` verdict for ``A_i`` and ``A_j``.
    """
    from .setexpr import almost_disjoint_report

    sets = [union_over_index(bp, Branch(src)) for src in sources]
    reports = [verify_conglomeration(bp, ideal, a.index, horizon) for a in sets]
    pairwise = [[None if i == j else almost_disjoint_report(a, b, horizon).verdict
                 for j, b in enumerate(sets)] for i, a in enumerate(sets)]
    return sets, reports, pairwise
