"""Lazy, structured subsets of the natural numbers.

Naturals start at 1 everywhere in this package; 0 is rejected.  A set is
an immutable expression tree (``SetExpr``) that answers membership exactly
by structural recursion and can be materialised on any finite prefix
``[1, N]`` as a boolean mask.

Each node also carries conservative *certificates*: ``is_certified_finite``,
``is_certified_infinite``, ``is_certified_cofinite`` and
``is_certified_coinfinite``.  A certificate is only set when it follows
from the structure, so a brute-force enumeration can never contradict it.
An unset certificate means "not known", not "false".

Text form (see ``parse_set_expr``)::

    finite{1,2} | cofinite{} | arith(2,2) | squares | primes
    union(a,b) | inter(a,b) | diff(a,b) | compl(a) | shift(a,k)
    blockunion(name, a) | branch(0110, 1) | table(5, 10110)
"""
from __future__ import annotations

import bisect
import math
import re
import threading
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

import numpy as np

__all__ = [
    "SetExpr", "Finite", "Cofinite", "Arithmetic", "Squares", "Primes",
    "BlockUnion", "Union", "Intersection", "Difference", "Complement",
    "Shift", "FromPredicateTable", "Branch", "BitSource", "PrefixView",
    "ParseError", "HorizonError", "EMPTY", "NATURALS",
    "parse_set_expr", "contains", "members_upto", "shift_set",
    "intersection_count_upto", "almost_disjoint_report", "AlmostDisjointReport",
    "branch_code",
]


class HorizonError(ValueError):
    """A table-backed set was queried beyond the horizon it knows about."""


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class _Cert(NamedTuple):
    fin: bool = False
    inf: bool = False
    cofin: bool = False
    coinf: bool = False

    def complement(self) -> "_Cert":
        return _Cert(self.cofin, self.coinf, self.fin, self.inf)


def _check_natural(n, what="element"):
    if isinstance(n, (bool, np.bool_)) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"{what} must be an integer, got {n!r}")
    if n < 1:
        raise ValueError(f"{what} must be >= 1 (naturals start at 1), got {n}")
    return int(n)


def _check_horizon(horizon):
    return _check_natural(horizon, "horizon")


@dataclass(frozen=True)
class PrefixView:
    """The finite window ``A ∩ [1, horizon]`` of a set ``A``."""
    horizon: int
    members: tuple
    count: int

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "PrefixView":
        members = tuple(int(i) for i in np.flatnonzero(mask))
        return cls(len(mask) - 1, members, len(members))


# ---------------------------------------------------------------------------
# prime sieve shared by all Primes nodes

class _PrimeSieve:
    MAX_CACHED = 1 << 26

    def __init__(self):
        self._lock = threading.Lock()
        self._sieve = self._build(1 << 12)

    @staticmethod
    def _build(limit):
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if sieve[p]:
                sieve[p * p::p] = False
        return sieve

    def mask(self, horizon):
        sieve = self._sieve
        if len(sieve) <= horizon:
            with self._lock:
                if len(self._sieve) <= horizon:
                    self._sieve = self._build(max(horizon, 2 * (len(self._sieve) - 1)))
                sieve = self._sieve
        return sieve[:horizon + 1].copy()

    def is_prime(self, n):
        if n <= self.MAX_CACHED:
            if n < len(self._sieve):
                return bool(self._sieve[n])
            return bool(self.mask(n)[n])
        return _miller_rabin(n)


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_LIMIT = 3_317_044_064_679_887_385_961_981


def _miller_rabin(n):
    # the base set above is deterministic below _MR_LIMIT
    if n >= _MR_LIMIT:
        raise HorizonError(f"primality of {n} is not decided exactly by this library")
    if n % 2 == 0:
        return n == 2
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        if a % n == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


_SIEVE = _PrimeSieve()


# ---------------------------------------------------------------------------
# binary sequences for almost-disjoint branches

def branch_code(bits) -> int:
    """Encode a non-empty finite 0/1 string as ``2**m + value(bits)``."""
    s = "".join(str(int(b)) for b in bits)
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"expected a non-empty binary string, got {bits!r}")
    return int("1" + s, 2)


@dataclass(frozen=True)
class BitSource:
    """An eventually periodic infinite 0/1 sequence: ``prefix`` then ``cycle`` forever."""
    prefix: tuple = ()
    cycle: tuple = (0,)

    def __post_init__(self):
        prefix = tuple(int(b) for b in self.prefix)
        cycle = tuple(int(b) for b in self.cycle)
        if not cycle:
            raise ValueError("cycle must be non-empty")
        if any(b not in (0, 1) for b in prefix + cycle):
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "cycle", cycle)

    @classmethod
    def parse(cls, prefix: str, cycle: str = "0") -> "BitSource":
        return cls(tuple(int(c) for c in prefix), tuple(int(c) for c in cycle))

    def bit(self, i: int) -> int:
        """The ``i``-th bit, 1-based."""
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        return self.cycle[(i - len(self.prefix) - 1) % len(self.cycle)]

    def take(self, m: int) -> tuple:
        return tuple(self.bit(i) for i in range(1, m + 1))

    def _period_bound(self, other: "BitSource") -> int:
        lc = len(self.cycle) * len(other.cycle) // math.gcd(len(self.cycle), len(other.cycle))
        return max(len(self.prefix), len(other.prefix)) + lc

    def common_prefix_length(self, other: "BitSource") -> Optional[int]:
        """Length of the longest common prefix; ``None`` when the sequences are equal."""
        for i in range(1, self._period_bound(other) + 1):
            if self.bit(i) != other.bit(i):
                return i - 1
        return None

    def __str__(self):
        return "".join(map(str, self.prefix)) + "," + "".join(map(str, self.cycle))


# ---------------------------------------------------------------------------
# expression nodes

class SetExpr:
    """Base class of all set expressions."""

    # subclasses implement _contains, _mask, _cert, to_dsl

    def contains(self, n) -> bool:
        return self._contains(_check_natural(n))

    __contains__ = contains

    def mask(self, horizon) -> np.ndarray:
        """Boolean array ``m`` of length ``horizon + 1`` with ``m[n] == (n in self)``.

        Index 0 is always False.  Callers must not mutate the result.
        """
        return self._mask(_check_horizon(horizon))

    def members_upto(self, horizon) -> PrefixView:
        return PrefixView.from_mask(self.mask(horizon))

    def count_upto(self, horizon) -> int:
        return int(np.count_nonzero(self.mask(horizon)))

    @property
    def certificate(self) -> _Cert:
        return self._cert()

    @property
    def is_certified_finite(self) -> bool:
        return self._cert().fin

    @property
    def is_certified_infinite(self) -> bool:
        return self._cert().inf

    @property
    def is_certified_cofinite(self) -> bool:
        return self._cert().cofin

    @property
    def is_certified_coinfinite(self) -> bool:
        return self._cert().coinf

    def table_horizon(self) -> Optional[int]:
        """Smallest horizon of any table node inside, or None if there is none."""
        hs = [c.table_horizon() for c in self.children()]
        hs = [h for h in hs if h is not None]
        return min(hs) if hs else None

    def children(self) -> tuple:
        return ()

    def __or__(self, other):
        return Union(self, other)

    def __and__(self, other):
        return Intersection(self, other)

    def __sub__(self, other):
        return Difference(self, other)

    def __invert__(self):
        return Complement(self)

    def __str__(self):
        return self.to_dsl()


def _empty(horizon):
    return np.zeros(horizon + 1, dtype=bool)


@dataclass(frozen=True)
class Finite(SetExpr):
    values: tuple = ()

    def __post_init__(self):
        vals = tuple(sorted({_check_natural(v) for v in self.values}))
        object.__setattr__(self, "values", vals)

    def _contains(self, n):
        i = bisect.bisect_left(self.values, n)
        return i < len(self.values) and self.values[i] == n

    def _mask(self, horizon):
        m = _empty(horizon)
        vals = [v for v in self.values if v <= horizon]
        m[vals] = True
        return m

    def _cert(self):
        return _Cert(fin=True, coinf=True)

    def to_dsl(self):
        return "finite{" + ",".join(map(str, self.values)) + "}"


@dataclass(frozen=True)
class Cofinite(SetExpr):
    excluded: tuple = ()

    def __post_init__(self):
        vals = tuple(sorted({_check_natural(v) for v in self.excluded}))
        object.__setattr__(self, "excluded", vals)

    def _contains(self, n):
        i = bisect.bisect_left(self.excluded, n)
        return not (i < len(self.excluded) and self.excluded[i] == n)

    def _mask(self, horizon):
        m = np.ones(horizon + 1, dtype=bool)
        m[0] = False
        m[[v for v in self.excluded if v <= horizon]] = False
        return m

    def _cert(self):
        return _Cert(inf=True, cofin=True)

    def to_dsl(self):
        return "cofinite{" + ",".join(map(str, self.excluded)) + "}"


@dataclass(frozen=True)
class Arithmetic(SetExpr):
    """``{first, first + step, first + 2*step, ...}``."""
    first: int
    step: int

    def __post_init__(self):
        _check_natural(self.first, "first")
        _check_natural(self.step, "step")

    def _contains(self, n):
        return n >= self.first and (n - self.first) % self.step == 0

    def _mask(self, horizon):
        m = _empty(horizon)
        m[self.first::self.step] = True
        return m

    def _cert(self):
        if self.step == 1:
            return _Cert(inf=True, cofin=True)
        return _Cert(inf=True, coinf=True)

    def to_dsl(self):
        return f"arith({self.first},{self.step})"


@dataclass(frozen=True)
class Squares(SetExpr):
    def _contains(self, n):
        return math.isqrt(n) ** 2 == n

    def _mask(self, horizon):
        m = _empty(horizon)
        r = np.arange(1, math.isqrt(horizon) + 1)
        m[r * r] = True
        return m

    def _cert(self):
        return _Cert(inf=True, coinf=True)

    def to_dsl(self):
        return "squares"


@dataclass(frozen=True)
class Primes(SetExpr):
    def _contains(self, n):
        return _SIEVE.is_prime(n)

    def _mask(self, horizon):
        return _SIEVE.mask(horizon)

    def _cert(self):
        return _Cert(inf=True, coinf=True)

    def to_dsl(self):
        return "primes"


@dataclass(frozen=True)
class BlockUnion(SetExpr):
    """Union of the blocks ``D_n`` of a block partition over the indices ``n`` in ``index``.

    ``blocks`` is a ``filterlab.witness.BlockPartition``.  A partition built
    by one of the greedy constructors is *generative*: blocks past the
    materialised cuts are produced on demand by the same rule, so the union
    over an infinite index is an infinite set.  A plain list of cuts only
    covers ``[1, d_last]``.
    """
    blocks: object
    index: SetExpr
    ref: Optional[str] = field(default=None, compare=False)

    def children(self):
        return (self.index,)

    def _contains(self, n):
        j = self.blocks.block_index_of(n)
        return j is not None and self.index.contains(j)

    def _mask(self, horizon):
        cuts = self.blocks.cuts_through(horizon)
        nblocks = len(cuts) - 1
        m = _empty(horizon)
        if nblocks == 0:
            return m
        cut_arr = np.array([min(c, horizon) for c in cuts], dtype=np.int64)
        block_of = np.searchsorted(cut_arr, np.arange(1, horizon + 1), side="left")
        selected = np.zeros(nblocks + 2, dtype=bool)
        selected[:nblocks + 1] = self.index.mask(nblocks)
        # block_of == nblocks + 1 marks points past the last materialised cut
        block_of = np.minimum(block_of, nblocks + 1)
        m[1:] = selected[block_of]
        return m

    def _cert(self):
        if getattr(self.blocks, "is_generative", False):
            return self.index._cert()
        return _Cert(fin=True, coinf=True)

    def to_dsl(self):
        return f"blockunion({self.ref or '_'},{self.index.to_dsl()})"


@dataclass(frozen=True)
class Union(SetExpr):
    left: SetExpr
    right: SetExpr

    def children(self):
        return (self.left, self.right)

    def _contains(self, n):
        return self.left._contains(n) or self.right._contains(n)

    def _mask(self, horizon):
        return self.left._mask(horizon) | self.right._mask(horizon)

    def _cert(self):
        a, b = self.left._cert(), self.right._cert()
        # complement of a union is the intersection of complements
        return _Cert(
            fin=a.fin and b.fin,
            inf=a.inf or b.inf,
            cofin=a.cofin or b.cofin,
            coinf=(a.fin and b.coinf) or (b.fin and a.coinf),
        )

    def to_dsl(self):
        return f"union({self.left.to_dsl()},{self.right.to_dsl()})"


def _inter_cert(a: _Cert, b: _Cert) -> _Cert:
    return _Cert(
        fin=a.fin or b.fin,
        inf=(a.cofin and b.inf) or (b.cofin and a.inf),
        cofin=a.cofin and b.cofin,
        coinf=a.coinf or b.coinf,
    )


@dataclass(frozen=True)
class Intersection(SetExpr):
    left: SetExpr
    right: SetExpr

    def children(self):
        return (self.left, self.right)

    def _contains(self, n):
        return self.left._contains(n) and self.right._contains(n)

    def _mask(self, horizon):
        return self.left._mask(horizon) & self.right._mask(horizon)

    def _cert(self):
        return _inter_cert(self.left._cert(), self.right._cert())

    def to_dsl(self):
        return f"inter({self.left.to_dsl()},{self.right.to_dsl()})"


@dataclass(frozen=True)
class Difference(SetExpr):
    left: SetExpr
    right: SetExpr

    def children(self):
        return (self.left, self.right)

    def _contains(self, n):
        return self.left._contains(n) and not self.right._contains(n)

    def _mask(self, horizon):
        return self.left._mask(horizon) & ~self.right._mask(horizon)

    def _cert(self):
        return _inter_cert(self.left._cert(), self.right._cert().complement())

    def to_dsl(self):
        return f"diff({self.left.to_dsl()},{self.right.to_dsl()})"


@dataclass(frozen=True)
class Complement(SetExpr):
    inner: SetExpr

    def children(self):
        return (self.inner,)

    def _contains(self, n):
        return not self.inner._contains(n)

    def _mask(self, horizon):
        m = ~self.inner._mask(horizon)
        m[0] = False
        return m

    def _cert(self):
        return self.inner._cert().complement()

    def to_dsl(self):
        return f"compl({self.inner.to_dsl()})"


@dataclass(frozen=True)
class Shift(SetExpr):
    """``{n + offset : n in inner}``."""
    inner: SetExpr
    offset: int

    def __post_init__(self):
        if not isinstance(self.offset, (int, np.integer)) or self.offset < 0:
            raise ValueError(f"shift offset must be a non-negative integer, got {self.offset!r}")

    def children(self):
        return (self.inner,)

    def _contains(self, n):
        return n > self.offset and self.inner._contains(n - self.offset)

    def _mask(self, horizon):
        m = _empty(horizon)
        if self.offset < horizon:
            m[self.offset + 1:] = self.inner._mask(horizon - self.offset)[1:]
        return m

    def _cert(self):
        # the complement of a shift is [1, offset] plus the shifted complement
        return self.inner._cert()

    def to_dsl(self):
        if self.offset == 0:
            return self.inner.to_dsl()
        return f"shift({self.inner.to_dsl()},{self.offset})"


@dataclass(frozen=True)
class FromPredicateTable(SetExpr):
    """A set known only on ``[1, horizon]``, given as packed membership bits."""
    horizon: int
    bits: bytes

    def __post_init__(self):
        _check_horizon(self.horizon)
        if len(self.bits) * 8 < self.horizon:
            raise ValueError("bit table shorter than its horizon")

    @classmethod
    def from_bools(cls, flags) -> "FromPredicateTable":
        """Build from a sequence whose item ``i`` is the membership of ``i + 1``."""
        arr = np.asarray(list(flags) if not isinstance(flags, np.ndarray) else flags, dtype=bool)
        return cls(len(arr), np.packbits(arr, bitorder="little").tobytes())

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "FromPredicateTable":
        return cls.from_bools(np.asarray(mask[1:], dtype=bool))

    def _unpacked(self):
        raw = np.frombuffer(self.bits, dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[:self.horizon].astype(bool)

    def _guard(self, n):
        if n > self.horizon:
            raise HorizonError(f"table-backed set known only up to {self.horizon}, asked about {n}")

    def _contains(self, n):
        self._guard(n)
        byte = self.bits[(n - 1) // 8]
        return bool((byte >> ((n - 1) % 8)) & 1)

    def _mask(self, horizon):
        self._guard(horizon)
        m = _empty(horizon)
        m[1:] = self._unpacked()[:horizon]
        return m

    def _cert(self):
        return _Cert()

    def table_horizon(self):
        return self.horizon

    def to_dsl(self):
        return f"table({self.horizon},{''.join('1' if b else '0' for b in self._unpacked())})"


@dataclass(frozen=True)
class Branch(SetExpr):
    """Branch set ``{code(b|1), code(b|2), ...}`` of an infinite 0/1 sequence ``b``.

    Two branches whose sequences first differ at position ``p`` share exactly
    ``p - 1`` elements, so distinct branches are pairwise almost disjoint.
    """
    source: BitSource

    def _contains(self, n):
        if n < 2:
            return False
        m = n.bit_length() - 1
        return n == branch_code(self.source.take(m))

    def _mask(self, horizon):
        m = _empty(horizon)
        depth = 1
        while True:
            c = branch_code(self.source.take(depth))
            if c > horizon:
                break
            m[c] = True
            depth += 1
        return m

    def _cert(self):
        return _Cert(inf=True, coinf=True)

    def to_dsl(self):
        return f"branch({self.source})"


EMPTY = Finite(())
NATURALS = Cofinite(())


# ---------------------------------------------------------------------------
# operations

def contains(s: SetExpr, n: int) -> bool:
    return s.contains(n)


def members_upto(s: SetExpr, horizon: int) -> PrefixView:
    return s.members_upto(horizon)


def shift_set(s: SetExpr, k: int) -> SetExpr:
    """The shift ``s + k``; shifting by 0 returns ``s`` itself."""
    if k == 0:
        return s
    return Shift(s, k)


def intersection_count_upto(a: SetExpr, b: SetExpr, horizon: int) -> int:
    return int(np.count_nonzero(a.mask(horizon) & b.mask(horizon)))


@dataclass(frozen=True)
class AlmostDisjointReport:
    count_at_horizon: int
    last_common_element_seen: Optional[int]
    verdict: str  # "certified_finite" | "inconclusive"
    reason: str = ""

    def to_dict(self):
        return {
            "count_at_horizon": self.count_at_horizon,
            "last_common_element_seen": self.last_common_element_seen,
            "verdict": self.verdict,
            "reason": self.reason,
        }


def _progressions_disjoint(a: Arithmetic, b: Arithmetic) -> bool:
    g = math.gcd(a.step, b.step)
    return (b.first - a.first) % g != 0


def _finite_intersection_reason(a: SetExpr, b: SetExpr) -> Optional[str]:
    if Intersection(a, b).is_certified_finite:
        return "structural: one side is finite"
    if isinstance(a, Arithmetic) and isinstance(b, Arithmetic) and _progressions_disjoint(a, b):
        return "structural: disjoint arithmetic progressions"
    if isinstance(a, Branch) and isinstance(b, Branch):
        p = a.source.common_prefix_length(b.source)
        if p is not None:
            return f"structural: distinct branches sharing a prefix of length {p}"
    if isinstance(a, BlockUnion) and isinstance(b, BlockUnion) and a.blocks == b.blocks:
        # blocks are finite and disjoint, so only shared indices contribute
        inner = _finite_intersection_reason(a.index, b.index)
        if inner:
            return f"block unions over almost disjoint indices ({inner})"
    if isinstance(a, Complement) and a.inner == b or isinstance(b, Complement) and b.inner == a:
        return "structural: a set and its complement"
    return None


def almost_disjoint_report(a: SetExpr, b: SetExpr, horizon: int) -> AlmostDisjointReport:
    common = a.mask(horizon) & b.mask(horizon)
    idx = np.flatnonzero(common)
    last = int(idx[-1]) if len(idx) else None
    reason = _finite_intersection_reason(a, b)
    verdict = "certified_finite" if reason else "inconclusive"
    return AlmostDisjointReport(len(idx), last, verdict, reason or "no structural certificate")


# ---------------------------------------------------------------------------
# text form

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){},])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str):
    toks, pos = [], 0
    raw = text.encode()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), len(text[:pos].encode())))
        pos = m.end()
    toks.append(_Tok("eof", "", len(raw)))
    return toks


class _Parser:
    """Recursive-descent parser over the token stream."""

    SET_KEYWORDS = frozenset({
        "finite", "cofinite", "arith", "squares", "primes", "blockunion",
        "union", "inter", "diff", "compl", "shift", "branch", "table",
    })

    def __init__(self, text, blocks=None):
        self.toks = _tokenize(text)
        self.i = 0
        self.blocks = dict(blocks or {})

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            shown = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {shown!r}", tok.offset)
        return tok

    def done(self):
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"trailing input {tok.text!r}", tok.offset)

    def natural(self):
        tok = self.next()
        if tok.kind != "num":
            raise ParseError(f"expected a positive integer, found {tok.text or 'end of input'!r}", tok.offset)
        if not re.fullmatch(r"[-+]?\d+", tok.text):
            raise ParseError(f"expected a positive integer, found {tok.text!r}", tok.offset)
        value = int(tok.text)
        if value < 1:
            raise ParseError(f"numeric literal {tok.text} is not a natural (sets live in N >= 1)", tok.offset)
        return value

    def bitstring(self, allow_empty=False):
        tok = self.peek()
        if tok.kind != "num":
            if allow_empty:
                return ""
            raise ParseError("expected a binary string", tok.offset)
        self.next()
        if not re.fullmatch(r"[01]+", tok.text):
            raise ParseError(f"expected a binary string, found {tok.text!r}", tok.offset)
        return tok.text

    def nums(self, close):
        values = []
        if self.peek().text == close:
            return values
        values.append(self.natural())
        while self.peek().text == ",":
            self.next()
            values.append(self.natural())
        return values

    def parse_set(self) -> SetExpr:
        tok = self.next()
        word = tok.text
        if tok.kind != "name":
            raise ParseError(f"expected a set expression, found {word or 'end of input'!r}", tok.offset)
        if word in ("finite", "cofinite"):
            self.expect("{")
            values = self.nums("}")
            self.expect("}")
            return Finite(tuple(values)) if word == "finite" else Cofinite(tuple(values))
        if word == "squares":
            return Squares()
        if word == "primes":
            return Primes()
        if word == "arith":
            self.expect("(")
            first = self.natural()
            self.expect(",")
            step = self.natural()
            self.expect(")")
            return Arithmetic(first, step)
        if word in ("union", "inter", "diff"):
            self.expect("(")
            left = self.parse_set()
            self.expect(",")
            right = self.parse_set()
            self.expect(")")
            return {"union": Union, "inter": Intersection, "diff": Difference}[word](left, right)
        if word == "compl":
            self.expect("(")
            inner = self.parse_set()
            self.expect(")")
            return Complement(inner)
        if word == "shift":
            self.expect("(")
            inner = self.parse_set()
            self.expect(",")
            k = self.natural()
            self.expect(")")
            return Shift(inner, k)
        if word == "blockunion":
            self.expect("(")
            ref = self.next()
            if ref.kind != "name" or ref.text in self.SET_KEYWORDS:
                raise ParseError("expected a block partition name", ref.offset)
            if ref.text not in self.blocks:
                raise ParseError(f"unknown block partition {ref.text!r}", ref.offset)
            self.expect(",")
            index = self.parse_set()
            self.expect(")")
            return BlockUnion(self.blocks[ref.text], index, ref.text)
        if word == "branch":
            self.expect("(")
            prefix = self.bitstring(allow_empty=True)
            self.expect(",")
            cycle = self.bitstring()
            self.expect(")")
            return Branch(BitSource.parse(prefix, cycle))
        if word == "table":
            self.expect("(")
            horizon = self.natural()
            self.expect(",")
            bits = self.bitstring()
            self.expect(")")
            if len(bits) != horizon:
                raise ParseError("table bit string length must equal its horizon", tok.offset)
            return FromPredicateTable.from_bools([c == "1" for c in bits])
        raise ParseError(f"unknown set keyword {word!r}", tok.offset)


def parse_set_expr(text: str, blocks: Optional[Mapping[str, object]] = None) -> SetExpr:
    """Parse the set DSL.

    ``blocks`` maps names usable in ``blockunion(name, ...)`` to block
    partitions (typically loaded with ``BlockPartition.from_json``).
    """
    p = _Parser(text, blocks)
    expr = p.parse_set()
    p.done()
    return expr
