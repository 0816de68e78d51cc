"""Filter limits of real sequences and the coin-flip Cesàro experiment.

A sequence ``x`` converges to ``c`` along the dual filter of an ideal ``I``
when every exception set ``E_eps = {n : |x_n - c| >= eps}`` lies in ``I``.
``f_limit_check`` builds those exception sets, structurally where it can,
and hands them to the density classifiers.  Structural exception sets are
available when ``x`` takes finitely many values on structured pieces (for
example ``piecewise(squares, const(1), const(0))``) or when ``x`` has a
known limit ``L`` with a rate bound ``|x_n - L| <= C/n`` (``harmonic``,
constants, and sums, products and affine images of these).  Everything
else falls back to a table of the first ``horizon`` terms, which only
supports heuristic verdicts.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .density import (
    Certainty, Ideal, Side, WeightSeq, classify, density_estimate,
)
from .setexpr import (
    EMPTY, NATURALS, Arithmetic, Cofinite, Complement, Difference, Finite,
    FromPredicateTable, HorizonError, Intersection, ParseError, SetExpr, Union,
    _Parser,
)

__all__ = [
    "SeqExpr", "Const", "IndicatorOf", "HarmonicSeq", "Alternating", "Affine",
    "Sum", "Product", "PiecewiseBySet", "SeqTable",
    "eval_seq", "parse_seq_expr", "exception_set",
    "LimitConfig", "LimitReport", "f_limit_check", "statistical_limit_search",
    "SllnReport", "slln_experiment", "PRNG_NAME",
]

PRNG_NAME = "PCG64"

# a piecewise description with more pieces than this is not worth building
MAX_PIECES = 64
# rate-bound exception sets are materialised only up to this index
MAX_TAIL_SCAN = 10 ** 7


class SeqExpr:
    """Base class of sequence expressions ``n -> x_n`` for ``n >= 1``."""

    def __call__(self, n: int) -> float:
        return eval_seq(self, n)

    def values(self, horizon: int) -> np.ndarray:
        """``x_1 .. x_horizon`` as a float array (index ``i`` holds ``x_{i+1}``)."""
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        return self._values(int(horizon))

    def table_horizon(self) -> Optional[int]:
        hs = [h for h in (c.table_horizon() for c in self.children()) if h is not None]
        return min(hs) if hs else None

    def children(self) -> tuple:
        return ()

    # structural hooks; None means "no structure known"
    def _pieces(self):
        return None

    def _rate(self):
        return None

    def __str__(self):
        return self.to_dsl()


def _set_horizon(s: SetExpr) -> Optional[int]:
    return s.table_horizon()


@dataclass(frozen=True)
class Const(SeqExpr):
    value: float

    def _eval(self, n):
        return float(self.value)

    def _values(self, h):
        return np.full(h, float(self.value))

    def _pieces(self):
        return [(NATURALS, float(self.value))]

    def _rate(self):
        return float(self.value), 0.0

    def to_dsl(self):
        return f"const({_num(self.value)})"


@dataclass(frozen=True)
class IndicatorOf(SeqExpr):
    set: SetExpr

    def table_horizon(self):
        return _set_horizon(self.set)

    def _eval(self, n):
        return 1.0 if self.set.contains(n) else 0.0

    def _values(self, h):
        return self.set.mask(h)[1:].astype(float)

    def _pieces(self):
        return [(self.set, 1.0), (Complement(self.set), 0.0)]

    def to_dsl(self):
        return f"indicator({self.set.to_dsl()})"


@dataclass(frozen=True)
class HarmonicSeq(SeqExpr):
    """``x_n = 1/n``."""

    def _eval(self, n):
        return 1.0 / n

    def _values(self, h):
        return 1.0 / np.arange(1, h + 1, dtype=float)

    def _rate(self):
        return 0.0, 1.0

    def to_dsl(self):
        return "harmonic"


@dataclass(frozen=True)
class Alternating(SeqExpr):
    """``x_n = (-1)**n``: -1 on odd ``n``, +1 on even ``n``."""

    def _eval(self, n):
        return 1.0 if n % 2 == 0 else -1.0

    def _values(self, h):
        v = -np.ones(h)
        v[1::2] = 1.0
        return v

    def _pieces(self):
        return [(Arithmetic(2, 2), 1.0), (Arithmetic(1, 2), -1.0)]

    def to_dsl(self):
        return "alt"


@dataclass(frozen=True)
class Affine(SeqExpr):
    """``a * inner + b``."""
    a: float
    b: float
    inner: SeqExpr

    def children(self):
        return (self.inner,)

    def _eval(self, n):
        return self.a * self.inner._eval(n) + self.b

    def _values(self, h):
        return self.a * self.inner._values(h) + self.b

    def _pieces(self):
        p = self.inner._pieces()
        return None if p is None else [(s, self.a * v + self.b) for s, v in p]

    def _rate(self):
        r = self.inner._rate()
        return None if r is None else (self.a * r[0] + self.b, abs(self.a) * r[1])

    def to_dsl(self):
        return f"affine({_num(self.a)},{_num(self.b)},{self.inner.to_dsl()})"


def _meet(a: SetExpr, b: SetExpr) -> SetExpr:
    if a == NATURALS:
        return b
    if b == NATURALS:
        return a
    return Intersection(a, b)


def _minus(a: SetExpr, b: SetExpr) -> SetExpr:
    return Complement(b) if a == NATURALS else Difference(a, b)


def _combine(p, q, op):
    if p is None or q is None or len(p) * len(q) > MAX_PIECES:
        return None
    return [(_meet(s, t), op(u, v)) for s, u in p for t, v in q]


@dataclass(frozen=True)
class Sum(SeqExpr):
    left: SeqExpr
    right: SeqExpr

    def children(self):
        return (self.left, self.right)

    def _eval(self, n):
        return self.left._eval(n) + self.right._eval(n)

    def _values(self, h):
        return self.left._values(h) + self.right._values(h)

    def _pieces(self):
        return _combine(self.left._pieces(), self.right._pieces(), lambda u, v: u + v)

    def _rate(self):
        r, q = self.left._rate(), self.right._rate()
        if r is None or q is None:
            return None
        return r[0] + q[0], r[1] + q[1]

    def to_dsl(self):
        return f"sum({self.left.to_dsl()},{self.right.to_dsl()})"


@dataclass(frozen=True)
class Product(SeqExpr):
    left: SeqExpr
    right: SeqExpr

    def children(self):
        return (self.left, self.right)

    def _eval(self, n):
        return self.left._eval(n) * self.right._eval(n)

    def _values(self, h):
        return self.left._values(h) * self.right._values(h)

    def _pieces(self):
        return _combine(self.left._pieces(), self.right._pieces(), lambda u, v: u * v)

    def _rate(self):
        r, q = self.left._rate(), self.right._rate()
        if r is None or q is None:
            return None
        (l1, c1), (l2, c2) = r, q
        # |xy - l1 l2| <= |x| |y - l2| + |l2| |x - l1|  with  |x| <= |l1| + c1
        return l1 * l2, (abs(l1) + c1) * c2 + abs(l2) * c1

    def to_dsl(self):
        return f"prod({self.left.to_dsl()},{self.right.to_dsl()})"


@dataclass(frozen=True)
class PiecewiseBySet(SeqExpr):
    """``on`` at members of ``set``, ``off`` elsewhere."""
    set: SetExpr
    on: SeqExpr
    off: SeqExpr

    def children(self):
        return (self.on, self.off)

    def table_horizon(self):
        hs = [h for h in (_set_horizon(self.set), super().table_horizon()) if h is not None]
        return min(hs) if hs else None

    def _eval(self, n):
        return self.on._eval(n) if self.set.contains(n) else self.off._eval(n)

    def _values(self, h):
        return np.where(self.set.mask(h)[1:], self.on._values(h), self.off._values(h))

    def _pieces(self):
        p, q = self.on._pieces(), self.off._pieces()
        if p is None or q is None or len(p) + len(q) > MAX_PIECES:
            return None
        return ([(_meet(self.set, s), v) for s, v in p]
                + [(_minus(t, self.set), v) for t, v in q])

    def to_dsl(self):
        return f"piecewise({self.set.to_dsl()},{self.on.to_dsl()},{self.off.to_dsl()})"


@dataclass(frozen=True)
class SeqTable(SeqExpr):
    """Finitely many terms ``x_1 .. x_horizon``; queries past the end are refused."""
    data: tuple
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.data)
        if not vals:
            raise ValueError("a sequence table needs at least one value")
        object.__setattr__(self, "data", vals)

    @property
    def horizon(self) -> int:
        return len(self.data)

    def table_horizon(self):
        return self.horizon

    def _eval(self, n):
        if n > self.horizon:
            raise HorizonError(f"sequence table knows {self.horizon} terms, asked for term {n}")
        return self.data[n - 1]

    def _values(self, h):
        if h > self.horizon:
            raise HorizonError(f"sequence table knows {self.horizon} terms, asked for {h}")
        return np.array(self.data[:h])

    @classmethod
    def load(cls, path: str) -> "SeqTable":
        """Read a JSON array or whitespace/comma separated numbers."""
        text = Path(path).read_text()
        if text.lstrip().startswith("["):
            values = json.loads(text)
        else:
            values = [float(t) for t in re.split(r"[\s,]+", text.strip()) if t]
        return cls(tuple(values), source=str(path))

    def to_dsl(self):
        if self.source is None:
            raise ValueError("an in-memory sequence table has no text form")
        return f"table({self.source})"


def _num(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def eval_seq(x: SeqExpr, n: int) -> float:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"sequence index must be a natural >= 1, got {n!r}")
    return x._eval(int(n))


# ---------------------------------------------------------------------------
# text form

_SEQ_KEYWORDS = ("const", "indicator", "piecewise", "affine", "sum", "prod", "table")


class _SeqParser(_Parser):
    def __init__(self, text, tables, blocks=None):
        super().__init__(text, blocks)
        self.tables = tables

    def real(self):
        tok = self.next()
        if tok.kind != "num":
            raise ParseError(f"expected a number, found {tok.text or 'end of input'!r}", tok.offset)
        value = float(tok.text)
        if not math.isfinite(value):
            raise ParseError(f"number {tok.text} is not finite", tok.offset)
        return value

    def parse_seq(self) -> SeqExpr:
        tok = self.next()
        word = tok.text
        if tok.kind != "name":
            raise ParseError(f"expected a sequence expression, found {word or 'end of input'!r}", tok.offset)
        if word == "harmonic":
            return HarmonicSeq()
        if word == "alt":
            return Alternating()
        if word not in _SEQ_KEYWORDS:
            raise ParseError(f"unknown sequence keyword {word!r}", tok.offset)
        self.expect("(")
        if word == "const":
            out = Const(self.real())
        elif word == "indicator":
            out = IndicatorOf(self.parse_set())
        elif word == "piecewise":
            s = self.parse_set()
            self.expect(",")
            on = self.parse_seq()
            self.expect(",")
            out = PiecewiseBySet(s, on, self.parse_seq())
        elif word == "affine":
            a = self.real()
            self.expect(",")
            b = self.real()
            self.expect(",")
            out = Affine(a, b, self.parse_seq())
        elif word in ("sum", "prod"):
            left = self.parse_seq()
            self.expect(",")
            out = (Sum if word == "sum" else Product)(left, self.parse_seq())
        elif word == "table":
            ref = self.next()
            if ref.offset not in self.tables:
                raise ParseError("expected a file path", ref.offset)
            path = self.tables[ref.offset]
            try:
                out = SeqTable.load(path)
            except (OSError, ValueError) as exc:
                raise ParseError(f"cannot read sequence table {path!r}: {exc}", ref.offset) from None
        self.expect(")")
        return out


_SEQ_TABLE = re.compile(r"\btable\(\s*([^(),]+?)\s*\)")


def parse_seq_expr(text: str, blocks=None) -> SeqExpr:
    """Parse the sequence DSL (``const``, ``indicator``, ``piecewise``, ``harmonic``, ``alt``,
    ``affine``, ``sum``, ``prod``, ``table(path)``)."""
    # file paths are not tokens of the set grammar; mask each path with an
    # identifier of the same byte length so error offsets stay valid
    tables = {}
    pieces, last = [], 0
    for m in _SEQ_TABLE.finditer(text):
        path = m.group(1)
        offset = len(text[:m.start(1)].encode())
        tables[offset] = path
        pieces.append(text[last:m.start(1)])
        pieces.append("_" * len(path.encode()))
        last = m.end(1)
    pieces.append(text[last:])
    masked = "".join(pieces)
    p = _SeqParser(masked, tables, blocks)
    expr = p.parse_seq()
    p.done()
    return expr


# ---------------------------------------------------------------------------
# exception sets

def _union_all(sets):
    sets = list(sets)
    if not sets:
        return EMPTY
    out = sets[0]
    for s in sets[1:]:
        out = Union(out, s)
    return out


def _from_rate(x: SeqExpr, c: float, eps: float) -> Optional[SetExpr]:
    rate = x._rate()
    if rate is None:
        return None
    limit, const = rate
    gap = abs(limit - c)
    if gap == eps:
        return None
    if const == 0:
        return EMPTY if gap < eps else NATURALS
    bound = const / abs(eps - gap)
    if bound > MAX_TAIL_SCAN:
        return None
    # one extra term guards against rounding in the bound itself
    upto = int(math.floor(bound)) + 1
    if upto < 1:
        return EMPTY if gap < eps else NATURALS
    flags = np.abs(x._values(upto) - c) >= eps
    members = tuple(int(i) + 1 for i in np.flatnonzero(flags))
    if gap < eps:
        # past the bound every term is within eps of c
        return Finite(members)
    excluded = tuple(int(i) + 1 for i in np.flatnonzero(~flags))
    return Cofinite(excluded)


def exception_set(x: SeqExpr, c: float, eps: float) -> Optional[SetExpr]:
    """``{n : |x_n - c| >= eps}`` as a structured set, or None when no structure is known."""
    pieces = x._pieces()
    if pieces is not None:
        hit = [s for s, v in pieces if abs(v - c) >= eps]
        if len(hit) == len(pieces):
            return NATURALS
        return _union_all(hit)
    found = _from_rate(x, c, eps)
    if found is not None:
        return found
    if isinstance(x, PiecewiseBySet):
        on, off = exception_set(x.on, c, eps), exception_set(x.off, c, eps)
        if on is not None and off is not None:
            return Union(Intersection(x.set, on), Difference(off, x.set))
    return None


# ---------------------------------------------------------------------------
# limit checks

CONVERGES_CERTIFIED = "ConvergesCertified"
CONVERGES_EMPIRICAL = "ConvergesEmpirical"
DIVERGES_EMPIRICAL = "DivergesEmpirical"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class LimitConfig:
    horizon: int = 10 ** 6
    checkpoints: Optional[tuple] = None
    threshold: float = 0.01

    def resolved_checkpoints(self, horizon: Optional[int] = None) -> list:
        h = horizon or self.horizon
        if self.checkpoints:
            return [c for c in self.checkpoints if c <= h] or [h]
        cps, c = [], 10
        while c < h:
            cps.append(c)
            c *= 10
        return cps + [h]


@dataclass(frozen=True)
class LimitReport:
    candidate: Optional[float]
    epsilons: tuple
    exception_density_per_epsilon: tuple
    verdict: str
    exception_sets: tuple = ()
    verdicts_per_epsilon: tuple = ()

    def to_dict(self):
        return {
            "candidate": self.candidate,
            "epsilons": list(self.epsilons),
            "exception_density_per_epsilon": [d.to_dict() for d in self.exception_density_per_epsilon],
            "exception_sets": list(self.exception_sets),
            "verdicts_per_epsilon": [v.to_dict() for v in self.verdicts_per_epsilon],
            "verdict": self.verdict,
        }


def _describe(e: SetExpr) -> str:
    if isinstance(e, FromPredicateTable):
        return f"table up to {e.horizon}"
    return e.to_dsl()


def f_limit_check(x: SeqExpr, candidate: float, ideal: Ideal, epsilons: Sequence[float],
                  config: LimitConfig = LimitConfig()) -> LimitReport:
    """Classify each exception set ``E_eps`` in ``ideal`` and aggregate.

    ``ConvergesCertified`` needs every ``E_eps`` certified in the ideal; any
    ``E_eps`` found in the grill (certified or not) gives ``DivergesEmpirical``.
    """
    eps = [float(e) for e in epsilons]
    if not eps or any(e <= 0 for e in eps):
        raise ValueError("epsilons must be positive")
    if any(b > a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be decreasing")
    horizon = config.horizon
    th = x.table_horizon()
    if th is not None:
        horizon = min(horizon, th)
    checkpoints = config.resolved_checkpoints(horizon)
    weights = ideal.weights or WeightSeq.constant(1.0)
    estimates, verdicts, described = [], [], []
    values = None
    for e in eps:
        E = exception_set(x, candidate, e)
        if E is None:
            if values is None:
                values = x.values(horizon)
            E = FromPredicateTable.from_bools(np.abs(values - candidate) >= e)
        estimates.append(density_estimate(weights, E, checkpoints))
        verdicts.append(classify(ideal, E, horizon, checkpoints, config.threshold))
        described.append(_describe(E))
    if all(v.side is Side.IN_IDEAL and v.certainty is Certainty.CERTIFIED for v in verdicts):
        verdict = CONVERGES_CERTIFIED
    elif any(v.side is Side.IN_GRILL for v in verdicts):
        verdict = DIVERGES_EMPIRICAL
    elif all(v.side is Side.IN_IDEAL for v in verdicts):
        verdict = CONVERGES_EMPIRICAL
    else:
        verdict = UNKNOWN
    return LimitReport(candidate, tuple(eps), tuple(estimates), verdict, tuple(described), tuple(verdicts))


def statistical_limit_search(x: SeqExpr, horizon: int, grid: float,
                             tolerance: Optional[float] = None) -> Optional[float]:
    """Grid search for a statistical limit.

    Values are binned to the nearest multiple of ``grid``.  The candidate is
    the centre of the most populated bin, provided the terms outside it make
    up less than ``tolerance`` (default ``grid``) of the first ``horizon``
    terms; the candidate must then also pass ``f_limit_check`` with
    ``eps = grid`` along the statistical filter.
    """
    if horizon < 10 ** 3:
        raise ValueError("horizon must be at least 1000")
    if grid <= 0:
        raise ValueError("grid must be positive")
    tol = grid if tolerance is None else tolerance
    v = x.values(horizon)
    if not np.all(np.isfinite(v)):
        return None
    bins = np.rint(v / grid).astype(np.int64)
    uniq, counts = np.unique(bins, return_counts=True)
    best = int(np.argmax(counts))
    if (horizon - counts[best]) / horizon >= tol:
        return None
    candidate = float(uniq[best]) * grid
    report = f_limit_check(x, candidate, Ideal.statistical(), [grid],
                           LimitConfig(horizon=horizon, threshold=min(tol, 0.5)))
    if report.verdict in (CONVERGES_CERTIFIED, CONVERGES_EMPIRICAL):
        return candidate
    return None


# ---------------------------------------------------------------------------
# coin flips

@dataclass(frozen=True)
class SllnReport:
    n_prefix: int
    trials: int
    seed: int
    per_trial_final_means: tuple
    grand_mean: float
    max_abs_deviation_from_half: float
    rms_deviation_from_half: float
    prng: str = PRNG_NAME

    def to_dict(self):
        d = asdict(self)
        d["per_trial_final_means"] = list(self.per_trial_final_means)
        return d


def _trial_mean(n_prefix: int, seed: int, trial: int) -> float:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))
    hits, left = 0, n_prefix
    while left:
        take = min(left, 1 << 22)
        hits += int(np.count_nonzero(rng.integers(0, 2, size=take, dtype=np.uint8)))
        left -= take
    return hits / n_prefix


def slln_experiment(n_prefix: int, trials: int, seed: int) -> SllnReport:
    """Cesàro means of independent fair coin flips on ``[1, n_prefix]``.

    Trial ``t`` draws from PCG64 seeded with ``SeedSequence([seed, t])``, so
    each trial is reproducible on its own and the order of evaluation does
    not matter.
    """
    if n_prefix < 1 or trials < 1:
        raise ValueError("n_prefix and trials must be >= 1")
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    means = [_trial_mean(n_prefix, seed, t) for t in range(trials)]
    dev = [m - 0.5 for m in means]
    return SllnReport(
        n_prefix=n_prefix, trials=trials, seed=seed,
        per_trial_final_means=tuple(means),
        grand_mean=math.fsum(means) / trials,
        max_abs_deviation_from_half=max(abs(d) for d in dev),
        rms_deviation_from_half=math.sqrt(math.fsum(d * d for d in dev) / trials),
    )
