"""Weight sequences, weighted prefix densities and ideal classifiers.

For a weight sequence ``s`` with divergent partial sums the weighted upper
density of ``A`` is

    d_s(A) = limsup_k  sum(s_i : i in A, i <= k) / sum(s_i : i <= k)

Three ideals on N are handled: the finite sets (Fréchet), the summable
ideal ``{A : sum_{k in A} s_k < inf}`` and the Erdős–Ulam ideal
``{A : d_s(A) = 0}``.  Membership in the last two is undecidable in
general, so every classifier returns a ``Verdict`` that is either
*Certified* (backed by a structural argument) or *Heuristic* (backed only by
finite data, which is carried along as evidence).
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .setexpr import (
    Arithmetic, BlockUnion, Branch, Complement, Difference, Intersection, Primes,
    SetExpr, Shift, Squares, Union,
)

__all__ = [
    "WeightSeq", "DensityEstimate", "Verdict", "Side", "Certainty",
    "NumericError", "parse_weights", "psum",
    "weighted_prefix_ratio", "density_estimate",
    "classify_frechet", "classify_summable", "classify_erdos_ulam",
    "summable_ideal_reason", "summable_grill_reason",
    "erdos_ulam_ideal_reason", "erdos_ulam_grill_reason",
    "erdos_ulam_normalization_advisory", "SUMMABLE_DIVERGENCE_THRESHOLD",
    "Ideal", "parse_ideal", "classify",
]

SUMMABLE_DIVERGENCE_THRESHOLD = 50.0
BASEL = math.pi ** 2 / 6


class NumericError(ArithmeticError):
    """Raised for degenerate numerics such as an all-zero weight prefix."""


def psum(values) -> float:
    """Compensated sum of floats (exactly rounded, via ``math.fsum``)."""
    if isinstance(values, np.ndarray):
        values = values.tolist()
    return math.fsum(values)


# ---------------------------------------------------------------------------
# weights

_TAIL_KINDS = ("constant", "harmonic", "powerlaw")


@dataclass(frozen=True)
class WeightSeq:
    """Non-negative weights ``k -> s_k`` whose series diverges.

    kind is one of ``constant`` (``s_k = value``), ``harmonic`` (``1/k``),
    ``powerlaw`` (``k**-exponent`` with ``0 < exponent <= 1``) or ``table``
    (explicit head ``values`` followed by a divergent ``tail`` rule).
    """
    kind: str
    value: float = 1.0
    exponent: float = 1.0
    values: tuple = ()
    tail: Optional["WeightSeq"] = None

    def __post_init__(self):
        if self.kind == "constant":
            if not self.value > 0 or not math.isfinite(self.value):
                raise ValueError("constant weight must be a positive finite real")
        elif self.kind == "powerlaw":
            if not 0 < self.exponent <= 1:
                raise ValueError("power-law exponent must lie in (0, 1] for the series to diverge")
        elif self.kind == "table":
            vals = tuple(float(v) for v in self.values)
            if any(v < 0 or not math.isfinite(v) for v in vals):
                raise ValueError("table weights must be non-negative finite reals")
            object.__setattr__(self, "values", vals)
            if self.tail is None or self.tail.kind not in _TAIL_KINDS:
                raise ValueError("table weights need a divergent tail rule (constant, harmonic or powerlaw)")
        elif self.kind != "harmonic":
            raise ValueError(f"unknown weight kind {self.kind!r}")

    # constructors
    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=float(value))

    @classmethod
    def harmonic(cls):
        return cls("harmonic")

    @classmethod
    def powerlaw(cls, exponent):
        exponent = float(exponent)
        if exponent == 1.0:
            return cls("harmonic")
        return cls("powerlaw", exponent=exponent)

    @classmethod
    def table(cls, values, tail):
        return cls("table", values=tuple(values), tail=tail)

    @property
    def is_harmonic(self) -> bool:
        return self.kind == "harmonic"

    def __call__(self, k: int) -> float:
        if k < 1:
            raise ValueError("weights are indexed from 1")
        if self.kind == "constant":
            return self.value
        if self.kind == "harmonic":
            return 1.0 / k
        if self.kind == "powerlaw":
            return float(k) ** -self.exponent
        if k <= len(self.values):
            return self.values[k - 1]
        return self.tail(k)

    def array(self, lo: int, hi: int) -> np.ndarray:
        """Weights ``s_lo, ..., s_hi`` (inclusive) as float64."""
        if hi < lo:
            return np.zeros(0)
        if self.kind == "constant":
            return np.full(hi - lo + 1, self.value)
        if self.kind in ("harmonic", "powerlaw"):
            ks = np.arange(lo, hi + 1, dtype=np.float64)
            return 1.0 / ks if self.kind == "harmonic" else ks ** -self.exponent
        head_hi = min(hi, len(self.values))
        parts = []
        if lo <= head_hi:
            parts.append(np.array(self.values[lo - 1:head_hi]))
        if hi > len(self.values):
            parts.append(self.tail.array(max(lo, len(self.values) + 1), hi))
        return np.concatenate(parts)

    def partial_sum(self, hi: int, lo: int = 1) -> float:
        return psum(self.array(lo, hi))

    def spec(self) -> str:
        if self.kind == "constant":
            return f"constant({_fmt(self.value)})"
        if self.kind == "harmonic":
            return "harmonic"
        if self.kind == "powerlaw":
            return f"powerlaw({_fmt(self.exponent)})"
        return "table(" + ",".join(_fmt(v) for v in self.values) + ";" + self.tail.spec() + ")"

    def __str__(self):
        return self.spec()


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


_WEIGHT_RE = re.compile(r"^\s*(constant|harmonic|powerlaw|table)\s*(?:\((.*)\))?\s*$")


def parse_weights(text: str) -> WeightSeq:
    """Parse ``constant(c)``, ``harmonic``, ``powerlaw(p)`` or ``table(v1,v2,...;tail)``."""
    m = _WEIGHT_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse weight spec {text!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "harmonic":
        if arg not in (None, ""):
            raise ValueError("harmonic takes no argument")
        return WeightSeq.harmonic()
    if arg is None:
        if kind == "constant":
            return WeightSeq.constant(1.0)
        raise ValueError(f"{kind} needs an argument")
    if kind == "constant":
        return WeightSeq.constant(float(arg))
    if kind == "powerlaw":
        return WeightSeq.powerlaw(float(arg))
    head, sep, tail = arg.partition(";")
    if not sep:
        raise ValueError("table weights are written table(v1,v2,...;tail)")
    values = [float(v) for v in head.split(",") if v.strip()]
    return WeightSeq.table(values, parse_weights(tail))


def erdos_ulam_normalization_advisory(s: WeightSeq, horizon: int = 10 ** 6) -> dict:
    """Report ``s_k / sum_{i<=k} s_i`` at ``horizon``.

    The Erdős–Ulam ideal differs from the finite sets only when this ratio
    tends to 0.  The library never requires it; this is information only.
    """
    tail = s.tail if s.kind == "table" else s
    structural = tail.kind in ("harmonic", "powerlaw", "constant")
    ratio = s(horizon) / s.partial_sum(horizon)
    return {"weights": s.spec(), "horizon": horizon, "ratio_at_horizon": ratio,
            "tends_to_zero": structural}


# ---------------------------------------------------------------------------
# estimates and verdicts

class Side(str, enum.Enum):
    IN_IDEAL = "InIdeal"
    IN_GRILL = "InGrill"
    UNKNOWN = "Unknown"


class Certainty(str, enum.Enum):
    CERTIFIED = "Certified"
    HEURISTIC = "Heuristic"


@dataclass(frozen=True)
class Verdict:
    side: Side
    certainty: Certainty
    evidence: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.certainty is Certainty.CERTIFIED

    def to_dict(self):
        return {"side": self.side.value, "certainty": self.certainty.value, "evidence": self.evidence}


def _certified(side, reason, **extra):
    return Verdict(side, Certainty.CERTIFIED, {"reason": reason, **extra})


def _heuristic(side, horizon, **extra):
    return Verdict(side, Certainty.HEURISTIC, {"horizon": horizon, **extra})


@dataclass(frozen=True)
class DensityEstimate:
    horizon: int
    ratios_at_checkpoints: tuple
    running_limsup_estimate: float
    running_liminf_estimate: float
    exact: Optional[float] = None

    def ratio_at(self, k: int) -> float:
        return dict(self.ratios_at_checkpoints)[k]

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "ratios_at_checkpoints": [[k, r] for k, r in self.ratios_at_checkpoints],
            "running_limsup_estimate": self.running_limsup_estimate,
            "running_liminf_estimate": self.running_liminf_estimate,
            "exact": self.exact,
        }


def weighted_prefix_ratio(s: WeightSeq, a: SetExpr, k: int) -> float:
    """``sum(s_i : i in a, i <= k) / sum(s_i : i <= k)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    w = s.array(1, k)
    den = psum(w)
    if den <= 0:
        raise NumericError(f"all weights vanish on [1, {k}]")
    num = psum(w[a.mask(k)[1:]])
    return num / den


def _exact_density(s: WeightSeq, a: SetExpr) -> Optional[float]:
    if a.is_certified_finite:
        return 0.0
    if a.is_certified_cofinite:
        return 1.0
    if s.kind == "constant":
        if isinstance(a, Arithmetic):
            return 1.0 / a.step
        if isinstance(a, (Squares, Primes, Branch)):
            return 0.0
    return None


def density_estimate(s: WeightSeq, a: SetExpr, checkpoints: Sequence[int]) -> DensityEstimate:
    """Weighted ratios at each checkpoint plus a limsup/liminf bracket.

    The bracket is the max/min of the ratios over the last half of the
    checkpoint list (for ``L`` checkpoints, indices ``L//2`` onwards).
    """
    cps = [int(c) for c in checkpoints]
    if not cps:
        raise ValueError("need at least one checkpoint")
    if any(c < 1 for c in cps) or any(b <= a_ for a_, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be increasing naturals")
    horizon = cps[-1]
    w = s.array(1, horizon)
    mask = a.mask(horizon)[1:]
    num_parts, den_parts, ratios = [], [], []
    prev = 0
    for c in cps:
        seg_w = w[prev:c]
        den_parts.append(psum(seg_w))
        num_parts.append(psum(seg_w[mask[prev:c]]))
        den = math.fsum(den_parts)
        if den <= 0:
            raise NumericError(f"all weights vanish on [1, {c}]")
        ratios.append((c, math.fsum(num_parts) / den))
        prev = c
    window = [r for _, r in ratios[len(ratios) // 2:]]
    return DensityEstimate(horizon, tuple(ratios), max(window), min(window), _exact_density(s, a))


# ---------------------------------------------------------------------------
# structural certificates for the summable ideal

def _squares_converge(s: WeightSeq) -> bool:
    # sum over squares of s_{j^2} = sum j^(-2p): converges iff 2p > 1
    tail = s.tail if s.kind == "table" else s
    if tail.kind == "harmonic":
        return True
    if tail.kind == "powerlaw":
        return 2 * tail.exponent > 1
    return False


def summable_ideal_reason(s: WeightSeq, a: SetExpr) -> Optional[str]:
    """A structural reason why ``sum_{k in a} s_k < inf``, or None."""
    if a.is_certified_finite:
        return "finite set"
    if isinstance(a, Squares) and _squares_converge(s):
        return "comparison with sum 1/k^2 over the squares"
    if isinstance(a, Union):
        left, right = summable_ideal_reason(s, a.left), summable_ideal_reason(s, a.right)
        if left and right:
            return f"union of ideal members ({left}; {right})"
    if isinstance(a, (Intersection,)):
        r = summable_ideal_reason(s, a.left) or summable_ideal_reason(s, a.right)
        if r:
            return f"subset of an ideal member ({r})"
    if isinstance(a, Difference):
        r = summable_ideal_reason(s, a.left)
        if r:
            return f"subset of an ideal member ({r})"
    if isinstance(a, Shift):
        r = summable_ideal_reason(s, a.inner)
        if r:
            # s_{n+k} / s_n is bounded for every built-in kind
            return f"shift of an ideal member ({r})"
    return None


def _same_weights(bp, s: WeightSeq) -> bool:
    return getattr(bp, "weights", None) == s


def summable_grill_reason(s: WeightSeq, a: SetExpr) -> Optional[str]:
    """A structural reason why ``sum_{k in a} s_k = inf``, or None."""
    tail = s.tail if s.kind == "table" else s
    if s.kind == "constant" and a.is_certified_infinite:
        return "infinite set with constant positive weights"
    if a.is_certified_cofinite:
        return "cofinite set with divergent weights"
    if isinstance(a, Arithmetic):
        return "arithmetic progression: sum of s over a progression diverges for every built-in weight kind"
    if isinstance(a, Primes):
        return "primes: sum 1/p diverges (Euler), and s_p >= c/p for every built-in weight kind"
    if isinstance(a, Squares) and not _squares_converge(s) and tail.kind != "harmonic":
        return "squares with s_{j^2} >= c/j"
    if isinstance(a, BlockUnion):
        bp = a.blocks
        if (getattr(bp, "kind", None) == "summable" and bp.is_generative
                and _same_weights(bp, s) and a.index.is_certified_infinite):
            return "union over an infinite index of greedy blocks each with weight sum >= 1"
        if (getattr(bp, "kind", None) == "frechet" and bp.is_generative
                and s.kind == "constant" and a.index.is_certified_infinite):
            return "infinite union of singleton blocks with constant positive weights"
    if isinstance(a, Union):
        r = summable_grill_reason(s, a.left) or summable_grill_reason(s, a.right)
        if r:
            return f"superset of a grill member ({r})"
    if isinstance(a, Intersection):
        for x, y in ((a.left, a.right), (a.right, a.left)):
            if x.is_certified_cofinite:
                r = summable_grill_reason(s, y)
                if r:
                    return f"grill member minus a finite set ({r})"
    if isinstance(a, Difference) and a.right.is_certified_finite:
        r = summable_grill_reason(s, a.left)
        if r:
            return f"grill member minus a finite set ({r})"
    if isinstance(a, Shift):
        r = summable_grill_reason(s, a.inner)
        if r:
            return f"shift of a grill member ({r})"
    if isinstance(a, Complement):
        r = summable_ideal_reason(s, a.inner)
        if r:
            return f"complement of an ideal member ({r})"
    return None


def erdos_ulam_ideal_reason(s: WeightSeq, a: SetExpr) -> Optional[str]:
    """A structural reason why ``d_s(a) = 0``, or None."""
    exact = _exact_density(s, a)
    if exact == 0:
        return "density zero from structure"
    r = summable_ideal_reason(s, a)
    if r:
        return f"summable ideal is inside the Erdős–Ulam ideal ({r})"
    if isinstance(a, Union):
        left, right = erdos_ulam_ideal_reason(s, a.left), erdos_ulam_ideal_reason(s, a.right)
        if left and right:
            return f"union of ideal members ({left}; {right})"
    if isinstance(a, Intersection):
        r = erdos_ulam_ideal_reason(s, a.left) or erdos_ulam_ideal_reason(s, a.right)
        if r:
            return f"subset of an ideal member ({r})"
    if isinstance(a, Difference):
        r = erdos_ulam_ideal_reason(s, a.left)
        if r:
            return f"subset of an ideal member ({r})"
    if isinstance(a, Shift) and s.kind == "constant":
        r = erdos_ulam_ideal_reason(s, a.inner)
        if r:
            return f"shift of an ideal member ({r})"
    return None


def erdos_ulam_grill_reason(s: WeightSeq, a: SetExpr) -> Optional[str]:
    exact = _exact_density(s, a)
    if exact is not None and exact > 0:
        return f"density {exact:g} > 0 from structure"
    if isinstance(a, Complement):
        r = erdos_ulam_ideal_reason(s, a.inner)
        if r:
            return f"complement of an ideal member has density 1 ({r})"
    if isinstance(a, BlockUnion):
        bp = a.blocks
        if (getattr(bp, "kind", None) == "erdos_ulam" and bp.is_generative
                and _same_weights(bp, s) and a.index.is_certified_infinite):
            return "union over an infinite index of greedy blocks with prefix ratio > 1/2 at each cut"
    if isinstance(a, Union):
        return erdos_ulam_grill_reason(s, a.left) or erdos_ulam_grill_reason(s, a.right)
    if isinstance(a, Difference):
        r = erdos_ulam_ideal_reason(s, a.right) and erdos_ulam_grill_reason(s, a.left)
        if r:
            return f"grill member minus an ideal member ({r})"
    return None


# ---------------------------------------------------------------------------
# classifiers

def classify_frechet(a: SetExpr) -> Verdict:
    if a.is_certified_finite:
        return _certified(Side.IN_IDEAL, "structurally finite")
    if a.is_certified_infinite:
        return _certified(Side.IN_GRILL, "structurally infinite")
    return _heuristic(Side.UNKNOWN, a.table_horizon(),
                      note="no tail information: finiteness is not decidable from a finite table")


def _scan_limit(a: SetExpr, budget: int) -> int:
    th = a.table_horizon()
    return budget if th is None else min(budget, th)


def classify_summable(s: WeightSeq, a: SetExpr, budget: int,
                      threshold: float = SUMMABLE_DIVERGENCE_THRESHOLD) -> Verdict:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    reason = summable_ideal_reason(s, a)
    if reason:
        extra = {}
        if isinstance(a, Squares) and not a.is_certified_finite:
            extra = {"partial_sum": _set_partial_sum(s, a, budget), "scan_horizon": budget,
                     "comparison_bound": BASEL}
        return _certified(Side.IN_IDEAL, reason, **extra)
    reason = summable_grill_reason(s, a)
    if reason:
        return _certified(Side.IN_GRILL, reason)
    horizon = _scan_limit(a, budget)
    w = s.array(1, horizon) * a.mask(horizon)[1:]
    checkpoints = _log_checkpoints(horizon)
    cum = np.cumsum(w)
    trajectory = [[c, float(cum[c - 1])] for c in checkpoints]
    total = psum(w)
    side = Side.IN_GRILL if total >= threshold else Side.IN_IDEAL
    return _heuristic(side, horizon, partial_sum=total, threshold=threshold, trajectory=trajectory)


def _set_partial_sum(s, a, horizon):
    return psum(s.array(1, horizon)[a.mask(horizon)[1:]])


def _log_checkpoints(horizon: int) -> list:
    cps, c = [], 10
    while c < horizon:
        cps.append(c)
        c *= 10
    cps.append(horizon)
    return cps


def classify_erdos_ulam(s: WeightSeq, a: SetExpr, checkpoints: Sequence[int],
                        threshold: float = 0.01) -> Verdict:
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    th = a.table_horizon()
    cps = [c for c in checkpoints if th is None or c <= th]
    if not cps:
        return _heuristic(Side.UNKNOWN, th, note="table horizon is below every checkpoint")
    est = density_estimate(s, a, cps)
    trajectory = [[k, r] for k, r in est.ratios_at_checkpoints]
    if est.exact is not None:
        side = Side.IN_IDEAL if est.exact == 0 else Side.IN_GRILL
        return _certified(side, "exact density from structure", exact=est.exact, trajectory=trajectory)
    reason = erdos_ulam_ideal_reason(s, a)
    if reason:
        return _certified(Side.IN_IDEAL, reason, trajectory=trajectory)
    reason = erdos_ulam_grill_reason(s, a)
    if reason:
        return _certified(Side.IN_GRILL, reason, trajectory=trajectory)
    ratios = [r for _, r in est.ratios_at_checkpoints]
    common = dict(horizon=est.horizon, limsup_estimate=est.running_limsup_estimate,
                  liminf_estimate=est.running_liminf_estimate, threshold=threshold,
                  trajectory=trajectory)
    if est.running_limsup_estimate >= threshold:
        return Verdict(Side.IN_GRILL, Certainty.HEURISTIC, common)
    last = ratios[-3:]
    if len(last) == 3 and all(r < threshold for r in last) and last[0] > last[1] > last[2]:
        return Verdict(Side.IN_IDEAL, Certainty.HEURISTIC, common)
    return Verdict(Side.UNKNOWN, Certainty.HEURISTIC, common)


# ---------------------------------------------------------------------------
# ideal descriptors shared by the witness and convergence modules

_IDEAL_KINDS = ("frechet", "summable", "erdos_ulam")
_IDEAL_ALIASES = {"eu": "erdos_ulam", "erdos_ulam": "erdos_ulam", "summable": "summable",
                  "frechet": "frechet", "fr": "frechet"}


@dataclass(frozen=True)
class Ideal:
    """One of the three ideals handled here; ``weights`` is None for Fréchet."""
    kind: str
    weights: Optional[WeightSeq] = None

    def __post_init__(self):
        if self.kind not in _IDEAL_KINDS:
            raise ValueError(f"unknown ideal kind {self.kind!r}")
        if (self.kind == "frechet") != (self.weights is None):
            raise ValueError("Fréchet takes no weights; summable and Erdős–Ulam need them")

    @classmethod
    def frechet(cls):
        return cls("frechet")

    @classmethod
    def summable(cls, weights):
        return cls("summable", weights)

    @classmethod
    def erdos_ulam(cls, weights):
        return cls("erdos_ulam", weights)

    @classmethod
    def statistical(cls):
        """Sets of natural density zero: Erdős–Ulam with ``s = (1, 1, 1, ...)``."""
        return cls("erdos_ulam", WeightSeq.constant(1.0))

    def spec(self) -> str:
        if self.kind == "frechet":
            return "frechet"
        prefix = "eu" if self.kind == "erdos_ulam" else "summable"
        return f"{prefix}:{self.weights.spec()}"

    def __str__(self):
        return self.spec()


def parse_ideal(text: str) -> Ideal:
    """Parse ``frechet``, ``st``, ``summable:<weights>`` or ``eu:<weights>``."""
    text = text.strip()
    if text == "st":
        return Ideal.statistical()
    name, sep, rest = text.partition(":")
    kind = _IDEAL_ALIASES.get(name.strip())
    if kind is None:
        raise ValueError(f"unknown ideal {text!r}")
    if kind == "frechet":
        if sep:
            raise ValueError("frechet takes no weights")
        return Ideal.frechet()
    return Ideal(kind, parse_weights(rest) if sep else WeightSeq.constant(1.0))


def classify(ideal: Ideal, a: SetExpr, horizon: int, checkpoints: Optional[Sequence[int]] = None,
             threshold: float = 0.01) -> Verdict:
    """Dispatch to the classifier matching ``ideal``."""
    if ideal.kind == "frechet":
        return classify_frechet(a)
    if ideal.kind == "summable":
        return classify_summable(ideal.weights, a, horizon)
    return classify_erdos_ulam(ideal.weights, a, checkpoints or _log_checkpoints(horizon), threshold)
