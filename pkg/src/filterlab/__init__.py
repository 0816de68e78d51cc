"""Filters, ideals and densities on the natural numbers.

Modules:

``setexpr``
    lazy structured subsets of N and their text form
``density``
    weight sequences, weighted densities and ideal classifiers
``witness``
    greedy block partitions, conglomeration checks, almost-disjoint families
``convergence``
    filter limits of sequences and the coin-flip experiment
``ultralab``
    exhaustive checks on finite universes
"""
__version__ = "0.1.0"

from .setexpr import (
    SetExpr, Finite, Cofinite, Arithmetic, Squares, Primes, BlockUnion, Union,
    Intersection, Difference, Complement, Shift, FromPredicateTable, Branch,
    BitSource, parse_set_expr, contains, members_upto, shift_set,
    intersection_count_upto, almost_disjoint_report,
)
from .density import (
    WeightSeq, DensityEstimate, Verdict, Ideal, parse_weights, parse_ideal,
    weighted_prefix_ratio, density_estimate, classify, classify_frechet,
    classify_summable, classify_erdos_ulam,
)
from .witness import (
    BlockPartition, WitnessReport, CapExceeded, frechet_blocks, summable_blocks,
    erdos_ulam_blocks, union_over_index, verify_conglomeration, ad_family_member,
    ad_family_branch, ad_family_pairwise_check,
)
from .convergence import (
    SeqExpr, parse_seq_expr, eval_seq, f_limit_check, statistical_limit_search,
    slln_experiment, LimitReport,
)

__all__ = [
    "SetExpr",
    "Finite",
    "Cofinite",
    "Arithmetic",
    "Squares",
    "Primes",
    "BlockUnion",
    "Union",
    "Intersection",
    "Difference",
    "Complement",
    "Shift",
    "FromPredicateTable",
    "Branch",
    "BitSource",
    "parse_set_expr",
    "contains",
    "members_upto",
    "shift_set",
    "intersection_count_upto",
    "almost_disjoint_report",
    "WeightSeq",
    "DensityEstimate",
    "Verdict",
    "Ideal",
    "parse_weights",
    "parse_ideal",
    "weighted_prefix_ratio",
    "density_estimate",
    "classify",
    "classify_frechet",
    "classify_summable",
    "classify_erdos_ulam",
    "BlockPartition",
    "WitnessReport",
    "CapExceeded",
    "frechet_blocks",
    "summable_blocks",
    "erdos_ulam_blocks",
    "union_over_index",
    "verify_conglomeration",
    "ad_family_member",
    "ad_family_branch",
    "ad_family_pairwise_check",
    "SeqExpr",
    "parse_seq_expr",
    "eval_seq",
    "f_limit_check",
    "statistical_limit_search",
    "slln_experiment",
    "LimitReport",
]
