"""Exact solver for minimum market-clearing prices with payment frictions.

An ascending auction over combinatorial markets whose buyers have
substitutes valuations and pay through buyer-and-good specific
piecewise-linear payment functions.  Prices rise along exactly computed
rational directions until no set of goods is over-demanded; the clearing
allocation is then recovered from the demand structure.  All arithmetic is
exact (rationals plus a symbolic two-tier scalar), so results are
reproducible bit for bit.
"""

from .allocation import compute_allocation
from .auction import AuctionTrace, IterationRecord, classify_event, next_event, run_auction
from .direction import (
    DemandSideData,
    Direction,
    compute_direction,
    separable_direction,
    stability_certificate,
)
from .exactnum import LexScalar, Rat, lex_compare, lex_from_slope, lex_sum, rat, rat_str
from .lyapunov import (
    SeparableFrictions,
    check_translation_submodularity,
    detect_frictions,
    directional_derivative,
    eval_lyapunov,
    eval_scaled_lyapunov,
)
from .market import (
    Buyer,
    DemandFamily,
    MarketInstance,
    PiecewisePayment,
    Valuation,
    demand,
    dump_instance,
    is_equilibrium_price,
    load_instance,
    minimal_overdemanded_set,
    overdemand,
    rank_of_demand,
    requirement,
    underdemand,
    utility,
)
from .oracle import (
    OracleBudget,
    brute_equilibrium_allocations,
    brute_minimum_equilibrium_frictionless,
    brute_p2_optimum,
)
from .polymatroid import RankOracle, greedy_max

__all__ = [
    "AuctionTrace",
    "Buyer",
    "DemandFamily",
    "DemandSideData",
    "Direction",
    "IterationRecord",
    "LexScalar",
    "MarketInstance",
    "OracleBudget",
    "PiecewisePayment",
    "Rat",
    "RankOracle",
    "SeparableFrictions",
    "Valuation",
    "brute_equilibrium_allocations",
    "brute_minimum_equilibrium_frictionless",
    "brute_p2_optimum",
    "check_translation_submodularity",
    "classify_event",
    "compute_allocation",
    "compute_direction",
    "demand",
    "detect_frictions",
    "directional_derivative",
    "dump_instance",
    "eval_lyapunov",
    "eval_scaled_lyapunov",
    "greedy_max",
    "is_equilibrium_price",
    "lex_compare",
    "lex_from_slope",
    "lex_sum",
    "load_instance",
    "minimal_overdemanded_set",
    "next_event",
    "overdemand",
    "rank_of_demand",
    "rat",
    "rat_str",
    "requirement",
    "run_auction",
    "separable_direction",
    "stability_certificate",
    "underdemand",
    "utility",
]
