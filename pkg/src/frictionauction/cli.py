"""Operator command line: solve, trace, verify, certify-direction.

Exit codes: 0 success, 2 schema/validation problems (including oracle
budget refusals), 3 iteration-cap diagnostics, 4 a failed check with a
counterexample, 5 direction support mismatch in certify-direction.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from itertools import combinations

from .allocation import compute_allocation
from .auction import run_auction
from .direction import (
    DemandSideData,
    Direction,
    compute_direction,
    perturbed_demand_oracle,
    stability_certificate,
)
from .errors import (
    BudgetExceededError,
    InvalidInputError,
    NonterminationError,
)
from .exactnum import rat, rat_str
from .market import (
    MarketInstance,
    is_equilibrium_price,
    load_instance,
    minimal_overdemanded_from_ranks,
    price_state,
)
from .oracle import OracleBudget, brute_equilibrium_allocations
from .properties import (
    check_demand_monotonicity,
    check_no_underdemand,
    check_rank_requirement_monotonicity,
    check_single_swap_property,
    check_trace_shape,
)

__all__ = ["main"]


def _read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_market(data: dict) -> MarketInstance:
    return load_instance(data)


def cmd_solve(args) -> int:
    data = _read_json(args.input)
    inst = _load_market(data)
    trace = run_auction(inst, args.cap)
    allocation = compute_allocation(inst, trace.final_price)
    if args.format == "json":
        payload = {
            "final_price": [rat_str(p) for p in trace.final_price],
            "allocation": [list(x) for x in allocation],
            "iterations": len(trace.iterations),
            "events": trace.event_counts(),
        }
        print(json.dumps(payload, indent=2))
    else:
        print("final price:", " ".join(rat_str(p) for p in trace.final_price))
        for i, bundle in enumerate(allocation):
            print(f"buyer {i}: {list(bundle)}")
        print("iterations:", len(trace.iterations))
    return 0


def cmd_trace(args) -> int:
    data = _read_json(args.input)
    inst = _load_market(data)
    trace = run_auction(inst, args.cap)
    if args.format == "json":
        for record in trace.iterations:
            print(json.dumps(record.to_json()))
        print(json.dumps({"final_price": [rat_str(p) for p in trace.final_price]}))
    else:
        for record in trace.iterations:
            price = " ".join(rat_str(p) for p in record.price_before)
            direction = " ".join(rat_str(d) for d in record.direction)
            print(
                f"p=({price}) support={list(record.support)} d=({direction}) "
                f"step={rat_str(record.step)} event={record.event} "
                f"potential={record.potential}"
            )
        print("final price:", " ".join(rat_str(p) for p in trace.final_price))
    return 0


def _verify_checks(inst: MarketInstance, budget: OracleBudget, cap):
    """Yield (name, ok, detail) for the full verification battery."""
    rng = random.Random(20240901)
    vmax = max(
        (v for buyer in inst.buyers for v in buyer.valuation.table.values()),
        default=Fraction(1),
    )
    pairs = []
    for _ in range(8):
        lo = tuple(Fraction(rng.randint(0, int(vmax) + 1)) for _ in range(inst.m))
        hi = tuple(v + Fraction(rng.randint(0, 2)) for v in lo)
        pairs.append((lo, hi))

    for lo, hi in pairs:
        ok, detail = check_demand_monotonicity(inst, lo, hi)
        yield "demand monotonicity", ok, detail
        ok, detail = check_rank_requirement_monotonicity(inst, lo, hi)
        yield "rank/requirement monotonicity", ok, detail
        ok, detail = check_single_swap_property(inst, lo)
        yield "single swap property", ok, detail

    trace = run_auction(inst, cap)
    yield "auction terminated", True, None
    price = inst.zero_price()
    for record in trace.iterations:
        ok, detail = check_no_underdemand(inst, record.price_before)
        yield "no under-demanded set", ok, detail
        price = record.price_before
    ok, detail = check_trace_shape(inst, trace)
    yield "trace shape/potential", ok, detail
    ok, witness = is_equilibrium_price(inst, trace.final_price)
    yield "final price clears the market", ok, witness

    # duality and the stability certificate are asserted inside every
    # direction solve; re-run one solve explicitly so failures surface here
    compute_direction(DemandSideData.from_market(inst, inst.zero_price()))
    yield "duality and stability certificate", True, None

    allocation = compute_allocation(inst, trace.final_price)
    try:
        all_allocs = brute_equilibrium_allocations(inst, trace.final_price, budget)
    except BudgetExceededError:
        raise
    yield "allocation in the exhaustive set", allocation in all_allocs, allocation


def cmd_verify(args) -> int:
    data = _read_json(args.input)
    inst = _load_market(data)
    budget = OracleBudget(
        max_lattice_points=args.budget_points,
        max_tuples=args.budget_points,
    )
    failures = 0
    seen = set()
    for name, ok, detail in _verify_checks(inst, budget, args.cap):
        if name not in seen or not ok:
            status = "pass" if ok else "FAIL"
            print(f"[{status}] {name}")
            seen.add(name)
        if not ok:
            print(json.dumps({"check": name, "counterexample": repr(detail)}))
            failures += 1
            return 4
    return 0


def _certify_side(data: dict):
    if "families" in data:
        side = DemandSideData.from_families(
            data["supply"], data["families"], data["slopes"]
        )
        return side
    inst = _load_market(data)
    price = tuple(rat(p) for p in data["price"])
    return DemandSideData.from_market(inst, price)


def cmd_certify(args) -> int:
    data = _read_json(args.input)
    side = _certify_side(data)
    direction = tuple(rat(v) for v in data["direction"])
    if len(direction) != side.m or any(v < 0 for v in direction):
        raise InvalidInputError("direction must be a nonnegative vector over goods")
    support = frozenset(j for j, v in enumerate(direction) if v > 0)

    ranks = [buyer.rank for buyer in side.buyers]
    target = minimal_overdemanded_from_ranks(ranks, side.supply)
    if support != target:
        print(f"direction support: {sorted(support)}")
        print(f"minimal over-demanded set: {sorted(target)}")
        return 5

    perturbed = [
        perturbed_demand_oracle(
            side.buyers[i].rank,
            support,
            {j: side.buyers[i].slopes[j] * direction[j] for j in support},
        )
        for i in range(side.n)
    ]
    members = sorted(support)
    print("perturbed rank objective by subset of the support:")
    for size in range(len(members) + 1):
        for combo in combinations(members, size):
            rest = [j for j in members if j not in combo]
            value = sum(side.supply[j] for j in combo) + sum(
                o.rank(rest) for o in perturbed
            )
            print(f"  X={list(combo)}: {value}")
    ok, witness = stability_certificate(perturbed, support, side.supply)
    if ok:
        print("PASS: the direction keeps the support stable")
        return 0
    print(f"FAIL: witness X={sorted(witness)}")
    return 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frictionauction",
        description=(
            "Exact ascending-auction solver for minimum market-clearing "
            "prices under piecewise-linear payment frictions"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("solve", cmd_solve),
        ("trace", cmd_trace),
        ("verify", cmd_verify),
        ("certify-direction", cmd_certify),
    ):
        p = sub.add_parser(name)
        p.add_argument("input", help="instance file (JSON)")
        p.add_argument("--format", choices=("json", "table"), default="table")
        p.add_argument("--cap", type=int, default=None, help="iteration cap override")
        p.add_argument(
            "--budget-points",
            type=int,
            default=1_000_000,
            help="enumeration budget for brute-force cross checks",
        )
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceededError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except NonterminationError as exc:
        print(f"iteration cap hit: {exc}", file=sys.stderr)
        if exc.trace is not None:
            print(exc.trace.to_json_str(), file=sys.stderr)
        return 3
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"malformed instance file: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
