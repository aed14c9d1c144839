"""Potential functions for the auction dynamics.

For identity payments the classic potential (indirect utilities plus
revenue at posted prices) decreases along the auction and is minimized
exactly at equilibrium prices.  When marginal payments factor into a
buyer coefficient times a good coefficient, a scaled variant with the
same role exists: buyer terms use valuations divided by the buyer
coefficient and effective prices scaled by the good coefficient.

The scaled potential satisfies translation submodularity with respect to
the elementwise inverse of the good coefficients (but in general not with
respect to the all-ones vector), and its one-sided derivative along the
scaled indicator of a good set equals minus the over-demand of that set.
All evaluation is exact; derivative step sizes come from the auction's
event machinery, never from limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .auction import first_change_step
from .direction import Direction, detect_separable
from .errors import NotSeparableError, WrongModeError
from .exactnum import rat
from .market import MarketInstance, PiecewisePayment, overdemand, price_state

__all__ = [
    "SeparableFrictions",
    "detect_frictions",
    "eval_lyapunov",
    "eval_scaled_lyapunov",
    "directional_derivative",
    "check_translation_submodularity",
]


@dataclass(frozen=True)
class SeparableFrictions:
    """Buyer-by-good factorization of the marginal payments.

    ``alpha[i] * beta[j](p_j)`` must equal the right derivative of buyer
    ``i``'s payment for good ``j`` at every price where the factorization
    is used; :meth:`validate_at` enforces this exactly.
    """

    alpha: tuple
    beta: tuple  # one callable price -> positive rational per good

    def beta_at(self, price) -> tuple:
        return tuple(b(p) for b, p in zip(self.beta, price))

    def validate_at(self, inst: MarketInstance, price) -> None:
        beta = self.beta_at(price)
        for i in range(inst.n):
            for j in range(inst.m):
                actual = inst.buyers[i].payments[j].right_slope(price[j])
                if actual != self.alpha[i] * beta[j]:
                    raise NotSeparableError(
                        f"slope of buyer {i}, good {j} at price {price[j]} is "
                        f"{actual}, not alpha*beta = {self.alpha[i] * beta[j]}"
                    )


def detect_frictions(inst: MarketInstance, price) -> SeparableFrictions:
    """Factor the slope matrix at ``price`` with the first buyer scaled to 1.

    The good coefficients are read off the first buyer's payment slopes as
    functions of price, so the result stays valid at other prices exactly
    when the instance is separable there (checked on use).
    """
    state = price_state(inst, price)
    factored = detect_separable(state.slopes)
    if factored is None:
        raise NotSeparableError("slope matrix is not buyer-by-good separable")
    alpha, _ = factored

    def beta_fn(payment: PiecewisePayment, a0: Fraction) -> Callable:
        return lambda p: payment.right_slope(p) / a0

    beta = tuple(
        beta_fn(inst.buyers[0].payments[j], alpha[0]) for j in range(inst.m)
    )
    return SeparableFrictions(tuple(alpha), beta)


def _indirect_utility(inst: MarketInstance, i: int, effective_prices) -> Fraction:
    best = None
    for x, value in inst.buyers[i].valuation.table.items():
        u = value
        for j in range(inst.m):
            if x[j]:
                u -= effective_prices[j] * x[j]
        if best is None or u > best:
            best = u
    return best


def eval_lyapunov(inst: MarketInstance, price) -> Fraction:
    """Classic potential; only meaningful under identity payments."""
    identity = PiecewisePayment.identity()
    for buyer in inst.buyers:
        for payment in buyer.payments:
            if payment != identity:
                raise WrongModeError("plain potential requires identity payments")
    price = tuple(rat(p) for p in price)
    total = sum(
        (_indirect_utility(inst, i, price) for i in range(inst.n)), Fraction(0)
    )
    return total + sum(
        (price[j] * inst.supply[j] for j in range(inst.m)), Fraction(0)
    )


def eval_scaled_lyapunov(
    inst: MarketInstance, frictions: SeparableFrictions, price
) -> Fraction:
    """Scaled potential at ``price``: buyer terms over ``v_i / alpha_i`` with
    effective prices ``beta_j(p_j) * p_j`` plus the scaled revenue term."""
    price = tuple(rat(p) for p in price)
    frictions.validate_at(inst, price)
    beta = frictions.beta_at(price)
    effective = tuple(beta[j] * price[j] for j in range(inst.m))
    total = Fraction(0)
    for i in range(inst.n):
        best = None
        a = frictions.alpha[i]
        for x, value in inst.buyers[i].valuation.table.items():
            u = value / a
            for j in range(inst.m):
                if x[j]:
                    u -= effective[j] * x[j]
            if best is None or u > best:
                best = u
        total += best
    return total + sum(
        (effective[j] * inst.supply[j] for j in range(inst.m)), Fraction(0)
    )


def directional_derivative(
    inst: MarketInstance, frictions: SeparableFrictions, price, subset
) -> Fraction:
    """One-sided derivative of the scaled potential along the scaled
    indicator of ``subset`` (componentwise ``1/beta_j``); equals minus the
    over-demand of the subset, and that identity is asserted here.

    The step used for the exact difference quotient is half the distance
    to the first event along the ray, so the potential is affine on it.
    """
    subset = frozenset(subset)
    price = tuple(rat(p) for p in price)
    if not subset:
        return Fraction(0)
    beta = frictions.beta_at(price)
    d = tuple(
        1 / beta[j] if j in subset else Fraction(0) for j in range(inst.m)
    )
    state = price_state(inst, price)
    step, _ = first_change_step(inst, state, Direction(d, subset))
    eps = step / 2 if step is not None else Fraction(1)
    shifted = tuple(price[j] + eps * d[j] for j in range(inst.m))
    value = (
        eval_scaled_lyapunov(inst, frictions, shifted)
        - eval_scaled_lyapunov(inst, frictions, price)
    ) / eps
    expected = -overdemand(inst, subset, price)
    if value != expected:
        raise WrongModeError(
            f"scaled derivative {value} does not match -overdemand {expected}; "
            "the factorization does not hold on the tested segment"
        )
    return value


def check_translation_submodularity(
    inst: MarketInstance,
    frictions: SeparableFrictions,
    p,
    p_prime,
    lam,
    tau: Sequence | None = None,
) -> bool:
    """Translation submodularity of the scaled potential.

    With ``tau=None`` the translation vector is the elementwise inverse of
    the good coefficients (the vector for which the inequality is a
    theorem, provided the coefficients are price-independent on the tested
    box); any other ``tau`` tests the same inequality for that vector.
    """
    p = tuple(rat(v) for v in p)
    p_prime = tuple(rat(v) for v in p_prime)
    lam = rat(lam)
    if lam < 0:
        raise WrongModeError("translation parameter must be nonnegative")
    if tau is None:
        beta = frictions.beta_at(p)
        if beta != frictions.beta_at(p_prime):
            raise WrongModeError(
                "good coefficients must be constant on the tested box"
            )
        tau = tuple(1 / b for b in beta)
    else:
        tau = tuple(rat(t) for t in tau)
    down = tuple(
        max(p[j] - lam * tau[j], p_prime[j]) for j in range(inst.m)
    )
    up = tuple(min(p[j], p_prime[j] + lam * tau[j]) for j in range(inst.m))
    lhs = eval_scaled_lyapunov(inst, frictions, p) + eval_scaled_lyapunov(
        inst, frictions, p_prime
    )
    rhs = eval_scaled_lyapunov(inst, frictions, down) + eval_scaled_lyapunov(
        inst, frictions, up
    )
    return lhs >= rhs
