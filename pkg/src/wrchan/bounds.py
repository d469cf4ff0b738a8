"""Closed-form rate bounds for the write channel.

For the i.i.d.-failure channel with parameter p there are three lower and
three upper bounds on the symmetric information rate (uniform i.i.d. input)
and on the Markov-1 rate (symmetric Markov input with flip probability
beta).  Order 0 ignores the output process structure entirely, order 1
conditions the output entropy on one extra symbol, order 2 on two; higher
order is tighter on each side.  The Markov-1 bounds reduce exactly to the
SIR bounds at beta = 1/2, which is the main numerical check on the long
order-2 expressions.

The genie-erasure capacity upper-bounds the capacity itself: a decoder that
knows the state realization sees a correlated erasure channel whose erasure
rate is the probability of a downward state transition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from wrchan.channel import (
    BernoulliState,
    MarkovState,
    StateProcess,
    stationary_distribution,
)

__all__ = [
    "binary_entropy",
    "genie_erasure",
    "sir_bound",
    "m1r_bound",
    "zec_bounds",
    "BoundReport",
    "bound_report",
]

_SIDES = ("lower", "upper")


def binary_entropy(q):
    """Binary entropy h2(q) in bits, with the 0*log(0) = 0 convention.

    Accepts a scalar or an array; raises if any value is outside [0, 1].
    """
    arr = np.asarray(q, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise ValueError(f"probability outside [0, 1]: {q}")
    out = np.zeros_like(arr)
    mask = (arr > 0.0) & (arr < 1.0)
    qm = arr[mask]
    out[mask] = -qm * np.log2(qm) - (1.0 - qm) * np.log2(1.0 - qm)
    return float(out) if out.ndim == 0 else out


def genie_erasure(spec: StateProcess) -> float:
    """Capacity upper bound from a decoder that knows the state sequence.

    Knowing z turns the channel into a correlated erasure channel whose
    average erasure rate is the stationary probability of a downward state
    transition; the bound is 1 minus that rate.
    """
    if isinstance(spec, BernoulliState):
        return 1.0 - spec.p * (1.0 - spec.p)
    if isinstance(spec, MarkovState):
        pi0 = stationary_distribution(spec)[0]
        return 1.0 - spec.p_d * (1.0 - pi0)
    raise TypeError(f"not a state process spec: {spec!r}")


def _check_order_side(order: int, side: str) -> None:
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    if side not in _SIDES:
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def sir_bound(p: float, order: int, side: str) -> float:
    """Closed-form bound on the symmetric information rate of the i.i.d.-failure channel."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    _check_order_side(order, side)
    pq = p * (1.0 - p)
    half_h = binary_entropy(p) / 2.0
    if side == "lower":
        if order == 0:
            return 1.0 - binary_entropy(p / 2.0)
        if order == 1:
            return binary_entropy((1.0 - p) / 2.0) - half_h
        return (
            0.5 * (1.0 + p) * binary_entropy((1.0 + p * p) / (2.0 * (1.0 + p)))
            + 0.5 * (1.0 - p) * binary_entropy((1.0 - p) / 2.0)
            - half_h
        )
    if order == 0:
        return 1.0 - half_h
    if order == 1:
        return binary_entropy((1.0 - pq) / 2.0) - half_h
    return (
        0.5 * (1.0 - pq) * binary_entropy(1.0 / (2.0 * (1.0 - pq)))
        + 0.5 * (1.0 + pq) * binary_entropy(1.0 / (2.0 * (1.0 + pq)))
        - half_h
    )


def _weighted_h(weight: float, numerator: float) -> float:
    # weight * h2(numerator / weight) with the 0 * h2(0/0) = 0 convention
    if weight <= 0.0:
        return 0.0
    return weight * binary_entropy(numerator / weight)


def _m1r_l2(beta: float, p: float) -> float:
    bb = 1.0 - beta
    w = 1.0 - beta * (1.0 - p)
    term1 = _weighted_h(w, beta * (1.0 - beta * (1.0 - p * p)))
    term2 = (1.0 - w) * binary_entropy(1.0 - w)  # (beta p-bar) h2(beta p-bar)
    return term1 + term2 - beta * binary_entropy(p)


def _m1r_u2(beta: float, p: float) -> float:
    bb = 1.0 - beta
    pq = p * (1.0 - p)
    shared = beta * beta * bb * (1.0 - pq)
    num = shared + beta**3 * pq + beta * bb * bb
    w1 = shared + beta * beta * (3.0 - beta) * pq + (1.0 + beta) * bb * bb
    w2 = 2.0 * shared + beta**3 * (1.0 - 2.0 * pq) + beta * bb * bb
    return _weighted_h(w1, num) + _weighted_h(w2, num) - beta * binary_entropy(p)


def m1r_bound(beta: float, p: float, order: int, side: str) -> float:
    """Closed-form bound on the Markov-1 rate of the i.i.d.-failure channel.

    At beta = 1/2 every order and side reduces exactly to ``sir_bound``.
    """
    beta = float(beta)
    p = float(p)
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    _check_order_side(order, side)
    if side == "lower":
        if order == 0:
            return 1.0 - binary_entropy(p / 2.0)
        if order == 1:
            return binary_entropy(beta * (1.0 - p)) - beta * binary_entropy(p)
        return _m1r_l2(beta, p)
    if order == 0:
        return 1.0 - beta * binary_entropy(p)
    if order == 1:
        arg = 1.0 - beta + 2.0 * beta * beta * p * (1.0 - p)
        return binary_entropy(arg) - beta * binary_entropy(p)
    return _m1r_u2(beta, p)


def zec_bounds(k: int) -> Tuple[float, float]:
    """Zero-error capacity bounds (1/k, (k+1)/(2k)) for the k-ary state channel.

    The lower bound is achieved by repeating every bit k times; the upper
    bound is the smallest genie-erasure capacity over the channel family.
    At k = 2 the two meet the exact zero-error capacity 1/2 from both sides
    only in the sense that the lower bound is tight.
    """
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")
    k = int(k)
    return 1.0 / k, (k + 1) / (2.0 * k)


@dataclass(frozen=True)
class BoundReport:
    """All six SIR or Markov-1 bounds plus the genie value for one channel."""

    channel: StateProcess
    beta: Optional[float]
    lower: Tuple[float, float, float]
    upper: Tuple[float, float, float]
    genie: float


def bound_report(spec: StateProcess, beta: Optional[float] = None) -> BoundReport:
    """Evaluate the full bound set for an i.i.d.-failure channel.

    With ``beta`` the Markov-1 bounds are used, otherwise the SIR bounds.
    Closed-form rate bounds exist only for the Bernoulli state process;
    Markov state channels still get ``genie_erasure`` directly.
    """
    if not isinstance(spec, BernoulliState):
        raise TypeError("closed-form rate bounds exist only for BernoulliState")
    p = spec.p
    if beta is None:
        lower = tuple(sir_bound(p, k, "lower") for k in range(3))
        upper = tuple(sir_bound(p, k, "upper") for k in range(3))
    else:
        lower = tuple(m1r_bound(beta, p, k, "lower") for k in range(3))
        upper = tuple(m1r_bound(beta, p, k, "upper") for k in range(3))
    return BoundReport(spec, beta, lower, upper, genie_erasure(spec))
