"""Maturation-delay laws tau(y).

The delay is a nondecreasing, continuously differentiable, bounded function of
the mature predator density, supplied as a (tau, tau') pair plus its bounds
tau_m = tau(0) and tau_M = tau(+inf).  Three built-in shapes cover the common
cases; arbitrary user pairs are accepted as well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

__all__ = [
    "DelayFunction",
    "constant_delay",
    "saturating_delay",
    "exp_delay",
    "make_delay",
    "DELAY_KINDS",
]


@dataclass(frozen=True)
class DelayFunction:
    """State-dependent maturation delay with derivative and bounds.

    Invariants (checked by model validation, not at construction):
    tau'(y) >= 0, 0 <= tau_m <= tau(y) <= tau_M < inf, tau(0) = tau_m.
    """

    tau: Callable[[float], float] = field(repr=False)
    tau_prime: Callable[[float], float] = field(repr=False)
    tau_m: float
    tau_M: float
    kind: str = "custom"
    coefficients: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, y: float) -> float:
        return self.tau(y)

    @property
    def is_constant(self) -> bool:
        return self.tau_m == self.tau_M


def constant_delay(value: float) -> DelayFunction:
    """tau(y) = value for all y."""
    return DelayFunction(
        tau=lambda y: value,
        tau_prime=lambda y: 0.0,
        tau_m=value,
        tau_M=value,
        kind="constant",
        coefficients={},
    )


def saturating_delay(tau_m: float, tau_M: float, theta: float) -> DelayFunction:
    """tau(y) = tau_m + (tau_M - tau_m) * y / (y + theta), half-saturation theta > 0."""
    span = tau_M - tau_m
    return DelayFunction(
        tau=lambda y: tau_m + span * y / (y + theta),
        tau_prime=lambda y: span * theta / (y + theta) ** 2,
        tau_m=tau_m,
        tau_M=tau_M,
        kind="saturating",
        coefficients={"theta": theta},
    )


def exp_delay(tau_m: float, tau_M: float, lam: float) -> DelayFunction:
    """tau(y) = tau_M - (tau_M - tau_m) * exp(-lam * y), rate lam > 0."""
    span = tau_M - tau_m
    return DelayFunction(
        tau=lambda y: tau_M - span * math.exp(-lam * y),
        tau_prime=lambda y: span * lam * math.exp(-lam * y),
        tau_m=tau_m,
        tau_M=tau_M,
        kind="exp",
        coefficients={"lam": lam},
    )


_FACTORIES: dict[str, Callable] = {
    "constant": lambda tau_m, tau_M: constant_delay(tau_m),
    "saturating": saturating_delay,
    "exp": exp_delay,
}

DELAY_KINDS = tuple(_FACTORIES)


def make_delay(kind: str, tau_m: float, tau_M: float, **coefficients: float) -> DelayFunction:
    """Build a built-in delay law by kind name.

    "constant" requires tau_m == tau_M and takes no coefficients; "saturating"
    takes theta; "exp" takes lam.
    """
    if kind == "constant":
        if tau_m != tau_M:
            raise ValueError("constant delay requires tau_m == tau_M")
        if coefficients:
            raise ValueError("constant delay takes no coefficients")
        return constant_delay(tau_m)
    try:
        factory = _FACTORIES[kind]
    except KeyError:
        raise ValueError(
            f"unknown delay kind {kind!r}; expected one of {DELAY_KINDS}"
        ) from None
    return factory(tau_m, tau_M, **coefficients)
