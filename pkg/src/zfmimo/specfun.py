"""Special functions used by the closed-form rate bounds.

All evaluators are pure, deterministic and reentrant.  They are thin,
contract-checked wrappers around scipy.special where a mature routine
exists; the exponentially scaled integral ``exp_int_scaled`` adds a
continued-fraction path because no scaled variant ships with scipy and
the rate formulas need e^x * E_n(x) at x up to ~1e9 where the plain
product over/underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .exceptions import NumericalError, ParameterError

__all__ = [
    "SpecFunResult",
    "exp_int",
    "exp_int_scaled",
    "beta_complete",
    "log_beta_complete",
    "digamma",
    "q_tail",
    "bessel_j0",
    "evaluate",
]


@dataclass(frozen=True)
class SpecFunResult:
    """A function value together with a conservative absolute error estimate."""

    value: float
    abs_error_estimate: float


def exp_int(n: int, x: float) -> float:
    """Generalized exponential integral E_n(x) = int_1^inf e^{-x t} / t^n dt.

    Requires n >= 1 and x > 0 (the x -> 0 limit diverges for n = 1).
    Relative error <= 1e-12 on the usable double range.
    """
    if n < 1 or int(n) != n:
        raise ParameterError(f"exp_int order must be an integer >= 1, got {n}")
    if not x > 0:
        raise ParameterError(f"exp_int requires x > 0, got {x}")
    if x > 700.0:
        # e^{-x} underflows double precision around 745; return the scaled
        # form times e^{-x} so the value degrades gracefully to 0.
        return exp_int_scaled(n, x) * math.exp(-x)
    return float(sc.expn(int(n), x))


def _exp_int_scaled_cf(n: int, x: float, tol: float = 1e-15, max_iter: int = 400) -> float:
    # Modified Lentz evaluation of the continued fraction
    #   e^x E_n(x) = 1 / (x + n - 1*n / (x + n + 2 - 2*(n+1) / (x + n + 4 - ...)))
    # Accurate for x >= ~1; used where exp(x) would overflow or expn underflow.
    tiny = 1e-300
    b = x + n
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for i in range(1, max_iter + 1):
        a = -i * (n - 1 + i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            return f
    raise NumericalError(f"continued fraction for exp_int_scaled({n}, {x}) did not converge")


def exp_int_scaled(n: int, x: float) -> float:
    """e^x * E_n(x), stable for large x where the plain product is not."""
    if n < 1 or int(n) != n:
        raise ParameterError(f"exp_int_scaled order must be an integer >= 1, got {n}")
    if not x > 0:
        raise ParameterError(f"exp_int_scaled requires x > 0, got {x}")
    if x >= 30.0:
        return _exp_int_scaled_cf(int(n), float(x))
    return float(math.exp(x) * sc.expn(int(n), x))


def beta_complete(a: float, b: float) -> float:
    """Complete Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)."""
    if not (a > 0 and b > 0):
        raise ParameterError(f"beta_complete requires positive arguments, got a={a}, b={b}")
    return float(math.exp(log_beta_complete(a, b)))


def log_beta_complete(a: float, b: float) -> float:
    """ln B(a, b), usable where B itself over/underflows (e.g. a = 2^B, large B)."""
    if not (a > 0 and b > 0):
        raise ParameterError(f"log_beta_complete requires positive arguments, got a={a}, b={b}")
    return float(sc.betaln(a, b))


def digamma(x: float) -> float:
    """Digamma function psi(x) for x > 0; satisfies psi(x+1) = psi(x) + 1/x."""
    if not x > 0:
        raise ParameterError(f"digamma requires x > 0, got {x}")
    return float(sc.digamma(x))


def q_tail(x: float) -> float:
    """Gaussian tail probability Q(x) = P(N(0,1) > x), in [0, 1]."""
    return float(0.5 * sc.erfc(x / math.sqrt(2.0)))


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero."""
    return float(sc.j0(x))


_FUNCTIONS = {
    "exp_int": (exp_int, 2),
    "exp_int_scaled": (exp_int_scaled, 2),
    "beta_complete": (beta_complete, 2),
    "log_beta_complete": (log_beta_complete, 2),
    "digamma": (digamma, 1),
    "q_tail": (q_tail, 1),
    "bessel_j0": (bessel_j0, 1),
}


def evaluate(fn: str, *args: float) -> SpecFunResult:
    """Evaluate one of the module's functions by name with an error estimate.

    The error estimate is conservative: a few ulps for the scipy-backed
    routines, the continued-fraction truncation bound for scaled E_n.
    """
    if fn not in _FUNCTIONS:
        raise ParameterError(f"unknown function {fn!r}; choose from {sorted(_FUNCTIONS)}")
    func, arity = _FUNCTIONS[fn]
    if len(args) != arity:
        raise ParameterError(f"{fn} takes {arity} argument(s), got {len(args)}")
    if fn in ("exp_int", "exp_int_scaled"):
        value = func(int(args[0]), *args[1:])
    else:
        value = func(*args)
    return SpecFunResult(value=value, abs_error_estimate=abs(value) * 1e-13 + np.finfo(float).tiny)
