"""Upper bounds on the recurrence time of the quasiperiodic coherence signal.

Every coupling pair contributes a factor with period pi/g to the coherence
trace.  Approximating each period ratio t_unit/T_i by a reduced fraction
n_i/d_i, the signal recurs (to the approximation accuracy) after
T_P = t_unit * prod(d_i).  The product overflows any fixed-width float for
more than a handful of pairs, so the bound is accumulated in log10 space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .spinmodel import SpinEnsemble

DEFAULT_MAX_DENOMINATOR = 10_000

# Growth rate of the fitted recurrence-time law exp(RATE * (N^2 - N)).
_LAW_RATE = 3.07


@dataclass
class RecurrenceEstimate:
    """Rational period approximations and the log-scale recurrence bound."""

    t_unit: float
    rationals: list[tuple[int, int]]
    log10_tp: float


def pair_periods(ensemble: SpinEnsemble) -> np.ndarray:
    """Oscillation periods pi/g for all i < k coupling pairs (N(N-1)/2 values)."""
    i, k = np.triu_indices(ensemble.n_particles, k=1)
    return np.pi / ensemble.couplings[i, k]


def rational_approx(x: float, max_denominator: int) -> tuple[int, int]:
    """Best rational approximation n/d of x with d <= max_denominator, reduced."""
    if not x > 0.0:
        raise ValueError("x must be positive")
    if max_denominator < 1:
        raise ValueError("max_denominator must be >= 1")
    frac = Fraction(x).limit_denominator(max_denominator)
    return frac.numerator, frac.denominator


def default_t_unit(eta: float, density: float, epsilon: float, dimension: int) -> float:
    """Reference period pi / (eta * density**(epsilon/D)).

    Matches the prefactor of the fitted law so the procedural bound and the
    law are directly comparable.
    """
    return math.pi / eta * density ** (-epsilon / dimension)


def poincare_log_bound(
    periods: np.ndarray,
    t_unit: float,
    max_denominator: int = DEFAULT_MAX_DENOMINATOR,
) -> RecurrenceEstimate:
    """Accumulate log10 T_P = log10 t_unit + sum(log10 d_i) over all periods.

    Larger ``max_denominator`` means finer rational approximations and a
    looser (never smaller) bound.
    """
    periods = np.asarray(periods, dtype=float)
    if periods.size == 0:
        raise ValueError("need at least one period")
    rationals = [rational_approx(t_unit / p, max_denominator) for p in periods]
    log10_tp = math.log10(t_unit) + sum(math.log10(d) for _, d in rationals)
    return RecurrenceEstimate(t_unit=t_unit, rationals=rationals, log10_tp=log10_tp)


def recurrence_law(
    n_particles: int, density: float, eta: float, epsilon: float, dimension: int
) -> float:
    """log10 of the fitted recurrence-time law pi/eta * density**(-eps/D) * exp(3.07 (N^2-N)).

    Returned in log10 space (seconds when eta and density carry SI units);
    the exponential factor alone exceeds float range for N of a few dozen.
    """
    if n_particles < 2:
        raise ValueError("need at least 2 particles")
    if not (density > 0 and eta > 0 and epsilon > 0 and dimension >= 1):
        raise ValueError("density, eta, epsilon must be positive; dimension >= 1")
    log_unit = math.log10(default_t_unit(eta, density, epsilon, dimension))
    n = float(n_particles)
    return log_unit + _LAW_RATE * (n * n - n) / math.log(10.0)
