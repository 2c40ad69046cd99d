"""Stretched-exponential decay fitting.

Coherence traces are reduced to the profile

    xi(t) = (1 - c) * exp(-(t/t_d)**C) + c

with the fluctuation level c estimated separately (a long-time average, not a
free fit parameter) and (t_d, C) obtained in two stages: a log-log
linearization for the starting point, then damped Gauss-Newton refinement of
the plain least-squares objective over all grid points.

A scikit-learn style estimator wraps the same machinery so the fit composes
with the wider ecosystem (``get_params``/``set_params``, cloning, pipelines).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .errors import InsufficientDataError
from .spinmodel import CoherenceTrace

# Linearization band: points with rescaled value outside (BAND, 1 - BAND) are
# excluded from the log-log regression (ln(-ln y) blows up at both ends).
BAND = 1e-6

MAX_ITER = 200
STEP_TOL = 1e-10

# Floor-averaging window in multiples of the crude decay scale.
FLOOR_WINDOW = (50.0, 150.0)


@dataclass
class FitResult:
    """Decay characterization of one trace.

    ``weight`` is 1/chi_sq (infinite for an exactly zero residual) and is the
    per-run weight used when aggregating over repeated simulations.
    """

    t_d: float
    exponent: float
    floor: float
    chi_sq: float
    weight: float
    converged: bool

    def as_record(self) -> dict:
        return {
            "t_d": self.t_d,
            "C": self.exponent,
            "c": self.floor,
            "chi_sq": self.chi_sq,
            "weight": self.weight,
            "converged": self.converged,
        }


def decay_profile(t: np.ndarray, t_d: float, exponent: float, floor: float) -> np.ndarray:
    """Evaluate (1-c) exp(-(t/t_d)**C) + c elementwise."""
    t = np.asarray(t, dtype=float)
    with np.errstate(under="ignore"):
        return (1.0 - floor) * np.exp(-((t / t_d) ** exponent)) + floor


def crude_decay_scale(trace: CoherenceTrace) -> float:
    """First grid time where the trace drops below 1/e; final time if it never does."""
    below = np.nonzero(trace.values < math.exp(-1.0))[0]
    if below.size == 0:
        return float(trace.times[-1])
    return float(trace.times[below[0]])


def estimate_floor(trace: CoherenceTrace, t1: float, t2: float) -> float:
    """Trapezoidal time-average of the trace over [t1, t2].

    Both endpoints must lie inside the sampled span; the trace is linearly
    interpolated at the window edges.
    """
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    if t1 < trace.times[0] or t2 > trace.times[-1]:
        raise ValueError(
            f"window [{t1}, {t2}] outside trace span "
            f"[{trace.times[0]}, {trace.times[-1]}]"
        )
    inside = (trace.times > t1) & (trace.times < t2)
    ts = np.concatenate([[t1], trace.times[inside], [t2]])
    vs = np.concatenate(
        [
            [np.interp(t1, trace.times, trace.values)],
            trace.values[inside],
            [np.interp(t2, trace.times, trace.values)],
        ]
    )
    return float(np.trapezoid(vs, ts) / (t2 - t1))


def floor_window(trace: CoherenceTrace) -> tuple[float, float]:
    """Default averaging window [50, 150] * crude_decay_scale, clamped to the span.

    Traces evaluated on demand (simulation runs) should instead sample the
    unclamped window directly; clamping is for fitting static files.
    """
    crude = crude_decay_scale(trace)
    t_end = float(trace.times[-1])
    t1 = FLOOR_WINDOW[0] * crude
    t2 = FLOOR_WINDOW[1] * crude
    if t2 > t_end:
        t2 = t_end
    if t1 >= t2:
        t1 = 0.5 * t_end
        t2 = t_end
    return t1, t2


def _stage1_linearization(
    times: np.ndarray, values: np.ndarray, c: float, band: float
) -> tuple[float, float, int]:
    """Log-log regression start point; returns (t_d, exponent, n_usable)."""
    y = (values - c) / (1.0 - c)
    usable = (y > band) & (y < 1.0 - band) & (times > 0.0)
    n_usable = int(usable.sum())
    if n_usable < 3:
        raise InsufficientDataError(
            f"only {n_usable} points inside the linearization band"
        )
    x = np.log(times[usable])
    w = np.log(-np.log(y[usable]))
    slope, intercept = np.polyfit(x, w, 1)
    if not (np.isfinite(slope) and slope > 0.0):
        raise InsufficientDataError("trace does not decay; linearization failed")
    return float(np.exp(-intercept / slope)), float(slope), n_usable


def _chi_sq(times: np.ndarray, values: np.ndarray, t_d: float, cexp: float, c: float) -> float:
    resid = values - decay_profile(times, t_d, cexp, c)
    return float(resid @ resid)


def _gauss_newton(
    times: np.ndarray,
    values: np.ndarray,
    c: float,
    t_d: float,
    cexp: float,
    max_iter: int,
    step_tol: float,
) -> tuple[float, float, bool]:
    """Damped Gauss-Newton on (t_d, C) with c held fixed.

    Returns (t_d, C, converged); convergence means the relative step fell
    below ``step_tol`` (or the step could no longer reduce chi^2, i.e. a
    numerically stationary point).
    """
    chi = _chi_sq(times, values, t_d, cexp, c)
    for _ in range(max_iter):
        with np.errstate(under="ignore", divide="ignore", invalid="ignore"):
            u = (times / t_d) ** cexp
            core = (1.0 - c) * np.exp(-u)
            j_td = core * u * (cexp / t_d)
            log_ratio = np.where(times > 0.0, np.log(times / t_d), 0.0)
            j_cexp = -core * u * log_ratio
        jac = np.column_stack([j_td, j_cexp])
        resid = values - decay_profile(times, t_d, cexp, c)
        jtj = jac.T @ jac
        jtr = jac.T @ resid
        try:
            step = np.linalg.solve(jtj, jtr)
        except np.linalg.LinAlgError:
            return t_d, cexp, False
        if not np.all(np.isfinite(step)):
            return t_d, cexp, False

        scale = 1.0
        improved = False
        for _ in range(40):
            cand_td = t_d + scale * step[0]
            cand_cexp = cexp + scale * step[1]
            if cand_td > 0.0 and cand_cexp > 0.0:
                cand_chi = _chi_sq(times, values, cand_td, cand_cexp, c)
                if cand_chi <= chi:
                    improved = True
                    break
            scale *= 0.5
        if not improved:
            # no descent direction at float resolution: stationary point
            return t_d, cexp, True
        rel_step = max(
            abs(scale * step[0]) / abs(t_d), abs(scale * step[1]) / abs(cexp)
        )
        t_d, cexp, chi = cand_td, cand_cexp, cand_chi
        if rel_step < step_tol:
            return t_d, cexp, True
    return t_d, cexp, False


def _fit_arrays(
    times: np.ndarray,
    values: np.ndarray,
    c: float,
    band: float = BAND,
    max_iter: int = MAX_ITER,
    step_tol: float = STEP_TOL,
) -> FitResult:
    if not 0.0 <= c < 1.0:
        raise ValueError("floor level must lie in [0, 1)")
    td1, cexp1, _ = _stage1_linearization(times, values, c, band)
    td, cexp, converged = _gauss_newton(times, values, c, td1, cexp1, max_iter, step_tol)
    if not converged:
        td, cexp = td1, cexp1  # refinement did not settle: keep the stage-1 estimate
    chi = _chi_sq(times, values, td, cexp, c)
    weight = 1.0 / chi if chi > 0.0 else math.inf
    return FitResult(
        t_d=td, exponent=cexp, floor=c, chi_sq=chi, weight=weight, converged=converged
    )


def fit_decay(trace: CoherenceTrace, c: float) -> FitResult:
    """Least-squares (t_d, C) for a trace, with the floor c held fixed.

    Raises InsufficientDataError when fewer than 3 points fall inside the
    linearization band.  A fit that fails to settle within the iteration
    budget returns the stage-1 estimate with ``converged=False``.
    """
    return _fit_arrays(trace.times, trace.values, c)


class StretchedExponentialDecay(RegressorMixin, BaseEstimator):
    """Scikit-learn estimator for the decay profile (1-c) exp(-(t/t_d)**C) + c.

    Parameters
    ----------
    floor : float or "auto", default 0.0
        Fluctuation level c.  "auto" averages the trace over the default
        long-time window instead of treating c as known.
    band : float
        Exclusion band for the log-log starting point.
    max_iter, step_tol : Gauss-Newton refinement controls.

    Attributes (after ``fit``)
    --------------------------
    decay_time_, exponent_, floor_, chi_sq_, weight_, converged_
    """

    def __init__(
        self,
        floor: float | str = 0.0,
        band: float = BAND,
        max_iter: int = MAX_ITER,
        step_tol: float = STEP_TOL,
    ):
        self.floor = floor
        self.band = band
        self.max_iter = max_iter
        self.step_tol = step_tol

    def _extract_times(self, X) -> np.ndarray:
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError("expected a single time column")
            X = X[:, 0]
        if np.any(X < 0.0):
            raise ValueError("times must be nonnegative")
        return X

    def fit(self, X, y):
        t = self._extract_times(X)
        y = column_or_1d(y, dtype=float)
        if t.shape != y.shape:
            raise ValueError("X and y must have the same number of samples")
        order = np.argsort(t, kind="stable")
        t, y = t[order], y[order]

        if self.floor == "auto":
            keep = np.concatenate([[True], np.diff(t) > 0.0])
            trace = CoherenceTrace(times=t[keep], values=np.clip(y[keep], 0.0, 1.0))
            c = estimate_floor(trace, *floor_window(trace))
        else:
            c = float(self.floor)
        result = _fit_arrays(
            t, y, c, band=self.band, max_iter=self.max_iter, step_tol=self.step_tol
        )
        self.decay_time_ = result.t_d
        self.exponent_ = result.exponent
        self.floor_ = result.floor
        self.chi_sq_ = result.chi_sq
        self.weight_ = result.weight
        self.converged_ = result.converged
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "decay_time_")
        t = self._extract_times(X)
        return decay_profile(t, self.decay_time_, self.exponent_, self.floor_)
