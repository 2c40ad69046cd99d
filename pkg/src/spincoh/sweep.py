"""Monte Carlo protocol over parameter cells, plus the fitted empirical laws.

A cell fixes (N, D, epsilon) with eta = density = 1 (their effect is absorbed
into the simulation-time unit) and repeats the simulate/fit/recurrence
pipeline over ``runs`` independently seeded realizations.  Per-run seeds are
a stable hash of (base_seed, N, D, epsilon, run), so results are bit-identical
regardless of execution order or thread count.
"""

from __future__ import annotations

import hashlib
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decayfit import FitResult, crude_decay_scale, estimate_floor, fit_decay
from .errors import SpincohError
from .recurrence import DEFAULT_MAX_DENOMINATOR, default_t_unit, pair_periods, poincare_log_bound
from .spinmodel import ModelParams, default_time_grid, sample_ensemble, simulate_coherence


@dataclass
class SweepCell:
    """One (N, D, epsilon) cell of the protocol; eta = density = 1 by design."""

    n_particles: int
    dimension: int
    epsilon: float
    runs: int = 100
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@dataclass
class RunRecord:
    """Outcome of a single run: a fit plus recurrence bound, or an error note."""

    run: int
    seed: int
    fit: FitResult | None
    log10_tp: float | None
    error: str | None = None


@dataclass
class CellStats:
    """Aggregated cell statistics with chi^-2 weights."""

    cell: SweepCell
    records: list[RunRecord]
    n_failed: int
    t_d_mean: float
    t_d_std: float
    exponent_mean: float
    exponent_std: float
    floor_mean: float
    floor_std: float
    log10_tp_mean: float
    kish_size: float = field(default=float("nan"))


def run_seed(base_seed: int, n_particles: int, dimension: int, epsilon: float, run: int) -> int:
    """Stable 64-bit seed from the cell coordinates and run index."""
    payload = struct.pack("<qqqdq", base_seed, n_particles, dimension, float(epsilon), run)
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _weighted_stats(x: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    wn = w / w.sum()
    mean = float(np.sum(wn * x))
    var = float(np.sum(wn * (x - mean) ** 2))
    return mean, math.sqrt(max(var, 0.0))


def _single_run(cell: SweepCell, run: int, grid: np.ndarray, max_denominator: int) -> RunRecord:
    seed = run_seed(cell.base_seed, cell.n_particles, cell.dimension, cell.epsilon, run)
    try:
        params = ModelParams.full_superposition(cell.n_particles, cell.dimension, cell.epsilon)
        ensemble = sample_ensemble(params, seed)
        trace = simulate_coherence(ensemble, grid)
        crude = crude_decay_scale(trace)
        t1, t2 = 50.0 * crude, 150.0 * crude
        window = np.linspace(t1, t2, 1025)
        floor_trace = simulate_coherence(ensemble, window)
        c = estimate_floor(floor_trace, t1, t2)
        fit = fit_decay(trace, min(c, 1.0 - 1e-9))
        bound = poincare_log_bound(
            pair_periods(ensemble),
            t_unit=default_t_unit(params.eta, params.density, params.epsilon, params.dimension),
            max_denominator=max_denominator,
        )
        return RunRecord(run=run, seed=seed, fit=fit, log10_tp=bound.log10_tp)
    except (SpincohError, ValueError) as exc:
        return RunRecord(run=run, seed=seed, fit=None, log10_tp=None, error=str(exc))


def run_cell(
    cell: SweepCell,
    grid: np.ndarray | None = None,
    max_denominator: int = DEFAULT_MAX_DENOMINATOR,
    threads: int = 1,
) -> CellStats:
    """Execute all runs of a cell and aggregate with weights w_i = 1/chi_sq_i.

    Failed runs are excluded from the aggregates but kept in ``records`` with
    their error message.  The aggregation is a fixed-order fold over run
    indices, so the result does not depend on ``threads``.
    """
    if grid is None:
        grid = default_time_grid()
    indices = range(cell.runs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda u: _single_run(cell, u, grid, max_denominator), indices))
    else:
        records = [_single_run(cell, u, grid, max_denominator) for u in indices]

    good = [r for r in records if r.fit is not None]
    n_failed = len(records) - len(good)
    if not good:
        nan = float("nan")
        return CellStats(cell, records, n_failed, nan, nan, nan, nan, nan, nan, nan)

    chi = np.array([r.fit.chi_sq for r in good])
    if np.any(chi == 0.0):
        # a perfect fit would get infinite weight; split the mass evenly
        # among the perfect runs instead of propagating inf
        weights = (chi == 0.0).astype(float)
    else:
        weights = 1.0 / chi
    t_d_mean, t_d_std = _weighted_stats(np.array([r.fit.t_d for r in good]), weights)
    exp_mean, exp_std = _weighted_stats(np.array([r.fit.exponent for r in good]), weights)
    floor_mean, floor_std = _weighted_stats(np.array([r.fit.floor for r in good]), weights)
    log10_tp_mean = float(np.mean([r.log10_tp for r in good]))
    wn = weights / weights.sum()
    return CellStats(
        cell=cell,
        records=records,
        n_failed=n_failed,
        t_d_mean=t_d_mean,
        t_d_std=t_d_std,
        exponent_mean=exp_mean,
        exponent_std=exp_std,
        floor_mean=floor_mean,
        floor_std=floor_std,
        log10_tp_mean=log10_tp_mean,
        kish_size=float(1.0 / np.sum(wn**2)),
    )


def decay_exponent_law(dimension: int, epsilon: float) -> float:
    """Fitted stretching exponent 1.97 (1 - 0.93 exp(-0.65 D^1.35 eps^-1.68)).

    Approaches 2 from below for large D at fixed epsilon.
    """
    if dimension < 1 or epsilon <= 0:
        raise ValueError("need dimension >= 1 and epsilon > 0")
    return 1.97 * (1.0 - 0.93 * math.exp(-0.65 * dimension**1.35 * epsilon**-1.68))


def decoherence_time_law(
    n_particles: int, density: float, eta: float, epsilon: float, dimension: int
) -> float:
    """Fitted decoherence time (seconds; simulation units when eta = density = 1).

    The middle bracket term carries the factor ((D-2)^2)^(0.19 (eps-1)); its
    (eps-1) prefactor vanishes identically at eps = 1, which is handled
    explicitly so D = 2 never evaluates 0**0.
    """
    if n_particles < 2:
        raise ValueError("need at least 2 particles")
    if not (density > 0 and eta > 0 and epsilon > 0 and dimension >= 1):
        raise ValueError("density, eta, epsilon must be positive; dimension >= 1")
    d = float(dimension)
    eps = float(epsilon)
    prefactor = (
        1.0 / eta * density ** (-eps / d) * (n_particles / 200.0) ** (-0.085 * (d - 1.0) / eps)
    )
    gaussian = 0.29 * math.exp(-0.79 * (d - 1.0) * eps**0.25 - 0.13 * (eps - 3.4) ** 2)
    if eps == 1.0:
        middle = 0.0
    else:
        middle = 0.17 * (eps - 1.0) / 2.0**eps * ((d - 2.0) ** 2) ** (0.19 * (eps - 1.0))
    return prefactor * (gaussian + middle + 0.03 / math.sqrt(eps) + 0.07)


def low_fluctuation_regime(n_particles: int, dimension: int, epsilon: float) -> bool:
    """True when D + 1 > sqrt(N/200) * exp(eps/2) (fit holds without strong fluctuations)."""
    return dimension + 1.0 > math.sqrt(n_particles / 200.0) * math.exp(epsilon / 2.0)
