import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from spincoh import (
    ModelParams,
    default_t_unit,
    pair_periods,
    poincare_log_bound,
    rational_approx,
    recurrence_law,
    sample_ensemble,
    simulate_coherence,
)
from spincoh.spinmodel import ETA_ELECTROMAGNETIC, SpinEnsemble


def fixed_coupling_ensemble(couplings):
    couplings = np.asarray(couplings, dtype=float)
    n = couplings.shape[0]
    params = ModelParams.full_superposition(n, 1, 1.0)
    base = sample_ensemble(params, 0)
    return replace(base, couplings=couplings)


def commensurate_ensemble(n, g0, seed):
    """Couplings snapped to positive integer multiples of g0."""
    base = sample_ensemble(ModelParams.full_superposition(n, 1, 1.0), seed)
    m = np.maximum(np.rint(base.couplings / g0), 1.0) * g0
    upper = np.triu(m, 1)
    return replace(base, couplings=upper + upper.T)


class TestPairPeriods:
    def test_two_particles(self):
        ens = fixed_coupling_ensemble([[0.0, math.pi], [math.pi, 0.0]])
        assert np.allclose(pair_periods(ens), [1.0], atol=1e-15)

    def test_counts(self):
        for n in (3, 20):
            ens = sample_ensemble(ModelParams.full_superposition(n, 1, 1.0), 4)
            periods = pair_periods(ens)
            assert periods.shape == (n * (n - 1) // 2,)
            assert np.all(periods > 0)


class TestRationalApprox:
    def test_exact_rational(self):
        assert rational_approx(2.0 / 3.0, 10**4) == (2, 3)

    def test_unity(self):
        assert rational_approx(1.0, 10) == (1, 1)

    def test_pi_vs_exhaustive_scan(self):
        n, d = rational_approx(math.pi, 120)
        assert (n, d) == (355, 113)
        # exhaustive oracle: best fraction with denominator <= 120
        best = min(
            (
                (abs(math.pi - round(math.pi * q) / q), round(math.pi * q), q)
                for q in range(1, 121)
            ),
            key=lambda item: item[0],
        )
        frac = Fraction(best[1], best[2])
        assert (n, d) == (frac.numerator, frac.denominator)

    def test_errors(self):
        with pytest.raises(ValueError):
            rational_approx(0.0, 10)
        with pytest.raises(ValueError):
            rational_approx(-2.0, 10)
        with pytest.raises(ValueError):
            rational_approx(1.0, 0)


class TestPoincareBound:
    def test_single_commensurate_period(self):
        est = poincare_log_bound(np.array([2.5]), t_unit=2.5)
        assert est.rationals == [(1, 1)]
        assert est.log10_tp == pytest.approx(math.log10(2.5), abs=1e-14)

    def test_three_halves_period(self):
        est = poincare_log_bound(np.array([1.5]), t_unit=1.0)
        assert est.rationals == [(2, 3)]
        assert 10**est.log10_tp == pytest.approx(3.0, rel=1e-12)

    def test_integer_divisor_periods(self):
        t_unit = 4.0
        periods = np.array([t_unit / k for k in (1, 2, 3, 5, 8)])
        est = poincare_log_bound(periods, t_unit=t_unit)
        assert all(d == 1 for _, d in est.rationals)
        assert est.log10_tp == pytest.approx(math.log10(t_unit), abs=1e-14)

    def test_lowest_terms(self):
        ens = sample_ensemble(ModelParams.full_superposition(10, 2, 1.0), 8)
        est = poincare_log_bound(pair_periods(ens), t_unit=math.pi)
        for n, d in est.rationals:
            assert math.gcd(n, d) == 1

    def test_log_sum_identity(self):
        ens = sample_ensemble(ModelParams.full_superposition(8, 1, 1.0), 9)
        t_unit = math.pi
        est = poincare_log_bound(pair_periods(ens), t_unit=t_unit)
        expected = math.log10(t_unit) + sum(math.log10(d) for _, d in est.rationals)
        assert est.log10_tp == expected

    def test_monotone_in_max_denominator(self):
        ens = sample_ensemble(ModelParams.full_superposition(12, 1, 1.0), 10)
        periods = pair_periods(ens)
        bounds = [
            poincare_log_bound(periods, t_unit=math.pi, max_denominator=md).log10_tp
            for md in (10, 100, 1000, 10000)
        ]
        assert all(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            poincare_log_bound(np.array([]), t_unit=1.0)

    def test_trace_recurs_after_commensurate_bound(self):
        g0 = 0.25
        ens = commensurate_ensemble(6, g0, seed=13)
        t_unit = math.pi / g0
        est = poincare_log_bound(pair_periods(ens), t_unit=t_unit)
        t_p = est.t_unit * math.prod(d for _, d in est.rationals)
        rng = np.random.default_rng(14)
        ts = np.sort(rng.uniform(0.1, 30.0, 10))
        before = simulate_coherence(ens, ts).values
        after = simulate_coherence(ens, ts + t_p).values
        assert np.max(np.abs(after - before)) <= 1e-9


class TestRecurrenceLaw:
    def test_reference_parameter_set(self):
        value = recurrence_law(100, 1e30, ETA_ELECTROMAGNETIC, 1.0, 3)
        assert value == pytest.approx(13183.7, abs=20.0)

    def test_two_particles_closed_form(self):
        eta, density = 2.0, 3.0
        value = recurrence_law(2, density, eta, 1.0, 1)
        expected = math.log10(math.pi / eta / density) + 6.14 / math.log(10.0)
        assert value == pytest.approx(expected, abs=1e-12)

    def test_eta_doubling_shifts_log(self):
        a = recurrence_law(10, 1.0, 1.0, 1.0, 2)
        b = recurrence_law(10, 1.0, 2.0, 1.0, 2)
        assert b - a == pytest.approx(-math.log10(2.0), abs=1e-12)

    def test_procedural_bound_exceeds_factorial_comparator(self):
        ens = sample_ensemble(ModelParams.full_superposition(100, 1, 1.0), 21)
        est = poincare_log_bound(
            pair_periods(ens), t_unit=default_t_unit(1.0, 1.0, 1.0, 1)
        )
        log10_factorial = sum(math.log10(k) for k in range(1, 101))
        assert est.log10_tp > log10_factorial

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            recurrence_law(1, 1.0, 1.0, 1.0, 1)
        with pytest.raises(ValueError):
            recurrence_law(5, -1.0, 1.0, 1.0, 1)
