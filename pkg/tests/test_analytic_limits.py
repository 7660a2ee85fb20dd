import math

import numpy as np
import pytest

from hqinflab.arrivals import (NHPPArrivals, PoissonArrivals, RateFunction,
                               RenewalArrivals)
from hqinflab.fields import Grid
from hqinflab.limits import (InitialLimits, LimitInputs, cov_x2_increment,
                             fluid_age_residual, fluid_qe, fluid_qr, fluid_qt,
                             fluid_totals, fluid_workload,
                             fluid_workload_steady, initial_and_total_limits,
                             surface, var_components, var_qe, var_qr,
                             var_workload)
from hqinflab.service import (Deterministic, Exponential, FiniteAtoms,
                              HyperExponential, Mixture)

from oracles import simpson

EXP1 = Exponential(1.0)
M_EXP = LimitInputs.from_models(PoissonArrivals(1.0), EXP1)
M_DET = LimitInputs.from_models(PoissonArrivals(1.0), Deterministic(1.0))
MIX = Mixture(0.5, EXP1, FiniteAtoms(((1.0, 0.6), (2.0, 0.4))))
M_MIX = LimitInputs.from_models(PoissonArrivals(1.0), MIX)
D_EXP = LimitInputs.from_models(RenewalArrivals(Deterministic(1.0)), EXP1)


class TestFluidCounts:
    def test_m_exp_value(self):
        got = fluid_qr(M_EXP, 1.0, 0.0)
        assert got == pytest.approx(1.0 - math.exp(-1.0), abs=1e-8)
        oracle = simpson(lambda s: math.exp(-(1.0 - s)), 0.0, 1.0)
        assert got == pytest.approx(oracle, abs=1e-8)

    def test_deterministic_piecewise(self):
        assert fluid_qr(M_DET, 2.0, 0.5) == pytest.approx(0.5, abs=1e-8)

    def test_zero_time(self):
        assert fluid_qr(M_EXP, 0.0, 0.3) == 0.0

    def test_qe_value_and_errors(self):
        got = fluid_qe(M_EXP, 5.0, 0.5)
        assert got == pytest.approx(1.0 - math.exp(-0.5), abs=1e-8)
        assert fluid_qe(M_EXP, 1.0, 0.0) == 0.0
        with pytest.raises(ValueError, match="y <= t"):
            fluid_qe(M_EXP, 1.0, 2.0)

    @pytest.mark.parametrize("inputs", [M_EXP, M_DET, M_MIX, D_EXP])
    def test_consistency_qt(self, inputs):
        for t in (0.5, 1.0, 2.0):
            qt = fluid_qt(inputs, t)
            assert qt == pytest.approx(fluid_qr(inputs, t, 0.0), abs=1e-8)
            assert qt == pytest.approx(fluid_qe(inputs, t, t), abs=1e-8)

    def test_nhpp_time_varying(self):
        inputs = LimitInputs.from_models(
            NHPPArrivals(RateFunction("sinusoidal", a=1.0, b=0.5)), EXP1)
        t, y = 2.0, 0.25
        oracle = simpson(lambda s: math.exp(-(t + y - s)) * (1.0 + 0.5 * math.sin(s)),
                         0.0, t)
        assert fluid_qr(inputs, t, y) == pytest.approx(oracle, abs=1e-8)


class TestAgeResidual:
    def test_converges_to_stationary_excess(self):
        fe, frc = fluid_age_residual(M_EXP, 20.0, 0.5)
        assert fe == pytest.approx(EXP1.stationary_excess_cdf(0.5), abs=1e-6)
        assert frc == pytest.approx(EXP1.stationary_excess_sf(0.5), abs=1e-6)

    def test_edges(self):
        fe, _ = fluid_age_residual(M_EXP, 1.0, 1.0)
        assert fe == pytest.approx(1.0, abs=1e-8)
        _, frc = fluid_age_residual(M_EXP, 1.0, 0.0)
        assert frc == pytest.approx(1.0, abs=1e-8)

    def test_empty_system_rejected(self):
        with pytest.raises(ValueError, match="undefined"):
            fluid_age_residual(M_EXP, 0.0, 0.0)


class TestFluidWorkload:
    def test_m_exp_total(self):
        for t in (1.0, 4.0, 8.0):
            assert fluid_workload(M_EXP, t, 0.0) == pytest.approx(
                1.0 - math.exp(-t), abs=1e-7)

    def test_steady_state(self):
        quad, exact = fluid_workload_steady(M_EXP)
        assert exact == 1.0
        assert quad == pytest.approx(1.0, abs=1e-6)
        quad_d, exact_d = fluid_workload_steady(M_DET)
        assert exact_d == 0.5
        assert quad_d == pytest.approx(0.5, abs=1e-9)

    def test_zero_time(self):
        assert fluid_workload(M_EXP, 0.0, 0.0) == 0.0

    def test_totals(self):
        wt, i_t, c_t = fluid_totals(M_EXP, 2.0)
        assert i_t == pytest.approx(2.0)
        assert c_t == pytest.approx(i_t - wt)

    def test_monotone_and_bounded(self):
        mom = MIX.moments()
        bound = (mom.scv + 1.0) / (2.0 / mom.mean) / mom.mean / 2.0 * 2.0
        bound = 1.0 * (mom.scv + 1.0) * mom.mean**2 / 2.0
        vals = [fluid_workload(M_MIX, t, 0.0) for t in (1.0, 2.0, 4.0, 8.0, 20.0)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(v <= bound + 1e-9 for v in vals)

    def test_requires_standard_case(self):
        inputs = LimitInputs.from_models(
            NHPPArrivals(RateFunction("sinusoidal", a=1.0, b=0.5)), EXP1)
        with pytest.raises(ValueError, match="standard case"):
            fluid_workload(inputs, 1.0, 0.0)


class TestVariances:
    def test_poisson_collapse(self):
        for inputs in (M_EXP, M_MIX):
            for t in (0.5, 1.0, 2.0):
                for y in (0.0, 0.25, 1.0):
                    assert var_qr(inputs, t, y) == pytest.approx(
                        fluid_qr(inputs, t, y), abs=1e-8)
                    if y <= t:
                        assert var_qe(inputs, t, y) == pytest.approx(
                            fluid_qe(inputs, t, y), abs=1e-8)

    def test_deterministic_arrivals_steady_state(self):
        # c_a^2 = 0: -int F^c(s)^2 + int F^c(s) over [0, inf) = 0.5 for exp(1)
        assert var_qr(D_EXP, 40.0, 0.0) == pytest.approx(0.5, abs=1e-6)

    def test_qt_variance_reaches_lambda_over_mu(self):
        assert var_qr(M_EXP, 40.0, 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_component_values_m_exp(self):
        c = var_components(M_EXP, 1.0, 0.0)
        assert c.arrival == pytest.approx(0.5 * (1.0 - math.exp(-2.0)), abs=1e-8)
        assert c.service == pytest.approx(0.5 - math.exp(-1.0) + 0.5 * math.exp(-2.0),
                                          abs=1e-8)
        assert c.splitting == 0.0

    def test_components_zero_at_origin(self):
        c = var_components(M_MIX, 0.0, 0.0)
        assert (c.arrival, c.service, c.splitting) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("inputs", [M_EXP, M_MIX, D_EXP,
                                        LimitInputs.from_models(
                                            PoissonArrivals(1.0),
                                            HyperExponential((0.5, 0.5), (2.0, 2.0 / 3.0)))])
    def test_additivity(self, inputs):
        for t in (0.4, 1.2, 2.0):
            for y in (0.0, 0.5, 1.5):
                total = var_components(inputs, t, y).total
                assert total == pytest.approx(var_qr(inputs, t, y), abs=1e-6)


class TestWorkloadVariance:
    def test_zero_time(self):
        assert var_workload(M_EXP, 0.0, 0.0) == 0.0

    def test_beyond_truncation(self):
        assert var_workload(M_EXP, 1.0, 20.0) == pytest.approx(0.0, abs=1e-4)

    def test_small_t_against_direct_quadrature(self):
        # independent nested Simpson on the symmetric triple integral
        t, y = 1.0, 0.0
        sf = EXP1.sf

        def inner(x, z):
            return simpson(lambda s: sf(t + x - s) * sf(t + z - s)
                           + EXP1.cdf(t + min(x, z) - s) * sf(t + max(x, z) - s),
                           0.0, t, m=101)
        xs = np.linspace(0.0, 14.0, 57)
        vals = np.array([[inner(a, b) for b in xs] for a in xs])
        oracle = np.trapezoid(np.trapezoid(vals, xs, axis=1), xs)
        assert var_workload(M_EXP, t, y) == pytest.approx(oracle, rel=0.01)


class TestIncrementCovariance:
    def test_degenerate(self):
        assert cov_x2_increment(M_EXP, 1.0, 0.0, 1.0, 0.0) == 0.0
        assert cov_x2_increment(M_EXP, 0.0, 0.0, 0.5, 0.5) == 0.0

    def test_ordering_enforced(self):
        with pytest.raises(ValueError, match="ordering"):
            cov_x2_increment(M_EXP, 1.0, 0.5, 1.0, 0.0)

    def test_value_against_direct_quadrature(self):
        t, y, t2, y2 = 1.0, 0.0, 1.0, 0.5

        def g(u):
            diff = EXP1.cdf(t2 + y2 - u) - EXP1.cdf(t + y - u)
            return diff * (1.0 - diff)
        assert cov_x2_increment(M_EXP, t, y, t2, y2) == pytest.approx(
            simpson(g, 0.0, t), abs=1e-7)


class TestInitialAndTotal:
    INIT = InitialLimits(qbar_it=1.0, var_qit=0.0, residual=EXP1)

    def _inputs(self):
        return LimitInputs.from_models(PoissonArrivals(1.0), EXP1, init=self.INIT)

    def test_y_zero(self):
        qir, var_qir, _, _ = initial_and_total_limits(self._inputs(), 0.0, 0.0)
        assert qir == 1.0
        assert var_qir == 0.0     # fixed count, bridge term vanishes at 0

    def test_y_large(self):
        qir, var_qir, _, _ = initial_and_total_limits(self._inputs(), 0.0, 60.0)
        assert qir == pytest.approx(0.0, abs=1e-12)
        assert var_qir == pytest.approx(0.0, abs=1e-12)

    def test_bridge_variance_at_median(self):
        y = math.log(2.0)
        _, var_qir, _, _ = initial_and_total_limits(self._inputs(), 0.0, y)
        assert var_qir == pytest.approx(0.25, abs=1e-12)

    def test_totals_add_independent_pieces(self):
        inputs = self._inputs()
        t, y = 1.0, 0.5
        qir, var_qir, qtr, var_qtr = initial_and_total_limits(inputs, t, y)
        fic = EXP1.sf(t + y)
        assert qtr == pytest.approx(fic + fluid_qr(inputs, t, y), abs=1e-9)
        assert var_qtr == pytest.approx(
            EXP1.cdf(t + y) * fic + var_qr(inputs, t, y), abs=1e-9)

    def test_missing_init(self):
        with pytest.raises(ValueError, match="initial-condition"):
            initial_and_total_limits(M_EXP, 1.0, 0.0)


class TestSurfaces:
    def test_qe_clamps_above_diagonal(self):
        g = Grid([0.5, 1.0], [0.0, 2.0])
        field = surface(M_EXP, g, "fluid_qe")
        assert field.values[0, 1] == pytest.approx(fluid_qe(M_EXP, 0.5, 0.5), abs=1e-10)

    def test_unknown_surface(self):
        with pytest.raises(ValueError, match="unknown surface"):
            surface(M_EXP, Grid([1.0], [0.0]), "nope")
