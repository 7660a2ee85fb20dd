import math

import numpy as np
import pytest

from hqinflab.arrivals import PoissonArrivals
from hqinflab.fields import Grid, TwoParamField
from hqinflab.limits import LimitInputs, fluid_qr, surface, var_components
from hqinflab.rng import substream
from hqinflab.scaling import (clt_scale, clt_scale_arrivals, composed_empirical,
                              decompose_hatQr, lln_scale, sequential_empirical,
                              split_arrivals, x1_integration_by_parts)
from hqinflab.service import Exponential, FiniteAtoms, Mixture
from hqinflab.simulate import SimulationTrace, eval_queue_fields, simulate

EXP1 = Exponential(1.0)
ARR = PoissonArrivals(1.0)
INPUTS = LimitInputs.from_models(ARR, EXP1)


def _trace(n, horizon, seed, service=EXP1, arrival=ARR):
    return simulate(arrival, service, n=n, horizon=horizon,
                    rng=substream(seed, "scaling"))


class TestScalings:
    def test_lln_constant(self):
        g = Grid([1.0], [0.0, 1.0])
        f = TwoParamField(g, np.full((1, 2), 40.0), "Qr")
        assert np.all(lln_scale(f, 8).values == 5.0)

    def test_clt_zero_when_centered(self):
        g = Grid([1.0], [0.0, 1.0])
        center = TwoParamField(g, np.array([[2.0, 3.0]]), "c")
        f = TwoParamField(g, 16 * center.values, "Qr")
        scaled = clt_scale(f, 16, center)
        assert np.allclose(scaled.values, 0.0)

    def test_grid_mismatch(self):
        f = TwoParamField(Grid([1.0], [0.0]), np.zeros((1, 1)), "Qr")
        center = TwoParamField(Grid([2.0], [0.0]), np.zeros((1, 1)), "c")
        with pytest.raises(ValueError, match="grid"):
            clt_scale(f, 4, center)

    def test_clt_variance_matches_analytic(self):
        # M/exp at n=400: Var Qr-hat(1, 0) ~= 0.632121 over 2000 replications
        g = Grid([1.0], [0.0])
        center = surface(INPUTS, g, "fluid_qr")
        reps = 2000
        vals = np.empty(reps)
        for r in range(reps):
            trace = simulate(ARR, EXP1, 400, 1.0, substream(r, "cltvar"))
            f = eval_queue_fields(trace, g)["Qr"]
            vals[r] = clt_scale(f, 400, center).values[0, 0]
        assert np.var(vals, ddof=1) == pytest.approx(fluid_qr(INPUTS, 1.0, 0.0), rel=0.10)


class TestSequentialEmpirical:
    def test_single_sample(self):
        g = Grid([1.0], [2.0])
        field = sequential_empirical(np.array([1.5]), 1, g, EXP1)
        assert field.kbar[0, 0] == 1.0

    def test_centered_vanishes_at_infinity(self):
        g = Grid([0.5, 1.0], [1e9])
        services = np.asarray(EXP1.sample(substream(0, "se"), size=10))
        field = sequential_empirical(services, 10, g, EXP1)
        assert np.allclose(field.khat, 0.0, atol=1e-12)

    def test_exact_expectation_centering(self):
        # centering is floor(nt)/n * F(x), not t * F(x)
        g = Grid([0.25], [1.0])
        services = np.array([10.0, 10.0, 10.0])
        field = sequential_empirical(services, 3, g, EXP1)
        m = math.floor(3 * 0.25)
        assert field.khat[0, 0] == pytest.approx(
            -math.sqrt(3) * (m / 3) * EXP1.cdf(1.0))

    def test_insufficient_samples(self):
        with pytest.raises(ValueError, match="service samples"):
            sequential_empirical(np.array([1.0]), 10, Grid([1.0], [1.0]), EXP1)

    def test_dkw_bound(self):
        n = 10_000
        xs = Grid([1.0], np.linspace(0.05, 8.0, 60).tolist())
        passes = 0
        runs = 20
        for seed in range(runs):
            services = np.asarray(EXP1.sample(substream(seed, "dkw"), size=n))
            field = sequential_empirical(services, n, xs, EXP1)
            fx = np.asarray(EXP1.cdf(np.asarray(xs.y)))
            passes += np.max(np.abs(field.kbar[0] - fx)) < 0.02
        assert passes >= 0.95 * runs


class TestComposedEmpirical:
    def test_empty_trace(self):
        trace = SimulationTrace(n=4, arrivals=np.array([]), services=np.array([]),
                                horizon=1.0, service_model=EXP1)
        field = composed_empirical(trace, Grid([0.5, 1.0], [0.5, 1.0]))
        assert not field.values.any()

    def test_zero_at_origin_for_continuous_service(self):
        trace = _trace(100, 1.0, 1)
        field = composed_empirical(trace, Grid([1.0], [0.0, 1e9]))
        assert field.values[0, 0] == 0.0          # F(0) = 0, no zero services
        assert field.values[0, 1] == pytest.approx(0.0, abs=1e-12)   # R(t, inf) = 0

    def test_variance_matches_limit(self):
        # Var R(1, x) -> abar(1) F(x) (1 - F(x))
        x = math.log(2.0)
        reps = 2000
        vals = np.empty(reps)
        g = Grid([1.0], [x])
        for r in range(reps):
            trace = simulate(ARR, EXP1, 400, 1.0, substream(r, "rhat"))
            vals[r] = composed_empirical(trace, g).values[0, 0]
        target = 1.0 * 0.5 * 0.5
        assert np.var(vals, ddof=1) == pytest.approx(target, rel=0.15)

    def test_asymptotically_independent_of_arrivals(self):
        # |corr(A-hat_n(1), R-hat_n(1, median))| < 0.08 at n=400
        reps = 2000
        a_vals = np.empty(reps)
        r_vals = np.empty(reps)
        g = Grid([1.0], [math.log(2.0)])
        for r in range(reps):
            trace = simulate(ARR, EXP1, 400, 1.0, substream(r, "indep"))
            a_vals[r] = clt_scale_arrivals(trace, np.array([1.0]), INPUTS.abar)[0]
            r_vals[r] = composed_empirical(trace, g).values[0, 0]
        rho = np.corrcoef(a_vals, r_vals)[0, 1]
        assert abs(rho) < 0.08


class TestSplitArrivals:
    def test_pure_continuous(self):
        trace = _trace(100, 1.0, 2)
        out = split_arrivals(trace, EXP1.decompose(), np.array([0.5, 1.0]))
        assert np.array_equal(out["Ac"].values, trace.count_arrivals([0.5, 1.0]))
        assert not out["Ad"].values.any()

    def test_atom_fractions(self):
        service = FiniteAtoms(((1.0, 0.3), (2.0, 0.7)))
        trace = simulate(PoissonArrivals(1.0), service, 100_000, 1.0,
                         substream(3, "split"))
        out = split_arrivals(trace, service.decompose(), np.array([1.0]))
        total = trace.count_arrivals([1.0])[0]
        # first atom in mass order is the one at 2.0 with mass 0.7
        assert out["Adi"][0].values[0] / total == pytest.approx(0.7, abs=0.01)

    def test_partition(self):
        mix = Mixture(0.5, EXP1, FiniteAtoms(((1.0, 1.0),)))
        trace = simulate(ARR, mix, 500, 2.0, substream(5, "split"))
        ts = np.array([0.5, 1.0, 2.0])
        out = split_arrivals(trace, mix.decompose(), ts)
        assert np.array_equal(out["Ac"].values + out["Ad"].values,
                              trace.count_arrivals(ts))
        per_atom = sum(f.values for f in out["Adi"])
        assert np.array_equal(per_atom, out["Ad"].values)

    def test_alien_value_under_atomic_law(self):
        service = FiniteAtoms(((1.0, 1.0),))
        trace = SimulationTrace(n=1, arrivals=np.array([0.5]),
                                services=np.array([1.5]), horizon=1.0,
                                service_model=service)
        with pytest.raises(ValueError, match="match no atom"):
            split_arrivals(trace, service.decompose(), np.array([1.0]))


class TestDecomposition:
    def test_additivity_exact(self):
        g = Grid([0.5, 1.0, 2.0], [0.0, 0.5])
        center = surface(INPUTS, g, "fluid_qr")
        for seed in range(3):
            trace = _trace(300, 2.0, seed)
            x1, x2 = decompose_hatQr(trace, g, center)
            qhat = clt_scale(eval_queue_fields(trace, g)["Qr"], trace.n, center)
            assert np.max(np.abs(x1.values + x2.values - qhat.values)) < 1e-9

    def test_refused_for_atomic_service(self):
        mix = Mixture(0.5, EXP1, FiniteAtoms(((1.0, 1.0),)))
        trace = simulate(ARR, mix, 50, 1.0, substream(0, "dec"))
        g = Grid([1.0], [0.0])
        center = TwoParamField(g, np.zeros((1, 1)), "fluid_qr")
        with pytest.raises(ValueError, match="refused"):
            decompose_hatQr(trace, g, center)

    def test_x1_matches_integration_by_parts(self):
        g = Grid([0.5, 1.0, 2.0], [0.0, 0.5])
        center = surface(INPUTS, g, "fluid_qr")
        trace = _trace(200, 2.0, 7)
        x1, _ = decompose_hatQr(trace, g, center)
        parts = x1_integration_by_parts(trace, g, INPUTS.abar, INPUTS.rate)
        assert np.max(np.abs(x1.values - parts)) < 1e-6

    def test_x2_variance(self):
        # Var X2(1, 0) -> int_0^1 F(1-s) F^c(1-s) ds = 0.199789
        g = Grid([1.0], [0.0])
        center = surface(INPUTS, g, "fluid_qr")
        target = var_components(INPUTS, 1.0, 0.0).service
        # closed form 1/2 - e^-1 + e^-2/2
        assert target == pytest.approx(0.5 - math.exp(-1.0) + 0.5 * math.exp(-2.0),
                                       abs=1e-9)
        reps = 2000
        vals = np.empty(reps)
        for r in range(reps):
            trace = simulate(ARR, EXP1, 400, 1.0, substream(r, "x2var"))
            _, x2 = decompose_hatQr(trace, g, center)
            vals[r] = x2.values[0, 0]
        assert np.var(vals, ddof=1) == pytest.approx(target, rel=0.15)
