import numpy as np
import pytest

from scdt_sysid.errors import BadSensorLocation, Instability, StabilityError
from scdt_sysid.simulator import (
    InitialCondition,
    MaterialParams,
    ParameterSpace,
    SimGrid,
    Uniform,
    Fixed,
    conservation_check,
    sample_params,
    simulate,
    simulate_batch,
)
from conftest import COARSE_GRID, COARSE_IC


def translated_velocity_profile(t, ic: InitialCondition, nu: float, x_sensor: float):
    """Exact sensor velocity for the plain wave equation (pure +x transport)."""
    arg = x_sensor - nu * t - ic.x0
    return nu * arg / ic.sigma**2 * np.exp(-(arg**2) / (2 * ic.sigma**2))


@pytest.fixture(scope="module")
def linear_trace():
    return simulate(MaterialParams(rho=1.0, E=1.0), SimGrid(), InitialCondition())


class TestLinearLimit:
    def test_matches_translated_profile(self, linear_trace):
        ic = InitialCondition()
        exact = translated_velocity_profile(linear_trace.signal.t, ic, 1.0, 300.0)
        err = np.linalg.norm(linear_trace.signal.samples - exact) / np.linalg.norm(exact)
        assert err < 0.02

    def test_peak_arrival(self, linear_trace):
        # (x_sensor - x0) / nu = 250; within 2 grid steps (dx=1 -> 2 s)
        assert abs(linear_trace.peak_time - 250.0) <= 2.0

    def test_profile_amplitude_preserved(self, linear_trace):
        ic_max = np.max(np.abs(InitialCondition().velocity(SimGrid().x, 1.0)))
        assert linear_trace.max_velocity == pytest.approx(ic_max, rel=1e-3)


class TestConservation:
    def test_linear_drift(self):
        tr = simulate(
            MaterialParams(rho=1.0, E=1.0, eta=0.15, M=0.25, F=0.01),
            COARSE_GRID,
            COARSE_IC,
        )
        assert conservation_check(tr) < 1e-8

    def test_nonlinear_drift(self):
        tr = simulate(
            MaterialParams(rho=1.0, E=1.0, eta=0.15, M=0.25, F=0.01, beta=0.6),
            COARSE_GRID,
            COARSE_IC,
        )
        assert conservation_check(tr) < 1e-6

    def test_halving_dt_does_not_worsen_drift(self):
        p = MaterialParams(rho=1.0, E=1.0, eta=0.1, M=0.2, F=0.01, beta=0.4)
        g1 = SimGrid(n_points=300, dx=2.0, dt=0.3, n_steps=400)
        g2 = SimGrid(n_points=300, dx=2.0, dt=0.15, n_steps=800)
        d1 = conservation_check(simulate(p, g1, COARSE_IC))
        d2 = conservation_check(simulate(p, g2, COARSE_IC))
        assert d2 <= max(d1, 1e-12)


class TestSpectralAccuracy:
    def test_refining_grid_reduces_linear_error(self):
        # marginally resolved pulse on the coarse grid
        ic = InitialCondition(x0=48.0, sigma=4.7)
        errs = []
        for n_points, dx in ((150, 4.0), (300, 2.0)):
            grid = SimGrid(n_points=n_points, dx=dx, dt=0.2, n_steps=1750)
            tr = simulate(MaterialParams(rho=1.0, E=1.0), grid, ic, x_sensor=296.0)
            exact = translated_velocity_profile(tr.signal.t, ic, 1.0, 296.0)
            errs.append(
                np.linalg.norm(tr.signal.samples - exact) / np.linalg.norm(exact)
            )
        assert errs[0] >= 4.0 * errs[1]


class TestNonlinearity:
    def test_beta_changes_trace(self):
        base = dict(rho=1.0, E=1.0, eta=0.15, M=0.25, F=0.01)
        tr0 = simulate(MaterialParams(**base), COARSE_GRID, COARSE_IC)
        tr1 = simulate(MaterialParams(**base, beta=0.5), COARSE_GRID, COARSE_IC)
        rel = np.linalg.norm(tr1.signal.samples - tr0.signal.samples) / np.linalg.norm(
            tr0.signal.samples
        )
        assert rel > 0.05


class TestDampingSign:
    GRID = SimGrid(n_points=128, dx=1.0, dt=0.1, n_steps=100)
    IC = InitialCondition(x0=32.0, sigma=1.5)  # narrow pulse, high-k content

    def max_abs(self, sign, eta):
        tr = simulate_batch(
            [MaterialParams(rho=1.0, E=1.0, eta=eta)],
            self.GRID,
            self.IC,
            x_sensor=33.0,
            damping_sign=sign,
        )[0]
        return np.max(np.abs(tr.signal.samples))

    def test_verbatim_sign_antidamps_and_shipped_damps(self):
        baseline = self.max_abs(+1.0, 0.0)
        grown = self.max_abs(+1.0, 0.2)  # literal PDE sign
        damped = self.max_abs(-1.0, 0.2)  # shipped default
        assert grown > baseline > damped

    def test_verbatim_sign_blows_up_on_long_run(self):
        grid = SimGrid(n_points=128, dx=1.0, dt=0.1, n_steps=3000)
        with pytest.raises(Instability):
            simulate_batch(
                [MaterialParams(rho=1.0, E=1.0, eta=0.2)],
                grid,
                self.IC,
                x_sensor=33.0,
                damping_sign=+1.0,
            )


class TestDeterminismAndBatching:
    def test_bit_identical_repeat(self):
        p = MaterialParams(rho=1.0, E=1.02, eta=0.12, M=0.22, F=0.01, beta=0.3)
        a = simulate(p, COARSE_GRID, COARSE_IC)
        b = simulate(p, COARSE_GRID, COARSE_IC)
        assert np.array_equal(a.signal.samples, b.signal.samples)

    def test_batch_repeat_bit_identical(self):
        ps = [
            MaterialParams(rho=1.0, E=1.0 + 0.01 * i, eta=0.1, M=0.2, F=0.01, beta=0.2)
            for i in range(5)
        ]
        a = simulate_batch(ps, COARSE_GRID, COARSE_IC)
        b = simulate_batch(ps, COARSE_GRID, COARSE_IC)
        for x, y in zip(a, b):
            assert np.array_equal(x.signal.samples, y.signal.samples)

    def test_batch_close_to_single(self):
        ps = [
            MaterialParams(rho=1.0, E=1.0 + 0.01 * i, eta=0.1, M=0.2, F=0.01, beta=0.2)
            for i in range(3)
        ]
        batch = simulate_batch(ps, COARSE_GRID, COARSE_IC)
        for p, tr in zip(ps, batch):
            single = simulate(p, COARSE_GRID, COARSE_IC)
            assert np.allclose(single.signal.samples, tr.signal.samples, atol=1e-12)


class TestValidation:
    def test_stability_guard(self):
        with pytest.raises(StabilityError):
            simulate(MaterialParams(E=4.0), SimGrid(dt=0.5), InitialCondition())
        with pytest.raises(StabilityError):
            simulate(
                MaterialParams(eta=3.0), SimGrid(dt=0.3), InitialCondition()
            )

    def test_bad_sensor_location(self):
        with pytest.raises(BadSensorLocation):
            simulate(MaterialParams(), COARSE_GRID, COARSE_IC, x_sensor=301.0)
        with pytest.raises(BadSensorLocation):
            simulate(MaterialParams(), COARSE_GRID, COARSE_IC, x_sensor=1e6)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            MaterialParams(rho=0.0)
        with pytest.raises(ValueError):
            MaterialParams(beta=-0.1)

    def test_pulse_width_guard(self):
        with pytest.raises(ValueError):
            simulate(
                MaterialParams(),
                SimGrid(n_points=32, dx=1.0, dt=0.1, n_steps=10),
                InitialCondition(x0=16.0, sigma=12.0),
                x_sensor=20.0,
            )


class TestSampleParams:
    def test_default_ranges(self):
        for seed in range(25):
            p = sample_params(seed)
            assert 0.95 <= p.E <= 1.05
            assert 0.2 <= p.M <= 0.3
            assert 0.1 <= p.eta <= 0.2
            assert p.F == 0.01
            assert p.rho == 1.0
            assert p.beta == 0.0

    def test_deterministic(self):
        assert sample_params(1234) == sample_params(1234)

    def test_distinct_seeds_differ(self):
        assert sample_params(1) != sample_params(2)

    def test_custom_space(self):
        space = ParameterSpace(beta=Uniform(0.01, 0.6), M=Fixed(0.0))
        p = sample_params(7, space)
        assert 0.01 <= p.beta <= 0.6 and p.M == 0.0
