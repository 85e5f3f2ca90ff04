import numpy as np
import pytest

from scdt_sysid.errors import DimensionMismatch, NonPositiveShift, OutOfSupport
from scdt_sysid.models import (
    AffineWarpFamily,
    ConvDiffModel,
    DiffusionModel,
    TaylorNeighborhood,
    WaveModel,
    estimate_wave_speed,
    taylor_inverse_warp_D,
    taylor_inverse_warp_nu,
)
from scdt_sysid.signals import Signal
from scdt_sysid.transform import CdtRepr, ReferenceDomain, apply_warp

MODEL = ConvDiffModel(nu=1.0, D=0.25, x_m=300.0)


def rel_linf(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


class TestConvDiffSensor:
    def test_peak_near_arrival_time(self):
        t = np.linspace(1.0, 600.0, 200001)
        s = MODEL.sensor(t)
        assert abs(t[np.argmax(s)] - MODEL.x_m / MODEL.nu) < 1.0

    def test_small_D_narrows_pulse_finite_integral(self):
        t = np.linspace(1.0, 600.0, 60000)
        widths, integrals = [], []
        for D in (0.5, 0.25, 0.1):
            m = ConvDiffModel(nu=1.0, D=D, x_m=300.0)
            s = m.sensor(t)
            cdf = np.cumsum(s)
            cdf /= cdf[-1]
            q10, q90 = np.interp([0.1, 0.9], cdf, t)
            widths.append(q90 - q10)
            integrals.append(np.trapezoid(s, t))
        assert widths[0] > widths[1] > widths[2]
        for val in integrals:  # advected unit mass: integral ~ 1/nu
            assert 0.5 < val < 2.0

    def test_scaling_symmetry_direct_evaluation(self):
        # s(t; nu, D, x_m) == s(a*t; nu/a, D/a, x_m) for a > 0
        t = np.linspace(100.0, 590.0, 4001)
        a = 2.0
        left = ConvDiffModel(nu=1.0, D=0.25, x_m=300.0).sensor(t)
        right = ConvDiffModel(nu=1.0 / a, D=0.25 / a, x_m=300.0).sensor(a * t)
        assert np.allclose(left, right, rtol=1e-12)

    def test_out_of_support(self):
        with pytest.raises(OutOfSupport):
            MODEL.sensor(np.array([-1.0, 2.0]))


class TestConvDiffTemplateAndWarp:
    def test_template_positive_on_support(self):
        z = np.linspace(0.01, 150.0, 5000)
        assert np.all(MODEL.template(z) > 0)

    def test_template_large_t_decay_dominated_by_exp(self):
        z = np.array([20.0, 21.0, 40.0, 41.0])
        phi = MODEL.template(z)
        assert phi[1] / phi[0] == pytest.approx(np.exp(-1.0), rel=0.05)
        assert phi[3] / phi[2] == pytest.approx(np.exp(-1.0), rel=0.02)

    def test_warp_increasing_and_positive_derivative(self):
        for a_frac in (0.02, 0.05, 0.2):
            arrival = MODEL.x_m / MODEL.nu
            m = ConvDiffModel(1.0, 0.25, 300.0, t0=arrival * (1 + a_frac))
            t = np.linspace(m.t0, m.t1, 4001)
            w = m.warp(t)
            assert np.all(np.diff(w.values) > 0)
            assert np.all(w.deriv > 0)
            fd = np.gradient(w.values, t)
            assert np.max(np.abs(fd[1:-1] - w.deriv[1:-1])) < 1e-4 * np.max(w.deriv)

    def test_warp_out_of_support(self):
        with pytest.raises(OutOfSupport):
            MODEL.warp(np.array([10.0]))  # below t0 = 315

    def test_inverse_at_zero(self):
        # discriminant vanishes at z = 0 and the root is the arrival time
        assert MODEL.inverse_warp(0.0)[0] == pytest.approx(MODEL.x_m / MODEL.nu)

    def test_discriminant_positive(self):
        z = np.linspace(1e-6, 200.0, 1000)
        disc = (MODEL.x_m * MODEL.nu + 2 * MODEL.D * z) ** 2 - MODEL.nu**2 * MODEL.x_m**2
        assert np.all(disc > 0)
        assert np.allclose(disc, 4 * (MODEL.D**2 * z**2 + MODEL.nu * MODEL.D * MODEL.x_m * z))

    def test_warp_inverse_round_trip(self):
        t = np.linspace(MODEL.t0, MODEL.t1, 2001)
        z = MODEL.warp(t).values
        back = MODEL.inverse_warp(z)
        assert np.max(np.abs(back - t)) < 1e-10 * np.max(t)

    def test_rejected_root_is_decreasing(self):
        z = np.linspace(0.5, 100.0, 500)
        other = MODEL.inverse_warp_decreasing_root(z)
        assert np.all(np.diff(other) < 0)

    def test_composition_identity_via_apply_warp(self):
        t = np.linspace(MODEL.t0, MODEL.t1, 4001)
        warp = MODEL.warp(t)
        z = np.linspace(warp.values[0], warp.values[-1], 1 << 17)
        template = Signal(MODEL.template(z), z[0], z[1] - z[0])
        sensor = apply_warp(template, warp)
        assert rel_linf(sensor.samples, MODEL.sensor(t)) < 1e-6

    def test_support_validation(self):
        with pytest.raises(ValueError):
            ConvDiffModel(1.0, 0.2, 300.0, t0=299.0)  # not after arrival
        with pytest.raises(ValueError):
            ConvDiffModel(1.0, 0.2, 300.0, t0=400.0, t1=350.0)


class TestTaylorFamilies:
    def test_exact_at_center_D(self):
        nb = TaylorNeighborhood(center=0.25, half_width=0.05)
        t = np.linspace(1.0, 120.0, 512)
        fam = taylor_inverse_warp_D(MODEL, nb, t)
        assert np.allclose(fam(0.25), MODEL.inverse_warp(t), rtol=1e-14)

    def test_exact_at_center_nu(self):
        nb = TaylorNeighborhood(center=1.0, half_width=0.1)
        t = np.linspace(1.0, 120.0, 512)
        fam = taylor_inverse_warp_nu(MODEL, nb, t)
        assert np.allclose(fam(1.0), MODEL.inverse_warp(t), rtol=1e-14)

    @pytest.mark.parametrize("which", ["D", "nu"])
    def test_second_order_error_decay(self, which):
        t = np.linspace(1.0, 120.0, 512)
        center = 0.25 if which == "D" else 1.0
        errs = []
        for eps in (0.08 * center, 0.04 * center):
            nb = TaylorNeighborhood(center=center, half_width=eps)
            if which == "D":
                fam = taylor_inverse_warp_D(MODEL, nb, t)
                exact = ConvDiffModel(MODEL.nu, center + eps, MODEL.x_m).inverse_warp(t)
            else:
                fam = taylor_inverse_warp_nu(MODEL, nb, t)
                exact = ConvDiffModel(center + eps, MODEL.D, MODEL.x_m).inverse_warp(t)
            errs.append(np.max(np.abs(fam(center + eps) - exact)))
        ratio = errs[0] / errs[1]
        assert 3.5 <= ratio <= 4.5

    @pytest.mark.parametrize("which", ["D", "nu"])
    def test_affine_midpoint_identity(self, which):
        t = np.linspace(1.0, 120.0, 256)
        center = 0.25 if which == "D" else 1.0
        eps = 0.1 * center
        nb = TaylorNeighborhood(center=center, half_width=eps)
        fam = (taylor_inverse_warp_D if which == "D" else taylor_inverse_warp_nu)(
            MODEL, nb, t
        )
        mid = 0.5 * (fam(center - eps) + fam(center + eps))
        assert np.allclose(mid, fam(center), rtol=1e-13)

    def test_neighborhood_validation(self):
        with pytest.raises(ValueError):
            TaylorNeighborhood(center=0.1, half_width=0.1)  # hits zero
        with pytest.raises(ValueError):
            TaylorNeighborhood(center=0.5, half_width=0.0)


class TestDiffusionModel:
    M = DiffusionModel(D=0.3, x_m=10.0)

    def test_composition_identity_direct(self):
        t = np.linspace(0.5, 200.0, 4001)
        w = self.M.warp(t)
        composed = w.deriv * self.M.template(w.values)
        assert np.max(np.abs(composed - self.M.sensor(t))) < 1e-10 * np.max(
            self.M.sensor(t)
        )

    def test_composition_identity_via_apply_warp(self):
        t = np.linspace(0.5, 200.0, 4001)
        w = self.M.warp(t)
        z = np.linspace(w.values[0], w.values[-1], 1 << 16)
        template = Signal(self.M.template(z), z[0], z[1] - z[0])
        sensor = apply_warp(template, w)
        assert rel_linf(sensor.samples, self.M.sensor(t)) < 1e-6

    def test_inverse_warp_linear_in_reciprocal_D(self):
        t = np.linspace(0.1, 50.0, 64)
        d1, d2 = 0.2, 0.7
        harmonic = 2.0 / (1.0 / d1 + 1.0 / d2)
        avg = 0.5 * (
            DiffusionModel(d1, 10.0).inverse_warp(t)
            + DiffusionModel(d2, 10.0).inverse_warp(t)
        )
        assert np.allclose(avg, DiffusionModel(harmonic, 10.0).inverse_warp(t), rtol=1e-14)

    def test_template_reciprocal_D_prefactor(self):
        t = np.linspace(0.2, 30.0, 128)
        a = DiffusionModel(0.2, 10.0).template(t) * 0.2
        b = DiffusionModel(0.9, 10.0).template(t) * 0.9
        assert np.allclose(a, b, rtol=1e-14)

    def test_warp_inverse_round_trip(self):
        t = np.linspace(0.5, 100.0, 256)
        z = self.M.warp(t).values
        assert np.allclose(self.M.inverse_warp(z), t, rtol=1e-14)

    def test_nonpositive_t(self):
        with pytest.raises(OutOfSupport):
            self.M.template(np.array([0.0]))
        with pytest.raises(OutOfSupport):
            self.M.sensor(np.array([-2.0]))


class TestWaveModel:
    def test_warp_and_inverse(self):
        m = WaveModel(nu=2.0, x_m=300.0)
        t = np.linspace(0.0, 100.0, 64)
        w = m.warp(t)
        assert np.allclose(w.values, t - 150.0)
        assert np.allclose(m.inverse_warp(w.values), t)

    def test_composition_identity_via_apply_warp(self):
        m = WaveModel(nu=1.5, x_m=30.0)
        z = np.linspace(-40.0, 60.0, 1 << 16)
        template_fn = lambda u: np.exp(-(u**2) / 2.0)
        template = Signal(template_fn(z), z[0], z[1] - z[0])
        t = np.linspace(-10.0, 70.0, 4001)
        sensor = apply_warp(template, m.warp(t))
        assert rel_linf(sensor.samples, m.sensor(template_fn, t)) < 1e-6


class TestVelocityEstimate:
    def make_cdt(self, values):
        ref = ReferenceDomain.uniform(len(values))
        return CdtRepr(np.asarray(values, dtype=float), ref)

    def test_constant_shift_examples(self):
        base = np.linspace(10.0, 40.0, 128)
        tpl = self.make_cdt(base)
        assert estimate_wave_speed(tpl, self.make_cdt(base + 300.0), 300.0) == pytest.approx(1.0)
        assert estimate_wave_speed(tpl, self.make_cdt(base + 150.0), 300.0) == pytest.approx(2.0)

    def test_nonpositive_shift_raises(self):
        base = np.linspace(10.0, 40.0, 64)
        with pytest.raises(NonPositiveShift):
            estimate_wave_speed(self.make_cdt(base), self.make_cdt(base - 5.0), 300.0)

    def test_grid_mismatch_raises(self):
        a = self.make_cdt(np.linspace(0, 1, 16))
        b = CdtRepr(np.linspace(0, 1, 8), ReferenceDomain.uniform(8))
        with pytest.raises(DimensionMismatch):
            estimate_wave_speed(a, b, 300.0)
