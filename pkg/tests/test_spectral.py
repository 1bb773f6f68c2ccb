import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.physics import units as u

from icts import spectral
from icts.errors import InsufficientSpan, InvalidArgument, UndefinedCoherence
from icts.spectral import (
    C,
    CrystalParams,
    FilterSpec,
    FrequencyGrid,
    GeometryParams,
    PumpParams,
    bogoliubov_coeffs,
    coherence_length,
    correlation_fwhm,
    g1_of_delay,
    g1_of_mismatch,
    g1_triangle,
    idler_spectrum,
    signal_flux,
)

# mpmath root of sinc^2(x) = 1/2
HALF_POWER_X = 1.39155737825151015


def pump(flux=1e22):
    return PumpParams(flux, 2e-11, 2.2, 2.1, 2.3, 2.3e15, 1.2e15, 3.5e15)


class TestSigma:
    def test_zero_flux(self):
        assert spectral.sigma_from_pump(pump(0.0)) == 0.0

    def test_square_root_scaling(self):
        ratio = spectral.sigma_from_pump(pump(2e22)) / spectral.sigma_from_pump(pump(1e22))
        assert ratio == pytest.approx(math.sqrt(2), rel=1e-14)

    def test_matches_symbolic_evaluation(self):
        hbar, ws, wi, wp, chi, f, eps, c, ns, ni, np_ = sympy.symbols(
            "hbar w_s w_i w_p chi F eps c n_s n_i n_p", positive=True
        )
        expr = sympy.sqrt(hbar * ws * wi * wp * chi**2 * f / (8 * eps * c**2 * ns * ni * np_))
        p = pump()
        val = expr.subs(
            {
                hbar: spectral.HBAR, ws: p.omega_s, wi: p.omega_i, wp: p.omega_p, chi: p.chi2,
                f: p.flux, eps: spectral.EPS0, c: C, ns: p.n_s, ni: p.n_i, np_: p.n_p,
            }
        )
        assert spectral.sigma_from_pump(p) == pytest.approx(float(val), rel=1e-12)

    def _dimension(self, flux_unit):
        per_s = 1 / u.s
        sq = u.hbar * per_s**3 * (u.m / u.volt) ** 2 * flux_unit / (u.farad / u.m * (u.m / u.s) ** 2)
        return u.convert_to(sympy.sqrt(sq), [u.m, u.s, u.kg, u.A])

    @staticmethod
    def _dimensionless(expr):
        return not u.convert_to(expr, [u.m, u.s, u.kg, u.A]).atoms(u.Quantity)

    def test_unit_audit(self):
        # 1/m when the pump enters as a photon number density
        assert self._dimensionless(self._dimension(1 / u.m**3) * u.m)
        # a photon flux per unit area leaves a residual 1/sqrt(m s)
        flux = self._dimension(1 / (u.s * u.m**2))
        assert not self._dimensionless(flux * u.m)
        assert self._dimensionless(flux**2 * u.m * u.s)

    def test_from_pump(self):
        p = CrystalParams.from_pump(
            pump(), length=0.02, inv_vg_signal=2.26 / C, inv_vg_idler=2.2 / C,
            wl_signal=809.4e-9, wl_idler=1552.3e-9,
        )
        assert p.sigma == spectral.sigma_from_pump(pump())

    def test_invalid_pump(self):
        with pytest.raises(InvalidArgument):
            PumpParams(1.0, 0.0, 2.2, 2.1, 2.3, 1.0, 1.0, 2.0)


class TestCrystal:
    def test_calibration(self, crystal):
        assert crystal.D < 0
        assert crystal.walkoff_time == pytest.approx(4.4503e-12, rel=1e-4)
        assert C * crystal.walkoff_time == pytest.approx(1.3342e-3, rel=1e-4)
        assert crystal.wl_pump == pytest.approx(532.00306e-9, rel=1e-7)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"length": 0.0},
            {"sigma": -1.0},
            {"inv_vg_idler": 2.26 / C},
            {"wl_pump": 540e-9},
        ],
    )
    def test_invalid(self, kwargs):
        base = dict(
            length=0.02, sigma=1.0, inv_vg_signal=2.26 / C, inv_vg_idler=2.2 / C,
            wl_signal=809.4e-9, wl_idler=1552.3e-9,
        )
        base.update(kwargs)
        with pytest.raises(InvalidArgument):
            CrystalParams(**base)

    def test_geometry_non_negative(self):
        with pytest.raises(InvalidArgument):
            GeometryParams(-1.0)


class TestBogoliubov:
    def test_low_gain_peak(self, crystal):
        c = bogoliubov_coeffs(crystal, 0.0, "low_gain")
        assert c.u == 1 and c.v == pytest.approx(crystal.sigma * crystal.length, rel=1e-15)

    def test_first_sinc_zero(self):
        p = CrystalParams.calibrated(sigma=0.01 / 0.02)
        c = bogoliubov_coeffs(p, p.lobe_width, "low_gain")
        assert abs(c.v) < 1e-17

    def test_general_unitarity_both_branches(self):
        p = CrystalParams.calibrated(sigma=50.0)
        omega = FrequencyGrid.for_crystal(p).omega
        q = p.sigma**2 - (p.D * omega) ** 2 / 4
        assert (q > 0).any() and (q < 0).any()
        assert bogoliubov_coeffs(p, omega).unitarity_defect.max() <= 1e-10

    def test_gamma_zero_is_continuous(self):
        p = CrystalParams.calibrated(sigma=50.0)
        w0 = 2 * p.sigma / abs(p.D)  # Gamma = 0
        omega = w0 * (1 + np.array([-1e-6, -1e-12, 0.0, 1e-12, 1e-6]))
        c = bogoliubov_coeffs(p, omega)
        assert np.all(np.isfinite(c.v))
        assert np.ptp(np.abs(c.v)) < 1e-4
        assert c.unitarity_defect.max() <= 1e-10
        # sinh(Gamma L) / Gamma -> L
        assert abs(c.v[2]) == pytest.approx(p.sigma * p.length, rel=1e-12)

    @given(st.floats(0.0, 200.0), st.floats(-2e13, 2e13))
    @settings(max_examples=200, deadline=None)
    def test_unitarity_property(self, sigma, omega):
        p = CrystalParams.calibrated(sigma=sigma)
        assert bogoliubov_coeffs(p, omega).unitarity_defect <= 1e-10 * max(1.0, math.cosh(sigma * p.length)) ** 2

    def test_general_approaches_low_gain(self, crystal):
        omega = np.linspace(-3, 3, 101) * crystal.lobe_width
        gen = bogoliubov_coeffs(crystal, omega)
        low = bogoliubov_coeffs(crystal, omega, "low_gain")
        sl = crystal.sigma * crystal.length
        # the general form carries an extra factor i in V
        assert np.abs(gen.v - 1j * low.v).max() <= sl**3
        assert np.abs(gen.u - 1).max() <= 2 * sl + sl**2

    def test_scalar_returns_scalar(self, crystal):
        c = bogoliubov_coeffs(crystal, 1e12)
        assert np.ndim(c.u) == 0 and np.ndim(c.v) == 0

    def test_unknown_mode(self, crystal):
        with pytest.raises(InvalidArgument):
            bogoliubov_coeffs(crystal, 0.0, "strong")


class TestSpectrum:
    def test_half_power_constant(self):
        p = CrystalParams.calibrated(idler_fwhm=0.7e-9, length=11e-3)
        spec = idler_spectrum(p, FrequencyGrid.for_crystal(p, 8, 4096))
        assert spec.fwhm_rad_s * p.walkoff_time == pytest.approx(4 * HALF_POWER_X, abs=1e-3)

    def test_calibrated_nm(self, crystal):
        spec = idler_spectrum(crystal, FrequencyGrid.for_crystal(crystal, 8, 2001))
        assert spec.fwhm_nm == pytest.approx(1.600, abs=0.016)
        assert spec.center_nm == pytest.approx(1552.3, abs=1e-9)

    def test_even(self, crystal):
        spec = idler_spectrum(crystal, FrequencyGrid.for_crystal(crystal, 8, 2001))
        np.testing.assert_allclose(spec.intensity, spec.intensity[::-1], rtol=1e-12, atol=1e-12 * spec.intensity.max())

    def test_narrow_grid(self, crystal):
        with pytest.raises(InsufficientSpan):
            idler_spectrum(crystal, FrequencyGrid(0.5 * crystal.lobe_width, 101))

    def test_zero_gain(self):
        with pytest.raises(UndefinedCoherence):
            idler_spectrum(CrystalParams.calibrated(sigma=0.0), FrequencyGrid(1e13, 101))


class TestFlux:
    def test_closed_form(self):
        p = CrystalParams.calibrated(sigma=3.0)
        assert signal_flux(p) * abs(p.D) / (p.sigma**2 * p.length) == pytest.approx(1.0, abs=1e-6)

    def test_sigma_scaling(self):
        a = signal_flux(CrystalParams.calibrated(sigma=1.0))
        b = signal_flux(CrystalParams.calibrated(sigma=2.0))
        assert b / a == pytest.approx(4.0, rel=1e-12)

    def test_length_scaling(self, crystal):
        p2 = CrystalParams(
            2 * crystal.length, crystal.sigma, crystal.inv_vg_signal, crystal.inv_vg_idler,
            crystal.wl_signal, crystal.wl_idler,
        )
        assert signal_flux(p2) / signal_flux(crystal) == pytest.approx(2.0, rel=1e-9)


GEOM = GeometryParams(0.10, 0.05, 0.05, 0.30)


def delays(p, n=201, half_widths=1.5):
    return spectral.apex_delay(p, GEOM) + np.linspace(-half_widths, half_widths, n) * p.walkoff_time


class TestCorrelation:
    def test_zero_tau(self, crystal):
        assert not np.any(g1_of_delay(crystal, GEOM, 0.0, delays(crystal, 11)))

    def test_apex(self, crystal):
        g = abs(g1_of_delay(crystal, GEOM, 1.0, spectral.apex_delay(crystal, GEOM)))
        assert 1 - 1e-3 <= g <= 1.0

    def test_triangle_agreement(self, crystal):
        T = delays(crystal)
        num = np.abs(g1_of_delay(crystal, GEOM, 1.0, T))
        assert np.max(np.abs(num - g1_triangle(crystal, GEOM, 1.0, T))) <= 1e-3

    def test_triangle_points(self, crystal):
        apex = spectral.apex_delay(crystal, GEOM)
        dl = crystal.walkoff_time
        assert g1_triangle(crystal, GEOM, 0.9, apex) == pytest.approx(0.9)
        assert g1_triangle(crystal, GEOM, 1.0, apex + dl) == pytest.approx(0.0, abs=1e-12)
        assert g1_triangle(crystal, GEOM, 1.0, apex - dl) == pytest.approx(0.0, abs=1e-12)
        half = g1_triangle(crystal, GEOM, 0.9, apex + 0.5 * dl)
        assert half == pytest.approx(0.45, abs=1e-12)
        assert abs(g1_of_delay(crystal, GEOM, 0.9, apex + 0.5 * dl)) == pytest.approx(0.45, abs=1e-3)

    def test_fwhm_equals_walkoff(self, crystal):
        assert correlation_fwhm(crystal) / crystal.walkoff_time == pytest.approx(1.0, abs=1e-2)

    @given(st.floats(0.01, 1.0), st.floats(-1.5, 1.5))
    @settings(max_examples=30, deadline=None)
    def test_linear_in_tau(self, tau, x):
        p = CrystalParams.calibrated()
        T = spectral.apex_delay(p, GEOM) + x * p.walkoff_time
        ref = g1_of_delay(p, GEOM, 1.0, T)
        got = g1_of_delay(p, GEOM, tau * np.exp(0.3j), T)
        if abs(ref) > 1e-9:
            assert abs(got) / abs(ref) == pytest.approx(tau, rel=1e-12)

    def test_grid_doubling(self, crystal):
        T = delays(crystal, 41)
        g = spectral.FrequencyGrid.default(crystal)
        a = g1_of_delay(crystal, GEOM, 1.0, T, g)
        b = g1_of_delay(crystal, GEOM, 1.0, T, FrequencyGrid(g.span, 2 * g.count - 1))
        assert np.abs(a - b).max() < 1e-6

    def test_scalar_matches_vector(self, crystal):
        T = delays(crystal, 17)
        vec = g1_of_delay(crystal, GEOM, 1.0, T)
        for t, v in zip(T, vec):
            assert g1_of_delay(crystal, GEOM, 1.0, t) == v

    def test_short_span_rejected(self, crystal):
        with pytest.raises(InsufficientSpan):
            g1_of_mismatch(crystal, 1.0, 0.0, FrequencyGrid(4 * crystal.lobe_width, 1025))

    def test_filter_blocks_everything(self, crystal):
        far = FilterSpec(700e-9, 0.1e-9, "rectangular")
        with pytest.raises(UndefinedCoherence):
            g1_of_mismatch(crystal, 1.0, 0.0, filter=far)


class TestFilter:
    def test_transmission_shape(self):
        f = FilterSpec(809.4e-9, 0.1e-9)
        w = f.angular_fwhm
        assert f.transmission(0.0, 809.4e-9) == 1.0
        assert f.transmission(w / 2, 809.4e-9) == pytest.approx(0.5, rel=1e-12)
        r = FilterSpec(809.4e-9, 0.1e-9, "rectangular")
        assert r.transmission(0.49 * w, 809.4e-9) == 1.0
        assert r.transmission(0.51 * w, 809.4e-9) == 0.0

    def test_invalid(self):
        with pytest.raises(InvalidArgument):
            FilterSpec(809.4e-9, 0.0)
        with pytest.raises(InvalidArgument):
            FilterSpec(809.4e-9, 1e-9, "lorentzian")

    @pytest.mark.parametrize("shape", ["gaussian", "rectangular"])
    def test_narrower_filter_never_shortens_coherence(self, crystal, shape):
        widths = [
            correlation_fwhm(crystal, filter=FilterSpec(crystal.wl_signal, b, shape))
            for b in (2e-9, 1e-9, 0.5e-9, 0.2e-9, 0.1e-9)
        ]
        base = correlation_fwhm(crystal)
        assert widths[0] >= base * (1 - 1e-3)
        assert all(b >= a * (1 - 1e-6) for a, b in zip(widths, widths[1:]))


class TestCoherenceLength:
    def test_unfiltered(self, crystal):
        cl = coherence_length(crystal)
        assert cl.meters == pytest.approx(1.33e-3, abs=5e-6)
        assert not cl.is_estimate

    def test_filtered_estimate(self, crystal):
        cl = coherence_length(crystal, FilterSpec(809.4e-9, 0.1e-9))
        assert cl.meters == pytest.approx(6.55e-3, abs=5e-6)
        assert cl.is_estimate

    def test_inverse_bandwidth(self, crystal):
        a = coherence_length(crystal, FilterSpec(809.4e-9, 0.1e-9)).meters
        b = coherence_length(crystal, FilterSpec(809.4e-9, 0.05e-9)).meters
        assert b / a == pytest.approx(2.0, rel=1e-14)
