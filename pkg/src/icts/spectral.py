"""Multimode (frequency-resolved) model of the down-conversion source.

Detuning ``omega`` is measured from the signal carrier; the conjugate idler
mode sits at ``-omega``. With a linearised phase mismatch
``delta(omega) = D * omega``, ``D = N_i - N_s``, the low-gain spectral
amplitude is ``sigma L sinc(D L omega / 2) exp(i delta L / 2)`` and the
delay-dependent first-order coherence between the two signal arms is the
Fourier transform of ``sinc^2``: a triangle of half-width ``|D| L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import constants, integrate, optimize

from .errors import InsufficientSpan, InvalidArgument, UndefinedCoherence
from .modes import SqueezerCoeffs

C = constants.c
HBAR = constants.hbar
EPS0 = constants.epsilon_0

# sinc^2(x) = 1/2 at x = SINC2_HALF
SINC2_HALF = 1.3915573782515103
MIN_LOBES = 8


@dataclass(frozen=True)
class PumpParams:
    flux: float  # photons / s / m^2
    chi2: float  # m / V
    n_s: float
    n_i: float
    n_p: float
    omega_s: float
    omega_i: float
    omega_p: float

    def __post_init__(self):
        for name in ("chi2", "n_s", "n_i", "n_p", "omega_s", "omega_i", "omega_p"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.flux < 0:
            raise InvalidArgument("pump flux must be non-negative")


def sigma_from_pump(p):
    """Nonlinear gain coefficient for a plane-wave CW pump.

    The expression is evaluated as published. It comes out in 1/m when
    ``flux`` is a photon number density (1/m^3); a flux per unit area
    (1/s/m^2) would need one more factor of ``1/c``.
    """
    num = HBAR * p.omega_s * p.omega_i * p.omega_p * p.chi2**2 * p.flux
    return math.sqrt(num / (8.0 * EPS0 * C**2 * p.n_s * p.n_i * p.n_p))


@dataclass(frozen=True)
class CrystalParams:
    """Crystal length, gain and first-order dispersion.

    Args:
        length: crystal length L in m.
        sigma: nonlinear gain coefficient in 1/m.
        inv_vg_signal: signal inverse group velocity N_s in s/m.
        inv_vg_idler: idler inverse group velocity N_i in s/m.
        wl_signal, wl_idler: carrier wavelengths in m.
        wl_pump: pump wavelength in m; derived from energy conservation
            when omitted.
    """

    length: float
    sigma: float
    inv_vg_signal: float
    inv_vg_idler: float
    wl_signal: float
    wl_idler: float
    wl_pump: Optional[float] = None

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidArgument("crystal length must be positive")
        if self.sigma < 0:
            raise InvalidArgument("sigma must be non-negative")
        if self.inv_vg_idler == self.inv_vg_signal:
            raise InvalidArgument("N_i - N_s must be non-zero")
        if self.wl_pump is None:
            object.__setattr__(
                self, "wl_pump", 1.0 / (1.0 / self.wl_signal + 1.0 / self.wl_idler)
            )
        mismatch = self.wl_pump * (1.0 / self.wl_signal + 1.0 / self.wl_idler) - 1.0
        if abs(mismatch) > 1e-6:
            raise InvalidArgument(
                f"energy conservation violated: relative mismatch {mismatch:.2e}"
            )

    @classmethod
    def from_pump(cls, pump, **kwargs):
        return cls(sigma=sigma_from_pump(pump), **kwargs)

    @classmethod
    def calibrated(
        cls,
        idler_fwhm=1.6e-9,
        wl_idler=1552.3e-9,
        wl_signal=809.4e-9,
        length=20e-3,
        sigma=1.0,
        inv_vg_signal=2.26 / C,
    ):
        """Pick ``N_i`` so the low-gain idler spectrum has the requested FWHM.

        Defaults reproduce a 1.6 nm wide idler line at 1552.3 nm from a
        20 mm crystal. The idler is taken faster than the signal, as in
        type-0 lithium niobate.
        """
        d_omega = 2.0 * math.pi * C * idler_fwhm / wl_idler**2
        D = 4.0 * SINC2_HALF / (d_omega * length)
        return cls(length, sigma, inv_vg_signal, inv_vg_signal - D, wl_signal, wl_idler)

    @property
    def D(self):
        return self.inv_vg_idler - self.inv_vg_signal

    @property
    def walkoff_time(self):
        """``|D| L`` in seconds: half-width of the correlation triangle."""
        return abs(self.D) * self.length

    @property
    def omega_idler(self):
        return 2.0 * math.pi * C / self.wl_idler

    @property
    def lobe_width(self):
        """Spacing of the ``sinc^2`` zeros in rad/s, ``2 pi / |D L|``."""
        return 2.0 * math.pi / self.walkoff_time


@dataclass(frozen=True)
class GeometryParams:
    z1: float = 0.0
    z2: float = 0.0
    z3: float = 0.0
    z4: float = 0.0

    def __post_init__(self):
        if min(self.z1, self.z2, self.z3, self.z4) < 0:
            raise InvalidArgument("arm lengths must be non-negative")


@dataclass(frozen=True)
class FilterSpec:
    """Spectral filter on the detected signal photons (intensity FWHM in m)."""

    center_wavelength: float
    bandwidth: float
    shape: str = "gaussian"

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidArgument("filter bandwidth must be positive")
        if self.shape not in ("gaussian", "rectangular"):
            raise InvalidArgument(f"unknown filter shape {self.shape!r}")

    @property
    def angular_fwhm(self):
        return 2.0 * math.pi * C * self.bandwidth / self.center_wavelength**2

    def transmission(self, omega, wl_signal):
        """Intensity transmission at signal detuning ``omega`` (rad/s)."""
        centre = 2.0 * math.pi * C * (1.0 / self.center_wavelength - 1.0 / wl_signal)
        x = (np.asarray(omega, dtype=float) - centre) / self.angular_fwhm
        if self.shape == "gaussian":
            return np.exp(-4.0 * math.log(2.0) * x * x)
        return (np.abs(x) <= 0.5).astype(float)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of detunings symmetric about zero."""

    span: float
    count: int = 8193

    def __post_init__(self):
        if not self.span > 0 or self.count < 3:
            raise InvalidArgument("grid needs a positive span and at least 3 points")

    @classmethod
    def for_crystal(cls, params, n_lobes=1024, count=8193):
        return cls(n_lobes * params.lobe_width, count)

    @classmethod
    def default(cls, params, filter=None):
        """Wide grid for the bare source; a dense 8-lobe grid under a filter.

        Without a filter the slowly decaying ``sinc^2`` tails dominate the
        quadrature error, so the span is large. A filter cuts the tails off
        and the limiting factor becomes resolving the filter passband.
        """
        if filter is None:
            return cls.for_crystal(params)
        span = max(MIN_LOBES * params.lobe_width, 40.0 * filter.angular_fwhm)
        return cls(span, 16385)

    @property
    def omega(self):
        return np.linspace(-self.span / 2.0, self.span / 2.0, self.count)

    @property
    def step(self):
        return self.span / (self.count - 1)

    def check(self, params):
        if self.span < MIN_LOBES * params.lobe_width * (1.0 - 1e-12):
            raise InsufficientSpan(
                f"grid span {self.span:.3e} rad/s is below {MIN_LOBES} sinc lobes "
                f"({MIN_LOBES * params.lobe_width:.3e} rad/s)"
            )


def sinc(x):
    """Unnormalised ``sin(x) / x``."""
    return np.sinc(np.asarray(x) / np.pi)


def phase_mismatch(params, omega):
    return params.D * np.asarray(omega, dtype=float)


def low_gain_amplitude(params, omega):
    delta = phase_mismatch(params, omega)
    L = params.length
    return params.sigma * L * sinc(delta * L / 2.0) * np.exp(0.5j * delta * L)


def _gain_functions(q, L):
    """``cosh(sqrt(q) L)`` and ``sinh(sqrt(q) L) / sqrt(q)`` for real ``q``.

    Negative ``q`` (imaginary root) switches to ``cos`` / ``sin``; small
    ``|q| L^2`` uses the series so the ``q -> 0`` limit is smooth.
    """
    shape = np.shape(q)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    g = np.sqrt(np.abs(q))
    gl = g * L
    real = q >= 0
    small = gl < 1e-4
    ch = np.cos(gl)
    sh = np.sin(gl)
    ch[real] = np.cosh(gl[real])
    sh[real] = np.sinh(gl[real])
    big = ~small
    sh[big] = sh[big] / g[big]
    qL2 = q[small] * L * L
    ch[small] = 1.0 + qL2 / 2.0 + qL2**2 / 24.0
    sh[small] = L * (1.0 + qL2 / 6.0 + qL2**2 / 120.0)
    return ch.reshape(shape), sh.reshape(shape)


def bogoliubov_coeffs(params, omega, mode="general"):
    """Spectral Bogoliubov coefficients ``U(omega)``, ``V(omega)``.

    ``mode="general"`` evaluates the undepleted-pump solution at arbitrary
    gain, ``mode="low_gain"`` its first-order limit with ``U = 1``. Array
    ``omega`` gives array-valued coefficients.
    """
    omega = np.asarray(omega, dtype=float)
    L = params.length
    delta = phase_mismatch(params, omega)
    if mode == "low_gain":
        return SqueezerCoeffs(np.ones_like(omega, dtype=complex), low_gain_amplitude(params, omega))
    if mode != "general":
        raise InvalidArgument(f"unknown mode {mode!r}")
    carrier = np.exp(0.5j * delta * L)
    ch, sh = _gain_functions(params.sigma**2 - delta**2 / 4.0, L)
    u = carrier * (ch - 0.5j * delta * sh)
    v = 1j * params.sigma * carrier * sh
    return SqueezerCoeffs(u, v)


class IdlerSpectrum(NamedTuple):
    omega: np.ndarray
    intensity: np.ndarray
    fwhm_rad_s: float
    fwhm_nm: float
    center_nm: float

    def wavelengths(self, omega_idler):
        """Idler wavelength in m for each grid point (idler detuning ``-omega``)."""
        return 2.0 * math.pi * C / (omega_idler - self.omega)


def _half_max_crossing(f, grid, peak):
    """First ``omega > 0`` where ``f`` falls to ``peak / 2``, bracketed on ``grid``."""
    w = grid[grid >= 0]
    vals = f(w) - 0.5 * peak
    below = np.nonzero(vals < 0)[0]
    if below.size == 0:
        raise InsufficientSpan("grid does not bracket the half-maximum point")
    k = below[0]
    return optimize.brentq(lambda x: float(f(x)) - 0.5 * peak, w[k - 1], w[k], xtol=1e-12 * w[k])


def idler_spectrum(params, grid):
    """Low-gain idler spectrum ``|V|^2`` on ``grid`` with its FWHM."""
    omega = grid.omega
    intensity = np.abs(low_gain_amplitude(params, omega)) ** 2

    def f(w):
        return np.abs(low_gain_amplitude(params, w)) ** 2

    peak = float(f(0.0))
    if peak == 0.0:
        raise UndefinedCoherence("zero gain: spectrum is identically zero")
    half = _half_max_crossing(f, omega, peak)
    wi = params.omega_idler
    fwhm_m = 2.0 * math.pi * C * (1.0 / (wi - half) - 1.0 / (wi + half))
    return IdlerSpectrum(omega, intensity, 2.0 * half, fwhm_m * 1e9, params.wl_idler * 1e9)


def signal_flux(params):
    """Photon flux per signal arm (photons/s) by adaptive quadrature.

    ``(sigma L)^2 / (2 pi) * integral of sinc^2(D L omega / 2)``, split into a
    finite part and a Fourier-weighted tail
    ``int_a^inf (1 - cos 2x) / (2 x^2) dx``.
    """
    a = 50.0
    core, _ = integrate.quad(lambda x: sinc(x) ** 2, 0.0, a, limit=500, epsabs=1e-13, epsrel=1e-13)
    osc, _ = integrate.quad(lambda x: 1.0 / x**2, a, np.inf, weight="cos", wvar=2.0)
    half_line = core + 0.5 / a - 0.5 * osc
    # dx = |D| L / 2 domega, both half-lines
    integral = 2.0 * half_line * 2.0 / params.walkoff_time
    return (params.sigma * params.length) ** 2 / (2.0 * math.pi) * integral


def path_mismatch(params, geom, T):
    """Arm path mismatch in m entering the correlation phase at delay ``T``."""
    T = np.asarray(T, dtype=float)
    idler_path = geom.z4 - C * params.inv_vg_idler * params.length - geom.z2 - geom.z3
    return (geom.z1 + C * T) - idler_path


def apex_delay(params, geom):
    """Delay ``T`` (s) at which the two signal arms are maximally coherent."""
    idler_path = geom.z4 - C * params.inv_vg_idler * params.length - geom.z2 - geom.z3
    return (idler_path - geom.z1) / C


def tri(x):
    return np.maximum(0.0, 1.0 - np.abs(x))


def g1_triangle(params, geom, tau, T):
    """Analytic ``|tau| tri(mismatch / (c |D| L))``."""
    x = path_mismatch(params, geom, T) / (C * params.walkoff_time)
    out = abs(tau) * tri(x)
    return float(out) if np.ndim(out) == 0 else out


def spectral_weight(params, grid, filter=None):
    omega = grid.omega
    w = np.abs(low_gain_amplitude(params, omega)) ** 2
    if filter is not None:
        w = w * filter.transmission(omega, params.wl_signal)
    return omega, w


def _trapezoid(f, h):
    return h * (f.sum(axis=-1) - 0.5 * (f[..., 0] + f[..., -1]))


def g1_of_mismatch(params, tau, mismatch, grid=None, filter=None, chunk=64):
    """Complex coherence as a function of the arm path mismatch (m).

    Each mismatch value is integrated independently with the same fixed
    summation order, so scalar and vectorised calls agree bit for bit.
    """
    grid = grid or FrequencyGrid.default(params, filter)
    grid.check(params)
    omega, w = spectral_weight(params, grid, filter)
    h = grid.step
    norm = _trapezoid(w, h)
    if not norm > 0:
        raise UndefinedCoherence("zero detected flux after filtering")
    p = np.atleast_1d(np.asarray(mismatch, dtype=float))
    out = np.empty(p.shape, dtype=complex)
    flat_p, flat_out = p.ravel(), out.reshape(-1)
    for start in range(0, flat_p.size, chunk):
        block = flat_p[start : start + chunk]
        phase = np.exp(1j * np.outer(block, omega) / C)
        flat_out[start : start + chunk] = _trapezoid(w * phase, h)
    out = abs(tau) * out / norm
    return out[0] if np.ndim(mismatch) == 0 else out


def g1_of_delay(params, geom, tau, T, grid=None, filter=None):
    """Normalised first-order coherence between the signal arms at delay ``T``.

    Low-gain regime: both arm fluxes equal the (filtered) integral of
    ``|V|^2``, so the normalisation is that integral itself.
    """
    return g1_of_mismatch(params, tau, path_mismatch(params, geom, T), grid, filter)


def correlation_fwhm(params, grid=None, filter=None):
    """FWHM in seconds of ``|g1|`` versus delay, located by root finding."""
    grid = grid or FrequencyGrid.default(params, filter)

    def mag(t):
        return float(abs(g1_of_mismatch(params, 1.0, C * t, grid, filter)))

    peak = mag(0.0)
    step = 0.25 * params.walkoff_time
    t = step
    while mag(t) > 0.5 * peak:
        t += step
        if t > 400 * params.walkoff_time:
            raise InsufficientSpan("correlation does not fall to half maximum")
    right = optimize.brentq(lambda s: mag(s) - 0.5 * peak, t - step, t, xtol=1e-18)
    t = -step
    while mag(t) > 0.5 * peak:
        t -= step
    left = optimize.brentq(lambda s: mag(s) - 0.5 * peak, t, t + step, xtol=1e-18)
    return right - left


class CoherenceLength(NamedTuple):
    meters: float
    is_estimate: bool


def coherence_length(params, filter=None):
    """Axial resolution ``c |D| L``, or ``lambda^2 / B`` behind a filter (estimate)."""
    if filter is None:
        return CoherenceLength(C * params.walkoff_time, False)
    return CoherenceLength(filter.center_wavelength**2 / filter.bandwidth, True)
