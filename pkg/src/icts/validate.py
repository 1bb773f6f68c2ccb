"""Self-check suite behind ``icts validate``."""

from __future__ import annotations

import json

import numpy as np

from . import coherence, fock, modes, spectral, tomography


def _unitarity(crystal_sigma=50.0):
    p = spectral.CrystalParams.calibrated(sigma=crystal_sigma)
    omega = spectral.FrequencyGrid.for_crystal(p).omega
    c = spectral.bogoliubov_coeffs(p, omega)
    q = p.sigma**2 - (p.D * omega) ** 2 / 4.0
    # both branches of Gamma must be exercised
    assert np.any(q > 0) and np.any(q < 0)
    return float(np.max(c.unitarity_defect))


def _loss_composition():
    r = 0.4
    s = modes.MomentState.vacuum(("a", "b", "f1", "f2", "g"))
    s = modes.apply_two_mode_squeezer(s, "a", "b", modes.SqueezerCoeffs.from_gain(r, 0.3))
    mu1, mu2 = 0.8 * np.exp(0.4j), 0.6 * np.exp(-1.1j)
    two = modes.apply_loss(modes.apply_loss(s, "a", mu1, "f1"), "a", mu2, "f2")
    one = modes.apply_loss(s, "a", mu1 * mu2, "g")
    sys_ = [0, 1]
    err_n = np.abs(two.normal[np.ix_(sys_, sys_)] - one.normal[np.ix_(sys_, sys_)]).max()
    err_m = np.abs(two.anomalous[np.ix_(sys_, sys_)] - one.anomalous[np.ix_(sys_, sys_)]).max()
    return float(max(err_n, err_m))


def _hermiticity():
    worst = 0.0
    for r in (0.05, 0.3, 1.0):
        for mu in (0.0, 0.5 * np.exp(0.7j), 1.0):
            chain = coherence.build_chain(coherence.SingleModeSetup(r, mu, 0.4))
            worst = max(worst, chain.state.hermiticity_error())
    return worst


def _flux():
    p = spectral.CrystalParams.calibrated(sigma=3.0)
    return abs(spectral.signal_flux(p) * abs(p.D) / (p.sigma**2 * p.length) - 1.0)


def _triangle():
    p = spectral.CrystalParams.calibrated()
    g = spectral.GeometryParams(0.10, 0.05, 0.05, 0.30)
    T = spectral.apex_delay(p, g) + np.linspace(-1.5, 1.5, 201) * p.walkoff_time
    num = np.abs(spectral.g1_of_delay(p, g, 1.0, T))
    return float(np.max(np.abs(num - spectral.g1_triangle(p, g, 1.0, T))))


def _triangle_fwhm():
    p = spectral.CrystalParams.calibrated()
    return abs(spectral.correlation_fwhm(p) / p.walkoff_time - 1.0)


def _oracle_grid():
    worst = 0.0
    for r in (0.05, 0.1, 0.3):
        for mu in (0.0, 0.25, 0.5, 0.75, 1.0):
            moment = coherence.degree_of_coherence(coherence.SingleModeSetup(r, mu))
            closed = coherence.closed_form_coherence(r, mu)
            oracle = fock.oracle_induced_coherence(r, mu).g1
            worst = max(worst, abs(moment - closed), abs(moment - oracle), abs(oracle - closed))
    return worst


def _determinism():
    p = spectral.CrystalParams.calibrated()
    sample = tomography.Sample((tomography.Layer(0.0, 1.0), tomography.Layer(1e-3, 0.5)))
    scan = tomography.ScanConfig(-0.5e-3, 2.5e-3, 20e-6)
    det = tomography.DetectionParams(1e5, 2000.0, 0.73, seed=2024)
    runs = [
        json.dumps(
            tomography.simulate_axial_scan(
                sample, p, spectral.GeometryParams(), scan, det, workers=w
            ).to_json_dict(),
            sort_keys=True,
        ).encode()
        for w in (1, 1, 4)
    ]
    return 0.0 if runs[0] == runs[1] == runs[2] else 1.0


CHECKS = [
    ("unitarity", _unitarity, 1e-10),
    ("loss_composition", _loss_composition, 1e-12),
    ("moment_hermiticity", _hermiticity, 1e-12),
    ("flux_closed_form", _flux, 1e-6),
    ("triangle_vs_quadrature", _triangle, 1e-3),
    ("triangle_fwhm", _triangle_fwhm, 1e-2),
    ("oracle_agreement", _oracle_grid, 1e-5),
    ("determinism", _determinism, 0.5),
]


def run_validation(tolerance_scale=1.0):
    """Run every check; ``tolerance_scale`` shrinks tolerances (negative control)."""
    results = []
    for name, fn, tol in CHECKS:
        try:
            value = float(fn())
            error = None
        except Exception as exc:  # a crashing check is a failing check
            value, error = None, f"{type(exc).__name__}: {exc}"
        tol = tol * tolerance_scale
        entry = {
            "name": name,
            "value": value,
            "tolerance": tol,
            "passed": error is None and value <= tol,
        }
        if error:
            entry["error"] = error
        results.append(entry)
    return {
        "passed": all(r["passed"] for r in results),
        "failed": [r["name"] for r in results if not r["passed"]],
        "checks": results,
    }
