"""Acceptance criteria, each at its stated tolerance.

A verdict line per criterion is printed in the pytest terminal summary.
"""

import json
import time
import warnings

import numpy as np
import pytest

from icts import cli, coherence, fock, spectral, tomography
from icts.errors import OverlapWarning
from icts.spectral import C, CrystalParams, FilterSpec, GeometryParams
from icts.tomography import DetectionParams, Layer, Sample, ScanConfig

GEOM = GeometryParams()


def test_1_triple_agreement(record):
    start = time.perf_counter()
    worst, leak, cut = 0.0, 0.0, 0
    for r in (0.05, 0.1, 0.3):
        for mu in (0.0, 0.25, 0.5, 0.75, 1.0):
            m = coherence.degree_of_coherence(coherence.SingleModeSetup(r, mu))
            c = coherence.closed_form_coherence(r, mu)
            rep = fock.oracle_induced_coherence(r, mu)
            worst = max(worst, abs(m - c), abs(m - rep.g1), abs(c - rep.g1))
            leak, cut = max(leak, rep.leakage), max(cut, rep.cutoff)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and leak < 1e-6 and cut <= 14 and elapsed < 60
    record(1, ok, f"max|dg1|={worst:.2e} leakage={leak:.1e} cutoff={cut} t={elapsed:.1f}s")
    assert ok


def test_2_low_gain_law(record, crystal):
    taus = np.linspace(0.0, 1.0, 21)
    det = DetectionParams(1e5, 2000.0, 0.9, seed=2024)
    rows = tomography.visibility_vs_reflectivity_curve(crystal, GEOM, det, taus)
    exact = max(abs(r.noiseless - 0.9 * t) for r, t in zip(rows, taus))
    slope, intercept = np.polyfit(taus, [r.noisy for r in rows], 1)
    ok = exact <= 1e-15 and abs(slope - 0.9) <= 0.05 and abs(intercept) <= 0.02
    record(2, ok, f"noiseless err={exact:.1e} slope={slope:.4f} intercept={intercept:+.4f}")
    assert ok


def test_3_triangular_correlation(record, crystal):
    geom = GeometryParams(0.10, 0.05, 0.05, 0.30)
    T = spectral.apex_delay(crystal, geom) + np.linspace(-1.5, 1.5, 201) * crystal.walkoff_time
    err = np.max(np.abs(np.abs(spectral.g1_of_delay(crystal, geom, 1.0, T)) - spectral.g1_triangle(crystal, geom, 1.0, T)))
    ratio = spectral.correlation_fwhm(crystal) / crystal.walkoff_time
    ok = err <= 1e-3 and abs(ratio - 1) <= 0.01
    record(3, ok, f"max|g1-tri|={err:.2e} FWHM/DL={ratio:.5f}")
    assert ok


def test_4_flux_closed_form(record):
    p = CrystalParams.calibrated(sigma=3.0)
    dev = abs(spectral.signal_flux(p) * abs(p.D) / (p.sigma**2 * p.length) - 1)
    record(4, dev <= 1e-6, f"|flux*D/(sigma^2 L) - 1|={dev:.1e}")
    assert dev <= 1e-6


def test_5_two_layer_reproduction(record, crystal):
    step = 10e-6
    sample = Sample((Layer(0.0), Layer(1e-3)))
    scan = ScanConfig(-1e-3, 3.5e-3, step)
    sep_ok = vis_ok = 0
    for seed in range(100):
        det = DetectionParams(1e5, 2000.0, 0.73, seed=seed)
        prof = tomography.reconstruct_profile(
            tomography.simulate_axial_scan(sample, crystal, GEOM, scan, det), 0.73
        )
        layers = prof.layers
        if len(layers) == 2:
            sep_ok += abs(layers[1].depth - layers[0].depth - 1e-3) <= step + 1e-12
            vis_ok += all(abs(layer.peak_visibility - 0.73) <= 0.03 for layer in layers)

    res = C * crystal.walkoff_time
    counts = {}
    for factor in (1.2, 0.5):
        pair = Sample((Layer(0.0), Layer(factor * res / 2)))
        det = DetectionParams(1e5, 2000.0, 0.73, seed=5)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OverlapWarning)
            r = tomography.simulate_axial_scan(pair, crystal, GEOM, ScanConfig(-2e-3, factor * res + 2e-3, step), det)
        counts[factor] = len(tomography.reconstruct_profile(r, 0.73).layers)
    ok = sep_ok >= 95 and vis_ok >= 95 and counts == {1.2: 2, 0.5: 1}
    record(
        5, ok,
        f"separation ok {sep_ok}/100, visibility ok {vis_ok}/100, "
        f"peaks at 1.2xcDL={counts[1.2]} at 0.5xcDL={counts[0.5]}",
    )
    assert ok


def test_6_fringe_reproduction(record, crystal):
    scan = ScanConfig(0.0, 0.0, 1e-5, fine_count=32)
    det = DetectionParams(1e5, 2000.0, 0.9, seed=6)
    bright = tomography.simulate_axial_scan(Sample((Layer(0.0),)), crystal, GEOM, scan, det)
    dark = tomography.simulate_axial_scan(Sample((Layer(0.0, 0.0),)), crystal, GEOM, scan, det)
    v, v0 = float(bright.visibility[0]), float(dark.visibility[0])
    ok = abs(v - 0.9) <= 0.02 and v0 < 0.03
    record(6, ok, f"V={v:.4f} V(tau=0)={v0:.4f}")
    assert ok


def test_7_spectrum_and_filter(record, crystal, tmp_path, capsys):
    code = cli.main(["spectrum", "--config", _write(tmp_path, {}), "--out", str(tmp_path)])
    capsys.readouterr()
    fwhm_nm = json.loads((tmp_path / "spectrum_summary.json").read_text())["fwhm_nm"]
    base = spectral.correlation_fwhm(crystal)
    widths = [
        spectral.correlation_fwhm(crystal, filter=FilterSpec(crystal.wl_signal, b))
        for b in (1e-9, 0.5e-9, 0.2e-9, 0.1e-9)
    ]
    growth = widths[-1] / base
    monotone = all(b >= a for a, b in zip([base] + widths, widths))
    ok = code == 0 and abs(fwhm_nm - 1.60) <= 0.02 and growth >= 10 and monotone
    record(7, ok, f"FWHM={fwhm_nm:.4f} nm; B=0.1 nm FWHM growth x{growth:.2f} (need >=10); monotone={monotone}")
    assert code == 0 and abs(fwhm_nm - 1.60) <= 0.02 and monotone
    assert growth >= 10, f"filtered |g1| FWHM grows only x{growth:.2f}"


def test_8_property_suite(record, tmp_path, capsys):
    start = time.perf_counter()
    code = cli.main(["validate", "--out", str(tmp_path / "a")])
    cli.main(["validate", "--out", str(tmp_path / "b")])
    capsys.readouterr()
    elapsed = time.perf_counter() - start
    report = json.loads((tmp_path / "a" / "validate.json").read_text())
    same = (tmp_path / "a" / "validate.json").read_bytes() == (tmp_path / "b" / "validate.json").read_bytes()
    ok = code == 0 and report["passed"] and same and elapsed / 2 < 120
    record(8, ok, f"{len(report['checks'])} checks, failed={report['failed']} byte-identical={same} t={elapsed / 2:.1f}s")
    assert ok


def _write(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)
