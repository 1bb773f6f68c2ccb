"""Synthetic axial scans of layered samples and their reconstruction.

Delay convention: ``delay`` is the delay-line path offset (m) measured from
the apex of a reflector at zero depth. A layer at depth ``d`` lengthens the
idler arm by ``path_multiplier * d``, so its coherence apex sits at
``delay = path_multiplier * d``. The absolute stage delay is
``T = apex_delay(crystal, geom) - delay / c`` and is recorded in the scan
metadata.

Each coarse delay point carries a fine sub-scan of the fringe; its counts
are drawn from a Poisson generator seeded by ``(seed, coarse index)``
only, so results do not depend on the order or concurrency of evaluation.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.signal import find_peaks

from . import spectral
from .errors import EstimationFailed, InvalidArgument, OverlapWarning
from .spectral import C, FilterSpec


@dataclass(frozen=True)
class Layer:
    depth: float
    reflectivity: complex = 1.0
    system_visibility: Optional[float] = None  # per-layer alignment override

    def __post_init__(self):
        if abs(self.reflectivity) > 1.0:
            raise InvalidArgument(f"|tau| = {abs(self.reflectivity)} exceeds 1")


@dataclass(frozen=True)
class Sample:
    layers: tuple = ()
    path_multiplier: int = 2

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.path_multiplier not in (1, 2):
            raise InvalidArgument("path_multiplier must be 1 or 2")
        depths = [layer.depth for layer in self.layers]
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise InvalidArgument("layer depths must be strictly increasing")


@dataclass(frozen=True)
class DetectionParams:
    n0: float
    dark_counts: float = 0.0
    system_visibility: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.n0 > 0:
            raise InvalidArgument("n0 must be positive")
        if self.dark_counts < 0:
            raise InvalidArgument("dark counts must be non-negative")
        if not 0.0 <= self.system_visibility <= 1.0:
            raise InvalidArgument("system visibility must lie in [0, 1]")


@dataclass(frozen=True)
class ScanConfig:
    delay_start: float
    delay_stop: float
    delay_step: float
    fine_count: int = 16
    fine_step: Optional[float] = None  # defaults to lambda_s / fine_count
    filter: Optional[FilterSpec] = None

    def __post_init__(self):
        if not self.delay_step > 0:
            raise InvalidArgument("coarse delay step must be positive")
        if self.delay_stop < self.delay_start:
            raise InvalidArgument("delay_stop must not precede delay_start")
        if self.fine_count < 8:
            raise InvalidArgument("need at least 8 fine samples per point")

    @property
    def delays(self):
        n = int(math.floor((self.delay_stop - self.delay_start) / self.delay_step + 1e-9)) + 1
        return self.delay_start + self.delay_step * np.arange(n)

    def resolved_fine_step(self, wl_signal):
        step = self.fine_step if self.fine_step is not None else wl_signal / self.fine_count
        if step > wl_signal / 8.0 * (1 + 1e-12):
            raise InvalidArgument("fine step must resolve the fringe (>= 8 samples/period)")
        if step * self.fine_count < wl_signal * (1 - 1e-9):
            raise InvalidArgument("fine scan must cover at least one fringe period")
        return step


@dataclass
class ScanResult:
    delays: np.ndarray
    visibility: np.ndarray
    phase: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray  # (n_delays, fine_count)
    fine_offsets: np.ndarray
    metadata: dict = field(default_factory=dict)

    def rows(self):
        return zip(self.delays, self.visibility, self.phase, self.stderr)

    def to_json_dict(self):
        return {
            "metadata": self.metadata,
            "delay_m": self.delays.tolist(),
            "visibility": self.visibility.tolist(),
            "phase_rad": self.phase.tolist(),
            "stderr": self.stderr.tolist(),
            "fine_offsets_m": self.fine_offsets.tolist(),
            "counts": self.counts.tolist(),
        }


class DetectedLayer(NamedTuple):
    depth: float
    reflectivity: float
    peak_visibility: float
    uncertainty: float


@dataclass
class Profile:
    layers: list
    threshold: float = 0.0
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "metadata": self.metadata,
            "threshold": self.threshold,
            "layers": [layer._asdict() for layer in self.layers],
        }


class VisibilityEstimate(NamedTuple):
    visibility: float
    phase: float
    stderr: float


def _expected_counts(phase, contrast, det):
    return det.dark_counts + 0.5 * det.n0 * (1.0 + contrast * np.cos(phase))


def fringe_counts(phase, visibility, det):
    """Mean counts behind the diagonal polariser for a given degree of coherence."""
    if not 0.0 <= visibility <= 1.0:
        raise InvalidArgument("visibility must lie in [0, 1]")
    return _expected_counts(phase, det.system_visibility * visibility, det)


def _check_fringe_sampling(phases):
    phases = np.asarray(phases, dtype=float)
    n = phases.shape[-1]
    diag = {"n_samples": n}
    if n < 8:
        raise EstimationFailed("need >= 8 samples per fringe scan", diag)
    span = np.ptp(phases, axis=-1) * n / (n - 1)
    diag["phase_span"] = float(np.min(span))
    if np.any(span < 2.0 * math.pi * (1.0 - 1e-9)):
        raise EstimationFailed("samples do not cover a full fringe period", diag)


def _fit_fringes(y, phases, dark=0.0):
    """Batched least squares of ``y = a + p cos(phase) + q sin(phase)``.

    ``y`` and ``phases`` have shape ``(m, n)``; returns ``(a, p, q, cov)``
    with ``cov`` of shape ``(m, 3, 3)``. The covariance is the sandwich
    form with Poisson variances taken from the fitted raw counts
    (``fit + dark``): fringe counts are heteroscedastic, and the constant
    variance estimate overstates the visibility error at high contrast.
    """
    X = np.stack([np.ones_like(phases), np.cos(phases), np.sin(phases)], axis=-1)
    XtX = np.einsum("mki,mkj->mij", X, X)
    cond = np.linalg.cond(XtX)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise EstimationFailed(
            "singular fringe design matrix", {"condition_number": float(np.max(cond))}
        )
    XtX_inv = np.linalg.inv(XtX)
    coef = np.einsum("mij,mkj,mk->mi", XtX_inv, X, y)
    var = np.maximum(np.einsum("mki,mi->mk", X, coef) + dark, 0.0)
    meat = np.einsum("mki,mk,mkj->mij", X, var, X)
    cov = XtX_inv @ meat @ XtX_inv
    return coef[:, 0], coef[:, 1], coef[:, 2], cov


def _visibility_from_fit(a, p, q, cov):
    if np.any(~(a > 0)):
        raise EstimationFailed(
            "non-positive mean level after dark subtraction", {"mean_level": float(np.min(a))}
        )
    b = np.hypot(p, q)
    safe_b = np.where(b > 0, b, 1.0)
    grad = np.stack([-b / a**2, p / (a * safe_b), q / (a * safe_b)], axis=-1)
    var = np.einsum("mi,mij,mj->m", grad, cov, grad)
    var = np.where(b > 0, var, 0.5 * (cov[:, 1, 1] + cov[:, 2, 2]) / a**2)
    return b / a, np.arctan2(-q, p), np.sqrt(np.maximum(var, 0.0))


def estimate_visibility(counts, phases, det):
    """Fit ``dark + a + b cos(phase + c)`` and return ``b / a`` with its error.

    ``a`` is the dark-subtracted mean level and ``c`` the fitted fringe phase.
    The standard error is propagated from the least-squares covariance,
    with Poisson count variances.
    """
    y = np.asarray(counts, dtype=float) - det.dark_counts
    phases = np.asarray(phases, dtype=float)
    if y.ndim != 1 or phases.shape != y.shape:
        raise EstimationFailed("counts and phases must be matching 1-D arrays",
                               {"shapes": [y.shape, phases.shape]})
    _check_fringe_sampling(phases)
    v, c, err = _visibility_from_fit(*_fit_fringes(y[None, :], phases[None, :], det.dark_counts))
    return VisibilityEstimate(float(v[0]), float(c[0]), float(err[0]))


def _layer_visibility(layer, det):
    v = layer.system_visibility
    return det.system_visibility if v is None else v


def layer_envelopes(sample, crystal, delays, filter=None, grid=None):
    """``|g1|`` of each layer at each delay, shape ``(n_layers, n_delays)``."""
    delays = np.asarray(delays, dtype=float)
    m = sample.path_multiplier
    out = np.zeros((len(sample.layers),) + delays.shape)
    res = spectral.C * crystal.walkoff_time
    for j, layer in enumerate(sample.layers):
        offset = delays - m * layer.depth
        if filter is None:
            out[j] = abs(layer.reflectivity) * spectral.tri(offset / res)
        else:
            g = spectral.g1_of_mismatch(crystal, layer.reflectivity, offset, grid, filter)
            out[j] = np.abs(g)
    return out


def _check_overlap(sample, crystal):
    res = C * crystal.walkoff_time
    m = sample.path_multiplier
    layers = sample.layers
    for j, lj in enumerate(layers):
        for k, lk in enumerate(layers):
            if j == k or abs(lj.reflectivity) == 0:
                continue
            leak = abs(lk.reflectivity) * spectral.tri(m * (lk.depth - lj.depth) / res)
            if leak > 0.5 * abs(lj.reflectivity):
                warnings.warn(
                    f"layers at {lj.depth:.4g} m and {lk.depth:.4g} m overlap; "
                    "visibility estimates near them are biased",
                    OverlapWarning,
                    stacklevel=3,
                )
                return


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _scan_point(i, delay, sample, crystal, det, fine_offsets, filter, grid, noisy, seed):
    phases = 2.0 * math.pi * (delay + fine_offsets) / crystal.wl_signal
    # the envelope is flat over a sub-wavelength fringe scan: one value per point
    env = layer_envelopes(sample, crystal, [delay], filter, grid)[:, 0]
    weights = np.array([_layer_visibility(layer, det) for layer in sample.layers])
    contrast = min(float(weights @ env) if len(weights) else 0.0, 1.0)
    expected = _expected_counts(phases, contrast, det)
    if noisy:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        counts = rng.poisson(expected).astype(float)
    else:
        counts = expected
    return counts, phases


def simulate_axial_scan(sample, crystal, geom, scan, det, noisy=True, workers=1, grid=None):
    """Simulate a delay scan with fringe sub-scans and per-point visibility fits.

    ``workers > 1`` evaluates coarse points on a thread pool; output is
    identical to the serial run.
    """
    _check_overlap(sample, crystal)
    delays = scan.delays
    fine_step = scan.resolved_fine_step(crystal.wl_signal)
    fine_offsets = fine_step * np.arange(scan.fine_count)
    if scan.filter is not None and grid is None:
        grid = spectral.FrequencyGrid.default(crystal, scan.filter)

    def work(i):
        return _scan_point(
            i, delays[i], sample, crystal, det, fine_offsets, scan.filter, grid, noisy, det.seed
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(delays.size)))
    else:
        results = [work(i) for i in range(delays.size)]

    counts = np.array([r[0] for r in results]).reshape(delays.size, scan.fine_count)
    phases = np.array([r[1] for r in results]).reshape(delays.size, scan.fine_count)
    _check_fringe_sampling(phases)
    vis, phase, err = _visibility_from_fit(*_fit_fringes(counts - det.dark_counts, phases, det.dark_counts))
    meta = {
        "seed": det.seed,
        "noisy": noisy,
        "path_multiplier": sample.path_multiplier,
        "delay_step_m": scan.delay_step,
        "apex_delay_s": spectral.apex_delay(crystal, geom),
        "resolution_m": C * crystal.walkoff_time,
        "config_sha256": config_hash(
            {
                "sample": asdict(sample),
                "crystal": asdict(crystal),
                "geometry": asdict(geom),
                "scan": asdict(scan),
                "detection": asdict(det),
                "noisy": noisy,
            }
        ),
    }
    return ScanResult(delays, vis, phase, err, counts, fine_offsets, meta)


def detection_threshold(scan, alpha=1e-3):
    """Minimum peak visibility accepted as a layer.

    The larger of two noise bounds: three times the MAD-based noise level of
    the trace (taken on second differences, which vanish on the piecewise
    linear envelope) and a Rayleigh tail bound ``s * sqrt(2 ln(n / alpha))``
    with ``s`` the median per-point standard error. The second term keeps
    the scan-wide false-detection probability near ``alpha`` when the scan
    holds no signal at all.
    """
    v = np.asarray(scan.visibility)
    floor = 0.0
    if v.size >= 5:
        d2 = np.diff(v, 2)
        floor = 3.0 * 1.4826 * float(np.median(np.abs(d2 - np.median(d2)))) / math.sqrt(6.0)
    s = float(np.median(scan.stderr)) if v.size else 0.0
    return max(floor, s * math.sqrt(2.0 * math.log(max(v.size, 2) / alpha)))


def reconstruct_profile(scan, calib_v_sys, rel_prominence=0.05, alpha=1e-3):
    """Detect layers as prominent local maxima of the visibility trace."""
    if not 0.0 < calib_v_sys <= 1.0:
        raise InvalidArgument("calibration visibility must lie in (0, 1]")
    v = np.asarray(scan.visibility)
    thr = detection_threshold(scan, alpha)
    if v.size == 0:
        return Profile([], thr, dict(scan.metadata))
    prominence = max(thr, rel_prominence * float(v.max()))
    peaks, _ = find_peaks(v, height=thr, prominence=prominence)
    m = scan.metadata.get("path_multiplier", 1)
    step = scan.metadata.get("delay_step_m", float(np.diff(scan.delays).min()) if v.size > 1 else 0.0)
    layers = [
        DetectedLayer(
            depth=float(scan.delays[k]) / m,
            reflectivity=float(np.clip(v[k] / calib_v_sys, 0.0, 1.0)),
            peak_visibility=float(v[k]),
            uncertainty=0.5 * step,
        )
        for k in peaks
    ]
    return Profile(layers, thr, dict(scan.metadata))


class CurveRow(NamedTuple):
    tau: float
    noiseless: float
    noisy: float
    stderr: float


def visibility_vs_reflectivity_curve(
    crystal, geom, det, tau_values, depth=0.0, path_multiplier=2, fine_count=16
):
    """Peak visibility at the layer apex for a sweep of reflectivities."""
    rows = []
    for i, tau in enumerate(tau_values):
        if abs(tau) > 1.0:
            raise InvalidArgument(f"|tau| = {abs(tau)} exceeds 1")
        sample = Sample((Layer(depth, tau),), path_multiplier)
        apex = path_multiplier * depth
        noiseless = det.system_visibility * float(layer_envelopes(sample, crystal, [apex])[0, 0])
        point_det = DetectionParams(det.n0, det.dark_counts, det.system_visibility, det.seed + i)
        scan = ScanConfig(apex, apex, 1.0, fine_count)
        res = simulate_axial_scan(sample, crystal, geom, scan, point_det)
        rows.append(CurveRow(abs(tau), noiseless, float(res.visibility[0]), float(res.stderr[0])))
    return rows
