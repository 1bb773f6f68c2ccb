"""Command-line front end.

Usage::

    icts <coherence|spectrum|scan|validate> --config CFG --out DIR [--seed N]
         [--format csv|json|both]

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 I/O error. ``ICTS_THREADS`` caps scan workers (0 = all cores).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import coherence, fock, spectral, tomography, validate
from .config import RunConfig
from .errors import ConfigError, ICTSError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

DEFAULT_GAINS = [0.05, 0.1, 0.3]
DEFAULT_MUS = [0.0, 0.25, 0.5, 0.75, 1.0]


def _workers():
    raw = os.environ.get("ICTS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ICTS_THREADS must be an integer, got {raw!r}") from None
    return (os.cpu_count() or 1) if n <= 0 else n


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def csv_text(header, rows, cfg_hash, seed):
    """CSV body preceded by a provenance comment line."""
    buf = io.StringIO()
    buf.write(f"# config_sha256={cfg_hash} seed={seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


class Outputs:
    def __init__(self, out_dir, fmt, cfg):
        self.dir = Path(out_dir)
        self.fmt = fmt
        self.hash = cfg.sha256
        self.seed = cfg.seed
        self.written = []

    def _write(self, name, text):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        self.written.append(str(path))

    def csv(self, name, header, rows):
        if self.fmt in ("csv", "both"):
            self._write(name, csv_text(header, rows, self.hash, self.seed))

    def json(self, name, obj, always=False):
        if always or self.fmt in ("json", "both"):
            self._write(name, json_text({"config_sha256": self.hash, "seed": self.seed, **obj}))


def cmd_coherence(cfg, out):
    sec = cfg.section("coherence")
    low_gain = sec.get("low_gain", False)
    gains = sec.get("gains", [1e-4] if low_gain else DEFAULT_GAINS)
    mus = sec.get("mus", DEFAULT_MUS)
    cutoff = sec.get("cutoff", fock.DEFAULT_CUTOFF)
    tol = sec.get("tolerance", 1e-5)
    header = ["r", "mu", "g1_moment", "g1_closed_form", "g1_oracle", "max_abs_diff"]
    if low_gain:
        header.append("g1_low_gain")
    rows = []
    for r in gains:
        for mu in mus:
            m = coherence.degree_of_coherence(coherence.SingleModeSetup(r, mu))
            c = coherence.closed_form_coherence(r, mu)
            o = fock.oracle_induced_coherence(r, mu, cutoff).g1
            cols = [m, c, o]
            if low_gain:
                cols.append(coherence.low_gain_coherence(mu))
            diff = max(abs(a - b) for a in cols for b in cols)
            row = [float(r), float(mu), m, c, o, diff]
            if low_gain:
                row.append(cols[3])
            rows.append(row)
    passed = all(row[5] <= tol for row in rows)
    out.csv("coherence.csv", header, rows)
    out.json(
        "coherence.json",
        {"tolerance": tol, "passed": passed, "rows": [dict(zip(header, row)) for row in rows]},
    )
    return EXIT_OK if passed else EXIT_FAIL, {"rows": len(rows), "passed": passed}


def cmd_spectrum(cfg, out):
    crystal = cfg.crystal()
    spec = spectral.idler_spectrum(crystal, cfg.spectrum_grid(crystal))
    wl_nm = spec.wavelengths(crystal.omega_idler) * 1e9
    inten = spec.intensity / spec.intensity.max()
    out.csv("spectrum.csv", ["wavelength_nm", "intensity"], zip(wl_nm.tolist(), inten.tolist()))
    summary = {
        "fwhm_nm": spec.fwhm_nm,
        "fwhm_rad_s": spec.fwhm_rad_s,
        "center_wavelength_nm": spec.center_nm,
        "walkoff_time_s": crystal.walkoff_time,
        "resolution_m": spectral.C * crystal.walkoff_time,
    }
    if out.fmt in ("json", "both"):
        summary_rows = {"wavelength_nm": wl_nm.tolist(), "intensity": inten.tolist()}
        out.json("spectrum.json", {**summary, **summary_rows})
    out.json("spectrum_summary.json", summary, always=True)
    return EXIT_OK, summary


def cmd_scan(cfg, out):
    crystal, geom = cfg.crystal(), cfg.geometry()
    sample, scan, det = cfg.sample(), cfg.scan(), cfg.detection()
    result = tomography.simulate_axial_scan(
        sample, crystal, geom, scan, det, noisy=cfg.noisy(), workers=_workers()
    )
    v_sys = det.system_visibility if det.system_visibility > 0 else 1.0
    profile = tomography.reconstruct_profile(result, v_sys)
    out.csv(
        "scan.csv",
        ["delay_m", "visibility", "phase_rad", "stderr"],
        (list(map(float, row)) for row in result.rows()),
    )
    out.csv(
        "fringes.csv",
        ["delay_m", "fine_offset_m", "counts"],
        (
            [float(d), float(off), float(c)]
            for d, row in zip(result.delays, result.counts)
            for off, c in zip(result.fine_offsets, row)
        ),
    )
    out.csv(
        "profile.csv",
        ["depth_m", "reflectivity", "peak_visibility", "uncertainty_m"],
        (list(layer) for layer in profile.layers),
    )
    out.json("scan.json", result.to_json_dict())
    out.json("profile.json", profile.to_json_dict(), always=True)
    summary = {
        "points": int(result.delays.size),
        "layers": [layer._asdict() for layer in profile.layers],
        "max_visibility": float(result.visibility.max()) if result.delays.size else 0.0,
    }
    return EXIT_OK, summary


def cmd_validate(cfg, out, tolerance_scale=1.0):
    report = validate.run_validation(tolerance_scale)
    if out is not None:
        out.json("validate.json", report, always=True)
    return (EXIT_OK if report["passed"] else EXIT_FAIL), report


COMMANDS = {
    "coherence": cmd_coherence,
    "spectrum": cmd_spectrum,
    "scan": cmd_scan,
    "validate": cmd_validate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="icts", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="override the configuration seed")
    parser.add_argument("--format", choices=["csv", "json", "both"])
    parser.add_argument("--tolerance-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            try:
                cfg = RunConfig.load(args.config)
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
        elif args.command == "validate":
            cfg = RunConfig({})
        else:
            raise ConfigError("--config is required for this command")
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.out is None and args.command != "validate":
            raise ConfigError("--out is required for this command")
        out = None
        if args.out is not None:
            out = Outputs(args.out, args.format or cfg.output_format, cfg)
        if args.command == "validate":
            code, summary = cmd_validate(cfg, out, args.tolerance_scale)
        else:
            code, summary = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ICTSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(json_text(summary), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
