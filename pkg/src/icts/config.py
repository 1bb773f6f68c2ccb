"""JSON run configuration: schema, validation and object builders."""

from __future__ import annotations

import copy
import json
import math

import jsonschema

from .errors import ConfigError, ICTSError
from .spectral import CrystalParams, FilterSpec, FrequencyGrid, GeometryParams
from .tomography import DetectionParams, Layer, Sample, ScanConfig, config_hash

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}


def _obj(props, required=()):
    return {
        "type": "object",
        "properties": props,
        "required": list(required),
        "additionalProperties": False,
    }


CRYSTAL = _obj(
    {
        "length_m": _pos,
        "sigma_per_m": _nonneg,
        "signal_wavelength_m": _pos,
        "idler_wavelength_m": _pos,
        "pump_wavelength_m": _pos,
        "inv_group_velocity_signal_s_per_m": _pos,
        "inv_group_velocity_idler_s_per_m": _pos,
        "idler_fwhm_m": _pos,
    }
)
GEOMETRY = _obj({k: _nonneg for k in ("z1_m", "z2_m", "z3_m", "z4_m")})
FILTER = _obj(
    {
        "center_wavelength_m": _pos,
        "bandwidth_m": _pos,
        "shape": {"enum": ["gaussian", "rectangular"]},
    },
    required=("center_wavelength_m", "bandwidth_m"),
)
LAYER = _obj(
    {
        "depth_m": _num,
        "reflectivity": {"type": "number", "minimum": 0, "maximum": 1},
        "reflectivity_phase_rad": _num,
        "system_visibility": {"type": "number", "minimum": 0, "maximum": 1},
    },
    required=("depth_m",),
)
SAMPLE = _obj(
    {"layers": {"type": "array", "items": LAYER}, "path_multiplier": {"enum": [1, 2]}}
)
SCAN = _obj(
    {
        "delay_start_m": _num,
        "delay_stop_m": _num,
        "delay_step_m": _pos,
        "fine_count": {"type": "integer", "minimum": 8},
        "fine_step_m": _pos,
    },
    required=("delay_start_m", "delay_stop_m", "delay_step_m"),
)
DETECTION = _obj(
    {
        "n0": _pos,
        "dark_counts": _nonneg,
        "system_visibility": {"type": "number", "minimum": 0, "maximum": 1},
        "noisy": {"type": "boolean"},
    }
)
COHERENCE = _obj(
    {
        "gains": {"type": "array", "items": _pos},
        "mus": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "cutoff": {"type": "integer", "minimum": 2, "maximum": 20},
        "tolerance": _pos,
        "low_gain": {"type": "boolean"},
    }
)
SPECTRUM = _obj({"n_lobes": _pos, "points": {"type": "integer", "minimum": 3}})
OUTPUT = _obj({"format": {"enum": ["csv", "json", "both"]}})

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "icts run configuration",
    **_obj(
        {
            "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            "crystal": CRYSTAL,
            "geometry": GEOMETRY,
            "sample": SAMPLE,
            "scan": SCAN,
            "detection": DETECTION,
            "filter": FILTER,
            "coherence": COHERENCE,
            "spectrum": SPECTRUM,
            "output": OUTPUT,
        }
    ),
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class RunConfig:
    """A schema-validated configuration document."""

    def __init__(self, data):
        errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            err = errors[0]
            path = "/".join(str(p) for p in err.absolute_path) or "<root>"
            raise ConfigError(err.message, path)
        self.data = copy.deepcopy(data)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls(data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def to_json(self):
        return json.dumps(self.data, sort_keys=True, indent=2)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    @property
    def sha256(self):
        return config_hash(self.data)

    def section(self, name):
        return self.data.get(name, {})

    @property
    def seed(self):
        return self.data.get("seed", 0)

    def with_seed(self, seed):
        data = copy.deepcopy(self.data)
        data["seed"] = seed
        return RunConfig(data)

    @property
    def output_format(self):
        return self.section("output").get("format", "both")

    # builders -----------------------------------------------------------

    def crystal(self):
        c = self.section("crystal")
        try:
            if "inv_group_velocity_idler_s_per_m" in c:
                return CrystalParams(
                    length=c.get("length_m", 20e-3),
                    sigma=c.get("sigma_per_m", 1.0),
                    inv_vg_signal=c["inv_group_velocity_signal_s_per_m"],
                    inv_vg_idler=c["inv_group_velocity_idler_s_per_m"],
                    wl_signal=c.get("signal_wavelength_m", 809.4e-9),
                    wl_idler=c.get("idler_wavelength_m", 1552.3e-9),
                    wl_pump=c.get("pump_wavelength_m"),
                )
            kwargs = {
                "idler_fwhm": c.get("idler_fwhm_m", 1.6e-9),
                "wl_idler": c.get("idler_wavelength_m", 1552.3e-9),
                "wl_signal": c.get("signal_wavelength_m", 809.4e-9),
                "length": c.get("length_m", 20e-3),
                "sigma": c.get("sigma_per_m", 1.0),
            }
            if "inv_group_velocity_signal_s_per_m" in c:
                kwargs["inv_vg_signal"] = c["inv_group_velocity_signal_s_per_m"]
            return CrystalParams.calibrated(**kwargs)
        except ICTSError as exc:
            raise ConfigError(str(exc), "crystal") from None

    def geometry(self):
        g = self.section("geometry")
        return GeometryParams(*(g.get(f"z{k}_m", 0.0) for k in range(1, 5)))

    def filter(self):
        f = self.data.get("filter")
        if f is None:
            return None
        return FilterSpec(f["center_wavelength_m"], f["bandwidth_m"], f.get("shape", "gaussian"))

    def sample(self):
        s = self.section("sample")
        layers = []
        for item in s.get("layers", []):
            tau = item.get("reflectivity", 1.0) * complex(
                math.cos(item.get("reflectivity_phase_rad", 0.0)),
                math.sin(item.get("reflectivity_phase_rad", 0.0)),
            )
            layers.append(Layer(item["depth_m"], tau, item.get("system_visibility")))
        try:
            return Sample(tuple(layers), s.get("path_multiplier", 2))
        except ICTSError as exc:
            raise ConfigError(str(exc), "sample") from None

    def scan(self):
        s = self.section("scan")
        if not s:
            raise ConfigError("missing required section", "scan")
        try:
            return ScanConfig(
                s["delay_start_m"],
                s["delay_stop_m"],
                s["delay_step_m"],
                s.get("fine_count", 16),
                s.get("fine_step_m"),
                self.filter(),
            )
        except ICTSError as exc:
            raise ConfigError(str(exc), "scan") from None

    def detection(self):
        d = self.section("detection")
        return DetectionParams(
            d.get("n0", 1e5), d.get("dark_counts", 0.0), d.get("system_visibility", 1.0), self.seed
        )

    def noisy(self):
        return self.section("detection").get("noisy", True)

    def spectrum_grid(self, crystal):
        s = self.section("spectrum")
        return FrequencyGrid.for_crystal(crystal, s.get("n_lobes", 8), s.get("points", 2001))
