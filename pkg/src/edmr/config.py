"""
Run configuration: strict TOML schema with unit-carrying keys.

Every key name states its unit (``b0_mT``, ``length_ns``...). Unknown keys
are rejected with a suggestion, so ``length_us`` cannot silently fall back
to a default. A parsed configuration is fully resolved: serializing and
re-parsing it gives an identical ``RunConfig``.
"""
from __future__ import annotations

import copy
import difflib
import hashlib
import json
import math
import sys
import warnings
from dataclasses import dataclass

import numpy as np
import tomli
import tomli_w

from .dynamics import PulseSpec
from .errors import ConfigurationError, EDMRError
from .experiments import EnsembleSpec, TransientGrid, b1_from_power
from .sigproc import BoxcarWindow
from .spinsys import SpinPairConfig, donor_resonance_field

__all__ = ["EXPERIMENTS", "SCHEMA", "RunConfig", "parse_config", "dump_config", "config_hash"]

EXPERIMENTS = ("field-sweep", "rabi", "detuning-map", "transient", "nutation")

_MISSING = object()

_num = (int, float)


def _ge0(v):
    return v >= 0


def _gt0(v):
    return v > 0


def _g(v):
    return 0 < v < 5


def _mI(v):
    return v in (0.5, -0.5)


# section -> key -> (types, default or _MISSING for optional, check, description)
SCHEMA = {
    "spin": {
        "g_donor": (_num, 1.9985, _g, "in (0, 5)"),
        "g_defect": (_num, 2.0039, _g, "in (0, 5)"),
        "hyperfine_mT": (_num, 4.2, _ge0, ">= 0"),
        "exchange_rad_per_s": (_num, 0.0, None, ""),
        "b0_mT": (_num, _MISSING, _gt0, "> 0"),
        "mw_freq_Hz": (_num, 9.7411e9, _gt0, "> 0"),
        "temperature_K": (_num, 5.0, _gt0, "> 0"),
        "offset_current_A": (_num, 50e-6, _ge0, ">= 0"),
        "current_scale_A_s": (_num, _MISSING, _gt0, "> 0"),
        "generation_mode": (str, "unpolarized", lambda v: v in ("unpolarized", "thermal"),
                            "'unpolarized' or 'thermal'"),
    },
    "rates": {
        "singlet_per_s": (_num, 2.0e5, _ge0, ">= 0"),
        "triplet_per_s": (_num, 3.0e4, _ge0, ">= 0"),
        "dissociation_per_s": (_num, 0.0, _ge0, ">= 0"),
        "generation_per_s": (_num, 1.0e4, _ge0, ">= 0"),
    },
    "pulse": {
        "length_ns": (_num, 480.0, _ge0, ">= 0"),
        "b1_mT": (_num, 0.0372, _ge0, ">= 0"),
        "power_W": (_num, _MISSING, _ge0, ">= 0"),
        "phase_rad": (_num, 0.0, None, ""),
        "mw_freq_Hz": (_num, _MISSING, _gt0, "> 0"),
    },
    "calibration": {
        "b1_ref_mT": (_num, 0.1, _gt0, "> 0"),
        "p_ref_W": (_num, 1.0, _gt0, "> 0"),
    },
    "ensemble": {
        "nuclear_mI": (list, [0.5, -0.5], lambda v: all(_mI(x) for x in v), "entries +-0.5"),
        "nuclear_weights": (list, [0.5, 0.5], lambda v: all(x >= 0 for x in v), "entries >= 0"),
        "defect_g": (list, [2.0039, 2.0081], lambda v: all(_g(x) for x in v), "entries in (0, 5)"),
        "defect_weights": (list, [0.5, 0.5], lambda v: all(x >= 0 for x in v), "entries >= 0"),
        "b1_distribution": (str, "delta", lambda v: v in ("delta", "gaussian"),
                            "'delta' or 'gaussian'"),
        "b1_rel_sigma": (_num, 0.0, _ge0, ">= 0"),
        "sampling": (str, "quadrature", lambda v: v in ("quadrature", "monte-carlo"),
                     "'quadrature' or 'monte-carlo'"),
        "samples": (int, 15, _gt0, "> 0"),
        "species": (str, "both", lambda v: v in ("both", "donor", "defect"),
                    "'both', 'donor' or 'defect'"),
        "initial_state": (str, "steady", lambda v: v in ("steady", "low-temperature"),
                          "'steady' or 'low-temperature'"),
    },
    "boxcar": {
        "t1_us": (_num, 7.0, _ge0, ">= 0"),
        "t2_us": (_num, 23.0, _gt0, "> 0"),
    },
    "detection": {
        "t0_us": (_num, 3.0, _ge0, ">= 0"),
        "dt_ns": (_num, 50.0, _gt0, "> 0"),
        "t_end_us": (_num, 30.0, _gt0, "> 0"),
    },
    "field_sweep": {
        "start_mT": (_num, 343.0, _gt0, "> 0"),
        "stop_mT": (_num, 353.0, _gt0, "> 0"),
        "step_mT": (_num, 0.02, _gt0, "> 0"),
        "slice_us": (_num, 15.5, _ge0, ">= 0"),
        "linewidth_donor_mT": (_num, 0.45, _ge0, ">= 0"),
        "linewidth_defect_mT": (_num, 1.0, _ge0, ">= 0"),
        "contour": (bool, False, None, ""),
        "contour_dt_us": (_num, 0.5, _gt0, "> 0"),
    },
    "rabi": {
        "tau_step_ns": (_num, 4.0, _gt0, "> 0"),
        "tau_points": (int, 1000, lambda v: v >= 8, ">= 8"),
        "powers_W": (list, [0.25, 1.0, 2.25, 4.0], lambda v: len(v) >= 1 and all(x >= 0 for x in v),
                     "non-empty, entries >= 0"),
        "line_mI": (_num, -0.5, _mI, "+-0.5"),
        "zero_pad": (int, 8, _gt0, "> 0"),
        "window": (str, "hann", lambda v: v in ("hann", "rect"), "'hann' or 'rect'"),
    },
    "detuning_map": {
        "b1_mT": (_num, 0.1, _gt0, "> 0"),
        "span_mT": (_num, 1.5, _gt0, "> 0"),
        "step_mT": (_num, 0.1, _gt0, "> 0"),
        "tau_step_ns": (_num, 4.0, _gt0, "> 0"),
        "tau_points": (int, 1000, lambda v: v >= 8, ">= 8"),
        "line_mI": (_num, -0.5, _mI, "+-0.5"),
        "zero_pad": (int, 8, _gt0, "> 0"),
        "window": (str, "hann", lambda v: v in ("hann", "rect"), "'hann' or 'rect'"),
    },
    "transient": {
        "start_us": (_num, 0.0, _ge0, ">= 0"),
        "stop_us": (_num, 400.0, _gt0, "> 0"),
        "step_ns": (_num, 100.0, _gt0, "> 0"),
        "line_mI": (_num, -0.5, _mI, "+-0.5"),
    },
    "nutation": {
        "b1_mT": (_num, 0.1, _ge0, ">= 0"),
        "tau_step_ns": (_num, 4.0, _gt0, "> 0"),
        "tau_points": (int, 1000, lambda v: v >= 2, ">= 2"),
        "line_mI": (_num, -0.5, _mI, "+-0.5"),
        "observable": (str, "singlet", lambda v: v in ("singlet", "T0", "Tplus", "Tminus"),
                       "'singlet', 'T0', 'Tplus' or 'Tminus'"),
        "initial_state": (str, "low-temperature", lambda v: v in ("steady", "low-temperature"),
                          "'steady' or 'low-temperature'"),
        "drive": (str, "both", lambda v: v in ("both", "donor", "defect"),
                  "'both', 'donor' or 'defect'"),
    },
    "run": {
        "seed": (int, 0, _ge0, ">= 0"),
        "formats": (list, ["csv", "json"],
                    lambda v: len(v) > 0 and all(x in ("csv", "json", "svg") for x in v),
                    "subset of csv, json, svg"),
    },
}


def _check_type(path, value, types):
    if types is bool:
        ok = isinstance(value, bool)
    elif types is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif types is list:
        ok = isinstance(value, list)
    elif types is str:
        ok = isinstance(value, str)
    else:
        ok = isinstance(value, types) and not isinstance(value, bool)
        if ok and not math.isfinite(value):
            raise ConfigurationError(f"{path}: value must be finite")
    if not ok:
        name = getattr(types, "__name__", "number")
        raise ConfigurationError(f"{path}: expected {name}, got {type(value).__name__} {value!r}")


def _unknown(path, key, choices):
    hint = difflib.get_close_matches(key, list(choices), n=1)
    extra = f" (did you mean '{hint[0]}'? keys carry their unit)" if hint else ""
    return ConfigurationError(f"unknown key '{path}'{extra}")


def _resolve(data: dict) -> dict:
    if not isinstance(data, dict):
        raise ConfigurationError("configuration root must be a table")
    out = {}
    for section in data:
        if section not in SCHEMA:
            raise _unknown(section, section, SCHEMA)
        if not isinstance(data[section], dict):
            raise ConfigurationError(f"'{section}' must be a table")
    for section, keys in SCHEMA.items():
        given = data.get(section, {})
        for key in given:
            if key not in keys:
                raise _unknown(f"{section}.{key}", key, keys)
        sec = {}
        for key, (types, default, check, desc) in keys.items():
            path = f"{section}.{key}"
            if key in given:
                value = given[key]
                _check_type(path, value, types)
                if types is list:
                    for item in value:
                        if isinstance(item, bool):
                            raise ConfigurationError(f"{path}: list entries must not be booleans")
                if check is not None and not check(value):
                    raise ConfigurationError(f"{path}={value!r} violates constraint: {desc}")
                sec[key] = copy.deepcopy(value)
            elif default is not _MISSING:
                sec[key] = copy.deepcopy(default)
        out[section] = sec
    _cross_check(out)
    return out


def _cross_check(c: dict) -> None:
    e = c["ensemble"]
    for a, b in (("nuclear_mI", "nuclear_weights"), ("defect_g", "defect_weights")):
        if len(e[a]) != len(e[b]) or not e[a]:
            raise ConfigurationError(f"ensemble.{a} and ensemble.{b} must be non-empty and equal length")
        total = sum(e[b])
        if total <= 0 or abs(total - 1.0) > 1e-12:
            raise ConfigurationError(f"ensemble.{b} must sum to 1 (got {total})")
    if c["boxcar"]["t1_us"] >= c["boxcar"]["t2_us"]:
        raise ConfigurationError("boxcar.t1_us must be < boxcar.t2_us")
    d = c["detection"]
    if not d["t0_us"] < d["t_end_us"]:
        raise ConfigurationError("detection.t0_us must be < detection.t_end_us")
    if not (d["t0_us"] <= c["boxcar"]["t1_us"] and c["boxcar"]["t2_us"] <= d["t_end_us"]):
        raise ConfigurationError("boxcar window must lie inside [detection.t0_us, detection.t_end_us]")
    fs = c["field_sweep"]
    if fs["start_mT"] >= fs["stop_mT"]:
        raise ConfigurationError("field_sweep.start_mT must be < field_sweep.stop_mT")
    if not d["t0_us"] <= fs["slice_us"]:
        raise ConfigurationError("field_sweep.slice_us must be >= detection.t0_us")
    if c["transient"]["start_us"] >= c["transient"]["stop_us"]:
        raise ConfigurationError("transient.start_us must be < transient.stop_us")
    try:
        _spin(c)
    except EDMRError as exc:
        raise ConfigurationError(f"spin/rates: {exc}") from exc


def _spin(c: dict) -> SpinPairConfig:
    s, r = c["spin"], c["rates"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return SpinPairConfig(
            g_a=float(s["g_donor"]),
            g_b=float(s["g_defect"]),
            hyperfine_A=float(s["hyperfine_mT"]),
            J_coupling=float(s["exchange_rad_per_s"]),
            B0=float(s.get("b0_mT", 350.3)),
            mw_freq=float(s["mw_freq_Hz"]),
            rate_singlet=float(r["singlet_per_s"]),
            rate_triplet=float(r["triplet_per_s"]),
            generation=float(r["generation_per_s"]),
            dissociation=float(r["dissociation_per_s"]),
            temperature=float(s["temperature_K"]),
            offset_current=float(s["offset_current_A"]),
            current_scale=float(s["current_scale_A_s"]) if "current_scale_A_s" in s else None,
            generation_mode=s["generation_mode"],
        )


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description (``values`` holds every section).

    ``out_dir`` only says where files go; it is not part of the hashed
    configuration, so moving a run elsewhere leaves its data files unchanged.
    """

    experiment: str
    values: dict
    out_dir: str = "edmr-out"

    def __eq__(self, other):
        return (isinstance(other, RunConfig) and self.experiment == other.experiment
                and self.values == other.values)

    def __hash__(self):
        return hash(config_hash(self))

    @property
    def spin(self) -> SpinPairConfig:
        """Pair parameters; B0 is the explicit ``spin.b0_mT`` or the donor line."""
        return self.spin_at(-0.5)

    def spin_at(self, mI: float) -> SpinPairConfig:
        cfg = _spin(self.values)
        if "b0_mT" in self.values["spin"]:
            return cfg
        return cfg.replace(B0=donor_resonance_field(cfg, mI))

    @property
    def pulse(self) -> PulseSpec:
        p, cal = self.values["pulse"], self.values["calibration"]
        if "power_W" in p:
            b1 = float(b1_from_power(p["power_W"], cal["b1_ref_mT"], cal["p_ref_W"]))
        else:
            b1 = float(p["b1_mT"])
        return PulseSpec(length=p["length_ns"] / 1e9, B1=b1,
                         mw_freq=p.get("mw_freq_Hz"), phase=float(p["phase_rad"]))

    @property
    def ensemble(self) -> EnsembleSpec:
        e = self.values["ensemble"]
        return EnsembleSpec(
            nuclear=tuple(zip(map(float, e["nuclear_mI"]), map(float, e["nuclear_weights"]))),
            defect_g=tuple(zip(map(float, e["defect_g"]), map(float, e["defect_weights"]))),
            b1_distribution=e["b1_distribution"],
            b1_rel_sigma=float(e["b1_rel_sigma"]),
            sampling=e["sampling"],
            samples=int(e["samples"]),
            seed=self.seed,
            species=e["species"],
        )

    @property
    def initial_state(self) -> str:
        return self.values["ensemble"]["initial_state"]

    @property
    def window(self) -> BoxcarWindow:
        b = self.values["boxcar"]
        return BoxcarWindow(b["t1_us"] / 1e6, b["t2_us"] / 1e6)

    @property
    def detection(self) -> TransientGrid:
        d = self.values["detection"]
        return TransientGrid(d["t0_us"] / 1e6, d["dt_ns"] / 1e9, d["t_end_us"] / 1e6)

    @property
    def seed(self) -> int:
        return int(self.values["run"]["seed"])

    @property
    def formats(self) -> list:
        return list(self.values["run"]["formats"])

    def section(self, name: str) -> dict:
        return self.values[name]

    def line_field(self, mI: float) -> float:
        return donor_resonance_field(_spin(self.values), mI)

    def taus(self, section: str) -> np.ndarray:
        s = self.values[section]
        return s["tau_step_ns"] / 1e9 * np.arange(s["tau_points"])

    def with_overrides(self, **run) -> "RunConfig":
        values = copy.deepcopy(self.values)
        for k, v in run.items():
            if v is not None:
                values["run"][k] = v
        return RunConfig(self.experiment, _resolve(values), self.out_dir)


def parse_config(source=None, experiment: str = "field-sweep", out_dir: str = "edmr-out") -> RunConfig:
    """Parse TOML from a path, a text string, a dict, stdin ('-') or nothing (defaults)."""
    if experiment not in EXPERIMENTS:
        raise ConfigurationError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    if source is None:
        data = {}
    elif isinstance(source, dict):
        data = copy.deepcopy(source)
    else:
        text = None
        if source == "-":
            text = sys.stdin.read()
        elif isinstance(source, str) and ("\n" in source or "=" in source or source.strip() == ""):
            text = source
        else:
            try:
                with open(source, "rb") as fh:
                    raw = fh.read()
            except OSError as exc:
                raise ConfigurationError(f"cannot read config {source}: {exc}") from exc
            text = raw.decode("utf-8")
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigurationError(f"config is not valid TOML: {exc}") from exc
    given_pulse = data.get("pulse", {}) if isinstance(data.get("pulse", {}), dict) else {}
    if "power_W" in given_pulse and "b1_mT" in given_pulse:
        raise ConfigurationError("pulse: give either b1_mT or power_W, not both")
    values = _resolve(data)
    if "power_W" in values["pulse"]:
        values["pulse"].pop("b1_mT", None)
    return RunConfig(experiment, values, str(out_dir))


def dump_config(run: RunConfig) -> str:
    """TOML text that parses back to ``run``."""
    return tomli_w.dumps(run.values)


def config_hash(run: RunConfig) -> str:
    blob = json.dumps({"experiment": run.experiment, "values": run.values}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()
