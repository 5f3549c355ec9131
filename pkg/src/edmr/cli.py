"""
Command-line front end.

    edmr <field-sweep|rabi|detuning-map|transient|nutation> --config FILE
         [--seed N] [--threads N] [--out DIR] [--format csv,json,svg]

Data files (CSV, JSON) depend only on the configuration and seed. Wall-clock
information lives exclusively in ``manifest.json``.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, RunConfig, config_hash, parse_config
from .errors import ConfigurationError, EDMRError, UsageError
from .experiments import (
    SweepResult,
    run_detuning_map,
    run_field_sweep,
    run_nutation,
    run_rabi_series,
    run_transient,
)
from .svg import emit_plot

__all__ = ["ResultManifest", "execute", "main", "build_parser"]

log = logging.getLogger("edmr")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


@dataclasses.dataclass
class ResultManifest:
    """What a run produced, with checksums of every emitted file."""

    experiment: str
    config_hash: str
    version: str
    seed: int
    files: list = dataclasses.field(default_factory=list)
    duration_s: float = 0.0
    timestamp: str = ""
    status: str = "ok"
    error: dict | None = None
    summary: dict = dataclasses.field(default_factory=dict)
    threads: int = 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def verify(self, out_dir) -> bool:
        """True when every listed file exists with the recorded checksum."""
        for f in self.files:
            path = Path(out_dir) / f["name"]
            if not path.exists() or _sha256(path.read_bytes()) != f["sha256"]:
                return False
        return True


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _json_bytes(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode()


def _csv_bytes(header, columns) -> bytes:
    import io

    buf = io.StringIO(newline="")
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(buf, data, fmt="%.16e", delimiter=",", header=",".join(header), comments="",
               newline="\n")
    return buf.getvalue().encode()


class _Writer:
    def __init__(self, out_dir: Path, formats):
        self.out = out_dir
        self.formats = set(formats)
        self.files = []

    def _put(self, name, data: bytes, kind):
        if kind not in self.formats:
            return
        path = self.out / name
        path.write_bytes(data)
        self.files.append({"name": name, "sha256": _sha256(data), "bytes": len(data)})
        log.info("wrote %s", path)

    def csv(self, name, header, columns):
        self._put(name, _csv_bytes(header, columns), "csv")

    def json(self, name, obj):
        self._put(name, _json_bytes(obj), "json")

    def svg(self, name, result, kind="line"):
        if "svg" in self.formats:
            self._put(name, emit_plot(result, kind).encode(), "svg")


# -- per-experiment drivers ---------------------------------------------------


def _field_sweep(run: RunConfig, w: _Writer, threads: int) -> dict:
    fs = run.section("field_sweep")
    B = np.arange(fs["start_mT"], fs["stop_mT"] + fs["step_mT"] / 2, fs["step_mT"])
    contour_times = None
    if fs["contour"]:
        d = run.detection
        contour_times = np.arange(d.t0, d.t_end + 1e-12, fs["contour_dt_us"] / 1e6)
    res = run_field_sweep(run.spin, run.pulse, B, fs["slice_us"] / 1e6, ensemble=run.ensemble,
                          linewidths=(fs["linewidth_donor_mT"], fs["linewidth_defect_mT"]),
                          contour_times=contour_times, threads=threads)
    w.csv("sweep.csv", ["B0_mT", "dI_A", "dI_donor_A", "dI_defect_A"],
          [res.axis, res.values, res.columns["dI_donor_A"], res.columns["dI_defect_A"]])
    peaks = {k: res.meta[k] for k in ("peaks", "donor_peaks", "defect_peaks")}
    w.json("peaks.json", peaks)
    w.svg("sweep.svg", res)
    if contour_times is not None:
        ct = res.meta["contour_times_s"]
        BB, TT = np.meshgrid(res.axis, ct, indexing="ij")
        w.csv("contour.csv", ["B0_mT", "t_s", "dI_A"],
              [BB.ravel(), TT.ravel(), np.asarray(res.meta["contour"]).ravel()])
        w.svg("contour.svg", res, "contour")
    return {"peaks": res.meta["peaks"]}


def _rabi(run: RunConfig, w: _Writer, threads: int) -> dict:
    r = run.section("rabi")
    cal = run.section("calibration")
    cfg = run.spin_at(r["line_mI"])
    series = run_rabi_series(cfg, run.taus("rabi"), r["powers_W"], cal["b1_ref_mT"],
                             cal["p_ref_W"], window=run.window, grid=run.detection,
                             ensemble=run.ensemble, zero_pad=r["zero_pad"],
                             fft_window=r["window"], mw_freq=run.pulse.mw_freq,
                             initial_state=run.initial_state, threads=threads)
    for k, (q, spec, res) in enumerate(zip(series.charges, series.spectra, series.results), 1):
        w.csv(f"q_tau_p{k}.csv", ["tau_s", "Q_C"], [series.taus, q])
        w.csv(f"fft_p{k}.csv", ["freq_Hz", "magnitude"], [spec.freqs, spec.magnitude])
        w.svg(f"q_tau_p{k}.svg", res)
    fit = dict(series.fit)
    fit.update(power_W=series.powers, B1_mT=series.b1, peak_Hz=series.peak_freqs)
    w.json("fit.json", fit)
    return {"fit": series.fit}


def _detuning_map(run: RunConfig, w: _Writer, threads: int) -> dict:
    d = run.section("detuning_map")
    line = run.line_field(d["line_mI"])
    n = int(round(d["span_mT"] / d["step_mT"]))
    B = line + d["step_mT"] * np.arange(-n, n + 1)
    m = run_detuning_map(run.spin_at(d["line_mI"]), run.taus("detuning_map"), B, d["b1_mT"],
                         nuclear_mI=d["line_mI"], window=run.window, grid=run.detection,
                         ensemble=run.ensemble, zero_pad=d["zero_pad"], fft_window=d["window"],
                         mw_freq=run.pulse.mw_freq, threads=threads)
    BB, FF = np.meshgrid(B, m.freqs, indexing="ij")
    w.csv("map.csv", ["B0_mT", "freq_Hz", "magnitude"],
          [BB.ravel(), FF.ravel(), m.result.values.ravel()])
    w.csv("ridge.csv", ["B0_mT", "ridge_Hz", "predicted_Hz"], [B, m.ridge, m.predicted])
    w.svg("map.svg", m.result, "contour")
    err = np.abs(m.ridge - m.predicted) / m.bin_width
    return {"line_mT": line, "bin_width_Hz": m.bin_width, "max_ridge_error_bins": float(err.max())}


def _transient(run: RunConfig, w: _Writer, threads: int) -> dict:
    t = run.section("transient")
    times = np.arange(t["start_us"] / 1e6, t["stop_us"] / 1e6 + t["step_ns"] / 2e9, t["step_ns"] / 1e9)
    res = run_transient(run.spin_at(t["line_mI"]), run.pulse, times, ensemble=run.ensemble,
                        initial_state=run.initial_state, threads=threads)
    w.csv("transient.csv", ["t_s", "dI_A"], [res.axis, res.values])
    w.svg("transient.svg", res)
    return {}


def _nutation(run: RunConfig, w: _Writer, threads: int) -> dict:
    nu = run.section("nutation")
    res = run_nutation(run.spin_at(nu["line_mI"]), run.taus("nutation"), nu["b1_mT"],
                       nuclear_mI=nu["line_mI"], initial_state=nu["initial_state"],
                       mw_freq=run.pulse.mw_freq, phase=run.pulse.phase,
                       observable=nu["observable"], drive=nu["drive"])
    w.csv("nutation.csv", ["tau_s", nu["observable"]], [res.axis, res.values])
    w.svg("nutation.svg", res)
    return {}


_DRIVERS = {
    "field-sweep": _field_sweep,
    "rabi": _rabi,
    "detuning-map": _detuning_map,
    "transient": _transient,
    "nutation": _nutation,
}


def execute(run: RunConfig, *, threads: int | None = None, out_dir=None) -> ResultManifest:
    """Run ``run.experiment``, write its files and ``manifest.json``.

    Numerical failures do not propagate: they are recorded in the manifest
    with ``status='error'``.
    """
    out = Path(out_dir if out_dir is not None else run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = max(1, threads or os.cpu_count() or 1)
    w = _Writer(out, run.formats)
    manifest = ResultManifest(run.experiment, config_hash(run), __version__, run.seed,
                              threads=threads)
    w.json("config.json", {"experiment": run.experiment, "values": run.values})
    t_start = time.perf_counter()
    try:
        manifest.summary = _DRIVERS[run.experiment](run, w, threads)
    except (EDMRError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("%s failed: %s", run.experiment, exc)
        manifest.status = "error"
        manifest.error = {"type": type(exc).__name__, "message": str(exc)}
    manifest.duration_s = time.perf_counter() - t_start
    manifest.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat()
    manifest.files = list(w.files)
    (out / "manifest.json").write_bytes(_json_bytes(manifest.to_dict()))
    return manifest


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edmr", description="Pulsed EDMR spin-pair simulations.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="TOML file, or '-' for stdin")
    p.add_argument("--seed", type=int, default=None, help="overrides run.seed")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: all cores); output does not depend on it")
    p.add_argument("--out", default="edmr-out", help="output directory")
    p.add_argument("--format", default=None,
                   help="comma-separated subset of csv,json,svg (overrides run.formats)")
    return p


def _setup_logging():
    level = os.environ.get("EDMR_LOG", "WARNING").strip().upper()
    if level.isdigit():
        lvl = int(level)
    else:
        lvl = logging.getLevelName(level)
        if not isinstance(lvl, int):
            lvl = logging.WARNING
    logging.basicConfig(level=lvl, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise UsageError("--seed must be >= 0")
        formats = None
        if args.format is not None:
            formats = [f.strip() for f in args.format.split(",") if f.strip()]
        run = parse_config(args.config, args.experiment, args.out)
        run = run.with_overrides(seed=args.seed, formats=formats)
    except (ConfigurationError, UsageError) as exc:
        print(f"edmr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = execute(run, threads=args.threads)
    if manifest.status != "ok":
        print(f"edmr: {manifest.error['type']}: {manifest.error['message']}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"edmr: {run.experiment} done in {manifest.duration_s:.2f} s, "
          f"{len(manifest.files)} files in {Path(run.out_dir).resolve()}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
