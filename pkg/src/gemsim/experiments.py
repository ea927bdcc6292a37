"""Experiment specs: strict JSON ingestion, orchestration, artifact output.

A spec document mirrors the configuration dataclasses field for field.
Unknown keys are rejected with their dotted path; all type invariants are
enforced at load time so runs cannot fail on configuration afterwards.
Artifacts are CSV/JSON files with fixed full-precision formatting and a
manifest listing names, checksums and headline scalars; rerunning a spec
reproduces every data file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .core import ConfigError, GemConfig, Grid, PulseSpec, StarkProfile
from .eit import EitConfig, EitRecord, eit_polariton, run_eit
from .kspace import centroid_series, phi_residual, to_kspace
from .metrics import (
    efficiency_analytic,
    efficiency_numeric,
    fidelity,
    find_delta,
    mode_fidelity_sweep,
)
from .solver import run_gem

__all__ = ["ExperimentSpec", "ExperimentResult", "SpecValidationError", "load_spec", "run_experiment"]

KINDS = ("gem_run", "eit_run", "fidelity_sweep", "delta_search", "kspace_report")

_FMT = "%.17e"


class SpecValidationError(ValueError):
    """Spec document rejected; the message carries the offending key path."""


def _require_keys(obj: dict, path: str, required: dict, optional: dict = ()):
    optional = dict(optional)
    for key in obj:
        if key not in required and key not in optional:
            raise SpecValidationError(f"unknown key {path}.{key}" if path else f"unknown key {key}")
    for key in required:
        if key not in obj:
            raise SpecValidationError(f"missing key {path + '.' if path else ''}{key}")
    out = {}
    for key, conv in {**required, **optional}.items():
        if key in obj:
            out[key] = conv(obj[key], f"{path + '.' if path else ''}{key}")
    return out


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecValidationError(f"{path} must be a number")
    return float(v)


def _integer(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SpecValidationError(f"{path} must be an integer")
    return int(v)


def _string(v, path):
    if not isinstance(v, str):
        raise SpecValidationError(f"{path} must be a string")
    return v


def _pair(v, path):
    if not isinstance(v, list) or len(v) != 2:
        raise SpecValidationError(f"{path} must be a two-element list")
    return (_number(v[0], path + "[0]"), _number(v[1], path + "[1]"))


def _pair_list(v, path):
    if not isinstance(v, list):
        raise SpecValidationError(f"{path} must be a list of [t_a, t_b] pairs")
    return tuple(_pair(p, f"{path}[{i}]") for i, p in enumerate(v))


def _number_list(v, path):
    if not isinstance(v, list) or not v:
        raise SpecValidationError(f"{path} must be a nonempty list of numbers")
    return [_number(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _int_list(v, path):
    if not isinstance(v, list) or not v:
        raise SpecValidationError(f"{path} must be a nonempty list of integers")
    return [_integer(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _string_list(v, path):
    if not isinstance(v, list):
        raise SpecValidationError(f"{path} must be a list of strings")
    return tuple(_string(x, f"{path}[{i}]") for i, x in enumerate(v))


def _parse_grid(obj, path) -> Grid:
    if not isinstance(obj, dict):
        raise SpecValidationError(f"{path} must be an object")
    kw = _require_keys(
        obj,
        path,
        {"z_min": _number, "z_max": _number, "nz": _integer, "t_max": _number, "nt": _integer},
    )
    return Grid(**kw)


def _parse_stark(obj, path) -> StarkProfile:
    if not isinstance(obj, dict):
        raise SpecValidationError(f"{path} must be an object")
    kw = _require_keys(
        obj,
        path,
        {"eta0": _number, "switch_time": _number},
        {"ramp_tau": _number, "delta_offset": _number, "freeze_intervals": _pair_list},
    )
    return StarkProfile(**kw)


def _parse_gem_config(obj, path) -> GemConfig:
    if not isinstance(obj, dict):
        raise SpecValidationError(f"{path} must be an object")
    kw = _require_keys(
        obj,
        path,
        {
            "g": _number,
            "linear_density": _number,
            "gamma": _number,
            "stark": _parse_stark,
            "grid": _parse_grid,
        },
    )
    try:
        return GemConfig(**kw)
    except ConfigError as exc:
        raise SpecValidationError(f"{path}: {exc}") from exc


def _parse_eit_config(obj, path) -> EitConfig:
    if not isinstance(obj, dict):
        raise SpecValidationError(f"{path} must be an object")
    kw = _require_keys(
        obj,
        path,
        {
            "n_atoms": _number,
            "g": _number,
            "omega_c0": _number,
            "switch_down": _number,
            "switch_up": _number,
            "ramp_tau": _number,
            "grid": _parse_grid,
        },
        {"gamma_e": _number},
    )
    try:
        return EitConfig(**kw)
    except ConfigError as exc:
        raise SpecValidationError(f"{path}: {exc}") from exc


def _parse_pulse(obj, path) -> PulseSpec:
    if not isinstance(obj, dict):
        raise SpecValidationError(f"{path} must be an object")
    kw = _require_keys(
        obj,
        path,
        {"kind": _string},
        {
            "amplitude": _number,
            "center": _number,
            "width": _number,
            "mod_freq": _number,
            "mode_index": _integer,
            "window": _pair,
        },
    )
    if "window" in kw:
        kw["window"] = tuple(kw["window"])
    try:
        return PulseSpec(**kw)
    except ConfigError as exc:
        raise SpecValidationError(f"{path}: {exc}") from exc


def _identity(v, path):
    return v


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    kind: str
    config: Any
    pulse: Optional[PulseSpec]
    analysis: tuple
    output_dir: str
    params: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)


_PARAM_SCHEMA = {
    "input_window": _pair,
    "echo_window": _pair,
    "field_stride": _integer,
    "spectrum_time": _number,
    "interval": _pair,
    "betas": _number_list,
    "mode_indices": _int_list,
    "delta": _identity,
    "probe_mode": _integer,
    "verify_modes": _int_list,
    "search_halfwidth": _number,
    "freeze_window": _pair,
    "envelope_time": _number,
}

_CHECK_SCHEMA = {
    "echo_peak_us": _pair,
    "sigma_abs_vs_analytic": _number,
    "balance_residual_max": _number,
    "phi_residual_max": _number,
    "spectrum_corr_min": _number,
    "envelope_corr_min": _number,
    "spinwave_drift_max": _number,
    "sigma_min": _number,
    "min_fidelity": _number,
    "min_fidelity_beta_from": _number,
    "fidelity_min": _number,
}


def load_spec(path) -> ExperimentSpec:
    """Parse and fully validate an experiment spec JSON document."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise SpecValidationError(f"cannot read spec file {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecValidationError(f"{p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecValidationError("spec document must be a JSON object")

    top = _require_keys(
        doc,
        "",
        {"name": _string, "kind": _string, "config": _identity, "output_dir": _string},
        {"pulse": _identity, "analysis": _string_list, "params": _identity, "checks": _identity},
    )
    kind = top["kind"]
    if kind not in KINDS:
        raise SpecValidationError(f"kind must be one of {KINDS}, got {kind!r}")

    if kind == "eit_run":
        config = _parse_eit_config(top["config"], "config")
    else:
        config = _parse_gem_config(top["config"], "config")

    pulse = None
    if "pulse" in top and top["pulse"] is not None:
        pulse = _parse_pulse(top["pulse"], "pulse")
    if kind in ("gem_run", "eit_run", "kspace_report") and pulse is None:
        raise SpecValidationError(f"kind {kind} requires a pulse")

    params = top.get("params", {})
    if not isinstance(params, dict):
        raise SpecValidationError("params must be an object")
    params = _require_keys(params, "params", {}, _PARAM_SCHEMA)

    checks = top.get("checks", {})
    if not isinstance(checks, dict):
        raise SpecValidationError("checks must be an object")
    checks = _require_keys(checks, "checks", {}, _CHECK_SCHEMA)

    if kind in ("fidelity_sweep",) and "interval" not in params:
        raise SpecValidationError("params.interval is required for fidelity_sweep")
    if kind == "delta_search" and ("interval" not in params or "probe_mode" not in params):
        raise SpecValidationError("params.interval and params.probe_mode are required for delta_search")
    if "delta" in params and not (
        params["delta"] == "auto" or isinstance(params["delta"], (int, float))
    ):
        raise SpecValidationError('params.delta must be a number or "auto"')

    out_dir = top["output_dir"]
    if Path(out_dir).is_absolute() or ".." in Path(out_dir).parts:
        raise SpecValidationError("output_dir must be a relative path without '..'")

    return ExperimentSpec(
        name=top["name"],
        kind=kind,
        config=config,
        pulse=pulse,
        analysis=top.get("analysis", ()),
        output_dir=top["output_dir"],
        params=params,
        checks=checks,
    )


@dataclass
class ExperimentResult:
    name: str
    status: str
    manifest_path: Path
    scalars: dict
    checks: list
    files: list

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class _ArtifactWriter:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header: str, columns) -> Path:
        path = self.out_dir / name
        data = np.column_stack(columns)
        np.savetxt(path, data, fmt=_FMT, delimiter=",", header=header, comments="")
        self._register(path)
        return path

    def csv_matrix(self, name: str, header: str, first_col, matrix) -> Path:
        path = self.out_dir / name
        data = np.column_stack((np.asarray(first_col), np.asarray(matrix)))
        np.savetxt(path, data, fmt=_FMT, delimiter=",", header=header, comments="")
        self._register(path)
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self._register(path)
        return path

    def _register(self, path: Path):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files.append({"name": path.name, "sha256": digest, "bytes": path.stat().st_size})


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a - a.mean()
    b = b - b.mean()
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def input_spectrum_correlation(record, t_snap: float, eta_at_absorption: float) -> float:
    """Pearson correlation of |alpha(z, t_snap)| against the input amplitude
    spectrum resampled through the frequency map omega = -eta*z."""
    idx = int(np.argmin(np.abs(record.field_times - t_snap)))
    prof = np.abs(record.polarisation[idx])
    t = record.times
    dt = record.grid.dt
    spec = np.fft.fft(record.input_series)
    freq = 2.0 * np.pi * np.fft.fftfreq(t.size, d=dt)
    order = np.argsort(freq)
    freq, spec = freq[order], np.abs(spec[order]) * dt
    omega_of_z = -eta_at_absorption * record.grid.z_axis
    mapped = np.interp(omega_of_z, freq, spec)
    return _pearson(prof, mapped)


def envelope_correlation(record: EitRecord, t_snap: float) -> float:
    """Pearson correlation of the stored dark-polariton spatial profile with
    the input temporal envelope mapped through z = v_g*(t_capture - t).

    v_g is the analytic dark-polariton group velocity; the capture instant
    is scanned across the control switch-off ramp (the freeze is spread
    over the ramp, so the map's registration is not sharp) and the best
    correlation is reported.
    """
    cfg = record.config
    idx = int(np.argmin(np.abs(record.field_times - t_snap)))
    pol = np.abs(eit_polariton(record)[idx])
    v_g = 1.0 / cfg.group_delay  # normalized length per us
    z_norm = np.linspace(0.0, 1.0, record.grid.nz)
    env_t = np.abs(record.input_series)
    span = max(2.0 * cfg.ramp_tau, 1.0)
    best = -1.0
    for t_cap in np.linspace(cfg.switch_down - 2.0 * span, cfg.switch_down + span, 61):
        env = np.interp(t_cap - z_norm / v_g, record.times, env_t)
        best = max(best, _pearson(pol, env))
    return best


def _balance_residual(record) -> float:
    """Worst |d/dt (N/g int|alpha|^2 dz) - boundary flux| over peak flux."""
    dt = record.grid.dt
    stored = record.alpha_norm_series * (record.linear_density / record.g)
    rate = np.gradient(stored, dt)
    flux = np.abs(record.input_series) ** 2 - np.abs(record.output_series) ** 2
    peak = float(np.max(np.abs(record.input_series) ** 2))
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(rate - flux))) / peak


def _gem_artifacts(spec: ExperimentSpec, writer: _ArtifactWriter, dump_fields: bool):
    config: GemConfig = spec.config
    params = spec.params
    stride = params.get("field_stride")
    record = run_gem(config, spec.pulse, store_fields=True, field_stride=stride)
    t = record.times
    writer.csv(
        "input_output.csv",
        "t_us,in_re,in_im,out_re,out_im",
        (t, record.input_series.real, record.input_series.imag,
         record.output_series.real, record.output_series.imag),
    )
    scalars = {}
    in_win = tuple(params.get("input_window", (0.0, config.stark.switch_time)))
    echo_win = tuple(params.get("echo_window", (config.stark.switch_time, config.grid.t_max)))
    sigma = efficiency_numeric(record, in_win, echo_win)
    rep = fidelity(record.input_series, record.output_series, record.grid.dt, sigma,
                   echo_window=echo_win)
    scalars.update(
        sigma=sigma,
        sigma_analytic=efficiency_analytic(config.beta),
        fidelity=rep.fidelity,
        shape=rep.shape,
        tau_us=rep.tau,
        echo_peak_us=record.echo_peak_time(),
        balance_residual=_balance_residual(record),
        beta=config.beta,
    )

    if "spectrum_time" in params:
        t_snap = params["spectrum_time"]
        eta_abs = config.stark.eval(spec.pulse.center)
        scalars["spectrum_corr"] = input_spectrum_correlation(record, t_snap, eta_abs)

    if dump_fields:
        z = record.grid.z_axis
        zhdr = "t_us," + ",".join(f"{v:.9g}" for v in z)
        writer.csv_matrix("e_field_mag.csv", zhdr, record.field_times, np.abs(record.e_field))
        writer.csv_matrix("polarisation_mag.csv", zhdr, record.field_times,
                          np.abs(record.polarisation))

    if spec.kind == "kspace_report":
        ks = to_kspace(record, config.linear_density)
        khdr = "t_us," + ",".join(f"{v:.9g}" for v in ks.k_axis)
        writer.csv_matrix("psi_mag.csv", khdr, ks.times, np.abs(ks.psi))
        writer.csv_matrix("phi_mag.csv", khdr, ks.times, np.abs(ks.phi))
        cen = centroid_series(ks)
        writer.csv("centroid.csv", "t_us,k_centroid,eta",
                   (ks.times, cen, config.stark.eval(ks.times)))
        mid = int(np.argmin(np.abs(ks.times - 0.5 * (in_win[1] + config.stark.switch_time))))
        scalars["phi_residual_mid_storage"] = phi_residual(ks, mid)
    return record, scalars


def _eit_artifacts(spec: ExperimentSpec, writer: _ArtifactWriter, dump_fields: bool):
    config: EitConfig = spec.config
    params = spec.params
    record = run_eit(config, spec.pulse, store_fields=True,
                     field_stride=params.get("field_stride"))
    t = record.times
    writer.csv(
        "input_output.csv",
        "t_us,in_re,in_im,out_re,out_im,omega_c",
        (t, record.input_series.real, record.input_series.imag,
         record.output_series.real, record.output_series.imag,
         record.omega_c_series),
    )
    dt = record.grid.dt
    in_win = tuple(params.get("input_window", (0.0, config.switch_down + 4.0 * config.ramp_tau)))
    echo_win = tuple(params.get("echo_window", (config.switch_up, record.grid.t_max)))
    m_in = (t >= in_win[0]) & (t <= in_win[1])
    m_echo = (t >= echo_win[0]) & (t <= echo_win[1])
    e_in = float(np.trapezoid(np.abs(record.input_series[m_in]) ** 2, dx=dt))
    e_echo = float(np.trapezoid(np.abs(record.output_series[m_echo]) ** 2, dx=dt))
    scalars = {"sigma": e_echo / e_in if e_in > 0 else 0.0}

    hold = (record.field_times > in_win[1] + 2.0) & (record.field_times < config.switch_up - 2.0)
    if np.any(hold):
        profiles = np.abs(record.spin_wave[hold])
        ref = profiles[0]
        drift = np.max(np.linalg.norm(profiles - ref, axis=1)) / np.linalg.norm(ref)
        scalars["spinwave_drift"] = float(drift)
    t_snap = params.get("envelope_time", 0.5 * (config.switch_down + config.switch_up))
    scalars["envelope_corr"] = envelope_correlation(record, t_snap)

    if dump_fields:
        z = record.grid.z_axis
        zhdr = "t_us," + ",".join(f"{v:.9g}" for v in z)
        writer.csv_matrix("e_field_mag.csv", zhdr, record.field_times, np.abs(record.e_field))
        writer.csv_matrix("spin_wave_mag.csv", zhdr, record.field_times,
                          np.abs(record.spin_wave))
        writer.csv_matrix("polariton_mag.csv", zhdr, record.field_times,
                          np.abs(eit_polariton(record)))
    return record, scalars


def _sweep_artifacts(spec: ExperimentSpec, writer: _ArtifactWriter, workers):
    params = spec.params
    interval = tuple(params["interval"])
    betas = params.get("betas", [spec.config.beta])
    modes = params.get("mode_indices")
    if modes is None:
        raise SpecValidationError("params.mode_indices is required for fidelity_sweep")
    rows = mode_fidelity_sweep(
        spec.config, interval, betas, modes,
        delta=params.get("delta", 0.0), workers=workers,
    )
    writer.csv(
        "sweep.csv",
        "beta,mode_n,sigma,fidelity,shape,tau_us,delta",
        (
            np.array([r.beta for r in rows]),
            np.array([float(r.mode_n) for r in rows]),
            np.array([r.sigma for r in rows]),
            np.array([r.fidelity for r in rows]),
            np.array([r.shape for r in rows]),
            np.array([r.tau_us for r in rows]),
            np.array([r.delta for r in rows]),
        ),
    )
    summary = {}
    for beta in betas:
        fs = [r.fidelity for r in rows if r.beta == beta]
        summary[f"{beta:g}"] = {
            "min_fidelity": min(fs),
            "mean_fidelity": sum(fs) / len(fs),
            "delta": next(r.delta for r in rows if r.beta == beta),
        }
    writer.json("summary.json", {"interval": list(interval), "per_beta": summary})
    scalars = {"n_rows": len(rows)}
    for beta, s in summary.items():
        scalars[f"min_F_beta_{beta}"] = s["min_fidelity"]
    return rows, summary, scalars


def _delta_artifacts(spec: ExperimentSpec, writer: _ArtifactWriter):
    params = spec.params
    interval = tuple(params["interval"])
    probe = params["probe_mode"]
    res = find_delta(spec.config, interval, probe,
                     search_halfwidth=params.get("search_halfwidth"))
    payload = {
        "delta": res.delta,
        "fidelity": res.fidelity,
        "fidelity_at_zero": res.fidelity_at_zero,
        "improved": res.improved,
        "probe_mode": probe,
        "interval": list(interval),
    }
    verify = {}
    for n in params.get("verify_modes", []):
        rep = _verify_mode_with_delta(spec.config, interval, int(n), res.delta)
        verify[str(n)] = {"fidelity": rep.fidelity, "sigma": rep.sigma}
    if verify:
        payload["verify_modes"] = verify
    writer.json("delta.json", payload)
    scalars = {"delta": res.delta, "fidelity": res.fidelity,
               "fidelity_at_zero": res.fidelity_at_zero}
    return res, scalars


def _verify_mode_with_delta(config: GemConfig, interval, n: int, delta: float):
    from .metrics import _mode_report

    return _mode_report(
        config, n, interval, delta,
        (config.stark.switch_time, config.grid.t_max),
    )


def _evaluate_checks(spec: ExperimentSpec, scalars: dict, summary: Optional[dict]) -> list:
    out = []

    def add(name, passed, value, expected):
        out.append({"name": name, "passed": bool(passed), "value": value, "expected": expected})

    for name, target in spec.checks.items():
        if name == "echo_peak_us":
            v = scalars.get("echo_peak_us")
            add(name, v is not None and target[0] <= v <= target[1], v, list(target))
        elif name == "sigma_abs_vs_analytic":
            v = abs(scalars["sigma"] - scalars["sigma_analytic"])
            add(name, v < target, v, target)
        elif name == "balance_residual_max":
            v = scalars.get("balance_residual")
            add(name, v is not None and v < target, v, target)
        elif name == "phi_residual_max":
            v = scalars.get("phi_residual_mid_storage")
            add(name, v is not None and v < target, v, target)
        elif name == "spectrum_corr_min":
            v = scalars.get("spectrum_corr")
            add(name, v is not None and v > target, v, target)
        elif name == "envelope_corr_min":
            v = scalars.get("envelope_corr")
            add(name, v is not None and v > target, v, target)
        elif name == "spinwave_drift_max":
            v = scalars.get("spinwave_drift")
            add(name, v is not None and v < target, v, target)
        elif name == "sigma_min":
            add(name, scalars["sigma"] > target, scalars["sigma"], target)
        elif name == "fidelity_min":
            add(name, scalars["fidelity"] > target, scalars["fidelity"], target)
        elif name == "min_fidelity":
            beta_from = spec.checks.get("min_fidelity_beta_from", 0.0)
            worst = None
            for beta_s, s in (summary or {}).items():
                if float(beta_s) >= beta_from:
                    worst = s["min_fidelity"] if worst is None else min(worst, s["min_fidelity"])
            add(name, worst is not None and worst > target, worst, target)
        elif name == "min_fidelity_beta_from":
            continue
    return out


def run_experiment(
    spec: ExperimentSpec,
    out_root,
    *,
    workers: Optional[int] = None,
    dump_fields: bool = False,
) -> ExperimentResult:
    """Run one experiment spec, writing artifacts and a manifest under
    out_root/<output_dir>.  Status is "ok" only if every attached check
    passed; solver failures mark the manifest incomplete and re-raise."""
    out_dir = Path(out_root) / spec.output_dir
    writer = _ArtifactWriter(out_dir)
    summary = None
    try:
        if spec.kind in ("gem_run", "kspace_report"):
            _, scalars = _gem_artifacts(spec, writer, dump_fields)
        elif spec.kind == "eit_run":
            _, scalars = _eit_artifacts(spec, writer, dump_fields)
        elif spec.kind == "fidelity_sweep":
            _, summary, scalars = _sweep_artifacts(spec, writer, workers)
        elif spec.kind == "delta_search":
            _, scalars = _delta_artifacts(spec, writer)
        else:  # pragma: no cover - guarded by load_spec
            raise SpecValidationError(f"unsupported kind {spec.kind}")
    except Exception:
        manifest = {
            "name": spec.name,
            "status": "incomplete",
            "files": writer.files,
            "scalars": {},
            "checks": [],
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        raise

    checks = _evaluate_checks(spec, scalars, summary)
    status = "ok" if all(c["passed"] for c in checks) else "failed"
    manifest = {
        "name": spec.name,
        "status": status,
        "files": writer.files,
        "scalars": scalars,
        "checks": checks,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(
        name=spec.name,
        status=status,
        manifest_path=manifest_path,
        scalars=scalars,
        checks=checks,
        files=writer.files,
    )
