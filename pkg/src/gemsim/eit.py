"""Minimal three-level EIT storage solver for the temporal-to-spatial
mapping contrast with the gradient-echo scheme.

Linearized weak-probe equations in the co-moving frame,

    dE/dz = i*(g*N/L) * P
    dP/dt = -gamma_e*P + i*g*E + i*Omega_c(t)*S
    dS/dt = i*Omega_c(t)*P,

integrated in control-normalized units: g and omega_c0 are dimensionless
multiples of the excited-state decay, gamma_e (in 1/us) maps normalized
time onto the microsecond axis, and z is normalized to the medium length.
The control schedule is a tanh switch-off/switch-on pair at the
configured times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigError, Grid
from .solver import NonFiniteFieldError, cumulative_simpson

__all__ = ["EitConfig", "EitRecord", "run_eit", "eit_polariton", "omega_c_schedule"]


@dataclass(frozen=True)
class EitConfig:
    """Lambda-scheme storage medium.

    n_atoms is the total atom number; g and omega_c0 are in units of the
    excited decay; gamma_e (1/us) is that decay and fixes the physical
    time scale; switch_down/switch_up/ramp_tau are in us.
    """

    n_atoms: float
    g: float
    omega_c0: float
    switch_down: float
    switch_up: float
    ramp_tau: float
    grid: Grid
    gamma_e: float = 1.0

    def __post_init__(self):
        if not self.n_atoms > 0:
            raise ConfigError("n_atoms must be positive")
        if self.g < 0 or self.omega_c0 < 0 or self.ramp_tau < 0 or self.gamma_e < 0:
            raise ConfigError("rates must be non-negative")
        if not self.switch_down < self.switch_up:
            raise ConfigError("switch_down must precede switch_up")

    @property
    def group_delay(self) -> float:
        """Full-medium group delay g^2*N/(omega_c0^2*gamma_e) in us."""
        return self.g**2 * self.n_atoms / (self.omega_c0**2 * self.gamma_e)


def omega_c_schedule(config: EitConfig, t):
    """Normalized control Rabi frequency at time t (us)."""
    t = np.asarray(t, dtype=float)
    if config.ramp_tau == 0.0:
        down = np.where(t < config.switch_down, 1.0, 0.0)
        up = np.where(t >= config.switch_up, 1.0, 0.0)
    else:
        down = 0.5 * (1.0 - np.tanh((t - config.switch_down) / config.ramp_tau))
        up = 0.5 * (1.0 + np.tanh((t - config.switch_up) / config.ramp_tau))
    return config.omega_c0 * (down + up)


@dataclass(frozen=True)
class EitRecord:
    """Histories of a storage run (same snapshot layout as FieldRecord)."""

    grid: Grid
    times: np.ndarray
    input_series: np.ndarray
    output_series: np.ndarray
    omega_c_series: np.ndarray
    field_times: np.ndarray
    e_field: np.ndarray
    polarisation: np.ndarray
    spin_wave: np.ndarray
    config: EitConfig


def _pair_propagator(omega: float, gamma_norm: float, span: float):
    """exp(span*M) for M = [[-gamma, i*w], [i*w, 0]] (normalized units)."""
    half = 0.5 * gamma_norm
    mu = complex(math.sqrt(abs(half**2 - omega**2)))
    if half**2 < omega**2:
        mu = 1j * math.sqrt(omega**2 - half**2)
    scale = np.exp(-half * span)
    if abs(mu) < 1e-300:
        ch, sh_over = 1.0, span
    else:
        ch = np.cosh(mu * span)
        sh_over = np.sinh(mu * span) / mu
    # expm(A*span) with A = [[-half, i w],[i w, half]]
    a11 = scale * (ch - half * sh_over)
    a12 = scale * (1j * omega * sh_over)
    a21 = a12
    a22 = scale * (ch + half * sh_over)
    return a11, a12, a21, a22


def run_eit(
    config: EitConfig,
    pulse,
    *,
    store_fields: bool = True,
    field_stride: Optional[int] = None,
    refine: int = 1,
) -> EitRecord:
    """Integrate the probe `pulse` (a PulseSpec) through the storage cycle."""
    grid = config.grid
    nz, nt = grid.nz, grid.nt
    dz_norm = 1.0 / (nz - 1)
    dt = grid.dt
    dtau = dt * config.gamma_e
    t = grid.t_axis

    kappa = config.g * config.n_atoms  # coupling per normalized length
    ein = pulse.evaluate(t)
    ein_mid = pulse.evaluate(t[:-1] + 0.5 * dt)
    omega_mid = omega_c_schedule(config, t[:-1] + 0.5 * dt)
    omega_series = omega_c_schedule(config, t)

    if field_stride is None:
        field_stride = max(1, nt // 512) if store_fields else max(1, nt // 16)
    keep = np.arange(0, nt, field_stride)
    if keep[-1] != nt - 1:
        keep = np.append(keep, nt - 1)
    keep_set = {int(i): j for j, i in enumerate(keep)}
    e_rows = np.empty((len(keep), nz), dtype=complex)
    p_rows = np.empty((len(keep), nz), dtype=complex)
    s_rows = np.empty((len(keep), nz), dtype=complex)

    P = np.zeros(nz, dtype=complex)
    S = np.zeros(nz, dtype=complex)
    E = np.full(nz, ein[0], dtype=complex)
    out = np.empty(nt, dtype=complex)
    out[0] = E[-1]
    if 0 in keep_set:
        e_rows[0], p_rows[0], s_rows[0] = E, P, S

    ig = 1j * config.g
    ik = 1j * kappa

    for n in range(nt - 1):
        w = float(omega_mid[n])
        h11, h12, h21, h22 = _pair_propagator(w, 1.0, 0.5 * dtau)
        f11, f12, f21, f22 = _pair_propagator(w, 1.0, dtau)
        # source weights: integral of the (P,P) / (S,P) propagator entries
        # approximated at the half/full midpoint (source varies slowly)
        q11, _, q21, _ = _pair_propagator(w, 1.0, 0.25 * dtau)
        r11, _, r21, _ = _pair_propagator(w, 1.0, 0.5 * dtau)

        # predictor at midpoint
        Pm = h11 * P + h12 * S + (0.5 * dtau) * q11 * (ig * E)
        e_mid = ein_mid[n] + ik * cumulative_simpson(Pm, dz_norm)
        for _ in range(refine):
            src = ig * 0.5 * (E + e_mid)
            Pm = h11 * P + h12 * S + (0.5 * dtau) * q11 * src
            e_mid = ein_mid[n] + ik * cumulative_simpson(Pm, dz_norm)
        src = ig * e_mid
        P_new = f11 * P + f12 * S + dtau * r11 * src
        S_new = f21 * P + f22 * S + dtau * r21 * src
        P, S = P_new, S_new
        E = ein[n + 1] + ik * cumulative_simpson(P, dz_norm)
        out[n + 1] = E[-1]
        if not (np.isfinite(out[n + 1]) and np.isfinite(S[0])):
            raise NonFiniteFieldError(n + 1, t[n + 1])
        j = keep_set.get(n + 1)
        if j is not None:
            e_rows[j], p_rows[j], s_rows[j] = E, P, S

    for arr in (out, e_rows, p_rows, s_rows):
        arr.setflags(write=False)
    return EitRecord(
        grid=grid,
        times=t,
        input_series=ein,
        output_series=out,
        omega_c_series=omega_series,
        field_times=t[keep],
        e_field=e_rows,
        polarisation=p_rows,
        spin_wave=s_rows,
        config=config,
    )


def eit_polariton(record: EitRecord, omega_c_series: Optional[np.ndarray] = None) -> np.ndarray:
    """Dark-state mixture cos(th)*E - sin(th)*sqrt(N)*S at the stored times,
    with tan(th)^2 = g^2*N/omega_c^2."""
    cfg = record.config
    if omega_c_series is None:
        omega_c_series = omega_c_schedule(cfg, record.field_times)
    if omega_c_series.shape[0] != record.field_times.shape[0]:
        raise ValueError("omega_c series must match the stored field times")
    gn = cfg.g * math.sqrt(cfg.n_atoms)
    theta = np.arctan2(gn, omega_c_series)
    cos_t = np.cos(theta)[:, None]
    sin_t = np.sin(theta)[:, None]
    return cos_t * record.e_field - sin_t * math.sqrt(cfg.n_atoms) * record.spin_wave
