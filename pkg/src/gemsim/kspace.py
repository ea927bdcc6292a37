"""Spatial-Fourier diagnostics: normal modes, centroid transport, residuals.

The field/polarisation rows of a FieldRecord are transformed to k-space
where the lossless combination Psi(k,t) = k*E(k,t) + N*alpha(k,t) is
transported at dk/dt = -eta(t), while the orthogonal combination
Phi(k,t) = k*E(k,t) - N*alpha(k,t) stays unexcited wherever the interior
field/polarisation relation holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal.windows import tukey

from .solver import FieldRecord

__all__ = [
    "KSpaceRecord",
    "to_kspace",
    "k_centroid",
    "phi_residual",
    "polariton_norm",
    "centroid_series",
]

_FLOOR_FRACTION = 1e-12  # minimum |Psi|^2 weight relative to the peak row
_TAPER_FRACTION = 0.10  # Tukey alpha: 5% cosine ramp on each z edge


@dataclass(frozen=True)
class KSpaceRecord:
    """k-space view of a run at the record's stored field times.

    psi/phi rows correspond to times; k_axis is the centered discrete
    Fourier dual of the z grid and norm_factor = sqrt(k^2 + N^2) is the
    polariton normalization.  Transforms are scaled so that
    sum |f~|^2 dk equals the plain rectangle sum of |f|^2 dz.
    """

    times: np.ndarray
    k_axis: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    norm_factor: np.ndarray
    linear_density: float
    dk: float
    _e_rows: np.ndarray
    _alpha_rows: np.ndarray
    _dz: float

    @property
    def nk(self) -> int:
        return self.k_axis.size


def _transform(rows: np.ndarray, dz: float) -> np.ndarray:
    scale = dz / np.sqrt(2.0 * np.pi)
    return np.fft.fftshift(np.fft.fft(rows, axis=-1), axes=-1) * scale


def to_kspace(record: FieldRecord, linear_density: float) -> KSpaceRecord:
    """Transform the stored field rows of a run to k-space normal modes."""
    grid = record.grid
    z = grid.z_axis
    if not np.allclose(np.diff(z), grid.dz, rtol=1e-12, atol=0.0):
        raise ValueError("z grid must be uniform")
    dz = grid.dz
    nz = grid.nz
    k = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(nz, d=dz))
    e_t = _transform(record.e_field, dz)
    a_t = _transform(record.polarisation, dz)
    psi = k * e_t + linear_density * a_t
    phi = k * e_t - linear_density * a_t
    for arr in (psi, phi, k):
        arr.setflags(write=False)
    return KSpaceRecord(
        times=record.field_times,
        k_axis=k,
        psi=psi,
        phi=phi,
        norm_factor=np.sqrt(k**2 + linear_density**2),
        linear_density=linear_density,
        dk=2.0 * np.pi / (nz * dz),
        _e_rows=record.e_field,
        _alpha_rows=record.polarisation,
        _dz=dz,
    )


def _check_floor(ks: KSpaceRecord, t_index: int, allow_dark: bool = False):
    w = np.abs(ks.psi[t_index]) ** 2
    peak = float(np.max(np.sum(np.abs(ks.psi) ** 2, axis=-1)))
    if peak == 0.0 and allow_dark:
        return None
    if float(np.sum(w)) <= _FLOOR_FRACTION * peak or peak == 0.0:
        raise ValueError(
            f"|Psi|^2 at t index {t_index} is below {_FLOOR_FRACTION} of the peak row"
        )
    return w


def k_centroid(ks: KSpaceRecord, t_index: int) -> float:
    """Weighted centroid sum(k |Psi|^2) / sum(|Psi|^2), k = 0 bin excluded."""
    w = _check_floor(ks, t_index)
    sel = ks.k_axis != 0.0
    return float(np.sum(ks.k_axis[sel] * w[sel]) / np.sum(w[sel]))


def centroid_series(ks: KSpaceRecord) -> np.ndarray:
    """k_centroid at every stored time (rows below the floor give nan)."""
    out = np.empty(ks.times.size)
    for i in range(ks.times.size):
        try:
            out[i] = k_centroid(ks, i)
        except ValueError:
            out[i] = np.nan
    return out


def phi_residual(ks: KSpaceRecord, t_index: int) -> float:
    """||Phi|| / ||Psi|| at one stored time, boundary-apodized, k=0 excluded.

    The input/output field at the medium faces breaks periodicity and
    pollutes the raw transforms, so both rows are multiplied by a cosine
    taper (5% of the span on each edge) before transforming.
    """
    _check_floor(ks, t_index)
    taper = tukey(ks.nk, _TAPER_FRACTION)
    e_t = _transform(ks._e_rows[t_index] * taper, ks._dz)
    a_t = _transform(ks._alpha_rows[t_index] * taper, ks._dz)
    k = ks.k_axis
    sel = k != 0.0
    psi = k[sel] * e_t[sel] + ks.linear_density * a_t[sel]
    phi = k[sel] * e_t[sel] - ks.linear_density * a_t[sel]
    denom = float(np.linalg.norm(psi))
    if denom == 0.0:
        raise ValueError("apodized Psi vanishes at this time index")
    return float(np.linalg.norm(phi)) / denom


def polariton_norm(ks: KSpaceRecord, t_index: int) -> float:
    """sum_k |Psi/sqrt(k^2+N^2)|^2 dk: the polariton occupation.

    An invariant of the motion while the slope is frozen (eta = 0), which
    is when the normalized mode is a meaningful excitation number; under a
    nonzero slope the combination is transported but not conserved.
    """
    if _check_floor(ks, t_index, allow_dark=True) is None:
        return 0.0
    q = np.abs(ks.psi[t_index] / ks.norm_factor) ** 2
    return float(np.sum(q) * ks.dk)
