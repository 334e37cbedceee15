"""Range-Doppler image formation with physical axis mapping.

Each range row of the phase-corrected profiles is zero-padded and transformed
over slow time; magnitudes are kept and the Doppler axis is circularly shifted
so zero Doppler sits at the center column. No amplitude window is applied, so
sidelobes are rectangular-window sidelobes. The cross-range axis maps Doppler
through the apparent rotation rate in the image plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .errors import ConfigurationError, DataError, GeometryError
from .target import KinematicSnapshot
from .tmc import RangeProfileSet

_ROW_BLOCK = 4096  # bounds the complex intermediate while transforming rows


@dataclass(frozen=True)
class RangeDopplerImage:
    """Magnitude image with range rows and zero-centered Doppler columns."""

    p: np.ndarray                        # (k_p, m_p) nonnegative magnitudes
    range_axis: np.ndarray               # (k_p,) m
    doppler_axis: np.ndarray             # (m_p,) Hz, zero at center column
    crossrange_axis: np.ndarray | None = None  # (m_p,) m, set when motion known
    meta: dict = field(default_factory=dict)


def form_image(profiles: RangeProfileSet, m_p: int, t_sri: float) -> RangeDopplerImage:
    """Doppler-process phase-corrected profiles into a magnitude image.

    Per range row, the m_p-point transform of the slow-time samples
    (zero-padded) is taken in magnitude; columns are then circularly shifted so
    zero Doppler is the center column, with bin spacing 1 / (m_p * t_sri).
    """
    if not profiles.phase_corrected:
        raise ConfigurationError("image formation expects phase-corrected profiles")
    k_p, m_s = profiles.s.shape
    if m_p < 10 * m_s:
        raise ConfigurationError(f"m_p={m_p} below the 10x slow-time padding floor")
    out = np.empty((k_p, m_p), dtype=float)
    for start in range(0, k_p, _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, k_p)
        out[start:stop] = np.abs(numerics.fft(profiles.s[start:stop], m_p, axis=1))
    p = np.fft.fftshift(out, axes=1)
    doppler = (np.arange(m_p) - m_p // 2) / (m_p * t_sri)
    return RangeDopplerImage(p=p, range_axis=profiles.axis.copy(), doppler_axis=doppler)


def crossrange_axis(
    image: RangeDopplerImage, snapshot: KinematicSnapshot, wavelength: float
) -> np.ndarray:
    """Cross-range coordinate per Doppler column: u = lambda f_D / (2 w0 cos(phi)),
    with the centroid Doppler at zero after phase correction."""
    if snapshot.omega0 <= 0.0:
        raise GeometryError("cross-range axis undefined for a static target")
    scale = wavelength / (2.0 * snapshot.omega0 * math.cos(snapshot.phi))
    return scale * image.doppler_axis


def attach_crossrange(
    image: RangeDopplerImage, snapshot: KinematicSnapshot, wavelength: float
) -> RangeDopplerImage:
    return replace(image, crossrange_axis=crossrange_axis(image, snapshot, wavelength))


def _window_indices(image: RangeDopplerImage, rows, cols):
    rows = np.arange(image.p.shape[0]) if rows is None else np.asarray(rows)
    cols = np.arange(image.p.shape[1]) if cols is None else np.asarray(cols)
    return rows, cols


def export_csv(image: RangeDopplerImage, path: str, rows=None, cols=None) -> None:
    """CSV export: first row carries the column axis (cross-range if attached,
    Doppler otherwise), first column the range axis."""
    rows, cols = _window_indices(image, rows, cols)
    col_axis = (
        image.crossrange_axis if image.crossrange_axis is not None else image.doppler_axis
    )
    label = "range_m\\crossrange_m" if image.crossrange_axis is not None else "range_m\\doppler_hz"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(label + "," + ",".join(f"{col_axis[c]:.10g}" for c in cols) + "\n")
        for r in rows:
            values = ",".join(f"{v:.10g}" for v in image.p[r, cols])
            fh.write(f"{image.range_axis[r]:.10g},{values}\n")


def export_pgm(image: RangeDopplerImage, path: str, rows=None, cols=None) -> None:
    """16-bit binary portable graymap: row = range bin, column = cross-range
    bin, linear amplitude mapped to full scale (big-endian per P5)."""
    rows, cols = _window_indices(image, rows, cols)
    window = image.p[np.ix_(rows, cols)]
    peak = window.max()
    if peak <= 0:
        raise DataError("cannot export an all-zero image window")
    scaled = np.round(window / peak * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{scaled.shape[1]} {scaled.shape[0]}\n65535\n".encode("ascii"))
        fh.write(scaled.tobytes(order="C"))
