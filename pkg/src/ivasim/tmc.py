"""Translational motion compensation.

Range alignment estimates per-symbol integer range shifts by circularly
cross-correlating envelope range profiles against the mid-CPI reference
profile, regularizes them with an unwrap + quadratic least-squares fit, and
compensates the fitted delays with a phase ramp across subcarriers. Phase
adjustment then removes the common phase error estimated over the
minimum-variance reference range cells.

The alignment correlation runs at the native sensing-band size (generally not
a power of two); only the padded range/Doppler transforms go through the
power-of-two primitives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import ConfigurationError, DataError
from .numerics import Quadratic
from .scenario import C_LIGHT


@dataclass(frozen=True)
class AlignmentResult:
    """Outcome of range alignment over one CPI.

    The compensated delays are re-anchored so the reference symbol's delay is
    exactly zero: raw shifts are measured relative to the reference profile
    (whose own shift is zero by construction), so the smoothed drift must pass
    through zero there too or a fit offset would displace the whole aligned
    range axis. delays = (regularized - regularized[ref]) * delta_tau.
    """

    gamma: np.ndarray              # (k_s, m_s) delay-compensated grid
    raw_shifts: np.ndarray         # (m_s,) integer shifts, range cells
    regularized_shifts: np.ndarray  # (m_s,) fitted shifts, range cells
    fitted: Quadratic
    delays: np.ndarray             # (m_s,) compensated delays, s
    residual_rms: float            # RMS of (unwrapped - fitted) shifts, cells


@dataclass(frozen=True)
class RangeProfileSet:
    """Aligned range profiles: rows are range bins, columns slow time."""

    s: np.ndarray                  # (k_p, m_s) complex
    axis: np.ndarray               # (k_p,) range per bin, m
    phase_corrected: bool = False
    cpe: np.ndarray | None = None  # (m_s,) estimated common phase error, rad


def _signed_shift(index: np.ndarray, k_s: int) -> np.ndarray:
    half = k_s // 2
    return (index + half) % k_s - half


def estimate_shifts(gs: np.ndarray) -> np.ndarray:
    """Integer range shift of every symbol relative to the mid-CPI reference.

    Pipeline: column-wise FFT across subcarriers (time-reversed range
    profiles), element-wise modulus, column-wise IFFT, conjugate-reference
    multiply, IFFT across the row dimension; the per-column correlation argmax
    maps to a signed shift in [-k_s/2, k_s/2 - 1]. Ties pick the
    smallest-magnitude shift.
    """
    gs = np.asarray(gs)
    if gs.ndim != 2 or gs.shape[1] < 2:
        raise DataError("sensing matrix needs at least two slow-time columns")
    k_s, m_s = gs.shape
    if np.any(~np.any(gs != 0, axis=0)):
        raise DataError("all-zero slow-time column: correlation undefined")

    envelopes = np.abs(np.fft.fft(gs, axis=0))
    spectra = np.fft.ifft(envelopes, axis=0)
    reference = spectra[:, m_s // 2 - 1]
    correlation = np.abs(np.fft.ifft(spectra * np.conj(reference)[:, None], axis=0))

    peak = np.argmax(correlation, axis=0)
    shifts = _signed_shift(peak, k_s)
    col_max = correlation[peak, np.arange(m_s)]
    tie_cols = np.flatnonzero((correlation == col_max[None, :]).sum(axis=0) > 1)
    for col in tie_cols:
        cands = _signed_shift(np.flatnonzero(correlation[:, col] == col_max[col]), k_s)
        shifts[col] = min(cands, key=lambda q: (abs(q), q))
    return shifts.astype(int)


def regularize_shifts(raw_shifts: np.ndarray, k_s: int) -> tuple[np.ndarray, Quadratic]:
    """Unwrap the shifts through phase space and fit a quadratic drift.

    Shifts map to phases 2*pi*q/k_s, get unwrapped to remove +-k_s/2 aliasing,
    map back to cells, and a quadratic least-squares fit over the 1-based
    symbol index returns the regularized drift evaluated at every symbol.
    """
    raw_shifts = np.asarray(raw_shifts, dtype=float)
    if raw_shifts.size < 3:
        raise DataError("need at least 3 symbols to regularize shifts")
    phase = 2.0 * np.pi * raw_shifts / k_s
    unwrapped_cells = k_s / (2.0 * np.pi) * numerics.unwrap_phase(phase)
    fitted = numerics.quadratic_ls_fit(unwrapped_cells)
    j = np.arange(1, raw_shifts.size + 1, dtype=float)
    regularized = fitted.evaluate(j)
    return regularized, fitted


def compensate_delays(gs: np.ndarray, delays: np.ndarray, delta_f: float) -> np.ndarray:
    """Apply the per-symbol delay compensation phase ramp across subcarriers:
    gamma[k, m] = gs[k, m] * exp(i 2 pi k delta_f tau[m])."""
    gs = np.asarray(gs)
    delays = np.asarray(delays, dtype=float)
    if not np.all(np.isfinite(delays)):
        raise DataError("non-finite delays")
    if delays.shape != (gs.shape[1],):
        raise ConfigurationError("one delay per slow-time column required")
    k = np.arange(gs.shape[0])
    return gs * np.exp(1j * 2.0 * np.pi * delta_f * np.outer(k, delays))


def align(gs: np.ndarray, delta_f: float) -> AlignmentResult:
    """Full range alignment: estimate, regularize, and compensate."""
    k_s = gs.shape[0]
    raw = estimate_shifts(gs)
    regularized, fitted = regularize_shifts(raw, k_s)
    delta_tau = 1.0 / (k_s * delta_f)
    delays = (regularized - regularized[gs.shape[1] // 2 - 1]) * delta_tau
    gamma = compensate_delays(gs, delays, delta_f)
    phase = 2.0 * np.pi * raw / k_s
    unwrapped_cells = k_s / (2.0 * np.pi) * numerics.unwrap_phase(phase)
    residual = unwrapped_cells - regularized
    return AlignmentResult(
        gamma=gamma,
        raw_shifts=raw,
        regularized_shifts=regularized,
        fitted=fitted,
        delays=delays,
        residual_rms=float(np.sqrt(np.mean(residual**2))),
    )


def range_profiles(gamma: np.ndarray, k_p: int, delta_f: float) -> RangeProfileSet:
    """Zero-padded range profiles with an increasing range axis.

    Column-wise k_p-point FFT across subcarriers; the result is time-reversed
    and circularly offset, so a one-bin rotation plus a left-right flip places
    zero delay at bin 0 with range increasing along the rows.
    """
    gamma = np.asarray(gamma)
    if k_p < gamma.shape[0]:
        raise ConfigurationError(
            f"k_p={k_p} smaller than the sensing band {gamma.shape[0]}"
        )
    raw = numerics.fft(gamma, k_p, axis=0)
    profiles = np.roll(raw[::-1], 1, axis=0)
    range_bin = C_LIGHT / (2.0 * k_p * delta_f)
    return RangeProfileSet(
        s=profiles,
        axis=np.arange(k_p) * range_bin,
        phase_corrected=False,
        cpe=None,
    )


def write_debug_csv(
    path: str, result: AlignmentResult, cpe: np.ndarray | None = None
) -> None:
    """Per-symbol alignment diagnostics: raw shift, unwrapped shift, fitted
    shift, compensated delay, and (when given) the estimated common phase."""
    k_s = result.gamma.shape[0]
    phase = 2.0 * np.pi * result.raw_shifts / k_s
    unwrapped = k_s / (2.0 * np.pi) * numerics.unwrap_phase(phase)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("m_s,q_raw,q_unwrapped,q_fitted,tau_s,cpe_rad\n")
        for m in range(result.raw_shifts.size):
            cpe_val = f"{cpe[m]:.10g}" if cpe is not None else ""
            fh.write(
                f"{m},{result.raw_shifts[m]},{unwrapped[m]:.10g},"
                f"{result.regularized_shifts[m]:.10g},{result.delays[m]:.10g},"
                f"{cpe_val}\n"
            )


def select_reference_cells(
    profiles: RangeProfileSet, n_ref: int, gate: float = 0.1
) -> np.ndarray:
    """Indices of the n_ref lowest normalized-variance range cells.

    Cells must pass an energy gate (mean envelope above `gate` of the peak mean
    envelope) so empty noise-only cells, whose absolute variance is small, are
    never selected. Returned in ascending variance order.
    """
    if n_ref < 1:
        raise ConfigurationError(f"n_ref must be >= 1, got {n_ref}")
    env = np.abs(profiles.s)
    mean_env = env.mean(axis=1)
    eligible = np.flatnonzero(mean_env > gate * mean_env.max())
    if eligible.size < n_ref:
        raise DataError(
            f"only {eligible.size} cells pass the energy gate, need {n_ref}"
        )
    norm_var = env[eligible].var(axis=1) / mean_env[eligible] ** 2
    order = np.lexsort((eligible, norm_var))
    return eligible[order[:n_ref]]


def estimate_cpe(profiles: RangeProfileSet, cells: np.ndarray) -> np.ndarray:
    """Common phase error per symbol, averaged over the reference cells.

    Each cell's phase history is referenced to the first selected cell,
    unwrapped along slow time, averaged, and the (unwrapped) first-cell history
    is added back.
    """
    cells = np.asarray(cells, dtype=int)
    if cells.size == 0:
        raise ConfigurationError("need at least one reference cell")
    selected = profiles.s[cells, :]
    if np.any(np.abs(selected) == 0):
        raise DataError("zero-magnitude sample in a reference cell: phase undefined")
    phases = np.angle(selected)
    ref = phases[0]
    diffs = numerics.unwrap_phase(phases - ref[None, :], axis=1)
    return diffs.mean(axis=0) + numerics.unwrap_phase(ref)


def apply_phase_correction(profiles: RangeProfileSet, cpe: np.ndarray) -> RangeProfileSet:
    """Element-wise phase correction s[n, m] * exp(-i cpe[m]) for all cells."""
    cpe = np.asarray(cpe, dtype=float)
    if cpe.shape != (profiles.s.shape[1],):
        raise ConfigurationError("one phase-correction value per symbol required")
    corrected = profiles.s * np.exp(-1j * cpe)[None, :]
    return RangeProfileSet(
        s=corrected, axis=profiles.axis, phase_corrected=True, cpe=cpe
    )
