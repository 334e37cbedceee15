"""Waveform/system configuration and every quantity derived from it.

The default scenario is a 5G NR upper mid-band numerology: 6.7 GHz carrier,
30 kHz subcarrier spacing, 13200 active subcarriers (~400 MHz), 10 ms frames of
280 symbols, sensing symbols every 1 ms. A plain-text ``key = value`` file can
override any default; unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .numerics import next_pow2

C_LIGHT = 299792458.0  # m/s
K_BOLTZMANN = 1.38e-23  # J/K


@dataclass(frozen=True)
class ScenarioConfig:
    """System configuration. All fields carry SI units unless suffixed."""

    f_c: float = 6.7e9            # carrier frequency, Hz
    delta_f: float = 30e3         # subcarrier spacing, Hz
    k: int = 13200                # active subcarriers per frame
    m: int = 280                  # OFDM symbols per frame
    t_g: float = 35.7e-6 - 1.0 / 30e3   # cyclic prefix, s (so T_s = 35.7 us)
    t_f: float = 10e-3            # frame duration, s
    rho_f: float = 1.0            # sensing subcarrier fraction, (0, 1]
    t_sri: float = 1e-3           # sensing repetition interval, s
    m_s: int = 220                # sensing symbols per CPI
    p_t_dbm: float = 30.0         # total transmit power, dBm
    noise_figure_db: float = 5.0
    t0: float = 290.0             # reference temperature, K
    n_t: int = 10                 # transmit array elements
    n_r: int = 10                 # receive array elements
    beamwidth_t_deg: float = 30.0
    beamwidth_r_deg: float = 30.0
    theta_s_deg: float = 0.0      # sensing steering azimuth, deg
    g_t_dbi: float = 0.0          # single-element gains; array gain is carried
    g_r_dbi: float = 0.0          # by the beamforming weights
    epsilon: float = 0.3          # centroid detection threshold fraction
    n_ref: int = 3                # reference cells for phase adjustment
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.rho_f <= 1.0):
            raise ConfigurationError(f"rho_f must be in (0, 1], got {self.rho_f}")
        if self.k * self.delta_f <= 0:
            raise ConfigurationError("k * delta_f must be positive")
        if self.m_s < 4 or self.m_s % 2 != 0:
            raise ConfigurationError(f"m_s must be even and >= 4, got {self.m_s}")
        t_s = 1.0 / self.delta_f + self.t_g
        if self.t_sri < t_s:
            raise ConfigurationError(
                f"t_sri={self.t_sri} shorter than symbol duration {t_s:.3e}"
            )
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigurationError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.n_ref < 1:
            raise ConfigurationError(f"n_ref must be >= 1, got {self.n_ref}")
        if self.t_g < 0:
            raise ConfigurationError(f"t_g must be nonnegative, got {self.t_g}")


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from a :class:`ScenarioConfig`."""

    wavelength: float    # m
    t_s: float           # total OFDM symbol duration incl. CP, s
    k_s: int             # sensing subcarriers
    b_s: float           # sensing bandwidth, Hz
    n_s: int             # symbols per SRI
    rho_t: float         # frame-time sensing fraction
    t_cpi: float         # coherent processing interval, s
    delta_r: float       # range resolution, m
    delta_tau: float     # delay resolution, s
    delta_fd: float      # Doppler resolution, Hz
    k_p: int             # padded range-FFT size
    m_p: int             # padded Doppler-FFT size
    p_avg: float         # per-subcarrier transmit power, W
    sigma2: float        # noise variance per resource element, W
    range_bin_m: float   # padded range-bin spacing, m


def derive(config: ScenarioConfig) -> DerivedParams:
    """Compute all derived quantities for a validated configuration."""
    t_s = 1.0 / config.delta_f + config.t_g
    n_s = round(config.t_sri / t_s)
    if n_s < 1:
        raise ConfigurationError(
            f"t_sri={config.t_sri} admits no whole symbol (n_s={n_s})"
        )
    k_s = round(config.rho_f * config.k)
    if k_s < 8:
        raise ConfigurationError(f"degenerate sensing band: k_s={k_s} < 8")
    b_s = k_s * config.delta_f
    k_p = next_pow2(2 * k_s)
    m_p = next_pow2(10 * config.m_s)
    p_t = 1e-3 * 10.0 ** (config.p_t_dbm / 10.0)
    noise_f = 10.0 ** (config.noise_figure_db / 10.0)
    return DerivedParams(
        wavelength=C_LIGHT / config.f_c,
        t_s=t_s,
        k_s=k_s,
        b_s=b_s,
        n_s=n_s,
        rho_t=t_s * math.ceil(config.m / n_s) / config.t_f,
        t_cpi=config.m_s * config.t_sri,
        delta_r=C_LIGHT / (2.0 * b_s),
        delta_tau=1.0 / b_s,
        delta_fd=1.0 / (config.m_s * config.t_sri),
        k_p=k_p,
        m_p=m_p,
        p_avg=p_t / config.k,
        sigma2=K_BOLTZMANN * config.t0 * noise_f * config.delta_f,
        range_bin_m=C_LIGHT / (2.0 * k_p * config.delta_f),
    )


# --------------------------------------------------------------------------
# Config file handling.
#
# One "key = value" pair per line, '#' starts a comment. The file may also
# carry trajectory/target/simulation keys consumed by the harness; they are
# all validated here so a typo anywhere in the file is caught.
# --------------------------------------------------------------------------

_SCENARIO_FLOAT_KEYS = {
    "f_c", "delta_f", "t_g", "t_f", "rho_f", "t_sri", "p_t_dbm",
    "noise_figure_db", "t0", "beamwidth_t_deg", "beamwidth_r_deg",
    "theta_s_deg", "g_t_dbi", "g_r_dbi", "epsilon",
}
_SCENARIO_INT_KEYS = {"k", "m", "m_s", "n_t", "n_r", "n_ref", "seed"}

# Extra keys owned by the harness (trajectory, target, simulation knobs).
HARNESS_FLOAT_KEYS = {
    "speed", "heading_deg", "midpoint_x", "midpoint_y", "z_c",
    "bs_x", "bs_y", "bs_z", "cell_gate",
    "crop_half_range", "crop_half_crossrange",
}
HARNESS_STR_KEYS = {"beam", "noise", "scatterers", "image_mode"}

KNOWN_KEYS = (
    _SCENARIO_FLOAT_KEYS | _SCENARIO_INT_KEYS | HARNESS_FLOAT_KEYS | HARNESS_STR_KEYS
)


def parse_config_file(path: str) -> dict:
    """Parse a key=value config file into a dict of raw string values."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected 'key = value', got {stripped!r}"
                )
            key, value = (part.strip() for part in stripped.split("=", 1))
            key = key.lower()
            if key not in KNOWN_KEYS:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            if key in raw:
                raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value
    return raw


def _coerce(key: str, value: str, lineno_hint: str):
    try:
        if key in _SCENARIO_INT_KEYS:
            return int(value)
        return float(value)
    except ValueError as exc:
        raise ConfigurationError(f"{lineno_hint}: bad value for {key!r}: {value!r}") from exc


def scenario_from_raw(raw: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from parsed raw values, filling defaults.

    m_s and n_ref default by heading when not given (220/3 for 270 deg,
    200/5 for 300 deg, following the reference setup); other headings use
    200/5. theta_s_deg defaults to the azimuth of the trajectory midpoint.
    """
    kwargs = {}
    for key in _SCENARIO_FLOAT_KEYS | _SCENARIO_INT_KEYS:
        if key in raw:
            kwargs[key] = _coerce(key, raw[key], f"config key {key}")

    heading = float(raw.get("heading_deg", 270.0))
    near_270 = abs((heading - 270.0 + 180.0) % 360.0 - 180.0) < 1.0
    if "m_s" not in kwargs:
        kwargs["m_s"] = 220 if near_270 else 200
    if "n_ref" not in kwargs:
        kwargs["n_ref"] = 3 if near_270 else 5
    if "theta_s_deg" not in kwargs:
        mx = float(raw.get("midpoint_x", 60.0)) - float(raw.get("bs_x", 0.0))
        my = float(raw.get("midpoint_y", 0.0)) - float(raw.get("bs_y", 0.0))
        kwargs["theta_s_deg"] = math.degrees(math.atan2(my, mx))

    try:
        return ScenarioConfig(**kwargs)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path: str) -> ScenarioConfig:
    """Load and validate the scenario portion of a config file."""
    return scenario_from_raw(parse_config_file(path))
