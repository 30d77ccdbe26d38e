"""Wavelength-dependent parameters of a step-index single-mode fiber.

Wavelengths are in nm and frequencies in THz at the public surface. Derived
quantities use the fiber unit system of :mod:`coexist.units` (1/km, W, ps^2/km).

The mode is approximated by a Gaussian whose width follows Marcuse's fit, which
is accurate to a fraction of a percent over the single-mode range and is all
the ``(lambda * A_eff)^-1`` scaling laws need.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import c, h, k as k_B

from .errors import DomainError, GeometryError
from .units import db_per_km_to_per_km, thz_to_nm

SELLMEIER_RANGE_NM = (1000.0, 1800.0)
ATTENUATION_RANGE_NM = (1260.0, 1675.0)
BETA2_REL_STEP = 1e-4
MANAKOV = 8.0 / 9.0


def _check_range(wavelength_nm, lo, hi, what):
    lam = np.asarray(wavelength_nm, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
        raise DomainError(f"{what}: wavelength outside [{lo:g}, {hi:g}] nm")
    return lam


@dataclass(frozen=True)
class SellmeierCoefficients:
    """Three-term Sellmeier dispersion formula; resonances ``l`` in um."""

    b: tuple[float, float, float]
    l: tuple[float, float, float]

    def __post_init__(self):
        if len(self.b) != 3 or len(self.l) != 3:
            raise ValueError("Sellmeier formula needs exactly three terms")
        if any(x <= 0 for x in self.l):
            raise ValueError("resonance wavelengths must be positive")


# Malitson (1965) fused silica, used as a stand-in for the doped core glass.
FUSED_SILICA = SellmeierCoefficients(
    b=(0.6961663, 0.4079426, 0.8974794),
    l=(0.0684043, 0.1162414, 9.896161),
)


@dataclass(frozen=True)
class StepIndexGeometry:
    core_radius: float = 5.0  # um
    index_contrast: float = 0.0031  # (n_core - n_clad) / n_core

    def __post_init__(self):
        if self.core_radius <= 0:
            raise GeometryError("core radius must be positive")
        if not 0.0 < self.index_contrast < 0.05:
            raise GeometryError("index contrast must lie in (0, 0.05)")


@dataclass(frozen=True)
class OHPeak:
    center_nm: float
    fwhm_nm: float
    height_db_km: float


@dataclass(frozen=True)
class AttenuationModel:
    """Parametric loss: Rayleigh + infrared edge + Gaussian OH- absorption lines.

    ``alpha_dB(lam) = R / lam_um**4 + A_ir * exp(-b_ir / lam_um)
    + oh_scale * sum(peaks)``. The default coefficients give 0.19 dB/km at
    1550 nm and 0.32 dB/km at 1310 nm.
    """

    rayleigh_coeff: float = 0.94197  # dB/km um^4
    ir_amplitude: float = 1.0225e12  # dB/km
    ir_decay: float = 48.48  # um
    oh_peaks: tuple[OHPeak, ...] = (
        OHPeak(1383.0, 30.0, 0.6),
        OHPeak(1240.0, 30.0, 0.06),
    )
    oh_scale: float = 0.1

    def __post_init__(self):
        if self.rayleigh_coeff <= 0 or self.ir_amplitude < 0 or self.ir_decay <= 0:
            raise ValueError("attenuation coefficients must be positive")
        if self.oh_scale < 0:
            raise ValueError("oh_scale must be non-negative")

    def db_per_km(self, wavelength_nm):
        lam = np.asarray(wavelength_nm, dtype=float)
        um = lam * 1e-3
        alpha = self.rayleigh_coeff / um**4 + self.ir_amplitude * np.exp(-self.ir_decay / um)
        for peak in self.oh_peaks:
            sigma = peak.fwhm_nm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
            alpha = alpha + self.oh_scale * peak.height_db_km * np.exp(
                -0.5 * ((lam - peak.center_nm) / sigma) ** 2
            )
        return alpha


@dataclass(frozen=True, eq=False)
class RamanGainTable:
    """Raman gain efficiency g(detuning) in 1/(W km), linearly interpolated.

    The gain refers to a pump at ``pump_wavelength_nm`` in a fiber of effective
    area ``area_um2``; :func:`sprs_efficiency` rescales it to other wavelengths.
    """

    detuning_thz: np.ndarray
    gain: np.ndarray
    pump_wavelength_nm: float = 1550.0
    area_um2: float = 80.0
    temperature_k: float = 300.0

    def __post_init__(self):
        nu = np.asarray(self.detuning_thz, dtype=float)
        g = np.asarray(self.gain, dtype=float)
        if nu.ndim != 1 or nu.shape != g.shape or nu.size < 2:
            raise ValueError("Raman table needs two equal-length columns")
        if nu[0] != 0.0 or g[0] != 0.0:
            raise ValueError("Raman table must start at zero detuning with zero gain")
        if np.any(np.diff(nu) <= 0):
            raise ValueError("Raman detunings must be strictly increasing")
        if np.any(g < 0):
            raise ValueError("Raman gains must be non-negative")
        if self.temperature_k <= 0 or self.area_um2 <= 0 or self.pump_wavelength_nm <= 0:
            raise ValueError("Raman table reference values must be positive")
        if not 12.0 <= nu[np.argmax(g)] <= 14.0:
            raise ValueError("Raman gain peak must lie between 12 and 14 THz (silica)")
        object.__setattr__(self, "detuning_thz", nu)
        object.__setattr__(self, "gain", g)

    @property
    def max_detuning(self) -> float:
        return float(self.detuning_thz[-1])

    @property
    def peak_detuning(self) -> float:
        return float(self.detuning_thz[np.argmax(self.gain)])

    def __call__(self, detuning_thz):
        d = np.abs(np.asarray(detuning_thz, dtype=float))
        return np.interp(d, self.detuning_thz, self.gain, right=0.0)

    def gain_times_occupation(self, detuning_thz):
        """g(|d|) * n_th(|d|), with the finite limit at d -> 0."""
        d = np.abs(np.asarray(detuning_thz, dtype=float))
        x = h * d * 1e12 / (k_B * self.temperature_k)
        slope0 = self.gain[1] / self.detuning_thz[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self(d) / np.expm1(x)
        limit = slope0 * k_B * self.temperature_k / (h * 1e12)
        return np.where(d > 0, val, limit)

    @classmethod
    def from_file(cls, path) -> "RamanGainTable":
        """Read the two-column text format (``#`` comments, one key=value header)."""
        header = {}
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" in line:
                    for token in line.split():
                        key, _, value = token.partition("=")
                        header[key.strip()] = float(value)
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected two columns")
                rows.append((float(parts[0]), float(parts[1])))
        missing = {"pump_wavelength_nm", "area_um2", "temperature_k"} - header.keys()
        if missing:
            raise ValueError(f"{path}: header is missing {sorted(missing)}")
        data = np.array(rows)
        return cls(
            detuning_thz=data[:, 0],
            gain=data[:, 1],
            pump_wavelength_nm=header["pump_wavelength_nm"],
            area_um2=header["area_um2"],
            temperature_k=header["temperature_k"],
        )


def data_path(name: str) -> Path:
    """Locate a bundled data file; ``COEXIST_DATA_DIR`` takes precedence."""
    override = os.environ.get("COEXIST_DATA_DIR")
    if override and (Path(override) / name).exists():
        return Path(override) / name
    return Path(str(resources.files("coexist") / "data" / name))


@lru_cache(maxsize=4)
def _load_table(path: str) -> RamanGainTable:
    return RamanGainTable.from_file(path)


def default_raman_table() -> RamanGainTable:
    return _load_table(str(data_path("raman_silica.dat")))


@dataclass(frozen=True)
class FiberProfile:
    sellmeier: SellmeierCoefficients = FUSED_SILICA
    geometry: StepIndexGeometry = field(default_factory=StepIndexGeometry)
    attenuation: AttenuationModel = field(default_factory=AttenuationModel)
    raman: RamanGainTable = field(default_factory=default_raman_table)
    gamma_ref: float = 1.3  # 1/(W km)
    rayleigh_ref: float = 1e-4  # 1/km, i.e. -40 dB/km
    reference_wavelength: float = 1550.0  # nm
    waveguide_dispersion: bool = True

    def __post_init__(self):
        if self.gamma_ref <= 0 or self.rayleigh_ref <= 0 or self.reference_wavelength <= 0:
            raise ValueError("reference values must be positive")

    def with_oh_scale(self, oh_scale: float) -> "FiberProfile":
        return replace(self, attenuation=replace(self.attenuation, oh_scale=oh_scale))


def default_fiber(**overrides) -> FiberProfile:
    return FiberProfile(**overrides)


def sellmeier_index(coeffs: SellmeierCoefficients, wavelength_nm):
    lam2 = (np.asarray(wavelength_nm, dtype=float) * 1e-3) ** 2
    n2 = 1.0
    for b, l in zip(coeffs.b, coeffs.l):
        n2 = n2 + b * lam2 / (lam2 - l * l)
    return np.sqrt(n2)


def refractive_index(profile: FiberProfile, wavelength_nm):
    """Core material index from the Sellmeier formula."""
    lam = _check_range(wavelength_nm, *SELLMEIER_RANGE_NM, "refractive_index")
    return sellmeier_index(profile.sellmeier, lam)


def v_number(profile: FiberProfile, wavelength_nm):
    lam = np.asarray(wavelength_nm, dtype=float)
    n_core = sellmeier_index(profile.sellmeier, lam)
    delta = profile.geometry.index_contrast
    n_clad = n_core * (1.0 - delta)
    na = np.sqrt(n_core**2 - n_clad**2)
    return 2.0 * np.pi * profile.geometry.core_radius / (lam * 1e-3) * na


def mode_field(profile: FiberProfile, wavelength_nm):
    """Gaussian mode radius ``w`` (um) and effective area ``pi w^2`` (um^2)."""
    lam = _check_range(wavelength_nm, *SELLMEIER_RANGE_NM, "mode_field")
    v = v_number(profile, lam)
    if np.any(v <= 0):
        raise GeometryError("V-number must be positive")
    w = profile.geometry.core_radius * (0.65 + 1.619 * v**-1.5 + 2.879 * v**-6)
    return w, np.pi * w**2


def effective_area(profile: FiberProfile, wavelength_nm):
    return mode_field(profile, wavelength_nm)[1]


def cross_effective_area(profile: FiberProfile, wavelength_i_nm, wavelength_h_nm):
    """Overlap area of two Gaussian modes, ``pi (w_i^2 + w_h^2) / 2``."""
    w_i, _ = mode_field(profile, wavelength_i_nm)
    w_h, _ = mode_field(profile, wavelength_h_nm)
    return 0.5 * np.pi * (w_i**2 + w_h**2)


def effective_index(profile: FiberProfile, wavelength_nm):
    """Mode index; material index alone when waveguide dispersion is disabled."""
    lam = np.asarray(wavelength_nm, dtype=float)
    n_core = sellmeier_index(profile.sellmeier, lam)
    if not profile.waveguide_dispersion:
        return n_core
    n_clad = n_core * (1.0 - profile.geometry.index_contrast)
    v = v_number(profile, lam)
    # Rudolph-Neumann normalized propagation constant, 1.5 < V < 2.5 to ~0.2%
    b = np.clip(1.1428 - 0.996 / v, 0.0, 1.0) ** 2
    return n_clad + b * (n_core - n_clad)


def beta2(profile: FiberProfile, wavelength_nm, rel_step: float = BETA2_REL_STEP):
    """Group-velocity dispersion in ps^2/km by central differences of beta(omega)."""
    lam = np.asarray(wavelength_nm, dtype=float)
    omega = 2.0 * np.pi * c / (lam * 1e-9)
    step = rel_step * omega
    lam_lo = 2.0 * np.pi * c / (omega + step) * 1e9
    lam_hi = 2.0 * np.pi * c / (omega - step) * 1e9
    _check_range(np.concatenate([np.ravel(lam_lo), np.ravel(lam_hi)]), *SELLMEIER_RANGE_NM,
                 "beta2 stencil")

    def beta(w):
        return effective_index(profile, 2.0 * np.pi * c / w * 1e9) * w / c

    d2 = (beta(omega + step) - 2.0 * beta(omega) + beta(omega - step)) / step**2
    return d2 * 1e27  # s^2/m -> ps^2/km


def zero_dispersion_wavelength(profile: FiberProfile, lo: float = 1200.0, hi: float = 1400.0):
    from scipy.optimize import brentq

    return brentq(lambda x: float(beta2(profile, x)), lo, hi, xtol=1e-6)


def gamma(profile: FiberProfile, wavelength_nm):
    """Nonlinear coefficient in 1/(W km), scaling as ``(lambda A_eff)^-1``."""
    lam = _check_range(wavelength_nm, *SELLMEIER_RANGE_NM, "gamma")
    ref = profile.reference_wavelength
    return profile.gamma_ref * (ref * effective_area(profile, ref)) / (lam * effective_area(profile, lam))


def gamma_eff(profile: FiberProfile, wavelength_nm):
    """Polarization-averaged (Manakov) nonlinear coefficient."""
    return MANAKOV * gamma(profile, wavelength_nm)


def rayleigh_coeff(profile: FiberProfile, wavelength_nm):
    """Rayleigh backscatter capture efficiency in 1/km, scaling as lambda^-4."""
    lam = _check_range(wavelength_nm, *SELLMEIER_RANGE_NM, "rayleigh_coeff")
    return profile.rayleigh_ref * (profile.reference_wavelength / lam) ** 4


def attenuation_db(profile: FiberProfile, wavelength_nm):
    lam = _check_range(wavelength_nm, *ATTENUATION_RANGE_NM, "attenuation")
    return profile.attenuation.db_per_km(lam)


def attenuation(profile: FiberProfile, wavelength_nm):
    """Power attenuation coefficient in 1/km."""
    return db_per_km_to_per_km(attenuation_db(profile, wavelength_nm))


def raman_support(profile: FiberProfile, f_i, f_h):
    """True where the detuning lies within the Raman table."""
    return np.abs(np.asarray(f_i, dtype=float) - np.asarray(f_h, dtype=float)) <= profile.raman.max_detuning


def sprs_efficiency(profile: FiberProfile, f_i, f_h, bandwidth_ghz: float = 50.0):
    """Spontaneous Raman efficiency from a pump at ``f_h`` into a slot at ``f_i``.

    Returns eta in 1/km such that ``eta * P_h`` is the noise power generated per
    km inside a slot of width ``bandwidth_ghz`` centred at ``f_i``::

        eta = g(|df|) * N(df) * h f_i * B * A_ref / A_eff(i, h)

    with N = n_th + 1 for Stokes (f_i < f_h) and n_th for anti-Stokes, n_th the
    Bose-Einstein phonon occupation. Since ``h f_i`` is proportional to
    1/lambda_i this is the ``(lambda_i A_eff,ih)^-1`` scaling. Detunings beyond
    the table give 0 (see :func:`raman_support`).
    """
    fi = np.asarray(f_i, dtype=float)
    fh = np.asarray(f_h, dtype=float)
    table = profile.raman
    detuning = fi - fh
    g = table(detuning)
    g_n = table.gain_times_occupation(detuning)
    occupation_gain = np.where(detuning > 0, g_n, g + g_n)
    area = cross_effective_area(profile, thz_to_nm(fi), thz_to_nm(fh))
    photon = h * fi * 1e12
    return occupation_gain * photon * bandwidth_ghz * 1e9 * table.area_um2 / area


__all__ = [
    "AttenuationModel",
    "FUSED_SILICA",
    "FiberProfile",
    "OHPeak",
    "RamanGainTable",
    "SellmeierCoefficients",
    "StepIndexGeometry",
    "attenuation",
    "attenuation_db",
    "beta2",
    "cross_effective_area",
    "default_fiber",
    "default_raman_table",
    "effective_area",
    "effective_index",
    "gamma",
    "gamma_eff",
    "mode_field",
    "raman_support",
    "rayleigh_coeff",
    "refractive_index",
    "sellmeier_index",
    "sprs_efficiency",
    "v_number",
    "zero_dispersion_wavelength",
]

