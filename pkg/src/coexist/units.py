"""Unit conversions used at the I/O boundary.

Internally the package works in a coherent "fiber" unit system: lengths in km,
attenuation in 1/km, powers in W, frequencies in THz, dispersion in ps^2/km.
Products such as ``beta2 * f**2`` are then directly in 1/km.
"""

import numpy as np
from scipy.constants import c

C_NM_THZ = c * 1e-3  # c in nm*THz
DB_PER_NEPER = 10.0 / np.log(10.0)


def nm_to_thz(wavelength_nm):
    return C_NM_THZ / np.asarray(wavelength_nm, dtype=float)


def thz_to_nm(frequency_thz):
    return C_NM_THZ / np.asarray(frequency_thz, dtype=float)


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


def dbm_to_watt(power_dbm):
    return 1e-3 * db_to_linear(power_dbm)


def watt_to_dbm(power_w):
    return linear_to_db(np.asarray(power_w, dtype=float) / 1e-3)


def db_per_km_to_per_km(alpha_db):
    """Power attenuation in dB/km to natural units (1/km)."""
    return np.asarray(alpha_db, dtype=float) / DB_PER_NEPER


def per_km_to_db_per_km(alpha):
    return np.asarray(alpha, dtype=float) * DB_PER_NEPER
