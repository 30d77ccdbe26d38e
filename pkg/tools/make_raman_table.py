"""Regenerate the bundled silica Raman gain table.

The spectral shape is the 13-line intermediate-broadening fit of Hollenbeck and
Cantrell (JOSA B 19, 2886, 2002): each vibrational line is a Voigt profile, and
the gain is the antisymmetric combination V(nu - nu_k) - V(nu + nu_k), which
vanishes at zero detuning. The curve is scaled so its maximum equals
``--peak`` in 1/(W km) for the stated reference pump wavelength and area.

    python tools/make_raman_table.py --peak 0.6 > src/coexist/data/raman_silica.dat
"""

import argparse

import numpy as np
from scipy.special import voigt_profile

# position (cm^-1), amplitude, Gaussian FWHM (cm^-1), Lorentzian FWHM (cm^-1)
LINES = np.array([
    [56.25, 1.00, 52.10, 17.37],
    [100.00, 11.40, 110.42, 38.81],
    [231.25, 36.67, 175.00, 58.33],
    [362.50, 67.67, 162.50, 54.17],
    [463.00, 74.00, 135.33, 45.11],
    [497.00, 4.50, 24.50, 8.17],
    [611.50, 6.80, 41.50, 13.83],
    [691.67, 4.60, 155.00, 51.67],
    [793.67, 4.20, 59.50, 19.83],
    [835.50, 4.50, 64.30, 21.43],
    [930.00, 2.70, 150.00, 50.00],
    [1080.00, 3.10, 91.00, 30.33],
    [1215.00, 3.00, 160.00, 53.33],
])
WAVENUMBER_PER_THZ = 33.35641


def gain_shape(detuning_thz):
    k = np.asarray(detuning_thz) * WAVENUMBER_PER_THZ
    g = np.zeros_like(k, dtype=float)
    for pos, amp, gauss_fwhm, lor_fwhm in LINES:
        sigma = gauss_fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        gamma = lor_fwhm / 2.0
        g += amp * (voigt_profile(k - pos, sigma, gamma) - voigt_profile(k + pos, sigma, gamma))
    return np.clip(g, 0.0, None)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--peak", type=float, default=0.6, help="peak gain, 1/(W km)")
    parser.add_argument("--step", type=float, default=0.2, help="detuning step, THz")
    parser.add_argument("--max", type=float, default=42.0, help="last detuning, THz")
    parser.add_argument("--pump-nm", type=float, default=1550.0)
    parser.add_argument("--area-um2", type=float, default=80.0)
    parser.add_argument("--temperature-k", type=float, default=300.0)
    args = parser.parse_args()

    nu = np.round(np.arange(0.0, args.max + 0.5 * args.step, args.step), 6)
    fine = np.linspace(0.0, args.max, 20001)
    g = gain_shape(nu) * (args.peak / gain_shape(fine).max())
    g[0] = 0.0

    print("# Spontaneous/stimulated Raman gain efficiency of germanosilicate fiber.")
    print("# Shape: Hollenbeck & Cantrell multi-Voigt fit; scaled to the stated peak.")
    print("# columns: detuning_THz  gain_per_W_km")
    print(f"pump_wavelength_nm={args.pump_nm:g} area_um2={args.area_um2:g} "
          f"temperature_k={args.temperature_k:g}")
    for x, y in zip(nu, g):
        print(f"{x:.1f} {y:.6e}")


if __name__ == "__main__":
    main()
