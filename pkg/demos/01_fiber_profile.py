"""Fiber parameters across the O- to U-band.

Attenuation, dispersion and the nonlinear and backscatter coefficients that
feed every noise calculation. Run from the repository root:

    python demos/01_fiber_profile.py
"""

import numpy as np

from coexist import fiber as fib

profile = fib.default_fiber()

# %% attenuation with and without the water peak
lam = np.arange(1260.0, 1676.0, 25.0)
dry = fib.attenuation_db(profile.with_oh_scale(0.0), lam)
wet = fib.attenuation_db(profile.with_oh_scale(1.0), lam)

print(f"{'nm':>6} {'dB/km dry':>10} {'dB/km wet':>10} {'beta2 ps2/km':>13} "
      f"{'gamma 1/(W km)':>15} {'Aeff um2':>9}")
for x, a, b in zip(lam, dry, wet):
    print(f"{x:6.0f} {a:10.3f} {b:10.3f} {float(fib.beta2(profile, x)):13.2f} "
          f"{float(fib.gamma(profile, x)):15.3f} {float(fib.effective_area(profile, x)):9.1f}")

# %% the dispersion zero sits in the O-band, so FWM phase matching is easiest there
print(f"\nzero-dispersion wavelength: {fib.zero_dispersion_wavelength(profile):.1f} nm")

# %% gamma follows 1/(lambda A_eff) and the Rayleigh capture 1/lambda^4
g = fib.gamma(profile, lam) * lam * fib.effective_area(profile, lam)
r = fib.rayleigh_coeff(profile, lam) * lam**4
print(f"spread of gamma*lambda*A_eff: {np.ptp(g) / g.mean():.1e}")
print(f"spread of Rayleigh*lambda^4:  {np.ptp(r) / r.mean():.1e}")
