"""Where the interference comes from.

A fully loaded C-band (88 channels, -2 dBm each) shares 25 km of fiber with a
quantum channel. The sweep splits the received noise into spontaneous Raman
scattering, four-wave mixing and transmitter leakage, for co- and
counter-propagating quantum light.
"""

import numpy as np

from coexist import interference as itf
from coexist import scenario as sc

scn = sc.reference_scenario("C")
lam = np.array([1270.0, 1310.0, 1360.0, 1400.0, 1450.0, 1500.0, 1520.0, 1580.0, 1620.0])
res = sc.noise_spectrum(scn, lam)

for d in res.directions:
    print(f"\n{d.value}: received noise in W")
    print(f"{'nm':>6} {'SpRS':>10} {'FWM':>10} {'leakage':>10}")
    for j, x in enumerate(lam):
        n = res.noise[d]
        print(f"{x:6.0f} {n['sprs'][0, j]:10.2e} {n['fwm'][0, j]:10.2e} {n['leakage'][0, j]:10.2e}")

# %% in the C-band itself one channel is freed for the quantum signal;
# FWM is then comparable to Raman
inside = sc.noise_spectrum(scn, [1550.0])
print(f"\n1550 nm, channel {inside.deallocated[0]} freed: "
      f"SpRS {inside.noise[itf.Direction.FORWARD]['sprs'][0, 0]:.2e} W, "
      f"FWM {inside.noise[itf.Direction.FORWARD]['fwm'][0, 0]:.2e} W")

# %% backward noise saturates after a few tens of km, forward noise peaks and decays
lengths = np.array([5.0, 10.0, 20.0, 40.0, 80.0])
f = res.frequency_thz[3]
for d in res.directions:
    nb = itf.total_noise(scn.plan, scn.fiber, f, lengths, d)
    print(f"{d.value} at 1400 nm vs length: " + ", ".join(f"{L:g} km {p:.2e}"
                                                          for L, p in zip(lengths, nb.total)))
