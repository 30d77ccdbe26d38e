"""Where to put the quantum channel.

Secret key rates over 1260-1675 nm for BB84 and Gaussian-modulated CV-QKD
(homodyne and heterodyne) next to a loaded C-band at 25 km, together with the
loss-limited rate the same link would give without coexistence noise.
"""

import numpy as np

from coexist import scenario as sc

scn = sc.reference_scenario("C")
res = sc.skr_vs_wavelength(scn)

for p in sc.ALL_PROTOCOLS:
    for d in res.directions:
        r = res.rate(p, d)[0]
        best = int(np.argmax(r))
        print(f"{p.value:9s} {d.value}: best {res.wavelength_nm[best]:.0f} nm "
              f"({r[best]:.4f} bits/symbol)")

# %% how close the O-band comes to the loss limit
o = sc.BANDS["O"].contains(res.wavelength_nm)
for p in sc.ALL_PROTOCOLS:
    for d in res.directions:
        gap = 1.0 - res.rate(p, d)[0, o] / res.limit(p)[0, o]
        print(f"{p.value:9s} {d.value}: O-band gap to loss limit, mean {gap.mean():.2%}, "
              f"worst {gap.max():.2%}")

# %% BB84 dies in the lower S-band, CV-QKD does not
j = int(np.searchsorted(res.wavelength_nm, 1500.0))
print(f"\nat 1500 nm: BB84 {res.rate('bb84', 'fwd')[0, j]:.2e}, "
      f"GMCS-het {res.rate('gmcs-het', 'fwd')[0, j]:.2e}")

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for p in sc.ALL_PROTOCOLS:
        ax.semilogy(res.wavelength_nm, res.rate(p, "fwd")[0], label=p.value)
    ax.set_xlabel("wavelength (nm)")
    ax.set_ylabel("SKR (bits/symbol)")
    ax.set_ylim(1e-6, 1)
    ax.legend()
    fig.savefig("skr_vs_wavelength.png", dpi=120, bbox_inches="tight")
    print("wrote skr_vs_wavelength.png")
