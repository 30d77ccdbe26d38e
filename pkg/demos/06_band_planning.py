"""Planning a multi-channel QKD band and choosing the classical band.

First, the key rate averaged over QKD bands of increasing width in a fiber
with a full water peak. Then, the same E-band sweep with the classical traffic
moved to the S- or L-band.
"""

import numpy as np

from coexist import interference as itf
from coexist import scenario as sc

wet = sc.reference_scenario("C", oh_scale=1.0, directions=(itf.Direction.FORWARD,))
centers = np.arange(1300.0, 1481.0, 20.0)
print("band-averaged GMCS-het rate, water-peak fiber")
print(f"{'centre nm':>9} " + " ".join(f"{w:>8g} nm" for w in (0, 10, 20, 40)))
curves = [sc.band_average_curve(wet, centers, w, "gmcs-het") for w in (0, 10, 20, 40)]
for j, c in enumerate(centers):
    print(f"{c:9.0f} " + " ".join(f"{curve[j]:11.4f}" for curve in curves))

lam, rate = sc.optimize_placement(wet, "gmcs-het")
print(f"best single slot: {lam:.1f} nm, {rate:.4f} bits/symbol")

# %% which classical band hurts the E-band least
lam = np.arange(1360.0, 1460.0, 5.0)
loads = {b: sc.reference_scenario(b) for b in ("S", "C", "L")}
out = sc.multi_band_compare(loads, lam, (sc.Protocol.GMCS_HET,))
print("\nE-band GMCS-het, forward, by classical loading")
for b, res in out.items():
    r = res.rate("gmcs-het", "fwd")[0]
    print(f"{b}-band loaded: mean {r.mean():.4f}, min {r.min():.4f}")
