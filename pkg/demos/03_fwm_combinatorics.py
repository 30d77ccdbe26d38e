"""Counting phase-matched FWM products.

For N equally spaced channels, the number of (h, k, l) triples landing on slot
i has a closed form. Normalized by N^2 it tends to a piecewise-quadratic
density that peaks at 3/4 mid-band and falls to 1/2 at the band edges.
"""

import numpy as np

from coexist import interference as itf

for n in (4, 16, 64):
    idx = np.arange(-n + 1, 2 * n - 1)
    counts = [itf.fwm_count(n, i) for i in idx]
    print(f"N={n:3d}: max {max(counts)} products at slot {idx[int(np.argmax(counts))]}, "
          f"total {sum(counts)}")

offsets, norm = itf.fwm_count_normalized(256)
dev = np.abs(norm - itf.fwm_density(offsets)).max()
print(f"\nN=256 vs continuum density: max deviation {dev:.4f}")
print(f"centre {itf.fwm_density(0.0):.3f}, edge {itf.fwm_density(0.5):.3f}, "
      f"ratio {itf.fwm_density(0.5) / itf.fwm_density(0.0):.4f}")

# %% exact and phase-averaged kernels for a 16-channel band at 50 km
from coexist import fiber as fib

profile = fib.default_fiber()
plan = itf.ChannelPlan.fill(192.7, 193.5, 16, 1e-3)
for i in (-3, 0, 8, 15, 18):
    p = plan.without(plan.channels[0].index + i) if 0 <= i < 16 else plan
    f = float(plan.frequency_of(plan.channels[0].index + i))
    exact = itf.total_noise(p, profile, f, 50.0, fwm_kernel="exact").fwm
    avg = itf.total_noise(p, profile, f, 50.0, fwm_kernel="avg").fwm
    print(f"slot {i:3d}: exact {exact:.3e} W, averaged {avg:.3e} W ({avg / exact - 1:+.1%})")
