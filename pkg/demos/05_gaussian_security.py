"""The CV-QKD rate from two directions.

The large-modulation closed forms are compared against the covariance-matrix
computation at finite modulation variance, where Eve's state is built
explicitly and its symplectic spectrum read off.
"""

import numpy as np

from coexist import qkd

print(f"{'T':>5} {'xi':>6} {'hom closed':>11} {'hom V=1e6':>11} {'het closed':>11} "
      f"{'het V=1e6':>11}")
for T in (0.05, 0.1, 0.3, 0.8):
    for xi in (0.0, 0.01, 0.05):
        row = []
        for d in ("hom", "het"):
            row += [qkd.gmcs_skr_asymptotic(T, xi, d, clamp=False),
                    qkd.gmcs_skr_finite(1e6, T, xi, d, clamp=False)]
        print(f"{T:5.2f} {xi:6.3f} " + " ".join(f"{v:11.5f}" for v in row))

# %% modulation variance matters below a few tens of SNU
for v_a in (1.0, 4.0, 16.0, 64.0, 1e3):
    print(f"V_A={v_a:7g}: het rate {qkd.gmcs_skr_finite(v_a, 0.3, 0.01, 'het'):.4f}")

# %% Eve's two-mode state and its symplectic eigenvalues
cm = qkd.eve_covariance(10.0, 0.3, 0.01)
print("\nEve covariance:\n", np.round(cm.matrix, 4))
print("closed form:", qkd.symplectic_eigs(cm), " dense:", qkd.symplectic_eigs_dense(cm.matrix))

# %% a non-ideal receiver costs mutual information only
print(f"penalty eta=0.6, v_el=0.05: {qkd.receiver_penalty(0.3, 0.01, 'hom', 0.6, 0.05):.4f} bits")
