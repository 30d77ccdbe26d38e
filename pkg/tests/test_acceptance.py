"""Acceptance suite: one test per criterion, each printing PASS/FAIL lines.

Runtime budgets are asserted alongside accuracy. The CLI goldens live in
``tests/golden``; rebuild them with ``pytest --regen-golden``.
"""

from __future__ import annotations

import dataclasses
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from coexist import config as cfg
from coexist import fiber as fib
from coexist import interference as itf
from coexist import qkd
from coexist import scenario as sc
from coexist.interference import Direction
from coexist.units import db_per_km_to_per_km, dbm_to_watt, nm_to_thz

from conftest import GOLDEN_DIR

FWD, BWD = Direction.FORWARD, Direction.BACKWARD


# ---------------------------------------------------------------------------
# 1, 2: FWM combinatorics


def _bruteforce_counts(n):
    """Exhaustive count for every receiving slot of an n-channel band."""
    i = np.arange(-n + 1, 2 * n - 1)[:, None, None]
    h = np.arange(n)[None, :, None]
    l = np.arange(n)[None, None, :]
    k = h + l - i
    ok = (k >= 0) & (k < n) & (h != i) & (l != i) & (k != i)
    return i.ravel(), ok.sum(axis=(1, 2))


def test_fwm_count_closed_form(report):
    t0 = time.perf_counter()
    mismatches = []
    for n in range(1, 65):
        idx, brute = _bruteforce_counts(n)
        closed = np.array([itf.fwm_count(n, int(i)) for i in idx])
        bad = np.nonzero(closed != brute)[0]
        mismatches += [(n, int(idx[b])) for b in bad]
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 10.0
    report("1", ok, f"closed form vs enumeration, N<=64: {len(mismatches)} mismatches, "
                    f"{elapsed:.2f} s (budget 10 s)")
    assert not mismatches, mismatches[:10]
    assert elapsed < 10.0


def test_fwm_density(report):
    centre = float(itf.fwm_density(0.0))
    ratio = float(itf.fwm_density(0.5)) / centre
    offsets, norm = itf.fwm_count_normalized(512)
    dev = float(np.max(np.abs(norm - itf.fwm_density(offsets)))) / centre
    ok_c = centre == 0.75
    ok_r = abs(ratio - 2.0 / 3.0) < 1e-15
    ok_d = dev < 0.02
    report("2", ok_c, f"density at band centre = {centre!r} (expected 0.75 exactly)")
    report("2", ok_r, f"edge/centre ratio = {ratio:.15f} (expected 2/3)")
    report("2", ok_d, f"N=512 normalized count vs continuum: max deviation {dev:.3%} "
                      "of the peak (limit 2%)")
    assert ok_c and ok_r and ok_d


# ---------------------------------------------------------------------------
# 3: closed form against the longitudinal ODE


def _random_scenario(rng):
    n = int(rng.integers(2, 33))
    spacing = float(rng.choice([25.0, 50.0, 100.0]))
    centre_nm = rng.uniform(1290.0, 1640.0)
    anchor = float(nm_to_thz(centre_nm))
    powers = rng.uniform(0.05e-3, 5e-3, n)
    kurt = rng.uniform(1.0, 3.0, n)
    chans = [itf.Channel(j, anchor + j * spacing * 1e-3, float(powers[j]), float(kurt[j]))
             for j in range(n)]
    plan = itf.ChannelPlan(tuple(chans), anchor_thz=anchor, spacing_ghz=spacing,
                           slot_bandwidth_ghz=spacing,
                           leakage_floor_w_per_ghz=float(dbm_to_watt(rng.uniform(-110, -90))))
    lo_f = float(nm_to_thz(1675.0))
    hi_f = float(nm_to_thz(1260.0))
    # mostly within FWM reach of the band, sometimes far out; never on an occupied slot
    width = n * spacing * 1e-3
    reach = n if rng.random() < 0.75 else 4 * n
    while True:
        slot = int(rng.integers(-reach, n + reach))
        if 0 <= slot < n:
            continue
        f_i = anchor + slot * spacing * 1e-3
        if rng.random() < 0.3:
            f_i += rng.uniform(-0.3, 0.3) * spacing * 1e-3  # off the grid
        if lo_f < f_i < hi_f and abs(f_i - anchor - 0.5 * width) < 5 * width:
            break
    length = float(rng.uniform(1.0, 100.0))
    direction = FWD if rng.random() < 0.5 else BWD
    return plan, f_i, length, direction


def _rel(a, b):
    if a == 0.0 and b == 0.0:
        return 0.0
    return abs(a - b) / max(abs(b), 1e-300)


def test_closed_form_matches_ode(report):
    profile = fib.default_fiber()
    rng = np.random.default_rng(20240611)
    t0 = time.perf_counter()
    worst = {"sprs": 0.0, "fwm": 0.0, "leakage": 0.0}
    for _ in range(50):
        plan, f_i, length, d = _random_scenario(rng)
        closed = itf.total_noise(plan, profile, f_i, length, d)
        ode = itf.propagate_ode(plan, profile, f_i, length, d)
        for mech in worst:
            worst[mech] = max(worst[mech], _rel(getattr(closed, mech), getattr(ode, mech)))
    elapsed = time.perf_counter() - t0
    for mech, err in worst.items():
        report("3", err < 5e-3, f"{mech}: worst relative error {err:.2e} over 50 random "
                                "scenarios (limit 0.5%)")
    report("3", elapsed < 120.0, f"runtime {elapsed:.1f} s (budget 120 s)")
    assert all(err < 5e-3 for err in worst.values()), worst
    assert elapsed < 120.0


# ---------------------------------------------------------------------------
# 4, 5, 6: kernel claims


def test_fwm_averaged_kernel(report):
    profile = fib.default_fiber()
    plan = itf.ChannelPlan.fill(192.7, 193.5, 16, float(dbm_to_watt(0.0)))
    idx = [ch.index for ch in plan.channels]
    exact, avg, inside = [], [], []
    for i in range(idx[0] - 15, idx[-1] + 16):
        p = plan.without(i) if i in idx else plan
        f = float(plan.frequency_of(i))
        exact.append(itf.total_noise(p, profile, f, 50.0, FWD, "exact").fwm)
        avg.append(itf.total_noise(p, profile, f, 50.0, FWD, "avg").fwm)
        inside.append(i in idx)
    exact, avg, inside = np.array(exact), np.array(avg), np.array(inside)
    total = abs(avg.sum() / exact.sum() - 1.0)
    in_band = float(np.max(np.abs(avg[inside] / exact[inside] - 1.0)))
    hit = exact > 0
    per_slot = np.abs(avg[hit] / exact[hit] - 1.0)
    tail = float(exact[hit][np.argmax(per_slot)] / exact.max())
    report("4", total < 0.10, f"16 channels, 50 km: spectrum-total FWM, chi_avg vs chi_exact "
                              f"{total:.2%} (limit 10%)")
    report("4", in_band < 0.10, f"in-band slots: worst {in_band:.2%} (limit 10%)")
    print(f"  info: worst single slot {per_slot.max():.1%}, at {10 * np.log10(tail):.0f} dB "
          "below the FWM peak")
    assert total < 0.10 and in_band < 0.10


def test_peak_length(report):
    a_i = db_per_km_to_per_km(0.2)
    worst = 0.0
    for ratio in np.linspace(0.5, 2.0, 31):
        a_h = ratio * a_i
        res = minimize_scalar(lambda z: -itf.omega_sprs(a_i, a_h, z, FWD), bounds=(0.1, 200.0),
                              method="bounded", options={"xatol": 1e-6})
        worst = max(worst, abs(res.x - float(itf.peak_length(a_i, a_h))))
    degenerate = float(itf.peak_length(a_i, a_i))
    ok_a = worst < 0.1
    ok_d = abs(degenerate - 21.71) < 0.005
    report("5", ok_a, f"peak length vs numeric argmax, alpha ratio 0.5-2: worst {worst:.2e} km "
                      "(limit 0.1 km)")
    report("5", ok_d, f"equal attenuation at 0.2 dB/km: {degenerate:.4f} km (expected 21.71)")
    assert ok_a and ok_d


def test_backward_saturation(report):
    a = db_per_km_to_per_km(0.2)
    profile = fib.default_fiber()
    # flat 0.2 dB/km fiber, C-band loading, quantum channel in the O-band
    flat = dataclasses.replace(profile, attenuation=_FlatLoss(0.2))
    plan = sc.reference_plan("C")
    f_i = float(nm_to_thz(1310.0))
    n40 = itf.total_noise(plan, flat, f_i, 40.0, BWD).total
    n80 = itf.total_noise(plan, flat, f_i, 80.0, BWD).total
    kernel = float(itf.omega_sprs(a, a, 40.0, BWD) / itf.omega_sprs(a, a, 80.0, BWD))
    gap = 1.0 - n40 / n80
    ok = gap < 0.03
    report("6", ok, f"backward noise 40 km / 80 km = {n40 / n80:.4f} (gap {gap:.2%}, limit 3%); "
                    f"kernel alone {kernel:.4f}")
    assert ok


@dataclasses.dataclass(frozen=True)
class _FlatLoss:
    value: float

    def db_per_km(self, wavelength_nm):
        return np.full(np.shape(wavelength_nm), self.value, dtype=float)


# ---------------------------------------------------------------------------
# 7, 8: key rates


def test_bb84_threshold(report):
    q0 = brentq(lambda q: float(qkd.bb84_skr(q, 1.0, clamp=False)), 0.05, 0.2, xtol=1e-14)
    T = np.linspace(0.01, 1.0, 50)
    r0 = qkd.bb84_skr(np.zeros_like(T), T)
    ok_q = abs(q0 - 0.1100) <= 5e-4
    ok_t = np.array_equal(r0, T / 2)
    report("7", ok_q, f"zero crossing at QBER = {q0:.6f} (0.1100 +/- 0.0005)")
    report("7", ok_t, "SKR(QBER=0) == T/2 exactly for 50 transmittances")
    assert ok_q and ok_t


def _ab_holevo(v_a, T, xi, detection):
    """Holevo bound from the Alice-Bob purification, S(AB) - S(A|B).

    Independent of the Eve-side covariance used by the library.
    """
    v = v_a + 1.0
    v_b = T * v_a + 1.0 + xi
    c = np.sqrt(T * (v * v - 1.0))
    Z = np.diag([1.0, -1.0])
    sig = np.block([[v * np.eye(2), c * Z], [c * Z, v_b * np.eye(2)]])
    nu = np.abs(np.linalg.eigvals(1j * qkd.OMEGA @ sig))
    nu = np.sort(nu)[::2]
    s_a, s_b, c_ab = sig[:2, :2], sig[2:, 2:], sig[:2, 2:]
    if qkd.Detection.parse(detection) is qkd.Detection.HOMODYNE:
        proj = np.diag([1.0, 0.0])
        cond = s_a - c_ab @ (proj / v_b) @ c_ab.T
    else:
        cond = s_a - c_ab @ np.linalg.inv(s_b + np.eye(2)) @ c_ab.T
    nu_c = np.sqrt(np.linalg.det(cond))
    return float(sum(qkd.h2(x) for x in nu) - qkd.h2(nu_c))


def _random_cm(rng):
    """Random two-mode CM with diagonal blocks and known symplectic spectrum."""
    nu = np.sort(1.0 + rng.exponential(3.0, 2))[::-1]
    m = rng.normal(size=(2, 2))
    while abs(np.linalg.det(m)) < 0.2:
        m = rng.normal(size=(2, 2))
    sx = m @ np.diag(nu) @ m.T
    minv = np.linalg.inv(m)
    sp = minv.T @ np.diag(nu) @ minv
    full = np.zeros((4, 4))
    full[np.ix_([0, 2], [0, 2])] = sx
    full[np.ix_([1, 3], [1, 3])] = sp
    return full, nu


def test_gmcs_closed_forms(report):
    worst = {}
    for det in ("hom", "het"):
        pts = [(0.1, 1e-3)] + [(t, x) for t in np.linspace(0.05, 0.8, 5)
                              for x in np.linspace(0.0, 0.05, 5)]
        errs = []
        for t, x in pts:
            a = qkd.gmcs_skr_asymptotic(t, x, det, clamp=False)
            f = qkd.gmcs_skr_finite(1e6, t, x, det, clamp=False)
            errs.append(abs(a - f))
        worst[det] = max(errs)
        report("8", worst[det] < 1e-3, f"{det}: asymptotic vs V_A=1e6 covariance route, worst "
                                        f"{worst[det]:.2e} bits at (0.1, 1e-3) and 5x5 grid "
                                        "(limit 1e-3)")
    # both Holevo routes agree at finite V_A
    route = max(abs(qkd.holevo_finite(v, t, x, d) - _ab_holevo(v, t, x, d))
                for v in (2.0, 10.0, 1e3) for t in (0.05, 0.3, 0.8) for x in (0.0, 0.02)
                for d in ("hom", "het"))
    report("8", route < 1e-9, f"Eve-side vs Alice-Bob Holevo bound: worst {route:.2e} bits")

    rng = np.random.default_rng(7)
    eig_err = 0.0
    for _ in range(1000):
        m, nu = _random_cm(rng)
        closed = np.array(qkd.symplectic_eigs(qkd.GaussianCM.from_matrix(m)))
        dense = np.array(qkd.symplectic_eigs_dense(m))
        eig_err = max(eig_err, np.max(np.abs(closed - dense) / dense),
                      np.max(np.abs(closed - nu) / nu))
    report("8", eig_err < 1e-10, f"symplectic closed form vs dense solver on 1000 random CMs: "
                                 f"worst relative {eig_err:.2e} (limit 1e-10)")
    assert max(worst.values()) < 1e-3 and route < 1e-9 and eig_err < 1e-10


# ---------------------------------------------------------------------------
# 9: reference scenario


@pytest.fixture(scope="module")
def reference_sweeps():
    out, times = {}, {}
    lam = sc.default_wavelengths()
    for band in ("C", "S", "L"):
        t0 = time.perf_counter()
        out[band] = sc.skr_vs_wavelength(sc.reference_scenario(band), lam)
        times[band] = time.perf_counter() - t0
    return out, times


def test_reference_runtime(reference_sweeps, report):
    _, times = reference_sweeps
    for band, t in times.items():
        report("9", t < 60.0, f"{band}-band loaded sweep, 1260-1675 nm at 1 nm: {t:.1f} s "
                              "(budget 60 s)")
    assert max(times.values()) < 60.0


def test_reference_dominant_mechanism(report):
    scn = sc.reference_scenario("C")
    res = sc.noise_spectrum(scn, [1400.0])
    ok_all = True
    for d in (FWD, BWD):
        parts = {k: float(v[0, 0]) for k, v in res.noise[d].items()}
        top = max(parts, key=parts.get)
        ok = top == "sprs"
        ok_all &= ok
        report("9a", ok, f"{d.value}: dominant at 1400 nm is {top} "
                         + ", ".join(f"{k}={v:.3g} W" for k, v in parts.items()))
    assert ok_all


def test_reference_peak_wavelength(reference_sweeps, report):
    res = reference_sweeps[0]["C"]
    ok_all = True
    for p in sc.ALL_PROTOCOLS:
        for d in (FWD, BWD):
            lam = float(res.wavelength_nm[np.argmax(res.rate(p, d)[0])])
            ok = 1380.0 <= lam <= 1430.0
            ok_all &= ok
            report("9b", ok, f"{p.value} {d.value}: SKR argmax at {lam:g} nm (window 1380-1430)")
    assert ok_all


def _o_band_drop(res, p, d):
    o = sc.BANDS["O"].contains(res.wavelength_nm)
    rate = res.rate(p, d)[0, o]
    ref = res.limit(p)[0, o]
    drop = 1.0 - rate / ref
    return float(drop.max()), float(res.wavelength_nm[o][np.argmax(drop)]), float(drop.mean())


O_BAND_CASES = [(p, d) for p in sc.ALL_PROTOCOLS for d in (FWD, BWD)]
# Not reachable with the reference plan. The BB84 key fraction has infinite slope at
# zero QBER, so a 1% gap needs QBER below ~4e-4: forward leakage alone gives 6.3e-4,
# and backward SpRS passes that from 1327 nm up. Homodyne forward misses only at
# 1359 nm (1.004%). Kept as honest failures.
O_BAND_EXPECTED_FAIL = {(sc.Protocol.BB84, FWD), (sc.Protocol.BB84, BWD),
                        (sc.Protocol.GMCS_HOM, FWD)}


@pytest.mark.parametrize("protocol,direction", [
    pytest.param(p, d, id=f"{p.value}-{d.value}",
                 marks=[pytest.mark.xfail(strict=True, reason="O-band gap exceeds 1% with the "
                                                              "reference leakage floor")]
                 if (p, d) in O_BAND_EXPECTED_FAIL else [])
    for p, d in O_BAND_CASES])
def test_reference_o_band_near_loss_limit(reference_sweeps, report, protocol, direction):
    worst, at, mean = _o_band_drop(reference_sweeps[0]["C"], protocol, direction)
    ok = worst <= 0.01
    report("9c", ok, f"{protocol.value} {direction.value}: O-band worst drop below the "
                     f"loss-limited rate {worst:.3%} at {at:g} nm, mean {mean:.3%} (limit 1%)")
    assert ok


def test_reference_loading_band(reference_sweeps, report):
    res = reference_sweeps[0]
    e = sc.BANDS["E"].contains(res["C"].wavelength_nm)
    ok_all = True
    for p in (sc.Protocol.GMCS_HOM, sc.Protocol.GMCS_HET):
        for d in (FWD, BWD):
            c = res["C"].rate(p, d)[0, e]
            s = res["S"].rate(p, d)[0, e]
            l = res["L"].rate(p, d)[0, e]
            ok_s = s.mean() < c.mean() and np.all(s <= c)
            ok_l = l.mean() >= c.mean() and np.all(l >= c)
            ok_all &= ok_s and ok_l
            report("9d", ok_s, f"{p.value} {d.value}: S-loaded/C-loaded E-band mean "
                               f"{s.mean() / c.mean():.3f}, degraded at every point: "
                               f"{bool(np.all(s <= c))}")
            report("9d", ok_l, f"{p.value} {d.value}: L-loaded/C-loaded E-band min ratio "
                               f"{np.min(l / c):.4f} (no degradation)")
    assert ok_all


# ---------------------------------------------------------------------------
# 10: scaling laws


def test_scaling_laws(report):
    profile = fib.default_fiber()
    plan = itf.ChannelPlan.fill(192.7, 193.5, 16, 1e-3)
    f_i = float(plan.frequency_of(-12))
    base = itf.total_noise(plan, profile, f_i, 30.0, FWD)
    fwm_err = sprs_err = 0.0
    for k in (0.1, 0.5, 2.0, 7.0):
        scaled = itf.total_noise(plan.scaled(k), profile, f_i, 30.0, FWD)
        fwm_err = max(fwm_err, abs(scaled.fwm / (base.fwm * k**3) - 1.0))
        sprs_err = max(sprs_err, abs(scaled.sprs / (base.sprs * k) - 1.0))
    lam = np.linspace(1260.0, 1675.0, 84)
    g = fib.gamma(profile, lam) * lam * fib.effective_area(profile, lam)
    r = fib.rayleigh_coeff(profile, lam) * lam**4
    g_err = float(np.max(np.abs(g / g[0] - 1.0)))
    r_err = float(np.max(np.abs(r / r[0] - 1.0)))
    report("10", fwm_err < 1e-12, f"FWM vs launch power cubed: worst {fwm_err:.1e}")
    report("10", sprs_err < 1e-12, f"SpRS vs launch power: worst {sprs_err:.1e}")
    report("10", g_err < 1e-9, f"gamma * lambda * A_eff constant to {g_err:.1e} (limit 1e-9)")
    report("10", r_err < 1e-12, f"Rayleigh capture * lambda^4 constant to {r_err:.1e} "
                                "(limit 1e-12)")
    assert fwm_err < 1e-12 and sprs_err < 1e-12 and g_err < 1e-9 and r_err < 1e-12


# ---------------------------------------------------------------------------
# 11: CLI


def _run_cli(name, path, out, verify=False):
    doc = cfg.load(path).document
    command = doc["metadata"]["command"]
    cmd = [sys.executable, "-m", "coexist", command, "--config", str(path), "--output", str(out)]
    if verify:
        cmd.append("--verify")
    return subprocess.run(cmd, capture_output=True, text=True)


BUNDLED = sorted(cfg.bundled_configs().items())


@pytest.mark.parametrize("name,path", BUNDLED, ids=[n for n, _ in BUNDLED])
def test_cli_golden(name, path, tmp_path, regen_golden, report):
    golden = GOLDEN_DIR / f"{name}.csv"
    first = _run_cli(name, path, tmp_path / "a.csv")
    second = _run_cli(name, path, tmp_path / "b.csv")
    assert first.returncode == 0, first.stderr
    assert second.returncode == 0, second.stderr
    a = (tmp_path / "a.csv").read_bytes()
    b = (tmp_path / "b.csv").read_bytes()
    if regen_golden:
        golden.write_bytes(a)
    ok_stable = a == b
    ok_golden = golden.exists() and golden.read_bytes() == a
    report("11", ok_stable and ok_golden, f"{name}: two runs byte-identical: {ok_stable}, "
                                          f"matches golden: {ok_golden}")
    assert ok_stable and ok_golden


@pytest.mark.parametrize("name,path", BUNDLED, ids=[n for n, _ in BUNDLED])
def test_cli_verify(name, path, tmp_path, report):
    run = _run_cli(name, path, tmp_path / "v.csv", verify=True)
    checks = [line for line in run.stderr.splitlines() if line.startswith("verify:")]
    ok = run.returncode == 0 and bool(checks)
    report("11", ok, f"{name} --verify: exit {run.returncode}, {len(checks)} oracle checks")
    assert ok, run.stderr
