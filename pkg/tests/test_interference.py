from __future__ import annotations

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from coexist import fiber as fib
from coexist import interference as itf
from coexist.errors import ConfigurationError, ContractError
from coexist.interference import Direction
from coexist.units import dbm_to_watt, nm_to_thz

PROFILE = fib.default_fiber()
FWD, BWD = Direction.FORWARD, Direction.BACKWARD

alpha = st.floats(0.01, 0.2)
length = st.floats(0.1, 150.0)


# frozen from adaptive quadrature of the defining integrals at 30 digits
@pytest.mark.parametrize("da,db,ai,L,w,expected", [
    (-0.1, 0.3, 0.05, 30.0, 4.0, 3.5131261185690431556),
    (-0.14, 0.0, 0.046, 50.0, 2.0, 9.6219549452581903311),
    (-0.2, 2.5, 0.07, 80.0, 4.0, 0.00059052003590973558966),
])
def test_chi_exact_reference(da, db, ai, L, w, expected):
    assert itf.chi_exact(da, db, ai, L, w, degenerate=True) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("ai,ah,L,fwd,bwd", [
    (0.05, 0.04, 25.0, 8.1374644311252217683, 9.940008615979284854),
    (0.0736, 0.046, 80.0, 0.8134224147563041958, 8.3606193051334532835),
])
def test_omega_reference(ai, ah, L, fwd, bwd):
    assert itf.omega_sprs(ai, ah, L, FWD) == pytest.approx(fwd, rel=1e-13)
    assert itf.omega_sprs(ai, ah, L, BWD) == pytest.approx(bwd, rel=1e-13)


@given(alpha, length)
def test_omega_forward_equal_loss_limit(a, L):
    assert itf.omega_sprs(a, a, L, FWD) == pytest.approx(L * np.exp(-a * L), rel=1e-12)


@given(alpha, alpha, length)
def test_backward_kernel_bounded_by_saturation(ai, ah, L):
    assert itf.omega_sprs(ai, ah, L, BWD) <= 1.0 / (ai + ah) * (1 + 1e-12)


@settings(max_examples=50)
@given(alpha, alpha)
def test_peak_length_is_stationary(ai, ah):
    z = float(itf.peak_length(ai, ah))
    h = 1e-4 * z
    left = itf.omega_sprs(ai, ah, z - h, FWD)
    mid = itf.omega_sprs(ai, ah, z, FWD)
    right = itf.omega_sprs(ai, ah, z + h, FWD)
    assert mid >= left and mid >= right


@given(st.floats(-0.3, -0.02), st.floats(0.0, 5.0), alpha, length)
def test_chi_exact_bounded_by_twice_average(da, db, ai, L):
    exact = itf.chi_exact(da, db, ai, L)
    avg = itf.chi_avg(da, db, ai, L)
    assume(np.isfinite(avg))
    # (1 - x)^2 <= 2(1 + x^2): the dropped cosine can at most double the average
    assert 0.0 <= exact <= 2.0 * avg * (1 + 1e-9)


def test_chi_exact_continuous_at_phase_match():
    a = itf.chi_exact(-0.1, 0.0, 0.05, 30.0)
    b = itf.chi_exact(-0.1, 1e-9, 0.05, 30.0)
    assert a == pytest.approx(b, rel=1e-9)


def test_rho_integrates_to_chi():
    from scipy.integrate import quad

    da, db, ai, L = -0.12, 0.4, 0.05, 40.0
    val, _ = quad(lambda z: itf.rho_fwm(da, db, ai, z) * np.exp(-ai * (L - z)), 0.0, L,
                  limit=200, epsabs=0, epsrel=1e-12)
    assert val == pytest.approx(itf.chi_exact(da, db, ai, L), rel=1e-9)


def test_effective_lengths_infinite_span():
    a = 0.05
    assert itf.effective_length("linear", a) == pytest.approx(1 / a)
    # equal losses: area 1/a^2 over a peak of 1/(a e)
    assert itf.effective_length("sprs", a, a) == pytest.approx(np.e / a, rel=1e-9)
    with pytest.raises(ValueError):
        itf.effective_length("fwm", a)


def test_delta_beta_grid_contract():
    with pytest.raises(ContractError):
        itf.delta_beta_grid(-20.0, 0, 1, 1, 1, 50.0)
    grid = itf.delta_beta_grid(-20.0, 5, 2, 1, 4, 50.0)
    f = 193.1 + 0.05 * np.array([5, 2, 1, 4])
    assert grid == pytest.approx(itf.delta_beta(-20.0, *f), rel=1e-6)


@given(st.integers(1, 40), st.integers(-45, 85))
def test_fwm_count_matches_enumeration(n, i):
    assert itf.fwm_count(n, i) == itf.fwm_count_bruteforce(n, i)


@given(st.floats(-2.0, 2.0))
def test_density_symmetric_and_nonnegative(d):
    assert itf.fwm_density(d) == pytest.approx(itf.fwm_density(-d))
    assert itf.fwm_density(d) >= 0.0


def test_density_normalized():
    from scipy.integrate import quad

    total, _ = quad(itf.fwm_density, -1.5, 1.5, points=[-0.5, 0.5])
    assert total == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# plans


def _plan(n=8, power_dbm=0.0):
    return itf.ChannelPlan.fill(193.0, 193.4, n, float(dbm_to_watt(power_dbm)))


def test_plan_validation():
    with pytest.raises(ConfigurationError):
        itf.ChannelPlan((itf.Channel(0, 193.1), itf.Channel(0, 193.1)))
    with pytest.raises(ConfigurationError):
        itf.ChannelPlan((itf.Channel(0, 193.12),))
    with pytest.raises(ConfigurationError):
        itf.Channel(0, 193.1, -1.0)


def test_collision_rejected():
    plan = _plan()
    f = plan.channels[3].frequency
    with pytest.raises(ConfigurationError, match="collides"):
        itf.total_noise(plan, PROFILE, f, 10.0)
    itf.total_noise(plan.without(plan.channels[3].index), PROFILE, f, 10.0)


def test_backward_has_no_fwm():
    plan = _plan()
    f = float(plan.frequency_of(plan.channels[0].index - 2))
    nb = itf.total_noise(plan, PROFILE, f, 20.0, BWD)
    assert nb.fwm == 0.0 and nb.sprs > 0.0 and nb.leakage > 0.0


def test_array_lengths_match_scalar():
    plan = _plan()
    f = float(nm_to_thz(1450.0))
    many = itf.total_noise(plan, PROFILE, f, np.array([5.0, 25.0, 60.0]))
    one = itf.total_noise(plan, PROFILE, f, 25.0)
    assert many.sprs[1] == pytest.approx(one.sprs, rel=1e-14)
    assert many.leakage[1] == pytest.approx(one.leakage, rel=1e-14)


def test_zero_length_forward():
    plan = _plan()
    f = float(plan.frequency_of(plan.channels[-1].index + 1))
    nb = itf.total_noise(plan, PROFILE, f, 0.0)
    assert nb.sprs == 0.0 and nb.fwm == 0.0
    assert nb.leakage == pytest.approx(plan.leakage_power)


def test_off_grid_point_uses_product_frequency():
    # just off a grid slot next to the band, FWM stays close to the on-grid value
    plan = _plan(16)
    f_on = float(plan.frequency_of(plan.channels[-1].index + 1))
    on = itf.total_noise(plan, PROFILE, f_on, 25.0).fwm
    off = itf.total_noise(plan, PROFILE, f_on + 1e-4, 25.0).fwm
    assert off == pytest.approx(on, rel=1e-3)


@pytest.mark.parametrize("direction", [FWD, BWD])
def test_ode_profile_matches_closed_form(direction):
    plan = _plan(6, 3.0)
    f = float(plan.frequency_of(plan.channels[0].index - 1))
    z = np.linspace(0.0, 30.0, 7)
    ode = itf.propagate_ode(plan, PROFILE, f, 30.0, direction, z_eval=z)
    if direction is FWD:
        closed = itf.total_noise(plan, PROFILE, f, z, direction)
        assert np.allclose(ode.sprs, closed.sprs, rtol=1e-6, atol=1e-25)
        assert np.allclose(ode.fwm, closed.fwm, rtol=1e-5, atol=1e-25)
    else:
        # counter-propagating noise builds up towards the receiver at z = 0
        closed = itf.total_noise(plan, PROFILE, f, 30.0, direction)
        assert ode.sprs[0] == pytest.approx(closed.sprs, rel=1e-6)
        assert ode.leakage[0] == pytest.approx(closed.leakage, rel=1e-6)
        assert ode.sprs[-1] == 0.0 and np.all(np.diff(ode.sprs) < 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(2, 12), st.floats(1.0, 80.0))
def test_power_scaling(k, n, L):
    plan = _plan(n, -3.0)
    f = float(plan.frequency_of(plan.channels[0].index - 1))
    a = itf.total_noise(plan, PROFILE, f, L)
    b = itf.total_noise(plan.scaled(k), PROFILE, f, L)
    assert b.sprs == pytest.approx(k * a.sprs, rel=1e-12)
    assert b.fwm == pytest.approx(k**3 * a.fwm, rel=1e-12)
    assert b.leakage == pytest.approx(a.leakage, rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 60.0), st.floats(1.0, 40.0))
def test_forward_noise_monotone_in_leakage_floor(L, extra):
    base = _plan(4)
    louder = itf.ChannelPlan(base.channels, leakage_floor_w_per_ghz=base.leakage_floor_w_per_ghz
                             * (1 + extra))
    f = float(nm_to_thz(1500.0))
    assert itf.total_noise(louder, PROFILE, f, L).total > itf.total_noise(base, PROFILE, f, L).total
