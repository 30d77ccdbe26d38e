"""Interference power collected by a quantum channel sharing a fiber with WDM traffic.

Three mechanisms are modelled: spontaneous Raman scattering (SpRS) from every
classical channel, four-wave mixing (FWM) among phase-matched classical triples,
and linear leakage from the classical transmitter at the quantum frequency (seen
directly when co-propagating, via Rayleigh backscattering when
counter-propagating). Closed forms are evaluated by :func:`total_noise`; the
longitudinal equations are integrated numerically by :func:`propagate_ode`,
which serves as an independent check.

Units: km, 1/km, W, THz (frequency), GHz (grid spacing and slot width),
ps^2/km (dispersion), 1/(W km) (nonlinearity).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import exprel

from . import fiber as fib
from .errors import ConfigurationError, ContractError, IntegrationError
from .units import thz_to_nm

GRID_TOLERANCE = 1e-6  # fraction of a grid slot


class Direction(enum.Enum):
    """Propagation of the quantum signal relative to the classical traffic."""

    FORWARD = "fwd"
    BACKWARD = "bwd"

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        aliases = {"fwd": cls.FORWARD, "forward": cls.FORWARD, "co": cls.FORWARD,
                   "bwd": cls.BACKWARD, "backward": cls.BACKWARD, "counter": cls.BACKWARD}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown direction {value!r}") from None


@dataclass(frozen=True)
class Channel:
    index: int
    frequency: float  # THz
    launch_power: float = 0.0  # W, summed over both polarizations
    kurtosis: float = 2.0
    role: str = "classical"

    def __post_init__(self):
        if self.launch_power < 0:
            raise ConfigurationError(f"channel {self.index}: negative launch power")
        if self.role not in ("classical", "quantum"):
            raise ConfigurationError(f"channel {self.index}: unknown role {self.role!r}")


@dataclass(frozen=True)
class ChannelPlan:
    """Classical WDM grid: channel ``n`` sits at ``anchor + n * spacing``."""

    channels: tuple[Channel, ...]
    anchor_thz: float = 193.1
    spacing_ghz: float = 50.0
    slot_bandwidth_ghz: float = 50.0
    leakage_floor_w_per_ghz: float = 1e-13

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.spacing_ghz <= 0 or self.slot_bandwidth_ghz <= 0:
            raise ConfigurationError("grid spacing and slot bandwidth must be positive")
        if self.leakage_floor_w_per_ghz < 0:
            raise ConfigurationError("leakage floor must be non-negative")
        indices = [ch.index for ch in self.channels]
        if len(set(indices)) != len(indices):
            raise ConfigurationError("duplicate channel indices")
        if sum(ch.role == "quantum" for ch in self.channels) > 1:
            raise ConfigurationError("at most one quantum channel per plan")
        tol = GRID_TOLERANCE * self.spacing_thz
        for ch in self.channels:
            if abs(ch.frequency - self.frequency_of(ch.index)) > tol:
                raise ConfigurationError(f"channel {ch.index} is off the grid")

    @property
    def spacing_thz(self) -> float:
        return self.spacing_ghz * 1e-3

    @property
    def leakage_power(self) -> float:
        """Unfiltered transmitter power falling in one quantum slot, W."""
        return self.leakage_floor_w_per_ghz * self.slot_bandwidth_ghz

    @property
    def classical(self) -> tuple[Channel, ...]:
        return tuple(ch for ch in self.channels if ch.role == "classical")

    @property
    def active(self) -> tuple[Channel, ...]:
        return tuple(ch for ch in self.classical if ch.launch_power > 0)

    @property
    def quantum(self) -> Channel | None:
        return next((ch for ch in self.channels if ch.role == "quantum"), None)

    def frequency_of(self, index):
        return self.anchor_thz + np.asarray(index) * self.spacing_thz

    def grid_position(self, frequency_thz: float) -> float:
        return (frequency_thz - self.anchor_thz) / self.spacing_thz

    def on_grid(self, frequency_thz: float) -> bool:
        pos = self.grid_position(frequency_thz)
        return abs(pos - round(pos)) <= GRID_TOLERANCE

    def snap(self, frequency_thz):
        pos = np.round((np.asarray(frequency_thz) - self.anchor_thz) / self.spacing_thz)
        return self.frequency_of(pos)

    def without(self, index: int) -> "ChannelPlan":
        """Plan with the classical channel at ``index`` deallocated."""
        return replace(self, channels=tuple(ch for ch in self.channels
                                            if not (ch.index == index and ch.role == "classical")))

    def scaled(self, factor: float) -> "ChannelPlan":
        """Multiply every classical launch power by ``factor``."""
        return replace(self, channels=tuple(
            replace(ch, launch_power=ch.launch_power * factor) if ch.role == "classical" else ch
            for ch in self.channels))

    def band(self) -> tuple[float, float]:
        """Lowest and highest active classical frequency, THz."""
        f = [ch.frequency for ch in self.active]
        if not f:
            raise ConfigurationError("plan has no active classical channels")
        return min(f), max(f)

    @classmethod
    def fill(cls, f_lo_thz: float, f_hi_thz: float, count: int, power_w: float,
             anchor_thz: float = 193.1, spacing_ghz: float = 50.0, kurtosis: float = 2.0,
             **kwargs) -> "ChannelPlan":
        """``count`` equal-power channels centred between two frequencies."""
        spacing = spacing_ghz * 1e-3
        centre = 0.5 * (f_lo_thz + f_hi_thz)
        first = int(round((centre - anchor_thz) / spacing - 0.5 * (count - 1)))
        channels = tuple(
            Channel(n, anchor_thz + n * spacing, power_w, kurtosis)
            for n in range(first, first + count)
        )
        return cls(channels, anchor_thz=anchor_thz, spacing_ghz=spacing_ghz, **kwargs)


@dataclass(frozen=True)
class PhaseMismatch:
    delta_alpha: np.ndarray  # 1/km
    delta_beta: np.ndarray  # 1/km


@dataclass(frozen=True)
class FwmTerms:
    """Phase-matched classical triples feeding the quantum slot."""

    h: np.ndarray
    k: np.ndarray
    l: np.ndarray
    power_product: np.ndarray  # W^3
    weight: np.ndarray  # zeta_h when h == l, else 4
    mismatch: PhaseMismatch
    alpha_i: float
    gamma_eff_i: float

    def __len__(self):
        return len(self.h)


@dataclass
class NoiseBreakdown:
    """Interference power (W) at the receiver, split by mechanism."""

    sprs: np.ndarray | float
    fwm: np.ndarray | float
    leakage: np.ndarray | float
    direction: Direction = Direction.FORWARD
    sprs_by_channel: np.ndarray | None = field(default=None, repr=False)
    fwm_by_term: np.ndarray | None = field(default=None, repr=False)
    z: np.ndarray | None = field(default=None, repr=False)

    @property
    def total(self):
        return self.sprs + self.fwm + self.leakage


# ---------------------------------------------------------------------------
# kernels


def delta_beta(beta2_i, f_i, f_h, f_k, f_l):
    """Propagation-constant mismatch (1/km) from absolute frequencies (THz)."""
    f_i, f_h, f_k, f_l = (np.asarray(x, dtype=float) for x in (f_i, f_h, f_k, f_l))
    return 2.0 * np.pi**2 * np.asarray(beta2_i) * (f_i**2 - f_h**2 + f_k**2 - f_l**2)


def delta_beta_grid(beta2_i, i, h, k, l, spacing_ghz):
    """Mismatch on an evenly spaced grid; requires ``i - h + k - l == 0``."""
    i, h, k, l = (np.asarray(x, dtype=np.int64) for x in (i, h, k, l))
    if np.any(i - h + k - l != 0):
        raise ContractError("indices violate the phase-matching condition i - h + k - l = 0")
    df = spacing_ghz * 1e-3
    return 2.0 * np.pi**2 * np.asarray(beta2_i) * (i * i - h * h + k * k - l * l) * df * df


def omega_sprs(alpha_i, alpha_h, length, direction=Direction.FORWARD):
    """Longitudinal SpRS kernel (km)."""
    direction = Direction.parse(direction)
    a_i = np.asarray(alpha_i, dtype=float)
    a_h = np.asarray(alpha_h, dtype=float)
    L = np.asarray(length, dtype=float)
    if direction is Direction.FORWARD:
        return L * exprel((a_i - a_h) * L) * np.exp(-a_i * L)
    s = a_i + a_h
    return L * exprel(-s * L)


def _fwm_field_sq(delta_alpha, dbeta, length):
    """|int_0^L exp((da/2 - j db) z) dz|^2 evaluated without cancellation."""
    c = 0.5 * np.asarray(delta_alpha, dtype=float) - 1j * np.asarray(dbeta, dtype=float)
    L = np.asarray(length, dtype=float)
    x = c * L
    small = np.abs(x) < 1e-8
    safe_c = np.where(small, 1.0, c)
    val = np.where(small, L * (1.0 + 0.5 * x), np.expm1(x) / safe_c)
    return np.abs(val) ** 2


def _fwm_weight(kurtosis_h, degenerate):
    return np.where(np.asarray(degenerate, dtype=bool), np.asarray(kurtosis_h, dtype=float), 4.0)


def chi_exact(delta_alpha, dbeta, alpha_i, length, kurtosis_h=2.0, degenerate=False):
    """Closed-form FWM kernel (km^2), including the oscillating term."""
    w = _fwm_weight(kurtosis_h, degenerate)
    # (e^{aL} - 2 e^{aL/2} cos(bL) + 1) / (a^2 + 4 b^2) == |F|^2 / 4
    L = np.asarray(length, dtype=float)
    return 0.25 * w * _fwm_field_sq(delta_alpha, dbeta, L) * np.exp(-np.asarray(alpha_i) * L)


def chi_avg(delta_alpha, dbeta, alpha_i, length, kurtosis_h=2.0, degenerate=False):
    """Linearly averaged FWM kernel (km^2): the cosine term is dropped."""
    w = _fwm_weight(kurtosis_h, degenerate)
    a = np.asarray(delta_alpha, dtype=float)
    b = np.asarray(dbeta, dtype=float)
    L = np.asarray(length, dtype=float)
    return w * (np.exp(a * L) + 1.0) / (a * a + 4.0 * b * b) * np.exp(-np.asarray(alpha_i) * L)


def rho_fwm(delta_alpha, dbeta, alpha_i, z, kurtosis_h=2.0, degenerate=False):
    """Local FWM efficiency rho(z) (km) entering the longitudinal equation."""
    w = _fwm_weight(kurtosis_h, degenerate)
    a = np.asarray(delta_alpha, dtype=float)
    b = np.asarray(dbeta, dtype=float)
    z = np.asarray(z, dtype=float)
    num = 1.0 - np.exp(-(0.5 * a + 1j * b) * z)
    return w * np.real(num / (a + 2j * b)) * np.exp((a - alpha_i) * z)


def peak_length(alpha_i, alpha_h):
    """Length (km) at which co-propagating SpRS from ``f_h`` peaks."""
    a_i = np.asarray(alpha_i, dtype=float)
    a_h = np.asarray(alpha_h, dtype=float)
    if np.any(a_i <= 0) or np.any(a_h <= 0):
        raise ValueError("attenuation coefficients must be positive")
    u = a_h / a_i - 1.0
    small = np.abs(u) < 1e-6
    safe = np.where(small, 1.0, u)
    ratio = np.where(small, 1.0 - u / 2.0 + u * u / 3.0, np.log1p(safe) / safe)
    return ratio / a_i


def effective_length(mechanism: str, alpha_i, alpha_h=None, delta_alpha=None, length=np.inf):
    """Effective interaction length (km) of one co-propagating contribution.

    The contribution is integrated over the span and normalized to its peak
    value. ``mechanism`` is ``"sprs"``, ``"fwm"`` (averaged kernel) or
    ``"linear"``.
    """
    mech = mechanism.lower()
    a_i = np.asarray(alpha_i, dtype=float)
    L = np.asarray(length, dtype=float)
    if mech == "linear":
        return np.where(np.isinf(L), 1.0 / a_i, -np.expm1(-a_i * np.where(np.isinf(L), 0, L)) / a_i)
    if mech == "fwm":
        if delta_alpha is None:
            raise ValueError("FWM effective length needs delta_alpha")
        decay = a_i - np.asarray(delta_alpha, dtype=float)  # alpha_h + alpha_k + alpha_l
        finite_L = np.where(np.isinf(L), 0.0, L)
        first = np.where(np.isinf(L), 1.0 / decay, -np.expm1(-decay * finite_L) / decay)
        second = np.where(np.isinf(L), 1.0 / a_i, -np.expm1(-a_i * finite_L) / a_i)
        return 0.5 * (first + second)
    if mech == "sprs":
        if alpha_h is None:
            raise ValueError("SpRS effective length needs alpha_h")
        a_h = np.asarray(alpha_h, dtype=float)
        lpk = peak_length(a_i, a_h)
        peak = omega_sprs(a_i, a_h, lpk, Direction.FORWARD)
        finite_L = np.where(np.isinf(L), 0.0, L)
        # int_0^L (e^{-a_h z} - e^{-a_i z}) / (a_i - a_h) dz, stable near a_i == a_h
        area = _sprs_area(a_i, a_h, finite_L)
        area_inf = 1.0 / (a_i * a_h)
        return np.where(np.isinf(L), area_inf, area) / peak
    raise ValueError(f"unknown mechanism {mechanism!r}")


def _sprs_area(a_i, a_h, L):
    d = a_i - a_h
    small = np.abs(d * L) < 1e-6
    safe = np.where(small, 1.0, d)
    exact = (-np.expm1(-a_h * L) / a_h + np.expm1(-a_i * L) / a_i) / safe
    # d -> 0: int_0^L z e^{-a z} dz
    a = 0.5 * (a_i + a_h)
    limit = (1.0 - np.exp(-a * L) * (1.0 + a * L)) / (a * a)
    return np.where(small, limit, exact)


# ---------------------------------------------------------------------------
# combinatorics


def fwm_count(n_channels: int, i: int) -> int:
    """Number of phase-matched (h, l) pairs hitting slot ``i`` of an N-channel band,
    with the quantum slot itself excluded from h, k and l."""
    N, i = int(n_channels), int(i)
    if N < 1:
        raise ValueError("need at least one channel")
    if i < -N + 1 or i > 2 * N - 2:
        return 0
    if i < 0:
        num = N * N + N + 2 * N * i + i + i * i
    elif i < N:
        num = N * N - 5 * N + 2 * N * i - 2 * i - 2 * i * i + 4 + 2 * abs(2 * i - N + 1)
    else:
        num = 4 * N * N - 2 * N - 4 * N * i + i + i * i
    return num // 2


def fwm_count_bruteforce(n_channels: int, i: int) -> int:
    N = int(n_channels)
    count = 0
    for h in range(N):
        for l in range(N):
            k = h + l - i
            if 0 <= k < N and i not in (h, k, l):
                count += 1
    return count


def fwm_density(offset):
    """Continuum limit of the normalized FWM pair count versus band offset.

    ``offset`` is ``(f_i - f_centre) / B_W``; the density integrates to one
    and vanishes beyond one bandwidth from the band edges.
    """
    d = np.asarray(offset, dtype=float)
    inner = 0.75 - d * d
    outer = 0.5 * (np.abs(d) - 1.5) ** 2
    out = np.where(np.abs(d) <= 0.5, inner, outer)
    return np.where(np.abs(d) < 1.5, out, 0.0)


def fwm_count_normalized(n_channels: int):
    """Band offsets and ``C_FWM / N^2`` for every slot that can receive FWM."""
    N = int(n_channels)
    idx = np.arange(-N + 1, 2 * N - 1)
    counts = np.array([fwm_count(N, i) for i in idx], dtype=float)
    offsets = (idx - 0.5 * (N - 1)) / N
    return offsets, counts / N**2


# ---------------------------------------------------------------------------
# per-scenario assembly


@dataclass(frozen=True)
class _Link:
    """Fiber parameters sampled at the quantum and classical frequencies."""

    f_i: float
    alpha_i: float
    beta2_i: float
    gamma_eff_i: float
    rayleigh_i: float
    f_h: np.ndarray
    index_h: np.ndarray
    power_h: np.ndarray
    kurtosis_h: np.ndarray
    alpha_h: np.ndarray
    eta_h: np.ndarray


def _check_collision(plan: ChannelPlan, f_i: float):
    half = 0.5 * plan.slot_bandwidth_ghz * 1e-3
    for ch in plan.active:
        if abs(ch.frequency - f_i) < half * (1 - 1e-9) or plan.on_grid(f_i) and \
                round(plan.grid_position(f_i)) == ch.index:
            raise ConfigurationError(
                f"quantum slot at {f_i:.4f} THz collides with active classical channel {ch.index}")


def sample_link(plan: ChannelPlan, profile: fib.FiberProfile, f_i: float) -> _Link:
    _check_collision(plan, f_i)
    lam_i = float(thz_to_nm(f_i))
    active = plan.active
    f_h = np.array([ch.frequency for ch in active], dtype=float)
    if f_h.size:
        alpha_h = fib.attenuation(profile, thz_to_nm(f_h))
        eta_h = fib.sprs_efficiency(profile, f_i, f_h, plan.slot_bandwidth_ghz)
    else:
        alpha_h = eta_h = np.zeros(0)
    return _Link(
        f_i=float(f_i),
        alpha_i=float(fib.attenuation(profile, lam_i)),
        beta2_i=float(fib.beta2(profile, lam_i)),
        gamma_eff_i=float(fib.gamma_eff(profile, lam_i)),
        rayleigh_i=float(fib.rayleigh_coeff(profile, lam_i)),
        f_h=f_h,
        index_h=np.array([ch.index for ch in active], dtype=np.int64),
        power_h=np.array([ch.launch_power for ch in active], dtype=float),
        kurtosis_h=np.array([ch.kurtosis for ch in active], dtype=float),
        alpha_h=np.asarray(alpha_h, dtype=float),
        eta_h=np.asarray(eta_h, dtype=float),
    )


def fwm_terms(plan: ChannelPlan, link: _Link) -> FwmTerms:
    """Enumerate (h, l) pairs with k = h + l - i among the active channels.

    On-grid quantum frequencies use the indexed mismatch. Off the grid, the
    triples whose product falls in the slot nearest to ``f_i`` are kept, and the
    mismatch is evaluated from the actual frequencies at the product frequency
    ``f_h - f_k + f_l``, where the generated light is (the Taylor form is only
    valid when the four frequencies conserve energy).
    """
    pos = plan.grid_position(link.f_i)
    i = int(round(pos))
    on_grid = abs(pos - i) <= GRID_TOLERANCE
    idx = link.index_h
    n = idx.size
    empty = np.zeros(0, dtype=np.int64)
    if n == 0:
        mm = PhaseMismatch(np.zeros(0), np.zeros(0))
        return FwmTerms(empty, empty, empty, np.zeros(0), np.zeros(0), mm, link.alpha_i,
                        link.gamma_eff_i)
    lookup = {int(v): p for p, v in enumerate(idx)}
    hh, ll = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    hh, ll = hh.ravel(), ll.ravel()
    k_index = idx[hh] + idx[ll] - i
    kk = np.array([lookup.get(int(v), -1) for v in k_index], dtype=np.int64)
    keep = (kk >= 0) & (idx[hh] != i) & (idx[ll] != i) & (k_index != i)
    hh, ll, kk = hh[keep], ll[keep], kk[keep]

    delta_alpha = link.alpha_i - link.alpha_h[hh] - link.alpha_h[kk] - link.alpha_h[ll]
    if on_grid:
        dbeta = delta_beta_grid(link.beta2_i, i, idx[hh], idx[kk], idx[ll], plan.spacing_ghz)
    else:
        f_gen = link.f_h[hh] - link.f_h[kk] + link.f_h[ll]
        dbeta = delta_beta(link.beta2_i, f_gen, link.f_h[hh], link.f_h[kk], link.f_h[ll])
    degenerate = hh == ll
    weight = np.where(degenerate, link.kurtosis_h[hh], 4.0)
    power = link.power_h[hh] * link.power_h[kk] * link.power_h[ll]
    return FwmTerms(hh, kk, ll, power, weight, PhaseMismatch(delta_alpha, dbeta),
                    link.alpha_i, link.gamma_eff_i)


def total_noise(plan: ChannelPlan, profile: fib.FiberProfile, f_i: float, length,
                direction=Direction.FORWARD, fwm_kernel: str = "exact") -> NoiseBreakdown:
    """Closed-form interference power at the receiver of the quantum channel.

    ``length`` may be an array; the breakdown then holds one value per length.
    ``fwm_kernel`` selects the exact (``"exact"``) or averaged (``"avg"``) FWM
    kernel. Counter-propagating FWM is neglected.
    """
    direction = Direction.parse(direction)
    L = np.asarray(length, dtype=float)
    if np.any(L < 0):
        raise ValueError("fiber length must be non-negative")
    link = sample_link(plan, profile, f_i)

    omega = omega_sprs(link.alpha_i, link.alpha_h[:, None], L.reshape(1, -1), direction)
    sprs_by_channel = (link.eta_h * link.power_h)[:, None] * omega
    sprs = sprs_by_channel.sum(axis=0)

    p_leak = plan.leakage_power
    if direction is Direction.FORWARD:
        leakage = p_leak * np.exp(-link.alpha_i * L.ravel())
        terms = fwm_terms(plan, link)
        kernel = {"exact": chi_exact, "avg": chi_avg}[fwm_kernel]
        # terms.weight already holds zeta_h or 4, so pass it as the degenerate weight
        chi = kernel(terms.mismatch.delta_alpha[:, None], terms.mismatch.delta_beta[:, None],
                     link.alpha_i, L.reshape(1, -1), terms.weight[:, None], True)
        fwm_by_term = link.gamma_eff_i**2 * terms.power_product[:, None] * chi
        fwm = fwm_by_term.sum(axis=0)
    else:
        leakage = link.rayleigh_i * p_leak * L.ravel() * exprel(-2.0 * link.alpha_i * L.ravel())
        fwm_by_term = np.zeros((0, L.size))
        fwm = np.zeros(L.size)

    def shape(x):
        return x.reshape(L.shape) if L.ndim else float(x[0])

    return NoiseBreakdown(
        sprs=shape(sprs), fwm=shape(fwm), leakage=shape(leakage), direction=direction,
        sprs_by_channel=sprs_by_channel if L.ndim else sprs_by_channel[:, 0],
        fwm_by_term=fwm_by_term if L.ndim else fwm_by_term[:, 0],
    )


def propagate_ode(plan: ChannelPlan, profile: fib.FiberProfile, f_i: float, length: float,
                  direction=Direction.FORWARD, rtol: float = 1e-8, z_eval: Sequence[float] | None = None,
                  max_step: float = np.inf, step_per_period: float = 0.25) -> NoiseBreakdown:
    """Integrate the longitudinal power equations with an adaptive RK4(5) scheme.

    The state holds the SpRS, FWM and leakage powers separately. Co-propagating
    noise is integrated from z = 0 to L; counter-propagating noise from z = L
    (where it is zero) back to the receiver at z = 0. ``z_eval`` requests the
    power profile at intermediate positions.

    The step is capped at ``step_per_period`` times the period of the fastest
    phase mismatch; the error estimate alone does not see the oscillation and
    would alias over it.
    """
    direction = Direction.parse(direction)
    L = float(length)
    link = sample_link(plan, profile, f_i)
    a_i = link.alpha_i
    sprs_amp = link.eta_h * link.power_h
    p_leak = plan.leakage_power

    if direction is Direction.FORWARD:
        terms = fwm_terms(plan, link)
        # (h, l) and (l, h) are identical terms; keep one of each with double weight
        keep = terms.h <= terms.l
        mult = np.where(terms.h[keep] == terms.l[keep], 1.0, 2.0)
        da = terms.mismatch.delta_alpha[keep]
        db = terms.mismatch.delta_beta[keep]
        w = terms.weight[keep]
        coef = link.gamma_eff_i**2 * terms.power_product[keep] * mult
        if db.size and np.abs(db).max() > 0:
            max_step = min(max_step, step_per_period * 2.0 * np.pi / np.abs(db).max())
        amp = coef * w / (da + 2j * db)
        grow = da - a_i
        beat = grow - (0.5 * da + 1j * db)

        def source(z):
            s = np.dot(sprs_amp, np.exp(-link.alpha_h * z))
            f = np.dot(amp, np.exp(grow * z) - np.exp(beat * z)).real
            return s, f, 0.0

        y0 = np.array([0.0, 0.0, p_leak])
        span = (0.0, L)
        # rough magnitudes for absolute tolerances, from the sources alone
        scale = np.array([
            max(sprs_amp.sum() * L, 1e-300),
            max(np.abs(coef * w).sum() * L * L, 1e-300),
            max(p_leak, 1e-300),
        ])
    else:
        def source(z):
            s = np.dot(sprs_amp, np.exp(-link.alpha_h * z))
            return s, 0.0, link.rayleigh_i * p_leak * np.exp(-a_i * z)

        y0 = np.zeros(3)
        span = (L, 0.0)
        scale = np.array([
            max(sprs_amp.sum() * L, 1e-300),
            1e-300,
            max(link.rayleigh_i * p_leak * L, 1e-300),
        ])
    sign = 1.0 if direction is Direction.FORWARD else -1.0

    def rhs(z, y):
        s = source(z)
        return sign * (np.array(s) - a_i * y)

    t_eval = None
    if z_eval is not None:
        t_eval = np.asarray(z_eval, dtype=float)
        if direction is Direction.BACKWARD:
            t_eval = t_eval[::-1]
    sol = solve_ivp(rhs, span, y0, method="RK45", rtol=rtol, atol=scale * rtol * 1e-3,
                    t_eval=t_eval, max_step=max_step)
    if not sol.success:
        raise IntegrationError(f"ODE integration failed at f_i={f_i:.4f} THz, L={L:g} km: "
                               f"{sol.message} (nfev={sol.nfev})")
    if z_eval is not None:
        ys = sol.y if direction is Direction.FORWARD else sol.y[:, ::-1]
        z = np.asarray(z_eval, dtype=float)
        return NoiseBreakdown(ys[0], ys[1], ys[2], direction, z=z)
    end = sol.y[:, -1]
    return NoiseBreakdown(float(end[0]), float(end[1]), float(end[2]), direction,
                          z=np.array([0.0 if direction is Direction.BACKWARD else L]))
