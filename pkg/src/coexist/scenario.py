"""Sweeps, band averages and placement search over coexistence scenarios.

A :class:`Scenario` fixes the fiber, the classical plan, the link length and the
QKD receiver. Sweeps place the quantum channel at each requested wavelength,
evaluate the closed-form interference for each direction and convert it into
QBER, excess noise and key rates. When the quantum wavelength falls inside an
active classical slot, that classical channel is deallocated for that point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import fiber as fib
from . import interference as itf
from . import qkd
from .errors import ConfigurationError, CoexistError, DomainError
from .interference import ChannelPlan, Direction
from .units import dbm_to_watt, nm_to_thz, thz_to_nm


@dataclass(frozen=True)
class Band:
    name: str
    lo_nm: float
    hi_nm: float

    def __post_init__(self):
        if not self.lo_nm < self.hi_nm:
            raise ValueError(f"band {self.name}: empty wavelength range")

    def contains(self, wavelength_nm) -> np.ndarray:
        lam = np.asarray(wavelength_nm, dtype=float)
        return (lam >= self.lo_nm) & (lam < self.hi_nm)

    @property
    def f_lo_thz(self) -> float:
        return float(nm_to_thz(self.hi_nm))

    @property
    def f_hi_thz(self) -> float:
        return float(nm_to_thz(self.lo_nm))


BANDS = {
    b.name: b
    for b in (
        Band("O", 1260.0, 1360.0),
        Band("E", 1360.0, 1460.0),
        Band("S", 1460.0, 1530.0),
        Band("C", 1530.0, 1565.0),
        Band("L", 1565.0, 1625.0),
        Band("U", 1625.0, 1675.0),
    )
}


def band_of(wavelength_nm: float) -> str | None:
    for band in BANDS.values():
        if band.contains(wavelength_nm):
            return band.name
    return None


class Protocol(enum.Enum):
    BB84 = "bb84"
    GMCS_HOM = "gmcs-hom"
    GMCS_HET = "gmcs-het"

    @classmethod
    def parse(cls, value) -> "Protocol":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown protocol {value!r}") from None

    @property
    def detection(self) -> qkd.Detection | None:
        return {Protocol.GMCS_HOM: qkd.Detection.HOMODYNE,
                Protocol.GMCS_HET: qkd.Detection.HETERODYNE}.get(self)


@dataclass(frozen=True)
class QkdConfig:
    dv: qkd.DvReceiverParams = field(default_factory=qkd.DvReceiverParams)
    cv: qkd.CvReceiverParams = field(default_factory=qkd.CvReceiverParams)

    def __post_init__(self):
        if self.cv.v_a is None and self.cv.beta_ec < 1.0:
            raise ConfigurationError("beta_ec < 1 needs a finite modulation variance v_a")


@dataclass(frozen=True)
class Scenario:
    fiber: fib.FiberProfile
    plan: ChannelPlan
    length_km: float = 25.0
    directions: tuple[Direction, ...] = (Direction.FORWARD, Direction.BACKWARD)
    qkd: QkdConfig = field(default_factory=QkdConfig)
    extra_excess_noise: float = 0.0  # shot-noise units
    fwm_kernel: str = "exact"
    name: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "directions",
                           tuple(Direction.parse(d) for d in self.directions))
        if not self.directions:
            raise ConfigurationError("scenario needs at least one direction")
        if not self.length_km > 0:
            raise ConfigurationError("link length must be positive")
        if self.extra_excess_noise < 0:
            raise ConfigurationError("extra excess noise must be non-negative")
        if self.fwm_kernel not in ("exact", "avg"):
            raise ConfigurationError(f"unknown FWM kernel {self.fwm_kernel!r}")
        lo, hi = fib.ATTENUATION_RANGE_NM
        for ch in self.plan.channels:
            lam = float(thz_to_nm(ch.frequency))
            if not lo <= lam <= hi:
                raise ConfigurationError(
                    f"channel {ch.index} at {lam:.2f} nm lies outside the fiber model ({lo}-{hi} nm)")

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass
class SweepResult:
    """Grid of sweep results; 2-D arrays are indexed ``[length, wavelength]``."""

    wavelength_nm: np.ndarray
    length_km: np.ndarray
    frequency_thz: np.ndarray
    deallocated: np.ndarray  # index of the deallocated classical channel, or -1
    transmittance: np.ndarray
    noise: dict  # Direction -> {"sprs", "fwm", "leakage"} -> array
    qber: dict = field(default_factory=dict)  # Direction -> array
    excess_noise: dict = field(default_factory=dict)  # Direction -> array (SNU, incl. extra)
    skr: dict = field(default_factory=dict)  # (Protocol, Direction) -> array
    skr_limit: dict = field(default_factory=dict)  # Protocol -> array, no coexistence noise
    diagnostics: list = field(default_factory=list)

    @property
    def directions(self) -> tuple[Direction, ...]:
        return tuple(self.noise)

    def total_noise(self, direction) -> np.ndarray:
        parts = self.noise[Direction.parse(direction)]
        return parts["sprs"] + parts["fwm"] + parts["leakage"]

    def rate(self, protocol, direction) -> np.ndarray:
        return self.skr[(Protocol.parse(protocol), Direction.parse(direction))]

    def limit(self, protocol) -> np.ndarray:
        return self.skr_limit[Protocol.parse(protocol)]


# ---------------------------------------------------------------------------
# point evaluation


def _colliding_channel(plan: ChannelPlan, f_thz: float) -> int | None:
    half = 0.5 * plan.slot_bandwidth_ghz * 1e-3
    best = None
    for ch in plan.active:
        gap = abs(ch.frequency - f_thz)
        if gap < half * (1 - 1e-9) and (best is None or gap < best[0]):
            best = (gap, ch.index)
    return None if best is None else best[1]


def _point_noise(scenario: Scenario, f_thz: float, lengths: np.ndarray):
    plan = scenario.plan
    freed = _colliding_channel(plan, f_thz)
    if freed is not None:
        plan = plan.without(freed)
    out = {}
    try:
        for d in scenario.directions:
            out[d] = itf.total_noise(plan, scenario.fiber, f_thz, lengths, d, scenario.fwm_kernel)
    except CoexistError as exc:
        raise type(exc)(f"at {float(thz_to_nm(f_thz)):.3f} nm: {exc}") from exc
    except ValueError as exc:
        raise DomainError(f"at {float(thz_to_nm(f_thz)):.3f} nm: {exc}") from exc
    return out, (-1 if freed is None else freed)


def _frequencies(scenario: Scenario, wavelengths_nm, snap: bool):
    lam = np.asarray(wavelengths_nm, dtype=float).ravel()
    if lam.size > 1 and np.any(np.diff(lam) <= 0):
        raise ValueError("wavelength grid must be strictly increasing")
    f = nm_to_thz(lam)
    if snap:
        f = scenario.plan.snap(f)
        lam = thz_to_nm(f)
    return lam, np.asarray(f, dtype=float)


def default_wavelengths(lo_nm: float = 1260.0, hi_nm: float = 1675.0, step_nm: float = 1.0):
    n = int(round((hi_nm - lo_nm) / step_nm)) + 1
    return lo_nm + step_nm * np.arange(n)


def noise_spectrum(scenario: Scenario, wavelengths_nm=None, lengths_km=None,
                   snap: bool = False) -> SweepResult:
    """Per-mechanism interference at the receiver across a wavelength grid.

    With ``snap=True`` wavelengths move to the nearest WDM grid slot so that FWM
    uses indexed phase mismatch; otherwise off-grid points use their actual
    frequencies.
    """
    if wavelengths_nm is None:
        wavelengths_nm = default_wavelengths()
    lengths = np.atleast_1d(np.asarray(
        scenario.length_km if lengths_km is None else lengths_km, dtype=float))
    if np.any(lengths < 0):
        raise ValueError("lengths must be non-negative")
    lam, f = _frequencies(scenario, wavelengths_nm, snap)
    shape = (lengths.size, lam.size)
    noise = {d: {k: np.zeros(shape) for k in ("sprs", "fwm", "leakage")}
             for d in scenario.directions}
    freed = np.full(lam.size, -1, dtype=np.int64)
    for j, fj in enumerate(f):
        per_dir, freed[j] = _point_noise(scenario, float(fj), lengths)
        for d, nb in per_dir.items():
            noise[d]["sprs"][:, j] = nb.sprs
            noise[d]["fwm"][:, j] = nb.fwm
            noise[d]["leakage"][:, j] = nb.leakage
    alpha = fib.attenuation(scenario.fiber, lam) if lam.size else np.zeros(0)
    transmittance = np.exp(-np.outer(lengths, alpha))
    result = SweepResult(lam, lengths, f, freed, transmittance, noise)
    _fill_noise_metrics(result, scenario)
    return result


def _psd(result: SweepResult, direction, slot_hz: float):
    return qkd.noise_psd(result.total_noise(direction), slot_hz)


def _fill_noise_metrics(result: SweepResult, scenario: Scenario, extra_xi: float | None = None):
    extra = scenario.extra_excess_noise if extra_xi is None else extra_xi
    slot_hz = scenario.plan.slot_bandwidth_ghz * 1e9
    with np.errstate(divide="ignore", invalid="ignore"):
        for d in result.directions:
            psd = _psd(result, d, slot_hz)
            cond = qkd.ChannelCondition(result.transmittance, psd, result.frequency_thz)
            result.qber[d] = qkd.qber(cond, scenario.qkd.dv)
            result.excess_noise[d] = qkd.excess_noise_su(psd, result.frequency_thz) + extra


def _gmcs_rates(protocol: Protocol, T, xi, cv: qkd.CvReceiverParams, diagnostics: list):
    T = np.asarray(T, dtype=float)
    xi = np.broadcast_to(np.asarray(xi, dtype=float), T.shape)
    det = protocol.detection
    out = np.empty(T.shape)
    full = T >= 1.0
    if np.any(full):
        diagnostics.append(f"{protocol.value}: rate diverges at T = 1 (L = 0); reported as inf")
        out[full] = np.inf
    ok = ~full
    if cv.v_a is None:
        r = qkd.gmcs_skr_asymptotic(T[ok], xi[ok], det, clamp=False)
        if not cv.ideal:
            r = r - np.vectorize(qkd.receiver_penalty)(T[ok], xi[ok], det, cv.eta_rx, cv.v_el)
        out[ok] = np.maximum(r, 0.0)
    else:
        out[ok] = [qkd.gmcs_skr_finite(cv.v_a, t, x, det, cv.beta_ec, cv.eta_rx, cv.v_el)
                   for t, x in zip(T[ok], xi[ok])]
    return out


def protocol_rate(protocol, transmittance, psd, frequency_thz, config: QkdConfig,
                  extra_xi: float = 0.0, diagnostics: list | None = None):
    """Key rate for one protocol from transmittance and noise PSD (arrays allowed)."""
    protocol = Protocol.parse(protocol)
    diagnostics = [] if diagnostics is None else diagnostics
    if protocol is Protocol.BB84:
        cond = qkd.ChannelCondition(transmittance, psd, frequency_thz)
        return qkd.bb84_skr(qkd.qber(cond, config.dv), transmittance)
    xi = qkd.excess_noise_su(psd, frequency_thz) + extra_xi
    return _gmcs_rates(protocol, transmittance, xi, config.cv, diagnostics)


def _fill_rates(result: SweepResult, scenario: Scenario, protocols, extra_xi: float | None = None):
    extra = scenario.extra_excess_noise if extra_xi is None else extra_xi
    slot_hz = scenario.plan.slot_bandwidth_ghz * 1e9
    f = np.broadcast_to(result.frequency_thz, result.transmittance.shape)
    for p in protocols:
        p = Protocol.parse(p)
        for d in result.directions:
            result.skr[(p, d)] = protocol_rate(p, result.transmittance, _psd(result, d, slot_hz),
                                               f, scenario.qkd, extra, result.diagnostics)
        result.skr_limit[p] = protocol_rate(p, result.transmittance,
                                            np.zeros_like(result.transmittance), f,
                                            scenario.qkd, 0.0, result.diagnostics)
    result.diagnostics[:] = list(dict.fromkeys(result.diagnostics))
    return result


ALL_PROTOCOLS = (Protocol.BB84, Protocol.GMCS_HOM, Protocol.GMCS_HET)


def skr_vs_wavelength(scenario: Scenario, wavelengths_nm=None, protocols=ALL_PROTOCOLS,
                      snap: bool = False) -> SweepResult:
    """Key rates across wavelength at the scenario length, with loss-limited references.

    The reference removes coexistence noise and added excess noise but keeps
    the receiver model.
    """
    result = noise_spectrum(scenario, wavelengths_nm, snap=snap)
    return _fill_rates(result, scenario, protocols)


def skr_map(scenario: Scenario, wavelengths_nm=None, lengths_km=None,
            protocols=ALL_PROTOCOLS, snap: bool = False) -> SweepResult:
    """Key rates over a wavelength by length grid."""
    if lengths_km is None:
        lengths_km = np.arange(1.0, 101.0)
    result = noise_spectrum(scenario, wavelengths_nm, lengths_km, snap=snap)
    return _fill_rates(result, scenario, protocols)


def apply_extra_excess_noise(scenario: Scenario, extra_xi, wavelengths_nm=None,
                             protocols=(Protocol.GMCS_HOM, Protocol.GMCS_HET)) -> dict:
    """One sweep per added flat excess noise, sharing the interference evaluation."""
    values = [float(x) for x in np.atleast_1d(extra_xi)]
    if any(x < 0 for x in values):
        raise ValueError("added excess noise must be non-negative")
    base = noise_spectrum(scenario, wavelengths_nm)
    out = {}
    for x in values:
        res = replace(base, qber=dict(base.qber), excess_noise={}, skr={}, skr_limit={},
                      diagnostics=[])
        _fill_noise_metrics(res, scenario, extra_xi=x)
        out[x] = _fill_rates(res, scenario, protocols, extra_xi=x)
    return out


def multi_band_compare(scenarios: dict, wavelengths_nm=None, protocols=ALL_PROTOCOLS) -> dict:
    """Run the same wavelength sweep for each named scenario."""
    return {name: skr_vs_wavelength(sc, wavelengths_nm, protocols)
            for name, sc in scenarios.items()}


# ---------------------------------------------------------------------------
# band averaging and placement


def _occupied_span(plan: ChannelPlan) -> tuple[float, float]:
    lo, hi = plan.band()
    half = 0.5 * plan.slot_bandwidth_ghz * 1e-3
    return lo - half, hi + half


def qkd_band_slots(plan: ChannelPlan, center_nm: float, width_nm: float) -> np.ndarray:
    """Grid slot frequencies (THz) whose centres lie inside the QKD band.

    A band narrower than one slot holds the single slot nearest its centre.
    """
    if width_nm < 0:
        raise ValueError("band width must be non-negative")
    f_lo = float(nm_to_thz(center_nm + 0.5 * width_nm))
    f_hi = float(nm_to_thz(center_nm - 0.5 * width_nm))
    n_lo = int(np.ceil(plan.grid_position(f_lo) - itf.GRID_TOLERANCE))
    n_hi = int(np.floor(plan.grid_position(f_hi) + itf.GRID_TOLERANCE))
    if n_hi < n_lo:
        return np.atleast_1d(plan.snap(nm_to_thz(center_nm))).astype(float)
    return np.asarray(plan.frequency_of(np.arange(n_lo, n_hi + 1)), dtype=float)


def band_average_skr(scenario: Scenario, center_nm: float, width_nm: float, protocol,
                     direction=None) -> float:
    """Mean key rate over the grid slots of a QKD band.

    The QKD band must not overlap the classical band.
    """
    direction = scenario.directions[0] if direction is None else Direction.parse(direction)
    slots = qkd_band_slots(scenario.plan, center_nm, width_nm)
    lo, hi = _occupied_span(scenario.plan)
    half = 0.5 * scenario.plan.slot_bandwidth_ghz * 1e-3
    if np.any((slots + half > lo) & (slots - half < hi)):
        raise ConfigurationError(
            f"QKD band {center_nm:g} nm +/- {0.5 * width_nm:g} nm overlaps the classical band")
    sc = scenario.replace(directions=(direction,))
    res = skr_vs_wavelength(sc, np.sort(thz_to_nm(slots)), (protocol,))
    return float(np.mean(res.rate(protocol, direction)[0]))


def band_average_curve(scenario: Scenario, centers_nm, width_nm: float, protocol,
                       direction=None) -> np.ndarray:
    """Band-averaged rate for each band centre, computing each slot once."""
    direction = scenario.directions[0] if direction is None else Direction.parse(direction)
    centers = np.asarray(centers_nm, dtype=float)
    slot_sets = [qkd_band_slots(scenario.plan, c, width_nm) for c in centers]
    lo, hi = _occupied_span(scenario.plan)
    half = 0.5 * scenario.plan.slot_bandwidth_ghz * 1e-3
    for c, s in zip(centers, slot_sets):
        if np.any((s + half > lo) & (s - half < hi)):
            raise ConfigurationError(f"QKD band at {c:g} nm overlaps the classical band")
    unique = np.unique(np.concatenate(slot_sets)) if slot_sets else np.zeros(0)
    sc = scenario.replace(directions=(direction,))
    res = skr_vs_wavelength(sc, np.sort(thz_to_nm(unique)), (protocol,))
    rate_by_f = dict(zip(np.round(res.frequency_thz, 9), res.rate(protocol, direction)[0]))
    return np.array([np.mean([rate_by_f[round(float(f), 9)] for f in s]) for s in slot_sets])


def optimize_placement(scenario: Scenario, protocol, direction=None, wavelengths_nm=None):
    """Wavelength with the highest key rate; ties go to the shorter wavelength.

    Points inside active classical slots are excluded from the search.
    """
    direction = scenario.directions[0] if direction is None else Direction.parse(direction)
    lam = default_wavelengths() if wavelengths_nm is None else np.asarray(wavelengths_nm, float)
    lam = np.sort(lam)
    free = np.array([_colliding_channel(scenario.plan, float(nm_to_thz(x))) is None for x in lam])
    if not np.any(free):
        raise ConfigurationError("search domain lies entirely inside active classical slots")
    sc = scenario.replace(directions=(direction,))
    res = skr_vs_wavelength(sc, lam[free], (protocol,))
    rates = res.rate(protocol, direction)[0]
    best = int(np.argmax(rates))  # first maximum, i.e. shortest wavelength
    return float(res.wavelength_nm[best]), float(rates[best])


# ---------------------------------------------------------------------------
# reference scenarios

REFERENCE_BANDS = {"C": 88, "S": 188, "L": 142}


def reference_plan(band: str = "C", power_dbm: float = -2.0, spacing_ghz: float = 50.0,
                   leakage_dbm_per_ghz: float = -100.0, kurtosis: float = 2.0,
                   anchor_thz: float = 193.1) -> ChannelPlan:
    """Fully loaded band with equal launch powers, centred on the band."""
    try:
        count = REFERENCE_BANDS[band]
    except KeyError:
        raise ConfigurationError(f"no reference loading for band {band!r}") from None
    b = BANDS[band]
    return ChannelPlan.fill(b.f_lo_thz, b.f_hi_thz, count, float(dbm_to_watt(power_dbm)),
                            anchor_thz=anchor_thz, spacing_ghz=spacing_ghz, kurtosis=kurtosis,
                            slot_bandwidth_ghz=spacing_ghz,
                            leakage_floor_w_per_ghz=float(dbm_to_watt(leakage_dbm_per_ghz)))


def reference_scenario(band: str = "C", length_km: float = 25.0, oh_scale: float = 0.0,
                       directions=(Direction.FORWARD, Direction.BACKWARD), **plan_kw) -> Scenario:
    fiber = fib.default_fiber().with_oh_scale(oh_scale)
    return Scenario(fiber, reference_plan(band, **plan_kw), length_km, tuple(directions),
                    name=f"reference-{band}")


__all__ = [
    "ALL_PROTOCOLS",
    "BANDS",
    "Band",
    "Protocol",
    "QkdConfig",
    "Scenario",
    "SweepResult",
    "apply_extra_excess_noise",
    "band_average_curve",
    "band_average_skr",
    "band_of",
    "default_wavelengths",
    "multi_band_compare",
    "noise_spectrum",
    "optimize_placement",
    "protocol_rate",
    "qkd_band_slots",
    "reference_plan",
    "reference_scenario",
    "skr_map",
    "skr_vs_wavelength",
]
