"""Secret-key rates of BB84 and Gaussian-modulated coherent-state (GMCS) QKD.

Noise enters through its power spectral density at the quantum frequency: as a
mean photon number per detection window for BB84, and as excess noise in
shot-noise units for GMCS. All rates are asymptotic, in bits per symbol.

GMCS rates use reverse reconciliation, ``r = beta_EC * I_AB - chi_EB``. The
Holevo bound is evaluated from the symplectic spectrum of Eve's two-mode state
in the entangling-cloner picture, either at finite modulation variance or in the
``V_A -> inf`` closed forms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.constants import h
from scipy.special import xlogy

from .errors import ContractError, DomainError

LN2 = np.log(2.0)
BB84_QBER_THRESHOLD = 0.11002786443835955

OMEGA = np.array([[0.0, 1.0, 0.0, 0.0],
                  [-1.0, 0.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0],
                  [0.0, 0.0, -1.0, 0.0]])


class Detection(enum.Enum):
    HOMODYNE = 1
    HETERODYNE = 2

    @property
    def mu(self) -> int:
        return self.value

    @classmethod
    def parse(cls, value) -> "Detection":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        if key in ("hom", "homodyne", "1"):
            return cls.HOMODYNE
        if key in ("het", "heterodyne", "2"):
            return cls.HETERODYNE
        raise ValueError(f"unknown detection {value!r}")


@dataclass(frozen=True)
class DvReceiverParams:
    """Single-photon receiver. ``r_det = B_det * tau_det`` (GHz * ns)."""

    r_det: float = 1.0
    b_det_ghz: float | None = None
    tau_det_ns: float | None = None
    dark_counts: float = 0.0
    eta_rx: float = 1.0

    def __post_init__(self):
        if self.b_det_ghz is not None and self.tau_det_ns is not None:
            product = self.b_det_ghz * self.tau_det_ns
            if not np.isclose(product, self.r_det, rtol=1e-9):
                raise ValueError(f"r_det={self.r_det} inconsistent with B_det*tau_det={product}")
        if self.r_det < 0 or self.dark_counts < 0:
            raise ValueError("r_det and dark counts must be non-negative")
        if not 0.0 < self.eta_rx <= 1.0:
            raise ValueError("eta_rx must lie in (0, 1]")

    @classmethod
    def from_window(cls, b_det_ghz: float, tau_det_ns: float, **kwargs) -> "DvReceiverParams":
        return cls(r_det=b_det_ghz * tau_det_ns, b_det_ghz=b_det_ghz, tau_det_ns=tau_det_ns, **kwargs)


@dataclass(frozen=True)
class CvReceiverParams:
    detection: Detection = Detection.HETERODYNE
    beta_ec: float = 1.0
    eta_rx: float = 1.0
    v_el: float = 0.0
    v_a: float | None = None  # None selects the V_A -> inf closed form

    def __post_init__(self):
        object.__setattr__(self, "detection", Detection.parse(self.detection))
        if not 0.0 < self.beta_ec <= 1.0:
            raise ValueError("beta_ec must lie in (0, 1]")
        if not 0.0 < self.eta_rx <= 1.0:
            raise ValueError("eta_rx must lie in (0, 1]")
        if self.v_el < 0:
            raise ValueError("electronic noise must be non-negative")
        if self.v_a is not None and self.v_a <= 0:
            raise ValueError("modulation variance must be positive")

    @property
    def ideal(self) -> bool:
        return self.beta_ec == 1.0 and self.eta_rx == 1.0 and self.v_el == 0.0


@dataclass(frozen=True)
class ChannelCondition:
    """Quantum-channel transmittance and noise PSD; fields may be arrays."""

    transmittance: float
    psd: float  # W/Hz at the quantum frequency
    frequency_thz: float

    def __post_init__(self):
        if np.any(np.asarray(self.psd) < 0):
            raise ValueError("noise PSD must be non-negative")

    @classmethod
    def from_link(cls, alpha_per_km: float, length_km: float, psd: float, frequency_thz: float):
        return cls(float(np.exp(-alpha_per_km * length_km)), psd, frequency_thz)


# ---------------------------------------------------------------------------
# noise conversion


def noise_psd(p_int, bandwidth_hz):
    """Flat noise PSD (W/Hz) of interference power spread over one slot."""
    if np.any(np.asarray(bandwidth_hz) <= 0):
        raise ValueError("slot bandwidth must be positive")
    return np.asarray(p_int, dtype=float) / bandwidth_hz


def photon_energy(frequency_thz):
    return h * np.asarray(frequency_thz, dtype=float) * 1e12


def mean_noise_photons(p_int, b_det_ghz, tau_det_ns, b_ch_ghz, frequency_thz):
    """Mean interference photons per detection window."""
    r_det = np.asarray(b_det_ghz) * np.asarray(tau_det_ns)
    return np.asarray(p_int) * r_det / (np.asarray(b_ch_ghz) * 1e9 * photon_energy(frequency_thz))


def qber(cond: ChannelCondition, dv: DvReceiverParams | None = None):
    """Quantum bit error rate with dark counts and receiver efficiency."""
    dv = dv or DvReceiverParams()
    T = np.asarray(cond.transmittance, dtype=float)
    if np.any(T <= 0):
        raise DomainError("transmittance must be positive to define a QBER")
    n_int = np.asarray(cond.psd) * dv.r_det / photon_energy(cond.frequency_thz)
    noisy = dv.eta_rx * n_int + dv.dark_counts
    return noisy / (dv.eta_rx * T + noisy)


def excess_noise_su(psd, frequency_thz):
    """Coexistence excess noise in shot-noise units, ``S / (2 h f)``."""
    return np.asarray(psd, dtype=float) / (2.0 * photon_energy(frequency_thz))


def shot_noise_variance(p_lo, b_el, r_v, frequency_thz):
    """Shot-noise variance in V^2 for LO power (W), bandwidth (Hz), gain (V/W)."""
    return p_lo * b_el * r_v**2 * photon_energy(frequency_thz)


def excess_noise_volts2(p_lo, b_el, r_v, p_int, b_ch_hz):
    """Coexistence excess noise in V^2 within the electronic bandwidth."""
    return p_lo * b_el * r_v**2 * p_int / (2.0 * b_ch_hz)


# ---------------------------------------------------------------------------
# BB84


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("probability outside [0, 1]")
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / LN2


def bb84_skr(qber_value, transmittance, clamp: bool = True):
    """Two-state BB84 key fraction ``(T/2) (1 - 2 H2(QBER))``.

    QBER above 1/2 is treated as 1/2; the entropy is symmetric and would
    otherwise credit a positive rate to an almost fully random channel.
    """
    q = np.minimum(np.asarray(qber_value, dtype=float), 0.5)
    r = 0.5 * np.asarray(transmittance) * (1.0 - 2.0 * binary_entropy(q))
    return np.maximum(r, 0.0) if clamp else r


# ---------------------------------------------------------------------------
# Gaussian states


@dataclass(frozen=True)
class GaussianCM:
    """Two-mode covariance matrix whose 2x2 blocks are all diagonal.

    Ordered ``(x1, p1, x2, p2)``::

        [[diag(omega_a, omega_b), diag(psi_a, -psi_b)],
         [diag(psi_a, -psi_b),    diag(phi_a, phi_b)]]
    """

    omega_a: float
    omega_b: float
    psi_a: float
    psi_b: float
    phi_a: float
    phi_b: float

    @classmethod
    def symmetric(cls, omega: float, psi: float, phi: float) -> "GaussianCM":
        return cls(omega, omega, psi, psi, phi, phi)

    @classmethod
    def from_matrix(cls, m) -> "GaussianCM":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ContractError("covariance matrix must be 4x4")
        if not np.allclose(m, m.T, rtol=1e-12, atol=1e-12 * np.abs(m).max()):
            raise ContractError("covariance matrix must be symmetric")
        off = m.copy()
        for r, cidx in [(0, 0), (1, 1), (2, 2), (3, 3), (0, 2), (2, 0), (1, 3), (3, 1)]:
            off[r, cidx] = 0.0
        if np.any(np.abs(off) > 1e-12 * np.abs(m).max()):
            raise ContractError("blocks must be diagonal (no x-p correlations)")
        return cls(m[0, 0], m[1, 1], m[0, 2], -m[1, 3], m[2, 2], m[3, 3])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.omega_a, 0.0, self.psi_a, 0.0],
            [0.0, self.omega_b, 0.0, -self.psi_b],
            [self.psi_a, 0.0, self.phi_a, 0.0],
            [0.0, -self.psi_b, 0.0, self.phi_b],
        ])

    def is_physical(self, tol: float = 1e-9) -> bool:
        return symplectic_eigs(self)[1] >= 1.0 - tol


def symplectic_eigs(cm: GaussianCM) -> tuple[float, float]:
    """Symplectic eigenvalues ``(lambda_plus, lambda_minus)`` in closed form.

    They are the positive roots of ``x^4 - b x^2 + c = 0`` with
    ``b = phi_a phi_b + omega_a omega_b - 2 psi_a psi_b`` and ``c`` the
    determinant, written as the product of the x- and p-quadrature blocks.
    """
    if isinstance(cm, np.ndarray):
        cm = GaussianCM.from_matrix(cm)
    b = cm.phi_a * cm.phi_b + cm.omega_a * cm.omega_b - 2.0 * cm.psi_a * cm.psi_b
    c = (cm.omega_a * cm.phi_a - cm.psi_a**2) * (cm.omega_b * cm.phi_b - cm.psi_b**2)
    disc = max(b * b - 4.0 * c, 0.0)
    plus_sq = 0.5 * (b + np.sqrt(disc))
    minus_sq = c / plus_sq if plus_sq > 0 else 0.0
    return float(np.sqrt(plus_sq)), float(np.sqrt(max(minus_sq, 0.0)))


def symplectic_eigs_dense(matrix) -> tuple[float, float]:
    """Symplectic eigenvalues as ``|eig(j Omega Sigma)|`` with a dense solver."""
    m = np.asarray(matrix, dtype=float)
    ev = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA @ m)))
    return float(ev[3]), float(ev[0])


def h2(x):
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue x."""
    x = np.maximum(np.asarray(x, dtype=float), 1.0)
    a = 0.5 * (x + 1.0)
    u = 0.5 * (x - 1.0)
    return (xlogy(a, a) - xlogy(u, u)) / LN2


def holevo_bound(lam_plus, lam_minus, cond_plus, cond_minus):
    return h2(lam_plus) + h2(lam_minus) - h2(cond_plus) - h2(cond_minus)


def mutual_information(v_a, transmittance, xi, mu: int = 1, eta_rx: float = 1.0, v_el: float = 0.0):
    """Alice-Bob mutual information (bits/symbol); ``xi`` is receiver-referred."""
    snr = eta_rx * transmittance * np.asarray(v_a, dtype=float) / (eta_rx * xi + mu + v_el)
    return 0.5 * mu * np.log2(1.0 + snr)


def eve_omega(transmittance, xi):
    """Variance of Eve's injected thermal mode, ``xi / (1 - T) + 1``."""
    return xi / (1.0 - transmittance) + 1.0


def eve_covariance(v_a: float, transmittance: float, xi: float) -> GaussianCM:
    """Eve's state (kept ancilla, channel output) under an entangling cloner."""
    T = transmittance
    w = eve_omega(T, xi)
    psi1 = np.sqrt(T * (w * w - 1.0))
    phi1 = T * w + (1.0 - T) * (v_a + 1.0)
    return GaussianCM.symmetric(w, psi1, phi1)


def conditional_covariance(v_a: float, transmittance: float, xi: float, detection) -> GaussianCM:
    """Eve's state conditioned on Bob's homodyne (x) or heterodyne outcome."""
    detection = Detection.parse(detection)
    T = transmittance
    w = eve_omega(T, xi)
    v = v_a + 1.0
    sigma_e = eve_covariance(v_a, T, xi).matrix
    v_b = T * v + (1.0 - T) * w
    c_anc = np.sqrt((1.0 - T) * (w * w - 1.0))  # ancilla-Bob, Z-type
    c_out = np.sqrt(T * (1.0 - T)) * (w - v)  # channel output-Bob, I-type
    cross = np.array([[c_anc, 0.0], [0.0, -c_anc], [c_out, 0.0], [0.0, c_out]])
    if detection is Detection.HOMODYNE:
        gain = np.diag([1.0 / v_b, 0.0])
    else:
        gain = np.eye(2) / (v_b + 1.0)
    cond = sigma_e - cross @ gain @ cross.T
    return GaussianCM.from_matrix(0.5 * (cond + cond.T))


def holevo_finite(v_a: float, transmittance: float, xi: float, detection) -> float:
    lp, lm = symplectic_eigs(eve_covariance(v_a, transmittance, xi))
    cp, cm = symplectic_eigs(conditional_covariance(v_a, transmittance, xi, detection))
    return float(holevo_bound(lp, lm, cp, cm))


def _check_channel(T, xi):
    if not 0.0 < T < 1.0:
        raise DomainError("transmittance must lie in (0, 1); T = 1 makes the V_A -> inf "
                          "rate diverge, use gmcs_skr_finite instead")
    if xi < 0:
        raise DomainError("excess noise must be non-negative")


def gmcs_skr_finite(v_a: float, transmittance: float, xi: float, detection="het",
                    beta_ec: float = 1.0, eta_rx: float = 1.0, v_el: float = 0.0,
                    clamp: bool = True) -> float:
    """Key rate at finite modulation variance.

    Receiver inefficiency and electronic noise reduce the mutual information
    only; the Holevo bound is that of the ideal receiver.
    """
    detection = Detection.parse(detection)
    T = float(transmittance)
    if not 0.0 < T < 1.0:
        raise DomainError("transmittance must lie in (0, 1)")
    if xi < 0 or v_a <= 0:
        raise DomainError("need xi >= 0 and V_A > 0")
    i_ab = mutual_information(v_a, T, xi, detection.mu, eta_rx, v_el)
    r = float(beta_ec * i_ab - holevo_finite(v_a, T, xi, detection))
    return max(r, 0.0) if clamp else r


def asymptotic_phi(transmittance, xi, mu: int = 1):
    T = transmittance
    w = eve_omega(T, xi)
    return T * w + (1.0 - T) * (2.0 * w - 1.0 + (xi + mu) / T)


def gmcs_skr_asymptotic(transmittance, xi, detection="het", clamp: bool = True):
    """Key rate for ``V_A -> inf``, ideal reconciliation and receiver."""
    detection = Detection.parse(detection)
    T = np.asarray(transmittance, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any((T <= 0) | (T >= 1)):
        _check_channel(float(np.min(T)) if np.any(T <= 0) else 1.0, 0.0)
    if np.any(xi < 0):
        raise DomainError("excess noise must be non-negative")
    w = eve_omega(T, xi)
    if detection is Detection.HOMODYNE:
        phi = asymptotic_phi(T, xi, mu=1)
        r = 0.5 * np.log2(T * phi / ((xi + 1.0) * (1.0 - T))) - h2(w)
    else:
        r = (np.log2(T / ((xi + 2.0) * (1.0 - T))) - h2(w)
             + h2((xi + 2.0 - T) / T) + 1.0 - np.log2(np.e))
    if clamp:
        r = np.maximum(r, 0.0)
    return float(r) if np.ndim(r) == 0 else r


def receiver_penalty(transmittance, xi, detection="het", eta_rx: float = 1.0, v_el: float = 0.0,
                     v_a: float | None = None) -> float:
    """Rate lost to a non-ideal receiver (bits/symbol).

    With ``v_a=None`` the ``V_A -> inf`` limit is used, where the penalty is the
    gap in mutual information, ``(mu/2) log2[(eta xi + mu + v_el) / (eta (xi + mu))]``.
    """
    detection = Detection.parse(detection)
    mu = detection.mu
    if v_a is None:
        return float(0.5 * mu * np.log2((eta_rx * xi + mu + v_el) / (eta_rx * (xi + mu))))
    ideal = gmcs_skr_finite(v_a, transmittance, xi, detection, clamp=False)
    real = gmcs_skr_finite(v_a, transmittance, xi, detection, eta_rx=eta_rx, v_el=v_el, clamp=False)
    return ideal - real
