"""Constant-dispersion (polaron-type) reservoirs: a spin driven by a periodic classical field.

With w(k) = omega_R the field amplitude is e^{i omega_R t} <f, g> and never
decays.  Two cases are covered:

* circular polarization, condensate measure uniform in theta:
      H(theta, t) = w0/2 sz + kappa/2 (cos(omega_R t - theta) sx - sin(omega_R t - theta) sy)
  solved exactly in the frame rotating with the field;
* linear polarization:  H(t) = w0/2 sz + sqrt2 lam kappa cos(omega_R t - theta) sx / 2.

kappa = Re<f0, g> throughout.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import reservoir as rm
from .errors import DomainError
from .qc_dynamics import SX, SY, SZ, QubitState, propagate_batch

__all__ = [
    "PolaronSpec",
    "rabi_frequency",
    "circular_hamiltonian",
    "circular_single_oracle",
    "circular_closed_form",
    "circular_trajectory",
    "circular_vs_ode",
    "LinearPeriodicityResult",
    "linear_periodicity_check",
]


@dataclass(frozen=True)
class PolaronSpec:
    omega_R: float
    omega0: float
    kappa: float
    polarization: str = "circular"
    theta: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.omega_R > 0.0:
            raise DomainError(f"omega_R must be > 0, got {self.omega_R}")
        if not self.omega0 > 0.0:
            raise DomainError(f"omega0 must be > 0, got {self.omega0}")
        if self.polarization not in ("circular", "linear"):
            raise DomainError(f"polarization must be 'circular' or 'linear', got {self.polarization!r}")
        if not math.isfinite(self.kappa):
            raise DomainError("kappa must be finite")

    @classmethod
    def from_form_factors(cls, f0, g, omega_R, omega0, polarization="circular", theta=0.0,
                          lam=1.0, engine=None):
        """kappa = Re<f0, g>; circular polarization needs Im<f0, g> = 0."""
        ov = rm.overlap_static(f0, g, engine)
        if polarization == "circular" and abs(ov.imag) > 1e-12 * max(1.0, abs(ov)):
            raise DomainError(f"circular polarization needs Im<f0, g> = 0, got {ov.imag:g}")
        return cls(omega_R, omega0, float(ov.real), polarization, theta, lam)


def rabi_frequency(spec):
    """Omega = sqrt((w0 + omega_R)^2 + kappa^2) / 2."""
    return 0.5 * math.hypot(spec.omega0 + spec.omega_R, spec.kappa)


def _require(spec, pol):
    if spec.polarization != pol:
        raise DomainError(f"operation needs {pol} polarization")


def circular_hamiltonian(spec, theta, t):
    phi = spec.omega_R * t - theta
    return 0.5 * spec.omega0 * SZ + 0.5 * spec.kappa * (math.cos(phi) * SX - math.sin(phi) * SY)


def _rz(angle):
    # exp(i angle sz / 2)
    return np.diag(np.exp(0.5j * angle * np.array([1.0, -1.0])))


def circular_single_oracle(spec, theta, t):
    """U(theta, t) = e^{i(omega_R t - theta) sz/2} e^{-i Ht t} e^{i theta sz/2}.

    Ht = ((w0 + omega_R) sz + kappa sx) / 2 is the generator in the
    co-rotating frame.
    """
    Ht = 0.5 * ((spec.omega0 + spec.omega_R) * SZ + spec.kappa * SX)
    return _rz(spec.omega_R * t - theta) @ expm(-1j * Ht * t) @ _rz(theta)


def circular_closed_form(spec, gamma0, t):
    """theta-averaged state at time t.

    g11(t) = [cos^2 + (c/2W)^2 sin^2] g11 + (kappa/2W)^2 sin^2 (1 - g11)
    g12(t) = e^{i omega_R t} [cos - i (c/2W) sin]^2 g12
    with c = w0 + omega_R, W the Rabi frequency, trig functions at W t.
    """
    _require(spec, "circular")
    m0 = gamma0.matrix if isinstance(gamma0, QubitState) else np.asarray(gamma0, dtype=complex)
    W = rabi_frequency(spec)
    c = spec.omega0 + spec.omega_R
    co, si = math.cos(W * t), math.sin(W * t)
    g11 = m0[0, 0].real
    a = c / (2.0 * W)
    b = spec.kappa / (2.0 * W)
    n11 = (co * co + a * a * si * si) * g11 + b * b * si * si * (1.0 - g11)
    n12 = np.exp(1j * spec.omega_R * t) * (co - 1j * a * si) ** 2 * m0[0, 1]
    return np.array([[n11, n12], [np.conj(n12), 1.0 - n11]], dtype=complex)


def _theta_nodes(n):
    return 2.0 * math.pi * np.arange(n) / n


def circular_trajectory(spec, gamma0, t_grid, theta_nodes=64, tol=1e-12):
    """theta-average of U gamma0 U* with U from the ODE integrator."""
    _require(spec, "circular")
    m0 = gamma0.matrix if isinstance(gamma0, QubitState) else np.asarray(gamma0, dtype=complex)
    th = _theta_nodes(theta_nodes)
    half_k = 0.5 * spec.kappa

    def hfun(t):
        phi = spec.omega_R * t - th
        return half_k * (np.cos(phi)[:, None, None] * SX - np.sin(phi)[:, None, None] * SY)

    U = propagate_batch(hfun, spec.omega0, t_grid, tol)
    rho = U @ m0 @ np.conj(np.swapaxes(U, -1, -2))
    return rho.mean(axis=1)


def circular_vs_ode(spec, gamma0, t_grid, theta_nodes=64, tol=1e-12):
    """max over the grid of |closed form - theta-averaged ODE| (entrywise)."""
    if theta_nodes < 32:
        raise DomainError("use at least 32 theta nodes")
    t_grid = np.asarray(t_grid, dtype=float)
    ode = circular_trajectory(spec, gamma0, t_grid, theta_nodes, tol)
    closed = np.array([circular_closed_form(spec, gamma0, t) for t in t_grid])
    return float(np.max(np.abs(ode - closed)))


@dataclass
class LinearPeriodicityResult:
    max_deviation: float
    deviations: np.ndarray
    floquet_error: float
    monodromy: np.ndarray
    period: float


def linear_periodicity_check(spec, gamma0, n_periods=10, tol=1e-12):
    """max_k ||gamma(k T) - gamma(0)|| for T = 2 pi / omega_R, k = 1..n_periods.

    Also reports max_k ||U(kT) - U(T)^k||, a check of the group property of
    the time-periodic propagator.
    """
    _require(spec, "linear")
    if n_periods < 0:
        raise DomainError("n_periods must be >= 0")
    m0 = gamma0.matrix if isinstance(gamma0, QubitState) else np.asarray(gamma0, dtype=complex)
    T = 2.0 * math.pi / spec.omega_R
    if n_periods == 0:
        return LinearPeriodicityResult(0.0, np.zeros(0), 0.0, np.eye(2, dtype=complex), T)
    amp = math.sqrt(2.0) * spec.lam * spec.kappa * 0.5

    def hfun(t):
        return (amp * math.cos(spec.omega_R * t - spec.theta) * SX)[None]

    times = T * np.arange(1, n_periods + 1)
    U = propagate_batch(hfun, spec.omega0, times, tol)[:, 0]
    devs = np.array([np.linalg.norm(u @ m0 @ np.conj(u.T) - m0, 2) for u in U])
    M = U[0]
    floq = max(np.linalg.norm(U[k] - np.linalg.matrix_power(M, k + 1), 2) for k in range(n_periods))
    return LinearPeriodicityResult(float(devs.max()), devs, float(floq), M, T)
