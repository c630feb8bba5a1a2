"""Wave operators of the quasi-classical spin dynamics.

For a fixed classical field f the interacting propagator U(t) is compared
with the free one U0(t) = exp(-itH_S) through Omega_+(T) = U(T)* U0(T).
Differentiating gives

    d/dT Omega_+(T) = i sqrt2 lam alpha_T(f) U(T)* G U0(T),

so Omega_+(T) converges whenever alpha(f) is integrable in time, and
||Omega_+(T) - 1|| <= sqrt2 |lam| ||G|| int_0^T |alpha_t| dt.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import reservoir as rm
from .errors import DomainError, IntegrationError
from .qc_dynamics import FieldBatch, I2, SpinCoupling, propagate_batch, qc_evolve

__all__ = [
    "FieldAmplitude",
    "field_amplitude",
    "alpha_t",
    "fit_decay_exponent",
    "L1Estimate",
    "alpha_l1_norm",
    "wave_operator_approx",
    "wave_operator_integral_form",
    "omega_minus",
    "cauchy_increments",
    "ScatteringReport",
    "scattering_report",
    "StabilityResult",
    "stability_deviation",
]

_SQRT2 = math.sqrt(2.0)


@dataclass
class FieldAmplitude:
    """t -> <e^{-itw} f, g> for one classical field, with alpha_t its real part.

    ``omega_R`` set means constant dispersion w(k) = omega_R, where the
    amplitude is e^{i omega_R t} <f, g> and never decays.
    """

    f: object
    g: object
    phase: complex = 1.0 + 0j
    omega_R: float = None
    engine: object = None
    _static: complex = None

    def __call__(self, t):
        t = float(t)
        if self.omega_R is not None:
            if self._static is None:
                self._static = rm.overlap_static(self.f, self.g, self.engine)
            return self.phase * np.exp(1j * self.omega_R * t) * self._static
        if isinstance(self.f, rm.PaperRadial) and isinstance(self.g, rm.PaperRadial):
            return self.phase * rm.paper_radial_overlap_free(self.f, self.g, t)
        return self.phase * rm.overlap_free(self.f, self.g, t, self.engine)

    def alpha(self, t):
        return float(np.real(self(t)))

    def batch(self):
        """Single-field batch for the propagators."""
        return FieldBatch(np.ones((1, 1), dtype=complex), np.ones(1),
                          lambda t: np.array([self(t)]), True, False)


def field_amplitude(f, g, theta=0.0, omega_R=None, engine=None):
    """Amplitude for the field e^{i theta} f coupled through g."""
    if omega_R is not None and not omega_R > 0.0:
        raise DomainError("omega_R must be > 0")
    return FieldAmplitude(f, g, complex(np.exp(-1j * theta)), omega_R, engine)


def alpha_t(f, g, t, engine=None):
    """alpha_t(f) = Re<e^{-itw} f, g>."""
    return float(np.real(rm.overlap_free(f, g, t, engine)))


def fit_decay_exponent(amp, t_lo=10.0, t_hi=100.0, n=60):
    """q in |<e^{-itw} f, g>| ~ C t^{-q}, by least squares in log-log.

    The modulus is used rather than |alpha_t| itself, whose zeros would
    spoil a straight-line fit.  Returns (q, C).
    """
    if not 0.0 < t_lo < t_hi:
        raise DomainError("need 0 < t_lo < t_hi")
    ts = np.geomspace(t_lo, t_hi, n)
    y = np.array([abs(amp(t)) for t in ts])
    if np.any(y <= 0.0):
        raise DomainError("amplitude vanishes on the fit window")
    slope, icpt = np.polyfit(np.log(ts), np.log(y), 1)
    return float(-slope), float(math.exp(icpt))


@dataclass
class L1Estimate:
    estimate: float
    error_bar: float
    truncated: float
    tail: float
    exponent: float
    divergent: bool
    T_max: float

    @property
    def label(self):
        return "L¹ divergent" if self.divergent else "L¹ finite"


def _abs_alpha_integral(amp, T, panel):
    total, err = 0.0, 0.0
    edges = np.arange(0.0, T, panel)
    edges = np.append(edges, T)
    f = lambda t: abs(amp.alpha(t))
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-10, limit=200)
        total += v
        err += e
    return total, err


def alpha_l1_norm(amp, T_max=100.0, tail_exponent_hint=None, panel=1.0, divergence_cut=1.05):
    """int_0^inf |alpha_t| dt as quadrature on [0, T_max] plus a tail bound.

    The tail is bounded by C T_max^{1-q}/(q-1) from the envelope fit
    C t^{-q} over the last decade (or q = ``tail_exponent_hint``).  An
    exponent q <= ``divergence_cut`` is reported as divergent.
    """
    if not T_max > 0.0:
        raise DomainError("T_max must be > 0")
    trunc, qerr = _abs_alpha_integral(amp, T_max, panel)
    q_fit, _ = fit_decay_exponent(amp, T_max / 10.0, T_max, 40)
    q = q_fit if tail_exponent_hint is None else float(tail_exponent_hint)
    if q <= divergence_cut:
        return L1Estimate(math.inf, math.inf, trunc, math.inf, q, True, T_max)
    ts = np.geomspace(T_max / 10.0, T_max, 40)
    C = max(abs(amp(t)) * t ** q for t in ts)
    tail = C * T_max ** (1.0 - q) / (q - 1.0)
    return L1Estimate(trunc + 0.5 * tail, 0.5 * tail + qerr, trunc, tail, q, False, T_max)


def _free(omega0, t):
    return np.diag(np.exp(-1j * 0.5 * omega0 * t * np.array([1.0, -1.0])))


def _field_hfun(coupling, amp):
    c = _SQRT2 * coupling.lam
    G = coupling.G
    return lambda t: (c * amp.alpha(t)) * G[None, :, :]


def wave_operator_approx(coupling, amp, T_values, tol=1e-12):
    """Omega_+(T) = U(T)* U0(T) for each T (T = 0 gives the identity)."""
    T_values = np.asarray(T_values, dtype=float)
    if np.any(T_values < 0.0):
        raise DomainError("T must be >= 0")
    order = np.argsort(T_values)
    if coupling.lam == 0.0:
        return np.broadcast_to(I2, (T_values.size, 2, 2)).copy()
    U = propagate_batch(_field_hfun(coupling, amp), coupling.omega0, T_values[order], tol)[:, 0]
    out = np.empty((T_values.size, 2, 2), dtype=complex)
    for k, i in enumerate(order):
        out[i] = np.conj(U[k].T) @ _free(coupling.omega0, T_values[i])
    return out


def wave_operator_integral_form(coupling, amp, T, n=4001, tol=1e-12):
    """I + i sqrt2 lam int_0^T alpha_s U(s)* G U0(s) ds by Simpson's rule.

    Independent of ``wave_operator_approx`` except for the propagator; the
    two agree when the sqrt2 lam normalization is consistent.
    """
    if n % 2 == 0:
        n += 1
    s = np.linspace(0.0, T, n)
    U = propagate_batch(_field_hfun(coupling, amp), coupling.omega0, s, tol)[:, 0]
    vals = np.array([amp.alpha(si) * np.conj(U[k].T) @ coupling.G @ _free(coupling.omega0, si)
                     for k, si in enumerate(s)])
    integral = integrate.simpson(vals, x=s, axis=0)
    return I2 + 1j * _SQRT2 * coupling.lam * integral


def omega_minus(coupling, amp, T, tol=1e-12):
    """Omega_-(T) = U(-T)* U0(-T), integrating backwards in time."""
    if not T >= 0.0:
        raise DomainError("T must be >= 0")
    if T == 0.0 or coupling.lam == 0.0:
        return I2.copy()
    U = propagate_batch(_field_hfun(coupling, amp), coupling.omega0, [-T], tol)[0, 0]
    return np.conj(U.T) @ _free(coupling.omega0, -T)


def cauchy_increments(omegas, T_values):
    """||Omega(T_k) - Omega(T_{k-1})|| (spectral norm) for k >= 1."""
    return np.array([np.linalg.norm(omegas[k] - omegas[k - 1], 2) for k in range(1, len(T_values))])


@dataclass
class ScatteringReport:
    alpha_l1: float
    alpha_l1_error: float
    divergent: bool
    decay_exponent: float
    T_values: np.ndarray
    omega_plus_T: np.ndarray
    increments: np.ndarray
    convergence_rate: float
    margin: float
    margin_unit_normalization: float
    scattering_exists: bool
    S: np.ndarray = None
    omega_minus_T: np.ndarray = None
    notes: list = field(default_factory=list)

    def key_values(self):
        kv = [
            ("alpha_l1", self.alpha_l1),
            ("alpha_l1_error", self.alpha_l1_error),
            ("l1_status", "L¹ divergent" if self.divergent else "L¹ finite"),
            ("decay_exponent", self.decay_exponent),
            ("convergence_rate", self.convergence_rate),
            ("invertibility_margin", self.margin),
            ("invertibility_margin_unit_normalization", self.margin_unit_normalization),
            ("scattering_operator", "exists" if self.scattering_exists else "not certified"),
        ]
        if self.S is not None:
            for i in range(2):
                for j in range(2):
                    kv.append((f"S_{i + 1}{j + 1}", complex(self.S[i, j])))
        for n in self.notes:
            kv.append(("note", n))
        return kv

    def increment_rows(self):
        for k in range(1, len(self.T_values)):
            yield (float(self.T_values[k]), float(self.increments[k - 1]))


def scattering_report(coupling, amp, T_values=(10.0, 20.0, 40.0, 80.0, 160.0),
                      T_l1=100.0, tail_exponent_hint=None, tol=1e-12):
    """alpha L1 norm, Omega_+ approximants and, if certified, S = Omega_+^{-1} Omega_-."""
    T_values = np.asarray(sorted(T_values), dtype=float)
    l1 = alpha_l1_norm(amp, T_l1, tail_exponent_hint)
    notes = []
    q = l1.exponent
    omegas = wave_operator_approx(coupling, amp, T_values, tol)
    inc = cauchy_increments(omegas, T_values)
    if inc.size >= 2 and np.all(inc > 0.0):
        rate = float(np.polyfit(np.log(T_values[1:]), np.log(inc), 1)[0])
    else:
        rate = math.nan
    gnorm = float(np.linalg.norm(coupling.G, 2))
    margin = _SQRT2 * abs(coupling.lam) * gnorm * l1.estimate
    margin_unit = abs(coupling.lam) * l1.estimate
    S = om_minus = None
    exists = bool(margin < 1.0)
    if l1.divergent:
        notes.append("alpha_t(f) is not integrable in time; wave operators are not certified")
    elif margin < 0.9:
        om_minus = omega_minus(coupling, amp, T_values[-1], tol)
        S = np.linalg.solve(omegas[-1], om_minus)
    else:
        notes.append("invertibility margin >= 0.9; S not computed")
    return ScatteringReport(l1.estimate, l1.error_bar, l1.divergent, q, T_values, omegas, inc,
                            rate, margin, margin_unit, exists, S, om_minus, notes)


# ---------------------------------------------------------------------------
# stability of the free dynamics


@dataclass
class StabilityResult:
    sup: float
    deviations: np.ndarray
    times: np.ndarray
    warning: str = ""


def _trace_norm(m):
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def stability_deviation(coupling, sampler, gamma0, t_grid, g, l1_bound=None, seed=0,
                        tol=1e-11, workers=1, engine=None):
    """sup_t ||gamma(t) - e^{-itH_S} gamma0 e^{itH_S}||_1 over ``t_grid``.

    ``l1_bound`` (optional) is checked against the L1 norm of the envelope
    |<e^{-itw} f0, g>|, which dominates every |alpha_t(e^{i theta} f0)|;
    a violation is attached as a warning.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    warning = ""
    if l1_bound is not None and hasattr(sampler, "f0"):
        env = field_amplitude(sampler.f0, g, engine=engine)
        est = alpha_l1_norm(_Envelope(env), float(t_grid[-1]) if t_grid[-1] > 0 else 1.0)
        if est.divergent or est.estimate > l1_bound:
            warning = f"sampler support violates ||alpha||_1 <= {l1_bound:g} (got {est.estimate:g})"
    if coupling.lam == 0.0:
        return StabilityResult(0.0, np.zeros(t_grid.size), t_grid, warning)
    traj = qc_evolve(coupling, sampler, gamma0, t_grid, g, seed=seed, tol=tol,
                     workers=workers, engine=engine)
    m0 = gamma0.matrix
    devs = np.empty(t_grid.size)
    for k, t in enumerate(t_grid):
        U0 = _free(coupling.omega0, t)
        devs[k] = _trace_norm(traj.gamma[k] - U0 @ m0 @ np.conj(U0.T))
    return StabilityResult(float(np.max(devs)), devs, t_grid, warning)


class _Envelope:
    """Wraps an amplitude so that alpha_t is its modulus."""

    def __init__(self, amp):
        self.amp = amp

    def __call__(self, t):
        return abs(self.amp(t))

    def alpha(self, t):
        return abs(self.amp(t))
