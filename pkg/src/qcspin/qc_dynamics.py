"""Quasi-classical spin dynamics.

In the classical-reservoir limit the spin sees a classical field f drawn from
a measure mu and evolves by

    i dU/dt = [w0/2 sz + sqrt2 * lam * alpha_t(f) G] U,   alpha_t(f) = Re<e^{-itw} f, g>,

and the reduced state is the mu-average of U gamma U*.  Every sampler here
produces fields of the form alpha_t(f_k) = Re(sum_j conj(a_kj) F_j(t)), so a
batch of samples is a coefficient matrix plus one shared basis F(t).

The 2x2 equations are integrated in the interaction picture W = e^{itH_S} U
by a batched Dormand-Prince 5(4) scheme with a step size common to the
batch, and the result is projected back onto the unitaries every few steps.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import reservoir as rm
from .decoherence import CoherentCircleMixture, CoherentDirac, ReservoirSpec, decoherence_fn
from .errors import DomainError, IntegrationError, SamplingError, StiffnessError, UsageError
from .parallel import parallel_map

__all__ = [
    "SX",
    "SY",
    "SZ",
    "I2",
    "QubitState",
    "SpinCoupling",
    "FieldBatch",
    "DiracSampler",
    "CircleSampler",
    "ModeGrid",
    "GaussianThermalSampler",
    "Propagator",
    "propagate",
    "propagate_batch",
    "QCTrajectory",
    "qc_evolve",
    "evolve_matrix",
    "energy_conserving_closed_form",
    "gaussian_discrete_decoherence",
    "gaussian_empirical_decoherence",
    "SymmetryReport",
    "symmetry_check",
    "BenchmarkResult",
    "benchmark",
]

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# states and couplings


@dataclass(frozen=True)
class QubitState:
    """A 2x2 density matrix, validated on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise DomainError(f"qubit state must be 2x2, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise DomainError("qubit state must be Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise DomainError(f"qubit state must have trace 1, got {np.trace(m)}")
        if np.min(np.linalg.eigvalsh(m)) < -1e-12:
            raise DomainError("qubit state must be positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_entries(cls, g11, g12):
        """State with population g11 and coherence g12 (g21 = conj g12)."""
        return cls(np.array([[g11, g12], [np.conj(g12), 1.0 - g11]], dtype=complex))

    @property
    def purity(self):
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class SpinCoupling:
    """Interaction operator G, spin frequency w0 and coupling lambda."""

    G: np.ndarray
    omega0: float
    lam: float

    def __post_init__(self):
        G = np.array(self.G, dtype=complex)
        if G.shape != (2, 2) or np.max(np.abs(G - G.conj().T)) > 1e-14:
            raise DomainError("G must be a Hermitian 2x2 matrix")
        if not self.omega0 > 0.0:
            raise DomainError(f"omega0 must be > 0, got {self.omega0}")
        if not math.isfinite(self.lam):
            raise DomainError("lambda must be finite")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)

    @property
    def energy_conserving(self):
        return bool(np.max(np.abs(self.G @ SZ - SZ @ self.G)) <= 1e-14)

    @property
    def off_diagonal(self):
        return bool(abs(self.G[0, 0]) == 0.0 and abs(self.G[1, 1]) == 0.0)

    def with_lam(self, lam):
        return SpinCoupling(self.G, self.omega0, lam)


# ---------------------------------------------------------------------------
# sampled fields


@dataclass
class FieldBatch:
    """alpha_t for a batch of fields: Re(conj(coeffs) @ basis(t)).

    ``weights`` sum to one.  ``quadrature`` marks deterministic nodes (no
    Monte-Carlo error); ``even`` means the batch is invariant under f -> -f.
    """

    coeffs: np.ndarray
    weights: np.ndarray
    basis: object
    quadrature: bool = False
    even: bool = False

    def __len__(self):
        return self.coeffs.shape[0]

    def alpha(self, t):
        return np.real(np.conj(self.coeffs) @ self.basis(t))

    def subset(self, idx):
        idx = np.asarray(idx)
        w = self.weights[idx]
        return FieldBatch(self.coeffs[idx], w, self.basis, self.quadrature, self.even)


class _OverlapFunction:
    """t -> <e^{-itw} f0, g>, closed form for PaperRadial pairs, else quadrature."""

    def __init__(self, f0, g, engine=None):
        self.f0, self.g, self.engine = f0, g, engine
        self.analytic = isinstance(f0, rm.PaperRadial) and isinstance(g, rm.PaperRadial)
        self._cached = lru_cache(maxsize=65536)(self._eval)

    def _eval(self, t):
        if self.analytic:
            return rm.paper_radial_overlap_free(self.f0, self.g, t)
        return rm.overlap_free(self.f0, self.g, t, self.engine)

    def __call__(self, t):
        return np.array([self._cached(float(t))])


@dataclass(frozen=True)
class DiracSampler:
    """mu = delta at f0: a single deterministic field."""

    f0: rm.FormFactor
    even = False

    def draw(self, g, n_samples=1, seed=0, engine=None):
        basis = _OverlapFunction(self.f0, g, engine)
        return FieldBatch(np.ones((1, 1), dtype=complex), np.ones(1), basis, True, False)


@dataclass(frozen=True)
class CircleSampler:
    """mu uniform on {e^{i theta} f0}.

    With ``quadrature`` the phases are the ``n_nodes`` trapezoid nodes on
    [-pi, pi) (even n gives exact f -> -f symmetry); otherwise phases are
    drawn uniformly and paired with theta + pi.
    """

    f0: rm.FormFactor
    n_nodes: int = 128
    quadrature: bool = True

    def __post_init__(self):
        if self.n_nodes < 1:
            raise DomainError("n_nodes must be >= 1")

    @property
    def even(self):
        return self.n_nodes % 2 == 0

    def thetas(self, seed=0):
        n = self.n_nodes
        if self.quadrature:
            return -math.pi + 2.0 * math.pi * np.arange(n) / n
        half = (n + 1) // 2
        th = np.array([np.random.default_rng([seed, k]).uniform(-math.pi, math.pi) for k in range(half)])
        return np.concatenate([th, th + math.pi])[:n] if n % 2 == 0 else th

    def draw(self, g, n_samples=None, seed=0, engine=None):
        th = self.thetas(seed)
        coeffs = np.exp(1j * th)[:, None]
        basis = _OverlapFunction(self.f0, g, engine)
        even = self.even if self.quadrature else (self.n_nodes % 2 == 0)
        return FieldBatch(coeffs, np.full(th.size, 1.0 / th.size), basis, self.quadrature, even)


@dataclass(frozen=True)
class ModeGrid:
    """Discrete frequency modes w_j with measure weights (dw quadrature)."""

    omega: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w <= 0.0):
            raise DomainError("mode frequencies must be positive")
        if np.asarray(self.weights).shape != w.shape or np.any(np.asarray(self.weights) <= 0.0):
            raise DomainError("mode weights must be positive and match the frequencies")

    @classmethod
    def log_spaced(cls, n, w_min=1e-2, w_max=20.0):
        if n < 2 or not 0.0 < w_min < w_max:
            raise DomainError("need n >= 2 and 0 < w_min < w_max")
        u = np.linspace(math.log(w_min), math.log(w_max), n)
        du = np.full(n, u[1] - u[0])
        du[0] *= 0.5
        du[-1] *= 0.5
        w = np.exp(u)
        return cls(w, w * du)

    def coupling(self, g):
        """G_j = <e_j, g> for the normalized indicator-like mode functions e_j."""
        w = np.asarray(self.omega)
        return np.sqrt(self.weights) * w * np.asarray(g(w), dtype=complex)


@dataclass(frozen=True)
class GaussianThermalSampler:
    """Centered Gaussian field on a finite mode grid.

    Each mode amplitude a_j = x + i y with x, y ~ N(0, 1 / (2 beta' w_j));
    samples come in antithetic pairs (a, -a).
    """

    beta: float
    modes: ModeGrid
    n_samples: int = 2000
    even = True

    def __post_init__(self):
        if not self.beta > 0.0:
            raise DomainError(f"beta' must be > 0, got {self.beta}")
        if self.n_samples < 2:
            raise DomainError("need at least two samples")

    def amplitudes(self, n_samples, seed):
        w = np.asarray(self.modes.omega)
        sd = np.sqrt(1.0 / (2.0 * self.beta * w))
        half = (n_samples + 1) // 2
        rows = []
        for k in range(half):
            z = np.random.default_rng([seed, k]).standard_normal((2, w.size))
            rows.append(sd * (z[0] + 1j * z[1]))
        a = np.array(rows)
        return np.concatenate([a, -a])[:n_samples] if n_samples % 2 == 0 else a

    def draw(self, g, n_samples=None, seed=0, engine=None):
        n = self.n_samples if n_samples is None else n_samples
        a = self.amplitudes(n, seed)
        w = np.asarray(self.modes.omega)
        Gj = self.modes.coupling(g)
        basis = lambda t: np.exp(1j * t * w) * Gj
        return FieldBatch(a, np.full(a.shape[0], 1.0 / a.shape[0]), basis, False, n % 2 == 0)


def gaussian_discrete_decoherence(sampler, g, lam, t):
    """Gaussian expectation of exp(i sqrt2 lam Re<f, g_t>) on the mode grid.

    Equals exp(-(lam^2 / 2 beta') sum_j |<e_j, g_t>|^2 / w_j).
    """
    w = np.asarray(sampler.modes.omega)
    b = _discrete_gt(sampler.modes.coupling(g), w, t)
    return math.exp(-(lam * lam / (2.0 * sampler.beta)) * float(np.sum(np.abs(b) ** 2 / w)))


def _discrete_gt(Gj, w, t):
    # <e_j, g_t> with g_t = (1 - e^{itw}) g / (iw)
    return Gj * (1.0 - np.exp(1j * t * w)) / (1j * w)


def gaussian_empirical_decoherence(batch, sampler, g, lam, t):
    """The same average over the drawn samples only (no ODE involved)."""
    b = _discrete_gt(sampler.modes.coupling(g), np.asarray(sampler.modes.omega), t)
    phase = np.real(np.conj(batch.coeffs) @ b)
    return complex(np.sum(batch.weights * np.exp(1j * _SQRT2 * lam * phase)))


# ---------------------------------------------------------------------------
# batched Dormand-Prince 5(4)

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _polar(W):
    u, _, vh = np.linalg.svd(W)
    return u @ vh


def propagate_batch(hfun, omega0, t_grid, tol=1e-11, renorm_every=50, max_steps=2_000_000,
                    t0=0.0):
    """Propagators U(t_k, t0) for a batch of Hamiltonians w0/2 sz + V_b(t).

    ``hfun(t)`` returns the perturbations V_b(t) as a (B, 2, 2) array.
    ``t_grid`` must be monotone away from ``t0`` (either direction).
    Returns an array of shape (len(t_grid), B, 2, 2).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise DomainError("t_grid must be a non-empty 1-d array")
    d = np.diff(np.concatenate([[t0], t_grid]))
    direction = 1.0 if np.all(d >= 0.0) else -1.0
    if direction < 0.0 and not np.all(d <= 0.0):
        raise DomainError("t_grid must be monotone and start on the side of t0")

    half = 0.5 * omega0

    def rhs(t, W):
        V = hfun(t)
        ph = np.exp(1j * omega0 * t)
        Vi = np.empty_like(V)
        Vi[:, 0, 0] = V[:, 0, 0]
        Vi[:, 1, 1] = V[:, 1, 1]
        Vi[:, 0, 1] = V[:, 0, 1] * ph
        Vi[:, 1, 0] = V[:, 1, 0] / ph
        return -1j * (Vi @ W)

    B = np.asarray(hfun(t0)).shape[0]
    W = np.broadcast_to(I2, (B, 2, 2)).copy()
    out = np.empty((t_grid.size, B, 2, 2), dtype=complex)
    t = float(t0)
    k1 = rhs(t, W)
    scale0 = float(np.max(np.abs(k1))) + 1e-3
    h = direction * min(0.1, 0.01 / scale0)
    steps = 0
    for i, target in enumerate(t_grid):
        while direction * (target - t) > 0.0:
            remaining = target - t
            h_try = h
            last = abs(h_try) >= abs(remaining)
            if last:
                h_try = remaining
            k = [k1]
            for s in range(1, 7):
                Y = W + h_try * sum(a * kk for a, kk in zip(_A[s], k) if a != 0.0)
                k.append(rhs(t + _C[s] * h_try, Y))
            W_new = W + h_try * sum(b * kk for b, kk in zip(_B, k[:6]) if b != 0.0)
            err_vec = h_try * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
            err = float(np.max(np.abs(err_vec))) / tol
            if not math.isfinite(err):
                raise StiffnessError(f"non-finite error estimate at t = {t:g}")
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if err <= 1.0:
                t = target if last else t + h_try
                W = W_new
                k1 = k[6]
                steps += 1
                if steps % renorm_every == 0:
                    W = _polar(W)
                    k1 = rhs(t, W)
                if not last or factor < 1.0:
                    h = h_try * factor
            else:
                h = h_try * factor
            if abs(h) < 1e-13 * max(1.0, abs(t)):
                raise StiffnessError(f"step size underflow at t = {t:g}")
            if steps > max_steps:
                raise StiffnessError(f"more than {max_steps} steps before t = {target:g}")
        ph = np.exp(-1j * half * t)
        U = W.copy()
        U[:, 0, :] *= ph
        U[:, 1, :] /= ph
        out[i] = U
    return out


@dataclass
class Propagator:
    """U(t_k, 0) for each sample of a batch: ``U[k, b]``."""

    times: np.ndarray
    U: np.ndarray

    def unitarity_error(self):
        UU = np.einsum("...ji,...jk->...ik", np.conj(self.U), self.U)
        return float(np.max(np.abs(UU - I2)))


def _coupling_hfun(coupling, batch):
    G = coupling.G
    c = _SQRT2 * coupling.lam

    def hfun(t):
        a = batch.alpha(t)
        return (c * a)[:, None, None] * G

    return hfun


def propagate(coupling, field_batch, t_grid, tol=1e-11):
    """Integrate i dU/dt = [w0/2 sz + sqrt2 lam alpha_t G] U for every field in the batch."""
    t_grid = np.asarray(t_grid, dtype=float)
    if coupling.lam == 0.0:
        hfun = lambda t: np.zeros((len(field_batch), 2, 2), dtype=complex)
    else:
        hfun = _coupling_hfun(coupling, field_batch)
    return Propagator(t_grid, propagate_batch(hfun, coupling.omega0, t_grid, tol))


# ---------------------------------------------------------------------------
# averaged dynamics


@dataclass
class QCTrajectory:
    """Averaged spin states on a time grid with per-entry standard errors."""

    times: np.ndarray
    gamma: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    n_samples: int
    failures: int = 0
    quadrature: bool = False

    COLUMNS = ("t", "Re_g11", "Im_g11", "Re_g12", "Im_g12", "Re_g21", "Im_g21",
               "Re_g22", "Im_g22", "purity", "se_g11", "se_g12", "se_g21", "se_g22")

    @property
    def purity(self):
        return np.real(np.einsum("kij,kji->k", self.gamma, self.gamma))

    def rows(self):
        pur = self.purity
        for k, t in enumerate(self.times):
            g = self.gamma[k]
            se = np.hypot(self.stderr_re[k], self.stderr_im[k])
            yield (float(t),
                   float(g[0, 0].real), float(g[0, 0].imag),
                   float(g[0, 1].real), float(g[0, 1].imag),
                   float(g[1, 0].real), float(g[1, 0].imag),
                   float(g[1, 1].real), float(g[1, 1].imag),
                   float(pur[k]),
                   float(se[0, 0]), float(se[0, 1]), float(se[1, 0]), float(se[1, 1]))


def _conjugate(U, gamma0):
    return U @ gamma0 @ np.conj(np.swapaxes(U, -1, -2))


def _propagate_chunk(coupling, batch, t_grid, tol):
    """(per-sample U array or None, list of failed local indices)."""
    try:
        return propagate(coupling, batch, t_grid, tol).U, []
    except (StiffnessError, IntegrationError, FloatingPointError):
        pass
    Us, failed = [], []
    for b in range(len(batch)):
        try:
            Us.append(propagate(coupling, batch.subset([b]), t_grid, tol).U[:, 0])
        except (StiffnessError, IntegrationError, FloatingPointError):
            failed.append(b)
            Us.append(None)
    return Us, failed


def evolve_matrix(coupling, batch, gamma0, t_grid, tol=1e-11, workers=1, chunk=256,
                  max_failure_fraction=0.01):
    """Weighted averages of U gamma0 U* (gamma0 any 2x2 matrix).

    Returns (mean, second-moment-based standard errors (re, im), failures).
    Chunks are reduced in a fixed order, so the result does not depend on
    the number of workers.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    gamma0 = np.asarray(gamma0, dtype=complex)
    n = len(batch)
    chunks = [np.arange(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    results = parallel_map(
        lambda idx: _propagate_chunk(coupling, batch.subset(idx), t_grid, tol), chunks, workers
    )
    T = t_grid.size
    s1 = np.zeros((T, 2, 2), dtype=complex)
    s2r = np.zeros((T, 2, 2))
    s2i = np.zeros((T, 2, 2))
    wsum = 0.0
    failures = 0
    for idx, (Us, failed) in zip(chunks, results):
        failures += len(failed)
        if isinstance(Us, np.ndarray):
            rho = _conjugate(Us, gamma0)  # (T, b, 2, 2)
            w = batch.weights[idx]
        else:
            keep = [j for j in range(len(idx)) if Us[j] is not None]
            if not keep:
                continue
            rho = _conjugate(np.stack([Us[j] for j in keep], axis=1), gamma0)
            w = batch.weights[idx][keep]
        s1 += np.einsum("b,tbij->tij", w, rho)
        s2r += np.einsum("b,tbij->tij", w, rho.real ** 2)
        s2i += np.einsum("b,tbij->tij", w, rho.imag ** 2)
        wsum += float(np.sum(w))
    if failures > max_failure_fraction * n:
        raise SamplingError(f"{failures} of {n} trajectories failed to propagate")
    mean = s1 / wsum
    m = n - failures
    var_r = np.maximum(s2r / wsum - mean.real ** 2, 0.0)
    var_i = np.maximum(s2i / wsum - mean.imag ** 2, 0.0)
    if batch.quadrature or m < 2:
        se_r = np.zeros_like(var_r)
        se_i = np.zeros_like(var_i)
    else:
        se_r = np.sqrt(var_r / (m - 1))
        se_i = np.sqrt(var_i / (m - 1))
    return mean, se_r, se_i, failures


def qc_evolve(coupling, sampler, gamma0, t_grid, g, n_samples=None, seed=0, tol=1e-11,
              workers=1, engine=None):
    """gamma(t) = int dmu(f) U_t(f) gamma0 U_t(f)*, averaged over ``sampler``.

    The average is symmetrized (Hermitian part, unit trace) before return.
    """
    if not isinstance(gamma0, QubitState):
        gamma0 = QubitState(gamma0)
    if n_samples is not None and n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or t_grid[0] < 0.0 or np.any(np.diff(t_grid) < 0.0):
        raise DomainError("t_grid must be non-empty, non-negative and non-decreasing")
    batch = sampler.draw(g, n_samples, seed, engine)
    mean, se_r, se_i, failures = evolve_matrix(coupling, batch, gamma0.matrix, t_grid, tol, workers)
    mean = 0.5 * (mean + np.conj(np.swapaxes(mean, -1, -2)))
    tr = np.real(mean[:, 0, 0] + mean[:, 1, 1])
    mean = mean / tr[:, None, None]
    return QCTrajectory(t_grid, mean, se_r, se_i, len(batch), failures, batch.quadrature)


# ---------------------------------------------------------------------------
# energy-conserving closed form and benchmark


def _require_energy_conserving(coupling):
    if not coupling.energy_conserving:
        raise UsageError("closed form needs an energy-conserving coupling ([G, sz] = 0)")
    if np.max(np.abs(coupling.G - 0.5 * SZ)) > 1e-14:
        raise UsageError("closed form is stated for G = sz / 2")


def energy_conserving_closed_form(spec, g, gamma0, t, omega0, engine=None):
    """Populations fixed, gamma12(t) = e^{-i w0 t} D(t) gamma12 (G = sz / 2)."""
    if not isinstance(gamma0, QubitState):
        gamma0 = QubitState(gamma0)
    if not omega0 > 0.0:
        raise DomainError("omega0 must be > 0")
    m = np.array(gamma0.matrix)
    if t == 0.0:
        return QubitState(m)
    c = np.exp(-1j * omega0 * t) * decoherence_fn(spec, g, t, engine) * m[0, 1]
    m[0, 1] = c
    m[1, 0] = np.conj(c)
    return QubitState(m)


@dataclass
class BenchmarkResult:
    times: np.ndarray
    ode: np.ndarray
    closed: np.ndarray
    discrepancy: np.ndarray
    expectation: np.ndarray = None
    stderr: np.ndarray = None

    @property
    def max_discrepancy(self):
        return float(np.max(self.discrepancy))

    COLUMNS = ("t", "Re_ode12", "Im_ode12", "Re_closed12", "Im_closed12",
               "ode11", "closed11", "discrepancy")

    def rows(self):
        for k, t in enumerate(self.times):
            o, c = self.ode[k], self.closed[k]
            yield (float(t), float(o[0, 1].real), float(o[0, 1].imag),
                   float(c[0, 1].real), float(c[0, 1].imag),
                   float(o[0, 0].real), float(c[0, 0].real), float(self.discrepancy[k]))


def benchmark(coupling, sampler, g, gamma0, t_grid, seed=0, tol=1e-11, workers=1, engine=None):
    """Averaged ODE dynamics against the closed form for G = sz / 2.

    Dirac and circle samplers are compared with decoherence_fn at eps = 0.
    For the Gaussian sampler the closed form is the phase average over the
    very same samples; the Gaussian expectation on the mode grid is
    returned alongside together with the Monte-Carlo standard error.
    """
    _require_energy_conserving(coupling)
    if not isinstance(gamma0, QubitState):
        gamma0 = QubitState(gamma0)
    t_grid = np.asarray(t_grid, dtype=float)
    traj = qc_evolve(coupling, sampler, gamma0, t_grid, g, seed=seed, tol=tol,
                     workers=workers, engine=engine)
    m0 = gamma0.matrix
    closed = np.empty_like(traj.gamma)
    expectation = None
    if isinstance(sampler, GaussianThermalSampler):
        batch = sampler.draw(g, None, seed, engine)
        expectation = np.empty(t_grid.size)
        for k, t in enumerate(t_grid):
            D = gaussian_empirical_decoherence(batch, sampler, g, coupling.lam, t)
            expectation[k] = gaussian_discrete_decoherence(sampler, g, coupling.lam, t)
            closed[k] = _with_coherence(m0, np.exp(-1j * coupling.omega0 * t) * D * m0[0, 1])
    else:
        state = CoherentDirac(sampler.f0) if isinstance(sampler, DiracSampler) \
            else CoherentCircleMixture(sampler.f0)
        spec = ReservoirSpec(state, 0.0, coupling.lam)
        for k, t in enumerate(t_grid):
            closed[k] = energy_conserving_closed_form(spec, g, gamma0, t, coupling.omega0,
                                                      engine).matrix
    disc = np.max(np.abs(traj.gamma - closed), axis=(1, 2))
    return BenchmarkResult(t_grid, traj.gamma, closed, disc, expectation,
                           np.hypot(traj.stderr_re, traj.stderr_im))


def _with_coherence(m0, c):
    m = np.array(m0, dtype=complex)
    m[0, 1] = c
    m[1, 0] = np.conj(c)
    return m


# ---------------------------------------------------------------------------
# f -> -f symmetry


@dataclass
class SymmetryReport:
    max_offdiag_from_diagonal: float
    max_diag_from_offdiagonal: float
    times: np.ndarray = field(repr=False, default=None)


def symmetry_check(coupling, sampler, gamma0, t_grid, g, seed=0, tol=1e-11, workers=1,
                   engine=None):
    """Evolve the diagonal and off-diagonal parts of gamma0 separately.

    For an even measure and purely off-diagonal G the two parts never mix:
    the first figure is the largest coherence generated from the diagonal
    part, the second the largest population imbalance (sz component)
    generated from the off-diagonal part.
    """
    if not coupling.off_diagonal:
        raise UsageError("symmetry check needs G with vanishing diagonal")
    batch = sampler.draw(g, None, seed, engine)
    if not batch.even:
        raise UsageError("symmetry check needs a sampler that is even under f -> -f")
    m = gamma0.matrix if isinstance(gamma0, QubitState) else np.asarray(gamma0, dtype=complex)
    diag = np.diag(np.diag(m))
    off = m - diag
    d_mean, *_ = evolve_matrix(coupling, batch, diag, t_grid, tol, workers)
    o_mean, *_ = evolve_matrix(coupling, batch, off, t_grid, tol, workers)
    off_from_diag = float(np.max(np.abs(d_mean[:, 0, 1])))
    sz_from_off = float(np.max(np.abs(o_mean[:, 0, 0] - o_mean[:, 1, 1])) / 2.0)
    return SymmetryReport(off_from_diag, sz_from_off, np.asarray(t_grid, dtype=float))
