"""Decoherence functions D_eps(t) = chi_eps(lambda g_t) for the three reservoir families.

    coherent (Dirac at f0):   exp(-eps l^2 ||g_t||^2 / 4) exp(i sqrt2 l Re<f0, g_t>)
    coherent (circle mixture):exp(-eps l^2 ||g_t||^2 / 4) J0(sqrt2 |l| |<f0, g_t>|)
    BE condensate, n=[1/eps]: exp(-eps l^2 ||g_t||^2 / 4) L_n(eps l^2 |<f0, g_t>|^2 / 2)
    thermal:                  exp(-l^2/4 <g_t, eps coth(beta' eps w / 2) g_t>)

At eps = 0 the condensate reduces to the circle mixture and the thermal
kernel to 2/(beta' w).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import reservoir as rm
from .errors import DomainError, InfraredDivergenceError
from .specfun import bessel_j0, laguerre_log

__all__ = [
    "CoherentDirac",
    "CoherentCircleMixture",
    "BECFock",
    "Thermal",
    "ReservoirSpec",
    "DecoherenceTrace",
    "AsymptoticsReport",
    "decoherence_fn",
    "decoherence_trace",
    "classical_plateau",
    "classify_asymptotics",
    "regime_for_exponent",
    "growth_law",
    "decoherence_ratio_quantum_classical",
]


@dataclass(frozen=True)
class CoherentDirac:
    f0: rm.FormFactor


@dataclass(frozen=True)
class CoherentCircleMixture:
    f0: rm.FormFactor


@dataclass(frozen=True)
class BECFock:
    f0: rm.FormFactor


@dataclass(frozen=True)
class Thermal:
    beta: float

    def __post_init__(self):
        if not self.beta > 0.0:
            raise DomainError(f"beta' must be > 0, got {self.beta}")


@dataclass(frozen=True)
class ReservoirSpec:
    """Reservoir state, classicality eps in [0, 1] and coupling lambda."""

    state: object
    eps: float
    lam: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise DomainError(f"eps must lie in [0, 1], got {self.eps}")
        if not isinstance(self.state, (CoherentDirac, CoherentCircleMixture, BECFock, Thermal)):
            raise DomainError(f"unsupported reservoir state {self.state!r}")

    @property
    def n(self):
        """Condensate particle number floor(1/eps); None in the classical limit."""
        if self.eps == 0.0:
            return None
        return int(math.floor(1.0 / self.eps + 1e-12))

    def with_eps(self, eps):
        return ReservoirSpec(self.state, eps, self.lam)


def _log_bec(n, x, log_env):
    """log|L_n(x)| + log_env with the sign of L_n kept separately."""
    sign, logabs = laguerre_log(n, x)
    return sign, logabs + log_env


def decoherence_fn(spec, g, t, engine=None):
    """D_eps(t) for the reservoir ``spec`` coupled through form factor ``g``."""
    t = float(t)
    if t < 0.0:
        raise DomainError("decoherence_fn expects t >= 0")
    st, eps, lam = spec.state, spec.eps, spec.lam
    if isinstance(st, Thermal):
        q = rm.thermal_quadratic_form(g, t, st.beta, eps, engine)
        return complex(math.exp(-0.25 * lam * lam * q))
    if t == 0.0:
        return 1.0 + 0j
    log_env = -0.25 * eps * lam * lam * rm.gt_norm_sq(g, t, engine) if eps > 0.0 else 0.0
    c = rm.overlap_gt(st.f0, g, t, engine)
    if isinstance(st, CoherentDirac):
        return math.exp(log_env) * np.exp(1j * math.sqrt(2.0) * lam * c.real)
    if isinstance(st, CoherentCircleMixture) or (isinstance(st, BECFock) and eps == 0.0):
        return complex(math.exp(log_env) * bessel_j0(math.sqrt(2.0) * abs(lam) * abs(c)))
    # BEC at eps > 0
    x = 0.5 * eps * lam * lam * abs(c) ** 2
    sign, logv = _log_bec(spec.n, x, log_env)
    return complex(sign * math.exp(logv)) if logv > -745.0 else 0j


def classical_plateau(spec, g, engine=None):
    """lim_{t->inf} D_0(t) for the classical coherent/condensate families.

    Dirac: |D_0| = 1 always.  Circle mixture / condensate:
    J0(sqrt2 |l| |<f0, w^{-1} g>|).
    """
    st = spec.state
    if isinstance(st, Thermal):
        raise DomainError("thermal reservoirs have no classical plateau formula here")
    v = rm.overlap_inv_omega(st.f0, g, engine)
    if isinstance(st, CoherentDirac):
        # <f0, g_t> -> -i <f0, w^-1 g>
        return complex(np.exp(1j * math.sqrt(2.0) * spec.lam * (-1j * v).real))
    return complex(bessel_j0(math.sqrt(2.0) * abs(spec.lam) * abs(v)))


@dataclass
class DecoherenceTrace:
    times: np.ndarray
    D: np.ndarray
    dAbsD2dt: np.ndarray = None

    @property
    def absD2(self):
        return np.abs(self.D) ** 2

    def rows(self):
        d = self.dAbsD2dt
        for i, t in enumerate(self.times):
            yield (
                float(t),
                float(self.D[i].real),
                float(self.D[i].imag),
                float(self.absD2[i]),
                None if d is None else float(d[i]),
            )

    COLUMNS = ("t", "ReD", "ImD", "absD2", "dAbsD2dt")


def decoherence_trace(spec, g, t_grid, with_derivative=False, engine=None, workers=1):
    """Evaluate D_eps on an increasing grid, optionally with d|D|^2/dt."""
    from .parallel import parallel_map

    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise DomainError("t_grid must be a non-empty 1-d array")
    if t_grid[0] < 0.0 or np.any(np.diff(t_grid) <= 0.0):
        raise DomainError("t_grid must be increasing and start at t >= 0")
    D = np.array(parallel_map(lambda t: decoherence_fn(spec, g, t, engine), t_grid, workers))
    deriv = None
    if with_derivative:
        from .nonmarkov import d_absD2_dt

        deriv = np.array(parallel_map(lambda t: d_absD2_dt(spec, g, t, engine), t_grid, workers))
    return DecoherenceTrace(t_grid, D, deriv)


# ---------------------------------------------------------------------------
# long-time asymptotics of ||g_t||^2


REGIMES = ("Constant", "LogPower", "StretchedExp", "ExpTimesPower", "SuperExp")


def regime_for_exponent(p):
    """Long-time law of int S(w)(1 - cos wt)/w^2 dw for S ~ w^p near 0."""
    if not p > -1.0:
        raise DomainError(f"asymptotic classification needs p > -1, got {p}")
    if p > 1.0:
        return "Constant"
    if p == 1.0:
        return "LogPower"
    if p > 0.0:
        return "StretchedExp"
    if p == 0.0:
        return "ExpTimesPower"
    return "SuperExp"


@dataclass
class AsymptoticsReport:
    p: float
    regime: str
    coefficients: dict
    rate_constants: dict
    residual: float
    conclusive: bool
    family: str = "coherent"
    window: tuple = (10.0, 200.0)
    design: list = field(default_factory=list, repr=False)
    law: str = ""


def growth_law(regime, p):
    """Short name of the fitted large-t law."""
    if regime == "Constant":
        # below p = 2 the plateau is approached more slowly than 1/t
        return "t^{1-p} constant-approach" if p < 2.0 else "constant"
    return {"LogPower": "log", "ExpTimesPower": "linear+log",
            "StretchedExp": "t^{1-p} growth", "SuperExp": "t^{1-p} growth"}[regime]


def _fit(columns, y):
    A = np.column_stack(columns)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    resid = float(np.max(np.abs(fit - y)) / max(np.max(np.abs(y)), 1e-300))
    return coef, resid


def classify_asymptotics(J, eps_lam2=1.0, window=(10.0, 200.0), n_points=200,
                         family="coherent", beta=1.0, eps=0.0, engine=None,
                         residual_limit=0.10):
    """Fit the large-t law of the decoherence exponent on ``window``.

    For the coherent/condensate families the exponent is
    eps l^2 ||g_t||^2 / 4 and the regime follows p of J.  For the thermal
    family the kernel adds a factor 1/w, so the regime follows p - 1 and the
    fitted quantity is the thermal quadratic form at (beta, eps).

    Coefficients refer to the fitted quantity itself; ``rate_constants`` are
    those coefficients times eps l^2 / 4 (the decoherence-exponent scale).
    """
    g = J.form_factor if isinstance(J, rm.SpectralDensity) else J
    p = g.p
    if family == "thermal":
        if not p > 0.0:
            raise InfraredDivergenceError(f"thermal state undefined for p <= 0 (p = {p:g})", p)
        p_eff = p - 1.0
        fn = lambda t: rm.thermal_quadratic_form(g, t, beta, eps, engine)
    elif family == "coherent":
        p_eff = p
        fn = lambda t: rm.gt_norm_sq(g, t, engine)
    else:
        raise DomainError(f"unknown family {family!r}")
    regime = regime_for_exponent(p_eff)
    t0, t1 = window
    if not 0.0 < t0 < t1:
        raise DomainError("fit window must satisfy 0 < t0 < t1")
    ts = np.geomspace(t0, t1, n_points)
    y = np.array([fn(t) for t in ts])
    one = np.ones_like(ts)
    if regime == "Constant":
        # approach to the plateau ~ t^{1-p}
        cols, names = [one, ts ** (1.0 - p_eff)], ["C", "A"]
    elif regime == "LogPower":
        cols, names = [one, np.log(ts)], ["C1", "log_slope"]
    elif regime == "StretchedExp":
        cols, names = [one, ts ** (1.0 - p_eff)], ["C2", "power_coeff"]
    elif regime == "ExpTimesPower":
        cols, names = [one, ts, np.log(ts)], ["C2", "linear_coeff", "log_coeff"]
    else:
        cols, names = [one, ts ** (1.0 - p_eff)], ["C2", "power_coeff"]
    coef, resid = _fit(cols, y)
    coefficients = dict(zip(names, map(float, coef)))
    scale = 0.25 * eps_lam2
    rates = {k: scale * v for k, v in coefficients.items() if k not in ("C", "C1", "C2")}
    if regime == "Constant":
        rates = {"plateau_exponent": scale * coefficients["C"]}
    conclusive = bool(np.all(np.isfinite(coef))) and resid <= residual_limit
    return AsymptoticsReport(p, regime, coefficients, rates, resid, conclusive,
                             family, (t0, t1), names, growth_law(regime, p_eff))


def decoherence_ratio_quantum_classical(spec, g, t, engine=None):
    """D_eps(t) / D_0(t) for a thermal reservoir, from the two closed forms.

    Evaluated as exp(-l^2/4 (Q_eps - Q_0)) so it stays finite where both
    factors are tiny; raises OverflowError once |D_0| itself underflows.
    """
    st = spec.state
    if not isinstance(st, Thermal):
        raise DomainError("the quantum/classical ratio is defined for thermal reservoirs")
    l2 = spec.lam * spec.lam
    q_eps = rm.thermal_quadratic_form(g, t, st.beta, spec.eps, engine)
    q_0 = rm.thermal_quadratic_form(g, t, st.beta, 0.0, engine)
    if 0.25 * l2 * q_0 > 690.0:
        raise OverflowError(f"|D_0({t})| < 1e-300; ratio undefined")
    return math.exp(-0.25 * l2 * (q_eps - q_0))
