"""Time derivatives of |D_eps(t)|^2 and scans of the set where they are positive.

A positive derivative means the trace distance between two evolved spin
states grows, i.e. information flows back from the reservoir.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import reservoir as rm
from .decoherence import (
    BECFock,
    CoherentCircleMixture,
    CoherentDirac,
    ReservoirSpec,
    Thermal,
)
from .errors import DomainError
from .parallel import parallel_map
from .specfun import bessel_j0, bessel_j1, laguerre_log

__all__ = [
    "ZERO_GUARD",
    "BecKinematics",
    "bec_kinematics",
    "d_absD2_dt",
    "d_absD2_dt_bec",
    "d_absD2_dt_thermal",
    "d_absD2_dt_coherent",
    "RegionMap",
    "region_scan",
    "positive_intervals",
]

ZERO_GUARD = 1e-14

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BecKinematics:
    """eps-independent pieces: N = ||g_t||^2, N', c = <f0, g_t>, c'."""

    N: float
    dN: float
    c: complex
    dc: complex


def bec_kinematics(f0, g, t, engine=None):
    t = float(t)
    if t == 0.0:
        return BecKinematics(0.0, 0.0, 0j, -rm.overlap_free(f0, g, 0.0, engine))
    return BecKinematics(
        rm.gt_norm_sq(g, t, engine),
        rm.gt_norm_sq_rate(g, t, engine),
        rm.overlap_gt(f0, g, t, engine),
        -rm.overlap_free(f0, g, t, engine),
    )


def _bec_from_kinematics(k, eps, lam):
    """d/dt of exp(-eps l^2 N / 2) L_n(x)^2 with x = eps l^2 |c|^2 / 2."""
    l2 = lam * lam
    n = int(math.floor(1.0 / eps + 1e-12))
    x = 0.5 * eps * l2 * abs(k.c) ** 2
    dx = eps * l2 * (k.c.conjugate() * k.dc).real
    log_env = -0.5 * eps * l2 * k.N
    sL, logL = laguerre_log(n, x)
    out = 0.0
    if sL != 0.0:
        out += -0.5 * eps * l2 * k.dN * math.exp(2.0 * logL + log_env)
    if n > 0 and sL != 0.0 and dx != 0.0:
        # L_n'(x) = -L^{(1)}_{n-1}(x)
        sD, logD = laguerre_log(n - 1, x, a=1.0)
        if sD != 0.0:
            out += -2.0 * sL * sD * dx * math.exp(logL + logD + log_env)
    return out


def _circle_from_kinematics(k, eps, lam):
    """d/dt of exp(-eps l^2 N / 2) J0(y)^2 with y = sqrt2 |l| |c|."""
    l2 = lam * lam
    env = math.exp(-0.5 * eps * l2 * k.N)
    y = _SQRT2 * abs(lam) * abs(k.c)
    j0 = bessel_j0(y)
    out = -0.5 * eps * l2 * k.dN * env * j0 * j0
    if abs(k.c) > 0.0:
        dy = _SQRT2 * abs(lam) * (k.c.conjugate() * k.dc).real / abs(k.c)
        out += -2.0 * env * j0 * bessel_j1(y) * dy
    return out


def d_absD2_dt_bec(spec, g, t, engine=None, kinematics=None):
    """Analytic d|D_eps(t)|^2/dt for the condensate, general coupling lambda."""
    if not isinstance(spec.state, BECFock):
        raise DomainError("d_absD2_dt_bec needs a BECFock reservoir")
    if float(t) < 0.0:
        raise DomainError("t must be >= 0")
    k = kinematics or bec_kinematics(spec.state.f0, g, t, engine)
    if spec.eps == 0.0:
        return _circle_from_kinematics(k, 0.0, spec.lam)
    return _bec_from_kinematics(k, spec.eps, spec.lam)


def d_absD2_dt_thermal(spec, g, t, engine=None):
    """-l^2 * int w |g|^2 K_eps(w) sin(wt) dw * |D_eps(t)|^2."""
    st = spec.state
    if not isinstance(st, Thermal):
        raise DomainError("d_absD2_dt_thermal needs a Thermal reservoir")
    t = float(t)
    if t < 0.0:
        raise DomainError("t must be >= 0")
    if t == 0.0:
        rm._check_thermal(g, st.beta, spec.eps)
        return 0.0
    l2 = spec.lam * spec.lam
    q = rm.thermal_quadratic_form(g, t, st.beta, spec.eps, engine)
    s = rm.thermal_sine_form(g, t, st.beta, spec.eps, engine)
    return -l2 * s * math.exp(-0.5 * l2 * q)


def d_absD2_dt_coherent(spec, g, t, engine=None):
    """Coherent-state families: Dirac (pure envelope) and circle mixture."""
    st = spec.state
    t = float(t)
    if t < 0.0:
        raise DomainError("t must be >= 0")
    if isinstance(st, CoherentDirac):
        if spec.eps == 0.0 or t == 0.0:
            return 0.0
        l2 = spec.lam * spec.lam
        N = rm.gt_norm_sq(g, t, engine)
        return -0.5 * spec.eps * l2 * rm.gt_norm_sq_rate(g, t, engine) * math.exp(-0.5 * spec.eps * l2 * N)
    if isinstance(st, CoherentCircleMixture):
        return _circle_from_kinematics(bec_kinematics(st.f0, g, t, engine), spec.eps, spec.lam)
    raise DomainError("d_absD2_dt_coherent needs a coherent reservoir")


def d_absD2_dt(spec, g, t, engine=None):
    """Dispatch on the reservoir family."""
    st = spec.state
    if isinstance(st, BECFock):
        return d_absD2_dt_bec(spec, g, t, engine)
    if isinstance(st, Thermal):
        return d_absD2_dt_thermal(spec, g, t, engine)
    return d_absD2_dt_coherent(spec, g, t, engine)


def positive_intervals(t_grid, values, threshold=ZERO_GUARD):
    """Maximal runs of consecutive grid points with value > threshold.

    Returned as (t_first, t_last) pairs of grid points; NaN breaks a run.
    """
    out = []
    start = None
    for i, v in enumerate(values):
        pos = bool(v > threshold)  # NaN compares False
        if pos and start is None:
            start = i
        elif not pos and start is not None:
            out.append((float(t_grid[start]), float(t_grid[i - 1])))
            start = None
    if start is not None:
        out.append((float(t_grid[start]), float(t_grid[-1])))
    return out


def _cell_weights(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.size == 1:
        return np.zeros(1)
    w = np.empty_like(t)
    w[0] = 0.5 * (t[1] - t[0])
    w[-1] = 0.5 * (t[-1] - t[-2])
    w[1:-1] = 0.5 * (t[2:] - t[:-2])
    return w


@dataclass
class RegionMap:
    """Derivative values on an (eps, t) grid and their positive runs.

    ``values[i, j]`` is d|D|^2/dt at eps_grid[i], t_grid[j]; NaN marks a
    failed cell (see ``failures``).
    """

    t_grid: np.ndarray
    eps_grid: np.ndarray
    values: np.ndarray
    threshold: float = ZERO_GUARD
    regions: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    note: str = ""

    def __post_init__(self):
        if not self.regions:
            self.regions = {
                float(e): positive_intervals(self.t_grid, self.values[i], self.threshold)
                for i, e in enumerate(self.eps_grid)
            }

    @property
    def positive_mask(self):
        return self.values > self.threshold

    def measure(self, eps):
        """Trapezoid-weighted length of the positive set at one eps row."""
        i = int(np.argmin(np.abs(np.asarray(self.eps_grid) - eps)))
        return float(np.sum(_cell_weights(self.t_grid) * self.positive_mask[i]))

    def sign_changes(self, eps):
        """Number of strict sign changes along t, ignoring near-zero cells."""
        i = int(np.argmin(np.abs(np.asarray(self.eps_grid) - eps)))
        v = self.values[i]
        s = np.sign(np.where(np.abs(v) > self.threshold, v, 0.0))
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] != s[:-1]))

    def region_rows(self):
        for e in self.eps_grid:
            for a, b in self.regions[float(e)]:
                yield (float(e), a, b)

    def matrix_rows(self):
        yield ["eps\\t"] + [float(t) for t in self.t_grid]
        for i, e in enumerate(self.eps_grid):
            yield [float(e)] + [float(v) for v in self.values[i]]


def _check_grid(x, name, lo=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d grid")
    if np.any(np.diff(x) <= 0.0):
        raise DomainError(f"{name} must be strictly increasing")
    if lo is not None and x[0] < lo:
        raise DomainError(f"{name} must start at >= {lo}")
    return x


def region_scan(spec, g, t_grid, eps_grid, engine=None, workers=1, threshold=ZERO_GUARD):
    """d|D_eps(t)|^2/dt on the grid for the family of ``spec`` (its eps is ignored).

    Cells whose evaluation raises a numerical error are stored as NaN and
    listed in ``failures``; domain errors propagate.
    """
    t_grid = _check_grid(t_grid, "t_grid", 0.0)
    eps_grid = _check_grid(eps_grid, "eps_grid", 0.0)
    if eps_grid[-1] > 1.0:
        raise DomainError("eps_grid must lie in [0, 1]")
    st = spec.state
    values = np.zeros((eps_grid.size, t_grid.size))
    failures = []
    note = ""

    if isinstance(st, (BECFock, CoherentCircleMixture)):
        # the kinematics do not depend on eps: one column per t
        def column(t):
            try:
                return bec_kinematics(st.f0, g, t, engine)
            except (ArithmeticError, RuntimeError) as exc:
                return exc

        kins = parallel_map(column, t_grid, workers)
        for j, k in enumerate(kins):
            for i, e in enumerate(eps_grid):
                if isinstance(k, Exception):
                    values[i, j] = math.nan
                    failures.append((float(e), float(t_grid[j]), repr(k)))
                    continue
                if isinstance(st, BECFock) and e > 0.0:
                    values[i, j] = _bec_from_kinematics(k, e, spec.lam)
                else:
                    values[i, j] = _circle_from_kinematics(k, e, spec.lam)
    else:
        if isinstance(st, CoherentDirac) and np.all(eps_grid == 0.0):
            note = "classical coherent Dirac state: |D| = 1 identically, no positive region"
        cells = [(i, j) for i in range(eps_grid.size) for j in range(t_grid.size)]

        def cell(ij):
            i, j = ij
            try:
                return d_absD2_dt(spec.with_eps(float(eps_grid[i])), g, t_grid[j], engine)
            except (ArithmeticError, RuntimeError) as exc:
                return exc

        for (i, j), v in zip(cells, parallel_map(cell, cells, workers)):
            if isinstance(v, Exception):
                values[i, j] = math.nan
                failures.append((float(eps_grid[i]), float(t_grid[j]), repr(v)))
            else:
                values[i, j] = v
    return RegionMap(t_grid, eps_grid, values, threshold, failures=failures, note=note)
