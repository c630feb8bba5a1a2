"""Form factors, spectral densities and the frequency integrals built on them.

Inner products use the radial convention

    <f, g> = int_0^inf  w^2 conj(f(w)) g(w) dw,

so the form factor family ``PaperRadial`` is unit-normalised and the
spectral density is J(w) = (pi/2) w^2 |g(w)|^2.

Every integral is evaluated by `InnerProductEngine.integrate`, which splits
[0, inf) at min(pi/t, scale): the low-frequency piece carries the algebraic
endpoint singularity (QUADPACK QAWS), the remainder carries the oscillation
(QUADPACK QAWO, a Clenshaw-Curtis/Filon-type rule).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from .errors import DomainError, InfraredDivergenceError, IntegrationError

__all__ = [
    "FormFactor",
    "PaperRadial",
    "Tabulated",
    "SpectralDensity",
    "InnerProductEngine",
    "DEFAULT_ENGINE",
    "overlap_free",
    "overlap_gt",
    "overlap_static",
    "overlap_inv_omega",
    "gt_norm_sq",
    "gt_norm_sq_rate",
    "gt_norm_sq_limit",
    "thermal_kernel",
    "thermal_quadratic_form",
    "thermal_sine_form",
    "paper_radial_overlap_free",
    "paper_radial_gt_norm_sq",
]


class FormFactor:
    """Radial coupling function g(w) on (0, inf).

    Subclasses provide ``ir_power`` (g ~ w**ir_power as w -> 0), the smooth
    factor ``smooth(w) = g(w) / w**ir_power``, the support ``[lower, upper]``
    and a characteristic frequency ``scale``.
    """

    ir_power = 0.0
    lower = 0.0
    is_real = True

    def smooth(self, w):
        raise NotImplementedError

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.smooth(w) * w**self.ir_power

    @property
    def upper(self):
        raise NotImplementedError

    @property
    def scale(self):
        raise NotImplementedError

    @property
    def p(self):
        """Infrared exponent of the spectral density, J(w) ~ w**p."""
        return 2.0 + 2.0 * self.ir_power


@dataclass(frozen=True)
class PaperRadial(FormFactor):
    """g(w) = wc^{-(a+3)/2} Gamma(a+3)^{-1/2} exp(-w/(2 wc)) w^{a/2}."""

    alpha: float
    omega_c: float = 1.0

    def __post_init__(self):
        if not self.alpha > -3.0:
            raise DomainError(f"PaperRadial needs alpha > -3, got {self.alpha}")
        if not self.omega_c > 0.0:
            raise DomainError(f"PaperRadial needs omega_c > 0, got {self.omega_c}")

    @property
    def ir_power(self):
        return 0.5 * self.alpha

    @property
    def log_norm(self):
        return -0.5 * ((self.alpha + 3.0) * math.log(self.omega_c) + math.lgamma(self.alpha + 3.0))

    def smooth(self, w):
        return np.exp(self.log_norm - np.asarray(w, dtype=float) / (2.0 * self.omega_c))

    @property
    def upper(self):
        # |g|^2 w^(2+k) has Gamma(alpha+3+k) shape; k <= 3 covers every kernel used here.
        shape = max(self.alpha + 6.0, 1.0)
        return float(self.omega_c * special.gammainccinv(shape, 1e-22))

    @property
    def scale(self):
        return self.omega_c


@dataclass(frozen=True, eq=False)
class Tabulated(FormFactor):
    """Form factor sampled on an increasing grid, cubic-interpolated.

    Zero outside the grid.  ``p`` (the spectral-density exponent) has to be
    supplied by the caller where asymptotic classification needs it.
    """

    omega: np.ndarray
    values: np.ndarray
    spectral_exponent: float = None
    _spline_re: CubicSpline = field(init=False, repr=False)
    _spline_im: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if w.ndim != 1 or w.size < 4 or v.shape != w.shape:
            raise DomainError("Tabulated needs matching 1-d grids with at least 4 nodes")
        if w[0] <= 0.0 or np.any(np.diff(w) <= 0.0):
            raise DomainError("Tabulated grid must be positive and strictly increasing")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_spline_re", CubicSpline(w, v.real))
        object.__setattr__(self, "_spline_im", CubicSpline(w, v.imag))

    @property
    def is_real(self):
        return not np.any(self.values.imag)

    @property
    def lower(self):
        return float(self.omega[0])

    @property
    def upper(self):
        return float(self.omega[-1])

    @property
    def scale(self):
        return float(np.median(self.omega))

    @property
    def p(self):
        if self.spectral_exponent is None:
            raise DomainError("Tabulated form factor: spectral exponent p must be supplied")
        return float(self.spectral_exponent)

    def smooth(self, w):
        w = np.asarray(w, dtype=float)
        inside = (w >= self.omega[0]) & (w <= self.omega[-1])
        out = np.where(inside, self._spline_re(w), 0.0)
        if self.is_real:
            return out
        return out + 1j * np.where(inside, self._spline_im(w), 0.0)


@dataclass(frozen=True)
class SpectralDensity:
    """J(w) = (pi/2) w^2 |g(w)|^2 for a radial form factor."""

    form_factor: FormFactor

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return 0.5 * np.pi * w**2 * np.abs(self.form_factor(w)) ** 2

    @property
    def p(self):
        return self.form_factor.p


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class IntegralResult:
    value: float
    abserr: float


def _sinc(x):
    return np.sinc(x / np.pi)


# Oscillatory factors, and their w -> 0 behaviour w**m written as w**m * reg(w t).
_OSC = {
    None: (0, lambda w, t: np.ones_like(w)),
    "cos": (0, lambda w, t: np.cos(w * t)),
    "sin": (1, lambda w, t: t * _sinc(w * t)),
    "1-cos": (2, lambda w, t: 0.5 * t * t * _sinc(0.5 * w * t) ** 2),
}


@dataclass(frozen=True)
class InnerProductEngine:
    """Settings for the frequency quadratures.

    Immutable; every method is pure, so one engine can be shared freely.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    limit: int = 10_000
    fail_factor: float = 1e3

    def integrate(self, smooth, power, osc, t, lo, hi, scale):
        """int_lo^hi smooth(w) * w**power * osc(w t) dw for real ``smooth``.

        ``osc`` is one of None, "cos", "sin", "1-cos".  ``smooth`` must be
        regular on [lo, hi]; the algebraic factor may be singular at lo == 0.
        """
        if osc not in _OSC:
            raise ValueError(f"unknown oscillatory weight {osc!r}")
        t = float(t)
        if t < 0.0:
            raise ValueError("integrate expects t >= 0; callers handle parity")
        if t == 0.0:
            if osc in ("sin", "1-cos"):
                return IntegralResult(0.0, 0.0)
            osc = None
        m, reg = _OSC[osc]
        expo = power + m
        if lo == 0.0 and not expo > -1.0:
            raise InfraredDivergenceError(
                f"integrand ~ w^{expo:g} is not integrable at w = 0", exponent=expo
            )
        if hi <= lo:
            return IntegralResult(0.0, 0.0)

        split = scale if t == 0.0 else min(scale, math.pi / t)
        split = min(max(split, lo), hi)
        total, err = 0.0, 0.0

        # low-frequency piece: oscillation folded into a regular function
        if split > lo:
            if lo == 0.0 and not (expo >= 0.0 and float(expo).is_integer()):
                fun = lambda w: float(smooth(w) * reg(w, t))
                v, e = self._quad(fun, lo, split, weight="alg", wvar=(expo, 0.0))
            else:
                fun = lambda w: float(smooth(w) * w**expo * reg(w, t))
                v, e = self._quad(fun, lo, split)
            total += v
            err += e

        if split < hi:
            base = lambda w: float(smooth(w) * w**power)
            if osc is None:
                v, e = self._quad_log(smooth, power, split, hi)
            elif osc == "1-cos":
                v1, e1 = self._quad_log(smooth, power, split, hi)
                v2, e2 = self._quad(base, split, hi, weight="cos", wvar=t)
                v, e = v1 - v2, e1 + e2
            else:
                v, e = self._quad(base, split, hi, weight=osc, wvar=t)
            total += v
            err += e
        return IntegralResult(total, err)

    def _quad_log(self, smooth, power, a, b):
        # non-oscillatory tail in u = log w; tames steep w**power near a
        fun = lambda u: float(smooth(math.exp(u)) * math.exp(u * (power + 1.0)))
        return self._quad(fun, math.log(a), math.log(b))

    def _quad(self, fun, a, b, **kw):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            v, e = integrate.quad(
                fun, a, b, epsabs=self.abs_tol, epsrel=self.rel_tol, limit=self.limit, **kw
            )
        budget = self.fail_factor * max(self.abs_tol, self.rel_tol * abs(v))
        if not math.isfinite(v) or (caught and e > budget):
            raise IntegrationError(
                f"quadrature on [{a:g}, {b:g}] did not converge",
                value=v,
                abserr=e,
                diagnostics={"interval": (a, b), "weight": kw.get("weight"),
                             "messages": [str(w.message) for w in caught]},
            )
        return v, e

    def integrate_complex(self, smooth, power, osc, t, lo, hi, scale, is_real):
        if is_real:
            return self.integrate(smooth, power, osc, t, lo, hi, scale).value + 0j
        re = self.integrate(lambda w: np.real(smooth(w)), power, osc, t, lo, hi, scale)
        im = self.integrate(lambda w: np.imag(smooth(w)), power, osc, t, lo, hi, scale)
        return complex(re.value, im.value)


DEFAULT_ENGINE = InnerProductEngine()


def _engine(engine):
    return DEFAULT_ENGINE if engine is None else engine


def _pair(f, g):
    """Smooth part and power of w^2 conj(f) g, plus integration bounds."""
    power = 2.0 + f.ir_power + g.ir_power
    smooth = lambda w: np.conj(f.smooth(w)) * g.smooth(w)
    lo = max(f.lower, g.lower)
    hi = min(f.upper, g.upper) if isinstance(f, Tabulated) or isinstance(g, Tabulated) \
        else max(f.upper, g.upper)
    scale = min(f.scale, g.scale)
    return smooth, power, lo, hi, scale, (f.is_real and g.is_real)


def _weighted(eng, smooth, power, osc, t, lo, hi, scale, is_real):
    return eng.integrate_complex(smooth, power, osc, t, lo, hi, scale, is_real)


def overlap_free(f, g, t, engine=None):
    """<e^{-i t w} f, g> = int w^2 conj(f) g e^{i w t} dw."""
    eng = _engine(engine)
    smooth, power, lo, hi, scale, real = _pair(f, g)
    at = abs(float(t))
    c = _weighted(eng, smooth, power, "cos", at, lo, hi, scale, real)
    s = _weighted(eng, smooth, power, "sin", at, lo, hi, scale, real)
    if t < 0:
        s = -s
    return c + 1j * s


def overlap_static(f, g, engine=None):
    """<f, g>."""
    return overlap_free(f, g, 0.0, engine)


def overlap_gt(f, g, t, engine=None):
    """<f, g_t> with g_t = (1 - e^{i w t}) g / (i w).

    Finite for every t >= 0 and every admissible exponent; only the
    t -> inf limit (`overlap_inv_omega`) needs the infrared condition.
    """
    t = float(t)
    if t < 0.0:
        raise DomainError("overlap_gt expects t >= 0")
    if t == 0.0:
        return 0j
    eng = _engine(engine)
    smooth, power, lo, hi, scale, real = _pair(f, g)
    s = _weighted(eng, smooth, power - 1.0, "sin", t, lo, hi, scale, real)
    c = _weighted(eng, smooth, power - 1.0, "1-cos", t, lo, hi, scale, real)
    # (1 - e^{iwt})/(iw) = -(sin wt)/w - i (1 - cos wt)/w
    return -s - 1j * c


def overlap_inv_omega(f, g, engine=None):
    """<f, w^{-1} g>, the static limit entering lim_t <f, g_t> = -i <f, w^{-1} g>."""
    eng = _engine(engine)
    smooth, power, lo, hi, scale, real = _pair(f, g)
    if lo == 0.0 and not power - 1.0 > -1.0:
        raise InfraredDivergenceError(
            f"<f, w^-1 g> diverges: integrand ~ w^{power - 1.0:g} at w = 0",
            exponent=power - 1.0,
        )
    return _weighted(eng, smooth, power - 1.0, None, 0.0, lo, hi, scale, real)


def _abs2(g):
    return lambda w: np.abs(g.smooth(w)) ** 2


def gt_norm_sq(g, t, engine=None):
    """||g_t||^2 = 2 int |g|^2 (1 - cos w t) dw = (4/pi) int J (1 - cos w t)/w^2 dw."""
    t = abs(float(t))
    if t == 0.0:
        return 0.0
    eng = _engine(engine)
    r = eng.integrate(_abs2(g), 2.0 * g.ir_power, "1-cos", t, g.lower, g.upper, g.scale)
    return 2.0 * r.value


def gt_norm_sq_rate(g, t, engine=None):
    """d/dt ||g_t||^2 = 2 int w |g|^2 sin(w t) dw."""
    t = float(t)
    if t == 0.0:
        return 0.0
    eng = _engine(engine)
    r = eng.integrate(_abs2(g), 2.0 * g.ir_power + 1.0, "sin", abs(t), g.lower, g.upper, g.scale)
    return 2.0 * r.value if t > 0.0 else -2.0 * r.value


def gt_norm_sq_limit(g, engine=None):
    """lim_{t->inf} ||g_t||^2 = 2 int |g|^2 dw (finite iff J(w)/w^2 is integrable)."""
    eng = _engine(engine)
    r = eng.integrate(_abs2(g), 2.0 * g.ir_power, None, 0.0, g.lower, g.upper, g.scale)
    return 2.0 * r.value


def _x_coth_x(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    big = xs / np.tanh(xs)
    x2 = x * x
    series = 1.0 + x2 / 3.0 - x2 * x2 / 45.0
    return np.where(small, series, big)


def thermal_kernel(w, beta, eps):
    """eps * coth(beta eps w / 2), continued to 2/(beta w) at eps = 0."""
    w = np.asarray(w, dtype=float)
    return (2.0 / (beta * w)) * _x_coth_x(0.5 * beta * eps * w)


def _check_thermal(g, beta, eps):
    if not beta > 0.0:
        raise DomainError(f"beta' must be > 0, got {beta}")
    if not eps >= 0.0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    if g.lower == 0.0 and not g.p > 0.0:
        raise InfraredDivergenceError(
            f"thermal state undefined for p <= 0 (p = {g.p:g})", exponent=g.p
        )


def thermal_quadratic_form(g, t, beta, eps, engine=None):
    """<g_t, eps coth(beta eps w/2) g_t>, which tends to <g_t, (2/(beta w)) g_t> as eps -> 0.

    The thermal decoherence function is exp(-lambda^2/4 * this).
    """
    _check_thermal(g, beta, eps)
    t = abs(float(t))
    if t == 0.0:
        return 0.0
    eng = _engine(engine)
    smooth = lambda w: np.abs(g.smooth(w)) ** 2 * (2.0 / beta) * _x_coth_x(0.5 * beta * eps * w)
    r = eng.integrate(smooth, 2.0 * g.ir_power - 1.0, "1-cos", t, g.lower, g.upper, g.scale)
    return 2.0 * r.value


def thermal_sine_form(g, t, beta, eps, engine=None):
    """int w |g|^2 eps coth(beta eps w/2) sin(w t) dw; half the t-derivative of the quadratic form."""
    _check_thermal(g, beta, eps)
    t = float(t)
    if t == 0.0:
        return 0.0
    eng = _engine(engine)
    smooth = lambda w: np.abs(g.smooth(w)) ** 2 * (2.0 / beta) * _x_coth_x(0.5 * beta * eps * w)
    r = eng.integrate(smooth, 2.0 * g.ir_power, "sin", abs(t), g.lower, g.upper, g.scale)
    return r.value if t > 0.0 else -r.value


# ---------------------------------------------------------------------------
# closed forms for the PaperRadial family (Gamma-integral identities)


def paper_radial_overlap_free(f, g, t):
    """Closed form of <e^{-iwt} f, g> for two PaperRadial factors.

    int w^{s-1} e^{-a w} e^{i w t} dw = Gamma(s) (a - i t)^{-s}.
    """
    s = 3.0 + 0.5 * (f.alpha + g.alpha)
    a = 0.5 * (1.0 / f.omega_c + 1.0 / g.omega_c)
    t = np.asarray(t, dtype=float)
    log_val = f.log_norm + g.log_norm + math.lgamma(s) - s * np.log(a - 1j * t)
    out = np.exp(log_val)
    return complex(out) if out.ndim == 0 else out


def paper_radial_gt_norm_sq(g, t):
    """||g_t||^2 for PaperRadial, via ||g_t||^2 = 2 Re int_0^t (t - u) C(u) du.

    C(u) = (1 - i wc u)^{-(alpha+3)}.  The antiderivatives are elementary,
    with separate branches at the integer exponents m = alpha+3 in {1, 2}.
    """
    m = g.alpha + 3.0
    c = g.omega_c
    t = float(t)
    if t == 0.0:
        return 0.0
    z = 1.0 - 1j * c * t

    # I1 = int_0^t C du,  I2 = int_0^t u C du, with u = (1 - z)/(i c)
    def prim(k):  # int z^{-k} dz from 1 to z
        if abs(k - 1.0) < 1e-14:
            return np.log(z)
        return (z ** (1.0 - k) - 1.0) / (1.0 - k)

    dz = -1j * c  # dz/du
    i1 = prim(m) / dz
    # u C = (1 - z)/(i c) * z^{-m}
    i2 = (prim(m) - prim(m - 1.0)) / (1j * c) / dz
    return float(2.0 * np.real(t * i1 - i2))
