"""Special functions used by the closed-form decoherence functions.

Laguerre polynomials are evaluated by the three-term recurrence, with an
optional log-scaled variant for large degrees.  ``bessel_j0`` and
``gamma_fn`` delegate to scipy / the standard library; the trapezoid
angle average is kept as an independent check on ``bessel_j0``.
"""

import math

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "laguerre",
    "laguerre_log",
    "laguerre_derivative",
    "bessel_j0",
    "bessel_j1",
    "bessel_j0_by_angle_average",
    "gamma_fn",
]

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)

# Above this degree the recurrence is replaced by Hilb's Bessel asymptotics,
# accurate to ~1e-10 while n*x stays below ~1e3 (the small-eps regime).
HILB_MIN_DEGREE = 200_000


def _check_degree(n):
    if int(n) != n or n < 0:
        raise DomainError(f"Laguerre degree must be a non-negative integer, got {n!r}")
    return int(n)


def laguerre(n, x):
    """Laguerre polynomial L_n(x) by upward recurrence.

    (k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}

    Raises OverflowError if the value is not representable; use
    `laguerre_log` in that case.
    """
    sign, logabs = laguerre_log(n, x)
    if logabs > 709.0:
        raise OverflowError(f"L_{n}({x}) overflows float64")
    return sign * math.exp(logabs)


def laguerre_log(n, x, a=0.0):
    """Generalized Laguerre L_n^{(a)}(x) as ``(sign, log|value|)``.

    The recurrence is rescaled whenever the iterates exceed 1e150, so the
    result never overflows.  A zero value is returned as ``(0.0, -inf)``.
    """
    n = _check_degree(n)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"Laguerre argument must be finite, got {x!r}")
    if n >= HILB_MIN_DEGREE and x >= 0.0:
        return _laguerre_hilb_log(n, x, a)
    prev = 1.0
    if n == 0:
        return 1.0, 0.0
    cur = 1.0 + a - x
    scale = 0.0
    for k in range(1, n):
        nxt = ((2 * k + 1 + a - x) * cur - (k + a) * prev) / (k + 1)
        prev, cur = cur, nxt
        if abs(cur) > _RESCALE:
            prev /= _RESCALE
            cur /= _RESCALE
            scale += _LOG_RESCALE
    if cur == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, cur), math.log(abs(cur)) + scale


def _laguerre_hilb_log(n, x, a):
    """e^{x/2} (nu x)^{-a/2} Gamma(n+a+1)/n! J_a(2 sqrt(nu x)), nu = n + (a+1)/2."""
    nu = n + 0.5 * (a + 1.0)
    if x == 0.0:
        val_log = math.log(special.poch(n + 1.0, a)) - math.lgamma(a + 1.0)
        return 1.0, val_log
    y = 2.0 * math.sqrt(nu * x)
    j = float(special.jv(a, y))
    if j == 0.0:
        return 0.0, -math.inf
    log_pref = 0.5 * x - 0.5 * a * math.log(nu * x) + math.log(special.poch(n + 1.0, a))
    return math.copysign(1.0, j), log_pref + math.log(abs(j))


def laguerre_derivative(n, x):
    """d/dx L_n(x) = -L_{n-1}^{(1)}(x)."""
    n = _check_degree(n)
    if n == 0:
        return 0.0
    sign, logabs = laguerre_log(n - 1, x, a=1.0)
    return -sign * math.exp(logabs)


def bessel_j0(x):
    """Bessel function J_0 for x >= 0 (scipy's cephes implementation)."""
    x = float(x)
    if not x >= 0.0:
        raise DomainError(f"bessel_j0 expects x >= 0 (pass |z|), got {x!r}")
    return float(special.j0(x))


def bessel_j1(x):
    """Bessel function J_1, needed for d/dt of J_0(|q(t)|)."""
    x = float(x)
    if not x >= 0.0:
        raise DomainError(f"bessel_j1 expects x >= 0, got {x!r}")
    return float(special.j1(x))


def bessel_j0_by_angle_average(z, n_nodes):
    """(1/2pi) * integral of exp(i Re(z e^{i theta})) over one period.

    Trapezoid rule on ``n_nodes`` uniform nodes; spectrally accurate because
    the integrand is periodic and entire in theta.
    """
    if n_nodes < 2:
        raise DomainError("n_nodes must be >= 2")
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    vals = np.exp(1j * np.real(complex(z) * np.exp(1j * theta)))
    return float(np.mean(vals).real)


def gamma_fn(x):
    """Gamma function for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma_fn expects x > 0, got {x!r}")
    return math.gamma(x)
