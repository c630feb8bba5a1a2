import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcspin import specfun as sf
from qcspin.errors import DomainError

# reference values from mpmath at 30 digits
LAGUERRE = [
    (10, 2.5, -0.880252676666098296957671957672),
    (50, 30.0, 293000.507359623544011818057204),
    (200, 7.0, 0.616854743550427715180514423216),
]


@pytest.mark.parametrize("n,x,ref", LAGUERRE)
def test_laguerre_reference(n, x, ref):
    assert sf.laguerre(n, x) == pytest.approx(ref, rel=1e-11)


def test_laguerre_low_degrees():
    assert sf.laguerre(0, 3.7) == 1.0
    assert sf.laguerre(1, 0.3) == pytest.approx(0.7, abs=1e-15)
    assert sf.laguerre(2, 1.0) == pytest.approx(-0.5, abs=1e-15)


def test_generalized_laguerre_and_derivative():
    s, la = sf.laguerre_log(5, 1.5, a=1.0)
    assert s * math.exp(la) == pytest.approx(-1.23515625, rel=1e-13)
    h = 1e-6
    fd = (sf.laguerre(6, 2.0 + h) - sf.laguerre(6, 2.0 - h)) / (2 * h)
    assert sf.laguerre_derivative(6, 2.0) == pytest.approx(fd, abs=1e-8)
    assert sf.laguerre_derivative(0, 4.0) == 0.0


def test_laguerre_log_does_not_overflow():
    s, la = sf.laguerre_log(2000, 5000.0)
    assert math.isfinite(la) and la > 709.0
    with pytest.raises(OverflowError):
        sf.laguerre(2000, 5000.0)


@pytest.mark.parametrize("bad", [-1, 2.5])
def test_laguerre_rejects_bad_degree(bad):
    with pytest.raises(DomainError):
        sf.laguerre(bad, 1.0)


def test_laguerre_rejects_nonfinite():
    with pytest.raises(DomainError):
        sf.laguerre(3, float("nan"))


def test_bessel_reference():
    assert sf.bessel_j0(0.0) == 1.0
    assert sf.bessel_j0(0.7) == pytest.approx(0.881200888607405295449147553335, rel=1e-14)
    assert sf.bessel_j0(5.0) == pytest.approx(-0.177596771314338304347397013075, rel=1e-13)
    assert sf.bessel_j1(2.0) == pytest.approx(0.576724807756873387202448242269, rel=1e-14)
    with pytest.raises(DomainError):
        sf.bessel_j0(-1.0)


def test_gamma():
    assert sf.gamma_fn(5.0) == 24.0
    assert sf.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    with pytest.raises(DomainError):
        sf.gamma_fn(0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(-math.pi, math.pi))
def test_angle_average_matches_j0(r, phase):
    z = r * complex(math.cos(phase), math.sin(phase))
    assert sf.bessel_j0_by_angle_average(z, 128) == pytest.approx(sf.bessel_j0(r), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 60), st.floats(0.0, 50.0))
def test_laguerre_bounded_by_exp_half_x(n, x):
    # |L_n(x)| <= e^{x/2} for x >= 0
    s, la = sf.laguerre_log(n, x)
    assert la <= 0.5 * x + 1e-9


def test_angle_average_needs_two_nodes():
    with pytest.raises(DomainError):
        sf.bessel_j0_by_angle_average(1.0, 1)
