import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcspin import reservoir as rm
from qcspin.errors import DomainError, InfraredDivergenceError


def test_paper_radial_normalized():
    for a in (-2.5, 0.0, 3.0):
        g = rm.PaperRadial(a, 1.7)
        assert rm.overlap_static(g, g).real == pytest.approx(1.0, rel=1e-10)


def test_paper_radial_rejects_bad_parameters():
    with pytest.raises(DomainError):
        rm.PaperRadial(-3.0, 1.0)
    with pytest.raises(DomainError):
        rm.PaperRadial(0.0, 0.0)


def test_overlap_free_alpha0_t1(g0):
    # (1 - i)^{-3} = -1/4 + i/4
    v = rm.overlap_free(g0, g0, 1.0)
    assert v.real == pytest.approx(-0.25, abs=1e-12)
    assert v.imag == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("af,ag,wf,wg", [(0.0, 0.0, 1.0, 1.0), (1.5, -1.0, 0.7, 2.0), (-2.5, 4.0, 1.0, 1.0)])
@pytest.mark.parametrize("t", [0.0, 0.3, 2.0, 17.0, -4.0])
def test_overlap_free_matches_closed_form(af, ag, wf, wg, t):
    f, g = rm.PaperRadial(af, wf), rm.PaperRadial(ag, wg)
    ref = rm.paper_radial_overlap_free(f, g, t)
    assert abs(rm.overlap_free(f, g, t) - ref) <= 1e-9 * max(1.0, abs(ref))


# 2 int |g|^2 (1 - cos wt) dw from mpmath
GT_NORM = [
    (0.0, 1.0, 0.5),
    (0.0, 10.0, 0.990099009900990099009900990099),
    (1.5, 3.0, 0.241422629900976005836218222676),
    (-2.5, 4.0, 11.7279975689925321116968529137),
    (5.0, 2.0, 0.0472624761904761904761904761905),
]


@pytest.mark.parametrize("a,t,ref", GT_NORM)
def test_gt_norm_sq_reference(a, t, ref):
    g = rm.PaperRadial(a, 1.0)
    assert rm.gt_norm_sq(g, t) == pytest.approx(ref, rel=1e-9)
    assert rm.paper_radial_gt_norm_sq(g, t) == pytest.approx(ref, rel=1e-9)


def test_gt_norm_sq_alpha_minus2_closed_form():
    g = rm.PaperRadial(-2.0, 1.0)
    for t in (0.5, 5.0, 100.0):
        ref = 2 * t * math.atan(t) - math.log1p(t * t)
        assert rm.gt_norm_sq(g, t) == pytest.approx(ref, rel=1e-9)


def test_gt_norm_sq_rate_is_derivative():
    g = rm.PaperRadial(1.2, 1.0)
    t, h = 4.3, 1e-5
    fd = (rm.gt_norm_sq(g, t + h) - rm.gt_norm_sq(g, t - h)) / (2 * h)
    assert rm.gt_norm_sq_rate(g, t) == pytest.approx(fd, abs=1e-8)


def test_overlap_gt_reference():
    g = rm.PaperRadial(0.0, 1.0)
    assert abs(rm.overlap_gt(g, g, 2.0) - complex(-0.08, -0.56)) < 1e-10
    g1 = rm.PaperRadial(1.0, 1.0)
    ref = complex(0.00208617812168108026096191776665, -0.334736762251555150963434987104)
    assert abs(rm.overlap_gt(g1, g1, 5.0) - ref) < 1e-10


def test_overlap_inv_omega_and_divergence():
    g = rm.PaperRadial(0.0, 1.0)
    # int w |g|^2 dw = Gamma(alpha + 2) / Gamma(alpha + 3)
    assert rm.overlap_inv_omega(g, g).real == pytest.approx(0.5, rel=1e-10)
    with pytest.raises(InfraredDivergenceError):
        rm.overlap_inv_omega(rm.PaperRadial(-2.5, 1.0), rm.PaperRadial(-2.5, 1.0))


def test_overlap_gt_tends_to_minus_i_inv_omega():
    g = rm.PaperRadial(1.0, 1.0)
    v = rm.overlap_inv_omega(g, g)
    assert abs(rm.overlap_gt(g, g, 2000.0) - (-1j * v)) < 1e-6


THERMAL = [
    (2.0, 3.0, 1.0, 0.5, 0.199351520638980420594710361913),
    (0.5, 7.0, 2.0, 0.0, 0.763630668816938393939728445024),
    (1.0, 2.0, 1.5, 0.25, 0.366624684557097594272985322816),
]


@pytest.mark.parametrize("a,t,beta,eps,ref", THERMAL)
def test_thermal_quadratic_form_reference(a, t, beta, eps, ref):
    g = rm.PaperRadial(a, 1.0)
    assert rm.thermal_quadratic_form(g, t, beta, eps) == pytest.approx(ref, rel=1e-9)


def test_thermal_needs_positive_p():
    with pytest.raises(InfraredDivergenceError):
        rm.thermal_quadratic_form(rm.PaperRadial(-2.0, 1.0), 1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        rm.thermal_quadratic_form(rm.PaperRadial(1.0, 1.0), 1.0, -1.0, 0.5)


def test_thermal_kernel_classical_limit():
    w = np.array([0.1, 1.0, 5.0])
    assert np.allclose(rm.thermal_kernel(w, 2.0, 0.0), 1.0 / w)
    assert np.allclose(rm.thermal_kernel(w, 2.0, 1e-9), 1.0 / w, rtol=1e-12)


def test_tabulated_form_factor_reproduces_radial():
    g = rm.PaperRadial(1.0, 1.0)
    w = np.linspace(1e-4, 60.0, 6001)
    tab = rm.Tabulated(w, g(w))
    for t in (0.5, 3.0):
        assert abs(rm.overlap_free(tab, g, t) - rm.paper_radial_overlap_free(g, g, t)) < 1e-6


def test_spectral_density_exponent():
    J = rm.SpectralDensity(rm.PaperRadial(-0.5, 1.0))
    assert J.p == pytest.approx(1.5)
    w = 0.3
    g = rm.PaperRadial(-0.5, 1.0)
    assert J(w) == pytest.approx(0.5 * math.pi * w * w * abs(g(w)) ** 2)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.9, 6.0), st.floats(0.0, 60.0))
def test_gt_norm_sq_quadrature_vs_closed_form(a, t):
    g = rm.PaperRadial(a, 1.0)
    ref = rm.paper_radial_gt_norm_sq(g, t)
    assert rm.gt_norm_sq(g, t) == pytest.approx(ref, rel=1e-8, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.9, 6.0), st.floats(0.0, 60.0))
def test_cauchy_schwarz_overlap(a, t):
    # |<f, g_t>|^2 <= ||f||^2 ||g_t||^2
    g = rm.PaperRadial(a, 1.0)
    f = rm.PaperRadial(1.0, 0.5)
    assert abs(rm.overlap_gt(f, g, t)) ** 2 <= rm.gt_norm_sq(g, t) * (1 + 1e-9) + 1e-14
