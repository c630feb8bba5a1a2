import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcspin import decoherence as dc
from qcspin import nonmarkov as nm
from qcspin import reservoir as rm
from qcspin.errors import DomainError


def fd(spec, g, t, h=1e-5):
    return (abs(dc.decoherence_fn(spec, g, t + h)) ** 2 - abs(dc.decoherence_fn(spec, g, t - h)) ** 2) / (2 * h)


@pytest.mark.parametrize("state", ["bec", "thermal", "circle", "dirac"])
def test_zero_at_t0(state, g0):
    st_ = {"bec": dc.BECFock(g0), "circle": dc.CoherentCircleMixture(g0),
           "dirac": dc.CoherentDirac(g0), "thermal": dc.Thermal(1.0)}[state]
    assert nm.d_absD2_dt(dc.ReservoirSpec(st_, 0.5), g0, 0.0) == 0.0


def test_bec_initial_markovian_phase():
    g = rm.PaperRadial(-2.9, 1.0)
    s = dc.ReservoirSpec(dc.BECFock(g), 1.0)
    assert nm.d_absD2_dt_bec(s, g, 0.05) < 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.9, 5.0), st.floats(0.01, 1.0), st.floats(0.05, 30.0), st.floats(-2.0, 2.0))
def test_bec_matches_finite_difference(a, eps, t, lam):
    g = rm.PaperRadial(a, 1.0)
    s = dc.ReservoirSpec(dc.BECFock(g), eps, lam)
    assert abs(nm.d_absD2_dt_bec(s, g, t) - fd(s, g, t)) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.9, 5.0), st.floats(0.0, 1.0), st.floats(0.05, 30.0), st.floats(0.2, 4.0))
def test_thermal_matches_finite_difference(a, eps, t, beta):
    g = rm.PaperRadial(a, 1.0)
    s = dc.ReservoirSpec(dc.Thermal(beta), eps)
    assert abs(nm.d_absD2_dt_thermal(s, g, t) - fd(s, g, t)) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["circle", "dirac"]), st.floats(-2.9, 5.0), st.floats(0.0, 1.0), st.floats(0.05, 30.0))
def test_coherent_matches_finite_difference(kind, a, eps, t):
    g = rm.PaperRadial(a, 1.0)
    state = dc.CoherentCircleMixture(g) if kind == "circle" else dc.CoherentDirac(g)
    s = dc.ReservoirSpec(state, eps, 0.7)
    assert abs(nm.d_absD2_dt(s, g, t) - fd(s, g, t)) <= 1e-6


def test_thermal_negative_for_short_times():
    g = rm.PaperRadial(1.0, 1.0)
    for eps in (0.0, 0.5, 1.0):
        s = dc.ReservoirSpec(dc.Thermal(1.0), eps)
        for t in np.linspace(0.0, math.pi / 4, 9):
            assert nm.d_absD2_dt_thermal(s, g, t) <= 0.0


def test_thermal_strong_infrared_markovian():
    g = rm.PaperRadial(-1.9, 1.0)
    s = dc.ReservoirSpec(dc.Thermal(1.0), 1.0)
    assert all(nm.d_absD2_dt_thermal(s, g, t) <= nm.ZERO_GUARD for t in np.linspace(0, 50, 51))


def test_thermal_alpha5_has_sign_change():
    g = rm.PaperRadial(5.0, 1.0)
    s = dc.ReservoirSpec(dc.Thermal(1.0), 1.0)
    v = np.array([nm.d_absD2_dt_thermal(s, g, t) for t in np.linspace(0, 50, 101)])
    assert np.any(v > 0.0) and np.any(v < 0.0)


def test_wrong_family_rejected(g0):
    with pytest.raises(DomainError):
        nm.d_absD2_dt_bec(dc.ReservoirSpec(dc.Thermal(1.0), 0.5), g0, 1.0)
    with pytest.raises(DomainError):
        nm.d_absD2_dt_thermal(dc.ReservoirSpec(dc.BECFock(g0), 0.5), g0, 1.0)


def test_positive_intervals():
    t = np.arange(6.0)
    v = np.array([0.0, 1.0, 2.0, -1.0, 1e-15, 3.0])
    assert nm.positive_intervals(t, v) == [(1.0, 2.0), (5.0, 5.0)]
    assert nm.positive_intervals(t, [math.nan] * 6) == []


def test_region_scan_single_cell(g0):
    m = nm.region_scan(dc.ReservoirSpec(dc.BECFock(g0), 0.5), g0, [0.0], [0.5])
    assert m.values[0, 0] == 0.0 and m.regions[0.5] == []


def test_region_scan_bec_oscillates():
    g = rm.PaperRadial(-2.9, 1.0)
    m = nm.region_scan(dc.ReservoirSpec(dc.BECFock(g), 0.5), g, np.linspace(0, 30, 301), [0.05, 0.1])
    for e in (0.05, 0.1):
        assert m.sign_changes(e) >= 3
        # the positive cells are exactly those above the guard
        mask = np.zeros(301, dtype=bool)
        for a, b in m.regions[e]:
            mask |= (m.t_grid >= a) & (m.t_grid <= b)
        assert np.array_equal(mask, m.positive_mask[list(m.eps_grid).index(e)])


def test_region_boundaries_stabilize_as_eps_shrinks():
    g = rm.PaperRadial(-2.9, 1.0)
    eps = [0.001, 0.002, 0.004]
    m = nm.region_scan(dc.ReservoirSpec(dc.BECFock(g), 0.5), g, np.linspace(0, 30, 301), eps)
    c, b, a = (m.positive_mask[i] for i in range(3))
    assert np.count_nonzero(a != b) >= np.count_nonzero(b != c)
    assert np.count_nonzero(b != c) <= 2


def test_region_scan_dirac_classical_note(g0):
    m = nm.region_scan(dc.ReservoirSpec(dc.CoherentDirac(g0), 0.0), g0, [0.0, 1.0, 2.0], [0.0])
    assert m.note and np.all(m.values == 0.0) and m.regions[0.0] == []


def test_region_scan_deterministic_under_threads():
    g = rm.PaperRadial(2.0, 1.0)
    s = dc.ReservoirSpec(dc.Thermal(1.0), 0.0)
    a = nm.region_scan(s, g, np.linspace(0, 10, 11), [0.0, 1.0], workers=1)
    b = nm.region_scan(s, g, np.linspace(0, 10, 11), [0.0, 1.0], workers=4)
    assert np.array_equal(a.values, b.values)


def test_region_scan_grid_validation(g0):
    s = dc.ReservoirSpec(dc.BECFock(g0), 0.5)
    with pytest.raises(DomainError):
        nm.region_scan(s, g0, [], [0.5])
    with pytest.raises(DomainError):
        nm.region_scan(s, g0, [1.0, 0.0], [0.5])
    with pytest.raises(DomainError):
        nm.region_scan(s, g0, [1.0], [0.5, 2.0])
