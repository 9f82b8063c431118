import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydgate.errors import ParameterError, TimeOutOfRange
from rydgate.linalg import hermiticity_error
from rydgate.model import (
    BASIS_LABELS,
    IDX,
    RR,
    Level,
    PhysicalParams,
    collapse_operators,
    hamiltonian_derivative,
    pair_index,
    pulse,
    pulse_amplitudes,
    pulse_derivative,
    single_atom_collapse_operators,
    single_atom_hamiltonian,
    swap_operator,
    two_atom_hamiltonian,
)

P = PhysicalParams(omega=50.0, delta=30.0, v_r=25.0, tau=0.25)
freq = st.floats(-200, 200, allow_nan=False)


def test_basis_ordering():
    assert IDX["11"] == 5 and IDX["pp"] == 10 and RR == 15
    assert BASIS_LABELS[pair_index(Level.G0, Level.R)] == "0r"
    assert len(set(BASIS_LABELS)) == 16


def test_parameter_validation():
    for bad in (dict(omega=0.0), dict(tau=-1.0), dict(gamma0=-0.1), dict(v_r=math.nan)):
        with pytest.raises(ParameterError):
            P.replace(**bad)
    split = PhysicalParams.with_gamma_p(6.0, omega=50, delta=50, v_r=25, tau=0.25)
    assert split.gamma0 == split.gamma1 == 3.0 and split.gamma_p == 6.0
    assert P.is_closed and not split.is_closed
    assert P.omega_ang == pytest.approx(2 * math.pi * 50)


def test_pulse_endpoints_and_angle():
    start, mid, end = pulse(P, 0.0), pulse(P, P.tau), pulse(P, 2 * P.tau)
    assert start.omega1 == 0.0 and start.omega2 == pytest.approx(P.omega_ang)
    assert mid.omega1 == pytest.approx(P.omega_ang) and mid.omega2 == pytest.approx(0.0, abs=1e-9)
    assert mid.theta == pytest.approx(math.pi / 2)
    assert end.omega1 == pytest.approx(0.0, abs=1e-9) and end.theta == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(TimeOutOfRange):
        pulse(P, 0.51)
    with pytest.raises(TimeOutOfRange):
        pulse(P, -1e-3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.5))
def test_pulse_properties(t):
    s = pulse(P, t)
    assert math.hypot(s.omega1, s.omega2) == pytest.approx(P.omega_ang)
    assert 0.0 <= s.theta <= math.pi / 2 + 1e-12
    om1, om2 = pulse_amplitudes(P, np.array([t]))
    assert om1[0] == pytest.approx(s.omega1) and om2[0] == pytest.approx(s.omega2)


@pytest.mark.parametrize("t", [0.01, 0.1, 0.2, 0.3, 0.45])
def test_pulse_derivative_matches_finite_difference(t):
    h = 1e-6
    d1, d2 = pulse_derivative(P, t)
    a, b = pulse(P, t + h), pulse(P, t - h)
    assert d1 == pytest.approx((a.omega1 - b.omega1) / (2 * h), rel=1e-6)
    assert d2 == pytest.approx((a.omega2 - b.omega2) / (2 * h), rel=1e-6)
    dh = hamiltonian_derivative(P, t)
    fd = (two_atom_hamiltonian(P, t + h) - two_atom_hamiltonian(P, t - h)) / (2 * h)
    np.testing.assert_allclose(dh, fd, rtol=1e-5, atol=1e-3)


def test_single_atom_matrix_elements():
    t = 0.1
    s = pulse(P, t)
    h = single_atom_hamiltonian(P, t)
    assert h[Level.P, Level.P] == pytest.approx(P.delta_ang)
    assert h[Level.G1, Level.P] == pytest.approx(s.omega1)
    assert h[Level.P, Level.R] == pytest.approx(s.omega2)
    assert np.all(h[Level.G0] == 0) and np.all(h[:, Level.G0] == 0)


@settings(max_examples=40, deadline=None)
@given(freq, freq, st.floats(0.0, 0.5))
def test_pair_hamiltonian_structure(delta, v_r, t):
    p = P.replace(delta=delta, v_r=v_r)
    h = two_atom_hamiltonian(p, t)
    h1 = single_atom_hamiltonian(p, t)
    eye = np.eye(4)
    expected = np.kron(h1, eye) + np.kron(eye, h1)
    expected[RR, RR] += p.v_r_ang
    np.testing.assert_allclose(h, expected, atol=1e-9)
    assert hermiticity_error(h) == 0.0
    s = swap_operator()
    np.testing.assert_allclose(s @ h, h @ s, atol=1e-9)
    n0 = np.diag([lab.count("0") for lab in BASIS_LABELS]).astype(complex)
    np.testing.assert_allclose(n0 @ h, h @ n0, atol=1e-9)


def test_collapse_operators():
    assert collapse_operators(P) == []
    p = P.replace(gamma0=1.0, gamma1=2.0, gammar=0.5, gammard=0.25)
    named = dict(single_atom_collapse_operators(p))
    assert list(named) == ["C0", "C1", "Cr", "Crd"]
    # |p> decays to |0> and |1> with rates 2 pi gamma
    gamma = (named["C0"].conj().T @ named["C0"] + named["C1"].conj().T @ named["C1"])[Level.P, Level.P]
    assert gamma.real == pytest.approx(2 * math.pi * 3.0)
    assert named["Cr"][Level.P, Level.R] ** 2 == pytest.approx(2 * math.pi * 0.5)
    assert np.diag(named["Crd"]).real ** 2 == pytest.approx(2 * math.pi * 0.25 * np.ones(4))
    assert named["Crd"][Level.R, Level.R].real < 0
    ops = collapse_operators(p)
    assert len(ops) == 8 and all(op.shape == (16, 16) for op in ops)
    only_dephasing = dict(single_atom_collapse_operators(P.replace(gammard=1.0)))
    assert list(only_dephasing) == ["Crd"]
