import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penning_sta.errors import DomainError
from penning_sta.trajectory import (
    Trajectory,
    check_boundary_conditions,
    eval as lam_eval,
    free_basis,
    paper_polynomial,
    ratio_for_compression,
    with_free_params,
)

RHO = 10**-0.5


def test_paper_polynomial_examples():
    flat = paper_polynomial(1.0)
    tau = np.linspace(0, 1, 11)
    assert np.all(lam_eval(flat, tau) == 1.0)
    traj = paper_polynomial(RHO)
    assert lam_eval(traj, 1.0) == pytest.approx(0.31623, abs=5e-6)
    assert lam_eval(traj, 0.5) == pytest.approx((1 + RHO) / 2, abs=1e-14)
    assert lam_eval(traj, 0.5) == pytest.approx(0.65811, abs=5e-6)
    with pytest.raises(DomainError):
        paper_polynomial(0.0)


def test_eval_examples():
    traj = paper_polynomial(RHO)
    assert lam_eval(traj, 0.0, 1) == 0.0
    assert lam_eval(traj, 1.0, 3) == pytest.approx(0.0, abs=1e-11)
    h = 1e-5
    fd = (lam_eval(traj, 0.5 + h, 1) - lam_eval(traj, 0.5 - h, 1)) / (2 * h)
    assert lam_eval(traj, 0.5, 2) == pytest.approx(fd, abs=1e-6)
    with pytest.raises(DomainError):
        lam_eval(traj, 1.01)
    with pytest.raises(DomainError):
        lam_eval(traj, -0.2, 1)
    with pytest.raises(DomainError):
        lam_eval(traj, 0.5, 4)
    assert traj(0.25, 2) == lam_eval(traj, 0.25, 2)


@pytest.mark.parametrize("traj", [paper_polynomial(RHO), with_free_params(RHO, [1.5, -2.0, 0.7])])
def test_derivatives_match_finite_differences(traj):
    h = 1e-5
    tau = np.linspace(h, 1 - h, 501)
    for order in (1, 2, 3):
        fd = (lam_eval(traj, tau + h, order - 1) - lam_eval(traj, tau - h, order - 1)) / (2 * h)
        assert np.max(np.abs(lam_eval(traj, tau, order) - fd)) < 1e-6


def test_free_params_examples():
    tau = np.linspace(0, 1, 101)
    assert np.array_equal(lam_eval(with_free_params(RHO, np.zeros(3)), tau), lam_eval(paper_polynomial(RHO), tau))
    assert lam_eval(with_free_params(1.0, [2.0]), 0.5) == pytest.approx(1.0078125, abs=1e-15)
    assert np.allclose(free_basis(0), [0, 0, 0, 0, 1, -4, 6, -4, 1])
    with pytest.raises(DomainError):
        with_free_params(RHO, np.ones(9))


def test_zero_free_params_identical_to_minimal():
    tau = np.linspace(0, 1, 257)
    for K in range(0, 9):
        traj = with_free_params(RHO, np.zeros(K))
        assert np.array_equal(lam_eval(traj, tau), lam_eval(paper_polynomial(RHO), tau))


@settings(max_examples=60, deadline=None)
@given(
    rho=st.floats(0.05, 5.0),
    params=st.lists(st.floats(-10, 10), min_size=0, max_size=8),
)
def test_free_params_preserve_boundary_conditions(rho, params):
    traj = with_free_params(rho, params)
    assert traj.degree <= 15
    for tau in (0.0, 1.0):
        for k in (1, 2, 3):
            assert abs(lam_eval(traj, tau, k)) < 1e-12
    assert lam_eval(traj, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert lam_eval(traj, 1.0) == pytest.approx(rho, abs=1e-12)


@pytest.mark.parametrize("rho", [0.1, RHO, 1.0, 3.0])
def test_paper_polynomial_boundary_residuals(rho):
    traj = paper_polynomial(rho)
    assert check_boundary_conditions(traj) == []
    for tau, target in ((0.0, 1.0), (1.0, rho)):
        assert abs(lam_eval(traj, tau) - target) < 1e-12
        for k in (1, 2, 3):
            assert abs(lam_eval(traj, tau, k)) < 1e-12


def test_linear_ramp_violations():
    traj = Trajectory(rho=RHO, coeffs=[1.0, RHO - 1.0])
    report = check_boundary_conditions(traj)
    names = {v.condition for v in report}
    # a linear ramp only has a first derivative to violate, at both ends
    assert names == {"lambda'(0)", "lambda'(1)"}
    assert all(v.residual == pytest.approx(RHO - 1.0) for v in report)


def test_negative_ratio_reports_positivity():
    coeffs = (-1.0 - 1.0) * np.array([0, 0, 0, 0, 35, -84, 70, -20], dtype=float)
    coeffs[0] = 1.0
    report = check_boundary_conditions(Trajectory(rho=-1.0, coeffs=coeffs))
    assert [v.condition for v in report] == ["lambda > 0"]
    assert report[0].residual == pytest.approx(-1.0, abs=1e-6)


def test_record_round_trip():
    traj = with_free_params(RHO, [0.3, -1.25])
    text = traj.to_record()
    assert text.startswith("rho=") and "; coeffs=" in text
    back = Trajectory.from_record(text)
    assert back == traj
    assert np.array_equal(back.coeffs, traj.coeffs)
    # the monomial form alone still meets the reporting tolerance
    assert check_boundary_conditions(back) == []
    tau = np.linspace(0, 1, 33)
    assert np.allclose(lam_eval(back, tau, 2), lam_eval(traj, tau, 2), atol=1e-11)
    with pytest.raises(ValueError):
        Trajectory.from_record("rho=0.3")
    with pytest.raises(ValueError):
        Trajectory.from_record("rho 0.3; coeffs=1")


def test_immutable():
    traj = paper_polynomial(RHO)
    with pytest.raises(ValueError):
        traj.coeffs[0] = 3.0


def test_curve_is_monotone_decreasing():
    traj = paper_polynomial(ratio_for_compression(10.0))
    lam = lam_eval(traj, np.linspace(0, 1, 10_000))
    assert np.all(np.diff(lam) <= 0)
    assert lam[0] == 1.0 and lam[-1] == pytest.approx(RHO)


def test_ratio_for_compression():
    assert ratio_for_compression(10.0) == pytest.approx(RHO)
    assert ratio_for_compression(1.0) == 1.0
    with pytest.raises(DomainError):
        ratio_for_compression(-1.0)
