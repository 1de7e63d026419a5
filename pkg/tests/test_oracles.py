import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from ablab.oracles import (
    ORACLES,
    annulus_lambda1,
    bessel_j,
    bessel_zero,
    disk_ground_state_at_center,
    disk_laplacian_lambda1,
    predicted_slope,
    single_pole_disk_lambda1,
)


@given(st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.floats(0.0, 15.0))
def test_series_matches_scipy(nu, x):
    assert bessel_j(nu, x) == pytest.approx(special.jv(nu, x), abs=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_zeros_match_tables(k):
    assert bessel_zero(0.0, k) == pytest.approx(special.jn_zeros(0, k)[-1], rel=1e-14)
    assert bessel_zero(0.5, k) == pytest.approx(k * math.pi, rel=1e-14)


def test_reference_values():
    assert ORACLES["j0_zero1"]() == pytest.approx(2.404825557695773, rel=1e-15)
    assert ORACLES["j1_at_j0_zero1"]() == pytest.approx(0.519147, abs=1e-6)
    assert disk_laplacian_lambda1() == pytest.approx(5.78319, abs=1e-5)
    assert disk_ground_state_at_center() == pytest.approx(1.0868, abs=1e-4)
    assert disk_ground_state_at_center() ** 2 == pytest.approx(1.1810, abs=1e-4)
    assert predicted_slope() == pytest.approx(7.421, abs=1e-3)
    assert single_pole_disk_lambda1() == pytest.approx(math.pi**2, rel=1e-14)


def test_radius_scaling():
    assert disk_laplacian_lambda1(2.0) == pytest.approx(disk_laplacian_lambda1() / 4)
    assert disk_ground_state_at_center(2.0) == pytest.approx(disk_ground_state_at_center() / 2)


def test_annulus_model_above_disk():
    lam = annulus_lambda1(0.01)
    assert disk_laplacian_lambda1() < lam < 2 * disk_laplacian_lambda1()
    assert annulus_lambda1(0.001) < lam
