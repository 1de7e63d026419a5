import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ablab.potential import (
    PoleConfig,
    PoleError,
    edge_phase,
    eval_A,
    eval_single_A,
    gauge_double,
    line_integral,
    phase_psi,
    single_pole,
    winding_integral,
    winding_number,
)

coord = st.floats(-2.0, 2.0, allow_nan=False)


def _away_from_poles(cfg, x, dist):
    return all(np.hypot(x[0] - p[0], x[1] - p[1]) >= dist for p in cfg.points)


def _scalar_A(a, x):
    # independent scalar evaluation of -A_{a-} + A_{a+}
    out = [0.0, 0.0]
    for px, sign in ((-a, -1.0), (a, 1.0)):
        dx, dy = x[0] - px, x[1]
        r2 = dx * dx + dy * dy
        out[0] += sign * 0.5 * (-dy) / r2
        out[1] += sign * 0.5 * dx / r2
    return out


def test_single_pole_values():
    assert np.allclose(eval_single_A((0, 0), (1, 0)), [0.0, 0.5])
    assert np.allclose(eval_single_A((0, 0), (0, 2)), [-0.25, 0.0])


@given(coord, coord, coord, coord)
def test_single_pole_norm_identity(px, py, x, y):
    d = np.hypot(x - px, y - py)
    if d < 1e-3:
        return
    A = eval_single_A((px, py), (x, y))
    assert np.hypot(*A) == pytest.approx(1.0 / (2.0 * d), rel=1e-12)


def test_two_pole_value_on_axis():
    assert np.allclose(eval_A(PoleConfig(1.0), (2.0, 0.0)), [0.0, 1.0 / 3.0], atol=1e-15)
    assert np.allclose(eval_A(PoleConfig(1.0), (2.0, 0.0)), _scalar_A(1.0, (2.0, 0.0)), atol=1e-15)


@settings(max_examples=100)
@given(st.floats(0.01, 0.5), coord, coord)
def test_matches_scalar_formula(a, x, y):
    cfg = PoleConfig(a)
    if not _away_from_poles(cfg, (x, y), 1e-3):
        return
    assert np.allclose(eval_A(cfg, (x, y)), _scalar_A(a, (x, y)), rtol=1e-12, atol=1e-12)


@settings(max_examples=100)
@given(st.floats(0.01, 0.5), coord, coord)
def test_reflection_antisymmetry(a, x, y):
    cfg = PoleConfig(a)
    if not _away_from_poles(cfg, (x, y), 1e-3):
        return
    r = eval_A(cfg, (x, y))
    s = eval_A(cfg, (x, -y))
    assert np.allclose(s, [-r[0], r[1]], rtol=1e-12, atol=1e-12)


def test_far_field_dipole_decay():
    a = 0.1
    cfg = PoleConfig(a)
    for t in np.linspace(0, 2 * np.pi, 17):
        for r in (4 * a, 10 * a, 100 * a):
            x = r * np.array([np.cos(t), np.sin(t)])
            assert np.hypot(*eval_A(cfg, x)) <= 2.0 * a / r**2


@settings(max_examples=100)
@given(coord, coord)
def test_curl_free(x, y):
    cfg = PoleConfig(0.1)
    if not _away_from_poles(cfg, (x, y), 0.05):
        return
    h = 1e-6
    dA2_dx = (eval_A(cfg, (x + h, y))[1] - eval_A(cfg, (x - h, y))[1]) / (2 * h)
    dA1_dy = (eval_A(cfg, (x, y + h))[0] - eval_A(cfg, (x, y - h))[0]) / (2 * h)
    assert abs(dA2_dx - dA1_dy) <= 1e-6


def test_evaluation_at_pole_raises():
    cfg = PoleConfig(0.1)
    with pytest.raises(PoleError):
        eval_A(cfg, (0.1, 0.0))
    with pytest.raises(PoleError):
        eval_single_A((0, 0), (0, 0))
    with pytest.raises(PoleError):
        gauge_double(cfg, (-0.1, 0.0))


def test_invalid_pole_config():
    with pytest.raises(PoleError):
        PoleConfig(0.0)
    with pytest.raises(PoleError):
        PoleConfig(-1.0)


def test_phase_zero_on_axis_outside():
    a = 0.1
    cfg = PoleConfig(a)
    assert phase_psi(cfg, (2 * a, 0.0)) == 0.0
    assert phase_psi(cfg, (-2 * a, 0.0)) == 0.0


def test_phase_gradient_is_A():
    cfg = PoleConfig(0.1)
    x = np.array([0.3, 0.4])
    h = 1e-6
    g = [
        (phase_psi(cfg, x + h * e) - phase_psi(cfg, x - h * e)) / (2 * h)
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    ]
    assert np.allclose(g, eval_A(cfg, x), atol=1e-8)


def test_phase_rejects_segment():
    cfg = PoleConfig(0.1)
    with pytest.raises(PoleError):
        phase_psi(cfg, (0.05, 0.0))
    with pytest.raises(PoleError):
        phase_psi(cfg, (0.1, 0.0))


def test_phase_jumps_only_across_segment():
    cfg = PoleConfig(0.1)
    above = phase_psi(cfg, (0.0, 1e-9))
    below = phase_psi(cfg, (0.0, -1e-9))
    assert abs(abs(above - below) - np.pi) < 1e-6
    assert abs(phase_psi(cfg, (0.5, 1e-9)) - phase_psi(cfg, (0.5, -1e-9))) < 1e-6


def test_phase_vanishes_as_a_shrinks():
    x = (0.3, 0.4)
    vals = [abs(phase_psi(PoleConfig(a), x)) for a in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-2


def test_gauge_double_values_and_continuity():
    a = 0.1
    cfg = PoleConfig(a)
    assert gauge_double(cfg, (2 * a, 0.0)) == pytest.approx(1.0 + 0.0j)
    assert abs(gauge_double(cfg, (0.0, 1e-8)) - gauge_double(cfg, (0.0, -1e-8))) < 1e-6
    pts = np.random.default_rng(0).uniform(-1, 1, (200, 2))
    assert np.allclose(np.abs(gauge_double(cfg, pts)), 1.0, atol=1e-14)


def test_gauge_log_derivative():
    cfg = PoleConfig(0.1)
    x = np.array([0.3, 0.4])
    h = 1e-6
    g0 = gauge_double(cfg, x)
    d = [
        (gauge_double(cfg, x + h * e) - gauge_double(cfg, x - h * e)) / (2 * h)
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    ]
    assert np.allclose((-1j * np.array(d) / g0).real, 2 * eval_A(cfg, x), atol=1e-7)
    assert np.allclose((-1j * np.array(d) / g0).imag, 0.0, atol=1e-7)


def test_winding_examples():
    a = 0.1
    cfg = PoleConfig(a)
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    circle = np.column_stack([np.cos(t), np.sin(t)])
    assert winding_integral(cfg, 3 * a * circle) == pytest.approx(0.0, abs=1e-10)
    assert winding_integral(cfg, np.array([a, 0.0]) + 0.5 * a * circle) == pytest.approx(0.5, abs=1e-10)
    assert winding_integral(cfg, np.array([-a, 0.0]) + 0.5 * a * circle) == pytest.approx(-0.5, abs=1e-10)
    assert winding_integral(cfg, np.array([0.5, 0.5]) + 0.1 * circle) == pytest.approx(0.0, abs=1e-10)
    assert winding_number((0, 0), circle) == 1
    assert winding_number((0, 0), circle[::-1]) == -1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)), min_size=3, max_size=12))
def test_winding_quantization(points):
    cfg = PoleConfig(0.1)
    path = np.array(points)
    seg = np.roll(path, -1, axis=0) - path
    for p in cfg.points:
        d = p - path
        t = np.clip(np.sum(d * seg, axis=1) / np.maximum(np.sum(seg * seg, axis=1), 1e-300), 0, 1)
        if np.min(np.hypot(*(path + t[:, None] * seg - p).T)) < 1e-4:
            return
    w2 = 2 * winding_integral(cfg, path)
    assert abs(w2 - round(w2)) <= 1e-6
    expected = 0.5 * winding_number(cfg.a_plus, path) - 0.5 * winding_number(cfg.a_minus, path)
    assert w2 / 2 == pytest.approx(expected, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(coord, coord, coord, coord)
def test_edge_phase_matches_line_integral(x0, y0, x1, y1):
    cfg = PoleConfig(0.1)
    p, q = np.array([x0, y0]), np.array([x1, y1])
    seg = q - p
    L2 = seg @ seg
    for c in cfg.points:
        t = 0.0 if L2 == 0 else np.clip((c - p) @ seg / L2, 0, 1)
        if np.hypot(*(p + t * seg - c)) < 1e-2:
            return
    assert edge_phase(cfg, p, q) == pytest.approx(line_integral(cfg, np.array([p, q])), abs=1e-9)


def test_single_pole_winding():
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    assert winding_integral(single_pole(), np.column_stack([np.cos(t), np.sin(t)])) == pytest.approx(0.5)
