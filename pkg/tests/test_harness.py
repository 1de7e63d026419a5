import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ablab import harness
from ablab.geometry import DomainSpec
from ablab.harness import (
    CSV_COLUMNS,
    NumericalError,
    PreconditionError,
    SweepConfig,
    SweepRecord,
    asymptotics_svg,
    check_preconditions,
    emit_report,
    fit_asymptotics,
    fit_subset,
    parse_config,
    read_json,
    run_single,
    run_sweep,
)
from ablab.nodal import NodalError

SQUARE = DomainSpec.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
RECTANGLE = DomainSpec.polygon([(-1.5, -1), (1.5, -1), (1.5, 1), (-1.5, 1)])
SMALL = dict(a_values=(0.1, 0.05, 0.025), tau_values=(0.5,), h_max=0.1)


def synthetic(slope, xs, perturb=0.0):
    recs = []
    for x in xs:
        a = math.exp(-1.0 / x)
        recs.append(SweepRecord(a=a, lambda_N=5.0, lambda_N_a=5.0 + slope * x * (1 + perturb * x), u_N0=1.0))
    return recs


@pytest.fixture(scope="module")
def small_sweep():
    return run_sweep(SweepConfig(**SMALL))


def test_config_defaults_and_validation():
    c = SweepConfig()
    assert c.N == 1 and c.domain.kind == "disk" and c.use_segment_route
    assert c.a_values == (0.2, 0.1, 0.05, 0.025, 0.0125)
    bad = [
        dict(a_values=(0.1, 0.2)),
        dict(a_values=(0.1, 0.1)),
        dict(a_values=(0.1, -0.05)),
        dict(a_values=()),
        dict(N=0),
        dict(solver_tol=0.0),
        dict(h_max=-1.0),
        dict(tau_values=(1.0,)),
    ]
    for kw in bad:
        with pytest.raises(ValueError):
            SweepConfig(**kw)
    assert not SweepConfig(domain=DomainSpec.polygon([(0, -1), (2, 0), (0, 2), (-1, 0)])).use_segment_route


def test_parse_config():
    text = """
    # disk sweep
    domain = disk
    radius = 1.0
    N = 1
    a_values = 0.1, 0.05 0.025   # commas or spaces
    tau_values = 0.5
    h_max = 0.08
    segment_route = no
    """
    c = parse_config(text)
    assert c.a_values == (0.1, 0.05, 0.025)
    assert c.h_max == 0.08 and c.segment_route is False and not c.use_segment_route


def test_parse_polygon_config():
    c = parse_config("domain = polygon\nvertices = -1 -1; 1 -1; 1 1; -1 1\nN = 2\n")
    assert c.domain.kind == "polygon" and c.N == 2
    assert np.allclose(c.domain.vertices, [(-1, -1), (1, -1), (1, 1), (-1, 1)])


@pytest.mark.parametrize(
    "text",
    [
        "colour = red",
        "N = 1\nN = 2",
        "a_values = 0.1 0.2",
        "domain = torus",
        "domain = polygon",
        "domain = disk\nvertices = 0 0; 1 0; 0 1",
        "just words",
        "segment_route = maybe",
    ],
)
def test_parse_config_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_fit_exact_linear():
    fit = fit_asymptotics(synthetic(7.421, [0.3, 0.25, 0.2, 0.15]), predicted=7.421)
    assert fit.slope == pytest.approx(7.421, rel=1e-12)
    assert np.abs(fit.residuals).max() <= 1e-12
    assert fit.relative_error <= 1e-12


@given(st.lists(st.floats(0.05, 0.3), min_size=3, max_size=8, unique=True))
def test_fit_perturbed_model(xs):
    fit = fit_asymptotics(synthetic(7.421, xs, perturb=0.1), predicted=7.421)
    assert fit.slope > 0
    assert fit.relative_error <= 0.05


def test_fit_needs_three_records():
    recs = synthetic(7.421, [0.3, 0.2])
    with pytest.raises(NumericalError):
        fit_asymptotics(recs)
    recs += [SweepRecord(a=0.01)]  # nan values do not count
    with pytest.raises(NumericalError):
        fit_asymptotics(recs)


def test_fit_default_prediction():
    fit = fit_asymptotics(synthetic(7.0, [0.3, 0.2, 0.1]))
    assert fit.predicted == pytest.approx(2 * math.pi)


def test_fit_subset_smallest_half():
    recs = synthetic(7.0, [0.62, 0.43, 0.33, 0.27, 0.23])
    sub = fit_subset(recs)
    assert [r.a for r in sub] == sorted(r.a for r in recs)[:3]


def test_report_files(tmp_path, small_sweep):
    paths = emit_report(small_sweep.records, small_sweep.fit, tmp_path, graphs=small_sweep.graphs)
    lines = paths["csv"].read_text().splitlines()
    assert lines[0] == "a,lambda_N,lambda_N_a,u_N0,lambda_slit_nodal,lambda_slit_segment,upper_bound_tau_0.5,d_a,log_ratio"
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 1 + len(small_sweep.records)
    recs, fit = read_json(paths["json"])
    assert [r.to_dict() for r in recs] == [r.to_dict() for r in small_sweep.records]
    assert fit == small_sweep.fit
    svg = paths["svg"].read_text()
    assert svg.count("<line") == 2
    assert 'class="fit"' in svg and 'class="prediction"' in svg
    assert len(paths["nodal_svg"]) == len(small_sweep.graphs) == 3


def test_report_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], None, tmp_path)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_report(synthetic(7.0, [0.3]), None, blocker / "sub")


def test_svg_without_fit_has_one_line():
    svg = asymptotics_svg(synthetic(7.0, [0.3]), None, predicted=7.4)
    assert svg.count("<line") == 1


def test_json_nan_roundtrip(tmp_path):
    rec = SweepRecord(a=0.1, errors=["base: boom"])
    rec.upper_bound[0.25] = 6.0
    harness.write_json([rec], None, tmp_path / "r.json")
    recs, fit = read_json(tmp_path / "r.json")
    assert fit is None and recs[0].errors == ["base: boom"]
    assert recs[0].upper_bound == {0.25: 6.0}
    assert math.isnan(recs[0].lambda_N)
    json.loads((tmp_path / "r.json").read_text())


def test_record_invariants(small_sweep):
    tol = 1e-8
    for r in small_sweep.records:
        assert r.errors == []
        assert r.lambda_N_a >= r.lambda_N - tol
        assert r.d_a >= 2 * r.a * (1 - 1e-12)
        assert r.lambda_N_a <= r.upper_bound[0.5]
        assert r.u_N0 > 0
        assert r.min_angle >= 20.0 and r.boundary_segments == 256
        assert r.eig_residual <= 1e-8
        assert abs(r.lambda_slit_nodal - r.lambda_N_a) <= 1e-2 * r.lambda_N_a
        assert abs(r.lambda_slit_segment - r.lambda_N_a) <= 1e-2 * r.lambda_N_a
    assert small_sweep.fit.slope > 0


def test_reproducible_csv(tmp_path, small_sweep):
    again = run_sweep(SweepConfig(**SMALL))
    p1 = emit_report(small_sweep.records, small_sweep.fit, tmp_path / "one", formats=("csv",))["csv"]
    p2 = emit_report(again.records, again.fit, tmp_path / "two", formats=("csv",))["csv"]
    assert p1.read_bytes() == p2.read_bytes()


def test_refuses_multiple_eigenvalue():
    with pytest.raises(PreconditionError, match="not simple"):
        run_sweep(SweepConfig(domain=SQUARE, N=2, **SMALL))


def test_refuses_vanishing_origin_value():
    # lambda_2 of the 3 x 2 rectangle is simple and its eigenfunction vanishes at the centre
    with pytest.raises(PreconditionError, match="below"):
        check_preconditions(SweepConfig(domain=RECTANGLE, N=2, **SMALL))


def test_stage_failure_recorded(monkeypatch):
    def boom(*args, **kwargs):
        raise NodalError("export failed")

    monkeypatch.setattr(harness, "export_curve", boom)
    rec, art = run_single(SweepConfig(**SMALL), 0.1)
    assert any(e.startswith("nodal:") for e in rec.errors)
    assert math.isnan(rec.lambda_slit_nodal)
    assert np.isfinite(rec.lambda_N_a) and np.isfinite(rec.lambda_slit_segment)
    assert 0.5 in rec.upper_bound
    assert art is not None
