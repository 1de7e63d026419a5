"""Sweeps over the pole half-distance a, the asymptotic fit and report files."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .bounds import assemble_M_matrix, basis_gram, build_test_basis, max_eig_quadform, upper_bound
from .eig import SpectrumSlice, make_magnetic_real, orient_at_origin, solve_lowest, value_at_origin
from .fem import assemble_laplacian, assemble_magnetic
from .geometry import DomainSpec, GradingPolicy, Mesh, Obstacle, generate_mesh, mesh_quality, refine_uniform
from .nodal import euler_check, export_curve, extract_nodal_set, graph_svg, nodal_stats
from .potential import PoleConfig, gauge_double

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "a",
    "lambda_N",
    "lambda_N_a",
    "u_N0",
    "lambda_slit_nodal",
    "lambda_slit_segment",
    "upper_bound_tau_0.5",
    "d_a",
    "log_ratio",
)


class PreconditionError(ValueError):
    """A hypothesis of the asymptotic law fails (multiple eigenvalue, u_N(0) = 0)."""


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    domain: DomainSpec = field(default_factory=DomainSpec.disk)
    N: int = 1
    a_values: tuple = (0.2, 0.1, 0.05, 0.025, 0.0125)
    tau_values: tuple = (0.25, 0.5, 0.75)
    h_max: float = 0.05
    pole_h_factor: float = 0.1  # mesh size at a pole, relative to a
    growth_ratio: float = 1.2
    refinement_levels: int = 0
    solver_tol: float = 1e-10
    simplicity_rel_gap: float = 1e-2
    u0_threshold: float = 1e-3
    segment_route: Optional[bool] = None  # None: only on domains symmetric about the x-axis
    output_dir: str = "ablab_out"

    def __post_init__(self):
        a = tuple(float(x) for x in self.a_values)
        object.__setattr__(self, "a_values", a)
        object.__setattr__(self, "tau_values", tuple(float(t) for t in self.tau_values))
        if not a or any(x <= 0 for x in a):
            raise ValueError("a_values must be positive")
        if any(a[k + 1] >= a[k] for k in range(len(a) - 1)):
            raise ValueError("a_values must be strictly decreasing")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if any(not (0 < t < 1) for t in self.tau_values):
            raise ValueError("tau values must lie in (0, 1)")
        for name in ("h_max", "pole_h_factor", "solver_tol", "simplicity_rel_gap", "u0_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (1.0 < self.growth_ratio <= 2.0):
            raise ValueError("growth_ratio must lie in (1, 2]")
        if self.refinement_levels < 0:
            raise ValueError("refinement_levels must be nonnegative")

    @property
    def use_segment_route(self) -> bool:
        if self.segment_route is not None:
            return bool(self.segment_route)
        return _symmetric_about_x_axis(self.domain)


def _symmetric_about_x_axis(domain: DomainSpec) -> bool:
    if domain.kind == "disk":
        return True
    P = np.asarray(domain.vertices, dtype=float)
    Q = P * np.array([1.0, -1.0])
    return all(np.min(np.hypot(*(P - q).T)) < 1e-12 for q in Q)


def _parse_bool(s: str) -> Optional[bool]:
    s = s.strip().lower()
    if s in ("auto", "none"):
        return None
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(",", " ").split())


_DOMAIN_KEYS = ("domain", "radius", "boundary_segments", "vertices")
_SCALARS = {
    "N": int,
    "a_values": _floats,
    "tau_values": _floats,
    "h_max": float,
    "pole_h_factor": float,
    "growth_ratio": float,
    "refinement_levels": int,
    "solver_tol": float,
    "simplicity_rel_gap": float,
    "u0_threshold": float,
    "segment_route": _parse_bool,
    "output_dir": str,
}


def parse_config(text: str) -> SweepConfig:
    """``key = value`` lines; ``#`` starts a comment.

    Domain keys: ``domain`` (disk or polygon), ``radius``, ``boundary_segments``
    and ``vertices`` given as ``x y; x y; ...``.  Every other key mirrors a
    SweepConfig field.  Unknown or repeated keys are errors.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCALARS and key not in _DOMAIN_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ValueError(f"line {lineno}: repeated key {key!r}")
        raw[key] = value
    kind = raw.get("domain", "disk")
    if kind == "disk":
        if "vertices" in raw:
            raise ValueError("vertices only apply to polygon domains")
        domain = DomainSpec.disk(float(raw.get("radius", 1.0)), int(raw.get("boundary_segments", 256)))
    elif kind == "polygon":
        if "vertices" not in raw or "radius" in raw or "boundary_segments" in raw:
            raise ValueError("polygon domains take vertices only")
        pts = [_floats(p) for p in raw["vertices"].split(";") if p.strip()]
        domain = DomainSpec.polygon(pts)
    else:
        raise ValueError(f"unknown domain {kind!r}")
    kw = {k: _SCALARS[k](v) for k, v in raw.items() if k in _SCALARS}
    return SweepConfig(domain=domain, **kw)


def load_config(path) -> SweepConfig:
    return parse_config(Path(path).read_text())


@dataclass
class SweepRecord:
    a: float
    lambda_N: float = math.nan
    lambda_N_a: float = math.nan
    u_N0: float = math.nan
    lambda_slit_nodal: float = math.nan
    lambda_slit_segment: float = math.nan
    upper_bound: dict = field(default_factory=dict)  # tau -> bound
    quadform_max: dict = field(default_factory=dict)  # tau -> max eigenvalue of M_jk
    gram_deviation: dict = field(default_factory=dict)  # tau -> ||G - I||_2
    d_a: float = math.nan
    log_ratio: float = math.nan
    single_arc: bool = False
    euler_residual: float = math.nan
    pole_degrees: tuple = ()
    conjugation_residual: float = math.nan
    eig_residual: float = math.nan
    vertices: int = 0
    triangles: int = 0
    min_angle: float = math.nan
    boundary_segments: Optional[int] = None
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in ("upper_bound", "quadform_max", "gram_deviation"):
            d[k] = {repr(float(t)): v for t, v in d[k].items()}
        d["pole_degrees"] = list(self.pole_degrees)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        d = dict(d)
        for k in ("upper_bound", "quadform_max", "gram_deviation"):
            d[k] = {float(t): v for t, v in d[k].items()}
        d["pole_degrees"] = tuple(d["pole_degrees"])
        return cls(**d)


@dataclass(frozen=True)
class FitResult:
    slope: float
    predicted: float
    relative_error: float
    a_values: tuple
    residuals: tuple

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["a_values"] = list(self.a_values)
        d["residuals"] = list(self.residuals)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(d["slope"], d["predicted"], d["relative_error"], tuple(d["a_values"]), tuple(d["residuals"]))


@dataclass
class SweepResult:
    records: list
    fit: Optional[FitResult]
    config: SweepConfig
    graphs: dict = field(default_factory=dict)  # a -> (NodalGraph, Mesh)
    fit_error: Optional[str] = None


def fit_asymptotics(records, predicted: Optional[float] = None) -> FitResult:
    """Least-squares slope through the origin of lambda_N^a - lambda_N against 1/|log a|.

    ``predicted`` defaults to 2 pi u_N(0)^2 averaged over the records.
    """
    recs = [r for r in records if np.isfinite(r.lambda_N_a) and np.isfinite(r.lambda_N)]
    if len(recs) < 3:
        raise NumericalError(f"need at least 3 valid records for the fit, got {len(recs)}")
    x = np.array([1.0 / abs(math.log(r.a)) for r in recs])
    y = np.array([r.lambda_N_a - r.lambda_N for r in recs])
    slope = float(x @ y / (x @ x))
    if predicted is None:
        predicted = float(np.mean([2.0 * math.pi * r.u_N0**2 for r in recs]))
    rel = abs(slope - predicted) / abs(predicted) if predicted else math.inf
    return FitResult(slope, float(predicted), float(rel), tuple(r.a for r in recs), tuple((y - slope * x).tolist()))


def fit_subset(records) -> list:
    """The records used by the sweep fit: the smallest half of a (at least three)."""
    valid = sorted((r for r in records if np.isfinite(r.lambda_N_a) and np.isfinite(r.lambda_N)), key=lambda r: r.a)
    k = max(3, math.ceil(len(records) / 2))
    return valid[:k]


def _mesh(config: SweepConfig, pole_cfg: PoleConfig, obstacle: Optional[Obstacle] = None) -> Mesh:
    poles = [pole_cfg.a_minus, pole_cfg.a_plus]
    grading = GradingPolicy(tuple(poles), config.pole_h_factor * pole_cfg.a, config.growth_ratio)
    m = generate_mesh(config.domain, poles=poles, obstacle=obstacle, h_max=config.h_max, grading=grading)
    for _ in range(config.refinement_levels):
        m = refine_uniform(m)
    return m


def _check_simple(sl: SpectrumSlice, N: int, rel_gap: float, what: str) -> None:
    g = sl.relative_gap(N - 1)
    if g < rel_gap:
        raise PreconditionError(f"{what}: lambda_{N} is not simple (relative gap {g:.2e} < {rel_gap:.0e})")


def _laplacian_slice(mesh: Mesh, config: SweepConfig):
    L = assemble_laplacian(mesh)
    sl = solve_lowest(L, config.N, tol=config.solver_tol)
    pairs = list(sl.pairs)
    pairs[-1] = orient_at_origin(pairs[-1], mesh, L)
    return L, SpectrumSlice(tuple(pairs), sl.gap_to_next)


def check_preconditions(config: SweepConfig) -> float:
    """Simplicity of lambda_N and u_N(0) != 0 on a pole-free base mesh; returns u_N(0)."""
    base = generate_mesh(config.domain, h_max=config.h_max)
    L, sl = _laplacian_slice(base, config)
    _check_simple(sl, config.N, config.simplicity_rel_gap, "base mesh")
    u0 = value_at_origin(sl.pairs[-1], base, L)
    if abs(u0) < config.u0_threshold:
        raise PreconditionError(f"|u_N(0)| = {abs(u0):.2e} below {config.u0_threshold:.0e}; the asymptotic law does not apply")
    return u0


def _slit_lambda(config: SweepConfig, pole_cfg: PoleConfig, curve: Obstacle) -> float:
    m = _mesh(config, pole_cfg, obstacle=curve)
    return float(solve_lowest(assemble_laplacian(m), config.N, tol=config.solver_tol).values[-1])


def run_single(config: SweepConfig, a: float) -> tuple[SweepRecord, Optional[tuple]]:
    """Full pipeline at one value of a; stage failures are logged into ``record.errors``."""
    rec = SweepRecord(a=a, boundary_segments=config.domain.boundary_segments if config.domain.kind == "disk" else None)
    pole_cfg = PoleConfig(a)
    N = config.N
    artifact = None
    try:
        mesh = _mesh(config, pole_cfg)
        q = mesh_quality(mesh)
        rec.vertices, rec.triangles, rec.min_angle = mesh.n_vertices, mesh.n_triangles, q["min_angle"]
        L, lap = _laplacian_slice(mesh, config)
        _check_simple(lap, N, config.simplicity_rel_gap, f"a={a}")
        rec.lambda_N = lap.values[-1]
        rec.u_N0 = value_at_origin(lap.pairs[-1], mesh, L)
        if abs(rec.u_N0) < config.u0_threshold:
            raise PreconditionError(f"|u_N(0)| = {abs(rec.u_N0):.2e} below threshold")
        S = assemble_magnetic(mesh, pole_cfg)
        mag = solve_lowest(S, N, tol=config.solver_tol)
        rec.lambda_N_a = mag.values[-1]
        rec.eig_residual = max(max(p.residual for p in lap.pairs), max(p.residual for p in mag.pairs))
    except Exception as exc:  # noqa: BLE001 - recorded per a
        log.warning("a=%g: base stage failed: %s", a, exc)
        rec.errors.append(f"base: {exc}")
        return rec, artifact
    try:
        gauge = gauge_double(pole_cfg, mesh.vertices[S.free])
        w, rec.conjugation_residual = make_magnetic_real(mag.pairs[-1], gauge, S.M, rel_gap=mag.relative_gap(N - 1))
        graph = extract_nodal_set(mesh, S.to_vertices(w.vector), pole_cfg)
        st = nodal_stats(graph, pole_cfg)
        rec.d_a, rec.single_arc, rec.log_ratio = st.d_a, st.single_arc, st.log_ratio
        rec.euler_residual = float(euler_check(graph))
        rec.pole_degrees = tuple(graph.nodes[graph.pole_nodes[k]].degree for k in sorted(graph.pole_nodes))
        artifact = (graph, mesh)
        rec.lambda_slit_nodal = _slit_lambda(config, pole_cfg, export_curve(graph, pole_cfg))
    except Exception as exc:  # noqa: BLE001
        log.warning("a=%g: nodal route failed: %s", a, exc)
        rec.errors.append(f"nodal: {exc}")
    if config.use_segment_route:
        try:
            rec.lambda_slit_segment = _slit_lambda(config, pole_cfg, Obstacle.segment(pole_cfg.a_minus, pole_cfg.a_plus))
        except Exception as exc:  # noqa: BLE001
            log.warning("a=%g: segment route failed: %s", a, exc)
            rec.errors.append(f"segment: {exc}")
    for tau in config.tau_values:
        try:
            basis = build_test_basis(mesh, lap, L, pole_cfg, tau)
            G = basis_gram(basis, S)
            rec.gram_deviation[tau] = float(np.linalg.norm(G - np.eye(N), 2))
            rec.upper_bound[tau] = upper_bound(mesh, S, lap, L, pole_cfg, tau, basis=basis)
            rec.quadform_max[tau] = max_eig_quadform(assemble_M_matrix(mesh, lap, L, pole_cfg, tau))
        except Exception as exc:  # noqa: BLE001
            log.warning("a=%g tau=%g: bounds failed: %s", a, tau, exc)
            rec.errors.append(f"bounds tau={tau}: {exc}")
    return rec, artifact


def run_sweep(config: SweepConfig) -> SweepResult:
    """Precondition check, then the per-a pipeline in decreasing a, then the fit."""
    check_preconditions(config)
    records, graphs = [], {}
    for a in config.a_values:
        rec, art = run_single(config, a)
        records.append(rec)
        if art is not None:
            graphs[a] = art
        log.info("a=%g lambda=%.8f lambda_a=%.8f errors=%d", a, rec.lambda_N, rec.lambda_N_a, len(rec.errors))
    fit, err = None, None
    try:
        fit = fit_asymptotics(fit_subset(records))
    except NumericalError as exc:
        err = str(exc)
    return SweepResult(records, fit, config, graphs, err)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return repr(float(v))


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([
                _fmt(r.a), _fmt(r.lambda_N), _fmt(r.lambda_N_a), _fmt(r.u_N0), _fmt(r.lambda_slit_nodal),
                _fmt(r.lambda_slit_segment), _fmt(r.upper_bound.get(0.5)), _fmt(r.d_a), _fmt(r.log_ratio),
            ])


def write_json(records, fit: Optional[FitResult], path) -> None:
    doc = {"records": [r.to_dict() for r in records], "fit": fit.to_dict() if fit else None}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_json(path) -> tuple[list, Optional[FitResult]]:
    doc = json.loads(Path(path).read_text())
    recs = [SweepRecord.from_dict(d) for d in doc["records"]]
    return recs, FitResult.from_dict(doc["fit"]) if doc["fit"] else None


def asymptotics_svg(records, fit: Optional[FitResult], predicted: Optional[float] = None, size: int = 480) -> str:
    """Scatter of (1/|log a|, lambda_N^a - lambda_N) with the fitted and predicted lines."""
    pts = [(1.0 / abs(math.log(r.a)), r.lambda_N_a - r.lambda_N) for r in records if np.isfinite(r.lambda_N_a - r.lambda_N)]
    if predicted is None and fit is not None:
        predicted = fit.predicted
    xmax = max([p[0] for p in pts], default=1.0) * 1.1
    slopes = [s for s in ((fit.slope if fit else None), predicted) if s is not None]
    ymax = max([p[1] for p in pts] + [s * xmax for s in slopes] + [1e-12]) * 1.05
    pad = 40
    W = size - 2 * pad

    def tr(x, y):
        return pad + W * x / xmax, size - pad - W * y / ymax

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    ox, oy = tr(0, 0)
    ex, _ = tr(xmax, 0)
    _, ey = tr(0, ymax)
    out.append(f'<path d="M{ox:.2f},{ey:.2f} L{ox:.2f},{oy:.2f} L{ex:.2f},{oy:.2f}" fill="none" stroke="#000"/>')
    out.append(f'<text x="{ex - 80:.2f}" y="{oy + 28:.2f}" font-size="12">1/|log a|</text>')
    out.append(f'<text x="{ox + 4:.2f}" y="{ey + 12:.2f}" font-size="12">lambda_N^a - lambda_N</text>')
    for cls, s, color in (("fit", fit.slope if fit else None, "#c00"), ("prediction", predicted, "#00c")):
        if s is None:
            continue
        x1, y1 = tr(xmax, s * xmax)
        out.append(f'<line class="{cls}" x1="{ox:.2f}" y1="{oy:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="{color}"/>')
    for x, y in pts:
        cx, cy = tr(x, y)
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="#000"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(records, fit: Optional[FitResult], out_dir, formats=("csv", "json", "svg"), graphs=None) -> dict:
    """Write report files into ``out_dir``; returns {format: path or list of paths}."""
    if not records:
        raise ValueError("no records to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    written = {}
    for fmt in formats:
        if fmt == "csv":
            written["csv"] = out / "sweep.csv"
            write_csv(records, written["csv"])
        elif fmt == "json":
            written["json"] = out / "sweep.json"
            write_json(records, fit, written["json"])
        elif fmt == "svg":
            written["svg"] = out / "asymptotics.svg"
            written["svg"].write_text(asymptotics_svg(records, fit))
            nodal = []
            for a, (graph, mesh) in sorted((graphs or {}).items(), reverse=True):
                p = out / f"nodal_a_{a:g}.svg"
                w = 6 * a
                p.write_text(graph_svg(graph, mesh, window=(-w, w, -w, w)))
                nodal.append(p)
            written["nodal_svg"] = nodal
        else:
            raise ValueError(f"unknown format {fmt!r}")
    return written


__all__ = [
    "CSV_COLUMNS", "FitResult", "NumericalError", "PreconditionError", "SweepConfig",
    "SweepRecord", "SweepResult", "emit_report", "fit_asymptotics", "fit_subset", "load_config",
    "parse_config", "read_json", "run_single", "run_sweep",
]
