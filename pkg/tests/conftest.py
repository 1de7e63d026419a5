from dataclasses import dataclass
from functools import lru_cache

import pytest

from ablab.eig import SpectrumSlice, orient_at_origin, solve_lowest, value_at_origin
from ablab.fem import assemble_laplacian, assemble_magnetic
from ablab.geometry import DomainSpec, GradingPolicy, generate_mesh
from ablab.potential import PoleConfig

ACCEPTANCE_LINES = []


@dataclass
class DiskCase:
    a: float
    config: PoleConfig
    mesh: object
    L: object
    lap: SpectrumSlice
    S: object
    mag: SpectrumSlice
    u0: float


@lru_cache(maxsize=None)
def disk_case(a: float, N: int = 1, h_max: float = 0.05) -> DiskCase:
    cfg = PoleConfig(a)
    poles = (cfg.a_minus, cfg.a_plus)
    mesh = generate_mesh(DomainSpec.disk(), poles=poles, h_max=h_max, grading=GradingPolicy(poles, a / 10, 1.2))
    L = assemble_laplacian(mesh)
    sl = solve_lowest(L, N)
    pairs = list(sl.pairs)
    pairs[-1] = orient_at_origin(pairs[-1], mesh, L)
    lap = SpectrumSlice(tuple(pairs), sl.gap_to_next)
    S = assemble_magnetic(mesh, cfg)
    mag = solve_lowest(S, N)
    return DiskCase(a, cfg, mesh, L, lap, S, mag, value_at_origin(pairs[-1], mesh, L))


@pytest.fixture(scope="session")
def disk():
    return disk_case


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
