"""Shared fixtures: the cross-validation grid and memoized solver calls.

The acceptance grid is solved by three independent methods; several test
modules reuse those solutions, so they are cached per-process keyed on the
(hashable) parameter dataclass.
"""

import functools

import pytest

from mmcsetup import ctmc, gf, qbd
from mmcsetup.model import QueueParams

GRID_C = (1, 2, 3, 5, 10, 20)
GRID_RHO = (0.3, 0.5, 0.7, 0.9)
GRID_ALPHA = (0.01, 0.1, 1.0, 10.0)


def grid_points() -> list[QueueParams]:
    return [
        QueueParams(lam=rho * c, mu=1.0, alpha=alpha, c=c)
        for c in GRID_C
        for rho in GRID_RHO
        for alpha in GRID_ALPHA
    ]


def is_confluent(p: QueueParams) -> bool:
    """All outer roots coincide when alpha = mu (1 - rho); the
    partial-fraction tail form does not exist there."""
    return abs(p.alpha - p.mu * (1.0 - p.rho)) < 1e-12 * p.mu


@functools.lru_cache(maxsize=None)
def gf_solution(p: QueueParams):
    return gf.solve(p)


@functools.lru_cache(maxsize=None)
def qbd_solution(p: QueueParams):
    return qbd.solve(p)


@functools.lru_cache(maxsize=None)
def oracle_distribution(p: QueueParams, tol: float = 1e-12):
    return ctmc.solve_adaptive(p, tol=tol)


@pytest.fixture(scope="session")
def grid():
    return grid_points()


# one line per acceptance criterion, echoed after the run so outcomes are
# readable without digging through the dots
acceptance_lines: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    acceptance_lines.append(
        f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
