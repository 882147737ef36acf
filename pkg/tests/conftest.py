"""Shared test helpers and the acceptance verdict summary.

Acceptance tests register one human-readable verdict line each through
:func:`record_criterion` before asserting, so a failing criterion still
reports its measured numbers.  The lines are replayed in a dedicated
section at the end of the pytest run.
"""

from __future__ import annotations

import numpy as np

from tubal_sketch import tensor_core

_VERDICTS = []


def record_criterion(line):
    _VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in _VERDICTS:
        terminalreporter.write_line(line)


def rand_tensor(rng, m, n, p):
    return rng.standard_normal((m, n, p))


def exact_rank_tensor(transform, rng, m, n, p, rank):
    """Random tensor whose tubal rank under ``transform`` is ``rank``."""
    g = rng.standard_normal((m, rank, p))
    h = rng.standard_normal((rank, n, p))
    return tensor_core.lprod(transform, g, h)


def synthetic_image(m=128, n=128):
    """Deterministic smooth three-channel image with values in [0, 255]."""
    x, y = np.meshgrid(np.linspace(0.0, 1.0, n), np.linspace(0.0, 1.0, m))
    r = 120 + 90 * np.sin(6 * x) * np.cos(4 * y) + 40 * x
    g = 100 + 80 * np.exp(-((x - 0.3) ** 2 + (y - 0.6) ** 2) / 0.05) + 60 * y
    b = 90 + 70 * np.cos(9 * (x + y)) + 50 * x * y
    return np.clip(np.stack([r, g, b], axis=2), 0.0, 255.0)
