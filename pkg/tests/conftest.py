"""Shared builders for the test suite."""

import re

import numpy as np

from piiorder import (
    CompoundPoissonKernel,
    ExponentialJumps,
    PIICharacteristics,
    PiecewiseLinear,
    point_mass,
)

EXP1 = ExponentialJumps(mean_size=1.0)


def h_slope(rate: float, dist, threshold: float = 1.0) -> float:
    """rate * E h(J): the drift slope matching the truncated-jump compensator."""

    def h(y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) <= threshold, y, 0.0)

    return rate * dist.expect(h, breaks=(-threshold, threshold))


def cp_char(rate: float, dist, drift_slope: float | None = None, **kwargs) -> PIICharacteristics:
    """Compound-Poisson characteristics.

    With no explicit drift the slope is set to the compensator slope, so the
    marginal law is the raw (uncompensated) jump sum.
    """
    slope = h_slope(rate, dist) if drift_slope is None else drift_slope
    return PIICharacteristics(
        drift=PiecewiseLinear.constant_slope(slope),
        kernel=CompoundPoissonKernel(rate, dist),
        **kwargs,
    )


def poisson_char(rate: float, drift_slope: float | None = None, **kwargs) -> PIICharacteristics:
    """Unit-jump compound Poisson; default marginal is Poisson(rate * t)."""
    return cp_char(rate, point_mass(1.0), drift_slope=drift_slope, **kwargs)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per numbered acceptance criterion."""
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_criterion_(\d+)", getattr(rep, "nodeid", ""))
            if m:
                n = int(m.group(1))
                rows[n] = "PASS" if outcome == "passed" else "FAIL"
    if rows:
        terminalreporter.write_sep("-", "acceptance summary")
        for n in sorted(rows):
            terminalreporter.write_line(f"ACCEPTANCE {n}: {rows[n]}")
