import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def grid100():
    return np.linspace(0.0, 1.0, 100)


def smooth_function(rng, n_points=100, n_terms=4):
    """Random trigonometric polynomial with decaying coefficients."""
    t = np.linspace(0.0, 1.0, n_points)
    k = np.arange(1, n_terms + 1)
    a = rng.normal(size=n_terms) / k
    b = rng.normal(size=n_terms) / k
    return (a[:, None] * np.sin(2 * np.pi * k[:, None] * t)
            + b[:, None] * np.cos(2 * np.pi * k[:, None] * t)).sum(axis=0)


def smooth_warp(rng, n_points=100, strength=0.5):
    """Random warp ``t + a t(1-t) + b sin(2 pi t) / (2 pi)``.

    ``|a| + |b| <= strength < 1`` keeps the slope above ``1 - strength``.
    """
    t = np.linspace(0.0, 1.0, n_points)
    a, b = rng.uniform(-1.0, 1.0, size=2)
    scale = strength / max(1.0, abs(a) + abs(b))
    a, b = a * scale, b * scale
    return t + a * t * (1 - t) + b * np.sin(2 * np.pi * t) / (2 * np.pi)


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[str(number)] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE, key=lambda n: (int(n.split()[0]), n)):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
