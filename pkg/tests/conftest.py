import math

import pytest

from henonlab.core import HenonLikeFamily


@pytest.fixture(scope="session")
def pure_b0() -> HenonLikeFamily:
    return HenonLikeFamily.pure(0.0)


@pytest.fixture(scope="session")
def pure_small_b() -> HenonLikeFamily:
    return HenonLikeFamily.pure(1e-3)


def superstable_parameter(period: int, seed: float) -> float:
    """Parameter with Q_a^period(0) = 0, by Newton in a (chain-rule slope)."""
    a = seed
    for _ in range(200):
        x = 0.0
        dx = 0.0
        for _ in range(period):
            x, dx = x * x + a, 2.0 * x * dx + 1.0
        step = x / dx
        a -= step
        if abs(step) < 1e-15:
            break
    return a


def superstable_ladder(p_max: int) -> dict[int, float]:
    """Superstable parameters of the primary window cascade, periods 3..p_max."""
    out = {3: superstable_parameter(3, -1.7548)}
    for p in range(4, p_max + 1):
        seed = -1.9408 if p == 4 else -2.0 + (out[p - 1] + 2.0) / 4.0
        out[p] = superstable_parameter(p, seed)
    return out


def quadratic_fixed_points(a: float) -> tuple[float, float]:
    """(alpha, beta) of x^2 + a, closed form."""
    r = math.sqrt(1.0 - 4.0 * a)
    return (1.0 - r) / 2.0, (1.0 + r) / 2.0
