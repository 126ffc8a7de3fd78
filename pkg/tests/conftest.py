import numpy as np
import pytest

from polaritunnel import SystemSpec
from polaritunnel.presets import FIG3_COUPLINGS


def random_spec(rng: np.random.Generator, max_n: int = 8, strength=(0.01, 0.9)) -> SystemSpec:
    """Stable system with N <lambda^4> a random fraction of (w0 wc)^2 and mixed signs."""
    n = int(rng.integers(1, max_n + 1))
    w0 = rng.uniform(0.5, 2.0)
    wc = rng.uniform(0.5, 2.0)
    a = rng.uniform(0.5, 3.0)
    raw = rng.normal(size=n)
    raw[rng.random(n) < 0.15] = 0.0
    if not np.any(raw):
        raw[0] = 1.0
    frac = rng.uniform(*strength)
    c = raw / np.sqrt(np.sum(raw**2)) * np.sqrt(frac) * w0 * wc
    return SystemSpec(w0, wc, a, tuple(c))


def random_specs(count: int, seed: int, **kw) -> list[SystemSpec]:
    rng = np.random.default_rng(seed)
    return [random_spec(rng, **kw) for _ in range(count)]


@pytest.fixture
def fig3():
    return SystemSpec(1.0, 1.0, 2.0, FIG3_COUPLINGS)


@pytest.fixture
def uncoupled():
    return SystemSpec(1.0, 1.0, 2.0, (0.0,) * 3)
