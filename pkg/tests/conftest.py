import numpy as np
import pytest

from distspace.geometry import PointConfiguration

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def random_config(rng: np.random.Generator, n: int, d: int, min_sep: float = 0.05) -> PointConfiguration:
    """Gaussian points with no pair closer than ``min_sep``."""
    while True:
        pts = rng.normal(size=(n, d))
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        if n < 2 or dist[np.triu_indices(n, 1)].min() > min_sep:
            return PointConfiguration(pts)


def random_rotation(rng: np.random.Generator, d: int, reflect: bool = False) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    q = q * np.sign(np.diag(r))
    if reflect:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
