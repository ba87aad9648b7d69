import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from surfhash.image_io import GrayImage, save_png  # noqa: E402
from surfhash.synthetic import textured_image  # noqa: E402


@pytest.fixture(scope="session")
def scene():
    return textured_image(192, seed=7)


@pytest.fixture
def scene_png(tmp_path, scene):
    path = tmp_path / "scene.png"
    save_png(scene, path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gray(values):
    return GrayImage(np.asarray(values, dtype=np.float64))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
