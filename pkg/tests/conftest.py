import numpy as np
import pytest

from clbp import synthetic
from clbp.pipeline import extract_features

# (criterion, passed, detail) lines filled by test_acceptance.py
ACCEPTANCE = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}" + (f" :: {detail}" if detail else "")
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_images():
    return synthetic.make_dataset(n_subjects=10, n_samples=8, seed=0)


@pytest.fixture(scope="session")
def synthetic_features(synthetic_images):
    return {s: [extract_features(img) for img in imgs] for s, imgs in synthetic_images.items()}


@pytest.fixture(scope="session")
def small_dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("faces")
    return synthetic.write_dataset(root, n_subjects=3, n_samples=3, seed=7)
