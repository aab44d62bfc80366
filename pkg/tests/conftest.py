from pathlib import Path

import numpy as np
import pytest

from seqpomdp.model import ModelSpec, NoisyOrSpec, build_noisy_or, validate

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


def make_m2():
    """Two profiles, one basis function f = (0.5, 0.8); products a (zeta 1) and b (zeta 2)."""
    return validate(
        ModelSpec(
            prior=[0.5, 0.5],
            basis=[[0.5, 0.8]],
            zeta=[[1.0], [2.0]],
            rewards=[1.0, 2.0],
            beta=0.9,
            products=["a", "b"],
        )
    )


def make_single_product(q=0.5, R=1.0, beta=0.9):
    """Constant no-purchase probability q for every profile."""
    return validate(ModelSpec(prior=[0.5, 0.5], basis=[[q, q]], zeta=[[1.0]], rewards=[R], beta=beta))


def make_noisy_or_2():
    return build_noisy_or(
        NoisyOrSpec(
            n_features=2,
            baselines=[0.4, 0.6],
            zeta=[[1.13, 0.0], [0.0, 0.87], [0.55, 0.61]],
            rewards=[1.0, 1.5, 1.2],
            beta=0.8,
            products=["p", "q", "r"],
        )
    )


@pytest.fixture
def m2():
    return make_m2()


@pytest.fixture
def single_product():
    return make_single_product()


@pytest.fixture
def noisy_or_2():
    return make_noisy_or_2()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
