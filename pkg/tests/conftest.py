import os

import hypothesis
import numpy as np
import pytest

from galet.problems import (
    Example1Problem,
    SingularLstsqProblem,
    StronglyConvexQuadProblem,
    generate_hyperclean_data,
)

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def ex1():
    return Example1Problem()


@pytest.fixture
def lstsq():
    return SingularLstsqProblem.generate(d_x=2, d_y=6, rank=3, seed=11)


@pytest.fixture
def scq():
    return StronglyConvexQuadProblem.generate(d_x=2, d_y=3, seed=5)


@pytest.fixture
def hyperclean():
    return generate_hyperclean_data(n_tr=40, n_val=30, p=4, p_c=0.25, seed=2)


@pytest.fixture
def all_problems(ex1, lstsq, scq, hyperclean):
    return [ex1, lstsq, scq, hyperclean]


# acceptance lines are collected by tests/test_acceptance.py and echoed here
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
