import numpy as np
import pytest

import qcg


def make_poisson_base(system, alpha=4.0):
    a_prime = 2.0 * system.matrix / alpha - np.eye(system.dim)
    return qcg.exact_dilation(a_prime)


@pytest.fixture(scope="session")
def poisson16_case1():
    return qcg.poisson_system(4, "case1")


@pytest.fixture(scope="session")
def poisson16_case2():
    return qcg.poisson_system(4, "case2")


@pytest.fixture(scope="session")
def trace16_case1(poisson16_case1):
    base = make_poisson_base(poisson16_case1)
    cfg = qcg.QcgConfig(eps=0.1, alpha=4.0)
    return qcg.qcg_solve(poisson16_case1, base, cfg)


@pytest.fixture(scope="session")
def trace16_case2(poisson16_case2):
    base = make_poisson_base(poisson16_case2)
    cfg = qcg.QcgConfig(eps=0.1, alpha=4.0)
    return qcg.qcg_solve(poisson16_case2, base, cfg)


@pytest.fixture(scope="session")
def tracked16_case1(poisson16_case1):
    return qcg.cg_tracked(poisson16_case1, 4.0, max_iter=12)
