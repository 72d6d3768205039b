import numpy as np
import pytest

from afemrec.mesh import build_mesh
from afemrec.problems import kellogg_problem


@pytest.fixture
def square2():
    """Unit square split along the (0,0)-(1,1) diagonal, all Dirichlet."""
    v = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    t = np.array([[0, 1, 2], [0, 2, 3]])
    return build_mesh(v, t)


@pytest.fixture(scope="session")
def kellogg():
    return kellogg_problem()
