import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from irpdfl.instance import tiny2x2
from irpdfl.model import build_standard_form


def highs_objective(prog):
    """Independent MILP optimum from scipy's HiGHS (third opinion for oracle tests)."""
    A = prog.A.toarray()
    res = milp(
        prog.c,
        constraints=LinearConstraint(A, prog.b, prog.b),
        integrality=prog.integrality.astype(int),
        bounds=Bounds(0, np.inf),
        options={"mip_rel_gap": 1e-12},
    )
    return res.fun if res.status == 0 else None


@pytest.fixture
def tiny():
    return tiny2x2()


@pytest.fixture
def tiny_prog():
    return build_standard_form(tiny2x2())
