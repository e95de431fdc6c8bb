import math

import pytest

from cesim.mms import SUITES, ConvergenceTable, mms_convergence


def test_table_orders():
    t = ConvergenceTable("x", [16, 32], [1 / 16, 1 / 32], [4e-3, 1e-3])
    assert math.isnan(t.orders[0])
    assert t.last_order == pytest.approx(2.0)
    text = str(t)
    assert "suite x" in text and len(text.splitlines()) == 4


def test_unknown_suite():
    with pytest.raises(ValueError):
        mms_convergence("burgers")


@pytest.mark.parametrize("suite", SUITES)
def test_errors_shrink_on_coarse_grids(suite):
    t = mms_convergence(suite, (8, 16, 32))
    assert len(t.rows()) == 3
    assert t.errors[0] > t.errors[1] > t.errors[2] > 0


def test_n_equation_first_order():
    t = mms_convergence("n_equation", (16, 32, 64))
    assert t.last_order >= 0.9
