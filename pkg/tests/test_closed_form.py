import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pepsplit.closed_form import (EXACT, LOWER, UPPER, RateBound, closed_form_bounds, rate_drs_corner,
                                  rate_drs_upper, rate_fbs1, rate_fbs2, rate_gm, rate_prs)
from pepsplit.core import FunctionClass, SumProblem, admissible_step_range


def sum_problem(rho, Lf, mu, Lg):
    return SumProblem(FunctionClass(rho, Lf), FunctionClass(mu, Lg))


FIG1A = sum_problem(0.9, 1.0, 0.0, 0.2)
FIG1B = sum_problem(0.1, 10.0, 0.0, 1.0)
FIG2 = sum_problem(0.1, 1.0, 0.0, 0.2)


def test_gm_examples():
    assert rate_gm(1.0, FIG1A).value == pytest.approx(0.2)
    assert rate_gm(1e-9, FIG1A).value == pytest.approx(1.0)
    tau = 2 / 2.1
    assert rate_gm(tau, FIG1A).value == pytest.approx(float(1 - Fr(20, 21) * Fr(9, 10)))
    assert rate_gm(1.0, FIG1A).kind == EXACT


def test_fbs1_examples():
    assert rate_fbs1(1.0, sum_problem(0.1, 1.0, 0.0, 0.2)).value == pytest.approx(0.9)
    assert rate_fbs1(1.0, sum_problem(0.1, 1.0, 0.1, 0.2)).value == pytest.approx(0.9 / 1.1)
    rho, Lf = 0.1, 1.0
    tau = 2 / (rho + Lf)
    assert rate_fbs1(tau, sum_problem(rho, Lf, 0, 0.2)).value == pytest.approx(abs(1 - 2 * rho / (rho + Lf)))


def test_fbs2_examples():
    assert rate_fbs2(1.0, sum_problem(0.1, 1.0, 0.0, 0.2)).value == pytest.approx(1 / 1.1)
    # tau = 2 beta with beta = 5
    assert rate_fbs2(10.0, sum_problem(0.1, 1.0, 0.0, 0.2)).value == pytest.approx(1 / (1 + 10 * 0.1))
    assert rate_fbs2(1.0, sum_problem(0.1, 1.0, 0.1, 0.2)).value == pytest.approx(0.9 / 1.1)


def test_prs_examples():
    assert rate_prs(1.0, FIG1B).value == pytest.approx(9 / 11)
    assert rate_prs(4.0, sum_problem(0.25, 0.25 + 1e-9, 0.0, 1.0)).value == pytest.approx(0.0, abs=1e-8)
    rho, Lf = 0.1, 10.0
    grid = np.geomspace(0.01, 100, 4001)
    vals = [rate_prs(t, sum_problem(rho, Lf, 0, 1.0)).value for t in grid]
    assert grid[int(np.argmin(vals))] == pytest.approx(1 / math.sqrt(rho * Lf), rel=5e-3)


def test_drs_examples():
    up = rate_drs_upper(1.0, FIG2)
    assert up.kind == UPPER
    assert up.value == pytest.approx(float(Fr(102, 100) / (Fr(11, 10) * Fr(12, 10))))
    assert rate_drs_upper(1e-9, FIG2).value == pytest.approx(1.0)
    corner = rate_drs_corner(20.0, FIG2)
    assert corner.kind == LOWER and corner.value == pytest.approx(81 / 105)
    assert rate_drs_corner(3.3, FIG1B).value == pytest.approx(1 / 1.33, abs=1e-4)


def test_drs_upper_needs_mu_zero():
    with pytest.raises(ValueError):
        rate_drs_upper(1.0, sum_problem(0.1, 1.0, 0.1, 0.2))


def test_drs_corner_collapse_affine_g():
    # g affine: both b corners at 0
    p = sum_problem(0.1, 1.0, 0.0, 1e-12)
    assert rate_drs_corner(2.0, p).value == pytest.approx(1 / (1 + 2.0 * 0.1), abs=1e-9)
    with pytest.raises(ValueError):
        rate_drs_corner(0.0, p)


def test_inadmissible_rejected():
    with pytest.raises(ValueError):
        rate_gm(2.0, FIG1A)
    with pytest.raises(ValueError):
        rate_fbs1(2.0, FIG1A)


def test_rate_bound_validation():
    with pytest.raises(ValueError):
        RateBound(-0.1, EXACT)
    with pytest.raises(ValueError):
        RateBound(float("nan"), EXACT)


def test_closed_form_bounds_listing():
    assert [b.kind for b in closed_form_bounds("DRS", 1.0, FIG2)] == [UPPER, LOWER]
    assert [b.kind for b in closed_form_bounds("DRS", 1.0, sum_problem(0.1, 1, 0.1, 0.2))] == [LOWER]
    assert closed_form_bounds("CPM", 1.0, FIG2) == []


def test_nonsmooth_g_prs_and_drs():
    p = sum_problem(0.1, 1.0, 0.0, math.inf)
    assert rate_prs(1.0, p).value == pytest.approx(0.9 / 1.1)
    assert 0 < rate_drs_corner(1.0, p).value <= 1


classes = st.tuples(st.floats(0, 2), st.floats(0.05, 5)).map(lambda t: (t[0], t[0] + t[1]))


@given(classes, classes, st.floats(0.01, 20))
def test_prs_symmetry(fc, gc, tau):
    a = rate_prs(tau, sum_problem(*fc, *gc)).value
    b = rate_prs(tau, sum_problem(*gc, *fc)).value
    assert a == pytest.approx(b)


@given(classes, classes, st.sampled_from([rate_gm, rate_fbs1, rate_fbs2, rate_prs]),
       st.floats(0.01, 0.99))
def test_strictly_contractive_inside_range(fc, gc, rate, frac):
    rho = max(fc[0], 0.01)
    p = sum_problem(rho, max(fc[1], rho + 0.01), *gc)
    kind = {rate_gm: "GM", rate_fbs1: "FBS1", rate_fbs2: "FBS2", rate_prs: "PRS"}[rate]
    hi = admissible_step_range(kind, p).hi
    tau = frac * (hi if math.isfinite(hi) else 50.0)
    assert 0 <= rate(tau, p).value < 1


@given(classes, classes, st.floats(0.01, 20))
def test_continuity(fc, gc, tau):
    p = sum_problem(*fc, *gc)
    a, b = rate_prs(tau, p).value, rate_prs(tau * (1 + 1e-9), p).value
    assert abs(a - b) < 1e-6
    a, b = rate_drs_corner(tau, p).value, rate_drs_corner(tau * (1 + 1e-9), p).value
    assert abs(a - b) < 1e-6


def test_drs_upper_undercut_by_quadratic_instance():
    """The second branch of the DRS upper bound, as stated, is beaten by an
    explicit univariate quadratic (a = 1/alpha, b = 1/beta), which is an
    exact instance of the class. Recorded here so the discrepancy is visible."""
    p = sum_problem(1.0, 2.0, 0.0, 1.0)
    assert rate_drs_corner(2.0, p).value == pytest.approx(0.6)
    assert rate_drs_upper(2.0, p).value == pytest.approx(5 / 9)


def test_drs_upper_above_pep_at_tau_7():
    from pepsplit.core import MethodSpec
    from pepsplit.sdp import pep_rate
    assert rate_drs_upper(7.0, FIG2).value > pep_rate(MethodSpec("DRS", 7.0), FIG2)
