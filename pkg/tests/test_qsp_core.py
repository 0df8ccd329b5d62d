import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcg import polytools as pt
from qcg import qsp_core as qsp
from qcg.errors import (
    ConditionViolation,
    DomainError,
    NotConverged,
    ParityMismatch,
    ResourceError,
)
from qcg.solvers import cg_tracked


def zero_phases(d, convention):
    return qsp.PhaseFactors((0.0,) * (d + 1), convention)


# ---------------------------------------------------------------------------
# qsp_eval
# ---------------------------------------------------------------------------


def test_zero_reflection_even_is_identity():
    phi = zero_phases(4, "reflection")
    for x in (-0.9, -0.2, 0.0, 0.5, 1.0):
        assert qsp.qsp_eval(phi, x) == pytest.approx(1.0, abs=1e-14)


def test_zero_reflection_odd_is_x():
    phi = zero_phases(5, "reflection")
    for x in (-0.9, -0.2, 0.0, 0.5, 1.0):
        assert qsp.qsp_eval(phi, x) == pytest.approx(x, abs=1e-14)


def test_zero_wx_is_chebyshev():
    phi = zero_phases(3, "wx")
    assert qsp.qsp_eval(phi, 0.5).real == pytest.approx(-1.0, abs=1e-14)


def test_eval_domain_error():
    with pytest.raises(DomainError):
        qsp.qsp_eval(zero_phases(2, "wx"), 1.5)


@given(st.lists(st.floats(-np.pi, np.pi), min_size=1, max_size=12),
       st.sampled_from(["reflection", "wx"]),
       st.floats(-1.0, 1.0))
@settings(max_examples=200, deadline=None)
def test_product_is_unitary(angles, convention, x):
    phi = qsp.PhaseFactors(tuple(angles), convention)
    u = qsp.qsp_unitary(phi, x)
    assert np.linalg.norm(u @ u.conj().T - np.eye(2)) <= 1e-12


# ---------------------------------------------------------------------------
# convention conversion
# ---------------------------------------------------------------------------


@given(st.lists(st.floats(-np.pi, np.pi), min_size=1, max_size=14))
@settings(max_examples=150, deadline=None)
def test_conversion_roundtrip_mod_2pi(angles):
    phi = qsp.PhaseFactors(tuple(angles), "reflection")
    back = qsp.convert_convention(qsp.convert_convention(phi, "wx"), "reflection")
    diff = np.mod(np.array(back.angles) - np.array(phi.angles) + np.pi, 2 * np.pi) - np.pi
    assert np.max(np.abs(diff)) <= 1e-12


@given(st.lists(st.floats(-np.pi, np.pi), min_size=1, max_size=10),
       st.floats(-1.0, 1.0))
@settings(max_examples=150, deadline=None)
def test_conversion_preserves_value(angles, x):
    phi = qsp.PhaseFactors(tuple(angles), "reflection")
    wx = qsp.convert_convention(phi, "wx")
    assert qsp.qsp_eval(phi, x) == pytest.approx(qsp.qsp_eval(wx, x), abs=1e-12)


# ---------------------------------------------------------------------------
# solve_phases
# ---------------------------------------------------------------------------


def test_solve_identity_polynomial():
    p = pt.Polynomial.from_monomial([0.0, 1.0])
    phi, res = qsp.solve_phases(p, 1e-12)
    assert res.max_abs_error <= 1e-12
    for x in np.linspace(-1, 1, 41):
        assert qsp.qsp_eval(phi, float(x)).real == pytest.approx(float(x), abs=1e-12)


def test_solve_t4():
    p = pt.Polynomial.chebyshev_t(4)
    phi, res = qsp.solve_phases(p, 1e-10)
    assert res.max_abs_error <= 1e-10
    # the all-zero phases are an exact wx-convention solution for T_4
    assert qsp.verify_phases(zero_phases(4, "wx"), p, 64).max_abs_error <= 1e-13


def test_solve_qcg_even_part(poisson16_case1, tracked16_case1):
    r8 = pt.Polynomial.from_monomial(tracked16_case1[8].r)
    shifted = pt.positive_shift(r8)
    even = shifted.even_part()
    odd = shifted.odd_part()
    c = max(pt.max_abs(even, (-1.0, 1.0)), pt.max_abs(odd, (-1.0, 1.0)))
    phi, res = qsp.solve_phases(even.scaled(1.0 / c), 1e-10)
    assert res.max_abs_error <= 1e-10
    assert qsp.verify_phases(phi, even.scaled(1.0 / c), 500).max_abs_error <= 1e-10


def test_solver_is_deterministic():
    p = pt.Polynomial.chebyshev_t(7)
    phi1, _ = qsp.solve_phases(p, 1e-10)
    phi2, _ = qsp.solve_phases(p, 1e-10)
    assert phi1.angles == phi2.angles


@pytest.mark.parametrize("order", [4, 7])
def test_solved_parity_relation(order):
    p = pt.Polynomial.chebyshev_t(order)
    phi, _ = qsp.solve_phases(p, 1e-10)
    sign = 1.0 if order % 2 == 0 else -1.0
    for x in np.linspace(0.05, 0.95, 7):
        a = qsp.qsp_eval(phi, float(x)).real
        b = qsp.qsp_eval(phi, float(-x)).real
        assert a == pytest.approx(sign * b, abs=1e-12)


def test_condition_violation():
    p = pt.Polynomial.from_monomial([0.0, 1.1])
    with pytest.raises(ConditionViolation):
        qsp.solve_phases(p, 1e-10)


def test_parity_mismatch():
    p = pt.Polynomial.from_monomial([0.3, 0.3])
    with pytest.raises(ParityMismatch):
        qsp.solve_phases(p, 1e-10)


def test_degree_cap():
    p = pt.Polynomial.chebyshev_t(600)
    with pytest.raises(ResourceError):
        qsp.solve_phases(p, 1e-10, max_degree=512)


def test_not_converged_carries_best():
    p = pt.Polynomial.chebyshev_t(6)
    with pytest.raises(NotConverged) as err:
        qsp.solve_phases(p, 1e-30)
    assert err.value.best is not None
    assert err.value.residual.max_abs_error > 0.0


# ---------------------------------------------------------------------------
# verify_phases
# ---------------------------------------------------------------------------


def test_verify_solved_t2():
    p = pt.Polynomial.chebyshev_t(2)
    phi, _ = qsp.solve_phases(p, 1e-12)
    assert qsp.verify_phases(phi, p, 1000).max_abs_error <= 1e-10


def test_verify_zero_wx_t5():
    p = pt.Polynomial.chebyshev_t(5)
    res = qsp.verify_phases(zero_phases(5, "wx"), p, 100)
    assert res.max_abs_error <= 1e-14


def test_verify_zero_wx_against_x5():
    # zero wx phases realize T_5; against x^5 the residual is the T_5 - x^5 gap
    p = pt.Polynomial.from_monomial([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    res = qsp.verify_phases(zero_phases(5, "wx"), p, 100)
    j = np.arange(1, 101)
    xs = np.cos((2 * j - 1) * np.pi / 200.0)
    t5 = np.polynomial.chebyshev.chebval(xs, [0, 0, 0, 0, 0, 1])
    expected = np.max(np.abs(t5 - xs ** 5))
    assert res.max_abs_error == pytest.approx(expected, abs=1e-13)
    assert expected == pytest.approx(1.38, abs=0.01)


def test_phase_factor_serialization():
    phi = qsp.PhaseFactors((0.1, -0.4, 2.0), "wx")
    again = qsp.PhaseFactors.from_dict(phi.to_dict())
    assert again == phi
