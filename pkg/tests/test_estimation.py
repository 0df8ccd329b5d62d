import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qcg
from qcg import estimation as est
from qcg import polytools as pt
from qcg.encodings import BlockEncoding, LinearSystem, exact_dilation
from qcg.errors import DimensionMismatch, DomainError, ZeroVector
from qcg.qet_engine import qet_general, qet_oracle


def state_prep(vector):
    system = LinearSystem(np.eye(len(vector)), np.asarray(vector, float))
    return est.prepare_b(system)


def encoding_of(matrix):
    return exact_dilation(np.asarray(matrix))


# ---------------------------------------------------------------------------
# prepare_b
# ---------------------------------------------------------------------------


def test_prepare_basis_vector_is_identity():
    u = state_prep([1.0, 0.0, 0.0, 0.0])
    assert np.allclose(u, np.eye(4), atol=1e-14)


def test_prepare_case2_uniform():
    system = qcg.poisson_system(4, "case2")
    u = est.prepare_b(system)
    assert np.allclose(u[:, 0], 0.25, atol=1e-14)
    assert np.linalg.norm(u @ u.conj().T - np.eye(16)) <= 1e-12


def test_prepare_case1_two_spikes():
    system = qcg.poisson_system(4, "case1")
    u = est.prepare_b(system)
    expected = np.zeros(16)
    expected[7] = expected[8] = 1.0 / math.sqrt(2.0)
    assert np.allclose(u[:, 0], expected, atol=1e-14)


def test_prepare_zero_vector():
    with pytest.raises(ZeroVector):
        state_prep([0.0, 0.0])


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
@settings(max_examples=50, deadline=None)
def test_prepare_random_states(seed, n_qubits):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** n_qubits)
    if np.linalg.norm(v) < 1e-9:
        v[0] = 1.0
    u = state_prep(v)
    assert np.allclose(u[:, 0], v / np.linalg.norm(v), atol=1e-12)
    assert np.linalg.norm(u @ u.conj().T - np.eye(len(v))) <= 1e-12


# ---------------------------------------------------------------------------
# swap_test, exact mode
# ---------------------------------------------------------------------------


def test_swap_identical_states():
    be = BlockEncoding(np.eye(4), 1.0, n_a=0, n_s=2)
    prep = state_prep([0.5, 0.5, 0.5, 0.5])
    out = est.swap_test(be, be, prep)
    assert out.re_inner == pytest.approx(1.0, abs=1e-14)
    assert out.p0 == pytest.approx(1.0, abs=1e-14)
    assert out.p1 == pytest.approx(0.0, abs=1e-14)


def test_swap_orthogonal_states():
    ident = BlockEncoding(np.eye(2), 1.0, n_a=0, n_s=1)
    flip = BlockEncoding(np.array([[0.0, 1.0], [1.0, 0.0]]), 1.0, n_a=0, n_s=1)
    prep = np.eye(2)
    out = est.swap_test(ident, flip, prep)
    assert out.re_inner == pytest.approx(0.0, abs=1e-14)
    assert out.p0 == pytest.approx(0.5, abs=1e-14)
    assert out.p1 == pytest.approx(0.5, abs=1e-14)


def test_swap_dimension_mismatch():
    a = BlockEncoding(np.eye(2), 1.0, n_a=0, n_s=1)
    b = BlockEncoding(np.eye(4), 1.0, n_a=1, n_s=1)
    with pytest.raises(DimensionMismatch):
        est.swap_test(a, b, np.eye(2))


def test_swap_qcg_inner_product(poisson16_case1, tracked16_case1):
    # the search-direction overlap: block encodings of P_p and x P_p
    system = poisson16_case1
    base = exact_dilation(2.0 * system.matrix / 4.0 - np.eye(16))
    p_poly = pt.Polynomial.from_monomial(tracked16_case1[3].p)
    xp_poly = p_poly.mul_x()
    enc_p, asm_p = qet_general(base, p_poly, "positive_side")
    enc_xp, asm_xp = qet_general(base, xp_poly, "positive_side")
    prep = est.prepare_b(system)
    out = est.swap_test(enc_p, enc_xp, prep)
    b_hat = system.rhs_normalized()
    vec_p = qet_oracle(system, p_poly, 4.0) @ b_hat
    vec_xp = qet_oracle(system, xp_poly, 4.0) @ b_hat
    expected = float(vec_p @ vec_xp) / (asm_p.normalization * asm_xp.normalization)
    assert out.re_inner == pytest.approx(expected, abs=1e-10)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_swap_matches_direct_inner_product(seed):
    rng = np.random.default_rng(seed)
    n_qubits = int(rng.integers(1, 4))
    dim = 2 ** n_qubits
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    a = (a + a.conj().T) / 2
    a /= np.linalg.norm(a, 2) * 1.1
    b = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    b = (b + b.conj().T) / 2
    b /= np.linalg.norm(b, 2) * 1.3
    u, v = exact_dilation(a), exact_dilation(b)
    vec = rng.normal(size=dim)
    vec[0] += 2.0  # keep it nonzero
    prep = state_prep(vec)
    state = prep[:, 0]
    psi = a @ state
    phi = b @ state
    out = est.swap_test(u, v, prep)
    assert out.re_inner == pytest.approx(float(np.real(psi.conj() @ phi)), abs=1e-12)
    assert out.p0 + out.p1 <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# swap_test, sampled mode
# ---------------------------------------------------------------------------


def overlap_pair():
    a = np.diag([0.6, 0.3])
    b = np.diag([0.5, -0.7])
    return exact_dilation(a), exact_dilation(b), state_prep([0.8, 0.6])


def test_sampled_reproducible():
    u, v, prep = overlap_pair()
    m = est.ShotModel.sampled(10_000, seed=42)
    r1 = est.swap_test(u, v, prep, m)
    r2 = est.swap_test(u, v, prep, m)
    assert (r1.p0, r1.p1, r1.re_inner) == (r2.p0, r2.p1, r2.re_inner)
    assert r1.shots == 10_000
    assert r1.stderr > 0.0


def test_sampled_tracks_exact():
    u, v, prep = overlap_pair()
    exact = est.swap_test(u, v, prep)
    hits = 0
    for seed in range(20):
        out = est.swap_test(u, v, prep, est.ShotModel.sampled(10 ** 6, seed))
        if abs(out.re_inner - exact.re_inner) <= 5.0 * out.stderr:
            hits += 1
    assert hits >= 19


def test_sampled_stderr_formula():
    u, v, prep = overlap_pair()
    out = est.swap_test(u, v, prep, est.ShotModel.sampled(4096, seed=7))
    var = (out.p0 * (1 - out.p0) + out.p1 * (1 - out.p1)
           + 2 * out.p0 * out.p1) / 4096
    assert out.stderr == pytest.approx(math.sqrt(var), rel=1e-12)


def test_shot_model_validation():
    with pytest.raises(DomainError):
        est.ShotModel("sampled", shots=0)
    with pytest.raises(DomainError):
        est.ShotModel("approximate")


# ---------------------------------------------------------------------------
# required_shots
# ---------------------------------------------------------------------------


def test_required_shots_examples():
    assert est.required_shots(0.1, 0.95) == 738
    # ceil(2 ln(2 / 0.37) / 1) evaluates to 4
    assert est.required_shots(1.0, 0.63) == math.ceil(2.0 * math.log(2.0 / 0.37))
    assert est.required_shots(1.0, 0.63) == 4


def test_required_shots_quadratic_scaling():
    assert est.required_shots(0.05, 0.95) == 4 * est.required_shots(0.1, 0.95)


def test_required_shots_validation():
    with pytest.raises(DomainError):
        est.required_shots(0.0, 0.95)
    with pytest.raises(DomainError):
        est.required_shots(0.1, 1.0)
