import numpy as np
import pytest

import qcg
from qcg import polytools as pt
from qcg import qet_engine as qet
from qcg.encodings import LinearSystem, exact_dilation, spectral_norm
from qcg.errors import NormalizationError, ParityMismatch
from qcg.qsp_core import PhaseFactors, solve_phases


def diag_system(values, rhs=None):
    values = np.asarray(values, float)
    rhs = np.ones_like(values) if rhs is None else np.asarray(rhs, float)
    return LinearSystem(np.diag(values), rhs)


def random_bounded_poly(rng, degree, parity=None, sup=0.9):
    coeffs = rng.normal(size=degree + 1)
    if parity == "even":
        coeffs[1::2] = 0.0
    elif parity == "odd":
        coeffs[0::2] = 0.0
    p = pt.Polynomial.from_chebyshev(coeffs)
    m = pt.max_abs(p, (-1.0, 1.0))
    return p.scaled(sup / m)


# ---------------------------------------------------------------------------
# qet_definite
# ---------------------------------------------------------------------------


def test_definite_identity_polynomial():
    a_prime = np.diag([-0.5, 0.5])
    base = exact_dilation(a_prime)
    phi = PhaseFactors((0.0, 0.0), "reflection")  # odd degree 1: block is x
    out = qet.qet_definite(base, phi)
    assert spectral_norm(out.block - a_prime) <= 1e-12
    assert out.n_a == base.n_a + 1
    assert out.alpha == 1.0


def test_definite_t2_on_diagonal():
    base = exact_dilation(np.diag([0.3, 0.7]))
    phi, _ = solve_phases(pt.Polynomial.chebyshev_t(2), 1e-12)
    out = qet.qet_definite(base, phi)
    assert np.allclose(np.diag(out.block).real, [-0.82, -0.02], atol=1e-10)
    assert spectral_norm(out.block - np.diag([-0.82, -0.02])) <= 1e-10


def test_definite_constant_one():
    base = exact_dilation(np.diag([0.2, -0.4]))
    phi = PhaseFactors((0.0,), "reflection")  # even degree 0: block is 1
    out = qet.qet_definite(base, phi)
    assert spectral_norm(out.block - np.eye(2)) <= 1e-12


def test_definite_unitary_output():
    base = exact_dilation(np.diag([0.3, 0.7]))
    phi, _ = solve_phases(pt.Polynomial.chebyshev_t(3), 1e-12)
    out = qet.qet_definite(base, phi)
    dim = out.unitary.shape[0]
    assert spectral_norm(out.unitary @ out.unitary.conj().T - np.eye(dim)) <= 1e-12


def test_definite_rejects_mixed_parity():
    with pytest.raises(ParityMismatch):
        PhaseFactors((0.0, 0.0), "reflection", target_parity="even")


def test_definite_requires_exact_base():
    from qcg.errors import DomainError
    base = exact_dilation(np.diag([0.3, 0.7]))
    inexact = qcg.BlockEncoding(base.unitary, 1.0, base.n_a, base.n_s, eps=0.5)
    with pytest.raises(DomainError):
        qet.qet_definite(inexact, PhaseFactors((0.0, 0.0), "reflection"))


# ---------------------------------------------------------------------------
# qet_oracle
# ---------------------------------------------------------------------------


def test_oracle_linear():
    system = diag_system([1.0, 2.0])
    p = pt.Polynomial.from_monomial([0.0, 1.0])
    assert np.allclose(qet.qet_oracle(system, p, 2.0), np.diag([0.5, 1.0]))


def test_oracle_constant():
    system = diag_system([1.0, 2.0])
    p = pt.Polynomial.from_monomial([1.0])
    assert np.allclose(qet.qet_oracle(system, p, 2.0), np.eye(2))


def test_oracle_matches_tracked_krylov_vector(poisson16_case1, tracked16_case1):
    system = poisson16_case1
    coeffs = tracked16_case1[8].x
    p = pt.Polynomial.from_monomial(coeffs)
    b_hat = system.rhs_normalized()
    oracle_vec = qet.qet_oracle(system, p, 4.0) @ b_hat
    m = system.matrix / 4.0
    direct = np.zeros_like(b_hat)
    power = b_hat.copy()
    for c in coeffs:
        direct = direct + c * power
        power = m @ power
    assert np.linalg.norm(oracle_vec - direct) <= 1e-10


# ---------------------------------------------------------------------------
# qet_general
# ---------------------------------------------------------------------------


def test_general_degenerate_constant():
    base = exact_dilation(np.diag([0.3, -0.6]))
    p = pt.Polynomial.from_monomial([1.0])
    out, assembly = qet.qet_general(base, p, None)
    assert spectral_norm(out.block - np.eye(2) / 2.0) <= 1e-12
    assert assembly.normalization == pytest.approx(2.0)
    assert assembly.phases_odd is None
    assert out.n_a == base.n_a + 2


def test_general_positive_side_linear():
    a = np.diag([0.25, 0.75])
    base = exact_dilation(2.0 * a - np.eye(2))
    p = pt.Polynomial.from_monomial([0.0, 1.0])
    out, assembly = qet.qet_general(base, p, "positive_side")
    assert assembly.normalization == pytest.approx(1.0)  # 2 C with C = 1/2
    assert spectral_norm(out.block * assembly.normalization - a) <= 1e-10


def test_general_positive_side_qcg_polynomial(poisson16_case1, tracked16_case1):
    system = poisson16_case1
    base = exact_dilation(2.0 * system.matrix / 4.0 - np.eye(16))
    p = pt.Polynomial.from_monomial(tracked16_case1[8].r)
    out, assembly = qet.qet_general(base, p, "positive_side")
    oracle = qet.qet_oracle(system, p, 4.0)
    assert spectral_norm(out.block * assembly.normalization - oracle) <= 1e-8


def test_general_zero_polynomial():
    base = exact_dilation(np.diag([0.3, -0.6]))
    with pytest.raises(NormalizationError):
        qet.qet_general(base, pt.Polynomial.from_monomial([0.0]), None)


def test_general_matches_definite_up_to_half():
    base = exact_dilation(np.diag([0.45, -0.2]))
    p = pt.Polynomial.chebyshev_t(3)
    out, assembly = qet.qet_general(base, p, None)
    phi, _ = solve_phases(p, 1e-12)
    definite = qet.qet_definite(base, phi)
    assert spectral_norm(out.block - definite.block / 2.0) <= 1e-10


def test_window_none_equivalence():
    base = exact_dilation(np.diag([0.45, -0.2]))
    p = pt.Polynomial.from_chebyshev([0.1, 0.2, 0.3])
    out1, asm1 = qet.qet_general(base, p, None)
    out2, asm2 = qet.qet_general(base, p, ("window", -1.0, 1.0))
    assert asm1.normalization == pytest.approx(asm2.normalization, rel=1e-12)
    assert spectral_norm(out1.block - out2.block) <= 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_positive_side_equivalence_random(seed):
    # positive semidefinite A with ||A/alpha|| <= 1: the shifted-circuit block
    # times its subnormalization reproduces the spectral oracle
    rng = np.random.default_rng(seed)
    dim = int(rng.choice([2, 4, 8]))
    evals = rng.uniform(0.0, 1.0, size=dim)
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim))
                        + 1j * rng.normal(size=(dim, dim)))
    alpha = 1.0
    a = (q * evals) @ q.conj().T
    a = (a + a.conj().T) / 2.0
    system = LinearSystem(a, np.ones(dim))
    base = exact_dilation(2.0 * a / alpha - np.eye(dim))
    p = random_bounded_poly(rng, int(rng.integers(1, 9)))
    out, assembly = qet.qet_general(base, p, "positive_side")
    oracle = qet.qet_oracle(system, p, alpha)
    assert spectral_norm(out.block * assembly.normalization - oracle) <= 1e-8


def test_subnormalization_gain(tracked16_case1):
    # positive-side normalizers beat the unshifted ones by 10x from k = 5 on
    for k in (5, 6, 7, 8):
        p = pt.Polynomial.from_monomial(tracked16_case1[k].r)
        shifted = pt.positive_shift(p)
        c_pos = max(pt.max_abs(shifted.even_part(), (-1.0, 1.0)),
                    pt.max_abs(shifted.odd_part(), (-1.0, 1.0)))
        c_raw = max(pt.max_abs(p.even_part(), (-1.0, 1.0)),
                    pt.max_abs(p.odd_part(), (-1.0, 1.0)))
        assert c_raw / c_pos >= 10.0


def test_assembly_ancilla_counts_and_unitarity():
    base = exact_dilation(np.diag([0.25, 0.75]))
    p = pt.Polynomial.from_chebyshev([0.0, 0.4, 0.3])
    out, assembly = qet.qet_general(base, p, None)
    dim = out.unitary.shape[0]
    assert dim == 2 ** (base.n_a + 2 + base.n_s)
    assert spectral_norm(out.unitary @ out.unitary.conj().T - np.eye(dim)) <= 1e-12


def test_assembly_serialization(tmp_path):
    base = exact_dilation(np.diag([0.25, 0.75]))
    p = pt.Polynomial.from_chebyshev([0.0, 0.4, 0.3])
    out, assembly = qet.qet_general(base, p, None)
    assembly.save(tmp_path / "asm", out)
    import json
    meta = json.loads((tmp_path / "asm.assembly.json").read_text())
    assert meta["normalization"] == pytest.approx(assembly.normalization)
    loaded = qcg.BlockEncoding.load(tmp_path / "asm")
    assert np.array_equal(loaded.unitary, out.unitary)
