"""Block encodings: exact dilation, the Poisson system, cyclic shifts,
the one-ancilla LCU for A' = 2A/alpha - I, and its amplified construction.

Conventions: ancilla qubits are the most significant register, so the encoded
block of a unitary U is its top-left 2^{n_s} x 2^{n_s} corner, and a unitary U
is an (alpha, n_a, eps) encoding of A when ||A - alpha * block(U)|| <= eps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    NormError,
    NotPositiveDefinite,
    ZeroVector,
)
from .polytools import DEFAULT_DEGREE_CAP, DegreeReport, Polynomial, max_abs, rect_poly

_UNITARITY_TOL = 1e-12
_SVD_DIM_LIMIT = 256


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value: full SVD for small matrices, else power iteration."""
    m = np.asarray(m)
    if max(m.shape) <= _SVD_DIM_LIMIT:
        return float(np.linalg.norm(m, 2))
    g = m.conj().T @ m
    v = np.ones(g.shape[0]) / math.sqrt(g.shape[0])
    prev = 0.0
    for _ in range(10000):
        v = g @ v
        cur = float(np.linalg.norm(v))
        if cur == 0.0:
            return 0.0
        v /= cur
        if abs(cur - prev) <= 1e-13 * max(cur, 1.0):
            break
        prev = cur
    return math.sqrt(cur)


def _is_unitary(u: np.ndarray, tol: float = _UNITARITY_TOL) -> bool:
    n = u.shape[0]
    return spectral_norm(u @ u.conj().T - np.eye(n)) <= tol * max(1.0, math.sqrt(n))


class BlockEncoding:
    """Unitary embedding of A/alpha as the ancilla-zero block."""

    def __init__(self, unitary: np.ndarray, alpha: float, n_a: int, n_s: int,
                 eps: float = 0.0, check: bool = True):
        unitary = np.asarray(unitary, complex)
        dim = 2 ** (n_a + n_s)
        if unitary.shape != (dim, dim):
            raise DimensionMismatch(
                f"unitary shape {unitary.shape} != 2^(n_a+n_s) = {dim}"
            )
        if alpha <= 0.0:
            raise DomainError(f"alpha must be positive, got {alpha}")
        if check and not _is_unitary(unitary):
            raise NormError("matrix is not unitary to 1e-12")
        self.unitary = unitary
        self.alpha = float(alpha)
        self.n_a = int(n_a)
        self.n_s = int(n_s)
        self.eps = float(eps)

    @property
    def dim_system(self) -> int:
        return 2 ** self.n_s

    @property
    def block(self) -> np.ndarray:
        """(<0|_a x I) U (|0>_a x I): the subnormalized encoded matrix."""
        ns = self.dim_system
        return self.unitary[:ns, :ns]

    def encoded(self) -> np.ndarray:
        """alpha * block, the matrix this unitary encodes."""
        return self.alpha * self.block

    def save(self, prefix) -> None:
        """Dense row-major interleaved re/im binary plus a JSON header."""
        prefix = Path(prefix)
        flat = np.empty(self.unitary.size * 2)
        flat[0::2] = self.unitary.real.ravel()
        flat[1::2] = self.unitary.imag.ravel()
        flat.astype("<f8").tofile(prefix.with_suffix(".bin"))
        header = {"alpha": self.alpha, "n_a": self.n_a, "n_s": self.n_s, "eps": self.eps}
        prefix.with_suffix(".json").write_text(json.dumps(header))

    @classmethod
    def load(cls, prefix) -> "BlockEncoding":
        prefix = Path(prefix)
        header = json.loads(prefix.with_suffix(".json").read_text())
        dim = 2 ** (header["n_a"] + header["n_s"])
        flat = np.fromfile(prefix.with_suffix(".bin"), dtype="<f8")
        u = (flat[0::2] + 1j * flat[1::2]).reshape(dim, dim)
        return cls(u, header["alpha"], header["n_a"], header["n_s"], header["eps"])

    def __repr__(self):
        return (f"BlockEncoding(alpha={self.alpha:g}, n_a={self.n_a}, "
                f"n_s={self.n_s}, eps={self.eps:g})")


def verify_block_encoding(be: BlockEncoding, target: np.ndarray) -> float:
    """Spectral-norm distance ||target - alpha * block||; compare against be.eps."""
    target = np.asarray(target)
    if target.shape != (be.dim_system, be.dim_system):
        raise DimensionMismatch(
            f"target shape {target.shape} != system dim {be.dim_system}"
        )
    return spectral_norm(target - be.encoded())


# ---------------------------------------------------------------------------
# linear systems
# ---------------------------------------------------------------------------


class LinearSystem:
    """Hermitian system A x = b with cached norm, condition number, eigensystem."""

    def __init__(self, matrix: np.ndarray, rhs: np.ndarray):
        matrix = np.asarray(matrix)
        rhs = np.asarray(rhs, complex if np.iscomplexobj(matrix) else float)
        n = matrix.shape[0]
        if matrix.shape != (n, n) or rhs.shape != (n,):
            raise DimensionMismatch("matrix must be square and rhs its dimension")
        if spectral_norm(matrix - matrix.conj().T) > 1e-12 * max(1.0, spectral_norm(matrix)):
            raise DomainError("matrix is not Hermitian to 1e-12")
        self.matrix = matrix
        self.rhs = rhs
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(matrix)
        self.norm_A = float(np.abs(self.eigenvalues).max())
        lam_min = float(self.eigenvalues.min())
        if lam_min > 0.0:
            self.kappa = float(self.eigenvalues.max() / lam_min)
        else:
            small = float(np.abs(self.eigenvalues).min())
            self.kappa = math.inf if small == 0.0 else self.norm_A / small

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_positive_definite(self) -> bool:
        return bool(self.eigenvalues.min() > 0.0)

    def require_positive_definite(self):
        if not self.is_positive_definite():
            raise NotPositiveDefinite("matrix is not positive definite")

    def rhs_normalized(self) -> np.ndarray:
        nrm = np.linalg.norm(self.rhs)
        if nrm == 0.0:
            raise ZeroVector("right-hand side is zero")
        return self.rhs / nrm

    def solve(self) -> np.ndarray:
        return np.linalg.solve(self.matrix, self.rhs)

    def apply_function(self, values: np.ndarray) -> np.ndarray:
        """sum_j f(lambda_j) |v_j><v_j| for per-eigenvalue values f(lambda_j)."""
        v = self.eigenvectors
        return (v * values) @ v.conj().T


CASE1, CASE2 = "case1", "case2"


def poisson_system(n_qubits: int, rhs_case: str = CASE1) -> LinearSystem:
    """Dirichlet Poisson system: tridiagonal (2, -1) with one of two unit rhs states.

    case1 concentrates the source on the two central grid points, case2 is the
    uniform state.  The cached eigenvalues match 2 - 2 cos(j pi / (N+1)).
    """
    if n_qubits < 1:
        raise DomainError("need at least one qubit")
    n = 2 ** n_qubits
    a = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    if rhs_case == CASE1:
        b = np.zeros(n)
        b[n // 2 - 1] = b[n // 2] = 1.0 / math.sqrt(2.0)
    elif rhs_case == CASE2:
        b = np.full(n, 1.0 / math.sqrt(n))
    else:
        raise DomainError(f"unknown rhs case {rhs_case!r}")
    system = LinearSystem(a, b)
    j = np.arange(1, n + 1)
    closed_form = 2.0 - 2.0 * np.cos(j * np.pi / (n + 1))
    if np.max(np.abs(np.sort(closed_form) - system.eigenvalues)) > 1e-10:
        raise NormError("Poisson eigenvalues disagree with the closed form")
    return system


def cyclic_shift(n_qubits: int, direction: str = "plus") -> np.ndarray:
    """Permutation |j> -> |j +- 1 mod 2^n|."""
    if n_qubits < 1:
        raise DomainError("need at least one qubit")
    n = 2 ** n_qubits
    shift = 1 if direction == "plus" else -1 if direction == "minus" else None
    if shift is None:
        raise DomainError(f"direction must be plus or minus, got {direction!r}")
    m = np.zeros((n, n))
    cols = np.arange(n)
    m[(cols + shift) % n, cols] = 1.0
    return m


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def exact_dilation(a: np.ndarray) -> BlockEncoding:
    """One-ancilla unitary completion [[a, S], [S, -a]] with S = sqrt(I - a^2).

    a must be Hermitian with ||a|| <= 1 + 1e-9; eigenvalues are clipped into
    [-1, 1] before the square root.
    """
    a = np.asarray(a, complex)
    n = a.shape[0]
    if a.shape != (n, n) or (n & (n - 1)) != 0:
        raise DimensionMismatch("matrix must be square with power-of-two dimension")
    if spectral_norm(a - a.conj().T) > 1e-12 * max(1.0, spectral_norm(a)):
        raise DomainError("matrix is not Hermitian to 1e-12")
    lam, v = np.linalg.eigh(a)
    if np.abs(lam).max() > 1.0 + 1e-9:
        raise NormError(f"||a|| = {np.abs(lam).max():.3e} exceeds 1 + 1e-9")
    lam = np.clip(lam, -1.0, 1.0)
    s = (v * np.sqrt(1.0 - lam ** 2)) @ v.conj().T
    u = np.block([[a, s], [s, -a]])
    return BlockEncoding(u, alpha=1.0, n_a=1, n_s=int(math.log2(n)), eps=0.0)


_LCU_THETA = 2.0 * math.atan(math.sqrt(0.5))  # cos^2(theta/2) = 2/3


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]])


def lcu_a_prime(be_a: BlockEncoding) -> BlockEncoding:
    """(3, n_a+1, 0) encoding of A' = 2A/alpha - I from an exact encoding of A.

    A select of {U_A, -I} between Ry(theta) prepare/unprepare with
    cos^2(theta/2) = 2/3 leaves (2 U_A - I)/3 on the new ancilla's zero block.
    """
    if be_a.eps != 0.0:
        raise DomainError("lcu_a_prime requires an exact (eps = 0) input encoding")
    dim = be_a.unitary.shape[0]
    ident = np.eye(dim)
    prep = np.kron(_ry(_LCU_THETA), ident)
    select = np.block(
        [[be_a.unitary, np.zeros((dim, dim))], [np.zeros((dim, dim)), -ident]]
    )
    u = prep.T @ select @ prep  # Ry is real: dagger = transpose
    out = BlockEncoding(u, alpha=3.0, n_a=be_a.n_a + 1, n_s=be_a.n_s, eps=0.0)
    a_prime = 2.0 * be_a.block - np.eye(be_a.dim_system)
    err = verify_block_encoding(out, a_prime)
    if err > 1e-12:
        raise NormError(f"LCU block deviates from (2A/alpha - I)/3 by {err:.3e}")
    return out


@dataclass(frozen=True)
class AmplificationConfig:
    """Linear-amplification parameters: factor gamma, optional eigenvalue gap, error."""

    gamma: float = 3.0
    gap: float = None
    eps: float = 0.1

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if not (0.0 < self.eps < 1.0):
            raise DomainError(f"eps must lie in (0, 1), got {self.eps}")


def lamp_poly_with_gap(cfg: AmplificationConfig, alpha: float, *,
                       max_degree: int = DEFAULT_DEGREE_CAP):
    """gamma*x times a closed rectangular window, for spectra with gap Lambda.

    Approximates gamma*x to eps on |x| <= (1 - 2 Lambda')/gamma, stays within
    [-1, 1] for |x| <= 1/gamma, and is eps-small on 1/gamma <= |x| <= 1.
    """
    if cfg.gap is None:
        raise DomainError("gap amplification requires cfg.gap")
    if not (0.0 < cfg.gap < alpha / 2.0):
        raise DomainError(f"gap must lie in (0, alpha/2), got {cfg.gap}")
    lam = cfg.gap / alpha
    g = cfg.gamma
    rect, rect_report = rect_poly((1.0 - lam) / g, 2.0 * lam / g, cfg.eps / g,
                                  kind="closed", max_degree=max_degree)
    poly = _odd_guarded(rect.mul_x().scaled(g))
    report = DegreeReport(
        "lamp_gap", rect_report.degree + 1,
        {"gamma": g, "alpha": alpha, "gap": cfg.gap, "eps": cfg.eps,
         "rect_degree": rect_report.degree},
    )
    return poly, report


def lamp_poly_no_gap(gamma: float, eps: float, *,
                     max_degree: int = DEFAULT_DEGREE_CAP):
    """Gap-free variant: gamma*x/(1 + eps/2) times a closed rectangular window."""
    if gamma <= 1.0 + eps / 2.0:
        raise DomainError("need gamma > 1 + eps/2 for the window to fit inside (0, 1)")
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    rect, rect_report = rect_poly((1.0 + eps / 4.0) / gamma, eps / (2.0 * gamma),
                                  eps / (2.0 * gamma), kind="closed",
                                  max_degree=max_degree)
    poly = _odd_guarded(rect.mul_x().scaled(gamma / (1.0 + eps / 2.0)))
    report = DegreeReport(
        "lamp_nogap", rect_report.degree + 1,
        {"gamma": gamma, "eps": eps, "rect_degree": rect_report.degree},
    )
    return poly, report


def _odd_guarded(p: Polynomial) -> Polynomial:
    """Force exact odd parity and cap the sup norm at 1."""
    c = p.coeffs_chebyshev.copy()
    c[0::2] = 0.0
    poly = Polynomial(chebyshev=c, parity="odd")
    m = max_abs(poly, (-1.0, 1.0))
    if m > 1.0:
        poly = poly.scaled(1.0 / (m * (1.0 + 1e-15)))
    return poly


def amplified_a_prime(be_a: BlockEncoding, cfg: AmplificationConfig, *,
                      solve_tol: float = 1e-8,
                      max_degree: int = DEFAULT_DEGREE_CAP) -> BlockEncoding:
    """(1, n_a+2, eps) encoding of A' = 2A/alpha - I via LCU plus amplification.

    Builds the (3, n_a+1, 0) LCU encoding of A', then applies the odd
    amplification polynomial for gamma = 3 through a definite-parity circuit
    and verifies the result against the exact A'.
    """
    if cfg.gamma != 3.0:
        raise DomainError("the construction fixes gamma = 3")
    from .qet_engine import qet_definite  # deferred: qet_engine imports this module
    from .qsp_core import solve_phases

    lcu = lcu_a_prime(be_a)
    if cfg.gap is not None:
        poly, report = lamp_poly_with_gap(cfg, be_a.alpha, max_degree=max_degree)
    else:
        poly, report = lamp_poly_no_gap(cfg.gamma, cfg.eps, max_degree=max_degree)
    phases, _ = solve_phases(poly, solve_tol, max_degree=max(max_degree, report.degree))
    out = qet_definite(lcu, phases)
    a_prime = 2.0 * be_a.block - np.eye(be_a.dim_system)
    err = verify_block_encoding(out, a_prime)
    if err > cfg.eps:
        raise NormError(
            f"amplified encoding misses A' by {err:.3e} > eps = {cfg.eps:.3e}"
        )
    return BlockEncoding(out.unitary, alpha=1.0, n_a=out.n_a, n_s=out.n_s, eps=err,
                         check=False)
