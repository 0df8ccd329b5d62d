"""Phase factors for definite-parity bounded polynomials, and their evaluation.

Two conventions are supported for the scalar signal model built on
W(x) = [[x, i s], [i s, x]], s = sqrt(1 - x^2):

* ``reflection`` — the alternating sequence with daggered signal operators,
  matching how the full matrix circuits are assembled (the single-qubit phase
  operator is exp(i phi Z), the restriction of exp(i phi Pi) to the relevant
  two-dimensional invariant subspace);
* ``wx`` — the plain product exp(i phi_0 Z) prod_k W exp(i phi_k Z).

Solving happens in the wx convention with symmetric angles (objective: squared
residual of the real part at the positive Chebyshev nodes, quasi-Newton descent
plus damped Gauss-Newton polish, with a scale-ladder rescue for targets whose
sup-norm sits on the unit boundary), then converts to the requested convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize

from .errors import (
    ConditionViolation,
    DomainError,
    NotConverged,
    ParityMismatch,
    ResourceError,
)
from .polytools import EVEN, ODD, Polynomial, max_abs

REFLECTION, WX = "reflection", "wx"

DEFAULT_SOLVE_DEGREE_CAP = 512


@dataclass(frozen=True)
class PhaseFactors:
    """d+1 angles (phi_0, ..., phi_d) with a convention tag."""

    angles: tuple
    convention: str = REFLECTION
    target_parity: str = None

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        if self.convention not in (REFLECTION, WX):
            raise DomainError(f"unknown convention {self.convention!r}")
        parity = EVEN if self.degree % 2 == 0 else ODD
        if self.target_parity is None:
            object.__setattr__(self, "target_parity", parity)
        elif self.target_parity != parity:
            raise ParityMismatch(
                f"degree {self.degree} phases cannot target {self.target_parity} parity"
            )

    @property
    def degree(self) -> int:
        return len(self.angles) - 1

    def negated(self) -> "PhaseFactors":
        return PhaseFactors(tuple(-a for a in self.angles), self.convention)

    def to_dict(self) -> dict:
        return {"convention": self.convention, "angles": list(self.angles)}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseFactors":
        return cls(tuple(d["angles"]), d["convention"])


@dataclass(frozen=True)
class QspResidual:
    max_abs_error: float
    grid_size: int


# ---------------------------------------------------------------------------
# scalar evaluation
# ---------------------------------------------------------------------------


def _signal(x: float) -> np.ndarray:
    s = np.sqrt(max(0.0, 1.0 - x * x))
    return np.array([[x, 1j * s], [1j * s, x]])


def _phase(a: float) -> np.ndarray:
    return np.array([[np.exp(1j * a), 0.0], [0.0, np.exp(-1j * a)]])


def qsp_unitary(phi: PhaseFactors, x: float) -> np.ndarray:
    """Full 2x2 signal-processing product at x."""
    if abs(x) > 1.0 + 1e-12:
        raise DomainError(f"|x| must be <= 1, got {x}")
    x = min(1.0, max(-1.0, x))
    d = phi.degree
    a = phi.angles
    W = _signal(x)
    if phi.convention == WX:
        U = _phase(a[0])
        for k in range(1, d + 1):
            U = U @ W @ _phase(a[k])
        return U
    Wd = W.conj().T
    U = _phase(a[0])
    if d % 2 == 0:
        for k in range(1, d // 2 + 1):
            U = U @ Wd @ _phase(a[2 * k - 1]) @ W @ _phase(a[2 * k])
    else:
        U = U @ W @ _phase(a[1])
        for k in range(1, (d - 1) // 2 + 1):
            U = U @ Wd @ _phase(a[2 * k]) @ W @ _phase(a[2 * k + 1])
    return U


def qsp_eval(phi: PhaseFactors, x: float) -> complex:
    """(0, 0) entry of the signal-processing product; its real part is the target."""
    return complex(qsp_unitary(phi, x)[0, 0])


# ---------------------------------------------------------------------------
# convention conversion
# ---------------------------------------------------------------------------


def _dagger_count(d: int) -> int:
    return d // 2 if d % 2 == 0 else (d - 1) // 2


def convert_convention(phi: PhaseFactors, to: str) -> PhaseFactors:
    """Exact angle map between conventions; the (0,0) entry is preserved.

    Each daggered signal operator satisfies W† = Z W Z with Z = -i e^{i pi/2 Z},
    so daggers trade for pi/2 phase shifts plus a sign that is absorbed by
    adding pi to the leading angle when the dagger count is odd.
    """
    if to not in (REFLECTION, WX):
        raise DomainError(f"unknown convention {to!r}")
    if phi.convention == to:
        return phi
    d = phi.degree
    a = np.array(phi.angles)
    ndag = _dagger_count(d)
    lo = 0 if d % 2 == 0 else 1  # first shifted index
    out = a.copy()
    if to == WX:  # reflection -> wx
        out[lo:d] += np.pi / 2.0
        if ndag % 2 == 1:
            out[0] += np.pi
    else:  # wx -> reflection
        if ndag % 2 == 1:
            out[0] += np.pi
        out[lo:d] -= np.pi / 2.0
    out = np.mod(out + np.pi, 2.0 * np.pi) - np.pi
    return PhaseFactors(tuple(out), to)


# ---------------------------------------------------------------------------
# solver internals (wx convention, symmetric angles, vectorized over nodes)
# ---------------------------------------------------------------------------


def _positive_cheb_nodes(count: int) -> np.ndarray:
    j = np.arange(1, count + 1)
    return np.cos((2 * j - 1) * np.pi / (4 * count))


def _expand_symmetric(theta: np.ndarray, d: int) -> np.ndarray:
    half = (d + 2) // 2
    phi = np.empty(d + 1)
    phi[:half] = theta
    phi[half:] = theta[: d + 1 - half][::-1]
    return phi


def _residual_jacobian(theta, d, x, f):
    """Residual vector Re u00 - f at the nodes and its Jacobian in theta."""
    phi = _expand_symmetric(theta, d)
    n = x.size
    s = np.sqrt(1.0 - x * x)
    W = np.zeros((n, 2, 2), complex)
    W[:, 0, 0] = x
    W[:, 1, 1] = x
    W[:, 0, 1] = 1j * s
    W[:, 1, 0] = 1j * s
    E = np.exp(1j * phi)
    # prefix[j] = A_0 W A_1 ... W A_j ; suffix[j] = W A_{j+1} ... W A_d
    prefix = np.empty((d + 1, n, 2, 2), complex)
    P = np.zeros((n, 2, 2), complex)
    P[:, 0, 0] = E[0]
    P[:, 1, 1] = E[0].conjugate()
    prefix[0] = P
    for j in range(1, d + 1):
        # prefix[j] = prefix[j-1] W A_j; the diagonal A_j scales columns
        P = prefix[j - 1] @ W
        P[:, :, 0] *= E[j]
        P[:, :, 1] *= E[j].conjugate()
        prefix[j] = P
    suffix = np.empty((d + 1, n, 2, 2), complex)
    suffix[d] = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2))
    for j in range(d, 0, -1):
        # suffix[j-1] = W A_j suffix[j]; A_j scales the rows of suffix[j]
        T = suffix[j].copy()
        T[:, 0, :] *= E[j]
        T[:, 1, :] *= E[j].conjugate()
        suffix[j - 1] = W @ T
    res = prefix[d][:, 0, 0].real - f
    # d u00 / d phi_j = i * (prefix_j Z suffix_j)_{00}
    dres = np.empty((n, d + 1))
    for j in range(d + 1):
        val = 1j * (
            prefix[j][:, 0, 0] * suffix[j][:, 0, 0]
            - prefix[j][:, 0, 1] * suffix[j][:, 1, 0]
        )
        dres[:, j] = val.real
    half = (d + 2) // 2
    jac = dres[:, :half].copy()
    mirror = np.arange(d, half - 1, -1)
    jac[:, : mirror.size] += dres[:, mirror]
    return res, jac


def _max_residual(theta, d, x, f) -> float:
    r, _ = _residual_jacobian(theta, d, x, f)
    return float(np.max(np.abs(r)))


def _gauss_newton(theta, d, x, f, iters=60):
    """Damped Gauss-Newton with 2-norm acceptance and adaptive regularization."""
    mu = 0.0
    n_free = theta.size
    for _ in range(iters):
        r, J = _residual_jacobian(theta, d, x, f)
        cur = float(np.linalg.norm(r))
        if float(np.max(np.abs(r))) < 1e-15:
            break
        g = J.T @ r
        try:
            step = np.linalg.solve(J.T @ J + mu * np.eye(n_free), -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam, improved = 1.0, False
        for _ in range(25):
            r2, _ = _residual_jacobian(theta + lam * step, d, x, f)
            if float(np.linalg.norm(r2)) < cur:
                theta = theta + lam * step
                improved = True
                break
            lam *= 0.5
        if improved:
            mu *= 0.1
        else:
            mu = max(mu * 10.0, 1e-12)
            if mu > 1.0:
                break
    return theta


def _descend(theta, d, x, f, maxiter=4000):
    """L-BFGS on the squared residual, then damped Gauss-Newton."""

    def objective(t):
        r, J = _residual_jacobian(t, d, x, f)
        return 0.5 * float(r @ r), J.T @ r

    sol = minimize(objective, theta, jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter, "ftol": 1e-18, "gtol": 1e-17})
    theta = _gauss_newton(sol.x, d, x, f)
    return theta, _max_residual(theta, d, x, f)


def _lm(theta, d, x, f, max_nfev=3000):
    """Levenberg-Marquardt on the square node-residual system."""
    if theta.size == 1:
        # MINPACK refuses 1-parameter LM on some versions; descend instead
        return _descend(theta, d, x, f, maxiter=200)
    sol = least_squares(
        lambda t: _residual_jacobian(t, d, x, f)[0], theta,
        jac=lambda t: _residual_jacobian(t, d, x, f)[1],
        method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
    )
    theta = _gauss_newton(sol.x, d, x, f, iters=15)
    return theta, _max_residual(theta, d, x, f)


_LM_DEGREE_LIMIT = 128  # beyond this, quasi-Newton descent is the cheaper opener
_LADDER = (0.9, 0.99, 0.999, 1.0 - 1e-4, 1.0 - 1e-6, 1.0 - 1e-9, 1.0 - 1e-12)


def solve_phases(p: Polynomial, tol: float = 1e-12, *,
                 max_degree: int = DEFAULT_SOLVE_DEGREE_CAP,
                 convention: str = REFLECTION):
    """Phase factors whose signal-processing real part matches p at the solver nodes.

    The residual is the maximum over ceil((d+1)/2) positive Chebyshev nodes of
    |Re qsp_eval - p|.  Raises ConditionViolation when |p| exceeds 1 beyond
    1e-9 on a dense grid, ResourceError above the degree cap, and NotConverged
    (carrying the best phases and residual) when no strategy reaches tol.
    """
    if p.parity not in (EVEN, ODD):
        raise ParityMismatch("phase solving requires a definite-parity polynomial")
    d = p.degree
    if d > max_degree:
        raise ResourceError(f"degree {d} exceeds solver cap {max_degree}")
    if max_abs(p, (-1.0, 1.0)) > 1.0 + 1e-9:
        raise ConditionViolation("|P(x)| must not exceed 1 on [-1, 1]")

    n_nodes = int(np.ceil((d + 1) / 2))
    x = _positive_cheb_nodes(n_nodes)
    f = np.asarray(p.eval(x), float)
    half = (d + 2) // 2
    theta0 = np.zeros(half)
    theta0[0] = np.pi / 4.0

    opener = _lm if d <= _LM_DEGREE_LIMIT else _descend
    theta, res = opener(theta0, d, x, f)
    if res > tol and opener is not _descend:
        th, rr = _descend(theta0, d, x, f)
        if rr < res:
            theta, res = th, rr
    if res > tol:
        # scale ladder: walk the target from well inside the unit ball back out
        th = theta0.copy()
        for scale in _LADDER:
            th, _ = _descend(th, d, x, scale * f, maxiter=1000)
        lad = _max_residual(th, d, x, f)
        if lad < res:
            theta, res = th, lad
    if res > tol:
        # deterministic perturbed restarts
        rng = np.random.default_rng(1234)
        for _ in range(4):
            th0 = theta0 + 0.05 * rng.standard_normal(half)
            th, rr = opener(th0, d, x, f)
            if rr < res:
                theta, res = th, rr
            if res <= tol:
                break

    phi_wx = PhaseFactors(tuple(_expand_symmetric(theta, d)), WX)
    phi = convert_convention(phi_wx, convention)
    residual = QspResidual(res, n_nodes)
    if res > tol:
        raise NotConverged(
            f"phase solving stalled at residual {res:.3e} (tol {tol:.1e})",
            best=phi, residual=residual,
        )
    return phi, residual


def verify_phases(phi: PhaseFactors, p: Polynomial, grid: int = 1000) -> QspResidual:
    """Dense-grid residual check, independent of the solver's internals."""
    j = np.arange(1, grid + 1)
    xs = np.cos((2 * j - 1) * np.pi / (2 * grid))
    err = 0.0
    for x in xs:
        err = max(err, abs(qsp_eval(phi, float(x)).real - float(p.eval(x))))
    return QspResidual(err, grid)
