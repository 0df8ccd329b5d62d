"""Classical conjugate gradient, its coefficient-tracked twin, the hybrid
quantum loop, and the degree bookkeeping for the direct-inversion comparison.

The hybrid loop keeps the Krylov recursion classical (coefficient updates) and
obtains every inner product from eigenvalue-transformation circuits through
swap tests.  In exact mode the swap tests return analytic expectations, so the
trace reproduces the classical recursion up to phase-solver residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encodings import BlockEncoding, LinearSystem, verify_block_encoding
from .errors import (
    DomainError,
    InsufficientData,
    MaxIterExceeded,
    NotPositiveDefinite,
    PrecisionFailure,
)
from .estimation import EXACT, SAMPLED, ShotModel, prepare_b, required_shots, swap_test
from .polytools import (
    Polynomial,
    inverse_degree,
    max_abs,
    positive_shift,
    rect_degree,
)
from .qet_engine import qet_general


# ---------------------------------------------------------------------------
# classical conjugate gradient
# ---------------------------------------------------------------------------


def cg_classical(system: LinearSystem, eps: float, max_iter: int = None):
    """Plain conjugate gradient from x0 = 0 with stop ||r_{k+1}|| <= eps ||b||.

    Returns (solution, residual_norms) where residual_norms[k] = ||r_k||.
    """
    a = system.matrix
    b = system.rhs
    if max_iter is None:
        max_iter = 4 * max(1, iteration_bound(system.kappa, system.norm_A,
                                              float(np.linalg.norm(b)), eps))
    x = np.zeros_like(b)
    r = b.astype(complex) if np.iscomplexobj(a) else b.astype(float)
    p = r.copy()
    norms = [float(np.linalg.norm(r))]
    threshold = eps * float(np.linalg.norm(b))
    rr = float(np.real(r.conj() @ r))
    for _ in range(max_iter):
        ap = a @ p
        pap = float(np.real(p.conj() @ ap))
        if pap <= 0.0:
            raise NotPositiveDefinite("encountered <p|A|p> <= 0 during CG")
        alpha = rr / pap
        x = x + alpha * p
        r = r - alpha * ap
        norms.append(float(np.linalg.norm(r)))
        if norms[-1] <= threshold:
            break
        rr_new = float(np.real(r.conj() @ r))
        beta = rr_new / rr
        p = r + beta * p
        rr = rr_new
    return x, norms


# ---------------------------------------------------------------------------
# coefficient-tracked conjugate gradient
# ---------------------------------------------------------------------------


@dataclass
class CgCoefficients:
    """Krylov coefficients at iteration k for the subnormalized system.

    x has length k, r and p length k+1 (out-of-range entries are zero by
    convention).  alpha_k / beta_k are the step constants computed while
    leaving iteration k; they are None on a final, never-advanced entry.
    """

    k: int
    x: np.ndarray
    r: np.ndarray
    p: np.ndarray
    alpha_k: float = None
    beta_k: float = None
    residual_norm: float = None


def cg_tracked(system: LinearSystem, alpha: float, max_iter: int,
               stop_residual: float = 0.0):
    """Conjugate gradient on (A/alpha, b/||b||) with polynomial coefficients.

    Reconstructing sum_l c_l (A/alpha)^l b/||b|| from any returned entry
    reproduces the recursion vectors.  Stops at max_iter, at an exactly zero
    residual, or once ||r|| <= stop_residual.
    """
    system.require_positive_definite()
    m = system.matrix / alpha
    b = system.rhs_normalized()
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    cx = np.zeros(max_iter + 2)
    cr = np.zeros(max_iter + 2)
    cp = np.zeros(max_iter + 2)
    cr[0] = cp[0] = 1.0
    out = []
    rr = float(np.real(r.conj() @ r))
    for k in range(max_iter):
        entry = CgCoefficients(k, cx[:k].copy() if k else np.zeros(0),
                               cr[: k + 1].copy(), cp[: k + 1].copy(),
                               residual_norm=math.sqrt(max(rr, 0.0)))
        if rr == 0.0 or math.sqrt(max(rr, 0.0)) <= stop_residual:
            out.append(entry)
            return out
        ap = m @ p
        pap = float(np.real(p.conj() @ ap))
        if pap <= 0.0:
            raise NotPositiveDefinite("encountered <p|A|p> <= 0 during CG")
        a_k = rr / pap
        x = x + a_k * p
        r = r - a_k * ap
        rr_new = float(np.real(r.conj() @ r))
        b_k = rr_new / rr
        cx[: k + 1] += a_k * cp[: k + 1]
        cr[1: k + 2] -= a_k * cp[: k + 1]
        cp[: k + 2] = cr[: k + 2] + b_k * cp[: k + 2]
        entry.alpha_k = a_k
        entry.beta_k = b_k
        out.append(entry)
        p = r + b_k * p
        rr = rr_new
    out.append(CgCoefficients(max_iter, cx[:max_iter].copy(),
                              cr[: max_iter + 1].copy(), cp[: max_iter + 1].copy(),
                              residual_norm=math.sqrt(max(rr, 0.0))))
    return out


# ---------------------------------------------------------------------------
# bounds and degree bookkeeping
# ---------------------------------------------------------------------------


def iteration_bound(kappa: float, norm_a: float, norm_b: float, eps: float) -> int:
    """ceil(0.5 sqrt(kappa) ln(2 kappa ||b|| / (||A|| eps)))."""
    if kappa < 1.0:
        raise DomainError("kappa must be at least 1")
    return math.ceil(0.5 * math.sqrt(kappa)
                     * math.log(2.0 * kappa * norm_b / (norm_a * eps)))


@dataclass(frozen=True)
class DirectQsvtDegrees:
    d_total: int
    d_inv_part: int
    d_rect_part: int


def direct_qsvt_degree(kappa: float, alpha: float, eps: float) -> DirectQsvtDegrees:
    """Degree of the direct matrix-inversion polynomial: inverse part plus window.

    The window error budget eps' = min(2 eps / (5 kappa alpha),
    kappa alpha / (2 d_inv)); everything is evaluated with exact integer
    ceilings, no coefficients are materialized.
    """
    ka = kappa * alpha
    d_inv = inverse_degree(2.0 * kappa, alpha, eps / 2.0).degree
    eps_prime = min(2.0 * eps / (5.0 * ka), ka / (2.0 * d_inv))
    d_rect = rect_degree(3.0 / (4.0 * ka), 1.0 / (2.0 * ka), eps_prime, "open").degree
    return DirectQsvtDegrees(d_inv + d_rect, d_inv, d_rect)


# ---------------------------------------------------------------------------
# hybrid solver
# ---------------------------------------------------------------------------


@dataclass
class QcgConfig:
    """Hybrid-run parameters.

    delta is the raw inner-product precision; it must stay below
    (||A|| eps / (kappa ||b||))^2 unless allow_loose_delta is set.  The
    default picks half that bound.
    """

    eps: float = 0.1
    alpha: float = 4.0
    delta: float = None
    shot_model: ShotModel = field(default_factory=ShotModel.exact)
    max_iter: int = None
    allow_loose_delta: bool = False
    confidence: float = 0.95
    solve_tol: float = 1e-12
    max_degree: int = 512

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise DomainError(f"eps must lie in (0, 1), got {self.eps}")
        if self.alpha <= 0.0:
            raise DomainError("alpha must be positive")

    def resolved_delta(self, system: LinearSystem) -> float:
        bound = (system.norm_A * self.eps
                 / (system.kappa * float(np.linalg.norm(system.rhs)))) ** 2
        if self.delta is None:
            return 0.5 * bound
        if self.delta >= bound and not self.allow_loose_delta:
            raise DomainError(
                f"delta = {self.delta:.3e} does not satisfy delta < {bound:.3e}; "
                "set allow_loose_delta to override"
            )
        return self.delta

    def resolved_max_iter(self, system: LinearSystem) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return 4 * max(1, iteration_bound(system.kappa, system.norm_A,
                                          float(np.linalg.norm(system.rhs)), self.eps))


@dataclass
class QcgIteration:
    """Per-iteration record; every tracked quantity is indexed by k+1.

    rr_est estimates <r_{k+1}|r_{k+1}>, pp_est estimates <p_{k+1}|p'_{k+1}>
    (None on the convergence iteration, where the search direction is never
    advanced).  r_max/p_max/pp_max/x_max are the maximum absolute values of
    the corresponding polynomials on [0, 1]; the *_subnorm fields hold the
    actual circuit subnormalizations 2 C_max, which the estimates rescale by.
    """

    k: int
    alpha_k: float
    beta_k: float
    rr_est: float
    pp_est: float
    residual_norm: float
    r_max: float
    p_max: float
    pp_max: float
    x_max: float
    r_subnorm: float = None
    p_subnorm: float = None
    pp_subnorm: float = None
    phase_residuals: tuple = ()


@dataclass
class QcgTrace:
    """Complete record of one hybrid run."""

    system_dim: int
    kappa: float
    norm_a: float
    criterion: float
    delta: float
    iterations: list = field(default_factory=list)
    coefficients: list = field(default_factory=list)
    setup_pp_est: float = None
    converged: bool = False
    m: int = None
    x_max: float = None
    solution_state: np.ndarray = None
    solution_norm: float = None
    success_probability: float = None
    error_vs_dense: float = None

    @property
    def residuals(self):
        return [it.residual_norm for it in self.iterations]

    @property
    def max_polynomial_degree(self) -> int:
        return (self.m + 1) if self.m is not None else None

    @property
    def max_circuit_depth(self) -> int:
        return 2 * (self.m + 1) if self.m is not None else None


def _positive_side_sup(coeffs: np.ndarray) -> float:
    """Maximum of |P| on [0, 1] (the positive-side extent of the polynomial)."""
    return max_abs(positive_shift(Polynomial(monomial=coeffs)), (-1.0, 1.0))


def _assembly_residuals(assembly) -> tuple:
    out = []
    for res in (assembly.residual_even, assembly.residual_odd):
        if res is not None:
            out.append(res.max_abs_error)
    return tuple(out)


def qcg_solve(system: LinearSystem, be_a_prime: BlockEncoding,
              cfg: QcgConfig) -> QcgTrace:
    """Hybrid conjugate gradient through eigenvalue-transformation circuits.

    Per iteration: update Krylov coefficients classically, build the
    positive-side encodings of the residual polynomial, the search polynomial
    and x times the search polynomial, estimate the two inner products with
    swap tests, and stop once ||r|| <= ||A|| eps / (kappa ||b||).  Afterwards
    the solution state is produced from the encoding of the solution
    polynomial and compared with the dense solve.
    """
    system.require_positive_definite()
    a_prime_target = 2.0 * system.matrix / cfg.alpha - np.eye(system.dim)
    gap = verify_block_encoding(be_a_prime, a_prime_target)
    if gap > max(be_a_prime.eps, 1e-9) + 1e-12:
        raise DomainError(
            f"encoding deviates from 2A/alpha - I by {gap:.3e}, beyond its bound"
        )
    norm_b = float(np.linalg.norm(system.rhs))
    criterion = system.norm_A * cfg.eps / (system.kappa * norm_b)
    delta = cfg.resolved_delta(system)
    max_iter = cfg.resolved_max_iter(system)

    prep = prepare_b(system)
    trace = QcgTrace(system_dim=system.dim, kappa=system.kappa,
                     norm_a=system.norm_A, criterion=criterion, delta=delta)

    size = max_iter + 3
    cx = np.zeros(size)
    cr = np.zeros(size)
    cp = np.zeros(size)
    cr[0] = cp[0] = 1.0

    def encode(coeffs):
        poly = Polynomial(monomial=coeffs)
        return qet_general(be_a_prime, poly, "positive_side",
                           solve_tol=cfg.solve_tol, max_degree=cfg.max_degree)

    seed_counter = [0]

    def estimate(enc_u, asm_u, enc_v, asm_v):
        # raw precision delta = precision delta/scale on the measured value
        scale = asm_u.normalization * asm_v.normalization  # 4 C_u C_v
        model = cfg.shot_model
        if model.mode == SAMPLED:
            shots = required_shots(delta / scale, cfg.confidence)
            model = ShotModel(SAMPLED, shots, cfg.shot_model.seed + seed_counter[0])
            seed_counter[0] += 1
        result = swap_test(enc_u, enc_v, prep, model)
        return result.re_inner * scale

    # setup estimate of <p_0 | (A/alpha) p_0>, consumed by alpha_0
    enc_p, asm_p = encode(cp[:1])
    enc_pp, asm_pp = encode(np.concatenate([[0.0], cp[:1]]))
    pp_est = estimate(enc_p, asm_p, enc_pp, asm_pp)
    trace.setup_pp_est = pp_est
    pending_phase_res = _assembly_residuals(asm_p) + _assembly_residuals(asm_pp)

    rr_est = 1.0  # <r_0|r_0> = 1 for the normalized initial state
    trace.coefficients.append(CgCoefficients(0, np.zeros(0), cr[:1].copy(),
                                             cp[:1].copy(), residual_norm=1.0))

    converged = False
    k = 0
    while k <= max_iter:
        if pp_est <= 0.0:
            raise PrecisionFailure(
                f"estimated <p|p'> = {pp_est:.3e} <= 0 at iteration {k}; "
                "the inner-product precision is insufficient"
            )
        alpha_k = rr_est / pp_est
        cx[: k + 1] += alpha_k * cp[: k + 1]
        cr[1: k + 2] -= alpha_k * cp[: k + 1]

        enc_r, asm_r = encode(cr[: k + 2])
        rr_next = estimate(enc_r, asm_r, enc_r, asm_r)
        residual = math.sqrt(max(rr_next, 0.0))
        record = QcgIteration(
            k=k, alpha_k=alpha_k, beta_k=None, rr_est=rr_next, pp_est=None,
            residual_norm=residual, r_max=_positive_side_sup(cr[: k + 2]),
            p_max=None, pp_max=None,
            x_max=_positive_side_sup(cx[: k + 1]),
            r_subnorm=asm_r.normalization,
            phase_residuals=pending_phase_res + _assembly_residuals(asm_r),
        )
        pending_phase_res = ()
        trace.iterations.append(record)

        if residual <= criterion:
            converged = True
            trace.coefficients.append(CgCoefficients(
                k + 1, cx[: k + 1].copy(), cr[: k + 2].copy(), cp[: k + 2].copy(),
                residual_norm=residual))
            break

        beta_k = rr_next / rr_est
        record.beta_k = beta_k
        cp[: k + 2] = cr[: k + 2] + beta_k * cp[: k + 2]
        trace.coefficients.append(CgCoefficients(
            k + 1, cx[: k + 1].copy(), cr[: k + 2].copy(), cp[: k + 2].copy(),
            residual_norm=residual))

        enc_p, asm_p = encode(cp[: k + 2])
        enc_pp, asm_pp = encode(np.concatenate([[0.0], cp[: k + 2]]))
        pp_est = estimate(enc_p, asm_p, enc_pp, asm_pp)
        record.pp_est = pp_est
        record.p_max = _positive_side_sup(cp[: k + 2])
        record.pp_max = _positive_side_sup(np.concatenate([[0.0], cp[: k + 2]]))
        record.p_subnorm = asm_p.normalization
        record.pp_subnorm = asm_pp.normalization
        record.phase_residuals = record.phase_residuals + \
            _assembly_residuals(asm_p) + _assembly_residuals(asm_pp)
        rr_est = rr_next
        k += 1

    if not converged:
        raise MaxIterExceeded(
            f"no convergence within {max_iter} iterations "
            f"(last residual {trace.iterations[-1].residual_norm:.3e})",
            trace=trace,
        )

    trace.converged = True
    trace.m = k

    # final state: encoding of the solution polynomial applied to b/||b||
    enc_x, asm_x = encode(cx[: k + 1])
    state = enc_x.unitary @ _zero_padded(prep[:, 0], enc_x.unitary.shape[0])
    projected = state[: system.dim]
    success = float(np.real(projected.conj() @ projected))
    x_vec = projected * asm_x.normalization  # the unnormalized Krylov vector
    trace.x_max = _positive_side_sup(cx[: k + 1])
    trace.solution_state = x_vec
    trace.solution_norm = float(np.linalg.norm(x_vec))
    trace.success_probability = success
    dense = system.solve()
    trace.error_vs_dense = float(
        np.linalg.norm(dense - (norm_b / cfg.alpha) * x_vec)
    )
    return trace


def _zero_padded(column: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros(dim, complex)
    out[: column.size] = column
    return out


# ---------------------------------------------------------------------------
# cost accounting and scaling fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostReport:
    per_iteration: tuple
    total_queries: float
    final_state_term: float
    max_circuit_depth: int


def query_cost(trace: QcgTrace, cfg: QcgConfig) -> CostReport:
    """Query-count bookkeeping: Q_k = 32(k+1) R^4/delta^2 + 16(2k+3) P^2 P'^2/delta^2.

    The final-state term is m (2 X_max / ||x_{m+1}||)^2; the maximum circuit
    depth is 2(m+1).
    """
    delta = trace.delta if trace.delta is not None else cfg.delta
    per = []
    for it in trace.iterations:
        q = 32.0 * (it.k + 1) * it.r_max ** 4 / delta ** 2
        if it.p_max is not None and it.pp_max is not None:
            q += 16.0 * (2 * it.k + 3) * (it.p_max * it.pp_max) ** 2 / delta ** 2
        per.append(q)
    final_term = 0.0
    if trace.m is not None and trace.solution_norm:
        final_term = trace.m * (2.0 * trace.x_max / trace.solution_norm) ** 2
    return CostReport(tuple(per), float(sum(per) + final_term), final_term,
                      2 * (trace.m + 1) if trace.m is not None else 0)


@dataclass(frozen=True)
class ScalingFit:
    quantity: str
    exponent: float
    r_squared: float
    regressor: str
    n_points: int


_QUANTITIES = {"X": "x_max", "R": "r_max", "P": "p_max", "P'": "pp_max"}


def fit_scalings(traces, regressor: str = "iteration_k", k_range=None):
    """Log-log least-squares exponents of the normalizer growth.

    regressor "iteration_k" fits value vs k within each trace (pooled);
    "kappa" fits each trace's largest value against its condition number.
    """
    if regressor not in ("iteration_k", "kappa"):
        raise DomainError(f"unknown regressor {regressor!r}")
    if isinstance(traces, QcgTrace):
        traces = [traces]
    fits = []
    for name, attr in _QUANTITIES.items():
        xs, ys = [], []
        if regressor == "iteration_k":
            for tr in traces:
                for it in tr.iterations:
                    kk = it.k + 1  # value belongs to the degree-(k+1) polynomial
                    if k_range is not None and not (k_range[0] <= kk <= k_range[1]):
                        continue
                    val = getattr(it, attr)
                    if val and val > 0.0:
                        xs.append(kk)
                        ys.append(val)
        else:
            for tr in traces:
                vals = [getattr(it, attr) for it in tr.iterations
                        if getattr(it, attr) and getattr(it, attr) > 0.0]
                if vals:
                    xs.append(tr.kappa)
                    ys.append(max(vals))
        if len(xs) < 4:
            raise InsufficientData(
                f"{name} vs {regressor}: {len(xs)} points, need at least 4"
            )
        lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
        slope, intercept = np.polyfit(lx, ly, 1)
        pred = slope * lx + intercept
        ss_res = float(np.sum((ly - pred) ** 2))
        ss_tot = float(np.sum((ly - ly.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
        fits.append(ScalingFit(name, float(slope), r2, regressor, len(xs)))
    return fits
