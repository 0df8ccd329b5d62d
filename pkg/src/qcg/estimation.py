"""State preparation and the modified swap test for block encodings.

The swap test interferes two block-encoded states through one extra qubit:
Hadamard, a select applying V on the control-0 branch and U on the control-1
branch, Hadamard.  Measuring the extra qubit jointly with the all-zero ancilla
projector gives p0 - p1 = Re<psi|phi>.  Exact mode returns the analytic
probabilities; sampled mode draws from the three-outcome categorical
(p0, p1, rest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encodings import BlockEncoding, LinearSystem
from .errors import DimensionMismatch, DomainError, ZeroVector

EXACT, SAMPLED = "exact", "sampled"

_MULTINOMIAL_CHUNK = 2 ** 62  # numpy multinomial needs counts within int64


@dataclass(frozen=True)
class ShotModel:
    """Exact expectations or seeded categorical sampling."""

    mode: str = EXACT
    shots: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (EXACT, SAMPLED):
            raise DomainError(f"mode must be exact or sampled, got {self.mode!r}")
        if self.mode == SAMPLED and self.shots < 1:
            raise DomainError("sampled mode requires shots >= 1")

    @classmethod
    def exact(cls) -> "ShotModel":
        return cls(EXACT)

    @classmethod
    def sampled(cls, shots: int, seed: int = 0) -> "ShotModel":
        return cls(SAMPLED, shots, seed)


@dataclass(frozen=True)
class SwapTestResult:
    p0: float
    p1: float
    re_inner: float
    shots: int = None
    stderr: float = None

    def __post_init__(self):
        if self.p0 < -1e-12 or self.p1 < -1e-12:
            raise DomainError("probabilities must be nonnegative")
        if self.p0 + self.p1 > 1.0 + 1e-12:
            raise DomainError("p0 + p1 exceeds 1")


def prepare_b(system: LinearSystem) -> np.ndarray:
    """Unitary whose first column is rhs/||rhs||, by Householder completion."""
    w = system.rhs_normalized().astype(complex)
    n = w.size
    e0 = np.zeros(n, complex)
    e0[0] = 1.0
    phase = w[0] / abs(w[0]) if abs(w[0]) > 1e-15 else 1.0
    u = w - phase * e0
    nrm2 = float(np.real(u.conj() @ u))
    if nrm2 < 1e-30:
        refl = np.eye(n, dtype=complex)
    else:
        refl = np.eye(n, dtype=complex) - 2.0 * np.outer(u, u.conj()) / nrm2
    out = refl * 1.0
    out[:, 0] = refl[:, 0] * phase  # absorb the phase so column 0 equals w exactly
    if np.linalg.norm(out[:, 0] - w) > 1e-12:
        raise ZeroVector("state preparation failed to reproduce the target column")
    return out


def _branch_state(be: BlockEncoding, prep: np.ndarray) -> np.ndarray:
    """U (I_a x prep) |0...0>: the block-encoded state before post-selection."""
    dim_s = prep.shape[0]
    if dim_s != be.dim_system:
        raise DimensionMismatch("preparation unitary does not match the system register")
    col = np.zeros(be.unitary.shape[0], complex)
    col[:dim_s] = prep[:, 0]  # (I_a x prep)|0> has support on the ancilla-zero slice
    return be.unitary @ col


def _sample_multinomial(rng: np.random.Generator, shots: int, probs) -> np.ndarray:
    counts = np.zeros(3, dtype=float)
    remaining = shots
    while remaining > 0:
        chunk = min(remaining, _MULTINOMIAL_CHUNK)
        counts += rng.multinomial(chunk, probs)
        remaining -= chunk
    return counts


def swap_test(u: BlockEncoding, v: BlockEncoding, prep: np.ndarray,
              model: ShotModel = ShotModel(EXACT)) -> SwapTestResult:
    """Estimate Re of the inner product of the two block-applied states.

    Both encodings must share ancilla and system dimensions; the preparation
    unitary is right-composed onto each system register before the interference.
    """
    if (u.n_a, u.n_s) != (v.n_a, v.n_s):
        raise DimensionMismatch("encodings act on different registers")
    psi_u = _branch_state(u, prep)
    psi_v = _branch_state(v, prep)
    dim_s = u.dim_system
    plus = 0.5 * (psi_v + psi_u)
    minus = 0.5 * (psi_v - psi_u)
    p0 = float(np.real(plus[:dim_s].conj() @ plus[:dim_s]))
    p1 = float(np.real(minus[:dim_s].conj() @ minus[:dim_s]))
    if model.mode == EXACT:
        return SwapTestResult(p0, p1, p0 - p1)
    rest = max(0.0, 1.0 - p0 - p1)
    probs = np.array([p0, p1, rest])
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    rng = np.random.default_rng(model.seed)
    counts = _sample_multinomial(rng, model.shots, probs)
    f0, f1 = counts[0] / model.shots, counts[1] / model.shots
    var = (f0 * (1.0 - f0) + f1 * (1.0 - f1) + 2.0 * f0 * f1) / model.shots
    return SwapTestResult(f0, f1, f0 - f1, shots=model.shots,
                          stderr=math.sqrt(max(var, 0.0)))


def required_shots(precision: float, confidence: float = 0.95) -> int:
    """Hoeffding count for a +-1-bounded estimator: ceil(2 ln(2/(1-c)) / precision^2)."""
    if precision <= 0.0:
        raise DomainError("precision must be positive")
    if not (0.0 < confidence < 1.0):
        raise DomainError("confidence must lie in (0, 1)")
    return math.ceil(2.0 * math.log(2.0 / (1.0 - confidence)) / precision ** 2)
