"""Assembly of eigenvalue-transformation circuits from phase factors.

Circuits are realized as explicit dense unitary products (desk scale keeps
every dimension at or below 2^10).  A definite-parity assembly adds one
ancilla: the phased alternating product and its angle-negated partner are
combined through one Hadamard pair so the encoded block is the real part
of the scalar signal polynomial applied to the eigenvalues.  The general
(indefinite-parity) assembly adds a second ancilla selecting between the
even-part and odd-part branches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encodings import BlockEncoding, LinearSystem
from .errors import DomainError, NormalizationError, ParityMismatch
from .polytools import Polynomial, max_abs, positive_shift, window_shift
from .qsp_core import (
    REFLECTION,
    PhaseFactors,
    QspResidual,
    convert_convention,
    solve_phases,
)

_SQ2 = 1.0 / np.sqrt(2.0)

DEFINITE, GENERAL, POSITIVE_SIDE = "definite_parity", "general", "positive_side"


@dataclass
class QetAssembly:
    """Recipe metadata for an assembled circuit."""

    base: BlockEncoding
    phases_even: PhaseFactors = None
    phases_odd: PhaseFactors = None
    normalization: float = 1.0
    mode: str = DEFINITE
    residual_even: QspResidual = None
    residual_odd: QspResidual = None

    def __post_init__(self):
        if self.normalization <= 0.0:
            raise DomainError("normalization must be positive")
        if self.mode == GENERAL or self.mode == POSITIVE_SIDE:
            if self.phases_even is None and self.phases_odd is None:
                raise DomainError("general mode requires at least one phase list")
        elif self.mode == DEFINITE:
            have = (self.phases_even is not None) + (self.phases_odd is not None)
            if have != 1:
                raise DomainError("definite-parity mode takes exactly one phase list")

    def save(self, prefix, encoding: BlockEncoding) -> None:
        prefix = Path(prefix)
        encoding.save(prefix)
        meta = {
            "mode": self.mode,
            "normalization": self.normalization,
            "phases_even": self.phases_even.to_dict() if self.phases_even else None,
            "phases_odd": self.phases_odd.to_dict() if self.phases_odd else None,
        }
        prefix.with_suffix(".assembly.json").write_text(json.dumps(meta))


def _phase_diag(angle: float, n_a: int, n_s: int) -> np.ndarray:
    """Diagonal of exp(i angle Pi), Pi = 2|0><0|_a x I - I."""
    dim = 2 ** (n_a + n_s)
    diag = np.full(dim, np.exp(-1j * angle), complex)
    diag[: 2 ** n_s] = np.exp(1j * angle)
    return diag


def _sequence(base: BlockEncoding, angles) -> np.ndarray:
    """The alternating phased product for reflection-convention angles."""
    u = base.unitary
    ud = u.conj().T
    n_a, n_s = base.n_a, base.n_s
    d = len(angles) - 1
    out = np.diag(_phase_diag(angles[0], n_a, n_s))
    if d % 2 == 0:
        for k in range(1, d // 2 + 1):
            out = out @ ud * _phase_diag(angles[2 * k - 1], n_a, n_s)
            out = out @ u * _phase_diag(angles[2 * k], n_a, n_s)
    else:
        out = out @ u * _phase_diag(angles[1], n_a, n_s)
        for k in range(1, (d - 1) // 2 + 1):
            out = out @ ud * _phase_diag(angles[2 * k], n_a, n_s)
            out = out @ u * _phase_diag(angles[2 * k + 1], n_a, n_s)
    return out


def _hadamard_pair(branch0: np.ndarray, branch1: np.ndarray) -> np.ndarray:
    """(H x I) (|0><0| x branch0 + |1><1| x branch1) (H x I)."""
    plus = 0.5 * (branch0 + branch1)
    minus = 0.5 * (branch0 - branch1)
    return np.block([[plus, minus], [minus, plus]])


def _real_part_assembly(base: BlockEncoding, phi: PhaseFactors) -> np.ndarray:
    """One extra ancilla realizing the real part of the signal polynomial."""
    phi = convert_convention(phi, REFLECTION)
    u_pos = _sequence(base, phi.angles)
    u_neg = _sequence(base, phi.negated().angles)
    return _hadamard_pair(u_pos, u_neg)


def _zero_block_branch(n_a: int, n_s: int) -> np.ndarray:
    """A unitary whose all-zero-ancilla block vanishes: X on the leading ancilla."""
    half = 2 ** (n_a + n_s)
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    return np.kron(x, np.eye(half))


def qet_definite(base: BlockEncoding, phi: PhaseFactors) -> BlockEncoding:
    """(1, n_a+1, 0) encoding whose block is P(A/alpha) for solved phases.

    The base encoding must be exact; P is the definite-parity polynomial the
    phases were solved for.
    """
    if base.eps != 0.0:
        raise DomainError("qet_definite requires an exact base encoding")
    if phi.target_parity not in ("even", "odd"):
        raise ParityMismatch("phases must target a definite parity")
    u = _real_part_assembly(base, phi)
    return BlockEncoding(u, alpha=1.0, n_a=base.n_a + 1, n_s=base.n_s, eps=0.0,
                         check=False)


def _apply_shift(p: Polynomial, shift) -> tuple[Polynomial, str]:
    if shift in (None, "none"):
        return p, GENERAL
    if shift == "positive_side":
        return positive_shift(p), POSITIVE_SIDE
    if isinstance(shift, (tuple, list)) and len(shift) == 3 and shift[0] == "window":
        return window_shift(p, shift[1], shift[2]), GENERAL
    raise DomainError(f"unknown shift {shift!r}")


def qet_general(base: BlockEncoding, p: Polynomial, shift=None, *,
                solve_tol: float = 1e-12, max_degree: int = 512):
    """(2 C_max, n_a+2, tol) encoding of P(A_eff/alpha) for arbitrary real P.

    The requested reparameterization is applied first (``positive_side``
    expects ``base`` to encode 2A/alpha - I, so that the shifted polynomial
    acting on it reproduces P(A/alpha)).  The shifted polynomial splits into
    parity parts, both normalized by the larger of the two max-abs values
    C_max; a vanished part is replaced by a zero-block branch so the
    2 C_max subnormalization stays uniform.
    """
    if base.eps != 0.0:
        raise DomainError("qet_general requires an exact base encoding")
    q, mode = _apply_shift(p, shift)
    even, odd = q.even_part(), q.odd_part()
    c_even = 0.0 if even.is_zero() else max_abs(even, (-1.0, 1.0))
    c_odd = 0.0 if odd.is_zero() else max_abs(odd, (-1.0, 1.0))
    c_max = max(c_even, c_odd)
    if c_max == 0.0:
        raise NormalizationError("both parity parts vanish; nothing to encode")

    branches = {}
    phases = {}
    residuals = {}
    for name, part in (("even", even), ("odd", odd)):
        if part.is_zero():
            branches[name] = _zero_block_branch(base.n_a, base.n_s)
            phases[name] = None
            residuals[name] = None
            continue
        normalized = part.scaled(1.0 / c_max)
        phi, res = solve_phases(normalized, solve_tol, max_degree=max_degree)
        branches[name] = _real_part_assembly(base, phi)
        phases[name] = phi
        residuals[name] = res

    u = _hadamard_pair(branches["even"], branches["odd"])
    eps = sum(r.max_abs_error for r in residuals.values() if r is not None)
    out = BlockEncoding(u, alpha=2.0 * c_max, n_a=base.n_a + 2, n_s=base.n_s,
                        eps=eps, check=False)
    assembly = QetAssembly(
        base=base,
        phases_even=phases["even"],
        phases_odd=phases["odd"],
        normalization=2.0 * c_max,
        mode=mode,
        residual_even=residuals["even"],
        residual_odd=residuals["odd"],
    )
    return out, assembly


def qet_oracle(system: LinearSystem, p: Polynomial, alpha: float) -> np.ndarray:
    """Spectral brute force: sum_j P(lambda_j/alpha) |v_j><v_j|."""
    vals = p.eval(system.eigenvalues / alpha)
    return system.apply_function(np.asarray(vals))
