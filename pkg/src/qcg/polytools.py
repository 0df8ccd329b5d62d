"""Real-polynomial arithmetic and the approximation polynomials used by the solver.

Polynomials carry a monomial and a Chebyshev view (each derived lazily from the
other) plus parity metadata.  High-degree approximants (sign, rectangular,
inverse, linear-amplification) are built natively in the Chebyshev basis and
evaluated with the Clenshaw recurrence; the monomial view is only intended for
moderate degrees where the conversion is well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from numpy.polynomial import chebyshev as ncheb
from numpy.polynomial import polynomial as npoly
from scipy.special import erf, gammaln

from .errors import DomainError, ResourceError

# Polynomials above this degree are degree reports only, never coefficients.
DEFAULT_DEGREE_CAP = 4096

EVEN, ODD, NONE = "even", "odd", "none"


def _detect_parity(coeffs: np.ndarray) -> str:
    """Parity implied by exactly-zero coefficient patterns (basis independent)."""
    if coeffs.size == 0:
        return NONE
    odd_zero = not np.any(coeffs[1::2])
    even_zero = not np.any(coeffs[0::2])
    if odd_zero and not even_zero:
        return EVEN
    if even_zero and not odd_zero:
        return ODD
    if odd_zero and even_zero:  # zero polynomial
        return EVEN
    return NONE


def _trim(coeffs: np.ndarray) -> np.ndarray:
    """Drop trailing exactly-zero coefficients, keeping at least one entry."""
    n = coeffs.size
    while n > 1 and coeffs[n - 1] == 0.0:
        n -= 1
    return coeffs[:n]


class Polynomial:
    """A real polynomial on [-1, 1] with lazy monomial/Chebyshev views."""

    def __init__(self, monomial=None, chebyshev=None, parity=None):
        if monomial is None and chebyshev is None:
            raise ValueError("need monomial or chebyshev coefficients")
        self._mono = None if monomial is None else _trim(np.asarray(monomial, float).copy())
        self._cheb = None if chebyshev is None else _trim(np.asarray(chebyshev, float).copy())
        native = self._cheb if self._cheb is not None else self._mono
        self.parity = parity if parity is not None else _detect_parity(native)

    # -- constructors ------------------------------------------------

    @classmethod
    def from_monomial(cls, coeffs, parity=None) -> "Polynomial":
        return cls(monomial=coeffs, parity=parity)

    @classmethod
    def from_chebyshev(cls, coeffs, parity=None) -> "Polynomial":
        return cls(chebyshev=coeffs, parity=parity)

    @classmethod
    def chebyshev_t(cls, order: int) -> "Polynomial":
        c = np.zeros(order + 1)
        c[order] = 1.0
        return cls(chebyshev=c)

    # -- views -------------------------------------------------------

    @property
    def coeffs_monomial(self) -> np.ndarray:
        if self._mono is None:
            self._mono = _trim(ncheb.cheb2poly(self._cheb))
        return self._mono

    @property
    def coeffs_chebyshev(self) -> np.ndarray:
        if self._cheb is None:
            self._cheb = _trim(ncheb.poly2cheb(self._mono))
        return self._cheb

    @property
    def degree(self) -> int:
        native = self._cheb if self._cheb is not None else self._mono
        return native.size - 1

    def is_zero(self) -> bool:
        native = self._cheb if self._cheb is not None else self._mono
        return not np.any(native)

    # -- evaluation --------------------------------------------------

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate at x in [-1, 1]; |x| up to 1 + 1e-12 is clamped.

        The Chebyshev view, when present, is preferred (Clenshaw recurrence);
        the monomial path uses Horner.
        """
        x = np.clip(np.asarray(x, float), -1.0, 1.0)
        if self._cheb is not None:
            out = ncheb.chebval(x, self._cheb)
        else:
            out = npoly.polyval(x, self._mono)
        return out if out.ndim else float(out)

    # -- parity split and simple algebra -------------------------------

    def even_part(self) -> "Polynomial":
        return self._parity_part(0)

    def odd_part(self) -> "Polynomial":
        return self._parity_part(1)

    def _parity_part(self, rem: int) -> "Polynomial":
        # T_j has parity j, so masking indices works in either basis.
        if self._cheb is not None:
            c = self._cheb.copy()
            c[(1 - rem)::2] = 0.0
            return Polynomial(chebyshev=c, parity=EVEN if rem == 0 else ODD)
        c = self._mono.copy()
        c[(1 - rem)::2] = 0.0
        return Polynomial(monomial=c, parity=EVEN if rem == 0 else ODD)

    def scaled(self, factor: float) -> "Polynomial":
        if self._cheb is not None:
            return Polynomial(chebyshev=self._cheb * factor, parity=self.parity)
        return Polynomial(monomial=self._mono * factor, parity=self.parity)

    def reflected(self) -> "Polynomial":
        """P(-x); in both bases this negates odd-index coefficients."""
        if self._cheb is not None:
            c = self._cheb.copy()
            c[1::2] *= -1.0
            return Polynomial(chebyshev=c, parity=self.parity)
        c = self._mono.copy()
        c[1::2] *= -1.0
        return Polynomial(monomial=c, parity=self.parity)

    def mul_x(self) -> "Polynomial":
        """x * P(x), done in the native basis."""
        if self._cheb is not None:
            out = Polynomial(chebyshev=ncheb.chebmulx(self._cheb))
        else:
            out = Polynomial(monomial=np.concatenate([[0.0], self._mono]))
        return out

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        if self._cheb is not None:
            return {"basis": "chebyshev", "coeffs": self._cheb.tolist(), "parity": self.parity}
        return {"basis": "monomial", "coeffs": self._mono.tolist(), "parity": self.parity}

    @classmethod
    def from_dict(cls, d: dict) -> "Polynomial":
        basis = d["basis"]
        if basis == "chebyshev":
            return cls(chebyshev=d["coeffs"], parity=d.get("parity"))
        if basis == "monomial":
            return cls(monomial=d["coeffs"], parity=d.get("parity"))
        raise ValueError(f"unknown basis {basis!r}")

    def __repr__(self):
        basis = "chebyshev" if self._cheb is not None else "monomial"
        return f"Polynomial(degree={self.degree}, parity={self.parity}, basis={basis})"


@dataclass(frozen=True)
class Domain:
    """Disjoint sorted closed intervals inside [-1, 1]."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        prev_hi = -1.0 - 1e-12
        for a, b in ivs:
            if a > b:
                raise DomainError(f"empty interval [{a}, {b}]")
            if a < -1.0 - 1e-12 or b > 1.0 + 1e-12:
                raise DomainError(f"interval [{a}, {b}] leaves [-1, 1]")
            if a < prev_hi:
                raise DomainError("intervals overlap or are unsorted")
            prev_hi = b

    @classmethod
    def of(cls, *intervals) -> "Domain":
        return cls(tuple(intervals))

    @classmethod
    def symmetric_gap(cls, eta: float) -> "Domain":
        """[-1, -1/eta] U [1/eta, 1] — the inversion domain for condition eta."""
        return cls(((-1.0, -1.0 / eta), (1.0 / eta, 1.0)))


@dataclass(frozen=True)
class DegreeReport:
    """Named degree-formula output with the parameters that produced it."""

    name: str
    degree: int
    parameters: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# scalar special functions and degree formulas
# ---------------------------------------------------------------------------


def lambert_w(z: float) -> float:
    """Principal-branch Lambert W via Halley iteration from log(1 + z).

    Requires z >= -1/e; the residual |W e^W - z| converges to machine level
    relative to |z|.
    """
    z = float(z)
    if z < -1.0 / math.e:
        raise DomainError(f"lambert_w requires z >= -1/e, got {z}")
    if z == 0.0:
        return 0.0
    if z + 1.0 / math.e < 1e-300:
        return -1.0
    w = math.log1p(z) if z > -0.2 else -1.0 + math.sqrt(2.0 * (math.e * z + 1.0))
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - z
        if abs(f) <= 1e-13 * max(1.0, abs(z)):
            break
        wp1 = w + 1.0
        w -= f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    return w


_EPS_SGN_MAX = math.sqrt(8.0 / (math.e * math.pi))


def sign_degree(delta: float, Delta: float, eps: float) -> DegreeReport:
    """Degree of the erf-based step approximant, exact integer arithmetic."""
    if not (-1.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (-1, 1), got {delta}")
    if Delta <= 0.0:
        raise DomainError(f"Delta must be positive, got {Delta}")
    if not (0.0 < eps <= _EPS_SGN_MAX):
        raise DomainError(f"eps must lie in (0, sqrt(8/(e*pi))], got {eps}")
    k = math.sqrt(2.0 * math.log(8.0 / (math.pi * eps * eps))) / Delta
    w = lambert_w(512.0 / (math.pi * eps * eps * math.e * math.e))
    main = 16.0 * (1.0 + abs(delta)) * k / (math.sqrt(math.pi) * eps) * math.exp(-0.5 * w)
    d = 2 * math.ceil(main) + 1
    return DegreeReport(
        "sign", d, {"delta": delta, "Delta": Delta, "eps": eps, "k": k, "lambert_w": w}
    )


def rect_degree(delta: float, Delta: float, eps: float, kind: str = "open") -> DegreeReport:
    """Degree of the two-step rectangular approximant: sign degree at eps/2, minus one."""
    inner = sign_degree(delta, Delta, eps / 2.0)
    return DegreeReport(
        f"rect_{kind}",
        inner.degree - 1,
        {"delta": delta, "Delta": Delta, "eps": eps, "sign_degree": inner.degree},
    )


def inverse_degree(kappa: float, alpha: float, eps: float) -> DegreeReport:
    """Degree (and binomial half-width b) of the truncated 1/x Chebyshev series."""
    if kappa < 1.0 or alpha < 1.0:
        raise DomainError("inverse approximant needs kappa >= 1 and alpha >= 1")
    if not (0.0 < eps < 0.5):
        raise DomainError(f"eps must lie in (0, 1/2), got {eps}")
    ka = kappa * alpha
    b = math.ceil(ka * ka * math.log(2.0 * ka / eps))
    d = 2 * math.ceil(0.5 * math.sqrt(b * math.log(8.0 * b / eps))) + 1
    return DegreeReport("inverse", d, {"kappa": kappa, "alpha": alpha, "eps": eps, "b": b})


# ---------------------------------------------------------------------------
# evaluation helpers
# ---------------------------------------------------------------------------


def eval(p: Polynomial, x):  # noqa: A001 - spec-mandated operation name
    """Evaluate p at x (vectorized); see Polynomial.eval."""
    return p.eval(x)


def _derivative(p: Polynomial) -> Polynomial:
    if p._cheb is not None:
        return Polynomial(chebyshev=ncheb.chebder(p._cheb))
    return Polynomial(monomial=npoly.polyder(p._mono))


def max_abs(p: Polynomial, interval) -> float:
    """Maximum of |p| over a Domain (or a single (a, b) pair).

    Dense Chebyshev-node sampling with at least 8*(degree+1) nodes per
    interval, then Newton refinement on p' around sampled sign changes;
    the result is never below the sampled maximum.
    """
    if isinstance(interval, Domain):
        ivs = interval.intervals
    elif isinstance(interval, (tuple, list)) and len(interval) == 2 and np.isscalar(interval[0]):
        ivs = (tuple(interval),)
    else:
        ivs = tuple(tuple(iv) for iv in interval)

    dp = _derivative(p)
    ddp = _derivative(dp)
    best = 0.0
    for a, b in ivs:
        if b < a:
            raise DomainError("empty interval")
        n = max(8 * (p.degree + 1), 32)
        theta = np.pi * (np.arange(n) + 0.5) / n
        xs = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(theta)
        xs = np.concatenate([[a], xs[::-1], [b]])
        vals = np.abs(p.eval(xs))
        best = max(best, float(vals.max()))
        # refine interior extrema: Newton on p' between derivative sign changes,
        # vectorized across all brackets at once
        dv = np.asarray(dp.eval(xs))
        flips = np.nonzero(np.sign(dv[:-1]) * np.sign(dv[1:]) < 0)[0]
        if flips.size:
            t = 0.5 * (xs[flips] + xs[flips + 1])
            for _ in range(20):
                d1 = np.asarray(dp.eval(t))
                d2 = np.asarray(ddp.eval(t))
                safe = d2 != 0.0
                step = np.where(safe, d1 / np.where(safe, d2, 1.0), 0.0)
                t = np.clip(t - step, a, b)
            best = max(best, float(np.max(np.abs(p.eval(t)))))
    return best


# ---------------------------------------------------------------------------
# approximation polynomial constructions
# ---------------------------------------------------------------------------


def _cheb_transform(values: np.ndarray) -> np.ndarray:
    """Discrete Chebyshev transform on first-kind nodes cos(pi (i+1/2)/n)."""
    n = values.size
    c = scipy.fft.dct(values, type=2) / n
    c[0] *= 0.5
    return c


def _erf_cheb(k: float, shift: float, degree: int) -> np.ndarray:
    """Chebyshev coefficients (orders 0..degree) of erf(k * (x - shift)) on [-1, 1]."""
    n = 4 * degree
    nodes = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    return _cheb_transform(erf(k * (nodes - shift)))[: degree + 1]


def _cap_guard(report: DegreeReport, max_degree: int):
    if report.degree > max_degree:
        raise ResourceError(
            f"{report.name} degree {report.degree} exceeds cap {max_degree}; "
            "degree report available on the exception",
            report=report,
        )


def _unit_sup_guard(coeffs: np.ndarray) -> np.ndarray:
    """Rescale to guarantee sup |P| <= 1 when truncation overshoots the unit bound."""
    m = max_abs(Polynomial(chebyshev=coeffs), (-1.0, 1.0))
    if m > 1.0:
        coeffs = coeffs / (m * (1.0 + 1e-15))
    return coeffs


def sign_poly(delta: float, Delta: float, eps: float, *,
              max_degree: int = DEFAULT_DEGREE_CAP):
    """Polynomial approximating sgn(x - delta) outside a width-Delta window.

    Chebyshev expansion of erf(k (x - delta)) truncated at the closed-form
    degree; max error <= eps on [-1, delta - Delta/2] U [delta + Delta/2, 1].
    """
    if not (-1.0 < delta - Delta / 2.0 and delta + Delta / 2.0 < 1.0):
        raise DomainError("delta +- Delta/2 must stay inside (-1, 1)")
    report = sign_degree(delta, Delta, eps)
    _cap_guard(report, max_degree)
    d = report.degree
    coeffs = _erf_cheb(report.parameters["k"], delta, d)
    if delta == 0.0:
        coeffs[0::2] = 0.0  # odd target: even orders vanish analytically
    coeffs = _unit_sup_guard(coeffs)
    parity = ODD if delta == 0.0 else NONE
    return Polynomial(chebyshev=coeffs, parity=parity), report


def rect_poly(delta: float, Delta: float, eps: float, kind: str = "open", *,
              max_degree: int = DEFAULT_DEGREE_CAP):
    """Even polynomial approximating an open or closed rectangular window.

    Built from the erf-based step approximant at eps/2; symmetrization makes
    the even parity exact.  Satisfies |P| <= eps on the suppressed region,
    |1 - P| <= eps on the pass region (per kind), and |P| <= 1 on [-1, 1].
    """
    if kind not in ("open", "closed"):
        raise DomainError(f"kind must be open or closed, got {kind!r}")
    if not (0.0 < delta - Delta / 2.0 and delta + Delta / 2.0 < 1.0):
        raise DomainError("delta +- Delta/2 must stay inside (0, 1)")
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    report = rect_degree(delta, Delta, eps, kind)
    _cap_guard(report, max_degree)
    d_sgn = report.parameters["sign_degree"]
    if kind == "open":
        # 1 + (sgn(x - delta) + sgn(-x - delta)) / 2: even part of the step, plus one
        step = _erf_cheb(sign_degree(delta, Delta, eps / 2.0).parameters["k"], delta, d_sgn)
        coeffs = step.copy()
        coeffs[1::2] = 0.0
        coeffs[0] += 1.0
    else:
        # (sgn(x + delta) + sgn(-x + delta)) / 2: even part of the step at -delta
        step = _erf_cheb(sign_degree(delta, Delta, eps / 2.0).parameters["k"], -delta, d_sgn)
        coeffs = step.copy()
        coeffs[1::2] = 0.0
    coeffs = _unit_sup_guard(coeffs[:d_sgn])  # even part: degree d_sgn - 1
    return Polynomial(chebyshev=coeffs, parity=EVEN), report


def inverse_poly(kappa: float, alpha: float, eps: float, *,
                 max_degree: int = DEFAULT_DEGREE_CAP):
    """Odd polynomial approximating 1/x on [-1, -1/(kappa alpha)] U [1/(kappa alpha), 1].

    Chebyshev coefficients are alternating binomial tail sums; the tails are
    accumulated in log space so b up to ~1e7 cannot overflow.
    """
    report = inverse_degree(kappa, alpha, eps)
    _cap_guard(report, max_degree)
    b = report.parameters["b"]
    d = report.degree
    i = np.arange(1, b + 1, dtype=float)
    # C(2b, b+i) / 4^b, evaluated as exp(log Gamma sums)
    log_terms = gammaln(2 * b + 1) - gammaln(b + i + 1) - gammaln(b - i + 1) \
        - 2 * b * math.log(2.0)
    terms = np.exp(log_terms)
    tails = np.cumsum(terms[::-1])[::-1]  # tails[j] = sum_{i >= j+1} term_i
    n_odd = (d - 1) // 2 + 1
    coeffs = np.zeros(d + 1)
    j = np.arange(n_odd)
    coeffs[2 * j + 1] = 4.0 * (-1.0) ** j * tails[:n_odd]
    return Polynomial(chebyshev=coeffs, parity=ODD), report


# ---------------------------------------------------------------------------
# reparameterizations and products
# ---------------------------------------------------------------------------


def _compose_affine(p: Polynomial, scale: float, offset: float) -> Polynomial:
    """P(scale * x + offset) by exact binomial re-expansion of monomial coefficients."""
    coeffs = p.coeffs_monomial
    acc = np.zeros(coeffs.size)
    cur = np.array([1.0])
    for c in coeffs:
        acc[: cur.size] += c * cur
        cur = npoly.polymul(cur, [offset, scale])
    return Polynomial(monomial=acc)


def positive_shift(p: Polynomial) -> Polynomial:
    """P+ with P+(x) = P((x + 1) / 2); degree preserved, parity generally lost."""
    return _compose_affine(p, 0.5, 0.5)


def window_shift(p: Polynomial, delta1: float, delta2: float) -> Polynomial:
    """P(((d2 - d1)/2) x + (d1 + d2)/2), mapping [-1, 1] onto [d1, d2]."""
    if not (-1.0 <= delta1 < delta2 <= 1.0):
        raise DomainError(f"need -1 <= delta1 < delta2 <= 1, got ({delta1}, {delta2})")
    return _compose_affine(p, (delta2 - delta1) / 2.0, (delta1 + delta2) / 2.0)


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    """Coefficient convolution in the monomial basis."""
    prod = npoly.polymul(p.coeffs_monomial, q.coeffs_monomial)
    pmap = {(EVEN, EVEN): EVEN, (ODD, ODD): EVEN, (EVEN, ODD): ODD, (ODD, EVEN): ODD}
    return Polynomial(monomial=prod, parity=pmap.get((p.parity, q.parity), NONE))
