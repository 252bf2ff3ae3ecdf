"""Special functions for the deformed spin-chain toolkit.

Everything here is an ordinary complex-valued function evaluated by a
truncated series or product with an a-priori geometric tail bound:

    (x; Q)        = prod_{i>=0} (1 - x Q^i)          infinite q-product
    (x; Q)_k      = prod_{i=0}^{k-1} (1 - x Q^i)     finite q-product
    theta_n(z|t)  = Jacobi theta series in the nome p = exp(i pi t)
    egamma(z)     = prod_{n,m>=0} (1 - pt^{n+1} pe^{m+1} / E)
                                / (1 - pt^n pe^m E),   E = exp(2 pi i z)

with pt = exp(2 pi i tau) and pe = exp(4 pi i eta).  Truncation is always
by a tail bound, never by a fixed term count; if the bound cannot be met
within ``max_terms`` the evaluation raises ``ConvergenceError``.

All complex powers use the principal branch via ``cpow``; a single
consistent branch keeps the shift identities exact.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConvergenceError",
    "PoleProximityError",
    "NomeQ",
    "EllipticModuli",
    "SeriesTolerance",
    "cpow",
    "qpow",
    "qpoch_base",
    "qpoch_base_finite",
    "qpoch_finite",
    "qpoch_infinite",
    "qpoch_ratio",
    "qbinomial_ratio",
    "jacobi_theta",
    "theta_half",
    "theta1",
    "theta4",
    "elliptic_gamma",
    "r_tau",
    "measure_constant_C",
]


class ConvergenceError(RuntimeError):
    """A series/product tail bound was not reached within max_terms."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class PoleProximityError(ValueError):
    """Evaluation requested too close to a pole/zero lattice point."""

    def __init__(self, message: str, lattice_point: tuple | None = None):
        super().__init__(message)
        self.lattice_point = lattice_point


@dataclass(frozen=True)
class NomeQ:
    """Deformation parameter q with 0 < |q| < 1 (products in q^2 converge)."""

    q: complex

    def __post_init__(self):
        a = abs(complex(self.q))
        if not 0.0 < a < 1.0:
            raise ValueError(f"need 0 < |q| < 1, got |q| = {a}")

    @property
    def qsq(self) -> complex:
        return complex(self.q) ** 2


@dataclass(frozen=True)
class EllipticModuli:
    """Quasi-period tau and shift parameter eta, both with positive
    imaginary part so that |p_tau| < 1 and |p_eta| < 1."""

    tau: complex
    eta: complex

    def __post_init__(self):
        if not (complex(self.tau).imag > 0 and complex(self.eta).imag > 0):
            raise ValueError("need Im(tau) > 0 and Im(eta) > 0")
        # follows from the above; asserted anyway
        assert abs(self.p_tau) < 1 and abs(self.p_eta) < 1

    @property
    def p_tau(self) -> complex:
        return cmath.exp(2j * cmath.pi * self.tau)

    @property
    def p_eta(self) -> complex:
        return cmath.exp(4j * cmath.pi * self.eta)


@dataclass(frozen=True)
class SeriesTolerance:
    """Target absolute tail bound and a hard cap on the number of terms."""

    epsilon: float = 1e-14
    max_terms: int = 20000

    def __post_init__(self):
        if not (self.epsilon > 0 and self.max_terms >= 1):
            raise ValueError("epsilon must be > 0 and max_terms >= 1")


DEFAULT_TOL = SeriesTolerance()


def cpow(base: complex, expo: complex) -> complex:
    """Principal-branch complex power base**expo (base != 0)."""
    if expo == 0:
        return 1.0 + 0.0j
    return cmath.exp(complex(expo) * cmath.log(complex(base)))


def qpow(q: NomeQ, expo: complex) -> complex:
    """q**expo on the principal branch."""
    return cpow(q.q, expo)


def qpoch_base(x: complex, base: complex, tol: SeriesTolerance = DEFAULT_TOL) -> complex:
    """Infinite product (x; base) = prod_{i>=0} (1 - x base^i) for |base| < 1.

    Dropping the factors beyond K changes the product by the relative
    amount sum_{i>=K} |x| |base|^i, so the product is truncated at the
    first K with |x| |base|^K (1 - |base|)^{-1} < eps.
    """
    b = abs(base)
    if not b < 1.0:
        raise ValueError(f"need |base| < 1 for convergence, got {b}")
    acc = 1.0 + 0.0j
    term = complex(x)
    geo = 1.0 / (1.0 - b)
    for _ in range(tol.max_terms):
        if abs(term) * geo < tol.epsilon:
            return acc
        acc *= 1.0 - term
        term *= base
    raise ConvergenceError(
        f"q-product tail bound {tol.epsilon} not reached in {tol.max_terms} terms",
        achieved=abs(term) * geo,
    )


def qpoch_base_finite(x: complex, base: complex, k: int) -> complex:
    """Finite product (x; base)_k = prod_{i=0}^{k-1} (1 - x base^i)."""
    if k < 0:
        raise ValueError("k must be a non-negative integer")
    acc = 1.0 + 0.0j
    term = complex(x)
    for _ in range(k):
        acc *= 1.0 - term
        term *= base
    return acc


def qpoch_finite(x: complex, q: NomeQ, k: int) -> complex:
    """(x; q^2)_k."""
    return qpoch_base_finite(x, q.qsq, k)


def qpoch_infinite(x: complex, q: NomeQ, tol: SeriesTolerance = DEFAULT_TOL) -> complex:
    """(x; q^2) = prod_{i>=0} (1 - x q^{2i})."""
    return qpoch_base(x, q.qsq, tol)


def qpoch_ratio(xnum: complex, xden: complex, q: NomeQ,
                tol: SeriesTolerance = DEFAULT_TOL) -> complex:
    """(xnum; q^2) / (xden; q^2) with the factors paired,

        prod_i (1 - xnum q^{2i}) / (1 - xden q^{2i}),

    which stays finite when both arguments are huge (the separate
    products overflow while their ratio is moderate)."""
    base = q.qsq
    b = abs(base)
    acc = 1.0 + 0.0j
    tn, td = complex(xnum), complex(xden)
    geo = 1.0 / (1.0 - b)
    for _ in range(tol.max_terms):
        if (abs(tn) + abs(td)) * geo < tol.epsilon:
            return acc
        acc *= (1.0 - tn) / (1.0 - td)
        tn *= base
        td *= base
    raise ConvergenceError(
        f"q-product ratio tail bound not reached in {tol.max_terms} terms")


def qbinomial_ratio(a: complex, z: complex, q: NomeQ,
                    tol: SeriesTolerance = DEFAULT_TOL) -> complex:
    """(a z; q^2) / (z; q^2).

    For |z| < 1 this equals the basic hypergeometric sum
    sum_n (a;q^2)_n / (q^2;q^2)_n z^n; the product form itself is entire
    in a and needs no |z| restriction.
    """
    return qpoch_infinite(a * z, q, tol) / qpoch_infinite(z, q, tol)


def _theta_terms(kind: int, z, p: complex, tol: SeriesTolerance):
    """Yield the series terms of theta_kind; z may be an ndarray."""
    zz = np.asarray(z, dtype=complex)
    pi = np.pi
    if kind == 1:
        for n in range(tol.max_terms):
            yield n, 2.0 * (-1) ** n * cpow(p, (n + 0.5) ** 2) * np.sin((2 * n + 1) * pi * zz)
    elif kind == 2:
        for n in range(tol.max_terms):
            yield n, 2.0 * cpow(p, (n + 0.5) ** 2) * np.cos((2 * n + 1) * pi * zz)
    elif kind == 3:
        yield 0, np.ones_like(zz)
        for n in range(1, tol.max_terms):
            yield n, 2.0 * cpow(p, n ** 2) * np.cos(2 * n * pi * zz)
    elif kind == 4:
        yield 0, np.ones_like(zz)
        for n in range(1, tol.max_terms):
            yield n, 2.0 * (-1) ** n * cpow(p, n ** 2) * np.cos(2 * n * pi * zz)
    else:
        raise ValueError(f"theta kind must be 1..4, got {kind}")


def jacobi_theta(kind: int, z, quasi_period: complex,
                 tol: SeriesTolerance = DEFAULT_TOL):
    """Jacobi theta_kind(z | quasi_period), sine/cosine series in the nome
    p = exp(i pi quasi_period).  Scalar or ndarray z.

    Terms scale like |p|^{n^2} e^{2 pi n |Im z|} (|p|^{(n+1/2)^2} for kinds
    1, 2), so the series is stopped when that bound drops below epsilon.
    """
    qp = complex(quasi_period)
    if not qp.imag > 0:
        raise ValueError("theta series needs Im(quasi_period) > 0")
    p = cmath.exp(1j * cmath.pi * qp)
    zz = np.asarray(z, dtype=complex)
    im = float(np.max(np.abs(zz.imag))) if zz.size else 0.0
    growth = np.exp(2 * np.pi * im)

    acc = np.zeros_like(zz)
    scale = 1.0
    for n, term in _theta_terms(kind, zz, p, tol):
        acc = acc + term
        scale = max(scale, float(np.max(np.abs(term))) if term.size else 0.0)
        # next-term bound: |p|^{(n+3/2)^2} e^{(2n+3) pi Im} for kinds 1,2,
        # |p|^{(n+1)^2} e^{2(n+1) pi Im} for kinds 3,4
        if kind in (1, 2):
            nxt = 2.0 * abs(p) ** ((n + 1.5) ** 2) * growth ** (n + 1.5)
        else:
            nxt = 2.0 * abs(p) ** ((n + 1) ** 2) * growth ** (n + 1)
        if nxt < tol.epsilon * scale:
            return acc if np.asarray(z).shape else complex(acc)
    raise ConvergenceError(
        f"theta_{kind} series did not reach tail bound in {tol.max_terms} terms")


def theta_half(kind: int, z, moduli: EllipticModuli,
               tol: SeriesTolerance = DEFAULT_TOL):
    """(z)_kind = theta_kind(z | tau/2) for kind in {3, 4} (both even)."""
    if kind not in (3, 4):
        raise ValueError("half-period shorthand is defined for kinds 3 and 4")
    return jacobi_theta(kind, z, moduli.tau / 2.0, tol)


def theta1(z, moduli: EllipticModuli, tol: SeriesTolerance = DEFAULT_TOL):
    return jacobi_theta(1, z, moduli.tau, tol)


def theta4(z, moduli: EllipticModuli, tol: SeriesTolerance = DEFAULT_TOL):
    return jacobi_theta(4, z, moduli.tau, tol)


def elliptic_gamma(z, moduli: EllipticModuli,
                   tol: SeriesTolerance = DEFAULT_TOL,
                   pole_guard: float = 1e-6):
    """Elliptic gamma function egamma(z | tau, 2 eta) as the double product

        prod_{n,m>=0} (1 - pt^{n+1} pe^{m+1} / E) / (1 - pt^n pe^m E)

    with E = exp(2 pi i z).  Scalar or ndarray z.

    Poles sit at z in -tau n - 2 eta m + Z, zeros at
    z in tau(n+1) + 2 eta(m+1) + Z; any factor closer than ``pole_guard``
    (measured as |1 - factor argument|) raises PoleProximityError naming
    the offending lattice indices.
    """
    pt, pe = moduli.p_tau, moduli.p_eta
    zz = np.asarray(z, dtype=complex)
    E = np.exp(2j * np.pi * zz)
    emax = float(np.max(np.abs(E)))
    einvmax = float(np.max(np.abs(1.0 / E)))

    def n_cut(base_abs: float, amp: float) -> int:
        # smallest K with base^K * amp < eps
        if amp <= 0:
            return 1
        k = int(np.ceil((np.log(tol.epsilon) - np.log(amp)) / np.log(base_abs))) + 1
        return max(k, 1)

    n_max = n_cut(abs(pt), max(emax, einvmax))
    m_max = n_cut(abs(pe), max(emax, einvmax))
    if (n_max + 1) * (m_max + 1) > tol.max_terms:
        raise ConvergenceError(
            f"elliptic gamma grid {n_max}x{m_max} exceeds max_terms={tol.max_terms}")

    num = np.ones_like(zz)
    den = np.ones_like(zz)
    for n in range(n_max + 1):
        ptn = pt ** n
        for m in range(m_max + 1):
            w = ptn * pe ** m
            fden = 1.0 - w * E
            bad = np.abs(fden) < pole_guard
            if np.any(bad):
                raise PoleProximityError(
                    f"elliptic gamma pole proximity at lattice point (n={n}, m={m})",
                    lattice_point=(n, m, "pole"))
            fnum = 1.0 - (w * pt * pe) / E
            badz = np.abs(fnum) < pole_guard
            if np.any(badz):
                raise PoleProximityError(
                    f"elliptic gamma zero proximity at lattice point (n={n + 1}, m={m + 1})",
                    lattice_point=(n + 1, m + 1, "zero"))
            num = num * fnum
            den = den * fden
    out = num / den
    return out if np.asarray(z).shape else complex(out)


def r_tau(moduli: EllipticModuli, tol: SeriesTolerance = DEFAULT_TOL) -> complex:
    """Shift constant R(tau) = -i e^{-i pi tau / 4} (pt; pt)^{-1}, the
    proportionality factor in egamma(z + 2 eta) = R(tau) e^{i pi z} theta1(z) egamma(z).
    """
    pt = moduli.p_tau
    return -1j * cmath.exp(-1j * cmath.pi * moduli.tau / 4.0) / qpoch_base(pt, pt, tol)


def measure_constant_C(moduli: EllipticModuli, tol: SeriesTolerance = DEFAULT_TOL) -> complex:
    """Normalization constant C = (1/2) (pe; pe) (pt; pt) of the
    integral intertwiner measure."""
    pt, pe = moduli.p_tau, moduli.p_eta
    return 0.5 * qpoch_base(pe, pe, tol) * qpoch_base(pt, pt, tol)
