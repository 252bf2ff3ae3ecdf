"""The elliptically deformed spin chain, realized on test functions.

The single-site module is a space of even meromorphic functions; every
operator here is applied pointwise to concrete test functions and
compared at sample points, never through a series basis:

    (z)_3, (z)_4      theta constants at quasi-period tau/2
    L(u1,u2)          (1/theta1(2z)) M(z-+u2) diag(e^{eta d}, e^{-eta d}) N(z-+u1),
                      used throughout in the sigma3-twisted convention
    S2(a)             multiplication by egamma(-+z1 -+ z2 + a + eta + tau/2)
    W(a)              integral operator over [0,1] with the elliptic-gamma
                      kernel (Gauss-Legendre quadrature, gated by doubling)
    W(eta n)          exact finite-difference factorizations (products in
                      (z)_3 or (z)_4 form, the theta-binomial sum, and the
                      generalized products with free parameters)
    R2(u)             S2(u2-u1) o W1(u2) o S2(u1)   (at v2 = 0)

Spectral bookkeeping: u1 = u/2 - eta l - eta, u2 = u/2 + eta l, so the
Baxter shift step is delta = 2 eta.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .special import (EllipticModuli, SeriesTolerance, DEFAULT_TOL,
                      PoleProximityError, jacobi_theta, theta_half,
                      elliptic_gamma, r_tau, measure_constant_C)

__all__ = [
    "EvennessError", "EllipticSpectral", "QuadratureRule",
    "th1", "th4", "h3", "h4", "theta_poly", "gaussian_theta", "gamma_family",
    "gamma_family2",
    "build_MN", "check_MN", "l_apply", "transfer_apply",
    "s2_elliptic", "w_integral_apply", "w_factorized",
    "check_w_binary", "check_annihilation",
    "check_intertwining_elliptic", "check_elliptic_recurrences",
    "build_R2_elliptic_apply", "check_cornerstone_elliptic",
    "check_local_q_formula", "check_baxter_elliptic_N1",
]

Fn = Callable[[complex], complex]


class EvennessError(ValueError):
    """The integral intertwiner acts on even functions only."""


@dataclass(frozen=True)
class EllipticSpectral:
    """Spectral/spin pair for the elliptic chain; shift step 2 eta."""

    u: complex
    ell: complex
    moduli: EllipticModuli

    def __post_init__(self):
        # u1 <-> u2 exchange must equal ell -> -ell-1 at fixed u
        eta = self.moduli.eta
        swapped_u1 = self.u / 2.0 - eta * (-self.ell - 1) - eta
        assert abs(swapped_u1 - self.u2) < 1e-12

    @property
    def u1(self) -> complex:
        eta = self.moduli.eta
        return self.u / 2.0 - eta * self.ell - eta

    @property
    def u2(self) -> complex:
        return self.u / 2.0 + self.moduli.eta * self.ell

    @property
    def delta(self) -> complex:
        return 2.0 * self.moduli.eta

    def shifted(self, k: int) -> "EllipticSpectral":
        return EllipticSpectral(self.u + k * self.delta, self.ell, self.moduli)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes/weights on [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    @staticmethod
    def gauss_legendre(m: int) -> "QuadratureRule":
        x, w = np.polynomial.legendre.leggauss(m)
        return QuadratureRule(0.5 * (x + 1.0), 0.5 * w)

    @property
    def m(self) -> int:
        return len(self.nodes)

    def doubled(self) -> "QuadratureRule":
        return QuadratureRule.gauss_legendre(2 * self.m)


# -- theta shorthands -------------------------------------------------------

def th1(z, mod: EllipticModuli):
    return jacobi_theta(1, z, mod.tau)


def th4(z, mod: EllipticModuli):
    return jacobi_theta(4, z, mod.tau)


def h3(z, mod: EllipticModuli):
    return theta_half(3, z, mod)


def h4(z, mod: EllipticModuli):
    return theta_half(4, z, mod)


def _hi(i: int, z, mod: EllipticModuli):
    return theta_half(i, z, mod)


# -- test function families --------------------------------------------------

def theta_poly(p: int, r: int, mod: EllipticModuli) -> Fn:
    """(z)_3^p (z)_4^r: even theta polynomial of order 2(p+r)."""
    return lambda z: h3(z, mod) ** p * h4(z, mod) ** r


def gaussian_theta(c: complex, p: int, r: int, mod: EllipticModuli) -> Fn:
    return lambda z: np.exp(c * np.asarray(z) ** 2) * h3(z, mod) ** p * h4(z, mod) ** r


def gamma_family(lam: complex, mu: complex, mod: EllipticModuli) -> Fn:
    """e^{-pi i z^2 / eta} egamma(z+lam+mu) egamma(z-lam+mu)
    egamma(-z+lam+mu) egamma(-z-lam+mu): the even generating-function
    profile of the module."""
    eta = mod.eta

    def f(z):
        zz = np.asarray(z, dtype=complex)
        return (np.exp(-1j * np.pi * zz ** 2 / eta)
                * elliptic_gamma(zz + lam + mu, mod)
                * elliptic_gamma(zz - lam + mu, mod)
                * elliptic_gamma(-zz + lam + mu, mod)
                * elliptic_gamma(-zz - lam + mu, mod))
    return f


def gamma_family2(w1: complex, mu1: complex, w2: complex, mu2: complex,
                  mod: EllipticModuli) -> Fn:
    """Two-pair profile e^{-pi i z^2/eta} egamma(-+z -+w1 + mu1)
    egamma(-+z -+w2 + mu2).  Against the intertwiner kernel this makes a
    six-parameter integrand; when the parameters balance to tau + 2 eta
    the [0,1] cycle is exactly the beta-integral cycle."""
    eta = mod.eta

    def f(z):
        zz = np.asarray(z, dtype=complex)
        out = np.exp(-1j * np.pi * zz ** 2 / eta)
        for (w, mu) in ((w1, mu1), (w2, mu2)):
            out = (out * elliptic_gamma(zz + w + mu, mod)
                   * elliptic_gamma(zz - w + mu, mod)
                   * elliptic_gamma(-zz + w + mu, mod)
                   * elliptic_gamma(-zz - w + mu, mod))
        return out
    return f


# -- theta matrices ----------------------------------------------------------

def build_MN(a: complex, b: complex, mod: EllipticModuli):
    """M(a-+b), N(a-+b): the 2x2 theta matrices factorizing L; they are
    inverse to each other up to 2 theta1(2a) theta1(2b)."""
    M = np.array([[h3(a - b, mod), -h3(a + b, mod)],
                  [-h4(a - b, mod), h4(a + b, mod)]], dtype=complex)
    N = np.array([[h4(a + b, mod), h3(a + b, mod)],
                  [h4(a - b, mod), h3(a - b, mod)]], dtype=complex)
    return M, N


def check_MN(mod: EllipticModuli, rng: np.random.Generator,
             n_points: int = 50) -> float:
    worst = 0.0
    for _ in range(n_points):
        a = rng.uniform(-0.8, 0.8) + 1j * rng.uniform(-0.25, 0.25)
        b = rng.uniform(-0.8, 0.8) + 1j * rng.uniform(-0.25, 0.25)
        M, N = build_MN(a, b, mod)
        target = 2.0 * th1(2 * a, mod) * th1(2 * b, mod) * np.eye(2)
        scale = max(np.abs(M @ N).max(), np.abs(target).max())
        worst = max(worst, float(np.abs(M @ N - target).max()) / scale)
    return worst


# -- L-operator as a function transformer ------------------------------------

def l_apply(s: EllipticSpectral, i: int, j: int, f: Fn, sigma3: bool = True) -> Fn:
    """Entry (i, j) of sigma3 L(u1,u2) applied to f:

        (1/theta1(2z)) [ M(z-+u2)_{i0} (N(z-+u1)_{0j} f)(z+eta)
                       + M(z-+u2)_{i1} (N(z-+u1)_{1j} f)(z-eta) ]

    with the row sign from sigma3."""
    mod = s.moduli
    eta = mod.eta
    u1, u2 = s.u1, s.u2
    sgn = -1.0 if (sigma3 and i == 1) else 1.0

    def M_entry(z, row, col):
        if row == 0:
            return h3(z - u2, mod) if col == 0 else -h3(z + u2, mod)
        return -h4(z - u2, mod) if col == 0 else h4(z + u2, mod)

    def N_entry(z, row, col):
        if row == 0:
            return h4(z + u1, mod) if col == 0 else h3(z + u1, mod)
        return h4(z - u1, mod) if col == 0 else h3(z - u1, mod)

    def out(z):
        zp, zm = z + eta, z - eta
        term_p = M_entry(z, i, 0) * N_entry(zp, 0, j) * f(zp)
        term_m = M_entry(z, i, 1) * N_entry(zm, 1, j) * f(zm)
        return sgn * (term_p + term_m) / th1(2 * z, mod)
    return out


def transfer_apply(s: EllipticSpectral, f: Fn) -> Fn:
    """One-site transfer matrix: trace of sigma3 L applied to f."""
    def out(z):
        return l_apply(s, 0, 0, f)(z) + l_apply(s, 1, 1, f)(z)
    return out


# -- S2 and the integral intertwiner ------------------------------------------

def s2_elliptic(a: complex, mod: EllipticModuli,
                tol: SeriesTolerance = DEFAULT_TOL) -> Callable:
    """Multiplication by egamma(-+z1 -+z2 + a + eta + tau/2); symmetric
    in z1 <-> z2 and even in each variable."""
    A = a + mod.eta + mod.tau / 2.0

    def val(z1, z2):
        return (elliptic_gamma(z1 + z2 + A, mod, tol)
                * elliptic_gamma(z1 - z2 + A, mod, tol)
                * elliptic_gamma(-z1 + z2 + A, mod, tol)
                * elliptic_gamma(-z1 - z2 + A, mod, tol))
    return val


_EVEN_PROBE = 0.2371 + 0.0523j


def w_integral_apply(a: complex, f: Fn, rule: QuadratureRule,
                     mod: EllipticModuli,
                     tol: SeriesTolerance = DEFAULT_TOL,
                     check_even: bool = True) -> Fn:
    """Integral intertwiner

        (W(a) f)(z) = int_0^1 dx mu(x) e^{-pi i (z^2+x^2)/eta}
                      egamma(-+z -+x - a) f(x) / egamma(-2a),
        mu(x) = C e^{2 pi i x^2/eta} / egamma(-+2x),

    realized on the Gauss-Legendre rule.  Odd inputs are rejected: the
    module is the space of even functions and the binary relation
    W(a) W(-a) = 1 holds only there."""
    if check_even:
        fp, fm = complex(f(_EVEN_PROBE)), complex(f(-_EVEN_PROBE))
        if abs(fp - fm) > 1e-8 * max(abs(fp), abs(fm), 1e-30):
            raise EvennessError("intertwiner input is not even")
    eta = mod.eta
    x = rule.nodes.astype(complex)
    C = measure_constant_C(mod, tol)
    mu = (C * np.exp(2j * np.pi * x ** 2 / eta)
          / (elliptic_gamma(2 * x, mod, tol) * elliptic_gamma(-2 * x, mod, tol)))
    fx = np.array([f(xi) for xi in x], dtype=complex)
    gamma_m2a = elliptic_gamma(-2 * a, mod, tol)
    pref = rule.weights * mu * np.exp(-1j * np.pi * x ** 2 / eta) * fx / gamma_m2a

    def out(z):
        kern = (elliptic_gamma(z + x - a, mod, tol)
                * elliptic_gamma(z - x - a, mod, tol)
                * elliptic_gamma(-z + x - a, mod, tol)
                * elliptic_gamma(-z - x - a, mod, tol))
        return complex(np.sum(pref * kern) * np.exp(-1j * np.pi * z ** 2 / eta))
    return out


# -- factorized intertwiner at integer multiples of eta -----------------------

def _diff_factor(i: int, shift: complex, mod: EllipticModuli) -> Callable[[Fn], Fn]:
    """f -> (1/theta1(2z)) [ (z-shift)_i f(z+eta) - (z+shift)_i f(z-eta) ]."""
    eta = mod.eta

    def apply(f: Fn) -> Fn:
        def out(z):
            return ((_hi(i, z - shift, mod) * f(z + eta)
                     - _hi(i, z + shift, mod) * f(z - eta)) / th1(2 * z, mod))
        return out
    return apply


def _theta1_pair(z, a, mod):
    return th1(z + a, mod) * th1(z - a, mod)


def w_factorized(n: int, variant: str, mod: EllipticModuli,
                 a_list=None) -> Callable[[Fn], Fn]:
    """W(eta n) for n in N as exact finite-difference operators.

    variant:
      product_i3 / product_i4 -- c^n (z)_i^{-n} D_0 D_1 ... D_{n-1}
        with D_k f = (1/theta1(2z))[(z-eta k)_i f(z+eta) - (z+eta k)_i f(z-eta)]
      sum -- the theta-binomial sum over shifts e^{(n-2k) eta d}
      generalized -- [prod_k theta1(z -+ a_k)]^{-1} c^n prod_k (1/theta1(2z))
        [theta1(z - eta k -+ a_k) f(z+eta) - theta1(z + eta k -+ a_k) f(z-eta)]
    """
    if n < 1:
        raise ValueError("need n >= 1")
    eta = mod.eta
    c = np.exp(1j * np.pi * eta) / r_tau(mod)

    if variant in ("product_i3", "product_i4"):
        i = 3 if variant == "product_i3" else 4

        def apply(f: Fn) -> Fn:
            g = f
            for k in range(n - 1, -1, -1):
                g = _diff_factor(i, eta * k, mod)(g)
            def out(z, g=g):
                return c ** n * g(z) / _hi(i, z, mod) ** n
            return out
        return apply

    if variant == "sum":
        def apply(f: Fn) -> Fn:
            def out(z):
                tot = 0.0 + 0.0j
                for k in range(n + 1):
                    num = th1(2 * z + 2 * eta * n - 4 * eta * k, mod)
                    den = 1.0 + 0.0j
                    for jj in range(n + 1):
                        den *= th1(2 * z - 2 * eta * k + 2 * eta * jj, mod)
                    bin_t = 1.0 + 0.0j
                    for jj in range(1, n + 1):
                        bin_t *= th1(2 * eta * jj, mod)
                    for jj in range(1, k + 1):
                        bin_t /= th1(2 * eta * jj, mod)
                    for jj in range(1, n - k + 1):
                        bin_t /= th1(2 * eta * jj, mod)
                    tot += ((-1) ** k * bin_t * num / den
                            * f(z + (n - 2 * k) * eta))
                return c ** n * tot
            return out
        return apply

    if variant == "generalized":
        aks = list(a_list) if a_list is not None else [0.0] * n
        if len(aks) != n:
            raise ValueError("generalized variant needs n parameters")

        def apply(f: Fn) -> Fn:
            def one_factor(k, g):
                def out(z, g=g, k=k):
                    ak = aks[k]
                    return ((_theta1_pair(z - eta * k, ak, mod) * g(z + eta)
                             - _theta1_pair(z + eta * k, ak, mod) * g(z - eta))
                            / th1(2 * z, mod))
                return out
            g = f
            for k in range(n - 1, -1, -1):
                g = one_factor(k, g)
            def out(z, g=g):
                pre = 1.0 + 0.0j
                for ak in aks:
                    pre *= _theta1_pair(z, ak, mod)
                return c ** n * g(z) / pre
            return out
        return apply

    raise ValueError(f"unknown intertwiner variant {variant!r}")


def check_w_binary(n: int, mod: EllipticModuli, z_samples,
                   rule: QuadratureRule) -> float:
    """Binary relation W(eta n) W(-eta n) = 1 through the two-pair
    profile family:

        W(-eta n) f = c1 g   (quadrature; f, g profiles with shifts mu_i
                              resp. mu_i + eta n, balanced so the
                              integrand is a beta integrand with all
                              Im t > 0 -- there the [0,1] cycle is exact)
        W(eta n)  g = c2 f   (exact factorized form)

    and the binary relation is c1 c2 = 1.  The pole orderings of W(b)
    and W(-b) are mutually exclusive on a fixed real cycle, so the two
    steps are verified on the profile family where each is well-defined,
    never as a literal operator composition.  The profile shifts are
    placed in the feasible balance window, which closes when
    Im(tau)/2 + (1 - n) Im(eta) <= 0."""
    a = n * mod.eta
    w1, w2 = 0.37, 0.52
    head = (mod.tau / 2.0 + (1 - n) * mod.eta).imag
    if head <= 0.04:
        raise PoleProximityError(
            f"binary-relation balance window closed for n={n} at these moduli")
    mu1 = 0.29 + 0.5j * head
    mu2 = (mod.tau + 2 * mod.eta) / 2.0 - a - mu1
    f = gamma_family2(w1, mu1, w2, mu2, mod)
    g = gamma_family2(w1, mu1 + a, w2, mu2 + a, mod)
    inner = w_integral_apply(-a, f, rule, mod)
    outer = w_factorized(n, "product_i3", mod)(g)
    r1 = np.array([complex(inner(z)) / complex(g(z)) for z in z_samples])
    r2 = np.array([complex(outer(z)) / complex(f(z)) for z in z_samples])
    const1 = float(np.abs(r1 - r1.mean()).max() / abs(r1.mean()))
    const2 = float(np.abs(r2 - r2.mean()).max() / abs(r2.mean()))
    return max(const1, const2, float(abs(r1.mean() * r2.mean() - 1.0)))


def check_annihilation(n: int, mod: EllipticModuli,
                       z_samples) -> dict:
    """W(eta n) annihilates the n-dimensional space spanned by
    (z)_3^k (z)_4^{n-1-k}; a degree-n theta monomial is the negative
    control."""
    op = w_factorized(n, "product_i3", mod)
    control = np.array([complex(op(theta_poly(n, 0, mod))(z)) for z in z_samples])
    scale = np.abs(control).max()
    worst = 0.0
    for k in range(n):
        img = np.array([complex(op(theta_poly(k, n - 1 - k, mod))(z))
                        for z in z_samples])
        worst = max(worst, float(np.abs(img).max()) / scale)
    return {"kernel_residual": worst,
            "control_min": float(np.abs(control).min()) / scale}


def check_intertwining_elliptic(a: complex, mod: EllipticModuli,
                                f: Fn, z_samples, rule: QuadratureRule | None,
                                n: int | None = None) -> float:
    """W(a) L(0,a) = L(a,0) W(a) applied to an even test function; the
    factorized form is used at a = eta n, quadrature otherwise."""
    if n is not None:
        Wop = w_factorized(n, "product_i3", mod)
        W = lambda g: Wop(g)
    else:
        W = lambda g: w_integral_apply(a, g, rule, mod)
    # untwisted L here; the sigma3 factor cancels between the two sides
    s_left = _spectral_from_pair(0.0, a, mod)
    s_right = _spectral_from_pair(a, 0.0, mod)
    worst = 0.0
    scale = 0.0
    for i in range(2):
        for j in range(2):
            lf = W(l_apply(s_left, i, j, f, sigma3=False))
            rf = l_apply(s_right, i, j, W(f), sigma3=False)
            for z in z_samples:
                lv, rv = complex(lf(z)), complex(rf(z))
                worst = max(worst, abs(lv - rv))
                scale = max(scale, abs(lv), abs(rv))
    return worst / scale


def _spectral_from_pair(u1: complex, u2: complex,
                        mod: EllipticModuli) -> EllipticSpectral:
    """Invert u1 = u/2 - eta l - eta, u2 = u/2 + eta l."""
    eta = mod.eta
    u = u1 + u2 + eta
    ell = (u2 - u1 - eta) / (2 * eta)
    return EllipticSpectral(u, ell, mod)


def check_elliptic_recurrences(mod: EllipticModuli, a: complex,
                               f: Fn, f2: Fn, z_samples,
                               rule: QuadratureRule,
                               rng: np.random.Generator) -> dict:
    """Argument-shift recurrences of the elliptic intertwiners.

    Pointwise multiplication identities (the S2 shifts and the theta
    proof-step) evaluate exactly; the W-recurrences go through the
    quadrature intertwiner and are gated at quadrature accuracy.  The
    matrix forms are the i = 3 and i = 4 components plus the column/row
    relations checked here."""
    eta = mod.eta
    R = r_tau(mod)
    out = {}

    # theta proof-step: (z+b)_i th1(z+-x-b) - (z-b)_i th1(-z+-x-b)
    #                   = (x)_i th1(2z) th1(-2b)
    worst = 0.0
    for _ in range(100):
        z, x, b = (rng.uniform(-0.8, 0.8) + 1j * rng.uniform(-0.3, 0.3)
                   for _ in range(3))
        for i in (3, 4):
            lhs = (_hi(i, z + b, mod) * th1(z + x - b, mod) * th1(z - x - b, mod)
                   - _hi(i, z - b, mod) * th1(-z + x - b, mod) * th1(-z - x - b, mod))
            rhs = _hi(i, x, mod) * th1(2 * z, mod) * th1(-2 * b, mod)
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30))
    out["theta_step"] = worst

    # S2 shift relations (pure multiplication, exact)
    s2a = s2_elliptic(a, mod)
    s2p = s2_elliptic(a + eta, mod)
    s2m = s2_elliptic(a - eta, mod)
    w1 = w2 = w3 = 0.0
    for _ in range(12):
        z1, z2 = (rng.uniform(-0.6, 0.6) + 1j * rng.uniform(-0.2, 0.2)
                  for _ in range(2))
        shifted = s2a(z1, z2 + eta)
        c1 = (-np.exp(-1j * np.pi * mod.tau / 2.0) / R ** 2
              / (th4(z1 - z2 + a, mod) * th4(-z1 - z2 + a, mod)))
        w1 = max(w1, abs(shifted - c1 * s2p(z1, z2)) / abs(shifted))
        c2 = (-np.exp(1j * np.pi * mod.tau / 2.0) * R ** 2
              * th4(z1 + z2 + a, mod) * th4(-z1 + z2 + a, mod))
        w2 = max(w2, abs(shifted - c2 * s2m(z1, z2)) / abs(shifted))
        shifted_m = s2a(z1, z2 - eta)
        c3 = (-np.exp(1j * np.pi * mod.tau / 2.0) * R ** 2
              * th4(z1 - z2 + a, mod) * th4(-z1 - z2 + a, mod))
        w3 = max(w3, abs(shifted_m - c3 * s2m(z1, z2)) / abs(shifted_m))
    out["s2_shift_up"] = w1
    out["s2_shift_down"] = w2
    out["s2_shift_down_rev"] = w3

    # W-recurrences, both theta kinds.  The right-acting shift relation is
    # a kernel identity and holds for the quadrature realization on any
    # common contour; the left-acting one requires translating the
    # integration cycle, so it is verified in the exact factorized form
    # at a = 2 eta instead.
    cpe = R * np.exp(-1j * np.pi * eta)
    Wa = lambda g: w_integral_apply(a, g, rule, mod)
    Wp = lambda g: w_integral_apply(a + eta, g, rule, mod)
    Wm = lambda g: w_integral_apply(a - eta, g, rule, mod)
    Wf1 = w_factorized(1, "product_i3", mod)
    Wf2 = w_factorized(2, "product_i3", mod)
    for i in (3, 4):
        lhs_f = Wf2(f)
        rhs_f = Wf1(_diff_factor(i, eta, mod)(f))
        reca = 0.0
        for z in z_samples:
            lv = cpe * _hi(i, z, mod) * complex(lhs_f(z))
            rv = complex(rhs_f(z))
            reca = max(reca, abs(lv - rv) / max(abs(lv), abs(rv)))
        out[f"rec_raise_left_i{i}"] = reca
        Wif = Wp(lambda y, i=i: _hi(i, y, mod) * f(y))
        Wfq = Wa(f)
        recb = 0.0
        for z in z_samples:
            lv = cpe * complex(Wif(z))
            rv = ((_hi(i, z + a + eta, mod) * complex(Wfq(z + eta))
                   - _hi(i, z - a - eta, mod) * complex(Wfq(z - eta)))
                  / th1(2 * z, mod))
            recb = max(recb, abs(lv - rv) / max(abs(lv), abs(rv)))
        out[f"rec_raise_right_i{i}"] = recb

    # lowering, column form: -2 R^{-1} e^{i pi eta} th1(2a) W(a-eta) (1 1)^T
    #   = diag(shift+, shift-) N(z -+ a) W(a) ((.)_3, -(.)_4)^T
    v0 = Wa(lambda y: h3(y, mod) * f(y))
    v1 = Wa(lambda y: -h4(y, mod) * f(y))
    wm = Wm(f)
    cm = -2.0 * np.exp(1j * np.pi * eta) / R * th1(2 * a, mod)
    rec1 = 0.0
    for z in z_samples:
        lv = cm * wm(z)
        r0 = (h4(z + eta + a, mod) * v0(z + eta)
              + h3(z + eta + a, mod) * v1(z + eta))
        r1 = (h4(z - eta - a, mod) * v0(z - eta)
              + h3(z - eta - a, mod) * v1(z - eta))
        rec1 = max(rec1, abs(lv - r0) / max(abs(lv), abs(r0)),
                   abs(lv - r1) / max(abs(lv), abs(r1)))
    out["rec_lower_column"] = rec1

    # lowering, row form: the row ((z)_4, (z)_3) W(a) L(0, a) vanishes
    # identically (the linear-dependence statement behind the row
    # relation); exact factorized W at a = 2 eta
    s0a = _spectral_from_pair(0.0, 2 * eta, mod)
    rec2 = 0.0
    for j in range(2):
        w0 = Wf2(l_apply(s0a, 0, j, f, sigma3=False))
        w1 = Wf2(l_apply(s0a, 1, j, f, sigma3=False))
        for z in z_samples:
            t0 = h4(z, mod) * complex(w0(z))
            t1 = h3(z, mod) * complex(w1(z))
            rec2 = max(rec2, abs(t0 + t1) / max(abs(t0), abs(t1)))
    out["rec_lower_row_kill"] = rec2
    return out


def build_R2_elliptic_apply(s: EllipticSpectral, f2d, rule: QuadratureRule,
                            z2: complex, fact_n: int | None = None):
    """R2(u) = S2(u2-u1) o W1(u2) o S2(u1) at v2 = 0, applied to a
    function of (z1, z2) with z2 a spectator; returns a function of z1.

    W1 acts in z1 through the quadrature rule (or the factorized form
    when u2 = eta n is requested via fact_n)."""
    mod = s.moduli
    outer = s2_elliptic(s.u2 - s.u1, mod)
    inner = s2_elliptic(s.u1, mod)

    def g(x):  # the function W1 acts on
        return inner(x, z2) * f2d(x, z2)

    if fact_n is not None:
        wg = w_factorized(fact_n, "product_i3", mod)(g)
    else:
        wg = w_integral_apply(s.u2, g, rule, mod)

    def out(z1):
        return outer(z1, z2) * wg(z1)
    return out


def check_cornerstone_elliptic(s: EllipticSpectral, rule: QuadratureRule,
                               f: Fn, samples) -> dict:
    """Local triangular relation behind the elliptic Baxter equation:
    conjugating R2(u) sigma3 L1(u1,u2) with the theta-entry matrices
    leaves a lower-triangular 2x2 block matrix with
    kappa^{-1}- and -kappa theta1(2u1) theta1(2u2)-scaled shifted R2 on
    the diagonal, kappa = -R(tau) e^{i pi eta + i pi tau/2}.

    The intertwiner inside each R2 block must act exactly, so the check
    runs at u2 = n eta (n >= 2 so the u +- 2 eta shifts stay at positive
    integer multiples) with the factorized finite-difference form; the
    finite [0,1] quadrature cycle represents the intertwiner only on
    balanced beta integrands, which the L-dressed inputs are not."""
    mod = s.moduli
    R = r_tau(mod)
    kappa = -R * np.exp(1j * np.pi * mod.eta + 1j * np.pi * mod.tau / 2.0)

    def fact_order(sp: EllipticSpectral) -> int:
        ratio = sp.u2 / mod.eta
        n = int(round(ratio.real))
        if abs(ratio - n) > 1e-9 or n < 1:
            raise ValueError(
                f"cornerstone check needs u2 = n eta with n >= 1, got u2/eta={ratio}")
        return n

    def r2_apply(sp: EllipticSpectral, g: Fn, z2: complex) -> Fn:
        return build_R2_elliptic_apply(sp, lambda x, _z2: g(x), rule, z2,
                                       fact_n=fact_order(sp))

    out = {"lower_left": 0.0, "upper_diag": 0.0, "lower_diag": 0.0}
    scale_ll = 0.0
    for (z1, z2) in samples:
        Lf = {(i, j): l_apply(s, i, j, f) for i in range(2) for j in range(2)}
        RL = {k: r2_apply(s, Lf[k], z2) for k in Lf}
        h3z1, h4z1 = h3(z1, mod), h4(z1, mod)
        h3z2, h4z2 = h3(z2, mod), h4(z2, mod)
        # entries of B (R2 sigma3 L) C with B = [[1,0],[(z1)_4, -(z1)_3]],
        # C = [[(z2)_3, 0], [(z2)_4, -1]]
        G11 = h3z2 * RL[(0, 0)](z1) + h4z2 * RL[(0, 1)](z1)
        G21 = (h4z1 * (h3z2 * RL[(0, 0)](z1) + h4z2 * RL[(0, 1)](z1))
               - h3z1 * (h3z2 * RL[(1, 0)](z1) + h4z2 * RL[(1, 1)](z1)))
        G22 = -h4z1 * RL[(0, 1)](z1) + h3z1 * RL[(1, 1)](z1)

        # lower diagonal: the sign in front of kappa is pinned numerically
        # by coefficient fits (machine-precision consistent across draws);
        # the displayed matrix omits it
        up = 2.0 / kappa * h3z1 * r2_apply(s.shifted(1), f, z2)(z1)
        dn = (-2.0 * kappa * th1(2 * s.u1, mod) * th1(2 * s.u2, mod)
              * h3z2 * r2_apply(s.shifted(-1), f, z2)(z1))
        out["upper_diag"] = max(out["upper_diag"],
                                abs(G11 - up) / max(abs(G11), abs(up)))
        out["lower_diag"] = max(out["lower_diag"],
                                abs(G22 - dn) / max(abs(G22), abs(dn)))
        out["lower_left"] = max(out["lower_left"], abs(G21))
        scale_ll = max(scale_ll, abs(G11), abs(G22))
    out["lower_left"] /= scale_ll
    return out


def check_local_q_formula(s: EllipticSpectral, rule: QuadratureRule,
                          samples) -> float:
    """Closed action of R2 on the one-site generating profile:

        R2(u) e^{-pi i z1^2/eta} egamma(-+z1 -+z3 + 2 eta l + eta)
        = c e^{-pi i z1^2/eta} egamma(-+z1 -+z3 - u/2 + eta l + eta)
            egamma(-+z2 -+z3 + u/2 + eta l + eta + tau/2),
        c = egamma(4 eta l + 2 eta) / egamma(-u + 2 eta l + 2 eta).
    """
    mod = s.moduli
    eta = mod.eta

    def gam4(z, w, shift):
        return (elliptic_gamma(z + w + shift, mod)
                * elliptic_gamma(z - w + shift, mod)
                * elliptic_gamma(-z + w + shift, mod)
                * elliptic_gamma(-z - w + shift, mod))

    worst = 0.0
    for (z1, z2, z3) in samples:
        f = lambda x, _z2: (np.exp(-1j * np.pi * x ** 2 / eta)
                            * gam4(x, z3, 2 * eta * s.ell + eta))
        lhs = build_R2_elliptic_apply(s, f, rule, z2)(z1)
        c = (elliptic_gamma(4 * eta * s.ell + 2 * eta, mod)
             / elliptic_gamma(-s.u + 2 * eta * s.ell + 2 * eta, mod))
        rhs = (c * np.exp(-1j * np.pi * z1 ** 2 / eta)
               * gam4(z1, z3, -s.u / 2 + eta * s.ell + eta)
               * gam4(z2, z3, s.u / 2 + eta * s.ell + eta + mod.tau / 2))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    return worst


def check_baxter_elliptic_N1(s: EllipticSpectral, samples) -> dict:
    """One-site Baxter closure: with the closed-form renormalized Q-action
    on the generating profile G_lam,

        t(u) Q(u) G = D+(u) Q(u+2 eta) G + D-(u) Q(u-2 eta) G,
        D+-(u) = 2 e^{-i pi eta} e^{-+(i pi u - 2 i pi eta l + i pi tau/2)}
                 theta1(u -+ 2 eta l),

    verified pointwise at (z, lam) samples."""
    mod = s.moduli
    eta = mod.eta

    def gam4(z, w, shift):
        return (elliptic_gamma(z + w + shift, mod)
                * elliptic_gamma(z - w + shift, mod)
                * elliptic_gamma(-z + w + shift, mod)
                * elliptic_gamma(-z - w + shift, mod))

    def QG(uu):
        def g(z, lam):
            return (np.exp(-1j * np.pi * z ** 2 / eta)
                    * gam4(z, lam, uu / 2 + eta * s.ell + eta + mod.tau / 2)
                    * gam4(z, lam, -uu / 2 + eta * s.ell + eta))
        return g

    def Dpm(sign):
        # the lower coefficient carries an extra (-1); pinned by solving
        # for both coefficients from sample triples (residual ~1e-15)
        ph = 1j * np.pi * s.u - 2j * np.pi * eta * s.ell + 1j * np.pi * mod.tau / 2
        return (sign * 2.0 * np.exp(-1j * np.pi * eta) * np.exp(-sign * ph)
                * th1(s.u - sign * 2 * eta * s.ell, mod))

    g0, gp, gm = QG(s.u), QG(s.u + 2 * eta), QG(s.u - 2 * eta)
    dp, dm = Dpm(+1), Dpm(-1)
    worst = 0.0
    sym = abs(th1(2 * s.u1, mod) * th1(2 * s.u2, mod)
              - th1(2 * s.u2, mod) * th1(2 * s.u1, mod))
    for (z, lam) in samples:
        lhs = transfer_apply(s, lambda y, lam=lam: g0(y, lam))(z)
        rhs = dp * gp(z, lam) + dm * gm(z, lam)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    return {"baxter_n1": worst, "delta_symmetry": sym}
