"""Check registry: every identity the toolkit verifies, with default
tolerances and deterministic parameter draws.

Each runner draws its random parameters from the generator it is handed
(seeded per check id by the harness), inside boxes that respect the
guard distances and convergence regions worked out in the operator
modules: spins stay off the degenerate set 2l+1 in N, first-Baxter-
operator contractions stay in their convergent half-plane, and the
elliptic quadrature checks stay where the [0,1] cycle represents the
intertwiner.
"""

from __future__ import annotations

import numpy as np

from .special import (NomeQ, EllipticModuli, jacobi_theta, theta_half,
                      elliptic_gamma, r_tau, measure_constant_C,
                      qpoch_infinite, qpoch_finite, qbinomial_ratio, qpow, cpow)
from .ladder import (Ladder, ladder_compose, ladder_residual, LatticeMatrix,
                     check_weyl_identities, nilpotent_qexp, mat_rel_residual,
                     commutator_residual, qexp_series_coeffs)
from . import trig as tg
from . import elliptic as el
from .harness import register

_TINY = 1e-300


def _q(params) -> NomeQ:
    return NomeQ(params["trig.q"])


def _moduli(params) -> EllipticModuli:
    return EllipticModuli(params["elliptic.tau"], params["elliptic.eta"])


def _rule(params) -> el.QuadratureRule:
    return el.QuadratureRule.gauss_legendre(params["elliptic.M"])


def _draw_box(rng, re_lo, re_hi, im_lo, im_hi):
    return complex(rng.uniform(re_lo, re_hi), rng.uniform(im_lo, im_hi))


def _draw_spin(rng, q: NomeQ, re_lo=-1.1, re_hi=0.6, im=0.35):
    for _ in range(64):
        ell = _draw_box(rng, re_lo, re_hi, -im, im)
        two = 2 * ell + 1
        if abs(two.imag) > 1e-3 or abs(two.real - round(two.real)) > 1e-3 \
                or round(two.real) < 0:
            return ell
    raise RuntimeError("spin draw failed")


def _zsamples(rng, n, re_lo=0.08, re_hi=0.45, im=0.03):
    return [_draw_box(rng, re_lo, re_hi, -im, im) for _ in range(n)]


def _relmax(diffs, scales):
    return float(np.max(diffs) / max(np.max(scales), _TINY))


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

@register("special.theta_bilinear",
          "2 th1(x+y) th1(x-y) = (x)4 (y)3 - (y)4 (x)3 and the th4 analog "
          "(100 random points); the convention gate for every elliptic check",
          1e-12)
def _theta_bilinear(params, rng):
    mod = _moduli(params)
    worst = 0.0
    for _ in range(100):
        x = _draw_box(rng, -1, 1, -0.4, 0.4)
        y = _draw_box(rng, -1, 1, -0.4, 0.4)
        l1 = 2 * el.th1(x + y, mod) * el.th1(x - y, mod)
        r1 = el.h4(x, mod) * el.h3(y, mod) - el.h4(y, mod) * el.h3(x, mod)
        l4 = 2 * el.th4(x + y, mod) * el.th4(x - y, mod)
        r4 = el.h4(x, mod) * el.h3(y, mod) + el.h4(y, mod) * el.h3(x, mod)
        worst = max(worst,
                    abs(l1 - r1) / max(abs(l1), abs(r1)),
                    abs(l4 - r4) / max(abs(l4), abs(r4)))
    return {"residual": worst, "parameters": {"points": 100}}


@register("special.theta_triple",
          "(y)_i th1(x+-z) - (x)_i th1(y+-z) = (z)_i th1(x+-y), i = 3, 4",
          1e-12)
def _theta_triple(params, rng):
    mod = _moduli(params)
    worst = 0.0
    for _ in range(100):
        x, y, z = (_draw_box(rng, -1, 1, -0.4, 0.4) for _ in range(3))
        for i in (3, 4):
            hi = lambda w: theta_half(i, w, mod)
            lhs = (hi(y) * el.th1(x + z, mod) * el.th1(x - z, mod)
                   - hi(x) * el.th1(y + z, mod) * el.th1(y - z, mod))
            rhs = hi(z) * el.th1(x + y, mod) * el.th1(x - y, mod)
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    return {"residual": worst, "parameters": {"points": 100}}


@register("special.theta_quasiperiod",
          "th1(z+1) = -th1(z); parity of all four theta kinds; the "
          "half-quasi-period shift th1(z + tau/2) = i e^{-i pi z - i pi tau/4} th4(z)",
          1e-12)
def _theta_quasi(params, rng):
    mod = _moduli(params)
    worst = 0.0
    for _ in range(25):
        z = _draw_box(rng, -1, 1, -0.4, 0.4)
        a = el.th1(z + 1, mod) + el.th1(z, mod)
        worst = max(worst, abs(a) / abs(el.th1(z, mod)))
        for kind, sgn in ((1, -1), (2, 1), (3, 1), (4, 1)):
            v = jacobi_theta(kind, z, mod.tau)
            w = jacobi_theta(kind, -z, mod.tau)
            worst = max(worst, abs(w - sgn * v) / max(abs(v), _TINY))
        lhs = el.th1(z + mod.tau / 2, mod)
        rhs = (1j * np.exp(-1j * np.pi * z - 1j * np.pi * mod.tau / 4)
               * el.th4(z, mod))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return {"residual": worst, "parameters": {"points": 25}}


@register("special.gamma_shift",
          "egamma(z + 2 eta) = R(tau) e^{i pi z} th1(z) egamma(z) on a "
          "10 x 10 grid off the pole lattices; periodicity and "
          "quasi-period exchange of the double product",
          1e-10)
def _gamma_shift(params, rng):
    mod = _moduli(params)
    R = r_tau(mod)
    worst = 0.0
    for re in np.linspace(-0.8, 0.8, 10):
        for im in np.linspace(-0.2, 0.2, 10):
            z = complex(re, im)
            lhs = elliptic_gamma(z + 2 * mod.eta, mod)
            rhs = R * np.exp(1j * np.pi * z) * el.th1(z, mod) * elliptic_gamma(z, mod)
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    z = _draw_box(rng, -0.5, 0.5, -0.2, 0.2)
    g = elliptic_gamma(z, mod)
    worst = max(worst, abs(elliptic_gamma(z + 1, mod) - g) / abs(g))
    swapped = EllipticModuli(2 * mod.eta, mod.tau / 2)
    worst = max(worst, abs(elliptic_gamma(z, swapped) - g) / abs(g))
    return {"residual": worst, "parameters": {"grid": "10x10"}}


@register("special.qbinomial",
          "(a z;q^2)/(z;q^2) equals the basic hypergeometric sum "
          "sum_n (a;q^2)_n/(q^2;q^2)_n z^n for |z| <= 1/2",
          1e-12)
def _qbinom(params, rng):
    q = _q(params)
    worst = 0.0
    for _ in range(30):
        a = qpow(q, -2 * _draw_box(rng, -0.9, 0.9, -0.3, 0.3))
        z = 0.5 * rng.uniform(0.1, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        prod = qbinomial_ratio(a, z, q)
        acc = 0.0 + 0.0j
        num = 1.0 + 0.0j
        den = 1.0 + 0.0j
        for n in range(64):
            acc += num / den * z ** n
            num *= 1 - a * q.qsq ** n
            den *= 1 - q.qsq ** (n + 1)
        worst = max(worst, abs(prod - acc) / max(abs(prod), abs(acc)))
    return {"residual": worst, "parameters": {"points": 30}}


# ---------------------------------------------------------------------------
# ladder algebra
# ---------------------------------------------------------------------------

@register("ladder.weyl",
          "Schuetzenberger (u;q^2)(v;q^2) = (u+v;q^2) and the pentagon "
          "(v;)(u;) = (u;)(-vu;)(v;) for the Weyl pair u = (z2/z1) q, "
          "v = q^{2 z1 d1 + 2}, per ladder step up to J_max; the "
          "swapped-order pentagon must fail (negative control)",
          1e-12)
def _weyl(params, rng):
    q = _q(params)
    res = check_weyl_identities(q, j_max=params["trig.j_max"])
    bad = max(res["schuetzenberger"], res["pentagon"])
    if res["swapped_pentagon_control"] < 1e-3:
        bad = float("inf")
    return {"residual": bad, **{k: float(v) for k, v in res.items()},
            "parameters": {"q": params["trig.q"], "j_max": params["trig.j_max"]}}


@register("ladder.w_group",
          "W(a) W(-a) = 1 and the exponential law W(a) W(b) = W(a+b) as "
          "diagonal ladder identities",
          1e-12)
def _wgroup(params, rng):
    q = _q(params)
    a = _draw_box(rng, -0.9, 0.9, -0.3, 0.3)
    b = _draw_box(rng, -0.9, 0.9, -0.3, 0.3)
    W = lambda x: tg.ladder_from_W(x, q)
    r1 = ladder_residual(ladder_compose(W(a), W(-a)), Ladder.identity())
    r2 = ladder_residual(ladder_compose(W(a), W(b)), W(a + b))
    return {"residual": max(r1, r2), "parameters": {"a": a, "b": b}}


@register("ladder.associativity",
          "ladder composition is associative: (A B) C = A (B C) on "
          "coefficient tables, including non-integer offsets",
          1e-13)
def _assoc(params, rng):
    q = _q(params)
    a = _draw_box(rng, -0.8, 0.8, -0.3, 0.3)
    A = tg.ladder_from_W(a, q)
    B = tg.ladder_from_S2(_draw_box(rng, -0.8, 0.8, -0.3, 0.3), q, 20)
    C = Ladder.single((0, 1), lambda m, n: 1.0 + 0.3 * n)
    lhs = ladder_compose(ladder_compose(A, B), C)
    rhs = ladder_compose(A, ladder_compose(B, C))
    return {"residual": ladder_residual(lhs, rhs, depth=params["trig.j_max"]),
            "parameters": {"a": a}}


@register("ladder.matrix_realization",
          "realizing ladders on the truncated lattice commutes with "
          "composition on overflow-free columns",
          1e-13)
def _realize(params, rng):
    q = _q(params)
    D = 6
    A = Ladder.single((-1, 1), lambda m, n: 1.0 - qpow(q, -2 * m))
    B = Ladder((0.0, 0.0), {(0, 0): lambda m, n: qpow(q, m + n),
                            (-1, 1): lambda m, n: 0.5 * (1 - qpow(q, 2 * m))})
    MA = LatticeMatrix.from_pair_ladder(A, (0, 1), (D, D))
    MB = LatticeMatrix.from_pair_ladder(B, (0, 1), (D, D))
    MAB = LatticeMatrix.from_pair_ladder(ladder_compose(A, B), (0, 1), (D, D))
    prod = MA @ MB
    safe = prod.triangle_cols(D)
    return {"residual": mat_rel_residual(MAB, prod, cols=safe),
            "parameters": {"D": D}}


@register("ladder.nilpotent_qexp",
          "q-exponential of the nilpotent lowering operator ubar: "
          "ubar^2 z1 = 0, the closed coefficient of ubar^k on monomials, "
          "and (x ubar;q^2)(x ubar;q^2)^{-1} = 1 on the lattice",
          1e-12)
def _nilp(params, rng):
    q = _q(params)
    D = 6
    ub = tg.ubar_matrix((D, D), (0, 1), q)
    x = qpow(q, 1 + _draw_box(rng, -0.6, 0.6, -0.2, 0.2))
    # the inverse product is checked on a small lattice: the lowering
    # entries grow like |q|^{-2mk} and the cancellation costs digits
    ub3 = tg.ubar_matrix((3, 3), (0, 1), q)
    P = nilpotent_qexp(x, ub3, q, inverted=False)
    Pinv = nilpotent_qexp(x, ub3, q, inverted=True)
    eye = LatticeMatrix.identity((3, 3))
    r1 = mat_rel_residual(P @ Pinv, eye)
    # ubar^2 annihilates z1^1
    col = ub.index((1, 0))
    v = ub.data @ ub.data[:, col]
    r2 = float(np.abs(v).max())
    # closed coefficient of ubar^k z1^m
    worst = 0.0
    for m in range(D + 1):
        vec = np.zeros(ub.dim, complex)
        vec[ub.index((m, 0))] = 1.0
        for k in range(1, m + 1):
            vec = ub.data @ vec
            coef = vec[ub.index((m - k, k))]
            ref = ((-1) ** k * qpow(q, k * (k - 1) - 2 * m * k)
                   * np.prod([1 - q.qsq ** (m - i) for i in range(k)]))
            worst = max(worst, abs(coef - ref) / max(abs(ref), 1e-12))
    return {"residual": max(r1, r2, worst), "parameters": {"D": D}}


# ---------------------------------------------------------------------------
# trigonometric chain
# ---------------------------------------------------------------------------

@register("trig.defining",
          "the elementary permutation operators intertwine products of "
          "L-operators: W2 swaps (v1,v2), S2 swaps u1 <-> v2 across sites, "
          "W1 swaps (u1,u2)",
          1e-12)
def _defining(params, rng):
    q = _q(params)
    u1 = _draw_box(rng, -1.2, 1.2, -0.4, 0.4)
    u2 = _draw_box(rng, -1.2, 1.2, -0.4, 0.4)
    v1 = _draw_box(rng, -1.2, 1.2, -0.4, 0.4)
    v2 = _draw_box(rng, -1.2, 1.2, -0.4, 0.4)
    res = tg.check_S_defining(q, u1, u2, v1, v2, j_max=params["trig.j_max"])
    return {"residual": max(res.values()), **res,
            "parameters": {"u1": u1, "u2": u2, "v1": v1, "v2": v2}}


@register("trig.coxeter",
          "triple Coxeter relations for the elementary permutations, the "
          "binary relations, the exponential law of W, and the equality "
          "of the two factorized forms of the pair permutation block "
          "(5 seeded draws, per-step up to J_max)",
          1e-12)
def _coxeter(params, rng):
    q = _q(params)
    worst = 0.0
    draws = []
    for _ in range(5):
        a = _draw_box(rng, -0.9, 0.9, -0.3, 0.3)
        b = _draw_box(rng, -0.9, 0.9, -0.3, 0.3)
        res = tg.check_coxeter_trig(q, a, b, j_max=params["trig.j_max"])
        worst = max(worst, max(res.values()))
        draws.append((a, b))
    return {"residual": worst, "parameters": {"draws": 5}}


@register("trig.recurrences",
          "argument-shift recurrences of W and S2 and the two matrix "
          "relations feeding the Baxter derivation",
          1e-12)
def _recur(params, rng):
    q = _q(params)
    for _ in range(64):
        # Re a >= -0.25 keeps the shift-series coefficients decaying (the
        # conditioning of the mixed-step comparison follows |q^{(1+a) j}|)
        a = _draw_box(rng, -0.25, 0.8, -0.3, 0.3)
        if abs(qpow(q, 2 * a) - 1.0) > 0.25:
            break
    res = tg.check_recurrences_trig(q, a, j_max=params["trig.j_max"])
    return {"residual": max(res.values()), **res, "parameters": {"a": a}}


@register("trig.w_kernel",
          "W(n) annihilates z^k for k < n and nothing above: the "
          "invariant subspace at (half-)integer spin",
          1e-12)
def _wker(params, rng):
    q = _q(params)
    worst = 0.0
    for n in (1, 2, 3, 4):
        res = tg.check_W_kernel(q, n, D=params["trig.D"])
        worst = max(worst, res["kernel_residual"])
        if res["kernel_dim"] != n:
            worst = float("inf")
    return {"residual": worst, "parameters": {"n": [1, 2, 3, 4]}}


@register("trig.r2_forms",
          "pair permutation block: 4-factor nilpotent form vs 2-factor "
          "form (inverse-free arrangement), the closed constant of its "
          "vacuum action, and commutation with the second variable",
          1e-13)
def _r2forms(params, rng):
    q = _q(params)
    D = 6
    ell = _draw_spin(rng, q)
    s = tg.TrigSpectral(_draw_box(rng, -1.0, 1.0, -0.4, 0.4), ell)
    r_two = tg.r2_two_factor_residual(s.u1, s.u2, 0.0, q, D=D)
    R2 = tg.build_R2_trig(s.u1, s.u2, 0.0, q, (D, D))
    one = np.zeros(R2.dim, complex)
    one[R2.index((0, 0))] = 1.0
    img = R2.data @ one
    cref = tg.q_renorm_constant(s, q)
    r_const = abs(img[R2.index((0, 0))] - cref) / abs(cref)
    z2m = LatticeMatrix.from_site_ladder(
        Ladder.single((1, 0), lambda m, n: 1.0), 1, (D, D))
    r_comm = commutator_residual(R2, z2m, cols=R2.triangle_cols(D - 1))
    return {"residual": max(r_two, r_const, r_comm),
            "two_vs_four": r_two, "vacuum_constant": float(r_const),
            "z2_commutation": r_comm,
            "parameters": {"u": s.u, "ell": ell, "D": D}}


@register("trig.r_orders",
          "the two factorization orders of the general R-operator agree; "
          "R at coinciding parameter pairs is the identity",
          1e-13)
def _rorders(params, rng):
    q = _q(params)
    D = 6
    us = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), _draw_spin(rng, q))
    vs = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), _draw_spin(rng, q))
    Ra = tg.build_R_general(us, vs, q, (D, D), order=1)
    Rb = tg.build_R_general(us, vs, q, (D, D), order=2)
    safe = Ra.triangle_cols(D)
    r1 = mat_rel_residual(Ra, Rb, cols=safe)
    Rid = tg.build_R_general(us, us, q, (D, D), order=1)
    r2 = mat_rel_residual(Rid, LatticeMatrix.identity((D, D)), cols=safe)
    return {"residual": max(r1, r2), "order_agreement": r1, "identity_point": r2,
            "parameters": {"u": us.u, "v": vs.u}}


@register("trig.ybe",
          "Yang-Baxter relation for the permuted general R-operator on "
          "three generic spins, blockwise per conserved total degree",
          1e-12)
def _ybe(params, rng):
    q = _q(params)
    D = 6
    ells = tuple(_draw_spin(rng, q) for _ in range(3))
    u = _draw_box(rng, -1, 1, -0.4, 0.4)
    v = _draw_box(rng, -1, 1, -0.4, 0.4)
    res = tg.check_YBE(q, u, v, ells, D=D)
    return {"residual": max(res.values()), **{k: float(x) for k, x in res.items()},
            "parameters": {"u": u, "v": v, "D": D}}


@register("trig.rll",
          "the general R-operator permutes the parameter pairs of a "
          "product of two L-operators",
          1e-12)
def _rll(params, rng):
    q = _q(params)
    us = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), _draw_spin(rng, q))
    vs = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), _draw_spin(rng, q))
    r = tg.check_RLL(q, us, vs, D=6)
    return {"residual": r, "parameters": {"u": us.u, "v": vs.u}}


@register("trig.baxter",
          "t(u) Q(u) = Dp Q(u+1) + Dm Q(u-1) in both normalizations, "
          "N = 1, 2 at D and N = 3 at D = 6, on safe blocks",
          1e-10)
def _baxter(params, rng):
    q = _q(params)
    worst = 0.0
    cases = []
    for N, D in ((1, params["trig.D"]), (2, params["trig.D"]), (3, 6)):
        cfg = tg.ChainConfig(N=N, D=D, q=q, j_max=params["trig.j_max"])
        s = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), _draw_spin(rng, q))
        res = tg.check_baxter_trig(s, cfg)
        worst = max(worst, res["baxter_raw"], res["baxter_renormalized"],
                    res["delta_symmetry"])
        cases.append({"N": N, "D": D, **{k: float(v) for k, v in res.items()}})
    return {"residual": worst, "cases": cases, "parameters": {}}


@register("trig.cornerstone",
          "local triangular relation: conjugated R2 L is lower triangular "
          "with -q^{-1/2} R2(u+1) and -q^{1/2} Delta R2(u-1) on the diagonal",
          1e-11)
def _cornerstone(params, rng):
    q = _q(params)
    s = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), _draw_spin(rng, q))
    res = tg.check_cornerstone_trig(s, q, D=params["trig.D"])
    return {"residual": max(res.values()), **res,
            "parameters": {"u": s.u, "ell": s.ell}}


@register("trig.q_cross",
          "the Baxter operator from the cyclic trace contraction equals "
          "the one extracted from the closed generating-function action, "
          "after the vacuum normalization, N = 1 and 2",
          1e-10)
def _qcross(params, rng):
    q = _q(params)
    worst = 0.0
    for N in (1, 2):
        cfg = tg.ChainConfig(N=N, D=params["trig.D"], q=q)
        s = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4),
                            _draw_spin(rng, q, re_lo=-0.8, re_hi=0.3))
        Qg = tg.build_Q_gen(s, cfg)
        Qt = tg.build_Q_trace(s, cfg)
        c = tg.q_renorm_constant(s, q) ** N
        safe = Qg.triangle_cols(cfg.D)
        worst = max(worst, mat_rel_residual(Qg, Qt.scaled(1.0 / c), cols=safe))
    return {"residual": worst, "parameters": {"D": params["trig.D"]}}


@register("trig.commutativity",
          "[t(u), t(v)], [t(u), Q(v)], [Q(u), Q(v)], [P, Q(u)] all vanish "
          "on safe blocks, 5 seeded draws; plus [Q1, Q2] = 0",
          1e-10)
def _commut(params, rng):
    q = _q(params)
    cfg = tg.ChainConfig(N=min(params["trig.N"], 2), D=6, q=q)
    res = tg.check_commutativity(cfg, rng, n_draws=5, with_q1=False)
    cfg1 = tg.ChainConfig(N=2, D=6, q=q)
    ell = _draw_box(rng, -0.75, -0.35, -0.2, 0.2)
    su = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), ell)
    sv = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), ell)
    Q1u = tg.build_Q1_trace(su, cfg1)
    Q2v = tg.build_Q_trace(sv, cfg1)
    base = LatticeMatrix(cfg1.cutoffs)
    safe = base.triangle_cols(cfg1.D - 2)
    res["Q1Q2"] = commutator_residual(Q1u, Q2v, cols=safe)
    return {"residual": max(res.values()), **{k: float(v) for k, v in res.items()},
            "parameters": {"draws": 5}}


@register("trig.qtau",
          "the two Baxter operators are conjugate through the product of "
          "site intertwiners: W(u2-u1) Q2(u|l) = Q1(u|-l-1) W(u2-u1) at "
          "N = 1, plus W(a) W(-a) = 1",
          1e-10)
def _qtau(params, rng):
    q = _q(params)
    cfg = tg.ChainConfig(N=1, D=params["trig.D"], q=q)
    # Q1's folded sums need |q^{2l+2}| < 1 comfortably
    ell = _draw_box(rng, -0.35, 0.1, -0.2, 0.2)
    s = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), ell)
    res = tg.check_QTau(s, cfg)
    return {"residual": max(res.values()), **{k: float(v) for k, v in res.items()},
            "parameters": {"u": s.u, "ell": ell}}


@register("trig.restriction",
          "the general R-operator at auxiliary spin (1-eps)/2 restricted "
          "to the two-dimensional invariant subspace reproduces the "
          "stated multiple of L(u+1/2); residual shrinks linearly in eps",
          1e-4)
def _restrict(params, rng):
    q = _q(params)
    ell = _draw_spin(rng, q, re_lo=-0.8, re_hi=0.4)
    u = _draw_box(rng, -0.8, 0.8, -0.3, 0.3)
    res = tg.restrict_R_to_L(ell, u, q, D=params["trig.D"])
    r = res["residuals"][0]
    ratio = res["slope_ratio"]
    if not (8.0 <= ratio <= 12.0):
        r = float("inf")
    return {"residual": r, "slope_ratio": float(ratio),
            "eps_residuals": [float(x) for x in res["residuals"]],
            "parameters": {"u": u, "ell": ell}}


@register("trig.r2_coproduct",
          "covariance of the pair permutation block under the "
          "coproduct-like combination of raising generators",
          1e-12)
def _coproduct(params, rng):
    q = _q(params)
    s = tg.TrigSpectral(_draw_box(rng, -1, 1, -0.4, 0.4), _draw_spin(rng, q))
    v1 = _draw_box(rng, -1, 1, -0.3, 0.3)
    v2 = _draw_box(rng, -1, 1, -0.3, 0.3)
    r = tg.check_R2_coproduct(q, s, v1, v2, D=params["trig.D"])
    return {"residual": r, "parameters": {"u": s.u, "ell": s.ell}}


@register("trig.r2_generating",
          "closed action of the pair permutation block on the one-site "
          "generating function (coefficient level at D = 10) and the "
          "equivalent pure-function identity at 20 seeded points",
          1e-10)
def _generating(params, rng):
    q = _q(params)
    cfg = tg.ChainConfig(N=1, D=10, q=q)
    s = tg.TrigSpectral(_draw_box(rng, -0.5, 0.5, -0.25, 0.25),
                        _draw_spin(rng, q, re_lo=-0.45, re_hi=0.1, im=0.2))
    res = tg.check_R2_generating(s, cfg, rng, n_points=20)
    # the coefficient comparison carries the tighter tolerance
    resid = max(res["coefficient_level"] * (1e-10 / 1e-11),
                res["function_identity"])
    return {"residual": resid,
            **{k: float(v) for k, v in res.items()},
            "parameters": {"u": s.u, "ell": s.ell, "D": 10}}


@register("trig.t_general",
          "diagnostic: general transfer matrix as a truncated "
          "auxiliary-space trace; convergence indicator under doubling "
          "and the factorization against Q1 Q2 (up to the trace gauge "
          "constant of the computable realization)",
          1e-2, diagnostic=True)
def _tgen(params, rng):
    q = _q(params)
    cfg = tg.ChainConfig(N=1, D=6, q=q)
    s = tg.TrigSpectral(_draw_box(rng, 0.0, 0.4, 0.0, 0.2),
                        _draw_box(rng, -0.8, -0.7, 0.05, 0.15))
    s_aux = _draw_box(rng, 0.3, 0.4, 0.1, 0.2)
    res = tg.estimate_T_general(s, s_aux, cfg, D0=6)
    return {"residual": res["factorization_fitted"],
            "convergence_delta": res["convergence_indicator"],
            "factorization_raw": float(res["factorization_raw"]),
            "gauge_constant": str(res["gauge_constant"]),
            "q1q2_commutator": float(res["q1q2_commutator"]),
            "parameters": {"u": s.u, "ell": s.ell, "s_aux": s_aux}}


# ---------------------------------------------------------------------------
# elliptic chain
# ---------------------------------------------------------------------------

@register("elliptic.mn_inverse",
          "the theta-entry matrices factorizing L are inverse to each "
          "other: M(a-+b) N(a-+b) = 2 th1(2a) th1(2b) Id (50 points)",
          1e-12)
def _mn(params, rng):
    mod = _moduli(params)
    return {"residual": el.check_MN(mod, rng), "parameters": {"points": 50}}


@register("elliptic.s2_symmetry",
          "the two-site multiplication block is symmetric under "
          "z1 <-> z2 and even in each variable",
          1e-12)
def _s2sym(params, rng):
    mod = _moduli(params)
    a = _draw_box(rng, -0.3, 0.3, -0.1, 0.1)
    s2 = el.s2_elliptic(a, mod)
    worst = 0.0
    for _ in range(10):
        z1 = _draw_box(rng, -0.5, 0.5, -0.15, 0.15)
        z2 = _draw_box(rng, -0.5, 0.5, -0.15, 0.15)
        v = s2(z1, z2)
        worst = max(worst,
                    abs(s2(z2, z1) - v) / abs(v),
                    abs(s2(-z1, z2) - v) / abs(v))
    return {"residual": worst, "parameters": {"a": a}}


@register("elliptic.w_variants",
          "the factorized intertwiner at integer multiples of the shift: "
          "product forms in both theta kinds, the theta-binomial sum, and "
          "the generalized products mutually agree on theta polynomials",
          1e-10)
def _wvar(params, rng):
    mod = _moduli(params)
    zs = _zsamples(rng, 4, im=0.12)
    f = el.theta_poly(2, 1, mod)
    worst = 0.0
    for n in (1, 2, 3):
        ops = {v: el.w_factorized(n, v, mod)
               for v in ("product_i3", "product_i4", "sum")}
        aks = [_draw_box(rng, 0.1, 0.4, -0.1, 0.1) for _ in range(n)]
        ops["generalized"] = el.w_factorized(n, "generalized", mod, a_list=aks)
        vals = {v: np.array([complex(op(f)(z)) for z in zs])
                for v, op in ops.items()}
        scale = max(np.abs(v).max() for v in vals.values())
        for v in ("product_i4", "sum", "generalized"):
            worst = max(worst,
                        float(np.abs(vals["product_i3"] - vals[v]).max()) / scale)
    return {"residual": worst, "parameters": {"n": [1, 2, 3]}}


@register("elliptic.annihilation",
          "the factorized intertwiner at shift multiple n annihilates the "
          "n-dimensional space of even theta polynomials (n <= 5), with a "
          "degree-n monomial as the negative control",
          1e-8)
def _annih(params, rng):
    mod = _moduli(params)
    zs = _zsamples(rng, 6, im=0.12)
    worst = 0.0
    for n in range(1, 6):
        res = el.check_annihilation(n, mod, zs)
        worst = max(worst, res["kernel_residual"])
        if res["control_min"] < 1e-6:
            worst = float("inf")
    return {"residual": worst, "parameters": {"n": [1, 2, 3, 4, 5]}}


@register("elliptic.w_binary",
          "binary relation of the intertwiner, W(a) W(-a) = 1, through "
          "the balanced profile family: the quadrature side and the "
          "factorized side produce reciprocal proportionality constants",
          1e-6)
def _binary(params, rng):
    mod = _moduli(params)
    rule = _rule(params)
    zs = _zsamples(rng, 4, im=0.015)
    worst = 0.0
    delta = 0.0
    for n in (1, 2):
        r1 = el.check_w_binary(n, mod, zs, rule)
        r2 = el.check_w_binary(n, mod, zs, rule.doubled())
        worst = max(worst, r2)
        delta = max(delta, abs(r1 - r2))
    return {"residual": worst, "convergence_delta": delta,
            "parameters": {"n": [1, 2], "M": rule.m}}


@register("elliptic.intertwining",
          "W(a) L(0,a) = L(a,0) W(a) with the exact factorized "
          "intertwiner at a = 2 eta and 3 eta applied to theta polynomials",
          1e-8)
def _intertw(params, rng):
    mod = _moduli(params)
    zs = _zsamples(rng, 3, im=0.1)
    worst = 0.0
    for n in (2, 3):
        # order-2(n+1) theta polynomial: outside the n-dim kernel of W(eta n)
        f = el.theta_poly(n, 1, mod)
        worst = max(worst, el.check_intertwining_elliptic(
            n * mod.eta, mod, f, zs, None, n=n))
    return {"residual": worst, "parameters": {"n": [2, 3]}}


@register("elliptic.recurrences_exact",
          "shift recurrences carried by exact evaluations: the theta "
          "proof-step identity, the multiplicative shifts of the two-site "
          "block, the raising recurrence in factorized form, and the "
          "row linear-dependence kill",
          1e-8)
def _recur_exact(params, rng):
    mod = _moduli(params)
    rule = _rule(params)
    zs = _zsamples(rng, 3, im=0.02)
    f = el.theta_poly(1, 1, mod)
    f2 = el.theta_poly(2, 0, mod)
    a = _draw_box(rng, 0.1, 0.4, -0.15, -0.05)
    res = el.check_elliptic_recurrences(mod, a, f, f2, zs, rule, rng)
    exact_keys = [k for k in res if not k.startswith("rec_raise_right")
                  and k != "rec_lower_column"]
    return {"residual": max(res[k] for k in exact_keys),
            **{k: float(v) for k, v in res.items()}, "parameters": {"a": a}}


@register("elliptic.recurrences_quad",
          "shift recurrences through the quadrature intertwiner (the "
          "kernel-level identities): the right-raising relation for both "
          "theta kinds and the lowering column relation, gated by "
          "quadrature doubling",
          1e-6)
def _recur_quad(params, rng):
    mod = _moduli(params)
    rule = _rule(params)
    zs = _zsamples(rng, 3, im=0.02)
    f = el.theta_poly(1, 1, mod)
    f2 = el.theta_poly(2, 0, mod)
    a = _draw_box(rng, 0.1, 0.4, -0.15, -0.05)
    keys = ["rec_raise_right_i3", "rec_raise_right_i4", "rec_lower_column"]
    res1 = el.check_elliptic_recurrences(mod, a, f, f2, zs, rule, rng)
    res2 = el.check_elliptic_recurrences(mod, a, f, f2, zs, rule.doubled(), rng)
    worst = max(res2[k] for k in keys)
    delta = max(abs(res1[k] - res2[k]) for k in keys)
    return {"residual": worst, "convergence_delta": delta,
            **{k: float(res2[k]) for k in keys}, "parameters": {"a": a}}


def _elliptic_spectral(params, rng, fact_n=None):
    mod = _moduli(params)
    eta = mod.eta
    if fact_n is not None:
        ell = _draw_box(rng, 0.1, 0.5, -0.12, 0.12)
        u = 2 * eta * (fact_n - ell)
        return el.EllipticSpectral(u, ell, mod)
    ell = _draw_box(rng, 0.15, 0.3, -0.1, 0.0)
    u = _draw_box(rng, 0.1, 0.3, -0.45, -0.35)
    return el.EllipticSpectral(u, ell, mod)


@register("elliptic.cornerstone",
          "local triangular relation behind the elliptic Baxter equation, "
          "checked with exact factorized intertwiners at u2 = 2 eta",
          1e-6)
def _ecorner(params, rng):
    mod = _moduli(params)
    rule = _rule(params)
    s = _elliptic_spectral(params, rng, fact_n=2)
    f = el.theta_poly(1, 1, mod)
    samples = [(z1, z2) for z1, z2 in zip(_zsamples(rng, 2, im=0.03),
                                          _zsamples(rng, 2, im=0.03))]
    res = el.check_cornerstone_elliptic(s, rule, f, samples)
    return {"residual": max(res.values()),
            **{k: float(v) for k, v in res.items()},
            "parameters": {"u": s.u, "ell": s.ell}}


@register("elliptic.local_q",
          "closed action of the pair permutation block on the one-site "
          "generating profile (the balanced-cycle quadrature evaluation), "
          "gated by quadrature doubling",
          1e-6)
def _elocal(params, rng):
    mod = _moduli(params)
    rule = _rule(params)
    s = _elliptic_spectral(params, rng)
    samples = [(z1, z2, z3 + 0.3j)
               for z1, z2, z3 in zip(_zsamples(rng, 3), _zsamples(rng, 3),
                                     _zsamples(rng, 3))]
    r1 = el.check_local_q_formula(s, rule, samples)
    r2 = el.check_local_q_formula(s, rule.doubled(), samples)
    return {"residual": r2, "convergence_delta": abs(r1 - r2),
            "parameters": {"u": s.u, "ell": s.ell, "M": rule.m}}


@register("elliptic.baxter_n1",
          "one-site Baxter closure: t(u) applied to the closed Q-action "
          "on the generating profile equals Dp Q(u+2 eta) + Dm Q(u-2 eta)",
          1e-6)
def _ebaxter(params, rng):
    mod = _moduli(params)
    s = _elliptic_spectral(params, rng)
    samples = [(z, lam + 0.3j)
               for z, lam in zip(_zsamples(rng, 5, re_lo=0.12, re_hi=0.45),
                                 _zsamples(rng, 5))]
    res = el.check_baxter_elliptic_N1(s, samples)
    return {"residual": max(res.values()),
            **{k: float(v) for k, v in res.items()},
            "parameters": {"u": s.u, "ell": s.ell}}
