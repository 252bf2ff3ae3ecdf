"""Exact graded-ladder normal form and dense lattice matrices.

A Ladder represents an operator acting on two-variable monomials as

    z1^m z2^n  ->  sum_s  C_s(m, n) * z1^(m + a1 + s1) * z2^(n + a2 + s2)

where (a1, a2) are complex exponent offsets carried symbolically (never
numerically evaluated as powers), s = (s1, s2) ranges over an integer step
table, and each C_s is a coefficient function evaluable at complex source
degrees.  Composition shifts source degrees by the inner ladder's offsets
and steps, so products of operators with non-integer offsets stay exact.

Operators whose series is infinite (geometric-type multiplication series)
are generated up to a chosen step depth and carry a ``trust`` bound: steps
with max(|s1|, |s2|) <= trust are exact, higher ones unknown.  Truncated
ladders also carry a ``cone`` (+1 when every step lowers z1 / raises z2,
-1 mirrored); composing truncated ladders of opposite cones would need an
infinite per-step sum and raises LadderError.

A LatticeMatrix is the dense realization of polynomial-preserving
operators on a truncated multi-monomial basis, with a per-column overflow
mask recording any amplitude discarded past the cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Callable, Optional

import numpy as np

from .special import NomeQ, SeriesTolerance, DEFAULT_TOL, qpoch_infinite, qpow

__all__ = [
    "LadderError",
    "Ladder",
    "ladder_compose",
    "ladder_residual",
    "lmat_mul",
    "lmat_residual",
    "qexp_series_coeffs",
    "qexp_of_step_ladder",
    "qpoch_of_diag_ladder",
    "qexp_of_ladder",
    "check_weyl_identities",
    "LatticeMatrix",
    "mat_rel_residual",
    "commutator_residual",
    "nilpotent_qexp",
]

CoeffFn = Callable[[complex, complex], complex]

_OFFSET_TOL = 1e-11
_TINY = 1e-300


class LadderError(ValueError):
    pass


def _is_int(x: complex) -> bool:
    return abs(x.imag) < _OFFSET_TOL and abs(x.real - round(x.real)) < _OFFSET_TOL


def _memo(fn: "CoeffFn") -> "CoeffFn":
    """Memoize a coefficient function; deep compositions re-evaluate the
    same shifted source degrees many times."""
    cache: dict = {}
    def wrapped(m, n):
        key = (m, n)
        v = cache.get(key)
        if v is None:
            v = fn(m, n)
            cache[key] = v
        return v
    return wrapped


@dataclass
class Ladder:
    """Graded ladder operator; see module docstring."""

    offsets: tuple[complex, complex]
    table: dict[tuple[int, int], CoeffFn]
    trust: Optional[int] = None      # None = exact on all stored steps and zero elsewhere
    cone: int = 0                    # +1 / -1 for one-sided truncated ladders

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity() -> "Ladder":
        return Ladder((0.0, 0.0), {(0, 0): lambda m, n: 1.0 + 0.0j})

    @staticmethod
    def diagonal(fn: CoeffFn, offsets=(0.0, 0.0)) -> "Ladder":
        """Single (0,0)-step ladder multiplying by fn(m, n)."""
        return Ladder((complex(offsets[0]), complex(offsets[1])), {(0, 0): fn})

    @staticmethod
    def single(step: tuple[int, int], fn: CoeffFn, offsets=(0.0, 0.0)) -> "Ladder":
        return Ladder((complex(offsets[0]), complex(offsets[1])), {tuple(step): fn})

    # -- bookkeeping -------------------------------------------------------

    @property
    def max_depth(self) -> int:
        return max((max(abs(s[0]), abs(s[1])) for s in self.table), default=0)

    def scaled(self, c: complex) -> "Ladder":
        cc = complex(c)
        table = {s: (lambda m, n, f=f: cc * f(m, n)) for s, f in self.table.items()}
        return Ladder(self.offsets, table, self.trust, self.cone)

    def shifted_steps(self, d: tuple[int, int]) -> "Ladder":
        """Move integer offset parts into the step table."""
        table = {(s[0] + d[0], s[1] + d[1]): f for s, f in self.table.items()}
        off = (self.offsets[0] - d[0], self.offsets[1] - d[1])
        return Ladder(off, table, self.trust, self.cone)

    def aligned_with(self, other: "Ladder") -> "Ladder":
        """Re-express self on other's offsets (they must differ by integers)."""
        d0 = self.offsets[0] - other.offsets[0]
        d1 = self.offsets[1] - other.offsets[1]
        if not (_is_int(d0) and _is_int(d1)):
            raise LadderError(
                f"incompatible offsets {self.offsets} vs {other.offsets}")
        return self.shifted_steps((round(d0.real), round(d1.real)))

    def __add__(self, other: "Ladder") -> "Ladder":
        a = other.aligned_with(self)
        if self.cone and a.cone and self.cone != a.cone:
            raise LadderError("cannot add truncated ladders of opposite cones")
        table = dict(self.table)
        for s, f in a.table.items():
            if s in table:
                g = table[s]
                table[s] = (lambda m, n, g=g, f=f: g(m, n) + f(m, n))
            else:
                table[s] = f
        trust = _min_trust(self.trust, a.trust)
        return Ladder(self.offsets, table, trust, self.cone or a.cone)

    def coeff(self, s: tuple[int, int], m, n) -> complex:
        f = self.table.get(s)
        return f(m, n) if f is not None else 0.0 + 0.0j


def _min_trust(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def ladder_compose(A: Ladder, B: Ladder) -> Ladder:
    """A after B: (A o B) z^.. = A(B z^..), exact per retained step.

    The composed coefficient at step s is
        sum_{sA + sB = s} C^A_{sA}(m + b1 + sB1, n + b2 + sB2) C^B_{sB}(m, n).
    """
    if A.trust is not None and B.trust is not None and A.cone != B.cone:
        raise LadderError(
            "product of two opposite-direction truncated ladders has infinite "
            "per-step sums; build it at the LatticeMatrix level instead")
    off = (A.offsets[0] + B.offsets[0], A.offsets[1] + B.offsets[1])
    b1, b2 = B.offsets
    table: dict[tuple[int, int], CoeffFn] = {}
    for sB, fB in B.table.items():
        for sA, fA in A.table.items():
            s = (sA[0] + sB[0], sA[1] + sB[1])
            prev = table.get(s)
            # exact inner zeros short-circuit the outer factor, which may
            # have a formal pole exactly where the inner coefficient vanishes
            if prev is None:
                def fresh(m, n, fA=fA, fB=fB, sB=sB):
                    b = fB(m, n)
                    return 0.0j if b == 0 else fA(m + b1 + sB[0], n + b2 + sB[1]) * b
                table[s] = fresh
            else:
                def chained(m, n, fA=fA, fB=fB, sB=sB, prev=prev):
                    b = fB(m, n)
                    if b == 0:
                        return prev(m, n)
                    return prev(m, n) + fA(m + b1 + sB[0], n + b2 + sB[1]) * b
                table[s] = chained
    table = {s: _memo(f) for s, f in table.items()}
    # trust: exact*exact stays exact; exact factors eat into the other's
    # trusted depth by their own step depth; same-cone truncated ladders
    # keep the smaller trust (depth is additive along the cone).
    if A.trust is None and B.trust is None:
        trust, cone = None, 0
    elif A.trust is None:
        trust, cone = B.trust - A.max_depth, B.cone
    elif B.trust is None:
        trust, cone = A.trust - B.max_depth, A.cone
    else:
        trust, cone = min(A.trust, B.trust), A.cone
    return Ladder(off, table, trust, cone)


# ladder coefficients are meromorphic in the source degrees; comparing at
# generically shifted degrees avoids the pole/zero collisions that occur
# exactly at integer lattice boundaries (the dedicated LatticeMatrix
# checks cover the integer lattice itself through pole-free forms)
GENERIC_SHIFT = (0.1237 + 0.0941j, -0.0817 + 0.1123j)


def ladder_residual(A: Ladder, B: Ladder, window: int = 8,
                    depth: Optional[int] = None,
                    points: Optional[list] = None) -> float:
    """Max per-step relative coefficient mismatch between A and B.

    Compares steps up to min(depth, both trusts) at source degrees on the
    generically shifted window [0, window]^2 + GENERIC_SHIFT (or explicit
    (m, n) points).  Offsets must agree up to an integer shift, which is
    absorbed into the steps.
    """
    Bb = B.aligned_with(A)
    cap = _min_trust(A.trust, Bb.trust)
    cap = _min_trust(cap, depth)
    steps = set(A.table) | set(Bb.table)
    if cap is not None:
        steps = {s for s in steps if max(abs(s[0]), abs(s[1])) <= cap}
    g1, g2 = GENERIC_SHIFT
    off1, off2 = A.offsets
    per_step = []
    for s in steps:
        if points is None:
            # anchor the window where the step's target exponent is
            # non-negative: outside that cone the q-products blow up and
            # the comparison is ill-conditioned
            lo1 = max(0, math.ceil(-s[0] - off1.real - 1e-9))
            lo2 = max(0, math.ceil(-s[1] - off2.real - 1e-9))
            pts = [(m + g1, n + g2)
                   for m in range(lo1, lo1 + window + 1)
                   for n in range(lo2, lo2 + window + 1)]
        else:
            pts = points
        top = 0.0
        scale = 0.0
        for (m, n) in pts:
            va = A.coeff(s, m, n)
            vb = Bb.coeff(s, m, n)
            top = max(top, abs(va - vb))
            scale = max(scale, abs(va), abs(vb))
        per_step.append((top, scale))
    # per-step relative residual, floored by a fraction of the global
    # scale so that steps carrying only rounding noise compare as zero
    glob = max((sc for _, sc in per_step), default=0.0)
    worst = 0.0
    for top, scale in per_step:
        worst = max(worst, top / max(scale, 0.01 * glob, _TINY))
    return worst


# -- 2x2 matrices of ladders (entries may be None for structural zeros) ----

def lmat_mul(A, B):
    out = [[None, None], [None, None]]
    for i in range(2):
        for j in range(2):
            acc = None
            for k in range(2):
                if A[i][k] is None or B[k][j] is None:
                    continue
                term = ladder_compose(A[i][k], B[k][j])
                acc = term if acc is None else acc + term
            out[i][j] = acc
    return out


def lmat_residual(A, B, window=8, depth=None) -> float:
    worst = 0.0
    for i in range(2):
        for j in range(2):
            a, b = A[i][j], B[i][j]
            if a is None and b is None:
                continue
            if a is None or b is None:
                zero = Ladder((b or a).offsets, {})
                a, b = (a or zero), (b or zero)
            worst = max(worst, ladder_residual(a, b, window=window, depth=depth))
    return worst


# -- q-exponentials of ladder operators ------------------------------------

def qexp_series_coeffs(q: NomeQ, kmax: int, inverted: bool) -> list[complex]:
    """Taylor coefficients of (x;q^2)^(+-1):
    e_k = (-1)^k q^{k(k-1)} / (q^2;q^2)_k, resp. 1 / (q^2;q^2)_k."""
    out = []
    den = 1.0 + 0.0j
    for k in range(kmax + 1):
        if k > 0:
            den *= 1.0 - q.qsq ** k
        if inverted:
            out.append(1.0 / den)
        else:
            out.append((-1) ** k * q.qsq ** (k * (k - 1) // 2) / den)
    return out


def qexp_of_step_ladder(X: Ladder, q: NomeQ, kmax: int,
                        inverted: bool = False) -> Ladder:
    """(x; q^2)^(+-1) for a ladder X with no (0,0) step.

    Each power X^k lands on strictly deeper steps, so the coefficient of
    every retained step is a finite, exact sum; the result is trusted to
    depth kmax * min-step-depth.
    """
    if (0, 0) in X.table:
        raise LadderError("qexp_of_step_ladder needs a diagonal-free ladder")
    coeffs = qexp_series_coeffs(q, kmax, inverted)
    acc = Ladder.identity().scaled(coeffs[0])
    power = Ladder.identity()
    for k in range(1, kmax + 1):
        power = ladder_compose(power, X)
        acc = acc + power.scaled(coeffs[k])
    trust = kmax * min(max(abs(s[0]), abs(s[1])) for s in X.table)
    cone = 1 if all(s[0] <= 0 <= s[1] for s in X.table) else (
        -1 if all(s[1] <= 0 <= s[0] for s in X.table) else 0)
    return Ladder(acc.offsets, acc.table, trust, cone)


def qpoch_of_diag_ladder(D: Ladder, q: NomeQ,
                         tol: SeriesTolerance = DEFAULT_TOL) -> Ladder:
    """(d; q^2) of a purely diagonal ladder: entrywise infinite q-product."""
    if set(D.table) != {(0, 0)} or D.offsets != (0.0, 0.0):
        raise LadderError("expected an offset-free diagonal ladder")
    f = D.table[(0, 0)]
    return Ladder.diagonal(lambda m, n: qpoch_infinite(f(m, n), q, tol))


def qexp_of_ladder(X: Ladder, q: NomeQ, kmax: int,
                   inverted: bool = False) -> Ladder:
    """(x; q^2)^(+-1) = sum_k e_k X^k for a general ladder, truncated at
    kmax.  With a diagonal part present every retained step receives
    contributions from all k, but the e_k ~ q^{k(k-1)} decay makes the
    dropped tail negligible for kmax a few steps past the compared depth.
    """
    coeffs = qexp_series_coeffs(q, kmax, inverted)
    acc = Ladder.identity().scaled(coeffs[0])
    power = Ladder.identity()
    for k in range(1, kmax + 1):
        power = ladder_compose(power, X)
        acc = acc + power.scaled(coeffs[k])
    cone = 1 if all(s[0] <= 0 <= s[1] for s in X.table) else (
        -1 if all(s[1] <= 0 <= s[0] for s in X.table) else 0)
    return Ladder(acc.offsets, acc.table, kmax, cone)


def check_weyl_identities(q: NomeQ, j_max: int = 12, window: int = 8) -> dict:
    """Schuetzenberger and pentagon identities for the multiplication /
    dilatation Weyl pair  u = (z2/z1) q,  v = q^{2 z1 d1 + 2}  (u v = q^2 v u).

    Returns per-step residuals up to j_max, plus a swapped-order pentagon
    residual as a negative control (it must NOT be small).
    """
    kgen = j_max + 4
    u = Ladder.single((-1, 1), lambda m, n: q.q)
    vu = Ladder.single((-1, 1), lambda m, n: -qpow(q, 2 * m + 1))   # -v u
    uv = Ladder.single((-1, 1), lambda m, n: -qpow(q, 2 * m - 1))   # -u v

    poch_u = qexp_of_step_ladder(u, q, kgen)
    poch_vu = qexp_of_step_ladder(vu, q, kgen)
    poch_uv = qexp_of_step_ladder(uv, q, kgen)
    vdiag = Ladder.diagonal(lambda m, n: qpow(q, 2 * m + 2))
    poch_v = qpoch_of_diag_ladder(vdiag, q)
    poch_upv = qexp_of_ladder(u + vdiag, q, kgen + 6)

    schuetz = ladder_residual(ladder_compose(poch_u, poch_v), poch_upv,
                              window=window, depth=j_max)
    lhs = ladder_compose(poch_v, poch_u)
    rhs = ladder_compose(poch_u, ladder_compose(poch_vu, poch_v))
    pentagon = ladder_residual(lhs, rhs, window=window, depth=j_max)
    # wrong-order control: swap the roles of u and v in the pentagon
    wrong = ladder_residual(ladder_compose(poch_u, poch_v),
                            ladder_compose(poch_v, ladder_compose(poch_uv, poch_u)),
                            window=window, depth=j_max)
    return {"schuetzenberger": schuetz, "pentagon": pentagon,
            "swapped_pentagon_control": wrong}


# ---------------------------------------------------------------------------
# Dense lattice matrices
# ---------------------------------------------------------------------------

class LatticeMatrix:
    """Dense operator matrix on the truncated monomial basis
    z1^{m_1} ... z_k^{m_k}, 0 <= m_i <= cutoffs[i].

    ``overflow[col]`` records that applying the operator to basis element
    ``col`` discarded amplitude past a cutoff; a check is exact on any
    column set whose overflow mask is empty.
    """

    def __init__(self, cutoffs, data=None, overflow=None,
                 degree_conserving: Optional[bool] = None):
        self.cutoffs = tuple(int(c) for c in cutoffs)
        self.dim = int(np.prod([c + 1 for c in self.cutoffs]))
        self.data = (np.zeros((self.dim, self.dim), dtype=complex)
                     if data is None else np.asarray(data, dtype=complex))
        self.overflow = (np.zeros(self.dim, dtype=bool)
                         if overflow is None else np.asarray(overflow, dtype=bool))
        self.degree_conserving = degree_conserving

    # -- indexing ----------------------------------------------------------

    def strides(self):
        st = []
        acc = 1
        for c in reversed(self.cutoffs):
            st.append(acc)
            acc *= c + 1
        return tuple(reversed(st))

    def index(self, degrees) -> int:
        st = self.strides()
        return int(sum(int(d) * s for d, s in zip(degrees, st)))

    def degrees(self, idx: int):
        st = self.strides()
        out = []
        for s in st:
            out.append(idx // s)
            idx %= s
        return tuple(out)

    def basis(self):
        return iproduct(*[range(c + 1) for c in self.cutoffs])

    def total_degrees(self):
        return np.array([sum(self.degrees(i)) for i in range(self.dim)])

    # -- construction ------------------------------------------------------

    @staticmethod
    def identity(cutoffs) -> "LatticeMatrix":
        M = LatticeMatrix(cutoffs)
        M.data = np.eye(M.dim, dtype=complex)
        M.degree_conserving = True
        return M

    @staticmethod
    def from_pair_ladder(lad: Ladder, sites: tuple[int, int], cutoffs,
                         tiny: float = 1e-14) -> "LatticeMatrix":
        """Realize a ladder acting on variables (sites[0], sites[1]).

        Offsets must be integers here (offset-free or integer-shift
        operators only; symbolic non-integer offsets never reach the
        lattice).  Amplitude pushed past a cutoff flags the column.
        """
        a1, a2 = lad.offsets
        if not (_is_int(a1) and _is_int(a2)):
            raise LadderError(
                f"non-integer offsets {lad.offsets} cannot be realized on a lattice")
        d1, d2 = round(a1.real), round(a2.real)
        i, j = sites
        M = LatticeMatrix(cutoffs)
        for src in M.basis():
            col = M.index(src)
            m, n = src[i], src[j]
            for (s1, s2), f in lad.table.items():
                c = f(float(m), float(n))
                if abs(c) <= tiny:
                    continue
                tm, tn = m + s1 + d1, n + s2 + d2
                if tm < 0 or tn < 0:
                    if abs(c) > tiny:
                        raise LadderError(
                            f"negative exponent ({tm},{tn}) with amplitude {abs(c):.3g} "
                            f"from source {src}")
                    continue
                if tm > M.cutoffs[i] or tn > M.cutoffs[j]:
                    M.overflow[col] = True
                    continue
                tgt = list(src)
                tgt[i], tgt[j] = tm, tn
                M.data[M.index(tuple(tgt)), col] += c
        return M

    @staticmethod
    def from_site_ladder(lad: Ladder, site: int, cutoffs,
                         tiny: float = 1e-14) -> "LatticeMatrix":
        """Realize a single-variable ladder (steps (s, 0), coeff ignoring n)."""
        if any(s[1] != 0 for s in lad.table) or abs(lad.offsets[1]) > _OFFSET_TOL:
            raise LadderError("not a single-variable ladder")
        a1 = lad.offsets[0]
        if not _is_int(a1):
            raise LadderError(f"non-integer offset {a1} cannot be realized")
        d1 = round(a1.real)
        M = LatticeMatrix(cutoffs)
        for src in M.basis():
            col = M.index(src)
            m = src[site]
            for (s1, _), f in lad.table.items():
                c = f(float(m), 0.0)
                if abs(c) <= tiny:
                    continue
                tm = m + s1 + d1
                if tm < 0:
                    raise LadderError(
                        f"negative exponent {tm} with amplitude {abs(c):.3g}")
                if tm > M.cutoffs[site]:
                    M.overflow[col] = True
                    continue
                tgt = list(src)
                tgt[site] = tm
                M.data[M.index(tuple(tgt)), col] += c
        return M

    @staticmethod
    def from_diag(values, cutoffs) -> "LatticeMatrix":
        M = LatticeMatrix(cutoffs)
        M.data = np.diag(np.asarray(values, dtype=complex))
        M.degree_conserving = True
        return M

    # -- algebra -----------------------------------------------------------

    def _like(self, data, overflow, conserving=None) -> "LatticeMatrix":
        return LatticeMatrix(self.cutoffs, data, overflow, conserving)

    def __matmul__(self, other: "LatticeMatrix") -> "LatticeMatrix":
        data = self.data @ other.data
        support = (np.abs(other.data) > 1e-300).astype(float)
        carries = support.T @ self.overflow.astype(float)
        overflow = other.overflow | (carries > 0)
        cons = None
        if self.degree_conserving and other.degree_conserving:
            cons = True
        return self._like(data, overflow, cons)

    def __add__(self, other: "LatticeMatrix") -> "LatticeMatrix":
        return self._like(self.data + other.data, self.overflow | other.overflow)

    def __sub__(self, other: "LatticeMatrix") -> "LatticeMatrix":
        return self._like(self.data - other.data, self.overflow | other.overflow)

    def scaled(self, c: complex) -> "LatticeMatrix":
        return self._like(self.data * c, self.overflow.copy(), self.degree_conserving)

    def commutator(self, other: "LatticeMatrix") -> "LatticeMatrix":
        return (self @ other) - (other @ self)

    # -- masks and residuals -------------------------------------------------

    def safe_cols(self, margin: int) -> np.ndarray:
        mask = np.zeros(self.dim, dtype=bool)
        for idx in range(self.dim):
            degs = self.degrees(idx)
            mask[idx] = all(d <= c - margin for d, c in zip(degs, self.cutoffs))
        return mask

    def triangle_cols(self, total: Optional[int] = None) -> np.ndarray:
        cap = min(self.cutoffs) if total is None else total
        td = self.total_degrees()
        return td <= cap

    def assert_degree_conserving(self, tol: float = 1e-13) -> None:
        td = self.total_degrees()
        diff = td[:, None] - td[None, :]
        bad = np.abs(self.data)[diff != 0]
        worst = float(bad.max()) if bad.size else 0.0
        scale = max(float(np.abs(self.data).max()), _TINY)
        if worst > tol * scale:
            raise LadderError(f"matrix is not degree conserving: off-block {worst:.3g}")
        self.degree_conserving = True

    def check_exact_on(self, mask: np.ndarray) -> None:
        if np.any(self.overflow & mask):
            raise LadderError("overflow mask is non-empty on the requested block")


def mat_rel_residual(A: LatticeMatrix, B: LatticeMatrix,
                     cols: Optional[np.ndarray] = None) -> float:
    """||A - B|| / max(||A||, ||B||) restricted to the given columns."""
    sel = slice(None) if cols is None else cols
    da, db = A.data[:, sel], B.data[:, sel]
    scale = max(np.abs(da).max(initial=0.0), np.abs(db).max(initial=0.0), _TINY)
    return float(np.abs(da - db).max(initial=0.0)) / scale


def commutator_residual(A: LatticeMatrix, B: LatticeMatrix,
                        cols: Optional[np.ndarray] = None) -> float:
    """||[A,B]|| / (||A|| ||B||) with the spectral-free sup norm, restricted
    to the given source columns."""
    sel = slice(None) if cols is None else cols
    C = (A.data @ B.data - B.data @ A.data)[:, sel]
    sa = max(float(np.abs(A.data).max(initial=0.0)), _TINY)
    sb = max(float(np.abs(B.data).max(initial=0.0)), _TINY)
    return float(np.abs(C).max(initial=0.0)) / (sa * sb)


def nilpotent_qexp(prefactor: complex, base: LatticeMatrix, q: NomeQ,
                   inverted: bool = False) -> LatticeMatrix:
    """(prefactor * base; q^2)^(+-1) as an exact finite sum.

    ``base`` must be locally nilpotent on its lattice (base^(K+1) = 0 for
    some K <= sum of the cutoffs); the q-exponential then terminates
    exactly and the expansion coefficients are the standard ones,
    (-1)^k q^{k(k-1)} / (q^2;q^2)_k resp. 1 / (q^2;q^2)_k.
    """
    dim = base.dim
    kcap = sum(base.cutoffs) + 1
    coeffs = qexp_series_coeffs(q, kcap, inverted)
    out = np.eye(dim, dtype=complex) * coeffs[0]
    power = np.eye(dim, dtype=complex)
    nilpotent = False
    for k in range(1, kcap + 1):
        power = power @ (complex(prefactor) * base.data)
        if np.abs(power).max() <= 1e-160:
            nilpotent = True
            break
        out = out + coeffs[k] * power
    if not nilpotent:
        raise LadderError("base operator is not nilpotent on this lattice")
    return LatticeMatrix(base.cutoffs, out, base.overflow.copy(),
                         base.degree_conserving)
