"""Truncated infinite matrices and change of basis over the level-n subring.

A series s = sum_j s_j x^j is written as sum_l g_l(X_n) y_l with y_l = x^l or
(x - t)^l, l < p^n. Row m = k p^n + l of the change-of-basis matrix A holds
the x-coefficients of X_n^k y_l, so s = phi(g) A where phi interleaves the
coefficients of the g_l. A is unit lower triangular, A = I - U, and the
inverse comes from the Neumann series of U.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .coeffring import RingError
from .series import BoundedSeries, SeriesError, SkewPoly, eval_X, poly_mul, x_minus_t
from .skewmaps import derive_level

INF = 10 ** 9


class RebaseError(RingError):
    pass


class CertificationMissing(RebaseError):
    pass


class NotStrictlyLower(RebaseError):
    pass


class InsufficientOrder(RebaseError):
    pass


def _low(x):
    if x.is_zero():
        return INF
    return x.filt().lower


@dataclass
class BandMatrix:
    """(K+1) x (K+1) truncation of an N x N indexed matrix."""

    entries: list
    ring: object
    lower_bound: int
    flags: dict = field(default_factory=dict)

    @property
    def K(self):
        return len(self.entries) - 1

    @classmethod
    def build(cls, entries, ring, **flags):
        entries = [list(r) for r in entries]
        lb = min((_low(e) for r in entries for e in r), default=INF)
        m = cls(entries, ring, lb, {"column_null_certified": False, "row_finite": True, "strictly_lower": False})
        m.flags.update(flags)
        m.flags["strictly_lower"] = m.is_strictly_lower()
        return m

    @classmethod
    def identity(cls, ring, K):
        z, o = ring.zero(), ring.one()
        return cls.build([[o if i == j else z for j in range(K + 1)] for i in range(K + 1)], ring, column_null_certified=True)

    @classmethod
    def zero(cls, ring, K):
        return cls.build([[ring.zero()] * (K + 1) for _ in range(K + 1)], ring, column_null_certified=True)

    def is_strictly_lower(self):
        return all(self.entries[i][j].is_zero() for i in range(self.K + 1) for j in range(i, self.K + 1))

    def __sub__(self, other):
        R = self.ring
        return BandMatrix.build(
            [[R.sub(a, b) for a, b in zip(r, q)] for r, q in zip(self.entries, other.entries)],
            R,
            column_null_certified=self.flags["column_null_certified"] and other.flags["column_null_certified"],
        )

    def __add__(self, other):
        R = self.ring
        return BandMatrix.build(
            [[R.add(a, b) for a, b in zip(r, q)] for r, q in zip(self.entries, other.entries)],
            R,
            column_null_certified=self.flags["column_null_certified"] and other.flags["column_null_certified"],
        )

    def equals(self, other):
        return all(a == b for r, q in zip(self.entries, other.entries) for a, b in zip(r, q))

    def to_json(self):
        R = self.ring
        return {
            "K": self.K,
            "lower_bound": self.lower_bound,
            "flags": dict(self.flags),
            "entries": [[R.encode(e) for e in r] for r in self.entries],
        }


def mat_mul(A, B):
    """Truncated product; needs B column-null or A row-finite."""
    if not (B.flags.get("column_null_certified") or A.flags.get("row_finite")):
        raise CertificationMissing("product needs a column-null right factor or a row-finite left factor")
    if A.K != B.K:
        raise RebaseError("truncation sizes differ")
    R = A.ring
    n = A.K + 1
    cols = [[B.entries[k][j] for k in range(n)] for j in range(n)]
    out = []
    for i in range(n):
        row = A.entries[i]
        nz = [(k, a) for k, a in enumerate(row) if not a.is_zero()]
        new = []
        for j in range(n):
            acc = R.zero()
            col = cols[j]
            for k, a in nz:
                b = col[k]
                if not b.is_zero():
                    acc = R.add(acc, R.mul(a, b))
            new.append(acc)
        out.append(new)
    res = BandMatrix.build(
        out,
        R,
        column_null_certified=A.flags.get("column_null_certified", False) and B.flags.get("column_null_certified", False),
        row_finite=A.flags.get("row_finite", False) and B.flags.get("row_finite", False),
    )
    # declared bound L_A + L_B (the stored entries may do better)
    if A.lower_bound < INF and B.lower_bound < INF:
        res.lower_bound = min(res.lower_bound, A.lower_bound + B.lower_bound) if res.lower_bound < INF else A.lower_bound + B.lower_bound
    return res


def vec_mat(v, A):
    """Row vector times matrix: (vA)_j = sum_m v_m A_mj (v on the left)."""
    R = A.ring
    n = A.K + 1
    if len(v) != n:
        raise RebaseError("vector length does not match the truncation")
    out = [R.zero() for _ in range(n)]
    for m, vm in enumerate(v):
        if vm.is_zero():
            continue
        row = A.entries[m]
        for j in range(n):
            a = row[j]
            if not a.is_zero():
                out[j] = R.add(out[j], R.mul(vm, a))
    return out


def neumann_inverse(U):
    """B = I + U + U^2 + ... for strictly lower U; (I - U) B = B (I - U) = I.

    At truncation the sum is finite. It is evaluated through the fixed point
    B = I + U B one row at a time, which produces the same partial sums.
    """
    if not U.is_strictly_lower():
        raise NotStrictlyLower("Neumann inverse needs a strictly lower triangular matrix")
    R = U.ring
    n = U.K + 1
    rows = []
    for i in range(n):
        row = [R.one() if j == i else R.zero() for j in range(n)]
        for k in range(i):
            u = U.entries[i][k]
            if u.is_zero():
                continue
            src = rows[k]
            for j in range(k + 1):
                if not src[j].is_zero():
                    row[j] = R.add(row[j], R.mul(u, src[j]))
        rows.append(row)
    Bm = BandMatrix.build(rows, R, row_finite=True)
    V = Bm - BandMatrix.identity(R, U.K)
    v_lb = V.lower_bound
    if U.lower_bound >= 1:
        # bounded with lower bound >= 1 and column-null
        Bm.flags["column_null_certified"] = True
        v_lb = min(v_lb, U.lower_bound)
    Bm.flags["V_lower_bound"] = v_lb
    return Bm


def neumann_partial_sums(U, terms=None):
    """I + U + ... + U^terms by repeated products (test oracle)."""
    K = U.K
    terms = K if terms is None else terms
    acc = BandMatrix.identity(U.ring, K)
    pw = BandMatrix.identity(U.ring, K)
    Uf = BandMatrix(U.entries, U.ring, U.lower_bound, dict(U.flags, row_finite=True))
    for _ in range(terms):
        pw = mat_mul(pw, Uf)
        acc = acc + pw
    return acc


# ---------------------------------------------------------------------------
# change of basis


BASES = ("x_powers", "x_minus_t_powers")


def _basis_poly(d, ell, basis):
    if basis == "x_powers":
        return SkewPoly.x_power(d, ell)
    if basis == "x_minus_t_powers":
        if d.form != "inner":
            raise RebaseError("the (x - t) basis needs an inner derivation")
        g = x_minus_t(d)
        out = SkewPoly([d.ring.one()], d)
        for _ in range(ell):
            out = poly_mul(out, g)
        return out
    raise RebaseError(f"unknown basis {basis!r}")


def basis_rows(level, K, basis="x_powers"):
    """The polynomials X_n^k y_l for m = k p^n + l <= K."""
    d = level.base
    q = level.degree
    X = eval_X(level)
    Xk = [SkewPoly([d.ring.one()], d)]
    ys = [_basis_poly(d, ell, basis) for ell in range(q)]
    rows = []
    for m in range(K + 1):
        k, ell = divmod(m, q)
        while len(Xk) <= k:
            Xk.append(poly_mul(Xk[-1], X))
        if basis == "x_powers":
            rows.append(Xk[k].shift(ell))
        else:
            rows.append(poly_mul(Xk[k], ys[ell]))
    return rows


_A_CACHE = {}


def build_A(level, K, basis="x_powers"):
    """Change-of-basis matrix: row m holds the x-coefficients of X_n^k y_l."""
    key = (id(level), K, basis)
    hit = _A_CACHE.get(key)
    if hit is not None and hit[0] is level:
        return hit[1]
    d = level.base
    if d.form == "inner" and not (d.sigma.apply(d.t) == d.t):
        raise RebaseError("build_A needs sigma(t) = t")
    R = d.ring
    rows = basis_rows(level, K, basis)
    entries = []
    for m, poly in enumerate(rows):
        if poly.degree != m or not (poly.coeff(m) == R.one()):
            raise RebaseError(f"row {m} is not monic of degree {m}")
        entries.append([poly.coeff(j) if j <= m else R.zero() for j in range(K + 1)])
    A = BandMatrix.build(entries, R, row_finite=True)
    _A_CACHE[key] = (level, A)
    return A


def strict_part(A):
    """U = I - A."""
    U = BandMatrix.identity(A.ring, A.K) - A
    U.flags["column_null_certified"] = U.lower_bound >= 1
    U.flags["row_finite"] = True
    return U


@dataclass
class Decomposition:
    parts: list
    level: object
    basis: str
    Q: int
    info: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "level": self.level.n,
            "basis": self.basis,
            "Q": self.Q,
            "parts": [g.to_json() for g in self.parts],
            "info": self.info,
        }


def aligned_order(p, n, Q):
    return p ** n * Q + p ** n - 1


def decompose(f, level, basis="x_powers"):
    """Parts g_0..g_{p^n - 1} with f = sum_l g_l(X_n) y_l at truncation.

    Stored part coefficients are the exact blockwise solution; the
    guarantees additionally account for the unknown tail of f.
    """
    q = level.degree
    K = f.K
    if (K + 1) % q:
        raise InsufficientOrder(f"order {K} is not of the form {q}*Q + {q - 1}")
    Q = (K + 1) // q - 1
    A = build_A(level, K, basis)
    U = strict_part(A)
    Bm = neumann_inverse(U)
    v = vec_mat(list(f.coeffs), Bm)
    R = f.ring
    exact = U.lower_bound >= INF or f.exact_tail
    tail = INF if exact else f.L + max(0, min(U.lower_bound, Bm.flags["V_lower_bound"]))
    guar = []
    for m in range(K + 1):
        g = tail
        for j in range(m, K + 1):
            b = Bm.entries[j][m]
            if not b.is_zero():
                g = min(g, f.guarantee[j] + _low(b))
        guar.append(min(g, R.precision(v[m])))
    parts = []
    for ell in range(q):
        idx = [k * q + ell for k in range(Q + 1)]
        cs = [v[i] for i in idx]
        L = min([f.L + min(0, Bm.lower_bound)] + [_low(c) for c in cs])
        parts.append(BoundedSeries(cs, L, [guar[i] for i in idx], level.Delta, None, f.exact_tail))
    return Decomposition(parts, level, basis, Q, {"K": K, "U_lower_bound": min(U.lower_bound, INF), "B_flags": dict(Bm.flags)})


def recompose(dec, deriv=None):
    """f = phi(g) A, truncated at the same order."""
    level = dec.level
    q = level.degree
    K = q * (dec.Q + 1) - 1
    A = build_A(level, K, dec.basis)
    R = A.ring
    v = [None] * (K + 1)
    gv = [None] * (K + 1)
    for ell, g in enumerate(dec.parts):
        for k in range(dec.Q + 1):
            v[k * q + ell] = g.coeffs[k]
            gv[k * q + ell] = g.guarantee[k]
    s = vec_mat(v, A)
    guar = []
    for j in range(K + 1):
        g = INF
        for m in range(j, K + 1):
            a = A.entries[m][j]
            if not a.is_zero():
                g = min(g, gv[m] + _low(a))
        guar.append(min(g, R.precision(s[j])))
    L = min(g.L for g in dec.parts) + min(0, A.lower_bound)
    d = deriv if deriv is not None else level.base
    return BoundedSeries(list(s), L, guar, d, None, all(g.exact_tail for g in dec.parts))


def level_shift_check(f, d, basis="x_powers"):
    """Decompose at level 1 twice and compare with level 2 directly.

    Returns a report. In char p the parts must match index by index
    (X_1 = x^p); otherwise both routes must recompose to f and X_2 must
    equal (X_1 - T_1)^p + T_2 as polynomials.
    """
    lv1 = derive_level(d, 1)
    lv2 = derive_level(d, 2)
    p = lv1.p
    one = decompose(f, lv1, basis)
    nested = [decompose(g, derive_level(lv1.Delta, 1), basis) for g in one.parts]
    direct = decompose(f, lv2, basis)
    report = {"pass": True, "mismatch": None}
    R = d.ring
    if R.is_char_p and basis == "x_powers":
        for ell, dec in enumerate(nested):
            for ell2, g in enumerate(dec.parts):
                h = direct.parts[p * ell2 + ell]
                if not g.agrees_with(h):
                    report.update({"pass": False, "mismatch": [ell, ell2]})
                    return report
    back = recompose(one)
    if not back.agrees_with(f):
        report.update({"pass": False, "mismatch": "level-1 round trip"})
        return report
    if not recompose(direct).agrees_with(f):
        report.update({"pass": False, "mismatch": "level-2 round trip"})
        return report
    for ell, dec in enumerate(nested):
        if not recompose(dec).agrees_with(one.parts[ell]):
            report.update({"pass": False, "mismatch": f"nested round trip {ell}"})
            return report
    if d.form == "inner":
        X1 = eval_X(lv1)
        X2 = eval_X(lv2)
        T1 = SkewPoly([lv1.T], d)
        base = X1 - T1
        acc = SkewPoly([R.one()], d)
        for _ in range(p):
            acc = poly_mul(acc, base)
        rhs = acc + SkewPoly([lv2.T], d)
        if not (rhs == X2):
            report.update({"pass": False, "mismatch": "X_2 != (X_1 - T_1)^p + T_2"})
    return report


__all__ = [
    "BandMatrix",
    "Decomposition",
    "INF",
    "InsufficientOrder",
    "NotStrictlyLower",
    "SeriesError",
    "aligned_order",
    "build_A",
    "decompose",
    "level_shift_check",
    "mat_mul",
    "neumann_inverse",
    "recompose",
    "vec_mat",
]
