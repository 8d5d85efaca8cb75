"""Skew polynomials and bounded skew power series.

Both live in R[x; sigma, delta] with x r = sigma(r) x + delta(r); coefficients
sit to the left of the powers of x. Products use

    c_k = sum_{e <= k, i >= e} C(i, e) a_i sigma^e delta^(i-e)(b_(k-e)),

which needs sigma and delta to commute.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

from .coeffring import FiltValue, RingError, filt_min, scale_int
from .skewmaps import DerivMismatch, DerivSpec, apply_delta, spanning_set


class SeriesError(RingError):
    pass


class MissingCertificate(SeriesError):
    pass


class GuaranteeUnreachable(SeriesError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


def same_deriv(d1, d2):
    if d1 is d2:
        return True
    try:
        return d1.ring == d2.ring and d1.to_json() == d2.to_json() and d1.sigma.to_json() == d2.sigma.to_json()
    except Exception:
        return False


def _table(d, b, mmax, emax):
    """T[m][e] = sigma^e delta^m (b)."""
    out = []
    y = b
    for m in range(mmax + 1):
        row = [y]
        z = y
        for _ in range(emax):
            z = d.sigma.apply(z)
            row.append(z)
        out.append(row)
        if m < mmax:
            y = apply_delta(d, y)
    return out


# ---------------------------------------------------------------------------
# skew polynomials


def negligible(R, x):
    """x is zero with at least the precision of the ring's own zero."""
    return x.is_zero() and R.precision(x) >= R.precision(R.zero())


class SkewPoly:
    """sum_k coeffs[k] x^k.

    Trailing zero coefficients are trimmed from ``coeffs``; zeros that are
    only zero at reduced precision are kept in ``pad`` so sums, products and
    comparisons still see how little is known there.
    """

    def __init__(self, coeffs, deriv):
        R = deriv.ring
        cs = [R.coerce(c) for c in coeffs]
        pad = []
        while cs and cs[-1].is_zero():
            pad.append(cs.pop())
        pad.reverse()
        while pad and negligible(R, pad[-1]):
            pad.pop()
        self.coeffs = cs
        self.pad = pad
        self.deriv = deriv

    @property
    def full(self):
        return self.coeffs + self.pad

    @property
    def ring(self):
        return self.deriv.ring

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @classmethod
    def x_power(cls, deriv, n, c=None):
        R = deriv.ring
        return cls([R.zero()] * n + [R.one() if c is None else c], deriv)

    @classmethod
    def constant(cls, deriv, c):
        return cls([c], deriv)

    def coeff(self, k):
        full = self.full
        if 0 <= k < len(full):
            return full[k]
        return self.ring.zero()

    def __add__(self, other):
        R = self.ring
        n = max(len(self.full), len(other.full))
        return SkewPoly([R.add(self.coeff(k), other.coeff(k)) for k in range(n)], self.deriv)

    def __sub__(self, other):
        R = self.ring
        n = max(len(self.full), len(other.full))
        return SkewPoly([R.sub(self.coeff(k), other.coeff(k)) for k in range(n)], self.deriv)

    def __neg__(self):
        return SkewPoly([-c for c in self.full], self.deriv)

    def __mul__(self, other):
        if isinstance(other, SkewPoly):
            return poly_mul(self, other)
        return poly_mul(self, SkewPoly([other], self.deriv))

    def __rmul__(self, other):
        return poly_mul(SkewPoly([other], self.deriv), self)

    def __pow__(self, n):
        out = SkewPoly([self.ring.one()], self.deriv)
        for _ in range(n):
            out = poly_mul(out, self)
        return out

    def shift(self, n):
        """self * x^n (coefficients are on the left, so this is a shift)."""
        if not self.full:
            return self
        return SkewPoly([self.ring.zero()] * n + self.full, self.deriv)

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, SkewPoly):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c!r})*x^{k}" for k, c in enumerate(self.coeffs) if not c.is_zero())


def poly_mul(f, g):
    """Exact product in R[x; sigma, delta]."""
    if not same_deriv(f.deriv, g.deriv):
        raise DerivMismatch("skew polynomials over different derivations")
    d = f.deriv
    R = d.ring
    fa, gb = f.full, g.full
    if not fa or not gb:
        return SkewPoly([], d)
    da = len(fa) - 1
    out = [R.zero() for _ in range(da + len(gb))]
    for j, b in enumerate(gb):
        if negligible(R, b):
            continue
        T = _table(d, b, da, da)
        for i, a in enumerate(fa):
            if negligible(R, a):
                continue
            for e in range(i + 1):
                c = comb(i, e)
                term = R.mul(a, T[i - e][e])
                if c != 1:
                    term = scale_int(term, c)
                out[j + e] = R.add(out[j + e], term)
    return SkewPoly(out, d)


# ---------------------------------------------------------------------------
# bounded series


@dataclass
class BoundedSeries:
    """sum_{n <= K} c_n x^n plus an unknown tail with filt >= L.

    ``guarantee[k]`` is the level P_k: the true coefficient differs from the
    stored one by an element of filtration >= P_k. ``exact_tail`` marks a
    polynomial payload whose tail is known to vanish.
    """

    coeffs: list
    L: int
    guarantee: list
    deriv: DerivSpec
    cert: object = None
    exact_tail: bool = False
    K_in: int | None = None
    info: dict = field(default_factory=dict)

    @property
    def K(self):
        return len(self.coeffs) - 1

    @property
    def ring(self):
        return self.deriv.ring

    def coeff(self, k):
        if k < len(self.coeffs):
            return self.coeffs[k]
        if self.exact_tail:
            return self.ring.zero()
        raise SeriesError(f"coefficient {k} beyond the known order {self.K}")

    def coeff_guarantee(self, k):
        if k < len(self.guarantee):
            return self.guarantee[k]
        return 10 ** 9 if self.exact_tail else self.L

    def to_poly(self):
        return SkewPoly(self.coeffs, self.deriv)

    def agrees_with(self, other, upto=None):
        """Coefficientwise equality within the common guarantee."""
        return not self.disagreements(other, upto)

    def disagreements(self, other, upto=None):
        R = self.ring
        n = min(self.K, other.K) if upto is None else upto
        bad = []
        for k in range(n + 1):
            level = min(self.coeff_guarantee(k), other.coeff_guarantee(k))
            diff = R.sub(self.coeff(k), other.coeff(k))
            if diff.filt().ge(level) is False:
                bad.append(k)
        return bad

    def to_json(self):
        R = self.ring
        return {
            "coeffs": [R.encode(c) for c in self.coeffs],
            "K": self.K,
            "L": self.L,
            "guarantee": list(self.guarantee),
            "K_in": self.K_in,
        }


def _lower(x):
    return x.filt().lower


def make_series(coeffs, deriv, cert=None, L=None, guarantee=None, exact_tail=False):
    R = deriv.ring
    cs = [R.coerce(c) for c in coeffs]
    if L is None:
        L = min(_lower(c) for c in cs) if cs else 0
    if guarantee is None:
        guarantee = [R.precision(c) for c in cs]
    return BoundedSeries(cs, int(L), list(guarantee), deriv, cert, exact_tail)


def from_poly(f, cert=None, K=None):
    cs = list(f.coeffs) or [f.ring.zero()]
    if K is not None:
        cs = cs + [f.ring.zero()] * (K + 1 - len(cs))
    return make_series(cs, f.deriv, cert, exact_tail=True)


def _check_cert(f, g):
    if f.cert is None or g.cert is None:
        raise MissingCertificate("series product needs a quasi-compatibility certificate")
    if not same_deriv(f.deriv, g.deriv):
        raise DerivMismatch("series over different derivations")
    c = f.cert
    if c.mode not in ("compatible", "quasi") or c.N is None:
        raise MissingCertificate(f"certificate mode {c.mode!r} does not bound the tail")
    return c


def choose_K_in(f, g, K_out, P_target):
    """Smallest i-cutoff whose tail bound reaches P_target for every k <= K_out."""
    c = _check_cert(f, g)
    base = f.L + g.L + c.B
    return K_out + c.N * max(0, P_target - base)


def series_mul(f, g, K_out=None, P_target=None, K_in=None):
    """Product of bounded series, coefficients 0..K_out with certified guarantees.

    The i-cutoff K_in is taken from the argument, else derived from P_target,
    else set to the largest usable value. Omitted terms have filtration at
    least L_f + L_g + B + floor((K_in + 1 - k) / N).
    """
    c = _check_cert(f, g)
    d = f.deriv
    R = d.ring
    B, N = c.B, c.N
    L0 = f.L + g.L + B
    if K_out is None:
        K_out = min(f.K, g.K) if not (f.exact_tail and g.exact_tail) else f.K + g.K
    if not g.exact_tail and K_out > g.K:
        raise GuaranteeUnreachable(f"K_out={K_out} exceeds the known order of the right factor", best={"K_out": g.K})
    if K_in is None:
        if P_target is not None:
            K_in = K_out + N * max(0, P_target - L0)
        elif f.exact_tail:
            K_in = f.K
        else:
            K_in = f.K
    if f.exact_tail:
        K_in = min(K_in, f.K)
        tail = [10 ** 9] * (K_out + 1)
    else:
        if K_in > f.K:
            best = [L0 + max(0, f.K + 1 - k) // N for k in range(K_out + 1)]
            raise GuaranteeUnreachable(f"needs K_in={K_in} but the left factor is known to order {f.K}", best=best)
        tail = [L0 + max(0, K_in + 1 - k) // N for k in range(K_out + 1)]

    out = [R.zero() for _ in range(K_out + 1)]
    prop = list(tail)
    for j in range(K_out + 1):
        b = g.coeff(j)
        emax = K_out - j
        T = _table(d, b, K_in, emax) if not b.is_zero() else None
        for i in range(K_in + 1):
            a = f.coeff(i)
            for e in range(min(i, emax) + 1):
                k = j + e
                decay = (i - e) // N
                # error propagated from the input guarantees
                lvl = min(f.coeff_guarantee(i) + g.L, f.L + g.coeff_guarantee(j)) + B + decay
                if lvl < prop[k]:
                    prop[k] = lvl
                if T is None or a.is_zero():
                    continue
                term = R.mul(a, T[i - e][e])
                cc = comb(i, e)
                if cc != 1:
                    term = scale_int(term, cc)
                out[k] = R.add(out[k], term)
    guarantee = []
    coeffs = []
    for k in range(K_out + 1):
        P = min(prop[k], R.precision(out[k]))
        guarantee.append(P)
        coeffs.append(R.truncate(out[k], P))
    if P_target is not None and min(guarantee) < P_target:
        raise GuaranteeUnreachable(f"best guarantee {min(guarantee)} < target {P_target}", best=guarantee)
    res = BoundedSeries(coeffs, L0, guarantee, d, c, f.exact_tail and g.exact_tail and K_out >= f.K + g.K, K_in)
    res.info = {"K_in": K_in, "B": B, "N": N, "P_target": P_target}
    return res


def scalar_mul(a, f):
    """a * f for a coefficient a (left multiplication)."""
    R = f.ring
    coeffs = [R.mul(a, c) for c in f.coeffs]
    La = _lower(a)
    return BoundedSeries(coeffs, f.L + La, [P + La for P in f.guarantee], f.deriv, f.cert, f.exact_tail)


def v_eps(f, m=None):
    """Integer-rescaled v_eps with eps = 1/m: min_n (m * w(c_n) + n), tail included."""
    if m is None:
        m = f.cert.N if f.cert is not None and f.cert.N else 1
    vals = []
    for n, c in enumerate(f.coeffs):
        w = c.filt()
        vals.append(FiltValue(w.kind, m * w.n + n))
    if not f.exact_tail:
        vals.append(FiltValue.atleast(m * f.L + f.K + 1))
    return filt_min(vals)


# ---------------------------------------------------------------------------
# X_n and relation checks


def x_minus_t(d):
    R = d.ring
    return SkewPoly([R.neg(d.t), R.one()], d)


def eval_X(level):
    """X_n as an explicit polynomial in the variable of level.base."""
    d = level.base
    R = d.ring
    q = level.degree
    if d.form != "inner":
        return SkewPoly.x_power(d, q)
    if not (d.sigma.apply(d.t) == d.t):
        raise SeriesError("X_n needs sigma(t) = t")
    g = x_minus_t(d)
    out = SkewPoly([R.one()], d)
    for _ in range(q):
        out = poly_mul(out, g)
    return out + SkewPoly([level.T], d)


def relation_check(d, kind, level=None, horizon=None, elements=None):
    """Evaluate a defining/normality/subring relation on the spanning set."""
    R = d.ring
    els = elements if elements is not None else spanning_set(R, horizon)
    x = SkewPoly.x_power(d, 1)
    if kind == "normality":
        if d.form != "inner" or not (d.sigma.apply(d.t) == d.t):
            return {"kind": kind, "pass": False, "checked": 0, "witness": None, "reason": "needs sigma(t) = t"}
        g = x_minus_t(d)
    if kind == "subring":
        X = eval_X(level)
    checked = 0
    for r in els:
        rp = SkewPoly([r], d)
        if kind == "defining":
            lhs = poly_mul(x, rp)
            rhs = SkewPoly([apply_delta(d, r), d.sigma.apply(r)], d)
        elif kind == "normality":
            lhs = poly_mul(g, rp)
            rhs = poly_mul(SkewPoly([d.sigma.apply(r)], d), g)
        elif kind == "subring":
            lhs = poly_mul(X, rp)
            rhs = poly_mul(SkewPoly([level.Sigma.apply(r)], d), X) + SkewPoly([apply_delta(level.Delta, r)], d)
        else:
            raise SeriesError(f"unknown relation kind {kind!r}")
        checked += 1
        if lhs != rhs:
            return {"kind": kind, "pass": False, "checked": checked, "witness": R.encode(r)}
    return {"kind": kind, "pass": True, "checked": checked, "witness": None}
