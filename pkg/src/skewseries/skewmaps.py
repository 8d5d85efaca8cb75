"""Automorphisms, sigma-derivations and their certificates.

An automorphism is a chain of primitives applied left to right:

* ``Subst(f)``: pi -> f(pi) on every Laurent scalar, f of valuation 1 with a
  unit leading coefficient.
* ``Conj(a)``: x -> a x a^-1 for a unit a.
* ``CycleShift(k)``: rotates the factors of a Product ring.

A derivation is either ``Inner(t)``, d(s) = t s - sigma(s) t, or
``BaseTwisted(theta)``: the sigma-derivation of the Laurent scalars with
d(pi) = theta, extended entrywise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

from . import kernels
from .coeffring import (
    FiltValue,
    LaurentElem,
    Matrix,
    Product,
    ProductElem,
    RingError,
    TruncLaurent,
    laurent_base,
    map_scalars,
)


class MapError(RingError):
    pass


class DerivMismatch(MapError):
    pass


_BIG = 10 ** 6


def _ext(R):
    # same Laurent ring without the valuation cap, for intermediate work
    return TruncLaurent(R.p, R.relprec, _BIG)


def cast(R, x):
    """Move a Laurent element into ring R (clipping precision to R's cap)."""
    if x.is_zero():
        return R.zero(x.prec)
    return R._make(x.val, x.digits, x.prec)


# ---------------------------------------------------------------------------
# primitives


class _UnitSeries:
    """Digits of a unit power series w, extended lazily to any length."""

    def __init__(self, p, gen):
        self.p = p
        self._gen = gen
        self._digits = ()
        self._pow = {}

    def digits(self, n):
        if len(self._digits) < n:
            self._digits = self._gen(max(n, 2 * len(self._digits)))
            self._pow = {}
        return self._digits[:n]

    def power(self, v, n):
        key = (v, n)
        if key not in self._pow:
            p = self.p
            w = self.digits(n)
            if v < 0:
                w = kernels.inv_trunc(w, n, p)
                v = -v
            out = (1,) + (0,) * (n - 1)
            base = w
            while v:
                if v & 1:
                    out = kernels.conv_trunc(out, base, n, p)
                base = kernels.conv_trunc(base, base, n, p)
                v >>= 1
            self._pow[key] = out
        return self._pow[key]


def _substitute(R, x, w):
    """x(pi * w(pi)) for a Laurent element x and unit series w."""
    if x.is_zero():
        return x
    p = R.p
    n = len(x.digits)
    wd = w.digits(n)
    u = x.digits
    # Horner: S = sum u_k (pi w)^k mod pi^n
    S = (u[n - 1],) + (0,) * (n - 1)
    for k in range(n - 2, -1, -1):
        t = kernels.conv_trunc(S, wd, n - 1, p) if n > 1 else ()
        S = kernels.add_shifted((u[k],) + (0,) * (n - 1), t, 1, n, p)
    S = kernels.conv_trunc(S, w.power(x.val, n), n, p)
    return R._make(x.val, S, x.val + n)


def _series_compose_eval(p, coeffs, h, n):
    # sum_k coeffs[k] * (pi h)^k mod pi^n, coeffs indexed from exponent 0
    S = (0,) * n
    powk = (1,) + (0,) * (n - 1)
    for k, c in enumerate(coeffs):
        if k >= n:
            break
        if c:
            S = kernels.add_shifted(S, tuple((c * d) % p for d in powk), k, n, p)
        powk = kernels.conv_trunc(powk, h, n, p)
    return S


class Subst:
    kind = "Subst"

    def __init__(self, terms, p):
        terms = {int(e): int(c) % p for e, c in dict(terms).items() if int(c) % p}
        if not terms or min(terms) != 1:
            raise MapError("Subst needs f of valuation exactly 1 with a unit leading coefficient")
        if min(terms) < 1:
            raise MapError("Subst series must be a power series")
        self.terms = terms
        self.p = p
        top = max(terms)
        self._coeffs = tuple(terms.get(k, 0) for k in range(top + 1))
        self.forward = _UnitSeries(p, self._forward_digits)
        self.backward = _UnitSeries(p, self._reverse_digits)

    def _forward_digits(self, n):
        return tuple(self.terms.get(k + 1, 0) for k in range(n))

    def _reverse_digits(self, n):
        # h with f(pi * h) = pi, solved one coefficient at a time
        p = self.p
        f1inv = pow(self.terms[1], p - 2, p)
        h = [f1inv] + [0] * (n - 1)
        for k in range(1, n):
            val = _series_compose_eval(p, self._coeffs, tuple(h[: k + 1]), k + 2)
            e = val[k + 1]
            h[k] = (-e * f1inv) % p
        return tuple(h)

    def apply_scalar(self, R, x, inverse=False):
        if not isinstance(R, TruncLaurent):
            raise MapError(f"Subst does not act on {R!r}")
        return _substitute(R, x, self.backward if inverse else self.forward)

    def apply(self, R, x, inverse=False):
        return map_scalars(R, x, lambda B, e: self.apply_scalar(B, e, inverse))

    def to_json(self):
        return {"Subst": {"terms": [[e, c] for e, c in sorted(self.terms.items())]}}

    def __repr__(self):
        return "Subst(" + " + ".join(f"{c}*pi^{e}" for e, c in sorted(self.terms.items())) + ")"


class Conj:
    kind = "Conj"

    def __init__(self, a):
        self.a = a
        try:
            self.ainv = a.ring.invert(a)
        except RingError as exc:
            raise MapError(f"Conj needs a unit: {exc}") from exc

    def loss(self):
        return -(self.a.filt().lower + self.ainv.filt().lower)

    def apply(self, R, x, inverse=False):
        if x.ring != self.a.ring:
            raise MapError(f"Conj over {self.a.ring!r} applied to {R!r}")
        if inverse:
            return R.mul(R.mul(self.ainv, x), self.a)
        return R.mul(R.mul(self.a, x), self.ainv)

    def to_json(self):
        return {"Conj": self.a.ring.encode(self.a)}

    def __repr__(self):
        return f"Conj({self.a!r})"


class CycleShift:
    kind = "CycleShift"

    def __init__(self, k):
        self.k = int(k)

    def apply(self, R, x, inverse=False):
        if not isinstance(R, Product):
            raise MapError("CycleShift acts on Product rings only")
        if len(set(R.factors)) != 1:
            raise MapError("CycleShift needs identical factors")
        r = len(R.factors)
        k = -self.k if inverse else self.k
        parts = x.parts
        return ProductElem(R, tuple(parts[(i - k) % r] for i in range(r)))

    def to_json(self):
        return {"CycleShift": self.k}

    def __repr__(self):
        return f"CycleShift({self.k})"


# ---------------------------------------------------------------------------
# automorphisms


@dataclass
class AutoSpec:
    """sigma = (chain applied left to right) ** exponent."""

    ring: object
    chain: list = field(default_factory=list)
    exponent: int = 1

    def power(self, k):
        return AutoSpec(self.ring, list(self.chain), self.exponent * k)

    @property
    def is_identity(self):
        return not self.chain or self.exponent == 0

    def _once(self, x, inverse):
        R = self.ring
        if inverse:
            for prim in reversed(self.chain):
                x = prim.apply(R, x, True)
        else:
            for prim in self.chain:
                x = prim.apply(R, x, False)
        return x

    def apply(self, x, inverse=False, times=1):
        """sigma^times(x), or sigma^-times(x) with inverse=True."""
        total = self.exponent * times * (-1 if inverse else 1)
        if not self.chain:
            return x
        back = total < 0
        for _ in range(abs(total)):
            x = self._once(x, back)
        return x

    __call__ = apply

    def inverse_spec(self):
        return AutoSpec(self.ring, list(self.chain), -self.exponent)

    def only_subst(self):
        return all(isinstance(c, Subst) for c in self.chain)

    def to_json(self):
        return {"chain": [c.to_json() for c in self.chain], "exponent": self.exponent}

    def __repr__(self):
        body = " o ".join(repr(c) for c in self.chain) or "id"
        return f"({body})^{self.exponent}" if self.exponent != 1 else body


def apply_auto(a, x, inverse=False):
    return a.apply(x, inverse)


# ---------------------------------------------------------------------------
# derivations


@dataclass
class DerivSpec:
    """A sigma-derivation.

    form is ``"inner"`` (uses t), ``"base_twisted"`` (uses theta) or
    ``"power"`` (the ``power``-fold iterate of ``parent``; char p levels of a
    base-twisted derivation).
    """

    form: str
    sigma: AutoSpec
    t: object = None
    theta: object = None
    parent: "DerivSpec" = None
    power: int = 1

    def __post_init__(self):
        R = self.sigma.ring
        if self.form == "base_twisted":
            L = laurent_base(R)
            if L is None:
                raise MapError("BaseTwisted needs Laurent scalars (char p)")
            if not self.sigma.only_subst():
                raise MapError("BaseTwisted needs sigma built from Subst primitives")
            self._L = L
            self._cache = {}

    @property
    def ring(self):
        return self.sigma.ring

    @staticmethod
    def inner(t, sigma):
        return DerivSpec("inner", sigma, t=sigma.ring.coerce(t))

    @staticmethod
    def base_twisted(theta, sigma):
        return DerivSpec("base_twisted", sigma, theta=theta)

    def __call__(self, x):
        return apply_delta(self, x)

    def to_json(self):
        R = self.ring
        if self.form == "inner":
            return {"Inner": R.encode(self.t)}
        if self.form == "base_twisted":
            return {"BaseTwisted": self._L.encode(self.theta)}
        return {"Power": self.power, "of": self.parent.to_json()}

    def __repr__(self):
        if self.form == "inner":
            return f"Inner({self.t!r}; sigma={self.sigma!r})"
        if self.form == "base_twisted":
            return f"BaseTwisted({self.theta!r}; sigma={self.sigma!r})"
        return f"({self.parent!r})^{self.power}"

    # --- BaseTwisted on a single Laurent scalar -------------------------------

    def _dpi(self, j):
        """d(pi^j) in the uncapped Laurent ring."""
        if j in self._cache:
            return self._cache[j]
        E = _ext(self._L)
        if j == 0:
            out = E.zero(_BIG)
        elif j > 0:
            sp = self._sigma_pi()
            prev = self._dpi(j - 1)
            out = E.add(E.mul(cast(E, self.theta), E.monomial(j - 1)), E.mul(sp, prev))
        else:
            sp_inv = E.invert(self._sigma_pi())
            d = self._dpi(-j)
            out = E.neg(E.mul(E.mul(sp_inv ** (-j), d), E.monomial(j)))
        self._cache[j] = out
        return out

    def _sigma_pi(self):
        if "sp" not in self._cache:
            E = _ext(self._L)
            x = E.monomial(1)
            for _ in range(abs(self.sigma.exponent)):
                for prim in self.sigma.chain:
                    x = prim.apply_scalar(E, x, self.sigma.exponent < 0)
            self._cache["sp"] = x
        return self._cache["sp"]

    def _theta_scalar(self, R, x):
        E = _ext(R)
        vt = self.theta.filt().lower if not self.theta.is_zero() else self.theta.prec
        prec = x.prec + vt - 1
        acc = E.zero(_BIG)
        for i, c in enumerate(x.digits):
            if c:
                acc = E.add(acc, E.scale(self._dpi(x.val + i), c))
        acc = E.truncate(acc, prec)
        return cast(R, acc)


def apply_delta(d, x):
    """d(x) for a DerivSpec d."""
    R = d.ring
    if d.form == "inner":
        return R.sub(R.mul(d.t, x), R.mul(d.sigma.apply(x), d.t))
    if d.form == "base_twisted":
        return map_scalars(R, x, lambda B, e: d._theta_scalar(B, e))
    if d.form == "power":
        for _ in range(d.power):
            x = apply_delta(d.parent, x)
        return x
    raise MapError(f"unknown derivation form {d.form!r}")


def iterate_delta(d, x, n):
    for _ in range(n):
        x = apply_delta(d, x)
    return x


def sigma_fixes(sigma, t):
    return sigma.apply(t) == t


def delta_power_closed(d, n, s):
    """delta^n(s) = sum_k C(n,k) (-1)^k t^(n-k) sigma^k(s) t^k for inner d with sigma(t) = t."""
    if d.form != "inner":
        raise MapError("closed form needs an inner derivation")
    if not sigma_fixes(d.sigma, d.t):
        raise MapError("closed form needs sigma(t) = t at the horizon")
    R = d.ring
    t = d.t
    tp = [R.one()]
    for _ in range(n):
        tp.append(R.mul(tp[-1], t))
    acc = R.zero()
    sk = s
    for k in range(n + 1):
        c = comb(n, k) * (-1) ** k
        term = R.mul(R.mul(tp[n - k], sk), tp[k])
        acc = R.add(acc, R.mul(R.coerce(c), term))
        sk = d.sigma.apply(sk)
    return acc


def delta_power_tform(d, n, s):
    """t^n s - sigma^n(s) t^n (the char p shape of delta^(p^m))."""
    R = d.ring
    tn = d.t ** n
    return R.sub(R.mul(tn, s), R.mul(d.sigma.apply(s, times=n), tn))


# ---------------------------------------------------------------------------
# certificates


def _deg_bound(fx, fr):
    # certified lower bound for filt(phi(r)) - filt(r)
    return fx.lower - fr.n


@dataclass
class CompatCertificate:
    B: int
    N: int | None
    mode: str
    horizon: int
    window: tuple
    witnesses: list
    failure_witness: dict | None = None
    deg_sigma_minus_id: int | None = None
    deg_delta: int | None = None

    def to_json(self):
        return {
            "B": self.B,
            "N": self.N,
            "mode": self.mode,
            "horizon": self.horizon,
            "window": {"I": list(self.window[0]), "J": list(self.window[1])},
            "deg_sigma_minus_id": self.deg_sigma_minus_id,
            "deg_delta": self.deg_delta,
            "witnesses": self.witnesses,
            "failure_witness": self.failure_witness,
            "scope": "verified at horizon on the spanning set",
        }


def spanning_set(ring, horizon=None):
    return [r for r in ring.spanning_set(horizon) if r.filt().is_finite]


def certify(d, horizon=None, window=((-8, 8), (0, 16)), N_max=32):
    """Strong boundedness / (quasi-)compatibility certificate at the horizon.

    Degrees of sigma^i delta^j are evaluated on the spanning set for i in the
    I range and j in the J range. The map family counts as unbounded below
    (mode ``failed``) when the exact degrees seen over the full window go
    strictly lower than those seen over the half-size window.
    """
    R = d.ring
    (i_lo, i_hi), (j_lo, j_hi) = window
    jmax = max(j_hi, N_max)
    span = spanning_set(R, horizon)
    best = {}  # (i, j) -> (lower bound, exact?, spanning index)
    dN = [None] * (jmax + 1)
    dsig = None
    for idx, r in enumerate(span):
        fr = r.filt()
        chain = [r]
        for _ in range(jmax):
            chain.append(apply_delta(d, chain[-1]))
        for j in range(1, jmax + 1):
            b = _deg_bound(chain[j].filt(), fr)
            if dN[j] is None or b < dN[j][0]:
                dN[j] = (b, idx)
        sr = d.sigma.apply(r)
        b = _deg_bound(R.sub(sr, r).filt(), fr)
        if dsig is None or b < dsig[0]:
            dsig = (b, idx)
        for j in range(j_lo, j_hi + 1):
            y = chain[j]
            for direction, rng in ((False, range(0, i_hi + 1)), (True, range(1, -i_lo + 1))):
                z = y
                prev = 0
                for i in rng:
                    z = d.sigma.apply(z, inverse=direction, times=i - prev)
                    prev = i
                    key = (-i if direction else i, j)
                    fz = z.filt()
                    b = _deg_bound(fz, fr)
                    cur = best.get(key)
                    if cur is None or b < cur[0]:
                        best[key] = (b, fz.is_finite, idx)

    def witness(name, i, j, b, idx):
        return {"map": name, "i": i, "j": j, "degree_lower_bound": b, "element": R.encode(span[idx])}

    B_key = min(best, key=lambda k: (best[k][0], abs(k[0]), k[1], k[0]))
    B = best[B_key][0]
    witnesses = [witness("sigma^i delta^j", B_key[0], B_key[1], B, best[B_key][2])]
    witnesses.append(witness("sigma - id", 1, 0, dsig[0], dsig[1]))
    witnesses.append(witness("delta", 0, 1, dN[1][0], dN[1][1]))

    # unboundedness test on exact degrees
    def exact_min(ilim, jlim):
        vals = [(v[0], abs(k[0]), -k[0], k[1], k) for k, v in best.items() if v[1] and abs(k[0]) <= ilim and k[1] - j_lo <= jlim]
        return (min(vals)[0], min(vals)[-1]) if vals else None

    full = exact_min(max(i_hi, -i_lo), j_hi - j_lo)
    half = exact_min(max(i_hi, -i_lo) // 2, (j_hi - j_lo) // 2)
    failure = None
    if full is not None and half is not None and full[0] < half[0]:
        k = full[1]
        failure = witness("sigma^i delta^j", k[0], k[1], full[0], best[k][2])
        failure["half_window_minimum"] = half[0]
        failure["reason"] = "degree keeps decreasing as the window grows"

    N = None
    for n in range(1, N_max + 1):
        if dN[n][0] >= 1:
            N = n
            witnesses.append(witness("delta^N", 0, n, dN[n][0], dN[n][1]))
            break

    compatible = dsig[0] >= 1 and dN[1][0] >= 1
    if failure is not None:
        mode = "failed"
    elif compatible:
        mode = "compatible"
    elif N is not None:
        mode = "quasi"
    else:
        mode = "strongly_bounded_only"
    return CompatCertificate(
        B=B,
        N=N,
        mode=mode,
        horizon=horizon if horizon is not None else getattr(laurent_base(R), "cap", 0) - 1,
        window=((i_lo, i_hi), (j_lo, j_hi)),
        witnesses=witnesses,
        failure_witness=failure,
        deg_sigma_minus_id=dsig[0],
        deg_delta=dN[1][0],
    )


def recheck_witness(d, w):
    """Recompute the degree lower bound recorded in a certificate witness."""
    R = d.ring
    r = R.decode(w["element"])
    if w["map"] == "sigma - id":
        y = R.sub(d.sigma.apply(r), r)
    else:
        y = iterate_delta(d, r, w["j"])
        i = w["i"]
        y = d.sigma.apply(y, inverse=i < 0, times=abs(i))
    return _deg_bound(y.filt(), r.filt())


# ---------------------------------------------------------------------------
# levels


@dataclass
class DerivedLevel:
    n: int
    p: int
    Sigma: AutoSpec
    T: object
    Delta: DerivSpec
    base: DerivSpec

    @property
    def degree(self):
        return self.p ** self.n


def level_sign(p):
    return 1 if (p + 1) % 2 == 0 else -1


def derive_level(d, n, check=False, horizon=None):
    """(Sigma_n, Delta_n, T_n) with Sigma_n = sigma^(p^n), T_n = (-1)^(p+1) t^(p^n)."""
    R = d.ring
    p = R.p
    q = p ** n
    Sigma = d.sigma.power(q)
    if d.form == "inner":
        T = R.mul(R.coerce(level_sign(p)), d.t ** q)
        Delta = DerivSpec("inner", Sigma, t=T)
        if check and R.is_char_p:
            pw = DerivSpec("power", Sigma, parent=d, power=q)
            for r in spanning_set(R, horizon):
                if apply_delta(Delta, r) != apply_delta(pw, r):
                    raise DerivMismatch(f"Inner(T_{n}) and delta^{q} differ on {r!r}")
        return DerivedLevel(n, p, Sigma, T, Delta, d)
    if not R.is_char_p:
        raise MapError("the delta^(p^n) route needs characteristic p")
    if q == 1:
        return DerivedLevel(n, p, Sigma, None, d, d)
    return DerivedLevel(n, p, Sigma, None, DerivSpec("power", Sigma, parent=d, power=q), d)


def check_commuting(d, horizon=None):
    """Check sigma(delta(s)) = delta(sigma(s)) on the spanning set."""
    R = d.ring
    checked = 0
    for r in spanning_set(R, horizon):
        lhs = d.sigma.apply(apply_delta(d, r))
        rhs = apply_delta(d, d.sigma.apply(r))
        checked += 1
        if lhs != rhs:
            return {"pass": False, "checked": checked, "witness": R.encode(r)}
    return {"pass": True, "checked": checked, "witness": None}


# ---------------------------------------------------------------------------
# JSON


def auto_from_json(ring, data):
    chain = []
    L = laurent_base(ring)
    for entry in data.get("chain", []):
        (kind, arg), = entry.items()
        if kind == "Subst":
            if L is None:
                raise MapError("Subst needs Laurent scalars")
            terms = arg["terms"] if isinstance(arg, dict) else arg
            chain.append(Subst({int(e): c for e, c in terms}, L.p))
        elif kind == "Conj":
            chain.append(Conj(ring.decode(arg)))
        elif kind == "CycleShift":
            chain.append(CycleShift(arg))
        else:
            raise MapError(f"unknown automorphism primitive {kind!r}")
    return AutoSpec(ring, chain, int(data.get("exponent", 1)))


def deriv_from_json(sigma, data):
    (kind, arg), = data.items()
    ring = sigma.ring
    if kind == "Inner":
        return DerivSpec.inner(ring.decode(arg), sigma)
    if kind == "BaseTwisted":
        L = laurent_base(ring)
        if L is None:
            raise MapError("BaseTwisted needs char p Laurent scalars")
        return DerivSpec.base_twisted(L.decode(arg), sigma)
    raise MapError(f"unknown derivation form {kind!r}")


__all__ = [
    "AutoSpec",
    "CompatCertificate",
    "Conj",
    "CycleShift",
    "DerivMismatch",
    "DerivSpec",
    "DerivedLevel",
    "FiltValue",
    "LaurentElem",
    "MapError",
    "Matrix",
    "Subst",
    "apply_auto",
    "apply_delta",
    "certify",
    "check_commuting",
    "delta_power_closed",
    "derive_level",
]
