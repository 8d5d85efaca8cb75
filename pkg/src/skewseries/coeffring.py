"""Coefficient rings at finite precision.

Four ring shapes are supported:

* ``Zmod(p, N)``: integers mod p^N with the p-adic valuation.
* ``TruncLaurent(p, relprec, cap)``: Laurent series over F_p in a
  uniformiser ``pi``. Every element carries its own absolute precision
  ``prec``: it is known modulo ``pi^prec``. A literal of valuation ``v`` is
  created with ``prec = min(v + relprec, cap)``, so ``cap`` is the largest
  representable valuation and the canonical zero is ``AtLeast(cap)``.
* ``Matrix(s, base)``: s-by-s matrices, entrywise minimum filtration.
* ``Product(factors)``: tuples, factorwise minimum filtration.

Elements are immutable. Equality (``==``) means "the difference is zero at
the available precision".
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from . import kernels


class RingError(Exception):
    pass


class RingMismatch(RingError):
    pass


class NotAUnit(RingError):
    pass


class PrecisionInsufficient(RingError):
    pass


# ---------------------------------------------------------------------------
# filtration values


@dataclass(frozen=True)
class FiltValue:
    """A certified filtration value.

    ``kind == "finite"`` means the value is exactly ``n``; ``kind == "atleast"``
    means it is at least ``n`` (possibly infinite, i.e. the element may be 0).
    """

    kind: str
    n: int

    @staticmethod
    def finite(n):
        return FiltValue("finite", int(n))

    @staticmethod
    def atleast(h):
        return FiltValue("atleast", int(h))

    @property
    def is_finite(self):
        return self.kind == "finite"

    @property
    def lower(self):
        return self.n

    def lt(self, other):
        """Strict comparison; returns None when it cannot be decided."""
        if self.is_finite and other.is_finite:
            return self.n < other.n
        if self.is_finite:
            # Finite(a) < AtLeast(h) iff a < h; otherwise undecided
            return True if self.n < other.n else None
        if other.is_finite:
            # AtLeast(h) < Finite(b) is false once h >= b
            return False if self.n >= other.n else None
        return None

    def ge(self, bound):
        """Is the value >= bound?  None when undecided."""
        if self.n >= bound:
            return True
        return False if self.is_finite else None

    def shift(self, k):
        return FiltValue(self.kind, self.n + k)

    def __add__(self, other):
        if self.is_finite and other.is_finite:
            return FiltValue.finite(self.n + other.n)
        return FiltValue.atleast(self.n + other.n)

    def __repr__(self):
        return f"Finite({self.n})" if self.is_finite else f"AtLeast({self.n})"

    def to_json(self):
        return {"kind": self.kind, "value": self.n}


def filt_min(values):
    """Minimum of filtration values under the lower-bound semantics."""
    fin = [v.n for v in values if v.is_finite]
    atl = [v.n for v in values if not v.is_finite]
    if fin and (not atl or min(fin) < min(atl)):
        return FiltValue.finite(min(fin))
    if atl:
        return FiltValue.atleast(min(atl))
    raise ValueError("empty filtration minimum")


def vp_int(n, p):
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _legendre(n, p):
    # v_p(n!)
    v = 0
    q = p
    while q <= n:
        v += n // q
        q *= p
    return v


def vp_binom(p, n, i):
    """p-adic valuation of binom(p^n, i) via Legendre's formula.

    Returns 0 at the endpoints i = 0 and i = p^n.
    """
    top = p ** n
    if i < 0 or i > top:
        raise ValueError(f"i={i} outside [0, {top}]")
    return _legendre(top, p) - _legendre(i, p) - _legendre(top - i, p)


# ---------------------------------------------------------------------------
# ring specifications


class Ring:
    p: int

    def check(self, x):
        if x.ring is not self and x.ring != self:
            raise RingMismatch(f"{x.ring!r} vs {self!r}")

    @property
    def is_char_p(self):
        return False

    def __call__(self, value):
        return self.coerce(value)


class Element:
    __slots__ = ()

    def __add__(self, other):
        return self.ring.add(self, self.ring.coerce(other))

    def __radd__(self, other):
        return self.ring.add(self.ring.coerce(other), self)

    def __sub__(self, other):
        return self.ring.sub(self, self.ring.coerce(other))

    def __rsub__(self, other):
        return self.ring.sub(self.ring.coerce(other), self)

    def __mul__(self, other):
        return self.ring.mul(self, self.ring.coerce(other))

    def __rmul__(self, other):
        return self.ring.mul(self.ring.coerce(other), self)

    def __neg__(self):
        return self.ring.neg(self)

    def __pow__(self, k):
        if k < 0:
            return self.ring.invert(self) ** (-k)
        out = self.ring.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Element):
            try:
                other = self.ring.coerce(other)
            except (TypeError, RingError):
                return NotImplemented
        if other.ring != self.ring:
            return False
        return self.ring.sub(self, other).is_zero()

    __hash__ = None

    def filt(self):
        return self.ring.filt(self)

    def precision(self):
        return self.ring.precision(self)

    def inverse(self):
        return self.ring.invert(self)


# --- Z/p^N ------------------------------------------------------------------


class ZmodElem(Element):
    __slots__ = ("ring", "value")

    def __init__(self, ring, value):
        self.ring = ring
        self.value = value

    def is_zero(self):
        return self.value == 0

    def key(self):
        return ("z", self.value)

    def __repr__(self):
        return f"{self.value} mod {self.ring.p}^{self.ring.N}"


@dataclass(frozen=True)
class Zmod(Ring):
    p: int
    N: int

    @property
    def modulus(self):
        return self.p ** self.N

    def coerce(self, value):
        if isinstance(value, ZmodElem):
            self.check(value)
            return value
        if isinstance(value, Element):
            raise RingMismatch(f"{value.ring!r} vs {self!r}")
        return ZmodElem(self, int(value) % self.modulus)

    def zero(self):
        return ZmodElem(self, 0)

    def one(self):
        return ZmodElem(self, 1 % self.modulus)

    def add(self, x, y):
        self.check(x)
        self.check(y)
        return ZmodElem(self, (x.value + y.value) % self.modulus)

    def sub(self, x, y):
        self.check(x)
        self.check(y)
        return ZmodElem(self, (x.value - y.value) % self.modulus)

    def neg(self, x):
        return ZmodElem(self, (-x.value) % self.modulus)

    def mul(self, x, y):
        self.check(x)
        self.check(y)
        return ZmodElem(self, (x.value * y.value) % self.modulus)

    def filt(self, x):
        if x.value == 0:
            return FiltValue.atleast(self.N)
        return FiltValue.finite(vp_int(x.value, self.p))

    def precision(self, x):
        return self.N

    def truncate(self, x, level):
        # reduce modulo p^level (absolute precision cannot be lowered per element)
        if level >= self.N:
            return x
        return ZmodElem(self, x.value % (self.p ** max(level, 0)))

    def is_unit(self, x):
        return x.value % self.p != 0

    def invert(self, x):
        self.check(x)
        if x.value % self.p == 0:
            raise NotAUnit(f"{x.value} is divisible by {self.p}")
        return ZmodElem(self, pow(x.value, -1, self.modulus))

    def spanning_set(self, horizon=None):
        top = self.N if horizon is None else min(horizon + 1, self.N)
        return [ZmodElem(self, self.p ** k) for k in range(top)]

    def random(self, rng, min_val=0):
        v = rng.randint(0, self.modulus - 1)
        if min_val > 0:
            v = (v * self.p ** min_val) % self.modulus
        return ZmodElem(self, v)

    def random_unit(self, rng):
        while True:
            v = rng.randint(1, self.modulus - 1)
            if v % self.p:
                return ZmodElem(self, v)

    def encode(self, x):
        return x.value

    def decode(self, data):
        return self.coerce(int(data))

    def to_json(self):
        return {"type": "Zmod", "p": self.p, "N": self.N}

    def __repr__(self):
        return f"Zmod({self.p},{self.N})"


# --- truncated Laurent series over F_p ---------------------------------------


class LaurentElem(Element):
    """pi^val * (digits) known modulo pi^prec.

    ``digits[0]`` is nonzero for a nonzero element; the canonical zero has
    empty digits and ``val == prec``.
    """

    __slots__ = ("ring", "val", "digits", "prec")

    def __init__(self, ring, val, digits, prec):
        self.ring = ring
        self.val = val
        self.digits = digits
        self.prec = prec

    def is_zero(self):
        return not self.digits

    def key(self):
        return ("l", self.val, self.digits, self.prec)

    def coeff(self, k):
        i = k - self.val
        if 0 <= i < len(self.digits):
            return self.digits[i]
        return 0

    def terms(self):
        return {self.val + i: c for i, c in enumerate(self.digits) if c}

    def __repr__(self):
        if not self.digits:
            return f"O(pi^{self.prec})"
        parts = []
        for i, c in enumerate(self.digits):
            if c:
                e = self.val + i
                parts.append(f"{c}*pi^{e}" if c != 1 else f"pi^{e}")
        return " + ".join(parts) + f" + O(pi^{self.prec})"


@dataclass(frozen=True)
class TruncLaurent(Ring):
    p: int
    relprec: int
    cap: int = None

    def __post_init__(self):
        if self.cap is None:
            object.__setattr__(self, "cap", self.relprec)

    @property
    def is_char_p(self):
        return True

    def _make(self, val, digits, prec):
        # normalise: strip leading zeros, clip precision to the cap
        prec = min(prec, self.cap)
        n = prec - val
        if n <= 0:
            return LaurentElem(self, prec, (), prec)
        digits = digits[:n]
        i = 0
        while i < len(digits) and digits[i] == 0:
            i += 1
        if i == len(digits):
            return LaurentElem(self, prec, (), prec)
        digits = digits[i:]
        val += i
        if len(digits) < prec - val:
            digits = digits + (0,) * (prec - val - len(digits))
        return LaurentElem(self, val, digits, prec)

    def zero(self, prec=None):
        prec = self.cap if prec is None else min(prec, self.cap)
        return LaurentElem(self, prec, (), prec)

    def one(self):
        return self.monomial(0)

    def monomial(self, k, c=1):
        c %= self.p
        if c == 0 or k >= self.cap:
            return self.zero()
        prec = min(k + self.relprec, self.cap)
        return LaurentElem(self, k, (c,) + (0,) * (prec - k - 1), prec)

    def from_terms(self, terms, prec=None):
        """Element from a {exponent: coeff} mapping (a Laurent polynomial)."""
        terms = {int(e): int(c) % self.p for e, c in dict(terms).items()}
        terms = {e: c for e, c in terms.items() if c}
        if not terms:
            return self.zero(prec)
        v = min(terms)
        if prec is None:
            prec = v + self.relprec
        prec = min(prec, self.cap)
        n = prec - v
        if n <= 0:
            return self.zero(prec)
        digits = tuple(terms.get(v + i, 0) for i in range(n))
        return self._make(v, digits, prec)

    def coerce(self, value):
        if isinstance(value, LaurentElem):
            self.check(value)
            return value
        if isinstance(value, Element):
            raise RingMismatch(f"{value.ring!r} vs {self!r}")
        if isinstance(value, dict):
            return self.from_terms(value)
        return self.monomial(0, int(value))

    def _padded(self, x):
        if x.is_zero():
            return ()
        return x.digits

    def add(self, x, y):
        self.check(x)
        self.check(y)
        prec = min(x.prec, y.prec)
        if x.is_zero():
            return self._make(y.val, y.digits, prec) if y.digits else self.zero(prec)
        if y.is_zero():
            return self._make(x.val, x.digits, prec)
        if x.val > y.val:
            x, y = y, x
        n = prec - x.val
        if n <= 0:
            return self.zero(prec)
        digits = kernels.add_shifted(x.digits, y.digits, y.val - x.val, n, self.p)
        return self._make(x.val, digits, prec)

    def neg(self, x):
        p = self.p
        return LaurentElem(self, x.val, tuple((-c) % p for c in x.digits), x.prec)

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def mul(self, x, y):
        self.check(x)
        self.check(y)
        prec = min(x.val + y.prec, y.val + x.prec, self.cap)
        if x.is_zero() or y.is_zero():
            return self.zero(prec)
        val = x.val + y.val
        n = prec - val
        if n <= 0:
            return self.zero(prec)
        return LaurentElem(self, val, kernels.conv_trunc(x.digits, y.digits, n, self.p), prec)

    def scale(self, x, c):
        c %= self.p
        if c == 0:
            return self.zero(x.prec)
        return LaurentElem(self, x.val, tuple((c * d) % self.p for d in x.digits), x.prec)

    def shift(self, x, k):
        """Multiply by pi^k exactly (precision moves with it)."""
        if x.is_zero():
            return self.zero(x.prec + k)
        return self._make(x.val + k, x.digits, x.prec + k)

    def filt(self, x):
        if x.is_zero():
            return FiltValue.atleast(x.prec)
        return FiltValue.finite(x.val)

    def precision(self, x):
        return x.prec

    def truncate(self, x, level):
        if level >= x.prec:
            return x
        if x.is_zero():
            return self.zero(level)
        return self._make(x.val, x.digits, level)

    def is_unit(self, x):
        return not x.is_zero()

    def invert(self, x):
        self.check(x)
        if x.is_zero():
            if x.prec >= self.cap:
                raise NotAUnit("zero is not a unit")
            raise PrecisionInsufficient(f"element is O(pi^{x.prec})")
        n = len(x.digits)
        val = -x.val
        prec = min(val + n, self.cap)
        m = prec - val
        if m <= 0:
            raise PrecisionInsufficient("inverse has no significant digits below the cap")
        return LaurentElem(self, val, kernels.inv_trunc(x.digits, m, self.p), prec)

    def spanning_set(self, horizon=None):
        top = self.cap - 1 if horizon is None else min(horizon, self.cap - 1)
        return [self.monomial(k) for k in range(-self.cap, top + 1)]

    def random(self, rng, min_val=0, max_val=None, zero_prob=0.05):
        if max_val is None:
            max_val = min_val + 2
        if rng.random() < zero_prob:
            return self.zero()
        v = rng.randint(min_val, max_val)
        if v >= self.cap:
            return self.zero()
        n = min(v + self.relprec, self.cap) - v
        digits = (rng.randint(1, self.p - 1),) + tuple(rng.randint(0, self.p - 1) for _ in range(n - 1))
        return self._make(v, digits, v + n)

    def random_unit(self, rng, min_val=0, max_val=0):
        while True:
            x = self.random(rng, min_val, max_val, zero_prob=0.0)
            if not x.is_zero():
                return x

    def encode(self, x):
        return {"terms": [[e, c] for e, c in sorted(x.terms().items())], "prec": x.prec}

    def decode(self, data):
        if isinstance(data, dict):
            prec = data.get("prec")
            return self.from_terms({int(e): c for e, c in data["terms"]}, prec)
        return self.coerce(int(data))

    def to_json(self):
        return {"type": "TruncLaurent", "p": self.p, "relprec": self.relprec, "cap": self.cap}

    def __repr__(self):
        return f"TruncLaurent({self.p},{self.relprec},cap={self.cap})"


# --- matrices -----------------------------------------------------------------


class MatrixElem(Element):
    __slots__ = ("ring", "rows")

    def __init__(self, ring, rows):
        self.ring = ring
        self.rows = rows

    def is_zero(self):
        return all(e.is_zero() for row in self.rows for e in row)

    def key(self):
        return ("m",) + tuple(e.key() for row in self.rows for e in row)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __repr__(self):
        return "[" + ", ".join("[" + ", ".join(map(repr, r)) + "]" for r in self.rows) + "]"


@dataclass(frozen=True)
class Matrix(Ring):
    s: int
    base: Ring

    @property
    def p(self):
        return self.base.p

    @property
    def is_char_p(self):
        return self.base.is_char_p

    def make(self, rows):
        rows = tuple(tuple(self.base.coerce(e) for e in r) for r in rows)
        if len(rows) != self.s or any(len(r) != self.s for r in rows):
            raise RingError(f"expected a {self.s}x{self.s} matrix")
        return MatrixElem(self, rows)

    def scalar(self, c):
        c = self.base.coerce(c)
        z = self.base.zero()
        return MatrixElem(self, tuple(tuple(c if i == j else z for j in range(self.s)) for i in range(self.s)))

    def unit_matrix(self, i, j, c=None):
        c = self.base.one() if c is None else self.base.coerce(c)
        z = self.base.zero()
        return MatrixElem(self, tuple(tuple(c if (a, b) == (i, j) else z for b in range(self.s)) for a in range(self.s)))

    def coerce(self, value):
        if isinstance(value, MatrixElem):
            self.check(value)
            return value
        if isinstance(value, (list, tuple)):
            return self.make(value)
        return self.scalar(value)

    def zero(self):
        return self.scalar(0)

    def one(self):
        return self.scalar(1)

    def add(self, x, y):
        self.check(x)
        self.check(y)
        B = self.base
        return MatrixElem(self, tuple(tuple(B.add(a, b) for a, b in zip(r, q)) for r, q in zip(x.rows, y.rows)))

    def sub(self, x, y):
        self.check(x)
        self.check(y)
        B = self.base
        return MatrixElem(self, tuple(tuple(B.sub(a, b) for a, b in zip(r, q)) for r, q in zip(x.rows, y.rows)))

    def neg(self, x):
        B = self.base
        return MatrixElem(self, tuple(tuple(B.neg(a) for a in r) for r in x.rows))

    def mul(self, x, y):
        self.check(x)
        self.check(y)
        B = self.base
        s = self.s
        cols = list(zip(*y.rows))
        rows = []
        for r in x.rows:
            row = []
            for c in cols:
                acc = B.mul(r[0], c[0])
                for k in range(1, s):
                    acc = B.add(acc, B.mul(r[k], c[k]))
                row.append(acc)
            rows.append(tuple(row))
        return MatrixElem(self, tuple(rows))

    def filt(self, x):
        return filt_min([self.base.filt(e) for r in x.rows for e in r])

    def precision(self, x):
        return min(self.base.precision(e) for r in x.rows for e in r)

    def truncate(self, x, level):
        B = self.base
        return MatrixElem(self, tuple(tuple(B.truncate(e, level) for e in r) for r in x.rows))

    def map_entries(self, x, fn):
        return MatrixElem(self, tuple(tuple(fn(e) for e in r) for r in x.rows))

    def is_unit(self, x):
        try:
            self.invert(x)
        except (NotAUnit, PrecisionInsufficient):
            return False
        return True

    def invert(self, x):
        """Gauss-Jordan with the minimal-valuation pivot (ties: lowest row)."""
        self.check(x)
        B = self.base
        s = self.s
        a = [list(r) + [B.one() if i == j else B.zero() for j in range(s)] for i, r in enumerate(x.rows)]
        for col in range(s):
            best = None
            undecided = False
            for r in range(col, s):
                f = B.filt(a[r][col])
                if not f.is_finite:
                    undecided = undecided or not certified_zero(a[r][col])
                    continue
                if best is None or f.n < best[0]:
                    best = (f.n, r)
            if best is None:
                if undecided:
                    raise PrecisionInsufficient(f"no certified pivot in column {col}")
                raise NotAUnit(f"column {col} is zero below the diagonal")
            r = best[1]
            if not B.is_unit(a[r][col]):
                raise NotAUnit(f"pivot in column {col} is not a unit of the base ring")
            a[col], a[r] = a[r], a[col]
            inv = B.invert(a[col][col])
            a[col] = [B.mul(inv, e) for e in a[col]]
            for rr in range(s):
                if rr == col:
                    continue
                factor = a[rr][col]
                if factor.is_zero():
                    continue
                a[rr] = [B.sub(e, B.mul(factor, f)) for e, f in zip(a[rr], a[col])]
        return MatrixElem(self, tuple(tuple(r[s:]) for r in a))

    def spanning_set(self, horizon=None):
        out = []
        for b in self.base.spanning_set(horizon):
            for i in range(self.s):
                for j in range(self.s):
                    out.append(self.unit_matrix(i, j, b))
        return out

    def random(self, rng, **kw):
        return MatrixElem(self, tuple(tuple(self.base.random(rng, **kw) for _ in range(self.s)) for _ in range(self.s)))

    def random_unit(self, rng, **kw):
        # lower-unitriangular times upper triangular with unit diagonal
        B = self.base
        z = B.zero()
        lower = [[B.one() if i == j else (B.random(rng) if i > j else z) for j in range(self.s)] for i in range(self.s)]
        upper = [[B.random_unit(rng) if i == j else (B.random(rng) if i < j else z) for j in range(self.s)] for i in range(self.s)]
        return self.mul(self.make(lower), self.make(upper))

    def encode(self, x):
        return [[self.base.encode(e) for e in r] for r in x.rows]

    def decode(self, data):
        if not isinstance(data, list):
            return self.scalar(self.base.decode(data))
        return self.make([[self.base.decode(e) for e in r] for r in data])

    def to_json(self):
        return {"type": "Matrix", "s": self.s, "base": self.base.to_json()}

    def __repr__(self):
        return f"Matrix({self.s},{self.base!r})"


# --- products ------------------------------------------------------------------


class ProductElem(Element):
    __slots__ = ("ring", "parts")

    def __init__(self, ring, parts):
        self.ring = ring
        self.parts = parts

    def is_zero(self):
        return all(e.is_zero() for e in self.parts)

    def key(self):
        return ("p",) + tuple(e.key() for e in self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def __repr__(self):
        return "(" + ", ".join(map(repr, self.parts)) + ")"


@dataclass(frozen=True)
class Product(Ring):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise RingError("empty product")

    @property
    def p(self):
        return self.factors[0].p

    @property
    def is_char_p(self):
        return all(f.is_char_p for f in self.factors)

    def make(self, parts):
        if len(parts) != len(self.factors):
            raise RingError(f"expected {len(self.factors)} factors")
        return ProductElem(self, tuple(f.coerce(e) for f, e in zip(self.factors, parts)))

    def coerce(self, value):
        if isinstance(value, ProductElem):
            self.check(value)
            return value
        if isinstance(value, (list, tuple)):
            return self.make(value)
        return ProductElem(self, tuple(f.coerce(value) for f in self.factors))

    def zero(self):
        return ProductElem(self, tuple(f.zero() for f in self.factors))

    def one(self):
        return ProductElem(self, tuple(f.one() for f in self.factors))

    def _zip(self, op, x, y):
        self.check(x)
        self.check(y)
        return ProductElem(self, tuple(getattr(f, op)(a, b) for f, a, b in zip(self.factors, x.parts, y.parts)))

    def add(self, x, y):
        return self._zip("add", x, y)

    def sub(self, x, y):
        return self._zip("sub", x, y)

    def mul(self, x, y):
        return self._zip("mul", x, y)

    def neg(self, x):
        return ProductElem(self, tuple(f.neg(a) for f, a in zip(self.factors, x.parts)))

    def filt(self, x):
        return filt_min([f.filt(a) for f, a in zip(self.factors, x.parts)])

    def precision(self, x):
        return min(f.precision(a) for f, a in zip(self.factors, x.parts))

    def truncate(self, x, level):
        return ProductElem(self, tuple(f.truncate(a, level) for f, a in zip(self.factors, x.parts)))

    def is_unit(self, x):
        return all(f.is_unit(a) for f, a in zip(self.factors, x.parts))

    def invert(self, x):
        self.check(x)
        return ProductElem(self, tuple(f.invert(a) for f, a in zip(self.factors, x.parts)))

    def spanning_set(self, horizon=None):
        out = []
        for i, f in enumerate(self.factors):
            for b in f.spanning_set(horizon):
                parts = [g.zero() for g in self.factors]
                parts[i] = b
                out.append(ProductElem(self, tuple(parts)))
        return out

    def random(self, rng, **kw):
        return ProductElem(self, tuple(f.random(rng, **kw) for f in self.factors))

    def random_unit(self, rng, **kw):
        return ProductElem(self, tuple(f.random_unit(rng, **kw) for f in self.factors))

    def encode(self, x):
        return {"factors": [f.encode(a) for f, a in zip(self.factors, x.parts)]}

    def decode(self, data):
        if isinstance(data, dict):
            return self.make([f.decode(a) for f, a in zip(self.factors, data["factors"])])
        return self.coerce(data)

    def to_json(self):
        return {"type": "Product", "factors": [f.to_json() for f in self.factors]}

    def __repr__(self):
        return "Product(" + ", ".join(map(repr, self.factors)) + ")"


# ---------------------------------------------------------------------------
# helpers


def ring_from_json(data):
    kind = data["type"]
    if kind == "Zmod":
        return Zmod(int(data["p"]), int(data["N"]))
    if kind == "TruncLaurent":
        return TruncLaurent(int(data["p"]), int(data["relprec"]), data.get("cap"))
    if kind == "Matrix":
        return Matrix(int(data["s"]), ring_from_json(data["base"]))
    if kind == "Product":
        return Product(tuple(ring_from_json(f) for f in data["factors"]))
    raise RingError(f"unknown ring type {kind!r}")


def laurent_base(ring):
    """The TruncLaurent ring underneath a Matrix/Product tower, or None."""
    if isinstance(ring, TruncLaurent):
        return ring
    if isinstance(ring, Matrix):
        return laurent_base(ring.base)
    if isinstance(ring, Product):
        bases = {laurent_base(f) for f in ring.factors}
        return bases.pop() if len(bases) == 1 else None
    return None


def map_scalars(ring, x, fn):
    """Apply fn to every base-ring scalar inside x (entrywise / factorwise)."""
    if isinstance(ring, Matrix):
        return MatrixElem(ring, tuple(tuple(map_scalars(ring.base, e, fn) for e in r) for r in x.rows))
    if isinstance(ring, Product):
        return ProductElem(ring, tuple(map_scalars(f, a, fn) for f, a in zip(ring.factors, x.parts)))
    return fn(ring, x)


def ring_arith(op, x, y=None):
    """Dispatch ``add``/``sub``/``mul``/``neg`` on two elements of one ring."""
    R = x.ring
    if op == "neg":
        return R.neg(x)
    if y.ring != R:
        raise RingMismatch(f"{x.ring!r} vs {y.ring!r}")
    if op not in ("add", "sub", "mul"):
        raise ValueError(f"unknown op {op!r}")
    return getattr(R, op)(x, y)


def filt(x):
    return x.ring.filt(x)


def certified_zero(x):
    """True when x is zero at the full precision of its ring."""
    R = x.ring
    if isinstance(R, TruncLaurent):
        return x.is_zero() and x.prec >= R.cap
    if isinstance(R, Matrix):
        return all(certified_zero(e) for r in x.rows for e in r)
    if isinstance(R, Product):
        return all(certified_zero(e) for e in x.parts)
    return x.is_zero()


def invert(x):
    return x.ring.invert(x)


def total(ring, items):
    return reduce(ring.add, items, ring.zero())


def scale_int(x, c):
    """c * x for an integer c."""
    def one(B, e):
        if isinstance(B, TruncLaurent):
            return B.scale(e, c)
        return B.mul(B.coerce(c), e)
    return map_scalars(x.ring, x, one)
