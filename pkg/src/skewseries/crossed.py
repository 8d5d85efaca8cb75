"""Crossed-product view of the series ring at g = x - t, and two reduction engines.

With sigma(t) = t the element g = x - t is normal, g s = sigma(s) g, and
g^(p^m) = X_m - T_m. A crossed element is a finite map i -> s_i with s_i a
series in X_m, representing sum_i s_i g^i.

The reduction engines work with finite Laurent polynomials in g over the
coefficient ring (``GElem``), where c = g^(p^m) is just another power of g.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .coeffring import RingError
from .rebase import decompose, recompose
from .series import BoundedSeries, SkewPoly, eval_X, negligible, poly_mul, x_minus_t
from .skewmaps import AutoSpec, DerivSpec, derive_level, spanning_set


class CrossedError(RingError):
    pass


class BudgetExhausted(CrossedError):
    pass


# ---------------------------------------------------------------------------
# crossed elements


@dataclass
class CrossedElement:
    support: dict
    level: object
    deriv: DerivSpec

    @property
    def period(self):
        return self.level.degree

    def nonzero_support(self):
        return sorted(i for i, s in self.support.items() if any(not c.is_zero() for c in s.coeffs))


def to_crossed(f, m, d=None):
    """Rebase f onto the (x - t)^i basis over the level-m subring."""
    d = d if d is not None else f.deriv
    if d.form != "inner":
        raise CrossedError("the crossed form needs an inner derivation")
    level = derive_level(d, m)
    dec = decompose(f, level, "x_minus_t_powers")
    return CrossedElement({i: part for i, part in enumerate(dec.parts)}, level, d)


def flatten(ce):
    q = ce.period
    parts = []
    Q = max(len(s.coeffs) for s in ce.support.values()) - 1
    R = ce.deriv.ring
    for i in range(q):
        s = ce.support.get(i)
        if s is None:
            s = BoundedSeries([R.zero()] * (Q + 1), 0, [10 ** 9] * (Q + 1), ce.level.Delta, None, True)
        parts.append(s)
    from .rebase import Decomposition

    return recompose(Decomposition(parts, ce.level, "x_minus_t_powers", Q), ce.deriv)


def fold_exponent(ce, e, s):
    """Place s g^e into ce's support using g^(p^m) = X_m - T_m (e >= 0)."""
    q = ce.period
    R = ce.deriv.ring
    T = ce.level.T
    coeffs = list(s.coeffs) if isinstance(s, BoundedSeries) else [s]
    while e >= q:
        # s (X - T): shift up, subtract s_k T (T commutes with X)
        new = [R.zero()] + coeffs
        for k, c in enumerate(coeffs):
            new[k] = R.sub(new[k], R.mul(c, T))
        coeffs = new
        e -= q
    return e, coeffs


def length(ce):
    """Number of nonzero g-coefficients, counting exponents modulo p^m."""
    if isinstance(ce, GElem):
        return ce.length()
    return len({i % ce.period for i in ce.nonzero_support()})


def crossed_relations(d, m, horizon=None):
    """Check g s = sigma(s) g, g^(p^m) = X_m - T_m and the twisting wraparound."""
    if d.form != "inner" or not (d.sigma.apply(d.t) == d.t):
        return {"pass": False, "reason": "needs an inner derivation with sigma(t) = t"}
    R = d.ring
    level = derive_level(d, m)
    q = level.degree
    g = x_minus_t(d)
    report = {"m": m, "pass": True, "conjugation": True, "power": True, "wraparound": True, "witness": None}
    for s in spanning_set(R, horizon):
        lhs = poly_mul(g, SkewPoly([s], d))
        rhs = poly_mul(SkewPoly([d.sigma.apply(s)], d), g)
        if lhs != rhs:
            report.update({"pass": False, "conjugation": False, "witness": R.encode(s)})
            return report
    gp = [SkewPoly([R.one()], d)]
    for _ in range(2 * q):
        gp.append(poly_mul(gp[-1], g))
    c = eval_X(level) - SkewPoly([level.T], d)
    if gp[q] != c:
        report.update({"pass": False, "power": False})
        return report
    for a in range(q):
        for b in range(q):
            lhs = poly_mul(gp[a], gp[b])
            if a + b >= q:
                rhs = poly_mul(c, gp[a + b - q])
            else:
                rhs = gp[a + b]
            if lhs != rhs:
                report.update({"pass": False, "wraparound": False, "witness": [a, b]})
                return report
    return report


def right_divide_by_g(h, d):
    """Quotient and remainder of h by g = x - t on the right (g is monic)."""
    R = d.ring
    t = d.t
    rem = list(h.full)
    if not rem:
        return SkewPoly([], d), SkewPoly([], d)
    quo = [R.zero()] * max(len(rem) - 1, 1)
    for k in range(len(rem) - 1, 0, -1):
        qk = rem[k]
        quo[k - 1] = qk
        # (q_k x^(k-1)) (x - t) = q_k x^k - q_k t x^(k-1), since x t = t x here
        rem[k] = R.sub(rem[k], qk)
        rem[k - 1] = R.add(rem[k - 1], R.mul(qk, t))
    return SkewPoly(quo, d), SkewPoly(rem[:1], d)


def regularity_check(f, d):
    """f * (x - t) = 0 forces f = 0: recover f from f * g by right division."""
    g = x_minus_t(d)
    h = poly_mul(f, g)
    quo, rem = right_divide_by_g(h, d)
    return {"pass": quo == f and rem.is_zero(), "product_zero": h.is_zero(), "input_zero": f.is_zero()}


# ---------------------------------------------------------------------------
# Laurent polynomials in g


class GElem:
    """sum_e r_e g^e with g r = sigma(r) g."""

    __slots__ = ("terms", "loose", "sigma", "q")

    def __init__(self, terms, sigma, q):
        R = sigma.ring
        self.terms = {e: r for e, r in terms.items() if not r.is_zero()}
        # zeros known only at reduced precision still bound later results
        self.loose = {e: r for e, r in terms.items() if r.is_zero() and not negligible(R, r)}
        self.sigma = sigma
        self.q = q

    def full(self):
        out = dict(self.loose)
        out.update(self.terms)
        return out

    @property
    def ring(self):
        return self.sigma.ring

    @classmethod
    def mono(cls, r, e, sigma, q):
        return cls({e: r}, sigma, q)

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        R = self.ring
        out = self.full()
        for e, r in other.full().items():
            out[e] = R.add(out[e], r) if e in out else r
        return GElem(out, self.sigma, self.q)

    def __neg__(self):
        R = self.ring
        return GElem({e: R.neg(r) for e, r in self.full().items()}, self.sigma, self.q)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        R = self.ring
        out = {}
        for a, r in self.full().items():
            for b, s in other.full().items():
                term = R.mul(r, self.sigma.apply(s, inverse=a < 0, times=abs(a)))
                e = a + b
                out[e] = R.add(out[e], term) if e in out else term
        return GElem(out, self.sigma, self.q)

    def classes(self):
        return sorted({e % self.q for e in self.terms})

    def length(self):
        return len(self.classes())

    def shifted(self, j):
        """self * g^j."""
        return GElem({e + j: r for e, r in self.full().items()}, self.sigma, self.q)

    def canonical(self):
        if not self.terms:
            return self, 0
        j = -min(self.terms)
        return self.shifted(j), j

    def key(self):
        return tuple(sorted((e, r.key()) for e, r in self.terms.items()))

    def __eq__(self, other):
        return (self - other).is_zero()

    __hash__ = None

    def to_json(self):
        R = self.ring
        return {str(e): R.encode(r) for e, r in sorted(self.terms.items())}

    def __repr__(self):
        return " + ".join(f"({r!r})g^{e}" for e, r in sorted(self.terms.items())) or "0"


def crossed_to_g(ce):
    """Polynomial crossed element as a Laurent polynomial in g (X = g^q + T)."""
    from math import comb

    R = ce.deriv.ring
    q = ce.period
    T = ce.level.T
    terms = {}
    for i, s in ce.support.items():
        for k, h in enumerate(s.coeffs):
            if h.is_zero():
                continue
            # h X^k = h (c + T)^k = sum_j C(k, j) h T^(k-j) c^j
            for j in range(k + 1):
                r = R.mul(R.coerce(comb(k, j)), R.mul(h, T ** (k - j)))
                e = i + q * j
                terms[e] = R.add(terms[e], r) if e in terms else r
    return GElem(terms, ce.deriv.sigma, q)


# ---------------------------------------------------------------------------
# length reduction


@dataclass
class Derivation:
    """A two-sided combination sum_k left_k * G[idx_k] * right_k."""

    terms: list

    def evaluate(self, gens):
        acc = None
        for left, idx, right in self.terms:
            v = left * gens[idx] * right
            acc = v if acc is None else acc + v
        return acc

    def scaled_left(self, a):
        return Derivation([(a * l, i, r) for l, i, r in self.terms])

    def scaled_right(self, b):
        return Derivation([(l, i, r * b) for l, i, r in self.terms])

    def minus(self, other):
        neg = [(-l, i, r) for l, i, r in other.terms]
        return Derivation(self.terms + neg)


@dataclass
class ReductionState:
    generators: list
    probes: list
    budget_depth: int = 5
    budget_elements: int = 10 ** 4
    frontier: list = field(default_factory=list)
    min_length_witness: object = None
    witness_combination: object = None
    classification: list = field(default_factory=list)
    steps: int = 0
    depth_reached: int = 0
    exhausted: bool = False

    def to_json(self):
        w = self.min_length_witness
        return {
            "min_length": None if w is None else w.length(),
            "witness": None if w is None else w.to_json(),
            "classification": self.classification,
            "elements_visited": self.steps,
            "depth_reached": self.depth_reached,
            "budget": {"depth": self.budget_depth, "elements": self.budget_elements},
            "budget_exhausted": self.exhausted,
            "scope": "bounded search over the probe set and step budget",
        }


def _unit_monic(Z, k):
    """Left-multiply Z by the inverse of its coefficient at g^k (must be a unit)."""
    R = Z.ring
    u = R.invert(Z.terms[k])
    return GElem.mono(u, 0, Z.sigma, Z.q)


def _moves(Z, comb, probes):
    """Children of Z: gZ - Zg, and sZ' - Z' sigma^-k(s) for Z' monic at k."""
    sigma, q = Z.sigma, Z.q
    R = Z.ring
    g = GElem.mono(R.one(), 1, sigma, q)
    out = []
    terms = {e + 1: R.sub(sigma.apply(r), r) for e, r in Z.full().items()}
    out.append((GElem(terms, sigma, q), Derivation(comb.scaled_left(g).terms).minus(comb.scaled_right(g))))
    for k in sorted(Z.terms):
        if not R.is_unit(Z.terms[k]):
            continue
        u = _unit_monic(Z, k)
        Zm = u * Z
        cm = comb.scaled_left(u)
        for s in probes:
            sk = sigma.apply(s, inverse=k > 0, times=abs(k))
            terms = {}
            for e, r in Zm.full().items():
                terms[e] = R.sub(R.mul(s, r), R.mul(r, sigma.apply(sk, inverse=e < 0, times=abs(e))))
            child = GElem(terms, sigma, q)
            S = GElem.mono(s, 0, sigma, q)
            Sk = GElem.mono(sk, 0, sigma, q)
            out.append((child, cm.scaled_left(S).minus(cm.scaled_right(Sk))))
    return out


def classify(Z, probes_for_normality):
    """Per-coefficient flags for a witness monic at its first unit coefficient."""
    R = Z.ring
    sigma = Z.sigma
    ks = [k for k in sorted(Z.terms) if R.is_unit(Z.terms[k])]
    if not ks:
        return [{"exponent": e, "unit": False, "sigma_invariant_at_horizon": sigma.apply(r) == r, "normal_witness": False} for e, r in sorted(Z.terms.items())], Z, None
    k = ks[0]
    Zm = _unit_monic(Z, k) * Z
    out = []
    for e, r in sorted(Zm.terms.items()):
        unit = R.is_unit(r)
        normal = False
        if unit:
            rinv = R.invert(r)
            normal = all(
                R.mul(R.mul(rinv, s), r) == sigma.apply(s, inverse=e - k < 0, times=abs(e - k))
                for s in probes_for_normality
            )
        out.append({"exponent": e, "unit": unit, "sigma_invariant_at_horizon": sigma.apply(r) == r, "normal_witness": normal})
    return out, Zm, k


def reverify_classification(Z, flags, probes_for_normality):
    """Recompute every flag of a classification from scratch."""
    again, _, _ = classify(Z, probes_for_normality)
    return again == flags


def reduce_length(state):
    """Breadth-first closure under the two reduction moves plus monicising.

    Stops at the depth budget, the element budget, or when a length-1 element
    appears. Ties between equal lengths keep the first element found.
    """
    gens = [crossed_to_g(G) if isinstance(G, CrossedElement) else G for G in state.generators]
    if state.budget_depth <= 0:
        raise CrossedError("budget must be positive")
    seen = set()
    queue = deque()
    best = None
    for idx, G in enumerate(gens):
        if G.is_zero():
            continue
        C, j = G.canonical()
        comb = Derivation([(GElem.mono(G.ring.one(), 0, G.sigma, G.q), idx, GElem.mono(G.ring.one(), j, G.sigma, G.q))])
        key = C.key()
        if key in seen:
            continue
        seen.add(key)
        queue.append((C, comb, 0))
        if best is None or C.length() < best[0].length():
            best = (C, comb)
    while queue:
        Z, comb, depth = queue.popleft()
        state.steps += 1
        state.depth_reached = max(state.depth_reached, depth)
        if best[0].length() == 1 or depth >= state.budget_depth:
            continue
        for child, ccomb in _moves(Z, comb, state.probes):
            if child.is_zero():
                continue
            C, j = child.canonical()
            key = C.key()
            if key in seen:
                continue
            if len(seen) >= state.budget_elements:
                state.exhausted = True
                break
            seen.add(key)
            ccomb = ccomb.scaled_right(GElem.mono(Z.ring.one(), j, Z.sigma, Z.q))
            queue.append((C, ccomb, depth + 1))
            state.frontier.append((C, ccomb))
            if C.length() < best[0].length():
                best = (C, ccomb)
    W, wcomb = best
    flags, Wm, k = classify(W, state.probes)
    if k is not None:
        wcomb = wcomb.scaled_left(_unit_monic(W, k))
        W = Wm
    state.min_length_witness = W
    state.witness_combination = wcomb
    state.classification = flags
    return state


def brute_force_min_length(gen, probes, depth=3):
    """Exhaustive closure to a fixed depth with generic products (oracle)."""
    sigma, q = gen.sigma, gen.q
    R = gen.ring
    g = GElem.mono(R.one(), 1, sigma, q)
    level = [gen]
    best = gen.length()
    for _ in range(depth):
        nxt = []
        for Z in level:
            nxt.append(g * Z - Z * g)
            for k, r in Z.terms.items():
                if not R.is_unit(r):
                    continue
                Zm = GElem.mono(R.invert(r), 0, sigma, q) * Z
                for s in probes:
                    S = GElem.mono(s, 0, sigma, q)
                    gk = GElem.mono(R.one(), k, sigma, q)
                    gmk = GElem.mono(R.one(), -k, sigma, q)
                    # sigma^-k(s) = g^-k s g^k
                    Sk = gmk * S * gk
                    nxt.append(S * Zm - Zm * Sk)
        nxt = [z for z in nxt if not z.is_zero()]
        for z in nxt:
            best = min(best, z.length())
        level = nxt
    return best


# ---------------------------------------------------------------------------
# principal ideals in Q[y; tau]


def y_ring(Q, tau):
    """Q[y; tau] as a skew polynomial ring with zero derivation."""
    if isinstance(tau, AutoSpec):
        sigma = tau
    else:
        sigma = AutoSpec(Q, list(tau))
    return DerivSpec.inner(Q.zero(), sigma)


def _lmul(a, f):
    R = f.ring
    return SkewPoly([R.mul(a, c) for c in f.full], f.deriv)


def _rmul(f, b):
    """f * b for a constant b: sum f_i tau^i(b) y^i."""
    R = f.ring
    tau = f.deriv.sigma
    return SkewPoly([R.mul(c, tau.apply(b, times=i)) for i, c in enumerate(f.full)], f.deriv)


def evaluate_combination(f, combo):
    """sum a_k f b_k for constants a_k, b_k."""
    acc = SkewPoly([], f.deriv)
    for a, b in combo:
        acc = acc + _rmul(_lmul(a, f), b)
    return acc


def is_y_power(z):
    return all(c.is_zero() for c in z.coeffs[:-1]) and z.coeffs and z.coeffs[-1] == z.ring.one()


def default_probes(Q):
    from .coeffring import TruncLaurent

    if isinstance(Q, TruncLaurent):
        return [Q.monomial(-1), Q.monomial(1), Q.monomial(-2), Q.monomial(2)]
    return [r for r in spanning_set(Q) if abs(r.filt().n) <= 1]


def lift_ring(Q, relprec):
    """The same coefficient ring with more relative digits (cap = 2 * relprec)."""
    from .coeffring import Matrix, TruncLaurent

    if isinstance(Q, TruncLaurent):
        return TruncLaurent(Q.p, relprec, 2 * relprec)
    if isinstance(Q, Matrix):
        return Matrix(Q.s, lift_ring(Q.base, relprec))
    raise CrossedError(f"cannot raise the precision of {Q!r}")


def lift(Q2, x):
    """Read x as an exact Laurent polynomial (or matrix of them) in Q2."""
    from .coeffring import Matrix

    if isinstance(Q2, Matrix):
        return Q2.make([[lift(Q2.base, e) for e in r] for r in x.rows])
    if x.is_zero():
        return Q2.zero()
    return Q2.from_terms(x.terms())


def lift_poly(f, relprec):
    """f over Q[y; tau] with coefficients read exactly at a higher precision."""
    Q2 = lift_ring(f.ring, relprec)
    tau = f.deriv.sigma
    d2 = y_ring(Q2, AutoSpec(Q2, list(tau.chain), tau.exponent))
    return SkewPoly([lift(Q2, c) for c in f.coeffs], d2)


def ideal_reduce_y(Q, tau, f, budget=64, probes=None, escalate=(2, 4, 8)):
    """Least n with y^n in the two-sided ideal (f), with an explicit combination.

    The coefficients of f are read as exact Laurent polynomials. Each
    commutator step cancels leading digits, so if the combination does not
    verify, or stops above the trivial lower bound (the lowest nonzero
    y-index of f), the search is repeated with relprec multiplied by each
    factor in ``escalate``. The report records the working precision used.
    """
    if not isinstance(f, SkewPoly):
        f = SkewPoly(f, y_ring(Q, tau))
    # every a f b starts at y^low or above, so reaching y^low is minimal
    low = min(i for i, c in enumerate(f.coeffs) if not c.is_zero()) if f.coeffs else None

    def settled(n, info):
        info["lower_bound"] = low
        info["minimal"] = n == low
        return info["status"] == "ok" and info["verified"] and n == low

    n, info = _ideal_reduce(Q, tau, f, budget, probes)
    info["working_relprec"] = getattr(Q, "relprec", getattr(getattr(Q, "base", None), "relprec", None))
    if settled(n, info):
        return n, info
    base = info["working_relprec"]
    for k in escalate if base else ():
        try:
            f2 = lift_poly(f, base * k)
        except CrossedError:
            break
        Q2 = f2.ring
        n2, info2 = _ideal_reduce(Q2, f2.deriv.sigma, f2, budget, None if probes is None else [lift(Q2, q) for q in probes])
        info2["working_relprec"] = base * k
        n, info = n2, info2
        if settled(n, info):
            break
    return n, info


def _ideal_reduce(Q, tau, f, budget, probes):
    d = f.deriv
    if f.is_zero():
        raise CrossedError("the zero ideal contains no power of y")
    tau = d.sigma
    probes = default_probes(Q) if probes is None else probes
    lead = f.coeffs[-1]
    if not Q.is_unit(lead):
        raise CrossedError("leading coefficient is not a unit at the horizon")
    a = Q.invert(lead)
    z = _lmul(a, f)
    combo = [(a, Q.one())]
    steps = 0
    trail = [z.degree]
    while not is_y_power(z):
        if steps >= budget:
            raise BudgetExhausted(f"no y-power after {steps} moves")
        deg = z.degree
        moved = False
        for qq in probes:
            back = tau.apply(qq, inverse=True, times=deg)
            w = _lmul(qq, z) - _rmul(z, back)
            steps += 1
            if w.is_zero():
                continue
            lead = w.coeffs[-1]
            if not Q.is_unit(lead):
                continue
            c = Q.invert(lead)
            z = _lmul(c, w)
            combo = [(Q.mul(c, Q.mul(qq, x)), y) for x, y in combo] + [(Q.neg(Q.mul(c, x)), Q.mul(y, back)) for x, y in combo]
            trail.append(z.degree)
            moved = True
            break
        if not moved:
            return z.degree, {
                "status": "hypothesis_violation",
                "verified": False,
                "witness": [Q.encode(c) for c in z.coeffs],
                "steps": steps,
                "degrees": trail,
            }
    n = z.degree
    check = evaluate_combination(f, combo)
    target = SkewPoly.x_power(d, n)
    return n, {
        "status": "ok",
        "n": n,
        "combination": [[Q.encode(x), Q.encode(y)] for x, y in combo],
        "verified": check == target,
        "steps": steps,
        "degrees": trail,
        "scope": "bounded search over the probe set",
    }


def span_min_degree(f, max_degree=3, right_probes=None):
    """Oracle: left Q-span of y^a f y^b r (total degree <= max_degree), min degree.

    Gaussian elimination over the coefficient field on coefficient vectors,
    pivoting on the leading (highest) degree.
    """
    d = f.deriv
    Q = d.ring
    if right_probes is None:
        right_probes = [Q.one()] + default_probes(Q)
    rows = []
    df = f.degree
    for a in range(max_degree - df + 1):
        for b in range(max_degree - df - a + 1):
            base = poly_mul(poly_mul(SkewPoly.x_power(d, a), f), SkewPoly.x_power(d, b))
            for r in right_probes:
                rows.append(_rmul(base, r))
    pivots = {}
    for row in rows:
        v = [row.coeff(i) for i in range(max_degree + 1)]
        while True:
            top = max((i for i in range(max_degree + 1) if not v[i].is_zero()), default=None)
            if top is None:
                break
            if not Q.is_unit(v[top]):
                break
            if top in pivots:
                pv = pivots[top]
                c = v[top]
                v = [Q.sub(x, Q.mul(c, y)) for x, y in zip(v, pv)]
                continue
            inv = Q.invert(v[top])
            pivots[top] = [Q.mul(inv, x) for x in v]
            break
    return min(pivots) if pivots else None


__all__ = [
    "BudgetExhausted",
    "CrossedElement",
    "GElem",
    "ReductionState",
    "brute_force_min_length",
    "classify",
    "crossed_relations",
    "crossed_to_g",
    "flatten",
    "ideal_reduce_y",
    "length",
    "reduce_length",
    "regularity_check",
    "reverify_classification",
    "span_min_degree",
    "to_crossed",
    "y_ring",
    "lift_poly",
    "evaluate_combination",
    "right_divide_by_g",
    "Derivation",
]
