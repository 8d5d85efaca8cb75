"""Invariant suites run by the harness and the acceptance tests.

Each suite takes a ``Context`` and returns a JSON-ready dict with at least
``pass``; failures carry a witness. Suites that do not apply to a config
return ``{"pass": True, "applicable": False, "reason": ...}``.
"""
from __future__ import annotations

import zlib

from .coeffring import Matrix, Product, TruncLaurent, Zmod, vp_binom, vp_int
from .crossed import (
    GElem,
    ReductionState,
    brute_force_min_length,
    crossed_relations,
    flatten,
    ideal_reduce_y,
    lift_poly,
    reduce_length,
    regularity_check,
    reverify_classification,
    span_min_degree,
    to_crossed,
    y_ring,
)
from .prng import SplitMix64
from .rebase import (
    BandMatrix,
    aligned_order,
    decompose,
    level_shift_check,
    mat_mul,
    neumann_inverse,
    neumann_partial_sums,
    recompose,
)
from .series import SkewPoly, make_series, relation_check, series_mul
from .skewmaps import (
    apply_delta,
    certify,
    check_commuting,
    delta_power_closed,
    delta_power_tform,
    derive_level,
    deriv_from_json,
    iterate_delta,
    recheck_witness,
    spanning_set,
)


class Context:
    def __init__(self, cfg, seed, budget=None):
        self.cfg = cfg
        self.seed = seed
        self.budget = budget
        self._cert = None

    @property
    def d(self):
        return self.cfg.delta

    @property
    def ring(self):
        return self.cfg.ring

    def rng(self, name):
        return SplitMix64(self.seed ^ (zlib.crc32(name.encode()) * 0x9E3779B97F4A7C15 & (2 ** 64 - 1)))

    def cert(self):
        if self._cert is None:
            self._cert = certify(self.d, self.cfg.horizon, self.cfg.window, self.cfg.N_max)
        return self._cert


def _na(reason):
    return {"pass": True, "applicable": False, "reason": reason}


def _has_fixed_t(d):
    return d.form == "inner" and d.sigma.apply(d.t) == d.t


def random_elem(R, rng, min_val=0):
    """A seeded ring element with filtration at least min_val."""
    if isinstance(R, Zmod):
        return R.random(rng, min_val=max(0, min_val))
    if isinstance(R, TruncLaurent):
        return R.random(rng, min_val=min_val, max_val=min_val + 3)
    if isinstance(R, Matrix):
        return R.make([[random_elem(R.base, rng, min_val) for _ in range(R.s)] for _ in range(R.s)])
    if isinstance(R, Product):
        return R.make([random_elem(f, rng, min_val) for f in R.factors])
    raise TypeError(R)


# ---------------------------------------------------------------------------
# coefficient-level suites


def suite_binomial(ctx):
    checked = 0
    for p in (2, 3, 5):
        for n in range(7):
            for i in range(1, p ** n + 1):
                checked += 1
                if vp_binom(p, n, i) != n - vp_int(i, p):
                    return {"pass": False, "checked": checked, "witness": [p, n, i]}
    return {"pass": True, "checked": checked}


def suite_leibniz(ctx, pairs=200):
    d, R = ctx.d, ctx.ring
    rng = ctx.rng("leibniz")
    for k in range(pairs):
        r, s = random_elem(R, rng), random_elem(R, rng)
        lhs = apply_delta(d, R.mul(r, s))
        rhs = R.add(R.mul(apply_delta(d, r), s), R.mul(d.sigma.apply(r), apply_delta(d, s)))
        if lhs != rhs:
            return {"pass": False, "checked": k, "witness": {"kind": "leibniz", "r": R.encode(r), "s": R.encode(s)}}
        if d.sigma.apply(apply_delta(d, r)) != apply_delta(d, d.sigma.apply(r)):
            return {"pass": False, "checked": k, "witness": {"kind": "commuting", "r": R.encode(r)}}
    comm = check_commuting(d, ctx.cfg.horizon)
    return {"pass": comm["pass"], "checked": pairs, "spanning_set": comm}


def suite_closed_form(ctx, inputs=50, n_max=12):
    d, R = ctx.d, ctx.ring
    if not _has_fixed_t(d):
        return _na("closed form needs an inner derivation with sigma(t) = t")
    rng = ctx.rng("closed_form")
    for k in range(inputs):
        s = random_elem(R, rng)
        it = s
        for n in range(n_max + 1):
            if delta_power_closed(d, n, s) != it:
                return {"pass": False, "checked": k, "witness": {"n": n, "s": R.encode(s)}}
            it = apply_delta(d, it)
    return {"pass": True, "checked": inputs, "n_max": n_max}


def suite_charp_collapse(ctx, m_max=2, inputs=10):
    d, R = ctx.d, ctx.ring
    if not R.is_char_p:
        return _na("characteristic is not p")
    if not _has_fixed_t(d):
        return _na("needs an inner derivation with sigma(t) = t")
    rng = ctx.rng("charp_collapse")
    els = spanning_set(R, ctx.cfg.horizon) + [random_elem(R, rng) for _ in range(inputs)]
    for m in range(m_max + 1):
        q = R.p ** m
        for s in els:
            if iterate_delta(d, s, q) != delta_power_tform(d, q, s):
                return {"pass": False, "witness": {"m": m, "s": R.encode(s)}}
    return {"pass": True, "checked": len(els), "m_max": m_max}


def suite_certificate(ctx):
    cert = ctx.cert()
    expect = ctx.cfg.raw.get("expect", {}).get("mode")
    out = {"certificate": cert.to_json(), "expected_mode": expect}
    ok = expect is None or cert.mode == expect
    if cert.mode == "failed":
        w = cert.failure_witness
        out["witness_rechecked"] = bool(w) and recheck_witness(ctx.d, w)
        ok = ok and out["witness_rechecked"]
    # a second run must reproduce the certificate exactly
    again = certify(ctx.d, ctx.cfg.horizon, ctx.cfg.window, ctx.cfg.N_max)
    out["deterministic"] = again.to_json() == cert.to_json()
    ok = ok and out["deterministic"]
    out["pass"] = ok
    if expect is None and cert.mode == "failed":
        out["pass"] = False
        out["exit"] = 3
    return out


# ---------------------------------------------------------------------------
# series suites


def random_series(ctx, rng, K, cert):
    R = ctx.ring
    cs = [random_elem(R, rng) for _ in range(K + 1)]
    return make_series(cs, ctx.d, cert, L=0)


def suite_associativity(ctx, triples=100, K=4):
    from .series import _check_cert

    raw_mul = ctx.cfg.raw.get("mul")
    if raw_mul is not None:
        return _explicit_mul(ctx, raw_mul)
    cert = ctx.cert()
    if cert.mode not in ("compatible", "quasi"):
        return {"pass": False, "exit": 3, "reason": f"certificate mode {cert.mode} bounds no tail", "certificate": cert.to_json()}
    rng = ctx.rng("associativity")
    worst = None
    for k in range(triples):
        f, g, h = (random_series(ctx, rng, K, cert) for _ in range(3))
        fg = series_mul(f, g)
        left = series_mul(fg, h)
        right = series_mul(f, series_mul(g, h))
        bad = left.disagreements(right)
        if bad:
            return {"pass": False, "checked": k, "witness": {"kind": "associativity", "indices": bad}}
        # doubling K_in on a longer left factor must not move guaranteed digits
        f2 = random_series(ctx, rng, 2 * K + 1, cert)
        a = series_mul(f2, g, K_out=K, K_in=K)
        b = series_mul(f2, g, K_out=K, K_in=2 * K + 1)
        bad = a.disagreements(b)
        if bad:
            return {"pass": False, "checked": k, "witness": {"kind": "K_in doubling", "indices": bad}}
        g0 = min(left.guarantee + right.guarantee)
        worst = g0 if worst is None else min(worst, g0)
    _check_cert(f, g)
    return {"pass": True, "checked": triples, "K": K, "min_guarantee": worst, "certificate_mode": cert.mode}


def _explicit_mul(ctx, raw):
    R, d = ctx.ring, ctx.d
    cert = ctx.cert()
    dg = deriv_from_json(d.sigma, raw["g_delta"]) if "g_delta" in raw else d

    def build(spec, deriv):
        cs = [R.decode(c) for c in spec["coeffs"]]
        K = spec.get("K", len(cs) - 1)
        cs += [R.zero()] * (K + 1 - len(cs))
        return make_series(cs, deriv, cert, L=spec.get("L"))

    f, g = build(raw["f"], d), build(raw["g"], dg)
    h = series_mul(f, g, K_out=raw.get("K_out"), P_target=raw.get("P_target"))
    return {"pass": True, "product": h.to_json()}


def suite_subring(ctx, n_max=None):
    d = ctx.d
    n_max = ctx.cfg.raw.get("levels", {}).get("max", 2) if n_max is None else n_max
    out = {"defining": relation_check(d, "defining", horizon=ctx.cfg.horizon)}
    ok = out["defining"]["pass"]
    if _has_fixed_t(d):
        out["normality"] = relation_check(d, "normality", horizon=ctx.cfg.horizon)
        ok = ok and out["normality"]["pass"]
    if d.form != "inner" and not ctx.ring.is_char_p:
        return {**out, "pass": ok, "levels": "not applicable"}
    levels = []
    for n in range(n_max + 1):
        lv = derive_level(d, n)
        if d.form == "inner" and not _has_fixed_t(d):
            levels.append({"n": n, "pass": True, "applicable": False})
            continue
        rep = relation_check(d, "subring", lv, ctx.cfg.horizon)
        levels.append({"n": n, **rep})
        ok = ok and rep["pass"]
    return {**out, "levels": levels, "pass": ok}


def suite_rebase(ctx, count=100, n_max=2):
    d, R = ctx.d, ctx.ring
    rng = ctx.rng("rebase")
    bases = ["x_powers"] + (["x_minus_t_powers"] if d.form == "inner" else [])
    p = R.p
    checked = 0
    for k in range(count):
        n = k % (n_max + 1)
        Q = 1 if n == 2 else 2
        K = aligned_order(p, n, Q)
        f = random_series(ctx, rng, K, None)
        lv = derive_level(d, n)
        for basis in bases:
            dec = decompose(f, lv, basis)
            back = recompose(dec, d)
            if any(a != b for a, b in zip(f.coeffs, back.coeffs)):
                return {"pass": False, "witness": {"k": k, "n": n, "basis": basis, "kind": "round trip"}}
            again = decompose(back, lv, basis)
            for g1, g2 in zip(dec.parts, again.parts):
                if any(a != b for a, b in zip(g1.coeffs, g2.coeffs)):
                    return {"pass": False, "witness": {"k": k, "n": n, "basis": basis, "kind": "blockwise"}}
            checked += 1
    shift = []
    if n_max >= 2:
        f = random_series(ctx, rng, aligned_order(p, 2, 1), None)
        for basis in bases:
            rep = level_shift_check(f, d, basis)
            shift.append({"basis": basis, **rep})
    ok = all(s["pass"] for s in shift)
    return {"pass": ok, "checked": checked, "level_shift": shift}


def suite_neumann(ctx, count=50, K=6):
    R = ctx.ring
    rng = ctx.rng("neumann")
    I = BandMatrix.identity(R, K)
    for k in range(count):
        entries = [[random_elem(R, rng, 1) if j < i else R.zero() for j in range(K + 1)] for i in range(K + 1)]
        U = BandMatrix.build(entries, R)
        if U.lower_bound < 1:
            return {"pass": False, "witness": {"k": k, "kind": "generator lower bound"}}
        B = neumann_inverse(U)
        IU = I - U
        if not (mat_mul(IU, B).equals(I) and mat_mul(B, IU).equals(I)):
            return {"pass": False, "witness": {"k": k, "kind": "inverse"}}
        if not B.equals(neumann_partial_sums(U)):
            return {"pass": False, "witness": {"k": k, "kind": "partial sums"}}
        if not B.flags["column_null_certified"] or B.flags["V_lower_bound"] < 1:
            return {"pass": False, "witness": {"k": k, "kind": "flags", "flags": B.flags}}
    # lower bound 0 must not certify column-nullness
    entries = [[R.one() if j == i - 1 else R.zero() for j in range(K + 1)] for i in range(K + 1)]
    B0 = neumann_inverse(BandMatrix.build(entries, R))
    ok = not B0.flags["column_null_certified"]
    return {"pass": ok, "checked": count, "K": K, "lower_bound_zero_flag": B0.flags["column_null_certified"]}


# ---------------------------------------------------------------------------
# crossed suites


def suite_crossed(ctx, count=10):
    d, R = ctx.d, ctx.ring
    if not _has_fixed_t(d):
        return _na("needs an inner derivation with sigma(t) = t")
    m_max = ctx.cfg.raw.get("crossed", {}).get("m_max", 1)
    rels = [crossed_relations(d, m, ctx.cfg.horizon) for m in range(m_max + 1)]
    ok = all(r["pass"] for r in rels)
    rng = ctx.rng("crossed")
    regular = []
    for _ in range(count):
        f = SkewPoly([random_elem(R, rng) for _ in range(3)], d)
        rep = regularity_check(f, d)
        regular.append(rep["pass"])
    ok = ok and all(regular)
    trips = 0
    for k in range(count):
        m = k % (m_max + 1)
        K = aligned_order(R.p, m, 1)
        f = random_series(ctx, rng, K, None)
        ce = to_crossed(f, m, d)
        back = flatten(ce)
        if any(a != b for a, b in zip(f.coeffs, back.coeffs)):
            return {"pass": False, "relations": rels, "witness": {"kind": "round trip", "k": k}}
        trips += 1
    return {"pass": ok, "relations": rels, "regularity_checked": len(regular), "round_trips": trips}


def _gen_fixtures(ctx):
    """(sigma, q, probes) triples for the length-reduction generators."""
    from .skewmaps import AutoSpec

    d, R = ctx.d, ctx.ring
    q = derive_level(d, 1).degree
    if isinstance(R, Product):
        probes = [R.make([f.monomial(k) if i == j else f.zero() for j, f in enumerate(R.factors)]) for i in range(len(R.factors)) for k in (0, 1)]
        return [(d.sigma, q, probes)]
    if isinstance(R, TruncLaurent):
        probes = [R.monomial(-1), R.one(), R.monomial(1)]
        ident = AutoSpec(R, [], 1)
        return [(d.sigma, q, probes), (ident, q, probes)]
    return [(d.sigma, q, [r for r in spanning_set(R) if abs(r.filt().n) <= 1][:4])]


def random_generator(R, sigma, q, rng):
    k = rng.randint(1, min(3, q))
    exps = sorted(rng.sample(range(q), k))
    terms = {}
    for e in exps:
        if rng.random() < 0.5:
            terms[e] = R.coerce(rng.randint(1, R.p - 1))
        else:
            terms[e] = random_elem(R, rng, rng.randint(-1, 1))
    return GElem(terms, sigma, q)


def suite_length(ctx, count=None):
    cfg = ctx.cfg.raw.get("reduce", {})
    count = cfg.get("generators", 20) if count is None else count
    depth = cfg.get("depth", 3)
    oracle_depth = cfg.get("oracle_depth", 3)
    elements = cfg.get("elements", 10 ** 4)
    if ctx.budget is not None:
        elements = ctx.budget
    if not _has_fixed_t(ctx.d):
        return _na("needs an inner derivation with sigma(t) = t")
    R = ctx.ring
    rng = ctx.rng("length")
    fx = _gen_fixtures(ctx)
    rows = []
    for k in range(count):
        sigma, q, probes = fx[k % len(fx)]
        G = random_generator(R, sigma, q, rng)
        if G.is_zero():
            G = GElem({0: R.one()}, sigma, q)
        st = reduce_length(ReductionState([G], probes, budget_depth=depth, budget_elements=elements))
        if st.exhausted:
            return {"pass": False, "exit": 5, "checked": k, "reason": "element budget exhausted", "state": st.to_json()}
        oracle = brute_force_min_length(G, probes, oracle_depth) if oracle_depth else None
        W = st.min_length_witness
        flags_ok = reverify_classification(W, st.classification, spanning_set(R))
        combo_ok = st.witness_combination.evaluate([G]) == W
        frontier_ok = all(c.evaluate([G]) == Z for Z, c in st.frontier)
        row = {
            "generator": G.to_json(),
            "generator_length": G.length(),
            "min_length": W.length(),
            "oracle_min_length": oracle,
            "classification": st.classification,
            "classification_reverified": flags_ok,
            "combination_ok": combo_ok,
            "frontier_ok": frontier_ok,
            "frontier_size": len(st.frontier),
        }
        row["pass"] = (oracle is None or oracle == W.length()) and flags_ok and combo_ok and frontier_ok and W.length() <= G.length()
        rows.append(row)
        if not row["pass"]:
            return {"pass": False, "checked": k, "witness": row}
    return {"pass": True, "checked": count, "rows": rows, "scope": "bounded search over probes and budget"}


def suite_ideal(ctx, count=None):
    from .crossed import BudgetExhausted

    cfg = ctx.cfg
    if cfg.ideal_ring is None:
        return _na("config has no ideal section")
    Q, tau = cfg.ideal_ring, cfg.ideal_tau
    count = cfg.raw["ideal"].get("inputs", 20) if count is None else count
    dmax = cfg.raw["ideal"].get("max_degree", 3)
    dy = y_ring(Q, tau)
    budget = ctx.budget if ctx.budget is not None else 64
    rows = []
    for k in range(dmax + 1):
        n, info = ideal_reduce_y(Q, tau, SkewPoly.x_power(dy, k), budget=budget)
        if n != k or info["status"] != "ok":
            return {"pass": False, "witness": {"kind": "y-power", "k": k, "n": n}}
    rng = ctx.rng("ideal")
    for k in range(count):
        deg = rng.randint(1, dmax)
        low = rng.randint(0, deg)
        cs = [Q.zero()] * low + [Q.random(rng, min_val=-1, max_val=2, zero_prob=0.2) for _ in range(low, deg)] + [Q.random_unit(rng, min_val=-1, max_val=1)]
        if cs[low].is_zero():
            cs[low] = Q.one()
        f = SkewPoly(cs, dy)
        try:
            n, info = ideal_reduce_y(Q, tau, f, budget=budget)
        except BudgetExhausted as exc:
            return {"pass": False, "exit": 5, "checked": k, "reason": str(exc)}
        oracle = span_min_degree(lift_poly(f, 8 * Q.relprec), dmax)
        row = {
            "f": [Q.encode(c) for c in f.coeffs],
            "n": n,
            "oracle": oracle,
            "status": info["status"],
            "verified": info.get("verified", False),
            "working_relprec": info["working_relprec"],
        }
        row["pass"] = info["status"] == "ok" and row["verified"] and n == oracle and info["minimal"]
        rows.append(row)
        if not row["pass"]:
            return {"pass": False, "checked": k, "witness": row}
    return {"pass": True, "checked": count, "rows": rows, "scope": "bounded search over the probe set"}


SUITES = {
    "binomial": suite_binomial,
    "leibniz": suite_leibniz,
    "closed_form": suite_closed_form,
    "charp_collapse": suite_charp_collapse,
    "certificate": suite_certificate,
    "associativity": suite_associativity,
    "subring": suite_subring,
    "rebase": suite_rebase,
    "neumann": suite_neumann,
    "crossed": suite_crossed,
    "ideal": suite_ideal,
    "length": suite_length,
}

DEFAULT_SELFTEST = list(SUITES)

COMMAND_SUITES = {
    "cert": ["certificate"],
    "mul": ["associativity"],
    "decompose": ["rebase", "neumann"],
    "crossed": ["crossed"],
    "reduce": ["length", "ideal"],
}
