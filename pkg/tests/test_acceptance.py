"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for just the summary.
"""

import sys
import time

import pytest

from skewseries import suites
from skewseries.coeffring import vp_binom, vp_int
from skewseries.harness import fixture_names, load_fixture
from skewseries.skewmaps import certify, recheck_witness


def ctx(name):
    cfg = load_fixture(name)
    return suites.Context(cfg, cfg.seed)


def over(names, suite, **kw):
    details = {}
    ok = True
    for n in names:
        res = suites.SUITES[suite](ctx(n), **kw)
        details[n] = "n/a" if res.get("applicable") is False else res["pass"]
        ok = ok and res["pass"]
    return ok, details


def crit_binomial():
    bad = [
        (p, n, i)
        for p in (2, 3, 5)
        for n in range(7)
        for i in range(1, p ** n + 1)
        if vp_binom(p, n, i) != n - vp_int(i, p)
    ]
    return not bad, bad[:3]


def crit_leibniz():
    return over(fixture_names(), "leibniz", pairs=200)


def crit_closed_form():
    return over(fixture_names(), "closed_form", inputs=50, n_max=12)


def crit_charp():
    return over(["iwasawa", "char2"], "charp_collapse", m_max=2)


def crit_certificates():
    want = {"iwasawa": "compatible", "failed": "failed", "unipotent": "quasi"}
    got = {}
    ok = True
    for name, mode in want.items():
        d = load_fixture(name).delta
        a, b = certify(d), certify(d)
        got[name] = a.mode
        ok = ok and a.mode == mode and a.to_json() == b.to_json()
        if mode == "failed":
            ok = ok and recheck_witness(d, a.failure_witness)
        if mode == "quasi":
            ok = ok and a.deg_sigma_minus_id < 1
    return ok, got


def crit_series():
    return over(["iwasawa"], "associativity", triples=100)


def crit_subring():
    return over(fixture_names(), "subring", n_max=2)


def crit_rebase():
    return over(["iwasawa", "zmod"], "rebase", count=100, n_max=2)


def crit_neumann():
    return over(["iwasawa"], "neumann", count=50)


def crit_crossed():
    from skewseries.crossed import crossed_relations

    d = load_fixture("product").delta
    reps = [crossed_relations(d, m) for m in (0, 1)]
    return all(r["pass"] for r in reps), reps


def crit_ideal():
    return over(["iwasawa"], "ideal", count=20)


def crit_length():
    return over(["iwasawa", "product"], "length", count=20)


CRITERIA = [
    (1, "binomial valuation", crit_binomial, 1),
    (2, "Leibniz and commuting", crit_leibniz, 5),
    (3, "closed form", crit_closed_form, 5),
    (4, "char p collapse", crit_charp, 5),
    (5, "certificates", crit_certificates, 5),
    (6, "series product soundness", crit_series, 30),
    (7, "subring relation", crit_subring, 10),
    (8, "rebase round trip", crit_rebase, 20),
    (9, "Neumann inverse", crit_neumann, 10),
    (10, "crossed product", crit_crossed, 10),
    (11, "ideal reduction", crit_ideal, 30),
    (12, "length reduction", crit_length, 30),
]


def evaluate(fn, limit):
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    return ok and dt < limit, dt, detail


def line(num, desc, ok, dt, limit):
    return f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {desc} ({dt:.2f} s, limit {limit} s)"


@pytest.mark.parametrize("num,desc,fn,limit", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, desc, fn, limit, capsys):
    ok, dt, detail = evaluate(fn, limit)
    with capsys.disabled():
        print("\n" + line(num, desc, ok, dt, limit))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, desc, fn, limit in CRITERIA:
        ok, dt, _ = evaluate(fn, limit)
        failed += not ok
        print(line(num, desc, ok, dt, limit))
    sys.exit(1 if failed else 0)
