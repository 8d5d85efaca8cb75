"""Command-line harness: config ingestion, suite execution and JSON reports.

Usage::

    python -m skewseries --config iwasawa.json --cmd selftest --seed 7 --json-out report.json
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from . import __version__
from .coeffring import NotAUnit, PrecisionInsufficient, RingError, Zmod, laurent_base, ring_from_json
from .crossed import BudgetExhausted
from .series import GuaranteeUnreachable, MissingCertificate
from .skewmaps import Conj, DerivMismatch, auto_from_json, deriv_from_json

CONFIG_SCHEMA_ID = "skewseries.config/1"
REPORT_SCHEMA_ID = "skewseries.report/1"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3
EXIT_GUARANTEE = 4
EXIT_BUDGET = 5
EXIT_INVARIANT = 6
EXIT_DERIV_MISMATCH = 7

COMMANDS = ("cert", "mul", "decompose", "crossed", "reduce", "selftest")

_ELEM = {}  # coefficient encodings are ring dependent; checked when decoding

_RING = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["Zmod", "TruncLaurent", "Matrix", "Product"]},
        "p": {"type": "integer", "minimum": 2},
        "N": {"type": "integer", "minimum": 1},
        "relprec": {"type": "integer", "minimum": 1},
        "cap": {"type": ["integer", "null"]},
        "s": {"type": "integer", "minimum": 1},
        "base": {"$ref": "#/$defs/ring"},
        "factors": {"type": "array", "items": {"$ref": "#/$defs/ring"}, "minItems": 1},
    },
    "additionalProperties": False,
}

_AUTO = {
    "type": "object",
    "required": ["chain"],
    "properties": {
        "chain": {
            "type": "array",
            "items": {
                "type": "object",
                "minProperties": 1,
                "maxProperties": 1,
                "properties": {
                    "Subst": {
                        "type": "object",
                        "required": ["terms"],
                        "properties": {"terms": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}}},
                        "additionalProperties": False,
                    },
                    "Conj": _ELEM,
                    "CycleShift": {"type": "integer"},
                },
                "additionalProperties": False,
            },
        },
        "exponent": {"type": "integer"},
    },
    "additionalProperties": False,
}

_SERIES = {
    "type": "object",
    "required": ["coeffs"],
    "properties": {"coeffs": {"type": "array"}, "K": {"type": "integer", "minimum": 0}, "L": {"type": "integer"}},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": CONFIG_SCHEMA_ID,
    "type": "object",
    "required": ["schema", "ring", "sigma", "delta"],
    "$defs": {"ring": _RING},
    "properties": {
        "schema": {"const": CONFIG_SCHEMA_ID},
        "name": {"type": "string"},
        "ring": {"$ref": "#/$defs/ring"},
        "sigma": _AUTO,
        "delta": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {"Inner": _ELEM, "BaseTwisted": _ELEM},
            "additionalProperties": False,
        },
        "precisions": {
            "type": "object",
            "properties": {
                "relprec": {"type": "integer"},
                "cap": {"type": "integer"},
                "horizon": {"type": ["integer", "null"]},
            },
            "additionalProperties": False,
        },
        "certificate": {
            "type": "object",
            "properties": {
                "I": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                "J": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
                "N_max": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "expect": {
            "type": "object",
            "properties": {"mode": {"enum": ["compatible", "quasi", "strongly_bounded_only", "failed", None]}},
            "additionalProperties": False,
        },
        "suites": {"type": "array", "items": {"type": "string"}},
        "levels": {
            "type": "object",
            "properties": {"max": {"type": "integer", "minimum": 0, "maximum": 4}},
            "additionalProperties": False,
        },
        "crossed": {
            "type": "object",
            "properties": {"m_max": {"type": "integer", "minimum": 0, "maximum": 3}},
            "additionalProperties": False,
        },
        "mul": {
            "type": "object",
            "required": ["f", "g"],
            "properties": {"f": _SERIES, "g": _SERIES, "g_delta": {"type": "object"}, "K_out": {"type": "integer"}, "P_target": {"type": "integer"}},
            "additionalProperties": False,
        },
        "reduce": {
            "type": "object",
            "properties": {
                "generators": {"type": "integer", "minimum": 1},
                "depth": {"type": "integer", "minimum": 1},
                "oracle_depth": {"type": "integer", "minimum": 0},
                "elements": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "ideal": {
            "type": "object",
            "required": ["ring", "tau"],
            "properties": {
                "ring": {"$ref": "#/$defs/ring"},
                "tau": _AUTO,
                "inputs": {"type": "integer", "minimum": 0},
                "max_degree": {"type": "integer", "minimum": 0, "maximum": 6},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": ["string", "null"]}, "format": {"enum": ["json", "text"]}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": REPORT_SCHEMA_ID,
    "type": "object",
    "required": ["schema", "version", "command", "seed", "config", "pass", "suites"],
    "properties": {
        "schema": {"const": REPORT_SCHEMA_ID},
        "version": {"type": "string"},
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer"},
        "config": {"type": "object"},
        "pass": {"type": "boolean"},
        "suites": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "pass"],
                "properties": {
                    "name": {"type": "string"},
                    "pass": {"type": "boolean"},
                    "applicable": {"type": "boolean"},
                    "witness": {},
                    "certificate": {"type": "object"},
                    "error": {"type": "string"},
                    "message": {"type": "string"},
                    "wall_time_s": {"type": "number"},
                },
            },
        },
    },
    "additionalProperties": False,
}


class ConfigError(Exception):
    def __init__(self, errors):
        self.errors = errors
        super().__init__("; ".join(f"{e['path']}: {e['message']}" for e in errors))


class InvariantFailure(Exception):
    pass


@dataclass
class SessionConfig:
    raw: dict
    ring: object
    sigma: object
    delta: object
    horizon: int | None = None
    window: tuple = ((-8, 8), (0, 16))
    N_max: int = 32
    seed: int = 0
    suites: list = field(default_factory=list)
    ideal_ring: object = None
    ideal_tau: object = None

    @property
    def name(self):
        return self.raw.get("name", "config")

    def section(self, key, default=None):
        return self.raw.get(key, default if default is not None else {})


def _path(parts):
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in parts)


def _shape_check(raw):
    """Ring/map consistency checks that a JSON schema cannot express."""
    errors = []
    try:
        ring = ring_from_json(raw["ring"])
    except (RingError, KeyError, ValueError) as exc:
        return None, None, None, [{"path": "$.ring", "message": str(exc)}]
    prec = raw.get("precisions", {})
    L = laurent_base(ring)
    for key in ("relprec", "cap"):
        if key in prec and (L is None or getattr(L, key) != prec[key]):
            have = None if L is None else getattr(L, key)
            errors.append({"path": _path(["precisions", key]), "message": f"does not match the ring ({have})"})
    for i, entry in enumerate(raw["sigma"].get("chain", [])):
        (kind, arg), = entry.items()
        where = _path(["sigma", "chain", i, kind])
        if kind == "Subst":
            terms = dict((int(e), c) for e, c in arg["terms"])
            if laurent_base(ring) is None:
                errors.append({"path": where, "message": "Subst needs a Laurent coefficient ring"})
            elif terms.get(1, 0) % laurent_base(ring).p == 0 or min(terms) < 1:
                errors.append({"path": where, "message": "Subst needs pi -> (unit) pi + higher terms"})
        elif kind == "Conj":
            try:
                a = ring.decode(arg)
                Conj(a)
            except (NotAUnit, PrecisionInsufficient, RingError, TypeError, ValueError) as exc:
                errors.append({"path": where, "message": f"conjugating element is not a unit: {exc}"})
        elif kind == "CycleShift":
            if not hasattr(ring, "factors"):
                errors.append({"path": where, "message": "CycleShift needs a Product ring"})
    (dkind, darg), = raw["delta"].items()
    if dkind == "BaseTwisted" and (isinstance(ring, Zmod) or laurent_base(ring) is None or not ring.is_char_p):
        errors.append({"path": _path(["delta", "BaseTwisted"]), "message": "BaseTwisted needs characteristic p Laurent scalars"})
    if dkind == "BaseTwisted" and not all("Subst" in e for e in raw["sigma"].get("chain", [])):
        errors.append({"path": _path(["delta", "BaseTwisted"]), "message": "BaseTwisted needs sigma built from Subst entries"})
    if errors:
        return ring, None, None, errors
    try:
        sigma = auto_from_json(ring, raw["sigma"])
        delta = deriv_from_json(sigma, raw["delta"])
    except (RingError, TypeError, ValueError) as exc:
        return ring, None, None, [{"path": "$.delta", "message": str(exc)}]
    return ring, sigma, delta, []


def load_config(data):
    """Parse and validate a config (bytes, str or dict); raises ConfigError with paths."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError([{"path": "$", "message": f"not UTF-8: {exc}"}]) from exc
    if isinstance(data, str):
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError([{"path": "$", "message": f"parse error: {exc}"}]) from exc
    else:
        raw = data
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errs = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errs:
        raise ConfigError([{"path": _path(list(e.absolute_path)), "message": e.message} for e in errs])
    ring, sigma, delta, errors = _shape_check(raw)
    if errors:
        raise ConfigError(errors)
    cert = raw.get("certificate", {})
    window = (tuple(cert.get("I", (-8, 8))), tuple(cert.get("J", (0, 16))))
    cfg = SessionConfig(
        raw=raw,
        ring=ring,
        sigma=sigma,
        delta=delta,
        horizon=raw.get("precisions", {}).get("horizon"),
        window=window,
        N_max=cert.get("N_max", 32),
        seed=raw.get("seed", 0),
        suites=list(raw.get("suites", [])),
    )
    if "ideal" in raw:
        Q = ring_from_json(raw["ideal"]["ring"])
        cfg.ideal_ring = Q
        cfg.ideal_tau = auto_from_json(Q, raw["ideal"]["tau"])
    return cfg


def load_fixture(name):
    """A shipped fixture config by name (see the fixtures/ directory)."""
    text = resources.files("skewseries").joinpath("fixtures", f"{name}.json").read_text()
    return load_config(text)


def fixture_names():
    root = resources.files("skewseries").joinpath("fixtures")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------------------
# running


def _exit_for(exc):
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DerivMismatch):
        return EXIT_DERIV_MISMATCH
    if isinstance(exc, GuaranteeUnreachable):
        return EXIT_GUARANTEE
    if isinstance(exc, BudgetExhausted):
        return EXIT_BUDGET
    if isinstance(exc, MissingCertificate):
        return EXIT_CERTIFICATE
    if isinstance(exc, InvariantFailure):
        return EXIT_INVARIANT
    return EXIT_INTERNAL


def _suites_for(cmd, cfg):
    from . import suites

    if cmd == "selftest":
        return [s for s in cfg.suites if s in suites.SUITES] or list(suites.DEFAULT_SELFTEST)
    return list(suites.COMMAND_SUITES[cmd])


def run(cmd, cfg, seed=None, parallel=1, budget=None, timing=False):
    """Run a command; returns (report dict, exit code).

    Reports are byte-stable for a fixed config and seed. Wall times are only
    included when ``timing`` is set.
    """
    from . import suites

    if cmd not in COMMANDS:
        raise ValueError(f"unknown command {cmd!r}")
    seed = cfg.seed if seed is None else seed
    names = _suites_for(cmd, cfg)

    def one(name):
        t0 = time.perf_counter()
        ctx = suites.Context(cfg, seed, budget)
        try:
            res = suites.SUITES[name](ctx)
            code = EXIT_OK if res["pass"] else res.get("exit", EXIT_INVARIANT)
        except Exception as exc:  # every module error maps to an exit status
            code = _exit_for(exc)
            res = {"pass": False, "error": type(exc).__name__, "message": str(exc)}
            best = getattr(exc, "best", None)
            if best is not None:
                res["best"] = best
        res = {"name": name, **res}
        res.pop("exit", None)
        if timing:
            res["wall_time_s"] = round(time.perf_counter() - t0, 4)
        return res, code

    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(one, names))
    else:
        results = [one(n) for n in names]
    codes = [c for _, c in results if c != EXIT_OK]
    report = {
        "schema": REPORT_SCHEMA_ID,
        "version": __version__,
        "command": cmd,
        "seed": seed,
        "config": cfg.raw,
        "pass": not codes,
        "suites": [r for r, _ in results],
    }
    return report, (codes[0] if codes else EXIT_OK)


def dumps(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def summary_lines(report):
    out = []
    for s in report["suites"]:
        mark = "PASS" if s["pass"] else "FAIL"
        extra = f" ({s['error']}: {s['message']})" if "error" in s else ""
        out.append(f"{mark} {s['name']}{extra}")
    out.append(("ALL PASS" if report["pass"] else "FAILURES") + f" [{report['command']}]")
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(prog="skewseries", description="Certified skew power series computations.")
    ap.add_argument("--config", required=True, help="config JSON path, or fixture:<name> for a shipped fixture")
    ap.add_argument("--cmd", required=True, choices=COMMANDS)
    ap.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides the config)")
    ap.add_argument("--json-out", default=None, help="write the JSON report here")
    ap.add_argument("--parallel", type=int, default=1, help="worker threads for independent suites")
    ap.add_argument("--budget", type=int, default=None, help="step budget for the reduction engines")
    ap.add_argument("--timing", action="store_true", help="include wall times (reports are then not byte-stable)")
    args = ap.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.config.startswith("fixture:"):
            cfg = load_fixture(args.config.split(":", 1)[1])
        else:
            with open(args.config, "rb") as fh:
                cfg = load_config(fh.read())
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error at {e['path']}: {e['message']}", file=sys.stderr)
        return EXIT_CONFIG
    report, code = run(args.cmd, cfg, seed=args.seed, parallel=args.parallel, budget=args.budget, timing=args.timing)
    text = dumps(report)
    out = args.json_out or cfg.raw.get("output", {}).get("path")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    for line in summary_lines(report):
        print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
