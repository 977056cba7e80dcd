"""Command line interface.

Subcommands: ``height``, ``pairing``, ``family``, ``verify``, ``mahler``.
Records go to stdout (``--format table`` or ``jsonl``); logs go to stderr.
Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import numbers
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__, dynmap
from .bigpoly import IntPolynomial
from .dynmap import DegreeCapExceeded, MapConstructionError, RationalMap
from .families import (
    QuadratureError,
    coc_pairing_exact,
    lattes_pairing_quadrature,
    quad_pairing_bounds,
    smyth_constant,
)
from .heights import HeightConvergenceError, ProjPointQ, canonical_height
from .mahler import RootFindingError, log_mahler

log = logging.getLogger("azpair")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a rational number: {text!r}") from None


def parse_coeff_list(text: str) -> list[Fraction]:
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise UsageError(f"expected a bracketed coefficient list, got {text!r}")
    body = s[1:-1].strip()
    if not body:
        raise UsageError("empty coefficient list")
    return [parse_rational(x) for x in body.split(",")]


def _params(tokens: Sequence[str]) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise UsageError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_map(text) -> RationalMap:
    """``family:NAME key=value ...`` or ``num=[...] den=[...]`` (ascending coefficients)."""
    tokens = text.split() if isinstance(text, str) else [t for part in text for t in part.split()]
    if not tokens:
        raise UsageError("empty map description")
    try:
        head = tokens[0]
        if head.startswith("family:"):
            name = head.split(":", 1)[1]
            params = _params(tokens[1:])
            if name == "squaring":
                return dynmap.squaring()
            if name == "monomial":
                return dynmap.monomial(int(params.get("d", "2")))
            if name == "coc":
                return dynmap.coc(parse_rational(params["alpha"]))
            if name == "quad":
                return dynmap.quad(parse_rational(params["c"]))
            if name == "lattes":
                return dynmap.lattes(int(params["a"]), int(params["b"]))
            raise UsageError(f"unknown family {name!r}")
        params = _params(tokens)
        if set(params) != {"num", "den"}:
            raise UsageError("explicit maps need exactly num=[...] and den=[...]")
        return dynmap.make_map(parse_coeff_list(params["num"]), parse_coeff_list(params["den"]))
    except KeyError as exc:
        raise UsageError(f"missing family parameter {exc}") from None
    except MapConstructionError as exc:
        raise UsageError(str(exc)) from None


def parse_point(text: str) -> ProjPointQ:
    try:
        return ProjPointQ.from_value(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a point: {text!r}") from None


def parse_range(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", str(text))
    if not m:
        raise UsageError(f"expected N or A..B, got {text!r}")
    a = int(m.group(1))
    b = int(m.group(2)) if m.group(2) else a
    if a < 1 or b < a:
        raise UsageError(f"bad range {text!r}")
    return list(range(a, b + 1))


@dataclass
class RunConfig:
    command: str
    maps: dict = field(default_factory=dict)
    n_values: list = field(default_factory=list)
    k_rule: str = "n"
    tol: float = 1e-10
    fmt: str = "table"
    seed: int = 0
    degree_cap: Optional[int] = None

    def validate(self):
        if not self.tol > 0:
            raise UsageError("tolerances must be positive")
        if self.n_values and min(self.n_values) < 1:
            raise UsageError("n must be at least 1")
        if self.k_rule != "n":
            try:
                if int(self.k_rule) < 0:
                    raise ValueError
            except ValueError:
                raise UsageError("--k must be 'n' or a nonnegative integer") from None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _clean(x):
    if isinstance(x, numbers.Real) and not isinstance(x, (int, bool)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def emit(records: list[dict], fmt: str, out=None) -> None:
    out = out or sys.stdout
    for rec in records:
        rec = _clean(rec)
        if fmt == "jsonl":
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            width = max(len(k) for k in rec)
            for k in sorted(rec):
                v = rec[k]
                if isinstance(v, float):
                    v = f"{v:.12g}"
                elif isinstance(v, (list, dict)):
                    v = json.dumps(v, sort_keys=True)
                out.write(f"{k.ljust(width)}  {v}\n")
            out.write("\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_height(args, cfg: RunConfig) -> tuple[list[dict], int]:
    fmap = parse_map(args.map)
    pt = parse_point(args.point)
    h = canonical_height(fmap, pt, cfg.tol)
    rec = {
        "command": "height",
        "map": repr(fmap),
        "point": str(pt),
        "value": h.value,
        "error_bound": h.error_bound,
        "iterations": h.iterations_used,
        "method": "local decomposition of the orbit",
    }
    return [rec], EXIT_OK


def cmd_pairing(args, cfg: RunConfig) -> tuple[list[dict], int]:
    from .pairing import pairing_converged, pairing_estimate

    phi = parse_map(args.phi)
    psi = parse_map(args.psi)
    schedule = [(n, n if cfg.k_rule == "n" else int(cfg.k_rule)) for n in cfg.n_values]
    est = pairing_converged(phi, psi, schedule, args.stability_tol, degree_cap=cfg.degree_cap)
    rec = {
        "command": "pairing",
        "phi": repr(phi),
        "psi": repr(psi),
        "method": "periodic-point estimator",
        **est.as_record(),
    }
    if args.symmetry:
        n, k, _ = est.history[-1]
        k_sw = 0 if psi.is_squaring() else k
        swapped = pairing_estimate(psi, phi, n, k_sw, degree_cap=cfg.degree_cap)
        rec["swapped_value"] = swapped.value
        rec["symmetry_gap"] = abs(swapped.value - est.value)
    return [rec], EXIT_OK


def cmd_family(args, cfg: RunConfig) -> tuple[list[dict], int]:
    fam = args.family
    if fam == "coc":
        alpha = parse_rational(args.alpha)
        r = coc_pairing_exact(alpha, cfg.tol)
        rec = {"family": "coc", "alpha": str(alpha), "value": r.value, "error_bound": r.error_estimate,
               "method": "closed form"}
        if alpha == 1:
            rec["smyth_constant"] = smyth_constant(cfg.tol)
        return [dict(command="family", **rec)], EXIT_OK
    if fam == "quad":
        c = parse_rational(args.c)
        lo, hi = quad_pairing_bounds(c)
        return [{"command": "family", "family": "quad", "c": str(c), "lower": lo, "upper": hi,
                 "method": "closed-form bounds"}], EXIT_OK
    if fam == "lattes":
        a, b = int(args.a), int(args.b)
        tol = max(cfg.tol, 1e-8)
        data = lattes_pairing_quadrature(a, b, tol)
        lower = 0.5 * math.log(a * b)
        ok = data.pairing.value >= lower - data.pairing.error_estimate - tol
        rec = {
            "command": "family",
            "family": "lattes",
            "a": a,
            "b": b,
            "value": data.pairing.value,
            "error_bound": data.pairing.error_estimate,
            "theta": data.theta.value,
            "C_P": data.C_P.value,
            "lower_bound": lower,
            "lower_bound_ok": ok,
            "identity_residual": data.identity_residual,
            "method": "quadrature (polar, cross-checked Cartesian)",
        }
        return [rec], EXIT_OK if ok else EXIT_VERIFY
    raise UsageError(f"unknown family {fam!r}")


def cmd_verify(args, cfg: RunConfig) -> tuple[list[dict], int]:
    from . import verify

    suite = args.suite
    if suite == "height-diff":
        if not args.map:
            raise UsageError("height-diff needs --map")
        fmap = parse_map(args.map)
        sample = verify.random_points(args.points, 10.0, cfg.seed)
        rep = verify.check_height_diff(fmap, float(args.pairing), sample, max(cfg.tol, 1e-9))
    elif suite == "families":
        rep = verify.check_family_inequalities(args.points, cfg.seed)
    elif suite == "sharpness":
        rep = verify.sharpness_probe(cfg.tol)
    elif suite == "equivalence":
        if not (args.phi and args.psi):
            raise UsageError("equivalence needs --phi and --psi")
        rep = verify.equivalence_spot_check(parse_map(args.phi), parse_map(args.psi), max(cfg.n_values or [3]))
    else:
        raise UsageError(f"unknown suite {suite!r}")
    records = rep.as_records()
    records.append({"report": rep.name, "summary": True, "all_pass": rep.all_pass, "verdict": rep.verdict,
                    "cases": len(rep.cases), "min_margin": rep.min_margin})
    return records, EXIT_OK if rep.all_pass else EXIT_VERIFY


def cmd_mahler(args, cfg: RunConfig) -> tuple[list[dict], int]:
    coeffs = parse_coeff_list(args.poly)
    den = math.lcm(*(c.denominator for c in coeffs))
    f = IntPolynomial([int(c * den) for c in coeffs])
    if f.is_zero():
        raise UsageError("zero polynomial")
    mv = log_mahler(f, cfg.tol)
    value = mv.value - math.log(den)
    return [{"command": "mahler", "poly": [str(c) for c in coeffs], "value": value,
             "error_bound": mv.error_bound, "method": "Aberth roots"}], EXIT_OK


COMMANDS = {"height": cmd_height, "pairing": cmd_pairing, "family": cmd_family, "verify": cmd_verify,
            "mahler": cmd_mahler}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="fmt", choices=["table", "jsonl"], default="table")
    common.add_argument("--config", help="JSON file with default option values")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--degree-cap", type=int, default=None)
    common.add_argument("--log-level", default="WARNING")

    parser = argparse.ArgumentParser(prog="azpair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("height", parents=[common], help="canonical height of a rational point")
    p.add_argument("--map", nargs="+", required=True)
    p.add_argument("--point", required=True)
    subs["height"] = p

    p = sub.add_parser("pairing", parents=[common], help="periodic-point pairing estimate")
    p.add_argument("--phi", nargs="+", required=True)
    p.add_argument("--psi", nargs="+", required=True)
    p.add_argument("--n", default="1..6", help="N or A..B")
    p.add_argument("--k", default="n", help="'n' or a fixed integer")
    p.add_argument("--stability-tol", type=float, default=0.03)
    p.add_argument("--no-symmetry", dest="symmetry", action="store_false")
    subs["pairing"] = p

    p = sub.add_parser("family", parents=[common], help="closed forms and quadratures for the families")
    p.add_argument("family", choices=["coc", "quad", "lattes"])
    p.add_argument("--alpha", default="1")
    p.add_argument("--c", default="0")
    p.add_argument("--a", default="1")
    p.add_argument("--b", default="1")
    subs["family"] = p

    p = sub.add_parser("verify", parents=[common], help="verification suites")
    p.add_argument("suite", choices=["height-diff", "families", "sharpness", "equivalence"])
    p.add_argument("--map", nargs="+")
    p.add_argument("--phi", nargs="+")
    p.add_argument("--psi", nargs="+")
    p.add_argument("--pairing", default="0")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--n", default="3")
    subs["verify"] = p

    p = sub.add_parser("mahler", parents=[common], help="log Mahler measure of a polynomial")
    p.add_argument("--poly", required=True, help="ascending coefficients, e.g. [1,1,0,-1]")
    subs["mahler"] = p
    return parser, subs


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    out = {k.replace("-", "_"): v for k, v in data.items()}
    if "format" in out:
        out["fmt"] = out.pop("format")
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            defaults = _load_config(args.config)
            subs[args.command].set_defaults(**defaults)
            args = parser.parse_args(argv)
        cfg = RunConfig(
            command=args.command,
            n_values=parse_range(getattr(args, "n", 1)),
            k_rule=str(getattr(args, "k", "n")),
            tol=args.tol,
            fmt=args.fmt,
            seed=args.seed,
            degree_cap=args.degree_cap,
        )
        cfg.validate()
        records, code = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"azpair: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HeightConvergenceError, RootFindingError, QuadratureError, DegreeCapExceeded, ArithmeticError) as exc:
        print(f"azpair: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    emit(records, cfg.fmt)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
