"""Command-line entry point: experiments, configuration, report emission.

Reports are JSON files written atomically into the output directory plus a
run manifest; the table printed to stdout is rendered from the same JSON
object, never a separate code path.  Given a fixed configuration, seed, and
thread count, reruns are byte-identical.
"""

from __future__ import annotations

import os

# bound BLAS parallelism before numpy loads anywhere in this process
_threads = os.environ.get("ISOLAB_THREADS")
if _threads:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import IsolabError
from .experiments import (
    ExtensionCandidate,
    extract_symbol,
    hankel_rank,
    multiplier_family_system,
    multiplier_triviality_experiment,
    noninverse_multiplier_experiment,
    proper_extension_experiment,
    regular_rep_experiment,
    validate_extension,
)
from .inner import InnerSymbol, format_symbol, parse_symbol
from .operators import dump_operator, mult_operator, shift_matrix
from .selftest import run_selftest
from .words import check_inverse

DEFAULTS = {"N": 512, "K": 64, "L": 4, "tol": 1e-9, "seed": 0, "out": "reports"}

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    """Resolved run parameters: flags > config file > defaults."""

    truncation: int = DEFAULTS["N"]
    probe: int = DEFAULTS["K"]
    max_length: int = DEFAULTS["L"]
    tol: float = DEFAULTS["tol"]
    seed: int = DEFAULTS["seed"]
    out: str = DEFAULTS["out"]
    exhaustive: bool = False
    dump_operator: str | None = None
    threads: str | None = field(default_factory=lambda: os.environ.get("ISOLAB_THREADS"))

    def validate(self) -> None:
        if not (0.0 < self.tol <= 1e-4):
            raise IsolabError(f"tolerance must lie in (0, 1e-4], got {self.tol!r}")
        if self.truncation < 2 or self.probe < 1 or self.max_length < 0:
            raise IsolabError("need N >= 2, K >= 1, L >= 0")

    def require_window(self, effective_degree: int) -> None:
        need = self.probe + self.max_length * max(1, effective_degree)
        if self.truncation < need:
            raise IsolabError(
                f"N = {self.truncation} < K + L*D_eff = {need}; raise --N or lower --L/--K"
            )

    def to_dict(self) -> dict:
        return {
            "truncation": self.truncation,
            "probe": self.probe,
            "max_length": self.max_length,
            "tol": self.tol,
            "seed": self.seed,
            "out": self.out,
            "exhaustive": self.exhaustive,
            "threads": self.threads,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write_json(path: str, obj) -> None:
    data = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _render(obj, indent: int = 0) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        for key in obj:
            value = obj[key]
            if isinstance(value, (dict, list)) and value:
                print(f"{pad}{key}:")
                _render(value, indent + 1)
            else:
                print(f"{pad}{key}: {value}")
    elif isinstance(obj, list):
        if len(obj) > 8:
            print(f"{pad}[{len(obj)} values] {obj[:4]} ...")
        else:
            for value in obj:
                _render(value, indent)
    else:
        print(f"{pad}{obj}")


def _emit(cfg: RunConfig, command: str, report: dict, ok: bool) -> None:
    os.makedirs(cfg.out, exist_ok=True)
    report_path = os.path.join(cfg.out, f"{command}.json")
    _write_json(report_path, report)
    manifest = {
        "command": command,
        "config": cfg.to_dict(),
        "reports": {command: os.path.basename(report_path)},
        "ok": ok,
    }
    _write_json(os.path.join(cfg.out, "manifest.json"), manifest)
    _render(_jsonable(report))
    print(f"report: {report_path}")


def _parse_symbol_arg(text: str) -> InnerSymbol:
    return parse_symbol(text)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    def pick(flag, key, default):
        if flag is not None:
            return flag
        if key in file_cfg:
            return file_cfg[key]
        return default

    cfg = RunConfig(
        truncation=int(pick(args.N, "N", DEFAULTS["N"])),
        probe=int(pick(args.K, "K", DEFAULTS["K"])),
        max_length=int(pick(args.L, "L", DEFAULTS["L"])),
        tol=float(pick(args.tol, "tol", DEFAULTS["tol"])),
        seed=int(pick(args.seed, "seed", DEFAULTS["seed"])),
        out=str(pick(args.out, "out", DEFAULTS["out"])),
        exhaustive=bool(getattr(args, "exhaustive", False)),
        dump_operator=getattr(args, "dump_operator", None),
    )
    cfg.validate()
    return cfg


# -- subcommand handlers ------------------------------------------------------------


def _cmd_check_inverse(args) -> int:
    cfg = _resolve_config(args)
    symbols = []
    include_shift = False
    for item in (args.gens or "shift").split(","):
        item = item.strip()
        if item == "shift":
            include_shift = True
        elif item:
            symbols.append(_parse_symbol_arg(item))
    system = multiplier_family_system(symbols, cfg.truncation, include_shift=include_shift)
    degree = max(1, max(op.band[1] for op in system.realizations.values()))
    cfg.require_window(degree)
    report = check_inverse(
        system, cfg.max_length, cfg.truncation, tol=cfg.tol, probe=cfg.probe, exhaustive=cfg.exhaustive
    )
    if cfg.dump_operator:
        first = system.alphabet[0]
        dump_operator(system.realizations[first], cfg.dump_operator)
    ok = args.expect is None or report.verdict == args.expect
    out = {
        "experiment": "check-inverse",
        "parameters": {"gens": args.gens or "shift", **cfg.to_dict()},
        "verdicts": {"inverse_check": report.verdict, "expected": args.expect, "matches_expectation": ok},
        "witness": None if report.witness is None else str(report.witness),
        "residuals": {"witness": report.residual, "max": report.max_residual, "eps_budget": report.eps_budget},
        "check": report.to_dict(),
    }
    _emit(cfg, "check-inverse", out, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_regular_rep(args) -> int:
    cfg = _resolve_config(args)
    gens = [int(tok) for tok in args.gens.split(",") if tok.strip()]
    report = regular_rep_experiment(gens, cfg.max_length, cfg.truncation, tol=cfg.tol, probe=cfg.probe)
    ok = report["verdicts"]["matches_expectation"]
    _emit(cfg, "regular-rep", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_thm32(args) -> int:
    cfg = _resolve_config(args)
    sym = _parse_symbol_arg(args.symbol)
    report = noninverse_multiplier_experiment(sym, cfg.max_length, cfg.truncation, tol=cfg.tol, probe=cfg.probe)
    ok = report["verdicts"]["matches_expectation"]
    _emit(cfg, "thm32", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_thm51(args) -> int:
    cfg = _resolve_config(args)
    sym = _parse_symbol_arg(args.symbol)
    report = multiplier_triviality_experiment(sym, cfg.max_length, cfg.truncation, tol=cfg.tol, probe=cfg.probe)
    ok = report["verdicts"]["matches_expectation"]
    _emit(cfg, "thm51", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_thm52(args) -> int:
    cfg = _resolve_config(args)
    n = cfg.truncation - cfg.truncation % 2
    report = proper_extension_experiment(n, max(cfg.max_length, 6), tol=cfg.tol, probe=cfg.probe)
    ok = report["verdicts"]["matches_expectation"]
    _emit(cfg, "thm52", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_validate_extension(args) -> int:
    cfg = _resolve_config(args)
    syms = [_parse_symbol_arg(tok) for tok in args.symbol.split(";") if tok.strip()]
    base = shift_matrix(cfg.truncation)
    added = tuple(mult_operator(s, cfg.truncation) for s in syms)
    result = validate_extension(ExtensionCandidate(base, added), tol=max(cfg.tol, 1e-10))
    expect_pass = args.expect != "fail"
    ok = result["passed"] == expect_pass
    report = {
        "experiment": "validate-extension",
        "parameters": {"symbols": [format_symbol(s) for s in syms], **cfg.to_dict()},
        "verdicts": {"passed": result["passed"], "expected_pass": expect_pass, "matches_expectation": ok},
        "residuals": result,
    }
    if cfg.dump_operator and added:
        dump_operator(added[0], cfg.dump_operator)
    _emit(cfg, "validate-extension", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_extract_symbol(args) -> int:
    cfg = _resolve_config(args)
    sym = _parse_symbol_arg(args.symbol)
    op = mult_operator(sym, cfg.truncation)
    result = extract_symbol(op, degree=args.D, tol=cfg.tol)
    ok = result.roundtrip_ok and result.inner_verdict
    report = {
        "experiment": "extract-symbol",
        "parameters": {"symbol": format_symbol(sym), "degree": args.D, **cfg.to_dict()},
        "verdicts": {
            "roundtrip_ok": result.roundtrip_ok,
            "inner_verdict": result.inner_verdict,
            "matches_expectation": ok,
        },
        "residuals": {
            "roundtrip": result.roundtrip_residual,
            "boundary_rms": result.boundary_rms,
            "boundary_maxdev": result.boundary_maxdev,
            "tail": result.tail,
        },
        "coeffs_head": [[c.real, c.imag] for c in result.coeffs[:16]],
    }
    if cfg.dump_operator:
        dump_operator(op, cfg.dump_operator)
    _emit(cfg, "extract-symbol", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_blaschke_rank(args) -> int:
    cfg = _resolve_config(args)
    sym = _parse_symbol_arg(args.symbol)
    coeffs = sym.fourier_coeffs(args.D)
    profile = hankel_rank(coeffs, rel_tol=args.rel_tol)
    ok = True
    if args.expect_rank is not None:
        ok = profile.rank == args.expect_rank
    report = {
        "experiment": "blaschke-rank",
        "parameters": {"symbol": format_symbol(sym), "D": args.D, "rel_tol": args.rel_tol, **cfg.to_dict()},
        "verdicts": {
            "verdict": profile.describe(),
            "rank": profile.rank,
            "expected_rank": args.expect_rank,
            "matches_expectation": ok,
        },
        "rank_profile": profile.to_dict(),
    }
    if cfg.dump_operator:
        dump_operator(mult_operator(sym, cfg.truncation), cfg.dump_operator)
    _emit(cfg, "blaschke-rank", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_selftest(args) -> int:
    cfg = _resolve_config(args)
    sections = args.section.split(",") if args.section else None
    ok, results = run_selftest(seed=cfg.seed, write_baselines=args.write_baselines, sections=sections)
    for r in results:
        line = "ok  " if r["ok"] else "FAIL"
        detail = f"  ({r['detail']})" if r["detail"] else ""
        print(f"{line} {r['name']}{detail}")
    report = {
        "experiment": "selftest",
        "parameters": cfg.to_dict(),
        "verdicts": {"passed": ok, "checks": len(results), "matches_expectation": ok},
        "results": results,
    }
    _emit(cfg, "selftest", report, ok)
    return EXIT_OK if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isolab",
        description="Finite-window checks for isometric shift representations and inner-function multiplier extensions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, symbol=False, gens=None):
        p.add_argument("--N", type=int, default=None, help="truncation size")
        p.add_argument("--K", type=int, default=None, help="certified probe dimension")
        p.add_argument("--L", type=int, default=None, help="max word length")
        p.add_argument("--tol", type=float, default=None, help="residual tolerance")
        p.add_argument("--out", default=None, help="report directory")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
        p.add_argument("--config", default=None, help="JSON config file (flags take precedence)")
        p.add_argument("--dump-operator", default=None, help="dump the primary operator to this path")
        if symbol:
            p.add_argument("--symbol", required=True, help="inner symbol literal, e.g. 'z^2 * B(0.5)'")
        if gens is not None:
            p.add_argument("--gens", required=gens, help="generator list")
        return p

    p = common(sub.add_parser("check-inverse", help="inverse check for a generator family"), gens=False)
    p.add_argument("--expect", choices=["inverse", "not_inverse", "inconclusive"], default=None)
    p.add_argument("--exhaustive", action="store_true", help="pairwise-uniqueness cross-validation")
    p.set_defaults(func=_cmd_check_inverse)

    p = common(sub.add_parser("regular-rep", help="translation representation of a numerical semigroup"), gens=True)
    p.set_defaults(func=_cmd_regular_rep)

    p = common(sub.add_parser("thm32", help="non-inverse window check for a non-monomial multiplier"), symbol=True)
    p.set_defaults(func=_cmd_thm32)

    p = common(sub.add_parser("thm51", help="triviality dichotomy for a multiplier extension"), symbol=True)
    p.set_defaults(func=_cmd_thm51)

    p = common(sub.add_parser("thm52", help="doubled-shift proper inverse extension"))
    p.set_defaults(func=_cmd_thm52)

    p = common(sub.add_parser("validate-extension", help="isometry + commutation checks"), symbol=True)
    p.add_argument("--expect", choices=["pass", "fail"], default="pass")
    p.set_defaults(func=_cmd_validate_extension)

    p = common(sub.add_parser("extract-symbol", help="read a symbol off a multiplication operator"), symbol=True)
    p.add_argument("--D", type=int, default=None, help="extraction degree (default: full column)")
    p.set_defaults(func=_cmd_extract_symbol)

    p = common(sub.add_parser("blaschke-rank", help="Hankel rank profile of a symbol"), symbol=True)
    p.add_argument("--D", type=int, default=64, help="coefficient window")
    p.add_argument("--rel-tol", type=float, default=1e-8, help="relative rank threshold")
    p.add_argument("--expect-rank", type=int, default=None)
    p.set_defaults(func=_cmd_blaschke_rank)

    p = common(sub.add_parser("selftest", help="run every oracle check against frozen baselines"))
    p.add_argument("--section", default=None, help="comma-separated check-name prefixes")
    p.add_argument("--write-baselines", action="store_true", help="regenerate the baselines file")
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (IsolabError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
