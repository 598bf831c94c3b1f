"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 budget exhausted, 4 verification
failure. Every option --some-flag may also be set through the environment
variable TRUNCLAB_SOME_FLAG (explicit flags win).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from ._nt import BudgetExceeded, TrunclabError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_VERIFY = 4
ENV_PREFIX = "TRUNCLAB_"


class VerificationFailed(TrunclabError):
    pass


@dataclass
class RunConfig:
    command: str
    threads: int = 1
    seed: int = 0
    mem_budget: int = 1 << 30
    out_dir: Optional[Path] = None
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.threads < 1:
            raise ValueError("--threads must be >= 1")
        if self.mem_budget < 1:
            raise ValueError("--budget-mem must be positive")
        for key in ("node_budget", "max_candidates", "segment", "bound"):
            v = self.options.get(key)
            if v is not None and v < 1:
                raise ValueError(f"--{key.replace('_', '-')} must be positive")


# ---------------------------------------------------------------- output helpers

def _emit(cfg: RunConfig, name: str, payload: dict) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    sys.stdout.write(text)
    if cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / f"{name}.json").write_text(text, encoding="utf-8")


def _out_path(cfg: RunConfig, path: Optional[str]) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    if not p.is_absolute() and cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        p = cfg.out_dir / p
    return p


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------- commands

def cmd_scan(cfg: RunConfig, a) -> int:
    from .sieve import (load_checkpoint, polya_scan, save_checkpoint, truncate_report_csv,
                        turan_scan, write_report_csv)

    ckpt_path = _out_path(cfg, a.checkpoint)
    csv_path = _out_path(cfg, a.csv)
    start = None
    if a.resume:
        if ckpt_path is None:
            raise ValueError("--resume needs --checkpoint")
        if ckpt_path.exists():
            start = load_checkpoint(ckpt_path)
            if csv_path is not None and csv_path.exists():
                truncate_report_csv(csv_path, start.next_n)
    if csv_path is not None and start is None:
        write_report_csv([], csv_path)

    def on_flush(cp, rows):
        if csv_path is not None:
            write_report_csv(rows, csv_path, append=True)
        if ckpt_path is not None:
            save_checkpoint(cp, ckpt_path)

    scan = polya_scan if a.kind == "polya" else turan_scan
    _, report = scan(a.bound, start, sample_every=a.sample_every, segment=a.segment,
                     threads=cfg.threads, mem_budget=cfg.mem_budget, flush_every=a.flush_every,
                     on_flush=on_flush)
    _emit(cfg, f"scan_{a.kind}", report.summary())
    if a.require_certified and not report.certified:
        raise VerificationFailed(f"{a.kind} scan to {a.bound} is not certified")
    return EXIT_OK


def cmd_delta(cfg: RunConfig, a) -> int:
    from .minimize import BnBConfig, delta0_brute, delta1_bnb, delta1_brute, delta_descent

    cls = a.cls.lower()
    if a.method == "descent":
        if cls != "f":
            raise ValueError("descent minimizes over class f")
        res = delta_descent(a.x, a.starts, cfg.seed)
    elif a.method == "brute":
        if cls == "f1":
            res = delta1_brute(a.x)
        elif cls == "f0":
            res = delta0_brute(a.x)
        else:
            raise ValueError("brute force covers classes f0 and f1")
    else:
        if cls != "f1":
            raise ValueError("branch and bound covers class f1 only")
        res = delta1_bnb(a.x, BnBConfig(node_budget=a.node_budget, parallel_width=cfg.threads))
    payload = res.to_json()
    if a.out == "text":
        sys.stdout.write(f"{payload['value']} ({payload['certificate']})\n")
        return EXIT_OK
    _emit(cfg, f"delta_{cls}_{a.method}", payload)
    return EXIT_OK


def cmd_round(cfg: RunConfig, a) -> int:
    from .multfunc import PrimeAssignment
    from .rounding import round_to_pm1

    f = PrimeAssignment.from_json(_load_json(a.input))
    g, trace = round_to_pm1(f, a.x)
    trace_path = _out_path(cfg, a.trace)
    if trace_path is not None:
        trace_path.write_text(trace.dumps() + "\n", encoding="utf-8")
    payload = {"x": a.x, "assignment": g.to_json(), "initial_sum": trace.to_json()["initial_sum"],
               "final_sum": trace.to_json()["final_sum"], "sign_property": trace.sign_property()}
    _emit(cfg, "round", payload)
    if not trace.sign_property():
        raise VerificationFailed("step sign property violated")
    return EXIT_OK


def cmd_construct(cfg: RunConfig, a) -> int:
    from . import constructions as cons
    from .multfunc import PrimeAssignment

    if a.kind == "window":
        if a.N is None:
            raise ValueError("--kind window needs --N")
        rep = cons.liouville_window(a.x, a.N, a.mode)
        _emit(cfg, "construct_window", rep.to_json())
    elif a.kind == "extremal":
        res = cons.theorem2_extremal(a.x, a.mode)
        _emit(cfg, "construct_extremal", res.to_json())
    else:
        f = (PrimeAssignment.from_json(_load_json(a.input)) if a.input
             else PrimeAssignment.ones(a.x))
        _emit(cfg, "construct_prop31", cons.prop31_decomposition(f, a.x).to_json())
    return EXIT_OK


def cmd_realize(cfg: RunConfig, a) -> int:
    from .constructions import realize_as_character
    from .multfunc import PrimeAssignment

    pattern = PrimeAssignment.from_json(_load_json(a.pattern))
    w = realize_as_character(pattern, a.x, a.max_candidates)
    _emit(cfg, "realize", w.to_json())
    if not w.verified():
        raise VerificationFailed(f"witness q = {w.q} failed re-verification")
    return EXIT_OK


def cmd_constants(cfg: RunConfig, a) -> int:
    from .analysis import EULER_GAMMA_STR, KAPPA, LOG2_STR, theorem2_constant

    c = theorem2_constant()
    _emit(cfg, "constants", {
        "inner": c.inner,
        "full": c.full,
        "quadrature_error": c.error,
        "kappa": KAPPA,
        "gamma": EULER_GAMMA_STR,
        "log2": LOG2_STR,
        "notes": {
            "inner": "1 - 2 log(1+sqrt e) + 4 int_1^sqrt(e) log t/(t+1) dt, adaptive quadrature",
            "full": "inner * log 2",
            "kappa": "printed truncation 0.32867",
            "gamma": "Euler-Mascheroni constant, 20 digits",
        },
    })
    return EXIT_OK


def cmd_rho(cfg: RunConfig, a) -> int:
    from .analysis import dickman_rho, dickman_table

    import math

    v = dickman_rho(a.u, a.precision)
    table = dickman_table(max(20, int(math.floor(a.u)) + 2))
    _emit(cfg, "rho", {"u": a.u, "rho": v, "error_bound": table.error_at(a.u)})
    return EXIT_OK


def cmd_verify(cfg: RunConfig, a) -> int:
    from .verify import verify_suite

    rep = verify_suite(a.suite, cfg.seed)
    _emit(cfg, f"verify_{a.suite}", rep)
    return EXIT_OK if rep["passed"] else EXIT_VERIFY


COMMANDS = {
    "scan": cmd_scan, "delta": cmd_delta, "round": cmd_round, "construct": cmd_construct,
    "realize": cmd_realize, "constants": cmd_constants, "rho": cmd_rho, "verify": cmd_verify,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trunclab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--budget-mem", type=int, default=1 << 30, help="memory budget in bytes")
    p.add_argument("--out-dir", default=None, help="directory for JSON/CSV artifacts")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", help="Polya or Turan partial-sum scan")
    s.add_argument("--kind", choices=("polya", "turan"), required=True)
    s.add_argument("--bound", type=int, required=True)
    s.add_argument("--checkpoint", help="checkpoint JSON path")
    s.add_argument("--resume", action="store_true", help="continue from --checkpoint if present")
    s.add_argument("--csv", help="CSV report path")
    s.add_argument("--sample-every", type=int, default=10**6)
    s.add_argument("--segment", type=int, default=1 << 20)
    s.add_argument("--flush-every", type=int, default=10**8)
    s.add_argument("--require-certified", action="store_true",
                   help="exit 4 unless the scan certifies its sign claim")

    d = sub.add_parser("delta", help="minimize sum f(n)/n")
    d.add_argument("--x", type=int, required=True)
    d.add_argument("--class", dest="cls", choices=("f", "f0", "f1", "F", "F0", "F1"), default="f1")
    d.add_argument("--method", choices=("brute", "bnb", "descent"), default="bnb")
    d.add_argument("--starts", type=int, default=8)
    d.add_argument("--node-budget", type=int, default=10**7)
    d.add_argument("--out", choices=("json", "text"), default="json")

    r = sub.add_parser("round", help="round f to a +-1 function")
    r.add_argument("--x", type=int, required=True)
    r.add_argument("--input", required=True, help="assignment JSON")
    r.add_argument("--trace", help="trace JSON output path")

    c = sub.add_parser("construct", help="explicit constructions")
    c.add_argument("--kind", choices=("window", "extremal", "prop31"), required=True)
    c.add_argument("--x", type=int, required=True)
    c.add_argument("--N", type=int)
    c.add_argument("--mode", choices=("exact", "float"))
    c.add_argument("--input", help="assignment JSON (prop31)")

    z = sub.add_parser("realize", help="find a quadratic character matching a sign pattern")
    z.add_argument("--pattern", required=True)
    z.add_argument("--x", type=int, required=True)
    z.add_argument("--max-candidates", type=int, default=10**6)

    sub.add_parser("constants", help="print the extremal constants")

    h = sub.add_parser("rho", help="Dickman rho")
    h.add_argument("--u", type=float, required=True)
    h.add_argument("--precision", type=float, default=1e-12)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", choices=("identities", "oracles", "bounds", "all"), default="all")
    _apply_env(p)
    for sp in sub.choices.values():
        _apply_env(sp)
    return p


def _apply_env(parser: argparse.ArgumentParser) -> None:
    for action in parser._actions:
        long = [o for o in action.option_strings if o.startswith("--")]
        if not long or action.dest in ("help", "version"):
            continue
        key = ENV_PREFIX + long[0][2:].replace("-", "_").upper()
        raw = os.environ.get(key)
        if raw is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            action.default = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                action.default = action.type(raw) if action.type else raw
            except ValueError:
                parser.error(f"environment variable {key}={raw!r} is not valid for {long[0]}")
            action.required = False


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k not in ("threads", "seed", "budget_mem", "out_dir", "command")}
    cfg = RunConfig(args.command, args.threads, args.seed, args.budget_mem,
                    Path(args.out_dir) if args.out_dir else None, opts)
    try:
        cfg.validate()
        return COMMANDS[args.command](cfg, args)
    except BudgetExceeded as exc:
        print(f"trunclab: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except VerificationFailed as exc:
        print(f"trunclab: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ValueError, KeyError, TrunclabError) as exc:
        print(f"trunclab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
