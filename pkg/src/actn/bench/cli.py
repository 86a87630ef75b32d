"""``bench`` command line.

Exit codes: 0 success, 1 usage error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from actn import expr as ex
from actn.bench.config import ConfigError, RunConfig
from actn.bench.records import RecordWriter
from actn.bench.runner import NumericFailure, load_bindings, parse_interval, run, run_oracle
from actn.circuit import gauss_legendre, uniform_rule
from actn.integrands.oracle import OracleUnavailable

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bench", description="Tensor-network quadrature benchmarks")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sweep_flags(sp):
        sp.add_argument("config", help="key = value config file")
        sp.add_argument("--seed", help="override seed list, e.g. 0..4")
        sp.add_argument("--chi", help="override chi list, e.g. 1,2,4")
        sp.add_argument("--grid", help="override G list")
        sp.add_argument("--out", help="CSV output path (default: stdout)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")

    sweep_flags(sub.add_parser("run", help="run a TN / quasi-MC sweep"))
    sweep_flags(sub.add_parser("oracle", help="brute-force reference values only"))
    e = sub.add_parser("expr", help="integrate an expression")
    e.add_argument("text")
    e.add_argument("--bindings", required=True, help="JSON object of sample vectors")
    e.add_argument("--rule", default="gauss:4", help="gauss:<G> or uniform:<G>")
    e.add_argument("--interval", default="0,1")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load_config(args) -> RunConfig:
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for flag, key in (("seed", "seed"), ("chi", "chi"), ("grid", "G"), ("out", "out")):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    return RunConfig.from_text(text, overrides)


def _sweep(args, fn) -> int:
    cfg = _load_config(args)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fn(cfg, RecordWriter(fh).write, args.threads)
    else:
        fn(cfg, RecordWriter(sys.stdout).write, args.threads)
    return EXIT_OK


def _parse_rule(text: str, interval):
    kind, _, g = text.partition(":")
    try:
        G = int(g)
    except ValueError:
        raise ConfigError(f"rule must look like gauss:<G> or uniform:<G>, got {text!r}") from None
    if kind == "gauss":
        return gauss_legendre(G, interval)
    if kind == "uniform":
        return uniform_rule(G, interval)
    raise ConfigError(f"unknown rule kind {kind!r}")


def _expr(args) -> int:
    ast = ex.parse(args.text)
    rule = _parse_rule(args.rule, parse_interval(args.interval))
    env = ex.CompilationEnv(load_bindings(args.bindings), {v: rule for v in ex.variables(ast)})
    tn = ex.compile(ast, env)
    report = ex.integrate(tn, env.grids)
    if report.value_sign != 0 and not np.isfinite(report.value_log):
        raise NumericFailure("non-finite integral")
    print(f"{report.value!r}")
    print(
        f"log={report.value_log!r} sign={report.value_sign} tensors={len(tn)} "
        f"copies={tn.tags.count('copy')} max_order={report.max_intermediate_order}",
        file=sys.stderr,
    )
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except _UsageError as e:
        print(f"bench: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(message)s")
    try:
        if args.command == "expr":
            return _expr(args)
        return _sweep(args, run if args.command == "run" else run_oracle)
    except (ConfigError, OracleUnavailable, ex.ExprSyntaxError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"bench: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, FloatingPointError, np.linalg.LinAlgError, OverflowError) as e:
        print(f"bench: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
