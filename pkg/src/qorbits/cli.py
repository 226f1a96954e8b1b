"""Command line front end: ``qorbits <kind> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 internal-consistency failure."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import sympy

from .harness import KINDS, ConfigError, ExperimentConfig, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_CONSISTENCY = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def _q_range(text: str) -> tuple[int, ...]:
    """A:B:step, half-open like a Python range; step defaults to 1."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"q-range: expected A:B or A:B:step, got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
    except ValueError:
        raise ConfigError(f"q-range: non-integer field in {text!r}") from None
    if step < 1:
        raise ConfigError("q-range: step must be positive")
    return tuple(range(a, b, step))


def read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment. Keys mirror the long flag names."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {n} is not key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("_", "-")] = v
    return out


_FLAGS = ("q", "q-range", "level", "variant", "subgroup", "coset", "out", "format", "tol", "cache",
          "threads", "seed", "observables", "m", "n", "primes-only", "no-timing")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qorbits", description="q-orbits of closed geodesics: experiments and checks")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--q", help="comma-separated moduli")
    p.add_argument("--q-range", help="A:B:step (B excluded)")
    p.add_argument("--primes-only", action="store_true", default=None, help="keep only prime q")
    p.add_argument("--level", type=int, help="level N (default 1; birch-stevens and homology need a prime)")
    p.add_argument("--variant", help="minimal | explicit:<n> | epsreg:<eps> | inverse-lift | negative-inverse-lift")
    p.add_argument("--subgroup", help="generators g1,g2,... of H, or 'squares' (default: all units)")
    p.add_argument("--coset", type=int, help="coset representative c (default 1)")
    p.add_argument("--observables", help="comma-separated observable names (equidist)")
    p.add_argument("--m", help="comma-separated m values (kloosterman)")
    p.add_argument("--n", help="comma-separated n values (kloosterman)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--tol", type=float)
    p.add_argument("--cache", help="orbit cache directory")
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int, help="seed for the Monte Carlo Haar oracle")
    p.add_argument("--no-timing", action="store_true", default=None, help="omit wall-clock timings")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    merged = read_config_file(args.config) if args.config else {}
    unknown = set(merged) - set(_FLAGS)
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    for flag in _FLAGS:
        val = getattr(args, flag.replace("-", "_"))
        if val is not None:
            merged[flag] = val

    def get(key, conv, default):
        if key not in merged:
            return default
        try:
            return conv(merged[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot parse {merged[key]!r}") from None

    def flag(v):
        return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")

    qs: tuple[int, ...] = ()
    if "q" in merged:
        qs += _ints(str(merged["q"]))
    if "q-range" in merged:
        qs += _q_range(str(merged["q-range"]))
    if get("primes-only", flag, False):
        qs = tuple(q for q in qs if sympy.isprime(q))
    sub = merged.get("subgroup")
    subgroup = None if sub is None else ("squares" if str(sub).strip() == "squares" else _ints(str(sub)))
    cfg = ExperimentConfig(
        kind=args.kind, qs=qs, N=get("level", int, 1), variant=str(merged.get("variant", "minimal")),
        subgroup=subgroup, coset=get("coset", int, 1),
        observables=tuple(s.strip() for s in merged["observables"].split(",")) if "observables" in merged
        else ExperimentConfig.observables,
        tol=get("tol", float, 1e-8), out=merged.get("out"), format=str(merged.get("format", "json")),
        cache=merged.get("cache"), threads=get("threads", int, 1), seed=get("seed", int, None),
        m_values=_ints(str(merged["m"])) if "m" in merged else (1,),
        n_values=_ints(str(merged["n"])) if "n" in merged else (1,),
        timing=not get("no-timing", flag, False),
    )
    return cfg.validate()


def _write(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger("qorbits").setLevel(logging.INFO)
        cfg = config_from_args(args)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.format == "csv":
        _write(cfg.out, report.csv)
    elif cfg.kind == "orbit" and cfg.out is None:
        _write(None, report.side_files["orbit.jsonl"])
    else:
        _write(cfg.out, report.to_json(timing=cfg.timing))
        if cfg.kind == "orbit":
            Path(cfg.out).with_suffix(".jsonl").write_text(report.side_files["orbit.jsonl"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
