"""Command-line front end.

Every subcommand writes a JSON report (stdout or ``--out``) and, where a trace
makes sense, a CSV file (``--csv``).  The exit status is 0 when every check in
the report passes, 1 when a check fails or a module rejects its input, and 2
for usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
import scipy
import scipy.stats

from . import __version__
from .cocycle import (Cocycle, birkhoff_test, sample_points, standard_observables,
                      trivialization_residuals, trivialize_aperiodic, trivialize_periodic)
from .dynsys import BernoulliSystem, CircleSystem
from .equiv import (PhaseExp, UndecidableInModel, decide_bernoulli_phases,
                    decide_bernoulli_w, decide_equiv0, decide_rotation_phases)
from .l1gap import atomic_obstruction, interval_demo
from .numtheory import PrecisionError, Theta, theta_csv_rows
from .singular import (CantorChart, NuMeasure, ProductWeights, cover_bound,
                       injectivity_check, nu_series_tail, quasi_invariance_check,
                       random_cylinders)

log = logging.getLogger("ergocycle")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Invalid configuration; the message names the offending field."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

ERGODICITY_DEFAULTS = {
    "system.kind": "circle",
    "system.theta": "sqrt2m1",
    "system.alphabet": "0,1",
    "system.weights": "1/2,1/2",
    "system.c1": "1",
    "run.n": "2",
    "run.phases": "0,0",
    "run.iterations": "100000",
    "run.samples": "8",
    "run.seed": "0",
    "run.tol": "",
    "run.observables": "",
    "run.degenerate": "false",
    "run.expect": "ergodic",
}


def load_config(path: str) -> dict:
    """Flat ``section.key -> str`` mapping from an INI or JSON file."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config: file not found: {path}")
    text = p.read_text()
    if not text.strip():
        raise UsageError("config: empty configuration")
    flat: dict[str, str] = {}
    if p.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"config: invalid JSON ({e})") from None
        if not isinstance(data, dict) or not data:
            raise UsageError("config: expected a non-empty JSON object")
        for section, body in data.items():
            if not isinstance(body, dict):
                raise UsageError(f"config.{section}: expected an object")
            for key, val in body.items():
                if isinstance(val, list):
                    val = ",".join(str(v) for v in val)
                flat[f"{section}.{key}"] = str(val).lower() if isinstance(val, bool) else str(val)
    else:
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise UsageError(f"config: {e}") from None
        for section in parser.sections():
            for key, val in parser.items(section):
                flat[f"{section}.{key}"] = val
    if not flat:
        raise UsageError("config: no settings found")
    unknown = sorted(set(flat) - set(ERGODICITY_DEFAULTS) - {"output.json", "output.csv"})
    if unknown:
        raise UsageError(f"config.{unknown[0]}: unknown field")
    return flat


def _field(cfg: dict, key: str, conv, what: str):
    raw = cfg.get(key, ERGODICITY_DEFAULTS.get(key, ""))
    try:
        return conv(raw)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise UsageError(f"config.{key}: expected {what}, got {raw!r} ({e})") from None


def _csv_list(s: str) -> list[str]:
    return [t.strip() for t in s.split(",") if t.strip()]


def _bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ValueError("not a boolean")


def _symbol(s: str):
    try:
        return int(s)
    except ValueError:
        return s


def seed_from_env(seed: int) -> int:
    env = os.environ.get("ERGOCYCLE_SEED")
    if env is None or env == "":
        return seed
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ERGOCYCLE_SEED: expected an integer, got {env!r}") from None


def build_system(cfg: dict):
    kind = cfg.get("system.kind", ERGODICITY_DEFAULTS["system.kind"]).strip()
    if kind == "circle":
        return _field(cfg, "system.theta", CircleSystem, "a theta spec")
    if kind == "bernoulli":
        alphabet = _field(cfg, "system.alphabet", lambda s: tuple(_symbol(t) for t in _csv_list(s)),
                          "comma-separated symbols")
        weights = _field(cfg, "system.weights", lambda s: tuple(Fraction(t) for t in _csv_list(s)),
                         "comma-separated rationals")
        c1 = _field(cfg, "system.c1", lambda s: frozenset(_symbol(t) for t in _csv_list(s)),
                    "comma-separated symbols")
        try:
            return BernoulliSystem(alphabet, weights, c1)
        except ValueError as e:
            raise UsageError(f"config.system: {e}") from None
    raise UsageError(f"config.system.kind: expected 'circle' or 'bernoulli', got {kind!r}")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def versions() -> dict:
    return {"ergocycle": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__, "mpmath": mpmath.__version__}


def dump_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"


def emit(report: dict, out: str | None) -> None:
    text = dump_json(report)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def write_csv(rows: list[dict], path: str | None, fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    if path:
        Path(path).write_text(buf.getvalue())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_convergents(args) -> int:
    """CSV columns: r, b_r, k_r, m_r, err (|theta - k_r/m_r|), det_identity."""
    try:
        theta = Theta.parse(args.theta)
    except ValueError as e:
        raise UsageError(f"--theta: {e}") from None
    if args.count < 1:
        raise UsageError("--count: must be >= 1")
    try:
        rows = list(theta_csv_rows(theta, args.count))
    except PrecisionError as e:
        emit({"command": "convergents", "error": str(e)}, args.out)
        return EXIT_FAIL
    fields = ["r", "b_r", "k_r", "m_r", "err", "det_identity"]
    text = write_csv(rows, args.csv, fields)
    if not args.csv:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_ergodicity(args) -> int:
    """CSV columns: observable, N, deviation (largest over samples at that N)."""
    cfg = load_config(args.config)
    system = build_system(cfg)
    n = _field(cfg, "run.n", int, "an integer")
    if n < 1:
        raise UsageError("config.run.n: must be >= 1")
    phases = _field(cfg, "run.phases", lambda s: [Fraction(t) for t in _csv_list(s)],
                    "two rational exponents")
    if len(phases) != 2:
        raise UsageError("config.run.phases: expected two exponents r1,r2 (phase = exp(2 pi i r))")
    n_iters = _field(cfg, "run.iterations", int, "an integer")
    if n_iters < 1:
        raise UsageError("config.run.iterations: must be >= 1")
    n_samples = _field(cfg, "run.samples", int, "an integer")
    seed = seed_from_env(_field(cfg, "run.seed", int, "an integer"))
    tol = _field(cfg, "run.tol", lambda s: float(s) if s.strip() else None, "a number")
    degenerate = _field(cfg, "run.degenerate", _bool, "a boolean")
    expect = cfg.get("run.expect", "ergodic").strip()
    if expect not in ("ergodic", "non-ergodic"):
        raise UsageError("config.run.expect: expected 'ergodic' or 'non-ergodic'")
    lam = tuple(np.exp(2j * np.pi * float(r)) for r in phases)
    c = Cocycle.make(system, n, lam, degenerate=degenerate)
    obs = standard_observables(c)
    wanted = _csv_list(cfg.get("run.observables", ""))
    if not wanted:
        wanted = [k for k in obs if k != "one_E11"] if not degenerate else ["one_E11"]
    for name in wanted:
        if name not in obs:
            raise UsageError(f"config.run.observables: unknown observable {name!r} "
                             f"(choose from {', '.join(obs)})")
    samples = sample_points(system, n_samples, seed)
    results = {}
    trace_rows = []
    t0 = time.perf_counter()
    for name in wanted:
        rep = birkhoff_test(c, obs[name], n_iters, samples, tol=tol, name=name)
        results[name] = {"deviation": rep.deviation, "tol": rep.tol, "verdict": rep.verdict}
        trace_rows += [{"observable": name, "N": m, "deviation": d} for m, d in rep.trace]
    log.info("ergodicity-run finished in %.2fs", time.perf_counter() - t0)
    want = "ergodic-consistent" if expect == "ergodic" else "non-ergodic-detected"
    passed = all(r["verdict"] == want for r in results.values())
    report = {"command": "ergodicity-run", "system": system.describe(), "n": n,
              "N": n_iters, "samples": n_samples, "seed": seed,
              "phases": [str(p) for p in phases], "degenerate": degenerate,
              "expect": expect, "observables": results,
              "verdict": "pass" if passed else "fail", "versions": versions()}
    emit(report, args.out or cfg.get("output.json"))
    csv_path = args.csv or cfg.get("output.csv")
    if csv_path:
        write_csv(trace_rows, csv_path, ["observable", "N", "deviation"])
    return EXIT_OK if passed else EXIT_FAIL


def cmd_singular(args) -> int:
    """CSV columns: N, cover_bound (2^N (b_N - a_N)), tail (b_N - a_N)."""
    try:
        theta = Theta.parse(args.theta)
        weights = ProductWeights.parse(args.weights)
    except ValueError as e:
        raise UsageError(f"--theta/--weights: {e}") from None
    if not 1 <= args.depth <= 200:
        raise UsageError("--depth: must be in 1..200")
    seed = seed_from_env(args.seed)
    try:
        weights.a(args.depth)
    except ValueError as e:
        raise UsageError(f"--weights: {e}") from None
    chart = CantorChart(theta, args.depth)
    nu = NuMeasure(chart, weights)
    rows = []
    prev = None
    ratios_ok = True
    for level in range(1, args.depth + 1):
        cb = cover_bound(chart, level)
        if prev is not None and not cb < prev * 2 / 3:
            ratios_ok = False
        prev = cb
        rows.append({"N": level, "cover_bound": mpmath.nstr(mpmath.mpf(cb), 12),
                     "tail": mpmath.nstr(chart.width(level), 12)})
    inj = injectivity_check(chart, min(args.depth, 12))
    rng = np.random.default_rng([seed, 3])
    qi = quasi_invariance_check(nu, ["full"] + random_cylinders(rng, 20))
    checks = {"tail_invariant": chart.check_tail_invariant(),
              "cover_ratio_below_2_3": ratios_ok,
              "injectivity": inj["ok"],
              "quasi_invariance": qi["ok"]}
    report = {"command": "singular-build", "chart": chart.summary(),
              "weights": weights.describe(), "K": nu.K, "k_tail": nu_series_tail(nu.K),
              "cover_bound_at_depth": rows[-1]["cover_bound"], "checks": checks,
              "seed": seed, "verdict": "pass" if all(checks.values()) else "fail",
              "versions": versions()}
    if args.samples:
        rng = np.random.default_rng([seed, 5])
        _, ks, bits = nu.sample(rng, args.samples, return_parts=True)
        with mpmath.workprec(320):
            lines = [mpmath.nstr(nu.exact_point(int(k), b).mp(), 18, min_fixed=-100, max_fixed=100)
                     for k, b in zip(ks, bits)]
        if args.dump:
            Path(args.dump).write_text("\n".join(lines) + "\n")
        report["samples"] = {"count": args.samples, "k0_fraction": float(np.mean(ks == 0))}
    emit(report, args.out)
    if args.csv:
        write_csv(rows, args.csv, ["N", "cover_bound", "tail"])
    return EXIT_OK if report["verdict"] == "pass" else EXIT_FAIL


def _phase_args(data: dict, keys) -> list[PhaseExp]:
    out = []
    for k in keys:
        if k not in data:
            raise UsageError(f"--input.{k}: missing")
        try:
            out.append(PhaseExp.parse(data[k]))
        except (ValueError, TypeError, ZeroDivisionError) as e:
            raise UsageError(f"--input.{k}: {e}") from None
    return out


def _int_arg(data: dict, key: str) -> int:
    if key not in data:
        raise UsageError(f"--input.{key}: missing")
    try:
        return int(data[key])
    except (ValueError, TypeError):
        raise UsageError(f"--input.{key}: expected an integer") from None


def cmd_equiv(args) -> int:
    try:
        data = json.loads(args.input)
    except json.JSONDecodeError as e:
        raise UsageError(f"--input: invalid JSON ({e})") from None
    if not isinstance(data, dict):
        raise UsageError("--input: expected a JSON object")
    try:
        if args.case == "equiv0":
            (eta,) = _phase_args(data, ["eta"])
            verdict = decide_equiv0(eta)
        elif args.case == "bern-phase":
            ph = _phase_args(data, ["l1", "l2", "l1p", "l2p"])
            verdict = decide_bernoulli_phases(*ph, _int_arg(data, "n"))
        elif args.case == "bern-w":
            for k in ("c1", "c1p", "alphabet"):
                if not isinstance(data.get(k), list):
                    raise UsageError(f"--input.{k}: expected a list")
            verdict = decide_bernoulli_w(data["c1"], data["c1p"], _int_arg(data, "n"),
                                         data["alphabet"])
        else:
            ph = _phase_args(data, ["l1", "l2", "l1p", "l2p"])
            verdict = decide_rotation_phases(*ph, _int_arg(data, "n"),
                                             bool(data.get("assume_transcendental", False)))
    except UndecidableInModel as e:
        emit({"answer": "undecidable", "error": str(e)}, args.out)
        return EXIT_FAIL
    except ValueError as e:
        emit({"error": str(e)}, args.out)
        return EXIT_FAIL
    emit(verdict.to_json(), args.out)
    return EXIT_OK


def cmd_l1(args) -> int:
    seed = seed_from_env(args.seed)
    if args.mode == "atomic":
        try:
            k = int(args.param)
        except ValueError:
            raise UsageError("--param: expected an integer K for atomic mode") from None
        if k < 1:
            raise UsageError("--param: K must be >= 1")
        rep = atomic_obstruction(k)
        rep["bound"] = str(rep["bound"])
        ok = rep["attained"]
    else:
        try:
            eps = Fraction(args.param)
        except (ValueError, ZeroDivisionError):
            raise UsageError("--param: expected a rational epsilon such as 1/16") from None
        if not 0 < eps <= 1:
            raise UsageError("--param: epsilon must lie in (0, 1]")
        rep = interval_demo(args.theta, eps, count=args.count, seed=seed)
        ok = rep["ok"]
    rep.update({"command": "l1-demo", "seed": seed, "verdict": "pass" if ok else "fail",
                "versions": versions()})
    emit(rep, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_trivialize(args) -> int:
    """CSV columns: index, residual (|zeta_n W_n zeta_{n-1}* - target|)."""
    if args.k < 1 or args.n < 1:
        raise UsageError("--k and --n must be >= 1")
    seed = seed_from_env(args.seed)
    rng = np.random.default_rng([seed, args.k, args.n])
    group = scipy.stats.unitary_group(args.n, seed=rng) if args.n > 1 else None

    def unitary():
        if group is None:
            return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
        return group.rvs()

    rows = []
    try:
        if args.mode == "periodic":
            ws = [unitary() for _ in range(args.k)]
            zetas, Z, lam = trivialize_periodic(ws)
            for i in range(1, args.k + 1):
                r = zetas[i % args.k] @ ws[i % args.k] @ zetas[i - 1].conj().T - Z
                rows.append({"index": i, "residual": float(np.linalg.norm(r, 2))})
            extra = {"lambda_phases": [float(np.angle(x) % (2 * np.pi)) for x in lam]}
        else:
            ws = {i: unitary() for i in range(-args.k, args.k + 1)}
            zetas = trivialize_aperiodic(ws)
            rows = [{"index": i, "residual": r} for i, r in trivialization_residuals(zetas, ws).items()]
            extra = {}
    except ArithmeticError as e:
        emit({"command": "trivialize", "error": str(e)}, args.out)
        return EXIT_FAIL
    worst = max(r["residual"] for r in rows)
    ok = worst <= 1e-10
    rep = {"command": "trivialize", "mode": args.mode, "k": args.k, "n": args.n,
           "seed": seed, "identities": len(rows), "max_residual_ok": ok,
           "verdict": "pass" if ok else "fail", "versions": versions(), **extra}
    emit(rep, args.out)
    if args.csv:
        write_csv(rows, args.csv, ["index", "residual"])
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

CONFIG_HELP = """\
config file (INI or JSON).  Sections and defaults:
  [system] kind=circle | bernoulli
           theta=sqrt2m1            (circle; also golden, cf:a,b, cf:pre|per, num:<decimal>)
           alphabet=0,1  weights=1/2,1/2  c1=1   (bernoulli)
  [run]    n=2  phases=0,0 (exponents r, phase exp(2 pi i r))
           iterations=100000  samples=8  seed=0  tol=(5/sqrt(N))
           observables=(all but one_E11)  degenerate=false  expect=ergodic
  [output] json=<path>  csv=<path>
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ergocycle", description="Ergodic matrix cocycles over Bernoulli "
                "shifts and irrational rotations: experiments and exact checks.",
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"ergocycle {__version__}")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, csv_doc=None):
        sp.add_argument("--out", help="JSON report path (default: stdout)")
        if csv_doc:
            sp.add_argument("--csv", help=f"CSV output path; columns: {csv_doc}")

    sp = sub.add_parser("convergents", help="continued-fraction convergents as CSV")
    sp.add_argument("--theta", required=True)
    sp.add_argument("--count", type=int, default=10)
    common(sp, "r,b_r,k_r,m_r,err,det_identity (stdout when omitted)")
    sp.set_defaults(func=cmd_convergents)

    sp = sub.add_parser("ergodicity-run", help="Birkhoff-average ergodicity test",
                        epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--config", required=True)
    common(sp, "observable,N,deviation")
    sp.set_defaults(func=cmd_ergodicity)

    sp = sub.add_parser("singular-build", help="Cantor chart and singular measure summary")
    sp.add_argument("--theta", default="sqrt2m1")
    sp.add_argument("--depth", type=int, default=30)
    sp.add_argument("--weights", default="const:1/2", help="a-list 'a1,a2,...' or 'const:a'")
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dump", help="write sampled points, one per line, 18 digits")
    common(sp, "N,cover_bound,tail")
    sp.set_defaults(func=cmd_singular)

    sp = sub.add_parser("equiv-decide", help="exact unitary-equivalence deciders")
    sp.add_argument("--case", required=True, choices=["equiv0", "bern-phase", "bern-w", "rot-phase"])
    sp.add_argument("--input", required=True, help="JSON; phases as {\"p\": .., \"q\": ..}")
    common(sp)
    sp.set_defaults(func=cmd_equiv)

    sp = sub.add_parser("l1-demo", help="l1 norm lower bounds")
    sp.add_argument("--mode", required=True, choices=["interval", "atomic"])
    sp.add_argument("--param", required=True, help="epsilon (interval) or K (atomic)")
    sp.add_argument("--theta", default="sqrt2m1")
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_l1)

    sp = sub.add_parser("trivialize", help="cocycle trivialisation on random unitaries")
    sp.add_argument("--mode", choices=["periodic", "aperiodic"], default="periodic")
    sp.add_argument("--k", type=int, default=4, help="period (periodic) or window radius")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, "index,residual")
    sp.set_defaults(func=cmd_trivialize)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required (see --help)")
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"ergocycle: usage error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
