"""Command-line front end: ``klotzcbi {assess,sweep,cutpoints,gdump,simulate,oracle-check}``.

Every subcommand writes CSV (header row, UTF-8) to standard output or to
``--out``.  Settings may come from a YAML or JSON file given with
``--config``; command-line flags override it.  Config keys match the long
flag names with dashes replaced by underscores, for example::

    prior: {kind: beta, alpha: 1, beta: 10000}   # or "beta:1,10000"
    b: 1.0e-4
    phi1: 0.05
    phi2: 0.05
    axis: n
    logspace: {start: 2, stop: 7, num: 26}       # or values: [100, 1000]
    priors: ["beta:2,20000", "beta:1,10000"]     # sweep over several priors

Exit codes: 0 success, 1 usage or invalid input, 2 prior knowledge
inconsistent with the prior (``PK4 violated``), 3 numerical
non-convergence or a failed oracle check.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import yaml

from .cutpoints import DEFAULT_EPS, solve_cutpoints
from .engine import (ROW_FIELDS, AssessmentProblem, conservative_confidence,
                     iid_posterior)
from .errors import DomainError, NonConvergence, PK4Violated
from .gfunctions import GFunctions
from .klotz import KlotzParams, likelihood_ff, simulate_chain
from .priors import BetaPrior, Prior, parse_prior, prior_from_config

log = logging.getLogger("klotzcbi")

EXIT_OK, EXIT_USAGE, EXIT_PK4, EXIT_NUMERIC = 0, 1, 2, 3

CUTPOINT_FIELDS = ("n", "case_id", "c1_low", "c2_low", "c1_high", "c2_high",
                   "x_l", "x_u", "mass_residual_low", "mass_residual_high",
                   "g_residual_low", "g_residual_high")
IID_FIELDS = ("b", "n", "prior", "iid", "status")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- formatting ---------------------------------------------------------------

def fmt(value: Any) -> str:
    """CSV cell text; floats use ``repr``, which switches to exponent form below 1e-4."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(rows: Iterable[Mapping[str, Any]], fields: Sequence[str], out: Path | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([fmt(row.get(f)) for f in fields])
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")


# -- configuration ------------------------------------------------------------

def load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping")
    return data


def as_prior(spec: Any) -> Prior:
    if isinstance(spec, Prior):
        return spec
    if isinstance(spec, str):
        return parse_prior(spec)
    if isinstance(spec, Mapping):
        return prior_from_config(spec)
    raise UsageError(f"cannot interpret prior {spec!r}")


def merged(args: argparse.Namespace) -> dict[str, Any]:
    """Config file values overlaid by any flag given on the command line."""
    cfg = load_config(getattr(args, "config", None))
    for key, value in vars(args).items():
        if key in ("config", "func", "command"):
            continue
        if value is not None:
            cfg[key] = value
    return cfg


def setting(cfg: Mapping[str, Any], key: str, default: Any) -> Any:
    """``cfg[key]`` unless missing or null; explicit zeros are kept."""
    value = cfg.get(key)
    return default if value is None else value


def require(cfg: Mapping[str, Any], *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required setting(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def n_values(cfg: Mapping[str, Any]) -> list[int]:
    if cfg.get("values") is not None:
        vals = [int(round(float(v))) for v in cfg["values"]]
    elif cfg.get("logspace") is not None:
        ls = cfg["logspace"]
        if isinstance(ls, Mapping):
            start, stop, num = ls["start"], ls["stop"], ls["num"]
        else:
            start, stop, num = ls
        vals = np.unique(np.round(np.logspace(float(start), float(stop), int(num)))).astype(int).tolist()
    elif cfg.get("n") is not None:
        vals = [int(cfg["n"])]
    else:
        raise UsageError("give --n, --values or --logspace")
    return sorted(set(vals))


# -- single problems ----------------------------------------------------------

def _problem(cfg: Mapping[str, Any], prior: Prior, n: int) -> AssessmentProblem:
    return AssessmentProblem(float(cfg["b"]), n, prior,
                             float(setting(cfg, "phi1", 0.0)), float(setting(cfg, "phi2", 0.0)))


def assess_row(cfg: Mapping[str, Any], prior: Prior, n: int) -> dict[str, Any]:
    res = conservative_confidence(_problem(cfg, prior, n), eps=float(setting(cfg, "eps", DEFAULT_EPS)))
    return res.to_row()


def _sweep_task(task) -> dict[str, Any]:
    cfg, prior, n, phi1, phi2 = task
    local = dict(cfg, phi1=phi1, phi2=phi2)
    base = {"b": float(cfg["b"]), "n": n, "phi1": phi1, "phi2": phi2, "prior": prior.descriptor}
    try:
        return assess_row(local, prior, n)
    except PK4Violated as exc:
        return dict(base, status=f"skipped: {exc}")
    except (NonConvergence, DomainError, ArithmeticError) as exc:
        return dict(base, status=f"failed: {type(exc).__name__}: {exc}")


# -- subcommands ---------------------------------------------------------------

def cmd_assess(args) -> int:
    cfg = merged(args)
    require(cfg, "prior", "b", "n")
    prior = as_prior(cfg["prior"])
    n = int(cfg["n"])
    if cfg.get("iid_only"):
        row = {"b": float(cfg["b"]), "n": n, "prior": prior.descriptor,
               "iid": iid_posterior(prior, float(cfg["b"]), n), "status": "ok"}
        write_csv([row], IID_FIELDS, cfg.get("out"))
        return EXIT_OK
    if n < 2:
        raise UsageError(f"n={n} is below 2; the conservative bound needs n >= 2 (use --iid-only)")
    write_csv([assess_row(cfg, prior, n)], ROW_FIELDS, cfg.get("out"))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = merged(args)
    require(cfg, "b", "axis")
    axis = cfg["axis"]
    priors = [as_prior(p) for p in (cfg.get("priors") or [cfg.get("prior")]) if p is not None]
    if not priors:
        raise UsageError("give --prior (or priors in the config)")
    phi1, phi2 = float(setting(cfg, "phi1", 0.0)), float(setting(cfg, "phi2", 0.0))
    tasks = []
    if axis == "n":
        for prior in priors:
            tasks += [(cfg, prior, n, phi1, phi2) for n in n_values(cfg)]
    elif axis in ("phi1", "phi2"):
        require(cfg, "n", "values")
        for prior in priors:
            for v in sorted(float(x) for x in cfg["values"]):
                pair = (v, phi2) if axis == "phi1" else (phi1, v)
                tasks.append((cfg, prior, int(cfg["n"])) + pair)
    elif axis == "prior":
        require(cfg, "n")
        tasks = [(cfg, prior, int(cfg["n"]), phi1, phi2) for prior in priors]
    else:
        raise UsageError(f"unknown axis {axis!r}; choose n, phi1, phi2 or prior")
    cfg_plain = {k: v for k, v in cfg.items() if k in ("b", "eps")}
    tasks = [(cfg_plain,) + t[1:] for t in tasks]
    workers = int(setting(cfg, "workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    write_csv(rows, ROW_FIELDS, cfg.get("out"))
    bad = [r for r in rows if r["status"] != "ok"]
    for r in bad:
        log.warning("n=%s phi1=%s phi2=%s %s: %s", r["n"], r["phi1"], r["phi2"], r["prior"], r["status"])
    return EXIT_OK


def cmd_cutpoints(args) -> int:
    cfg = merged(args)
    require(cfg, "prior", "b")
    prior = as_prior(cfg["prior"])
    b, eps = float(cfg["b"]), float(setting(cfg, "eps", DEFAULT_EPS))
    phi1, phi2 = float(setting(cfg, "phi1", 0.0)), float(setting(cfg, "phi2", 0.0))
    rows = []
    for n in n_values(cfg):
        cp = solve_cutpoints(prior, n, b, phi1, phi2, eps)
        g = GFunctions(n)
        rows.append({"n": n, "case_id": cp.case_id,
                     "c1_low": cp.c1_low, "c2_low": cp.c2_low,
                     "c1_high": cp.c1_high, "c2_high": cp.c2_high,
                     "x_l": g.argmax_g_lower, "x_u": g.argmax_g_upper,
                     "mass_residual_low": cp.mass_residual_low,
                     "mass_residual_high": cp.mass_residual_high,
                     "g_residual_low": cp.g_residual_low,
                     "g_residual_high": cp.g_residual_high})
    write_csv(rows, CUTPOINT_FIELDS, cfg.get("out"))
    return EXIT_OK


def cmd_gdump(args) -> int:
    cfg = merged(args)
    require(cfg, "n")
    g = GFunctions(int(cfg["n"]))
    points = int(setting(cfg, "points", 2001))
    # Log-spaced in x so the peaks near 2/n and log(n)/n are resolved; the
    # maximisers themselves are included as exact rows.
    x = np.logspace(-12, 0, points)
    x = np.unique(np.concatenate([[0.0], x, [g.argmax_g_lower, g.argmax_g_upper]]))
    rows = []
    for xi in x:
        rows.append({"x": float(xi),
                     "g_lower": g.g_lower(xi) if xi <= 0.5 else None,
                     "g_upper": g.g_upper(xi),
                     "is_argmax_lower": xi == g.argmax_g_lower,
                     "is_argmax_upper": xi == g.argmax_g_upper})
    write_csv(rows, ("x", "g_lower", "g_upper", "is_argmax_lower", "is_argmax_upper"), cfg.get("out"))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = merged(args)
    require(cfg, "x", "lam", "n")
    p = KlotzParams(float(cfg["x"]), float(cfg["lam"]))
    n, seed = int(cfg["n"]), int(setting(cfg, "seed", 0))
    runs = int(setting(cfg, "runs", 1))
    if runs == 1:
        chain = simulate_chain(p, n, seed)
        text = chain.to_line() + "\n"
        if cfg.get("out"):
            Path(cfg["out"]).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    from .oracles import mc_likelihood
    est, se = mc_likelihood(p, n, runs, seed)
    exact = likelihood_ff(p.x, p.lam, n)
    write_csv([{"x": p.x, "lam": p.lam, "n": n, "runs": runs, "seed": seed,
                "estimate": est, "std_error": se, "exact": exact,
                "z": (est - exact) / se if se > 0 else 0.0}],
              ("x", "lam", "n", "runs", "seed", "estimate", "std_error", "exact", "z"),
              cfg.get("out"))
    return EXIT_OK


def oracle_suite(seed: int = 2024, strips: int = 400) -> list[dict[str, Any]]:
    """Small-scale cross-checks of the analytic pipeline against brute force."""
    from .oracles import GridSpec, beta_conjugate_posterior, grid_infimum, mc_likelihood

    rows = []

    def record(name, measured, reference, gap, tol):
        rows.append({"check": name, "measured": measured, "reference": reference,
                     "gap": gap, "tolerance": tol, "passed": bool(gap <= tol)})

    for alpha, beta in ((2, 20000), (1, 10000), (0.1, 1000)):
        prior = BetaPrior(alpha, beta)
        for n in (0, 1, 1000, 100000):
            q = iid_posterior(prior, 1e-4, n)
            ref = beta_conjugate_posterior(alpha, beta, 1e-4, n)
            record(f"conjugate {prior.descriptor} n={n}", q, ref, abs(q - ref) / ref, 1e-8)

    prior = BetaPrior(2, 5)
    analytic = conservative_confidence(AssessmentProblem(0.2, 20, prior, 0.1, 0.1)).conservative_confidence
    grid = grid_infimum(prior, 0.2, 20, 0.1, 0.1, GridSpec(strips)).confidence
    record(f"grid {strips} strips beta(2,5) n=20", analytic, grid, abs(analytic - grid) / grid, 0.02)

    for (x, lam, n) in ((0.3, 0.8, 5), (0.2, 0.2, 3), (0.4, 1.0, 7)):
        est, se = mc_likelihood(KlotzParams(x, lam), n, 10**6, seed)
        exact = likelihood_ff(x, lam, n)
        record(f"monte carlo x={x} lam={lam} n={n}", est, exact, abs(est - exact), 3 * se)
    return rows


def cmd_oracle_check(args) -> int:
    cfg = merged(args)
    rows = oracle_suite(seed=int(setting(cfg, "seed", 2024)), strips=int(setting(cfg, "strips", 400)))
    write_csv(rows, ("check", "measured", "reference", "gap", "tolerance", "passed"), cfg.get("out"))
    failed = [r["check"] for r in rows if not r["passed"]]
    if failed:
        log.error("oracle checks failed: %s", "; ".join(failed))
        return EXIT_NUMERIC
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="klotzcbi", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, problem=True):
        p.add_argument("--config", help="YAML or JSON settings file")
        p.add_argument("--out", help="write CSV here instead of standard output")
        if problem:
            p.add_argument("--prior", help="prior as beta:ALPHA,BETA")
            p.add_argument("--b", type=float, help="pfd bound, 0 < b < 1/2")
            p.add_argument("--phi1", type=float, help="doubt mass on negative dependence")
            p.add_argument("--phi2", type=float, help="doubt mass on positive dependence")
            p.add_argument("--eps", type=float, help=f"cut-point mass tolerance (default {DEFAULT_EPS})")

    p = sub.add_parser("assess", help="one conservative assessment")
    common(p)
    p.add_argument("--n", type=int, help="failure-free demands")
    p.add_argument("--iid-only", action="store_true", default=None,
                   help="only the i.i.d. posterior (allows n < 2)")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("sweep", help="assessments along one axis")
    common(p)
    p.add_argument("--axis", choices=("n", "phi1", "phi2", "prior"))
    p.add_argument("--n", type=int, help="fixed n for phi and prior sweeps")
    p.add_argument("--values", type=float, nargs="+", help="axis values")
    p.add_argument("--logspace", type=float, nargs=3, metavar=("START", "STOP", "NUM"),
                   help="n = 10**linspace(START, STOP, NUM), rounded")
    p.add_argument("--priors", nargs="+", help="several priors, beta:ALPHA,BETA each")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cutpoints", help="cut-points over a grid of n")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--logspace", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    p.set_defaults(func=cmd_cutpoints)

    p = sub.add_parser("gdump", help="tabulate g_lower and g_upper")
    common(p, problem=False)
    p.add_argument("--n", type=int)
    p.add_argument("--points", type=int, help="grid size (default 2001)")
    p.set_defaults(func=cmd_gdump)

    p = sub.add_parser("simulate", help="simulate Klotz chains")
    common(p, problem=False)
    p.add_argument("--x", type=float, help="pfd")
    p.add_argument("--lam", type=float, help="P(failure | previous failure)")
    p.add_argument("--n", type=int, help="chain length")
    p.add_argument("--runs", type=int, help="with runs > 1, estimate the failure-free probability")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle-check", help="run the brute-force oracle suite")
    common(p, problem=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--strips", type=int, help="grid oracle strips (default 400)")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    del args.verbose
    try:
        return args.func(args)
    except PK4Violated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PK4
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
