"""Command-line entry point.

Every subcommand writes a result table (CSV or JSON) and a run manifest
``<output>.manifest.json`` carrying the seed, resolved parameters, package
versions and a timestamp.  The timestamp lives only in the manifest, so result
files are byte-identical across runs with the same seed.

Exit codes: 0 success, 1 usage or configuration error, 2 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import platform
import secrets
import sys
from fractions import Fraction
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import mc_harness as mh
from .analytic_formulas import (
    check_ver_pair_bound,
    cov_normalized_clique_counts,
    covariance_correction,
    exhaustive_clique_moments,
    expected_g,
    expected_g_per_edge,
    is_independent_quad,
    mean_clique_count,
    quad_classes,
    var_clique_count,
)
from .graph_dynamics import SimParams

log = logging.getLogger("dynclique")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_GATE = 0, 1, 2
MAX_EXHAUSTIVE_N = 6

DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": dict(n=60, alpha=-0.75, p=None, lam=1.0, times=[0.0, 0.25, 0.5, 1.0], replications=100, k=1, sampler="bridge"),
    "betti-trajectory": dict(n=60, alpha=-0.75, p=None, lam=1.0, times=[0.0, 0.25, 0.5, 1.0], replications=100, k=1, sampler="bridge"),
    "ou-check": dict(n=60, alpha=-0.75, p=None, lam=1.0, times=[0.0, 0.25, 0.5, 1.0], replications=2000, k=1, sampler="bridge", level=0.01, floor=0.05, dominance=0.99),
    "verify-moments": dict(n=4, p="1/2"),
    "verify-covariance": dict(n=12, alpha=None, p=0.3, lam=1.0, k=2, dts=[0.25, 0.5, 1.0], replications=0, tol=1e-12),
    "verify-phi": dict(max_order=2, max_vertices=8, hs=[0.1, 0.5, 1.0], ps=[0.3, 0.7], lam=1.0, tol=1e-10),
    "verify-ver-pair": dict(i=1, j=1, k=1, alphas=[-0.95, -0.75, -0.55]),
    "non-markov": dict(p=0.5, lam=1.0, t=1.0, replications=100000, min_gap=1e-3),
}
RANDOMIZED = {"simulate", "betti-trajectory", "ou-check", "verify-covariance", "non-markov"}

HELP = {
    "simulate": "Simulate the dynamic random graph and record the clique count f_k(t) and Euler characteristic chi(t).",
    "betti-trajectory": "Record f_k(t), chi(t) and the reduced Betti numbers of the clique complex along sampled trajectories.",
    "verify-moments": "Compare the closed-form mean and variance of f_j with exhaustive enumeration over all graphs on n <= 6 vertices.",
    "verify-covariance": "Evaluate the exact lag covariance of the normalised clique count and cross-check it (k=1: exp(-lambda dt)).",
    "verify-phi": "Check the closed form of E[g] for indicator-increment products against a per-edge three-time computation.",
    "verify-ver-pair": "Check the vertex/edge exponent bound ver + alpha*pair over all non-independent quads.",
    "non-markov": "Conditional probabilities that beta_1 of a 4-vertex graph becomes 1 from the all-off and all-on states.",
    "ou-check": "Test the normalised Betti process against the Ornstein-Uhlenbeck limit: lag covariance, marginal normality, homology dominance.",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dynclique", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    def common(name: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name], argument_default=S)
        sp.add_argument("--config", help="JSON file of parameters; flags override it")
        sp.add_argument("--output", help="result file (default: <subcommand>.<format>)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--seed", type=int, help="base seed; generated and recorded if omitted")
        sp.add_argument("--threads", type=int, help="worker processes, 0 = one per CPU")
        sp.add_argument("-v", "--verbose", action="count")
        return sp

    for name in ("simulate", "betti-trajectory", "ou-check"):
        sp = common(name)
        sp.add_argument("--n", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--alpha", type=float, help="sets p = n**alpha")
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--times", type=_floats)
        sp.add_argument("--replications", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--sampler", choices=("bridge", "clock"))
        if name == "ou-check":
            sp.add_argument("--level", type=float)
            sp.add_argument("--floor", type=float)
            sp.add_argument("--dominance", type=float)

    sp = common("verify-moments")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", help="edge probability, parsed exactly (e.g. 1/2 or 0.25)")

    sp = common("verify-covariance")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--dts", type=_floats)
    sp.add_argument("--replications", type=int, help="if > 0, also compare with simulation")
    sp.add_argument("--tol", type=float)

    sp = common("verify-phi")
    sp.add_argument("--max-order", dest="max_order", type=int)
    sp.add_argument("--max-vertices", dest="max_vertices", type=int)
    sp.add_argument("--hs", type=_floats)
    sp.add_argument("--ps", type=_floats)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--tol", type=float)

    sp = common("verify-ver-pair")
    sp.add_argument("--i", type=int)
    sp.add_argument("--j", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--alphas", type=_floats)

    sp = common("non-markov")
    sp.add_argument("--p", type=float)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--min-gap", dest="min_gap", type=float)
    return parser


def _layer(cfg: dict[str, Any], layer: dict[str, Any]) -> None:
    # p and alpha are alternatives: setting one in a layer clears the other
    cfg.update(layer)
    if "alpha" in layer and "p" not in layer and "p" in cfg:
        cfg["p"] = None
    elif "p" in layer and "alpha" not in layer and "alpha" in cfg:
        cfg["alpha"] = None


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = {"format": "csv", "threads": 1, "verbose": 0, "seed": None, "output": None}
    cfg.update(DEFAULTS[args.command])
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        if "lambda" in loaded:
            loaded["lam"] = loaded.pop("lambda")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        _layer(cfg, loaded)
    _layer(cfg, flags)
    if cfg["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {cfg['format']!r}")
    if cfg["output"] is None:
        cfg["output"] = f"{args.command}.{cfg['format']}"
    if args.command in RANDOMIZED and cfg["seed"] is None:
        cfg["seed"] = secrets.randbits(63)
    return cfg


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Fraction):
        return str(value)
    return value


def _cell(value) -> str:
    value = _plain(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, bool):
        return "true" if value else "false"
    return "" if value is None else str(value)


def emit_results(
    records: Sequence[dict[str, Any]], fmt: str, path: str | Path, columns: Sequence[str] | None = None
) -> None:
    """Write records as CSV (header always present) or a JSON document."""
    records = [{k: _plain(v) for k, v in r.items()} for r in records]
    columns = list(columns) if columns is not None else list(records[0]) if records else []
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in records:
            writer.writerow([_cell(r.get(c)) for c in columns])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps({"schema_version": SCHEMA_VERSION, "columns": columns, "records": records}, indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    Path(path).write_text(text)


def _versions() -> dict[str, str]:
    out = {"python": platform.python_version(), "dynclique": __version__}
    for pkg in ("numpy", "scipy", "mpmath", "sympy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "missing"
    return out


def write_manifest(command: str, cfg: dict[str, Any], status: str, path: str | Path) -> None:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": cfg.get("seed"),
        "params": {k: _plain(v) for k, v in cfg.items()},
        "status": status,
        "versions": _versions(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    Path(path).write_text(json.dumps(manifest, indent=1, default=str) + "\n")


def _sim_params(cfg: dict[str, Any]) -> SimParams:
    return SimParams(
        n=cfg["n"],
        lam=cfg["lam"],
        times=tuple(cfg["times"]),
        p=cfg.get("p"),
        alpha=cfg.get("alpha") if cfg.get("p") is None else None,
        replications=cfg["replications"],
        seed=cfg["seed"],
    )


def _trajectory_records(sample: mh.ProcessSample, with_betti: bool):
    width = sample.betti.shape[2] if with_betti else 0
    columns = ["replication", "time", "f_k", "chi"] + [f"betti_{j}" for j in range(width)]
    records = []
    f = sample.f()
    for r in range(sample.replications):
        for i, t in enumerate(sample.times):
            rec = {"replication": r, "time": t, "f_k": int(f[r, i]), "chi": int(sample.euler[r, i])}
            for j in range(width):
                rec[f"betti_{j}"] = int(sample.betti[r, i, j])
            records.append(rec)
    return records, columns, True


def cmd_simulate(cfg):
    sample = mh.run_experiment(_sim_params(cfg), ("f", "chi"), cfg["k"], cfg["threads"], cfg["sampler"])
    return _trajectory_records(sample, False)


def cmd_betti_trajectory(cfg):
    sample = mh.run_experiment(_sim_params(cfg), ("f", "chi", "beta"), cfg["k"], cfg["threads"], cfg["sampler"])
    return _trajectory_records(sample, True)


def cmd_verify_moments(cfg):
    n = cfg["n"]
    if not 2 <= n <= MAX_EXHAUSTIVE_N:
        raise UsageError(f"--n must lie in 2..{MAX_EXHAUSTIVE_N} for exhaustive enumeration")
    try:
        p = Fraction(str(cfg["p"]))
    except ValueError:
        raise UsageError(f"cannot parse p={cfg['p']!r}") from None
    if not 0 < p < 1:
        raise UsageError("p must lie in (0, 1)")
    records = []
    for j, (mean, var) in enumerate(exhaustive_clique_moments(n, p)):
        m, v = mean_clique_count(n, p, j), var_clique_count(n, p, j)
        records.append(dict(j=j, mean_formula=m, mean_exhaustive=mean, var_formula=v, var_exhaustive=var, match=m == mean and v == var))
    return records, list(records[0]), all(r["match"] for r in records)


def cmd_verify_covariance(cfg):
    n, lam, k, tol = cfg["n"], cfg["lam"], cfg["k"], cfg["tol"]
    p = cfg["p"] if cfg.get("p") is not None else n ** cfg["alpha"]
    sample = None
    if cfg["replications"] > 0:
        times = sorted({0.0, *map(float, cfg["dts"])})
        params = SimParams(n=n, lam=lam, times=tuple(times), p=p, replications=cfg["replications"], seed=cfg["seed"])
        sample = mh.normalize(mh.run_experiment(params, ("f",), k, cfg["threads"]), "f", "analytic")
    records = []
    for dt in cfg["dts"]:
        cov = cov_normalized_clique_counts(n, p, lam, k, dt)
        L = math.exp(-lam * dt)
        expansion = L * (1 + covariance_correction(n, p, lam, k, dt))
        ok = abs(cov - expansion) <= tol and (k != 1 or abs(cov - L) <= tol)
        rec = dict(dt=dt, cov_formula=cov, cov_expansion=expansion, exp_target=L, empirical=None, standard_error=None)
        if sample is not None:
            est = mh.empirical_covariance(sample, 0.0, dt)
            rec.update(empirical=est.mean, standard_error=est.standard_error)
            ok = ok and est.within(cov)
        rec["passed"] = ok
        records.append(rec)
    return records, list(records[0]), all(r["passed"] for r in records)


def cmd_verify_phi(cfg):
    records = []
    orders = range(1, cfg["max_order"] + 1)
    for i in orders:
        for j in orders:
            classes = list(quad_classes(i, j, cfg["max_vertices"]))
            for h in cfg["hs"]:
                for p in cfg["ps"]:
                    worst, nonzero = 0.0, 0
                    for _, q in classes:
                        val = expected_g(h, q, p, cfg["lam"])
                        worst = max(worst, abs(val - expected_g_per_edge(h, q.sets, p, cfg["lam"])))
                        nonzero += is_independent_quad(q) and val != 0.0
                    ok = worst <= cfg["tol"] and nonzero == 0
                    records.append(dict(i=i, j=j, h=h, p=p, classes=len(classes), max_abs_error=worst, independent_nonzero=nonzero, passed=ok))
    return records, list(records[0]), all(r["passed"] for r in records)


def cmd_verify_ver_pair(cfg):
    try:
        report = check_ver_pair_bound(cfg["i"], cfg["j"], cfg["k"], cfg["alphas"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records = []
    for a in report.alphas:
        bad = [v for v in report.violations if v[1] == a]
        records.append(dict(alpha=float(a), checked=report.checked, excluded_independent=report.excluded_independent, violations=len(bad), passed=not bad))
    return records, list(records[0]), report.ok


def cmd_non_markov(cfg):
    rep = mh.non_markov_demo(cfg["p"], cfg["lam"], cfg["t"], cfg["replications"], cfg["seed"])
    records = []
    for label, closed, exact, mc in (
        ("all_off", rep.closed_all_off, rep.exact_all_off, rep.mc_all_off),
        ("all_on", rep.closed_all_on, rep.exact_all_on, rep.mc_all_on),
    ):
        records.append(dict(
            start=label, closed_form=closed, exact=exact,
            monte_carlo=mc.mean if mc else None, standard_error=mc.standard_error if mc else None,
            gap=rep.gap,
        ))
    ok = rep.closed_match_exact and rep.mc_match and rep.gap > cfg["min_gap"]
    return records, list(records[0]), ok


def cmd_ou_check(cfg):
    params = _sim_params(cfg)
    sample = mh.run_experiment(params, ("f", "chi", "beta"), cfg["k"], cfg["threads"], cfg["sampler"])
    series = mh.normalize(sample, "beta")
    t0 = params.times[0]
    records = []
    for t in params.times[1:]:
        est = mh.empirical_covariance(series, t0, t)
        target = math.exp(-params.lam * (t - t0))
        tol = max(cfg["floor"], 3 * est.standard_error)
        records.append(dict(check="covariance", lag=t - t0, value=est.mean, standard_error=est.standard_error,
                            target=target, tolerance=tol, passed=abs(est.mean - target) <= tol))
    ks = mh.marginal_normality_test(series, t0, cfg["level"])
    records.append(dict(check="ks_normal", lag=0.0, value=ks.statistic, standard_error=None,
                        target=0.0, tolerance=ks.critical_value, passed=ks.passed))
    dom = mh.homology_dominance(sample)
    records.append(dict(check="dominance", lag=None, value=dom, standard_error=None,
                        target=1.0, tolerance=cfg["dominance"], passed=dom >= cfg["dominance"]))
    return records, list(records[0]), all(r["passed"] for r in records)


COMMANDS = {
    "simulate": cmd_simulate,
    "betti-trajectory": cmd_betti_trajectory,
    "verify-moments": cmd_verify_moments,
    "verify-covariance": cmd_verify_covariance,
    "verify-phi": cmd_verify_phi,
    "verify-ver-pair": cmd_verify_ver_pair,
    "non-markov": cmd_non_markov,
    "ou-check": cmd_ou_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"dynclique: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        cfg = resolve_config(args)
        logging.basicConfig(level=logging.WARNING - 10 * min(cfg["verbose"], 2), format="%(levelname)s %(message)s")
        out = Path(cfg["output"])
        manifest = out.with_name(out.name + ".manifest.json")
        records, columns, ok = COMMANDS[args.command](cfg)
        emit_results(records, cfg["format"], out, columns)
        write_manifest(args.command, cfg, "passed" if ok else "failed", manifest)
    except (UsageError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"dynclique: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not ok:
        log.warning("verification gate failed; see %s", out)
        return EXIT_GATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
