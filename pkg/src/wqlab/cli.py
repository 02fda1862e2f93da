"""Command line interface: run experiments described in a JSON file.

A config looks like::

    {
      "master_seed": 20240601,
      "measures": {"cube": {"type": "UniformBox", "lower": [0, 0, 0], "sides": [1, 1, 1]}},
      "experiments": [
        {"id": "cube-rate", "measure": "cube", "p": 1, "norm": "LInf",
         "n_values": [64, 128, 256], "replications": 50,
         "solver": {"kind": "semidiscrete", "grid_level": 5}}
      ]
    }

An experiment may list the subcommands it belongs to under ``"commands"``;
otherwise every subcommand runs it. Each subcommand reads the fields it needs
from every selected experiment and
writes ``<experiment_id>.<subcommand>.csv`` into the output directory, plus a
``<subcommand>.manifest.json`` that can itself be passed back as ``--config``.

Exit status: 0 on success (bound reports may contain UNSATISFIED rows),
2 on configuration errors, 3 when a solver size cap is exceeded, 1 for other
errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bounds import check_report, hr_integral
from .dyadic import dyadic_bound
from .errors import CapacityError, ConfigError, WqlabError
from .measures import DiscreteMeasure, ModelMeasure, Norm, measure_from_dict
from .ot_exact import rho_exact
from .quantize import (ExperimentSpec, SolverSpec, kappa_unif_trace, optimal_quantizer,
                       rate_fit, run_replications, summarize, two_point_exact,
                       write_replications_csv, write_summary_csv)
from .rng import derive_seed, make_rng

SUBCOMMANDS = ("exact", "simulate", "rate", "kappa", "pierce-check", "cube-check",
               "hr-check", "dyadic", "quantize-opt")


@dataclass
class RunConfig:
    raw: dict
    master_seed: int
    measures: dict
    experiments: list
    out_dir: Path
    workers: int
    hash: str = ""
    artifacts: list = field(default_factory=list)


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _get(obj: dict, key: str, path: str, kind=None, default=...):
    if key not in obj:
        if default is ...:
            _fail(f"{path}.{key}", "missing required field")
        return default
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        _fail(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def load_config(path: str | os.PathLike) -> tuple[dict, list | None]:
    """Read a config or manifest file.

    Manifests carry the config under ``"config"`` and the experiment ids they
    ran under ``"experiments"``; the ids are returned as the default selection.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    selection = None
    if "manifest_version" in data:
        selection = data.get("experiments")
        data = data.get("config")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: manifest has no embedded config")
    return data, selection


def _config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()


def build_run_config(raw: dict, out_dir, workers: int | None, seed: int | None,
                     only: list[str] | None) -> RunConfig:
    raw = json.loads(json.dumps(raw))  # private copy
    if seed is not None:
        raw["master_seed"] = int(seed)
    if "master_seed" not in raw:
        _fail("master_seed", "missing required field (the master seed is mandatory)")
    master = raw["master_seed"]
    if isinstance(master, bool) or not isinstance(master, int) or not 0 <= master < 2**64:
        _fail("master_seed", "must be an integer in [0, 2^64)")
    measures = {}
    for name, spec in _get(raw, "measures", "config", dict, {}).items():
        try:
            measures[name] = measure_from_dict(spec)
        except (KeyError, TypeError, ValueError) as exc:
            _fail(f"measures.{name}", f"invalid measure ({exc})")
    experiments = _get(raw, "experiments", "config", list)
    seen = set()
    for k, exp in enumerate(experiments):
        if not isinstance(exp, dict):
            _fail(f"experiments[{k}]", "must be an object")
        eid = _get(exp, "id", f"experiments[{k}]", str)
        if eid in seen:
            _fail(f"experiments[{k}].id", f"duplicate id {eid!r}")
        seen.add(eid)
        cmds = exp.get("commands", list(SUBCOMMANDS))
        if not isinstance(cmds, list) or any(c not in SUBCOMMANDS for c in cmds):
            _fail(f"experiments[{k}].commands", f"must be a list drawn from {list(SUBCOMMANDS)}")
        ref = exp.get("measure")
        if isinstance(ref, str) and ref not in measures:
            _fail(f"experiments[{k}].measure", f"unknown measure {ref!r}")
    if only:
        missing = set(only) - seen
        if missing:
            _fail("--experiment", f"unknown experiment id(s) {sorted(missing)}")
        experiments = [e for e in experiments if e["id"] in only]
    if workers is None:
        env = os.environ.get("WQLAB_WORKERS", "")
        try:
            workers = int(env) if env else 1
        except ValueError:
            _fail("WQLAB_WORKERS", f"not an integer: {env!r}")
    if workers < 1:
        _fail("--workers", "must be >= 1")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail("--out", f"cannot create output directory ({exc.strerror})")
    if not os.access(out, os.W_OK):
        _fail("--out", "output directory is not writable")
    return RunConfig(raw, master, measures, experiments, out, workers, _config_hash(raw))


def _measure(cfg: RunConfig, exp: dict, path: str) -> ModelMeasure:
    ref = _get(exp, "measure", path)
    if isinstance(ref, str):
        return cfg.measures[ref]
    try:
        return measure_from_dict(ref)
    except (KeyError, TypeError, ValueError) as exc:
        _fail(f"{path}.measure", f"invalid measure ({exc})")


def _discrete(obj, path: str) -> DiscreteMeasure:
    if not isinstance(obj, dict):
        _fail(path, "expected an object with atoms and weights")
    atoms = _get(obj, "atoms", path, list)
    weights = obj.get("weights")
    try:
        if weights is None:
            return DiscreteMeasure.empirical(atoms)
        return DiscreteMeasure(atoms, weights)
    except ValueError as exc:
        _fail(path, str(exc))


def _experiment_spec(cfg: RunConfig, exp: dict, k: int) -> ExperimentSpec:
    path = f"experiments[{exp['id']}]"
    m = _measure(cfg, exp, path)
    solver_raw = exp.get("solver", {"kind": "semidiscrete"})
    if isinstance(solver_raw, str):
        solver_raw = {"kind": solver_raw}
    try:
        solver = SolverSpec(**solver_raw)
        norm = Norm.parse(exp.get("norm", "LInf"))
        return ExperimentSpec(
            measure=m, p=float(exp.get("p", 1.0)), norm=norm,
            n_values=tuple(_get(exp, "n_values", path, list)),
            replications=int(_get(exp, "replications", path)),
            master_seed=derive_seed(cfg.master_seed, exp["id"]), solver=solver,
            measure_id=exp["measure"] if isinstance(exp.get("measure"), str) else exp["id"])
    except (TypeError, ValueError) as exc:
        _fail(path, str(exc))


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(cfg: RunConfig, name: str, header: list, rows: list) -> Path:
    path = cfg.out_dir / name
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    cfg.artifacts.append(path)
    return path


def _simulate(cfg: RunConfig, exp: dict, k: int):
    spec = _experiment_spec(cfg, exp, k)
    records = run_replications(spec, cfg.workers)
    summaries = summarize(spec, records)
    return spec, records, summaries


def cmd_exact(cfg: RunConfig, exp: dict, k: int):
    path = f"experiments[{exp['id']}]"
    mu = _discrete(_get(exp, "mu", path), f"{path}.mu")
    nu = _discrete(_get(exp, "nu", path), f"{path}.nu")
    p = float(exp.get("p", 1.0))
    norm = Norm.parse(exp.get("norm", "LInf"))
    rho, plan = rho_exact(mu, nu, p, norm, atom_cap=int(exp.get("atom_cap", 50_000)))
    print(f"{exp['id']}: rho_{p:g} = {rho!r}")
    out = cfg.out_dir / f"{exp['id']}.exact.csv"
    plan.to_csv(out)
    cfg.artifacts.append(out)


def cmd_simulate(cfg: RunConfig, exp: dict, k: int):
    spec, records, summaries = _simulate(cfg, exp, k)
    out = cfg.out_dir / f"{exp['id']}.simulate.csv"
    write_replications_csv(out, spec, records)
    summ = cfg.out_dir / f"{exp['id']}.simulate.summary.csv"
    write_summary_csv(summ, spec, summaries)
    cfg.artifacts += [out, summ]
    for s in summaries:
        print(f"{exp['id']}: N={s.N} V_hat={s.V_hat:.6g} CI=[{s.ci_lo:.6g}, {s.ci_hi:.6g}]")


def cmd_rate(cfg: RunConfig, exp: dict, k: int):
    path = f"experiments[{exp['id']}]"
    source = exp.get("source", "monte_carlo")
    p = float(exp.get("p", 1.0))
    norm = Norm.parse(exp.get("norm", "LInf"))
    if source == "two_point_exact":
        m = _measure(cfg, exp, path)
        if not hasattr(m, "w"):
            _fail(f"{path}.source", "two_point_exact needs a TwoPoint measure")
        dist = float(norm.distance(m.a, m.b))
        pts = [(N, two_point_exact(N, p, m.w, dist)) for N in _get(exp, "n_values", path, list)]
        mid = exp["measure"] if isinstance(exp.get("measure"), str) else exp["id"]
    elif source == "monte_carlo":
        spec, _records, summaries = _simulate(cfg, exp, k)
        pts = [(s.N, s.V_hat) for s in summaries]
        mid = spec.measure_id
    else:
        _fail(f"{path}.source", f"unknown source {source!r}")
    fit = rate_fit(pts)
    rows = [["point", mid, _fmt(p), norm.value, N, _fmt(v), "", "", ""] for N, v in pts]
    rows.append(["fit", mid, _fmt(p), norm.value, "", "", _fmt(fit.slope), _fmt(fit.intercept),
                 _fmt(fit.stderr_slope)])
    _write_rows(cfg, f"{exp['id']}.rate.csv",
                ["row", "measure_id", "p", "norm", "N", "V", "slope", "intercept", "stderr_slope"], rows)
    print(f"{exp['id']}: slope={fit.slope:.6g} +- {fit.stderr_slope:.3g}")


def cmd_kappa(cfg: RunConfig, exp: dict, k: int):
    path = f"experiments[{exp['id']}]"
    d = int(_get(exp, "d", path))
    solver_raw = exp.get("solver", {"kind": "semidiscrete"})
    try:
        solver = SolverSpec(**(solver_raw if isinstance(solver_raw, dict) else {"kind": solver_raw}))
        trace = kappa_unif_trace(float(exp.get("p", 1.0)), d, exp.get("norm", "LInf"),
                                 _get(exp, "n_values", path, list),
                                 int(_get(exp, "replications", path)),
                                 derive_seed(cfg.master_seed, exp["id"]), solver, cfg.workers)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, WqlabError):
            raise
        _fail(path, str(exc))
    rows = [[N, _fmt(r), _fmt(lo), _fmt(hi), _fmt(up)] for N, r, lo, hi, up in trace.rows]
    rows.append(["last3_rel_change", _fmt(trace.max_rel_change_last3), "", "", ""])
    _write_rows(cfg, f"{exp['id']}.kappa.csv",
                ["N", "rescaled", "ci_lo", "ci_hi", "rescaled_upper"], rows)
    print(f"{exp['id']}: last-3 relative change {trace.max_rel_change_last3:.4f}")


def _check(cfg: RunConfig, exp: dict, k: int, kind: str, sub: str):
    path = f"experiments[{exp['id']}]"
    spec, _records, summaries = _simulate(cfg, exp, k)
    kw = {}
    if kind == "pierce":
        kw["q"] = float(_get(exp, "q", path))
    if kind == "hr":
        if "kappa_hat" in exp:
            kw["kappa_hat"] = float(exp["kappa_hat"])
        else:
            ref_id = _get(exp, "reference", path, str)
            refs = [e for e in cfg.raw["experiments"] if e.get("id") == ref_id]
            if not refs:
                _fail(f"{path}.reference", f"unknown experiment {ref_id!r}")
            ref_spec, _r, ref_sum = _simulate(cfg, refs[0], k)
            top = max(ref_sum, key=lambda s: s.N)
            kw["kappa_hat"] = top.rescaled / hr_integral(ref_spec.measure, spec.p) ** (1.0 / spec.p)
        kw["hr_rtol"] = float(exp.get("hr_rtol", 0.15))
    report = check_report(summaries, [kind], measure=spec.measure, p=spec.p, norm=spec.norm,
                          label=exp["id"], **kw)
    out = cfg.out_dir / f"{exp['id']}.{sub}.csv"
    report.to_csv(out)
    cfg.artifacts.append(out)
    print(report.table())


def cmd_dyadic(cfg: RunConfig, exp: dict, k: int):
    path = f"experiments[{exp['id']}]"
    m = _measure(cfg, exp, path)
    if "nu" in exp:
        nu = _discrete(exp["nu"], f"{path}.nu")
    else:
        N = int(_get(exp, "N", path))
        nu = DiscreteMeasure.empirical(m.sample(N, make_rng(derive_seed(cfg.master_seed, exp["id"]))))
    L = exp.get("levels")
    res = dyadic_bound(m, nu, float(exp.get("p", 1.0)), exp.get("norm", "LInf"),
                       None if L is None else int(L))
    _write_rows(cfg, f"{exp['id']}.dyadic.csv",
                ["partial_sum", "tail_bound", "upper_bound", "levels_used"],
                [[_fmt(res.partial_sum), _fmt(res.tail_bound), _fmt(res.upper_bound), res.levels_used]])
    print(f"{exp['id']}: {res.to_json()}")


def cmd_quantize_opt(cfg: RunConfig, exp: dict, k: int):
    path = f"experiments[{exp['id']}]"
    m = _measure(cfg, exp, path)
    p = float(exp.get("p", 2.0))
    norm = Norm.parse(exp.get("norm", "L2"))
    rows = []
    for N in _get(exp, "n_values", path, list):
        res = optimal_quantizer(m, int(N), p, norm, exp.get("sample_size"),
                                int(exp.get("restarts", 3)), int(exp.get("iters", 50)),
                                derive_seed(cfg.master_seed, exp["id"], int(N)))
        rows.append([exp.get("measure") if isinstance(exp.get("measure"), str) else exp["id"],
                     _fmt(p), norm.value, int(N), _fmt(res.v_opt)])
        print(f"{exp['id']}: N={N} V_opt={res.v_opt:.6g}")
    _write_rows(cfg, f"{exp['id']}.quantize-opt.csv", ["measure_id", "p", "norm", "N", "V_opt"], rows)


COMMANDS = {
    "exact": cmd_exact,
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "kappa": cmd_kappa,
    "pierce-check": lambda c, e, k: _check(c, e, k, "pierce", "pierce-check"),
    "cube-check": lambda c, e, k: _check(c, e, k, "cube", "cube-check"),
    "hr-check": lambda c, e, k: _check(c, e, k, "hr", "hr-check"),
    "dyadic": cmd_dyadic,
    "quantize-opt": cmd_quantize_opt,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig, subcommand: str) -> Path:
    manifest = {
        "manifest_version": 1,
        "subcommand": subcommand,
        "config_sha256": cfg.hash,
        "master_seed": cfg.master_seed,
        "experiments": [e["id"] for e in cfg.experiments],
        "versions": {"wqlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "artifacts": {p.name: _sha256(p) for p in cfg.artifacts},
        "config": cfg.raw,
    }
    path = cfg.out_dir / f"{subcommand}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run(subcommand: str, config_path, out_dir=".", workers: int | None = None,
        seed: int | None = None, experiments: list[str] | None = None) -> int:
    """Run ``subcommand`` and return the process exit status."""
    try:
        raw, selection = load_config(config_path)
        cfg = build_run_config(raw, out_dir, workers, seed, experiments or selection)
        handler = COMMANDS[subcommand]
        cfg.experiments = [e for e in cfg.experiments
                           if subcommand in e.get("commands", SUBCOMMANDS)]
        for k, exp in enumerate(cfg.experiments):
            try:
                handler(cfg, exp, k)
            except WqlabError:
                raise
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"experiments[{exp['id']}]: {exc}") from exc
        write_manifest(cfg, subcommand)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except WqlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wqlab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment file or manifest")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $WQLAB_WORKERS or 1)")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--experiment", action="append", default=None,
                        help="only run this experiment id (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.workers, args.seed, args.experiment)


if __name__ == "__main__":
    sys.exit(main())
