"""Command-line front end.

Subcommands read a JSON run configuration and write CSV/JSON artifacts plus
a ``manifest.json`` into the output directory. A relative output directory
is resolved against ``$AUTOZIGZAG_OUTPUT`` when that is set. Command-line
flags override fields of the configuration file.

Exit status: 0 on success, 2 for configuration errors (including missing
dataset files), 1 when a sampler fails.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import _backend
from .diagnostics import ess_continuous, ess_discrete, tune_tmax
from .errors import AutoZigZagError, ConfigError
from .experiments import compare_samplers, robustness, tail_starts
from .hmc import HmcConfig, iterations_for_budget, sample_hmc, write_chain_csv
from .optimize import BrentConfig
from .streams import chain_seeds
from .subsample import (SubsampleConfig, gaussian_location_model, sample_subsampled,
                        survival_model, write_bound_audit)
from .targets import (BENCHMARKS, benchmark_target, make_dugong, make_gaussian,
                      make_gaussian_mixture, make_quartic, make_student_t,
                      make_weibull_survival, read_dugong_csv, read_survival_csv,
                      simulate_survival, write_survival_csv)
from .zigzag import (ZigZagConfig, sample_auto, sample_canonical, write_skeleton_csv,
                     write_skeleton_sidecar)

OUTPUT_ENV = "AUTOZIGZAG_OUTPUT"
SAMPLERS = ("auto-zigzag", "canonical-zigzag", "subsampled-zigzag", "hmc")
VERSION = "0.1.0"


# configuration ---------------------------------------------------------

def load_config(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open() as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def _data_path(spec: dict, base: Path | None) -> Path:
    if "data" not in spec:
        raise ConfigError(f"target {spec.get('name')!r} needs a 'data' path")
    p = Path(spec["data"])
    if not p.is_absolute() and base is not None and not p.exists():
        p = base / p
    if not p.is_file():
        raise ConfigError(f"dataset not found: {spec['data']}")
    return p


def build_target(spec, base: Path | None = None):
    """Target (or factored potential, for subsampling) from its config entry."""
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError("target must be a name or an object with a 'name'")
    name = spec["name"]
    try:
        if name in BENCHMARKS:
            return benchmark_target(name)
        if name == "gaussian":
            return make_gaussian(spec["mean"], spec["cov"])
        if name == "mixture":
            return make_gaussian_mixture(spec["weights"], spec["means"], spec["covs"])
        if name == "student_t":
            return make_student_t(float(spec["dof"]), int(spec["dimension"]))
        if name == "quartic":
            return make_quartic(int(spec["dimension"]))
        if name == "dugong":
            return make_dugong(read_dugong_csv(_data_path(spec, base)))
        if name == "survival":
            return make_weibull_survival(read_survival_csv(_data_path(spec, base)))
        if name == "gaussian_location":
            y = np.loadtxt(_data_path(spec, base), delimiter=",", skiprows=1, ndmin=2)
            return gaussian_location_model(y)
    except KeyError as exc:
        raise ConfigError(f"target {name!r} missing field {exc}") from None
    raise ConfigError(f"unknown target {name!r}")


def _factored(spec, base):
    name = spec["name"] if isinstance(spec, dict) else spec
    if name == "survival":
        return survival_model(read_survival_csv(_data_path(spec, base)))
    if name == "gaussian_location":
        return build_target(spec, base)
    raise ConfigError("subsampled-zigzag needs a 'survival' or 'gaussian_location' target")


def _brent(params) -> BrentConfig:
    b = params.get("brent", {})
    return BrentConfig(b.get("tolerance"), int(b.get("max_iters", 100)), b.get("epsilon_probe"),
                       bool(b.get("shortcut", True)), bool(b.get("check_ends", False)))


def _apply_overrides(cfg: dict, args) -> dict:
    cfg = copy.deepcopy(cfg)
    for key in ("sampler", "K", "budget", "max_time", "chains", "seed", "output"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "target", None):
        cfg["target"] = {"name": args.target}
    for kv in getattr(args, "param", None) or []:
        if "=" not in kv:
            raise ConfigError(f"--param expects key=value, got {kv!r}")
        k, v = kv.split("=", 1)
        try:
            v = json.loads(v)
        except json.JSONDecodeError:
            pass
        cfg.setdefault("params", {})[k] = v
    return cfg


def _output_dir(cfg: dict) -> Path:
    out = Path(cfg.get("output", "autozigzag-out"))
    root = os.environ.get(OUTPUT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _canonical(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(obj, path: Path):
    with path.open("w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.random.SeedSequence):
        return {"entropy": str(o.entropy), "spawn_key": list(o.spawn_key)}
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_manifest(out: Path, command: str, cfg: dict, artifacts: list, counters: list):
    """Manifest without timestamps so repeated runs are byte-identical."""
    import scipy

    manifest = {
        "command": command,
        "config": cfg,
        "config_sha256": hashlib.sha256(_canonical(cfg).encode()).hexdigest(),
        "seed": cfg.get("seed", 0),
        "versions": {"autozigzag": VERSION, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version(), "kernels": _backend.BACKEND},
        "counters": counters,
        "artifacts": {a: _sha256(out / a) for a in sorted(artifacts)},
    }
    _write_json(manifest, out / "manifest.json")


def _vec(cfg, key, d):
    val = cfg.get(key)
    if val is None:
        return None
    arr = np.asarray(val, dtype=float)
    if arr.shape != (d,):
        raise ConfigError(f"{key} must have length {d}")
    return arr


def _stop_rule(cfg):
    K, budget, max_time = cfg.get("K"), cfg.get("budget"), cfg.get("max_time")
    if K is None and budget is None and max_time is None:
        raise ConfigError("set K or budget (or max_time)")
    return K, budget, max_time


# subcommands -------------------------------------------------------------

def cmd_sample(cfg: dict, base: Path | None) -> int:
    sampler = cfg.get("sampler", "auto-zigzag")
    if sampler not in SAMPLERS:
        raise ConfigError(f"unknown sampler {sampler!r}; choose from {', '.join(SAMPLERS)}")
    if "target" not in cfg:
        raise ConfigError("config needs a 'target'")
    params = cfg.get("params", {})
    K, budget, max_time = _stop_rule(cfg)
    chains = int(cfg.get("chains", 1))
    seed = cfg.get("seed", 0)
    if sampler == "subsampled-zigzag":
        model = _factored(cfg["target"], base)
        d = model.dimension
    else:
        model = build_target(cfg["target"], base)
        d = model.dimension
    x0 = _vec(cfg, "x0", d)
    v0 = _vec(cfg, "v0", d)
    out = _output_dir(cfg)
    seeds = chain_seeds(seed, chains)
    artifacts, counters, report = [], [], []
    for c in range(chains):
        stem = f"chain{c + 1}"
        if sampler == "hmc":
            L = int(params.get("L", 10))
            n_iter = K if K is not None else iterations_for_budget(budget, L)
            res = sample_hmc(model, x0, HmcConfig(L, float(params.get("step", 0.1)), int(n_iter),
                                                  seeds[c]))
            write_chain_csv(res, out / f"{stem}_chain.csv")
            artifacts.append(f"{stem}_chain.csv")
            counters.append({"chain": c + 1, "grad_evals": res.grad_evals,
                             "accept_rate": res.accept_rate})
            entry = {"chain": c + 1, "accept_rate": res.accept_rate}
            if res.chain.shape[0] >= 40:
                entry["ess"] = ess_discrete(res.chain).as_dict()
            report.append(entry)
            continue
        if sampler == "auto-zigzag":
            skel = sample_auto(model, x0, v0, ZigZagConfig(
                t_max=float(params.get("t_max", 1.0)), K=K, budget=budget, max_time=max_time,
                seed=seeds[c], brent=_brent(params), refresh=params.get("refresh")))
        elif sampler == "canonical-zigzag":
            if "global_bound" not in params or K is None:
                raise ConfigError("canonical-zigzag needs params.global_bound and K")
            skel = sample_canonical(model, x0, v0, float(params["global_bound"]), int(K),
                                    seeds[c], refresh=params.get("refresh"))
        else:
            skel = sample_subsampled(model, x0, v0, SubsampleConfig(
                h=int(params.get("h", 20)), q=int(params.get("q", 1000)),
                r=float(params.get("r", 2.0)), t_max=float(params.get("t_max", 1.0)),
                K=K, budget=budget, max_time=max_time, seed=seeds[c], brent=_brent(params)))
            write_bound_audit(skel.audit, out / f"{stem}_bounds.csv")
            artifacts.append(f"{stem}_bounds.csv")
        write_skeleton_csv(skel, out / f"{stem}_skeleton.csv")
        write_skeleton_sidecar(skel, out / f"{stem}_skeleton.json", cfg, {"chain": c + 1,
                                                                          "root_seed": seed})
        if sampler == "auto-zigzag":
            _write_horizons(skel, out / f"{stem}_horizons.csv")
            artifacts.append(f"{stem}_horizons.csv")
        artifacts += [f"{stem}_skeleton.csv", f"{stem}_skeleton.json"]
        counters.append({"chain": c + 1, **skel.counters.as_dict(),
                         "bound_violations": skel.violations})
        entry = {"chain": c + 1, "switches": skel.n_switches, "total_time": skel.total_time}
        if skel.n_switches >= 2 and skel.total_time > 0:
            entry["ess"] = ess_continuous(skel).as_dict()
        report.append(entry)
    _write_json({"sampler": sampler, "chains": report}, out / "diagnostics.json")
    artifacts.append("diagnostics.json")
    write_manifest(out, "sample", cfg, artifacts, counters)
    print(f"wrote {len(artifacts) + 1} files to {out}")
    return 0


def _write_horizons(skel, path):
    with open(path, "w") as fh:
        fh.write("horizon,start_time,bound,opt_evals,tpp_evals,shortcut,converged,outcome\n")
        for r in skel.audit:
            fh.write(f"{r.index},{r.start_time!r},{r.bound!r},{r.opt_evals},{r.tpp_evals},"
                     f"{int(r.shortcut)},{int(r.converged)},{r.outcome}\n")


def cmd_tune(cfg: dict, base: Path | None) -> int:
    if "target" not in cfg:
        raise ConfigError("config needs a 'target'")
    target = build_target(cfg["target"], base)
    cands = cfg.get("candidates")
    if not cands:
        raise ConfigError("tune needs a nonempty 'candidates' list")
    x0 = _vec(cfg, "x0", target.dimension)
    res = tune_tmax(target, cands, int(cfg.get("pilot_K", 1000)), int(cfg.get("replicates", 100)),
                    cfg.get("seed", 0), x0, _vec(cfg, "v0", target.dimension),
                    _brent(cfg.get("params", {})))
    out = _output_dir(cfg)
    with (out / "tuning.csv").open("w") as fh:
        fh.write("t_max,replicate,total_evals\n")
        for t, r, cost in res.rows:
            fh.write(f"{t!r},{r + 1},{cost!r}\n")
    _write_json({"selected": res.selected, "table": res.table()}, out / "tuning_summary.json")
    write_manifest(out, "tune", cfg, ["tuning.csv", "tuning_summary.json"], [])
    print(f"selected t_max = {res.selected}")
    return 0


def cmd_compare(cfg: dict, base: Path | None) -> int:
    if "target" not in cfg:
        raise ConfigError("config needs a 'target'")
    target = build_target(cfg["target"], base)
    params = cfg.get("params", {})
    budget = cfg.get("budget")
    if budget is None:
        raise ConfigError("compare needs a 'budget'")
    res = compare_samplers(target, int(budget), int(cfg.get("chains", 100)), cfg.get("seed", 0),
                           float(params.get("t_max", 1.0)), int(params.get("L", 10)),
                           float(params.get("step", 0.1)), _vec(cfg, "x0", target.dimension),
                           brent=_brent(params))
    out = _output_dir(cfg)
    with (out / "compare.csv").open("w") as fh:
        fh.write("sampler,chain,min_ess,grad_evals\n")
        for name, ess, ev in (("zigzag", res.zz_min_ess, res.zz_evals),
                              ("hmc", res.hmc_min_ess, res.hmc_evals)):
            for c, (e, g) in enumerate(zip(ess, ev)):
                fh.write(f"{name},{c + 1},{float(e)!r},{int(g)}\n")
    _write_json(res.as_dict(), out / "compare.json")
    write_manifest(out, "compare", cfg, ["compare.csv", "compare.json"], [])
    print(f"median min-ESS: zigzag {res.zz_median:.1f}, hmc {res.hmc_median:.1f}"
          + (f"  [{', '.join(res.flags)}]" if res.flags else ""))
    return 0


def cmd_robustness(cfg: dict, base: Path | None) -> int:
    if "target" not in cfg:
        raise ConfigError("config needs a 'target'")
    target = build_target(cfg["target"], base)
    params = cfg.get("params", {})
    starts = cfg.get("starts")
    if starts is None:
        starts = tail_starts(float(cfg.get("radius", 5.0)))
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if starts.size == 0:
        raise ConfigError("starting grid is empty")
    if starts.shape[1] != target.dimension:
        raise ConfigError(f"starts must have {target.dimension} columns")
    runs = robustness(target, starts, cfg.get("seed", 0), float(params.get("t_max", 1.0)),
                      int(params.get("L", 10)), float(params.get("step", 0.1)),
                      int(cfg.get("K_zz", 1000)), int(cfg.get("K_hmc", 1000)))
    out = _output_dir(cfg)
    d = target.dimension
    artifacts = ["robustness.csv"]
    with (out / "robustness.csv").open("w") as fh:
        fh.write(",".join(["sampler", "start"] + [f"x0_{i + 1}" for i in range(d)]
                          + [f"final_{i + 1}" for i in range(d)] + ["max_move"]) + "\n")
        for k, run in enumerate(runs):
            idx = k // 2 + 1
            fh.write(",".join([run.sampler, str(idx)] + [repr(float(a)) for a in run.start]
                              + [repr(float(a)) for a in run.final] + [repr(run.moved)]) + "\n")
            name = f"{run.sampler}_start{idx}.csv"
            np.savetxt(out / name, run.path, delimiter=",", fmt="%.17g",
                       header=",".join(f"x{i + 1}" for i in range(d)), comments="")
            artifacts.append(name)
    write_manifest(out, "robustness", cfg, artifacts, [])
    print(f"{len(runs)} runs written to {out}")
    return 0


def cmd_simulate(cfg: dict, base: Path | None) -> int:
    J = int(cfg.get("J", 1000))
    params = cfg.get("true_params", [0.2, 6.0, 0.3, 0.5])
    if len(params) != 4:
        raise ConfigError("true_params must be (log alpha, beta_0, beta_age, beta_stage)")
    data = simulate_survival(J, params, float(cfg.get("censor_time", 1000.0)), cfg.get("seed", 0))
    out = _output_dir(cfg)
    name = cfg.get("file", "survival.csv")
    write_survival_csv(data, out / name)
    write_manifest(out, "simulate-data", cfg, [name], [])
    print(f"wrote {J} rows to {out / name}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "tune": cmd_tune,
    "compare": cmd_compare,
    "robustness": cmd_robustness,
    "simulate-data": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autozigzag", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("config", nargs="?", help="JSON run configuration")
        s.add_argument("--output", "-o", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--target", help="benchmark target name")
        s.add_argument("--sampler", choices=SAMPLERS)
        s.add_argument("--K", type=int)
        s.add_argument("--budget", type=int)
        s.add_argument("--max-time", dest="max_time", type=float)
        s.add_argument("--chains", type=int)
        s.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="override a sampler parameter (JSON value)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        base = Path(args.config).resolve().parent if args.config else None
        return COMMANDS[args.command](cfg, base)
    except ConfigError as exc:
        print(f"autozigzag: error: {exc}", file=sys.stderr)
        return 2
    except (AutoZigZagError, ValueError, FloatingPointError) as exc:
        print(f"autozigzag: sampler failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
