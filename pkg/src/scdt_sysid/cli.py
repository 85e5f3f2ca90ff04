"""Command-line front end: simulate, dataset, transform, train, eval, curve.

Configuration comes from an optional JSON file of flat dotted keys
(e.g. {"grid.n_points": 300, "clf.k": 4}) overridden by CLI flags.
Every run writes a JSON summary with the resolved config, its hash and a
provenance string; re-running a command from a summary's config
reproduces its metrics exactly.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from . import classifier as clf
from . import experiments as xp
from .errors import ScdtSysIdError
from .signals import load_signal, save_signal
from .simulator import InitialCondition, MaterialParams, SimGrid, simulate
from .transform import ReferenceDomain, save_scdt, scdt_forward


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise ValueError("config file must hold a JSON object of dotted keys")
    return cfg


def _resolve(args, cfg: dict, key: str, default, cast=None):
    """Precedence: CLI flag > config file > default."""
    flag = key.split(".")[-1].replace("-", "_")
    val = getattr(args, flag, None)
    if val is None:
        val = cfg.get(key, default)
    if val is not None and cast is not None:
        val = cast(val)
    return val


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _write_summary(out_dir: Path, command: str, config: dict, results: dict) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    h = _config_hash(config)
    summary = {
        "command": command,
        "config": config,
        "config_hash": h,
        "provenance": f"scdt-sysid {__version__} {h[:12]}",
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "results": results,
    }
    (out_dir / f"summary_{command}.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True)
    )
    return summary


def _grid(args, cfg) -> SimGrid:
    return SimGrid(
        n_points=_resolve(args, cfg, "grid.n_points", 600, int),
        dx=_resolve(args, cfg, "grid.dx", 1.0, float),
        dt=_resolve(args, cfg, "grid.dt", 0.15, float),
        n_steps=_resolve(args, cfg, "grid.n_steps", 3000, int),
    )


def _ic(args, cfg) -> InitialCondition:
    return InitialCondition(
        x0=_resolve(args, cfg, "ic.x0", 50.0, float),
        sigma=_resolve(args, cfg, "ic.sigma", 7.0, float),
    )


def _grid_config(grid: SimGrid, ic: InitialCondition) -> dict:
    return {
        "grid.n_points": grid.n_points,
        "grid.dx": grid.dx,
        "grid.dt": grid.dt,
        "grid.n_steps": grid.n_steps,
        "ic.x0": ic.x0,
        "ic.sigma": ic.sigma,
    }


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    grid, ic = _grid(args, cfg), _ic(args, cfg)
    params = MaterialParams(
        rho=_resolve(args, cfg, "sim.rho", 1.0, float),
        E=_resolve(args, cfg, "sim.E", 1.0, float),
        eta=_resolve(args, cfg, "sim.eta", 0.0, float),
        M=_resolve(args, cfg, "sim.M", 0.0, float),
        F=_resolve(args, cfg, "sim.F", 0.0, float),
        beta=_resolve(args, cfg, "sim.beta", 0.0, float),
    )
    x_sensor = _resolve(args, cfg, "sim.x_sensor", 300.0, float)
    stride = _resolve(args, cfg, "sim.stride", 1, int)
    out = Path(args.out or "out")

    trace = simulate(params, grid, ic, x_sensor=x_sensor, stride=stride, seed=args.seed)
    base = out / "trace"
    save_signal(
        trace.signal,
        base,
        extra={"params": params.to_dict(), "x_sensor": x_sensor, "seed": args.seed},
    )
    config = {
        **_grid_config(grid, ic),
        **{f"sim.{k}": v for k, v in params.to_dict().items()},
        "sim.x_sensor": x_sensor,
        "sim.stride": stride,
        "seed": args.seed,
    }
    results = {
        "peak_time": trace.peak_time,
        "max_velocity": trace.max_velocity,
        "trace": str(base),
    }
    _write_summary(out, "simulate", config, results)
    print(f"peak_time={trace.peak_time:g} max_velocity={trace.max_velocity:g}")
    return 0


def _parse_classes(raw) -> list:
    out = []
    for entry in raw:
        if len(entry) == 1:
            out.append(xp.Fixed(float(entry[0])))
        elif len(entry) == 2:
            out.append(xp.Uniform(float(entry[0]), float(entry[1])))
        else:
            raise ValueError("class entries are [value] or [lo, hi]")
    return out


def cmd_dataset(args) -> int:
    cfg = _load_config(args.config)
    kind = _resolve(args, cfg, "dataset.kind", "detect-beta", str)
    paper = bool(args.paper_scale or cfg.get("dataset.paper_scale", False))
    n_train = _resolve(args, cfg, "dataset.n_train", 2000 if paper else 200, int)
    n_test = _resolve(args, cfg, "dataset.n_test", 200 if paper else 50, int)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    grid, ic = _grid(args, cfg), _ic(args, cfg)
    x_sensor = _resolve(args, cfg, "sim.x_sensor", 300.0, float)
    stride = _resolve(args, cfg, "sim.stride", 1, int)
    out = Path(args.out or "out") / kind

    if kind == "custom":
        param = str(cfg["dataset.param"])
        dists = _parse_classes(cfg["dataset.classes"])
        specs = [xp.ClassSpec(param, d) for d in dists]
    else:
        specs = xp.class_specs_for(kind)
    nuisance = xp.nuisance_space(specs[0].param)

    manifest = xp.generate_dataset(
        specs,
        n_train,
        n_test,
        base_seed=seed,
        out_dir=out,
        grid=grid,
        ic=ic,
        x_sensor=x_sensor,
        stride=stride,
        jobs=args.jobs or 1,
        experiment_id=kind,
        nuisance=nuisance,
    )
    config = {
        **_grid_config(grid, ic),
        "dataset.kind": kind,
        "dataset.n_train": n_train,
        "dataset.n_test": n_test,
        "sim.x_sensor": x_sensor,
        "sim.stride": stride,
        "seed": seed,
    }
    results = {"dataset_dir": str(out), "n_records": len(manifest.records)}
    _write_summary(out, "dataset", config, results)
    print(f"dataset={out} records={len(manifest.records)}")
    return 0


def cmd_transform(args) -> int:
    cfg = _load_config(args.config)
    sig, _ = load_signal(args.input)
    m = _resolve(args, cfg, "transform.m", sig.n, int)
    weight = _resolve(args, cfg, "clf.mass_weight", 1.0, float)
    out = Path(args.out or "out")
    repr_ = scdt_forward(sig, ReferenceDomain.uniform(m))
    base = out / (Path(args.input).name + ".scdt")
    save_scdt(repr_, base)
    config = {"transform.input": str(args.input), "transform.m": m, "clf.mass_weight": weight}
    _write_summary(out, "transform", config, {"scdt": str(base)})
    print(f"scdt={base} m={m} pos_mass={repr_.pos_mass:g} neg_mass={repr_.neg_mass:g}")
    return 0


def _clf_config(args, cfg) -> xp.ClassifierConfig:
    cands = _resolve(args, cfg, "clf.k_candidates", None)
    if isinstance(cands, str):
        cands = [int(v) for v in cands.split(",") if v]
    return xp.ClassifierConfig(
        method=_resolve(args, cfg, "clf.method", "nls", str),
        k=_resolve(args, cfg, "clf.k", None, int),
        k_candidates=tuple(int(v) for v in cands) if cands else None,
        mass_weight=_resolve(args, cfg, "clf.mass_weight", 1.0, float),
        selection_seed=_resolve(args, cfg, "clf.selection_seed", 0, int),
    )


def _clf_config_dict(c: xp.ClassifierConfig, data: str, seed) -> dict:
    return {
        "data": str(data),
        "clf.method": c.method,
        "clf.k": c.k,
        "clf.k_candidates": list(c.k_candidates) if c.k_candidates else None,
        "clf.mass_weight": c.mass_weight,
        "clf.selection_seed": c.selection_seed,
        "seed": seed,
    }


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    config = _clf_config(args, cfg)
    manifest = xp.load_manifest(args.data)
    feats = xp.compute_features(args.data, manifest, mass_weight=config.mass_weight)
    x_train, y_train, _, _ = xp.split_features(manifest, feats)
    ts = clf.TrainingSet.from_arrays(x_train, y_train, manifest.n_classes)
    out = Path(args.out or "out")
    if config.method == "ns":
        model = clf.train_ns(ts)
        clf.save_ns(model, out / "model_ns")
        results = {"model": str(out / "model_ns"), "ranks": [b.shape[1] for b in model.bases]}
    else:
        k = config.k
        if k is None and config.k_candidates:
            k = clf.select_k(ts, config.k_candidates, seed=config.selection_seed)
        model = clf.train_nls(ts, k=k)
        clf.save_nls(model, out / "model_nls")
        results = {"model": str(out / "model_nls"), "k": model.k}
    _write_summary(out, "train", _clf_config_dict(config, args.data, args.seed), results)
    print(f"model={results['model']}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    config = _clf_config(args, cfg)
    manifest = xp.load_manifest(args.data)
    feats = xp.compute_features(args.data, manifest, mass_weight=config.mass_weight)
    regression = all(isinstance(s.dist, xp.Uniform) for s in manifest.specs)
    metrics = xp.evaluate_split(manifest, feats, config, regression=regression)
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    xp.write_metrics_csv([metrics], out / "metrics.csv")
    (out / "metrics.json").write_text(json.dumps(metrics.to_dict(), indent=1, sort_keys=True))
    _write_summary(out, "eval", _clf_config_dict(config, args.data, args.seed), metrics.to_dict())
    msg = f"accuracy={metrics.accuracy:g}"
    if metrics.mse is not None:
        msg += f" mse={metrics.mse:g}"
    print(msg)
    return 0


def cmd_curve(args) -> int:
    cfg = _load_config(args.config)
    config = _clf_config(args, cfg)
    sizes = _resolve(args, cfg, "curve.sizes", "25,50,100,200")
    if isinstance(sizes, str):
        sizes = [int(v) for v in sizes.split(",") if v]
    repeats = _resolve(args, cfg, "curve.repeats", 10, int)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    points = xp.learning_curve(args.data, sizes, repeats=repeats, config=config, seed=seed)
    out = Path(args.out or "out")
    xp.write_curve_csv(points, out / "curve.csv")
    summary_cfg = _clf_config_dict(config, args.data, seed)
    summary_cfg.update({"curve.sizes": list(sizes), "curve.repeats": repeats})
    _write_summary(
        out,
        "curve",
        summary_cfg,
        {"points": [[p.size, p.mean_accuracy, p.std_accuracy] for p in points]},
    )
    print(f"curve={out / 'curve.csv'} points={len(points)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scdt-sysid",
        description="PDE parameter identification from single-sensor traces",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file of flat dotted keys")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=None)
        sp.add_argument("--out", help="output directory", default=None)

    sp = sub.add_parser("simulate", help="run one simulation and store the trace")
    common(sp)
    for name in ("rho", "E", "eta", "M", "F", "beta"):
        sp.add_argument(f"--{name}", type=float, default=None)
    for name, typ in (
        ("n-points", int), ("dx", float), ("dt", float), ("n-steps", int),
        ("x0", float), ("sigma", float), ("x-sensor", float), ("stride", int),
    ):
        sp.add_argument(f"--{name}", type=typ, default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("dataset", help="generate a labeled trace dataset")
    common(sp)
    sp.add_argument("--kind", choices=list(xp.EXPERIMENT_KINDS) + ["custom"], default=None)
    sp.add_argument("--n-train", type=int, default=None)
    sp.add_argument("--n-test", type=int, default=None)
    sp.add_argument("--paper-scale", action="store_true",
                    help="use 2000 train / 200 test per class instead of 200/50")
    for name, typ in (
        ("n-points", int), ("dx", float), ("dt", float), ("n-steps", int),
        ("x0", float), ("sigma", float), ("x-sensor", float), ("stride", int),
    ):
        sp.add_argument(f"--{name}", type=typ, default=None)
    sp.set_defaults(func=cmd_dataset)

    sp = sub.add_parser("transform", help="SCDT-transform a stored trace")
    common(sp)
    sp.add_argument("--input", required=True, help="trace base path (without suffix)")
    sp.add_argument("--m", type=int, default=None, help="reference grid size")
    sp.set_defaults(func=cmd_transform)

    for name, fn, hlp in (
        ("train", cmd_train, "train a classifier on a dataset"),
        ("eval", cmd_eval, "train and evaluate on a dataset's test split"),
        ("curve", cmd_curve, "learning curve over training-set sizes"),
    ):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--data", required=True, help="dataset directory")
        sp.add_argument("--method", choices=["nls", "ns"], default=None)
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--k-candidates", default=None, help="comma list, e.g. 1,2,4,8")
        sp.add_argument("--mass-weight", type=float, default=None)
        sp.add_argument("--selection-seed", type=int, default=None)
        if name == "curve":
            sp.add_argument("--sizes", default=None, help="comma list of training sizes")
            sp.add_argument("--repeats", type=int, default=None)
        sp.set_defaults(func=fn)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScdtSysIdError, ValueError, FileNotFoundError, KeyError) as e:
        print(
            json.dumps({"error": type(e).__name__, "message": str(e)}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
