"""Dataset generation and the detection / coarse-regression protocols.

A dataset is a directory holding ``traces.f64`` (all sensor traces,
row-major, one fixed-length row per sample) plus ``manifest.json`` with
everything needed for bit-exact regeneration: class specs, per-sample
seeds and drawn parameters, grid and initial-condition settings, and the
row offset of every sample.  SCDT feature vectors are computed once and
cached beside the traces.
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classifier as clf
from .signals import Signal
from .simulator import (
    Fixed,
    InitialCondition,
    MaterialParams,
    ParameterSpace,
    SimGrid,
    Uniform,
    simulate_batch,
)
from .transform import ReferenceDomain, scdt_flatten, scdt_forward

SIM_CHUNK = 64  # fixed batch size so results never depend on --jobs


# ---------------------------------------------------------------------------
# class specifications


def _dist_to_dict(d) -> dict:
    if isinstance(d, Fixed):
        return {"kind": "fixed", "value": d.value}
    return {"kind": "uniform", "lo": d.lo, "hi": d.hi}


def _dist_from_dict(d: dict):
    if d["kind"] == "fixed":
        return Fixed(float(d["value"]))
    return Uniform(float(d["lo"]), float(d["hi"]))


@dataclass(frozen=True)
class ClassSpec:
    """One class: which parameter it bins and its sampling distribution."""

    param: str  # "beta" or "M"
    dist: Fixed | Uniform

    def __post_init__(self):
        if self.param not in ("beta", "M"):
            raise ValueError("class parameter must be 'beta' or 'M'")

    @property
    def lo(self) -> float:
        return self.dist.value if isinstance(self.dist, Fixed) else self.dist.lo

    @property
    def hi(self) -> float:
        return self.dist.value if isinstance(self.dist, Fixed) else self.dist.hi

    @property
    def midpoint(self) -> float:
        return self.dist.midpoint


def _validate_specs(specs: list[ClassSpec]) -> None:
    if not specs:
        raise ValueError("need at least one class")
    if len({s.param for s in specs}) != 1:
        raise ValueError("all classes must bin the same parameter")
    for i, a in enumerate(specs):
        for b in specs[i + 1 :]:
            if a.lo <= b.hi and b.lo <= a.hi:
                raise ValueError("class parameter ranges overlap")


EXPERIMENT_KINDS = (
    "detect-beta",
    "regress-beta-3",
    "regress-beta-10",
    "detect-M",
    "regress-M-3",
)


def class_specs_for(kind: str) -> list[ClassSpec]:
    """Stock class layouts for the named experiment kinds."""
    if kind == "detect-beta":
        return [ClassSpec("beta", Fixed(0.0)), ClassSpec("beta", Uniform(0.01, 0.6))]
    if kind == "regress-beta-3":
        return [
            ClassSpec("beta", Uniform(0.01, 0.2)),
            ClassSpec("beta", Uniform(0.21, 0.4)),
            ClassSpec("beta", Uniform(0.41, 0.6)),
        ]
    if kind == "regress-beta-10":
        edges = [
            (0.01, 0.06), (0.07, 0.12), (0.13, 0.18), (0.19, 0.24), (0.25, 0.30),
            (0.31, 0.36), (0.37, 0.42), (0.43, 0.48), (0.49, 0.54), (0.55, 0.6),
        ]
        return [ClassSpec("beta", Uniform(lo, hi)) for lo, hi in edges]
    if kind == "detect-M":
        return [ClassSpec("M", Fixed(0.0)), ClassSpec("M", Uniform(0.01, 0.6))]
    if kind == "regress-M-3":
        return [
            ClassSpec("M", Uniform(0.01, 0.2)),
            ClassSpec("M", Uniform(0.21, 0.4)),
            ClassSpec("M", Uniform(0.41, 0.6)),
        ]
    raise ValueError(f"unknown experiment kind {kind!r}")


def mse_lower_bound(specs: list[ClassSpec]) -> float:
    """MSE a perfect classifier attains: mean over classes of width^2 / 12."""
    return float(np.mean([s.dist.width**2 / 12.0 for s in specs]))


def nuisance_space(param: str, vary_beta: Fixed | Uniform | None = None) -> ParameterSpace:
    """Stock nuisance distributions with the class parameter left as a slot.

    For M-binned experiments beta defaults to 0; pass `vary_beta` to draw
    it as an extra nuisance instead.
    """
    space = ParameterSpace()
    if param == "M":
        space = dataclasses.replace(space, M=Fixed(0.0), beta=vary_beta or Fixed(0.0))
    return space


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class SampleRecord:
    class_index: int
    split: str  # "train" | "test"
    index: int  # sample index within the class (train block then test block)
    params: MaterialParams
    offset: int  # row offset into traces.f64

    @property
    def seed_key(self) -> tuple[int, int]:
        return (self.class_index, self.index)


@dataclass(frozen=True)
class DatasetManifest:
    experiment_id: str
    base_seed: int
    specs: tuple[ClassSpec, ...]
    n_train: int
    n_test: int
    grid: SimGrid
    ic: InitialCondition
    x_sensor: float
    stride: int
    nuisance: ParameterSpace
    records: tuple[SampleRecord, ...]
    trace_len: int

    @property
    def param(self) -> str:
        return self.specs[0].param

    @property
    def n_classes(self) -> int:
        return len(self.specs)

    @property
    def trace_dt(self) -> float:
        return self.grid.dt * self.stride

    def rows(self, split: str) -> list[SampleRecord]:
        return [r for r in self.records if r.split == split]

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "base_seed": self.base_seed,
            "param": self.param,
            "class_specs": [_dist_to_dict(s.dist) for s in self.specs],
            "n_train": self.n_train,
            "n_test": self.n_test,
            "grid": dataclasses.asdict(self.grid),
            "ic": dataclasses.asdict(self.ic),
            "x_sensor": self.x_sensor,
            "stride": self.stride,
            "nuisance": {
                k: _dist_to_dict(getattr(self.nuisance, k))
                for k in ("rho", "E", "eta", "M", "F", "beta")
            },
            "trace_len": self.trace_len,
            "files": {"traces": "traces.f64"},
            "records": [
                {
                    "class": r.class_index,
                    "split": r.split,
                    "index": r.index,
                    "params": r.params.to_dict(),
                    "offset": r.offset,
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        param = d["param"]
        specs = tuple(ClassSpec(param, _dist_from_dict(s)) for s in d["class_specs"])
        nuisance = ParameterSpace(
            **{k: _dist_from_dict(v) for k, v in d["nuisance"].items()}
        )
        records = tuple(
            SampleRecord(
                class_index=int(r["class"]),
                split=str(r["split"]),
                index=int(r["index"]),
                params=MaterialParams.from_dict(r["params"]),
                offset=int(r["offset"]),
            )
            for r in d["records"]
        )
        return cls(
            experiment_id=str(d["experiment_id"]),
            base_seed=int(d["base_seed"]),
            specs=specs,
            n_train=int(d["n_train"]),
            n_test=int(d["n_test"]),
            grid=SimGrid(**d["grid"]),
            ic=InitialCondition(**d["ic"]),
            x_sensor=float(d["x_sensor"]),
            stride=int(d["stride"]),
            nuisance=nuisance,
            records=records,
            trace_len=int(d["trace_len"]),
        )


def sample_seed(base_seed: int, class_index: int, index: int) -> np.random.SeedSequence:
    """Per-sample seed: hash of (base_seed, class, index) via SeedSequence."""
    return np.random.SeedSequence((int(base_seed), int(class_index), int(index)))


def draw_sample_params(
    manifest_like, class_index: int, index: int
) -> MaterialParams:
    m = manifest_like
    spec = m.specs[class_index]
    space = dataclasses.replace(m.nuisance, **{spec.param: spec.dist})
    rng = np.random.default_rng(sample_seed(m.base_seed, class_index, index))
    return space.sample(rng)


def _simulate_chunk(args):
    params_dicts, seed_keys, grid_dict, ic_dict, x_sensor, stride = args
    grid = SimGrid(**grid_dict)
    ic = InitialCondition(**ic_dict)
    params = [MaterialParams.from_dict(p) for p in params_dicts]
    try:
        traces = simulate_batch(
            params, grid=grid, ic=ic, x_sensor=x_sensor, stride=stride
        )
    except Exception as e:
        raise type(e)(
            f"{e} [chunk sample seeds (class, index): {seed_keys}]"
        ) from e
    return np.stack([t.signal.samples for t in traces])


def generate_dataset(
    specs: list[ClassSpec],
    n_train: int,
    n_test: int,
    base_seed: int,
    out_dir: str | Path,
    grid: SimGrid | None = None,
    ic: InitialCondition | None = None,
    x_sensor: float = 300.0,
    stride: int = 1,
    jobs: int = 1,
    experiment_id: str = "custom",
    nuisance: ParameterSpace | None = None,
) -> DatasetManifest:
    """Simulate n_train + n_test traces per class and persist them.

    Sample i of class c is drawn with the deterministic seed
    hash(base_seed, c, i); simulation runs in fixed-size chunks so the
    output is independent of the worker count.
    """
    _validate_specs(specs)
    grid = grid or SimGrid()
    ic = ic or InitialCondition()
    nuisance = nuisance or nuisance_space(specs[0].param)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    proto = DatasetManifest(
        experiment_id=experiment_id,
        base_seed=base_seed,
        specs=tuple(specs),
        n_train=n_train,
        n_test=n_test,
        grid=grid,
        ic=ic,
        x_sensor=x_sensor,
        stride=stride,
        nuisance=nuisance,
        records=(),
        trace_len=grid.n_steps // stride + 1,
    )

    records = []
    offset = 0
    for c in range(len(specs)):
        for i in range(n_train + n_test):
            split = "train" if i < n_train else "test"
            params = draw_sample_params(proto, c, i)
            records.append(SampleRecord(c, split, i, params, offset))
            offset += 1

    chunks = [records[i : i + SIM_CHUNK] for i in range(0, len(records), SIM_CHUNK)]
    tasks = [
        (
            [r.params.to_dict() for r in chunk],
            [r.seed_key for r in chunk],
            dataclasses.asdict(grid),
            dataclasses.asdict(ic),
            x_sensor,
            stride,
        )
        for chunk in chunks
    ]
    if jobs > 1:
        with multiprocessing.Pool(jobs) as pool:
            results = pool.map(_simulate_chunk, tasks)
    else:
        results = [_simulate_chunk(t) for t in tasks]

    traces = np.concatenate(results, axis=0)
    traces.astype("<f8").tofile(out_dir / "traces.f64")

    manifest = dataclasses.replace(proto, records=tuple(records))
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=1, sort_keys=True)
    )
    return manifest


def load_manifest(dataset_dir: str | Path) -> DatasetManifest:
    dataset_dir = Path(dataset_dir)
    return DatasetManifest.from_dict(
        json.loads((dataset_dir / "manifest.json").read_text())
    )


def load_traces(dataset_dir: str | Path, manifest: DatasetManifest) -> np.ndarray:
    dataset_dir = Path(dataset_dir)
    path = dataset_dir / "traces.f64"
    expected = 8 * len(manifest.records) * manifest.trace_len
    actual = path.stat().st_size
    if actual != expected:
        raise ValueError(f"{path}: {actual} bytes, manifest implies {expected}")
    return np.memmap(
        path,
        dtype="<f8",
        mode="r",
        shape=(len(manifest.records), manifest.trace_len),
    )


# ---------------------------------------------------------------------------
# features


def compute_features(
    dataset_dir: str | Path,
    manifest: DatasetManifest | None = None,
    mass_weight: float = 1.0,
    m_ref: int | None = None,
    use_cache: bool = True,
) -> np.ndarray:
    """Flattened SCDT vectors for every sample, cached beside the dataset."""
    dataset_dir = Path(dataset_dir)
    manifest = manifest or load_manifest(dataset_dir)
    m = m_ref or manifest.trace_len
    cache = dataset_dir / f"scdt_m{m}_w{mass_weight:g}.f64"
    n_rows = len(manifest.records)
    dim = 2 * m + 2
    if use_cache and cache.exists():
        feats = np.fromfile(cache, dtype="<f8")
        if feats.size == n_rows * dim:
            return feats.reshape(n_rows, dim)
    traces = load_traces(dataset_dir, manifest)
    ref = ReferenceDomain.uniform(m)
    feats = np.empty((n_rows, dim))
    for i in range(n_rows):
        sig = Signal(np.asarray(traces[i]), t0=0.0, dt=manifest.trace_dt)
        feats[i] = scdt_flatten(scdt_forward(sig, ref), mass_weight)
    if use_cache:
        feats.astype("<f8").tofile(cache)
    return feats


def split_features(
    manifest: DatasetManifest, feats: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(X_train, y_train, X_test, y_test) in manifest record order."""
    idx_train = [i for i, r in enumerate(manifest.records) if r.split == "train"]
    idx_test = [i for i, r in enumerate(manifest.records) if r.split == "test"]
    y = np.array([r.class_index for r in manifest.records])
    return feats[idx_train], y[idx_train], feats[idx_test], y[idx_test]


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class ClassifierConfig:
    method: str = "nls"  # "nls" | "ns"
    k: int | None = None  # None -> default_k unless candidates given
    k_candidates: tuple[int, ...] | None = None
    validation_fraction: float = 0.2
    selection_seed: int = 0
    mass_weight: float = 1.0
    rank_tol: float = clf.RANK_TOL


@dataclass(frozen=True)
class Metrics:
    experiment_id: str
    method: str
    k: int
    n_train_per_class: int
    n_test: int
    accuracy: float
    confusion: np.ndarray
    mse: float | None = None
    mse_lower_bound: float | None = None

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "method": self.method,
            "k": self.k,
            "n_train_per_class": self.n_train_per_class,
            "n_test": self.n_test,
            "accuracy": self.accuracy,
            "confusion": np.asarray(self.confusion).tolist(),
            "mse": self.mse,
            "mse_lower_bound": self.mse_lower_bound,
        }


CSV_COLUMNS = (
    "experiment_id",
    "method",
    "k",
    "n_train_per_class",
    "n_test",
    "accuracy",
    "mse",
    "mse_lower_bound",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def write_metrics_csv(rows: list[Metrics], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS)]
    for m in rows:
        d = m.to_dict()
        lines.append(",".join(_fmt(d[c]) for c in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def _confusion(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(y_true, y_pred):
        out[int(t), int(p)] += 1
    return out


def _fit_predict(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_test: np.ndarray,
    n_classes: int,
    config: ClassifierConfig,
) -> tuple[np.ndarray, int]:
    ts = clf.TrainingSet.from_arrays(x_train, y_train, n_classes)
    if config.method == "ns":
        model = clf.train_ns(ts, rank_tol=config.rank_tol)
        return clf.predict_ns_many(model, x_test), 0
    if config.method != "nls":
        raise ValueError(f"unknown classifier method {config.method!r}")
    k = config.k
    if k is None and config.k_candidates:
        k = clf.select_k(
            ts,
            config.k_candidates,
            validation_fraction=config.validation_fraction,
            seed=config.selection_seed,
        )
    model = clf.train_nls(ts, k=k)
    return clf.predict_nls_many(model, x_test), model.k


def evaluate_split(
    manifest: DatasetManifest,
    feats: np.ndarray,
    config: ClassifierConfig,
    regression: bool | None = None,
) -> Metrics:
    """Train on the train split, score the test split."""
    x_train, y_train, x_test, y_test = split_features(manifest, feats)
    y_pred, k = _fit_predict(x_train, y_train, x_test, manifest.n_classes, config)
    accuracy = float(np.mean(y_pred == y_test))
    confusion = _confusion(y_test, y_pred, manifest.n_classes)
    if regression is None:
        regression = all(isinstance(s.dist, Uniform) for s in manifest.specs)
    mse = bound = None
    if regression:
        true_vals = np.array(
            [getattr(r.params, manifest.param) for r in manifest.rows("test")]
        )
        midpoints = np.array([s.midpoint for s in manifest.specs])
        mse = float(np.mean((true_vals - midpoints[y_pred]) ** 2))
        bound = mse_lower_bound(list(manifest.specs))
    return Metrics(
        experiment_id=manifest.experiment_id,
        method=config.method,
        k=k,
        n_train_per_class=manifest.n_train,
        n_test=int(y_test.size),
        accuracy=accuracy,
        confusion=confusion,
        mse=mse,
        mse_lower_bound=bound,
    )


def run_detection(
    dataset_dir: str | Path, config: ClassifierConfig | None = None
) -> Metrics:
    """Binary zero-vs-nonzero decision on the dataset's parameter."""
    config = config or ClassifierConfig()
    manifest = load_manifest(dataset_dir)
    feats = compute_features(dataset_dir, manifest, mass_weight=config.mass_weight)
    return evaluate_split(manifest, feats, config, regression=False)


def run_coarse_regression(
    dataset_dir: str | Path, config: ClassifierConfig | None = None
) -> Metrics:
    """Multi-class bin prediction scored by MSE to bin midpoints."""
    config = config or ClassifierConfig()
    manifest = load_manifest(dataset_dir)
    feats = compute_features(dataset_dir, manifest, mass_weight=config.mass_weight)
    return evaluate_split(manifest, feats, config, regression=True)


@dataclass(frozen=True)
class CurvePoint:
    size: int
    mean_accuracy: float
    std_accuracy: float
    mean_mse: float | None
    std_mse: float | None
    accuracies: tuple[float, ...]


def learning_curve(
    dataset_dir: str | Path,
    sizes,
    repeats: int = 10,
    config: ClassifierConfig | None = None,
    seed: int = 0,
) -> list[CurvePoint]:
    """Accuracy (and MSE where defined) vs training-set size, seeded repeats."""
    config = config or ClassifierConfig()
    manifest = load_manifest(dataset_dir)
    feats = compute_features(dataset_dir, manifest, mass_weight=config.mass_weight)
    x_train, y_train, x_test, y_test = split_features(manifest, feats)
    regression = all(isinstance(s.dist, Uniform) for s in manifest.specs)
    true_vals = midpoints = None
    if regression:
        true_vals = np.array(
            [getattr(r.params, manifest.param) for r in manifest.rows("test")]
        )
        midpoints = np.array([s.midpoint for s in manifest.specs])

    points = []
    for size in sizes:
        size = int(size)
        if size > manifest.n_train:
            raise ValueError(f"size {size} exceeds available {manifest.n_train}")
        accs, mses = [], []
        for rep in range(repeats):
            rng = np.random.default_rng(np.random.SeedSequence((seed, size, rep)))
            keep = []
            for c in range(manifest.n_classes):
                pool = np.where(y_train == c)[0]
                keep.append(rng.choice(pool, size=size, replace=False))
            keep = np.concatenate(keep)
            y_pred, _ = _fit_predict(
                x_train[keep], y_train[keep], x_test, manifest.n_classes, config
            )
            accs.append(float(np.mean(y_pred == y_test)))
            if regression:
                mses.append(float(np.mean((true_vals - midpoints[y_pred]) ** 2)))
        points.append(
            CurvePoint(
                size=size,
                mean_accuracy=float(np.mean(accs)),
                std_accuracy=float(np.std(accs)),
                mean_mse=float(np.mean(mses)) if mses else None,
                std_mse=float(np.std(mses)) if mses else None,
                accuracies=tuple(accs),
            )
        )
    return points


def write_curve_csv(points: list[CurvePoint], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["size,mean_accuracy,std_accuracy,mean_mse,std_mse"]
    for p in points:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (p.size, p.mean_accuracy, p.std_accuracy, p.mean_mse, p.std_mse)
            )
        )
    path.write_text("\n".join(lines) + "\n")


def run_dispersion_experiments(
    out_root: str | Path,
    n_train: int = 200,
    n_test: int = 50,
    base_seed: int = 0,
    config: ClassifierConfig | None = None,
    jobs: int = 1,
    vary_beta: Fixed | Uniform | None = None,
    grid: SimGrid | None = None,
    ic: InitialCondition | None = None,
) -> dict[str, Metrics]:
    """Detection + 3-class coarse regression for the dispersion parameter."""
    out_root = Path(out_root)
    config = config or ClassifierConfig()
    results = {}
    for kind in ("detect-M", "regress-M-3"):
        specs = class_specs_for(kind)
        dataset_dir = out_root / kind
        if not (dataset_dir / "manifest.json").exists():
            generate_dataset(
                specs,
                n_train,
                n_test,
                base_seed,
                dataset_dir,
                grid=grid,
                ic=ic,
                jobs=jobs,
                experiment_id=kind,
                nuisance=nuisance_space("M", vary_beta=vary_beta),
            )
        if kind.startswith("detect"):
            results[kind] = run_detection(dataset_dir, config)
        else:
            results[kind] = run_coarse_regression(dataset_dir, config)
    return results
