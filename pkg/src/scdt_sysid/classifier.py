"""Nearest-local-subspace (NLS) and single-subspace (NS) classifiers.

Both operate on flattened SCDT feature vectors.  NLS keeps one span per
training sample; at test time the k spans nearest to the query (per
class) are orthogonalized into a local basis and the class with the
smallest projection residual ||x - B B^T x||^2 wins.  NS models each
class as the single subspace spanned by all of its training vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyClass, TooFewSamples, ZeroVectorSample

RANK_TOL = 1e-10


@dataclass(frozen=True)
class TrainingSet:
    """Per-class stacks of equal-length feature vectors."""

    by_class: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.by_class:
            raise EmptyClass("training set has no classes")
        dim = None
        mats = []
        for c, mat in enumerate(self.by_class):
            mat = np.asarray(mat, dtype=float)
            if mat.ndim != 2 or mat.shape[0] == 0:
                raise EmptyClass(f"class {c} is empty")
            if dim is None:
                dim = mat.shape[1]
            elif mat.shape[1] != dim:
                raise DimensionMismatch("classes have different vector lengths")
            mats.append(mat)
        object.__setattr__(self, "by_class", tuple(mats))

    @classmethod
    def from_arrays(cls, x: np.ndarray, y: np.ndarray, n_classes: int | None = None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        n_classes = n_classes or int(np.max(y)) + 1
        return cls(tuple(x[y == c] for c in range(n_classes)))

    @property
    def n_classes(self) -> int:
        return len(self.by_class)

    @property
    def dim(self) -> int:
        return self.by_class[0].shape[1]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(mat.shape[0] for mat in self.by_class)


@dataclass(frozen=True)
class Prediction:
    label: int
    residuals: np.ndarray
    k: int


def _unit_rows(mat: np.ndarray, c: int) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0):
        raise ZeroVectorSample(f"class {c} contains a zero training vector")
    return mat / norms[:, None]


def _orthobasis(columns: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Rank-revealing orthonormal basis (columns) of span(columns)."""
    u, s, _ = np.linalg.svd(columns, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    return u[:, s > rank_tol * s[0]]


@dataclass(frozen=True)
class NlsModel:
    """Raw training vectors plus their unit directions, by class."""

    raw: tuple[np.ndarray, ...]
    units: tuple[np.ndarray, ...]
    k: int

    @property
    def dim(self) -> int:
        return self.raw[0].shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.raw)


def default_k(counts) -> int:
    return min(16, min(counts))


def train_nls(ts: TrainingSet, k: int | None = None) -> NlsModel:
    """Store normalized per-sample spans; O(total samples) work."""
    k = default_k(ts.counts) if k is None else int(k)
    if not (1 <= k <= min(ts.counts)):
        raise ValueError(f"k={k} outside [1, {min(ts.counts)}]")
    units = tuple(_unit_rows(mat, c) for c, mat in enumerate(ts.by_class))
    return NlsModel(raw=ts.by_class, units=units, k=k)


def _span_residuals(units: np.ndarray, x: np.ndarray) -> np.ndarray:
    """||x||^2 - <u_l, x>^2 for every unit row; ties resolved by caller."""
    proj = units @ x
    return np.maximum(float(x @ x) - proj**2, 0.0)


def nearest_indices(model: NlsModel, c: int, x: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k training samples of class c nearest to x (span sense)."""
    resid = _span_residuals(model.units[c], x)
    order = np.argsort(resid, kind="stable")  # ties -> training-sample index
    return order[:k]


def predict_nls(model: NlsModel, x: np.ndarray, k: int | None = None) -> Prediction:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise DimensionMismatch(f"expected vector of length {model.dim}")
    k = model.k if k is None else int(k)
    xx = float(x @ x)
    residuals = np.empty(model.n_classes)
    for c in range(model.n_classes):
        keep = nearest_indices(model, c, x, min(k, model.raw[c].shape[0]))
        basis = _orthobasis(model.raw[c][keep].T)
        coeff = basis.T @ x
        residuals[c] = max(xx - float(coeff @ coeff), 0.0)
    return Prediction(label=int(np.argmin(residuals)), residuals=residuals, k=k)


@dataclass(frozen=True)
class NsModel:
    """One orthonormal basis per class spanning all its training vectors."""

    bases: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.bases[0].shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.bases)


def train_ns(ts: TrainingSet, rank_tol: float = RANK_TOL) -> NsModel:
    return NsModel(tuple(_orthobasis(mat.T, rank_tol) for mat in ts.by_class))


def predict_ns(model: NsModel, x: np.ndarray) -> Prediction:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise DimensionMismatch(f"expected vector of length {model.dim}")
    xx = float(x @ x)
    residuals = np.empty(model.n_classes)
    for c, basis in enumerate(model.bases):
        coeff = basis.T @ x
        residuals[c] = max(xx - float(coeff @ coeff), 0.0)
    return Prediction(label=int(np.argmin(residuals)), residuals=residuals, k=0)


def predict_nls_many(model: NlsModel, xs: np.ndarray, k: int | None = None) -> np.ndarray:
    return np.array([predict_nls(model, x, k).label for x in np.asarray(xs, dtype=float)])


def predict_ns_many(model: NsModel, xs: np.ndarray) -> np.ndarray:
    return np.array([predict_ns(model, x).label for x in np.asarray(xs, dtype=float)])


def select_k(
    ts: TrainingSet,
    candidates,
    validation_fraction: float = 0.2,
    seed: int = 0,
    n_splits: int = 5,
) -> int:
    """Seeded held-out selection of k; ties break toward the smallest candidate.

    Validation accuracy is averaged over `n_splits` independent splits to
    damp single-split selection noise.
    """
    rng = np.random.default_rng(seed)
    ks = None
    totals = None
    for _ in range(max(1, int(n_splits))):
        train_parts, val_parts = [], []
        for mat in ts.by_class:
            n = mat.shape[0]
            n_val = max(1, int(round(validation_fraction * n)))
            if n - n_val < 1:
                raise TooFewSamples(
                    "need at least one training sample per class after split"
                )
            perm = rng.permutation(n)
            val_parts.append(mat[perm[:n_val]])
            train_parts.append(mat[perm[n_val:]])
        sub = TrainingSet(tuple(train_parts))
        x_val = np.concatenate(val_parts, axis=0)
        y_val = np.concatenate(
            [np.full(p.shape[0], c) for c, p in enumerate(val_parts)]
        )
        if ks is None:
            k_cap = min(sub.counts)
            ks = sorted({int(k) for k in candidates if 1 <= int(k) <= k_cap})
            if not ks:
                raise ValueError("no feasible k candidate")
            totals = np.zeros(len(ks))
        model = train_nls(sub, k=ks[0])
        for i, k in enumerate(ks):
            labels = predict_nls_many(model, x_val, k=k)
            totals[i] += float(np.mean(labels == y_val))
    return ks[int(np.argmax(totals))]  # argmax takes the first (smallest) on ties


def save_nls(model: NlsModel, base) -> None:
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "type": "nls",
        "k": model.k,
        "dim": model.dim,
        "counts": [m.shape[0] for m in model.raw],
    }
    base.with_suffix(".json").write_text(json.dumps(header, sort_keys=True))
    np.concatenate([m.reshape(-1) for m in model.raw]).astype("<f8").tofile(
        base.with_suffix(".bin")
    )


def load_nls(base) -> NlsModel:
    base = Path(base)
    header = json.loads(base.with_suffix(".json").read_text())
    if header.get("type") != "nls":
        raise ValueError(f"{base}: not an NLS model file")
    dim = int(header["dim"])
    raw = np.fromfile(base.with_suffix(".bin"), dtype="<f8")
    mats, offset = [], 0
    for count in header["counts"]:
        size = int(count) * dim
        mats.append(raw[offset : offset + size].reshape(int(count), dim))
        offset += size
    ts = TrainingSet(tuple(mats))
    return train_nls(ts, k=int(header["k"]))


def save_ns(model: NsModel, base) -> None:
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "type": "ns",
        "dim": model.dim,
        "ranks": [b.shape[1] for b in model.bases],
    }
    base.with_suffix(".json").write_text(json.dumps(header, sort_keys=True))
    np.concatenate([b.reshape(-1) for b in model.bases]).astype("<f8").tofile(
        base.with_suffix(".bin")
    )


def load_ns(base) -> NsModel:
    base = Path(base)
    header = json.loads(base.with_suffix(".json").read_text())
    if header.get("type") != "ns":
        raise ValueError(f"{base}: not an NS model file")
    dim = int(header["dim"])
    raw = np.fromfile(base.with_suffix(".bin"), dtype="<f8")
    bases, offset = [], 0
    for rank in header["ranks"]:
        size = dim * int(rank)
        bases.append(raw[offset : offset + size].reshape(dim, int(rank)))
        offset += size
    return NsModel(tuple(bases))
