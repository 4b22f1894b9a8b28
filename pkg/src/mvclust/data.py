"""Multi-view dataset loading, normalization, batching and synthetic data.

On disk a dataset is a JSON manifest next to one headerless CSV matrix per
view (rows are samples) and an optional labels file with one non-negative
integer per line::

    {
      "name": "digits",
      "n": 2000,
      "likelihood": "bernoulli",
      "views": [{"name": "pix", "dim": 240, "path": "pix.csv"}, ...],
      "labels": "labels.txt"
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numgrad import as_tensor
from .seeding import rng_for

MANIFEST_FILE = "manifest.json"
LIKELIHOODS = ("bernoulli", "gaussian")


class LoadError(ValueError):
    """Dataset files failed validation; the message names the offender."""


@dataclass
class NormalizationRecord:
    """Per-view affine feature transform y = (x - offset) * scale.

    Bernoulli normalization stores min/range, Gaussian stores mean/std;
    constant features get scale 0 and map to exactly 0. Applying the record
    to the data it was fit on reproduces the normalized data exactly.
    """

    kind: str
    offsets: list[np.ndarray]
    scales: list[np.ndarray]

    def apply(self, matrices) -> list[np.ndarray]:
        if len(matrices) != len(self.offsets):
            raise ValueError(f"record covers {len(self.offsets)} views, got {len(matrices)}")
        out = []
        for x, off, sc in zip(matrices, self.offsets, self.scales):
            x = as_tensor(x)
            if x.shape[1] != off.shape[0]:
                raise ValueError(f"record expects {off.shape[0]} features, got {x.shape[1]}")
            out.append((x - off) * sc)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "offsets": [o.tolist() for o in self.offsets],
            "scales": [s.tolist() for s in self.scales],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationRecord":
        return cls(
            kind=str(d["kind"]),
            offsets=[as_tensor(o) for o in d["offsets"]],
            scales=[as_tensor(s) for s in d["scales"]],
        )


@dataclass
class MultiViewDataset:
    """Dense per-view matrices with optional ground-truth labels."""

    name: str
    view_names: list[str]
    matrices: list[np.ndarray]
    labels: np.ndarray | None = None
    likelihood: str | None = None
    normalization: NormalizationRecord | None = None

    def __post_init__(self):
        if not self.matrices:
            raise ValueError("dataset needs at least one view")
        n = self.matrices[0].shape[0]
        for name, mat in zip(self.view_names, self.matrices):
            if mat.ndim != 2 or mat.shape[0] != n:
                raise ValueError(f"view {name!r} must be a (n, d) matrix")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels length must match sample count")

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.matrices)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(mat.shape[1] for mat in self.matrices)


def _find_bad_cell(path: Path):
    """Locate the first unparsable cell for a precise load error."""
    with open(path) as handle:
        for row, line in enumerate(handle):
            for col, cell in enumerate(line.rstrip("\n").split(",")):
                try:
                    float(cell)
                except ValueError:
                    return row, col, cell
    return None


def _load_matrix(path: Path, n: int, dim: int, view_name: str) -> np.ndarray:
    try:
        mat = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except OSError as exc:
        raise LoadError(f"view {view_name!r}: cannot read {path}: {exc}") from exc
    except ValueError as exc:
        bad = _find_bad_cell(path)
        if bad is not None:
            row, col, cell = bad
            raise LoadError(f"view {view_name!r}: unparsable cell {cell!r} at {path} row {row} column {col}") from exc
        raise LoadError(f"view {view_name!r}: malformed CSV {path}: {exc}") from exc
    if mat.shape != (n, dim):
        raise LoadError(
            f"view {view_name!r}: {path} has shape {mat.shape}, manifest declares ({n}, {dim})"
        )
    return np.ascontiguousarray(mat)


def _load_labels(path: Path, n: int) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) != n:
        raise LoadError(f"labels file {path} has {len(lines)} entries, expected {n}")
    labels = np.empty(n, dtype=np.int64)
    for i, token in enumerate(lines):
        try:
            value = int(token)
        except ValueError:
            raise LoadError(f"labels file {path} row {i}: {token!r} is not an integer") from None
        if value < 0:
            raise LoadError(f"labels file {path} row {i}: label {value} out of range (must be >= 0)")
        labels[i] = value
    return labels


def load_dataset(manifest_path) -> MultiViewDataset:
    """Read a manifest and every matrix it references, validating shapes."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except OSError as exc:
        raise LoadError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    for key in ("name", "n", "views"):
        if key not in manifest:
            raise LoadError(f"manifest {manifest_path} is missing the {key!r} field")
    n = int(manifest["n"])
    likelihood = manifest.get("likelihood")
    if likelihood is not None and likelihood not in LIKELIHOODS:
        raise LoadError(f"manifest {manifest_path}: unknown likelihood {likelihood!r}")
    base = manifest_path.parent
    view_names, matrices = [], []
    for i, view in enumerate(manifest["views"]):
        for key in ("name", "dim", "path"):
            if key not in view:
                raise LoadError(f"manifest {manifest_path}: view {i} is missing {key!r}")
        view_names.append(str(view["name"]))
        matrices.append(_load_matrix(base / view["path"], n, int(view["dim"]), view["name"]))
    labels = None
    if manifest.get("labels"):
        labels = _load_labels(base / manifest["labels"], n)
    return MultiViewDataset(
        name=str(manifest["name"]),
        view_names=view_names,
        matrices=matrices,
        labels=labels,
        likelihood=likelihood,
    )


def normalize(dataset: MultiViewDataset, kind: str) -> MultiViewDataset:
    """Bernoulli: per-feature min-max to [0, 1]. Gaussian: per-feature
    standardization. Constant features map to 0 under either kind."""
    if kind not in LIKELIHOODS:
        raise ValueError(f"unknown normalization kind {kind!r}")
    offsets, scales = [], []
    for mat in dataset.matrices:
        if kind == "bernoulli":
            lo = mat.min(axis=0)
            span = mat.max(axis=0) - lo
            offsets.append(lo)
            scales.append(np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 0.0))
        else:
            mean = mat.mean(axis=0)
            std = mat.std(axis=0)
            offsets.append(mean)
            scales.append(np.where(std > 0, 1.0 / np.where(std > 0, std, 1.0), 0.0))
    record = NormalizationRecord(kind=kind, offsets=offsets, scales=scales)
    return MultiViewDataset(
        name=dataset.name,
        view_names=list(dataset.view_names),
        matrices=record.apply(dataset.matrices),
        labels=None if dataset.labels is None else dataset.labels.copy(),
        likelihood=dataset.likelihood,
        normalization=record,
    )


def batch_iter(data, batch_size: int, seed: int, epoch: int, stream=()) -> list[np.ndarray]:
    """Seeded permutation of the sample indices chunked into batches; the
    last batch may be short. A pure function of (seed, stream, epoch).
    ``data`` is a dataset or a plain sample count."""
    n = data if isinstance(data, int) else data.n
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = rng_for(seed, "batch", *stream, epoch).permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def synth_generate(
    n_clusters: int,
    n_views: int,
    n: int,
    latent_dim: int,
    separation: float,
    view_dims,
    seed: int,
    noise: float = 0.1,
    likelihood: str = "gaussian",
    return_latent: bool = False,
):
    """Cluster labels -> latent Gaussians -> random affine view maps + noise.

    Cluster means are random directions rescaled so the minimum pairwise
    distance equals ``separation`` (all zero when separation is 0). With
    ``return_latent`` the latent draws and means come back too, for tests.
    """
    if min(n_clusters, n_views, n, latent_dim) < 1:
        raise ValueError("n_clusters, n_views, n and latent_dim must be positive")
    view_dims = tuple(int(d) for d in view_dims)
    if len(view_dims) != n_views:
        raise ValueError(f"need {n_views} view dims, got {len(view_dims)}")
    rng = rng_for(seed, "synth")
    labels = rng.integers(0, n_clusters, size=n)
    means = rng.normal(size=(n_clusters, latent_dim))
    if n_clusters > 1:
        gaps = [np.linalg.norm(means[a] - means[b]) for a in range(n_clusters) for b in range(a + 1, n_clusters)]
        means *= separation / min(gaps)
    else:
        means[:] = 0.0
    z = means[labels] + rng.normal(size=(n, latent_dim))
    matrices = []
    for dim in view_dims:
        proj = rng.normal(size=(latent_dim, dim)) / np.sqrt(latent_dim)
        offset = rng.normal(size=dim)
        matrices.append(z @ proj + offset + noise * rng.normal(size=(n, dim)))
    dataset = MultiViewDataset(
        name="synthetic",
        view_names=[f"view{v}" for v in range(n_views)],
        matrices=matrices,
        labels=labels,
        likelihood=likelihood,
    )
    if return_latent:
        return dataset, {"z": z, "means": means}
    return dataset


def save_dataset(dataset: MultiViewDataset, directory) -> Path:
    """Write matrices, labels and manifest; values round-trip exactly."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    views = []
    for name, mat in zip(dataset.view_names, dataset.matrices):
        filename = f"{name}.csv"
        np.savetxt(directory / filename, mat, delimiter=",", fmt="%.17g")
        views.append({"name": name, "dim": int(mat.shape[1]), "path": filename})
    manifest = {"name": dataset.name, "n": int(dataset.n), "views": views}
    if dataset.likelihood is not None:
        manifest["likelihood"] = dataset.likelihood
    if dataset.labels is not None:
        (directory / "labels.txt").write_text("\n".join(str(int(v)) for v in dataset.labels) + "\n")
        manifest["labels"] = "labels.txt"
    path = directory / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path
