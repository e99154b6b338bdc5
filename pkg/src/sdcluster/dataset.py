"""Benchmark dataset loading, generation, and preprocessing."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MISSING_TOKENS = {"", "?", "NA", "NaN", "nan"}

# Bundled benchmark CSVs: name -> (filename, label column index).
BUNDLED_FILES = {
    "iris": ("iris.csv", 4),
    "wine": ("wine.csv", 13),
    "hepatitis": ("hepatitis.csv", 0),
}


class DatasetError(Exception):
    """Raised for unreadable files, non-numeric cells, or degenerate label sets."""


@dataclass(frozen=True)
class Dataset:
    """An (n, d) point matrix with integer labels in [0, k)."""

    name: str
    points: np.ndarray
    labels: np.ndarray
    k: int

    def __post_init__(self):
        points = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        if points.ndim != 2:
            raise DatasetError("points must be a 2-D matrix")
        if labels.shape != (points.shape[0],):
            raise DatasetError("labels length must equal the number of points")
        if not np.all(np.isfinite(points)):
            raise DatasetError("points contain NaN or Inf after preprocessing")
        present = np.unique(labels)
        if present.size != self.k or present[0] != 0 or present[-1] != self.k - 1:
            raise DatasetError("labels must cover 0..k-1 with every class nonempty")
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: int, missing_policy: str = "drop_rows",
             name: str | None = None) -> Dataset:
    """Load a numeric CSV with one categorical label column.

    A header row is assumed iff the first row has a non-numeric cell outside
    the label column. Rows containing missing values (``?``, empty, ``NA``)
    are dropped under the ``drop_rows`` policy. Labels are re-encoded to
    0..k-1 in order of first appearance.
    """
    if missing_policy != "drop_rows":
        raise ValueError(f"unsupported missing policy: {missing_policy}")
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path} is empty")

    first = rows[0]
    if label_column < 0 or label_column >= len(first):
        raise DatasetError(f"label column {label_column} out of range")
    has_header = any(
        not _is_number(cell.strip()) and cell.strip() not in MISSING_TOKENS
        for i, cell in enumerate(first) if i != label_column
    )
    if has_header:
        rows = rows[1:]

    points, labels = [], []
    for row in rows:
        cells = [cell.strip() for cell in row]
        if len(cells) != len(first):
            raise DatasetError(f"ragged row in {path}: {row!r}")
        if any(cell in MISSING_TOKENS for cell in cells):
            continue
        attrs = [cell for i, cell in enumerate(cells) if i != label_column]
        for cell in attrs:
            if not _is_number(cell):
                raise DatasetError(f"non-numeric attribute cell {cell!r} in {path}")
        points.append([float(cell) for cell in attrs])
        labels.append(cells[label_column])

    if not points:
        raise DatasetError(f"no complete rows left in {path}")
    seen: dict[str, int] = {}
    encoded = []
    for lab in labels:
        if lab not in seen:
            seen[lab] = len(seen)
        encoded.append(seen[lab])
    if len(seen) < 2:
        raise DatasetError(f"{path} has fewer than 2 distinct labels")
    return Dataset(name=name or path.stem, points=np.array(points),
                   labels=np.array(encoded), k=len(seen))


def generate_twomoon(n: int, noise: float, seed: int) -> Dataset:
    """Two interleaving half-circle arcs of radius 1 with Gaussian noise.

    The second arc is the first rotated by half a turn and shifted so the
    crescents interlock (the conventional two-moons construction). Pure
    function of (n, noise, seed).
    """
    if n < 4 or n % 2 != 0:
        raise ValueError("n must be an even count >= 4")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    half = n // 2
    theta = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(theta), np.sin(theta)])
    lower = np.column_stack([1.0 - np.cos(theta), 0.5 - np.sin(theta)])
    points = np.vstack([upper, lower])
    if noise > 0:
        rng = np.random.default_rng(seed)
        points = points + rng.normal(0.0, noise, size=points.shape)
    labels = np.repeat([0, 1], half)
    return Dataset(name="twomoon", points=points, labels=labels, k=2)


def standardize(ds: Dataset) -> Dataset:
    """Per-attribute zero mean, unit variance; constant attributes are only centered."""
    mean = ds.points.mean(axis=0)
    std = ds.points.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    points = (ds.points - mean) / scale
    return Dataset(name=ds.name, points=points, labels=ds.labels, k=ds.k)


def data_dir() -> Path:
    """Dataset root: $SDSC_DATA_DIR if set, else the bundled data directory."""
    env = os.environ.get("SDSC_DATA_DIR")
    if env:
        return Path(env)
    return Path(__file__).parent / "data"


def load_benchmark(name: str, twomoon_n: int = 100, twomoon_noise: float = 0.1,
                   twomoon_seed: int = 7) -> Dataset:
    """Resolve one of the four benchmark datasets by name."""
    name = name.lower()
    if name == "twomoon":
        return generate_twomoon(twomoon_n, twomoon_noise, twomoon_seed)
    if name not in BUNDLED_FILES:
        raise DatasetError(f"unknown benchmark dataset: {name}")
    filename, label_column = BUNDLED_FILES[name]
    return load_csv(data_dir() / filename, label_column=label_column, name=name)
