"""Two-moons data: generation, stratified splitting, batching and CSV files.

Randomness comes from numpy's PCG64 generator (``np.random.default_rng``)
seeded with plain integers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray  # (n, 2)
    labels: np.ndarray  # (n,) of {0, 1}

    def __post_init__(self):
        if len(self.points) != len(self.labels):
            raise ValueError("points and labels differ in length")

    def __len__(self):
        return len(self.labels)

    def take(self, idx) -> "Dataset":
        return Dataset(self.points[idx], self.labels[idx])


@dataclass(frozen=True)
class SplitSpec:
    train: int = 3200
    test: int = 400
    validation: int = 400
    noise_std: float = 0.05
    batch_size: int = 100

    def __post_init__(self):
        if min(self.train, self.test, self.validation, self.batch_size) <= 0 or self.noise_std < 0:
            raise ValueError("split sizes and batch size must be positive")

    @property
    def total(self) -> int:
        return self.train + self.test + self.validation


def noiseless_moons(n: int) -> Dataset:
    if n < 2:
        raise ValueError("need at least two points")
    n0 = (n + 1) // 2
    n1 = n - n0
    t0 = np.linspace(0, np.pi, n0)
    t1 = np.linspace(0, np.pi, n1)
    pts = np.concatenate([
        np.stack([np.cos(t0), np.sin(t0)], axis=1),
        np.stack([1 - np.cos(t1), 0.5 - np.sin(t1)], axis=1),
    ])
    labels = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    return Dataset(pts, labels)


def make_moons(n: int, noise_std: float, seed: int) -> Dataset:
    """Two interleaved half circles: label 0 on the upper arc, 1 on the lower one."""
    base = noiseless_moons(n)
    rng = np.random.default_rng(seed)
    return Dataset(base.points + rng.normal(0.0, noise_std, base.points.shape), base.labels)


def split(d: Dataset, spec: SplitSpec, seed: int):
    """Stratified, seeded split into (train, test, validation)."""
    if len(d) != spec.total:
        raise ValueError(f"dataset has {len(d)} points, split needs {spec.total}")
    rng = np.random.default_rng(seed)
    sizes = (spec.train, spec.test, spec.validation)
    idx0 = np.flatnonzero(d.labels == 0)
    idx1 = np.flatnonzero(d.labels == 1)
    idx0 = idx0[rng.permutation(len(idx0))]
    idx1 = idx1[rng.permutation(len(idx1))]
    frac0 = len(idx0) / len(d)
    counts0 = [int(round(s * frac0)) for s in sizes[1:]]
    counts0 = [len(idx0) - sum(counts0)] + counts0
    counts1 = [s - c for s, c in zip(sizes, counts0)]
    if min(counts0 + counts1) < 0:
        raise ValueError(f"cannot stratify {len(d)} points into {sizes}")
    out = []
    s0 = s1 = 0
    for c0, c1 in zip(counts0, counts1):
        idx = np.concatenate([idx0[s0:s0 + c0], idx1[s1:s1 + c1]])
        s0, s1 = s0 + c0, s1 + c1
        out.append(d.take(idx[rng.permutation(len(idx))]))
    return tuple(out)


def batches(d: Dataset, batch_size: int, epoch_seed) -> list:
    """Shuffle with ``epoch_seed`` and cut into consecutive batches."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    perm = np.random.default_rng(epoch_seed).permutation(len(d))
    return [d.take(perm[i:i + batch_size]) for i in range(0, len(d), batch_size)]


def write_csv(path, d: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "label"])
        for (x, y), lab in zip(d.points, d.labels):
            w.writerow([format(x, ".17g"), format(y, ".17g"), int(lab)])


def read_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    pts = np.array([[float(r["x"]), float(r["y"])] for r in rows]).reshape(-1, 2)
    labels = np.array([int(r["label"]) for r in rows], dtype=int)
    return Dataset(pts, labels)


SPLIT_FILES = ("train.csv", "test.csv", "valid.csv")


def write_splits(directory, train: Dataset, test: Dataset, valid: Dataset) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [directory / f for f in SPLIT_FILES]
    for p, d in zip(paths, (train, test, valid)):
        write_csv(p, d)
    return paths


def read_splits(directory):
    directory = Path(directory)
    return tuple(read_csv(directory / f) for f in SPLIT_FILES)
