"""Synthetic datasets with tunable label leakage, splits, and CSV I/O.

Each row carries a feature vector plus three categorical labels: the task
label, a sensitive group label, and a private attribute. The synthetic
generator plants an independently tunable Gaussian signal block per label so
leakage into the features can be dialed up or down attribute by attribute.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .learncore import Matrix


@dataclass
class LabeledDataset:
    """Feature matrix plus task (y), sensitive (y_a), and private (y_p) labels."""

    x: Matrix
    y: np.ndarray
    y_a: np.ndarray
    y_p: np.ndarray
    k_y: int
    k_a: int
    k_p: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.y_a = np.asarray(self.y_a, dtype=np.int64)
        self.y_p = np.asarray(self.y_p, dtype=np.int64)
        n = self.x.shape[0]
        for name, labels, k in (("y", self.y, self.k_y), ("y_a", self.y_a, self.k_a),
                                ("y_p", self.y_p, self.k_p)):
            if labels.shape != (n,):
                raise ValueError(f"{name} has length {labels.shape}, expected ({n},)")
            if k < 2:
                raise ValueError(f"class count for {name} must be >= 2, got {k}")
            if labels.size and (labels.min() < 0 or labels.max() >= k):
                raise ValueError(f"{name} contains an index outside [0, {k})")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.x[idx], self.y[idx], self.y_a[idx], self.y_p[idx],
                              self.k_y, self.k_a, self.k_p)


@dataclass
class SyntheticSpec:
    """Parameters for the block-Gaussian generator.

    Features are four concatenated blocks: one signaling the task label with
    separation mu_y, one signaling the sensitive label (mu_a), one signaling
    the private label (mu_p), and pure noise. Within a block of width d for a
    K-class label, dimension j carries the mean bump for class j mod K.
    ``joint`` is a k_y x k_a x k_p probability table for the label triple.
    """

    n: int
    d_y: int = 4
    d_a: int = 4
    d_p: int = 4
    d_noise: int = 8
    k_y: int = 2
    k_a: int = 2
    k_p: int = 2
    mu_y: float = 3.0
    mu_a: float = 2.0
    mu_p: float = 2.0
    joint: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.joint is None:
            self.joint = np.full((self.k_y, self.k_a, self.k_p),
                                 1.0 / (self.k_y * self.k_a * self.k_p))
        self.joint = np.asarray(self.joint, dtype=np.float64)

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        dims = (self.d_y, self.d_a, self.d_p, self.d_noise)
        if any(d < 0 for d in dims) or sum(dims) < 1:
            raise ValueError(f"block dims must be >= 0 with total >= 1, got {dims}")
        if min(self.k_y, self.k_a, self.k_p) < 2:
            raise ValueError("all class counts must be >= 2")
        if min(self.mu_y, self.mu_a, self.mu_p) < 0:
            raise ValueError("separations must be >= 0")
        _check_joint(self.joint, (self.k_y, self.k_a, self.k_p))

    @property
    def dim(self) -> int:
        return self.d_y + self.d_a + self.d_p + self.d_noise


@dataclass
class SplitSpec:
    """How to carve train/val/test.

    train_mode "exacerbated" first balances the task-label marginal, then
    keeps only ``undersample_factor`` of the rows in the cell where both the
    task and sensitive labels take their highest index. test_mode
    "trio-balanced" equalizes counts over every (y, y_a, y_p) cell, dropping
    surplus rows.
    """

    val_fraction: float = 0.2
    test_fraction: float = 0.2
    train_mode: str = "as-is"  # or "exacerbated"
    undersample_factor: float = 1.0
    test_mode: str = "as-is"  # or "trio-balanced"

    def validate(self) -> None:
        if not (0.0 < self.val_fraction < 1.0 and 0.0 < self.test_fraction < 1.0):
            raise ValueError("val_fraction and test_fraction must be in (0, 1)")
        if self.val_fraction + self.test_fraction >= 1.0:
            raise ValueError("val_fraction + test_fraction must be < 1")
        if self.train_mode not in ("as-is", "exacerbated"):
            raise ValueError(f"unknown train_mode {self.train_mode!r}")
        if self.test_mode not in ("as-is", "trio-balanced"):
            raise ValueError(f"unknown test_mode {self.test_mode!r}")
        if not (0.0 < self.undersample_factor <= 1.0):
            raise ValueError("undersample_factor must be in (0, 1]")


def _check_joint(joint: np.ndarray, shape: tuple[int, int, int]) -> None:
    if joint.shape != shape:
        raise ValueError(f"joint shape {joint.shape} != class counts {shape}")
    if np.any(joint < 0):
        raise ValueError("joint probabilities must be >= 0")
    total = float(joint.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"joint probabilities sum to {total}, expected 1")


def one_hot(labels: np.ndarray, k: int) -> Matrix:
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    out = np.zeros((y.shape[0], k))
    out[np.arange(y.shape[0]), y] = 1.0
    return out


def sample_labels(joint: np.ndarray, n: int, seed) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw n i.i.d. label triples from a categorical joint table."""
    joint = np.asarray(joint, dtype=np.float64)
    if joint.ndim != 3:
        raise ValueError("joint must be a 3-D table over (y, y_a, y_p)")
    _check_joint(joint, joint.shape)
    rng = np.random.default_rng(seed)
    flat = rng.choice(joint.size, size=n, p=joint.ravel() / joint.sum())
    y, y_a, y_p = np.unravel_index(flat, joint.shape)
    return y.astype(np.int64), y_a.astype(np.int64), y_p.astype(np.int64)


def _signal_block(labels: np.ndarray, k: int, mu: float, d: int,
                  rng: np.random.Generator) -> Matrix:
    # Class c gets a mean bump of mu/sqrt(2) in dimension c, so the L2
    # distance between any two class means is exactly mu; dims beyond the
    # class count stay zero-mean.
    block = rng.standard_normal((labels.shape[0], d))
    bump = mu / np.sqrt(2.0)
    for c in range(min(k, d)):
        block[labels == c, c] += bump
    return block


def generate(spec: SyntheticSpec) -> LabeledDataset:
    """Sample a dataset from a SyntheticSpec (deterministic given spec.seed)."""
    spec.validate()
    seeds = np.random.SeedSequence(spec.seed).spawn(5)
    y, y_a, y_p = sample_labels(spec.joint, spec.n, seeds[0])
    blocks = [
        _signal_block(y, spec.k_y, spec.mu_y, spec.d_y, np.random.default_rng(seeds[1])),
        _signal_block(y_a, spec.k_a, spec.mu_a, spec.d_a, np.random.default_rng(seeds[2])),
        _signal_block(y_p, spec.k_p, spec.mu_p, spec.d_p, np.random.default_rng(seeds[3])),
        np.random.default_rng(seeds[4]).standard_normal((spec.n, spec.d_noise)),
    ]
    x = np.hstack([b for b in blocks if b.shape[1] > 0])
    return LabeledDataset(x, y, y_a, y_p, spec.k_y, spec.k_a, spec.k_p)


def make_splits(ds: LabeledDataset, split: SplitSpec, seed) \
        -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Carve disjoint (train, val, test) index sets per the split spec."""
    split.validate()
    rng = np.random.default_rng(seed)
    n = len(ds)
    test_target = int(split.test_fraction * n)
    val_target = int(split.val_fraction * n)

    if split.test_mode == "trio-balanced":
        n_cells = ds.k_y * ds.k_a * ds.k_p
        per_cell = test_target // n_cells
        if per_cell == 0:
            raise ValueError(f"test_fraction {split.test_fraction} yields "
                             f"{test_target} test rows, fewer than the "
                             f"{n_cells} trio cells")
        test_idx = []
        for cy in range(ds.k_y):
            for ca in range(ds.k_a):
                for cp in range(ds.k_p):
                    cell = np.flatnonzero((ds.y == cy) & (ds.y_a == ca) & (ds.y_p == cp))
                    if len(cell) < per_cell or len(cell) == 0:
                        raise ValueError(
                            f"cell (y={cy}, y_a={ca}, y_p={cp}) has {len(cell)} rows, "
                            f"need {max(per_cell, 1)} for a trio-balanced test split")
                    test_idx.append(rng.permutation(cell)[:per_cell])
        test_idx = np.concatenate(test_idx)
    else:
        test_idx = rng.permutation(n)[:test_target]

    remaining = np.setdiff1d(np.arange(n), test_idx)
    remaining = rng.permutation(remaining)
    val_idx = remaining[:val_target]
    train_idx = remaining[val_target:]

    if split.train_mode == "exacerbated":
        train_idx = _exacerbate(ds, train_idx, split.undersample_factor, rng)

    return (ds.subset(np.sort(train_idx)), ds.subset(np.sort(val_idx)),
            ds.subset(np.sort(test_idx)))


def _exacerbate(ds: LabeledDataset, idx: np.ndarray, factor: float,
                rng: np.random.Generator) -> np.ndarray:
    # Balance the task-label marginal by undersampling larger classes.
    per_class = [np.flatnonzero(ds.y[idx] == c) for c in range(ds.k_y)]
    counts = [len(p) for p in per_class]
    if min(counts) == 0:
        empty = counts.index(0)
        raise ValueError(f"cell (y={empty}) is empty; cannot balance the task label")
    m = min(counts)
    kept = np.concatenate([idx[rng.permutation(p)[:m]] for p in per_class])
    # Suppress the cell where task and sensitive labels both take their
    # highest index, keeping only `factor` of its rows.
    top = np.flatnonzero((ds.y[kept] == ds.k_y - 1) & (ds.y_a[kept] == ds.k_a - 1))
    keep_n = int(np.floor(factor * len(top)))
    dropped = rng.permutation(top)[keep_n:]
    return np.delete(kept, dropped)


# ---------------------------------------------------------------------------
# CSV interchange (also the ingestion path for externally computed features)


def save_csv(ds: LabeledDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(ds.dim)] + ["y", "y_a", "y_p"])
        for i in range(len(ds)):
            writer.writerow([repr(float(v)) for v in ds.x[i]]
                            + [int(ds.y[i]), int(ds.y_a[i]), int(ds.y_p[i])])


def load_csv(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 4 or header[-3:] != ["y", "y_a", "y_p"]:
            raise ValueError(f"{path}: header must end with y,y_a,y_p, got {header[-3:]}")
        d = len(header) - 3
        expected = [f"x{j}" for j in range(d)]
        if header[:d] != expected:
            raise ValueError(f"{path}: feature columns must be x0..x{d - 1}")
        xs, ys, yas, yps = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 3:
                raise ValueError(f"{path}:{lineno}: expected {d + 3} fields, got {len(row)}")
            try:
                xs.append([float(v) for v in row[:d]])
                ys.append(int(row[d]))
                yas.append(int(row[d + 1]))
                yps.append(int(row[d + 2]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not xs:
        raise ValueError(f"{path}: no data rows")
    y, y_a, y_p = np.array(ys), np.array(yas), np.array(yps)
    return LabeledDataset(np.array(xs), y, y_a, y_p,
                          k_y=max(2, int(y.max()) + 1),
                          k_a=max(2, int(y_a.max()) + 1),
                          k_p=max(2, int(y_p.max()) + 1))
