"""LIBSVM-format ingestion, splits, synthetic data and evaluation metrics."""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ParseError, TooFewInstances
from .sparse import CsrMatrix


@dataclass(frozen=True)
class Dataset:
    """Sparse feature matrix plus +-1 labels; immutable after construction."""

    features: CsrMatrix
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", np.ascontiguousarray(self.labels, dtype=np.int64))
        if self.labels.shape != (self.features.n_rows,):
            raise DimensionMismatch("label count must equal the number of rows")
        if self.features.n_rows < 1 or self.features.n_cols < 1:
            raise ValueError("dataset must have at least one instance and one feature")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")

    @property
    def n(self) -> int:
        return self.features.n_rows

    @property
    def p(self) -> int:
        return self.features.n_cols

    def subset(self, indices) -> "Dataset":
        """New dataset restricted to the given row indices (in order)."""
        indices = np.asarray(indices, dtype=np.int64)
        offsets = [0]
        cols, vals = [], []
        for i in indices:
            c, v = self.features.row(int(i))
            cols.append(c)
            vals.append(v)
            offsets.append(offsets[-1] + c.size)
        cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
        vals = np.concatenate(vals) if vals else np.empty(0)
        mat = CsrMatrix(indices.size, self.p, offsets, cols, vals)
        return Dataset(mat, self.labels[indices])


@dataclass(frozen=True)
class SplitPlan:
    folds: int = 5
    repetitions: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


_VALID_LABELS = {-1.0: -1, 0.0: -1, 1.0: 1}


def parse_libsvm(source, n_features: int | None = None) -> Dataset:
    """Parse `<label> <idx>:<val> ...` lines into a Dataset.

    Labels -1/0/+1 are accepted, with 0 mapped to -1. Indices are 1-based and
    must be strictly increasing within a line. When n_features is given,
    features beyond it are dropped with a warning (train/test alignment);
    otherwise the dimension is the largest index seen.
    """
    if isinstance(source, str):
        lines = io.StringIO(source)
    else:
        lines = source
    labels: list[int] = []
    rows: list[tuple[np.ndarray, np.ndarray]] = []
    max_index = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            raw_label = float(tokens[0])
        except ValueError:
            raise ParseError(lineno, f"malformed label {tokens[0]!r}") from None
        if raw_label not in _VALID_LABELS:
            raise ParseError(lineno, f"label {tokens[0]} outside {{-1, 0, +1}}")
        labels.append(_VALID_LABELS[raw_label])
        cols, vals = [], []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(lineno, f"malformed feature token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(lineno, f"malformed feature token {tok!r}") from None
            if idx <= prev:
                raise ParseError(lineno, f"feature index {idx} not increasing (after {prev})")
            prev = idx
            if idx < 1:
                raise ParseError(lineno, f"feature index {idx} must be >= 1")
            cols.append(idx - 1)
            vals.append(val)
        max_index = max(max_index, prev)
        rows.append((np.asarray(cols, dtype=np.int64), np.asarray(vals)))
    if not labels:
        raise ParseError(0, "empty dataset")
    p = n_features if n_features is not None else max(max_index, 1)
    offsets = [0]
    all_cols, all_vals = [], []
    dropped = 0
    for cols, vals in rows:
        keep = cols < p
        dropped += int(np.sum(~keep))
        all_cols.append(cols[keep])
        all_vals.append(vals[keep])
        offsets.append(offsets[-1] + int(np.sum(keep)))
    if dropped:
        warnings.warn(f"dropped {dropped} features beyond dimension {p}", stacklevel=2)
    cols = np.concatenate(all_cols) if all_cols else np.empty(0, dtype=np.int64)
    vals = np.concatenate(all_vals) if all_vals else np.empty(0)
    mat = CsrMatrix(len(labels), p, offsets, cols, vals)
    return Dataset(mat, np.asarray(labels, dtype=np.int64))


def write_libsvm(d: Dataset, stream) -> None:
    """Serialize so that parse_libsvm(write_libsvm(d)) == d, values bit-exact."""
    for i in range(d.n):
        cols, vals = d.features.row(i)
        parts = ["+1" if d.labels[i] > 0 else "-1"]
        parts.extend(f"{c + 1}:{float(v)!r}" for c, v in zip(cols, vals))
        stream.write(" ".join(parts) + "\n")


def sparsity_metric(d: Dataset) -> float:
    """Stored nonzeros over n*p."""
    return d.features.nnz() / (d.n * d.p)


def kfold_split(d: Dataset, plan: SplitPlan) -> list[tuple[np.ndarray, np.ndarray]]:
    """folds x repetitions (train, test) index pairs.

    Each repetition draws an independent permutation from the seeded
    generator and cuts it into near-equal folds (remainder spread one per
    fold from fold 0 upward). Within a repetition the test folds partition
    all indices. Deterministic given plan.seed.
    """
    n = d.n
    if n < plan.folds:
        raise TooFewInstances(f"need at least {plan.folds} instances, have {n}")
    rng = np.random.default_rng(plan.seed)
    base = n // plan.folds
    remainder = n % plan.folds
    sizes = [base + (1 if k < remainder else 0) for k in range(plan.folds)]
    pairs = []
    for _ in range(plan.repetitions):
        perm = rng.permutation(n)
        bounds = np.cumsum([0] + sizes)
        parts = [perm[bounds[k] : bounds[k + 1]] for k in range(plan.folds)]
        for k in range(plan.folds):
            test = parts[k]
            train = np.concatenate([parts[j] for j in range(plan.folds) if j != k])
            pairs.append((train, test))
    return pairs


def synthetic_dataset(n: int, p: int, nnz_per_row: int, margin_noise: float,
                      seed: int) -> tuple[Dataset, np.ndarray]:
    """Sparse linearly structured dataset plus the hidden unit vector.

    Rows have nnz_per_row normal entries (variance 1/nnz_per_row, so rows have
    unit expected squared norm like L2-normalized text features) at random
    columns; labels are sign(w*.x + noise) with ties labeled -1.
    margin_noise = 0 gives a dataset perfectly separated by the returned w*.
    """
    if nnz_per_row > p:
        raise ValueError("nnz_per_row cannot exceed p")
    rng = np.random.default_rng(seed)
    w_star = rng.standard_normal(p)
    w_star /= np.linalg.norm(w_star)
    offsets = np.arange(n + 1, dtype=np.int64) * nnz_per_row
    cols = np.empty(n * nnz_per_row, dtype=np.int64)
    for i in range(n):
        cols[i * nnz_per_row : (i + 1) * nnz_per_row] = np.sort(
            rng.choice(p, size=nnz_per_row, replace=False)
        )
    vals = rng.standard_normal(n * nnz_per_row) / np.sqrt(nnz_per_row)
    mat = CsrMatrix(n, p, offsets, cols, vals)
    scores = mat.matvec(w_star)
    if margin_noise > 0.0:
        scores = scores + margin_noise * rng.standard_normal(n)
    labels = np.where(scores > 0.0, 1, -1)
    return Dataset(mat, labels), w_star


def accuracy(w, d: Dataset) -> float:
    """Fraction of instances with sign(w.x) matching the label; ties predict -1."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (d.p,):
        raise DimensionMismatch(f"expected weight vector of length {d.p}, got {w.shape}")
    pred = np.where(d.features.matvec(w) > 0.0, 1, -1)
    return float(np.mean(pred == d.labels))
