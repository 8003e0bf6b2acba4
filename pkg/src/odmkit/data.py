"""Sparse datasets in LIBSVM format: parsing, normalization, splits.

Feature indices are 1-based throughout, matching the on-disk format.
Labels are +1/-1; a label of 0 in an input file is read as -1.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    """Malformed LIBSVM text; the message names the offending line."""


@dataclass(frozen=True)
class SparseVector:
    """Immutable sparse feature vector with strictly increasing 1-based indices."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size:
            if idx[0] < 1:
                raise ValueError("feature indices must be >= 1")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("feature indices must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs):
        """Build from an iterable of (index, value) pairs, already sorted."""
        pairs = list(pairs)
        idx = np.array([p[0] for p in pairs], dtype=np.int64)
        val = np.array([p[1] for p in pairs], dtype=np.float64)
        return cls(idx, val)

    @property
    def max_index(self):
        return int(self.indices[-1]) if self.indices.size else 0

    @property
    def nnz(self):
        return int(self.indices.size)

    def to_dense(self, dim):
        out = np.zeros(dim)
        keep = self.indices <= dim
        out[self.indices[keep] - 1] = self.values[keep]
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.values, other.values
        )


@dataclass
class Dataset:
    """A labelled collection of sparse instances.

    ``dim`` is the largest feature index seen across all instances
    (0 for an empty dataset).  Labels are stored as +1/-1 integers.
    """

    instances: list
    labels: np.ndarray
    dim: int = field(default=None)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] != len(self.instances):
            raise ValueError("labels must be a 1-d array matching instances")
        if labels.size and not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be +1 or -1")
        self.labels = labels
        if self.dim is None:
            self.dim = max((x.max_index for x in self.instances), default=0)

    def __len__(self):
        return len(self.instances)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            len(self) == len(other)
            and self.dim == other.dim
            and np.array_equal(self.labels, other.labels)
            and all(a == b for a, b in zip(self.instances, other.instances))
        )

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset([self.instances[i] for i in idx], self.labels[idx], dim=self.dim)

    def without(self, i):
        """Copy with instance i removed; keeps the parent's dim."""
        keep = [j for j in range(len(self)) if j != i]
        return self.subset(keep)

    def to_csr(self, dim=None):
        """Instances as a scipy CSR matrix, one row per instance."""
        from scipy.sparse import csr_matrix

        if dim is None:
            dim = self.dim
        indptr = np.zeros(len(self) + 1, dtype=np.int64)
        for i, x in enumerate(self.instances):
            indptr[i + 1] = indptr[i] + x.nnz
        col = np.concatenate([x.indices for x in self.instances]) - 1 if len(self) else np.zeros(0, dtype=np.int64)
        dat = np.concatenate([x.values for x in self.instances]) if len(self) else np.zeros(0)
        return csr_matrix((dat, col, indptr), shape=(len(self), dim))


def _parse_entries(tokens, lineno):
    idx = np.empty(len(tokens), dtype=np.int64)
    val = np.empty(len(tokens), dtype=np.float64)
    for k, tok in enumerate(tokens):
        head, sep, tail = tok.partition(":")
        if not sep:
            raise ParseError(f"line {lineno}: expected index:value, got {tok!r}")
        try:
            idx[k] = int(head)
            val[k] = float(tail)
        except ValueError:
            raise ParseError(f"line {lineno}: bad feature entry {tok!r}") from None
    if idx.size and (idx[0] < 1 or np.any(np.diff(idx) <= 0)):
        raise ParseError(f"line {lineno}: feature indices must be strictly increasing and >= 1")
    if not np.all(np.isfinite(val)):
        raise ParseError(f"line {lineno}: non-finite feature value")
    return SparseVector(idx, val)


def _strip(line):
    hash_pos = line.find("#")
    if hash_pos >= 0:
        line = line[:hash_pos]
    return line.strip()


def parse_libsvm(text):
    """Parse LIBSVM-format text into a Dataset.

    One instance per line: ``<label> <idx>:<val> ...``.  Accepted labels are
    +1, 1, -1 and 0; 0 maps to -1.  ``#`` starts a comment, blank lines are
    skipped.  Errors report 1-based line numbers.
    """
    instances = []
    labels = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        tokens = line.split()
        try:
            lab = float(tokens[0])
        except ValueError:
            raise ParseError(f"line {lineno}: bad label {tokens[0]!r}") from None
        if lab == 1.0:
            labels.append(1)
        elif lab == -1.0 or lab == 0.0:
            labels.append(-1)
        else:
            raise ParseError(f"line {lineno}: label must be +1, -1 or 0, got {tokens[0]!r}")
        instances.append(_parse_entries(tokens[1:], lineno))
    return Dataset(instances, np.array(labels, dtype=np.int64))


def parse_unlabeled(text):
    """Parse instances without labels: lines of ``<idx>:<val> ...`` entries."""
    instances = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        instances.append(_parse_entries(line.split(), lineno))
    return instances


def looks_labeled(text):
    """True if the first nonempty line starts with a label token."""
    for raw in text.splitlines():
        line = _strip(raw)
        if line:
            return ":" not in line.split()[0]
    return False


def to_libsvm(dataset):
    """Serialize a Dataset back to LIBSVM text; values use shortest repr."""
    lines = []
    for x, y in zip(dataset.instances, dataset.labels):
        parts = ["+1" if y > 0 else "-1"]
        parts.extend(f"{i}:{float(v)!r}" for i, v in zip(x.indices, x.values))
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class Normalizer:
    """Per-feature min/max map fitted on training data.

    Features absent from an instance count as value 0 when fitting.
    Applying maps value v of feature j to (v - min_j) / (max_j - min_j);
    constant features (max == min) map to 0.  Test values outside the
    fitted range are transformed with the same affine map, not clipped.
    Feature indices beyond the fitted dim pass through unchanged.
    """

    feature_min: np.ndarray
    feature_max: np.ndarray

    @property
    def dim(self):
        return int(self.feature_min.shape[0])

    def transform_one(self, x):
        rng = self.feature_max - self.feature_min
        # image of an absent (zero) entry; nonzero only when min_j != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            zero_image = np.where(rng > 0, -self.feature_min / rng, 0.0)
        fill_idx = np.flatnonzero(zero_image != 0.0) + 1

        inside = x.indices <= self.dim
        j = x.indices[inside] - 1
        r = rng[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            mapped = np.where(r > 0, (x.values[inside] - self.feature_min[j]) / r, 0.0)

        idx = np.concatenate(
            [x.indices[inside], np.setdiff1d(fill_idx, x.indices[inside]), x.indices[~inside]]
        )
        val = np.concatenate(
            [mapped, zero_image[np.setdiff1d(fill_idx, x.indices[inside]) - 1], x.values[~inside]]
        )
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        keep = val != 0.0
        return SparseVector(idx[keep], val[keep])


def fit_normalizer(dataset):
    """Fit per-feature min/max over a dataset, treating absent features as 0."""
    lo = np.full(dataset.dim, np.inf)
    hi = np.full(dataset.dim, -np.inf)
    counts = np.zeros(dataset.dim, dtype=np.int64)
    for x in dataset.instances:
        j = x.indices - 1
        np.minimum.at(lo, j, x.values)
        np.maximum.at(hi, j, x.values)
        counts[j] += 1
    # features absent from at least one instance include 0 in their range
    partial = counts < len(dataset)
    lo[partial] = np.minimum(lo[partial], 0.0)
    hi[partial] = np.maximum(hi[partial], 0.0)
    return Normalizer(lo, hi)


def apply_normalizer(norm, dataset):
    return Dataset(
        [norm.transform_one(x) for x in dataset.instances],
        dataset.labels.copy(),
        dim=max(dataset.dim, norm.dim),
    )


def split(dataset, fraction, seed):
    """Random train/test split; |train| = round(fraction * m).

    A single-class training half only warns, it does not raise.
    """
    m = len(dataset)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    n_train = int(round(fraction * m))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = dataset.subset(train_idx)
    if len(train) and np.unique(train.labels).size < 2:
        warnings.warn("training split contains a single class", stacklevel=2)
    return train, dataset.subset(test_idx)


def kfold(dataset, k, seed):
    """Yield (train, validation) pairs for k shuffled folds.

    Fold sizes differ by at most one.  k must be in [2, m].
    """
    m = len(dataset)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > m:
        raise ValueError(f"cannot make {k} folds from {m} instances")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    folds = np.array_split(perm, k)
    pairs = []
    for i in range(k):
        val_idx = np.sort(folds[i])
        train_idx = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        pairs.append((dataset.subset(train_idx), dataset.subset(val_idx)))
    return pairs


def augment_constant(dataset, value=1.0):
    """Append a constant feature at index dim+1 to every instance.

    The usual way to emulate a bias term, which the models themselves do
    not carry.  Min-max normalization maps constant features to zero, so
    augment after normalizing (or train with normalize off) when the
    constant must survive.
    """
    j = dataset.dim + 1
    out = []
    for x in dataset.instances:
        out.append(
            SparseVector(
                np.concatenate([x.indices, [j]]), np.concatenate([x.values, [value]])
            )
        )
    return Dataset(out, dataset.labels.copy(), dim=j)
