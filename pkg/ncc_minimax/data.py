#!/usr/bin/env python3
"""
Dataset ingestion and synthetic generators.

LIBSVM text (`label idx:val idx:val ...`, 1-based increasing indices) is read into a
scipy CSR matrix; the data-poisoning generator produces dense Gaussian features with
{0, 1} labels from a planted logistic model.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, TextIO, Tuple, Union

import numpy as np
from scipy import sparse

from .errors import ArgumentError, DataFormatError
from .streams import rng_stream

logger = logging.getLogger(__name__)

Features = Union[np.ndarray, sparse.csr_matrix]

SIGNED_LABELS = (-1, 1)
BINARY_LABELS = (0, 1)
THETA_STAR_KINDS = ("gaussian", "ones")

_POSITIVE_TOKENS = {'+1', '1', '+1.0', '1.0'}
_NEGATIVE_TOKENS = {'-1', '0', '-1.0', '0.0'}


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix (n x d, dense or CSR) with integer labels"""
    features: Features
    labels: np.ndarray
    alphabet: Tuple[int, int] = SIGNED_LABELS

    def __post_init__(self):
        n = self.features.shape[0]
        if n == 0:
            raise ArgumentError("empty dataset")
        if self.labels.shape != (n,):
            raise ArgumentError(f"expected {n} labels, got shape {self.labels.shape}")
        if not np.all(np.isin(self.labels, self.alphabet)):
            raise ArgumentError(f"labels outside the alphabet {self.alphabet}")

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.features)

    def dense(self) -> np.ndarray:
        return self.features.toarray() if self.is_sparse else np.asarray(self.features)

    def subset(self, idx: np.ndarray) -> 'Dataset':
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx].copy(), self.alphabet)

    def to_signed(self) -> 'Dataset':
        if self.alphabet == SIGNED_LABELS:
            return self
        return Dataset(self.features, np.where(self.labels == 1, 1, -1), SIGNED_LABELS)

    def to_binary(self) -> 'Dataset':
        if self.alphabet == BINARY_LABELS:
            return self
        return Dataset(self.features, np.where(self.labels == 1, 1, 0), BINARY_LABELS)


def _parse_label(token: str, line_number: int) -> int:
    if token in _POSITIVE_TOKENS:
        return 1
    if token in _NEGATIVE_TOKENS:
        return -1
    raise DataFormatError(f"unsupported label {token!r}", line_number)


def parse_libsvm(stream: Union[TextIO, Iterable[str]], n_features: Optional[int] = None) -> Dataset:
    """
    Parse LIBSVM text into a Dataset with 0-based CSR features and labels in {-1, +1}.

    Args:
        stream: text stream or iterable of lines
        n_features: feature dimension; defaults to the largest index seen

    Returns:
        Dataset with labels {0, -1} -> -1 and {1, +1} -> +1
    """
    indptr: List[int] = [0]
    indices: List[int] = []
    values: List[float] = []
    labels: List[int] = []
    max_index = 0

    for line_number, raw in enumerate(stream, 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_label(tokens[0], line_number))
        previous = 0
        for token in tokens[1:]:
            idx_text, sep, val_text = token.partition(':')
            if not sep:
                raise DataFormatError(f"malformed token {token!r}", line_number)
            try:
                idx = int(idx_text)
                val = float(val_text)
            except ValueError:
                raise DataFormatError(f"malformed token {token!r}", line_number) from None
            if idx < 1:
                raise DataFormatError(f"feature index must be >= 1, got {idx}", line_number)
            if idx <= previous:
                raise DataFormatError(f"non-increasing feature index {idx} after {previous}", line_number)
            previous = idx
            indices.append(idx - 1)
            values.append(val)
        max_index = max(max_index, previous)
        indptr.append(len(indices))

    if not labels:
        raise DataFormatError("empty dataset")

    d = max_index if n_features is None else int(n_features)
    if d < max_index:
        raise DataFormatError(f"feature index {max_index} exceeds n_features={d}")

    features = sparse.csr_matrix(
        (np.asarray(values, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), max(d, 1))
    )
    dataset = Dataset(features, np.asarray(labels, dtype=int), SIGNED_LABELS)
    logger.info(f"Parsed LIBSVM dataset: n={dataset.n}, d={dataset.d}, nnz={features.nnz}")
    return dataset


def write_libsvm(dataset: Dataset, stream: TextIO) -> None:
    """Serialize a dataset as LIBSVM text with 17 significant digits"""
    signed = dataset.to_signed()
    features = sparse.csr_matrix(signed.features)
    for i in range(signed.n):
        start, end = features.indptr[i], features.indptr[i + 1]
        label = '+1' if signed.labels[i] == 1 else '-1'
        cells = [f"{int(j) + 1}:{v:.17g}" for j, v in zip(features.indices[start:end], features.data[start:end])
                 if v != 0.0]
        stream.write(' '.join([label] + cells) + '\n')


def load_libsvm(path: str, n_features: Optional[int] = None, max_samples: Optional[int] = None,
                seed: int = 0) -> Dataset:
    """Read a LIBSVM file, optionally keeping a seeded subsample of max_samples rows"""
    with open(path, 'r') as handle:
        dataset = parse_libsvm(handle, n_features=n_features)
    if max_samples is not None and max_samples < dataset.n:
        stream = rng_stream(seed, f"subsample/{max_samples}")
        keep = np.sort(stream.sample_batch(dataset.n, max_samples))
        dataset = dataset.subset(keep)
        logger.info(f"Subsampled {path} to n={dataset.n}")
    return dataset


def sigmoid(u: np.ndarray) -> np.ndarray:
    from scipy.special import expit
    return expit(u)


def gen_poison_data(seed: int, n: int = 1000, d: int = 100, noise_var: float = 1e-3,
                    theta_star: str = "gaussian") -> Tuple[Dataset, np.ndarray]:
    """
    Planted logistic data: z_i ~ N(0, I_d), nu_i ~ N(0, noise_var),
    t_i = 1 if sigmoid(z_i^T theta* + nu_i) > 0.5 else 0.
    theta* ~ N(0, I_d) for "gaussian", the all-ones vector for "ones".
    """
    if n <= 0 or d <= 0:
        raise ArgumentError(f"n and d must be positive, got n={n}, d={d}")
    if noise_var < 0:
        raise ArgumentError(f"noise_var must be nonnegative, got {noise_var}")
    if theta_star not in THETA_STAR_KINDS:
        raise ArgumentError(f"theta_star must be one of {', '.join(THETA_STAR_KINDS)}, got {theta_star!r}")
    stream = rng_stream(seed, "poison-data")
    # always drawn so the features do not depend on the kind
    gaussian = stream.normal(d)
    theta_star = gaussian if theta_star == "gaussian" else np.ones(d)
    z = stream.normal((n, d))
    nu = stream.normal(n, scale=math.sqrt(noise_var))
    labels = (sigmoid(z @ theta_star + nu) > 0.5).astype(int)
    return Dataset(z, labels, BINARY_LABELS), theta_star


def _floor_fraction(count: int, fraction: float) -> int:
    # guards products like 700 * 0.1 = 70.00000000000001 against floor noise
    return int(math.floor(count * fraction + 1e-9))


def split_poison(dataset: Dataset, seed: int, test_frac: float = 0.3,
                 poison_ratio: float = 0.10) -> Tuple[Dataset, Dataset, Dataset]:
    """Seeded split into (poisoned train, clean train, test); sizes rounded down"""
    if not 0.0 < test_frac < 1.0:
        raise ArgumentError(f"test_frac must lie in (0, 1), got {test_frac}")
    if not 0.0 < poison_ratio < 1.0:
        raise ArgumentError(f"poison_ratio must lie in (0, 1), got {poison_ratio}")

    n_test = _floor_fraction(dataset.n, test_frac)
    n_train = dataset.n - n_test
    n_poison = _floor_fraction(n_train, poison_ratio)
    if n_test == 0 or n_poison == 0 or n_poison == n_train:
        raise ArgumentError(
            f"degenerate split: n={dataset.n}, test={n_test}, poisoned={n_poison}, clean={n_train - n_poison}"
        )

    order = rng_stream(seed, "poison-split").generator.permutation(dataset.n)
    train, test = order[:n_train], order[n_train:]
    poisoned, clean = train[:n_poison], train[n_poison:]
    logger.info(f"Poison split: |D_tr1|={n_poison}, |D_tr2|={n_train - n_poison}, |D_test|={n_test}")
    return dataset.subset(poisoned), dataset.subset(clean), dataset.subset(test)
