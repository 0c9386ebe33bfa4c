"""Gender classifiers on style vectors: eigenstyle PCA with k-NN, and Fisher LDA."""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, InsufficientDataError

log = logging.getLogger(__name__)


class Label(IntEnum):
    FEMALE = 0  # w0
    MALE = 1  # w1

    @classmethod
    def parse(cls, text):
        t = str(text).strip().lower()
        if t in ("0", "f", "female", "w0"):
            return cls.FEMALE
        if t in ("1", "m", "male", "w1"):
            return cls.MALE
        raise ValueError(f"unknown label {text!r}")


class MissingClassError(InsufficientDataError):
    pass


class DegenerateSeparationError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class EigenstyleModel:
    mean: np.ndarray
    basis: np.ndarray  # (d, d') orthonormal columns
    eigenvalues: np.ndarray  # descending
    reconstruction_error: float = 0.0  # J_{d'} on the training samples

    @property
    def d(self):
        return self.mean.shape[0]

    @property
    def d_prime(self):
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class LdaModel:
    w: np.ndarray
    c: float
    positive_label: Label

    def project(self, x):
        return np.asarray(x, dtype=float) @ self.w


def _as_matrix(samples):
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise DimensionError("samples must be a list of equal-length vectors")
    return X


def fit_pca(samples, d_prime):
    """Eigenstyles: top-d' eigenvectors of the scatter matrix of `samples`.

    The scatter S = sum (x - m)(x - m)^T is d x d with d in the thousands, so
    its non-zero eigenpairs are taken from the n x n Gram matrix instead.
    d' is clamped to rank(S).
    """
    X = _as_matrix(samples)
    n, d = X.shape
    if n < 2:
        raise InsufficientDataError("PCA needs at least 2 samples")
    if d_prime < 1:
        raise ValueError("d_prime must be >= 1")
    mean = X.mean(axis=0)
    Xc = X - mean
    gram = Xc @ Xc.T
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    tol = max(evals[0], 0.0) * n * np.finfo(float).eps * 10
    rank = int((evals > tol).sum())
    if rank == 0:
        raise InsufficientDataError("all samples are identical")
    if d_prime > rank:
        log.warning("d_prime=%d exceeds scatter rank %d; clamping", d_prime, rank)
        d_prime = rank
    lam = evals[:d_prime]
    basis = Xc.T @ evecs[:, :d_prime] / np.sqrt(lam)
    # one re-orthonormalization pass removes Gram-route rounding
    basis, r = np.linalg.qr(basis)
    basis *= np.sign(np.diag(r))
    coords = Xc @ basis
    residual = Xc - coords @ basis.T
    return EigenstyleModel(mean, basis, lam.copy(), float((residual**2).sum()))


def reconstruction_error(samples, model: EigenstyleModel):
    """J_{d'}: summed squared distance of samples from m + A A^T (x - m)."""
    X = _as_matrix(samples)
    Xc = X - model.mean
    r = Xc - (Xc @ model.basis) @ model.basis.T
    return float((r**2).sum())


def pca_project(x, model: EigenstyleModel):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.d:
        raise DimensionError(f"expected dimension {model.d}, got {x.shape[-1]}")
    return (x - model.mean) @ model.basis


def knn_k(n):
    """Closest odd integer to sqrt(n); an exact tie rounds up; at most n."""
    if n < 1:
        raise InsufficientDataError("empty training set")
    r = np.sqrt(n)
    k = 2 * int(np.floor((r - 1) / 2)) + 1  # odd at or below r
    if r - k >= (k + 2) - r:
        k += 2
    if k > n:
        k = n if n % 2 else n - 1
    return max(k, 1)


def knn_classify(q, train_coords, train_labels, k=None):
    """Majority label among the k nearest training projections (Euclidean)."""
    train_coords = np.asarray(train_coords, dtype=float)
    labels = np.asarray(train_labels, dtype=int)
    if len(train_coords) == 0:
        raise InsufficientDataError("empty training set")
    k = knn_k(len(train_coords)) if k is None else min(int(k), len(train_coords))
    dist = np.linalg.norm(train_coords - np.asarray(q, dtype=float), axis=1)
    nearest = np.argsort(dist, kind="stable")[:k]
    votes = np.bincount(labels[nearest], minlength=2)
    # even k only arises from an explicit override; ties then go to the nearest
    if votes[0] == votes[1]:
        return Label(labels[nearest[0]])
    return Label(int(np.argmax(votes)))


def fit_lda(samples, labels, ridge=None):
    """Fisher discriminant with the midpoint threshold.

    w = (S_W + lambda I)^-1 (m_0 - m_1) and c = w . (m_0 + m_1) / 2. The ridge
    defaults to 1e-6 * trace(S_W) / d since S_W is singular whenever there
    are fewer samples than dimensions; ridge=0 gives the unregularized
    solution (S_W must then be invertible).
    """
    X = _as_matrix(samples)
    y = np.asarray([int(Label(v)) for v in labels])
    if len(y) != len(X):
        raise DimensionError("samples and labels differ in length")
    present = set(y.tolist())
    for lab in Label:
        if int(lab) not in present:
            raise MissingClassError(f"no samples labelled {lab.name}")
    d = X.shape[1]
    m0 = X[y == 0].mean(axis=0)
    m1 = X[y == 1].mean(axis=0)
    diff = m0 - m1
    if not np.any(diff):
        raise DegenerateSeparationError("class means coincide")
    Xc = np.vstack([X[y == 0] - m0, X[y == 1] - m1])
    trace = float((Xc**2).sum())
    lam = 1e-6 * trace / d if ridge is None else float(ridge)
    if lam > 0:
        # S_W = V diag(s^2) V^T on its range; 1/lam on the complement
        _, s, vt = np.linalg.svd(Xc, full_matrices=False)
        keep = s > s[0] * 1e-12 if len(s) and s[0] > 0 else np.zeros(len(s), bool)
        vt = vt[keep]
        s2 = s[keep] ** 2
        b = vt @ diff
        w = vt.T @ (b / (s2 + lam)) + (diff - vt.T @ b) / lam
    else:
        w = np.linalg.solve(Xc.T @ Xc, diff)
    if not np.all(np.isfinite(w)) or not np.any(w):
        raise DegenerateSeparationError("discriminant direction vanished")
    c = float(w @ (m0 + m1) / 2)
    positive = Label.FEMALE if w @ m0 > c else Label.MALE
    return LdaModel(w, c, positive)


def lda_classify(x, model: LdaModel):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.w.shape[0]:
        raise DimensionError(f"expected dimension {model.w.shape[0]}, got {x.shape[-1]}")
    other = Label(1 - int(model.positive_label))
    return model.positive_label if float(x @ model.w) > model.c else other


# --- persistence -------------------------------------------------------------

MAGIC = b"ASTYLMDL"
FORMAT_VERSION = 1
KIND_PCA, KIND_LDA = 1, 2
FLATTEN_ORDERS = {"tdm-first-row-major": 0}
_HEADER = struct.Struct("<8sIIQQQQI")


@dataclass(frozen=True)
class StudyDims:
    """Style-vector layout: N triplet rows, n reference transitions, PDM width W."""

    N: int
    n: int
    W: int
    order: str = "tdm-first-row-major"

    @property
    def d(self):
        return self.N * self.n + self.n * self.W


@dataclass
class TrainedPca:
    """PCA model plus the projected training set needed for k-NN."""

    model: EigenstyleModel
    train_coords: np.ndarray
    train_labels: np.ndarray
    metadata: dict = field(default_factory=dict)


def _f64(a):
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def save_model(path, model, dims: StudyDims, metadata=None):
    """Write a binary model file and a `<path>.json` metadata sidecar.

    `model` is a TrainedPca or an LdaModel.
    """
    path = Path(path)
    if isinstance(model, TrainedPca):
        kind = KIND_PCA
        m = model.model
        if m.d != dims.d:
            raise DimensionError("model dimension does not match study dims")
        body = struct.pack("<QQ", m.d_prime, len(model.train_coords))
        body += _f64(m.mean) + _f64(m.basis) + _f64(m.eigenvalues)
        body += _f64([m.reconstruction_error])
        body += _f64(model.train_coords) + _f64(model.train_labels)
    elif isinstance(model, LdaModel):
        kind = KIND_LDA
        if model.w.shape[0] != dims.d:
            raise DimensionError("model dimension does not match study dims")
        body = _f64(model.w) + _f64([model.c, float(model.positive_label)])
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, kind, dims.d, dims.N, dims.n, dims.W,
                          FLATTEN_ORDERS[dims.order])
    path.write_bytes(header + body)
    meta = {"format_version": FORMAT_VERSION, "kind": "pca" if kind == KIND_PCA else "lda",
            "d": dims.d, "N": dims.N, "n": dims.n, "W": dims.W, "flatten_order": dims.order}
    meta.update(metadata or {})
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_model(path):
    """Inverse of save_model. Returns (model, dims, metadata)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, kind, d, N, n, W, order = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: not a model file")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported model format version {version}")
    orders = {v: k for k, v in FLATTEN_ORDERS.items()}
    if order not in orders:
        raise FormatError(f"{path}: unknown flatten order {order}")
    dims = StudyDims(N, n, W, orders[order])
    if dims.d != d:
        raise FormatError(f"{path}: header d={d} inconsistent with N, n, W")
    pos = _HEADER.size

    def take(count):
        nonlocal pos
        end = pos + 8 * count
        if end > len(raw):
            raise FormatError(f"{path}: truncated body")
        arr = np.frombuffer(raw[pos:end], dtype="<f8").astype(float)
        pos = end
        return arr

    meta_path = Path(str(path) + ".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    if kind == KIND_PCA:
        if pos + 16 > len(raw):
            raise FormatError(f"{path}: truncated body")
        dp, ntrain = struct.unpack_from("<QQ", raw, pos)
        pos += 16
        mean = take(d)
        basis = take(d * dp).reshape(d, dp)
        evals = take(dp)
        (err,) = take(1)
        coords = take(ntrain * dp).reshape(ntrain, dp)
        labels = take(ntrain).astype(int)
        model = TrainedPca(EigenstyleModel(mean, basis, evals, float(err)), coords, labels, meta)
    elif kind == KIND_LDA:
        w = take(d)
        c, pos_label = take(2)
        model = LdaModel(w, float(c), Label(int(pos_label)))
    else:
        raise FormatError(f"{path}: unknown model kind {kind}")
    if pos != len(raw):
        raise FormatError(f"{path}: trailing bytes")
    return model, dims, meta
