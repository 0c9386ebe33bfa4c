"""Self-dissimilarity matrices (TDM, PDM) and their serialization into style vectors."""
from __future__ import annotations

import csv

import numpy as np

from .alignment import AlignmentPath, ErrorMatrix
from .errors import DimensionError
from .geometry import N_TRIPLETS
from .style import StudyDims


def compute_tdm(path: AlignmentPath, errmat: ErrorMatrix, deviation_cap=2.0):
    """Triplet deviation matrix, 165 x n (one column per reference transition).

    A reference transition visited several times by the path keeps the visit
    with the smallest MAD. Unusable triplets hold `deviation_cap`.
    """
    if errmat.deviations is None:
        raise ValueError("error matrix carries no per-triplet deviations")
    n = errmat.p.shape[0]
    chosen = {}
    for i, j in path.pairs:
        if not (0 <= i < n and 0 <= j < errmat.p.shape[1]):
            raise IndexError(f"path cell ({i}, {j}) outside the error matrix")
        if i not in chosen or errmat.p[i, j] < errmat.p[i, chosen[i]]:
            chosen[i] = j
    if len(chosen) != n:
        raise ValueError("path does not visit every reference transition")
    tdm = np.empty((errmat.deviations.shape[-1], n))
    for i, j in chosen.items():
        col = np.where(errmat.valid[i, j], errmat.deviations[i, j], deviation_cap)
        tdm[:, i] = np.minimum(col, deviation_cap)
    return tdm


def compute_pdm(p, width):
    """Resample each row of P linearly to `width` columns, keeping both ends."""
    p = np.asarray(getattr(p, "p", p), dtype=float)
    if width < 2:
        raise ValueError("PDM width must be >= 2")
    m = p.shape[1]
    if m == width:
        return p.copy()
    if m == 1:
        return np.repeat(p, width, axis=1)
    grid = np.linspace(0.0, m - 1.0, width)
    src = np.arange(m, dtype=float)
    return np.vstack([np.interp(grid, src, row) for row in p])


def serialize(tdm, pdm, dims: StudyDims | None = None):
    """x = [TDM row-major, PDM row-major]."""
    tdm = np.asarray(tdm, dtype=float)
    pdm = np.asarray(pdm, dtype=float)
    if dims is not None:
        if tdm.shape != (dims.N, dims.n) or pdm.shape != (dims.n, dims.W):
            raise DimensionError(
                f"TDM {tdm.shape} / PDM {pdm.shape} do not match study dims "
                f"({dims.N}x{dims.n}, {dims.n}x{dims.W})"
            )
    x = np.concatenate([tdm.ravel(), pdm.ravel()])
    if not np.all(np.isfinite(x)):
        raise ValueError("style vector has non-finite entries")
    return x


def deserialize(x, dims: StudyDims):
    x = np.asarray(x, dtype=float)
    if x.shape != (dims.d,):
        raise DimensionError(f"expected a {dims.d}-vector, got shape {x.shape}")
    k = dims.N * dims.n
    return x[:k].reshape(dims.N, dims.n), x[k:].reshape(dims.n, dims.W)


def study_dims(n_transitions, width=None):
    return StudyDims(N_TRIPLETS, n_transitions, n_transitions if width is None else width)


def write_pgm(matrix, path, vmax=2.0, vmin=0.0):
    """Binary 8-bit graymap, values mapped linearly from [vmin, vmax] to [0, 255]."""
    a = np.asarray(matrix, dtype=float)
    scaled = np.clip((a - vmin) / (vmax - vmin), 0.0, 1.0) * 255.0
    pix = np.round(scaled).astype(np.uint8)
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path):
    data = open(path, "rb").read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    pix = np.frombuffer(parts[4][: w * h], dtype=np.uint8)
    return pix.reshape(h, w), maxval


def write_matrix_csv(matrix, path):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows([[repr(float(v)) for v in row] for row in np.atleast_2d(matrix)])
