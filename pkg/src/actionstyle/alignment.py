"""Matching error matrix between two pose-transition sequences and its DP alignment.

Indices are 0-based throughout: row j' is a reference transition, column j a
target transition.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dissimilarity import DissimilarityConfig, cross_deviations, median_deviation
from .errors import DegenerateConfigurationError, InsufficientDataError
from .geometry import epipoles, triplet_homographies


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    """P (n x m) plus the per-triplet deviations behind every cell.

    deviations / valid have shape (n, m, 165); `imputed` marks cells that had
    too few usable triplets and were filled with the largest valid entry.
    """

    p: np.ndarray
    deviations: np.ndarray | None = None
    valid: np.ndarray | None = None
    imputed: np.ndarray | None = None

    @property
    def shape(self):
        return self.p.shape


@dataclass(frozen=True)
class AlignmentPath:
    pairs: tuple  # ((ref_index, target_index), ...)
    cumulative_cost: float


def transitions(keys):
    """(k, 11, 2) key poses -> start poses and end poses of the k-1 transitions."""
    keys = np.asarray(keys, dtype=float)
    return keys[:-1], keys[1:]


def build_error_matrix(target_keys, reference_keys, f, cfg: DissimilarityConfig = DissimilarityConfig()):
    """p[j', j] = MAD dissimilarity of target transition j vs reference transition j'.

    target_keys: (m+1, 11, 2) key poses seen in view 1; reference_keys:
    (n+1, 11, 2) in view 2; F relates them as x_ref^T F x_target = 0.
    """
    target_keys = np.asarray(target_keys, dtype=float)
    reference_keys = np.asarray(reference_keys, dtype=float)
    if len(target_keys) < 2 or len(reference_keys) < 2:
        raise InsufficientDataError("each sequence needs at least one pose transition")
    e1, e2 = epipoles(f)
    # H[a, b]: target key a (view 1) -> reference key b (view 2)
    H, ok = triplet_homographies(target_keys, reference_keys, e1, e2)
    # cell (j', j): start homography H[j, j'], end homography H[j+1, j'+1]
    h_start = np.swapaxes(H[:-1, :-1], 0, 1)
    h_end = np.swapaxes(H[1:, 1:], 0, 1)
    v = np.swapaxes(ok[:-1, :-1] & ok[1:, 1:], 0, 1)
    _, dev, valid = cross_deviations(h_start, h_end, v, cfg)
    p = median_deviation(dev, valid, cfg)
    imputed = np.isnan(p)
    if imputed.all():
        raise DegenerateConfigurationError("no pose-transition pair has enough usable triplets")
    p = np.where(imputed, np.nanmax(p), p)
    return ErrorMatrix(p, dev, valid, imputed)


def best_match(p, ref_index):
    """Target transition minimizing row `ref_index`; ties go to the lowest column."""
    p = np.asarray(getattr(p, "p", p))
    if not 0 <= ref_index < p.shape[0]:
        raise IndexError(f"reference index {ref_index} out of range 0..{p.shape[0] - 1}")
    return int(np.argmin(p[ref_index]))


def align(p):
    """Minimum-cost monotone path from (0, 0) to (n-1, m-1).

    Steps advance the reference, the target, or both by one. Among equal-cost
    predecessors the diagonal wins, then the reference advance.
    """
    p = np.asarray(getattr(p, "p", p), dtype=float)
    if p.ndim != 2 or p.size == 0:
        raise InsufficientDataError("error matrix is empty")
    n, m = p.shape
    D = np.full((n, m), np.inf)
    D[0, 0] = p[0, 0]
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = np.inf
            if i > 0 and j > 0:
                best = D[i - 1, j - 1]
            if i > 0 and D[i - 1, j] < best:
                best = D[i - 1, j]
            if j > 0 and D[i, j - 1] < best:
                best = D[i, j - 1]
            D[i, j] = best + p[i, j]
    pairs = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        options = []
        if i > 0 and j > 0:
            options.append((D[i - 1, j - 1], i - 1, j - 1))
        if i > 0:
            options.append((D[i - 1, j], i - 1, j))
        if j > 0:
            options.append((D[i, j - 1], i, j - 1))
        best = min(o[0] for o in options)
        _, i, j = next(o for o in options if o[0] == best)
        pairs.append((i, j))
    pairs.reverse()
    return AlignmentPath(tuple(pairs), float(D[-1, -1]))


def path_cost(p, pairs):
    p = np.asarray(getattr(p, "p", p), dtype=float)
    return float(sum(p[i, j] for i, j in pairs))


def save_error_matrix_csv(p, path):
    p = np.asarray(getattr(p, "p", p), dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in p:
            w.writerow([repr(float(v)) for v in row])


def load_error_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.array(rows)


def save_path_csv(path_obj: AlignmentPath, path):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ref_index", "target_index"])
        w.writerows(path_obj.pairs)
