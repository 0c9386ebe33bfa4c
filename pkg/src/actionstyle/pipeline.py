"""Sequence-level feature extraction: key poses, F estimation, alignment, style vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentPath, ErrorMatrix, align, build_error_matrix
from .dissimilarity import DissimilarityConfig
from .errors import DegenerateConfigurationError, InsufficientDataError
from .features import compute_pdm, compute_tdm, serialize, study_dims
from .geometry import estimate_fundamental, hartley_transform, skew


def key_poses(frames, count=16):
    """Uniformly subsample `count` key poses from (F, 11, 2) frames."""
    frames = np.asarray(frames, dtype=float)
    if count < 2:
        raise ValueError("need at least 2 key poses")
    if len(frames) < count:
        raise InsufficientDataError(f"sequence has {len(frames)} frames, fewer than {count} key poses")
    idx = np.round(np.linspace(0, len(frames) - 1, count)).astype(int)
    return frames[idx]


@dataclass(frozen=True, eq=False)
class SequenceFeatures:
    errmat: ErrorMatrix
    path: AlignmentPath
    tdm: np.ndarray
    pdm: np.ndarray
    x: np.ndarray
    f: np.ndarray  # in normalized image coordinates


def _normalizers(target_keys, reference_keys):
    t1 = hartley_transform(target_keys.reshape(-1, 2))
    t2 = hartley_transform(reference_keys.reshape(-1, 2))
    return t1, t2


def _apply(t, pts):
    return pts @ t[:2, :2].T + t[:2, 2]


def fundamental_from_pairs(target_keys, reference_keys, pairs):
    """F over all body points of the paired key poses (target view 1, reference view 2).

    When the two views coincide point for point (a sequence against itself)
    every pure-translation F = [e]x fits; a fixed epipole far outside the
    data is used then.
    """
    x1 = np.concatenate([target_keys[j] for _, j in pairs])
    x2 = np.concatenate([reference_keys[i] for i, _ in pairs])
    try:
        return estimate_fundamental(x1, x2)
    except DegenerateConfigurationError:
        span = np.abs(np.concatenate([x1, x2])).max() + 1.0
        if np.abs(x1 - x2).max() > 1e-9 * span:
            raise
        return skew(np.array([1.0, 0.7548776662466927, 0.0]))


def _uniform_pairs(n_ref, n_tgt):
    return [(i, int(round(i * (n_tgt - 1) / max(n_ref - 1, 1)))) for i in range(n_ref)]


def _key_pairs(path: AlignmentPath):
    """Key-pose pairs implied by aligned transitions (both endpoints)."""
    out = set()
    for i, j in path.pairs:
        out.add((i, j))
        out.add((i + 1, j + 1))
    return sorted(out)


def compare_sequences(target_frames, reference_frames, key_count=16, width=None,
                      cfg: DissimilarityConfig = DissimilarityConfig(), refine=True):
    """Align a target sequence to the reference and build its style vector.

    F is estimated from uniformly time-matched key poses, used for a first
    alignment, then re-estimated from the aligned pairs (refine=True).
    """
    tk = key_poses(target_frames, key_count)
    rk = key_poses(reference_frames, key_count)
    t1, t2 = _normalizers(tk, rk)
    tk = _apply(t1, tk)
    rk = _apply(t2, rk)
    f = fundamental_from_pairs(tk, rk, _uniform_pairs(len(rk), len(tk)))
    errmat = build_error_matrix(tk, rk, f, cfg)
    path = align(errmat)
    if refine:
        f = fundamental_from_pairs(tk, rk, _key_pairs(path))
        errmat = build_error_matrix(tk, rk, f, cfg)
        path = align(errmat)
    n = len(rk) - 1
    dims = study_dims(n, width)
    tdm = compute_tdm(path, errmat, cfg.deviation_cap)
    pdm = compute_pdm(errmat, dims.W)
    return SequenceFeatures(errmat, path, tdm, pdm, serialize(tdm, pdm, dims), f)
