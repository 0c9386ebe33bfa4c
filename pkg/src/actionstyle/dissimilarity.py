"""Cross-homography homology deviation and the MAD pose-transition dissimilarity."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, InsufficientGeometryError
from .geometry import TRIPLETS, epipoles, triplet_homographies

MAX_CONDITION = 1e12
MIN_EIG_MODULUS = 1e-12
# Splits of a double root below this relative size are at the rounding floor
# of the characteristic-polynomial coefficients (about sqrt(machine eps)).
CLUSTER_TOL = 1e-6

_PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class DissimilarityConfig:
    mu: float = 1.0
    deviation_cap: float = 2.0
    min_valid_triplets: int = 30

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.deviation_cap > 0:
            raise ValueError("deviation_cap must be positive")
        if self.min_valid_triplets < 1:
            raise ValueError("min_valid_triplets must be at least 1")


@dataclass(frozen=True)
class EigenRatioDeviation:
    triplet: tuple[int, int, int]
    sigma_ratio: complex
    deviation: float
    valid: bool


@dataclass(frozen=True)
class PoseTransition:
    """Two consecutive key poses, (11, 2) image coordinates each."""

    start_pose: np.ndarray
    end_pose: np.ndarray
    index: int = 0


def cross_homography(h1, h2):
    """H1 H2^-1, raising ConditioningError when H2 is near singular."""
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    if not np.all(np.isfinite(h2)) or np.linalg.cond(h2) > MAX_CONDITION:
        raise ConditioningError("second homography is near singular")
    return h1 @ np.linalg.inv(h2)


def _cbrt_complex(z):
    r = np.abs(z)
    return np.cbrt(r) * np.exp(1j * np.angle(z) / 3.0)


def eigvals3(h):
    """Eigenvalues of 3x3 matrices (..., 3, 3) from the characteristic cubic.

    Returns a complex array (..., 3). Roots of a cluster that agree to within
    CLUSTER_TOL are replaced by the nearby root of the derivative polynomial,
    which is the exact value of a double root.
    """
    h = np.asarray(h, dtype=float)
    # Work on the traceless part h - (tr/3) I at unit scale: near-scalar
    # matrices (triple roots) then keep full relative accuracy, and tiny or
    # huge entries cannot under/overflow the cubic's coefficients.
    centre = np.trace(h, axis1=-2, axis2=-1) / 3.0
    h = h - centre[..., None, None] * np.eye(3)
    mag = np.abs(h).max(axis=(-2, -1))
    mag = np.where(mag > 0, mag, 1.0)
    h = h / mag[..., None, None]
    tr = np.trace(h, axis1=-2, axis2=-1)
    minors = (
        h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]
        + h[..., 0, 0] * h[..., 2, 2] - h[..., 0, 2] * h[..., 2, 0]
        + h[..., 1, 1] * h[..., 2, 2] - h[..., 1, 2] * h[..., 2, 1]
    )
    det = np.linalg.det(h)
    # lambda^3 + a lambda^2 + b lambda + c
    a, b, c = -tr, minors, -det
    shift = -a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = np.sqrt((q / 2.0) ** 2 + (p / 3.0) ** 3 + 0j)
    w1 = -q / 2.0 + disc
    w2 = -q / 2.0 - disc
    w = np.where(np.abs(w1) >= np.abs(w2), w1, w2)
    u = _cbrt_complex(w)
    omega = np.exp(2j * np.pi / 3.0)
    roots = []
    for k in range(3):
        uk = u * omega**k
        safe = np.where(uk == 0, 1.0, uk)
        tk = np.where(uk == 0, 0.0, uk - p / (3.0 * safe))
        roots.append(tk + shift)
    lam = np.stack(roots, axis=-1)

    # one Newton step away from multiple roots
    poly = lambda z: ((z + a[..., None]) * z + b[..., None]) * z + c[..., None]
    dpoly = lambda z: (3.0 * z + 2.0 * a[..., None]) * z + b[..., None]
    d = dpoly(lam)
    scale = np.maximum(np.abs(lam).max(axis=-1, keepdims=True), 1e-300)
    simple = np.abs(d) > 1e-4 * scale**2
    lam = np.where(simple, lam - poly(lam) / np.where(simple, d, 1.0), lam)

    # snap clustered pairs onto the derivative root
    crit_disc = np.sqrt(a * a - 3.0 * b + 0j)
    crit = np.stack([(-a + crit_disc) / 3.0, (-a - crit_disc) / 3.0], axis=-1)
    for i, j in _PAIRS:
        li, lj = lam[..., i], lam[..., j]
        close = np.abs(li - lj) < CLUSTER_TOL * scale[..., 0]
        if not np.any(close):
            continue
        mid = 0.5 * (li + lj)
        pick = np.where(
            np.abs(crit[..., 0] - mid) <= np.abs(crit[..., 1] - mid), crit[..., 0], crit[..., 1]
        )
        pick = np.where(np.abs(pick - mid) < CLUSTER_TOL * scale[..., 0], pick.real + 0j, mid)
        lam[..., i] = np.where(close, pick, li)
        lam[..., j] = np.where(close, pick, lj)
    return centre[..., None] + lam * mag[..., None]


def _ratio_deviations(h, mu, cap):
    """Vectorised core: closest eigenvalue-pair ratio and capped deviation.

    Returns (ratio, deviation, ok) with ok False where an eigenvalue modulus
    falls below MIN_EIG_MODULUS after determinant normalization or the
    input is not finite.
    """
    h = np.asarray(h, dtype=float)
    finite = np.all(np.isfinite(h), axis=(-2, -1))
    h = np.where(finite[..., None, None], h, np.eye(3))
    det = np.linalg.det(h)
    norm = np.where(det != 0, np.cbrt(np.abs(det)), np.abs(h).max(axis=(-2, -1)))
    norm = np.where(norm > 0, norm, 1.0)
    lam = eigvals3(h / norm[..., None, None])
    mod = np.abs(lam)
    ok = finite & (mod.min(axis=-1) >= MIN_EIG_MODULUS)
    safe = np.where(mod > 0, lam, 1.0)

    best_ratio = np.full(h.shape[:-2], np.nan + 0j)
    best_dev = np.full(h.shape[:-2], np.inf)
    for i, j in _PAIRS:
        big = np.where(mod[..., i] >= mod[..., j], safe[..., i], safe[..., j])
        small = np.where(mod[..., i] >= mod[..., j], safe[..., j], safe[..., i])
        ratio = big / small
        dev = np.abs(ratio - mu)
        better = dev < best_dev
        best_ratio = np.where(better, ratio, best_ratio)
        best_dev = np.where(better, dev, best_dev)
    best_dev = np.minimum(best_dev, cap)
    best_dev = np.where(ok, best_dev, cap)
    return best_ratio, best_dev, ok


def homology_deviation(h, cfg: DissimilarityConfig = DissimilarityConfig()):
    """How far a homography is from a planar homology: |s_a/s_b - mu| for the
    eigenvalue pair whose ratio is closest to mu, capped at cfg.deviation_cap."""
    ratio, dev, ok = _ratio_deviations(np.asarray(h, dtype=float), cfg.mu, cfg.deviation_cap)
    return EigenRatioDeviation(
        triplet=(-1, -1, -1), sigma_ratio=complex(ratio), deviation=float(dev), valid=bool(ok)
    )


def cross_deviations(h_start, h_end, valid, cfg: DissimilarityConfig):
    """Deviations of H_start H_end^-1 for stacks of homographies.

    Invalid entries (gated triplets, ill-conditioned H_end, tiny eigenvalues)
    get deviation cfg.deviation_cap and a False mask.
    """
    h_end = np.where(valid[..., None, None], h_end, np.eye(3))
    fro = np.linalg.norm(h_end, axis=(-2, -1))
    singular = np.abs(np.linalg.det(h_end)) <= 1e-15 * fro**3
    valid = valid & ~singular
    h_end = np.where(valid[..., None, None], h_end, np.eye(3))
    inv = np.linalg.inv(h_end)
    # Frobenius condition number bounds the spectral one from above
    cond = np.linalg.norm(h_end, axis=(-2, -1)) * np.linalg.norm(inv, axis=(-2, -1))
    valid = valid & (cond < MAX_CONDITION)
    cross = h_start @ inv
    ratio, dev, ok = _ratio_deviations(cross, cfg.mu, cfg.deviation_cap)
    valid = valid & ok
    dev = np.where(valid, dev, cfg.deviation_cap)
    return ratio, dev, valid


def median_deviation(dev, valid, cfg: DissimilarityConfig):
    """MAD over valid triplets along the last axis; NaN where too few are valid."""
    d = np.where(valid, dev, np.nan)
    count = valid.sum(axis=-1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN slices
        mad = np.nanmedian(d, axis=-1)
    return np.where(count >= cfg.min_valid_triplets, mad, np.nan)


def transition_dissimilarity(t: PoseTransition, r: PoseTransition, f, cfg=DissimilarityConfig()):
    """MAD dissimilarity of target transition t (view 1) and reference
    transition r (view 2), with x_r^T F x_t = 0.

    H1 comes from the start poses, H2 from the end poses. Returns the median
    deviation over usable triplets and the full list of 165 per-triplet
    deviations.
    """
    e1, e2 = epipoles(f)
    t_pts = np.stack([t.start_pose, t.end_pose])
    r_pts = np.stack([r.start_pose, r.end_pose])
    H, valid = triplet_homographies(t_pts, r_pts, e1, e2)
    ratio, dev, ok = cross_deviations(H[0, 0], H[1, 1], valid[0, 0] & valid[1, 1], cfg)
    n_ok = int(ok.sum())
    deviations = [
        EigenRatioDeviation(tuple(int(v) for v in TRIPLETS[i]), complex(ratio[i]), float(dev[i]), bool(ok[i]))
        for i in range(len(TRIPLETS))
    ]
    if n_ok < cfg.min_valid_triplets:
        raise InsufficientGeometryError(
            f"only {n_ok} usable triplets (need {cfg.min_valid_triplets})"
        )
    return float(np.median(dev[ok])), deviations
