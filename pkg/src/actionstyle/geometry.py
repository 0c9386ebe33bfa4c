"""Cameras, projection, body-point triplets and plane homographies.

Points are numpy arrays in homogeneous coordinates: image points are
3-vectors, world points 4-vectors. Homographies and fundamental matrices are
plain 3x3 arrays defined up to scale.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfigurationError, InsufficientDataError

JOINTS = (
    "head",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_hand",
    "r_hand",
    "l_knee",
    "r_knee",
    "l_foot",
    "r_foot",
)
N_JOINTS = len(JOINTS)

# all C(11, 3) = 165 triplets, each with a < b < c
TRIPLETS = np.array(list(itertools.combinations(range(N_JOINTS), 3)), dtype=np.intp)
N_TRIPLETS = len(TRIPLETS)

COLLINEAR_TOL = 1e-10
AREA_GATE = 1e-4


def homogeneous(p):
    """Append a unit last coordinate to Euclidean points (last axis)."""
    p = np.asarray(p, dtype=float)
    return np.concatenate([p, np.ones(p.shape[:-1] + (1,))], axis=-1)


def dehomogenize(p):
    p = np.asarray(p, dtype=float)
    return p[..., :-1] / p[..., -1:]


def normalize_point(p):
    """Scale a homogeneous point so its last coordinate is 1 when possible,
    otherwise to unit norm."""
    p = np.asarray(p, dtype=float)
    if p[-1] != 0:
        return p / p[-1]
    return p / np.linalg.norm(p)


def normalize_homography(h):
    """Divide by the largest-magnitude entry (sign included)."""
    h = np.asarray(h, dtype=float)
    flat = h.reshape(h.shape[:-2] + (-1,))
    idx = np.argmax(np.abs(flat), axis=-1)
    pivot = np.take_along_axis(flat, idx[..., None], axis=-1)[..., None]
    return h / pivot


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True, eq=False)
class CameraModel:
    """A finite projective camera given by its 3x4 projection matrix."""

    projection: np.ndarray

    def __post_init__(self):
        p = np.array(self.projection, dtype=float)
        if p.shape != (3, 4):
            raise ValueError(f"projection must be 3x4, got {p.shape}")
        if abs(np.linalg.det(p[:, :3])) <= 1e-12 * np.abs(p[:, :3]).max() ** 3:
            raise DegenerateConfigurationError("camera is not finite (singular left 3x3 block)")
        p.setflags(write=False)
        object.__setattr__(self, "projection", p)

    @classmethod
    def from_parameters(cls, K, R, center):
        """P = K R [I | -C]."""
        K = np.asarray(K, dtype=float)
        R = np.asarray(R, dtype=float)
        c = np.asarray(center, dtype=float).reshape(3)
        return cls(K @ R @ np.hstack([np.eye(3), -c[:, None]]))

    @property
    def center(self):
        m = self.projection[:, :3]
        return -np.linalg.solve(m, self.projection[:, 3])

    @property
    def principal_axis(self):
        """Unit viewing direction pointing in front of the camera."""
        m = self.projection[:, :3]
        v = np.linalg.det(m) * m[2]
        return v / np.linalg.norm(v)

    def depth(self, X):
        """Signed depth of Euclidean world points (positive in front)."""
        X = np.asarray(X, dtype=float)
        w = homogeneous(X) @ self.projection.T
        m = self.projection[:, :3]
        return np.sign(np.linalg.det(m)) * w[..., 2] / np.linalg.norm(m[2])


def project(camera: CameraModel, p):
    """Project homogeneous world point(s) (..., 4) to image point(s) (..., 3).

    Results are scaled so the last coordinate is 1.
    """
    p = np.asarray(p, dtype=float)
    x = p @ camera.projection.T
    scale = np.linalg.norm(camera.projection) * np.linalg.norm(p, axis=-1)
    if np.any(np.linalg.norm(x, axis=-1) <= 1e-12 * scale):
        raise DegenerateConfigurationError("point projects from the camera center")
    w = x[..., 2:3]
    if np.any(w == 0):
        raise DegenerateConfigurationError("point lies on the camera's principal plane")
    return x / w


def project_points(camera: CameraModel, X):
    """Euclidean world points (..., 3) to Euclidean image points (..., 2)."""
    return dehomogenize(project(camera, homogeneous(X)))


def _unit(p):
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


def _triple_dets(p):
    """|det| of each 3-subset of 4 unit-normalized homogeneous points (..., 4, 3)."""
    u = _unit(p)
    subsets = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
    return np.stack([np.abs(np.linalg.det(u[..., list(s), :])) for s in subsets], axis=-1)


def _basis_matrix(p):
    """Matrix sending the canonical projective basis to the 4 points p (..., 4, 3)."""
    a = np.swapaxes(p[..., :3, :], -1, -2)
    lam = np.linalg.solve(a, p[..., 3, :, None])[..., 0]
    return a * lam[..., None, :]


def homographies_from_4pts(src, dst):
    """Batched four-point homography; no degeneracy checks.

    src, dst: (..., 4, 3) homogeneous points. Returns (..., 3, 3) with
    dst_i ~ H src_i.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    b_src = _basis_matrix(src)
    b_dst = _basis_matrix(dst)
    return b_dst @ np.linalg.inv(b_src)


def homography_from_4pts(src, dst):
    """Exact homography mapping four source points onto four destination points.

    Points may be given as (4, 2) Euclidean or (4, 3) homogeneous arrays.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape[-1] == 2:
        src = homogeneous(src)
    if dst.shape[-1] == 2:
        dst = homogeneous(dst)
    if src.shape != (4, 3) or dst.shape != (4, 3):
        raise ValueError("expected four points per view")
    for name, pts in (("source", src), ("destination", dst)):
        if _triple_dets(pts).min() < COLLINEAR_TOL:
            raise DegenerateConfigurationError(f"three {name} points are collinear")
    return normalize_homography(homographies_from_4pts(src, dst))


def plane_homography_oracle(cam1: CameraModel, cam2: CameraModel, triplet3d):
    """Homography induced between two cameras by the plane through three world points.

    Built by projecting the triplet and one extra in-plane point into both
    views, so it is independent of any fundamental-matrix estimate.
    """
    X = np.asarray(triplet3d, dtype=float)
    if X.shape[-1] == 4:
        X = dehomogenize(X)
    a, b, c = X
    normal = np.cross(b - a, c - a)
    extent = max(np.linalg.norm(b - a), np.linalg.norm(c - a), np.linalg.norm(c - b))
    if np.linalg.norm(normal) < 1e-10 * extent**2:
        raise DegenerateConfigurationError("triplet is collinear")
    normal = normal / np.linalg.norm(normal)
    for cam in (cam1, cam2):
        if abs(normal @ (cam.center - a)) < 1e-10 * max(extent, np.linalg.norm(cam.center - a)):
            raise DegenerateConfigurationError("triplet plane passes through a camera center")
    # barycentric (-0.2, 0.3, 0.9): off every edge line of the triangle
    d = a + 0.3 * (b - a) + 0.9 * (c - a)
    pts = homogeneous(np.stack([a, b, c, d]))
    return homography_from_4pts(project(cam1, pts), project(cam2, pts))


def hartley_transform(x):
    """Similarity moving 2-D points (k, 2) to zero mean and RMS distance sqrt(2)."""
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=0)
    rms = np.sqrt(((x - mean) ** 2).sum(axis=1).mean())
    if rms == 0:
        raise DegenerateConfigurationError("all points coincide")
    s = np.sqrt(2.0) / rms
    return np.array([[s, 0, -s * mean[0]], [0, s, -s * mean[1]], [0, 0, 1.0]])


def estimate_fundamental(x1, x2):
    """Normalized eight-point estimate of F with x2^T F x1 = 0 and rank 2.

    x1, x2: (k, 2) Euclidean image points (or (k, 3) homogeneous), k >= 8.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape[-1] == 3:
        x1 = dehomogenize(x1)
    if x2.shape[-1] == 3:
        x2 = dehomogenize(x2)
    if len(x1) != len(x2):
        raise ValueError("correspondence arrays differ in length")
    if len(x1) < 8:
        raise InsufficientDataError(f"need at least 8 correspondences, got {len(x1)}")
    t1 = hartley_transform(x1)
    t2 = hartley_transform(x2)
    p1 = homogeneous(x1) @ t1.T
    p2 = homogeneous(x2) @ t2.T
    A = (p2[:, :, None] * p1[:, None, :]).reshape(len(p1), 9)
    _, s, vt = np.linalg.svd(A)
    if s[7] < 1e-10 * s[0]:
        raise DegenerateConfigurationError("correspondences do not determine a unique F")
    f = vt[-1].reshape(3, 3)
    u, sf, vft = np.linalg.svd(f)
    f = u @ np.diag([sf[0], sf[1], 0.0]) @ vft
    f = t2.T @ f @ t1
    return f / np.linalg.norm(f)


def fundamental_from_cameras(cam1: CameraModel, cam2: CameraModel):
    """F with x2^T F x1 = 0 for two finite cameras: [e2]x M2 M1^-1.

    Meant for synthetic experiments where the cameras are known.
    """
    m1 = cam1.projection[:, :3]
    m2 = cam2.projection[:, :3]
    e2 = cam2.projection @ np.append(cam1.center, 1.0)
    f = skew(e2) @ m2 @ np.linalg.inv(m1)
    return f / np.linalg.norm(f)


def epipoles(f):
    """Return (e1, e2): unit null vectors with F e1 = 0 and F^T e2 = 0."""
    u, _, vt = np.linalg.svd(np.asarray(f, dtype=float))
    return vt[-1], u[:, -1]


def homography_from_F_3pts(f, x1, x2):
    """Plane homography from F and one triplet of point correspondences.

    The three triplet points plus the epipole form four correspondences
    (every plane-induced homography maps e1 to e2), which fix H exactly.
    When the triplet pairs are epipolar-consistent the result equals the
    plane homography; otherwise it still maps the four points exactly.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape[-1] == 2:
        x1 = homogeneous(x1)
    if x2.shape[-1] == 2:
        x2 = homogeneous(x2)
    e1, e2 = epipoles(f)
    src = np.vstack([x1, e1])
    dst = np.vstack([x2, e2])
    for pts in (src, dst):
        dets = _triple_dets(pts)
        if dets[0] < COLLINEAR_TOL:
            raise DegenerateConfigurationError("triplet is collinear")
        if dets[1:].min() < COLLINEAR_TOL:
            raise DegenerateConfigurationError("triplet point at or aligned with the epipole")
    return normalize_homography(homographies_from_4pts(src, dst))


def triangle_areas(pts):
    """Area of every triplet triangle for poses (..., 11, 2) -> (..., 165)."""
    a = pts[..., TRIPLETS[:, 0], :]
    b = pts[..., TRIPLETS[:, 1], :]
    c = pts[..., TRIPLETS[:, 2], :]
    u = b - a
    v = c - a
    return 0.5 * np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])


def usable_triplets(pts):
    """Degeneracy gate for poses (..., 11, 2): triangle area above
    AREA_GATE x (bounding-box diagonal)^2."""
    span = pts.max(axis=-2) - pts.min(axis=-2)
    diag2 = (span**2).sum(axis=-1)
    return triangle_areas(pts) > AREA_GATE * diag2[..., None]


def triplet_homographies(pts1, pts2, e1, e2):
    """Homographies of all 165 triplets for every pose pairing.

    pts1: (n1, 11, 2) poses in view 1, pts2: (n2, 11, 2) poses in view 2,
    e1, e2: epipoles (3-vectors). Returns H of shape (n1, n2, 165, 3, 3)
    mapping view 1 to view 2, and a boolean validity mask (n1, n2, 165).
    """
    pts1 = np.asarray(pts1, dtype=float)
    pts2 = np.asarray(pts2, dtype=float)
    n1, n2 = len(pts1), len(pts2)
    h1 = homogeneous(pts1)[:, TRIPLETS]  # (n1, 165, 3, 3)
    h2 = homogeneous(pts2)[:, TRIPLETS]
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    src = np.concatenate([h1, np.broadcast_to(e1, h1.shape[:-2] + (1, 3))], axis=-2)
    dst = np.concatenate([h2, np.broadcast_to(e2, h2.shape[:-2] + (1, 3))], axis=-2)
    ok1 = usable_triplets(pts1) & (_triple_dets(src).min(axis=-1) > 1e-8)
    ok2 = usable_triplets(pts2) & (_triple_dets(dst).min(axis=-1) > 1e-8)
    valid = ok1[:, None, :] & ok2[None, :, :]

    # replace gated-out configurations by a well-posed dummy before batching
    dummy = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [1.0, 1.0, 1.0]])
    b1 = np.where(ok1[..., None, None], src, dummy)
    b2 = np.where(ok2[..., None, None], dst, dummy)
    inv_src = np.linalg.inv(_basis_matrix(b1))  # (n1, 165, 3, 3)
    b_dst = _basis_matrix(b2)  # (n2, 165, 3, 3)
    H = b_dst[None, :, :, :, :] @ inv_src[:, None, :, :, :]
    assert H.shape == (n1, n2, len(TRIPLETS), 3, 3)
    return H, valid
