import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from actionstyle.errors import DimensionError, FormatError
from actionstyle.style import (
    Label,
    LdaModel,
    MissingClassError,
    StudyDims,
    TrainedPca,
    fit_lda,
    fit_pca,
    knn_classify,
    knn_k,
    lda_classify,
    load_model,
    pca_project,
    reconstruction_error,
    save_model,
)

# --- PCA ------------------------------------------------------------------------

def test_collinear_samples():
    u = np.array([1.0, 2.0, -2.0]) / 3
    X = np.array([5.0, 1, 1]) + np.outer([-2, -1, 0.5, 3], u)
    m = fit_pca(X, 1)
    assert abs(abs(m.basis[:, 0] @ u) - 1) < 1e-12
    assert reconstruction_error(X, m) < 1e-9


def test_two_symmetric_samples():
    u = np.array([3.0, 4.0])
    m = fit_pca(np.array([u, -u]), 1)
    np.testing.assert_allclose(m.mean, 0, atol=1e-15)
    np.testing.assert_allclose(np.abs(m.basis[:, 0]), u / 5)


def test_full_rank_reconstruction_and_projection():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(8, 50))
    m = fit_pca(X, 20)  # clamped to rank 7
    assert m.d_prime == 7
    coords = pca_project(X, m)
    np.testing.assert_allclose(m.mean + coords @ m.basis.T, X, atol=1e-9)
    np.testing.assert_allclose(m.basis.T @ m.basis, np.eye(7), atol=1e-9)
    np.testing.assert_array_equal(pca_project(m.mean, m), np.zeros(7))
    e1 = m.mean + m.basis[:, 0]
    np.testing.assert_allclose(pca_project(e1, m), np.eye(7)[0], atol=1e-12)
    x = rng.normal(size=50)
    r = (x - m.mean) - m.basis @ pca_project(x, m)
    assert np.abs(m.basis.T @ r).max() < 1e-9


def test_eigenpairs_match_scatter_oracle():
    # toy d <= 4: compare with the characteristic equation of the full scatter
    rng = np.random.default_rng(1)
    for _ in range(20):
        X = rng.normal(size=(10, 4)) * [3, 2, 1, 0.5]
        Xc = X - X.mean(axis=0)
        S = Xc.T @ Xc
        m = fit_pca(X, 4)
        ref = np.sort(np.roots(np.poly(S)).real)[::-1]
        np.testing.assert_allclose(m.eigenvalues, ref, rtol=1e-9)
        for k in range(4):
            v = m.basis[:, k]
            np.testing.assert_allclose(S @ v, m.eigenvalues[k] * v, atol=1e-9 * ref[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 15), st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_reconstruction_error_non_increasing(n, d, seed):
    X = np.random.default_rng(seed).normal(size=(n, d))
    errs = [fit_pca(X, k).reconstruction_error for k in range(1, min(n - 1, d) + 1)]
    assert all(b <= a + 1e-9 * max(errs[0], 1) for a, b in zip(errs, errs[1:]))


def test_pca_errors():
    with pytest.raises(Exception):
        fit_pca(np.zeros((1, 3)), 1)
    m = fit_pca(np.random.default_rng(2).normal(size=(4, 3)), 2)
    with pytest.raises(DimensionError):
        pca_project(np.zeros(4), m)


# --- k-NN -----------------------------------------------------------------------

@pytest.mark.parametrize("n,k", [(25, 5), (16, 5), (1, 1), (2, 1), (9, 3), (36, 7), (48, 7), (49, 7), (50, 7)])
def test_knn_k(n, k):
    assert knn_k(n) == k


def test_knn_single_point_and_majority():
    assert knn_classify([100.0], [[0.0]], [1]) == Label.MALE
    coords = np.array([[0.0], [0.1], [0.2], [5.0], [5.1]])
    labels = [0, 0, 1, 1, 1]
    assert knn_classify([0.05], coords, labels, k=3) == Label.FEMALE
    assert knn_classify([4.0], coords, labels, k=3) == Label.MALE


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_knn_odd_k_never_ties(n, seed):
    k = knn_k(n)
    assert k % 2 == 1 and 1 <= k <= n


# --- LDA ------------------------------------------------------------------------

def test_lda_1d():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    y = [0, 0, 1, 1]
    m = fit_lda(X, y, ridge=0)
    np.testing.assert_allclose(m.c, 5.5 * m.w[0])
    assert [lda_classify(x, m) for x in X] == [Label.FEMALE] * 2 + [Label.MALE] * 2


def test_lda_isotropic_direction():
    rng = np.random.default_rng(3)
    # exact isotropy: S_W proportional to I by construction
    base = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    m0, m1 = np.array([10.0, 3.0]), np.array([-4.0, 8.0])
    X = np.vstack([base + m0, base + m1])
    model = fit_lda(X, [0] * 4 + [1] * 4)
    d = m0 - m1
    cos = model.w @ d / np.linalg.norm(model.w) / np.linalg.norm(d)
    assert np.arccos(min(cos, 1.0)) < 1e-6


def test_lda_label_swap():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(size=(6, 5)), rng.normal(size=(6, 5)) + 2])
    y = np.array([0] * 6 + [1] * 6)
    a = fit_lda(X, y)
    b = fit_lda(X, 1 - y)
    np.testing.assert_allclose(a.w, -b.w, rtol=1e-8)
    for x in rng.normal(size=(20, 5)) + 1:
        assert int(lda_classify(x, a)) == 1 - int(lda_classify(x, b))


def test_lda_boundary_and_means():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(size=(5, 3)), rng.normal(size=(5, 3)) + 3])
    y = [0] * 5 + [1] * 5
    m = fit_lda(X, y)
    m0, m1 = X[:5].mean(axis=0), X[5:].mean(axis=0)
    assert lda_classify(m0, m) == Label.FEMALE and lda_classify(m1, m) == Label.MALE
    mid = (m0 + m1) / 2
    forced = LdaModel(m.w, float(mid @ m.w), m.positive_label)
    assert lda_classify(mid, forced) != m.positive_label
    for x in rng.normal(size=(50, 3)) * 3:
        side = m.positive_label if float(np.dot(x, m.w)) > m.c else Label(1 - int(m.positive_label))
        assert lda_classify(x, m) == side


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_lda_scale_invariance(s, seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(size=(8, 3)), rng.normal(size=(8, 3)) + 1.5])
    y = [0] * 8 + [1] * 8
    a = fit_lda(X, y, ridge=0)
    b = fit_lda(s * X, y, ridge=0)
    Q = rng.normal(size=(20, 3)) * 2
    assert [lda_classify(q, a) for q in Q] == [lda_classify(s * q, b) for q in Q]


def test_lda_missing_class():
    with pytest.raises(MissingClassError):
        fit_lda(np.zeros((3, 2)), [0, 0, 0])


# --- persistence ----------------------------------------------------------------

def _dims():
    return StudyDims(3, 2, 2)  # d = 10


def test_pca_model_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(6, 10))
    m = fit_pca(X, 3)
    tp = TrainedPca(m, pca_project(X, m), np.array([0, 1, 0, 1, 0, 1]))
    save_model(tmp_path / "m.bin", tp, _dims(), {"note": "x"})
    got, dims, meta = load_model(tmp_path / "m.bin")
    assert dims == _dims() and meta["note"] == "x" and meta["kind"] == "pca"
    np.testing.assert_array_equal(got.model.basis, m.basis)
    np.testing.assert_array_equal(got.train_coords, tp.train_coords)
    np.testing.assert_array_equal(got.train_labels, tp.train_labels)


def test_lda_model_roundtrip_and_corruption(tmp_path):
    m = LdaModel(np.arange(10.0), 1.25, Label.MALE)
    p = tmp_path / "l.bin"
    save_model(p, m, _dims())
    got, dims, _ = load_model(p)
    np.testing.assert_array_equal(got.w, m.w)
    assert got.c == 1.25 and got.positive_label == Label.MALE
    raw = p.read_bytes()
    p.write_bytes(raw[:-3])
    with pytest.raises(FormatError):
        load_model(p)
    p.write_bytes(raw[:8] + (99).to_bytes(4, "little") + raw[12:])
    with pytest.raises(FormatError, match="version"):
        load_model(p)
    p.write_bytes(raw + b"\0")
    with pytest.raises(FormatError):
        load_model(p)


def test_model_dims_mismatch(tmp_path):
    with pytest.raises(DimensionError):
        save_model(tmp_path / "x", LdaModel(np.ones(4), 0.0, Label.MALE), _dims())
