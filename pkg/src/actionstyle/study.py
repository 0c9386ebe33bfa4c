"""Study harness: synthetic population on disk, feature extraction and
leave-one-subject-out gender classification."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .dissimilarity import DissimilarityConfig
from .errors import ConfigurationError, InsufficientDataError
from .features import study_dims, write_matrix_csv, write_pgm
from .ingest import (
    ResultRow,
    StudyConfig,
    TrackFile,
    load_subjects,
    load_tracks,
    save_results,
    save_subjects,
    save_tracks,
    track_filename,
)
from .pipeline import compare_sequences
from .style import Label, StudyDims, fit_lda, fit_pca, knn_classify, knn_k, lda_classify, pca_project
from .synth import generate_sequence, make_camera_ring, make_style_population

log = logging.getLogger(__name__)


# --- synthetic data on disk --------------------------------------------------

def write_population(cfg: StudyConfig, out_dir, force=False):
    """Generate the synthetic population and write one track file per
    (action, subject, instance, camera) plus subjects.csv. Returns the paths."""
    out_dir = Path(out_dir)
    tracks_dir = out_dir / "tracks"
    if tracks_dir.exists() and any(tracks_dir.iterdir()) and not force:
        raise FileExistsError(f"{tracks_dir} is not empty (use --force to overwrite)")
    tracks_dir.mkdir(parents=True, exist_ok=True)
    cameras = make_camera_ring(cfg.cameras, seed=cfg.seed)
    members = make_style_population(subjects=cfg.subjects_per_class, instances=cfg.instances,
                                    jitter=cfg.jitter, seed=cfg.seed)
    paths = []
    for a_idx, action in enumerate(cfg.actions):
        for m in members:
            params = replace(m.params, noise_sigma=cfg.noise_sigma)
            seed = [cfg.seed, a_idx, m.subject, m.instance]
            seq = generate_sequence(action, params, cfg.frames, seed=np_seed(seed), cameras=cameras,
                                    label=m.label)
            for cam_id, img in enumerate(seq.images, start=1):
                p = tracks_dir / track_filename(action, m.subject, m.instance, cam_id)
                save_tracks(TrackFile(action, m.subject, m.instance, cam_id, img), p)
                paths.append(p)
    save_subjects({m.subject: m.label for m in members}, out_dir / "subjects.csv")
    cfg.save(out_dir / "config.json")
    return paths


def np_seed(parts):
    """Stable integer seed from a list of ints."""
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def discover_tracks(tracks_dir, action):
    paths = sorted(Path(tracks_dir).glob(f"{action}_*.trk"))
    tracks = [load_tracks(p) for p in paths]
    tracks = [t for t in tracks if t.action == action]
    tracks.sort(key=lambda t: (t.subject, t.instance, t.camera))
    return tracks


def select_reference(tracks, cfg: StudyConfig):
    subjects = sorted({t.subject for t in tracks})
    if not subjects:
        raise InsufficientDataError("no tracks found")
    ref_subject = subjects[0] if cfg.reference_subject is None else cfg.reference_subject
    for t in tracks:
        if (t.subject, t.instance, t.camera) == (ref_subject, cfg.reference_instance, cfg.reference_camera):
            return t
    raise ConfigurationError(
        f"reference track subject={ref_subject} instance={cfg.reference_instance} "
        f"camera={cfg.reference_camera} not found"
    )


# --- features ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FeatureSet:
    action: str
    X: np.ndarray  # (samples, d)
    subject: np.ndarray
    instance: np.ndarray
    camera: np.ndarray
    label: np.ndarray
    dims: StudyDims
    reference: tuple  # (subject, instance, camera)

    def select(self, mask):
        return replace(self, X=self.X[mask], subject=self.subject[mask], instance=self.instance[mask],
                       camera=self.camera[mask], label=self.label[mask])

    def save(self, path):
        np.savez(path, X=self.X, subject=self.subject, instance=self.instance, camera=self.camera,
                 label=self.label, dims=np.array([self.dims.N, self.dims.n, self.dims.W]),
                 reference=np.array(self.reference), action=np.array(self.action))

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as z:
            N, n, W = (int(v) for v in z["dims"])
            return cls(str(z["action"]), z["X"], z["subject"], z["instance"], z["camera"],
                       z["label"], StudyDims(N, n, W), tuple(int(v) for v in z["reference"]))


def _dissimilarity_config(cfg: StudyConfig):
    return DissimilarityConfig(cfg.mu, cfg.deviation_cap, cfg.min_valid_triplets)


def _features_job(args):
    target, reference, cfg = args
    return compare_sequences(target, reference, cfg.key_poses, cfg.pdm_width,
                             _dissimilarity_config(cfg))


def sequence_features(tracks, reference: TrackFile, cfg: StudyConfig):
    """SequenceFeatures for every track, in order, using a bounded worker pool."""
    jobs = [(t.poses, reference.poses, cfg) for t in tracks]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_features_job, jobs, chunksize=4))
    return [_features_job(j) for j in jobs]


def extract_features(tracks, labels: dict, cfg: StudyConfig, reference: TrackFile | None = None):
    """Style vectors of every track except those of the reference subject."""
    reference = reference or select_reference(tracks, cfg)
    targets = [t for t in tracks if t.subject != reference.subject]
    if not targets:
        raise InsufficientDataError("no non-reference tracks")
    missing = sorted({t.subject for t in targets} - set(labels))
    if missing:
        raise ConfigurationError(f"subjects without a label: {missing}")
    feats = sequence_features(targets, reference, cfg)
    dims = study_dims(cfg.key_poses - 1, cfg.pdm_width)
    return FeatureSet(
        action=reference.action,
        X=np.vstack([f.x for f in feats]),
        subject=np.array([t.subject for t in targets]),
        instance=np.array([t.instance for t in targets]),
        camera=np.array([t.camera for t in targets]),
        label=np.array([int(labels[t.subject]) for t in targets]),
        dims=dims,
        reference=(reference.subject, reference.instance, reference.camera),
    ), feats, targets


# --- evaluation --------------------------------------------------------------

def make_folds(subject_labels: dict, reference_subject, per_class):
    """Leave-one-subject-out folds as (test_subject, train_subjects).

    Training takes `per_class` subjects of each class, walking the sorted
    subject list cyclically from the test subject. Reference, training and
    test subjects are disjoint in every fold.
    """
    pool = sorted(s for s in subject_labels if s != reference_subject)
    folds = []
    for k, test in enumerate(pool):
        order = pool[k + 1:] + pool[:k]
        train = []
        for lab in Label:
            same = [s for s in order if subject_labels[s] == lab]
            if not same:
                raise InsufficientDataError(f"no training subject of class {lab.name} for fold {test}")
            train.extend(same[:per_class])
        check_disjoint(reference_subject, sorted(train), [test])
        folds.append((test, sorted(train)))
    return folds


def check_disjoint(reference_subject, train, test):
    sets = {"reference": {reference_subject}, "train": set(train), "test": set(test)}
    names = list(sets)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            both = sets[a] & sets[b]
            if both:
                raise ConfigurationError(f"subjects {sorted(both)} appear in both {a} and {b} sets")


@dataclass
class FoldOutcome:
    test_subject: int
    train_subjects: list
    truth: np.ndarray
    pca_pred: dict  # d' -> predictions
    lda_pred: np.ndarray | None
    lda_threshold: float | None
    lda_scores: np.ndarray | None  # test projections, normalized so class means sit at +-1


@dataclass
class Evaluation:
    action: str
    folds: list
    d_primes: list

    def rates(self, pred_key):
        truth = np.concatenate([f.truth for f in self.folds])
        if pred_key == "lda":
            pred = np.concatenate([f.lda_pred for f in self.folds])
        else:
            pred = np.concatenate([f.pca_pred[pred_key] for f in self.folds])
        male = truth == int(Label.MALE)
        female = ~male
        m = float((pred[male] == truth[male]).mean()) if male.any() else float("nan")
        f = float((pred[female] == truth[female]).mean()) if female.any() else float("nan")
        return m, f, float((pred == truth).mean())

    def accuracy(self, pred_key):
        return self.rates(pred_key)[2]

    def rows(self, method="both"):
        out = []
        if method in ("pca", "both"):
            for d in self.d_primes:
                m, f, _ = self.rates(d)
                out.append(ResultRow(self.action, "pca", d, m, f))
        if method in ("lda", "both"):
            m, f, _ = self.rates("lda")
            out.append(ResultRow(self.action, "lda", None, m, f))
        return out


def evaluate(fs: FeatureSet, subject_labels: dict, cfg: StudyConfig, d_primes=None, method="both"):
    """Leave-one-subject-out PCA/k-NN sweep and LDA on a feature set."""
    d_primes = list(d_primes or range(cfg.d_prime_min, cfg.d_prime_max + 1))
    folds = make_folds({s: subject_labels[s] for s in set(fs.subject.tolist())},
                       fs.reference[0], cfg.train_subjects_per_class)
    outcomes = []
    for test, train in folds:
        tr = np.isin(fs.subject, train)
        te = fs.subject == test
        Xtr, ytr = fs.X[tr], fs.label[tr]
        Xte, yte = fs.X[te], fs.label[te]
        pca_pred = {}
        if method in ("pca", "both"):
            model = fit_pca(Xtr, max(d_primes))
            ctr = pca_project(Xtr, model)
            cte = pca_project(Xte, model)
            k = cfg.knn_k or knn_k(len(Xtr))
            for d in d_primes:
                dd = min(d, model.d_prime)
                pca_pred[d] = np.array([int(knn_classify(q[:dd], ctr[:, :dd], ytr, k)) for q in cte])
        lda_pred = thr = scores = None
        if method in ("lda", "both"):
            lda = fit_lda(Xtr, ytr)
            lda_pred = np.array([int(lda_classify(x, lda)) for x in Xte])
            thr = lda.c
            y_tr = lda.project(Xtr)
            half = 0.5 * abs(y_tr[ytr == 0].mean() - y_tr[ytr == 1].mean())
            scores = (lda.project(Xte) - lda.c) / (half if half > 0 else 1.0)
        outcomes.append(FoldOutcome(test, train, yte, pca_pred, lda_pred, thr, scores))
    return Evaluation(fs.action, outcomes, d_primes)


def projection_histogram(ev: Evaluation, bins=20, limit=3.0):
    """Counts of normalized LDA test projections per class; rows (lo, hi, female, male)."""
    scores = np.concatenate([f.lda_scores for f in ev.folds])
    truth = np.concatenate([f.truth for f in ev.folds])
    edges = np.linspace(-limit, limit, bins + 1)
    clipped = np.clip(scores, -limit, limit)
    fem, _ = np.histogram(clipped[truth == 0], edges)
    mal, _ = np.histogram(clipped[truth == 1], edges)
    return [(edges[i], edges[i + 1], int(fem[i]), int(mal[i])) for i in range(bins)]


def write_histogram(rows, path):
    with open(path, "w") as fh:
        fh.write("bin_lo,bin_hi,female_count,male_count\n")
        for lo, hi, f, m in rows:
            fh.write(f"{lo:.3f},{hi:.3f},{f},{m}\n")


def threshold_caption(action, threshold):
    return f"{action} (threshold: {threshold:.5g})"


def run_study(data_dir, out_dir, cfg: StudyConfig, actions=None, d_primes=None, method="both"):
    """Full protocol per action; writes results.csv, histograms, heatmaps and metadata.json."""
    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = load_subjects(data_dir / "subjects.csv")
    rows = []
    meta = {"config": asdict(cfg), "actions": {}}
    for action in actions or cfg.actions:
        tracks = discover_tracks(data_dir / "tracks", action)
        if not tracks:
            raise InsufficientDataError(f"no tracks for action {action!r} in {data_dir / 'tracks'}")
        reference = select_reference(tracks, cfg)
        fs, feats, targets = extract_features(tracks, labels, cfg, reference)
        fs.save(out_dir / f"features_{action}.npz")
        ev = evaluate(fs, labels, cfg, d_primes, method)
        rows.extend(ev.rows(method))
        write_heatmaps(feats, targets, reference, cfg, out_dir / "heatmaps" / action)
        info = {"reference": list(fs.reference), "samples": int(len(fs.X)), "d": fs.dims.d,
                "folds": [{"test": f.test_subject, "train": f.train_subjects} for f in ev.folds]}
        if method in ("lda", "both"):
            write_histogram(projection_histogram(ev), out_dir / f"lda_histogram_{action}.csv")
            thresholds = [f.lda_threshold for f in ev.folds]
            info["lda_thresholds"] = thresholds
            info["lda_caption"] = threshold_caption(action, thresholds[0])
            info["lda_accuracy"] = ev.accuracy("lda")
        if method in ("pca", "both"):
            info["pca_accuracy"] = {str(d): ev.accuracy(d) for d in ev.d_primes}
        meta["actions"][action] = info
        log.info("%s: done (%d samples)", action, len(fs.X))
    save_results(rows, out_dir / "results.csv")
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return rows


def write_heatmaps(feats, targets, reference, cfg: StudyConfig, out_dir):
    """TDM/PDM heatmaps (PGM and CSV) for each subject's first instance seen by
    the reference camera."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for f, t in zip(feats, targets):
        if t.instance != 1 or t.camera != reference.camera:
            continue
        stem = f"s{t.subject:02d}_i{t.instance}_c{t.camera}"
        write_pgm(f.tdm, out_dir / f"{stem}_tdm.pgm", vmax=cfg.deviation_cap)
        write_pgm(f.pdm, out_dir / f"{stem}_pdm.pgm", vmax=cfg.deviation_cap)
        write_matrix_csv(f.tdm, out_dir / f"{stem}_tdm.csv")
        write_matrix_csv(f.pdm, out_dir / f"{stem}_pdm.csv")
