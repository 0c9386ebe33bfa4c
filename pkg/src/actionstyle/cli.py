"""Command-line driver: synth | align | features | train-pca | train-lda | classify | eval.

Exit codes: 0 success, 1 usage, 2 data/config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import errors
from .alignment import save_error_matrix_csv, save_path_csv
from .dissimilarity import DissimilarityConfig
from .features import write_matrix_csv, write_pgm
from .ingest import StudyConfig, load_subjects, load_tracks
from .pipeline import compare_sequences
from .style import (
    DegenerateSeparationError,
    Label,
    TrainedPca,
    fit_lda,
    fit_pca,
    knn_classify,
    knn_k,
    lda_classify,
    load_model,
    pca_project,
    save_model,
)
from .study import FeatureSet, discover_tracks, extract_features, run_study, select_reference, write_population
from .synth import ACTIONS

log = logging.getLogger("actionstyle")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _d_prime_range(text):
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}") from None
    if not 1 <= a <= b:
        raise argparse.ArgumentTypeError("need 1 <= A <= B")
    return a, b


def _subject_list(text):
    try:
        return sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated subject ids, got {text!r}") from None


def _config(args):
    cfg = StudyConfig.load(args.config) if getattr(args, "config", None) else StudyConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "action", None):
        cfg.actions = list(ACTIONS) if args.action == "all" else [args.action]
    if getattr(args, "d_prime", None):
        cfg.d_prime_min, cfg.d_prime_max = args.d_prime
    if getattr(args, "method", None):
        cfg.method = args.method
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    return cfg.validate()


def cmd_synth(args):
    cfg = _config(args)
    paths = write_population(cfg, args.out, force=args.force)
    print(f"wrote {len(paths)} track files to {Path(args.out) / 'tracks'}")


def cmd_align(args):
    cfg = _config(args)
    target = load_tracks(args.target)
    reference = load_tracks(args.reference)
    dcfg = DissimilarityConfig(cfg.mu, cfg.deviation_cap, cfg.min_valid_triplets)
    res = compare_sequences(target.poses, reference.poses, cfg.key_poses, cfg.pdm_width, dcfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_error_matrix_csv(res.errmat, out / "error_matrix.csv")
    save_path_csv(res.path, out / "path.csv")
    write_matrix_csv(res.tdm, out / "tdm.csv")
    write_matrix_csv(res.pdm, out / "pdm.csv")
    write_pgm(res.tdm, out / "tdm.pgm", vmax=cfg.deviation_cap)
    write_pgm(res.pdm, out / "pdm.pgm", vmax=cfg.deviation_cap)
    print(f"alignment cost {res.path.cumulative_cost:.6g} over {len(res.path.pairs)} steps")


def cmd_features(args):
    cfg = _config(args)
    data = Path(args.data)
    labels = load_subjects(data / "subjects.csv")
    action = cfg.actions[0]
    tracks = discover_tracks(data / "tracks", action)
    if not tracks:
        raise errors.InsufficientDataError(f"no {action} tracks in {data / 'tracks'}")
    fs, _, _ = extract_features(tracks, labels, cfg, select_reference(tracks, cfg))
    fs.save(args.out)
    print(f"{len(fs.X)} style vectors of dimension {fs.dims.d} -> {args.out}")


def _feature_subset(args):
    fs = FeatureSet.load(args.features)
    if args.subjects:
        fs = fs.select(np.isin(fs.subject, args.subjects))
        if len(fs.X) == 0:
            raise errors.InsufficientDataError("no samples for the requested subjects")
    return fs


def cmd_train_pca(args):
    fs = _feature_subset(args)
    model = fit_pca(fs.X, args.d_prime)
    coords = pca_project(fs.X, model)
    meta = {"action": fs.action, "reference": list(fs.reference), "train_subjects": sorted(set(fs.subject.tolist())),
            "samples": int(len(fs.X)), "reconstruction_error": model.reconstruction_error}
    save_model(args.out, TrainedPca(model, coords, fs.label.astype(int)), fs.dims, meta)
    print(f"PCA model d'={model.d_prime} -> {args.out}")


def cmd_train_lda(args):
    fs = _feature_subset(args)
    model = fit_lda(fs.X, fs.label)
    meta = {"action": fs.action, "reference": list(fs.reference), "train_subjects": sorted(set(fs.subject.tolist())),
            "samples": int(len(fs.X)), "threshold": model.c, "positive_label": model.positive_label.name.lower(),
            "caption": f"{fs.action} (threshold: {model.c:.5g})"}
    save_model(args.out, model, fs.dims, meta)
    print(meta["caption"])


def cmd_classify(args):
    fs = _feature_subset(args)
    model, dims, _ = load_model(args.model)
    if dims != fs.dims:
        raise errors.DimensionError(f"model dims {dims} do not match features {fs.dims}")
    if isinstance(model, TrainedPca):
        k = args.k or knn_k(len(model.train_coords))
        coords = pca_project(fs.X, model.model)
        pred = [knn_classify(q, model.train_coords, model.train_labels, k) for q in coords]
    else:
        pred = [lda_classify(x, model) for x in fs.X]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject", "instance", "camera", "truth", "predicted"])
        for s, i, c, t, p in zip(fs.subject, fs.instance, fs.camera, fs.label, pred):
            w.writerow([int(s), int(i), int(c), Label(int(t)).name.lower(), Label(p).name.lower()])
    acc = float(np.mean([int(p) == int(t) for p, t in zip(pred, fs.label)]))
    print(f"accuracy {acc:.3f} on {len(pred)} samples -> {args.out}")


def cmd_eval(args):
    cfg = _config(args)
    out = Path(args.out)
    if args.data:
        data = Path(args.data)
    else:
        data = out / "data"
        write_population(cfg, data, force=args.force)
    rows = run_study(data, out, cfg, method=cfg.method)
    for r in rows:
        d = "" if r.d_prime is None else r.d_prime
        print(f"{r.action:9s} {r.method:4s} {d!s:>3} male {r.male_rate:.3f} female {r.female_rate:.3f}")


def build_parser():
    p = _Parser(prog="actionstyle", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, action=True):
        sp.add_argument("--config", help="study configuration JSON")
        sp.add_argument("--seed", type=int)
        if action:
            sp.add_argument("--action", choices=list(ACTIONS) + ["all"])

    sp = sub.add_parser("synth", help="write the synthetic population as track files")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("align", help="align one track file to a reference and dump P, path, TDM, PDM")
    common(sp, action=False)
    sp.add_argument("--target", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_align)

    sp = sub.add_parser("features", help="style vectors for every non-reference track of an action")
    common(sp)
    sp.add_argument("--data", required=True, help="directory with tracks/ and subjects.csv")
    sp.add_argument("--out", required=True, help="output .npz")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_features)

    for name, func, helptext in (("train-pca", cmd_train_pca, "fit an eigenstyle model"),
                                 ("train-lda", cmd_train_lda, "fit a Fisher discriminant")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--features", required=True)
        sp.add_argument("--subjects", type=_subject_list, help="training subject ids, e.g. 2,3,7,8")
        sp.add_argument("--out", required=True)
        if name == "train-pca":
            sp.add_argument("--d-prime", type=int, default=10)
        sp.set_defaults(func=func)

    sp = sub.add_parser("classify", help="classify style vectors with a saved model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--subjects", type=_subject_list)
    sp.add_argument("--k", type=int, help="k-NN override")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("eval", help="run the full protocol and write results")
    common(sp)
    sp.add_argument("--data", help="tracks/ + subjects.csv directory; synthesized when omitted")
    sp.add_argument("--out", required=True)
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--d-prime", type=_d_prime_range, help="sweep range A..B")
    sp.add_argument("--method", choices=("pca", "lda", "both"))
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (errors.ConditioningError, errors.InsufficientGeometryError,
            errors.DegenerateConfigurationError, DegenerateSeparationError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (errors.ActionStyleError, FileExistsError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
