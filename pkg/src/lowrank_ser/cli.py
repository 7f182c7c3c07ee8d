"""Command-line front end: ``extract``, ``reduce``, ``eval`` and ``plot``.

Exit codes: 0 success, 1 user or data error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import FeatureTable, fuse_tables, load_feature_csv, load_manifest, load_wav, write_table_csv
from .errors import (DataFormatError, DisconnectedGraph, EigenFailure, LowRankError,
                     NotConverged, TrainingDiverged)
from .evaluation import (CLASSIFIERS, MODES, FoldError, PipelineSpec, cross_validate,
                         make_folds, report_json)
from .plotting import PlotSpec, render_svg
from .reducers import METHODS, ReducerParams, embedding_table, reduce
from .rqa import RqaConfig, extract_rqa_features

NUMERICAL = (EigenFailure, NotConverged, TrainingDiverged)


class CliError(Exception):
    def __init__(self, msg, code=1):
        super().__init__(msg)
        self.code = code


def _atomic_write(path, text):
    """Write via a temporary sibling so a failed run never leaves a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _write_table(table, path):
    fd, tmp = tempfile.mkstemp(dir=Path(path).parent, suffix=".csv")
    os.close(fd)
    try:
        write_table_csv(table, tmp)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _epsilon_rule(text):
    kind, _, value = text.partition(":")
    aliases = {"fixed": "fixed", "fraction": "fraction_of_max", "fraction_of_max": "fraction_of_max",
               "rr": "target_rr", "target_rr": "target_rr"}
    if kind not in aliases or not value:
        raise argparse.ArgumentTypeError(
            "epsilon rule must be fixed:<eps>, fraction:<rho> or rr:<rate>")
    return aliases[kind], float(value)


def _tau(text):
    return text if text == "auto" else int(text)


def cmd_extract(args):
    cfg = RqaConfig(frame_len=args.frame_len, hop=args.hop, delay_tau=args.tau,
                    d_embed=args.dim, epsilon_rule=args.epsilon, l_min=args.lmin,
                    v_min=args.vmin)
    entries = load_manifest(args.manifest)
    rows, vecs, names = [], [], None
    for i, (wav, utt) in enumerate(entries, start=1):
        if not wav.is_file():
            raise CliError(f"{wav}: no such file")
        try:
            vec, names = extract_rqa_features(load_wav(wav), cfg)
        except (DataFormatError, ValueError) as exc:
            raise CliError(f"{wav}: {exc}") from exc
        print(f"[{i}/{len(entries)}] {wav}", file=sys.stderr)
        rows.append(utt)
        vecs.append(vec)
    names = names or []
    X = np.array(vecs).reshape(len(rows), len(names))
    _write_table(FeatureTable(rows, X, names), args.out)
    return 0


def cmd_reduce(args):
    table = load_feature_csv(args.input)
    params = ReducerParams(L=args.L, k=args.neighbors, metric=args.metric, seed=args.seed,
                           max_iter=args.max_iter, mds_init=args.init,
                           ae_epochs=args.epochs, ae_activation=args.activation)
    try:
        emb = reduce(table.X, args.method, params)
    except DisconnectedGraph as exc:
        raise CliError(f"{args.method}: {exc} (try a larger --neighbors)") from exc
    except NUMERICAL:
        raise
    except (LowRankError, ValueError) as exc:
        raise CliError(f"{args.method}: {exc}") from exc
    _write_table(embedding_table(table, emb), args.out)
    return 0


def cmd_eval(args):
    table = load_feature_csv(args.features)
    if args.fuse:
        table = fuse_tables(table, load_feature_csv(args.fuse))
    clf = {"lr": "softmax"}.get(args.clf, args.clf)
    grid = None
    if args.grid:
        grid = tuple(int(g) if clf == "knn" else float(g) for g in args.grid.split(","))
    spec = PipelineSpec(dr_method=args.dr, L=args.L, k=args.neighbors, seed=args.seed,
                        metric=args.metric, classifier=clf, grid=grid,
                        embedding_mode=args.mode, inner_folds=args.inner_folds,
                        reducer={"max_iter": args.max_iter, "ae_epochs": args.epochs})
    plan = make_folds(table.rows, args.scheme)
    try:
        report = cross_validate(table, plan, spec)
    except FoldError as exc:
        code = 2 if isinstance(exc.cause, NUMERICAL) else 1
        raise CliError(str(exc), code) from exc
    _atomic_write(args.out, report_json(report))
    agg = report["aggregate"]
    print(f"{report['scheme']} {spec.dr_method}->{report['L']}D {clf}: "
          f"WA={agg['WA']:.4f} UA={agg['UA']:.4f}")
    return 0


def cmd_plot(args):
    table = load_feature_csv(args.input)
    if table.m != 2:
        raise CliError(f"{args.input}: plot needs a 2-D embedding, found {table.m} columns")
    spec = PlotSpec(width=args.width, height=args.height, radius=args.radius,
                    x_label=args.xlabel or table.column_names[0],
                    y_label=args.ylabel or table.column_names[1], title=args.title)
    _atomic_write(args.out, render_svg(table.X, [r.label for r in table.rows], spec))
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    common.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean")
    common.add_argument("--neighbors", type=int, default=10,
                        help="neighbourhood size for graph-based methods")
    common.add_argument("--out", required=True, help="output file")

    p = argparse.ArgumentParser(prog="lowrank-ser",
                                description="Low-rank feature representations for speech emotion recognition")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", parents=[common], help="RQA features from WAV files")
    ex.add_argument("manifest", help="CSV with columns path,id,speaker,session,label")
    ex.add_argument("--frame-len", type=float, default=0.025, help="frame length in seconds")
    ex.add_argument("--hop", type=float, default=0.010, help="frame hop in seconds")
    ex.add_argument("--tau", type=_tau, default="auto", help="delay in samples or 'auto'")
    ex.add_argument("--dim", type=int, default=3, help="embedding dimension")
    ex.add_argument("--epsilon", type=_epsilon_rule, default=("fraction_of_max", 0.15),
                    help="threshold rule: fixed:<eps>, fraction:<rho> or rr:<rate>")
    ex.add_argument("--lmin", type=int, default=2)
    ex.add_argument("--vmin", type=int, default=2)
    ex.set_defaults(func=cmd_extract)

    rd = sub.add_parser("reduce", parents=[common], help="reduce a feature table")
    rd.add_argument("input")
    rd.add_argument("--method", required=True, choices=METHODS)
    rd.add_argument("--L", type=int, required=True, help="target dimension")
    rd.add_argument("--max-iter", type=int, default=300, help="MDS iterations")
    rd.add_argument("--init", choices=("cmds", "random"), default="cmds", help="MDS start")
    rd.add_argument("--epochs", type=int, default=200, help="autoencoder epochs")
    rd.add_argument("--activation", choices=("relu", "linear"), default="relu")
    rd.set_defaults(func=cmd_reduce)

    ev = sub.add_parser("eval", parents=[common], help="speaker-independent cross-validation")
    ev.add_argument("features")
    ev.add_argument("--fuse", help="second feature CSV to concatenate by utterance id")
    ev.add_argument("--scheme", choices=("lospo", "loso"), required=True)
    ev.add_argument("--dr", choices=METHODS + ("none",), default="pca")
    ev.add_argument("--L", type=int, default=10)
    ev.add_argument("--clf", choices=CLASSIFIERS + ("lr",), default="knn")
    ev.add_argument("--grid", help="comma-separated hyper-parameter grid (k or C)")
    ev.add_argument("--mode", choices=MODES, default="transductive")
    ev.add_argument("--inner-folds", type=int, default=3)
    ev.add_argument("--max-iter", type=int, default=300, help="MDS iterations")
    ev.add_argument("--epochs", type=int, default=200, help="autoencoder epochs")
    ev.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plot", help="SVG scatter of a 2-D embedding")
    pl.add_argument("input")
    pl.add_argument("--out", required=True)
    pl.add_argument("--width", type=int, default=640)
    pl.add_argument("--height", type=int, default=480)
    pl.add_argument("--radius", type=float, default=3.0)
    pl.add_argument("--xlabel", default="")
    pl.add_argument("--ylabel", default="")
    pl.add_argument("--title", default="")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (LowRankError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
