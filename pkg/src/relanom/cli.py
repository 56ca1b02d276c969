"""Command-line interface: fit, score, explain, grid, compare, synth, ecdf.

Model files are versioned JSON; every output file is written atomically.
Exit code 0 on success, 1 with a one-line diagnostic on stderr otherwise
(argparse itself exits 2 on unknown flags).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .dataset import Dataset, load_csv, write_csv
from .degree import vertex_degrees
from .graph import DistanceMetric, dump_graph, rbf_similarity_matrix
from .model_io import ModelBundle, load_model, save_model
from .popularity import fit_popularity
from .preprocess import apply_preprocessor, fit_preprocessor
from .scoring import explain_deviations, label_top_fraction
from .shortest_path import fit_shortest_path
from .synth import LABEL_ANOMALOUS, scraping_analogue, wifi_analogue

__all__ = ["main"]

DEFAULT_GAMMA = {"popularity": 0.2, "vertex_degree": 0.5, "shortest_path": 0.2}

_METRICS = {"l2": DistanceMetric.EUCLIDEAN, "l1": DistanceMetric.MANHATTAN}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relanom",
        description="Relative anomaly detection on kernel similarity graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a detector and write a model file")
    fit.add_argument("--method", required=True, choices=sorted(DEFAULT_GAMMA))
    fit.add_argument("--input", required=True,
                     help="training CSV (header row; a trailing 'label' column is ignored)")
    fit.add_argument("--output", "--model", dest="model", required=True,
                     help="output model JSON path")
    fit.add_argument("--gamma", type=float, default=None,
                     help="kernel bandwidth (default depends on method)")
    fit.add_argument("--metric", choices=("l2", "l1"), default="l2")
    fit.add_argument("--preprocess", choices=("box-cox", "standardize"),
                     default="box-cox")
    fit.add_argument("--q", type=float, default=0.5,
                     help="normal-set fraction for shortest_path")
    fit.add_argument("--k", type=int, default=None,
                     help="kNN sparsification for shortest_path graphs")
    fit.add_argument("--sparsify", type=float, default=0.0,
                     help="drop this fraction of smallest similarity pairs")
    fit.add_argument("--start", choices=("uniform", "random", "rff"),
                     default="uniform", help="power iteration start vector")
    fit.add_argument("--rff-dim", type=int, default=256)
    fit.add_argument("--tol", type=float, default=1e-8)
    fit.add_argument("--max-iter", type=int, default=10_000)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--train-scores", default=None,
                     help="also write per-row training scores to this CSV")
    fit.add_argument("--dump-graph", default=None,
                     help="write the fitted graph in i,j,s coordinate format")

    score = sub.add_parser("score", help="score new observations with a model")
    score.add_argument("--model", required=True)
    score.add_argument("--input", required=True)
    score.add_argument("--output", required=True)
    score.add_argument("--top-fraction", type=float, default=0.2)
    score.add_argument("--neg-log-display", action="store_true",
                       help="add a -ln(-score) display column")

    explain = sub.add_parser("explain", help="explain one observation's deviation")
    explain.add_argument("--model", required=True)
    explain.add_argument("--input", required=True)
    explain.add_argument("--row", type=int, default=0)
    explain.add_argument("--p-normal", type=float, default=0.5,
                         help="DORA threshold under which training points count as normal")
    explain.add_argument("--metric", choices=("l1", "l2"), default="l1")
    explain.add_argument("--output", default=None, help="optional CSV output")

    synth = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    synth.add_argument("--dataset", required=True, choices=("scraping", "wifi"))
    synth.add_argument("--n", type=int, default=1000)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--output", required=True)

    compare = sub.add_parser(
        "compare", help="precision/recall of all methods on a labeled CSV")
    compare.add_argument("--input", required=True,
                         help="CSV with a trailing 'label' column")
    compare.add_argument("--top-fraction", type=float, default=0.2)
    compare.add_argument("--preprocess", choices=("box-cox", "standardize"),
                         default="box-cox")
    compare.add_argument("--q", type=float, default=0.5)
    compare.add_argument("--gamma-popularity", type=float, default=0.2)
    compare.add_argument("--gamma-vertex-degree", type=float, default=0.5)
    compare.add_argument("--gamma-shortest-path", type=float, default=0.2)
    compare.add_argument("--output", default=None, help="optional CSV report")

    grid = sub.add_parser("grid", help="score a rectangular grid (2-D models)")
    grid.add_argument("--model", required=True)
    grid.add_argument("--output", required=True)
    grid.add_argument("--resolution", type=int, default=50)
    grid.add_argument("--bounds", type=float, nargs=4, default=None,
                      metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
                      help="raw-space bounds (default: training data range)")

    ecdf = sub.add_parser("ecdf", help="export the training-score ECDF for plotting")
    ecdf.add_argument("--model", required=True)
    ecdf.add_argument("--output", required=True)
    ecdf.add_argument("--neg-log-display", action="store_true")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, OSError, FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    handler = {
        "fit": _cmd_fit,
        "score": _cmd_score,
        "explain": _cmd_explain,
        "synth": _cmd_synth,
        "compare": _cmd_compare,
        "grid": _cmd_grid,
        "ecdf": _cmd_ecdf,
    }[args.command]
    return handler(args)


def _load_features(path) -> Dataset:
    # Tolerate the trailing label column that synth emits; labels are for
    # evaluation only and never enter a fit or a scoring run.
    loaded = load_csv(path, label_column="label")
    return loaded[0] if isinstance(loaded, tuple) else loaded


def _fit_bundle(
    raw: Dataset,
    method: str,
    *,
    gamma: float | None = None,
    metric: DistanceMetric = DistanceMetric.EUCLIDEAN,
    preprocess: str = "box-cox",
    q: float = 0.5,
    k: int | None = None,
    sparsify: float = 0.0,
    start: str = "uniform",
    rff_dim: int = 256,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    seed: int = 0,
):
    """Fit one method end to end; returns (bundle, fitted graph)."""
    if gamma is None:
        gamma = DEFAULT_GAMMA[method]
    transforms = fit_preprocessor(raw, preprocess)
    data = apply_preprocessor(raw, transforms)
    config = {"seed": seed, "tol": tol, "max_iter": max_iter}
    if method == "popularity":
        model = fit_popularity(
            data, gamma, metric=metric, sparsify=sparsify, start=start,
            rff_dim=rff_dim, seed=seed, tol=tol, max_iter=max_iter,
        )
        config.update({"sparsify": sparsify, "start": start,
                       "rff_dim": rff_dim if start == "rff" else None})
        state = {
            "s_vec": model.s_vec,
            "lambda1": model.lambda1,
            "denom": model.denom,
            "iterations": model.iterations,
            "residual": model.residual,
        }
        graph = model.graph
    elif method == "vertex_degree":
        graph = rbf_similarity_matrix(data, gamma, metric)
        vd = vertex_degrees(graph)
        # symmetric dense S: the stationary distribution is exactly vd / sum(vd)
        # (detailed balance); iterating would stall on well-separated clusters
        state = {"vd": vd.vd, "stationary": vd.vd / vd.vd.sum()}
    else:
        model = fit_shortest_path(data, gamma, q, k, metric=metric)
        config.update({"q": q, "k": k})
        state = {
            "vd": model.vd.vd,
            "normal_set": model.normal_set,
            "ra_q": model.ra_q,
        }
        graph = model.graph
    bundle = ModelBundle(
        method=method,
        preprocess=preprocess,
        metric=metric,
        gamma=gamma,
        config=config,
        transforms=transforms,
        training=data,
        state=state,
    )
    return bundle, graph


def _cmd_fit(args) -> int:
    raw = _load_features(args.input)
    bundle, graph = _fit_bundle(
        raw, args.method,
        gamma=args.gamma, metric=_METRICS[args.metric], preprocess=args.preprocess,
        q=args.q, k=args.k, sparsify=args.sparsify, start=args.start,
        rff_dim=args.rff_dim, tol=args.tol, max_iter=args.max_iter, seed=args.seed,
    )
    save_model(args.model, bundle)
    if args.train_scores:
        _write_train_scores(args.train_scores, bundle)
    if args.dump_graph:
        dump_graph(graph, args.dump_graph)
    boundary = [tf.column for tf in bundle.transforms if tf.boundary]
    if boundary:
        print(
            "warning: transform fit hit a search boundary for column(s) "
            + ", ".join(boundary),
            file=sys.stderr,
        )
    print(f"fitted {args.method} model on {bundle.training.n} rows -> {args.model}")
    return 0


def _write_train_scores(path, bundle: ModelBundle) -> None:
    if bundle.method == "vertex_degree":
        header = ["row_index", "vertex_degree", "stationary_probability"]
        stationary = bundle.state.get("stationary")
        rows = [
            (i, vd, "" if stationary is None else stationary[i])
            for i, vd in enumerate(bundle.state["vd"])
        ]
    elif bundle.method == "popularity":
        header = ["row_index", "relative_anomaly", "dora"]
        scores = bundle.train_scores_rowwise()
        doras = bundle.dora_of(scores)
        rows = list(zip(range(len(scores)), scores, doras))
    else:
        header = ["row_index", "ra_q", "dora", "is_normal_set"]
        scores = bundle.train_scores_rowwise()
        doras = bundle.dora_of(scores)
        normal = np.zeros(len(scores), dtype=bool)
        normal[bundle.state["normal_set"]] = True
        rows = list(zip(range(len(scores)), scores, doras, normal))
    write_csv(path, header, rows)


def _cmd_score(args) -> int:
    bundle = load_model(args.model)
    raw = _load_features(args.input)
    scores = bundle.score_raw(raw)
    doras = bundle.dora_of(scores)
    labels = label_top_fraction(scores, args.top_fraction)
    header = ["row_index", bundle.score_column, "dora", "label"]
    columns = [np.arange(raw.n), _export_scores(bundle, scores), doras, labels]
    if bundle.method == "shortest_path":
        header.append("is_normal_set")
        columns.append(scores == 0.0)
    if args.neg_log_display:
        header.append("display_score")
        columns.append(_neg_log_display(scores))
    write_csv(args.output, header, zip(*columns))
    print(f"scored {raw.n} rows -> {args.output} ({int(labels.sum())} labeled)")
    return 0


def _export_scores(bundle: ModelBundle, scores: np.ndarray) -> np.ndarray:
    # The baseline's conventional export is the raw vertex degree
    # (ascending = more anomalous); other methods export as-is.
    return -scores if bundle.method == "vertex_degree" else scores


def _neg_log_display(scores: np.ndarray):
    out = []
    for s in scores:
        out.append(-math.log(-s) if s < 0.0 else "")
    return out


def _cmd_explain(args) -> int:
    bundle = load_model(args.model)
    raw = _load_features(args.input)
    if not 0 <= args.row < raw.n:
        raise ValueError(f"--row {args.row} out of range for {raw.n} rows")
    point = bundle.to_model_space(raw).values[args.row]
    train_dora = bundle.dora_of(bundle.train_scores_rowwise())
    explanation = explain_deviations(
        point, bundle.training, train_dora, args.p_normal, _METRICS[args.metric],
    )
    rows = explanation.rows()
    print(f"closest normal training row: {explanation.closest_index}")
    print(f"{'feature':<20}{'anomalous':>14}{'closest_normal':>16}{'difference':>14}")
    for name, av, cv, diff in rows:
        print(f"{name:<20}{av:>14.6g}{cv:>16.6g}{diff:>14.6g}")
    if args.output:
        write_csv(
            args.output,
            ["feature", "anomalous_value", "closest_normal_value", "difference"],
            rows,
        )
    return 0


def _cmd_synth(args) -> int:
    maker = scraping_analogue if args.dataset == "scraping" else wifi_analogue
    data, labels = maker(args.n, args.seed)
    header = data.columns + ["label"]
    rows = [list(vals) + [lab] for vals, lab in zip(data.values, labels)]
    write_csv(args.output, header, rows)
    print(f"wrote {data.n} rows -> {args.output}")
    return 0


def _cmd_compare(args) -> int:
    loaded = load_csv(args.input, label_column="label")
    if not isinstance(loaded, tuple):
        raise ValueError(f"{args.input}: needs a trailing 'label' column")
    raw, labels = loaded
    truth = labels == LABEL_ANOMALOUS
    if not truth.any():
        raise ValueError("no rows labeled anomalous in the input")
    gammas = {
        "popularity": args.gamma_popularity,
        "vertex_degree": args.gamma_vertex_degree,
        "shortest_path": args.gamma_shortest_path,
    }
    report = []
    for method in ("popularity", "vertex_degree", "shortest_path"):
        bundle, _ = _fit_bundle(
            raw, method, gamma=gammas[method], preprocess=args.preprocess, q=args.q,
        )
        predicted = label_top_fraction(bundle.train_scores_rowwise(), args.top_fraction)
        precision, recall = _precision_recall(predicted, truth)
        report.append((method, precision, recall))
        print(f"{method:<16} precision={precision:.4f} recall={recall:.4f}")
    if args.output:
        write_csv(args.output, ["method", "precision", "recall"], report)
    return 0


def _precision_recall(predicted: np.ndarray, truth: np.ndarray):
    tp = int(np.sum(predicted & truth))
    fp = int(np.sum(predicted & ~truth))
    fn = int(np.sum(~predicted & truth))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def _cmd_grid(args) -> int:
    bundle = load_model(args.model)
    if bundle.training.d != 2:
        raise ValueError("grid scoring requires a 2-D model")
    if args.resolution < 2:
        raise ValueError("resolution must be at least 2")
    if args.bounds is None:
        (x0, x1), (y0, y1) = (
            (tf.raw_min, tf.raw_max) for tf in bundle.transforms
        )
    else:
        x0, x1, y0, y1 = args.bounds
    if not (x1 > x0 and y1 > y0):
        raise ValueError("bounds must satisfy xmax > xmin and ymax > ymin")
    xs = np.linspace(x0, x1, args.resolution)
    ys = np.linspace(y0, y1, args.resolution)
    raw_points = np.array([(x, y) for x in xs for y in ys])
    grid_raw = Dataset(raw_points, list(bundle.training.columns))
    scores = bundle.score_raw(grid_raw)
    write_csv(
        args.output,
        [bundle.training.columns[0], bundle.training.columns[1], "score"],
        zip(raw_points[:, 0], raw_points[:, 1], scores),
    )
    print(f"scored {scores.size} grid points -> {args.output}")
    return 0


def _cmd_ecdf(args) -> int:
    bundle = load_model(args.model)
    scores = bundle.train_scores.sorted_scores
    n = scores.size
    header = ["score", "ecdf"]
    columns = [scores, (np.arange(1, n + 1)) / n]
    if args.neg_log_display:
        header.append("display_score")
        columns.append(_neg_log_display(scores))
    write_csv(args.output, header, zip(*columns))
    print(f"wrote {n} ECDF rows -> {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
