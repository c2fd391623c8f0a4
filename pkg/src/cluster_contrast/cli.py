"""Batch command line: full-pipeline analysis, alpha diagnostics, and serving.

Output is rendered through the deterministic JSON writer, so identical
inputs and flags produce byte-identical documents. Exit codes: 0 success,
2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, jsonio
from .alpha import alpha_grid, select_alpha
from .cpca import NumericalError
from .dataset import DatasetError, load_bundle
from .pipeline import AnalysisParams, analyze, prepare

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="dataset bundle (JSON)")
    parser.add_argument("--output", help="write JSON here instead of stdout")
    parser.add_argument("--eps", type=float, help="DBSCAN radius (embedding units)")
    parser.add_argument("--min-pts", type=int, help="DBSCAN core threshold")
    parser.add_argument("--labels", help="JSON file with a label array overriding the bundle")
    parser.add_argument("--gamma", type=float, default=0.5, help="variance ratio constraint")
    parser.add_argument("--q", type=int, default=40, help="number of alpha candidates")
    parser.add_argument("--alpha-min", type=float, default=0.1)
    parser.add_argument("--alpha-max", type=float, default=1000.0)
    parser.add_argument("--threads", type=int, default=1, help="threads for the alpha scan")
    parser.add_argument("--filter-features", type=float, help="max missing fraction per feature")
    parser.add_argument("--filter-points", type=float, help="max missing fraction per point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cluster-contrast",
        description="Per-cluster feature contributions for 2D embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="run the full pipeline on a bundle")
    _add_common(p_an)
    p_an.add_argument("--delta", type=int, default=40, help="max heatmap rows before aggregation")
    p_an.add_argument("--agg", choices=["max_abs", "mean"], default="max_abs")
    p_an.add_argument("--top-k", type=int, default=3, help="representative features per cluster")

    p_sc = sub.add_parser("alpha-scan", help="alpha diagnostics for one cluster")
    _add_common(p_sc)
    p_sc.add_argument("--cluster", type=int, required=True, help="cluster id (-1 for noise)")

    p_sv = sub.add_parser("serve", help="start the session service")
    p_sv.add_argument("--host", default="127.0.0.1")
    p_sv.add_argument("--port", type=int, default=8040)
    p_sv.add_argument("--data-dir", required=True, help="directory with dataset bundles")
    return parser


def _load(args) -> tuple:
    dataset = load_bundle(args.input)
    if args.labels:
        import json

        with open(args.labels, "r", encoding="utf-8") as fh:
            labels = np.asarray(json.load(fh), dtype=np.int64)
        dataset = dataset.with_labels(labels)
    params = AnalysisParams(
        eps=args.eps,
        min_pts=args.min_pts,
        gamma=args.gamma,
        q=args.q,
        alpha_min=args.alpha_min,
        alpha_max=args.alpha_max,
        threads=args.threads,
        filter_features=args.filter_features,
        filter_points=args.filter_points,
        delta=getattr(args, "delta", 40),
        agg_mode=getattr(args, "agg", "max_abs"),
        top_k=getattr(args, "top_k", 3),
    )
    return dataset, params


def _emit(doc: dict, output: str | None) -> None:
    text = jsonio.dumps(doc)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    else:
        sys.stdout.write(text)
        sys.stdout.write("\n")


def cmd_analyze(args) -> int:
    dataset, params = _load(args)
    result = analyze(dataset, params)
    _emit(result.to_json_dict(), args.output)
    return 0


def cmd_alpha_scan(args) -> int:
    dataset, params = _load(args)
    dataset = prepare(dataset, params)
    grid = alpha_grid(params.q, params.alpha_min, params.alpha_max)
    scan = select_alpha(
        dataset, args.cluster, grid=grid, gamma=params.gamma, threads=params.threads
    )
    _emit(scan.to_json_dict(), args.output)
    return 0


def cmd_serve(args) -> int:
    if not os.path.isdir(args.data_dir):
        raise DatasetError("dataset directory %r does not exist" % args.data_dir)
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "analyze": cmd_analyze,
        "alpha-scan": cmd_alpha_scan,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (DatasetError, OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
