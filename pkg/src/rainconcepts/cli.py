"""Command-line entry point.

Subcommands mirror the pipeline stages; every command accepts
``--config`` (YAML) plus per-field flag overrides, with precedence
file < environment < flags. Exit codes: 0 success, 1 runtime error,
2 configuration error, 3 missing artifact.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

from .config import PipelineConfig, load_config
from .errors import ConfigurationError, MissingArtifactError, RainconceptsError

EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3

#: flags shared by every subcommand, mapped to PipelineConfig fields.
COMMON_FLAGS = {
    "--root": ("root", str, "workspace root for all artifacts"),
    "--seed": ("seed", int, "global random seed"),
    "--d": ("d", int, "principal components kept per concept"),
    "--k1": ("k1", int, "concepts used to gate the neighbor scan"),
    "--k2": ("k2", int, "neighbors returned per query"),
    "--l1-lambda": ("l1_lambda", float, "L1 penalty for prober training"),
    "--epochs": ("epochs", int, "prober training epochs"),
    "--epsilon": ("epsilon", float, "forward-difference step for sensitivity"),
    "--min-samples": ("min_samples", int, "minimum positives per concept"),
    "--min-gap-days": ("min_gap_days", float, "temporal exclusion window"),
    "--rain-threshold": ("rain_threshold", float, "segment foreground threshold (mm/hr)"),
    "--min-segment-pixels": ("min_segment_pixels", int, "minimum segment area"),
    "--grid-size": ("grid_size", int, "synthetic radar grid size"),
    "--n-frames": ("n_frames", int, "synthetic frames to generate"),
    "--cells-per-frame": ("cells_per_frame", int, "synthetic cells per frame"),
    "--host": ("host", str, "service bind address"),
    "--port": ("port", int, "service port"),
    "--threads": ("threads", int, "worker threads (0 = logical cores)"),
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="YAML config file")
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable JSON on stdout")
    for flag, (field, kind, help_text) in COMMON_FLAGS.items():
        parser.add_argument(flag, dest=field, type=kind, default=None,
                            help=help_text)


def _config_from(args: argparse.Namespace) -> PipelineConfig:
    overrides = {field: getattr(args, field, None)
                 for _, (field, _, _) in COMMON_FLAGS.items()}
    return load_config(args.config, overrides)


def _parse_time(text: str) -> datetime:
    # Python 3.10 fromisoformat does not accept a trailing "Z"
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)


def _emit(args, payload: dict, plain: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=1, sort_keys=True))
    else:
        print(plain)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainconcepts",
        description="Concept-based explainability toolkit for precipitation "
                    "segmentation: synthetic data, segment features, concept "
                    "probers, reduced-coordinate retrieval, and attribution.")
    sub = parser.add_subparsers(dest="command", required=True)

    commands = {
        "gen-data": "generate the synthetic radar sequence and toy-model weights",
        "extract": "encode frames, prune channels, and build the feature store",
        "train-probers": "train the per-concept prober ensembles",
        "build-pc": "select per-concept principal components",
        "index": "write the retrieval index manifest",
        "query": "retrieve neighbors for one segment",
        "importance": "compute the concept-importance report",
        "perturb": "shift a frame along a concept direction",
        "bench": "run the retrieval benchmark suite",
        "serve": "start the HTTP service",
    }
    parsers = {}
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_common(p)
        parsers[name] = p

    q = parsers["query"]
    q.add_argument("--time", required=True, help="segment reference time (ISO 8601)")
    q.add_argument("--segment-id", required=True, type=int)

    imp = parsers["importance"]
    imp.add_argument("--wrapper", default="masked_sum",
                     choices=["logit_sum", "masked_sum", "masked_scaled_sum",
                              "masked_pixel_count", "loss"])
    imp.add_argument("--limit", type=int, default=24,
                     help="frames sampled for the report")

    pt = parsers["perturb"]
    pt.add_argument("--time", required=True, help="frame time (ISO 8601)")
    pt.add_argument("--concept-id", required=True, type=int)
    pt.add_argument("--alpha", type=float, nargs="+", default=[1.0],
                    help="one or more signed shift magnitudes")

    b = parsers["bench"]
    b.add_argument("--n-samples", type=int, default=2000)
    b.add_argument("--n-queries", type=int, default=30)
    b.add_argument("--dim", type=int, default=2400)
    b.add_argument("--dims", type=int, nargs="+", default=[15, 100, 300])
    b.add_argument("--signature-coords", type=int, default=300,
                   help="planted signature block size per concept")
    b.add_argument("--n-concepts", type=int, default=6)
    b.add_argument("--methods", nargs="+", default=["full", "pca", "pcnse"],
                   choices=["full", "pca", "pcnse"])
    b.add_argument("--out", help="write the markdown report to this file")
    return parser


def _run(args: argparse.Namespace) -> int:
    from . import pipeline

    cfg = _config_from(args)
    cmd = args.command

    if cmd == "gen-data":
        info = pipeline.gen_data(cfg)
        _emit(args, info, f"wrote {info['frames']} frames and {info['weights']}")
    elif cmd == "extract":
        info = pipeline.extract(cfg)
        _emit(args, info,
              f"{info['segments']} segments from {info['reference_times']} "
              f"times; {info['active_channels']} active channels "
              f"(dim {info['dim']})")
    elif cmd == "train-probers":
        info = pipeline.train_probers(cfg)
        _emit(args, info,
              f"trained concepts {info['trained']}; skipped {info['skipped']}")
    elif cmd == "build-pc":
        info = pipeline.build_pc(cfg)
        _emit(args, info, f"PC map: {info['concepts']} concepts, d={info['d']}")
    elif cmd == "index":
        info = pipeline.build_index(cfg)
        _emit(args, info, f"index at {info['index']} ({info['rows']} rows)")
    elif cmd == "query":
        index = pipeline.open_index(cfg)
        result = pipeline.query_segment(cfg, index, _parse_time(args.time),
                                        args.segment_id)
        payload = pipeline.neighbor_result_to_dict(result)
        lines = [f"concepts used: {payload['concepts_used']}"]
        for n in payload["neighbors"]:
            lines.append(f"  {n['timestamp']} seg {n['segment_id']} "
                         f"dist {n['distance']:.4f}")
        _emit(args, payload, "\n".join(lines))
    elif cmd == "importance":
        report = pipeline.run_importance(cfg, args.wrapper, limit=args.limit)
        _emit(args, json.loads(report.to_json()),
              f"importance ({args.wrapper}) written under {cfg.reports_dir}")
    elif cmd == "perturb":
        payload = pipeline.run_perturb(cfg, _parse_time(args.time),
                                       args.concept_id, args.alpha)
        _emit(args, payload,
              f"perturbed concept {args.concept_id} at {payload['time']} "
              f"for alphas {sorted(payload['perturbed'])}")
    elif cmd == "bench":
        from .bench import BenchConfig, run_benchmark
        bcfg = BenchConfig(n_samples=args.n_samples, n_queries=args.n_queries,
                           dim=args.dim, dims=tuple(args.dims),
                           signature_coords=args.signature_coords,
                           n_concepts=args.n_concepts,
                           methods=tuple(args.methods), seed=cfg.seed,
                           threads=cfg.threads)
        report = run_benchmark(bcfg)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(report.to_markdown() + "\n")
        _emit(args, json.loads(report.to_json()), report.to_markdown())
    elif cmd == "serve":
        from .service import run_service
        run_service(cfg)
    else:  # pragma: no cover - argparse rejects unknown commands
        raise RainconceptsError(f"unknown command {cmd}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except RainconceptsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
