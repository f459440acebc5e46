"""Command-line entry point.

Exit status: 0 success, 1 invalid input, 2 I/O failure, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import glob
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .core import validate_inputs
from .distance_metrics import aggregate_distance_stats, point_distances
from .class_metrics import confusion_matrix
from .errors import EvaluationError
from .hard_points import compute_hard_points, evaluate
from .ingestion import (
    emit_report,
    load_config,
    parse_cloud_file,
    write_cloud_file,
)
from .reference import naive_confusion, naive_distance_stats
from .spatial_index import brute_force_nearest, build_class_indexes
from .synthetic import SceneSpec, generate_scene, load_scene_spec, write_scene
from .thresholds import PRESETS
from .tiles import load_tile_stack, merge_tile_predictions

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_ORACLE = 0, 1, 2, 3
ORACLE_TOLERANCE = 1e-9
ORACLE_MAX_POINTS = 200_000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _resolve_config(value: str):
    if not os.path.exists(value) and value.lower() in PRESETS:
        ref = resources.files("spateval") / "presets" / f"{value.lower()}.toml"
        with resources.as_file(ref) as path:
            return load_config(path)
    return load_config(value)


def _use_color(stream) -> bool:
    if "NO_COLOR" in os.environ:
        return False
    return bool(os.environ.get("FORCE_COLOR")) or stream.isatty()


def _fmt(value, digits=4) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def format_summary(report, color: bool = False) -> str:
    bold = (lambda s: f"\033[1m{s}\033[0m") if color else (lambda s: s)
    names = list(report.class_names)
    width = max([len(m) for m in report.models] + [5])
    cw = max([len(n) for n in names] + [8])
    lines = []
    for scope in report.scopes:
        pct = 100.0 * scope.scope.fraction
        lines.append(bold(f"[{scope.label}] {scope.selected_count} points ({pct:.2f}%)"))
        head = f"{'model':<{width}}  {'metric':<6}  {'all':>8}  " + "  ".join(f"{n:>{cw}}" for n in names)
        lines.append(head)
        for model, m in scope.per_model.items():
            cls, dist = m.classification, m.distance
            rows = [
                ("OA", cls.overall_accuracy, [None] * len(names)),
                ("IoU", cls.mean_iou, [cls.iou_per_class[c] for c in range(len(names))]),
                ("MDE", dist.mmde, [d.mde for d in dist.per_class]),
                ("rho", None, [d.rho for d in dist.per_class]),
                ("mu", None, [d.mu for d in dist.per_class]),
            ]
            for label, total, per in rows:
                cells = "  ".join(f"{_fmt(v) if label != 'OA' else '':>{cw}}" for v in per)
                lines.append(f"{model:<{width}}  {label:<6}  {_fmt(total):>8}  {cells}".rstrip())
        lines.append("")
    return "\n".join(lines)


def cmd_evaluate(args) -> int:
    config = _resolve_config(args.config)
    input_path = args.input or config.input_path
    if not input_path:
        raise EvaluationError("no --input given and config has no 'input'")
    scope = args.scope or config.scope
    cloud, preds = parse_cloud_file(input_path, config)
    ctx = validate_inputs(cloud, preds, config.thresholds, config.class_names)
    report = evaluate(ctx, scope=scope, workers=args.threads)

    output = args.output or config.output_path
    if output:
        fmt = args.format or ("csv" if str(output).lower().endswith(".csv") else "json")
        echo = config.echo()
        echo["scope"] = scope
        emit_report(report, output, fmt, config_echo=echo)
    if args.export_hard_mask:
        mask = compute_hard_points(cloud, preds).mask
        write_cloud_file(args.export_hard_mask, cloud, preds, hard_mask=mask)
    print(format_summary(report, color=_use_color(sys.stdout)))
    return EXIT_OK


def cmd_merge_tiles(args) -> int:
    config = _resolve_config(args.config)
    paths = sorted(set(p for pattern in args.inputs for p in glob.glob(pattern)))
    if not paths:
        raise FileNotFoundError(f"no tile files match {args.inputs}")
    merged = merge_tile_predictions(load_tile_stack(paths, config))
    cloud = merged.cloud(config.n_classes)
    write_cloud_file(args.output, cloud, merged.predictions)
    d = merged.diagnostics
    print(
        f"merged {d.row_count} rows from {d.tile_count} tiles into {d.point_count} points; "
        f"{d.duplicated_points} duplicated (max x{d.max_multiplicity}); "
        f"{d.gt_conflicts} ground-truth conflicts",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = load_scene_spec(args.spec) if args.spec else SceneSpec()
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    scene = generate_scene(spec)
    paths = write_scene(scene, args.output_dir)
    print(f"wrote {scene.cloud.point_count} points to {paths['scene']}")
    return EXIT_OK


def _close(a, b) -> bool:
    if a is None or b is None:
        return a is b
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= ORACLE_TOLERANCE


def cmd_oracle_check(args) -> int:
    config = _resolve_config(args.config)
    cloud, preds = parse_cloud_file(args.input, config)
    if cloud.point_count > ORACLE_MAX_POINTS:
        raise EvaluationError(
            f"oracle-check handles at most {ORACLE_MAX_POINTS} points, got {cloud.point_count}"
        )
    ctx = validate_inputs(cloud, preds, config.thresholds, config.class_names, require_models=False)
    indexes = build_class_indexes(cloud)
    n = cloud.point_count
    rng = np.random.Generator(np.random.PCG64(args.seed))
    sample = np.sort(rng.choice(n, size=min(args.samples, n), replace=False))
    members = [cloud.positions[cloud.gt_labels == c] for c in range(cloud.n_classes)]

    for c in range(cloud.n_classes):
        fast = indexes.nearest_distances(c, cloud.positions[sample], workers=args.threads)
        for i, d in zip(sample.tolist(), fast.tolist()):
            slow = brute_force_nearest(members[c], cloud.positions[i])
            if not _close(d, slow):
                print(f"distance mismatch at point {i}, class {c}: index {d!r} vs brute force {slow!r}",
                      file=sys.stderr)
                return EXIT_ORACLE

    mask = np.zeros(n, dtype=bool)
    mask[sample] = True
    tau = [config.thresholds.tau.get(c, math.inf) for c in range(cloud.n_classes)]
    for p in ctx.predictions:
        if naive_confusion(cloud.gt_labels, p.pred_labels, np.ones(n, bool), cloud.n_classes) != \
                confusion_matrix(cloud.gt_labels, p.pred_labels, None, cloud.n_classes):
            print(f"confusion matrix mismatch for model {p.model_name}", file=sys.stderr)
            return EXIT_ORACLE
        d = point_distances(cloud, p, indexes, ctx.thresholds, workers=args.threads)
        fast = aggregate_distance_stats(d, cloud.n_classes, mask)
        slow = naive_distance_stats(cloud.positions, cloud.gt_labels, p.pred_labels, mask, tau, cloud.n_classes)
        for f, s in zip(fast.per_class, slow.per_class):
            for field in ("predicted_count", "error_count", "distant_count", "near_count", "mde", "rho", "mu"):
                if not _close(getattr(f, field), getattr(s, field)):
                    bad = [i for i in sample.tolist()
                           if p.pred_labels[i] == f.class_id and d.is_error[i]]
                    print(f"model {p.model_name}, class {f.class_id}: {field} fast "
                          f"{getattr(f, field)!r} vs naive {getattr(s, field)!r}; "
                          f"first affected point {bad[0] if bad else 'n/a'}", file=sys.stderr)
                    return EXIT_ORACLE
        if not _close(fast.mmde, slow.mmde):
            print(f"model {p.model_name}: mmde {fast.mmde!r} vs naive {slow.mmde!r}", file=sys.stderr)
            return EXIT_ORACLE
    print(f"oracle check passed: {len(sample)} sampled points, {len(ctx.predictions)} model(s)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spateval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    threads = dict(type=int, default=os.cpu_count() or 1, help="worker threads for index queries")

    p = sub.add_parser("evaluate", help="compute metrics on the full set and/or hard points")
    p.add_argument("--input")
    p.add_argument("--config", required=True, help="TOML config path or preset name")
    p.add_argument("--scope", choices=("full", "hard", "both"))
    p.add_argument("--output")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--threads", **threads)
    p.add_argument("--export-hard-mask", metavar="PATH")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("merge-tiles", help="average overlapping tile probabilities")
    p.add_argument("--inputs", nargs="+", required=True, help="tile file glob(s)")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_merge_tiles)

    p = sub.add_parser("generate", help="write a synthetic scene with two contrasting models")
    p.add_argument("--spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("oracle-check", help="cross-check fast paths against brute force")
    p.add_argument("--input", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", **threads)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("spateval: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except EvaluationError as exc:
        print(f"spateval: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"spateval: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
