"""Command-line front door tying the pipeline stages together.

Subcommands: detect, train, predict, fuse, eval, show-config. Every
command is a pure function of its input files and flags: identical
inputs give byte-identical outputs. Exit codes: 0 success, 2 input
format error, 3 validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from vehiclepipe.config import CONFIG_ENV_VAR, RunConfig, config_path_from_env, load_config
from vehiclepipe.errors import EXIT_FORMAT_ERROR, PipelineError, ValidationError
from vehiclepipe.features import OTHER, PASSENGER, FeatureVector, LabeledSample, concat_features
from vehiclepipe.filtering import FilterConfig, filter_detections
from vehiclepipe.formats import read_feature_file, read_grid_file
from vehiclepipe.fusion import ConfidenceTable, fuse
from vehiclepipe.geometry import BoundingBox, Detection, ImageGeometry, ValidRegion, map_to_source
from vehiclepipe.grid import decode
from vehiclepipe.manifest import DatasetManifest, load_manifest
from vehiclepipe.metrics import ConfusionMatrix, DetectionCounts, balanced_accuracy, detection_pr, match_detections
from vehiclepipe.records import (
    read_confidences,
    read_detections,
    read_labels,
    write_confidences,
    write_detections,
    write_labels,
)
from vehiclepipe.svm import load_model, predict_confidence, save_model, train


def cmd_detect(grids_path: str, out_path: str, cfg: RunConfig) -> None:
    """Decode, filter, and map every grid record to source coordinates."""
    spec, grids = read_grid_file(grids_path)
    region_box = (
        BoundingBox(*cfg.region)
        if cfg.region is not None
        else BoundingBox(0.0, 0.0, spec.image_width, spec.image_height)
    )
    filter_cfg = FilterConfig(
        overlap_threshold=cfg.overlap_threshold, region=ValidRegion(region_box)
    )
    geometry = ImageGeometry(
        detect_width=spec.image_width,
        detect_height=spec.image_height,
        source_width=cfg.source_width or spec.image_width,
        source_height=cfg.source_height or spec.image_height,
    )
    rows = []
    for image_id, grid in grids:
        candidates = decode(grid, cfg.score_threshold)
        kept = filter_detections(candidates, filter_cfg)
        mapped = [
            Detection(
                box=map_to_source(det.box, geometry),
                confidence=det.confidence,
                class_id=det.class_id,
            )
            for det in kept
        ]
        rows.append((image_id, mapped))
    write_detections(out_path, rows)


def _load_features_by_id(manifest: DatasetManifest, path: str) -> dict[str, FeatureVector]:
    return {rec.image_id: rec for rec in read_feature_file(manifest.resolve(path))}


def _feature_for_record(manifest, record, layer: str, cache: dict) -> FeatureVector:
    def lookup(tag: str) -> FeatureVector:
        ref = record.feature_files.get(tag)
        if ref is None:
            raise ValidationError(
                f"image {record.image_id!r} has no {tag} feature reference"
            )
        if ref not in cache:
            cache[ref] = _load_features_by_id(manifest, ref)
        return cache[ref][record.image_id]

    if layer == "fc6fc7":
        return concat_features(lookup("fc6"), lookup("fc7"))
    return lookup(layer)


def cmd_train(
    manifest_path: str,
    out_path: str,
    layer: str,
    cfg: RunConfig,
    split: str = "train",
    variant: str = "normal",
) -> None:
    """Train the classifier on one manifest slice and save the model."""
    manifest = load_manifest(manifest_path)
    records = manifest.select(split=split, variant=variant)
    cache: dict[str, dict[str, FeatureVector]] = {}
    samples = []
    for record in records:
        if record.label is None:
            raise ValidationError(
                f"training image {record.image_id!r} has no ground-truth label"
            )
        feature = _feature_for_record(manifest, record, layer, cache)
        samples.append(
            LabeledSample(feature=feature, label=record.label, image_id=record.image_id)
        )
    model = train(
        samples,
        cost=cfg.svm_cost,
        seed=cfg.seed,
        standardize=cfg.standardize,
        class_weighted=cfg.class_weighted,
    )
    save_model(model, out_path)


def cmd_predict(model_path: str, feature_paths: list[str], out_path: str, cfg: RunConfig) -> None:
    """Emit per-image class confidences for every record in a feature file.

    Two feature paths mean concatenate matching (fc6, fc7) records per
    image before prediction; output follows the first file's order.
    """
    model = load_model(model_path)
    primary = read_feature_file(feature_paths[0])
    if len(feature_paths) == 1:
        features = primary
    elif len(feature_paths) == 2:
        secondary = {rec.image_id: rec for rec in read_feature_file(feature_paths[1])}
        features = []
        for rec in primary:
            if rec.image_id not in secondary:
                raise ValidationError(
                    f"image {rec.image_id!r} missing from {feature_paths[1]}"
                )
            features.append(concat_features(rec, secondary[rec.image_id]))
    else:
        raise ValidationError("predict takes one feature file or an (fc6, fc7) pair")
    rows = []
    for rec in features:
        cp, co = predict_confidence(model, rec, calibrated=cfg.calibrated)
        rows.append((rec.image_id, cp, co))
    write_confidences(out_path, rows)


def cmd_fuse(original_path: str, transformed_path: str, out_path: str) -> None:
    """Fuse per-source confidences into one label per image."""
    original = read_confidences(original_path)
    transformed = {image_id: (cp, co) for image_id, cp, co in read_confidences(transformed_path)}
    seen = {image_id for image_id, _, _ in original}
    if seen != set(transformed):
        missing = sorted(seen.symmetric_difference(transformed))
        raise ValidationError(f"confidence files cover different images: {missing[:5]}")
    rows = []
    for image_id, cp, co in original:
        tp, to = transformed[image_id]
        label, source = fuse(
            ConfidenceTable(
                passenger_original=cp,
                other_original=co,
                passenger_transformed=tp,
                other_transformed=to,
            )
        )
        rows.append((image_id, label, source))
    write_labels(out_path, rows)


def _eval_detections(manifest: DatasetManifest, det_path: str, split: str, variant: str, iou_threshold: float) -> DetectionCounts:
    slice_by_id = {r.image_id: r for r in manifest.select(split=split, variant=variant)}
    tp = fp = fn = 0
    seen = set()
    for image_id, dets in read_detections(det_path):
        record = slice_by_id.get(image_id)
        if record is None:
            raise ValidationError(
                f"detections for unknown image {image_id!r} (split={split}, variant={variant})"
            )
        if record.boxes is None:
            raise ValidationError(f"image {image_id!r} has no ground-truth boxes")
        seen.add(image_id)
        counts = match_detections(dets, list(record.boxes), iou_threshold)
        tp += counts.true_positive
        fp += counts.false_positive
        fn += counts.false_negative
    missing = [r.image_id for r in slice_by_id.values() if r.boxes is not None and r.image_id not in seen]
    if missing:
        raise ValidationError(f"no detections recorded for images {missing[:5]}")
    return DetectionCounts(true_positive=tp, false_positive=fp, false_negative=fn)


def _eval_classification(manifest: DatasetManifest, predicted: list[tuple[str, str]], split: str, variant: str) -> ConfusionMatrix:
    slice_by_id = {r.image_id: r for r in manifest.select(split=split, variant=variant)}
    pred_labels = []
    true_labels = []
    for image_id, label in predicted:
        record = slice_by_id.get(image_id)
        if record is None:
            raise ValidationError(
                f"prediction for unknown image {image_id!r} (split={split}, variant={variant})"
            )
        if record.label is None:
            raise ValidationError(f"image {image_id!r} has no ground-truth label")
        pred_labels.append(label)
        true_labels.append(record.label)
    return ConfusionMatrix.from_labels(pred_labels, true_labels)


def cmd_eval(
    manifest_path: str,
    cfg: RunConfig,
    detections_path: str | None = None,
    predictions_path: str | None = None,
    labels_path: str | None = None,
    split: str = "test",
    variant: str = "normal",
) -> tuple[list[str], dict]:
    """Build the metrics report; returns (report lines, results dict)."""
    manifest = load_manifest(manifest_path)
    lines: list[str] = []
    results: dict = {}

    if detections_path is not None:
        counts = _eval_detections(manifest, detections_path, split, variant, cfg.iou_threshold)
        precision, recall = detection_pr(counts)
        lines.append(
            f"detection counts: tp={counts.true_positive} "
            f"fp={counts.false_positive} fn={counts.false_negative}"
        )
        lines.append(f"precision {100.0 * precision:.1f}%")
        lines.append(f"recall {100.0 * recall:.1f}%")
        results["detection"] = {
            "true_positive": counts.true_positive,
            "false_positive": counts.false_positive,
            "false_negative": counts.false_negative,
            "precision": precision,
            "recall": recall,
        }

    predicted: list[tuple[str, str]] | None = None
    if predictions_path is not None:
        predicted = [
            (image_id, PASSENGER if cp >= co else OTHER)
            for image_id, cp, co in read_confidences(predictions_path)
        ]
    elif labels_path is not None:
        predicted = [(image_id, label) for image_id, label, _ in read_labels(labels_path)]

    if predicted is not None:
        cm = _eval_classification(manifest, predicted, split, variant)
        acc_pass = cm.correct_pass / cm.size_pass if cm.size_pass else float("nan")
        acc_other = cm.correct_other / cm.size_other if cm.size_other else float("nan")
        bal = balanced_accuracy(cm)
        lines.append(
            f"class passenger: {cm.correct_pass}/{cm.size_pass} correct ({100.0 * acc_pass:.1f}%)"
        )
        lines.append(
            f"class other: {cm.correct_other}/{cm.size_other} correct ({100.0 * acc_other:.1f}%)"
        )
        lines.append(f"balanced accuracy {100.0 * bal:.1f}%")
        results["classification"] = {
            "correct_pass": cm.correct_pass,
            "size_pass": cm.size_pass,
            "correct_other": cm.correct_other,
            "size_other": cm.size_other,
            "accuracy_pass": acc_pass,
            "accuracy_other": acc_other,
            "balanced_accuracy": bal,
        }

    if not lines:
        raise ValidationError("eval needs --detections, --predictions, or --labels")
    return lines, results


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vehiclepipe",
        description="Vehicle detection/classification pipeline over interchange files.",
    )
    parser.add_argument(
        "--config",
        help=f"JSON config file (also via ${CONFIG_ENV_VAR}); flags win over file values",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="decode grids, drop invalid boxes, map to source coords")
    p.add_argument("--grids", required=True, help="input grid file (.vgr)")
    p.add_argument("--out", required=True, help="output detections file (JSON lines)")
    p.add_argument("--score-threshold", type=float, dest="score_threshold")
    p.add_argument("--overlap-threshold", type=float, dest="overlap_threshold")
    p.add_argument(
        "--region",
        help="valid road region x_min,y_min,x_max,y_max in detection coordinates",
    )
    p.add_argument("--source-width", type=float, dest="source_width")
    p.add_argument("--source-height", type=float, dest="source_height")

    p = sub.add_parser("train", help="train the linear classifier from a manifest slice")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output model file (.vlm)")
    p.add_argument("--layer", default="fc6", choices=["fc6", "fc7", "fc6fc7"])
    p.add_argument("--split", default="train", choices=["train", "test"])
    p.add_argument("--variant", default="normal", choices=["normal", "dark", "transformed"])
    p.add_argument("--cost", type=float, dest="svm_cost")
    p.add_argument("--seed", type=int, dest="seed")
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--class-weighted", action=argparse.BooleanOptionalAction, default=None, dest="class_weighted")

    p = sub.add_parser("predict", help="per-image class confidences for a feature file")
    p.add_argument("--model", required=True)
    p.add_argument(
        "--features",
        required=True,
        nargs="+",
        help="feature file, or an fc6 file followed by an fc7 file to concatenate",
    )
    p.add_argument("--out", required=True)
    p.add_argument("--calibrated", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("fuse", help="late-fuse original and transformed confidences")
    p.add_argument("--original", required=True)
    p.add_argument("--transformed", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="metrics report from predictions and/or detections")
    p.add_argument("--manifest", required=True)
    p.add_argument("--detections")
    p.add_argument("--predictions", help="confidences file from predict")
    p.add_argument("--labels", help="fused labels file from fuse")
    p.add_argument("--split", default="test", choices=["train", "test"])
    p.add_argument("--variant", default="normal", choices=["normal", "dark", "transformed"])
    p.add_argument("--iou-threshold", type=float, dest="iou_threshold")
    p.add_argument("--out-report", help="also write the report lines to this file")
    p.add_argument("--out-results", help="write machine-readable results JSON to this file")

    sub.add_parser("show-config", help="print the effective configuration")
    return parser


_CONFIG_KEYS = (
    "score_threshold",
    "overlap_threshold",
    "iou_threshold",
    "svm_cost",
    "seed",
    "source_width",
    "source_height",
    "standardize",
    "class_weighted",
    "calibrated",
)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: dict = {}
    for key in _CONFIG_KEYS:
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    region = getattr(args, "region", None)
    if region is not None:
        parts = region.split(",")
        if len(parts) != 4:
            raise ValidationError(f"--region expects 4 comma-separated numbers, got {region!r}")
        overrides["region"] = tuple(float(v) for v in parts)
    path = args.config or config_path_from_env()
    return load_config(path, overrides)


def run(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "detect":
            cmd_detect(args.grids, args.out, cfg)
        elif args.command == "train":
            cmd_train(
                args.manifest, args.out, args.layer, cfg,
                split=args.split, variant=args.variant,
            )
        elif args.command == "predict":
            cmd_predict(args.model, args.features, args.out, cfg)
        elif args.command == "fuse":
            cmd_fuse(args.original, args.transformed, args.out)
        elif args.command == "eval":
            lines, results = cmd_eval(
                args.manifest,
                cfg,
                detections_path=args.detections,
                predictions_path=args.predictions,
                labels_path=args.labels,
                split=args.split,
                variant=args.variant,
            )
            for line in lines:
                print(line)
            if args.out_report:
                Path(args.out_report).write_text("\n".join(lines) + "\n", encoding="utf-8")
            if args.out_results:
                Path(args.out_results).write_text(
                    json.dumps(results, sort_keys=True, indent=2) + "\n", encoding="utf-8"
                )
        elif args.command == "show-config":
            print(json.dumps(cfg.as_dict(), sort_keys=True, indent=2))
    except PipelineError as e:
        print(f"vehiclepipe {args.command}: error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"vehiclepipe {args.command}: error: {e}", file=sys.stderr)
        return EXIT_FORMAT_ERROR
    except ValueError as e:
        print(f"vehiclepipe {args.command}: error: {e}", file=sys.stderr)
        return EXIT_FORMAT_ERROR
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
