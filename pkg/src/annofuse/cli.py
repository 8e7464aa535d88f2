"""Command-line entry point: ``annofuse <subcommand> ...``.

Exit status: 0 on success, 2 on bad input (missing files, schema or policy
errors), 1 on internal errors. Primary outputs go to ``--out`` (stdout by
default); summaries go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .annotators import AnnotatorError, AnnotatorParams, lidar_annotate, map_annotate, seg_annotate
from .assoc import AssociationError
from .config import DEFAULTS, ConfigError, RunConfig, config_from_dict, load_config
from .evaluation import (EvaluationError, box_from_point, format_table, pr_csv, pr_curve,
                         pr_svg)
from .fusion import FusionError
from .geometry import GeometryError
from .masking import MaskingError, apply_patches, export_labels, make_patches
from .model import (AnnotationSet, Dataset, DatasetError, ImageRecord, canonical_json,
                    dumps_dataset, load_dataset)
from .pipeline import (dumps_labels, evaluate_fused, evaluate_policy, evaluate_source,
                       fuse_dataset, histogram_table, load_labels)
from .detections import load_detections
from .policy import PolicyError
from .raster import RasterError, read_raster, write_raster
from .sensor_io import InputFileError, load_camera, load_cloud, load_map, load_mask, load_pose
from .simulate import SceneConfig, SimulationError, SourceProfile, simulate_dataset

INPUT_ERRORS = (FileNotFoundError, DatasetError, PolicyError, AnnotatorError, InputFileError,
                MaskingError, EvaluationError, GeometryError, SimulationError, ConfigError,
                FusionError, AssociationError, RasterError)


class CliInputError(ValueError):
    pass


# --- option helpers -----------------------------------------------------------

def _fmt_default(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return str(value)


def _opt(p, flag: str, help: str, default, type=str, dest: Optional[str] = None):
    """Flag whose built-in default is shown in --help but left unset (None) at parse time."""
    p.add_argument(flag, dest=dest, type=type, default=None, metavar=flag.lstrip("-").upper(),
                   help=f"{help} (default: {_fmt_default(default)})")


def _csv_list(kind=str):
    def parse(text: str):
        items = [x.strip() for x in text.split(",") if x.strip()]
        if not items:
            raise argparse.ArgumentTypeError("expected a comma-separated list")
        return tuple(kind(x) for x in items)
    return parse


def _common(p, out_help: str = "output file ('-' for stdout)"):
    p.add_argument("--config", default=None,
                   help="JSON config file; overrides built-in defaults, overridden by flags "
                        "(default: $ANNOFUSE_CONFIG if set)")
    p.add_argument("--jobs", type=int, default=None, metavar="N",
                   help=f"worker processes for per-image work (default: {DEFAULTS.jobs})")
    if out_help:
        p.add_argument("--out", default="-", help=f"{out_help} (default: -)")


def _annotator_opts(p, names):
    for name in names:
        default = getattr(DEFAULTS.annotator, name)
        _opt(p, "--" + name.replace("_", "-"), name.replace("_", " "), default,
             type=type(default), dest="ann_" + name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annofuse",
        description="Fuse pointwise pole-base annotations from several automatic sources, "
                    "mask ambiguous ones and evaluate the result.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    # annotate
    ann = sub.add_parser("annotate", help="run one automatic annotator on a frame")
    ann_sub = ann.add_subparsers(dest="kind", required=True)

    p = ann_sub.add_parser("map", help="map poles projected at lidar ground height (source M)")
    p.add_argument("--map", required=True, help="JSON array of [E, N] pole positions")
    p.add_argument("--pose", required=True, help="world-to-camera pose JSON")
    p.add_argument("--camera", required=True, help="pinhole camera JSON")
    p.add_argument("--cloud", required=True, help="labelled point cloud (CSV or binary PLY)")
    _annotator_opts(p, ["ground_radius", "min_ground_points", "max_range", "occlusion_margin"])
    _frame_opts(p, "M")
    _common(p)

    p = ann_sub.add_parser("seg", help="pole blobs touching ground in a semantic mask (source S)")
    p.add_argument("--mask", required=True, help="8-bit class-id mask (PNG or PGM)")
    _opt(p, "--pole-classes", "comma-separated pole class ids", DEFAULTS.pole_classes,
         type=_csv_list(int))
    _opt(p, "--ground-classes", "comma-separated ground class ids", DEFAULTS.ground_classes,
         type=_csv_list(int))
    _annotator_opts(p, ["ground_adjacency", "min_component_px", "small_cluster_px"])
    _frame_opts(p, "S")
    _common(p)

    p = ann_sub.add_parser("lidar", help="pole clusters of a labelled cloud (source L)")
    p.add_argument("--cloud", required=True, help="labelled point cloud (CSV or binary PLY)")
    p.add_argument("--pose", required=True, help="world-to-camera pose JSON")
    p.add_argument("--camera", required=True, help="pinhole camera JSON")
    _annotator_opts(p, ["cluster_eps", "cluster_min_pts"])
    _frame_opts(p, "L")
    _common(p)

    p = sub.add_parser("merge", help="combine single-source datasets into one multi-source dataset")
    p.add_argument("datasets", nargs="+", help="dataset JSON files, sources kept in this order")
    p.add_argument("--lenient", action="store_true", help="accept unknown keys in input files")
    _common(p)

    p = sub.add_parser("fuse", help="associate, fuse and split into confident/ambiguous labels")
    p.add_argument("--dataset", required=True, help="annotation dataset JSON")
    _fusion_opts(p)
    p.add_argument("--lenient", action="store_true", help="accept unknown keys in input files")
    _common(p, "label-split JSON output")

    p = sub.add_parser("mask", help="paint black patches over ambiguous labels")
    p.add_argument("--labels", required=True, help="label-split JSON from 'fuse'")
    _opt(p, "--patch-side", "patch side in pixels", DEFAULTS.patch_side, type=float)
    p.add_argument("--raster-root", default=None,
                   help="directory relative raster paths resolve against "
                        "(default: directory of the labels file)")
    p.add_argument("--out-dir", default=None,
                   help="where masked images go (default: next to the originals)")
    _common(p, out_help="")

    p = sub.add_parser("export-labels", help="write one box-label .txt per image")
    p.add_argument("--labels", required=True, help="label-split JSON from 'fuse'")
    p.add_argument("--out-dir", required=True, help="directory for <image_id>.txt files")
    _opt(p, "--box-side", "box side in pixels", DEFAULTS.box_side, type=float)
    _opt(p, "--class-id", "class id written on every line", DEFAULTS.class_id, type=int)
    _opt(p, "--decimals", "decimal places of normalised values", DEFAULTS.decimals, type=int)
    _common(p, out_help="")

    ev = sub.add_parser("eval", help="evaluate annotations or detections against the reference")
    ev_sub = ev.add_subparsers(dest="mode", required=True)
    p = ev_sub.add_parser("points", help="precision / recall / MAE-x of point annotations")
    p.add_argument("--dataset", required=True, help="dataset JSON with reference annotations")
    p.add_argument("--labels", default=None, help="label-split JSON whose confident set is scored (default: none)")
    p.add_argument("--policy", action="append", default=None,
                   help="also score the confident set of this policy (repeatable; default: none)")
    _opt(p, "--order", "preference order, highest first", DEFAULTS.order, type=_csv_list())
    _opt(p, "--threshold", "association threshold T in pixels", DEFAULTS.threshold, type=float)
    _opt(p, "--eval-threshold", "matching threshold T_eval in pixels", DEFAULTS.eval_threshold,
         type=float)
    p.add_argument("--no-sources", action="store_true", help="skip the per-source rows")
    p.add_argument("--lenient", action="store_true", help="accept unknown keys in input files")
    _common(p, "metrics JSON output")

    p = ev_sub.add_parser("detections", help="detection metrics and precision-recall curve")
    _detection_opts(p)
    p.add_argument("--csv", default=None, help="also write the PR curve CSV here (default: none)")
    _common(p, "metrics JSON output")

    p = sub.add_parser("pr-curve", help="precision-recall curve CSV (threshold,recall,precision)")
    _detection_opts(p)
    _common(p, "CSV output")

    p = sub.add_parser("simulate", help="synthetic dataset with simulated annotators")
    p.add_argument("--scene", default=None, help="JSON file with scene fields, overriding the config (default: none)")
    sc = DEFAULTS.scene
    _opt(p, "--n-images", "number of images", sc.n_images, type=int)
    _opt(p, "--poles-min", "minimum poles per image", sc.poles_per_image[0], type=int)
    _opt(p, "--poles-max", "maximum poles per image", sc.poles_per_image[1], type=int)
    _opt(p, "--width", "image width", sc.width, type=int)
    _opt(p, "--height", "image height", sc.height, type=int)
    _opt(p, "--min-separation", "minimum pole spacing in pixels", sc.min_separation, type=float)
    _opt(p, "--seed", "64-bit seed", sc.seed, type=int)
    profiles = "; ".join(f"{k}={v.recall},{v.fp_per_image},{v.noise_sigma}"
                         for k, v in DEFAULTS.profiles.items())
    p.add_argument("--source", action="append", default=None, metavar="NAME=RECALL,FP,SIGMA",
                   help=f"simulated source profile, repeatable (default: {profiles})")
    _common(p, "dataset JSON output")
    return parser


def _frame_opts(p, source):
    p.add_argument("--image-id", default="frame", help="image id in the output (default: frame)")
    p.add_argument("--raster", default=None, help="raster path recorded for the image (default: none)")
    p.add_argument("--source-name", default=source, help=f"source id (default: {source})")


def _fusion_opts(p):
    _opt(p, "--policy", "consensus policy, e.g. 'M&S' or 'atleast(2)'", DEFAULTS.policy)
    _opt(p, "--order", "preference order, highest first", DEFAULTS.order, type=_csv_list())
    _opt(p, "--threshold", "association threshold T in pixels", DEFAULTS.threshold, type=float)


def _detection_opts(p):
    p.add_argument("--detections", required=True,
                   help="JSON array of {image_id, cx, cy, w, h, confidence}")
    p.add_argument("--dataset", required=True, help="dataset JSON with reference annotations")
    _opt(p, "--box-side", "reference box side in pixels", DEFAULTS.box_side, type=float)
    _opt(p, "--iou-min", "IoU needed for a true positive", DEFAULTS.iou_min, type=float)
    p.add_argument("--svg", default=None, help="also write an SVG plot here (default: none)")
    p.add_argument("--lenient", action="store_true", help="accept unknown keys in input files")


# --- config resolution --------------------------------------------------------

_FLAG_TO_FIELD = ["threshold", "eval_threshold", "order", "policy", "box_side", "patch_side",
                  "class_id", "decimals", "iou_min", "jobs", "pole_classes", "ground_classes"]


def resolve_config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    updates = {}
    for name in _FLAG_TO_FIELD:
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    ann = {f.name: getattr(args, "ann_" + f.name) for f in fields(AnnotatorParams)
           if getattr(args, "ann_" + f.name, None) is not None}
    if ann:
        updates["annotator"] = replace(cfg.annotator, **ann)
    try:
        cfg = replace(cfg, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg


def _require(*paths):
    for path in paths:
        if path is not None and not Path(path).exists():
            raise FileNotFoundError(str(path))


def _write(out: str, text: str) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _say(text: str) -> None:
    sys.stderr.write(text)


def _order_for(dataset_sources, order) -> tuple[str, ...]:
    """Restrict ``order`` to the dataset's sources; every dataset source must be ranked."""
    kept = tuple(s for s in order if s in dataset_sources)
    missing = [s for s in dataset_sources if s not in kept]
    if missing:
        raise CliInputError(f"preference order {list(order)} does not rank source(s) {missing}")
    return kept


# --- commands -------------------------------------------------------------------

def _single_image(args, width, height, aset: AnnotationSet) -> Dataset:
    img = ImageRecord(args.image_id, width, height, args.raster, {args.source_name: aset})
    return Dataset((args.source_name,), (img,))


def cmd_annotate(args, cfg: RunConfig) -> int:
    params = cfg.annotator
    if args.kind == "map":
        _require(args.map, args.pose, args.camera, args.cloud)
        cam = load_camera(args.camera)
        aset = map_annotate(load_map(args.map), load_pose(args.pose), cam, load_cloud(args.cloud),
                            params, image_id=args.image_id, source=args.source_name)
        width, height = cam.width, cam.height
    elif args.kind == "lidar":
        _require(args.cloud, args.pose, args.camera)
        cam = load_camera(args.camera)
        aset = lidar_annotate(load_cloud(args.cloud), load_pose(args.pose), cam, params,
                              image_id=args.image_id, source=args.source_name)
        width, height = cam.width, cam.height
    else:
        _require(args.mask)
        mask = load_mask(args.mask, cfg.pole_classes, cfg.ground_classes)
        aset = seg_annotate(mask, params, image_id=args.image_id, source=args.source_name)
        height, width = mask.classes.shape
    _write(args.out, dumps_dataset(_single_image(args, width, height, aset)))
    _say(f"{args.source_name}: {len(aset)} annotation(s) in {args.image_id}\n")
    return 0


def cmd_merge(args, cfg: RunConfig) -> int:
    _require(*args.datasets)
    sources: list[str] = []
    images: dict[str, dict] = {}
    for path in args.datasets:
        d = load_dataset(path, strict=not args.lenient)
        for s in d.sources:
            if s in sources:
                raise CliInputError(f"{path}: source {s!r} already provided by an earlier file")
            sources.append(s)
        for img in d.images:
            slot = images.setdefault(img.id, {"width": img.width, "height": img.height,
                                              "raster": img.raster, "annotations": {},
                                              "reference": img.reference})
            if (slot["width"], slot["height"]) != (img.width, img.height):
                raise CliInputError(f"{path}: image {img.id!r} dimensions disagree with earlier file")
            if slot["raster"] is None:
                slot["raster"] = img.raster
            if img.reference is not None:
                if slot["reference"] is not None and slot["reference"] != img.reference:
                    raise CliInputError(f"{path}: image {img.id!r} has a conflicting reference")
                slot["reference"] = img.reference
            slot["annotations"].update(img.annotations)
    merged = Dataset(tuple(sources), tuple(
        ImageRecord(iid, s["width"], s["height"], s["raster"], s["annotations"], s["reference"])
        for iid, s in images.items()))
    _write(args.out, dumps_dataset(merged))
    return 0


def cmd_fuse(args, cfg: RunConfig) -> int:
    _require(args.dataset)
    dataset = load_dataset(args.dataset, strict=not args.lenient)
    order = _order_for(dataset.sources, cfg.order)
    labels, hist = fuse_dataset(dataset, cfg.policy, order, cfg.threshold, jobs=cfg.jobs)
    _write(args.out, dumps_labels(labels))
    n_conf = sum(len(r.split.confident) for r in labels.records)
    n_amb = sum(len(r.split.ambiguous) for r in labels.records)
    _say(f"policy {cfg.policy}  order {'>'.join(order)}  T={cfg.threshold}\n")
    _say(histogram_table(hist, len(dataset.sources)))
    _say(f"confident {n_conf}  ambiguous {n_amb}\n")
    return 0


def _raster_path(raster: str, root: Path) -> Path:
    p = Path(raster)
    return p if p.is_absolute() else root / p


def cmd_mask(args, cfg: RunConfig) -> int:
    _require(args.labels)
    labels = load_labels(args.labels)
    root = Path(args.raster_root) if args.raster_root else Path(args.labels).resolve().parent
    for rec in labels.records:
        if rec.raster is None:
            raise CliInputError(f"image {rec.id!r}: no raster recorded, cannot mask")
        _require(_raster_path(rec.raster, root))
    for rec in labels.records:
        src = _raster_path(rec.raster, root)
        image = read_raster(src)
        patches = make_patches(rec.split.ambiguous, rec.width, rec.height, cfg.patch_side)
        masked = apply_patches(image, patches, rec.width, rec.height)
        dest_dir = Path(args.out_dir) if args.out_dir else src.parent
        dest_dir.mkdir(parents=True, exist_ok=True)
        dest = dest_dir / f"{src.stem}_masked{src.suffix}"
        write_raster(dest, masked)
        _say(f"{rec.id}: {len(patches)} patch(es) -> {dest}\n")
    return 0


def cmd_export(args, cfg: RunConfig) -> int:
    _require(args.labels)
    labels = load_labels(args.labels)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    export = cfg.export
    for rec in labels.records:
        text = export_labels(rec.split.confident, rec.width, rec.height, export)
        with open(out_dir / f"{rec.id}.txt", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    _say(f"wrote {len(labels.records)} label file(s) to {out_dir}\n")
    return 0


def cmd_eval_points(args, cfg: RunConfig) -> int:
    _require(args.dataset, args.labels)
    dataset = load_dataset(args.dataset, strict=not args.lenient)
    rows = []
    if not args.no_sources:
        rows += [(s, evaluate_source(dataset, s, cfg.eval_threshold)) for s in dataset.sources]
    order = _order_for(dataset.sources, cfg.order) if args.policy else ()
    for pol in args.policy or ():
        rows.append((pol, evaluate_policy(dataset, pol, order, cfg.threshold,
                                          cfg.eval_threshold, jobs=cfg.jobs)))
    if args.labels:
        labels = load_labels(args.labels)
        splits = {r.id: r.split for r in labels.records}
        rows.append((f"labels[{labels.policy}]", evaluate_fused(dataset, splits, cfg.eval_threshold)))
    sys.stdout.write(format_table(rows))
    report = {"eval_threshold": cfg.eval_threshold, "association_threshold": cfg.threshold,
              "rows": [{"method": name, **r.to_dict()} for name, r in rows]}
    if args.out != "-":
        _write(args.out, canonical_json(report))
    return 0


def _detection_curve(args, cfg: RunConfig):
    _require(args.detections, args.dataset)
    dataset = load_dataset(args.dataset, strict=not args.lenient)
    detections = load_detections(args.detections)
    reference = {}
    for img in dataset.images:
        if img.reference is None:
            raise EvaluationError(f"image {img.id!r} has no reference annotations")
        reference[img.id] = [box_from_point(r, cfg.box_side, img.width, img.height)
                             for r in img.reference]
    curve = pr_curve(detections, reference, cfg.iou_min)
    if args.svg:
        _write(args.svg, pr_svg(curve, label=f"IoU >= {cfg.iou_min}"))
    return curve


def cmd_eval_detections(args, cfg: RunConfig) -> int:
    curve = _detection_curve(args, cfg)
    tp = sum(s.tp for s in curve.samples)
    fp = len(curve.samples) - tp
    report = {"iou_min": cfg.iou_min, "box_side": cfg.box_side,
              "n_detections": len(curve.samples), "n_references": curve.n_references,
              "tp": tp, "fp": fp, "fn": curve.n_references - tp,
              "precision": tp / len(curve.samples) if curve.samples else None,
              "recall": tp / curve.n_references if curve.n_references else None}
    if args.csv:
        _write(args.csv, pr_csv(curve))
    _write(args.out, canonical_json(report))
    _say(f"detections {report['n_detections']}  TP {tp}  FP {fp}  FN {report['fn']}\n")
    return 0


def cmd_pr_curve(args, cfg: RunConfig) -> int:
    _write(args.out, pr_csv(_detection_curve(args, cfg)))
    return 0


def _parse_profile(text: str) -> tuple[str, SourceProfile]:
    try:
        name, rest = text.split("=", 1)
        vals = [float(x) for x in rest.split(",")]
        if not name or len(vals) != 3:
            raise ValueError
    except ValueError:
        raise CliInputError(f"bad --source {text!r}; expected NAME=RECALL,FP,SIGMA") from None
    return name, SourceProfile(*vals)


def cmd_simulate(args, cfg: RunConfig) -> int:
    if args.scene:
        _require(args.scene)
        with open(args.scene, encoding="utf-8") as fh:
            cfg = config_from_dict({"scene": json.load(fh)}, base=cfg)
    sc = cfg.scene
    lo = args.poles_min if args.poles_min is not None else sc.poles_per_image[0]
    hi = args.poles_max if args.poles_max is not None else sc.poles_per_image[1]
    scene = SceneConfig(
        n_images=args.n_images if args.n_images is not None else sc.n_images,
        poles_per_image=(lo, hi),
        width=args.width if args.width is not None else sc.width,
        height=args.height if args.height is not None else sc.height,
        min_separation=args.min_separation if args.min_separation is not None else sc.min_separation,
        seed=args.seed if args.seed is not None else sc.seed,
    )
    if args.source:
        profiles = dict(_parse_profile(s) for s in args.source)
        if len(profiles) != len(args.source):
            raise CliInputError("duplicate --source name")
    else:
        profiles = dict(cfg.profiles)
    d = simulate_dataset(scene, profiles, jobs=cfg.jobs)
    _write(args.out, dumps_dataset(d))
    n_ref = sum(len(img.reference) for img in d.images)
    _say(f"simulated {len(d.images)} image(s), {n_ref} reference pole(s), sources {list(d.sources)}\n")
    return 0


COMMANDS = {
    "annotate": cmd_annotate,
    "merge": cmd_merge,
    "fuse": cmd_fuse,
    "mask": cmd_mask,
    "export-labels": cmd_export,
    "pr-curve": cmd_pr_curve,
    "simulate": cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "eval":
            handler = cmd_eval_points if args.mode == "points" else cmd_eval_detections
        else:
            handler = COMMANDS[args.command]
        return handler(args, cfg)
    except FileNotFoundError as exc:
        missing = exc.filename or (exc.args[0] if exc.args else "")
        _say(f"annofuse: error: file not found: {missing}\n")
        return 2
    except INPUT_ERRORS + (CliInputError,) as exc:
        _say(f"annofuse: error: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001
        _say(f"annofuse: internal error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
