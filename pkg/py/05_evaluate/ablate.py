#!/usr/bin/env python3
"""
Ablation of the index terms on a labeled dataset.

Junctions are detected once per image; the four variants (raw saliency,
+neighbor, +angle, +shadow) then share that detection and are scored
against the masks exactly as the eval stage scores saved heatmaps.

Outputs:
    <output-dir>/ablation.csv      variant, switches, mAP, F
    <output-dir>/ablation_pr.png   mean PR curve per variant
    reports/ablation_report.html
"""
import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import pandas as pd

sys.path.append(str(Path(__file__).parent.parent / 'common'))
sys.path.append(str(Path(__file__).parent.parent / '02_detect_junctions' / 'extract'))
sys.path.append(str(Path(__file__).parent.parent / '03_fit_prior' / 'helpers'))
sys.path.append(str(Path(__file__).parent.parent / '04_compute_gbi' / 'helpers'))
sys.path.append(str(Path(__file__).parent / 'helpers'))
from angle_prior import load_model
from atomic_io import write_csv
from config import add_config_arguments, config_from_args
from dataset_files import pair_by_stem
from errors import GbiError
from evaluation import evaluate_dataset, evaluate_image, mean_curve, sweep_thresholds
from junction_detection import DetectionParams, detect_junctions
from pr_plot import plot_pr_curves
from raster_core import load_image, load_mask, to_uint8
from report import generate_html_report, write_report
from saliency import ABLATION_VARIANTS, SaliencyParams, ablation_params, gbi_from_junctions


def ablate_image(task):
    """Score every variant on one image.

    Returns:
        (image name, {variant: EvalReport} or None, error message or None)
    """
    image_path, mask_path, model, detection_params, base, thresholds = task
    try:
        img = load_image(image_path)
        mask = load_mask(mask_path)
        junctions = detect_junctions(img, detection_params)
        reports = {}
        for variant in ABLATION_VARIANTS:
            run = gbi_from_junctions(img, junctions, model, ablation_params(base, variant))
            # heatmaps reach the eval stage as 8-bit files
            heatmap = to_uint8(run.gbi.final) / 255.0
            reports[variant] = evaluate_image(heatmap, mask, thresholds)
    except (GbiError, OSError) as e:
        return image_path.name, None, str(e)
    return image_path.name, reports, None


def ablation_table(per_variant):
    rows = []
    for variant, reports in per_variant.items():
        summary = evaluate_dataset(reports)
        flags = ABLATION_VARIANTS[variant]
        rows.append({
            "variant": variant,
            "angle": flags["use_angle"],
            "neighbor": flags["use_neighbor"],
            "shadow": flags["use_shadow"],
            "mAP": summary.mean_ap,
            "F": summary.mean_f,
        })
    return pd.DataFrame(rows, columns=["variant", "angle", "neighbor", "shadow", "mAP", "F"])


def main(argv=None):
    parser = argparse.ArgumentParser(description="Ablate the GBI terms on a labeled dataset")
    parser.add_argument("dataset_dir", type=Path, help="directory with scenes/ and masks/")
    parser.add_argument("--model", type=Path, default=Path("models/angle_prior.json"),
                        help="angle prior model (default: models/angle_prior.json)")
    parser.add_argument("--output-dir", type=Path, default=Path("outputs/ablation"),
                        help="tables and figures (default: outputs/ablation)")
    parser.add_argument("--report", type=Path, default=Path("reports/ablation_report.html"))
    add_config_arguments(parser, jobs=True)
    args = parser.parse_args(argv)

    print(f"\n{'='*70}")
    print("ABLATION STUDY")
    print(f"{'='*70}")

    try:
        config = config_from_args(args)
        detection_params = DetectionParams.from_config(config)
        base = SaliencyParams.from_config(config)
        thresholds = sweep_thresholds(config.threshold_step)

        print("\n[1/3] Loading model and pairing images with masks...")
        model = load_model(args.model)
        pairs = pair_by_stem(args.dataset_dir / "scenes", args.dataset_dir / "masks")
        if not pairs:
            raise FileNotFoundError(f"no images found under {args.dataset_dir / 'scenes'}")
        print(f"  ✓ {len(pairs)} image/mask pairs, {len(ABLATION_VARIANTS)} variants")

        print("\n[2/3] Detecting once per image and scoring every variant...")
        tasks = [(img, mask, model, detection_params, base, thresholds) for img, mask in pairs]
        if config.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(ablate_image, tasks))
        else:
            results = [ablate_image(task) for task in tasks]

        per_variant = {variant: [] for variant in ABLATION_VARIANTS}
        for name, reports, error in results:
            if error is not None:
                print(f"  ⚠️  Skipped {name}: {error}")
                continue
            for variant, report in reports.items():
                per_variant[variant].append(report)
            if not args.quiet:
                scores = ", ".join(f"{v} {r.best_f:.3f}" for v, r in reports.items())
                print(f"  ✓ {name}: F {scores}")

        print("\n[3/3] Writing tables and figures...")
        table = ablation_table(per_variant)
        write_csv(table, args.output_dir / "ablation.csv")
        curves = {variant: mean_curve(reports) for variant, reports in per_variant.items()}
        plot_path = plot_pr_curves(curves, args.output_dir / "ablation_pr.png",
                                   "Mean precision-recall per variant")

        html = generate_html_report(
            "Ablation Report",
            metrics=[("Images", len(per_variant["raw"]))]
            + [(f"F {row.variant}", row.F) for row in table.itertuples(index=False)],
            tables=[("Variants", table)],
            images=[("Mean precision-recall", Path("..") / plot_path)],
            footer=[f"Dataset: {args.dataset_dir}", f"Model: {args.model}", "Pipeline step: 05_evaluate"],
        )
        write_report(html, args.report)
    except (GbiError, OSError) as e:
        print(f"\n❌ ERROR: {e}")
        return 1

    print()
    for row in table.itertuples(index=False):
        print(f"  {row.variant:<10} mAP {row.mAP:.4f}  F {row.F:.4f}")
    print(f"\n✓ Saved to {args.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
