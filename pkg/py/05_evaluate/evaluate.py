#!/usr/bin/env python3
"""
Evaluate GBI heatmaps against ground-truth footprint masks.

Heatmaps and masks are paired by filename stem. Outputs:
    <output-dir>/<name>_pr.csv       threshold sweep for one image
    <output-dir>/<name>_report.json  AP, best F and the sweep
    <output-dir>/per_image.csv       AP / best F / best threshold per image
    <output-dir>/summary.json        mAP, mean F and the per-image rows
    <output-dir>/pr_curve.png        per-image curves and the mean curve
    reports/eval_report.html
"""
import argparse
import sys
from pathlib import Path

import pandas as pd

sys.path.append(str(Path(__file__).parent.parent / 'common'))
sys.path.append(str(Path(__file__).parent / 'helpers'))
from atomic_io import write_csv, write_json
from config import add_config_arguments, config_from_args
from dataset_files import pair_by_stem
from errors import GbiError
from evaluation import evaluate_dataset, evaluate_image, mean_curve, sweep_thresholds
from pr_plot import plot_pr_curves
from raster_core import load_image, load_mask
from report import generate_html_report, write_report

MEAN_LABEL = "dataset mean"


def evaluate_pairs(pairs, thresholds, verbose=True):
    """Score every (heatmap, mask) pair.

    Returns:
        {stem: EvalReport} in stem order
    """
    reports = {}
    for pred_path, gt_path in pairs:
        report = evaluate_image(load_image(pred_path), load_mask(gt_path), thresholds)
        reports[pred_path.stem] = report
        if verbose:
            print(f"  ✓ {pred_path.stem}: AP {report.ap:.4f}, F {report.best_f:.4f} "
                  f"at t={report.best_threshold:.2f}")
    return reports


def per_image_frame(reports):
    return pd.DataFrame(
        [{"image": stem, "ap": r.ap, "best_f": r.best_f, "best_threshold": r.best_threshold}
         for stem, r in reports.items()],
        columns=["image", "ap", "best_f", "best_threshold"],
    )


def main(argv=None):
    parser = argparse.ArgumentParser(description="Score GBI heatmaps against footprint masks")
    parser.add_argument("pred_dir", type=Path, help="directory of GBI heatmaps")
    parser.add_argument("gt_dir", type=Path, help="directory of ground-truth masks")
    parser.add_argument("--output-dir", type=Path, default=Path("outputs/eval"),
                        help="tables and figures (default: outputs/eval)")
    parser.add_argument("--report", type=Path, default=Path("reports/eval_report.html"))
    add_config_arguments(parser)
    args = parser.parse_args(argv)

    print(f"\n{'='*70}")
    print("EVALUATE SEGMENTATION")
    print(f"{'='*70}")

    try:
        config = config_from_args(args)
        thresholds = sweep_thresholds(config.threshold_step)

        print("\n[1/3] Pairing heatmaps with masks...")
        pairs = pair_by_stem(args.pred_dir, args.gt_dir)
        print(f"  ✓ {len(pairs)} pairs")

        print(f"\n[2/3] Sweeping {len(thresholds)} thresholds...")
        reports = evaluate_pairs(pairs, thresholds, verbose=not args.quiet)
        summary = evaluate_dataset(reports.values())

        print("\n[3/3] Writing tables and figures...")
        for stem, report in reports.items():
            write_csv(report.to_frame(), args.output_dir / f"{stem}_pr.csv")
            write_json(report.to_dict(), args.output_dir / f"{stem}_report.json")
        per_image = per_image_frame(reports)
        write_csv(per_image, args.output_dir / "per_image.csv")
        write_json({
            "mAP": summary.mean_ap,
            "mean_f": summary.mean_f,
            "images": summary.images,
            "threshold_step": config.threshold_step,
            "per_image": per_image.to_dict(orient="records"),
        }, args.output_dir / "summary.json")

        curves = {stem: r.to_frame() for stem, r in reports.items()}
        curves[MEAN_LABEL] = mean_curve(reports.values())
        plot_path = plot_pr_curves(curves, args.output_dir / "pr_curve.png",
                                   "Precision-recall per image", highlight=MEAN_LABEL)

        html = generate_html_report(
            "Segmentation Evaluation Report",
            metrics=[("Images", summary.images), ("mAP", summary.mean_ap), ("Mean F", summary.mean_f)],
            tables=[("Per image", per_image)],
            images=[("Precision-recall", Path("..") / plot_path)],
            footer=[f"Heatmaps: {args.pred_dir}", f"Masks: {args.gt_dir}", "Pipeline step: 05_evaluate"],
        )
        write_report(html, args.report)
    except (GbiError, OSError) as e:
        print(f"\n❌ ERROR: {e}")
        return 1

    print(f"\n✓ mAP {summary.mean_ap:.4f}, mean F {summary.mean_f:.4f} over {summary.images} images")
    print(f"✓ Saved to {args.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
