#!/usr/bin/env python3
"""
Fit the angle prior from a labeled dataset.

The dataset directory holds images under scenes/ and footprint masks under
masks/, aligned by filename. Every detected junction is split into
L-junctions, each labeled building when more than 80% of its parallelogram
lies on the mask. The two classes' included angles are then fitted with
Gaussian mixtures (3 building, 4 background components by default).

Outputs:
    model JSON (--output, default models/angle_prior.json)
    <out-dir>/labeled_ljunctions.csv
    <out-dir>/angle_histogram.csv
    <out-dir>/junction_types.csv
    <out-dir>/plots/angle_prior.png
    reports/fit_prior_report.html
"""
import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

sys.path.append(str(Path(__file__).parent.parent / 'common'))
sys.path.append(str(Path(__file__).parent.parent / '02_detect_junctions' / 'extract'))
sys.path.append(str(Path(__file__).parent / 'helpers'))
from angle_prior import (
    SAMPLES_PER_COMPONENT, JunctionLabel, angle_histogram, fit_angle_prior, label_junction,
    mixture_mass, pdf, save_model,
)
from atomic_io import write_csv
from config import add_config_arguments, config_from_args
from dataset_files import pair_by_stem
from errors import FitError, GbiError
from junction_detection import DetectionParams, detect_junctions
from l_junction import decompose
from raster_core import load_image, load_mask
from report import generate_html_report, save_figure, write_report

TYPE_BUCKETS = ["2", "3", "4", "5+"]


def label_image(task):
    """Detect and label the L-junctions of one image.

    Returns:
        (image name, list of row dicts, error message or None)
    """
    image_path, mask_path, params, overlap_ratio = task
    try:
        img = load_image(image_path)
        mask = load_mask(mask_path)
        junctions = detect_junctions(img, params)
    except (GbiError, OSError) as e:
        return image_path.name, [], str(e)

    rows = []
    for jid, junction in enumerate(junctions):
        for lj in decompose(junction):
            label = label_junction(lj, mask, img.shape, overlap_ratio)
            if label is None:
                continue
            rows.append({
                "image": image_path.stem,
                "junction": jid,
                "M": junction.M,
                "x": lj.x,
                "y": lj.y,
                "beta": lj.beta,
                "rho": lj.rho,
                "label": label.value,
            })
    return image_path.name, rows, None


def junction_type_table(labeled):
    """Junction counts by branch count, each junction labeled by its L-junction majority."""
    if labeled.empty:
        return pd.DataFrame(columns=["type", "label", "count", "ratio"])
    per_junction = labeled.groupby(["image", "junction"]).agg(
        M=("M", "first"),
        building=("label", lambda s: (s == JunctionLabel.BUILDING.value).sum()),
        total=("label", "size"),
    ).reset_index()
    per_junction["label"] = np.where(
        per_junction["building"] * 2 > per_junction["total"],
        JunctionLabel.BUILDING.value, JunctionLabel.BACKGROUND.value,
    )
    per_junction["type"] = per_junction["M"].map(lambda m: str(m) if m < 5 else "5+")

    rows = []
    for label in (JunctionLabel.BUILDING.value, JunctionLabel.BACKGROUND.value):
        subset = per_junction[per_junction["label"] == label]
        for bucket in TYPE_BUCKETS:
            count = int((subset["type"] == bucket).sum())
            rows.append({
                "type": bucket,
                "label": label,
                "count": count,
                "ratio": count / len(subset) if len(subset) else 0.0,
            })
    return pd.DataFrame(rows)


def plot_angle_prior(building_betas, background_betas, model, path):
    """Histograms of both classes with the fitted mixture densities."""
    fig, axes = plt.subplots(1, 2, figsize=(12, 4.5), sharex=True)
    grid = np.linspace(1e-3, math.pi, 400)
    for ax, betas, mixture, name, color in (
        (axes[0], building_betas, model.building, "Building", "#2980b9"),
        (axes[1], background_betas, model.background, "Background", "#7f8c8d"),
    ):
        ax.hist(betas, bins=36, range=(0, math.pi), density=True, alpha=0.5, color=color)
        ax.plot(grid, pdf(mixture, grid), color="black", linewidth=1.8,
                label=f"{mixture.n_components}-component mixture")
        ax.axvspan(math.pi / 3, 2 * math.pi / 3, alpha=0.08, color="gray")
        ax.set_title(f"{name} junctions (n={len(betas):,})", fontsize=11, fontweight="bold")
        ax.set_xlabel("Included angle (rad)", fontsize=10)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper left", fontsize=9)
    axes[0].set_ylabel("Density", fontsize=10)
    plt.tight_layout()
    return save_figure(fig, path)


def main(argv=None):
    parser = argparse.ArgumentParser(description="Fit the building/background angle prior")
    parser.add_argument("dataset_dir", type=Path, help="directory with scenes/ and masks/")
    parser.add_argument("--output", type=Path, default=Path("models/angle_prior.json"),
                        help="model file (default: models/angle_prior.json)")
    parser.add_argument("--out-dir", type=Path, default=Path("outputs/prior"),
                        help="tables and plots (default: outputs/prior)")
    parser.add_argument("--report", type=Path, default=Path("reports/fit_prior_report.html"))
    add_config_arguments(parser, jobs=True)
    args = parser.parse_args(argv)

    print(f"\n{'='*70}")
    print("FIT ANGLE PRIOR")
    print(f"{'='*70}")

    try:
        config = config_from_args(args)
        params = DetectionParams.from_config(config)

        print("\n[1/4] Pairing images with masks...")
        pairs = pair_by_stem(args.dataset_dir / "scenes", args.dataset_dir / "masks")
        if not pairs:
            raise FitError(f"no images found under {args.dataset_dir / 'scenes'}")
        print(f"  ✓ {len(pairs)} image/mask pairs")

        print("\n[2/4] Detecting and labeling junctions...")
        tasks = [(img, mask, params, config.overlap_ratio) for img, mask in pairs]
        if config.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(label_image, tasks))
        else:
            results = [label_image(task) for task in tasks]

        rows = []
        for name, image_rows, error in results:
            if error is not None:
                print(f"  ⚠️  Skipped {name}: {error}")
                continue
            rows.extend(image_rows)
            if not args.quiet:
                print(f"  ✓ {name}: {len(image_rows)} labeled L-junctions")
        labeled = pd.DataFrame(rows, columns=["image", "junction", "M", "x", "y", "beta", "rho", "label"])

        building = labeled.loc[labeled["label"] == JunctionLabel.BUILDING.value, "beta"].to_numpy()
        background = labeled.loc[labeled["label"] == JunctionLabel.BACKGROUND.value, "beta"].to_numpy()
        print(f"  ✓ {len(building):,} building / {len(background):,} background L-junctions")

        needed = {
            "building": max(config.min_class_junctions, SAMPLES_PER_COMPONENT * config.building_components),
            "background": max(config.min_class_junctions, SAMPLES_PER_COMPONENT * config.background_components),
        }
        for name, betas in (("building", building), ("background", background)):
            if len(betas) < needed[name]:
                raise FitError(
                    f"only {len(betas)} {name} L-junctions; at least {needed[name]} are needed to fit the prior"
                )

        print("\n[3/4] Fitting Gaussian mixtures...")
        model = fit_angle_prior(
            building, background,
            building_components=config.building_components,
            background_components=config.background_components,
            prior_building=config.prior_building,
            seed=config.seed,
        )
        right_angle_mass = mixture_mass(model.building, math.pi / 3, 2 * math.pi / 3)
        print(f"  ✓ P(building) = {model.prior_building:.3f}")
        print(f"  ✓ Building mixture mass in [pi/3, 2pi/3]: {right_angle_mass:.1%}")

        print("\n[4/4] Writing model, tables and plots...")
        save_model(model, args.output)
        histogram = angle_histogram(building, background, model)
        types = junction_type_table(labeled)
        write_csv(labeled, args.out_dir / "labeled_ljunctions.csv")
        write_csv(histogram, args.out_dir / "angle_histogram.csv")
        write_csv(types, args.out_dir / "junction_types.csv")
        plot_path = plot_angle_prior(building, background, model, args.out_dir / "plots" / "angle_prior.png")

        components = pd.DataFrame(
            [{"class": "building", **rec} for rec in model.building.to_records()]
            + [{"class": "background", **rec} for rec in model.background.to_records()]
        )
        html = generate_html_report(
            "Angle Prior Fit Report",
            metrics=[
                ("Images", len(pairs)),
                ("Building L-junctions", len(building)),
                ("Background L-junctions", len(background)),
                ("P(building)", model.prior_building),
                ("Mass in [π/3, 2π/3]", right_angle_mass),
            ],
            tables=[("Mixture components", components), ("Junction types", types)],
            images=[("Angle distributions", Path("..") / plot_path)],
            footer=[f"Model: {args.output}", "Pipeline step: 03_fit_prior"],
        )
        write_report(html, args.report)
    except (GbiError, OSError) as e:
        print(f"\n❌ ERROR: {e}")
        return 1

    print(f"\n✓ Model saved to {args.output}")
    print(f"✓ Report saved to {args.report}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
