#!/usr/bin/env python3
"""
Detect junctions in one or more images.

For every input image writes, into the output directory:
    <name>_junctions.csv   x, y, rho, M, then (s_i, theta_i) per branch
    <name>_ljunctions.csv  L-junction decomposition with centers and angles
    <name>_overlay.png     branches drawn over the image
"""
import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

sys.path.append(str(Path(__file__).parent.parent / 'common'))
sys.path.append(str(Path(__file__).parent / 'extract'))
from atomic_io import write_csv
from config import add_config_arguments, config_from_args
from errors import GbiError
from junction_detection import DetectionParams, detect_junctions, junctions_to_frame
from l_junction import decompose, ljunctions_to_frame
from raster_core import load_image
from report import save_figure

BRANCH_COLORS = ["#e74c3c", "#3498db", "#2ecc71", "#f39c12", "#9b59b6", "#1abc9c"]


def plot_overlay(img, junctions, path):
    """Draw each branch as a segment from p to p + s(cos theta, sin theta)."""
    height, width = img.shape
    fig, ax = plt.subplots(figsize=(8, 8 * height / width))
    ax.imshow(img, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    for j in junctions:
        for i, b in enumerate(j.branches):
            ax.plot([j.x, j.x + b.scale * math.cos(b.theta)],
                    [j.y, j.y + b.scale * math.sin(b.theta)],
                    color=BRANCH_COLORS[i % len(BRANCH_COLORS)], linewidth=1.2)
        ax.plot(j.x, j.y, marker="o", markersize=3, color="yellow")
    ax.set_xlim(-0.5, width - 0.5)
    ax.set_ylim(height - 0.5, -0.5)
    ax.set_title(f"{len(junctions)} junctions", fontsize=11, fontweight="bold")
    ax.axis("off")
    return save_figure(fig, path)


def process_image(image_path, output_dir, params):
    """Detect and write all outputs for one image; returns the junction count."""
    img = load_image(image_path)
    junctions = detect_junctions(img, params)
    ljunctions = [lj for j in junctions for lj in decompose(j)]

    stem = Path(image_path).stem
    write_csv(junctions_to_frame(junctions), output_dir / f"{stem}_junctions.csv")
    write_csv(ljunctions_to_frame(ljunctions), output_dir / f"{stem}_ljunctions.csv")
    plot_overlay(img, junctions, output_dir / f"{stem}_overlay.png")
    return len(junctions), len(ljunctions)


def _process_safely(task):
    image_path, output_dir, params = task
    try:
        return image_path, process_image(image_path, output_dir, params), None
    except (GbiError, OSError) as e:
        return image_path, None, str(e)


def main(argv=None):
    parser = argparse.ArgumentParser(description="Detect anisotropic-scale junctions")
    parser.add_argument("images", type=Path, nargs="+", help="PNG/PGM images")
    parser.add_argument("--output-dir", type=Path, default=Path("outputs/junctions"),
                        help="where CSVs and overlays go (default: outputs/junctions)")
    add_config_arguments(parser, jobs=True)
    args = parser.parse_args(argv)

    print(f"\n{'='*70}")
    print("DETECT JUNCTIONS")
    print(f"{'='*70}")

    try:
        config = config_from_args(args)
        params = DetectionParams.from_config(config)
    except (GbiError, OSError) as e:
        print(f"\n❌ ERROR: {e}")
        return 1

    tasks = [(path, args.output_dir, params) for path in args.images]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_process_safely, tasks))
    else:
        results = [_process_safely(task) for task in tasks]

    failures = 0
    for path, counts, error in results:
        if error is not None:
            failures += 1
            print(f"  ❌ {path.name}: {error}")
        elif not args.quiet:
            print(f"  ✓ {path.name}: {counts[0]} junctions, {counts[1]} L-junctions")

    print(f"\n✓ Processed {len(results) - failures}/{len(results)} images -> {args.output_dir}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
