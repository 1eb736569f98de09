#!/usr/bin/env python3
"""
Compute Geometric Building Index heatmaps.

Inputs are image files or directories of images. For every image writes,
into the output directory:
    <name>.png           final GBI heatmap (8-bit, 255 = max index)
    <name>_records.csv   per-L-junction g1, g2 and neighbor lists
    <name>_raw.csv       nonzero raw-index pixels (with --dump-raw)

The --no-angle/--no-neighbor/--no-shadow/--no-blur switches turn off one
term each; all four together give the raw-saliency index.
"""
import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent / 'common'))
sys.path.append(str(Path(__file__).parent.parent / '02_detect_junctions' / 'extract'))
sys.path.append(str(Path(__file__).parent.parent / '03_fit_prior' / 'helpers'))
sys.path.append(str(Path(__file__).parent / 'helpers'))
from angle_prior import load_model
from atomic_io import write_csv
from config import add_config_arguments, config_from_args
from dataset_files import list_images
from errors import GbiError
from junction_detection import DetectionParams
from raster_core import load_image, save_image
from saliency import SaliencyParams, raw_to_frame, records_to_frame, run_gbi

DEFAULT_MODEL = Path("models/angle_prior.json")


def expand_inputs(inputs):
    """Image files in argument order; directories contribute their sorted images."""
    paths = []
    for item in inputs:
        item = Path(item)
        if item.is_dir():
            paths.extend(list_images(item))
        else:
            paths.append(item)
    return paths


def process_image(image_path, output_dir, model, detection_params, params, dump_raw=False):
    """Run the full index on one image and write its outputs.

    Returns:
        (L-junction count, in-image maximum of the raw index)
    """
    img = load_image(image_path)
    run = run_gbi(img, model, detection_params, params)

    stem = Path(image_path).stem
    save_image(run.gbi.final, output_dir / f"{stem}.png")
    write_csv(records_to_frame(run.records), output_dir / f"{stem}_records.csv")
    if dump_raw:
        write_csv(raw_to_frame(run.gbi.raw), output_dir / f"{stem}_raw.csv")
    return len(run.ljunctions), float(run.gbi.raw.max())


def _process_safely(task):
    image_path = task[0]
    try:
        return image_path, process_image(*task), None
    except (GbiError, OSError) as e:
        return image_path, None, str(e)


def main(argv=None):
    parser = argparse.ArgumentParser(description="Compute Geometric Building Index heatmaps")
    parser.add_argument("inputs", type=Path, nargs="+", help="images or directories of images")
    parser.add_argument("--model", type=Path, default=DEFAULT_MODEL,
                        help=f"angle prior model (default: {DEFAULT_MODEL})")
    parser.add_argument("--output-dir", type=Path, default=Path("outputs/gbi"),
                        help="heatmap directory (default: outputs/gbi)")
    parser.add_argument("--no-angle", action="store_true", help="drop the angle prior term")
    parser.add_argument("--no-neighbor", action="store_true", help="drop the pairwise term")
    parser.add_argument("--no-shadow", action="store_true", help="skip shadow suppression")
    parser.add_argument("--no-blur", action="store_true", help="skip the Gaussian blur")
    parser.add_argument("--dump-raw", action="store_true", help="also write the raw index as CSV")
    add_config_arguments(parser, jobs=True)
    args = parser.parse_args(argv)

    print(f"\n{'='*70}")
    print("COMPUTE GEOMETRIC BUILDING INDEX")
    print(f"{'='*70}")

    try:
        config = config_from_args(args)
        detection_params = DetectionParams.from_config(config)
        params = SaliencyParams.from_config(
            config,
            use_angle=not args.no_angle,
            use_neighbor=not args.no_neighbor,
            use_shadow=not args.no_shadow,
            use_blur=not args.no_blur,
        )

        model = None
        if params.use_angle:
            if not args.model.exists():
                raise FileNotFoundError(
                    f"angle prior model not found: {args.model} "
                    "(run `python run.py` or `python run.py fit-prior` first, or pass --no-angle)"
                )
            model = load_model(args.model)
            print(f"  ✓ Loaded angle prior from {args.model}")

        images = expand_inputs(args.inputs)
        if not images:
            raise FileNotFoundError("no PNG/PGM images among the inputs")
    except (GbiError, OSError) as e:
        print(f"\n❌ ERROR: {e}")
        return 1

    switches = [name for name, on in (
        ("angle", params.use_angle), ("neighbor", params.use_neighbor),
        ("shadow", params.use_shadow), ("blur", params.use_blur),
    ) if on]
    print(f"  Terms: {', '.join(switches) if switches else 'raw saliency only'}")

    tasks = [(path, args.output_dir, model, detection_params, params, args.dump_raw) for path in images]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_process_safely, tasks))
    else:
        results = [_process_safely(task) for task in tasks]

    failures = 0
    for path, summary, error in results:
        if error is not None:
            failures += 1
            print(f"  ❌ {path.name}: {error}")
        elif not args.quiet:
            print(f"  ✓ {path.name}: {summary[0]} L-junctions, raw max {summary[1]:.3f}")

    print(f"\n✓ Processed {len(results) - failures}/{len(results)} images -> {args.output_dir}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
