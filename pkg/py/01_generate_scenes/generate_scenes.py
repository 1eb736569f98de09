#!/usr/bin/env python3
"""
Generate a labeled synthetic suite of overhead scenes.

Output layout under the target directory:
    scenes/NNN.pgm   grayscale image
    masks/NNN.pgm    building footprint mask (255 = building)
    corners/NNN.csv  ground-truth corners (x, y, beta)
    suite.csv        one summary row per scene
"""
import argparse
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent / 'common'))
sys.path.append(str(Path(__file__).parent / 'helpers'))
from atomic_io import write_csv
from config import add_config_arguments, config_from_args
from errors import GbiError
from scene_render import generate_suite


def main(argv=None):
    parser = argparse.ArgumentParser(description="Generate a synthetic building scene suite")
    parser.add_argument("output_dir", type=Path, nargs="?", default=Path("data/synthetic"),
                        help="suite directory (default: data/synthetic)")
    parser.add_argument("--count", type=int, default=20, help="number of scenes (default: 20)")
    add_config_arguments(parser)
    args = parser.parse_args(argv)

    print(f"\n{'='*70}")
    print("GENERATE SYNTHETIC SCENES")
    print(f"{'='*70}")

    try:
        config = config_from_args(args)
        print(f"\n[1/2] Rendering {args.count} scenes (seed {config.seed})...")
        summary = generate_suite(args.count, config.seed, args.output_dir, verbose=not args.quiet)

        print("\n[2/2] Writing suite summary...")
        write_csv(summary, args.output_dir / "suite.csv")
    except (GbiError, OSError) as e:
        print(f"\n❌ ERROR: {e}")
        return 1

    print(f"\n✓ {len(summary)} scenes, {int(summary['buildings'].sum())} buildings "
          f"({int(summary['shadow'].sum())} scenes with shadows)")
    print(f"✓ Saved to {args.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
