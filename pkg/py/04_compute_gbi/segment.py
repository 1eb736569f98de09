#!/usr/bin/env python3
"""
Threshold a GBI heatmap into a binary building mask (255 where index >= t).
"""
import argparse
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent / 'common'))
from errors import GbiError
from raster_core import load_image, save_image


def unit_interval(text):
    """argparse type for a threshold in [0, 1]."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold must lie in [0, 1], got {value}")
    return value


def segment(heatmap, threshold):
    return (heatmap >= threshold).astype(float)


def main(argv=None):
    parser = argparse.ArgumentParser(description="Segment a GBI heatmap at a threshold")
    parser.add_argument("heatmap", type=Path, help="GBI heatmap (PNG/PGM)")
    parser.add_argument("--threshold", type=unit_interval, default=0.5,
                        help="index threshold in [0, 1] (default: 0.5)")
    parser.add_argument("--output", type=Path, help="binary PNG (default: <heatmap>_seg.png)")
    args = parser.parse_args(argv)

    output = args.output or args.heatmap.with_name(f"{args.heatmap.stem}_seg.png")
    try:
        mask = segment(load_image(args.heatmap), args.threshold)
        save_image(mask, output)
    except (GbiError, OSError) as e:
        print(f"❌ ERROR: {e}")
        return 1

    print(f"✓ {int(mask.sum()):,} of {mask.size:,} pixels at index >= {args.threshold} -> {output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
