#!/usr/bin/env python3
"""
Locate images in dataset directories and align them by filename stem.
"""

from pathlib import Path

from errors import ParameterError

IMAGE_SUFFIXES = (".png", ".pgm")


def list_images(directory):
    """Sorted PNG/PGM files in a directory (non-recursive).

    Raises:
        FileNotFoundError: directory missing
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def pair_by_stem(left_dir, right_dir):
    """Align two image directories by file stem (`003.pgm` pairs with `003.png`).

    Returns:
        List of (left_path, right_path) in stem order

    Raises:
        ParameterError: listing every stem present on only one side
    """
    left = {p.stem: p for p in list_images(left_dir)}
    right = {p.stem: p for p in list_images(right_dir)}

    only_left = sorted(set(left) - set(right))
    only_right = sorted(set(right) - set(left))
    if only_left or only_right:
        lines = ["filename mismatch between directories:"]
        lines += [f"  {left[s].name} has no match in {right_dir}" for s in only_left]
        lines += [f"  {right[s].name} has no match in {left_dir}" for s in only_right]
        raise ParameterError("\n".join(lines))

    return [(left[s], right[s]) for s in sorted(left)]
