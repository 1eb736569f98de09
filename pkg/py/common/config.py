#!/usr/bin/env python3
"""
Pipeline configuration.

Every tunable parameter of detection, saliency, prior fitting and evaluation
lives in one frozen Config. Config files are plain text, one `key = value`
per line:

    # detector
    scales = 5, 10, 15, 20, 30
    epsilon = 1.0
    nms_radius = auto

Run this file directly (or `run.py dump-config`) to print the effective
configuration.
"""

import argparse
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from atomic_io import write_text
from errors import GbiError, ImageFormatError, ParameterError

# Detector
DEFAULT_SCALES = (5, 10, 15, 20, 30)
DEFAULT_ORIENTATION_BINS = 64
DEFAULT_EPSILON = 1.0
DEFAULT_CANDIDATE_GRADIENT = 0.15
DEFAULT_RING_SUPPORT = 2.0
DEFAULT_ROOT_LENGTH = 4.0
DEFAULT_MAX_BRANCH_SCALE = 120
DEFAULT_PRE_BLUR_SIDE = 5
DEFAULT_PRE_BLUR_SIGMA = 1.0

# Saliency
DEFAULT_NEIGHBOR_K = 4
DEFAULT_SCALE_RATIO = 3.0
DEFAULT_BLUR_SIDE = 5
DEFAULT_BLUR_SIGMA = 0.5
DEFAULT_TOPHAT_SIDE = 51

# Angle prior
DEFAULT_BUILDING_COMPONENTS = 3
DEFAULT_BACKGROUND_COMPONENTS = 4
DEFAULT_OVERLAP_RATIO = 0.8
DEFAULT_MIN_CLASS_JUNCTIONS = 30

# Evaluation
DEFAULT_THRESHOLD_STEP = 0.01

DEFAULT_SEED = 17

AUTO = "auto"


@dataclass(frozen=True)
class Config:
    scales: tuple = DEFAULT_SCALES
    orientation_bins: int = DEFAULT_ORIENTATION_BINS
    epsilon: float = DEFAULT_EPSILON
    nms_radius: float = None
    candidate_gradient: float = DEFAULT_CANDIDATE_GRADIENT
    ring_support: float = DEFAULT_RING_SUPPORT
    root_length: float = DEFAULT_ROOT_LENGTH
    max_branch_scale: int = DEFAULT_MAX_BRANCH_SCALE
    pre_blur_side: int = DEFAULT_PRE_BLUR_SIDE
    pre_blur_sigma: float = DEFAULT_PRE_BLUR_SIGMA
    neighbor_k: int = DEFAULT_NEIGHBOR_K
    scale_ratio: float = DEFAULT_SCALE_RATIO
    squared_distance_weight: bool = False
    blur_side: int = DEFAULT_BLUR_SIDE
    blur_sigma: float = DEFAULT_BLUR_SIGMA
    tophat_side: int = DEFAULT_TOPHAT_SIDE
    threshold_step: float = DEFAULT_THRESHOLD_STEP
    building_components: int = DEFAULT_BUILDING_COMPONENTS
    background_components: int = DEFAULT_BACKGROUND_COMPONENTS
    overlap_ratio: float = DEFAULT_OVERLAP_RATIO
    prior_building: float = None
    min_class_junctions: int = DEFAULT_MIN_CLASS_JUNCTIONS
    seed: int = DEFAULT_SEED
    jobs: int = 1

    def validate(self):
        """Check every field against the precondition of the module using it.

        Returns:
            self, so calls can be chained

        Raises:
            ParameterError: naming the first invalid field
        """
        scales = self.scales
        if len(scales) == 0:
            raise ParameterError("scales: at least one scale is required")
        if any(s < 1 for s in scales):
            raise ParameterError(f"scales: every scale must be >= 1, got {scales}")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ParameterError(f"scales: must be strictly increasing, got {scales}")
        if self.orientation_bins < 4:
            raise ParameterError(f"orientation_bins: must be >= 4, got {self.orientation_bins}")
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon: must be > 0, got {self.epsilon}")
        if self.nms_radius is not None and self.nms_radius < 0:
            raise ParameterError(f"nms_radius: must be >= 0, got {self.nms_radius}")
        if not 0 <= self.candidate_gradient <= 1:
            raise ParameterError(f"candidate_gradient: must be in [0, 1], got {self.candidate_gradient}")
        if self.ring_support < 1:
            raise ParameterError(f"ring_support: must be >= 1, got {self.ring_support}")
        if not 1 <= self.root_length <= scales[0]:
            raise ParameterError(
                f"root_length: must be in [1, smallest scale], got {self.root_length}"
            )
        if self.max_branch_scale < scales[-1]:
            raise ParameterError(
                f"max_branch_scale: must be >= largest scale {scales[-1]}, got {self.max_branch_scale}"
            )
        if self.pre_blur_side != 0:
            _check_kernel("pre_blur", self.pre_blur_side, self.pre_blur_sigma)
        if self.neighbor_k < 0:
            raise ParameterError(f"neighbor_k: must be >= 0, got {self.neighbor_k}")
        if self.scale_ratio < 1:
            raise ParameterError(f"scale_ratio: must be >= 1, got {self.scale_ratio}")
        _check_kernel("blur", self.blur_side, self.blur_sigma)
        _check_odd("tophat_side", self.tophat_side)
        if not 0 < self.threshold_step <= 0.5:
            raise ParameterError(f"threshold_step: must be in (0, 0.5], got {self.threshold_step}")
        steps = 1.0 / self.threshold_step
        if abs(steps - round(steps)) > 1e-9:
            raise ParameterError(
                f"threshold_step: must divide 1 evenly, got {self.threshold_step}"
            )
        if self.building_components < 1 or self.background_components < 1:
            raise ParameterError("building_components/background_components: must be >= 1")
        if not 0 <= self.overlap_ratio < 1:
            raise ParameterError(f"overlap_ratio: must be in [0, 1), got {self.overlap_ratio}")
        if self.prior_building is not None and not 0 <= self.prior_building <= 1:
            raise ParameterError(f"prior_building: must be in [0, 1], got {self.prior_building}")
        if self.min_class_junctions < 1:
            raise ParameterError(
                f"min_class_junctions: must be >= 1, got {self.min_class_junctions}"
            )
        if self.seed < 0:
            raise ParameterError(f"seed: must be >= 0, got {self.seed}")
        if self.jobs < 1:
            raise ParameterError(f"jobs: must be >= 1, got {self.jobs}")
        return self

    @property
    def effective_nms_radius(self):
        return float(self.scales[0]) if self.nms_radius is None else self.nms_radius

    @property
    def threshold_count(self):
        """Number of threshold steps; the sweep has threshold_count + 1 entries."""
        return int(round(1.0 / self.threshold_step))


def _check_odd(name, side):
    if side < 1 or side % 2 == 0:
        raise ParameterError(f"{name}: must be odd and >= 1, got {side}")


def _check_kernel(prefix, side, sigma):
    _check_odd(f"{prefix}_side", side)
    if sigma <= 0:
        raise ParameterError(f"{prefix}_sigma: must be > 0, got {sigma}")


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_scales(text):
    return tuple(int(part) for part in text.split(",") if part.strip())


def _optional(parse):
    def parse_optional(text):
        return None if text.lower() == AUTO else parse(text)
    return parse_optional


# Parser per field; dump_config writes values these accept back
PARSERS = {
    "scales": _parse_scales,
    "orientation_bins": int,
    "epsilon": float,
    "nms_radius": _optional(float),
    "candidate_gradient": float,
    "ring_support": float,
    "root_length": float,
    "max_branch_scale": int,
    "pre_blur_side": int,
    "pre_blur_sigma": float,
    "neighbor_k": int,
    "scale_ratio": float,
    "squared_distance_weight": _parse_bool,
    "blur_side": int,
    "blur_sigma": float,
    "tophat_side": int,
    "threshold_step": float,
    "building_components": int,
    "background_components": int,
    "overlap_ratio": float,
    "prior_building": _optional(float),
    "min_class_junctions": int,
    "seed": int,
    "jobs": int,
}


def parse_config(text, source="<config>"):
    """Parse `key = value` lines into a validated Config.

    Args:
        text: Config file contents
        source: Name used in error messages

    Raises:
        ImageFormatError: malformed line, unknown key or unparsable value
        ParameterError: a value outside its valid range
    """
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ImageFormatError(f"{source}:{lineno}: expected 'key = value', got {raw_line.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARSERS:
            raise ImageFormatError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = PARSERS[key](value)
        except ValueError as e:
            raise ImageFormatError(f"{source}:{lineno}: bad value for {key}: {e}") from e
    return Config(**values).validate()


def load_config(path):
    """Read a config file; a missing file raises FileNotFoundError."""
    path = Path(path)
    return parse_config(path.read_text(), source=path.name)


def _format_value(value):
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config):
    """Render every field of a Config as config-file text."""
    lines = ["# Effective GBI pipeline configuration"]
    for name, value in asdict(config).items():
        lines.append(f"{name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def add_config_arguments(parser, jobs=False):
    """Attach the --config/--seed (and optionally --jobs) flags every stage shares."""
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    if jobs:
        parser.add_argument("--jobs", type=int, help="worker processes for per-image work")
    parser.add_argument("--quiet", action="store_true", help="suppress per-item progress lines")


def config_from_args(args):
    """Load --config (or defaults) and apply command-line overrides."""
    config = load_config(args.config) if args.config else Config()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    return replace(config, **overrides).validate()


def main(argv=None):
    parser = argparse.ArgumentParser(description="Print the effective pipeline configuration")
    parser.add_argument("--config", type=Path, help="config file to load before dumping")
    parser.add_argument("--output", type=Path, help="write to this file instead of stdout")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config) if args.config else Config()
        text = dump_config(config)
        if args.output:
            write_text(text, args.output)
            print(f"✓ Wrote {args.output}")
        else:
            sys.stdout.write(text)
    except (GbiError, OSError) as e:
        print(f"❌ ERROR: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
