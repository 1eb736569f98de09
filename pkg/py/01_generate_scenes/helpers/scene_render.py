"""
Synthetic overhead scenes with known building footprints.

Buildings are bright rectangles or parallelograms on a flat background, each
optionally casting a uniform shadow translated along a scene-wide offset.
Rendering is deterministic: the same SceneSpec always yields
byte-identical image, mask and corner table.
"""

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import ndimage

sys.path.append(str(Path(__file__).resolve().parents[2] / "common"))
sys.path.append(str(Path(__file__).resolve().parents[2] / "02_detect_junctions" / "extract"))
from atomic_io import write_csv
from errors import ParameterError
from l_junction import Parallelogram, covered_pixels, included_angle
from raster_core import save_image

SCENE_SIZE = 200
MIN_BUILDINGS, MAX_BUILDINGS = 2, 5
EDGE_RANGE = (18.0, 48.0)
PARALLELOGRAM_SHARE = 0.2
PARALLELOGRAM_ANGLES = (math.pi / 3.0, 2.0 * math.pi / 3.0)
MIN_CONTRAST = 0.3
MAX_NOISE = 0.02
SHADOW_SHARE = 0.7
SHADOW_LENGTH = (4.0, 9.0)
SHADOW_DARKNESS = (0.4, 0.7)

# Free pixels kept around every building and its shadow
BUILDING_GAP = 6
BORDER_MARGIN = 6
PLACEMENT_ATTEMPTS = 200

CORNER_COLUMNS = ["x", "y", "beta"]


@dataclass(frozen=True)
class BuildingSpec:
    corner: tuple
    edge1: tuple
    edge2: tuple
    intensity: float

    def region(self):
        return Parallelogram(corner=tuple(self.corner), nu1=tuple(self.edge1), nu2=tuple(self.edge2))

    def corners(self):
        """Vertices with the included angle between the two edges meeting there."""
        (px, py), (ax, ay), (bx, by) = self.corner, self.edge1, self.edge2
        theta1 = math.atan2(ay, ax)
        theta2 = math.atan2(by, bx)
        beta = float(included_angle(theta1, theta2))
        return [
            (px, py, beta),
            (px + ax, py + ay, math.pi - beta),
            (px + ax + bx, py + ay + by, beta),
            (px + bx, py + by, math.pi - beta),
        ]


@dataclass(frozen=True)
class ShadowSpec:
    offset: tuple
    darkness: float


@dataclass(frozen=True)
class SceneSpec:
    width: int = SCENE_SIZE
    height: int = SCENE_SIZE
    buildings: tuple = field(default_factory=tuple)
    background: float = 0.2
    shadow: ShadowSpec = None
    noise_sigma: float = 0.0
    seed: int = 0

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError(f"scene must be at least 1x1, got {self.width}x{self.height}")
        if not 0 <= self.background <= 1:
            raise ParameterError(f"background intensity must be in [0, 1], got {self.background}")
        if self.noise_sigma < 0:
            raise ParameterError(f"noise sigma must be >= 0, got {self.noise_sigma}")
        if self.shadow is not None and not 0 <= self.shadow.darkness <= 1:
            raise ParameterError(f"shadow darkness must be in [0, 1], got {self.shadow.darkness}")
        for i, b in enumerate(self.buildings):
            if not 0 <= b.intensity <= 1:
                raise ParameterError(f"building {i}: intensity must be in [0, 1], got {b.intensity}")
            if b.region().area <= 0:
                raise ParameterError(f"building {i}: edge vectors are collinear")
            for x, y in b.region().vertices:
                if not (0 <= x <= self.width - 1 and 0 <= y <= self.height - 1):
                    raise ParameterError(f"building {i}: vertex ({x:.1f}, {y:.1f}) outside the scene")
        return self


def footprint(region, bounds):
    """Boolean mask of the pixels covered by a parallelogram."""
    mask = np.zeros(bounds, dtype=bool)
    ys, xs = covered_pixels(region, bounds)
    mask[ys, xs] = True
    return mask


def shadow_region(building, shadow):
    dx, dy = shadow.offset
    px, py = building.corner
    return Parallelogram(corner=(px + dx, py + dy), nu1=tuple(building.edge1), nu2=tuple(building.edge2))


def render(spec):
    """Rasterize a scene.

    Args:
        spec: SceneSpec

    Returns:
        (image, mask, corners): image raster in [0, 1], binary float mask of
        building pixels, DataFrame of ground-truth corners (x, y, beta)

    Raises:
        ParameterError: invalid scene or overlapping buildings
    """
    spec.validate()
    bounds = (spec.height, spec.width)

    mask = np.zeros(bounds, dtype=bool)
    footprints = []
    for i, building in enumerate(spec.buildings):
        covered = footprint(building.region(), bounds)
        if np.any(covered & mask):
            raise ParameterError(f"building {i} overlaps an earlier building")
        mask |= covered
        footprints.append(covered)

    image = np.full(bounds, float(spec.background))
    if spec.shadow is not None:
        shaded = np.zeros(bounds, dtype=bool)
        for building in spec.buildings:
            shaded |= footprint(shadow_region(building, spec.shadow), bounds)
        shaded &= ~mask
        image[shaded] *= 1.0 - spec.shadow.darkness

    for building, covered in zip(spec.buildings, footprints):
        image[covered] = building.intensity

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        image = np.clip(image + rng.normal(0.0, spec.noise_sigma, size=bounds), 0.0, 1.0)

    rows = [corner for building in spec.buildings for corner in building.corners()]
    corners = pd.DataFrame(rows, columns=CORNER_COLUMNS)
    return image, mask.astype(np.float64), corners


def _random_building(rng, width, height, intensity, margin):
    angle = math.pi / 2.0
    if rng.random() < PARALLELOGRAM_SHARE:
        angle = rng.uniform(*PARALLELOGRAM_ANGLES)
    len1, len2 = rng.uniform(*EDGE_RANGE, size=2)
    rotation = rng.uniform(0.0, math.pi)
    edge1 = (len1 * math.cos(rotation), len1 * math.sin(rotation))
    edge2 = (len2 * math.cos(rotation + angle), len2 * math.sin(rotation + angle))

    # offsets of the other three vertices relative to the corner
    xs = [0.0, edge1[0], edge1[0] + edge2[0], edge2[0]]
    ys = [0.0, edge1[1], edge1[1] + edge2[1], edge2[1]]
    x_lo, x_hi = margin - min(xs), width - 1 - margin - max(xs)
    y_lo, y_hi = margin - min(ys), height - 1 - margin - max(ys)
    if x_lo > x_hi or y_lo > y_hi:
        return None
    corner = (rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi))
    return BuildingSpec(corner=corner, edge1=edge1, edge2=edge2, intensity=intensity)


def random_scene_spec(seed, width=SCENE_SIZE, height=SCENE_SIZE):
    """Draw a scene: 2-5 separated buildings, optional shadow, light noise.

    Buildings are 80% rectangles and 20% parallelograms with an included angle
    in [pi/3, 2pi/3]; edges are 18-48 px, rotation uniform in [0, pi), and
    every roof is at least 0.3 brighter than the ground.
    """
    rng = np.random.default_rng(seed)
    background = rng.uniform(0.1, 0.35)
    noise_sigma = rng.uniform(0.0, MAX_NOISE)

    shadow = None
    if rng.random() < SHADOW_SHARE:
        direction = rng.uniform(0.0, 2.0 * math.pi)
        length = rng.uniform(*SHADOW_LENGTH)
        shadow = ShadowSpec(
            offset=(length * math.cos(direction), length * math.sin(direction)),
            darkness=rng.uniform(*SHADOW_DARKNESS),
        )
    margin = BORDER_MARGIN + (SHADOW_LENGTH[1] if shadow else 0.0)

    bounds = (height, width)
    target = int(rng.integers(MIN_BUILDINGS, MAX_BUILDINGS + 1))
    reserved = np.zeros(bounds, dtype=bool)
    buildings = []
    for _ in range(PLACEMENT_ATTEMPTS):
        if len(buildings) == target:
            break
        intensity = min(background + rng.uniform(MIN_CONTRAST, 0.55), 1.0)
        building = _random_building(rng, width, height, intensity, margin)
        if building is None:
            continue
        claimed = footprint(building.region(), bounds)
        if shadow is not None:
            claimed |= footprint(shadow_region(building, shadow), bounds)
        if np.any(claimed & reserved):
            continue
        reserved |= ndimage.binary_dilation(claimed, iterations=BUILDING_GAP)
        buildings.append(building)

    return SceneSpec(
        width=width, height=height, buildings=tuple(buildings),
        background=background, shadow=shadow, noise_sigma=noise_sigma, seed=int(seed),
    )


def scene_seeds(n, seed):
    """Independent per-scene seeds derived from one suite seed."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(n)]


def scene_name(index):
    return f"{index:03d}"


def generate_suite(n, seed, output_dir, verbose=False):
    """Write n scenes as scenes/NNN.pgm, masks/NNN.pgm and corners/NNN.csv.

    Returns:
        DataFrame with one summary row per scene
    """
    if n < 1:
        raise ParameterError(f"scene count must be >= 1, got {n}")
    output_dir = Path(output_dir)

    rows = []
    for index, scene_seed in enumerate(scene_seeds(n, seed)):
        spec = random_scene_spec(scene_seed)
        image, mask, corners = render(spec)
        name = scene_name(index)
        save_image(image, output_dir / "scenes" / f"{name}.pgm")
        save_image(mask, output_dir / "masks" / f"{name}.pgm")
        write_csv(corners, output_dir / "corners" / f"{name}.csv")
        rows.append({
            "scene": name,
            "seed": scene_seed,
            "buildings": len(spec.buildings),
            "shadow": spec.shadow is not None,
            "noise_sigma": round(spec.noise_sigma, 4),
            "building_pixels": int(mask.sum()),
        })
        if verbose:
            print(f"  ✓ {name}: {len(spec.buildings)} buildings, "
                  f"{'shadow' if spec.shadow else 'no shadow'}")
    return pd.DataFrame(rows)
