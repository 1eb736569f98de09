"""
Geometric saliency of L-junctions and the Geometric Building Index (GBI).

    g1(j) = (1 - rho_j) * P(building | beta_j)
    g2(j) = sum over neighbors j' of w(|c_j - c_j'|) * g1(j')
    GBI(p) = sum over junctions whose parallelogram contains p of g1 + g2

Neighbors are the k nearest junction centers closer than the junction's
longest branch, among junctions whose branch scales differ by at most
scale_ratio. The raw index is optionally blurred, multiplied by the shadow
factor 1 - top-hat(brightness), and divided by its maximum.
"""

import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

sys.path.append(str(Path(__file__).resolve().parents[2] / "common"))
sys.path.append(str(Path(__file__).resolve().parents[2] / "02_detect_junctions" / "extract"))
sys.path.append(str(Path(__file__).resolve().parents[2] / "03_fit_prior" / "helpers"))
from angle_prior import posterior_building
from errors import ParameterError
from junction_detection import detect_junctions
from l_junction import covered_pixels, decompose
from raster_core import (
    StructuringElement, as_raster, black_top_hat, gaussian_blur, max_normalize, minmax_normalize,
)


@dataclass(frozen=True)
class SaliencyParams:
    """Saliency and post-processing settings plus the ablation switches."""

    neighbor_k: int = 4
    scale_ratio: float = 3.0
    squared_distance_weight: bool = False
    blur_side: int = 5
    blur_sigma: float = 0.5
    tophat_side: int = 51
    use_angle: bool = True
    use_neighbor: bool = True
    use_shadow: bool = True
    use_blur: bool = True

    @classmethod
    def from_config(cls, config, **flags):
        return cls(
            neighbor_k=config.neighbor_k,
            scale_ratio=config.scale_ratio,
            squared_distance_weight=config.squared_distance_weight,
            blur_side=config.blur_side,
            blur_sigma=config.blur_sigma,
            tophat_side=config.tophat_side,
            **flags,
        )


# Ablation rows, from raw saliency up to the full index
ABLATION_VARIANTS = {
    "raw": dict(use_angle=False, use_neighbor=False, use_shadow=False, use_blur=True),
    "+neighbor": dict(use_angle=False, use_neighbor=True, use_shadow=False, use_blur=True),
    "+angle": dict(use_angle=True, use_neighbor=True, use_shadow=False, use_blur=True),
    "+shadow": dict(use_angle=True, use_neighbor=True, use_shadow=True, use_blur=True),
}


def ablation_params(base, variant):
    if variant not in ABLATION_VARIANTS:
        raise ParameterError(f"unknown ablation variant {variant!r}")
    return replace(base, **ABLATION_VARIANTS[variant])


@dataclass(frozen=True)
class SaliencyRecord:
    junction: object
    g1: float
    g2: float
    neighbors: tuple

    @property
    def saliency(self):
        return self.g1 + self.g2


@dataclass(frozen=True)
class GbiMap:
    raw: np.ndarray
    final: np.ndarray


@dataclass(frozen=True)
class GbiRun:
    """Every intermediate of one GBI computation."""

    gbi: GbiMap
    junctions: list
    ljunctions: list
    records: list


def first_order(ljunction, model):
    """(1 - rho) * P(building | beta); plain (1 - rho) when model is None."""
    reliability = 1.0 - ljunction.rho
    if model is None:
        return reliability
    return reliability * posterior_building(model, ljunction.beta)


def _centers(ljunctions):
    return np.array([lj.center for lj in ljunctions], dtype=np.float64).reshape(-1, 2)


def build_neighbor_index(ljunctions):
    return cKDTree(_centers(ljunctions))


def find_neighbors(ljunctions, idx, k, scale_ratio, tree=None):
    """Indices of up to k nearest junctions within the branch-length radius.

    A junction j qualifies when |c_idx - c_j| < max(s1, s2) of junction idx
    and neither junction's longest branch is more than scale_ratio times the
    other's. Ties in distance go to the lower index.
    """
    if k <= 0 or len(ljunctions) < 2:
        return []
    if tree is None:
        tree = build_neighbor_index(ljunctions)
    me = ljunctions[idx]
    tau = me.max_scale
    cx, cy = me.center

    found = []
    for j in tree.query_ball_point((cx, cy), r=tau * (1.0 + 1e-9) + 1e-9):
        if j == idx:
            continue
        other = ljunctions[j]
        ox, oy = other.center
        dist = math.hypot(ox - cx, oy - cy)
        if dist >= tau:
            continue
        if other.max_scale > scale_ratio * tau or tau > scale_ratio * other.max_scale:
            continue
        found.append((dist, j))
    found.sort()
    return [j for _, j in found[:k]]


def distance_weight(dist, tau, squared=False):
    """exp(-d / tau), or exp(-d^2 / tau^2) for the squared form."""
    if squared:
        return math.exp(-(dist * dist) / (tau * tau))
    return math.exp(-dist / tau)


def pairwise(ljunctions, records, idx, squared=False):
    """Distance-weighted sum of the neighbors' first-order saliency."""
    me = ljunctions[idx]
    tau = me.max_scale
    cx, cy = me.center
    total = 0.0
    for j in records[idx].neighbors:
        ox, oy = ljunctions[j].center
        total += distance_weight(math.hypot(ox - cx, oy - cy), tau, squared) * records[j].g1
    return total


def compute_records(ljunctions, model, params):
    """First-order and pairwise saliency for every L-junction."""
    if params.use_angle and model is None:
        raise ParameterError("an angle prior model is required unless the angle term is disabled")
    g1 = [first_order(lj, model if params.use_angle else None) for lj in ljunctions]

    neighbors = [() for _ in ljunctions]
    if params.use_neighbor and len(ljunctions) > 1:
        tree = build_neighbor_index(ljunctions)
        neighbors = [
            tuple(find_neighbors(ljunctions, i, params.neighbor_k, params.scale_ratio, tree))
            for i in range(len(ljunctions))
        ]

    records = [
        SaliencyRecord(junction=lj, g1=g, g2=0.0, neighbors=nb)
        for lj, g, nb in zip(ljunctions, g1, neighbors)
    ]
    return [
        replace(rec, g2=pairwise(ljunctions, records, i, params.squared_distance_weight))
        for i, rec in enumerate(records)
    ]


def canonical_order(records):
    """Records sorted by geometry so accumulation does not depend on list order."""
    def key(rec):
        lj = rec.junction
        cx, cy = lj.center
        return (cy, cx, lj.y, lj.x, lj.nu1, lj.nu2, rec.saliency)
    return sorted(records, key=key)


def accumulate_gbi(records, bounds):
    """Add each junction's g1 + g2 to every pixel of its parallelogram.

    Args:
        records: SaliencyRecord list
        bounds: (height, width)
    """
    raw = np.zeros(bounds, dtype=np.float64)
    for rec in canonical_order(records):
        ys, xs = covered_pixels(rec.junction.parallelogram(), bounds)
        raw[ys, xs] += rec.saliency
    return raw


def shadow_factor(brightness, tophat_side):
    """1 - min-max normalized black top-hat of the brightness channel."""
    return 1.0 - minmax_normalize(black_top_hat(brightness, StructuringElement(tophat_side)))


def finalize_gbi(raw, brightness, params):
    """Blur, suppress shadows and normalize the raw index to [0, 1]."""
    raw = as_raster(raw)
    brightness = as_raster(brightness)
    if raw.shape != brightness.shape:
        raise ParameterError(f"raw index {raw.shape} and brightness {brightness.shape} differ in shape")

    index = raw
    if params.use_blur:
        index = gaussian_blur(index, params.blur_side, params.blur_sigma)
    if params.use_shadow:
        index = index * shadow_factor(brightness, params.tophat_side)
    return GbiMap(raw=raw, final=max_normalize(np.maximum(index, 0.0)))


def run_gbi(img, model, detection_params, params):
    """Detect, decompose, score, rasterize and finalize one image."""
    img = as_raster(img)
    return gbi_from_junctions(img, detect_junctions(img, detection_params), model, params)


def gbi_from_junctions(img, junctions, model, params):
    """Everything after detection; lets ablation variants share one detection pass."""
    img = as_raster(img)
    ljunctions = [lj for j in junctions for lj in decompose(j)]
    records = compute_records(ljunctions, model, params)
    raw = accumulate_gbi(records, img.shape)
    return GbiRun(
        gbi=finalize_gbi(raw, img, params),
        junctions=junctions,
        ljunctions=ljunctions,
        records=records,
    )


def compute_gbi(img, model, detection_params, params):
    return run_gbi(img, model, detection_params, params).gbi


def records_to_frame(records):
    rows = []
    for rec in records:
        lj = rec.junction
        cx, cy = lj.center
        rows.append({
            "x": lj.x, "y": lj.y, "cx": cx, "cy": cy, "beta": lj.beta, "rho": lj.rho,
            "g1": rec.g1, "g2": rec.g2, "neighbors": " ".join(str(j) for j in rec.neighbors),
        })
    return pd.DataFrame(rows, columns=["x", "y", "cx", "cy", "beta", "rho", "g1", "g2", "neighbors"])


def raw_to_frame(raw):
    """Nonzero pixels of the raw index as (x, y, value) rows."""
    ys, xs = np.nonzero(raw)
    return pd.DataFrame({"x": xs, "y": ys, "value": raw[ys, xs]})
