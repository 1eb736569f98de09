"""
Angle prior over L-junction included angles.

Building corners concentrate around right angles while background junctions
spread over (0, pi]. Each class is modelled by a 1-D Gaussian mixture fitted
with EM, and Bayes' rule turns the two likelihoods into the probability that
a junction with included angle beta sits on a building.
"""

import json
import math
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from scipy.stats import norm

sys.path.append(str(Path(__file__).resolve().parents[2] / "common"))
sys.path.append(str(Path(__file__).resolve().parents[2] / "02_detect_junctions" / "extract"))
from atomic_io import write_json
from errors import FitError, ImageFormatError, ParameterError
from l_junction import covered_pixels

WEIGHT_TOLERANCE = 1e-9
SIGMA_FLOOR = 1e-3
EM_TOLERANCE = 1e-7
EM_MAX_ITER = 500
SAMPLES_PER_COMPONENT = 10
HISTOGRAM_BINS = 36


class JunctionLabel(Enum):
    BUILDING = "building"
    BACKGROUND = "background"


@dataclass(frozen=True)
class GaussianMixture:
    weights: tuple
    means: tuple
    sigmas: tuple

    def __post_init__(self):
        if not (len(self.weights) == len(self.means) == len(self.sigmas)) or not self.weights:
            raise ParameterError("mixture needs matching, non-empty weights/means/sigmas")
        if any(w < 0 for w in self.weights):
            raise ParameterError(f"mixture weights must be >= 0, got {self.weights}")
        if abs(sum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ParameterError(f"mixture weights must sum to 1, got {sum(self.weights):.12f}")
        if any(not s > 0 for s in self.sigmas):
            raise ParameterError(f"mixture sigmas must be > 0, got {self.sigmas}")

    @property
    def n_components(self):
        return len(self.weights)

    def to_records(self):
        return [
            {"w": float(w), "mu": float(mu), "sigma": float(s)}
            for w, mu, s in zip(self.weights, self.means, self.sigmas)
        ]

    @classmethod
    def from_records(cls, records):
        return cls(
            weights=tuple(float(r["w"]) for r in records),
            means=tuple(float(r["mu"]) for r in records),
            sigmas=tuple(float(r["sigma"]) for r in records),
        )


@dataclass(frozen=True)
class AnglePriorModel:
    building: GaussianMixture
    background: GaussianMixture
    prior_building: float

    def __post_init__(self):
        if not 0 <= self.prior_building <= 1:
            raise ParameterError(f"prior_building must be in [0, 1], got {self.prior_building}")

    @property
    def prior_background(self):
        return 1.0 - self.prior_building


def pdf(mixture, beta):
    """sum_i w_i N(beta; mu_i, sigma_i^2); scalar in, float out."""
    beta = np.asarray(beta, dtype=np.float64)
    dens = norm.pdf(beta[..., None], loc=np.asarray(mixture.means), scale=np.asarray(mixture.sigmas))
    out = dens @ np.asarray(mixture.weights)
    return float(out) if out.ndim == 0 else out


def mixture_mass(mixture, lo, hi):
    """Probability mass of the mixture on [lo, hi]."""
    means = np.asarray(mixture.means)
    sigmas = np.asarray(mixture.sigmas)
    cdf = norm.cdf(hi, loc=means, scale=sigmas) - norm.cdf(lo, loc=means, scale=sigmas)
    return float(np.dot(mixture.weights, cdf))


def posterior_building(model, beta):
    """P(building | beta) by Bayes' rule; the prior when both likelihoods vanish."""
    num = model.prior_building * np.asarray(pdf(model.building, beta))
    den = num + model.prior_background * np.asarray(pdf(model.background, beta))
    safe = np.where(den > 0, den, 1.0)
    out = np.where(den > 0, num / safe, model.prior_building)
    return float(out) if out.ndim == 0 else out


def label_junction(ljunction, mask, image_shape, overlap_ratio=0.8):
    """Label an L-junction by how much of its parallelogram lies on buildings.

    Args:
        ljunction: LJunction
        mask: Binary raster, 1 = building
        image_shape: Shape of the image the junction came from
        overlap_ratio: Building iff the covered fraction is strictly above this

    Returns:
        JunctionLabel, or None when the parallelogram covers no pixel

    Raises:
        ParameterError: mask and image shapes differ
    """
    mask = np.asarray(mask)
    if tuple(image_shape) != mask.shape:
        raise ParameterError(f"mask shape {mask.shape} does not match image shape {tuple(image_shape)}")
    ys, xs = covered_pixels(ljunction.parallelogram(), mask.shape)
    if ys.size == 0:
        return None
    ratio = float(mask[ys, xs].sum()) / ys.size
    return JunctionLabel.BUILDING if ratio > overlap_ratio else JunctionLabel.BACKGROUND


def _kmeans_plus_plus(samples, k, rng):
    """k-means++ seeding on 1-D samples."""
    centers = [samples[rng.integers(samples.size)]]
    for _ in range(1, k):
        d2 = np.min((samples[:, None] - np.asarray(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total > 0:
            centers.append(samples[rng.choice(samples.size, p=d2 / total)])
        else:
            centers.append(samples[rng.integers(samples.size)])
    return np.sort(np.asarray(centers, dtype=np.float64))


def em_fit_trace(samples, k, seed, tol=EM_TOLERANCE, max_iter=EM_MAX_ITER, sigma_floor=SIGMA_FLOOR):
    """Fit a k-component mixture by EM and return it with the log-likelihood history.

    Args:
        samples: Included angles in (0, pi]
        k: Component count
        seed: Seed of the k-means++ initialization
        tol: Stop when the log-likelihood improves by less than this
        max_iter: Iteration cap
        sigma_floor: Lower bound on component standard deviations

    Returns:
        (GaussianMixture, list of total log-likelihoods, one per iteration)

    Raises:
        ParameterError: fewer than 10 samples per component or out-of-range samples
        FitError: the log-likelihood decreased between iterations
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if k < 1:
        raise ParameterError(f"component count must be >= 1, got {k}")
    if x.size < SAMPLES_PER_COMPONENT * k:
        raise ParameterError(
            f"need at least {SAMPLES_PER_COMPONENT * k} samples for {k} components, got {x.size}"
        )
    if np.any(~np.isfinite(x)) or np.any(x <= 0) or np.any(x > math.pi):
        raise ParameterError("angle samples must lie in (0, pi]")

    rng = np.random.default_rng(seed)
    means = _kmeans_plus_plus(x, k, rng)
    sigmas = np.full(k, max(float(x.std()), sigma_floor))
    weights = np.full(k, 1.0 / k)

    history = []
    for _ in range(max_iter):
        # E-step
        log_p = np.log(np.maximum(weights, 1e-300)) + norm.logpdf(x[:, None], loc=means, scale=sigmas)
        log_norm = logsumexp(log_p, axis=1)
        ll = float(log_norm.sum())
        if history and ll < history[-1] - 1e-9 * max(1.0, abs(history[-1])):
            raise FitError(f"EM log-likelihood decreased from {history[-1]:.9f} to {ll:.9f}")
        history.append(ll)
        if len(history) > 1 and history[-1] - history[-2] < tol:
            break
        resp = np.exp(log_p - log_norm[:, None])

        # M-step
        nk = resp.sum(axis=0)
        weights = nk / x.size
        live = nk > 0
        safe_nk = np.where(live, nk, 1.0)
        new_means = (resp * x[:, None]).sum(axis=0) / safe_nk
        means = np.where(live, new_means, means)
        var = (resp * (x[:, None] - means) ** 2).sum(axis=0) / safe_nk
        sigmas = np.where(live, np.maximum(np.sqrt(var), sigma_floor), sigmas)

    weights = weights / weights.sum()
    order = np.argsort(means, kind="stable")
    mixture = GaussianMixture(
        weights=tuple(float(w) for w in weights[order]),
        means=tuple(float(m) for m in means[order]),
        sigmas=tuple(float(s) for s in sigmas[order]),
    )
    return mixture, history


def em_fit(samples, k, seed, **kwargs):
    """Fit a k-component 1-D Gaussian mixture by EM (see em_fit_trace)."""
    mixture, _ = em_fit_trace(samples, k, seed, **kwargs)
    return mixture


def fit_angle_prior(building_betas, background_betas, building_components=3,
                    background_components=4, prior_building=None, seed=17):
    """Fit both class mixtures; prior_building defaults to the building share."""
    building = em_fit(building_betas, building_components, seed)
    background = em_fit(background_betas, background_components, seed)
    if prior_building is None:
        total = len(building_betas) + len(background_betas)
        prior_building = len(building_betas) / total
    return AnglePriorModel(building=building, background=background, prior_building=float(prior_building))


def model_to_dict(model):
    return {
        "building": model.building.to_records(),
        "background": model.background.to_records(),
        "prior_building": float(model.prior_building),
    }


def model_from_dict(payload):
    """Build a model from its JSON form, validating every invariant.

    Raises:
        ImageFormatError: missing fields, wrong types or violated invariants
    """
    try:
        return AnglePriorModel(
            building=GaussianMixture.from_records(payload["building"]),
            background=GaussianMixture.from_records(payload["background"]),
            prior_building=float(payload["prior_building"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ImageFormatError(f"malformed angle prior model: {e}") from e


def save_model(model, path):
    return write_json(model_to_dict(model), path)


def load_model(path):
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ImageFormatError(f"{path.name}: not valid JSON ({e})") from e
    if not isinstance(payload, dict):
        raise ImageFormatError(f"{path.name}: expected a JSON object")
    return model_from_dict(payload)


def angle_histogram(building_betas, background_betas, model, bins=HISTOGRAM_BINS):
    """Histogram of both classes over (0, pi] with the fitted densities at bin centers."""
    edges = np.linspace(0.0, math.pi, bins + 1)
    centers = (edges[:-1] + edges[1:]) / 2.0
    building_counts, _ = np.histogram(building_betas, bins=edges)
    background_counts, _ = np.histogram(background_betas, bins=edges)
    return pd.DataFrame({
        "bin_center": centers,
        "building_count": building_counts,
        "background_count": background_counts,
        "building_pdf": pdf(model.building, centers),
        "background_pdf": pdf(model.background, centers),
    })
