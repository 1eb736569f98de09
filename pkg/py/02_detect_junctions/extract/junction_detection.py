"""
A-contrario junction detection with per-branch (anisotropic) scales.

A junction is a position p plus M >= 2 branches, each an orientation theta and
a scale s. A branch collects evidence from the pixels of the sector
{q : |pq| <= s, d_2pi(alpha(pq), theta) <= delta(s)}: a pixel contributes its
normalized gradient magnitude when the local level line runs along pq and
nothing when it crosses pq. The junction strength is the weakest branch, and
its significance is a number of false alarms (NFA) computed under a null
hypothesis of independent, uniformly distributed gradient orientations.

Detection runs in three passes:
  1. candidate positions near strong gradients whose short "root" bands show
     at least two non-collinear edge directions
  2. a scan over the scale ladder and orientation bins, forming junctions from
     qualifying branches and keeping those with NFA <= epsilon, followed by
     greedy non-max suppression per branch count
  3. anisotropic refinement, growing each branch ring by ring along its edge
     and recomputing the significance at the final scales
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy import ndimage, sparse

from errors import ParameterError
from raster_core import as_raster, gaussian_blur, gradient_field, minmax_normalize

# E[max(|cos u| - |sin u|, 0)] for u uniform on the circle
NULL_MEAN_FACTOR = (2.0 / math.pi) * (math.sqrt(2.0) - 1.0)

# Pixels within this perpendicular distance of a branch ray belong to its bands
BAND_HALF_WIDTH = 1.5

# Candidates gathered per vectorized block during the scan
CHUNK_SIZE = 1024

# Grow-and-reorient rounds per branch during refinement
EXTENSION_PASSES = 2


@dataclass(frozen=True)
class DetectionParams:
    """Detector settings.

    Attributes:
        scales: Strictly increasing scale ladder in pixels
        orientation_bins: Orientations sampled per scale
        epsilon: Meaningfulness threshold on the NFA
        nms_radius: Suppression radius in pixels (None = smallest scale)
        candidate_gradient: Minimum 3x3-max normalized gradient at a candidate
        ring_support: A band is supported when its strength exceeds this
            multiple of its null mean
        root_length: Length of the band next to p every branch must support
        max_branch_scale: Upper bound for refined branch scales
        pre_blur_side: Side of the Gaussian pre-smoothing (0 = off). Orientations
            of staircase edges are only reliable after smoothing
        pre_blur_sigma: Sigma of that pre-smoothing
    """

    scales: tuple = (5, 10, 15, 20, 30)
    orientation_bins: int = 64
    epsilon: float = 1.0
    nms_radius: float = None
    candidate_gradient: float = 0.15
    ring_support: float = 2.0
    root_length: float = 4.0
    max_branch_scale: int = 120
    pre_blur_side: int = 5
    pre_blur_sigma: float = 1.0

    def __post_init__(self):
        if len(self.scales) == 0 or any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ParameterError(f"scale ladder must be non-empty and strictly increasing, got {self.scales}")
        if self.scales[0] < 1:
            raise ParameterError(f"scales must be >= 1, got {self.scales}")
        if self.orientation_bins < 4:
            raise ParameterError(f"orientation_bins must be >= 4, got {self.orientation_bins}")
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")

    @classmethod
    def from_config(cls, config):
        return cls(
            scales=tuple(config.scales),
            orientation_bins=config.orientation_bins,
            epsilon=config.epsilon,
            nms_radius=config.nms_radius,
            candidate_gradient=config.candidate_gradient,
            ring_support=config.ring_support,
            root_length=config.root_length,
            max_branch_scale=config.max_branch_scale,
            pre_blur_side=config.pre_blur_side,
            pre_blur_sigma=config.pre_blur_sigma,
        )

    def delta(self, s):
        """Angular half-width of a sector at scale s, in [pi/16, pi/4]."""
        return float(np.clip(math.atan(1.5 / s), math.pi / 16.0, math.pi / 4.0))

    @property
    def suppression_radius(self):
        return float(self.scales[0]) if self.nms_radius is None else float(self.nms_radius)

    @property
    def bin_angles(self):
        return 2.0 * np.pi * np.arange(self.orientation_bins) / self.orientation_bins


@dataclass(frozen=True)
class Branch:
    scale: float
    theta: float


@dataclass(frozen=True)
class Junction:
    x: int
    y: int
    branches: tuple
    rho: float = 1.0
    log_nfa: float = 0.0

    @property
    def position(self):
        return (self.x, self.y)

    @property
    def M(self):
        return len(self.branches)


@dataclass(frozen=True)
class SectorStats:
    strength: float
    null_mean: float
    variance_bound: float
    size: int


def d_2pi(a, b):
    """Distance along the unit circle between two angles."""
    diff = np.mod(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)), 2.0 * np.pi)
    return np.minimum(diff, 2.0 * np.pi - diff)


def ray_angle(dx, dy):
    """Direction of the vector (dx, dy) in [0, 2*pi)."""
    angle = np.mod(np.arctan2(dy, dx), 2.0 * np.pi)
    return np.where(angle >= 2.0 * np.pi, 0.0, angle)


def level_line_alignment(phi, alpha, magnitude):
    """m * max(|cos(phi - alpha)| - |sin(phi - alpha)|, 0) for level-line direction phi."""
    diff = np.asarray(phi) - np.asarray(alpha)
    return np.asarray(magnitude) * np.maximum(np.abs(np.cos(diff)) - np.abs(np.sin(diff)), 0.0)


def level_line_orientation(grad):
    """Level-line direction (gradient direction + pi/2) per pixel."""
    return np.mod(grad.orientation + np.pi / 2.0, 2.0 * np.pi)


@lru_cache(maxsize=256)
def _disk_offsets(radius):
    """Integer offsets (dx, dy) with 0 < |(dx, dy)| <= radius, row-major."""
    r = int(math.ceil(radius))
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    dx = dx.ravel()
    dy = dy.ravel()
    dist = np.hypot(dx, dy)
    keep = (dist > 0) & (dist <= radius)
    dx, dy, dist = dx[keep], dy[keep], dist[keep]
    return dx, dy, dist, ray_angle(dx, dy)


def sector_pixels(p, s, theta, delta, bounds):
    """Pixels q != p with |pq| <= s and d_2pi(alpha(pq), theta) <= delta.

    Args:
        p: (x, y) apex of the sector
        s: Radius in pixels
        theta: Sector direction in radians
        delta: Angular half-width in radians
        bounds: (height, width) of the image

    Returns:
        (xs, ys) integer arrays, row-major
    """
    height, width = bounds
    dx, dy, _, alpha = _disk_offsets(float(s))
    keep = d_2pi(alpha, theta) <= delta
    xs = p[0] + dx[keep]
    ys = p[1] + dy[keep]
    inside = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    return xs[inside], ys[inside]


def pairwise_strength(q, p, grad):
    """Contribution of pixel q to a branch anchored at p.

    The orientation compared with the ray pq is the level-line direction at q
    (gradient direction + pi/2), not the gradient itself. A pixel on an edge
    running along pq therefore contributes its full magnitude, and a gradient
    pointing along pq contributes 0.
    """
    qx, qy = q
    alpha = float(ray_angle(qx - p[0], qy - p[1]))
    phi = (grad.orientation[qy, qx] + np.pi / 2.0) % (2.0 * np.pi)
    return float(level_line_alignment(phi, alpha, grad.magnitude[qy, qx]))


def sector_statistics(p, s, theta, delta, grad, level=None):
    """Strength, null mean and Hoeffding variance bound of one sector."""
    if level is None:
        level = level_line_orientation(grad)
    xs, ys = sector_pixels(p, s, theta, delta, grad.shape)
    m = grad.magnitude[ys, xs]
    alpha = ray_angle(xs - p[0], ys - p[1])
    gamma = level_line_alignment(level[ys, xs], alpha, m)
    return SectorStats(
        strength=float(gamma.sum()),
        null_mean=NULL_MEAN_FACTOR * float(m.sum()),
        variance_bound=float(np.square(m).sum()),
        size=int(xs.size),
    )


def branch_strength(p, s, theta, grad, delta):
    """Sum of pairwise strengths over the branch sector."""
    return sector_statistics(p, s, theta, delta, grad).strength


def junction_strength(j, grad, params):
    """Minimal strength over the junction's branches."""
    return min(
        branch_strength(j.position, b.scale, b.theta, grad, params.delta(b.scale))
        for b in j.branches
    )


def log_test_count(bounds, params, M):
    """log(|image| * |scales| * C(bins, M)): how many junctions could be tested."""
    height, width = bounds
    return (
        math.log(height * width * len(params.scales))
        + math.log(math.comb(params.orientation_bins, M))
    )


def log_nfa(strengths, null_means, variances, log_n_tests):
    """log NFA = log N + sum_i -2 max(t - mu_i, 0)^2 / v_i with t = min strength."""
    t = float(np.min(strengths))
    null_means = np.asarray(null_means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    excess = np.maximum(t - null_means, 0.0)
    safe = np.where(variances > 0, variances, 1.0)
    terms = np.where(variances > 0, -2.0 * excess ** 2 / safe, 0.0)
    return log_n_tests + float(terms.sum())


def nfa_to_rho(value):
    """Clamp exp(log NFA) to [0, 1]."""
    return float(min(math.exp(min(value, 0.0)), 1.0))


def junction_log_nfa(j, grad, params, level=None, log_n_tests=None):
    """log NFA of a junction from its branch sectors at their own scales."""
    if level is None:
        level = level_line_orientation(grad)
    if log_n_tests is None:
        log_n_tests = log_test_count(grad.shape, params, j.M)
    stats = [
        sector_statistics(j.position, b.scale, b.theta, params.delta(b.scale), grad, level)
        for b in j.branches
    ]
    return log_nfa(
        [st.strength for st in stats],
        [st.null_mean for st in stats],
        [st.variance_bound for st in stats],
        log_n_tests,
    )


def significance(j, grad, params, n_tests=None):
    """Junction significance rho in [0, 1]; smaller is more reliable.

    Args:
        j: Candidate junction
        grad: GradientField of the image
        params: DetectionParams (sector widths and test count)
        n_tests: Number of tests; defaults to |image| * |scales| * C(bins, M)
    """
    log_n_tests = None if n_tests is None else math.log(n_tests)
    return nfa_to_rho(junction_log_nfa(j, grad, params, log_n_tests=log_n_tests))


class _ScanContext:
    """Gradient arrays zero-padded so out-of-image pixels contribute nothing."""

    def __init__(self, grad, pad):
        self.grad = grad
        self.shape = grad.shape
        self.pad = pad
        self.level = level_line_orientation(grad)
        self.magnitude = np.pad(grad.magnitude, pad, mode="constant")
        self.level_padded = np.pad(self.level, pad, mode="constant")

    def alignment(self, ys, xs, dx, dy, alpha):
        """Magnitude and pairwise strength of every (position, offset) pair."""
        yy = ys[:, None] + dy[None, :] + self.pad
        xx = xs[:, None] + dx[None, :] + self.pad
        m = self.magnitude[yy, xx]
        return m, level_line_alignment(self.level_padded[yy, xx], alpha[None, :], m)


def _band_membership(dx, dy, angles, lo, hi):
    """Offsets whose projection on each direction lies in (lo, hi] within the band width."""
    cos_t = np.cos(angles)[None, :]
    sin_t = np.sin(angles)[None, :]
    proj = dx[:, None] * cos_t + dy[:, None] * sin_t
    perp = np.abs(-dx[:, None] * sin_t + dy[:, None] * cos_t)
    return (proj > lo) & (proj <= hi) & (perp <= BAND_HALF_WIDTH)


def _bin_matrix(membership):
    """Sparse (bins x offsets) summation matrix."""
    return sparse.csr_matrix(membership.T.astype(np.float64))


def _supported(strength, magnitude_sum, ring_support):
    return (strength > ring_support * NULL_MEAN_FACTOR * magnitude_sum) & (magnitude_sum > 0)


def _circular_local_max(values):
    """Strictly above the previous bin and at least the next bin."""
    prev = np.roll(values, 1, axis=-1)
    nxt = np.roll(values, -1, axis=-1)
    return (values > prev) & (values >= nxt)


def _candidate_positions(ctx, params):
    """Pixels near strong gradients whose root bands show two non-collinear edges.

    The root band of a direction is (0, root_length] along it. A position is
    kept when two supported local maxima of root strength are more than
    delta apart and not opposite within delta.

    Returns:
        ys, xs of the candidates and their per-bin root support (n x bins)
    """
    near_edge = ndimage.maximum_filter(ctx.grad.magnitude, size=3, mode="nearest") >= params.candidate_gradient
    ys, xs = np.nonzero(near_edge)

    angles = params.bin_angles
    delta = params.delta(params.scales[0])
    dx, dy, _, alpha = _disk_offsets(math.hypot(params.root_length, BAND_HALF_WIDTH))
    root_t = _bin_matrix(_band_membership(dx, dy, angles, 0.0, params.root_length))

    keep = np.zeros(ys.size, dtype=bool)
    support = np.zeros((ys.size, angles.size), dtype=bool)
    for start in range(0, ys.size, CHUNK_SIZE):
        block = slice(start, start + CHUNK_SIZE)
        m, gamma = ctx.alignment(ys[block], xs[block], dx, dy, alpha)
        strength = (root_t @ gamma.T).T
        supported = _supported(strength, (root_t @ m.T).T, params.ring_support)
        support[block] = supported
        peaks = _circular_local_max(strength) & supported

        for i in np.flatnonzero(peaks.sum(axis=1) >= 2):
            directions = angles[peaks[i]]
            gaps = d_2pi(directions[:, None], directions[None, :])
            gaps = gaps[np.triu_indices(directions.size, 1)]
            keep[start + i] = np.any((gaps > delta) & (gaps < np.pi - delta))
    return ys[keep], xs[keep], support[keep]


def _form_candidates(omega_row, null_row, var_row, qualifies, angles, delta, log_n_tests, log_eps):
    """Junction candidates (log_nfa, bins) at one position and scale."""
    bins = np.flatnonzero(qualifies)
    order = bins[np.argsort(-omega_row[bins], kind="stable")]
    kept = []
    for k in order:
        if all(d_2pi(angles[k], angles[j]) > delta for j in kept):
            kept.append(k)

    found = []
    for M in range(2, len(kept) + 1):
        chosen = kept[:M]
        if M == 2 and d_2pi(angles[chosen[0]], angles[chosen[1]]) > np.pi - delta:
            continue
        value = log_nfa(omega_row[chosen], null_row[chosen], var_row[chosen], log_n_tests[M])
        if value <= log_eps:
            found.append((value, tuple(sorted(chosen))))
    return found


def _scan_scale(ctx, ys, xs, root, scale, prev_scale, params):
    """Qualify branches at one ladder scale and form junction candidates.

    A bin qualifies when its sector strength is a circular local maximum above
    the null mean and both its root band and its outer band (prev_scale, scale]
    are supported.
    """
    angles = params.bin_angles
    delta = params.delta(scale)
    dx, dy, dist, alpha = _disk_offsets(scale + 2.0)

    in_sector = (dist[:, None] <= scale) & (d_2pi(alpha[:, None], angles[None, :]) <= delta)
    outer = _band_membership(dx, dy, angles, float(prev_scale), float(scale))
    sector_t = _bin_matrix(in_sector)
    outer_t = _bin_matrix(outer)

    log_n_tests = {
        M: log_test_count(ctx.shape, params, M) for M in range(2, params.orientation_bins + 1)
    }
    log_eps = math.log(params.epsilon)

    candidates = []
    for start in range(0, ys.size, CHUNK_SIZE):
        block = slice(start, start + CHUNK_SIZE)
        cy, cx = ys[block], xs[block]
        m, gamma = ctx.alignment(cy, cx, dx, dy, alpha)

        omega = (sector_t @ gamma.T).T
        null = NULL_MEAN_FACTOR * (sector_t @ m.T).T
        var = (sector_t @ np.square(m).T).T
        outer_ok = _supported((outer_t @ gamma.T).T, (outer_t @ m.T).T, params.ring_support)

        qualifies = (
            _circular_local_max(omega)
            & (omega > null)
            & outer_ok
            & root[block]
        )
        for i in np.flatnonzero(qualifies.sum(axis=1) >= 2):
            for value, bins in _form_candidates(
                omega[i], null[i], var[i], qualifies[i], angles, delta, log_n_tests, log_eps
            ):
                candidates.append((value, int(cy[i]), int(cx[i]), float(scale), bins))
    return candidates


def _suppress(candidates, radius):
    """Greedy non-max suppression per branch count in (log_nfa, y, x, scale) order."""
    by_count = {}
    for cand in candidates:
        by_count.setdefault(len(cand[4]), []).append(cand)

    kept = []
    for M in sorted(by_count):
        accepted = []
        for cand in sorted(by_count[M], key=lambda c: (c[0], c[1], c[2], c[3], c[4])):
            _, y, x, _, _ = cand
            if any(math.hypot(x - ax, y - ay) <= radius for _, ay, ax, _, _ in accepted):
                continue
            accepted.append(cand)
        kept.extend(accepted)
    return kept


def _grow_along(ctx, p, seed_scale, theta, params):
    """Grow a branch from seed_scale along direction theta.

    Returns:
        (scale, theta) with theta re-estimated from the grown band
    """
    height, width = ctx.shape
    px, py = p
    ux, uy = math.cos(theta), math.sin(theta)
    length = params.max_branch_scale

    x0 = max(int(math.floor(min(px, px + length * ux))) - 2, 0)
    x1 = min(int(math.ceil(max(px, px + length * ux))) + 2, width - 1)
    y0 = max(int(math.floor(min(py, py + length * uy))) - 2, 0)
    y1 = min(int(math.ceil(max(py, py + length * uy))) + 2, height - 1)
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    dx = (xs - px).ravel()
    dy = (ys - py).ravel()
    proj = dx * ux + dy * uy
    perp = np.abs(-dx * uy + dy * ux)
    keep = (proj > 0) & (proj <= length) & (perp <= BAND_HALF_WIDTH)
    dx, dy, proj = dx[keep], dy[keep], proj[keep]

    m = ctx.grad.magnitude[py + dy, px + dx]
    alpha = ray_angle(dx, dy)
    gamma = level_line_alignment(ctx.level[py + dy, px + dx], alpha, m)

    ring = np.ceil(proj).astype(np.intp)
    ring_strength = np.bincount(ring, weights=gamma, minlength=length + 1)
    ring_mass = np.bincount(ring, weights=m, minlength=length + 1)

    scale = int(seed_scale)
    while scale < length:
        k = scale + 1
        if not _supported(ring_strength[k], ring_mass[k], params.ring_support):
            break
        scale = k

    near = (proj >= params.root_length / 2.0) & (proj <= scale)
    weights = gamma[near]
    if weights.sum() > 0:
        theta = float(ray_angle(
            np.sum(weights * np.cos(alpha[near])), np.sum(weights * np.sin(alpha[near]))
        ))
    return scale, theta


def _extend_branch(ctx, p, branch, params):
    """Grow one branch ring by ring, re-aiming the band at the re-estimated orientation."""
    scale, theta = int(branch.scale), branch.theta
    for _ in range(EXTENSION_PASSES):
        grown, reaimed = _grow_along(ctx, p, branch.scale, theta, params)
        if grown == scale and reaimed == theta:
            break
        scale, theta = grown, reaimed
    return Branch(scale=float(max(scale, branch.scale)), theta=theta)


def _refine(j, ctx, params):
    branches = tuple(_extend_branch(ctx, j.position, b, params) for b in j.branches)
    refined = Junction(x=j.x, y=j.y, branches=branches)
    value = junction_log_nfa(refined, ctx.grad, params, ctx.level)
    return Junction(x=j.x, y=j.y, branches=branches, rho=nfa_to_rho(value), log_nfa=value)


def refine_anisotropic_scales(j, grad, params):
    """Extend each branch independently along its edge and recompute rho.

    A branch grows by one-pixel rings (s, s + 1] while the ring's strength
    exceeds ring_support times its null mean; it never shrinks below its seed
    scale. The orientation is then re-estimated as the strength-weighted
    circular mean of the ring pixel directions, and the band is grown once
    more along the new orientation.
    """
    pad = int(max(params.scales)) + 3
    return _refine(j, _ScanContext(grad, pad), params)


def is_well_formed(j, params):
    """Branches distinct by delta at the smallest scale, and not a straight edge."""
    delta = params.delta(min(b.scale for b in j.branches))
    thetas = np.array([b.theta for b in j.branches])
    gaps = d_2pi(thetas[:, None], thetas[None, :])[np.triu_indices(len(thetas), 1)]
    if np.any(gaps <= delta):
        return False
    if j.M == 2 and gaps[0] > np.pi - delta:
        return False
    return True


def detect_junctions(img, params):
    """Detect meaningful junctions in a brightness raster.

    Args:
        img: Raster; both dimensions at least twice the largest scale
        params: DetectionParams

    Returns:
        List of Junction sorted by (log NFA, y, x), every one with NFA <= epsilon
    """
    img = as_raster(img)
    largest = max(params.scales)
    if min(img.shape) < 2 * largest:
        raise ParameterError(
            f"image {img.shape[1]}x{img.shape[0]} is too small for scale {largest} "
            f"(needs at least {2 * int(math.ceil(largest))} px per side)"
        )
    # exact under gray-level affine maps, before and after the blur
    img = minmax_normalize(img)
    if params.pre_blur_side:
        img = gaussian_blur(img, params.pre_blur_side, params.pre_blur_sigma)

    grad = gradient_field(img)
    if grad.magnitude.max() == 0:
        return []

    ctx = _ScanContext(grad, pad=int(math.ceil(largest)) + 3)
    ys, xs, root = _candidate_positions(ctx, params)

    candidates = []
    prev_scale = 0.0
    for scale in params.scales:
        candidates.extend(_scan_scale(ctx, ys, xs, root, float(scale), prev_scale, params))
        prev_scale = float(scale)

    angles = params.bin_angles
    seeds = [
        Junction(
            x=x, y=y,
            branches=tuple(Branch(scale=scale, theta=float(angles[k])) for k in bins),
            log_nfa=value,
        )
        for value, y, x, scale, bins in _suppress(candidates, params.suppression_radius)
    ]

    log_eps = math.log(params.epsilon)
    junctions = []
    for seed in seeds:
        refined = _refine(seed, ctx, params)
        if refined.log_nfa <= log_eps and is_well_formed(refined, params):
            junctions.append(refined)
    junctions.sort(key=lambda j: (j.log_nfa, j.y, j.x))
    return junctions


def junctions_to_frame(junctions):
    """One row per junction: x, y, rho, M, then s1, theta1, ..., sM, thetaM."""
    max_m = max((j.M for j in junctions), default=2)
    columns = ["x", "y", "rho", "M"]
    for i in range(1, max_m + 1):
        columns += [f"s{i}", f"theta{i}"]

    rows = []
    for j in junctions:
        row = {"x": j.x, "y": j.y, "rho": j.rho, "M": j.M}
        for i, b in enumerate(j.branches, 1):
            row[f"s{i}"] = b.scale
            row[f"theta{i}"] = b.theta
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def junctions_from_frame(df):
    junctions = []
    for row in df.to_dict(orient="records"):
        M = int(row["M"])
        branches = tuple(
            Branch(scale=float(row[f"s{i}"]), theta=float(row[f"theta{i}"]))
            for i in range(1, M + 1)
        )
        junctions.append(Junction(x=int(row["x"]), y=int(row["y"]), branches=branches, rho=float(row["rho"])))
    return junctions
