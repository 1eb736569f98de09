"""
Shared fixtures. Stage directories go on sys.path exactly as the stage
scripts add them, so tests import the same flat module names.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

PY_DIR = Path(__file__).resolve().parents[1] / "py"
for sub in (
    "common",
    "01_generate_scenes",
    "01_generate_scenes/helpers",
    "02_detect_junctions",
    "02_detect_junctions/extract",
    "03_fit_prior",
    "03_fit_prior/helpers",
    "04_compute_gbi",
    "04_compute_gbi/helpers",
    "05_evaluate",
    "05_evaluate/helpers",
):
    path = str(PY_DIR / sub)
    if path not in sys.path:
        sys.path.append(path)

from angle_prior import AnglePriorModel, GaussianMixture  # noqa: E402
from junction_detection import DetectionParams  # noqa: E402

ACCEPTANCE_SEED = 7
ACCEPTANCE_SCENES = 20
TRAIN_SEED = 1017
TRAIN_SCENES = 50


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def detection_params():
    return DetectionParams()


@pytest.fixture
def rectangle_image():
    """100x100 scene with one bright axis-aligned rectangle, corners at
    (30, 25), (69, 25), (69, 74) and (30, 74)."""
    img = np.full((100, 100), 0.2)
    img[25:75, 30:70] = 0.8
    return img


@pytest.fixture
def right_angle_model():
    """Hand-set prior: buildings near pi/2, background spread out."""
    return AnglePriorModel(
        building=GaussianMixture(weights=(1.0,), means=(np.pi / 2,), sigmas=(0.1,)),
        background=GaussianMixture(weights=(0.5, 0.5), means=(0.6, 2.4), sigmas=(0.4, 0.4)),
        prior_building=0.5,
    )


@pytest.fixture(scope="session")
def acceptance_suite(tmp_path_factory):
    """20-scene synthetic suite with seed 7 (scenes/, masks/, corners/)."""
    from scene_render import generate_suite

    root = tmp_path_factory.mktemp("acceptance_suite")
    generate_suite(ACCEPTANCE_SCENES, ACCEPTANCE_SEED, root)
    return root


@pytest.fixture(scope="session")
def trained_prior(tmp_path_factory):
    """Angle prior fitted by the fit-prior stage on its own 50-scene suite."""
    from fit_prior import main as fit_prior_main
    from scene_render import generate_suite
    from angle_prior import load_model

    root = tmp_path_factory.mktemp("train_suite")
    generate_suite(TRAIN_SCENES, TRAIN_SEED, root)
    model_path = root / "angle_prior.json"
    code = fit_prior_main([
        str(root), "--output", str(model_path), "--out-dir", str(root / "prior"),
        "--report", str(root / "fit_prior_report.html"), "--quiet",
    ])
    assert code == 0
    return model_path, load_model(model_path)
