import math

import numpy as np
import pandas as pd
import pytest

from errors import ParameterError
from raster_core import load_image, load_mask
from scene_render import (
    MAX_NOISE, MIN_CONTRAST, BuildingSpec, SceneSpec, ShadowSpec, generate_suite, random_scene_spec,
    render, scene_seeds,
)

SQUARE = BuildingSpec(corner=(10.0, 10.0), edge1=(20.0, 0.0), edge2=(0.0, 20.0), intensity=0.8)


class TestRender:

    def test_single_square(self):
        image, mask, corners = render(SceneSpec(width=50, height=50, buildings=(SQUARE,), background=0.2))
        assert mask.sum() == 21 * 21
        assert np.all(image[mask == 1] == 0.8)
        assert np.all(image[mask == 0] == 0.2)
        assert corners[["x", "y"]].values.tolist() == [[10, 10], [30, 10], [30, 30], [10, 30]]
        np.testing.assert_allclose(corners["beta"], math.pi / 2)

    def test_shadow_darkens_ground_only(self):
        spec = SceneSpec(width=50, height=50, buildings=(SQUARE,), background=0.5,
                         shadow=ShadowSpec(offset=(5.0, 5.0), darkness=0.5))
        image, mask, _ = render(spec)
        assert image[33, 33] == pytest.approx(0.25)
        assert image[20, 20] == 0.8
        assert image[2, 2] == 0.5

    def test_overlap_rejected(self):
        other = BuildingSpec(corner=(20.0, 20.0), edge1=(15.0, 0.0), edge2=(0.0, 15.0), intensity=0.9)
        with pytest.raises(ParameterError):
            render(SceneSpec(width=50, height=50, buildings=(SQUARE, other)))

    def test_vertex_outside_scene(self):
        with pytest.raises(ParameterError):
            render(SceneSpec(width=25, height=25, buildings=(SQUARE,)))

    def test_collinear_edges(self):
        flat = BuildingSpec(corner=(1.0, 1.0), edge1=(5.0, 0.0), edge2=(10.0, 0.0), intensity=0.9)
        with pytest.raises(ParameterError):
            render(SceneSpec(width=20, height=20, buildings=(flat,)))

    def test_parallelogram_corner_angles(self):
        slanted = BuildingSpec(corner=(5.0, 5.0), edge1=(20.0, 0.0), edge2=(10.0, 10.0), intensity=0.9)
        _, _, corners = render(SceneSpec(width=50, height=50, buildings=(slanted,)))
        np.testing.assert_allclose(corners["beta"], [math.pi / 4, 3 * math.pi / 4] * 2)


class TestRandomScenes:

    def test_deterministic(self):
        a = render(random_scene_spec(123))
        b = render(random_scene_spec(123))
        for x, y in zip(a[:2], b[:2]):
            np.testing.assert_array_equal(x, y)
        pd.testing.assert_frame_equal(a[2], b[2])

    def test_scene_properties(self):
        for seed in range(10):
            spec = random_scene_spec(seed)
            assert 2 <= len(spec.buildings) <= 5
            assert spec.noise_sigma <= MAX_NOISE
            for building in spec.buildings:
                assert building.intensity - spec.background >= MIN_CONTRAST - 1e-12
            image, mask, corners = render(spec)
            assert len(corners) == 4 * len(spec.buildings)
            assert image.min() >= 0 and image.max() <= 1
            assert set(np.unique(mask)) <= {0.0, 1.0}

    def test_seeds_are_independent_of_count(self):
        assert scene_seeds(5, 7)[:3] == scene_seeds(3, 7)
        assert scene_seeds(3, 7) != scene_seeds(3, 8)


class TestSuite:

    def test_layout(self, tmp_path):
        summary = generate_suite(3, 11, tmp_path)
        assert summary["scene"].tolist() == ["000", "001", "002"]
        for name in summary["scene"]:
            image = load_image(tmp_path / "scenes" / f"{name}.pgm")
            mask = load_mask(tmp_path / "masks" / f"{name}.pgm")
            corners = pd.read_csv(tmp_path / "corners" / f"{name}.csv")
            assert image.shape == mask.shape == (200, 200)
            assert list(corners.columns) == ["x", "y", "beta"]
        assert (summary["building_pixels"] > 0).all()

    def test_rejects_empty_suite(self, tmp_path):
        with pytest.raises(ParameterError):
            generate_suite(0, 11, tmp_path)
