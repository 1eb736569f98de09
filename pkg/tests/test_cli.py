"""
Stage entry points called in-process through main(argv).
"""

import importlib.util
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from ablate import main as ablate_main
from angle_prior import mixture_mass, save_model
from compute_gbi import main as gbi_main
from detect_junctions import main as junctions_main
from evaluate import main as eval_main
from fit_prior import main as fit_prior_main
from generate_scenes import main as gen_scenes_main
from raster_core import load_image, load_mask, save_image
from scene_render import generate_suite
from segment import main as segment_main

ROOT = Path(__file__).resolve().parents[1]


def _load_runner():
    spec = importlib.util.spec_from_file_location("gbi_run", ROOT / "run.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def _same_files(left, right):
    files = sorted(p.relative_to(left) for p in left.rglob("*") if p.is_file())
    assert files
    assert files == sorted(p.relative_to(right) for p in right.rglob("*") if p.is_file())
    for rel in files:
        assert (left / rel).read_bytes() == (right / rel).read_bytes(), rel


@pytest.fixture
def rectangle_png(tmp_path, rectangle_image):
    return save_image(rectangle_image, tmp_path / "rect.png")


class TestGenerateScenes:

    def test_writes_suite(self, tmp_path):
        assert gen_scenes_main([str(tmp_path), "--count", "2", "--seed", "5", "--quiet"]) == 0
        assert sorted(p.name for p in (tmp_path / "scenes").iterdir()) == ["000.pgm", "001.pgm"]
        assert len(pd.read_csv(tmp_path / "suite.csv")) == 2

    def test_zero_scenes(self, tmp_path):
        assert gen_scenes_main([str(tmp_path), "--count", "0"]) == 1

    def test_rerun_is_byte_identical(self, tmp_path):
        for name in ("first", "second"):
            assert gen_scenes_main([str(tmp_path / name), "--count", "3", "--seed", "11", "--quiet"]) == 0
        _same_files(tmp_path / "first", tmp_path / "second")


class TestJunctions:

    def test_rectangle(self, tmp_path, rectangle_png):
        out = tmp_path / "junctions"
        assert junctions_main([str(rectangle_png), "--output-dir", str(out)]) == 0
        junctions = pd.read_csv(out / "rect_junctions.csv")
        assert len(junctions) >= 4
        assert (out / "rect_ljunctions.csv").exists()
        assert (out / "rect_overlay.png").exists()

    def test_constant_image_header_only(self, tmp_path):
        path = save_image(np.full((80, 80), 0.5), tmp_path / "flat.pgm")
        out = tmp_path / "junctions"
        assert junctions_main([str(path), "--output-dir", str(out)]) == 0
        assert pd.read_csv(out / "flat_junctions.csv").empty

    def test_missing_image(self, tmp_path):
        out = tmp_path / "junctions"
        assert junctions_main([str(tmp_path / "missing.png"), "--output-dir", str(out)]) == 1
        assert not out.exists() or not any(out.iterdir())


class TestGbi:

    def test_missing_model(self, tmp_path, rectangle_png):
        code = gbi_main([str(rectangle_png), "--model", str(tmp_path / "none.json"),
                         "--output-dir", str(tmp_path / "gbi")])
        assert code == 1

    def test_raw_saliency_needs_no_model(self, tmp_path, rectangle_png):
        out = tmp_path / "gbi"
        code = gbi_main([str(rectangle_png), "--model", str(tmp_path / "none.json"), "--output-dir", str(out),
                         "--no-angle", "--no-neighbor", "--no-shadow", "--no-blur", "--dump-raw"])
        assert code == 0
        heatmap = load_image(out / "rect.png")
        assert heatmap.shape == (100, 100)
        assert heatmap.max() == 1.0
        assert not pd.read_csv(out / "rect_raw.csv").empty

    def test_constant_image_black_heatmap(self, tmp_path, right_angle_model):
        model = save_model(right_angle_model, tmp_path / "model.json")
        path = save_image(np.full((80, 80), 0.3), tmp_path / "flat.png")
        out = tmp_path / "gbi"
        assert gbi_main([str(path), "--model", str(model), "--output-dir", str(out)]) == 0
        assert np.all(load_image(out / "flat.png") == 0)

    def test_directory_input(self, tmp_path, right_angle_model, rectangle_image):
        model = save_model(right_angle_model, tmp_path / "model.json")
        images = tmp_path / "images"
        save_image(rectangle_image, images / "a.pgm")
        save_image(rectangle_image.T, images / "b.pgm")
        out = tmp_path / "gbi"
        assert gbi_main([str(images), "--model", str(model), "--output-dir", str(out), "--quiet"]) == 0
        assert (out / "a.png").exists() and (out / "b.png").exists()
        assert (out / "a_records.csv").exists()

    def test_rerun_is_byte_identical(self, tmp_path, right_angle_model, rectangle_png):
        model = save_model(right_angle_model, tmp_path / "model.json")
        for name in ("first", "second"):
            assert gbi_main([str(rectangle_png), "--model", str(model),
                             "--output-dir", str(tmp_path / name), "--dump-raw", "--quiet"]) == 0
        _same_files(tmp_path / "first", tmp_path / "second")

    @pytest.mark.slow
    def test_buildings_brighter_than_ground(self, tmp_path, right_angle_model):
        suite = tmp_path / "suite"
        generate_suite(3, 3, suite)
        model = save_model(right_angle_model, tmp_path / "model.json")
        out = tmp_path / "gbi"
        assert gbi_main([str(suite / "scenes"), "--model", str(model), "--output-dir", str(out), "--quiet"]) == 0
        for mask_path in sorted((suite / "masks").iterdir()):
            heatmap = load_image(out / f"{mask_path.stem}.png")
            inside = load_mask(mask_path).astype(bool)
            assert heatmap[inside].mean() > heatmap[~inside].mean()


class TestSegment:

    def test_threshold_out_of_range(self, rectangle_png):
        with pytest.raises(SystemExit) as exc:
            segment_main([str(rectangle_png), "--threshold", "1.5"])
        assert exc.value.code == 2

    def test_binary_output(self, tmp_path, rectangle_png):
        out = tmp_path / "seg.png"
        assert segment_main([str(rectangle_png), "--threshold", "0.5", "--output", str(out)]) == 0
        seg = load_image(out)
        assert set(np.unique(seg)) == {0.0, 1.0}
        assert seg.sum() == 50 * 40


class TestEvaluate:

    def test_perfect_prediction(self, tmp_path, acceptance_suite):
        out = tmp_path / "eval"
        code = eval_main([str(acceptance_suite / "masks"), str(acceptance_suite / "masks"),
                          "--output-dir", str(out), "--report", str(tmp_path / "report.html"), "--quiet"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["mAP"] == pytest.approx(1.0)
        assert summary["mean_f"] == pytest.approx(1.0)
        assert summary["images"] == 20
        assert (out / "pr_curve.png").exists()
        assert (tmp_path / "report.html").exists()

    def test_filename_mismatch(self, tmp_path, rectangle_image):
        preds, masks = tmp_path / "pred", tmp_path / "masks"
        save_image(rectangle_image, preds / "a.png")
        save_image(rectangle_image > 0.5, masks / "b.pgm")
        assert eval_main([str(preds), str(masks), "--output-dir", str(tmp_path / "eval"),
                          "--report", str(tmp_path / "report.html")]) == 1


class TestAblate:

    @pytest.mark.slow
    def test_small_suite(self, tmp_path, right_angle_model):
        generate_suite(2, 3, tmp_path / "suite")
        model = save_model(right_angle_model, tmp_path / "model.json")
        out = tmp_path / "ablation"
        code = ablate_main([str(tmp_path / "suite"), "--model", str(model), "--output-dir", str(out),
                            "--report", str(tmp_path / "ablation.html"), "--quiet"])
        assert code == 0
        table = pd.read_csv(out / "ablation.csv")
        assert table["variant"].tolist() == ["raw", "+neighbor", "+angle", "+shadow"]
        assert table["F"].between(0, 1).all()
        assert (out / "ablation_pr.png").exists()

    @pytest.mark.slow
    def test_terms_do_not_hurt(self, tmp_path, acceptance_suite, trained_prior):
        model_path, _ = trained_prior
        out = tmp_path / "ablation"
        code = ablate_main([str(acceptance_suite), "--model", str(model_path), "--output-dir", str(out),
                            "--report", str(tmp_path / "ablation.html"), "--quiet"])
        assert code == 0
        scores = pd.read_csv(out / "ablation.csv")["F"].tolist()
        assert len(scores) == 4
        for before, after in zip(scores, scores[1:]):
            assert after >= before - 0.02

    def test_missing_model(self, tmp_path):
        assert ablate_main([str(tmp_path), "--model", str(tmp_path / "none.json"),
                            "--output-dir", str(tmp_path / "ablation"),
                            "--report", str(tmp_path / "r.html")]) == 1


class TestFitPrior:

    def test_empty_dataset(self, tmp_path):
        (tmp_path / "scenes").mkdir()
        (tmp_path / "masks").mkdir()
        code = fit_prior_main([str(tmp_path), "--output", str(tmp_path / "model.json"),
                               "--out-dir", str(tmp_path / "prior"), "--report", str(tmp_path / "r.html")])
        assert code == 1
        assert not (tmp_path / "model.json").exists()

    @pytest.mark.slow
    def test_building_angles_concentrate_near_right_angles(self, trained_prior):
        _, model = trained_prior
        assert mixture_mass(model.building, np.pi / 3, 2 * np.pi / 3) >= 0.6

    @pytest.mark.slow
    def test_rerun_writes_identical_model(self, tmp_path, trained_prior):
        model_path, _ = trained_prior
        again = tmp_path / "again.json"
        code = fit_prior_main([str(model_path.parent), "--output", str(again), "--out-dir", str(tmp_path / "prior"),
                               "--report", str(tmp_path / "r.html"), "--quiet"])
        assert code == 0
        assert again.read_bytes() == model_path.read_bytes()


class TestRunner:

    def test_unknown_subcommand(self, capsys):
        assert _load_runner().main(["frobnicate"]) == 2
        assert "Subcommands" in capsys.readouterr().out

    def test_pipeline_forwards_flags(self):
        steps = _load_runner().pipeline_steps(config="my.cfg", jobs=3)
        assert len(steps) == 6
        for script, _, args in steps:
            assert args[args.index("--config") + 1] == "my.cfg"
            assert ("--jobs" in args) == (script.startswith(("03_", "04_")) or "ablate" in script)

    @pytest.mark.slow
    def test_dump_config_subcommand(self, capfd):
        assert _load_runner().main(["dump-config"]) == 0
        assert "scales = 5, 10, 15, 20, 30" in capfd.readouterr().out
