import argparse

import pytest

from config import Config, add_config_arguments, config_from_args, dump_config, load_config, parse_config
from config import main as config_main
from errors import ImageFormatError, ParameterError


class TestParseConfig:

    def test_defaults(self):
        config = parse_config("")
        assert config == Config()
        assert config.effective_nms_radius == 5.0
        assert config.threshold_count == 100

    def test_dump_round_trip(self):
        config = Config(scales=(4, 8, 16), nms_radius=3.5, squared_distance_weight=True, prior_building=0.6)
        assert parse_config(dump_config(config)) == config

    def test_comments_and_auto(self):
        config = parse_config("# detector\nscales = 5, 10 # small only\nnms_radius = auto\n")
        assert config.scales == (5, 10)
        assert config.nms_radius is None

    def test_unknown_key_names_line(self):
        with pytest.raises(ImageFormatError, match="cfg:2"):
            parse_config("seed = 3\nbogus = 1\n", source="cfg")

    def test_bad_value(self):
        with pytest.raises(ImageFormatError, match="epsilon"):
            parse_config("epsilon = lots")

    def test_missing_equals(self):
        with pytest.raises(ImageFormatError):
            parse_config("scales 5, 10")

    @pytest.mark.parametrize("line", [
        "scales = 10, 5",
        "epsilon = 0",
        "tophat_side = 50",
        "threshold_step = 0.3",
        "root_length = 9",
        "overlap_ratio = 1.0",
        "jobs = 0",
    ])
    def test_invalid_values(self, line):
        with pytest.raises(ParameterError):
            parse_config(line)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "none.cfg")


class TestArguments:

    def _parse(self, argv, jobs=True):
        parser = argparse.ArgumentParser()
        add_config_arguments(parser, jobs=jobs)
        return parser.parse_args(argv)

    def test_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed = 3\nneighbor_k = 2\n")
        config = config_from_args(self._parse(["--config", str(path), "--seed", "9", "--jobs", "4"]))
        assert (config.seed, config.jobs, config.neighbor_k) == (9, 4, 2)

    def test_defaults_without_file(self):
        assert config_from_args(self._parse([], jobs=False)) == Config()

    def test_invalid_override(self):
        with pytest.raises(ParameterError):
            config_from_args(self._parse(["--jobs", "0"]))


def test_dump_config_command(tmp_path, capsys):
    out = tmp_path / "effective.cfg"
    assert config_main(["--output", str(out)]) == 0
    assert load_config(out) == Config()

    assert config_main([]) == 0
    assert "tophat_side = 51" in capsys.readouterr().out


def test_dump_config_bad_file(tmp_path):
    path = tmp_path / "broken.cfg"
    path.write_text("nonsense\n")
    assert config_main(["--config", str(path)]) == 1
