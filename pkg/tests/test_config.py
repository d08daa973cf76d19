"""Test the run configuration."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import pytest

from fvlab.alphabet import Dist
from fvlab.cli import get_rates_parser
from fvlab.config import ConfigError, RunConfig


@dataclass(kw_only=True)
class MockCLIArgs:
    """Class to mock CLI arguments."""

    command: str = "rates"
    n: list[int] | None = None
    eps: list[float] = field(default_factory=lambda: [0.1])
    config: Path | None = None


def write_config(tmp_path: Path, data: object) -> Path:
    """Write a JSON config file and return its path."""
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return path


def test_source_defaults() -> None:
    """Test the uniform default law and the coercion of plain lists."""
    config = RunConfig(m=3)
    assert config.dist == Dist.uniform(3)
    config = RunConfig(dist=[0.8, 0.2], n=[8, 4, 8])
    assert config.m == 2
    assert config.n == [4, 8]
    assert RunConfig().dist is None


@pytest.mark.parametrize(
    "settings",
    [
        {"command": "encode"},
        {"m": 3, "dist": [0.5, 0.5]},
        {"m": 0},
        {"dist": [0.5, 0.6]},
        {"n": [0, 4]},
        {"eps": [1.0]},
        {"eps": []},
        {"codes": ["huffman"]},
        {"cases": ["cubic"]},
        {"fmt": "xml"},
        {"resolution": 0},
        {"gamma": -1.0},
    ],
)
def test_invalid_settings(settings: dict) -> None:
    """Test that invalid settings raise ConfigError."""
    with pytest.raises(ConfigError):
        RunConfig(**settings)


def test_code_names() -> None:
    """Test that the interleaved code is only selected for binary sources."""
    assert "interleave" in RunConfig(m=2).code_names
    assert "interleave" not in RunConfig(m=3).code_names
    assert RunConfig(m=3, codes=["optimal"]).code_names == ["optimal"]


def test_require_dist() -> None:
    """Test the error for a missing source."""
    with pytest.raises(ConfigError):
        RunConfig(command="sweep").require_dist()


def test_is_default() -> None:
    """Test default detection and the summary of non-default settings."""
    config = RunConfig(command="sweep", tolerance=0.5)
    assert config.is_default("resolution")
    assert not config.is_default("tolerance")
    with pytest.raises(AttributeError):
        config.is_default("seed")
    assert "tolerance" in config.nice_str
    assert "resolution" not in config.nice_str


def test_from_file(tmp_path: Path) -> None:
    """Test reading settings from a JSON file."""
    path = write_config(
        tmp_path, {"command": "sweep", "dist": [0.5, 0.5], "n": [4, 2], "eps": 0.2}
    )
    config = RunConfig.from_file(path)
    assert config.command == "sweep"
    assert config.dist == Dist.uniform(2)
    assert config.n == [2, 4]
    assert config.eps == [0.2]
    assert RunConfig.from_file(path, eps=[0.3]).eps == [0.3]


@pytest.mark.parametrize(
    "content", ["[1, 2]", "{not json", json.dumps({"seed": 1})]
)
def test_bad_files(tmp_path: Path, content: str) -> None:
    """Test that unreadable or unknown config files raise ConfigError."""
    path = tmp_path / "run.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        RunConfig.from_file(path)
    with pytest.raises(ConfigError):
        RunConfig.from_file(tmp_path / "missing.json")


def test_from_mock_args(tmp_path: Path) -> None:
    """Test that config file values are overridden by given arguments."""
    path = write_config(tmp_path, {"dist": "0.9,0.1", "n": [3], "eps": [0.2]})
    args = MockCLIArgs(command="rates", n=[5], eps=[0.05], config=path)
    config = RunConfig.from_argparser(args)
    assert config.dist == Dist.parse("0.9,0.1")
    assert config.n == [5]
    assert config.eps == [0.05]


def test_flags_take_precedence(tmp_path: Path) -> None:
    """Test that absent flags do not override the config file."""
    path = write_config(tmp_path, {"dist": [0.7, 0.3], "n": [3], "eps": [0.2]})
    parser = get_rates_parser(prog="fvlab rates")
    args = parser.parse_args(["--config", str(path), "--n", "5,6"])
    config = RunConfig.from_argparser(args)
    assert config.command == "rates"
    assert config.n == [5, 6]
    assert config.eps == [0.2]
    assert config.dist == Dist.parse("0.7,0.3")


def test_ignored_flags() -> None:
    """Test that subcommand parsers leave out settings they do not use."""
    parser = get_rates_parser(prog="fvlab rates")
    with pytest.raises(SystemExit):
        parser.parse_args(["--resolution", "8"])
