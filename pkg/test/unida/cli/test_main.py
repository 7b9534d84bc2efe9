import json

import pydantic
from pytest import raises

from unida._version import __version__
from unida.cli.main import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RUNTIME_ERROR,
    build_parser,
    error_details,
    main,
)
from unida.common.errors import DivergenceError
from unida.project.config import ExperimentConfig
from unida.project.manifest import RunManifest


def _write(tmp_path, content, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"output_dir": str(tmp_path / "out"), **content}))
    return str(path)


def _stderr_json(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test__build_parser__subcommands():
    parser = build_parser()
    args = parser.parse_args(["generate", "--config", "x.yaml", "--seed", "4"])
    assert (args.command, args.config, args.seed, args.out) == ("generate", "x.yaml", 4, None)
    with raises(SystemExit):
        parser.parse_args(["unknown"])


def test__main__version(capsys):
    with raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert __version__ in capsys.readouterr().out


def test__main__generate_with_overrides(tmp_path):
    config = _write(tmp_path, {"preset": "ssm-kf"})
    out = tmp_path / "elsewhere"
    assert main(["generate", "--config", config, "--seed", "8", "--out", str(out)]) == EXIT_OK
    manifest = RunManifest.read(out, "generate")
    assert manifest.seed == 8
    expected = ExperimentConfig.model_validate(
        {"preset": "ssm-kf", "seed": 8, "output_dir": str(out)}
    )
    assert manifest.config_hash == expected.config_hash()
    assert not (tmp_path / "out").exists()


def test__main__schedule_dump_prints_csv(tmp_path, capsys):
    config = _write(
        tmp_path,
        {
            "preset": "ssm-forcingdas-ar",
            "K": 2,
            "method": {
                "kind": "forcingdas",
                "regime": "ar",
                "denoiser": {"kind": "gaussian", "T_s": 2},
            },
        },
    )
    assert main(["schedule-dump", "--config", config]) == EXIT_OK
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows == ["2,1,0,0,0", "2,2,2,1,0"]


def test__main__missing_config_file(tmp_path, capsys):
    code = main(["generate", "--config", str(tmp_path / "missing.json")])
    assert code == EXIT_CONFIG_ERROR
    details = _stderr_json(capsys)
    assert details["error"] == "ConfigError"
    assert details["key"] == "config"


def test__main__invalid_config_reports_key(tmp_path, capsys):
    config = _write(tmp_path, {"K": 0})
    assert main(["generate", "--config", config]) == EXIT_CONFIG_ERROR
    details = _stderr_json(capsys)
    assert details["error"] == "ConfigError"
    assert details["key"] == "K"
    assert details["config"] == config


def test__main__invalid_yaml(tmp_path, capsys):
    path = tmp_path / "experiment.yaml"
    path.write_text("K: [unclosed\n")
    assert main(["generate", "--config", str(path)]) == EXIT_CONFIG_ERROR
    assert "not valid YAML" in _stderr_json(capsys)["message"]


def test__main__missing_artifact_is_a_config_error(tmp_path, capsys):
    config = _write(tmp_path, {"preset": "ssm-kf"})
    assert main(["observe", "--config", config]) == EXIT_CONFIG_ERROR
    assert _stderr_json(capsys)["key"] == "data/truth.fdt"


def test__main__divergence_is_a_runtime_error(tmp_path, capsys):
    config = _write(
        tmp_path,
        {
            "preset": "ssm-forcingdas-fs",
            "K": 4,
            "method": {
                "kind": "forcingdas",
                "regime": "fs",
                "zeta": 1e300,
                "denoiser": {"kind": "gaussian", "causal": False, "T_s": 10},
            },
        },
    )
    for command in ("generate", "observe"):
        assert main([command, "--config", config]) == EXIT_OK
    capsys.readouterr()
    assert main(["assimilate", "--config", config]) == EXIT_RUNTIME_ERROR
    details = _stderr_json(capsys)
    assert details["error"] == "DivergenceError"
    assert "step" in details


def test__main__unexpected_error_is_reported_as_json(tmp_path, capsys, monkeypatch):
    def failing(name, ctx):
        raise OSError("disk full")

    monkeypatch.setattr("unida.cli.main.run_command", failing)
    config = _write(tmp_path, {"preset": "ssm-kf"})
    assert main(["generate", "--config", config]) == EXIT_RUNTIME_ERROR
    details = _stderr_json(capsys)
    assert details["error"] == "OSError"
    assert details["message"] == "disk full"
    assert details["config"] == config


def test__error_details__variants():
    try:
        ExperimentConfig.model_validate({"sigma_y": -1})
    except pydantic.ValidationError as e:
        details = error_details(e)
    assert details["key"] == "sigma_y"
    assert details["error_count"] == 1
    assert error_details(DivergenceError("boom", step=3))["step"] == 3
    assert error_details(KeyError("x")) == {"error": "KeyError", "message": "'x'"}
