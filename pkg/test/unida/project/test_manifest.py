import json
import logging

from unida._version import __version__
from unida.project.manifest import MANIFEST_NAME, RunManifest, file_sha256

ABC_SHA256 = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test__file_sha256__known_digest(tmp_path):
    path = tmp_path / "abc.txt"
    path.write_bytes(b"abc")
    assert file_sha256(path) == ABC_SHA256


def test__RunManifest__records_relative_paths(tmp_path):
    (tmp_path / "data").mkdir()
    source = tmp_path / "data" / "in.bin"
    source.write_bytes(b"abc")
    outside = tmp_path.parent / f"{tmp_path.name}-outside.bin"
    outside.write_bytes(b"abc")
    manifest = RunManifest(command="simulate", config_hash="h", seed=1)
    manifest.add_inputs(tmp_path, [source]).add_outputs(tmp_path, [outside])
    assert manifest.inputs == {"data/in.bin": ABC_SHA256}
    assert list(manifest.outputs.values()) == [ABC_SHA256]
    assert next(iter(manifest.outputs)) == outside.as_posix()
    assert manifest.version == __version__


def test__RunManifest__write_merges_commands(tmp_path):
    RunManifest(command="simulate", config_hash="a", seed=1).write(tmp_path)
    RunManifest(command="observe", config_hash="a", seed=1).write(tmp_path)
    RunManifest(command="simulate", config_hash="b", seed=2).write(tmp_path)
    content = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert set(content["runs"]) == {"simulate", "observe"}
    assert content["version"] == __version__
    assert RunManifest.read(tmp_path, "simulate").config_hash == "b"
    assert RunManifest.read(tmp_path, "evaluate") is None
    assert not list(tmp_path.glob(".manifest-*"))


def test__RunManifest__read_without_manifest(tmp_path):
    assert RunManifest.read(tmp_path, "simulate") is None


def test__RunManifest__replaces_unreadable_manifest(tmp_path, caplog):
    (tmp_path / MANIFEST_NAME).write_text("{not json")
    with caplog.at_level(logging.WARNING, logger="unida.project.manifest"):
        RunManifest(command="train", config_hash="c", seed=0).write(tmp_path)
    assert "unreadable" in caplog.text
    assert RunManifest.read(tmp_path, "train").seed == 0
