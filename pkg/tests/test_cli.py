"""Tests for the command-line entry points."""

import argparse
import json

import pytest

from src.primary.cli import _dump_spec, build_parser, main
from src.primary.masking.artifact import load_static_mask
from src.primary.metrics import default_coefficients, load_coefficients
from src.primary.network.detector import weight_key
from src.primary.pipeline.weights import load_weights
from tests.helpers import make_frame, toy_config_dict, write_dataset


@pytest.fixture
def toy_config_file(tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(toy_config_dict()))
    return path


def test_dump_spec_splits_on_the_last_colon():
    assert _dump_spec("cam:0:12") == ("cam:0", 12)
    for bad in ("12", ":3", "cam:x"):
        with pytest.raises(argparse.ArgumentTypeError):
            _dump_spec(bad)


def test_a_subcommand_is_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_init_weights(tmp_path, toy_config_file):
    out = tmp_path / "w.sdnnw"
    assert main(["init-weights", "--config", str(toy_config_file), "--seed", "1", "--out", str(out)]) == 0
    tensors = load_weights(out)
    assert tensors[weight_key(0)].shape == (4, 3, 3, 3)
    assert any(name.startswith("mgnet.") for name in tensors)


def test_calibrate_reference_regimes(tmp_path):
    out = tmp_path / "coeff.json"
    assert main(["calibrate", "--out", str(out)]) == 0
    assert load_coefficients(out) == default_coefficients()


def test_calibrate_from_observation_list(tmp_path):
    observations = [
        {"synops": 3e8, "events": 6e5, "neurons": 2e6, "layers": 10, "energy_mJ": 20.0, "latency_ms": 2.0},
        {"synops": 1e8, "events": 4e5, "neurons": 3e6, "layers": 12, "energy_mJ": 15.0, "latency_ms": 1.5},
    ]
    source = tmp_path / "obs.json"
    source.write_text(json.dumps(observations))
    out = tmp_path / "coeff.json"
    assert main(["calibrate", "--observations", str(source), "--out", str(out)]) == 0
    assert load_coefficients(out).t_layer >= 0


def test_module_errors_exit_with_two(tmp_path, toy_config_file):
    bad = tmp_path / "obs.json"
    bad.write_text(json.dumps([{"synops": 1}]))
    assert main(["calibrate", "--observations", str(bad)]) == 2
    assert main(["run", "--manifest", str(tmp_path / "absent.jsonl"), "--config", str(toy_config_file),
                 "--mask", "none", "--out", str(tmp_path / "out")]) == 2
    assert main(["run", "--manifest", str(tmp_path / "absent.jsonl"), "--config", str(tmp_path / "nope.json"),
                 "--mask", "none"]) == 2


def test_build_static_mask_from_sparsity(tmp_path):
    boxes = {"s": [[[0, 0, 448, 448, 0]], [[0, 0, 224, 448, 1]]]}
    manifest = write_dataset(tmp_path / "data", {"s": [make_frame(0), make_frame(1)]}, boxes=boxes, split="train")
    out = tmp_path / "mask.pgm"
    assert main(["build-static-mask", "--manifest", str(manifest), "--sparsity", "0.5", "--out", str(out)]) == 0
    mask, meta = load_static_mask(out)
    assert mask.kept == 392
    assert mask.grid[:, :14].all()
    assert meta["k_s"] == pytest.approx(0.5)
    assert main(["build-static-mask", "--manifest", str(manifest), "--ks", "0.5", "--sparsity", "0.5",
                 "--out", str(out)]) == 2


def test_run_with_dump(tmp_path, toy_config_file, small_dataset):
    out = tmp_path / "out"
    argv = ["run", "--manifest", str(small_dataset), "--config", str(toy_config_file), "--mask", "none",
            "--out", str(out), "--dump", "moving:1"]
    assert main(argv) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["frames"] == 6
    assert (out / "dumps" / "moving_000001_delta.pgm").is_file()


def test_plain_run_uses_the_unmasked_default(tmp_path, toy_config_file, small_dataset):
    out = tmp_path / "plain"
    assert main(["run", "--manifest", str(small_dataset), "--config", str(toy_config_file), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "ok"
    assert summary["mask_mode"] == "none"
