"""Tests for detector configs, dense and sigma-delta execution and head decoding."""

import json

import numpy as np
import pytest

from src.primary.errors import ConfigurationError, ShapeMismatchError
from src.primary.metrics.cost import event_rate
from src.primary.network import (
    Detection,
    ann_forward,
    box_iou,
    build_detector,
    convert_to_sdnn,
    count_macs,
    decode_detections,
    default_config,
    load_config,
    nms,
    parse_config,
    quantize_detector,
    random_weights,
    total_macs,
)
from src.primary.network.config import HeadSpec
from src.primary.network.detector import bias_key, weight_key
from src.primary.tensor_engine import conv2d, relu
from tests.helpers import toy_config_dict


def test_default_config_grid_and_shapes():
    net = default_config()
    assert net.grid == 14
    assert net.layer_shapes()[-1][1] == (42, 14, 14)
    assert net.head.channels == 42
    assert net.precision == "int8"


def test_default_config_macs():
    rows = count_macs(default_config())
    assert rows[0] == ("conv1", 21_676_032)
    assert [name for name, _ in rows] == [f"conv{i}" for i in range(1, 11)]
    assert total_macs(default_config()) == pytest.approx(1.034e9, rel=0.25)


def test_toy_config_parses():
    net = parse_config(toy_config_dict())
    assert net.grid == 14
    assert len(net.layers) == 5
    assert net.layers[-1].act == "none"


@pytest.mark.parametrize("mutate", [
    lambda d: d["layers"][0].update(kind="pool"),
    lambda d: d["layers"][0].update(act="gelu"),
    lambda d: d["layers"][1].update(cin=7),
    lambda d: d["layers"][0].update(stride=3),
    lambda d: d["layers"][0].update(k=5),
    lambda d: d["layers"][0].update(theta=-1),
    lambda d: d["layers"][-1].update(cout=7),
    lambda d: d["head"].update(anchors=[]),
    lambda d: d["head"].update(anchors=[[0.0, 10.0]]),
    lambda d: d["head"].update(anchors=[[16.0, -4.0]]),
    lambda d: d["head"].update(classes=0),
    lambda d: d.update(precision="fp16"),
    lambda d: d.update(input=450),
    lambda d: d.pop("head"),
    lambda d: d["layers"][2].pop("cout"),
])
def test_invalid_configs_are_rejected(mutate):
    data = toy_config_dict()
    mutate(data)
    with pytest.raises(ConfigurationError):
        parse_config(data)


def test_load_config(tmp_path):
    path = tmp_path / "net.json"
    path.write_text(json.dumps(toy_config_dict(input_size=64)))
    net = load_config(path)
    assert net.grid == 2
    assert net.source == str(path)

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(broken)
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")


def test_build_detector_errors():
    net = parse_config(toy_config_dict(input_size=64))
    weights = random_weights(net, seed=0)
    del weights[weight_key(2)]
    with pytest.raises(ShapeMismatchError):
        build_detector(net, weights)

    detector = build_detector(net, random_weights(net, seed=0))
    with pytest.raises(ShapeMismatchError):
        detector.forward(np.zeros((3, 32, 32), dtype=np.float32))


def test_dense_pass_bills_dense_macs():
    net = parse_config(toy_config_dict(input_size=64, precision="f32"))
    detector = build_detector(net, random_weights(net, seed=1))
    frame = np.random.default_rng(0).uniform(size=(3, 64, 64)).astype(np.float32)
    head, stats = detector.forward_with_stats(frame)
    assert head.shape == (6, 2, 2)
    np.testing.assert_array_equal(head, detector.forward(frame))
    assert stats.layers[0].name == "input"
    assert stats.input_events == 3 * 64 * 64
    assert stats.total_synops == stats.total_dense_macs == total_macs(net)


def _int8_toy(size=64, seed=0):
    net = parse_config(toy_config_dict(input_size=size))
    rng = np.random.default_rng(seed)
    frames = [rng.uniform(size=(3, size, size)).astype(np.float32) for _ in range(2)]
    return net, quantize_detector(net, random_weights(net, seed=seed), frames), frames


def test_zero_weights_give_zero_output():
    net = parse_config(toy_config_dict(input_size=64, precision="f32"))
    weights = {key: np.zeros_like(value) for key, value in random_weights(net).items()}
    frame = np.random.default_rng(2).uniform(size=(3, 64, 64)).astype(np.float32)
    assert not ann_forward(net, weights, frame).any()


def test_two_layer_net_matches_composed_convolutions():
    data = {
        "input": 16,
        "precision": "f32",
        "layers": [
            {"kind": "conv", "cin": 3, "cout": 4, "k": 3, "stride": 2, "pad": 1},
            {"kind": "conv", "cin": 4, "cout": 6, "k": 1, "stride": 1, "pad": 0, "act": "none"},
        ],
        "head": {"anchors": [[8, 8]], "classes": 1},
    }
    net = parse_config(data)
    weights = random_weights(net, seed=6)
    frame = np.random.default_rng(6).uniform(size=(3, 16, 16)).astype(np.float32)
    hidden = relu(conv2d(frame, weights[weight_key(0)], weights[bias_key(0)], stride=2, padding=1))
    expected = conv2d(hidden, weights[weight_key(1)], weights[bias_key(1)])
    np.testing.assert_array_equal(ann_forward(net, weights, frame), expected)


def test_zero_stream_is_silent_after_the_first_frame():
    net, weights, _ = _int8_toy()
    sdnn = convert_to_sdnn(net, weights)
    zeros = np.zeros((3, 64, 64), dtype=np.float32)
    _, first = sdnn.step(zeros)
    assert first.input_events == 0
    for _ in range(3):
        _, stats = sdnn.step(zeros)
        assert stats.total_events == 0 and stats.total_synops == 0


def test_quantized_detector_uses_integer_path():
    net, weights, frames = _int8_toy()
    detector = build_detector(net, weights)
    assert detector.integer
    assert weights[weight_key(0)].dtype == np.int8
    raw = detector.forward_raw(frames[0])
    assert raw.dtype == np.int32
    assert detector.forward(frames[0]).dtype == np.float32


def test_repeated_frames_produce_no_events():
    net, weights, frames = _int8_toy()
    sdnn = convert_to_sdnn(net, weights)
    first_head, first = sdnn.step(frames[0])
    assert first.input_events > 0
    head, stats = sdnn.step(frames[0])
    assert stats.total_events == 0
    assert stats.total_synops == 0
    np.testing.assert_array_equal(head, first_head)


def test_reset_resends_the_full_frame():
    net, weights, frames = _int8_toy()
    sdnn = convert_to_sdnn(net, weights)
    _, first = sdnn.step(frames[0])
    sdnn.reset()
    _, again = sdnn.step(frames[0])
    assert again.to_dict() == first.to_dict()


def test_theta_reduces_events():
    net, weights, frames = _int8_toy()
    counts = []
    for theta in (0.0, 4.0, 16.0):
        sdnn = convert_to_sdnn(net, weights, theta=theta, input_theta=theta)
        sdnn.step(frames[0])
        _, stats = sdnn.step(frames[1])
        counts.append(stats.total_events)
    assert counts[0] >= counts[1] >= counts[2]
    assert counts[2] < counts[0]


def test_masked_input_lowers_event_rate_at_every_layer():
    net, weights, _ = _int8_toy()
    rng = np.random.default_rng(21)
    cut = int(64 * 0.6)
    full_stats, masked_stats = [], []
    for _ in range(20):
        stream = [rng.uniform(size=(3, 64, 64)).astype(np.float32) for _ in range(4)]
        masked = [frame.copy() for frame in stream]
        for frame in masked:
            frame[:, :, :cut] = 0.0
        for frames, sink in ((stream, full_stats), (masked, masked_stats)):
            sdnn = convert_to_sdnn(net, weights)
            for frame in frames:
                sink.append(sdnn.step(frame)[1])

    full = event_rate(full_stats)
    reduced = event_rate(masked_stats)
    assert len(full) == 6
    for name, before, after in zip([layer.name for layer in full_stats[0].layers], full, reduced):
        assert after < before, name
    assert sum(s.total_synops for s in masked_stats) < sum(s.total_synops for s in full_stats)


def test_single_pixel_change_stays_in_its_receptive_field():
    data = {
        "input": 16,
        "precision": "f32",
        "layers": [{"kind": "conv", "cin": 3, "cout": 6, "k": 3, "stride": 1, "pad": 1, "act": "none"}],
        "head": {"anchors": [[8, 8]], "classes": 1},
    }
    net = parse_config(data)
    weights = random_weights(net, seed=4)
    detector = build_detector(net, weights)
    sdnn = convert_to_sdnn(net, weights)
    frame = np.random.default_rng(5).uniform(size=(3, 16, 16)).astype(np.float32)
    changed = frame.copy()
    changed[1, 5, 7] += 0.5

    sdnn.step(frame)
    _, stats = sdnn.step(changed)
    assert stats.input_events == 1
    events = sdnn.layers[0].delta.x_ref != detector.forward(frame)
    rows, cols = np.nonzero(events.any(axis=0))
    assert rows.min() >= 4 and rows.max() <= 6
    assert cols.min() >= 6 and cols.max() <= 8
    dense_diff = detector.forward(changed) != detector.forward(frame)
    np.testing.assert_array_equal(events, dense_diff)
    assert stats.layer("conv1").synops == 6 * 9


def test_box_iou():
    assert box_iou((0, 0, 10, 10), (0, 0, 10, 10)) == 1.0
    assert box_iou((0, 0, 10, 10), (20, 20, 30, 30)) == 0.0
    assert box_iou((0, 0, 10, 10), (5, 0, 15, 10)) == pytest.approx(1 / 3)


def test_nms_keeps_best_per_class():
    a = Detection((0, 0, 10, 10), 0, 0.9)
    b = Detection((1, 1, 11, 11), 0, 0.8)
    c = Detection((1, 1, 11, 11), 1, 0.7)
    d = Detection((50, 50, 60, 60), 0, 0.6)
    assert nms([b, d, c, a]) == [a, c, d]


def test_detection_rejects_degenerate_boxes():
    with pytest.raises(ValueError):
        Detection((10, 0, 10, 5), 0, 0.5)


def test_decode_single_confident_cell():
    spec = HeadSpec(anchors=((64.0, 64.0),), classes=1)
    head = np.zeros((6, 14, 14), dtype=np.float32)
    head[4] = -10.0
    head[4, 3, 5] = 10.0
    head[5, 3, 5] = 10.0
    found = decode_detections(head, spec, conf_thresh=0.5)
    assert len(found) == 1
    det = found[0]
    np.testing.assert_allclose(det.box, (144.0, 80.0, 208.0, 144.0), atol=1e-6)
    assert det.class_id == 0
    assert det.confidence == pytest.approx(0.99991, abs=1e-4)


def test_decode_nothing_above_threshold():
    spec = HeadSpec(anchors=((64.0, 64.0),), classes=1)
    assert decode_detections(np.full((6, 14, 14), -50.0, dtype=np.float32), spec, conf_thresh=0.1) == []


def test_decode_survives_extreme_size_logits():
    spec = HeadSpec(anchors=((64.0, 64.0),), classes=1)
    head = np.zeros((6, 14, 14), dtype=np.float32)
    head[4] = -10.0
    head[4, 0, 0] = 10.0
    head[5, 0, 0] = 10.0
    head[2, 0, 0] = 1e6
    head[3, 0, 0] = -1e6
    det = decode_detections(head, spec, conf_thresh=0.5)[0]
    assert np.all(np.isfinite(det.box))
    assert det.box[0] < det.box[2] and det.box[1] < det.box[3]


def test_decode_rejects_bad_head_shape():
    spec = HeadSpec(anchors=((64.0, 64.0),), classes=1)
    with pytest.raises(ShapeMismatchError):
        decode_detections(np.zeros((7, 14, 14), dtype=np.float32), spec, conf_thresh=0.5)


def test_zero_anchor_never_reaches_the_decoder():
    data = toy_config_dict()
    data["head"]["anchors"][0] = [0.0, 10.0]
    with pytest.raises(ConfigurationError, match="anchor"):
        parse_config(data)
    with pytest.raises(ConfigurationError):
        HeadSpec(anchors=((float("nan"), 8.0),), classes=1)
