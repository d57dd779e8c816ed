import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from agesim.weights import (CUSTOM_MNIST, Format, LayerSpec, NetworkSpec, dequantize_layer,
                            fit_quantization, load_network, quantize_layer, quantize_to_words,
                            round_half_away, save_network, synthesize_network)


def net_of(*tensors):
    layers = [LayerSpec.fc(1, len(t)) for t in tensors]
    return NetworkSpec("t", layers, [np.asarray(t, dtype=np.float32) for t in tensors])


# load_network

def test_load_single_fc(tmp_path):
    w = np.arange(2560, dtype=np.float32)
    (tmp_path / "fc.bin").write_bytes(w.astype("<f4").tobytes())
    (tmp_path / "m.json").write_text(
        '{"name": "one", "layers": [{"kind": "FC", "shape": [10, 256], "file": "fc.bin"}]}')
    net = load_network(tmp_path / "m.json")
    assert len(net.layers) == 1
    assert net.n_weights == 2560
    np.testing.assert_array_equal(net.tensors[0], w)


def test_custom_net_roundtrip_counts(tmp_path):
    net = synthesize_network(CUSTOM_MNIST, seed=3)
    loaded = load_network(save_network(net, tmp_path))
    assert len(loaded.layers) == 4
    assert [l.size for l in loaded.layers] == [400, 20000, 204800, 2560]
    assert loaded.n_weights == 227760
    for a, b in zip(net.tensors, loaded.tensors):
        np.testing.assert_array_equal(a, b)


def test_load_shape_mismatch(tmp_path):
    (tmp_path / "fc.bin").write_bytes(b"\0" * (10 * 256 * 4 - 4))
    (tmp_path / "m.json").write_text(
        '{"name": "x", "layers": [{"kind": "FC", "shape": [10, 256], "file": "fc.bin"}]}')
    with pytest.raises(ValueError, match="bytes"):
        load_network(tmp_path / "m.json")


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_network(tmp_path / "missing.json")
    (tmp_path / "m.json").write_text(
        '{"name": "x", "layers": [{"kind": "POOL", "shape": [2, 2], "file": "p.bin"}]}')
    with pytest.raises(ValueError, match="unknown layer kind"):
        load_network(tmp_path / "m.json")


def test_layer_spec_invariants():
    assert LayerSpec.conv(4, 3, 3, 3).size == 108
    assert LayerSpec.fc(10, 256).per_filter == 256
    with pytest.raises(ValueError):
        LayerSpec.conv(0, 1, 1, 1)
    with pytest.raises(ValueError):
        LayerSpec("FC", (2, 2, 2))


# synthesize_network

def test_synthesize_deterministic():
    a = synthesize_network([LayerSpec.fc(2, 2)], ("gaussian", 0, 1), seed=7)
    b = synthesize_network([LayerSpec.fc(2, 2)], ("gaussian", 0, 1), seed=7)
    np.testing.assert_array_equal(a.tensors[0], b.tensors[0])


def test_synthesize_rejects_bad_params():
    with pytest.raises(ValueError):
        synthesize_network([LayerSpec.fc(2, 2)], ("uniform", 0, 0))
    with pytest.raises(ValueError):
        synthesize_network([LayerSpec.fc(2, 2)], ("gaussian", 0, 0))


def test_synthesize_gaussian_mean():
    net = synthesize_network([LayerSpec.conv(4, 3, 3, 3)], ("gaussian", 0, 0.1), seed=1)
    t = net.tensors[0]
    assert t.size == 108
    assert abs(t.mean()) <= 3 * 0.1 / np.sqrt(108)


# quantization

def test_sym_scale():
    scheme = fit_quantization(net_of([-1.27, 0, 1.27]), Format.INT8_SYM)
    assert scheme.scales[0] == pytest.approx(0.01, rel=1e-6)


def test_all_zero_layers():
    scheme = fit_quantization(net_of([0, 0, 0]), Format.INT8_ASYM)
    assert scheme.scales == (1.0,) and scheme.zero_points == (0,)
    assert fit_quantization(net_of([0, 0]), Format.INT8_SYM).scales == (1.0,)


def test_float32_identity():
    scheme = fit_quantization(net_of([1.5, -2.0]), Format.FLOAT32)
    assert scheme.bits_per_weight == 32 and scheme.scales == ()


def test_float32_zero_bits():
    words = quantize_to_words(net_of([0.0]), fit_quantization(net_of([0.0]), Format.FLOAT32))
    assert int(words[0][0]) == 0


def test_float32_matches_struct():
    vals = [1.0, -0.15625, 3.4e38, 1e-40]
    net = net_of(vals)
    words = quantize_to_words(net, fit_quantization(net, Format.FLOAT32))[0]
    for v, w in zip(vals, words):
        assert int(w) == struct.unpack("<I", struct.pack("<f", v))[0]


def test_sym_max_to_127():
    net = net_of([-1.27, 0, 1.27])
    words = quantize_to_words(net, fit_quantization(net, Format.INT8_SYM))[0]
    assert format(int(words[2]), "08b") == "01111111"
    assert int(words[0]) == 0x81  # -127 two's complement


def test_asym_min_maps_to_zero():
    net = net_of([-0.3, 0.1, 0.9])
    scheme = fit_quantization(net, Format.INT8_ASYM)
    words = quantize_to_words(net, scheme)[0]
    assert int(words[0]) == 0
    assert int(words[2]) == 255


def test_round_half_away():
    np.testing.assert_array_equal(round_half_away([0.5, 1.5, 2.5, -0.5, -2.5, 0.49]),
                                  [1, 2, 3, -1, -3, 0])


finite = st.floats(-100, 100, allow_nan=False, width=32)


@given(arrays(np.float32, st.integers(1, 64), elements=finite))
def test_sym_roundtrip_bound(w):
    net = net_of(w)
    scheme = fit_quantization(net, Format.INT8_SYM)
    q = quantize_layer(w, scheme, 0)
    back = dequantize_layer(q, scheme, 0)
    scale = scheme.scales[0]
    assert np.all(np.abs(back - w.astype(np.float64)) <= scale / 2 + 1e-9 * max(1.0, scale))
    assert not np.any(q.view(np.int8) == -128)


@given(arrays(np.float32, st.integers(1, 64), elements=finite))
def test_asym_range(w):
    net = net_of(w)
    q = quantize_to_words(net, fit_quantization(net, Format.INT8_ASYM))[0]
    assert q.dtype == np.uint8 and q.min() >= 0 and q.max() <= 255


@given(arrays(np.float32, st.integers(1, 32),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=32)))
def test_float32_bit_exact(w):
    words = quantize_to_words(net_of(w), fit_quantization(net_of(w), Format.FLOAT32))[0]
    np.testing.assert_array_equal(words.view(np.float32), w)


@settings(max_examples=20)
@given(st.sampled_from(list(Format)), st.integers(0, 2**16))
def test_quantize_deterministic(fmt, seed):
    net = synthesize_network([LayerSpec.conv(3, 2, 3, 3), LayerSpec.fc(4, 5)], seed=seed)
    a = quantize_to_words(net, fit_quantization(net, fmt))
    b = quantize_to_words(net, fit_quantization(net, fmt))
    for x, y in zip(a, b):
        assert x.tobytes() == y.tobytes()
