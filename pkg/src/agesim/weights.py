"""Weight tensors and their bit-level encodings.

Networks are ordered lists of CONV/FC layers, each carrying one flat float32
tensor in canonical order: (filter, channel, row, col) for CONV and (out, in)
for FC. Quantization is range-linear, with parameters fitted per layer.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LayerKind(str, enum.Enum):
    CONV = "CONV"
    FC = "FC"


class Format(str, enum.Enum):
    FLOAT32 = "float32"
    INT8_SYM = "int8-symmetric"
    INT8_ASYM = "int8-asymmetric"

    @classmethod
    def parse(cls, text: str) -> "Format":
        aliases = {
            "float32": cls.FLOAT32, "fp32": cls.FLOAT32,
            "int8-symmetric": cls.INT8_SYM, "int8_sym": cls.INT8_SYM, "sym": cls.INT8_SYM,
            "int8-asymmetric": cls.INT8_ASYM, "int8_asym": cls.INT8_ASYM, "asym": cls.INT8_ASYM,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown data format {text!r}") from None

    @property
    def bits(self) -> int:
        return 32 if self is Format.FLOAT32 else 8


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    shape: tuple[int, ...]

    def __post_init__(self):
        kind = LayerKind(self.kind)
        object.__setattr__(self, "kind", kind)
        shape = tuple(int(s) for s in self.shape)
        object.__setattr__(self, "shape", shape)
        want = 4 if kind is LayerKind.CONV else 2
        if len(shape) != want:
            raise ValueError(f"{kind.value} layer needs {want} dimensions, got {shape}")
        if any(s < 1 for s in shape):
            raise ValueError(f"layer dimensions must be >= 1, got {shape}")

    @classmethod
    def conv(cls, f, ch, r, c) -> "LayerSpec":
        return cls(LayerKind.CONV, (f, ch, r, c))

    @classmethod
    def fc(cls, out, in_) -> "LayerSpec":
        return cls(LayerKind.FC, (out, in_))

    @property
    def filters(self) -> int:
        return self.shape[0]

    @property
    def per_filter(self) -> int:
        """Elements per filter (FC neurons count as filters of size `in`)."""
        return int(np.prod(self.shape[1:]))

    @property
    def size(self) -> int:
        return self.filters * self.per_filter

    def __str__(self):
        return f"{self.kind.value}({','.join(map(str, self.shape))})"


@dataclass
class NetworkSpec:
    name: str
    layers: list[LayerSpec]
    tensors: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        if len(self.layers) != len(self.tensors):
            raise ValueError("one tensor per layer required")
        tensors = []
        for layer, t in zip(self.layers, self.tensors):
            t = np.ascontiguousarray(t, dtype=np.float32).ravel()
            if t.size != layer.size:
                raise ValueError(f"{layer}: tensor has {t.size} elements, expected {layer.size}")
            tensors.append(t)
        self.tensors = tensors

    @property
    def n_weights(self) -> int:
        return sum(layer.size for layer in self.layers)


# Layer shapes of the evaluated networks. AlexNet/VGG-16 follow the common
# torchvision definitions (ungrouped convolutions).
CUSTOM_MNIST = [
    LayerSpec.conv(16, 1, 5, 5),
    LayerSpec.conv(50, 16, 5, 5),
    LayerSpec.fc(256, 800),
    LayerSpec.fc(10, 256),
]

ALEXNET = [
    LayerSpec.conv(64, 3, 11, 11),
    LayerSpec.conv(192, 64, 5, 5),
    LayerSpec.conv(384, 192, 3, 3),
    LayerSpec.conv(256, 384, 3, 3),
    LayerSpec.conv(256, 256, 3, 3),
    LayerSpec.fc(4096, 9216),
    LayerSpec.fc(4096, 4096),
    LayerSpec.fc(1000, 4096),
]

_VGG16_CONV = [(64, 3), (64, 64), (128, 64), (128, 128), (256, 128), (256, 256), (256, 256),
               (512, 256), (512, 512), (512, 512), (512, 512), (512, 512), (512, 512)]
VGG16 = [LayerSpec.conv(f, ch, 3, 3) for f, ch in _VGG16_CONV] + [
    LayerSpec.fc(4096, 25088),
    LayerSpec.fc(4096, 4096),
    LayerSpec.fc(1000, 4096),
]

ZOO = {"custom_mnist": CUSTOM_MNIST, "alexnet": ALEXNET, "vgg16": VGG16}


def load_network(manifest_path) -> NetworkSpec:
    """Read a JSON manifest plus raw little-endian float32 tensor files.

    Manifest layout::

        {"name": "net", "layers": [{"kind": "CONV", "shape": [16, 1, 5, 5],
                                    "file": "conv1.bin"}, ...]}

    Tensor paths are relative to the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    doc = json.loads(manifest_path.read_text())
    layers, tensors = [], []
    for i, entry in enumerate(doc["layers"]):
        kind = str(entry["kind"]).upper()
        if kind not in LayerKind.__members__:
            raise ValueError(f"layer {i}: unknown layer kind {entry['kind']!r}")
        layer = LayerSpec(LayerKind[kind], tuple(entry["shape"]))
        path = manifest_path.parent / entry["file"]
        if not path.is_file():
            raise FileNotFoundError(f"layer {i}: tensor file not found: {path}")
        raw = path.read_bytes()
        if len(raw) != 4 * layer.size:
            raise ValueError(
                f"layer {i} {layer}: tensor file {path.name} has {len(raw)} bytes, "
                f"expected {4 * layer.size}")
        layers.append(layer)
        tensors.append(np.frombuffer(raw, dtype="<f4").astype(np.float32))
    return NetworkSpec(doc.get("name", manifest_path.stem), layers, tensors)


def save_network(net: NetworkSpec, directory) -> Path:
    """Write `net` as manifest.json plus one .bin per layer; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (layer, t) in enumerate(zip(net.layers, net.tensors)):
        fname = f"layer{i}_{layer.kind.value.lower()}.bin"
        (directory / fname).write_bytes(t.astype("<f4").tobytes())
        entries.append({"kind": layer.kind.value, "shape": list(layer.shape), "file": fname})
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"name": net.name, "layers": entries}, indent=2) + "\n")
    return manifest


def synthesize_network(layers, distribution=("gaussian", 0.0, 1.0), seed=0, name="synthetic"):
    """Fill `layers` with random weights drawn from `distribution`.

    `distribution` is ``("gaussian", mean, std)`` or ``("uniform", lo, hi)``.
    """
    kind, a, b = distribution
    if kind == "gaussian":
        if not b > 0:
            raise ValueError(f"gaussian std must be > 0, got {b}")
    elif kind == "uniform":
        if not a < b:
            raise ValueError(f"uniform needs lo < hi, got ({a}, {b})")
    else:
        raise ValueError(f"unknown distribution {kind!r}")
    rng = np.random.default_rng(seed)
    tensors = []
    for layer in layers:
        if kind == "gaussian":
            t = rng.normal(a, b, layer.size)
        else:
            t = rng.uniform(a, b, layer.size)
        tensors.append(t.astype(np.float32))
    return NetworkSpec(name, list(layers), tensors)


@dataclass(frozen=True)
class QuantScheme:
    format: Format
    scales: tuple[float, ...] = ()
    zero_points: tuple[int, ...] = ()

    @property
    def bits_per_weight(self) -> int:
        return self.format.bits


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def fit_quantization(net: NetworkSpec, fmt) -> QuantScheme:
    fmt = Format(fmt)
    for i, t in enumerate(net.tensors):
        if t.size == 0:
            raise ValueError(f"layer {i} is empty")
    if fmt is Format.FLOAT32:
        return QuantScheme(fmt)
    scales, zps = [], []
    for t in net.tensors:
        t = t.astype(np.float64)
        if fmt is Format.INT8_SYM:
            m = float(np.max(np.abs(t)))
            scales.append(m / 127 if m > 0 else 1.0)
        else:
            lo, hi = float(t.min()), float(t.max())
            scale = (hi - lo) / 255 if hi > lo else 1.0
            scales.append(scale)
            zps.append(int(np.clip(round_half_away(-lo / scale), 0, 255)))
    return QuantScheme(fmt, tuple(scales), tuple(zps))


def quantize_layer(t, scheme: QuantScheme, index: int) -> np.ndarray:
    """Bit-words of one layer: uint32 for float32, uint8 for the int8 formats."""
    t = np.asarray(t, dtype=np.float32)
    if scheme.format is Format.FLOAT32:
        return t.view(np.uint32).copy()
    scale = scheme.scales[index]
    q = round_half_away(t.astype(np.float64) / scale)
    if scheme.format is Format.INT8_SYM:
        q = np.clip(q, -127, 127).astype(np.int8)
        return q.view(np.uint8)
    q = np.clip(q + scheme.zero_points[index], 0, 255)
    return q.astype(np.uint8)


def quantize_to_words(net: NetworkSpec, scheme: QuantScheme) -> list[np.ndarray]:
    if scheme.format is not Format.FLOAT32 and len(scheme.scales) != len(net.layers):
        raise ValueError("quantization scheme was fitted on a different network")
    return [quantize_layer(t, scheme, i) for i, t in enumerate(net.tensors)]


def dequantize_layer(words, scheme: QuantScheme, index: int) -> np.ndarray:
    words = np.asarray(words)
    if scheme.format is Format.FLOAT32:
        return words.astype(np.uint32).view(np.float32).astype(np.float64)
    scale = scheme.scales[index]
    if scheme.format is Format.INT8_SYM:
        return words.astype(np.uint8).view(np.int8).astype(np.float64) * scale
    return (words.astype(np.float64) - scheme.zero_points[index]) * scale
