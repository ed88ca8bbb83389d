"""Generator, enhancer, and discriminator networks plus model persistence.

Desk-scale encoder-decoder layout:

* GeneratorStage1: three stride-2 encoder convs (4 -> w -> 2w -> 4w), two
  residual blocks at 4w, three nearest-upsample+conv decoder blocks back to
  a w-channel feature map, and a sigmoid RGB head. Default width w = 32.
* Enhancer: one 2x nearest upsample followed by three convs (w -> w -> w/2
  -> RGB, sigmoid head), doubling spatial resolution.
* PatchDiscriminator: four stride-2 convs (3 -> w -> 2w -> 4w -> 1) and no
  pooling, so a 3 x h x w image yields a ceil(h/16) x ceil(w/16) logit grid
  (each stride-2 conv with pad 1 maps n -> ceil(n/2)).

Upsampling is nearest-neighbor followed by a conv; transposed convolutions
are avoided because their uneven kernel overlap produces checkerboard
artifacts. All forwards are pure; parameters are read-only at inference.

Bundles serialize to a single file: magic "NPLY", a u16 version, a u32
little-endian JSON-manifest length, the JSON manifest (config plus parameter
names and shapes), then each parameter's raw little-endian float32 values in
manifest order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .attention import CAParams, ca_forward, ca_init
from .autodiff import Parameter, Tensor, conv2d, gelu, sigmoid, upsample_nearest
from .errors import BundleParseError, DimensionError

_MAGIC = b"NPLY"
_VERSION = 1


class Conv:
    """3x3 (or 1x1) conv layer owning weight and zero-initialized bias."""

    def __init__(self, name, out_ch, in_ch, rng, dtype, kernel=3, stride=1, pad=1):
        scale = np.sqrt(2.0 / (in_ch * kernel * kernel))
        w = rng.standard_normal((out_ch, in_ch, kernel, kernel)) * scale
        self.weight = Parameter(f"{name}.w", w.astype(dtype))
        self.bias = Parameter(f"{name}.b", np.zeros(out_ch, dtype=dtype))
        self.stride = stride
        self.pad = pad

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, bias=self.bias, stride=self.stride, pad=self.pad)

    def parameters(self) -> list:
        return [self.weight, self.bias]


def _collect(layers) -> list:
    params = []
    for layer in layers:
        params.extend(layer.parameters())
    return params


class GeneratorStage1:
    """Sketch (4ch) to preliminary RGB plus a feature map for attention."""

    def __init__(self, rng, width: int = 32, dtype=np.float32, prefix: str = "g1"):
        self.width = width
        w = width
        self.enc1 = Conv(f"{prefix}.enc1", w, 4, rng, dtype, stride=2)
        self.enc2 = Conv(f"{prefix}.enc2", 2 * w, w, rng, dtype, stride=2)
        self.enc3 = Conv(f"{prefix}.enc3", 4 * w, 2 * w, rng, dtype, stride=2)
        self.res1a = Conv(f"{prefix}.res1a", 4 * w, 4 * w, rng, dtype)
        self.res1b = Conv(f"{prefix}.res1b", 4 * w, 4 * w, rng, dtype)
        self.res2a = Conv(f"{prefix}.res2a", 4 * w, 4 * w, rng, dtype)
        self.res2b = Conv(f"{prefix}.res2b", 4 * w, 4 * w, rng, dtype)
        self.dec1 = Conv(f"{prefix}.dec1", 2 * w, 4 * w, rng, dtype)
        self.dec2 = Conv(f"{prefix}.dec2", w, 2 * w, rng, dtype)
        self.dec3 = Conv(f"{prefix}.dec3", w, w, rng, dtype)
        self.head = Conv(f"{prefix}.head", 3, w, rng, dtype)
        self._layers = [
            self.enc1, self.enc2, self.enc3,
            self.res1a, self.res1b, self.res2a, self.res2b,
            self.dec1, self.dec2, self.dec3, self.head,
        ]

    def forward(self, x) -> tuple:
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.ndim != 4 or x.shape[1] != 4:
            raise DimensionError(f"generator expects [1,4,h,w], got {x.shape}")
        h, w = x.shape[2], x.shape[3]
        if h % 8 or w % 8:
            raise DimensionError(f"generator input dims {h}x{w} must be divisible by 8")
        y = gelu(self.enc1(x))
        y = gelu(self.enc2(y))
        y = gelu(self.enc3(y))
        y = y + self.res1b(gelu(self.res1a(y)))
        y = y + self.res2b(gelu(self.res2a(y)))
        y = gelu(self.dec1(upsample_nearest(y)))
        y = gelu(self.dec2(upsample_nearest(y)))
        features = gelu(self.dec3(upsample_nearest(y)))
        rgb = sigmoid(self.head(features))
        return rgb, features

    def parameters(self) -> list:
        return _collect(self._layers)


class Enhancer:
    """Doubles resolution: feature map (width ch) to RGB at 2h x 2w."""

    def __init__(self, rng, width: int = 32, dtype=np.float32, prefix: str = "g2"):
        self.width = width
        self.conv1 = Conv(f"{prefix}.conv1", width, width, rng, dtype)
        self.conv2 = Conv(f"{prefix}.conv2", max(4, width // 2), width, rng, dtype)
        self.head = Conv(f"{prefix}.head", 3, max(4, width // 2), rng, dtype)
        self._layers = [self.conv1, self.conv2, self.head]

    def forward(self, x) -> Tensor:
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.ndim != 4 or x.shape[1] != self.width:
            raise DimensionError(
                f"enhancer expects [1,{self.width},h,w], got {x.shape}"
            )
        y = gelu(self.conv1(upsample_nearest(x)))
        y = gelu(self.conv2(y))
        return sigmoid(self.head(y))

    def parameters(self) -> list:
        return _collect(self._layers)


class PatchDiscriminator:
    """RGB image to a grid of real/fake logits, one per receptive patch."""

    def __init__(self, rng, width: int = 32, dtype=np.float32, prefix: str = "d"):
        w = width
        self.conv1 = Conv(f"{prefix}.conv1", w, 3, rng, dtype, stride=2)
        self.conv2 = Conv(f"{prefix}.conv2", 2 * w, w, rng, dtype, stride=2)
        self.conv3 = Conv(f"{prefix}.conv3", 4 * w, 2 * w, rng, dtype, stride=2)
        self.conv4 = Conv(f"{prefix}.conv4", 1, 4 * w, rng, dtype, stride=2)
        self._layers = [self.conv1, self.conv2, self.conv3, self.conv4]

    def forward(self, x) -> Tensor:
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.ndim != 4 or x.shape[1] != 3:
            raise DimensionError(f"discriminator expects [1,3,h,w], got {x.shape}")
        if x.shape[2] < 16 or x.shape[3] < 16:
            raise DimensionError(
                f"discriminator needs at least 16x16 input, got {x.shape[2]}x{x.shape[3]}"
            )
        y = gelu(self.conv1(x))
        y = gelu(self.conv2(y))
        y = gelu(self.conv3(y))
        return self.conv4(y)

    def parameters(self) -> list:
        return _collect(self._layers)


@dataclass
class ModelBundle:
    """Every trainable piece of the two-stage pipeline plus its config."""

    config: dict
    g1: GeneratorStage1
    ca: CAParams
    enhancer: Enhancer
    d1: PatchDiscriminator
    d2: PatchDiscriminator

    @staticmethod
    def init(
        n_refs: int,
        seed: int = 0,
        width: int = 32,
        c_prime: int = 16,
        reduction: int = 4,
        dtype=np.float32,
    ) -> "ModelBundle":
        config = {
            "n_refs": n_refs,
            "seed": seed,
            "width": width,
            "c_prime": c_prime,
            "reduction": reduction,
        }
        rng = np.random.default_rng(seed)
        return ModelBundle(
            config=config,
            g1=GeneratorStage1(rng, width=width, dtype=dtype),
            ca=ca_init(
                width, n_refs, c_prime=c_prime, reduction=reduction,
                seed=seed + 1, dtype=dtype,
            ),
            enhancer=Enhancer(rng, width=width, dtype=dtype),
            d1=PatchDiscriminator(rng, width=width, dtype=dtype, prefix="d1"),
            d2=PatchDiscriminator(rng, width=width, dtype=dtype, prefix="d2"),
        )

    def generator_parameters(self) -> list:
        return self.g1.parameters() + self.ca.parameters() + self.enhancer.parameters()

    def discriminator_parameters(self) -> list:
        return self.d1.parameters() + self.d2.parameters()

    def parameters(self) -> list:
        return self.generator_parameters() + self.discriminator_parameters()

    def run(self, sketch, refs) -> tuple:
        """Full generation: (rgb_lo [1,3,h,w], rgb_hi [1,3,2h,2w])."""
        rgb_lo, features = self.g1.forward(sketch)
        attended = ca_forward(features, refs, self.ca)
        return rgb_lo, self.enhancer.forward(attended)


def save_bundle(bundle: ModelBundle, path) -> None:
    params = bundle.parameters()
    manifest = {
        "config": bundle.config,
        "params": [{"name": p.name, "shape": list(p.data.shape)} for p in params],
    }
    blob = json.dumps(manifest, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<H", _VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for p in params:
            fh.write(p.data.astype("<f4", copy=False).tobytes())


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise BundleParseError(f"bad magic {raw[:4]!r}, expected {_MAGIC!r}", offset=0)
    if len(raw) < 10:
        raise BundleParseError("truncated header", offset=len(raw))
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != _VERSION:
        raise BundleParseError(
            f"unsupported_version: got {version}, expected {_VERSION}", offset=4)
    (mlen,) = struct.unpack_from("<I", raw, 6)
    if len(raw) < 10 + mlen:
        raise BundleParseError("manifest extends past end of file", offset=10)
    try:
        manifest = json.loads(raw[10 : 10 + mlen].decode("utf-8"))
        config = manifest["config"]
        entries = manifest["params"]
    except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError) as exc:
        raise BundleParseError(f"manifest is not valid: {exc}", offset=10) from exc
    bundle = ModelBundle.init(
        n_refs=config["n_refs"],
        seed=config["seed"],
        width=config["width"],
        c_prime=config["c_prime"],
        reduction=config["reduction"],
    )
    params = {p.name: p for p in bundle.parameters()}
    pos = 10 + mlen
    for entry in entries:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in params:
            raise BundleParseError(f"manifest names unknown parameter {name!r}", offset=pos)
        param = params[name]
        if param.data.shape != shape:
            raise BundleParseError(
                f"parameter {name!r} has shape {shape} in file, "
                f"expected {param.data.shape}",
                offset=pos,
            )
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        need = count * 4
        if len(raw) < pos + need:
            raise BundleParseError(f"data for parameter {name!r} truncated", offset=pos)
        values = np.frombuffer(raw, dtype="<f4", count=count, offset=pos)
        param.data = values.reshape(shape).copy()
        pos += need
    return bundle
