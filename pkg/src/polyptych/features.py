"""Fixed convolutional feature extractor with two tap points.

Stands in for a pre-trained perceptual network: three bias-free stride-2
convolution stages with GeLU, tapping 32 channels at 1/4 resolution (Tap3)
and 64 channels at 1/8 resolution (Tap4). Stage 1 mixes fixed Sobel-style
edge filters with seeded Gaussian filters; later stages are fully seeded.
The seed constant below is part of the on-disk format contract: banks store
it so embeddings can be re-derived.

Because the convolutions carry no bias and GeLU(0) = 0, a zero image maps
to zero feature maps at both taps.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, conv2d, gelu, global_avg_pool
from .errors import DimensionError

EXTRACTOR_SEED = 20240901

TAP3 = "tap3"
TAP4 = "tap4"

TAP_CHANNELS = {TAP3: 32, TAP4: 64}
TAP_STRIDE = {TAP3: 4, TAP4: 8}

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64) / 4.0
_SOBEL_Y = _SOBEL_X.T.copy()


def _stage_weights(rng: np.random.Generator, out_ch: int, in_ch: int) -> np.ndarray:
    scale = np.sqrt(2.0 / (in_ch * 9))
    return rng.standard_normal((out_ch, in_ch, 3, 3)) * scale


class FeatureExtractor:
    """Deterministic multi-scale embedder; read-only after construction."""

    def __init__(self, seed: int = EXTRACTOR_SEED):
        self.seed = seed
        rng = np.random.default_rng(seed)
        w1 = _stage_weights(rng, 16, 3)
        # first six filters: per-channel horizontal/vertical edge detectors
        for ch in range(3):
            w1[2 * ch] = 0.0
            w1[2 * ch, ch] = _SOBEL_X
            w1[2 * ch + 1] = 0.0
            w1[2 * ch + 1, ch] = _SOBEL_Y
        w2 = _stage_weights(rng, 32, 16)
        w3 = _stage_weights(rng, 64, 32)
        self._weights64 = [w1, w2, w3]
        self._weights32 = [w.astype(np.float32) for w in self._weights64]

    def _stages(self, dtype):
        if dtype == np.float64:
            return self._weights64
        return self._weights32

    def embed(self, image, tap: str) -> Tensor:
        """Feature map of a [1,3,H,W] image at the requested tap.

        H and W must be divisible by 8; pad the image first if they are not.
        Accepts a Tensor (gradients flow through) or a plain array.
        """
        if tap not in TAP_CHANNELS:
            raise ValueError(f"unknown tap {tap!r}; expected {TAP3!r} or {TAP4!r}")
        x = image if isinstance(image, Tensor) else Tensor(image)
        if x.ndim != 4 or x.shape[0] != 1 or x.shape[1] != 3:
            raise DimensionError(f"embed expects a [1,3,H,W] image, got {x.shape}")
        h, w = x.shape[2], x.shape[3]
        if h % 8 or w % 8:
            raise DimensionError(
                f"image dims {h}x{w} not divisible by 8; pad to a multiple of 8 first"
            )
        w1, w2, w3 = self._stages(x.dtype)
        y = gelu(conv2d(x, Tensor(w1), stride=2, pad=1))
        y = gelu(conv2d(y, Tensor(w2), stride=2, pad=1))
        if tap == TAP3:
            return y
        return gelu(conv2d(y, Tensor(w3), stride=2, pad=1))

    def pooled(self, image, tap: str) -> np.ndarray:
        """Channel-mean vector of the tap's feature map."""
        fm = self.embed(image, tap)
        return global_avg_pool(fm).data.reshape(-1)

    def embedding_vector(self, image) -> np.ndarray:
        """Pooled Tap3 and Tap4 concatenated into one 96-dim descriptor."""
        return np.concatenate([self.pooled(image, TAP3), self.pooled(image, TAP4)])
