"""Multi-reference correspondence attention with channel gating.

Per reference image: a query map from the input feature block attends over
the reference's key positions (row-stochastic softmax over H*W), producing a
per-reference summary whose channels are concatenated. A squeeze-excite
style bottleneck gates the concatenated channels, a 1x1 convolution fuses
them back to the input width, and a learnable scalar lambda mixes the result
into the residual path. lambda starts at 0, so freshly initialized modules
are exactly the identity on X.

Forward passes are pure given the parameters; sharing read-only params
across threads is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tensor, concat, conv2d, gelu, global_avg_pool, sigmoid, softmax
from .errors import DimensionError


@dataclass
class CAParams:
    conv_q: Parameter  # [C', C, 1, 1]
    conv_k: Parameter  # [C', Cr, 1, 1]
    conv_v: Parameter  # [C', Cr, 1, 1]
    w1: Parameter  # [NC'/r, NC']
    w2: Parameter  # [NC', NC'/r]
    conv_fuse: Parameter  # [C, NC', 1, 1]
    lam: Parameter  # scalar, init 0

    @property
    def n_refs(self) -> int:
        return self.conv_fuse.data.shape[1] // self.conv_q.data.shape[0]

    def parameters(self) -> list:
        return [self.conv_q, self.conv_k, self.conv_v, self.w1, self.w2, self.conv_fuse, self.lam]


def ca_init(
    channels: int,
    n_refs: int,
    c_prime: int = 16,
    ref_channels: int = 3,
    reduction: int = 4,
    seed: int = 0,
    dtype=np.float32,
    prefix: str = "ca",
) -> CAParams:
    """Seeded He-style init; the residual gate lambda starts closed (0)."""
    rng = np.random.default_rng(seed)
    nc = n_refs * c_prime
    hidden = max(1, nc // reduction)

    def conv_w(out_ch, in_ch):
        scale = np.sqrt(2.0 / in_ch)
        return (rng.standard_normal((out_ch, in_ch, 1, 1)) * scale).astype(dtype)

    def dense_w(out_dim, in_dim):
        return (rng.standard_normal((out_dim, in_dim)) * np.sqrt(2.0 / in_dim)).astype(dtype)

    return CAParams(
        conv_q=Parameter(f"{prefix}.conv_q", conv_w(c_prime, channels)),
        conv_k=Parameter(f"{prefix}.conv_k", conv_w(c_prime, ref_channels)),
        conv_v=Parameter(f"{prefix}.conv_v", conv_w(c_prime, ref_channels)),
        w1=Parameter(f"{prefix}.w1", dense_w(hidden, nc)),
        w2=Parameter(f"{prefix}.w2", dense_w(nc, hidden)),
        conv_fuse=Parameter(f"{prefix}.conv_fuse", conv_w(channels, nc)),
        lam=Parameter(f"{prefix}.lambda", np.zeros((), dtype=dtype)),
    )


def _as_ref_tensor(ref, h: int, w: int, dtype) -> Tensor:
    t = ref if isinstance(ref, Tensor) else Tensor(np.asarray(ref), dtype=dtype)
    if t.ndim == 3:
        t = t.reshape((1,) + t.shape)
    if t.shape[2] != h or t.shape[3] != w:
        raise DimensionError(
            f"reference spatial size {t.shape[2]}x{t.shape[3]} must match input {h}x{w}"
        )
    return t


def spatial_attention(x: Tensor, refs, params: CAParams, return_maps: bool = False):
    """Concatenated per-reference attention summaries, [1, N*C', H, W].

    With ``return_maps`` the per-reference row-stochastic attention matrices
    ([HW, HW] each) are returned alongside, for inspection and testing.
    """
    ref_list = refs.refs if hasattr(refs, "refs") else list(refs)
    if not ref_list:
        raise DimensionError("need at least one reference")
    _, _, h, w = x.shape
    hw = h * w
    c_prime = params.conv_q.data.shape[0]
    q = conv2d(x, params.conv_q).reshape((c_prime, hw))
    mids = []
    maps = []
    for ref in ref_list:
        r = _as_ref_tensor(ref, h, w, x.dtype)
        k = conv2d(r, params.conv_k).reshape((c_prime, hw))
        v = conv2d(r, params.conv_v).reshape((c_prime, hw))
        attn = softmax(q.T @ k, axis=1)  # [HW query rows, HW key cols]
        maps.append(attn)
        mid = (attn @ v.T).T  # [C', HW]
        mids.append(mid.reshape((1, c_prime, h, w)))
    out = mids[0] if len(mids) == 1 else concat(mids, axis=1)
    return (out, maps) if return_maps else out


def channel_weights(mid: Tensor, params: CAParams) -> Tensor:
    """Squeeze-excite gate over the concatenated channels, each in (0,1)."""
    nc = mid.shape[1]
    z = global_avg_pool(mid).reshape((nc, 1))
    gate = sigmoid(params.w2 @ gelu(params.w1 @ z))
    return gate.reshape((1, nc, 1, 1))


def ca_forward(x: Tensor, refs, params: CAParams) -> Tensor:
    mid = spatial_attention(x, refs, params)
    gate = channel_weights(mid, params)
    attn = conv2d(gate * mid, params.conv_fuse)
    return x + params.lam * attn
