"""Correspondence attention: row-stochastic maps, residual identity at init,
channel gate range, and full-module gradients."""

import numpy as np
import pytest

from polyptych.attention import (
    CAParams,
    ca_forward,
    ca_init,
    channel_weights,
    spatial_attention,
)
from polyptych.autodiff import Parameter, Tensor, check_gradients, gradient_of, softmax
from polyptych.errors import DimensionError
from oracles import softmax_oracle


def _instance(seed, c=4, n=2, h=3, w=3, c_prime=2, dtype=np.float32):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal((1, c, h, w)).astype(dtype))
    refs = [rng.random((3, h, w)).astype(dtype) for _ in range(n)]
    params = ca_init(c, n, c_prime=c_prime, seed=seed + 1, dtype=dtype)
    return x, refs, params


class TestSpatialAttention:
    def test_rows_sum_to_one(self):
        for seed in range(10):
            x, refs, params = _instance(seed)
            _, maps = spatial_attention(x, refs, params, return_maps=True)
            for m in maps:
                arr = m.numpy()
                assert np.all(arr >= 0)
                np.testing.assert_allclose(arr.sum(axis=1), 1.0, atol=1e-6)

    def test_constant_value_plane_passes_through(self):
        # With conv_v forced to produce a constant plane c, every convex
        # combination of the value vectors is c itself.
        x, refs, params = _instance(0, c=2, n=1, c_prime=1)
        params.conv_v.data[:] = 0.0
        const_ref = [np.full((3, 3, 3), 0.5, dtype=np.float32)]
        params.conv_v.data[0, 0, 0, 0] = 2.0  # v = 2 * ref channel 0 = 1.0
        mid = spatial_attention(x, const_ref, params).numpy()
        np.testing.assert_allclose(mid, 1.0, atol=1e-6)

    def test_two_ref_loop_oracle(self):
        # N=2, H=W=2, C=C'=1: transliterate the equations with plain numpy.
        rng = np.random.default_rng(7)
        x = rng.standard_normal((1, 1, 2, 2)).astype(np.float64)
        refs = [rng.random((3, 2, 2)).astype(np.float64) for _ in range(2)]
        params = ca_init(1, 2, c_prime=1, seed=3, dtype=np.float64)
        got = spatial_attention(Tensor(x), refs, params).numpy()

        wq = params.conv_q.data[0, :, 0, 0]
        wk = params.conv_k.data[0, :, 0, 0]
        wv = params.conv_v.data[0, :, 0, 0]
        q = np.tensordot(wq, x[0], axes=(0, 0)).reshape(-1)  # [4]
        want_blocks = []
        for ref in refs:
            k = np.tensordot(wk, ref, axes=(0, 0)).reshape(-1)
            v = np.tensordot(wv, ref, axes=(0, 0)).reshape(-1)
            attn = softmax_oracle(np.outer(q, k), axis=1)
            mid = attn @ v  # [4]
            want_blocks.append(mid.reshape(1, 1, 2, 2))
        want = np.concatenate(want_blocks, axis=1)
        np.testing.assert_allclose(got, want, atol=1e-6)

    def test_ref_permutation_permutes_channel_blocks(self):
        x, refs, params = _instance(5, n=3, c_prime=2)
        fwd = spatial_attention(x, refs, params).numpy()
        perm = [2, 0, 1]
        fwd_perm = spatial_attention(x, [refs[i] for i in perm], params).numpy()
        blocks = fwd.reshape(1, 3, 2, 3, 3)
        blocks_perm = fwd_perm.reshape(1, 3, 2, 3, 3)
        np.testing.assert_array_equal(blocks[:, perm], blocks_perm)

    def test_wrong_ref_size_rejected(self):
        x, refs, params = _instance(1)
        bad = [np.zeros((3, 5, 5), dtype=np.float32)]
        with pytest.raises(DimensionError):
            spatial_attention(x, bad, params)

    def test_empty_refs_rejected(self):
        x, _, params = _instance(1)
        with pytest.raises(DimensionError):
            spatial_attention(x, [], params)


class TestChannelWeights:
    def test_open_interval(self):
        for seed in range(5):
            x, refs, params = _instance(seed)
            mid = spatial_attention(x, refs, params)
            gate = channel_weights(mid, params).numpy()
            assert gate.shape == (1, mid.shape[1], 1, 1)
            assert np.all(gate > 0) and np.all(gate < 1)

    def test_zero_matrices_give_half(self):
        x, refs, params = _instance(2)
        params.w1.data[:] = 0.0
        params.w2.data[:] = 0.0
        mid = spatial_attention(x, refs, params)
        gate = channel_weights(mid, params).numpy()
        np.testing.assert_allclose(gate, 0.5, atol=1e-7)

    def test_matches_matvec_oracle(self):
        x, refs, params = _instance(3, dtype=np.float64)
        mid = spatial_attention(x, refs, params)
        got = channel_weights(mid, params).numpy().reshape(-1)

        z = mid.numpy().mean(axis=(2, 3)).reshape(-1)  # global average pool
        h = params.w1.data @ z
        h = 0.5 * h * (1 + np.tanh(0.7978845608028654 * (h + 0.044715 * h ** 3)))
        logits = params.w2.data @ h
        want = 1.0 / (1.0 + np.exp(-logits))
        np.testing.assert_allclose(got, want, atol=1e-6)


class TestCAForward:
    def test_identity_at_init_bitwise(self):
        for seed in range(10):
            x, refs, params = _instance(seed)
            out = ca_forward(x, refs, params).numpy()
            np.testing.assert_array_equal(out, x.numpy())

    def test_zero_fusion_identity(self):
        x, refs, params = _instance(4)
        params.lam.data[()] = 1.0
        params.conv_fuse.data[:] = 0.0
        out = ca_forward(x, refs, params).numpy()
        np.testing.assert_allclose(out, x.numpy(), atol=1e-7)

    def test_open_gate_changes_output(self):
        x, refs, params = _instance(6)
        params.lam.data[()] = 0.5
        out = ca_forward(x, refs, params).numpy()
        assert not np.array_equal(out, x.numpy())

    def test_shape_preserved(self):
        for c, n, h, w in [(4, 1, 2, 2), (8, 3, 4, 6), (2, 2, 3, 5)]:
            x, refs, params = _instance(c + n, c=c, n=n, h=h, w=w)
            assert ca_forward(x, refs, params).shape == x.shape

    def test_full_module_gradcheck(self):
        rng = np.random.default_rng(12)
        x64 = Tensor(rng.standard_normal((1, 2, 2, 2)), dtype=np.float64)
        refs = [rng.random((3, 2, 2)) for _ in range(2)]
        params = ca_init(2, 2, c_prime=2, seed=13, dtype=np.float64)
        params.lam.data[()] = 0.7  # open the gate so all paths carry gradient

        def loss():
            return (ca_forward(x64, refs, params) ** 2.0).sum()

        check_gradients(loss, [p.tensor for p in params.parameters()],
                        step=1e-3, tol=1e-4)

    def test_lambda_receives_gradient_at_init(self):
        x, refs, params = _instance(8, dtype=np.float64)
        loss = (ca_forward(x, refs, params) ** 2.0).sum()
        grads = gradient_of(loss, [params.lam])
        assert np.any(grads[0] != 0)

    def test_closed_gate_blocks_internal_gradients(self):
        # lambda = 0 zeroes the whole attention branch: documented behavior.
        x, refs, params = _instance(9, dtype=np.float64)
        loss = (ca_forward(x, refs, params) ** 2.0).sum()
        grads = gradient_of(loss, [params.conv_q, params.conv_fuse])
        for g in grads:
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_forward_is_pure(self):
        x, refs, params = _instance(10)
        params.lam.data[()] = 0.3
        a = ca_forward(x, refs, params).numpy()
        b = ca_forward(x, refs, params).numpy()
        np.testing.assert_array_equal(a, b)
