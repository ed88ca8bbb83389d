"""Training objectives: adversarial, contextual, L1, and their weighted sum.

The adversarial objective is the standard non-saturating form, computed as
binary cross-entropy on raw logit grids: the discriminator pushes real
logits up and fake logits down; the generator maximizes the discriminator's
belief that fakes are real. The contextual term measures how well each
feature of the real set is matched by some feature of the generated set,
without requiring spatial alignment; its affinity bandwidth is ``CX_H`` and
the match-normalization epsilon is ``CX_EPS``. All functions build autodiff
graphs, so they are differentiable end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

from .autodiff import Tensor, as_tensor, bce_with_logits
from .errors import DimensionError

CX_EPS = 1e-5
CX_H = 0.5

# Empirically dominant L1 anchoring with a light adversarial term.
DEFAULT_MU1 = 0.1
DEFAULT_MU2 = 1.0
DEFAULT_MU3 = 10.0


@dataclass
class LossWeights:
    mu1: float = DEFAULT_MU1  # adversarial
    mu2: float = DEFAULT_MU2  # contextual
    mu3: float = DEFAULT_MU3  # L1

    def __post_init__(self):
        if min(self.mu1, self.mu2, self.mu3) < 0:
            raise ValueError("loss weights must be non-negative")


def gan_loss(real_logits, fake_logits) -> tuple:
    """(discriminator loss, generator loss) from two logit grids.

    loss_d = BCE(real, 1) + BCE(fake, 0); loss_g = BCE(fake, 1), each
    averaged over the grid. The generator term treats the discriminator as
    fixed: callers must detach or re-run D as appropriate.
    """
    real_logits, fake_logits = as_tensor(real_logits), as_tensor(fake_logits)
    if real_logits.shape != fake_logits.shape:
        raise DimensionError(
            f"logit grids must match: {real_logits.shape} vs {fake_logits.shape}"
        )
    loss_d = bce_with_logits(real_logits, 1.0).mean() + bce_with_logits(fake_logits, 0.0).mean()
    loss_g = bce_with_logits(fake_logits, 1.0).mean()
    return loss_d, loss_g


def _as_location_matrix(fm: Tensor) -> Tensor:
    """[1,C,H,W] or [C,N] feature map -> [N,C] rows of per-location vectors."""
    if fm.ndim == 4:
        if fm.shape[0] != 1:
            raise DimensionError(f"expected batch size 1, got {fm.shape}")
        c = fm.shape[1]
        fm = fm.reshape((c, fm.shape[2] * fm.shape[3]))
    if fm.ndim != 2:
        raise DimensionError(f"feature map must be [1,C,H,W] or [C,N], got {fm.shape}")
    if fm.shape[0] == 0 or fm.shape[1] == 0:
        raise DimensionError("empty feature map")
    return fm.T


def contextual_loss(feat_gen, feat_real) -> Tensor:
    """Negative log of the mean best-match contextual similarity.

    Both sets are centered by the real set's mean. For generated rows i and
    real columns j: d_ij = cosine distance, normalized by each row's best
    match, turned into affinities w_ij = exp((1 - d_norm)/CX_H), and
    row-normalized. The score averages, over real locations, the best
    normalized affinity any generated location offers; it lies in (0, 1], so
    the loss is non-negative and approaches 0 for identical sets. Spatial
    sizes of the two maps may differ.
    """
    gen = _as_location_matrix(as_tensor(feat_gen))
    real = _as_location_matrix(as_tensor(feat_real))
    if gen.shape[1] != real.shape[1]:
        raise DimensionError(
            f"channel mismatch: {gen.shape[1]} vs {real.shape[1]}"
        )
    mu = real.mean(axis=0, keepdims=True)
    gen_c, real_c = gen - mu, real - mu
    # 1e-12 guards the all-zero vector; negligible against real feature norms
    gen_n = gen_c / ((gen_c**2).sum(axis=1, keepdims=True).sqrt() + 1e-12)
    real_n = real_c / ((real_c**2).sum(axis=1, keepdims=True).sqrt() + 1e-12)
    dist = 1.0 - gen_n @ real_n.T  # [n_gen, n_real]
    dist_norm = dist / (dist.min(axis=1, keepdims=True) + CX_EPS)
    w = ((1.0 - dist_norm) / CX_H).exp()
    cx_ij = w / w.sum(axis=1, keepdims=True)
    score = cx_ij.max(axis=0).mean()
    return -score.log()


def l1_loss(a, b) -> Tensor:
    """Mean absolute difference."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"l1_loss shape mismatch: {a.shape} vs {b.shape}")
    return (a - b).abs().mean()


def full_objective(gan, cx, l1, weights: LossWeights) -> Tensor:
    """weights.mu1 * gan + weights.mu2 * cx + weights.mu3 * l1."""
    return weights.mu1 * as_tensor(gan) + weights.mu2 * as_tensor(cx) + weights.mu3 * as_tensor(l1)
