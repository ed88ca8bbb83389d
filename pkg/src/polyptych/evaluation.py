"""Output quality metrics: pixel accuracy and a Fréchet embedding distance.

Pixel accuracy calls a pixel correct when its largest per-channel deviation
stays within a tolerance (default 16/255, about one visible quantization
band). The distribution metric is the Fréchet distance between Gaussian
fits of pooled deep embeddings (the fixed extractor's deepest tap, 64-dim),
computed as ||mu_A - mu_B||^2 + tr(S_A + S_B - 2 (S_A S_B)^(1/2)). The
matrix square root comes from an eigen-decomposition of the symmetrized
product S_A^(1/2) S_B S_A^(1/2); tiny negative eigenvalues from floating
point are clamped to zero, so results can sit at -1e-8 at worst.

Both metrics are pure functions; batches may be processed in parallel as
long as the reduction order over images is kept fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .features import TAP4, FeatureExtractor

PIX_ACC_TOL = 16.0 / 255.0
EIG_CLAMP = 1e-10


@dataclass
class MetricReport:
    pix_acc: float | None
    frechet: float | None
    sample_counts: dict = field(default_factory=dict)
    # external pre-trained scorers are out of scope; reported as absent
    inception_score: None = None
    lpips: None = None

    def to_dict(self) -> dict:
        return {
            "pix_acc": self.pix_acc,
            "frechet": self.frechet,
            "sample_counts": self.sample_counts,
            "inception_score": self.inception_score,
            "lpips": self.lpips,
        }


def pix_acc(a: np.ndarray, b: np.ndarray, tol: float = PIX_ACC_TOL) -> float:
    """Fraction of pixel positions with max channel deviation <= tol."""
    if a.shape != b.shape:
        raise DimensionError(f"pix_acc shape mismatch: {a.shape} vs {b.shape}")
    dev = np.abs(a.astype(np.float64) - b.astype(np.float64)).max(axis=0)
    return float((dev <= tol).mean())


def _sqrt_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root with small-negative clamping."""
    eigvals, eigvecs = np.linalg.eigh((mat + mat.T) / 2.0)
    eigvals = np.where(eigvals < EIG_CLAMP, np.maximum(eigvals, 0.0), eigvals)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def frechet_from_embeddings(emb_a: np.ndarray, emb_b: np.ndarray) -> float:
    """Fréchet distance between Gaussian fits of two embedding sets [n,d]."""
    a = np.asarray(emb_a, dtype=np.float64)
    b = np.asarray(emb_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DimensionError(
            f"embedding sets must be [n,d] with equal d: {a.shape} vs {b.shape}"
        )
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise DimensionError("need at least 2 samples per set for a covariance")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    ca = (a - mu_a).T @ (a - mu_a) / (a.shape[0] - 1)
    cb = (b - mu_b).T @ (b - mu_b) / (b.shape[0] - 1)
    root_a = _sqrt_psd(ca)
    inner = root_a @ cb @ root_a
    eigvals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    eigvals = np.where(eigvals < EIG_CLAMP, np.maximum(eigvals, 0.0), eigvals)
    trace_sqrt = np.sqrt(eigvals).sum()
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(ca) + np.trace(cb) - 2.0 * trace_sqrt)


def embed_set(images, extractor: FeatureExtractor) -> np.ndarray:
    """Pooled deepest-tap embedding for each [3,H,W] image; [n,64]."""
    return np.stack([extractor.pooled(img[None], TAP4) for img in images])


def frechet_feature_distance(set_a, set_b, extractor: FeatureExtractor) -> float:
    """Fréchet distance between two image sets in pooled embedding space."""
    emb_a = embed_set(set_a, extractor)
    emb_b = embed_set(set_b, extractor)
    d = emb_a.shape[1]
    if emb_a.shape[0] < d + 1 or emb_b.shape[0] < d + 1:
        raise DimensionError(
            f"need at least {d + 1} images per set for a full-rank "
            f"{d}-dim covariance, got {emb_a.shape[0]} and {emb_b.shape[0]}"
        )
    return frechet_from_embeddings(emb_a, emb_b)


def evaluate_sets(real_images, fake_images, extractor: FeatureExtractor,
                  paired: bool = True) -> MetricReport:
    """Full report: mean paired pix_acc plus set-level Fréchet distance."""
    acc = None
    if paired:
        if len(real_images) != len(fake_images):
            raise DimensionError(
                f"paired evaluation needs equal counts, got "
                f"{len(real_images)} and {len(fake_images)}"
            )
        acc = float(np.mean([pix_acc(r, f) for r, f in zip(real_images, fake_images)]))
    fd = frechet_feature_distance(real_images, fake_images, extractor)
    return MetricReport(
        pix_acc=acc,
        frechet=fd,
        sample_counts={"real": len(real_images), "fake": len(fake_images)},
    )
