"""Reference bank: patch decomposition, clustering, sampling, persistence.

A source painting is cut into multi-resolution square patches, each patch is
embedded with the fixed feature extractor, and the embeddings are grouped by
agglomerative clustering (average linkage over cosine distance). Clusters
smaller than ``min_category_size`` become outliers. Consumers draw ordered
reference sets: ``n_per_category`` round-robin blocks, each holding one
sample from every category in label order.

Banks are immutable after construction; sampling is safe to run concurrently
because every call owns its RNG.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .autodiff import Tensor, resize
from .errors import BankError, BundleParseError
from .features import FeatureExtractor

OUTLIER = -1

DEFAULT_SIZES = (8, 16, 32)

_MAGIC = b"NPBK"
_VERSION = 1


class BankWarning(UserWarning):
    """Raised (as a warning) for skippable bank-construction issues."""


@dataclass
class RefPatch:
    """One square crop of the painting plus its derived metadata."""

    pixels: np.ndarray  # [3,h,w] float32 in [0,1]
    source_rect: tuple  # (x, y, w, h) in painting coordinates
    scale: int
    embedding: np.ndarray | None = None
    category: int | None = None


@dataclass
class ReferenceBank:
    patches: list
    k: int
    linkage_trace: list
    min_category_size: int
    sizes: tuple
    extractor_seed: int

    def members(self, category: int) -> list:
        return [p for p in self.patches if p.category == category]

    @property
    def outliers(self) -> list:
        return self.members(OUTLIER)


@dataclass
class RefSet:
    """Ordered references: refs[i] comes from category i mod k."""

    refs: list  # [3,H,W] float32 arrays, all the same spatial shape
    categories: list = field(default_factory=list)
    k: int = 0
    n_per_category: int = 0


def decompose_multires(painting: np.ndarray, sizes, stride_ratio=Fraction(1, 2)) -> list:
    """Sliding-window square patches of each size, ordered size-major then row-major.

    ``stride_ratio`` scales each window size into its stride. Sizes larger
    than the painting are skipped with a BankWarning.
    """
    if not 0 < stride_ratio <= 1:
        raise ValueError(f"stride_ratio must be in (0, 1], got {stride_ratio}")
    if painting.ndim != 3 or painting.shape[0] != 3:
        raise BankError(f"painting must be [3,H,W], got {painting.shape}")
    h, w = painting.shape[1], painting.shape[2]
    patches = []
    for size in sizes:
        if size > min(h, w):
            warnings.warn(
                f"patch size {size} exceeds painting dims {h}x{w}; skipped",
                BankWarning,
                stacklevel=2,
            )
            continue
        stride = max(1, int(size * Fraction(stride_ratio)))
        for y in range(0, h - size + 1, stride):
            for x in range(0, w - size + 1, stride):
                crop = np.ascontiguousarray(painting[:, y : y + size, x : x + size])
                patches.append(RefPatch(crop.astype(np.float32), (x, y, size, size), size))
    return patches


def _cosine_distances(vecs: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    unit = vecs / np.maximum(norms, 1e-12)
    d = 1.0 - unit @ unit.T
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def average_linkage_labels(dist: np.ndarray, k_target: int):
    """Agglomerative clustering cut at k_target clusters.

    Average linkage via pairwise-sum bookkeeping; equal merge distances are
    broken in favor of the pair containing the lowest patch index. Returns
    (labels, trace) where trace entries are (id_a, id_b, distance, new_size)
    and a cluster's id is its lowest member index.
    """
    n = dist.shape[0]
    sums = dist.astype(np.float64).copy()
    members = {i: [i] for i in range(n)}
    active = list(range(n))  # ids stay sorted: merges keep the lower id
    trace = []
    while len(active) > k_target:
        best_pair, best_d = None, np.inf
        for ai in range(len(active)):
            a = active[ai]
            for bi in range(ai + 1, len(active)):
                b = active[bi]
                d = sums[a, b] / (len(members[a]) * len(members[b]))
                if d < best_d:
                    best_d, best_pair = d, (a, b)
        a, b = best_pair
        members[a] = sorted(members[a] + members[b])
        trace.append((a, b, float(best_d), len(members[a])))
        for c in active:
            if c != a and c != b:
                sums[a, c] = sums[c, a] = sums[a, c] + sums[b, c]
        active.remove(b)
        del members[b]
    labels = np.empty(n, dtype=np.int64)
    for label, cid in enumerate(active):
        labels[members[cid]] = label
    return labels, trace


def build_bank(
    patches: list,
    extractor: FeatureExtractor,
    k_target: int,
    min_category_size: int = 3,
    sizes=DEFAULT_SIZES,
) -> ReferenceBank:
    """Embed patches, cluster, and demote undersized clusters to outliers."""
    if len(patches) < k_target * min_category_size:
        raise BankError(
            f"need at least k_target*min_category_size = "
            f"{k_target * min_category_size} patches, got {len(patches)}"
        )
    for p in patches:
        square = resize(Tensor(p.pixels[None]), 32, 32, mode="bilinear")
        p.embedding = extractor.embedding_vector(square).astype(np.float32)
    vecs = np.stack([p.embedding for p in patches]).astype(np.float64)
    labels, trace = average_linkage_labels(_cosine_distances(vecs), k_target)

    counts = np.bincount(labels, minlength=k_target)
    keep = [c for c in range(k_target) if counts[c] >= min_category_size]
    if not keep:
        raise BankError(
            f"every cluster is smaller than min_category_size={min_category_size}"
        )
    remap = {old: new for new, old in enumerate(keep)}
    for patch, label in zip(patches, labels):
        patch.category = remap.get(int(label), OUTLIER)
    return ReferenceBank(
        patches=patches,
        k=len(keep),
        linkage_trace=trace,
        min_category_size=min_category_size,
        sizes=tuple(sizes),
        extractor_seed=extractor.seed,
    )


def fit_ref_to_input(ref: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Uniformly scale to fit inside the target, then zero-pad bottom/right.

    The single scale factor min(target_h/h, target_w/w) preserves aspect
    ratio exactly; the binding dimension lands on the target with no
    floating-point drift.
    """
    h, w = ref.shape[1], ref.shape[2]
    if target_h * w <= target_w * h:  # height binds
        new_h, new_w = target_h, max(1, round(w * target_h / h))
    else:
        new_h, new_w = max(1, round(h * target_w / w)), target_w
    scaled = resize(Tensor(ref[None]), new_h, new_w, mode="bilinear").data[0]
    out = np.zeros((ref.shape[0], target_h, target_w), dtype=scaled.dtype)
    out[:, :new_h, :new_w] = scaled
    return out


def sample_ordered_refs(
    bank: ReferenceBank, n_per_category: int, target_h: int, target_w: int, seed: int
) -> RefSet:
    """n_per_category blocks, each one uniform draw per category in label order."""
    if bank.k < 1:
        raise BankError("bank has no categories to sample from")
    if n_per_category < 1:
        raise ValueError("n_per_category must be >= 1")
    pools = [bank.members(c) for c in range(bank.k)]
    if any(not pool for pool in pools):
        raise BankError("every category must have at least one member")
    rng = np.random.default_rng(seed)
    refs, categories = [], []
    for _ in range(n_per_category):
        for c, pool in enumerate(pools):
            patch = pool[rng.integers(len(pool))]
            refs.append(fit_ref_to_input(patch.pixels, target_h, target_w))
            categories.append(c)
    return RefSet(refs=refs, categories=categories, k=bank.k, n_per_category=n_per_category)


def pca_project(embeddings, dims: int = 2) -> np.ndarray:
    """Mean-centered projection onto the top principal directions.

    Signs are fixed so each direction's largest-magnitude entry is positive.
    Visualization export only; rank-deficient input simply yields ~zero
    trailing components.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if x.shape[0] < dims + 1:
        raise ValueError(f"need at least {dims + 1} vectors, got {x.shape[0]}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:dims]
    basis = eigvecs[:, order]
    flip = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(basis.shape[1])])
    basis = basis * np.where(flip == 0, 1.0, flip)
    return centered @ basis


def save_bank(bank: ReferenceBank, path) -> None:
    records = [
        {"rect": list(p.source_rect), "scale": p.scale, "category": p.category}
        for p in bank.patches
    ]
    header = {
        "k": bank.k,
        "sizes": list(bank.sizes),
        "extractor_seed": bank.extractor_seed,
        "min_category_size": bank.min_category_size,
        "embedding_dim": int(bank.patches[0].embedding.shape[0]) if bank.patches else 0,
        "linkage_trace": [list(t) for t in bank.linkage_trace],
        "patches": records,
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<H", _VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for p in bank.patches:
            fh.write(p.embedding.astype("<f4").tobytes())
        for p in bank.patches:
            quant = np.clip(np.round(p.pixels.astype(np.float64) * 255.0), 0, 255)
            fh.write(quant.astype(np.uint8).tobytes())


def load_bank(path) -> ReferenceBank:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise BundleParseError(f"bad magic {raw[:4]!r}, expected {_MAGIC!r}", offset=0)
    if len(raw) < 10:
        raise BundleParseError("truncated header", offset=len(raw))
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != _VERSION:
        raise BundleParseError(f"unsupported version {version}", offset=4)
    (hlen,) = struct.unpack_from("<I", raw, 6)
    if len(raw) < 10 + hlen:
        raise BundleParseError("header extends past end of file", offset=10)
    try:
        header = json.loads(raw[10 : 10 + hlen].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BundleParseError(f"header is not valid JSON: {exc}", offset=10) from exc
    pos = 10 + hlen
    dim = header["embedding_dim"]
    patches = []
    for rec in header["patches"]:
        need = dim * 4
        if len(raw) < pos + need:
            raise BundleParseError("embedding block truncated", offset=pos)
        emb = np.frombuffer(raw, dtype="<f4", count=dim, offset=pos).copy()
        pos += need
        patches.append(
            RefPatch(
                pixels=None,
                source_rect=tuple(rec["rect"]),
                scale=rec["scale"],
                embedding=emb,
                category=rec["category"],
            )
        )
    for rec, patch in zip(header["patches"], patches):
        w, h = rec["rect"][2], rec["rect"][3]
        need = 3 * h * w
        if len(raw) < pos + need:
            raise BundleParseError("pixel block truncated", offset=pos)
        quant = np.frombuffer(raw, dtype=np.uint8, count=need, offset=pos)
        patch.pixels = (quant.reshape(3, h, w).astype(np.float32)) / 255.0
        pos += need
    return ReferenceBank(
        patches=patches,
        k=header["k"],
        linkage_trace=[tuple(t) for t in header["linkage_trace"]],
        min_category_size=header["min_category_size"],
        sizes=tuple(header["sizes"]),
        extractor_seed=header["extractor_seed"],
    )
