"""Two-stage adversarial training loop with Adam and plateau stopping.

Each step samples an augmented sketch/painting pair, runs stage 1 (generator
on the half-resolution sketch), draws a fresh ordered reference set for the
attention block, runs the enhancer to full patch resolution, and applies the
weighted objective at both scales. Updates alternate strictly: both
discriminators first (on detached fakes), then the generator stack. Every
random draw comes from a stream derived from (cfg.seed, purpose, epoch,
step), so a fixed seed reproduces checkpoints byte for byte.

Training stops at max_epochs or when the per-epoch mean generator loss
plateaus: the 10-epoch moving average changes by less than 1% relative to
the previous window. A non-finite loss aborts immediately after writing a
diagnostic checkpoint.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .attention import ca_forward
from .autodiff import Tensor, gradient_of, resize
from .bank import ReferenceBank, sample_ordered_refs
from .canvas import extract_sketch
from .errors import DimensionError, TrainingDiverged
from .features import TAP3, FeatureExtractor
from .losses import LossWeights, contextual_loss, full_objective, gan_loss, l1_loss
from .networks import ModelBundle, save_bundle

# learning rates: slow generator, fast discriminator
DEFAULT_LR_G = 0.0005
DEFAULT_LR_D = 0.002

_PURPOSE_SAMPLE = 1
_PURPOSE_REFS = 2
_PURPOSE_HELD_OUT = 3

CSV_FIELDS = ["step", "l_d1", "l_g1", "l_d2", "l_g2", "l_cx", "l_l1", "total"]


@dataclass
class TrainingPair:
    """Sketch canvas crop (4ch) and its painting target, same resolution."""

    sketch: np.ndarray  # [4,H,W] float32
    painting: np.ndarray  # [3,H,W] float32

    def __post_init__(self):
        if self.sketch.shape[1:] != self.painting.shape[1:]:
            raise DimensionError(
                f"sketch {self.sketch.shape} and painting {self.painting.shape} "
                "must share spatial dims"
            )


@dataclass
class TrainConfig:
    lr_g: float = DEFAULT_LR_G
    lr_d: float = DEFAULT_LR_D
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weights: LossWeights = field(default_factory=LossWeights)
    patches_per_epoch: int = 64
    max_epochs: int = 50
    stage1_res: int = 32
    stage2_res: int = 64
    seed: int = 0
    n_refs_per_category: int = 1
    checkpoint_every: int = 10
    plateau_window: int = 10
    plateau_rel_tol: float = 0.01

    def __post_init__(self):
        if self.stage2_res != 2 * self.stage1_res:
            raise ValueError(
                f"stage2_res must be 2*stage1_res, got {self.stage2_res} vs {self.stage1_res}"
            )
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ValueError("learning rates must be positive")


class OptimizerState:
    """Per-parameter Adam moments plus the shared step counter."""

    def __init__(self, params):
        self.m = {p.name: np.zeros_like(p.data) for p in params}
        self.v = {p.name: np.zeros_like(p.data) for p in params}
        self.t = 0


def adam_step(params, grads, state: OptimizerState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """Standard bias-corrected Adam update, in place on param data."""
    state.t += 1
    t = state.t
    for p, g in zip(params, grads):
        m = state.m[p.name]
        v = state.v[p.name]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * (g * g)
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        p.data = p.data - (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)


def _rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *path]))


def _derive_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def make_training_source(painting: np.ndarray, sketch: np.ndarray | None = None,
                         mask: np.ndarray | None = None) -> TrainingPair:
    """Full-canvas pair: extracted (or given) sketch plus zero/given mask."""
    if sketch is None:
        sketch = extract_sketch(painting)
    if mask is None:
        mask = np.zeros_like(painting)
    four = np.concatenate([sketch.astype(np.float32), mask.astype(np.float32)])
    return TrainingPair(sketch=four, painting=painting.astype(np.float32))


def augment(source: TrainingPair, crop: int, seed: int,
            force_flip: bool | None = None) -> TrainingPair:
    """Seeded crop to ``crop`` pixels square, coin-flip mirror, color jitter.

    Geometry (crop + flip) applies to sketch and painting alike; the color
    jitter (per-channel gain in [0.9,1.1], bias in [-0.05,0.05], clipped back
    to [0,1]) touches only the painting.
    """
    h, w = source.painting.shape[1:]
    if h < crop or w < crop:
        raise DimensionError(f"source {w}x{h} smaller than crop {crop}")
    rng = _rng(seed)
    y = int(rng.integers(h - crop + 1))
    x = int(rng.integers(w - crop + 1))
    flip = bool(rng.integers(2)) if force_flip is None else force_flip
    gain = rng.uniform(0.9, 1.1, size=(3, 1, 1)).astype(np.float32)
    bias = rng.uniform(-0.05, 0.05, size=(3, 1, 1)).astype(np.float32)
    sk = source.sketch[:, y : y + crop, x : x + crop]
    pt = source.painting[:, y : y + crop, x : x + crop]
    if flip:
        sk, pt = sk[:, :, ::-1], pt[:, :, ::-1]
    pt = np.clip(pt * gain + bias, 0.0, 1.0)
    return TrainingPair(sketch=np.ascontiguousarray(sk), painting=np.ascontiguousarray(pt))


def sample_epoch(source: TrainingPair, cfg: TrainConfig, epoch: int) -> list:
    """cfg.patches_per_epoch augmented pairs, seeded by (cfg.seed, epoch)."""
    return [
        augment(source, cfg.stage2_res, _derive_seed(cfg.seed, _PURPOSE_SAMPLE, epoch, i))
        for i in range(cfg.patches_per_epoch)
    ]


def _halve(image: np.ndarray) -> np.ndarray:
    t = resize(Tensor(image[None]), image.shape[1] // 2, image.shape[2] // 2, mode="bilinear")
    return t.data[0]


def _forward_pair(bundle: ModelBundle, pair: TrainingPair, refs) -> dict:
    """One full two-stage forward; returns tensors needed by both updates."""
    s_lo = _halve(pair.sketch)
    target_hi = Tensor(pair.painting[None])
    target_lo = Tensor(_halve(pair.painting)[None])
    rgb_lo, features = bundle.g1.forward(Tensor(s_lo[None]))
    attended = ca_forward(features, refs, bundle.ca)
    rgb_hi = bundle.enhancer.forward(attended)
    return {
        "rgb_lo": rgb_lo, "rgb_hi": rgb_hi,
        "target_lo": target_lo, "target_hi": target_hi,
    }


def training_step(bundle: ModelBundle, extractor: FeatureExtractor,
                  pair: TrainingPair, refs, cfg: TrainConfig,
                  opt_g: OptimizerState, opt_d: OptimizerState) -> dict:
    """Discriminator update then generator update on one pair."""
    fwd = _forward_pair(bundle, pair, refs)
    rgb_lo, rgb_hi = fwd["rgb_lo"], fwd["rgb_hi"]
    target_lo, target_hi = fwd["target_lo"], fwd["target_hi"]

    # discriminators see detached fakes: their update must not touch G
    d1_real = bundle.d1.forward(target_lo)
    d1_fake = bundle.d1.forward(rgb_lo.detach())
    d2_real = bundle.d2.forward(target_hi)
    d2_fake = bundle.d2.forward(rgb_hi.detach())
    l_d1 = gan_loss(d1_real, d1_fake)[0]
    l_d2 = gan_loss(d2_real, d2_fake)[0]
    loss_d = l_d1 + l_d2
    d_params = bundle.discriminator_parameters()
    adam_step(d_params, gradient_of(loss_d, d_params), opt_d, cfg.lr_d,
              cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    # generator update through the freshly updated discriminators; the real
    # logits are reused detached because the generator term ignores them
    l_g1 = gan_loss(d1_real.detach(), bundle.d1.forward(rgb_lo))[1]
    l_g2 = gan_loss(d2_real.detach(), bundle.d2.forward(rgb_hi))[1]
    cx_lo = contextual_loss(extractor.embed(rgb_lo, TAP3), extractor.embed(target_lo, TAP3))
    cx_hi = contextual_loss(extractor.embed(rgb_hi, TAP3), extractor.embed(target_hi, TAP3))
    l1_lo = l1_loss(rgb_lo, target_lo)
    l1_hi = l1_loss(rgb_hi, target_hi)
    gan_total = l_g1 + l_g2
    cx_total = cx_lo + cx_hi
    l1_total = l1_lo + l1_hi
    loss_g = full_objective(gan_total, cx_total, l1_total, cfg.weights)
    g_params = bundle.generator_parameters()
    adam_step(g_params, gradient_of(loss_g, g_params), opt_g, cfg.lr_g,
              cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    return {
        "l_d1": l_d1.item(), "l_g1": l_g1.item(),
        "l_d2": l_d2.item(), "l_g2": l_g2.item(),
        "l_cx": cx_total.item(), "l_l1": l1_total.item(),
        "total": loss_g.item(),
    }


@dataclass
class TrainResult:
    bundle: ModelBundle
    rows: list  # per-step loss dicts, CSV_FIELDS keys
    epochs_run: int
    stopped: str  # "max_epochs" | "plateau"
    csv_path: str | None
    checkpoints: list


def held_out_l1(bundle: ModelBundle, extractor: FeatureExtractor,
                source: TrainingPair, bank: ReferenceBank, cfg: TrainConfig,
                n_pairs: int = 8) -> float:
    """Mean two-scale L1 on pairs from a held-out stream; no updates."""
    total = 0.0
    for i in range(n_pairs):
        pair = augment(source, cfg.stage2_res, _derive_seed(cfg.seed, _PURPOSE_HELD_OUT, i))
        refs = sample_ordered_refs(
            bank, cfg.n_refs_per_category, cfg.stage1_res, cfg.stage1_res,
            _derive_seed(cfg.seed, _PURPOSE_HELD_OUT, 1000 + i),
        )
        fwd = _forward_pair(bundle, pair, refs)
        total += (
            l1_loss(fwd["rgb_lo"], fwd["target_lo"]).item()
            + l1_loss(fwd["rgb_hi"], fwd["target_hi"]).item()
        )
    return total / n_pairs


def train(painting: np.ndarray, bank: ReferenceBank, cfg: TrainConfig,
          out_dir: str | None = None, sketch: np.ndarray | None = None,
          mask: np.ndarray | None = None, max_steps: int | None = None) -> TrainResult:
    """Train a fresh bundle on one painting with a pre-built bank.

    ``max_steps`` caps total steps across epochs (smoke runs); None means
    epochs run to completion.
    """
    extractor = FeatureExtractor(seed=bank.extractor_seed)
    source = make_training_source(painting, sketch=sketch, mask=mask)
    n_refs = cfg.n_refs_per_category * bank.k
    bundle = ModelBundle.init(n_refs=n_refs, seed=cfg.seed)
    opt_g = OptimizerState(bundle.generator_parameters())
    opt_d = OptimizerState(bundle.discriminator_parameters())

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    rows: list = []
    checkpoints: list = []
    epoch_means: list = []
    stopped = "max_epochs"
    step = 0
    epochs_run = 0

    def _checkpoint(tag) -> str:
        path = os.path.join(out_dir, f"ckpt_{tag}.nply")
        save_bundle(bundle, path)
        checkpoints.append(path)
        return path

    try:
        for epoch in range(cfg.max_epochs):
            epoch_total = 0.0
            epoch_steps = 0
            for i, pair in enumerate(sample_epoch(source, cfg, epoch)):
                refs = sample_ordered_refs(
                    bank, cfg.n_refs_per_category, cfg.stage1_res, cfg.stage1_res,
                    _derive_seed(cfg.seed, _PURPOSE_REFS, epoch, i),
                )
                metrics = training_step(bundle, extractor, pair, refs, cfg, opt_g, opt_d)
                if not all(np.isfinite(v) for v in metrics.values()):
                    if out_dir is not None:
                        _checkpoint("diagnostic")
                    raise TrainingDiverged(
                        f"non-finite loss at step {step}: {metrics}"
                    )
                metrics["step"] = step
                rows.append(metrics)
                epoch_total += metrics["total"]
                epoch_steps += 1
                step += 1
                if max_steps is not None and step >= max_steps:
                    break
            epochs_run = epoch + 1
            epoch_means.append(epoch_total / max(epoch_steps, 1))
            if out_dir is not None and (epoch + 1) % cfg.checkpoint_every == 0:
                _checkpoint(epoch + 1)
            if max_steps is not None and step >= max_steps:
                break
            w = cfg.plateau_window
            if len(epoch_means) > w:
                ma_now = float(np.mean(epoch_means[-w:]))
                ma_prev = float(np.mean(epoch_means[-w - 1 : -1]))
                if abs(ma_now - ma_prev) < cfg.plateau_rel_tol * abs(ma_prev):
                    stopped = "plateau"
                    break
    finally:
        csv_path = None
        if out_dir is not None:
            csv_path = os.path.join(out_dir, "losses.csv")
            with open(csv_path, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
                writer.writeheader()
                writer.writerows({k: row[k] for k in CSV_FIELDS} for row in rows)

    if out_dir is not None and (not checkpoints or checkpoints[-1] != os.path.join(out_dir, f"ckpt_{epochs_run}.nply")):
        _checkpoint(epochs_run)
    return TrainResult(
        bundle=bundle, rows=rows, epochs_run=epochs_run,
        stopped=stopped, csv_path=csv_path, checkpoints=checkpoints,
    )
