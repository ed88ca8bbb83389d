"""Sketch-to-painting synthesis from a single source artwork.

Subpackages and modules:
  autodiff    minimal reverse-mode tensor engine
  kernels     convolution backends (compiled + numpy fallback)
  features    fixed seeded feature extractor with two tap points
  bank        multi-resolution reference bank with clustering
  attention   correspondence attention over reference patches
  networks    generator, enhancer, discriminators, model bundles
  losses      GAN, contextual, and L1 objectives
  training    augmentation, Adam, two-stage training loop
  evaluation  pixel accuracy and Frechet feature distance
  canvas      sketch extraction, tiling, blending, large-canvas synthesis
  service     HTTP API over a model registry
"""

__version__ = "0.1.0"
