"""Classic obfuscation transforms: grid pixelation and Gaussian blurring."""

from __future__ import annotations

import numpy as np

from .image import Image, round_half_away, to_u8


def pixelate(img: Image, factor: int) -> Image:
    """Replace each factor x factor grid by its per-channel rounded mean.

    Edge grids smaller than the factor are averaged over their actual
    extent, so the dimensions never change.
    """
    if factor < 1:
        raise ValueError(f"pixelation factor must be >= 1, got {factor}")
    if factor == 1:
        return Image(img.width, img.height, img.channels, img.pixels.copy())
    src = img.pixels.astype(np.float64)
    out = np.empty_like(src)
    for y0 in range(0, img.height, factor):
        for x0 in range(0, img.width, factor):
            block = src[y0:y0 + factor, x0:x0 + factor]
            out[y0:y0 + factor, x0:x0 + factor] = round_half_away(block.mean(axis=(0, 1)))
    return Image(img.width, img.height, img.channels, out.astype(np.uint8))


def gaussian_kernel(radius: int) -> np.ndarray:
    """Normalized 1-D kernel with sigma radius/2 and half-width radius."""
    if radius == 0:
        return np.ones(1)
    sigma = radius / 2.0
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (offsets / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: Image, radius: int) -> Image:
    """Separable Gaussian convolution with reflect padding, clamped to 8 bits."""
    if radius < 0:
        raise ValueError(f"blur radius must be >= 0, got {radius}")
    if radius == 0:
        return Image(img.width, img.height, img.channels, img.pixels.copy())
    if radius >= min(img.width, img.height):
        raise ValueError(
            f"blur radius {radius} needs image dimensions larger than the radius, "
            f"got {img.width}x{img.height}")
    kernel = gaussian_kernel(radius)
    data = img.pixels.astype(np.float64)
    padded = np.pad(data, ((radius, radius), (0, 0), (0, 0)), mode="reflect")
    rows = np.zeros_like(data)
    for j, w in enumerate(kernel):
        rows += w * padded[j:j + img.height]
    padded = np.pad(rows, ((0, 0), (radius, radius), (0, 0)), mode="reflect")
    cols = np.zeros_like(data)
    for j, w in enumerate(kernel):
        cols += w * padded[:, j:j + img.width]
    return Image(img.width, img.height, img.channels, to_u8(cols))
