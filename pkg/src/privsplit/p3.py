"""P3-style coefficient decomposition on an 8x8 block-DCT codec.

The codec is fixed so round trips are bit-exact: level shift by 128,
orthonormal 2-D DCT per 8x8 block, quantization by the standard luminance
table (quality 50), per-channel processing for RGB, edge-replicated padding
to block multiples. The DC coefficient of every block and each AC
coefficient whose quantized magnitude exceeds the threshold move to the
secret part; the public image keeps the rest. The package retains the exact
quantized public coefficients, so reinserting the secret reproduces the
full-coefficient reference reconstruction bitwise.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .image import Image, to_u8

# Standard luminance quantization table; quality 50 uses it unscaled.
QUANT_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

SECRET_MAGIC = b"P3SC"
SECRET_VERSION = 1
_HEADER = struct.Struct("<4sBIIBH")
_RECORD = struct.Struct("<IBh")


def _dct_matrix() -> np.ndarray:
    n = np.arange(8)
    c = np.cos((2 * n[None, :] + 1) * n[:, None] * np.pi / 16.0)
    c[0, :] = 1.0
    scale = np.full((8, 1), 0.5)
    scale[0, 0] = 1.0 / np.sqrt(8.0)
    return scale * c


DCT8 = _dct_matrix()


class P3PackageError(ValueError):
    pass


@dataclass
class P3Package:
    """Public image plus the secret coefficient entries that were cut out."""

    public_image: Image
    public_coefficients: np.ndarray  # int32 (channels, block_rows, block_cols, 8, 8)
    secret: list[tuple[int, int, int]]  # (block id, coefficient id, value)
    threshold: int
    width: int
    height: int
    channels: int
    block_rows: int
    block_cols: int


def _to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    pad_h = (-h) % 8
    pad_w = (-w) % 8
    padded = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
    by, bx = padded.shape[0] // 8, padded.shape[1] // 8
    return padded.reshape(by, 8, bx, 8).transpose(0, 2, 1, 3)


def _from_blocks(blocks: np.ndarray, height: int, width: int) -> np.ndarray:
    by, bx = blocks.shape[:2]
    plane = blocks.transpose(0, 2, 1, 3).reshape(by * 8, bx * 8)
    return plane[:height, :width]


def _quantize_image(img: Image) -> np.ndarray:
    """Quantized block coefficients, shape (channels, by, bx, 8, 8), int32."""
    planes = img.pixels.astype(np.float64) - 128.0
    out = []
    for ch in range(img.channels):
        blocks = _to_blocks(planes[:, :, ch])
        coeffs = np.einsum("ij,byjk,lk->byil", DCT8, blocks, DCT8)
        out.append(np.rint(coeffs / QUANT_TABLE).astype(np.int32))
    return np.stack(out)


def _dequantize_to_image(coeffs: np.ndarray, height: int, width: int) -> Image:
    channels = coeffs.shape[0]
    planes = []
    for ch in range(channels):
        spatial = np.einsum("ji,byjk,kl->byil", DCT8, coeffs[ch] * QUANT_TABLE, DCT8)
        planes.append(_from_blocks(spatial, height, width) + 128.0)
    return Image.from_array(to_u8(np.stack(planes, axis=-1)))


def quantized_reference(img: Image) -> Image:
    """Round trip through the quantized codec with nothing removed."""
    return _dequantize_to_image(_quantize_image(img), img.height, img.width)


def p3_encode(img: Image, threshold: int) -> P3Package:
    """Split the quantized coefficients into public and secret parts.

    Every DC goes to the secret; an AC goes to the secret iff its magnitude
    is strictly larger than the threshold.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    coeffs = _quantize_image(img)
    channels, by, bx = coeffs.shape[:3]
    flat = coeffs.reshape(channels * by * bx, 64)
    keep_mask = np.abs(flat) <= threshold
    keep_mask[:, 0] = False  # DC is always secret
    public_flat = np.where(keep_mask, flat, 0)
    secret_ids = np.nonzero(~keep_mask)
    secret = [(int(b), int(c), int(flat[b, c])) for b, c in zip(*secret_ids)]
    public = public_flat.reshape(coeffs.shape)
    return P3Package(
        public_image=_dequantize_to_image(public, img.height, img.width),
        public_coefficients=public,
        secret=secret,
        threshold=threshold,
        width=img.width,
        height=img.height,
        channels=img.channels,
        block_rows=by,
        block_cols=bx,
    )


def p3_decode(pkg: P3Package) -> Image:
    """Reinsert the secret coefficients and invert the codec."""
    coeffs = pkg.public_coefficients.copy()
    expected = (pkg.channels, pkg.block_rows, pkg.block_cols, 8, 8)
    if coeffs.shape != expected:
        raise P3PackageError(f"coefficient array shape {coeffs.shape} != {expected}")
    flat = coeffs.reshape(-1, 64)
    for block_id, coef_id, value in pkg.secret:
        if not (0 <= block_id < flat.shape[0] and 0 <= coef_id < 64):
            raise P3PackageError(f"secret entry ({block_id}, {coef_id}) outside block grid")
        flat[block_id, coef_id] = value
    return _dequantize_to_image(flat.reshape(expected), pkg.height, pkg.width)


def serialize_secret(pkg: P3Package) -> bytes:
    """Little-endian secret stream.

    Header: magic "P3SC", version u8, width u32, height u32, channels u8,
    threshold u16. Records: block id u32, coefficient id u8, value i16.
    """
    out = [_HEADER.pack(SECRET_MAGIC, SECRET_VERSION, pkg.width, pkg.height,
                        pkg.channels, pkg.threshold)]
    for block_id, coef_id, value in pkg.secret:
        out.append(_RECORD.pack(block_id, coef_id, value))
    return b"".join(out)


def deserialize_secret(blob: bytes) -> tuple[dict, list[tuple[int, int, int]]]:
    if len(blob) < _HEADER.size:
        raise P3PackageError("secret stream shorter than its header")
    magic, version, width, height, channels, threshold = _HEADER.unpack_from(blob, 0)
    if magic != SECRET_MAGIC:
        raise P3PackageError(f"bad secret magic {magic!r}")
    if version != SECRET_VERSION:
        raise P3PackageError(f"unsupported secret version {version}")
    body = blob[_HEADER.size:]
    if len(body) % _RECORD.size != 0:
        raise P3PackageError("secret stream has a truncated record")
    entries = [_RECORD.unpack_from(body, off) for off in range(0, len(body), _RECORD.size)]
    meta = {"width": width, "height": height, "channels": channels, "threshold": threshold}
    return meta, [(int(b), int(c), int(v)) for b, c, v in entries]


def secret_proportion(pkg: P3Package) -> float:
    """Secret bytes over total coefficient-stream bytes.

    The public stream is costed like the secret one: one record per nonzero
    retained coefficient.
    """
    secret_bytes = len(serialize_secret(pkg))
    public_bytes = _RECORD.size * int(np.count_nonzero(pkg.public_coefficients))
    return secret_bytes / (secret_bytes + public_bytes)
