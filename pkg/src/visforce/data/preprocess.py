# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Camera image → model frame: center crop, grayscale, bilinear resize."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from visforce.errors import ContractViolation
from visforce.models.backbone import Frame

logger = logging.getLogger(__name__)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
DEFAULT_SIZE = 128


def read_image(path: Union[str, Path]) -> np.ndarray:
    """Decode an 8-bit PNG/PGM (or anything Pillow reads) to ``H×W`` or ``H×W×3``.

    Raises :class:`OSError` for unreadable or corrupt files.
    """
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("L", "P", "1", "I;16", "I", "F"):
                return np.asarray(img.convert("L"))
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, SyntaxError, ValueError) as exc:
        raise OSError(f"corrupt image {path}: {exc}") from exc


def center_crop(img: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    return img[top : top + side, left : left + side]


def to_luminance(img: np.ndarray) -> np.ndarray:
    """``0.299R + 0.587G + 0.114B``; single-channel input passes through."""
    if img.ndim == 2:
        return img.astype(np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        return img[..., 0].astype(np.float64)
    if img.ndim == 3 and img.shape[2] in (3, 4):
        return img[..., :3].astype(np.float64) @ LUMA_WEIGHTS
    raise ContractViolation(f"unsupported image shape {img.shape}")


def preprocess_frame(raw: np.ndarray, size: int = DEFAULT_SIZE, timestamp_ns: int = 0) -> Frame:
    """Convert an 8-bit image (any size, RGB or gray) into an ``S×S×1`` frame in ``[0, 1]``.

    Inputs that are already ``size×size`` grayscale are only rescaled.
    """
    if raw.size == 0 or raw.ndim not in (2, 3):
        raise ContractViolation(f"cannot preprocess image of shape {raw.shape}")
    gray = to_luminance(center_crop(raw))
    if gray.shape[0] != size:
        resized = Image.fromarray(gray.astype(np.float32)).resize(
            (size, size), resample=Image.Resampling.BILINEAR
        )
        gray = np.asarray(resized, dtype=np.float64)
    pixels = np.clip(gray / 255.0, 0.0, 1.0)
    return Frame(pixels=pixels[..., None], timestamp_ns=timestamp_ns)
