"""Aspect-preserving resize with padding, and its exact coordinate inverse.

Detector inputs are square; a slice of shape (nx, ny) is scaled by a single
factor and centered with padding. Boxes predicted in model-input pixels are
mapped back to original pixels by inverting the same affine transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LetterboxTransform:
    scale: float
    pad_x: float
    pad_y: float
    input_size: int
    orig_shape: tuple[int, int]

    def to_model(self, x: float, y: float) -> tuple[float, float]:
        return x * self.scale + self.pad_x, y * self.scale + self.pad_y

    def to_original(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.pad_x) / self.scale, (y - self.pad_y) / self.scale

    def box_to_original(self, box: dict) -> dict:
        """Map a model-space box dict back to original pixel coordinates,
        clamped to the image."""
        nx, ny = self.orig_shape
        x0, y0 = self.to_original(box["x"][0], box["y"][0])
        x1, y1 = self.to_original(box["x"][1], box["y"][1])
        return box | {
            "x": [max(0.0, min(nx, x0)), max(0.0, min(nx, x1))],
            "y": [max(0.0, min(ny, y0)), max(0.0, min(ny, y1))],
        }


def letterbox_transform(orig_shape: tuple[int, int], input_size: int) -> LetterboxTransform:
    nx, ny = orig_shape
    scale = input_size / max(nx, ny)
    return LetterboxTransform(
        scale=scale,
        pad_x=(input_size - nx * scale) / 2.0,
        pad_y=(input_size - ny * scale) / 2.0,
        input_size=input_size,
        orig_shape=orig_shape,
    )


def letterbox_image(plane: np.ndarray, input_size: int) -> tuple[np.ndarray, LetterboxTransform]:
    """Nearest-neighbor letterbox of a uint8 (nx, ny) slice into a square."""
    nx, ny = plane.shape
    tf = letterbox_transform((nx, ny), input_size)
    out = np.zeros((input_size, input_size), dtype=np.uint8)
    xi = np.clip(((np.arange(input_size) - tf.pad_x) / tf.scale).astype(int), 0, nx - 1)
    yi = np.clip(((np.arange(input_size) - tf.pad_y) / tf.scale).astype(int), 0, ny - 1)
    valid_x = (np.arange(input_size) >= tf.pad_x) & (np.arange(input_size) < tf.pad_x + nx * tf.scale)
    valid_y = (np.arange(input_size) >= tf.pad_y) & (np.arange(input_size) < tf.pad_y + ny * tf.scale)
    out[np.ix_(valid_x, valid_y)] = plane[np.ix_(xi[valid_x], yi[valid_y])]
    return out, tf
