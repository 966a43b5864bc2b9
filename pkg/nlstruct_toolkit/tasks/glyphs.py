"""
Embedded 5x7 lowercase glyph font and the randomized letter renderer.
"""
from typing import Dict

import numpy as np
from scipy import ndimage

from ..exceptions import StructuralException

IMAGE_SIZE = 28
UPSCALE = 4
ALPHABET = "abcdefghijklmnopqrstuvwxyz"

_FONT = {
    "a": (".....", ".....", ".###.", "....#", ".####", "#...#", ".####"),
    "b": ("#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."),
    "c": (".....", ".....", ".###.", "#....", "#....", "#...#", ".###."),
    "d": ("....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"),
    "e": (".....", ".....", ".###.", "#...#", "#####", "#....", ".###."),
    "f": ("..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."),
    "g": (".....", ".####", "#...#", "#...#", ".####", "....#", ".###."),
    "h": ("#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"),
    "i": ("..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."),
    "j": ("...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."),
    "k": ("#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."),
    "l": (".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "m": (".....", ".....", "##.#.", "#.#.#", "#.#.#", "#...#", "#...#"),
    "n": (".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"),
    "o": (".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."),
    "p": (".....", ".....", "####.", "#...#", "####.", "#....", "#...."),
    "q": (".....", ".....", ".##.#", "#..##", ".####", "....#", "....#"),
    "r": (".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."),
    "s": (".....", ".....", ".###.", "#....", ".###.", "....#", "####."),
    "t": (".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."),
    "u": (".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"),
    "v": (".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "w": (".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."),
    "x": (".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"),
    "y": (".....", ".....", "#...#", "#...#", ".####", "....#", ".###."),
    "z": (".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"),
}


def _upscale(rows) -> np.ndarray:
    bitmap = np.array([[1.0 if cell == "#" else 0.0 for cell in row] for row in rows])
    large = np.kron(bitmap, np.ones((UPSCALE, UPSCALE)))
    pad = (IMAGE_SIZE - large.shape[1]) // 2
    return np.pad(large, ((0, IMAGE_SIZE - large.shape[0]), (pad, IMAGE_SIZE - large.shape[1] - pad)))


GLYPHS: Dict[str, np.ndarray] = {letter: _upscale(rows) for letter, rows in _FONT.items()}


def letter_index(letter: str) -> int:
    """
    Label of a letter.

    Raises:
        StructuralException: If the letter is not in the embedded font
    """
    if len(letter) != 1 or letter not in GLYPHS:
        raise StructuralException(f"Unknown character: {letter!r}")
    return ALPHABET.index(letter)


def glyph(letter: str) -> np.ndarray:
    """The clean 28x28 bitmap of a letter (a copy)."""
    letter_index(letter)
    return GLYPHS[letter].copy()


def transform_image(image: np.ndarray, rotation_deg: float, shift: np.ndarray, scale: float) -> np.ndarray:
    """
    Rotate about the center, scale and shift an image with nearest-neighbour resampling.

    The identity transform returns the image unchanged.
    """
    shift = np.asarray(shift, dtype=np.float64)
    if rotation_deg == 0.0 and scale == 1.0 and not np.any(shift):
        return image.copy()
    angle = np.deg2rad(rotation_deg)
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    # affine_transform maps output coordinates to input coordinates
    matrix = rotation.T / scale
    center = (np.array(image.shape, dtype=np.float64) - 1.0) / 2.0
    offset = center - matrix @ (center + shift)
    return ndimage.affine_transform(image, matrix, offset=offset, order=0, mode="constant", cval=0.0)


def render_letter(letter: str, rng: np.random.Generator, max_rotation: float, max_shift: float,
                  scale_range, contrast_range) -> np.ndarray:
    """
    Render a perturbed letter over a uniform-noise background.

    Args:
        letter: Lowercase letter
        rng: Random stream of this render
        max_rotation: Largest absolute rotation in degrees
        max_shift: Largest absolute shift in pixels along each axis
        scale_range: (low, high) scale factor
        contrast_range: (low, high) background contrast; each image draws its own

    Returns:
        A 28x28 image with values in [0, 1]
    """
    image = glyph(letter)
    rotation = rng.uniform(-max_rotation, max_rotation) if max_rotation > 0 else 0.0
    shift = rng.uniform(-max_shift, max_shift, size=2) if max_shift > 0 else np.zeros(2)
    low, high = scale_range
    scale = rng.uniform(low, high) if high > low else float(low)
    image = transform_image(image, rotation, shift, scale)
    low, high = contrast_range
    contrast = rng.uniform(low, high) if high > low else float(low)
    if contrast > 0:
        image = image + (1.0 - image) * contrast * rng.uniform(0.0, 1.0, size=image.shape)
    return np.clip(image, 0.0, 1.0)
