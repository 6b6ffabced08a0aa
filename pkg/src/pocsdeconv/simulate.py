"""Blur kernels, noise injection, synthetic phantoms, and PSNR scoring.

Kernels live on a (2d+1) x (2d+1) tap grid indexed by offsets in [-d, d] and
are embedded into full image dimensions with the center tap at the DFT origin
(wrapping negative offsets), which keeps their transform real for symmetric
taps.  Blurring is circular convolution through DFT products.  All randomness
is seeded, so every generated image and noise field is reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .spectral import dft2, idft2, validate_image

__all__ = [
    "Kernel",
    "ExperimentRow",
    "ExperimentReport",
    "delta_kernel",
    "gaussian_kernel",
    "uniform_kernel",
    "blur",
    "add_noise",
    "psnr",
    "make_phantom",
]

PHANTOM_KINDS = ("cells", "step", "impulses")


def _check_radius(d, minimum=1):
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise InvalidArgumentError(f"d must be an integer, got {d!r}")
    if d < minimum:
        raise InvalidArgumentError(f"d must be >= {minimum}, got {d}")
    return int(d)


@dataclass(frozen=True)
class Kernel:
    """Nonnegative unit-sum blur taps on a (2d+1) x (2d+1) grid.

    Taps must be symmetric under both axis flips about the center, which is
    what makes the embedded transform real (zero phase).
    """

    d: int
    data: np.ndarray

    def __post_init__(self):
        # radius 0 (a bare delta) is allowed so a 1x1 support box is expressible
        d = _check_radius(self.d, minimum=0)
        data = np.asarray(self.data, dtype=np.float64)
        side = 2 * d + 1
        if data.shape != (side, side):
            raise InvalidArgumentError(
                f"kernel data must be {side}x{side} for d={d}, got {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidArgumentError("kernel taps must be finite")
        if data.min() < 0.0:
            raise InvalidArgumentError("kernel taps must be nonnegative")
        if abs(data.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("kernel taps must sum to 1 within 1e-12")
        if not (
            np.allclose(data, data[::-1, :], rtol=0.0, atol=1e-12)
            and np.allclose(data, data[:, ::-1], rtol=0.0, atol=1e-12)
        ):
            raise InvalidArgumentError("kernel taps must be 4-fold symmetric about the center")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "data", data)

    @property
    def side(self):
        return 2 * self.d + 1

    def embed(self, shape):
        """Zero-pad to ``shape`` with the center tap at index (0, 0).

        Negative offsets wrap around, so the embedded kernel is its own
        reflection and its transform is real.
        """
        n1, n2 = int(shape[0]), int(shape[1])
        if self.side > n1 or self.side > n2:
            raise InvalidArgumentError(
                f"kernel of side {self.side} does not fit in image of shape ({n1}, {n2})"
            )
        out = np.zeros((n1, n2))
        d = self.d
        rows = np.arange(-d, d + 1) % n1
        cols = np.arange(-d, d + 1) % n2
        out[np.ix_(rows, cols)] = self.data
        return out


@dataclass(frozen=True)
class ExperimentRow:
    """One harness measurement: a (phantom, kernel, method) cell."""

    image_id: str
    kernel_type: str
    d: int
    sigma: float
    method: str
    psnr_db: float
    iterations: int
    wall_time_s: float


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        for row in rows:
            if not (math.isfinite(row.psnr_db) or row.psnr_db == math.inf):
                raise InvalidArgumentError("psnr_db must be finite or +inf")
        object.__setattr__(self, "rows", rows)


def delta_kernel(d=1):
    """Identity kernel: a single unit tap at the center."""
    d = _check_radius(d, minimum=0)
    data = np.zeros((2 * d + 1, 2 * d + 1))
    data[d, d] = 1.0
    return Kernel(d, data)


def gaussian_kernel(d, sigma):
    """Truncated Gaussian taps exp(-(n1^2+n2^2)/(2 sigma^2)), unit-normalized."""
    d = _check_radius(d)
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidArgumentError(f"sigma must be > 0, got {sigma}")
    n = np.arange(-d, d + 1, dtype=np.float64)
    r2 = n[:, None] ** 2 + n[None, :] ** 2
    data = np.exp(-r2 / (2.0 * float(sigma) ** 2))
    return Kernel(d, data / data.sum())


def uniform_kernel(d):
    """Equal taps on the disc n1^2+n2^2 <= d^2, zero outside, unit sum."""
    d = _check_radius(d)
    n = np.arange(-d, d + 1, dtype=np.float64)
    data = (n[:, None] ** 2 + n[None, :] ** 2 <= d * d).astype(np.float64)
    return Kernel(d, data / data.sum())


def blur(img, kernel):
    """Circular convolution with the kernel, as DFT products."""
    arr = validate_image(img)
    if not isinstance(kernel, Kernel):
        raise InvalidArgumentError("kernel must be a Kernel instance")
    return idft2(dft2(arr) * dft2(kernel.embed(arr.shape)))


def add_noise(img, sigma_noise, seed):
    """Add seeded i.i.d. zero-mean Gaussian noise of the given deviation.

    Scales are relative to the normalized [0, 1] image range, so an 8-bit
    deviation of 30 corresponds to sigma_noise = 30/255.
    """
    arr = validate_image(img)
    if not np.isfinite(sigma_noise) or sigma_noise < 0:
        raise InvalidArgumentError(f"sigma_noise must be >= 0, got {sigma_noise}")
    if sigma_noise == 0:
        return arr.copy()
    rng = np.random.default_rng(seed)
    return arr + rng.normal(0.0, sigma_noise, arr.shape)


def psnr(img, ref):
    """Peak signal-to-noise ratio in dB against peak 1.0; +inf for equality."""
    a = validate_image(img)
    b = validate_image(ref)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _cells(n1, n2, rng):
    # extended elliptical blobs over a dark field, loosely like stained cell
    # bodies; soft structures rather than near-impulses
    img = np.zeros((n1, n2))
    y = np.arange(n1, dtype=np.float64)[:, None]
    x = np.arange(n2, dtype=np.float64)[None, :]
    shrink = min(1.0, min(n1, n2) / 48.0)
    count = max(4, (n1 * n2) // 480)
    for _ in range(count):
        cy = rng.uniform(3.0, n1 - 3.0)
        cx = rng.uniform(3.0, n2 - 3.0)
        amp = rng.uniform(0.45, 0.9)
        sy = rng.uniform(2.0, 4.5) * shrink
        sx = sy * rng.uniform(0.6, 1.4)
        th = rng.uniform(0.0, np.pi)
        ct, st = np.cos(th), np.sin(th)
        u = (y - cy) * ct + (x - cx) * st
        v = -(y - cy) * st + (x - cx) * ct
        img += amp * np.exp(-(u * u) / (2.0 * sy * sy) - (v * v) / (2.0 * sx * sx))
    return np.clip(img, 0.0, 1.0)


def _step(n1, n2, rng):
    # vertical half-plane edge of height 0.8; no wrap term, so tv = n1 * 0.8
    edge = int(rng.integers(n2 // 3, 2 * n2 // 3))
    img = np.full((n1, n2), 0.1)
    img[:, edge:] = 0.9
    return img


def _impulses(n1, n2, rng):
    img = np.zeros((n1, n2))
    count = max(4, (n1 * n2) // 64)
    flat = rng.choice(n1 * n2, size=count, replace=False)
    img.ravel()[flat] = rng.uniform(0.5, 1.0, count)
    return img


def make_phantom(kind, size, seed):
    """Deterministic synthetic test image with values in [0, 1].

    Kinds: "cells" (random bright blobs on a dark background), "step" (a
    half-plane edge), "impulses" (sparse bright pixels).
    """
    if kind not in PHANTOM_KINDS:
        raise InvalidArgumentError(f"unknown phantom kind {kind!r}, expected one of {PHANTOM_KINDS}")
    n1, n2 = int(size[0]), int(size[1])
    if n1 < 16 or n2 < 16:
        raise InvalidArgumentError(f"phantom size must be at least 16x16, got ({n1}, {n2})")
    rng = np.random.default_rng(seed)
    if kind == "cells":
        return _cells(n1, n2, rng)
    if kind == "step":
        return _step(n1, n2, rng)
    return _impulses(n1, n2, rng)
