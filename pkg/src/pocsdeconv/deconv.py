"""Iterative blind deconvolution with optional phase and TV-epigraph projections.

The base loop alternates Wiener-style kernel and image updates in the Fourier
domain with positivity/support constraints in the spatial domain.  The
modified loop inserts two projections onto closed convex sets: replacing the
iterate's spectrum phase by the observation's phase on the main-lobe bins,
and pulling the spatial iterate toward lower total variation through the TV
epigraph.  Both algorithms are deterministic given the config seed.

Divergence (any non-finite value) never raises mid-loop: the run stops, the
last finite iterate is returned, and an inf sentinel is appended to the
change trace.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .simulate import Kernel, delta_kernel
from .spectral import (
    _validate_spectrum,
    apply_phase_constraint,
    dft2,
    extract_phase,
    validate_image,
)
from .tv import project_epigraph

__all__ = [
    "DeconvConfig",
    "DeconvResult",
    "wiener_update_kernel",
    "wiener_update_image",
    "impose_image_constraints",
    "impose_kernel_constraints",
    "ayers_dainty",
    "modified_blind_deconv",
]

# relative iterate-change threshold for "no significant change"
_STOP_REL = 1e-6
# magnitude floor under which the previous spectrum no longer damps the update
_PREV_FLOOR = 1e-12
# cut budget for the per-iteration epigraph projection inside the loop; the
# projection keeps its guarantees (TV never grows) at any truncation
_ESTV_INNER_ITERS = 12


@dataclass(frozen=True)
class DeconvConfig:
    """Parameters shared by both deconvolution loops.

    ``support`` is an optional boolean mask for the image (None means the
    whole frame); ``kernel_support`` is the odd-sized box the kernel estimate
    is confined to.  ``x0``/``kernel0`` override the seeded random image and
    centered delta initialization, which exist mainly for fixed-point and
    consistency checks.
    """

    alpha: float = 1e-3
    max_iters: int = 300
    lam: float = 0.01
    phase_floor: float = 0.05
    support: np.ndarray = None
    kernel_support: tuple = (3, 3)
    seed: int = 0
    use_phase: bool = True
    use_estv: bool = True
    x0: np.ndarray = None
    kernel0: Kernel = None

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise InvalidArgumentError(f"alpha must be > 0, got {self.alpha}")
        if not isinstance(self.max_iters, (int, np.integer)) or self.max_iters < 1:
            raise InvalidArgumentError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise InvalidArgumentError(f"lam must be > 0, got {self.lam}")
        if not np.isfinite(self.phase_floor) or self.phase_floor < 0:
            raise InvalidArgumentError(f"phase_floor must be >= 0, got {self.phase_floor}")
        k1, k2 = self.kernel_support
        for k in (k1, k2):
            if not isinstance(k, (int, np.integer)) or k < 1 or k % 2 == 0:
                raise InvalidArgumentError(f"kernel_support dims must be odd positive integers, got {self.kernel_support}")
        object.__setattr__(self, "kernel_support", (int(k1), int(k2)))
        if self.support is not None:
            object.__setattr__(self, "support", np.asarray(self.support, dtype=bool))
        if self.x0 is not None:
            object.__setattr__(self, "x0", validate_image(self.x0, "x0"))
        if self.kernel0 is not None and not isinstance(self.kernel0, Kernel):
            raise InvalidArgumentError("kernel0 must be a Kernel instance")


@dataclass(frozen=True)
class DeconvResult:
    image_estimate: np.ndarray
    kernel_estimate: Kernel
    iterations_used: int
    per_iteration_change: tuple

    @property
    def diverged(self):
        return any(math.isinf(c) for c in self.per_iteration_change)


def _wiener(Y, A, Bprev, alpha):
    # denominator floor: below _PREV_FLOOR the previous spectrum is treated
    # as _PREV_FLOOR, which effectively suppresses the bin
    damp = alpha / np.maximum(np.abs(Bprev) ** 2, _PREV_FLOOR**2)
    return Y * np.conj(A) / (np.abs(A) ** 2 + damp)


def wiener_update_kernel(Y, Xhat, Hprev, alpha):
    """Regularized kernel-spectrum update Y*conj(X) / (|X|^2 + alpha/|Hprev|^2)."""
    Y = _validate_spectrum(Y, "Y")
    Xhat = _validate_spectrum(Xhat, "Xhat")
    Hprev = _validate_spectrum(Hprev, "Hprev")
    if not (Y.shape == Xhat.shape == Hprev.shape):
        raise InvalidArgumentError("spectra must share one shape")
    if not np.isfinite(alpha) or alpha <= 0:
        raise InvalidArgumentError(f"alpha must be > 0, got {alpha}")
    return _wiener(Y, Xhat, Hprev, alpha)


def wiener_update_image(Y, Hhat, Xprev, alpha):
    """Mirror update for the image spectrum: Y*conj(H) / (|H|^2 + alpha/|Xprev|^2)."""
    Y = _validate_spectrum(Y, "Y")
    Hhat = _validate_spectrum(Hhat, "Hhat")
    Xprev = _validate_spectrum(Xprev, "Xprev")
    if not (Y.shape == Hhat.shape == Xprev.shape):
        raise InvalidArgumentError("spectra must share one shape")
    if not np.isfinite(alpha) or alpha <= 0:
        raise InvalidArgumentError(f"alpha must be > 0, got {alpha}")
    return _wiener(Y, Hhat, Xprev, alpha)


def impose_image_constraints(img, support=None):
    """Clamp negatives to zero and zero out pixels outside the support mask."""
    arr = validate_image(img)
    out = np.maximum(arr, 0.0)
    if support is not None:
        sup = np.asarray(support, dtype=bool)
        if sup.shape != arr.shape:
            raise InvalidArgumentError(f"support shape {sup.shape} does not match image {arr.shape}")
        out[~sup] = 0.0
    return out


def impose_kernel_constraints(h, kernel_support):
    """Crop to the centered support box, clamp, symmetrize, renormalize.

    ``h`` is a full-frame spatial kernel estimate with its center at index
    (0, 0) and negative offsets wrapped.  The 4-fold averaging uses exact
    pairwise sums, so the returned taps satisfy all four symmetry equalities
    exactly.  A nonpositive crop falls back to the centered delta.
    """
    arr = validate_image(h, "h")
    k1, k2 = int(kernel_support[0]), int(kernel_support[1])
    if k1 < 1 or k2 < 1 or k1 % 2 == 0 or k2 % 2 == 0:
        raise InvalidArgumentError(f"kernel_support dims must be odd positive, got {kernel_support}")
    n1, n2 = arr.shape
    if k1 > n1 or k2 > n2:
        raise InvalidArgumentError(f"kernel_support {kernel_support} exceeds image shape {arr.shape}")
    a1, a2 = k1 // 2, k2 // 2
    taps = arr[np.ix_(np.arange(-a1, a1 + 1) % n1, np.arange(-a2, a2 + 1) % n2)]

    # pad the (possibly rectangular) box into the square grid the Kernel uses
    d = max(a1, a2)
    side = 2 * d + 1
    sq = np.zeros((side, side))
    sq[d - a1 : d + a1 + 1, d - a2 : d + a2 + 1] = taps
    sq = np.maximum(sq, 0.0)
    sq = sq + sq[::-1, :]
    sq = sq + sq[:, ::-1]
    total = sq.sum()
    if total <= 1e-12:
        return delta_kernel(d)
    return Kernel(d, sq / total)


def _run_loop(y, cfg, use_phase, use_estv, iteration_hook):
    arr = validate_image(y, "y")
    shape = arr.shape
    if cfg.support is not None and cfg.support.shape != shape:
        raise InvalidArgumentError(f"support shape {cfg.support.shape} does not match image {shape}")
    support = cfg.support

    rng = np.random.default_rng(cfg.seed)
    init = (1.0 - rng.random(shape))  # positive everywhere, never the observation
    if cfg.x0 is not None:
        if cfg.x0.shape != shape:
            raise InvalidArgumentError(f"x0 shape {cfg.x0.shape} does not match image {shape}")
        init = cfg.x0
    x = impose_image_constraints(init, support)

    kernel = cfg.kernel0 if cfg.kernel0 is not None else delta_kernel(max(cfg.kernel_support) // 2)
    Hprev = np.fft.fft2(kernel.embed(shape))

    trace = []
    iterations = 0
    # non-finite values are detected and handled as divergence, so the float
    # error machinery stays quiet inside the loop
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        Y = dft2(arr)
        pc = extract_phase(Y, magnitude_floor=cfg.phase_floor) if use_phase else None

        for i in range(cfg.max_iters):
            iterations = i + 1
            Xhat = np.fft.fft2(x)
            h_spatial = np.fft.ifft2(_wiener(Y, Xhat, Hprev, cfg.alpha)).real
            if not np.all(np.isfinite(h_spatial)):
                trace.append(math.inf)
                break
            kernel_new = impose_kernel_constraints(h_spatial, cfg.kernel_support)
            Hhat = np.fft.fft2(kernel_new.embed(shape))

            Xtil = _wiener(Y, Hhat, Xhat, cfg.alpha)
            if use_phase:
                Xtil = apply_phase_constraint(Xtil, pc)
            x_til = np.fft.ifft2(Xtil).real
            if not np.all(np.isfinite(x_til)):
                trace.append(math.inf)
                break
            if iteration_hook is not None:
                iteration_hook(i, "pre_constraints", x_til)

            x_new = impose_image_constraints(x_til, support)
            if iteration_hook is not None:
                iteration_hook(i, "post_constraints", x_new)
            if use_estv:
                x_new = project_epigraph(x_new, lam=cfg.lam, max_iters=_ESTV_INNER_ITERS).projected
                if not np.all(np.isfinite(x_new)):
                    trace.append(math.inf)
                    break

            kernel = kernel_new
            Hprev = Hhat
            change = float(np.linalg.norm(x_new - x))
            trace.append(change)
            if iteration_hook is not None:
                iteration_hook(i, "kernel", kernel)
                iteration_hook(i, "iterate", x_new)
            scale = float(np.linalg.norm(x))
            x = x_new
            if change <= _STOP_REL * (scale if scale > 0 else 1.0):
                break

    return DeconvResult(
        image_estimate=impose_image_constraints(x, support),
        kernel_estimate=kernel,
        iterations_used=iterations,
        per_iteration_change=tuple(trace),
    )


def ayers_dainty(y, cfg, iteration_hook=None):
    """Plain alternating blind-deconvolution loop.

    Per iteration: transform the image iterate, update the kernel spectrum,
    constrain the kernel in space, update the image spectrum, constrain the
    image in space.  Stops on relative change below 1e-6 or after
    cfg.max_iters rounds.  The config's projection switches are ignored here;
    this is always the unmodified loop.
    """
    return _run_loop(y, cfg, use_phase=False, use_estv=False, iteration_hook=iteration_hook)


def modified_blind_deconv(y, cfg, iteration_hook=None):
    """The same loop with the two convex projections switched in.

    After the image-spectrum update the phase on main-lobe bins is replaced
    by the observation's phase (cfg.use_phase); after the spatial constraints
    the iterate is pulled through the TV-epigraph projection with weight
    cfg.lam (cfg.use_estv).  With both switches off this is bit-identical to
    ayers_dainty for the same seed.
    """
    return _run_loop(y, cfg, use_phase=cfg.use_phase, use_estv=cfg.use_estv, iteration_hook=iteration_hook)
