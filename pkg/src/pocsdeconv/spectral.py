"""2D Fourier transforms and the prescribed-phase convex set.

Images are real 2D float64 arrays with intensities nominally in [0, 1];
spectra are complex 2D arrays in standard DFT ordering (bin (0, 0) is DC).
The forward transform is unnormalized, the inverse carries the 1/(N1*N2)
factor, so ``idft2(dft2(x)) == x``.

The prescribed-phase set is the set of images whose FT phase equals a given
phase array on a set of masked frequency bins.  Replacing a spectrum's phase
with the prescribed one while keeping its magnitude maps an arbitrary image
onto that set; per bin the map shrinks distances (reverse triangle
inequality), so it is non-expansive and idempotent.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SymmetryViolationError

__all__ = [
    "PhaseConstraint",
    "dft2",
    "idft2",
    "extract_phase",
    "apply_phase_constraint",
    "project_phase",
    "phase_only_image",
    "reconstruct_from_phase",
]

# Allowed imaginary leakage of an inverse transform relative to its real part.
_IMAG_RESIDUE_TOL = 1e-6


def validate_image(img, name="img"):
    """Coerce to a float64 2D array and check dims and finiteness."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidArgumentError(f"{name} has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return arr


def _validate_spectrum(spec, name="spec"):
    arr = np.asarray(spec, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidArgumentError(f"{name} must be a nonempty 2D array")
    return arr


@dataclass(frozen=True)
class PhaseConstraint:
    """Prescribed FT phase plus the frequency mask on which it is imposed.

    ``phase[k1, k2]`` is the prescribed angle in (-pi, pi]; ``mask`` marks the
    bins that participate in the constraint.  The mask is kept symmetric under
    k -> -k (mod N) and the phase conjugate-antisymmetric so that constrained
    spectra of real images stay conjugate-symmetric.
    """

    phase: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if phase.ndim != 2 or phase.shape != mask.shape:
            raise InvalidArgumentError(
                f"phase {phase.shape} and mask {mask.shape} must be matching 2D arrays"
            )
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self):
        return self.phase.shape

    def validate(self, tol=1e-6):
        """Check the structural invariants; raise InvalidArgumentError if broken."""
        if not self.mask[0, 0]:
            raise InvalidArgumentError("DC bin must be masked")
        flipped_mask = _reflect(self.mask)
        if not np.array_equal(self.mask, flipped_mask):
            raise InvalidArgumentError("mask is not symmetric under k -> -k")
        # phase[k] + phase[-k] must vanish mod 2*pi on masked bins
        wrapped = np.mod(self.phase + _reflect(self.phase) + np.pi, 2 * np.pi) - np.pi
        if np.any(np.abs(wrapped[self.mask]) > tol):
            raise InvalidArgumentError("phase is not conjugate-antisymmetric on mask")


def _reflect(a):
    """Index map k -> (-k) mod N along both axes."""
    return np.roll(np.flip(a, axis=(0, 1)), shift=(1, 1), axis=(0, 1))


def dft2(img):
    """Forward unnormalized 2D DFT of a real image."""
    arr = validate_image(img)
    return np.fft.fft2(arr)


def idft2(spec, require_real=True):
    """Inverse 2D DFT with 1/(N1*N2) normalization, returning a real image.

    The imaginary part is discarded only after checking it is negligible
    relative to the real part; a genuine violation means the caller fed a
    spectrum that is not conjugate-symmetric.  Pass ``require_real=False`` to
    skip the check (diagnostic use).
    """
    arr = _validate_spectrum(spec)
    out = np.fft.ifft2(arr)
    if require_real:
        imag_max = np.max(np.abs(out.imag))
        real_max = np.max(np.abs(out.real))
        if imag_max > _IMAG_RESIDUE_TOL * real_max:
            raise SymmetryViolationError(
                f"imaginary residue {imag_max:.3e} exceeds "
                f"{_IMAG_RESIDUE_TOL:.0e} * max|real| = {_IMAG_RESIDUE_TOL * real_max:.3e}"
            )
    return np.ascontiguousarray(out.real)


def extract_phase(spec, magnitude_floor=0.0):
    """Read off a spectrum's phase as a PhaseConstraint.

    Bins whose magnitude falls below ``magnitude_floor`` times the peak
    magnitude are excluded from the mask.  A zero floor keeps every bin.  A
    small positive floor restricts the constraint to the transform's main
    lobe, which sidesteps the pi ambiguity where a blur kernel's transform
    dips negative.  The DC bin is always kept, and the mask is symmetrized
    (a bin survives only if its mirror does) so projections stay real.
    """
    arr = _validate_spectrum(spec)
    if magnitude_floor < 0:
        raise InvalidArgumentError("magnitude_floor must be >= 0")
    mag = np.abs(arr)
    mask = mag >= magnitude_floor * mag.max()
    mask &= _reflect(mask)
    mask[0, 0] = True
    # angle of the hermitianized field: equals angle(arr) wherever the phase
    # is well defined, but stays exactly conjugate-antisymmetric even on bins
    # whose magnitude is at rounding level (raw angles there are noise)
    phase = np.angle(arr + np.conj(_reflect(arr)))
    return PhaseConstraint(phase=phase, mask=mask)


def apply_phase_constraint(spec, pc):
    """Replace a spectrum's phase with the prescribed one on masked bins.

    Magnitudes are untouched; unmasked bins pass through.  Zero-magnitude
    bins come out exactly zero.
    """
    arr = _validate_spectrum(spec)
    if arr.shape != pc.shape:
        raise InvalidArgumentError(f"spectrum {arr.shape} vs constraint {pc.shape}")
    out = arr.copy()
    m = pc.mask
    out[m] = np.abs(arr[m]) * np.exp(1j * pc.phase[m])
    return out


def project_phase(img, pc):
    """Map an image onto the set with the prescribed FT phase."""
    arr = validate_image(img)
    if arr.shape != pc.shape:
        raise InvalidArgumentError(f"image {arr.shape} vs constraint {pc.shape}")
    return idft2(apply_phase_constraint(np.fft.fft2(arr), pc))


def phase_only_image(img, c=1.0):
    """Image whose spectrum has unit magnitude (scaled by c) and img's phase.

    Edges of the original survive in this image, which is what makes the
    phase constraint informative for restoration.
    """
    arr = validate_image(img)
    if c <= 0:
        raise InvalidArgumentError("c must be > 0")
    unit = np.exp(1j * np.angle(np.fft.fft2(arr)))
    # hermitianize: bins where the input transform vanishes carry meaningless
    # angles, and exponentiating them would leak an imaginary part into the
    # output; averaging with the mirrored conjugate restores exact symmetry
    # and leaves well-defined bins untouched
    spec = c * 0.5 * (unit + np.conj(_reflect(unit)))
    return idft2(spec)


def reconstruct_from_phase(pc, support, iters, seed=0, x0=None):
    """Recover an image from its FT phase by alternating projections.

    Repeats {impose prescribed phase; zero outside support; clamp negatives}
    starting from a seeded uniform-random positive image inside the support
    (or from ``x0`` when given).  With known support the original is
    recoverable up to a positive scale factor.
    """
    support = np.asarray(support, dtype=bool)
    if support.ndim != 2 or support.shape != pc.shape:
        raise InvalidArgumentError("support must be 2D and match the constraint dims")
    if not support.any():
        raise InvalidArgumentError("support is empty")
    if iters < 1:
        raise InvalidArgumentError("iters must be >= 1")

    if x0 is not None:
        x = validate_image(x0, "x0").copy()
    else:
        rng = np.random.default_rng(seed)
        # uniform in (0, 1]: the loop must not start from an all-zero image
        x = (1.0 - rng.random(pc.shape)) * support

    for _ in range(iters):
        x = project_phase(x, pc)
        x[~support] = 0.0
        np.maximum(x, 0.0, out=x)
    return x
