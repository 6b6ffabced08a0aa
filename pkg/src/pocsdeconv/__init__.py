"""Blind deconvolution with Fourier-phase and TV-epigraph projections.

The observation model is a circular convolution y = h * x_o with a
symmetric nonnegative blur kernel.  Restoration alternates Wiener-style
spectrum updates with projections onto convex constraint sets: image
positivity and support, kernel admissibility, optionally the set of images
sharing the observation's Fourier phase on strong bins, and the epigraph
of total variation.  ``simulate`` synthesizes phantoms and scores PSNR,
``imageio`` reads and writes PNG/PGM, and ``cli`` fronts everything from
the command line (``python3 -m pocsdeconv --help``).
"""

from .deconv import (
    DeconvConfig,
    DeconvResult,
    ayers_dainty,
    impose_image_constraints,
    impose_kernel_constraints,
    modified_blind_deconv,
    wiener_update_image,
    wiener_update_kernel,
)
from .errors import (
    InvalidArgumentError,
    SymmetryViolationError,
    UnsupportedImageFormatError,
)
from .imageio import RasterFile, RasterFormat, load_image, write_image
from .simulate import (
    ExperimentReport,
    ExperimentRow,
    Kernel,
    add_noise,
    blur,
    delta_kernel,
    gaussian_kernel,
    make_phantom,
    psnr,
    uniform_kernel,
)
from .spectral import (
    PhaseConstraint,
    apply_phase_constraint,
    dft2,
    extract_phase,
    idft2,
    phase_only_image,
    project_phase,
    reconstruct_from_phase,
)
from .tv import (
    KERNEL_BACKEND,
    EpigraphProjectionResult,
    project_epigraph,
    project_tv_ball,
    tv,
    tv_subgradient,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    "PhaseConstraint",
    "dft2",
    "idft2",
    "extract_phase",
    "apply_phase_constraint",
    "project_phase",
    "phase_only_image",
    "reconstruct_from_phase",
    "EpigraphProjectionResult",
    "tv",
    "tv_subgradient",
    "project_epigraph",
    "project_tv_ball",
    "DeconvConfig",
    "DeconvResult",
    "wiener_update_kernel",
    "wiener_update_image",
    "impose_image_constraints",
    "impose_kernel_constraints",
    "ayers_dainty",
    "modified_blind_deconv",
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
    "RasterFormat",
    "RasterFile",
    "load_image",
    "write_image",
    "InvalidArgumentError",
    "SymmetryViolationError",
    "UnsupportedImageFormatError",
]
