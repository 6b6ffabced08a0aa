"""Command-line front end: blur synthesis, deblurring, a phase demo, and a
PSNR benchmark grid.

Exit codes are shared by all subcommands: 0 success, 1 file problems
(missing, undecodable, unwritable), 2 invalid arguments or spec contents,
3 a deblur run whose change trace went non-finite (the result image is
still written).  stdout carries ``key=value`` result lines only;
diagnostics go to stderr.

Experiment spec files use a flat key = value grammar, one pair per line;
'#' starts a comment and lists are comma-separated::

    phantoms = cells:64:0, cells:64:1   # kind:size:seed triples
    # images = scans/a.png              # alternative to phantoms
    kernel = gaussian                   # or uniform
    d = 5, 10, 15
    sigma = 1, 2, 3                     # ignored for uniform (rows carry 0)
    methods = ayers, modified           # also modified-phase-only / modified-estv-only
    iters = 300
    alpha = 0.01
    lambda = 0.01
    phase_floor = 0.05
    kernel_support = auto               # auto means a (2d+1)^2 box per cell
    seed = 0
    outdir = results

``alpha`` here defaults to 0.01, heavier damping than the library default:
long fixed-iteration batch runs are scored at their final iterate, which
favors stability over per-step refinement.  Each grid cell is independent
and deterministic, so reruns of the same spec produce identical reports
(wall times are written as 0.000 unless --time is given).
"""

import argparse
import csv
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .deconv import DeconvConfig, ayers_dainty, modified_blind_deconv
from .errors import InvalidArgumentError, UnsupportedImageFormatError
from .imageio import load_image, write_image
from .simulate import (
    PHANTOM_KINDS,
    ExperimentReport,
    ExperimentRow,
    add_noise,
    blur,
    delta_kernel,
    gaussian_kernel,
    make_phantom,
    psnr,
    uniform_kernel,
)
from .spectral import phase_only_image
from .tv import tv

__all__ = ["ExperimentSpec", "parse_spec_file", "main"]

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

_CSV_HEADER = ("image_id", "kernel", "d", "sigma", "method", "psnr_db", "iterations", "wall_time_s")

# method name -> (use_phase, use_estv); "ayers" runs the unmodified loop
_METHODS = {
    "ayers": (False, False),
    "modified": (True, True),
    "modified-phase-only": (True, False),
    "modified-estv-only": (False, True),
}

_HARNESS_DEFAULTS = {
    "iters": 300,
    "alpha": 0.01,
    "lambda": 0.01,
    "phase_floor": 0.05,
    "kernel_support": "auto",
    "seed": 0,
    "outdir": ".",
}


# ---------------------------------------------------------------- helpers

def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _kernel_support_arg(text):
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K or K1,K2, got {text!r}")
    if len(parts) == 1:
        parts = (parts[0], parts[0])
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected K or K1,K2, got {text!r}")
    return parts


def _add_source_args(parser):
    parser.add_argument("input", nargs="?", default=None, help="input image (PNG or PGM)")
    parser.add_argument("--phantom", choices=PHANTOM_KINDS, default=None,
                        help="synthesize the input instead of reading a file")
    parser.add_argument("--size", type=_positive_int, default=64, help="phantom side length")
    parser.add_argument("--phantom-seed", type=int, default=0, help="phantom synthesis seed")


def _resolve_source(args):
    if (args.input is None) == (args.phantom is None):
        raise InvalidArgumentError("give exactly one input: a file path or --phantom")
    if args.input is not None:
        return load_image(args.input)
    return make_phantom(args.phantom, (args.size, args.size), seed=args.phantom_seed)


def _check_output_suffix(path):
    if Path(path).suffix.lower() not in (".png", ".pgm"):
        raise InvalidArgumentError(f"output must end in .png or .pgm, got {path!r}")


def _make_kernel(kind, d, sigma):
    if kind == "gaussian":
        return gaussian_kernel(d, sigma)
    if kind == "uniform":
        return uniform_kernel(d)
    return delta_kernel(d)


def _fmt(value, spec="%.6f"):
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return spec % value


def _normalize_display(img):
    lo, hi = float(img.min()), float(img.max())
    if hi <= lo:
        return img * 0.0
    return (img - lo) / (hi - lo)


# ------------------------------------------------------------ subcommands

def _cmd_blur(args):
    _check_output_suffix(args.output)
    original = _resolve_source(args)
    kernel = _make_kernel(args.kernel, args.d, args.sigma)
    out = blur(original, kernel)
    if args.noise_sigma > 0:
        out = add_noise(out, args.noise_sigma, seed=args.noise_seed)
    write_image(out, args.output, depth=args.depth)
    print(f"tv_input={_fmt(tv(original))}")
    print(f"tv_output={_fmt(tv(out))}")
    print(f"psnr_vs_input_db={_fmt(psnr(original, out))}")
    return EXIT_OK


def _cmd_deblur(args):
    _check_output_suffix(args.output)
    kernel_out = args.kernel_out or str(Path(args.output).with_suffix(".kernel.png"))
    _check_output_suffix(kernel_out)
    y = load_image(args.input)
    reference = load_image(args.reference) if args.reference else None
    cfg = DeconvConfig(
        alpha=args.alpha,
        max_iters=args.iters,
        lam=args.lam,
        phase_floor=args.phase_floor,
        seed=args.seed,
        kernel_support=args.kernel_support,
    )
    run = ayers_dainty if args.method == "ayers" else modified_blind_deconv
    result = run(y, cfg)

    write_image(result.image_estimate, args.output, depth=args.depth)
    taps = result.kernel_estimate.data
    write_image(taps / taps.max(), kernel_out, depth=16)  # peak-normalized for display

    scale = float((result.image_estimate ** 2).sum()) ** 0.5
    last = result.per_iteration_change[-1] if result.per_iteration_change else 0.0
    rel = last / scale if scale > 0 else last
    print(f"iterations={result.iterations_used}")
    print(f"final_change={_fmt(rel, '%.6e')}")
    print(f"diverged={int(result.diverged)}")
    if reference is not None:
        print(f"psnr_db={_fmt(psnr(reference, result.image_estimate))}")
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _cmd_phase_demo(args):
    original = _resolve_source(args)
    # noise level is quoted on the 8-bit scale, like sigma = 30 on a 255 image
    noisy = add_noise(original, args.noise_sigma / 255.0, seed=args.noise_seed)
    outputs = (
        (f"{args.out_prefix}_noisy.png", _normalize_display(noisy)),
        (f"{args.out_prefix}_phase.png", _normalize_display(phase_only_image(original, args.c))),
        (f"{args.out_prefix}_phase_noisy.png", _normalize_display(phase_only_image(noisy, args.c))),
    )
    for path, img in outputs:
        write_image(img, path, depth=args.depth)
        print(f"wrote={path}")
    return EXIT_OK


def _cmd_experiment(args):
    spec = parse_spec_file(args.specfile)
    outdir = Path(spec.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    cells = _grid_cells(spec, timed=args.time)
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            outcomes = list(pool.map(_run_cell, cells))
    else:
        outcomes = [_run_cell(cell) for cell in cells]

    # cells may arrive in any order from the pool; sort for stable output
    outcomes.sort(key=lambda rd: _row_key(rd[0]))
    report = ExperimentReport(rows=tuple(row for row, _ in outcomes))
    diverged = {_row_key(row) for row, div in outcomes if div}

    csv_path = outdir / "report.csv"
    md_path = outdir / "summary.md"
    _write_csv(csv_path, report.rows)
    _write_summary(md_path, report.rows, diverged, spec)
    print(f"rows={len(report.rows)}")
    print(f"diverged={len(diverged)}")
    print(f"csv={csv_path}")
    print(f"summary={md_path}")
    return EXIT_OK


# ----------------------------------------------------- experiment harness

@dataclass(frozen=True)
class ExperimentSpec:
    """A parsed benchmark grid: sources x kernels x methods plus loop knobs."""

    phantoms: tuple = ()
    images: tuple = ()
    kernel: str = "gaussian"
    d: tuple = (5, 10, 15)
    sigma: tuple = (1.0, 2.0, 3.0)
    methods: tuple = ("ayers", "modified")
    iters: int = 300
    alpha: float = 0.01
    lam: float = 0.01
    phase_floor: float = 0.05
    kernel_support: int = 0  # 0 means auto: a (2d+1)^2 box per cell
    seed: int = 0
    outdir: str = "."

    def __post_init__(self):
        if not self.phantoms and not self.images:
            raise InvalidArgumentError("spec needs phantoms or images")
        for kind, size, seed in self.phantoms:
            if kind not in PHANTOM_KINDS:
                raise InvalidArgumentError(f"unknown phantom kind {kind!r}")
            if size < 16:
                raise InvalidArgumentError(f"phantom size must be >= 16, got {size}")
        if self.kernel not in ("gaussian", "uniform"):
            raise InvalidArgumentError(f"kernel must be gaussian or uniform, got {self.kernel!r}")
        if not self.d or any(dd < 1 for dd in self.d):
            raise InvalidArgumentError("d must be a non-empty list of positive integers")
        if self.kernel == "gaussian" and (not self.sigma or any(s <= 0 for s in self.sigma)):
            raise InvalidArgumentError("sigma must be a non-empty list of positive values")
        if not self.methods:
            raise InvalidArgumentError("methods must be non-empty")
        for m in self.methods:
            if m not in _METHODS:
                raise InvalidArgumentError(f"unknown method {m!r} (choose from {sorted(_METHODS)})")
        if self.iters < 1:
            raise InvalidArgumentError(f"iters must be >= 1, got {self.iters}")
        if self.kernel_support and (self.kernel_support < 1 or self.kernel_support % 2 == 0):
            raise InvalidArgumentError("kernel_support must be auto or an odd positive integer")


def parse_spec_file(path):
    """Read and validate an experiment spec; see the module docstring grammar."""
    text = Path(path).read_text()
    data = dict(_HARNESS_DEFAULTS)
    known = set(data) | {"phantoms", "images", "kernel", "d", "sigma", "methods"}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key or not value:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 'key = value'")
        if key not in known:
            raise InvalidArgumentError(f"{path}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise InvalidArgumentError(f"{path}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        data[key] = value

    def split(key):
        return tuple(p.strip() for p in data.get(key, "").split(",") if p.strip())

    try:
        phantoms = tuple(_parse_phantom(entry) for entry in split("phantoms"))
        ks_raw = data["kernel_support"]
        return ExperimentSpec(
            phantoms=phantoms,
            images=split("images"),
            kernel=data.get("kernel", "gaussian"),
            d=tuple(int(v) for v in split("d")) or (5, 10, 15),
            sigma=tuple(float(v) for v in split("sigma")) or (1.0, 2.0, 3.0),
            methods=split("methods") or ("ayers", "modified"),
            iters=int(data["iters"]),
            alpha=float(data["alpha"]),
            lam=float(data["lambda"]),
            phase_floor=float(data["phase_floor"]),
            kernel_support=0 if ks_raw == "auto" else int(ks_raw),
            seed=int(data["seed"]),
            outdir=data["outdir"],
        )
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from exc


def _parse_phantom(entry):
    parts = entry.split(":")
    if len(parts) != 3:
        raise InvalidArgumentError(f"phantom entry must be kind:size:seed, got {entry!r}")
    return parts[0], int(parts[1]), int(parts[2])


def _grid_cells(spec, timed):
    sources = [("phantom", kind, size, seed, f"{kind}-{size}-s{seed}")
               for kind, size, seed in spec.phantoms]
    sources += [("file", path, 0, 0, Path(path).stem) for path in spec.images]
    sigmas = spec.sigma if spec.kernel == "gaussian" else (0.0,)
    cells = []
    for source in sources:
        for d in spec.d:
            for sigma in sigmas:
                for method in spec.methods:
                    cells.append({
                        "source": source,
                        "kernel": spec.kernel,
                        "d": d,
                        "sigma": sigma,
                        "method": method,
                        "iters": spec.iters,
                        "alpha": spec.alpha,
                        "lam": spec.lam,
                        "phase_floor": spec.phase_floor,
                        "kernel_support": spec.kernel_support,
                        "seed": spec.seed,
                        "timed": timed,
                    })
    return cells


def _run_cell(cell):
    """One grid cell: synthesize, blur, deconvolve, score. Fully independent."""
    mode, a, b, c, image_id = cell["source"]
    truth = make_phantom(a, (b, b), seed=c) if mode == "phantom" else load_image(a)
    d, sigma = cell["d"], cell["sigma"]
    kernel = gaussian_kernel(d, sigma) if cell["kernel"] == "gaussian" else uniform_kernel(d)
    y = blur(truth, kernel)

    box = cell["kernel_support"] or (2 * d + 1)
    use_phase, use_estv = _METHODS[cell["method"]]
    cfg = DeconvConfig(
        alpha=cell["alpha"],
        max_iters=cell["iters"],
        lam=cell["lam"],
        phase_floor=cell["phase_floor"],
        seed=cell["seed"],
        kernel_support=(box, box),
        use_phase=use_phase,
        use_estv=use_estv,
    )
    run = ayers_dainty if cell["method"] == "ayers" else modified_blind_deconv
    start = time.perf_counter()
    result = run(y, cfg)
    wall = time.perf_counter() - start if cell["timed"] else 0.0

    row = ExperimentRow(
        image_id=image_id,
        kernel_type=cell["kernel"],
        d=d,
        sigma=sigma,
        method=cell["method"],
        psnr_db=psnr(truth, result.image_estimate),
        iterations=result.iterations_used,
        wall_time_s=wall,
    )
    return row, result.diverged


def _row_key(row):
    return (row.image_id, row.kernel_type, row.d, row.sigma, row.method)


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for row in rows:
            writer.writerow([
                row.image_id,
                row.kernel_type,
                row.d,
                "%g" % row.sigma,
                row.method,
                _fmt(row.psnr_db),
                row.iterations,
                "%.3f" % row.wall_time_s,
            ])


def _write_summary(path, rows, diverged, spec):
    # one line per (image, d, sigma) cell, one column per method, best bold
    methods = list(spec.methods)
    cells = {}
    for row in rows:
        cells.setdefault((row.image_id, row.d, row.sigma), {})[row.method] = row

    lines = [
        "# Restoration PSNR (dB)",
        "",
        f"Kernel: {spec.kernel}, {spec.iters} iterations per run. Bold marks the",
        "best method in each row; a dagger marks a run whose iterate went",
        "non-finite (the score is for its last finite iterate).",
        "",
        "| image | d | sigma | " + " | ".join(methods) + " |",
        "|---|---:|---:|" + "---:|" * len(methods),
    ]
    for key in sorted(cells):
        image_id, d, sigma = key
        by_method = cells[key]
        best = max(by_method.values(), key=lambda r: r.psnr_db).psnr_db
        entries = []
        for m in methods:
            row = by_method.get(m)
            if row is None:
                entries.append("-")
                continue
            text = _fmt(row.psnr_db, "%.2f")
            if _row_key(row) in diverged:
                text += "†"
            entries.append(f"**{text}**" if row.psnr_db == best else text)
        lines.append(f"| {image_id} | {d} | {'%g' % sigma} | " + " | ".join(entries) + " |")
    Path(path).write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------- parser

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pocsdeconv",
        description="Blind deconvolution by projections onto convex sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("blur", help="blur an image or phantom with a synthetic kernel")
    _add_source_args(p)
    p.add_argument("--kernel", choices=("gaussian", "uniform", "delta"), required=True)
    p.add_argument("--d", type=_positive_int, default=1, help="kernel radius")
    p.add_argument("--sigma", type=float, default=1.0, help="gaussian width")
    p.add_argument("--noise-sigma", type=float, default=0.0, help="additive noise std on the [0,1] scale")
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--depth", type=int, choices=(8, 16), default=8)
    p.set_defaults(handler=_cmd_blur)

    p = sub.add_parser("deblur", help="restore a blurred image")
    p.add_argument("input")
    p.add_argument("--method", choices=("ayers", "modified"), default="modified")
    p.add_argument("--alpha", type=float, default=DeconvConfig.alpha)
    p.add_argument("--lambda", dest="lam", type=float, default=DeconvConfig.lam)
    p.add_argument("--iters", dest="iters", type=int, default=DeconvConfig.max_iters)
    p.add_argument("--phase-floor", type=float, default=DeconvConfig.phase_floor)
    p.add_argument("--seed", type=int, default=DeconvConfig.seed)
    p.add_argument("--kernel-support", type=_kernel_support_arg, default=DeconvConfig.kernel_support,
                   help="odd box K or K1,K2 the kernel estimate is confined to")
    p.add_argument("--reference", default=None, help="ground truth for PSNR reporting")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--kernel-out", default=None, help="kernel image path (default: OUTPUT.kernel.png)")
    p.add_argument("--depth", type=int, choices=(8, 16), default=8)
    p.set_defaults(handler=_cmd_deblur)

    p = sub.add_parser("phase-demo", help="phase-only images of an input and its noisy version")
    _add_source_args(p)
    p.add_argument("--c", type=float, default=1.0, help="spectrum magnitude constant")
    p.add_argument("--noise-sigma", type=float, default=30.0, help="noise std on the 8-bit scale")
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--depth", type=int, choices=(8, 16), default=8)
    p.set_defaults(handler=_cmd_phase_demo)

    p = sub.add_parser("experiment", help="run a spec-file benchmark grid, write CSV and markdown")
    p.add_argument("specfile")
    p.add_argument("--threads", type=_positive_int, default=1, help="parallel worker processes")
    p.add_argument("--time", action="store_true", help="record real wall times (breaks byte-identical reruns)")
    p.set_defaults(handler=_cmd_experiment)

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, UnsupportedImageFormatError) as exc:
        # file-level failures: missing, unreadable, undecodable, unwritable
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
