"""End-to-end tests for the command-line interface, run in-process."""

import math

import numpy as np
import pytest

import pocsdeconv.cli as cli
from pocsdeconv.deconv import DeconvResult
from pocsdeconv.imageio import load_image, write_image
from pocsdeconv.simulate import blur, delta_kernel, gaussian_kernel, make_phantom, psnr


def run_cli(argv):
    # argparse-level failures raise SystemExit; ours return the code
    try:
        return cli.main(argv)
    except SystemExit as exc:
        return exc.code


def parse_stdout(capsys):
    out = {}
    for line in capsys.readouterr().out.splitlines():
        key, _, value = line.partition("=")
        out[key] = value
    return out


class TestBlur:
    def test_gaussian_blur_reduces_tv_and_psnr(self, tmp_path, capsys):
        out = tmp_path / "b.png"
        code = run_cli(["blur", "--phantom", "cells", "--size", "32",
                        "--kernel", "gaussian", "--d", "5", "--sigma", "3",
                        "-o", str(out)])
        assert code == 0
        got = parse_stdout(capsys)
        assert float(got["psnr_vs_input_db"]) < 40.0
        assert float(got["tv_output"]) <= float(got["tv_input"])
        assert out.exists()

    def test_d_zero_is_usage_error(self, tmp_path, capsys):
        code = run_cli(["blur", "--phantom", "cells", "--kernel", "gaussian",
                        "--d", "0", "--sigma", "3", "-o", str(tmp_path / "x.png")])
        assert code == 2
        assert "usage" in capsys.readouterr().err

    def test_delta_kernel_is_identity(self, tmp_path, capsys):
        src = tmp_path / "src.png"
        write_image(make_phantom("cells", (24, 24), seed=2), src, depth=8)
        out = tmp_path / "out.png"
        code = run_cli(["blur", str(src), "--kernel", "delta", "--d", "1", "-o", str(out)])
        assert code == 0
        assert np.array_equal(load_image(out), load_image(src))

    def test_noise_flag_changes_output(self, tmp_path, capsys):
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        base = ["blur", "--phantom", "cells", "--size", "24",
                "--kernel", "gaussian", "--d", "2", "--sigma", "1"]
        assert run_cli(base + ["-o", str(a)]) == 0
        assert run_cli(base + ["--noise-sigma", "0.05", "-o", str(b)]) == 0
        assert not np.array_equal(load_image(a), load_image(b))

    def test_missing_input_is_io_error(self, tmp_path, capsys):
        code = run_cli(["blur", str(tmp_path / "nope.png"), "--kernel", "delta",
                        "-o", str(tmp_path / "x.png")])
        assert code == 1

    def test_both_input_and_phantom_is_usage_error(self, tmp_path, capsys):
        code = run_cli(["blur", str(tmp_path / "a.png"), "--phantom", "cells",
                        "--kernel", "delta", "-o", str(tmp_path / "x.png")])
        assert code == 2

    def test_bad_output_suffix_is_usage_error(self, tmp_path, capsys):
        code = run_cli(["blur", "--phantom", "cells", "--kernel", "delta",
                        "-o", str(tmp_path / "x.tiff")])
        assert code == 2


class TestDeblur:
    @pytest.fixture
    def blurred_pair(self, tmp_path):
        truth = make_phantom("cells", (32, 32), seed=3)
        y = blur(truth, gaussian_kernel(2, 1.5))
        ref = tmp_path / "ref.png"
        obs = tmp_path / "obs.png"
        write_image(truth, ref, depth=8)
        write_image(y, obs, depth=8)
        return ref, obs

    def test_modified_beats_blurred_input(self, tmp_path, capsys, blurred_pair):
        ref, obs = blurred_pair
        out = tmp_path / "restored.png"
        code = run_cli(["deblur", str(obs), "--method", "modified", "--alpha", "0.01",
                        "--iters", "80", "--kernel-support", "5",
                        "--reference", str(ref), "-o", str(out)])
        assert code == 0
        got = parse_stdout(capsys)
        blurred_psnr = psnr(load_image(ref), load_image(obs))
        assert float(got["psnr_db"]) > blurred_psnr
        assert got["diverged"] == "0"
        assert int(got["iterations"]) >= 1

    def test_writes_kernel_image_at_default_path(self, tmp_path, capsys, blurred_pair):
        _, obs = blurred_pair
        out = tmp_path / "r.png"
        code = run_cli(["deblur", str(obs), "--iters", "5", "-o", str(out)])
        assert code == 0
        kernel_img = load_image(tmp_path / "r.kernel.png")
        assert kernel_img.max() == 1.0  # peak-normalized taps

    def test_iters_zero_is_usage_error(self, tmp_path, capsys, blurred_pair):
        _, obs = blurred_pair
        code = run_cli(["deblur", str(obs), "--iters", "0", "-o", str(tmp_path / "x.png")])
        assert code == 2

    def test_same_seed_twice_is_byte_identical(self, tmp_path, capsys, blurred_pair):
        _, obs = blurred_pair
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        args = ["deblur", str(obs), "--iters", "40", "--seed", "5"]
        assert run_cli(args + ["-o", str(a)]) == 0
        assert run_cli(args + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.kernel.png").read_bytes() == (tmp_path / "b.kernel.png").read_bytes()

    def test_diverged_run_exits_3_but_writes_image(self, tmp_path, capsys, blurred_pair, monkeypatch):
        _, obs = blurred_pair
        fake = DeconvResult(
            image_estimate=np.zeros((32, 32)),
            kernel_estimate=delta_kernel(1),
            iterations_used=1,
            per_iteration_change=(math.inf,),
        )
        monkeypatch.setattr(cli, "modified_blind_deconv", lambda y, cfg: fake)
        out = tmp_path / "r.png"
        code = run_cli(["deblur", str(obs), "--iters", "5", "-o", str(out)])
        assert code == 3
        assert out.exists()
        assert parse_stdout(capsys)["diverged"] == "1"


class TestPhaseDemo:
    def test_zero_noise_variants_are_identical(self, tmp_path, capsys):
        prefix = tmp_path / "demo"
        code = run_cli(["phase-demo", "--phantom", "cells", "--size", "24",
                        "--noise-sigma", "0", "--out-prefix", str(prefix)])
        assert code == 0
        phase = (tmp_path / "demo_phase.png").read_bytes()
        phase_noisy = (tmp_path / "demo_phase_noisy.png").read_bytes()
        assert phase == phase_noisy

    def test_outputs_written_and_reloadable(self, tmp_path, capsys):
        prefix = tmp_path / "demo"
        code = run_cli(["phase-demo", "--phantom", "cells", "--size", "24",
                        "--out-prefix", str(prefix)])
        assert code == 0
        got = parse_stdout(capsys)
        paths = [v for k, v in got.items() if k == "wrote"] or list(got.values())
        for suffix in ("_noisy.png", "_phase.png", "_phase_noisy.png"):
            img = load_image(str(prefix) + suffix)
            assert img.shape == (24, 24)
            assert np.all((img >= 0) & (img <= 1))

    def test_step_edge_survives_in_phase_only_profile(self, tmp_path, capsys):
        # periodization makes the wrap column a second sharp edge, and the
        # step's empty spectrum rows alias into the corner pixel, so locality
        # is measured on the row-summed profile where those bins cancel
        prefix = tmp_path / "step"
        code = run_cli(["phase-demo", "--phantom", "step", "--size", "32",
                        "--noise-sigma", "0", "--out-prefix", str(prefix)])
        assert code == 0
        truth = make_phantom("step", (32, 32), seed=0)
        edge = int(np.argmax(np.abs(np.diff(truth, axis=1)).sum(axis=0)))
        profile = load_image(str(prefix) + "_phase.png").sum(axis=0)
        grad = np.abs(np.roll(profile, -1) - profile)
        top2 = set(np.argsort(grad)[-2:].tolist())
        assert top2 == {edge, 31}

    def test_nonpositive_c_is_usage_error(self, tmp_path, capsys):
        code = run_cli(["phase-demo", "--phantom", "cells", "--size", "24",
                        "--c", "0", "--out-prefix", str(tmp_path / "x")])
        assert code == 2


@pytest.fixture(scope="module")
def grid_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("grid")
    spec = root / "grid.spec"
    outdir = root / "out"
    spec.write_text(
        "# four phantoms, one kernel cell, both methods\n"
        "phantoms = cells:32:0, cells:32:1, cells:32:2, cells:32:3\n"
        "kernel = gaussian\n"
        "d = 5\n"
        "sigma = 3\n"
        "methods = ayers, modified\n"
        "iters = 25\n"
        f"outdir = {outdir}\n"
    )
    code = cli.main(["experiment", str(spec)])
    return code, spec, outdir


class TestExperiment:
    def test_exit_ok(self, grid_run):
        assert grid_run[0] == 0

    def test_csv_has_schema_and_eight_rows(self, grid_run):
        lines = (grid_run[2] / "report.csv").read_text().splitlines()
        assert lines[0] == "image_id,kernel,d,sigma,method,psnr_db,iterations,wall_time_s"
        assert len(lines) == 9
        for line in lines[1:]:
            fields = line.split(",")
            assert len(fields) == 8
            assert fields[1] == "gaussian" and fields[2] == "5" and fields[3] == "3"
            assert fields[4] in ("ayers", "modified")
            float(fields[5])
            assert fields[7] == "0.000"  # timing is opt-in, reruns stay identical

    def test_rows_sorted_by_key(self, grid_run):
        lines = (grid_run[2] / "report.csv").read_text().splitlines()[1:]
        keys = [tuple(line.split(",")[:5]) for line in lines]
        assert keys == sorted(keys)

    def test_summary_bolds_one_winner_per_cell(self, grid_run):
        body = (grid_run[2] / "summary.md").read_text()
        rows = [l for l in body.splitlines() if l.startswith("| cells-")]
        assert len(rows) == 4
        for row in rows:
            assert row.count("**") == 2  # one bold entry

    def test_rerun_is_byte_identical(self, grid_run):
        code, spec, outdir = grid_run
        first = (outdir / "report.csv").read_bytes()
        assert cli.main(["experiment", str(spec)]) == 0
        assert (outdir / "report.csv").read_bytes() == first

    def test_parallel_run_matches_serial(self, tmp_path):
        spec = tmp_path / "p.spec"
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        base = (
            "phantoms = cells:24:0, cells:24:1\n"
            "kernel = gaussian\nd = 2\nsigma = 1.5\n"
            "methods = ayers, modified\niters = 12\n"
        )
        spec.write_text(base + f"outdir = {out_a}\n")
        assert cli.main(["experiment", str(spec)]) == 0
        spec.write_text(base + f"outdir = {out_b}\n")
        assert cli.main(["experiment", str(spec), "--threads", "2"]) == 0
        assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()

    def test_unknown_key_is_usage_error(self, tmp_path, capsys):
        spec = tmp_path / "bad.spec"
        spec.write_text("phantoms = cells:32:0\nwat = 7\n")
        assert run_cli(["experiment", str(spec)]) == 2

    def test_unknown_method_is_usage_error(self, tmp_path, capsys):
        spec = tmp_path / "bad.spec"
        spec.write_text("phantoms = cells:32:0\nmethods = warp\n")
        assert run_cli(["experiment", str(spec)]) == 2

    def test_missing_spec_is_io_error(self, tmp_path, capsys):
        assert run_cli(["experiment", str(tmp_path / "none.spec")]) == 1

    def test_spec_without_sources_is_usage_error(self, tmp_path, capsys):
        spec = tmp_path / "empty.spec"
        spec.write_text("kernel = gaussian\n")
        assert run_cli(["experiment", str(spec)]) == 2

    def test_image_sources_accepted(self, tmp_path, capsys):
        img = tmp_path / "scan.png"
        write_image(make_phantom("cells", (24, 24), seed=4), img, depth=8)
        spec = tmp_path / "img.spec"
        outdir = tmp_path / "out"
        spec.write_text(
            f"images = {img}\nkernel = uniform\nd = 2\n"
            f"methods = modified\niters = 8\noutdir = {outdir}\n"
        )
        assert cli.main(["experiment", str(spec)]) == 0
        lines = (outdir / "report.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("scan,uniform,2,0,modified,")
