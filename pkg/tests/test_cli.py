import json
import subprocess
import sys

import pytest

from fractalvdc.cli import main, read_config
from fractalvdc.errors import ValidationError
from fractalvdc.io import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_delta_out_of_domain_exits_2(capsys, outdir):
    code, _, err = run(capsys, "decay", "--delta", "0.5")
    assert code == 2 and "1/200" in err
    assert not list(outdir.iterdir())


def test_unknown_flag_exits_2(capsys, outdir):
    code, _, err = run(capsys, "decay", "--bogus")
    assert code == 2 and "usage" in err


def test_budget_exits_3(capsys, outdir):
    assert run(capsys, "decay", "--depth", "40")[0] == 3
    assert run(capsys, "blocks", "--n", "14")[0] == 3


def test_scale_error_exits_2(capsys, outdir):
    code, _, err = run(capsys, "census", "--kind", "derivative", "--n", "6", "--sigma", "1e-9")
    assert code == 2 and "sigma" in err


def test_decay_writes_spectrum_and_fit(capsys, outdir):
    code, out, _ = run(capsys, "decay", "--xi-min", "100", "--xi-max", "1e5", "--points", "16")
    assert code == 0
    rows = read_csv(outdir / "spectrum.csv")
    assert len(rows) == 16 and set(rows[0]) >= {"xi", "abs", "error_bound", "depth"}
    fit = json.loads((outdir / "spectrum.fit.json").read_text())
    assert fit["rho"] > 0 and fit["provenance"]["config"]["points"] == 16
    first = (outdir / "spectrum.csv").read_text().splitlines()[0]
    assert first.startswith("# ") and "wall" not in first


def test_config_file_with_flag_override(capsys, outdir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# couples run\nn = 6\nsamples = 7\nseed = 4\n")
    code, _, _ = run(capsys, "couples", "--config", str(cfg), "--n", "8")
    assert code == 0
    obj = json.loads((outdir / "couples.json").read_text())
    assert obj["n"] == 8 and obj["samples"] == 7 and obj["provenance"]["config"]["seed"] == 4
    cfg.write_text("colour = red\n")
    assert run(capsys, "couples", "--config", str(cfg))[0] == 2
    cfg.write_text("justtext\n")
    with pytest.raises(ValidationError):
        read_config(cfg)


COMMANDS = [
    ["decay", "--xi-min", "100", "--xi-max", "1e5", "--points", "14"],
    ["census", "--kind", "pairs", "--n", "6"],
    ["census", "--kind", "birkhoff", "--n", "6", "--sigma", "0.5", "--samples", "300", "--format", "csv"],
    ["census", "--kind", "rademacher", "--n", "8"],
    ["couples", "--n", "6", "--samples", "5"],
    ["blocks", "--n", "5", "--samples", "50"],
    ["sumproduct", "--n", "4", "--k", "2", "--points", "3"],
    ["linearize", "--n", "4", "--configs", "100"],
    ["brownian", "--N", "50", "--M", "1024", "--seeds", "3"],
    ["conjugacy", "--points", "100", "--depth", "20"],
    ["measure", "--depth", "20", "--grid", "101", "--x", "0.1,0.5"],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: "-".join(a[:3]))
def test_repeated_runs_are_byte_identical(capsys, outdir, argv):
    code, out, _ = run(capsys, *argv, "--seed", "5", "--threads", "1")
    assert code == 0
    paths = out.split()
    first = {p: open(p, "rb").read() for p in paths}
    code, out2, _ = run(capsys, *argv, "--seed", "5", "--threads", "1")
    assert code == 0 and out2.split() == paths
    assert {p: open(p, "rb").read() for p in paths} == first


def test_absolute_output_ignores_env_dir(capsys, outdir, tmp_path):
    target = tmp_path / "elsewhere" / "psi.csv"
    target.parent.mkdir()
    code, out, _ = run(capsys, "conjugacy", "--points", "10", "-o", str(target))
    assert code == 0 and out.strip() == str(target)


def test_console_script(outdir):
    proc = subprocess.run(
        [sys.executable, "-m", "fractalvdc.cli", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout.startswith("fractalvdc ")
