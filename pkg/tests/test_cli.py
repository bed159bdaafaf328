import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from frameoma import io
from frameoma.cli import main
from frameoma.config import OUTPUT_ENV

# a quarter of the default record; the wider peak spacing absorbs the extra
# ripple of the 31-average spectra
SHORT = ["--duration", "128", "--separation", "2"]


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("all")
    code = main(["all", *SHORT, "--plots", "--cpsd", "--output", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_all_writes_parseable_outputs(full_run):
    code, out = full_run
    assert code == 0
    doc = manifest(out)
    assert doc["status"] == "ok" and doc["command"] == "all"
    files = {p.name for p in out.iterdir()}
    assert set(doc["outputs"]) <= files and len(doc["outputs"]) >= 10
    ts = io.load_timeseries(out / "timeseries.csv")
    assert ts.sample_rate == 1024.0 and ts.n_samples == 128 * 1024
    assert all(c.endswith((":x", ":y")) for c in ts.channels)
    for name in ("modes_fem.csv", "modes_pp.csv", "modes_fdd.csv"):
        assert len(io.load_modes(out / name)) == 5
    for name in ("mac_fem_pp.csv", "mac_fem_fdd.csv", "mac_pp_fdd.csv"):
        assert io.read_mac(out / name).values.shape == (5, 5)
    for name in ("anpsd.csv", "anpsd_x.csv", "svspectra.csv", "cpsd.csv"):
        header, data = io.read_curve(out / name)
        assert data.shape[0] == 4096 // 2 + 1 and len(header) == data.shape[1]
    assert io.read_detectability(out / "detectability.csv").cells.shape == (len(ts.channels), 5)
    assert (out / "minimal_sets.txt").read_text().startswith("[all] size 1")
    svgs = [p for p in out.iterdir() if p.suffix == ".svg"]
    assert svgs and all(p.read_text().lstrip().startswith("<?xml") for p in svgs)


def test_subcommands_chain(tmp_path, full_run):
    _, src = full_run
    ident = tmp_path / "ident"
    assert main(["identify", "--input", str(src / "timeseries.csv"), "--method", "pp",
                 "--separation", "2", "--output", str(ident)]) == 0
    assert (ident / "modes_pp.csv").is_file() and not (ident / "modes_fdd.csv").exists()
    assert str(src / "timeseries.csv") in manifest(ident)["inputs"]

    cmp_ = tmp_path / "cmp"
    assert main(["compare", "--a", str(src / "modes_fem.csv"), "--b",
                 str(ident / "modes_pp.csv"), "--output", str(cmp_)]) == 0
    assert np.all(io.read_mac(cmp_ / "mac.csv").values.diagonal() > 0.9)

    place = tmp_path / "place"
    assert main(["placement", "--input", str(src / "timeseries.csv"), "--reference",
                 str(src / "modes_fem.csv"), "--tolerance", "0.5", "--output", str(place)]) == 0
    assert manifest(place)["settings"]["placement"]["tolerance_hz"] == 0.5


def test_simulate_only(tmp_path):
    assert main(["simulate", "--duration", "4", "--noise", "0", "--seed", "3",
                 "--output", str(tmp_path)]) == 0
    ts = io.load_timeseries(tmp_path / "timeseries.csv")
    assert ts.n_samples == 4096
    assert manifest(tmp_path)["settings"]["seed"] == 3


def test_unknown_method_is_usage_error(tmp_path, capsys):
    assert main(["identify", "--method", "ssi", "--input", "x.csv"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    code = main(["identify", "--input", str(missing), "--output", str(tmp_path / "o")])
    assert code == 1
    assert str(missing) in capsys.readouterr().err
    doc = manifest(tmp_path / "o")
    assert doc["status"] == "error" and str(missing) in doc["error"]


def test_bad_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"spectral": {"overlap": 2}}))
    assert main(["simulate", "--config", str(cfg), "--output", str(tmp_path)]) == 2
    assert "spectral.overlap" in capsys.readouterr().err
    assert main(["simulate", "--tolerance", "x"]) == 2  # not a simulate flag
    assert main(["placement", "--tolerance", "abc%", "--input", "a", "--reference", "b"]) == 2


def test_malformed_input_reports_stage(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,1:x\n0,1\n0.1,oops\n0.2,3\n")
    assert main(["identify", "--input", str(bad), "--output", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "stage load" in err and f"{bad}:3" in err
    assert manifest(tmp_path / "o")["failed_stage"] == "load"


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["simulate", "--duration", "2"]) == 0
    assert (tmp_path / "env" / "timeseries.csv").is_file()


@pytest.mark.skipif(shutil.which("frameoma") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["frameoma", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
    r = subprocess.run([sys.executable, "-m", "frameoma.cli", "bogus"], capture_output=True)
    assert r.returncode == 2
