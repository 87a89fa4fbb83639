import csv
import json

import numpy as np
import pytest

from sdcc.cli import main
from sdcc.dataset import BUILTIN_DIR, load_csv
from sdcc.discretize import Discretizer, apply

WINE = str(BUILTIN_DIR / "wine.csv")


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_coverage_identical_sets(capsys):
    assert main(["coverage", "--set-b", WINE, "--set-a", WINE, "--t", "2,3",
                 "--label-col", "class"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split(" = ")[1] for line in lines] == ["0.0", "0.0"]
    assert lines[0].startswith("t=2: 0/")


def test_coverage_t_too_large(capsys):
    assert main(["coverage", "--set-b", WINE, "--set-a", WINE, "--t", "19",
                 "--label-col", "class"]) == 1
    err = capsys.readouterr().err
    assert "TTooLarge" in err


def test_coverage_half_overlap(tmp_path, capsys):
    b = write(tmp_path / "b.csv", "f0,f1,y\n0,0,p\n0,1,p\n")
    a = write(tmp_path / "a.csv", "f0,f1,y\n0,0,p\n")
    assert main(["coverage", "--set-b", b, "--set-a", a, "--t", "2", "--label-col", "y"]) == 0
    assert capsys.readouterr().out.strip() == "t=2: 1/2 = 0.5"


def test_coverage_data_error(tmp_path, capsys):
    b = write(tmp_path / "b.csv", "f0,f1,y\n0,0,p\n")
    assert main(["coverage", "--set-b", b, "--set-a", b, "--t", "1", "--label-col", "zz"]) == 2
    assert "MissingLabelColumn" in capsys.readouterr().err
    assert main(["coverage", "--set-b", str(tmp_path / "nope.csv"), "--set-a", b, "--t", "1",
                 "--label-col", "y"]) == 2


def test_bad_flags(capsys):
    with pytest.raises(SystemExit) as info:
        main(["coverage", "--set-b", WINE])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["coverage", "--set-b", WINE, "--set-a", WINE, "--t", "x", "--label-col", "c"])
    assert info.value.code == 1


def test_discretize_wine(tmp_path):
    out = tmp_path / "wine_bins.csv"
    dz = tmp_path / "dz.json"
    src = open(WINE, "rb").read()
    assert main(["discretize", "--input", WINE, "--label-col", "class", "--bins", "5",
                 "--seed", "3", "--out", str(out), "--save-discretizer", str(dz)]) == 0
    assert open(WINE, "rb").read() == src
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    assert header[-1] == "class" and len(body) == 178
    for j in range(13):
        assert len({r[j] for r in body}) <= 5
    assert json.loads(dz.read_text())["k_requested"] == 5


def test_discretize_constant_column(tmp_path):
    src = write(tmp_path / "c.csv", "a,b,y\n5,1,p\n5,2,q\n5,3,p\n")
    out = tmp_path / "o.csv"
    assert main(["discretize", "--input", src, "--label-col", "y", "--bins", "5", "--seed", "0",
                 "--out", str(out)]) == 0
    body = out.read_text().splitlines()[1:]
    assert [line.split(",")[0] for line in body] == ["0", "0", "0"]


def test_discretize_with_saved_discretizer(tmp_path):
    dz_path = tmp_path / "dz.json"
    main(["discretize", "--input", WINE, "--label-col", "class", "--bins", "3", "--seed", "0",
          "--out", str(tmp_path / "first.csv"), "--save-discretizer", str(dz_path)])
    wine = load_csv(WINE, "class")
    new = tmp_path / "new.csv"
    with open(new, "w") as fh:
        fh.write(",".join(wine.schema.feature_names) + ",class\n")
        for row, lab in zip(wine.rows[::7] * 1.1, wine.labels[::7]):
            fh.write(",".join(repr(float(v)) for v in row) + f",{lab}\n")
    out = tmp_path / "again.csv"
    assert main(["discretize", "--input", str(new), "--label-col", "class", "--bins", "5",
                 "--seed", "9", "--out", str(out), "--discretizer", str(dz_path)]) == 0
    dz = Discretizer.from_json(dz_path.read_text())
    expected = apply(dz, load_csv(new, "class")).rows
    got = np.array([[int(v) for v in line.split(",")[:-1]]
                    for line in out.read_text().splitlines()[1:]])
    assert np.array_equal(got, expected)


def test_discretize_idempotent(tmp_path):
    args = ["discretize", "--input", WINE, "--label-col", "class", "--bins", "4", "--seed", "1"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_experiment_command(tmp_path, capsys):
    cfg = write(tmp_path / "run.cfg",
                "[experiment]\nspaces = ORIGINAL, LMNN\nt_values = 2\nn_folds = 2\n"
                "[optimizer]\nmax_iterations = 3\n[dataset wine]\nbuiltin = wine\n")
    out = tmp_path / "out"
    assert main(["experiment", "--config", cfg, "--out", str(out), "--seed", "4"]) == 0
    stdout = capsys.readouterr().out
    assert "Higher/Same/Lower:" in stdout
    assert sorted(p.name for p in out.iterdir()) == ["correlation.csv", "records.csv",
                                                     "report.json"]
    assert len((out / "records.csv").read_text().splitlines()) == 1 + 2 * 3 * 2
    assert json.loads((out / "report.json").read_text())["config"]["master_seed"] == 4


def test_experiment_manifest_error(tmp_path, capsys):
    cfg = write(tmp_path / "run.cfg", "[dataset x]\nmanifest = missing.manifest\n")
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "ManifestError" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path, monkeypatch, capsys):
    from sdcc import cli
    from sdcc.errors import NonFiniteObjective

    def boom(cfg):
        raise NonFiniteObjective("objective became nan")

    monkeypatch.setattr(cli, "run_experiment", boom)
    cfg = write(tmp_path / "run.cfg", "[dataset wine]\nbuiltin = wine\n")
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "NonFiniteObjective" in capsys.readouterr().err
