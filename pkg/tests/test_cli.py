import csv
import json

import numpy as np
import pytest

from mofpca.cli import main
from mofpca.dataset import load_csv, make_two_group_dataset, standardize
from mofpca.dominance import brute_force_front, read_front
from mofpca.pca import compute_basis, evaluate_direct


def write_fixture(path, d=6, seed=0):
    x, groups = make_two_group_dataset(n_a=60, n_b=90, d=d, seed=seed)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(d)] + ["grp"])
        for row, g in zip(x, groups):
            writer.writerow([repr(float(v)) for v in row] + ["lo" if g == "A" else "hi"])
    return path


@pytest.fixture
def toy_csv(tmp_path):
    return write_fixture(tmp_path / "toy.csv")


def common(path):
    return ["--input", str(path), "--sensitive", "grp", "--group-a", "lo"]


def load_basis_from(path):
    table, a, b = load_csv(path, "grp", "lo")
    ds = standardize(table, a, b)
    return ds, compute_basis(ds)


def test_pca_command(toy_csv, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["pca", *common(toy_csv), "--r", "6", "--out", str(out)]) == 0
    (row,) = csv.DictReader((out / "pca.csv").open())
    assert float(row["recon_error"]) == 0.0
    assert (out / "basis.json").exists()
    assert "pca r=6" in capsys.readouterr().out


def test_pca_matches_direct_oracle(toy_csv, tmp_path):
    out = tmp_path / "out"
    main(["pca", *common(toy_csv), "--r", "2", "--out", str(out), "--format", "json"])
    row = json.loads((out / "pca.json").read_text())["front"][0]
    ds, basis = load_basis_from(toy_csv)
    direct = evaluate_direct(ds, basis, [0, 1])
    assert row["indices"] == [0, 1] and row["indices_1based"] == [1, 2]
    assert row["recon_error"] == pytest.approx(direct.recon_error, rel=1e-8)
    assert row["fairness"] == pytest.approx(direct.fairness, rel=1e-8)


def test_mofpca_exhaustive_equals_brute_force(toy_csv, tmp_path):
    out = tmp_path / "out"
    assert main(["mofpca", *common(toy_csv), "--r", "3", "--exhaustive", "--out", str(out), "--verify"]) == 0
    _, basis = load_basis_from(toy_csv)
    assert read_front(out / "front.csv", 6) == brute_force_front(basis, 3)
    report = json.loads((out / "selection.json").read_text())
    assert {"lambda", "m_re", "m_fm", "selected", "front"} <= set(report)


def test_mofpca_spea2_with_config(toy_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generations": 5, "population_size": 12, "archive_size": 6, "r": 2}))
    out = tmp_path / "out"
    assert main(["mofpca", *common(toy_csv), "--config", str(cfg), "--seed", "3", "--out", str(out)]) == 0
    used = json.loads((out / "config.json").read_text())
    assert (used["generations"], used["population_size"], used["seed"], used["r"]) == (5, 12, 3, 2)
    log = (out / "spea2_log.csv").read_text().splitlines()
    assert log[0] == "generation,archive_size,best_recon_error,best_fairness,hypervolume_proxy"
    assert len(log) == 6


def test_sweep_rows(toy_csv, tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", *common(toy_csv), "--r-min", "1", "--r-max", "4", "--exhaustive",
                 "--out", str(out), "--verify"]) == 0
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    assert [(int(r["r"]), r["method"]) for r in rows][:3] == [(1, "pca"), (1, "mofpca-selected"),
                                                             (1, "brute-force-selected")]
    assert len(rows) == 12
    by_r = {}
    for row in rows:
        by_r.setdefault(int(row["r"]), {})[row["method"]] = row
    for r, methods in by_r.items():
        assert methods["pca"]["indices"] == " ".join(str(i) for i in range(r))
        assert float(methods["mofpca-selected"]["recon_error"]) >= float(methods["pca"]["recon_error"])
    assert all(row["runtime_ms"] == "" for row in rows)


def test_sweep_timing_and_json(toy_csv, tmp_path):
    out = tmp_path / "out"
    main(["sweep", *common(toy_csv), "--r-max", "2", "--timing", "--format", "json", "--out", str(out)])
    rows = json.loads((out / "sweep.json").read_text())["rows"]
    assert all(row["runtime_ms"] >= 0 for row in rows)


def test_select_command(toy_csv, tmp_path):
    out = tmp_path / "out"
    main(["mofpca", *common(toy_csv), "--r", "3", "--exhaustive", "--out", str(out)])
    sel_out = tmp_path / "sel"
    assert main(["select", "--basis", str(out / "basis.json"), "--front", str(out / "front.csv"),
                 "--out", str(sel_out)]) == 0
    a = json.loads((out / "selection.json").read_text())
    b = json.loads((sel_out / "selection.json").read_text())
    assert a == b
    assert main(["select", *common(toy_csv), "--front", str(out / "front.csv"), "--lambda", "1",
                 "--out", str(sel_out)]) == 0
    assert json.loads((sel_out / "selection.json").read_text())["selected"]["indices"] == [0, 1, 2]


def test_verify_command(toy_csv, tmp_path, capsys):
    out = tmp_path / "out"
    main(["mofpca", *common(toy_csv), "--r", "2", "--exhaustive", "--out", str(out)])
    assert main(["verify", *common(toy_csv), "--results", str(out / "front.csv")]) == 0
    text = (out / "front.csv").read_text().splitlines()
    fields = text[1].split(",")
    fields[3] = repr(float(fields[3]) * 1.001)
    text[1] = ",".join(fields)
    (out / "front.csv").write_text("\n".join(text) + "\n")
    assert main(["verify", *common(toy_csv), "--results", str(out / "front.csv")]) == 1
    assert "mismatch" in capsys.readouterr().out


def test_exit_codes(toy_csv, tmp_path):
    out = str(tmp_path / "o")
    assert main(["pca", "--input", str(tmp_path / "missing.csv"), "--sensitive", "grp", "--r", "1",
                 "--out", out]) == 2
    assert main(["pca", *common(toy_csv), "--r", "9", "--out", out]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"population_size": 1}')
    assert main(["mofpca", *common(toy_csv), "--r", "2", "--config", str(bad), "--out", out]) == 3
    assert main(["mofpca", *common(toy_csv), "--r", "3", "--exhaustive", "--cap", "5", "--out", out]) == 4
    with pytest.raises(SystemExit) as exc:
        main(["pca"])
    assert exc.value.code == 2


def test_image_scaling_flag(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "img.csv"
    with path.open("w") as fh:
        fh.write(",".join(f"p{i}" for i in range(8)) + ",g\n")
        for k in range(20):
            fh.write(",".join(str(v) for v in rng.integers(0, 256, 8)) + f",{k % 2}\n")
    out = tmp_path / "o"
    assert main(["mofpca", "--input", str(path), "--sensitive", "g", "--group-a", "0", "--scaling", "pixel",
                 "--dataset-kind", "image", "--r", "2", "--seed", "1", "--out", str(out), "--verify"]) == 0
    assert json.loads((out / "config.json").read_text())["generations"] == 50
