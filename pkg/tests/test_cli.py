"""CLI exit codes and outputs."""

import pytest

from sparsemodel.cli import main
from test_specio import ARCH, ENERGY, MAPPING, SAFS, WORKLOAD


@pytest.fixture
def spec_files(tmp_path):
    files = {}
    for name, text in (
        ("workload", WORKLOAD),
        ("arch", ARCH),
        ("safs", SAFS),
        ("mapping", MAPPING),
        ("energy", ENERGY),
    ):
        p = tmp_path / f"{name}.yaml"
        p.write_text(text)
        files[name] = str(p)
    return files


def test_model_success_exit_zero(spec_files, tmp_path, capsys):
    out = tmp_path / "report.csv"
    rc = main(
        [
            "model",
            "--workload", spec_files["workload"],
            "--arch", spec_files["arch"],
            "--safs", spec_files["safs"],
            "--mapping", spec_files["mapping"],
            "--energy", spec_files["energy"],
            "--out", str(out),
        ]
    )
    assert rc == 0
    captured = capsys.readouterr()
    assert "VALID" in captured.out
    assert out.read_text().startswith("level,tensor,action,status,count")


def test_invalid_mapping_exit_one(spec_files, tmp_path, capsys):
    arch = tmp_path / "tiny.yaml"
    arch.write_text(ARCH.replace("capacity: 4096", "capacity: 8"))
    rc = main(
        [
            "model",
            "--workload", spec_files["workload"],
            "--arch", str(arch),
            "--mapping", spec_files["mapping"],
            "--energy", spec_files["energy"],
        ]
    )
    assert rc == 1
    assert "INVALID" in capsys.readouterr().out


def test_spec_error_exit_two(spec_files, tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("workload:\n  dims: {m: 4\n")
    rc = main(
        [
            "model",
            "--workload", str(bad),
            "--arch", spec_files["arch"],
            "--mapping", spec_files["mapping"],
            "--energy", spec_files["energy"],
        ]
    )
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_missing_file_exit_two(spec_files):
    rc = main(
        [
            "model",
            "--workload", "/nonexistent.yaml",
            "--arch", spec_files["arch"],
            "--mapping", spec_files["mapping"],
            "--energy", spec_files["energy"],
        ]
    )
    assert rc == 2


def test_search_exhaustive(spec_files, capsys):
    rc = main(
        [
            "search",
            "--workload", spec_files["workload"],
            "--arch", spec_files["arch"],
            "--energy", spec_files["energy"],
            "--objective", "edp",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "best edp" in out
    assert "mapping:" in out


def test_search_random_budget_seeded(spec_files, capsys):
    args = [
        "search",
        "--workload", spec_files["workload"],
        "--arch", spec_files["arch"],
        "--energy", spec_files["energy"],
        "--objective", "cycles",
        "--budget", "20",
        "--seed", "7",
    ]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    second = capsys.readouterr().out
    assert first == second


def test_density_samples_cross_check(spec_files, capsys):
    rc = main(
        [
            "model",
            "--workload", spec_files["workload"],
            "--arch", spec_files["arch"],
            "--mapping", spec_files["mapping"],
            "--energy", spec_files["energy"],
            "--density-samples", "5",
        ]
    )
    assert rc == 0
    assert "monte-carlo means" in capsys.readouterr().out


def test_oracle_flag_with_actual_data(tmp_path, capsys):
    data_a = tmp_path / "a.txt"
    data_a.write_text("dims: 4 4\n0 0\n1 1\n2 2\n3 3\n")
    data_b = tmp_path / "b.txt"
    data_b.write_text("dims: 4 4\n" + "\n".join(f"{k} {n}" for k in range(4) for n in range(4)) + "\n")
    workload = WORKLOAD.replace(
        "density: {kind: uniform, density: 0.25}",
        "density: {kind: actual_data, path: %s}" % data_a,
    ).replace(
        "density: {kind: uniform, density: 1.0}",
        "density: {kind: actual_data, path: %s}" % data_b,
    )
    files = {}
    for name, text in (("workload", workload), ("arch", ARCH), ("mapping", MAPPING), ("energy", ENERGY)):
        p = tmp_path / f"{name}.yaml"
        p.write_text(text)
        files[name] = str(p)
    rc = main(
        [
            "model",
            "--workload", files["workload"],
            "--arch", files["arch"],
            "--mapping", files["mapping"],
            "--energy", files["energy"],
            "--oracle",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "oracle exact counts" in out
    assert "compute" in out


def test_search_with_safs(spec_files, capsys):
    rc = main(
        [
            "search",
            "--workload", spec_files["workload"],
            "--arch", spec_files["arch"],
            "--safs", spec_files["safs"],
            "--energy", spec_files["energy"],
            "--objective", "energy",
            "--budget", "15",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "best energy" in out
