import csv
import math

import pytest

from qcspin import __version__
from qcspin.cli import main


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def read_kv(path):
    kv = {}
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            if ln.startswith("#") or " = " not in ln:
                continue
            k, v = ln.rstrip("\n").split(" = ", 1)
            kv.setdefault(k, v)
    return kv


def test_help_lists_subcommands(capsys):
    assert main(["--help"]) == 0
    text = capsys.readouterr().out
    for cmd in ("decoherence", "nonmarkov-scan", "qc", "benchmark", "scattering", "rabi", "asymptotics"):
        assert cmd in text


def test_decoherence_thermal_grid(tmp_path):
    code, out = run(tmp_path, "decoherence", "--family", "thermal", "--alpha", "2", "--n-t", "100")
    assert code == 0
    head, rows = read_csv(out / "trace.csv")
    assert head == ["t", "ReD", "ImD", "absD2", "dAbsD2dt"]
    assert len(rows) == 100
    assert all(0.0 < float(r[3]) <= 1.0 for r in rows)
    with open(out / "trace.csv", encoding="utf-8") as fh:
        header = [next(fh) for _ in range(3)]
    assert header[0] == f"# qcspin {__version__}\n"
    assert header[1].startswith("# config_hash: ")
    assert header[2].startswith("# columns: t,ReD")
    meta = read_kv(out / "meta.txt")
    assert meta["alpha"] == "2.0" and meta["rel_tol"] == "1e-10"


def test_single_time_point_gives_unit_D(tmp_path):
    code, out = run(tmp_path, "decoherence", "--family", "bec", "--eps", "0.5", "--n-t", "1")
    assert code == 0
    _, rows = read_csv(out / "trace.csv")
    assert len(rows) == 1 and float(rows[0][1]) == 1.0 and float(rows[0][2]) == 0.0


def test_invalid_eps_names_the_field(tmp_path, capsys):
    code, _ = run(tmp_path, "decoherence", "--eps", "1.5")
    assert code == 2
    assert "eps" in capsys.readouterr().err


@pytest.mark.parametrize("args", [
    ["decoherence", "--alpha", "-3"],
    ["decoherence", "--omega-c", "0"],
    ["decoherence", "--beta", "-1"],
    ["decoherence", "--alpha", "abc"],
    ["qc", "--gamma11", "1.2"],
    ["qc", "--family", "squeezed"],
    ["decoherence", "--no-such-flag", "1"],
])
def test_config_errors_exit_2(tmp_path, args):
    assert run(tmp_path, *args)[0] == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    code, _ = run(tmp_path, "qc", "--sampler", "dirac", "--ode-tol", "1e-300", "--n-t", "3")
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[common]\nalpha = 5\nn_t = 4\n\n[decoherence]\nfamily = circle\n")
    code, out = run(tmp_path, "decoherence", "--config", str(ini), "--n-t", "3")
    assert code == 0
    meta = read_kv(out / "meta.txt")
    assert meta["alpha"] == "5.0" and meta["family"] == "circle" and meta["n_t"] == "3"
    assert len(read_csv(out / "trace.csv")[1]) == 3


def test_config_file_unknown_key(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[common]\nalhpa = 5\n")
    assert run(tmp_path, "decoherence", "--config", str(ini))[0] == 2
    assert "alhpa" in capsys.readouterr().err


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("QCSPIN_OUT", str(tmp_path / "envout"))
    assert main(["decoherence", "--n-t", "2"]) == 0
    assert (tmp_path / "envout" / "trace.csv").exists()


def test_nonmarkov_scan_thermal_markovian(tmp_path):
    code, out = run(tmp_path, "nonmarkov-scan", "--family", "thermal", "--alpha", "-1.9",
                    "--t-max", "20", "--n-t", "41", "--eps-list", "0,0.5,1")
    assert code == 0
    assert read_csv(out / "regions.csv")[1] == []
    with open(out / "matrix.csv", encoding="utf-8") as fh:
        body = [ln for ln in fh if not ln.startswith("#")]
    assert len(body) == 4 and body[0].startswith("eps")
    assert read_kv(out / "meta.txt")["failed_cells"] == "0"


def test_nonmarkov_scan_bec_oscillates(tmp_path):
    code, out = run(tmp_path, "nonmarkov-scan", "--family", "bec", "--alpha", "-2.9",
                    "--t-max", "30", "--n-t", "121", "--eps-list", "0.1,0.5,1")
    assert code == 0
    rows = read_csv(out / "regions.csv")[1]
    assert len([r for r in rows if float(r[0]) == 0.1]) >= 2


def test_nonmarkov_scan_single_cell(tmp_path):
    code, out = run(tmp_path, "nonmarkov-scan", "--family", "bec", "--n-t", "1", "--n-eps", "1",
                    "--eps-min", "0.5")
    assert code == 0
    with open(out / "matrix.csv", encoding="utf-8") as fh:
        body = [ln.strip() for ln in fh if not ln.startswith("#")]
    assert body[1].split(",")[1] == "0.0"


def test_qc_outputs_are_byte_identical(tmp_path):
    args = ["qc", "--sampler", "gaussian", "--n-samples", "40", "--n-modes", "8", "--coupling", "sx",
            "--t-max", "3", "--n-t", "7", "--seed", "11", "--deterministic"]
    a = run(tmp_path, *args, name="a")[1]
    b = run(tmp_path, *args, name="b")[1]
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    assert (a / "meta.txt").read_bytes() == (b / "meta.txt").read_bytes()
    c = run(tmp_path, *args[:-1], "--threads", "4", name="c")[1]
    assert (a / "trajectory.csv").read_bytes() == (c / "trajectory.csv").read_bytes()
    head, rows = read_csv(a / "trajectory.csv")
    assert head[0] == "t" and len(rows) == 7


def test_benchmark_circle_exit_codes(tmp_path):
    args = ["benchmark", "--sampler", "circle", "--n-nodes", "128", "--t-max", "10", "--n-t", "41"]
    code, out = run(tmp_path, *args)
    assert code == 0
    assert float(read_kv(out / "meta.txt")["max_discrepancy"]) <= 1e-7
    assert run(tmp_path, *args, "--tolerance", "1e-30", name="strict")[0] == 4
    assert run(tmp_path, "benchmark", "--coupling", "sx", name="sx")[0] == 2


def test_scattering_polaron_reports_divergence(tmp_path):
    code, out = run(tmp_path, "scattering", "--omega-R", "0.7")
    assert code == 0
    assert "L¹ divergent" in (out / "report.txt").read_text(encoding="utf-8")


def test_scattering_radial(tmp_path):
    code, out = run(tmp_path, "scattering", "--coupling", "sz_half", "--theta", str(math.pi / 2))
    assert code == 0
    kv = read_kv(out / "report.txt")
    assert kv["l1_status"] == "L¹ finite"
    assert abs(float(kv["decay_exponent"]) - 3.0) < 0.1
    assert len(read_csv(out / "increments.csv")[1]) == 4


def test_rabi_zero_drive_is_free_evolution(tmp_path):
    code, out = run(tmp_path, "rabi", "--kappa", "0", "--t-max", "5", "--n-t", "11")
    assert code == 0
    _, rows = read_csv(out / "trajectory.csv")
    for r in rows:
        t = float(r[0])
        assert abs(float(r[1]) - 0.5) < 1e-12
        assert abs(complex(float(r[2]), float(r[3])) - 0.5 * complex(math.cos(t), -math.sin(t))) < 1e-12


def test_rabi_linear_periodicity(tmp_path):
    code, out = run(tmp_path, "rabi", "--polarization", "linear", "--n-periods", "3")
    assert code == 0
    head, rows = read_csv(out / "periodicity.csv")
    assert head == ["k", "t", "deviation"] and len(rows) == 3


def test_asymptotics_report(tmp_path):
    code, out = run(tmp_path, "asymptotics", "--family", "bec", "--alpha", "-1", "--eps", "1")
    assert code == 0
    kv = read_kv(out / "report.txt")
    assert kv["regime"] == "LogPower" and kv["law"] == "log"
