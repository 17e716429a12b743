import io
import json

import pytest

from ambc_v2x import cli
from ambc_v2x.config import NetworkConfig
from ambc_v2x.simulation import run_realization

SWEEP = ["sweep", "--param", "sigma_eps", "--values", "0,1e-4", "--realizations", "4", "--quiet"]


@pytest.fixture(autouse=True)
def fixed_epoch(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def test_no_arguments_is_usage_error(capsys):
    assert cli.main([]) == cli.EXIT_USAGE
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["bogus"], ["solve", "--bogus"], ["solve", "--set", "nope=1"],
                                  ["sweep", "--param", "p_max", "--values", "40,x"],
                                  ["sweep", "--param", "p_max", "--values", "41,40,42"]])
def test_usage_errors(argv, tmp_path):
    assert cli.main(argv + (["--output-dir", str(tmp_path)] if argv[0] == "sweep" else [])) == cli.EXIT_USAGE


def test_validation_error_names_field(capsys):
    assert cli.main(["solve", "--c-min", "-1"]) == cli.EXIT_INVALID
    assert "c_min" in capsys.readouterr().err
    assert cli.main(["solve", "--sigma-eps", "-0.1"]) == cli.EXIT_INVALID


def test_solve_prints_solution(capsys):
    assert cli.main(["solve", "--index", "2", "--sigma-eps", "0"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    for name in ("alpha_1*", "alpha_2*", "beta_1,1*", "beta_2,1*", "beta_1,2*", "beta_2,2*", "xi_1*", "xi_2*",
                 "dBm", "energy efficiency", "status: CONVERGED", "worst slack"):
        assert name in out


def test_solve_infeasible_exit_code(capsys):
    assert cli.main(["solve", "--c-min", "40"]) == cli.EXIT_INFEASIBLE
    out = capsys.readouterr().out
    assert "status: INFEASIBLE" in out and "worst slack" in out


def test_print_solution_reflection_in_unit_interval():
    outcome, metrics = run_realization(NetworkConfig(), 2)
    text = cli.print_solution(outcome, metrics, file=io.StringIO())
    xi_line = next(line for line in text.splitlines() if line.startswith("xi_1*"))
    values = [float(tok) for tok in xi_line.replace("=", " ").split() if tok[0].isdigit()]
    assert len(values) == 2 and all(0 <= v <= 1 for v in values)


def test_sweep_writes_csv_and_manifest(tmp_path):
    assert cli.main(SWEEP + ["--output-dir", str(tmp_path), "--gnuplot"]) == cli.EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == cli.CSV_HEADER
    assert len(lines) == 5
    zero = [line.split(",") for line in lines[1:] if line.split(",")[1] == "0.0"]
    assert len(zero) == 2 and all(float(row[5]) == 0.0 for row in zero)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["format_version"] == cli.FORMAT_VERSION
    assert manifest["config"]["n_realizations"] == 4
    assert set(manifest["config"]) == set(NetworkConfig().to_dict())
    assert (tmp_path / "sweep.gp").exists()


def test_rerun_is_byte_identical_and_manifest_round_trips(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(SWEEP + ["--output-dir", str(a), "--seed", "7"]) == cli.EXIT_OK
    assert cli.main(SWEEP + ["--output-dir", str(b), "--seed", "7"]) == cli.EXIT_OK
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    manifest = a / "manifest.json"
    assert cli.main(["sweep", "--config", str(manifest), "--param", "sigma_eps", "--values", "0,1e-4",
                     "--quiet", "--output-dir", str(c)]) == cli.EXIT_OK
    assert (a / "sweep.csv").read_bytes() == (c / "sweep.csv").read_bytes()
    echoed = json.loads(manifest.read_text())["config"]
    assert NetworkConfig(**cli.read_config_file(manifest)).to_dict() == echoed


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# test\nsigma_eps = 1e-3\nseed = 4\n")
    args = cli.build_parser().parse_args(["solve", "--config", str(cfg), "--seed", "9"])
    config = cli.resolve_config(args)
    assert config.sigma_eps == 1e-3 and config.seed == 9
    cfg.write_text("unknown_key = 1\n")
    assert cli.main(["solve", "--config", str(cfg)]) == cli.EXIT_USAGE
    assert cli.main(["solve", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_IO


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(SWEEP) == cli.EXIT_OK
    assert (tmp_path / "env" / "sweep.csv").exists()


def test_unwritable_output_is_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(SWEEP + ["--output-dir", str(blocker / "sub")]) == cli.EXIT_IO
    assert str(blocker) in capsys.readouterr().err


def test_all_points_infeasible_exit_code(tmp_path):
    argv = ["sweep", "--param", "p_max", "--values", "40", "--realizations", "2", "--quiet", "--c-min", "40",
            "--output-dir", str(tmp_path)]
    assert cli.main(argv) == cli.EXIT_INFEASIBLE


def test_verify_subcommand(capsys):
    code = cli.main(["verify", "--seeds", "2", "--refine", "3"])
    out = capsys.readouterr().out
    assert "comparisons agree" in out
    assert code == cli.EXIT_OK
