import csv

import numpy as np
import pytest

import stpod.cli as cli
from stpod.error_analysis import CSV_COLUMNS, CheckResult
from stpod.pod import ProjectionOrder, basis_from_csv

OUTPUTS = ("errors.csv", "singular_values.csv", "bases_time.csv", "bases_space.csv",
           "fields.csv")
TINY = ["--n-time", "5", "--n-space", "6", "--q-hat", "2", "--s-hat", "3"]


def parse(*argv):
    return cli.parse_config(["run", *argv])[0]


def test_example_defaults():
    c1 = parse()
    assert (c1.example, c1.mu, c1.n_time, c1.n_space) == (1, 0.4, 101, 101)
    assert (c1.q_hat, c1.s_hat, c1.order) == (20, 20, ProjectionOrder.SPACE_FIRST)
    assert c1.sweep_points() == ((20, 20),)
    c2 = parse("--example", "2")
    assert c2.mu == 1.0 and c2.subdivide == 4
    assert c2.sweep == tuple((k, k) for k in range(2, 61, 2))


def test_flag_overrides():
    c = parse("--example", "1", "--mu", "0.7", "--order", "time-first", "--no-cache")
    assert c.mu == 0.7 and c.order is ProjectionOrder.TIME_FIRST and not c.cache
    assert parse("--sweep-diagonal", "2:10").sweep == ((2, 2), (4, 4), (6, 6), (8, 8), (10, 10))
    assert parse("--sweep-diagonal", "3:9:3").sweep == ((3, 3), (6, 6), (9, 9))
    full = parse("--example", "2", "--full-sweep")
    assert len(full.sweep) == 144 and full.sweep[0] == (5, 5) and full.sweep[-1] == (60, 60)


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# experiment\nexample = 2\nmu = 2.5\nq-hat = 7\nno_cache = true\n"
                   "sweep_diagonal = 2:4\n")
    c = parse("--config", str(cfg), "--mu", "3.0")
    assert c.example == 2 and c.mu == 3.0 and c.q_hat == 7 and not c.cache
    assert c.subdivide == 4 and c.sweep == ((2, 2), (4, 4))


@pytest.mark.parametrize("argv", [
    ["--s-hat", "0"], ["--q-hat", "-1"], ["--bogus"], ["--example", "3"],
    ["--order", "sideways"], ["--sweep-diagonal", "9:2"], ["--n-time", "2"], ["--mu", "0"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(["run", *argv]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["frobnicate = 1\n", "q_hat 3\n", "s-hat = 0\n"])
def test_bad_config_file_exits_2(tmp_path, text, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_config_key_lists_valid_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    with pytest.raises(cli.ConfigError, match="q_hat"):
        parse("--config", str(cfg))


def test_dimension_checks():
    with pytest.raises(cli.ConfigError):
        parse(*TINY[:4], "--q-hat", "5")
    with pytest.raises(cli.ConfigError):
        parse(*TINY, "--sweep-diagonal", "2:8")
    # defaults shrink to small grids instead of failing
    c = parse("--example", "2", "--n-time", "9", "--n-space", "9")
    assert (c.q_hat, c.s_hat) == (7, 9) and c.sweep == ((2, 2), (4, 4), (6, 6))


def test_missing_config_file_is_io_error(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.cfg")]) == 3


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_tiny_smoke_run(tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["run", *TINY, "--sweep-diagonal", "1:2:1", "--out", str(out)]) == 0
    assert "all passed" in capsys.readouterr().out
    for name in OUTPUTS:
        assert (out / name).is_file()
    errors = _read(out / "errors.csv")
    assert errors[0] == CSV_COLUMNS and len(errors) == 3
    sv = _read(out / "singular_values.csv")
    assert sv[0] == cli.SINGULAR_VALUE_COLUMNS and len(sv) == 1 + min(6 - 2, 5)
    fields = _read(out / "fields.csv")
    assert fields[0] == ["tau", "xi", "fom", "projection_error", "rom_error"]
    assert len(fields) == 1 + 5 * 6
    header, tau, vals = basis_from_csv((out / "bases_time.csv").read_text())
    assert header["s_hat"] == 3 and vals.shape == (5, 3)
    assert list((out / ".fom_cache").glob("*.csv"))


def test_cached_and_cold_runs_agree(tmp_path):
    args = ["run", "--n-time", "21", "--n-space", "21", "--q-hat", "6", "--s-hat", "6",
            "--sweep-diagonal", "2:8"]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0  # cache hit
    assert cli.main([*args, "--out", str(tmp_path / "b"), "--no-cache"]) == 0
    assert not (tmp_path / "b" / ".fom_cache").exists()
    for name in OUTPUTS:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_sweep_matches_serial(tmp_path):
    args = ["run", "--example", "2", "--n-time", "21", "--n-space", "21", "--no-cache",
            "--sweep-diagonal", "2:12"]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "b"), "--workers", "3"]) == 0
    assert (tmp_path / "a" / "errors.csv").read_bytes() == \
        (tmp_path / "b" / "errors.csv").read_bytes()


def test_unwritable_output_exits_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", *TINY, "--out", str(blocker)]) == 3


def test_bound_failure_exits_1(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli, "verify_bounds",
                        lambda r: [CheckResult("rho<=sigma", False, 1.0, 0.5)])
    assert cli.main(["run", *TINY, "--out", str(tmp_path)]) == 1
    assert "FAIL rho<=sigma" in capsys.readouterr().out


def test_floats_use_17_significant_digits(tmp_path):
    cli.main(["run", *TINY, "--out", str(tmp_path)])
    row = _read(tmp_path / "errors.csv")[1]
    rho = row[CSV_COLUMNS.index("rho")]
    assert rho == format(float(rho), ".17g")
    np.testing.assert_array_equal(float(rho), np.float64(rho))
