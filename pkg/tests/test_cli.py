import json

import pytest

from liminf.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dim_example(capsys):
    code, out, err = call(capsys, "dim", "--n", "1", "--tau", "3/1", "--nu", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,tau,nu,dimension,decimal,hypothesis_ok"
    assert lines[1].split(",")[3:5] == ["2/3", "0.6667"]
    assert "warning" in err
    assert "\r\n" in out or out.count("\n") == 2


def test_dim_json(capsys):
    code, out, _ = call(capsys, "dim", "--n", "1", "--tau", "7/2", "--nu", "1", "--format", "json")
    obj = json.loads(out)
    assert code == 0 and obj["schema_version"] == 1 and obj["dimension"] == "4/7" and obj["hypothesis_ok"]


def test_density_example(capsys):
    code, out, _ = call(capsys, "density", "--set", "arith:2", "--max-n", "1048576")
    assert code == 0
    rows = [line.split(",") for line in out.splitlines()]
    assert rows[0][:3] == ["n", "delta", "dyadic_diff"]
    assert float(rows[-1][3]) > 0.9


def test_padic_zp_example(capsys):
    code, out, _ = call(capsys, "padic-zp", "--x", "1", "--p", "2", "--tau", "2/1", "--height-max", "200",
                        "--format", "json")
    assert code == 0 and json.loads(out)["counterexamples"] == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["padic-norm", "--x", "12", "--p", "2"],
        ["padic-scan", "--x", "1/2", "--p", "2", "--tau", "2", "--height-max", "30"],
        ["padic-anu", "--n", "2", "--p", "3", "--f", "1", "--i0", "1", "--nu", "16,32"],
        ["shape", "--set", "all", "--nu", "1/2", "--horizon", "1024"],
        ["newgen", "--p0", "1", "--q0", "2", "--tau", "7/2", "--q-range", "3:40"],
        ["eset", "--p0", "1", "--q0", "2", "--tau", "7/2", "--set", "all", "--k", "50", "--nu", "1"],
        ["cantor", "--set", "all", "--n", "1", "--tau", "7/2", "--depth", "2", "--nu-hat", "1"],
        ["mdp", "--set", "all", "--n", "1", "--tau", "7/2", "--depth", "2", "--nu-hat", "1", "--samples", "50"],
        ["boxdim", "--set", "all", "--n", "1", "--tau", "7/2", "--depth", "2", "--nu-hat", "1"],
        ["coversum", "--set", "all", "--n", "1", "--tau", "3", "--s", "0.7", "--terms", "1000"],
    ],
    ids=lambda a: a[0],
)
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_every_command_runs(capsys, argv, fmt):
    code, out, err = call(capsys, *argv, "--format", fmt)
    assert code == 0, err
    if fmt == "json":
        assert json.loads(out)["schema_version"] == 1
    else:
        assert out.splitlines()[0]


def test_output_file_and_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# dimension run\nn = 1\ntau = 7/2\nnu = 1\n")
    out = tmp_path / "dim.csv"
    assert run(["dim", "--config", str(cfg), "--output", str(out)]) == 0
    assert out.read_bytes().splitlines()[1].split(b",")[3] == b"4/7"
    # flags override the file
    assert run(["dim", "--config", str(cfg), "--nu", "0", "--output", str(out)]) == 0
    assert out.read_bytes().splitlines()[1].split(b",")[3] == b"2/7"


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 1\ncolour = red\n")
    code, _, err = call(capsys, "dim", "--config", str(cfg), "--tau", "3", "--nu", "1")
    assert code == 2 and "colour" in err and "Traceback" not in err


@pytest.mark.parametrize(
    "argv",
    [
        ["dim", "--n", "1", "--tau", "x", "--nu", "1"],
        ["dim", "--n", "1", "--tau", "3"],
        ["padic-norm", "--x", "3", "--p", "4"],
        ["newgen", "--p0", "1", "--q0", "2", "--tau", "3", "--q", "2"],
        ["density", "--set", "cubes", "--max-n", "100"],
        ["dim", "--config", "/nonexistent/cfg"],
        ["padic-zp", "--x", "1/2", "--p", "2", "--tau", "2", "--height-max", "10"],
        ["cantor", "--set", "all", "--n", "1", "--tau", "3", "--depth", "2", "--nu-hat", "1"],
    ],
)
def test_precondition_errors_exit_two(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 2
    assert "Traceback" not in err and err.strip()


def test_usage_errors(capsys):
    code, _, err = call(capsys, "frobnicate")
    assert code == 2 and "invalid choice" in err
    code, _, err = call(capsys, "dim", "--bogus", "1")
    assert code == 2 and "--bogus" in err


def test_invariant_violation_exit_three(monkeypatch, capsys):
    import liminf.cli as cli
    from liminf.errors import InvariantViolation

    def boom(args):
        raise InvariantViolation("masses do not sum to 1")

    monkeypatch.setitem(cli._COMMANDS, "dim", ("x", boom, ["n", "tau", "nu"]))
    code, _, err = call(capsys, "dim", "--n", "1", "--tau", "3", "--nu", "1")
    assert code == 3 and "invariant" in err


def test_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("LIMINF_THREADS", "2")
    argv = ["eset", "--p0", "1", "--q0", "2", "--tau", "7/2", "--set", "all", "--k", "120", "--nu", "1"]
    code, par, _ = call(capsys, *argv)
    code2, ser, _ = call(capsys, *argv, "--threads", "1")
    assert code == code2 == 0 and par == ser
