"""End-to-end runs of the command-line entry point via main(argv)."""

import json
import math
import os

import pytest

from fracspec.cli import main

BASE = """\
[problem]
gamma = {gamma}
l = 10.0
n = 64
{problem_extra}
[task]
name = {task}

[parameters]
{params}

[output]
directory = {out}
{output_extra}
"""


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("FRACSPEC_CONFIG", "FRACSPEC_OUT", "FRACSPEC_SEED", "FRACSPEC_THREADS"):
        monkeypatch.delenv(name, raising=False)


def _write_ini(tmp_path, task, params="", gamma="1.5", problem_extra="",
               output_extra="", out=None, name="run.ini"):
    out = out or tmp_path / "out"
    ini = tmp_path / name
    ini.write_text(
        BASE.format(task=task, params=params, gamma=gamma, out=out,
                    problem_extra=problem_extra, output_extra=output_extra)
    )
    return ini, out


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_solve_elliptic_artifacts(tmp_path):
    ini, out = _write_ini(tmp_path, "solve-elliptic")
    assert main(["--config", str(ini)]) == 0
    lines = (out / "solution.csv").read_text().splitlines()
    assert lines[0] == "x,re_u,im_u"
    assert len(lines) == 65
    rep = _report(out)
    assert rep["task"] == "solve-elliptic"
    assert rep["failed_checks"] == []
    assert rep["results"]["residual_rel"] < 1e-9
    assert rep["seed"] == 0xF5EC


def test_solve_parabolic_artifacts(tmp_path):
    ini, out = _write_ini(tmp_path, "solve-parabolic", params="nt = 8\nt = 1.0")
    assert main(["--config", str(ini)]) == 0
    lines = (out / "solution.csv").read_text().splitlines()
    assert lines[0] == "t,x,re_u,im_u"
    assert len(lines) == 1 + 9 * 64


def test_byte_determinism_with_random_forcing(tmp_path):
    ini, _ = _write_ini(tmp_path, "solve-elliptic", params="forcing = random")
    out1, out2, out3 = (tmp_path / n for n in ("o1", "o2", "o3"))
    assert main(["--config", str(ini), "--out", str(out1)]) == 0
    assert main(["--config", str(ini), "--out", str(out2)]) == 0
    assert (out1 / "solution.csv").read_bytes() == (out2 / "solution.csv").read_bytes()
    assert main(["--config", str(ini), "--out", str(out3), "--seed", "7"]) == 0
    assert (out1 / "solution.csv").read_bytes() != (out3 / "solution.csv").read_bytes()
    assert _report(out3)["seed"] == 7


def test_env_overrides_and_flag_precedence(tmp_path, monkeypatch):
    ini, _ = _write_ini(tmp_path, "solve-elliptic", params="forcing = random")
    out_env = tmp_path / "env_out"
    monkeypatch.setenv("FRACSPEC_CONFIG", str(ini))
    monkeypatch.setenv("FRACSPEC_OUT", str(out_env))
    monkeypatch.setenv("FRACSPEC_SEED", "7")
    assert main([]) == 0
    assert _report(out_env)["seed"] == 7
    out_flag = tmp_path / "flag_out"
    assert main(["--seed", "11", "--out", str(out_flag)]) == 0
    assert _report(out_flag)["seed"] == 11


def test_config_seed_and_threads(tmp_path):
    ini, out = _write_ini(
        tmp_path, "solve-elliptic", params="seed = 123", output_extra="threads = 0"
    )
    assert main(["--config", str(ini)]) == 0
    rep = _report(out)
    assert rep["seed"] == 123
    assert rep["threads"] == (os.cpu_count() or 1)


def test_verify_conditions_flags_constant_coefficient(tmp_path):
    ini, out = _write_ini(tmp_path, "verify-conditions", params="samples = 500")
    assert main(["--config", str(ini)]) == 2
    rep = _report(out)
    assert "sector-growth" in rep["failed_checks"]
    for name in ("sector-growth", "multiplier-bounds", "resolvent-bound",
                 "scalar-inequalities"):
        assert name in rep["results"]


def test_verify_conditions_scaled_decay_passes(tmp_path):
    ini, out = _write_ini(
        tmp_path, "verify-conditions",
        params="samples = 500", problem_extra="a_family = scaled_decay"
    )
    assert main(["--config", str(ini)]) == 0
    assert _report(out)["failed_checks"] == []


def test_resolvent_sweep_artifacts(tmp_path):
    ini, out = _write_ini(
        tmp_path, "resolvent-sweep", gamma="2.0",
        params="radii = 0.1,1,10\nangles = 5",
    )
    assert main(["--config", str(ini)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "re_lambda,im_lambda,value"
    assert len(lines) == 1 + 15
    rep = _report(out)
    assert rep["results"]["stable"] is True


def test_resolvent_sweep_probe_column(tmp_path):
    ini, out = _write_ini(
        tmp_path, "resolvent-sweep", gamma="2.0",
        params="radii = 0.1,1,10\nangles = 3\nprobes = 2\nrefine = false",
    )
    assert main(["--config", str(ini)]) == 0
    header = (out / "sweep.csv").read_text().splitlines()[0]
    assert header == "re_lambda,im_lambda,value,probe_lower"


def test_separability_artifacts(tmp_path):
    ini, out = _write_ini(tmp_path, "separability", params="trials = 10")
    assert main(["--config", str(ini)]) == 0
    lines = (out / "ratios.csv").read_text().splitlines()
    assert lines[0] == "trial,ratio"
    assert len(lines) == 11


def test_embedding_probe_artifacts(tmp_path):
    ini, out = _write_ini(
        tmp_path, "embedding-probe", gamma="2.0",
        params="draws = 3\nh_set = 0.5,1.0",
    )
    assert main(["--config", str(ini)]) == 0
    lines = (out / "ratios.csv").read_text().splitlines()
    assert lines[0] == "draw,h,ratio"
    assert len(lines) == 7
    assert _report(out)["results"]["max_ratio"] > 0.0


def test_bvp_artifacts_and_ellipticity_failure(tmp_path):
    ini, out = _write_ini(tmp_path, "bvp", gamma="2.0", params="mesh_size = 7")
    assert main(["--config", str(ini)]) == 0
    lines = (out / "solution.csv").read_text().splitlines()
    assert lines[0] == "x,y,re_u,im_u"
    assert len(lines) == 1 + 64 * 7
    bad_ini, bad_out = _write_ini(
        tmp_path, "bvp", gamma="2.0", params="mesh_size = 7\nb2 = -1",
        out=tmp_path / "bad", name="bad.ini",
    )
    assert main(["--config", str(bad_ini)]) == 2
    assert _report(bad_out)["failed_checks"] == ["parameter-ellipticity"]


def test_system_elliptic_header(tmp_path):
    ini, out = _write_ini(tmp_path, "system", params="matrix = 2,1;1,2")
    assert main(["--config", str(ini)]) == 0
    header = (out / "solution.csv").read_text().splitlines()[0]
    assert header == "x,re_u_1,im_u_1,re_u_2,im_u_2"


def test_system_parabolic_rows(tmp_path):
    ini, out = _write_ini(
        tmp_path, "system",
        params="matrix = 2,1;1,2\nmode = parabolic\nnt = 8\nt = 1.0",
    )
    assert main(["--config", str(ini)]) == 0
    lines = (out / "solution.csv").read_text().splitlines()
    assert lines[0] == "t,x,re_u_1,im_u_1,re_u_2,im_u_2"
    assert len(lines) == 1 + 9 * 64


def test_convergence_order_column(tmp_path):
    ini, out = _write_ini(
        tmp_path, "convergence", gamma="2.0",
        params="levels = 16,32,64\nscheme = crank-nicolson\ntime_profile = sine\nt = 1.0",
    )
    assert main(["--config", str(ini)]) == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "steps,error,order"
    assert len(lines) == 4
    assert lines[1].split(",")[2] == "-"
    measured = float(lines[2].split(",")[2])
    assert 1.7 <= measured <= 2.3


def test_convergence_exact_hits_floor(tmp_path):
    ini, out = _write_ini(
        tmp_path, "convergence", gamma="2.0",
        params="levels = 8,16,32\nscheme = exact\nt = 1.0",
    )
    assert main(["--config", str(ini)]) == 0
    lines = (out / "convergence.csv").read_text().splitlines()[1:]
    assert all(line.split(",")[2] == "floor" for line in lines)


def test_hard_errors_exit_one(tmp_path, capsys):
    ini, _ = _write_ini(tmp_path, "solve-elliptic", gamma="2.5")
    assert main(["--config", str(ini)]) == 1
    assert "error:" in capsys.readouterr().err

    assert main(["--config", str(tmp_path / "missing.ini")]) == 1
    assert "config file not found" in capsys.readouterr().err

    bad_task, _ = _write_ini(tmp_path, "make-coffee", name="task.ini")
    assert main(["--config", str(bad_task)]) == 1
    assert "[task] name" in capsys.readouterr().err

    bad_mode, _ = _write_ini(
        tmp_path, "solve-elliptic",
        params="forcing = mode\nforcing_mode_index = 64", name="mode.ini",
    )
    assert main(["--config", str(bad_mode)]) == 1
    assert "forcing_mode_index" in capsys.readouterr().err

    assert main([]) == 1
    assert "no config given" in capsys.readouterr().err


def test_convergence_level_validation(tmp_path, capsys):
    for levels in ("8,16", "8,8,16", "16,8,32"):
        ini, _ = _write_ini(
            tmp_path, "convergence", params=f"levels = {levels}",
            name=f"lv{levels.replace(',', '_')}.ini",
        )
        assert main(["--config", str(ini)]) == 1
        assert "levels" in capsys.readouterr().err


def test_bad_sweep_angle_is_a_config_error(tmp_path, capsys):
    ini, _ = _write_ini(tmp_path, "resolvent-sweep", params=f"sweep_angle = {math.pi}")
    assert main(["--config", str(ini)]) == 1
    assert "sweep_angle" in capsys.readouterr().err
