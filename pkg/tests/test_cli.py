from __future__ import annotations

import numpy as np
import pytest

import oracles
from struxmm import catalog
from struxmm.cli import main
from struxmm.io import dumps_decomposition, dumps_matrix, loads_decomposition, loads_matrix
from struxmm.tensor import RankOneTerm, verify


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_pass(capsys):
    code, out, _ = run(capsys, "verify", "strassen.dec")
    assert code == 0 and out.strip() == "PASS rank=7"


def test_verify_broken_exits_1(tmp_path, capsys):
    dec = catalog.strassen()
    a, b, c = dec.terms[0].factors()
    bad = dec.with_terms((RankOneTerm((-a[0],) + a[1:], b, c),) + dec.terms[1:])
    path = tmp_path / "broken.dec"
    path.write_text(dumps_decomposition(bad))
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 1
    assert out.startswith("FAIL") and "indices=" in out and "equation=" in out


def test_usage_errors(capsys):
    assert run(capsys, "nosuch")[0] == 2
    assert run(capsys, "verify", "--bogus", "x")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "verify", "missing-file.dec")[0] == 2


def test_exponent_and_coeff(capsys):
    code, out, _ = run(capsys, "exponent", "--restriction", "r666.txt")
    assert code == 0 and "omega0=2.8016" in out
    code, out, _ = run(capsys, "coeff", "--restriction", "r333.txt")
    assert code == 0 and "L=6.08" in out
    code, out, _ = run(capsys, "exponent", "--shape", "2", "2", "2", "--rank", "7")
    assert "omega0=2.807355" in out


def test_bound(capsys):
    code, out, _ = run(capsys, "bound", "strassen")
    assert code == 0 and "L=40.000000" in out
    code, out, _ = run(capsys, "bound", "--restriction", "r666.txt", "--k", "4")
    assert code == 0 and "omega_k<=" in out


def test_analyze_writes_restriction(tmp_path, capsys):
    out_file = tmp_path / "r.txt"
    code, out, _ = run(capsys, "analyze", "s333_r23", "-o", str(out_file))
    assert code == 0 and "structure 1^15 2^2 4" in out
    code, out, _ = run(capsys, "exponent", "--restriction", str(out_file))
    assert "omega0=2.836" in out


def test_addcount(capsys):
    code, out, _ = run(capsys, "addcount", "winograd")
    assert code == 0 and "A=15" in out


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--profile", "strassen.prof", "--nmin", "2",
                       "--nmax", "64", "--per-decade", "3")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "N,profile,mults,adds,total,normalized"
    assert all(len(line.split(",")) == 6 for line in lines[1:])


def test_multiply_check(tmp_path, capsys):
    rng = np.random.default_rng(3)
    A, B = rng.integers(-5, 5, (7, 9)), rng.integers(-5, 5, (9, 4))
    (tmp_path / "a.txt").write_text(dumps_matrix(A))
    (tmp_path / "b.txt").write_text(dumps_matrix(B))
    code, out, err = run(capsys, "multiply", str(tmp_path / "a.txt"), str(tmp_path / "b.txt"),
                         "--plan", "s333_r23", "--n0", "1", "--check")
    assert code == 0 and "check PASS" in err
    assert loads_matrix(out).tolist() == oracles.naive_matmul(A, B)


def test_search_commands_chain(tmp_path, capsys):
    f, s, l = (str(tmp_path / n) for n in ("f.dec", "s.dec", "l.dec"))
    log = str(tmp_path / "run.log")
    assert run(capsys, "flipsearch", "--shape", "2", "2", "2", "--budget", "50000",
               "--target-rank", "7", "-o", f, "--log", log)[0] == 0
    assert loads_decomposition(open(f).read()).rank == 7
    assert run(capsys, "symmetry", f, "--trials", "50", "-o", s, "--log", log)[0] == 0
    assert run(capsys, "lift", s, "-o", l, "--log", log)[0] == 0
    dec = loads_decomposition(open(l).read())
    assert verify(dec).ok and dec.ring.modulus is None
    assert len(open(log).read().splitlines()) == 3


def test_flipsearch_protect(tmp_path, capsys):
    out = str(tmp_path / "p.dec")
    assert run(capsys, "flipsearch", "--shape", "3", "3", "3", "--protect", "221",
               "--budget", "500", "-o", out)[0] == 0
    assert verify(loads_decomposition(open(out).read())).ok


def test_lift_failure_exit_1(capsys):
    code, _, err = run(capsys, "lift", "tests/data/zero_fail_223.dec")
    assert code == 1 and "(zero)" in err


def test_pipeline_command(tmp_path, capsys):
    code, out, _ = run(capsys, "pipeline", "--shape", "2", "2", "2", "--budget", "20000",
                       "--trials", "100", "-o", str(tmp_path))
    assert code == 0 and "rank 7" in out and (tmp_path / "report.txt").exists()
    code, _, err = run(capsys, "pipeline", "--shape", "5", "5", "5", "-o", str(tmp_path))
    assert code == 1 and "[setup]" in err


def test_env_overrides(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("STRUXMM_SEED", "4")
    monkeypatch.setenv("STRUXMM_BUDGET", "60000")
    monkeypatch.setenv("STRUXMM_TARGET_RANK", "7")
    monkeypatch.setenv("STRUXMM_SHAPE", "2 2 2")
    f = str(tmp_path / "e.dec")
    code, _, err = run(capsys, "flipsearch", "-o", f)
    assert code == 0 and "seed=4" in err
    # command line wins over the environment
    code, _, err = run(capsys, "flipsearch", "--seed", "6", "-o", f)
    assert "seed=6" in err
    monkeypatch.setenv("STRUXMM_PRESERVE_ZEROS", "no")
    monkeypatch.setenv("STRUXMM_BUDGET", "not-a-number")
    assert run(capsys, "flipsearch", "-o", f)[0] == 2


def test_deterministic_output(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"d{k}.dec"
        run(capsys, "flipsearch", "--shape", "2", "2", "3", "--budget", "3000", "-o", str(path))
        outs.append(path.read_text())
    assert outs[0] == outs[1]
