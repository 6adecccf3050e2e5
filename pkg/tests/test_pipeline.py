from __future__ import annotations

import json

import pytest

from struxmm.io import read_decomposition
from struxmm.pipeline import PipelineConfig, PipelineError, run_pipeline
from struxmm.rings import INTEGER
from struxmm.tensor import Shape, verify


def test_pipeline_222(tmp_path):
    cfg = PipelineConfig(Shape(2, 2, 2), budget=20_000, plateau=5_000, symmetry_trials=200)
    rep = run_pipeline(cfg, tmp_path)
    assert rep.rank == 7 and rep.indicator == "1^7"
    assert abs(rep.omega0 - 2.8074) < 5e-4
    assert rep.L == pytest.approx(rep.A / 3 + 1)
    final = read_decomposition(rep.artifacts["step4.dec"])
    assert final.ring == INTEGER and verify(final).ok
    for name in ("step1.dec", "step2.dec", "step3.dec", "step4.dec", "restriction.txt",
                 "run.log", "report.txt"):
        assert (tmp_path / name).exists()
    stages = [json.loads(line)["stage"] for line in (tmp_path / "run.log").read_text().splitlines()]
    assert stages == ["rank", "structure", "symmetry", "lift"]
    assert "rank 7" in (tmp_path / "report.txt").read_text()


def test_pipeline_is_deterministic(tmp_path):
    cfg = PipelineConfig(Shape(2, 2, 2), budget=5_000, symmetry_trials=50)
    a = run_pipeline(cfg, tmp_path / "a")
    b = run_pipeline(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "step4.dec").read_text() == (tmp_path / "b" / "step4.dec").read_text()
    assert a.lines() == b.lines()


def test_pipeline_degenerate_112(tmp_path):
    rep = run_pipeline(PipelineConfig(Shape(1, 1, 2), budget=1000), tmp_path)
    assert rep.rank == 2
    assert rep.omega0 is None and "volume" in rep.omega_note
    assert any(line.startswith("omega0 n/a") for line in rep.lines())


def test_zero_budget_passes_standard_through(tmp_path):
    rep = run_pipeline(PipelineConfig(Shape(2, 2, 2), budget=0), tmp_path)
    assert rep.rank == 8 and rep.indicator == "1^8"
    assert rep.omega0 == pytest.approx(3.0)


def test_too_large_shape(tmp_path):
    with pytest.raises(PipelineError) as exc:
        run_pipeline(PipelineConfig(Shape(4, 4, 4)), tmp_path)
    assert exc.value.stage == "setup"


def test_lift_failure_is_stage_tagged(tmp_path, monkeypatch):
    import struxmm.pipeline as pl
    from struxmm.search.hensel import LiftFailure, LiftResult

    monkeypatch.setattr(pl, "hensel_lift", lambda *a, **k: LiftResult(
        None, 1, LiftFailure(1, "zero", "forced")))
    with pytest.raises(PipelineError) as exc:
        run_pipeline(PipelineConfig(Shape(2, 2, 2), budget=2000), tmp_path)
    assert exc.value.stage == "lift"
    assert (tmp_path / "step3.dec").exists() and not (tmp_path / "step4.dec").exists()
    assert (tmp_path / "run.log").exists()


def test_workers_merge(tmp_path):
    cfg = PipelineConfig(Shape(2, 2, 2), budget=3_000, symmetry_trials=20, workers=2)
    rep = run_pipeline(cfg, tmp_path)
    assert rep.rank == 7
