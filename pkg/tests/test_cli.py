import json

import numpy as np
import pytest

from egokit import csvio
from egokit.benchfn import branin
from egokit.cli import main

BRANIN_CFG = {"lower": [-5, 0], "upper": [10, 15], "budget_total": 24, "initial_size": 10, "seed": 1, "qei_draws": 1000}


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(BRANIN_CFG))
    return p


def evaluate_csv(src, dst):
    header, data = csvio.read_table(src)
    d = sum(h.startswith("x") for h in header)
    X = data[:, :d]
    csvio.write_table(dst, [f"x{j + 1}" for j in range(d)] + ["y"], np.column_stack([X, -branin(X)]))


def start_campaign(tmp_path, cfg):
    assert main(["design", "--config", str(cfg), "--out", str(tmp_path / "design.csv"), "--state", str(tmp_path / "st.json")]) == 0
    evaluate_csv(tmp_path / "design.csv", tmp_path / "res.csv")
    assert main(["tell", "--state", str(tmp_path / "st.json"), "--results", str(tmp_path / "res.csv")]) == 0


def test_design_shape_and_determinism(tmp_path, cfg):
    for name in ("a", "b"):
        assert main(["design", "--config", str(cfg), "--out", str(tmp_path / f"{name}.csv"), "--state", str(tmp_path / f"{name}.json")]) == 0
    header, data = csvio.read_table(tmp_path / "a.csv")
    assert header == ["x1", "x2"] and data.shape == (10, 2)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("bounds", [{"lower": [0, 0], "upper": [1]}, {"lower": [1, 0], "upper": [0, 1]}, {"lower": "x", "upper": [1, 1]}, {}])
def test_design_bad_bounds(tmp_path, bounds, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"budget_total": 20, **bounds}))
    assert main(["design", "--config", str(p), "--out", str(tmp_path / "d.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_seed_environment_override(tmp_path, cfg, monkeypatch):
    monkeypatch.setenv("EGOKIT_SEED", "77")
    main(["design", "--config", str(cfg), "--out", str(tmp_path / "e.csv"), "--state", str(tmp_path / "e.json")])
    main(["design", "--config", str(cfg), "--out", str(tmp_path / "f.csv"), "--state", str(tmp_path / "f.json"), "--seed", "77"])
    monkeypatch.delenv("EGOKIT_SEED")
    main(["design", "--config", str(cfg), "--out", str(tmp_path / "g.csv"), "--state", str(tmp_path / "g.json")])
    assert (tmp_path / "e.csv").read_bytes() == (tmp_path / "f.csv").read_bytes()
    assert (tmp_path / "e.csv").read_bytes() != (tmp_path / "g.csv").read_bytes()


def test_suggest_batch_of_ten_is_idempotent(tmp_path, cfg, capsys):
    start_campaign(tmp_path, cfg)
    st = str(tmp_path / "st.json")
    assert main(["suggest", "--state", st, "--out", str(tmp_path / "p1.csv")]) == 0
    assert main(["suggest", "--state", st, "--out", str(tmp_path / "p2.csv")]) == 0
    header, data = csvio.read_table(tmp_path / "p1.csv")
    assert header == ["x1", "x2", "ei"] and data.shape == (10, 3)
    assert (tmp_path / "p1.csv").read_bytes() == (tmp_path / "p2.csv").read_bytes()


def test_tell_protocol(tmp_path, cfg, capsys):
    start_campaign(tmp_path, cfg)
    st = str(tmp_path / "st.json")
    assert "incumbent" in capsys.readouterr().out
    main(["suggest", "--state", st, "--out", str(tmp_path / "p.csv"), "--batch", "4"])
    evaluate_csv(tmp_path / "p.csv", tmp_path / "r.csv")
    header, data = csvio.read_table(tmp_path / "r.csv")
    csvio.write_table(tmp_path / "partial.csv", header, data[:3])
    assert main(["tell", "--state", st, "--results", str(tmp_path / "partial.csv")]) == 3
    assert main(["tell", "--state", st, "--results", str(tmp_path / "r.csv")]) == 0
    assert main(["tell", "--state", st, "--results", str(tmp_path / "r.csv")]) == 3
    _, ev = csvio.read_table(tmp_path / "st.evaluations.csv", allow_empty_cells=True)
    assert ev.shape == (14, 4)


def test_tell_before_design_told_rejects_suggest(tmp_path, cfg):
    main(["design", "--config", str(cfg), "--out", str(tmp_path / "d.csv"), "--state", str(tmp_path / "st.json")])
    assert main(["suggest", "--state", str(tmp_path / "st.json")]) == 3


def test_non_numeric_cell(tmp_path, cfg, capsys):
    start_campaign(tmp_path, cfg)
    ev = tmp_path / "st.evaluations.csv"
    lines = ev.read_text().splitlines()
    lines[4] = "1.0,oops,3,"
    ev.write_text("\n".join(lines) + "\n")
    assert main(["suggest", "--state", str(tmp_path / "st.json")]) == 2
    err = capsys.readouterr().err
    assert "row 5" in err and "column 'x2'" in err


def test_interpolate(tmp_path):
    data = tmp_path / "fr.csv"
    data.write_text("Q_low,R_low,Q_doe,R_doe,Q_high,R_high\n1,3,2,10,3,21\n1000,0.3,2200,0.45,4000,0.33\n")
    out = tmp_path / "o.csv"
    assert main(["interpolate", "--data", str(data), "--out", str(out), "--target-q", "1.5"]) == 0
    header, res = csvio.read_table(out)
    assert header[-4:] == ["a", "b", "c", "R_target"]
    assert res[0, -4:] == pytest.approx([2.0, 1.0, 0.0, 6.0], abs=1e-9)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"flowrate": {"target_q": 2500}}))
    assert main(["interpolate", "--data", str(data), "--config", str(cfg), "--out", str(out)]) == 0
    _, res = csvio.read_table(out)
    a, b, c = res[1, -4:-1]
    assert res[1, -1] == pytest.approx(a * 2500**2 + b * 2500 + c)
    assert 0.3 < res[1, -1] < 0.5


def test_interpolate_duplicate_flow_rate(tmp_path):
    data = tmp_path / "fr.csv"
    data.write_text("Q_low,R_low,Q_doe,R_doe,Q_high,R_high\n1000,0.3,1000,0.35,4000,0.33\n")
    assert main(["interpolate", "--data", str(data), "--out", str(tmp_path / "o.csv")]) == 2


def test_diagnose_report(tmp_path):
    X = np.linspace(0, 1, 15)[:, None]
    data = tmp_path / "ev.csv"
    csvio.write_table(data, ["x1", "y"], np.column_stack([X, 1 + 2 * X[:, 0]]))
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lower": [0], "upper": [1]}))
    out = tmp_path / "rep.json"
    assert main(["diagnose", "--data", str(data), "--config", str(cfg), "--out", str(out)]) == 0
    text = out.read_text()
    report = json.loads(text)
    assert report["r_squared"] == pytest.approx(1.0, abs=1e-6)
    assert set(report) >= {"r_squared", "rmse", "rma", "cr95", "loo_mean", "loo_sd"}
    assert csvio.dump_json(json.loads(text)) == text


def test_diagnose_with_pending_batch(tmp_path, cfg):
    start_campaign(tmp_path, cfg)
    st = str(tmp_path / "st.json")
    main(["suggest", "--state", st, "--batch", "3"])
    out = tmp_path / "rep.json"
    assert main(["diagnose", "--state", st, "--out", str(out), "--samples-csv", str(tmp_path / "s.csv")]) == 0
    batch = json.loads(out.read_text())["batch"]
    assert np.array(batch["conditional_correlation"]).shape == (3, 3)
    assert len(batch["ei_samples"]) == 1000
    assert sum(batch["ei_histogram"]["counts"]) == 1000
    assert csvio.read_table(tmp_path / "s.csv")[1].shape == (1000, 1)


def test_diagnose_degenerate(tmp_path):
    data = tmp_path / "ev.csv"
    csvio.write_table(data, ["x1", "y"], [[0.1, 2.0], [0.5, 2.0], [0.9, 2.0]])
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lower": [0], "upper": [1]}))
    assert main(["diagnose", "--data", str(data), "--config", str(cfg), "--out", str(tmp_path / "r.json")]) == 4


def test_run_bench(tmp_path, capsys):
    args = ["run-bench", "branin", "--budget", "16", "--initial", "10", "--seed", "3"]
    assert main(args + ["--history", str(tmp_path / "h1.csv")]) == 0
    first = capsys.readouterr().out
    assert main(args + ["--history", str(tmp_path / "h2.csv")]) == 0
    assert capsys.readouterr().out == first
    assert "regret" in first
    _, h = csvio.read_table(tmp_path / "h1.csv", allow_empty_cells=True)
    assert h.shape == (16, 4)


def test_run_bench_pure_lhs(tmp_path, capsys):
    assert main(["run-bench", "branin", "--budget", "12", "--initial", "12", "--history", str(tmp_path / "h.csv")]) == 0
    _, h = csvio.read_table(tmp_path / "h.csv", allow_empty_cells=True)
    assert h.shape == (12, 4) and np.all(np.isnan(h[:, 3]))


def test_run_bench_unknown(capsys):
    assert main(["run-bench", "rastrigin", "--budget", "10"]) == 2
