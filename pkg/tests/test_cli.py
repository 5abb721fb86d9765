import csv
import io
import json

from barrier_bilevel import cli, testbed
from barrier_bilevel.outer import TRACE_HEADER
from barrier_bilevel.problem import Box
from conftest import corrupt_grad_g
from test_pathfollow import failing_after


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


def drop_wall(text):
    rows = rows_of(text)
    return [r[:-1] for r in rows] if rows and rows[0][-1] == "wall_ms" else rows


def test_solve_example1(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code, _, err = run(["solve", "--problem", "example1", "--t", "0.1", "--eps", "1e-3",
                        "--x0", "1.0", "--out", str(out)], capsys)
    assert code == 0, err
    rows = rows_of(out.read_text())
    assert rows[0] == list(TRACE_HEADER)
    assert len(rows) >= 2


def test_unknown_problem(capsys):
    code, _, err = run(["solve", "--problem", "nope"], capsys)
    assert code == 1 and "unknown problem" in err
    code, _, err = run(["solve"], capsys)
    assert code == 1 and "unknown problem" in err


def test_zero_budget_exit(capsys):
    code, _, _ = run(["solve", "--problem", "toy_qp", "--max-outer", "0"], capsys)
    assert code == 2


def test_pathfollow_rounds(tmp_path, capsys):
    out = tmp_path / "rounds.csv"
    code, _, err = run(["pathfollow", "--problem", "toy_qp", "--t0", "0.2", "--eps0", "1e-2",
                        "--rounds", "4", "--max-outer", "50", "--out", str(out)], capsys)
    assert code in (0, 2), err
    rows = rows_of(out.read_text())
    assert rows[0] == ["i", "t_i", "eps_i", "best_stationarity", "status"]
    assert [float(r[1]) for r in rows[1:]] == [0.2 / 2**i for i in range(4)]
    assert [float(r[2]) for r in rows[1:]] == [1e-2 / 2**i for i in range(4)]
    for i in range(4):
        assert (tmp_path / f"rounds.round{i}.csv").exists()


def test_single_round_matches_solve(tmp_path, capsys):
    args = ["--problem", "toy_qp", "--max-outer", "10", "--x0", "1.0"]
    run(["solve", "--t", "0.1", "--eps", "1e-3", "--out", str(tmp_path / "s.csv")] + args, capsys)
    run(["pathfollow", "--t0", "0.1", "--eps0", "1e-3", "--rounds", "1",
         "--out", str(tmp_path / "p.csv")] + args, capsys)
    assert drop_wall((tmp_path / "s.csv").read_text()) == drop_wall((tmp_path / "p.round0.csv").read_text())


def test_failed_round_keeps_partial_trace(tmp_path, capsys, monkeypatch):
    monkeypatch.setitem(testbed.PROBLEMS, "flaky", lambda: failing_after(testbed.toy_qp_problem(), 12))
    out = tmp_path / "r.csv"
    code, _, _ = run(["pathfollow", "--problem", "flaky", "--t0", "0.2", "--rounds", "4",
                      "--max-outer", "5", "--out", str(out)], capsys)
    assert code == 1
    rows = rows_of(out.read_text())
    assert rows[-1][4].startswith("Failed(")
    assert len(rows_of((tmp_path / "r.round0.csv").read_text())) > 1


def test_verify_gap_example1(capsys):
    code, out, _ = run(["verify", "--suite", "gap", "--problem", "example1"], capsys)
    report = json.loads(out)
    assert code == 0
    assert report["suite"] == "gap" and report["checks"] == report["passes"] == 20
    assert report["worst_slack"] >= 0


def test_verify_margin_all_problems(capsys):
    code, out, _ = run(["verify", "--suite", "margin"], capsys)
    report = json.loads(out)
    assert code == 0 and report["passes"] == report["checks"] == 200


def test_verify_corrupted_gradient_fails(capsys, monkeypatch):
    monkeypatch.setitem(testbed.PROBLEMS, "corrupt", lambda: corrupt_grad_g(testbed.example1_problem()))
    code, out, err = run(["verify", "--suite", "derivatives", "--problem", "corrupt"], capsys)
    assert code == 1
    assert json.loads(out)["passes"] < json.loads(out)["checks"]
    assert "grad_g_y" in err


def test_verify_unknown_suite(capsys):
    code, _, err = run(["verify", "--suite", "bogus"], capsys)
    assert code == 1 and "unknown suite" in err


def test_sweep_example1_strictly_decreasing(capsys):
    code, out, _ = run(["sweep-t", "--problem", "example1", "--t0", "0.1", "--rounds", "5", "--x0", "0.5"],
                       capsys)
    rows = rows_of(out)
    assert code == 0
    assert rows[0] == ["t", "x_probe", "value_gap", "value_bound", "hypergrad_gap", "multiplier_gap"]
    assert [float(r[0]) for r in rows[1:]] == [0.1, 0.05, 0.025, 0.0125, 0.00625]
    gaps = [float(r[2]) for r in rows[1:]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_sweep_toy_qp_within_bound(capsys):
    code, out, _ = run(["sweep-t", "--problem", "toy_qp", "--t0", "0.1", "--rounds", "4", "--x0", "0.7"],
                       capsys)
    assert code == 0
    for r in rows_of(out)[1:]:
        assert float(r[2]) <= float(r[3])


def test_sweep_single_t(capsys):
    code, out, _ = run(["sweep-t", "--problem", "toy_qp", "--t", "0.05", "--rounds", "1"], capsys)
    assert code == 0 and len(rows_of(out)) == 2


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# toy run\nproblem = toy_qp\nt = 0.05\nmax_outer = 3\n"
                   "toy_qp.x_lower = 0.3\ninner.variant = standard\n", encoding="utf-8")
    out = tmp_path / "t.csv"
    code, _, _ = run(["solve", "--config", str(cfg), "--max-outer", "2", "--x0", "0.3", "--out", str(out)],
                     capsys)
    rows = rows_of(out.read_text())
    assert code == 2 and len(rows) == 3
    assert all(float(r[1]) == 0.05 for r in rows[1:])
    code, _, err = run(["solve", "--config", str(cfg), "--x0", "0.25"], capsys)
    assert code == 1 and "outside" in err


def test_problem_file(tmp_path, capsys):
    spec = tmp_path / "instance.cfg"
    spec.write_text("family = price\nprice.seed = 7\nprice.dims = 2,1,1\n", encoding="utf-8")
    settings = {"problem": str(spec)}
    prob = cli.build_problem(settings)
    assert prob.name == "price" and prob.n == 2
    assert isinstance(prob.upper_set, Box)


def test_bad_config_value(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("problem = toy_qp\nt = fast\n", encoding="utf-8")
    code, _, err = run(["solve", "--config", str(cfg)], capsys)
    assert code == 1 and "bad value" in err
