import json
import math

import numpy as np
import pytest

from hccgl.cli import main
from hccgl.experiments import (
    CaseConfig,
    ResultTable,
    case2_scenario,
    config_echo,
    emit_artifacts,
    run_case,
)
from hccgl.harness import TrainConfig

QUICK = {"generations": 2, "population": 6, "bootstrap_samples": 4, "hidden": [4, 4]}


def test_png_baseline_table(tmp_path):
    out = run_case(CaseConfig(case="case1", eta=0.0, skip_training=True))
    t = out.table.to_dict()
    assert len(t["missiles"]) == 4
    assert max(t["zem"]) < 1.0
    assert max(t["e_t"]) - min(t["e_t"]) > 1.0


def test_case2_echo():
    echo = config_echo(case2_scenario(), TrainConfig())
    assert echo["target"]["maneuver_amplitude"] == pytest.approx(49.05)
    assert echo["target"]["maneuver_period"] == pytest.approx(14.0)
    assert echo["target"]["v"] == 130.0
    assert echo["target"]["alpha_deg"] == pytest.approx(162.0)


def test_echo_covers_tables():
    echo = config_echo(case2_scenario(), TrainConfig())
    assert echo["constraints"]["a_lmax_g"] == pytest.approx(50)
    assert echo["constraints"]["a_vmax_g"] == pytest.approx(5)
    hp = echo["hyperparameters"]
    expected = dict(tau_ms=5, eta=0.3, learning_rate=0.015, sigma=0.2, l=20, m=140, rho=50, nav_constant=4,
                    k_a=1, k_t=0.2, xi_a=10, xi_t=1, lambda_a=4000, lambda_t=2000, beta_a=10, beta_t=2)
    for k, v in expected.items():
        assert hp[k] == pytest.approx(v), k


def test_monte_carlo_is_reproducible():
    cfg = CaseConfig(case="case3-mc", episodes=20, seed=7, train=QUICK)
    a, b = run_case(cfg), run_case(cfg)
    assert np.array_equal(a.table.episodes, b.table.episodes)
    stats = a.table.statistics()
    assert set(stats) == {"e_t", "e_a_deg", "zem"}
    assert all(stats[m][s].shape == (5,) for m in stats for s in stats[m])
    assert np.all(a.table.episodes >= 0)


def test_monte_carlo_launch_points():
    from hccgl.experiments import case3_sampler

    scen = case3_sampler()(np.random.default_rng(0))
    for i, m in enumerate(scen.missiles, start=1):
        assert 2000 <= m.x <= 2600
        assert 11000 - 2000 * i <= m.y <= 13000 - 2000 * i
        assert (m.v, m.alpha) == (600.0, 0.0)
    assert scen.frameskip == 40 and (scen.target.x, scen.target.y) == (10000.0, 9000.0)


def test_statistics_recomputable():
    recs = np.abs(np.random.default_rng(0).normal(size=(7, 3, 3)))
    table = ResultTable(episodes=recs)
    st = table.statistics()
    assert np.array_equal(st["zem"]["max"], recs[:, :, 2].max(axis=0))
    assert np.array_equal(st["e_t"]["mean"], recs[:, :, 0].mean(axis=0))


def test_artifacts(tmp_path):
    out = run_case(CaseConfig(case="case1", eta=0.0, skip_training=True, n_missiles=2))
    paths = emit_artifacts(out, tmp_path)
    assert (tmp_path / "history.csv").read_text().strip().count("\n") == 0  # header only
    traj = np.genfromtxt(paths["trajectories"], delimiter=",", names=True)
    res = out.rollouts[0]
    # one row per step begun while active; the step containing the impact is the last
    assert len(traj) == sum(int(math.floor(t / 0.005)) + 1 for t in res.impact_time)
    summary = json.loads(paths["summary"].read_text())
    assert summary["case_config"]["n_missiles"] == 2
    assert summary["config"]["hyperparameters"]["tau_ms"] == 5.0


def test_summary_round_trip(tmp_path):
    cfg = CaseConfig(case="case1", n_missiles=2, seed=3, train=QUICK)
    first = json.loads(emit_artifacts(run_case(cfg), tmp_path / "a")["summary"].read_text())
    again = CaseConfig.from_mapping(first["case_config"])
    second = json.loads(emit_artifacts(run_case(again), tmp_path / "b")["summary"].read_text())
    assert first == second


def test_bad_configs():
    with pytest.raises(ValueError):
        CaseConfig(case="case9")
    with pytest.raises(ValueError):
        CaseConfig(train={"momentum": 0.9})
    with pytest.raises(ValueError):
        CaseConfig.from_mapping({"cases": "case1"})


def test_yaml_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("case: case2\nseed: 4\neta: 0.5\ntrain:\n  population: 10\n  hidden: [2, 3]\n")
    cfg = CaseConfig.from_yaml(p)
    tc = cfg.train_config()
    assert (cfg.case, cfg.seed, cfg.eta) == ("case2", 4, 0.5)
    assert (tc.population, tc.hidden, tc.seed) == (10, (2, 3), 4)


def test_cli_run_case(tmp_path, capsys):
    rc = main(["run-case", "case1", "--eta", "0", "--skip-training", "--out-dir", str(tmp_path)])
    assert rc == 0
    assert "zem" in capsys.readouterr().out
    assert (tmp_path / "summary.json").exists()


def test_cli_flags_override_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("case: case1\nn_missiles: 2\nseed: 1\ntrain:\n  generations: 1\n  population: 4\n"
                 "  bootstrap_samples: 2\n  hidden: [2, 2]\n")
    rc = main(["train", "case1", "--config", str(p), "--population", "6", "--out-dir", str(tmp_path / "o")])
    assert rc == 0
    summary_rows = (tmp_path / "o" / "history.csv").read_text().splitlines()
    assert len(summary_rows) == 2
    assert (tmp_path / "o" / "checkpoint.json").exists()


def test_cli_checkpoint_resume(tmp_path):
    out = tmp_path / "o"
    args = ["run-case", "case1", "--missiles", "2", "--generations", "1", "--population", "4", "--out-dir", str(out)]
    assert main(args + ["--config", str(_quick_yaml(tmp_path))]) == 0
    ck = out / "checkpoint.json"
    assert main(["run-case", "case1", "--missiles", "2", "--skip-training", "--checkpoint", str(ck),
                 "--out-dir", str(tmp_path / "p")]) == 0
    s = json.loads((tmp_path / "p" / "summary.json").read_text())
    assert s["generations_trained"] == 1


def _quick_yaml(tmp_path):
    p = tmp_path / "q.yaml"
    p.write_text("train:\n  bootstrap_samples: 2\n  hidden: [2, 2]\n")
    return p


def test_cli_monte_carlo_and_bench(tmp_path, capsys):
    assert main(["monte-carlo", "--config", str(_quick_yaml(tmp_path)), "--generations", "1", "--population", "4",
                 "--episodes", "3", "--out-dir", str(tmp_path / "mc")]) == 0
    assert (tmp_path / "mc" / "episodes.csv").read_text().count("\n") == 1 + 3 * 5
    assert main(["bench-gradient", "--trials", "5", "--out-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "trials.csv").exists()


def test_cli_reports_bad_input(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("colour: blue\n")
    assert main(["run-case", "case1", "--config", str(p)]) == 2
    assert "unknown config keys" in capsys.readouterr().err
