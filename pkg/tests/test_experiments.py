import json

import numpy as np
import pytest

from modellink.exceptions import InsufficientRows, ValidationError
from modellink.experiments import (
    CONTAMINATION_BETA,
    EXPERIMENTS,
    HPV_ORIGINAL,
    ExperimentSpec,
    default_spec,
    greedy_vs_exhaustive,
    hpv_setup,
    linkage_log_ratio,
    run_experiment,
    run_gaussian_toy,
)


def test_spec_validation():
    with pytest.raises(ValidationError, match="linear-six"):
        ExperimentSpec("bogus")
    with pytest.raises(ValidationError):
        default_spec("linear-six", n_grid=(100, 50))
    with pytest.raises(ValidationError):
        default_spec("linear-six", replications=0)
    with pytest.raises(ValidationError):
        default_spec("hpv-case")
    with pytest.raises(ValidationError):
        default_spec("contamination-csv")


def test_toy_report():
    greedy, exhaustive = run_gaussian_toy()
    assert [r.zeta_final for r in greedy] == [(0, 1), (1, 2), (1, 2)]
    assert exhaustive[2].zeta_final == greedy[2].zeta_final
    rep = run_experiment(default_spec("gaussian-toy"))
    assert rep.details["greedy"][0]["zeta"] == [1, 2]


def test_report_shape_and_determinism():
    spec = default_spec("linear-six", n_grid=(50, 80), replications=3, seed=7)
    a = run_experiment(spec)
    b = run_experiment(spec)
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()
    assert len(a.rows) == 2
    for rec in a.to_records():
        assert np.isnan(rec["se"]) or rec["se"] >= 0
    assert a.to_csv().splitlines()[0] == "n,method,metric,mean,se"
    json.loads(a.to_json())


def test_replications_are_independent_of_batching():
    full = run_experiment(default_spec("linear-six", n_grid=(60,), replications=3, seed=10))
    tail = run_experiment(default_spec("linear-six", n_grid=(60,), replications=1, seed=12))
    assert full.rows[0]["selected"][2] == tail.rows[0]["selected"][0]


def test_parallel_matches_serial():
    serial = run_experiment(default_spec("linear-six", n_grid=(60,), replications=4, seed=1))
    par = run_experiment(default_spec("linear-six", n_grid=(60,), replications=4, seed=1, threads=2))
    assert serial.to_json() == par.to_json()


def test_linear_six_greedy_efficiency_exact_when_correct():
    rep = run_experiment(default_spec("linear-six", n_grid=(150,), replications=4, seed=0))
    row = rep.rows[0]
    # every replication that selects G* uses the reference predictive object itself
    assert row["selection_accuracy"] == 1.0
    assert rep.metric(150, "greedy", "efficiency_ratio") == 1.0


def test_contamination_synthetic_small():
    rep = run_experiment(default_spec("contamination-synthetic", n_grid=(50,), replications=3, n_draws=300))
    assert rep.metric(50, "greedy", "excluded_L10") == 1.0
    assert CONTAMINATION_BETA.shape == (10,)


def test_contamination_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((700, 3))
    y = (rng.random(700) < 1 / (1 + np.exp(-(X @ [2.0, -1.5, 1.0])))).astype(int)
    p = tmp_path / "data.csv"
    np.savetxt(p, np.column_stack([y, X]), delimiter=",", header="y,a,b,c", comments="")
    rep = run_experiment(default_spec("contamination-csv", csv_path=str(p), n_grid=(50,), replications=2, n_draws=200))
    assert rep.metric(50, "greedy", "accuracy") > 0.6
    with pytest.raises(InsufficientRows):
        run_experiment(default_spec("contamination-csv", csv_path=str(p), n_grid=(70,), replications=1))


def test_hpv_table_within_published_ranges():
    o = HPV_ORIGINAL
    assert o["x1"].min() >= 37 and o["x1"].max() <= 700
    assert np.all(o["y1"] / o["x1"] <= 0.2)
    assert o["x2"].min() >= 20 and o["x2"].max() <= 550
    assert o["y2"].min() >= 10 and o["y2"].max() <= 700


@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_hpv_truths_are_valid(case):
    g, t1, t2 = hpv_setup(case)
    assert t1.theta.shape == (13,) and t2.theta.shape == (14,)
    assert np.all((t1.theta > 0) & (t1.theta < 1))
    assert np.all((t2.theta[:13] > 0) & (t2.theta[:13] < 1))
    if case in (1, 2, 4):
        np.testing.assert_allclose(t1.theta, t2.theta[:13])


def test_hpv_case_three_keeps_learners_apart():
    rep = run_experiment(default_spec("hpv-case", case=3, replications=3, test_size=200, n_draws=300))
    assert rep.metric(13, "greedy", "linked") == 0.0


def test_ratio_helpers():
    assert linkage_log_ratio(800, 0) > 0
    assert linkage_log_ratio(800, 0, delta=0.5) < 0
    greedy, exhaustive = greedy_vs_exhaustive(200, 0)
    assert 0 in greedy and 0 in exhaustive


def test_experiment_names():
    assert set(EXPERIMENTS) >= {"gaussian-toy", "linear-six", "logistic-five", "hpv-case"}
