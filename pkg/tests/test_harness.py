import json
import math

import pytest

from erasure_broadcast.harness import (
    CSV_COLUMNS,
    ExperimentPlan,
    aggregate,
    Cell,
    measure_logstar_scaling,
    run_experiment,
    scaling_csv,
    to_csv,
    to_json,
    wilson,
    write_report,
)


def wilson_direct(k, n, z=1.96):
    # the two roots of (p - k/n)^2 = z^2 p (1 - p) / n
    ph = k / n
    a = 1 + z * z / n
    b = -(2 * ph + z * z / n)
    c = ph * ph
    disc = math.sqrt(max(0.0, b * b - 4 * a * c))
    return (-b - disc) / (2 * a), (-b + disc) / (2 * a)


def test_wilson_zero_successes():
    lo, hi = wilson(0, 100)
    assert lo == 0.0 and hi == pytest.approx(0.0370, abs=5e-5)


@pytest.mark.parametrize("k,n", [(0, 100), (5, 100), (50, 100), (99, 100), (100, 100), (3, 7)])
def test_wilson_against_quadratic(k, n):
    for got, want in zip(wilson(k, n), wilson_direct(k, n)):
        assert got == pytest.approx(want, abs=1e-12)


def test_wilson_shrinks():
    w100 = wilson(50, 100)
    w400 = wilson(200, 400)
    ratio = (w100[1] - w100[0]) / (w400[1] - w400[0])
    assert ratio == pytest.approx(2.0, rel=0.02)


def test_wilson_validation():
    with pytest.raises(ValueError):
        wilson(1, 0)
    with pytest.raises(ValueError):
        wilson(5, 4)


def test_zero_noise_plan():
    stats = run_experiment(ExperimentPlan("learn_input", [16, 256], [0.0], trials=10, seed=1))
    for s in stats:
        assert s.successes == 10 and s.rate == 1.0
        assert s.ci[1] == 1.0
        assert s.successes + s.fwk + s.fwok == s.trials


def test_plan_validation_before_running():
    bad = [
        ExperimentPlan("nope", [8], [0.0]),
        ExperimentPlan("learn_input", [8], [0.0], trials=0),
        ExperimentPlan("learn_input", [8], [1.0]),
        ExperimentPlan("learn_input", [20000], [0.0]),
        ExperimentPlan("hamming_weight", [8], [0.0]),
        ExperimentPlan("large_alphabet", [8], [0.7]),
        ExperimentPlan("learn_input", [8], [0.1], gammas=[]),
        ExperimentPlan("learn_input", [], [0.1]),
    ]
    for plan in bad:
        with pytest.raises(ValueError):
            run_experiment(plan)


def test_gamma_target_cells():
    plan = ExperimentPlan("and", [10], [0.5, 0.1], gamma_target=0.01)
    assert [c.gamma for c in plan.cells()] == [7, 2]
    plan = ExperimentPlan("and", [10, 20], [0.1], gammas=[1, 3])
    assert len(plan.cells()) == 4


def test_report_is_deterministic(tmp_path):
    plan = ExperimentPlan("equality", [20], [0.3], gammas=[1, 2], trials=6, seed=9)
    a, b = to_csv(run_experiment(plan)), to_csv(run_experiment(plan))
    assert a == b
    assert a.splitlines()[0] == ",".join(CSV_COLUMNS)
    plan.jobs = 2
    assert to_csv(run_experiment(plan)) == a
    write_report(run_experiment(plan), tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text() == a


def test_json_mirrors_csv():
    stats = run_experiment(ExperimentPlan("and", [12], [0.2], trials=5, seed=2))
    doc = json.loads(to_json(stats))
    assert doc["columns"] == list(CSV_COLUMNS)
    assert list(doc["rows"][0]) == list(CSV_COLUMNS)
    assert doc["rows"][0]["trials"] == 5


def test_seed_changes_results():
    a = run_experiment(ExperimentPlan("equality", [30], [0.4], trials=20, seed=1))
    b = run_experiment(ExperimentPlan("equality", [30], [0.4], trials=20, seed=2))
    assert to_csv(a) != to_csv(b)


def test_aggregate_counts():
    s = aggregate(Cell("and", 4, 0.1, 1), [("success", 10), ("fail_with_knowledge", 12), ("success", 10)])
    assert (s.successes, s.fwk, s.fwok, s.trials, s.max_rounds) == (2, 1, 0, 3, 12)
    assert s.mean_rounds == pytest.approx(32 / 3)


def test_every_protocol_runs():
    for proto, n, p in [
        ("learn_input", 120, 0.1),
        ("and", 30, 0.1),
        ("equality", 30, 0.1),
        ("large_alphabet", 16, 0.1),
        ("hamming_weight", 64, 0.05),
    ]:
        (s,) = run_experiment(ExperimentPlan(proto, [n], [p], gamma_target=0.01, trials=2, seed=4))
        assert s.trials == 2 and s.successes + s.fwk + s.fwok == 2


def test_logstar_scaling():
    rows = measure_logstar_scaling([64, 1024, 4096, 2**16])
    by_n = {r.n: r for r in rows}
    assert by_n[64].depth == 0 and by_n[1024].depth == 1
    assert by_n[4096].rounds_used - 336 == 0
    assert by_n[2**16].rounds_used is None and not by_n[2**16].simulated
    assert all(r.depth <= r.log_star + 2 for r in rows)
    text = scaling_csv(rows)
    assert text.splitlines()[0] == "n,rounds_used,depth,log_star,simulated"
    with pytest.raises(ValueError):
        measure_logstar_scaling([1024, 64])
