import json
import logging

import numpy as np
import pandas as pd
import pytest

from floodbound.analysis.returns import (
    REPORT_COLUMNS,
    aggregate,
    relative_to_baseline,
    return_level,
    return_levels,
    type1_quantile,
    width_ratio,
    write_report,
)
from floodbound.errors import NumericalError, ValidationError
from floodbound.params.dataclasses import B2
from floodbound.portfolio.moments import summarize_years
from floodbound.simulation.pipeline import run_conservative
from floodbound.simulation.standard import run_standard


YEARS = np.arange(1.0, 1001.0)


def test_return_level_order_statistics():
    shuffled = np.random.default_rng(0).permutation(YEARS)
    assert return_level(shuffled, 2) == 501.0
    assert return_level(shuffled, 200) == 996.0
    assert return_level(shuffled, 3) == 667.0
    assert return_level(shuffled, 1000) == 1000.0
    assert return_level(np.full(50, 7.5), 10) == 7.5


def test_return_level_rejects_bad_periods():
    with pytest.raises(ValidationError):
        return_level(YEARS[:10], 11)
    with pytest.raises(ValidationError):
        return_level(YEARS, 1)


def test_return_levels_rows_and_monotone():
    rng = np.random.default_rng(1)
    values = rng.gamma(2.0, 1.0, (6, 500))
    ks = (2, 5, 10, 50, 100, 500)
    q = return_levels(values, ks)
    assert q.shape == (6, len(ks))
    assert np.all(np.diff(q, axis=1) >= 0.0)
    for i in range(6):
        assert q[i, 2] == return_level(values[i], 10)
    assert np.array_equal(return_level(values, 10), q[:, 2])


def test_type1_quantile_is_an_order_statistic():
    x = np.array([4.0, 1.0, 3.0, 2.0])
    assert type1_quantile(x, 0.5) == 2.0
    assert type1_quantile(x, 0.51) == 3.0
    assert type1_quantile(x, 1.0) == 4.0


# ---------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------

def _matrices(M=200, n_y=400, seed=0):
    rng = np.random.default_rng(seed)
    base = rng.gamma(3.0, 1e5, (M, n_y))
    spread = rng.gamma(2.0, 2e4, (M, n_y))
    return np.maximum(base - spread, 0.0), base, base + spread


def test_single_replicate_point_equals_interval():
    lo, _, hi = _matrices(M=1)
    report = aggregate(lo, hi, (2, 10, 100))
    assert np.array_equal(report.point_lower, report.pi_low)
    assert np.array_equal(report.point_upper, report.pi_high)


def test_equal_matrices_collapse_the_sandwich():
    _, mid, _ = _matrices()
    report = aggregate(mid, mid, (2, 20, 200))
    assert np.array_equal(report.point_lower, report.point_upper)
    assert np.all(report.pi_low <= report.point_lower)
    assert np.all(report.point_upper <= report.pi_high)


def test_report_invariants_with_baseline():
    lo, mid, hi = _matrices()
    ks = (2, 5, 10, 50, 100, 200)
    report = aggregate(lo, hi, ks, baseline=mid, bootstrap_B=50, seed=1)
    assert report.M == 200
    assert report.ks == ks
    assert np.all(report.point_lower <= report.baseline_point)
    assert np.all(report.baseline_point <= report.point_upper)
    assert np.all(report.pi_low <= report.baseline_lo)
    assert np.all(report.baseline_hi <= report.pi_high)
    assert np.all(report.width_ratio >= 1.0)
    assert np.all(np.isfinite(report.width_ratio_se)) and np.all(report.width_ratio_se >= 0.0)
    assert list(report.to_frame().columns) == list(REPORT_COLUMNS)


def test_few_replicates_warn(caplog):
    lo, _, hi = _matrices(M=10, n_y=20)
    with caplog.at_level(logging.WARNING, logger="floodbound.analysis.returns"):
        aggregate(lo, hi, (2, 5))
    assert "M=10" in caplog.text


def test_aggregate_rejects_mismatched_shapes():
    lo, _, hi = _matrices(M=5, n_y=20)
    with pytest.raises(ValidationError):
        aggregate(lo, hi[:, :10], (2,))


def test_width_ratio_of_identical_reports_is_one():
    _, mid, _ = _matrices(M=100, n_y=100)
    report = aggregate(mid, mid, (2, 10))
    ratio, se = width_ratio(report, report, bootstrap_B=40, seed=0)
    assert np.allclose(ratio, 1.0)
    assert np.all(se < 1e-12)


def test_width_ratio_without_bootstrap_has_no_se():
    lo, mid, hi = _matrices(M=50, n_y=100)
    ratio, se = width_ratio(aggregate(lo, hi, (2,)), aggregate(mid, mid, (2,)), bootstrap_B=0)
    assert ratio.shape == (1,)
    assert np.all(np.isnan(se))


def test_zero_width_baseline_raises():
    lo, _, hi = _matrices(M=50, n_y=20)
    constant = np.full((50, 20), 3.0)
    with pytest.raises(NumericalError, match="k=2"):
        width_ratio(aggregate(lo, hi, (2, 5)), aggregate(constant, constant, (2, 5)))


def test_relative_to_baseline():
    lo, mid, hi = _matrices(M=60, n_y=100)
    report = aggregate(lo, hi, (2, 10), baseline=mid)
    rel = relative_to_baseline(report)
    expected = (report.point_upper - report.baseline_point) / report.baseline_point
    assert np.allclose(rel["point_upper"].to_numpy(), expected)
    assert np.all(rel["point_lower"] <= 0.0)
    with pytest.raises(ValidationError):
        relative_to_baseline(aggregate(lo, hi, (2,)))


def test_write_report_csv_and_json(tmp_path):
    lo, mid, hi = _matrices(M=60, n_y=100)
    with_base = aggregate(lo, hi, (2, 10, 50), baseline=mid, bootstrap_B=20)
    csv_path, json_path = write_report(with_base, tmp_path / "out")
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == list(REPORT_COLUMNS)
    assert frame["k"].tolist() == [2, 10, 50]
    assert np.allclose(frame["point_upper"].to_numpy(), with_base.point_upper)

    doc = json.loads(json_path.read_text(encoding="utf-8"))
    assert doc["M"] == 60
    assert [row["k"] for row in doc["rows"]] == [2, 10, 50]

    # missing baseline columns become null in the JSON mirror
    _, plain = write_report(aggregate(lo, hi, (2,)), tmp_path / "plain", stem="bare")
    row = json.loads(plain.read_text(encoding="utf-8"))["rows"][0]
    assert row["baseline_point"] is None and row["width_ratio"] is None
    assert plain.name == "bare.json"


@pytest.mark.slow
def test_conservative_levels_sandwich_the_standard_ones(make_inputs):
    _, events = make_inputs(300, 200, seed=11)
    summaries = summarize_years(events, years=list(range(200)))
    standard = run_standard(events, M=200, seed=2, years=list(range(200)))
    lower, upper = run_conservative(summaries, M=200, family=B2, path="direct", seed=2)
    report = aggregate(lower, upper, (2, 10, 50, 100), baseline=standard)
    assert np.all(report.point_lower <= report.baseline_point)
    assert np.all(report.baseline_point <= report.point_upper)
    assert np.all(report.width_ratio > 1.0)
