import numpy as np
import pandas as pd
import pytest

from floodbound.analysis.returns import return_levels, type1_quantile
from floodbound.analysis.sensitivity import (
    SensitivityResult,
    pooled_quantiles,
    run_sensitivity,
    samples_frame,
    variance_components,
    variance_ratio,
    variance_table,
    write_sensitivity,
)
from floodbound.errors import ValidationError
from floodbound.params.dataclasses import B2, EventTable, PerturbationScenario
from floodbound.params.perturbation import perturb, risk_signs, scenario
from floodbound.portfolio.moments import summarize_years
from floodbound.simulation.pipeline import PreparedInputs, run_conservative
from floodbound.simulation.rng import derived_seed


def _table(mu, risk=None, conc=10.0):
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    n = mu.size
    risk = np.arange(n) if risk is None else np.asarray(risk)
    n_risks = int(risk.max()) + 1
    return EventTable(
        year=np.zeros(n, dtype=np.int64),
        event=np.arange(n, dtype=np.int64),
        risk=risk.astype(np.int64),
        p=np.full(n, 0.1),
        alpha=mu * conc,
        beta=(1.0 - mu) * conc,
        exposure=np.ones(n),
        n_sub=np.ones(n, dtype=np.int64),
        risk_ids=np.array([f"r{i}" for i in range(n_risks)], dtype=object),
    )


def _mu(table):
    return table.alpha / (table.alpha + table.beta)


def _prepared(events):
    years = events.years.astype(np.int64)
    return PreparedInputs(portfolio=None, events=events, years=years, summaries=summarize_years(events))


# ---------------------------------------------------------------------
# scenarios and perturbation
# ---------------------------------------------------------------------

def test_scenario_defaults():
    assert scenario("P0").delta == 0.0
    assert scenario("p1").tag == "P1"
    assert scenario("P3").delta == 0.05 and scenario("P3").R == 100
    assert scenario("P4").delta == 0.25
    # deterministic scenarios ignore R
    assert scenario("P2", R=7).R == 1
    assert scenario("P4", R=7, seed=3).R == 7
    assert scenario("P1", delta=0.1).label == "P1(delta=0.1)"


def test_scenario_rejects_bad_arguments():
    with pytest.raises(ValidationError):
        scenario("P9")
    with pytest.raises(ValidationError):
        scenario("P1", delta=1.0)
    with pytest.raises(ValidationError):
        scenario("P3", R=0)


def test_scenario_checks_direct_construction():
    assert PerturbationScenario("P3", delta=0.05, R=4).random_sign
    with pytest.raises(ValidationError, match="unknown scenario"):
        PerturbationScenario("p3")
    with pytest.raises(ValidationError, match="delta"):
        PerturbationScenario("P4", delta=1.2, R=2)
    with pytest.raises(ValidationError, match="R must"):
        PerturbationScenario("P3", delta=0.05, R=0)
    with pytest.raises(ValidationError, match="deterministic"):
        PerturbationScenario("P1", delta=0.05, R=3)


def test_identity_perturbations():
    table = _table([0.2, 0.5])
    assert perturb(table, scenario("P0")) is table
    assert perturb(table, scenario("P1", delta=0.0)) is table


def test_deterministic_perturbation_values():
    table = _table([0.5, 0.93])
    up = perturb(table, scenario("P1"))
    assert _mu(up) == pytest.approx([0.525, 0.95])
    assert np.allclose(up.alpha + up.beta, table.alpha + table.beta)

    down = perturb(table, scenario("P2"))
    assert _mu(down) == pytest.approx([0.475, 0.8835])
    assert np.array_equal(down.p, table.p)


def test_random_perturbation_near_the_cap():
    table = _table(np.full(400, 0.93))
    scn = scenario("P4", R=1, seed=5)
    out = _mu(perturb(table, scn))
    signs = risk_signs(scn, 400)
    assert np.allclose(out[signs > 0], 0.95)
    assert np.allclose(out[signs < 0], 0.91)
    assert np.any(signs > 0) and np.any(signs < 0)

    mid = _mu(perturb(_table(np.full(400, 0.4)), scn))
    assert np.allclose(mid, np.where(signs > 0, 0.5, 0.3))


def test_crowded_damage_ratio_is_rejected():
    table = _table([0.3, 0.96, 0.5])
    with pytest.raises(ValidationError) as info:
        perturb(table, scenario("P1"))
    assert info.value.line == 3


def test_coin_is_shared_by_all_events_of_a_risk():
    risk = np.repeat(np.arange(50), 4)
    table = _table(np.full(risk.size, 0.4), risk=risk)
    scn = scenario("P3", R=2, seed=1)
    for r in range(2):
        factor = (_mu(perturb(table, scn, replicate=r)) / 0.4).reshape(50, 4)
        assert np.allclose(factor, factor[:, :1])
    a = risk_signs(scn, 50, replicate=0)
    b = risk_signs(scn, 50, replicate=1)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, risk_signs(scn, 50, replicate=0))


def test_coin_is_fair():
    signs = risk_signs(scenario("P3", seed=2), 20_000)
    assert set(np.unique(signs).tolist()) == {-1.0, 1.0}
    assert abs(np.mean(signs > 0) - 0.5) < 4 * 0.5 / np.sqrt(signs.size)


# ---------------------------------------------------------------------
# variance decomposition
# ---------------------------------------------------------------------

def test_variance_ratio_of_identical_replicates_is_zero():
    row = np.random.default_rng(0).normal(size=300)
    assert variance_ratio(np.tile(row, (20, 1))) == 0.0
    assert variance_ratio(np.ones((5, 10))) == 0.0


def test_variance_ratio_recovers_between_component():
    rng = np.random.default_rng(1)
    R, M = 200, 500
    x = rng.normal(0.0, np.sqrt(0.1), (R, 1)) + rng.normal(0.0, 1.0, (R, M))
    _, sw = variance_components(x)
    assert sw == pytest.approx(1.0, abs=0.02)
    assert variance_ratio(x) == pytest.approx(0.1, abs=0.03)


def test_variance_decomposition_needs_replicates():
    with pytest.raises(ValidationError):
        variance_ratio(np.ones((1, 10)))
    with pytest.raises(ValidationError):
        variance_ratio(np.ones(10))


# ---------------------------------------------------------------------
# results
# ---------------------------------------------------------------------

def _result(R=3, M=20, ks=(2, 5)):
    rng = np.random.default_rng(4)
    upper = np.sort(rng.gamma(2.0, 1.0, (R, M, len(ks))), axis=-1)
    return SensitivityResult(scenario=scenario("P3", R=R), ks=ks, lower=0.5 * upper, upper=upper)


def test_pooled_quantiles_match_concatenated_samples():
    res = _result()
    table = pooled_quantiles(res)
    assert len(table) == 2 * 2 * 3
    concat = np.concatenate([res.upper[r, :, 1] for r in range(res.R)])
    row = table[(table.side == "upper") & (table.k == 5) & (table["quantile"] == 0.5)]
    assert float(row["value"].iloc[0]) == type1_quantile(concat, 0.5)


def test_variance_table_and_samples_frame():
    res = _result()
    vt = variance_table(res)
    assert len(vt) == 4
    assert np.all(vt["ratio"] >= 0.0)
    frame = samples_frame(res)
    assert len(frame) == 2 * res.R * res.M * len(res.ks)
    sub = frame[(frame.side == "lower") & (frame.replicate == 1) & (frame.k == 2)]
    assert np.array_equal(sub["sample_value"].to_numpy(), res.lower[1, :, 0])

    single = _result(R=1)
    assert variance_table(single).empty


def test_write_sensitivity(tmp_path):
    paths = write_sensitivity(_result(), tmp_path / "sens")
    assert set(paths) == {"quantiles", "samples", "variance"}
    quantiles = pd.read_csv(paths["quantiles"])
    assert list(quantiles.columns) == ["scenario", "k", "side", "quantile", "value"]
    assert set(pd.read_csv(paths["samples"]).columns) == {"scenario", "replicate", "side", "k", "sample_value"}
    assert len(pd.read_csv(paths["variance"])) == 4


def test_run_sensitivity_replicates(small_events):
    prepared = _prepared(small_events)
    scn = scenario("P3", R=2, seed=6)
    res = run_sensitivity(prepared, scn, M=20, ks=(2, 10))
    assert res.lower.shape == res.upper.shape == (2, 20, 2)
    assert np.all(res.lower <= res.upper)
    assert not np.array_equal(res.upper[0], res.upper[1])
    again = run_sensitivity(prepared, scn, M=20, ks=(2, 10))
    assert np.array_equal(again.upper, res.upper)


def test_identity_scenario_reproduces_plain_sir(small_events):
    prepared = _prepared(small_events)
    scn = scenario("P0", seed=3)
    res = run_sensitivity(prepared, scn, M=15, ks=(2, 5))
    _, upper = run_conservative(prepared.summaries, 15, B2, "sir", derived_seed(3, 0))
    assert np.array_equal(res.upper[0], return_levels(upper.values, (2, 5)))


@pytest.mark.slow
def test_upward_shift_raises_the_median_level(make_inputs):
    _, events = make_inputs(200, 100, seed=21)
    prepared = _prepared(events)
    ks = (2, 10)

    def median_upper(tag):
        res = run_sensitivity(prepared, scenario(tag, seed=0), M=400, ks=ks)
        return np.median(res.pooled("upper"), axis=0)

    ratio = median_upper("P1") / median_upper("P0")
    assert np.all((ratio > 1.02) & (ratio < 1.08))


@pytest.mark.slow
def test_large_delta_separates_the_variance_ratio(make_inputs):
    _, events = make_inputs(200, 400, seed=23)
    prepared = _prepared(events)

    def ratio_200(tag):
        res = run_sensitivity(prepared, scenario(tag, R=40, seed=0), M=400, ks=(200,))
        return variance_ratio(res.upper[:, :, 0])

    p3, p4 = ratio_200("P3"), ratio_200("P4")
    assert p4 > 10 * p3


@pytest.mark.slow
def test_extreme_delta_raises_the_variance_ratio(make_inputs):
    _, events = make_inputs(200, 1000, seed=25)
    prepared = _prepared(events)

    def ratio_500(delta):
        res = run_sensitivity(prepared, scenario("P4", delta=delta, R=20, seed=0), M=200, ks=(500,))
        return variance_ratio(res.upper[:, :, 0])

    assert ratio_500(0.7) > ratio_500(0.25)
