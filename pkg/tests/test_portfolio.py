import numpy as np
import pytest
from scipy import stats as sps

from floodbound.errors import ValidationError
from floodbound.params.dataclasses import LossTerm, ToyScenario
from floodbound.params.toy import generate_toy
from floodbound.portfolio.bootstrap import bootstrap_scale
from floodbound.portfolio.moments import summarize_years, term_moments, year_summary


def _term(p=0.5, alpha=1.0, beta=1.0, exposure=1.0, n_sub=1, risk_id="r", event=0):
    return LossTerm(year=0, event=event, risk_id=risk_id, p=p, alpha=alpha, beta=beta, exposure=exposure, n_sub=n_sub)


# ---------------------------------------------------------------------
# term moments
# ---------------------------------------------------------------------

def test_term_moments_known_values():
    m = term_moments(_term(p=0.0, exposure=3.0))
    assert m.mean == 0.0 and m.variance == 0.0
    assert m.c_upper == 3.0

    m = term_moments(_term(p=1.0))
    assert m.mean == pytest.approx(0.5)
    assert m.variance == pytest.approx(1.0 / 12.0)

    m = term_moments(_term(p=0.5))
    assert m.mean == pytest.approx(0.25)
    assert m.variance == pytest.approx(5.0 / 48.0)
    assert m.a_lower == -m.c_lower


def test_term_moments_mixture_variance_by_simulation():
    rng = np.random.default_rng(0)
    n = 2_000_000
    wet = rng.random(n) < 0.5
    draws = np.where(wet, rng.beta(1.0, 1.0, n), 0.0)
    m = term_moments(_term(p=0.5))
    se = np.std(draws**2) / np.sqrt(n)
    assert abs(np.var(draws) - m.variance) < 4 * se


def test_variance_below_support_product(small_events):
    m = term_moments(small_events)
    assert np.all(m.variance >= 0.0)
    assert np.all(m.variance <= m.c_upper * m.c_lower * (1 + 1e-12))
    assert np.allclose(m.c_upper + m.c_lower, small_events.exposure)


def test_term_rejects_invalid_parameters():
    with pytest.raises(ValueError):
        _term(p=1.5)
    with pytest.raises(ValueError):
        _term(alpha=0.0)


# ---------------------------------------------------------------------
# year summaries
# ---------------------------------------------------------------------

def test_single_term_summary():
    term = _term(p=0.3, alpha=2.0, beta=5.0, exposure=10.0)
    s = year_summary([term])
    var = term_moments(term).variance
    assert s.n == 1
    assert s.upper.vbar == pytest.approx(var)
    assert s.upper.K == pytest.approx(var)
    assert s.upper.K1 == pytest.approx(0.0, abs=1e-15)
    assert s.expected_total == pytest.approx(term_moments(term).mean)


def test_identical_terms_share_per_summand_stats():
    one = year_summary([_term(p=0.3, exposure=2.0)])
    two = year_summary([_term(p=0.3, exposure=2.0, risk_id="a"), _term(p=0.3, exposure=2.0, risk_id="b")])
    assert two.n == 2
    for a, b in ((one.upper, two.upper), (one.lower, two.lower)):
        assert b.vbar == pytest.approx(a.vbar)
        assert b.K == pytest.approx(a.K)
        assert b.K1 == pytest.approx(a.K1, abs=1e-15)
    assert two.expected_total == pytest.approx(2 * one.expected_total)


def test_summary_invariant_to_order_and_splitting():
    terms = [
        _term(p=0.2, alpha=2.0, beta=3.0, exposure=5.0, n_sub=3, risk_id="a"),
        _term(p=0.6, alpha=1.0, beta=4.0, exposure=1.0, risk_id="b"),
        _term(p=0.05, alpha=3.0, beta=1.0, exposure=8.0, risk_id="c", event=1),
    ]
    split = [_term(p=0.2, alpha=2.0, beta=3.0, exposure=5.0, risk_id=f"a{i}") for i in range(3)] + terms[1:]
    base = year_summary(terms)
    for other in (year_summary(terms[::-1]), year_summary(split)):
        assert other.n == base.n == 5
        assert other.expected_total == pytest.approx(base.expected_total)
        for tail in ("upper", "lower"):
            a, b = base.stats(tail), other.stats(tail)
            assert (b.vbar, b.K, b.K1, b.cstar) == pytest.approx((a.vbar, a.K, a.K1, a.cstar))


def test_zero_probability_terms_dropped():
    with_zero = year_summary([_term(p=0.3), _term(p=0.0, exposure=100.0, risk_id="z")])
    without = year_summary([_term(p=0.3)])
    assert with_zero.n == without.n == 1
    assert with_zero.upper.cstar == without.upper.cstar


def test_empty_year_is_degenerate():
    s = year_summary([_term(p=0.0)], year=4)
    assert s.degenerate
    assert s.year == 4
    assert s.expected_total == 0.0
    assert s.upper is None and s.lower is None


def test_summary_chain_holds_on_fixture(small_events):
    summaries = summarize_years(small_events, higher_order=3)
    assert [s.year for s in summaries] == sorted(set(small_events.year.tolist()))
    max_exposure = float(np.max(small_events.exposure))
    for s in summaries:
        for st in (s.upper, s.lower):
            assert 0.0 <= st.K1 <= st.K <= st.vbar
            assert st.cstar <= max_exposure
            assert len(st.Kj) == 2
        assert s.n_p_gt_0 == s.n
        assert 0.0 < s.p_bar < 1.0


def test_summarize_fills_requested_empty_years(small_events):
    years = list(range(45))
    summaries = summarize_years(small_events, years=years)
    assert [s.year for s in summaries] == years
    assert all(s.degenerate for s in summaries[40:])


def test_year_summary_rejects_mixed_years():
    terms = [_term(), LossTerm(year=1, event=0, risk_id="r", p=0.5, alpha=1.0, beta=1.0, exposure=1.0)]
    with pytest.raises(ValueError):
        year_summary(terms)


# ---------------------------------------------------------------------
# toy scenarios
# ---------------------------------------------------------------------

def test_toy_is_deterministic_single_year():
    a_port, a_ev = generate_toy(ToyScenario("ii", n=500, seed=3))
    b_port, b_ev = generate_toy(ToyScenario("ii", n=500, seed=3))
    assert np.array_equal(a_port.total_insured_value, b_port.total_insured_value)
    assert np.array_equal(a_ev.p, b_ev.p)
    assert np.all(a_ev.year == 0) and np.all(a_ev.n_sub == 1)
    c_port, _ = generate_toy(ToyScenario("ii", n=500, seed=4))
    assert not np.array_equal(a_port.total_insured_value, c_port.total_insured_value)


def test_toy_damage_ratio_is_one():
    _, events = generate_toy(ToyScenario("i", n=100, seed=0))
    m = term_moments(events)
    assert np.allclose(m.mean, events.exposure * events.p, rtol=1e-12)
    bern_var = events.exposure**2 * events.p * (1 - events.p)
    assert np.allclose(m.variance, bern_var, rtol=1e-9)


def test_toy_summary_has_spread_ranges():
    _, events = generate_toy(ToyScenario("ii", n=100_000, seed=0))
    s = year_summary(events).upper
    assert s.K1 > 0.0
    assert s.K / s.vbar < 1.0


def test_toy_probability_laws():
    _, uniform = generate_toy(ToyScenario("iv", n=100_000, seed=1))
    assert sps.kstest(uniform.p, "uniform").pvalue > 0.01

    def spread(tag):
        port, _ = generate_toy(ToyScenario(tag, n=100_000, seed=1))
        b = port.total_insured_value
        return np.max(b) / np.median(b)

    assert spread("iii") > spread("i")


def test_toy_rejects_unknown_tag():
    with pytest.raises(ValueError):
        ToyScenario("v")


# ---------------------------------------------------------------------
# bootstrap scaling
# ---------------------------------------------------------------------

def test_bootstrap_counts_scale_exactly(small_portfolio, small_events):
    port, events = bootstrap_scale(small_portfolio, small_events, factor=10, seed=0)
    assert len(port) == 10 * len(small_portfolio)
    assert port.total_subrisks == 10 * small_portfolio.total_subrisks
    assert len(set(port.risk_id.tolist())) == len(port)
    # every copy keeps its source's value and subrisk count
    index = small_portfolio.index_of()
    src = np.array([index[rid.split("#")[0]] for rid in port.risk_id])
    assert np.array_equal(port.total_insured_value, small_portfolio.total_insured_value[src])
    assert np.array_equal(port.n_subrisks, small_portfolio.n_subrisks[src])
    assert np.array_equal(events.exposure, port.exposure[events.risk])


def test_bootstrap_duplicates_event_rows_per_copy(small_portfolio, small_events):
    port, events = bootstrap_scale(small_portfolio, small_events, factor=3, seed=1)
    index = small_portfolio.index_of()
    src = np.array([index[rid.split("#")[0]] for rid in port.risk_id])
    copies = np.bincount(src, minlength=len(small_portfolio))
    assert len(events) == int(np.sum(copies[small_events.risk]))
    key = np.lexsort((events.risk, events.event, events.year))
    assert np.array_equal(key, np.arange(len(events)))


def test_bootstrap_factor_one_keeps_counts(small_portfolio, small_events):
    port, _ = bootstrap_scale(small_portfolio, small_events, factor=1, seed=2)
    assert len(port) == len(small_portfolio)
    assert port.total_subrisks == small_portfolio.total_subrisks


def test_bootstrap_rejects_factor_below_one(small_portfolio, small_events):
    with pytest.raises(ValidationError):
        bootstrap_scale(small_portfolio, small_events, factor=0, seed=0)


def test_bootstrap_scales_expected_loss(make_inputs):
    portfolio, events = make_inputs(10_000, 5, seed=5, events_per_year=3.0, hit_fraction=0.5)
    _, scaled = bootstrap_scale(portfolio, events, factor=10, seed=3)
    base = sum(s.expected_total for s in summarize_years(events))
    big = sum(s.expected_total for s in summarize_years(scaled))
    assert big / base == pytest.approx(10.0, rel=0.05)
