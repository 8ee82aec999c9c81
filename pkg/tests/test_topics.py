import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumprisk.jumps import JumpSet
from jumprisk.topics import (
    FakeLlm, LdaModel, PromptError, Retrieval, TopicVerdict, VerdictParseError,
    VerdictValidationError, agreement_matrix, classify_jump_llm, classify_lda, jump_context,
    lda_posterior, parse_verdict, render_prompt, round_to_total, summarize_jumps, wilson_interval,
)
from jumprisk.topics.lda import classify_text
from jumprisk.topics.synthetic import keyword_responder, synthetic_news, toy_lda_model

DATA = Path(__file__).parent / "data"


def two_topic_model(categories=(1, 2)):
    return LdaModel(["w1", "w2"], [[0.9, 0.1], [0.2, 0.8]], [0.5, 0.5], list(categories))


def test_empty_document_returns_prior():
    m = LdaModel(["a", "b", "c"], np.full((3, 3), 1 / 3), [0.2, 0.3, 0.5], [1, 2, 3])
    np.testing.assert_allclose(lda_posterior({}, m), [0.2, 0.3, 0.5], atol=1e-15)


def test_hand_bayes_two_topics():
    post = lda_posterior({"w1": 2}, two_topic_model())
    assert post[0] == pytest.approx(0.81 / 0.85, abs=1e-12)


def test_log_space_matches_direct_product(rng):
    vocab = [f"v{i}" for i in range(5)]
    phi = rng.dirichlet(np.ones(5), size=3)
    prior = rng.dirichlet(np.ones(3))
    m = LdaModel(vocab, phi, prior, [1, 2, 3])
    counts = {"v0": 3, "v2": 1, "v4": 2}
    direct = np.array([prior[k] * math.prod(phi[k, int(w[1])] ** n for w, n in counts.items())
                       for k in range(3)])
    np.testing.assert_allclose(lda_posterior(counts, m), direct / direct.sum(), atol=1e-12)


def test_oov_words_ignored():
    m = two_topic_model()
    np.testing.assert_allclose(lda_posterior({"w1": 2, "zzz": 5}, m), lda_posterior({"w1": 2}, m))


def test_single_category_model_always_wins():
    m = two_topic_model(categories=(4, 4))
    assert classify_lda({"w2": 9}, m).category == 4


def test_tie_goes_to_lower_id():
    m = LdaModel(["x"], [[1.0], [1.0]], [0.5, 0.5], [5, 3])
    assert classify_lda({"x": 1}, m).category == 3


def test_zero_likelihood_is_none_of_the_above():
    m = LdaModel(["a", "b"], [[1.0, 0.0], [1.0, 0.0]], [0.5, 0.5], [1, 2])
    assert classify_lda({"b": 1}, m).category == 6


def test_macro_heavy_document():
    text = "inflation cpi payrolls unemployment rate gdp inflation report"
    assert classify_text(text, toy_lda_model()).category == 2


def test_wilson_examples():
    lo, hi = wilson_interval(0.754, 1000)
    assert (round(100 * lo, 1), round(100 * hi, 1)) == (72.6, 78.0)
    lo, hi = wilson_interval(0.5, 100, 1.96)
    assert lo == pytest.approx(0.4038, abs=5e-5) and hi == pytest.approx(0.5962, abs=5e-5)
    assert wilson_interval(0.0, 50)[0] == 0.0


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 5000), st.data())
def test_wilson_inside_unit_interval(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k / n, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_agreement_self_and_disjoint():
    a = np.array([1, 2, 3, 4] * 10)
    ag = agreement_matrix({"a": a, "b": a % 4 + 1})
    assert ag.pct[0, 0] == 100.0 and ag.pct[0, 1] == 0.0
    assert list(ag.frame().columns) == ["Approach", "a", "b"]


def test_agreement_754_of_1000():
    a = np.ones(1000, dtype=int)
    b = a.copy()
    b[754:] = 2
    ag = agreement_matrix({"x": a, "y": b})
    assert ag.pct[0, 1] == pytest.approx(75.4)
    assert ag.frame().iloc[0, 2] == "75.4 (72.6, 78.0)"


def _jumps(topics, rets):
    n = len(rets)
    return JumpSet(np.arange(n), np.zeros(n), np.array(["intraday"] * n, dtype=object), rets,
                   np.arange(n).astype("datetime64[s]"), topics, np.asarray(topics) != 0)


def test_policy_share_fixture():
    assert round_to_total([51, 152, 88, 115, 240, 64, 20], 2, 100.0 * 1)[0] != 0
    shares = 100 * np.array([51, 152, 88, 115, 240, 64, 20]) / 730
    assert round_to_total(shares)[0] == 6.99


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 500), min_size=2, max_size=8))
def test_rounded_shares_sum_to_100(counts):
    c = np.array(counts, dtype=float)
    r = round_to_total(100 * c / c.sum())
    assert abs(r.sum() - 100.0) < 1e-9
    assert np.all(np.abs(r - 100 * c / c.sum()) < 0.01 + 1e-12)


def test_single_category_r2_is_100():
    df = summarize_jumps(_jumps([2, 2, 2], np.array([0.01, -0.02, 0.03])))
    row = df.set_index("Statistic").loc["R^2"]
    assert row["Macro"] == pytest.approx(100.0)


def test_five_jump_table_by_hand():
    rets = [0.01, -0.02, 0.015, 0.03, -0.005]
    topics = [1, 1, 2, 2, 0]
    df = summarize_jumps(_jumps(topics, np.array(rets))).set_index("Statistic")
    ss = sum(r * r for r in rets)
    pol = [0.01, -0.02]
    mean = sum(pol) / 2
    sd = math.sqrt(sum((r - mean) ** 2 for r in pol) / 1)
    col = df["Policy"]
    assert col["N"] == 2 and col["%"] == pytest.approx(40.0)
    assert col["Prop Pos (%)"] == pytest.approx(50.0)
    assert col["Mean (%)"] == pytest.approx(100 * mean)
    assert col["Mean Abs (%)"] == pytest.approx(1.5)
    assert col["Std (%)"] == pytest.approx(100 * sd)
    # two points: linear-interpolated quartiles are 1/4 and 3/4 of the way
    assert col["IQR (%)"] == pytest.approx(100 * 0.5 * 0.03)
    assert col["R^2"] == pytest.approx(100 * (0.01 ** 2 + 0.02 ** 2) / ss)
    assert df.loc["N", "Unattrib."] == 1
    allc = df["All"]
    x = rets
    m = sum(x) / 5
    s2 = sum((r - m) ** 2 for r in x) / 4
    m3 = sum((r - m) ** 3 for r in x) / 5
    g1 = m3 / (sum((r - m) ** 2 for r in x) / 5) ** 1.5
    assert allc["Skew"] == pytest.approx(g1 * math.sqrt(5 * 4) / 3, rel=1e-10)
    assert allc["Std (%)"] == pytest.approx(100 * math.sqrt(s2))


def test_prompt1_golden():
    ctx = jump_context("2019-06-19T14:00", "2019-06-19T14:15", 0.0123,
                       [(1, "Fed holds rates steady, signals cuts ahead"), (2, "Oil prices edge higher")])
    assert render_prompt(1, **ctx) == (DATA / "prompt1_golden.txt").read_text()


def test_empty_news_renders_empty_section():
    out = render_prompt(1, **jump_context("2019-06-19T14:00", "2019-06-19T14:15", -0.01, []))
    assert out.endswith("empty list.\n\n\n") and "decreases by 1.00%" in out


def test_missing_placeholder_named():
    with pytest.raises(PromptError, match="news"):
        render_prompt(1, event_start_time="a", event_end_time="b", direction="c", event_ret="1")


def test_parse_examples():
    v = parse_verdict('{"Topic_Category": 2, "Explanation": "CPI surprise"}')
    assert isinstance(v, TopicVerdict) and v.category == 2
    r = parse_verdict('Sure. {"News_id": [], "Explanation": "none"}')
    assert isinstance(r, Retrieval) and not r.attributable
    with pytest.raises(VerdictValidationError):
        parse_verdict('{"Topic_Category": 9, "Explanation": "x"}')
    with pytest.raises(VerdictParseError) as exc:
        parse_verdict('{"Topic_Category": 2, "Explanation": ')
    assert exc.value.offset > 0


def test_stub_round_trip():
    news = [(1, "consumer price index rises more than expected inflation")]
    llm = FakeLlm(keyword_responder)
    label = classify_jump_llm(llm, jump_context("2020-01-02T14:00", "2020-01-02T14:15", 0.01, news))
    assert label.category == 2 and len(llm.calls) == 2
    empty = classify_jump_llm(FakeLlm(keyword_responder),
                              jump_context("2020-01-02T14:00", "2020-01-02T14:15", 0.01, []))
    assert empty.category == 0


def test_synthetic_news_deterministic():
    assert synthetic_news([1, 2, 3], seed=4) == synthetic_news([1, 2, 3], seed=4)
