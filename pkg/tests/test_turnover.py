import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohortnet import corpus, turnover
from cohortnet.corpus import AuthorIndex, AuthorSet, WindowSpec
from cohortnet.errors import BothEmpty, EmptySource, TooFewWindows

names = st.sets(st.sampled_from([f"a{i}" for i in range(12)]), max_size=12)


def brute(a, b):
    """Jaccard and churn by explicit membership loops."""
    inter = sum(1 for x in a if x in b)
    union = len(a) + sum(1 for x in b if x not in a)
    return inter / union, (len(a) - inter) / len(a)


def test_matches_brute_force_on_random_pairs():
    rng = np.random.default_rng(0)
    pool = [f"a{i}" for i in range(60)]
    for _ in range(1000):
        a = set(rng.choice(pool, int(rng.integers(1, 40)), replace=False).tolist())
        b = set(rng.choice(pool, int(rng.integers(0, 40)), replace=False).tolist())
        j, c = brute(a, b)
        assert turnover.jaccard(a, b) == j
        assert turnover.churn(a, b) == c


@given(a=names, b=names)
def test_jaccard_symmetric_and_bounded(a, b):
    if not (a or b):
        with pytest.raises(BothEmpty):
            turnover.jaccard(a, b)
        return
    j = turnover.jaccard(a, b)
    assert j == turnover.jaccard(b, a) and 0.0 <= j <= 1.0


@given(a=names.filter(bool), b=names)
def test_churn_relation_and_bounds(a, b):
    c = turnover.churn(a, b)
    assert 0.0 <= c <= 1.0
    assert c == pytest.approx(1 - len(a & b) / len(a), abs=1e-12)


def test_churn_is_not_symmetric():
    a, b = {"a", "b", "c", "d"}, {"c", "d", "e"}
    assert turnover.churn(a, b) != turnover.churn(b, a)


def test_churn_empty_source():
    with pytest.raises(EmptySource):
        turnover.churn(set(), {"a"})


def _set(label, *members):
    return AuthorSet(WindowSpec(label, int(label), int(label), "annual"), frozenset(members))


def test_degenerate_pairs_are_explicit_nulls():
    pts = turnover.turnover_series([_set("2001"), _set("2002"), _set("2003", "a"), _set("2004", "a")])
    assert [(p.jaccard, p.churn, p.reason) for p in pts] == [
        (None, None, "both-empty"),
        (0.0, None, "empty-source"),
        (1.0, 0.0, ""),
    ]


def test_reverse_is_gain_side():
    pts = turnover.turnover_series([_set("2001", "a", "b"), _set("2002", "b", "c", "d")], reverse=True)
    assert pts[0].churn == pytest.approx(2 / 3)
    assert (pts[0].from_label, pts[0].to_label) == ("2001", "2002")


def test_too_few_windows():
    with pytest.raises(TooFewWindows):
        turnover.turnover_series([_set("2001", "a")])


@given(st.dictionaries(
    st.from_regex(r"a[0-9]{1,2}", fullmatch=True),
    st.sets(st.integers(2000, 2009), min_size=1, max_size=5).map(sorted), min_size=1, max_size=20))
def test_unit_windows_equal_annual_mode(years):
    idx = AuthorIndex(years, span=(2000, 2009))
    annual = corpus.window_sets(idx, corpus.window_series((2000, 2009), "annual"))
    unit = corpus.window_sets(idx, corpus.window_series((2000, 2009), "cumulative", k=1))
    assert turnover.turnover_series(annual) == turnover.turnover_series(unit)
