from collections import Counter

import pytest
from hypothesis import given, settings

from hpgclone.sessions import (FINAL, START, SessionLog, SessionParseError, count_ngrams,
                               dataset_stats, format_sessions, parse_sessions)

from conftest import log_from, raw_trigrams, sessions_st


def test_parse_counts_and_default():
    log = parse_sessions("A1 A2 A3 *3\nA1 A2 A4")
    assert log.named_entries() == [(("A1", "A2", "A3"), 3), (("A1", "A2", "A4"), 1)]


def test_parse_empty():
    assert len(parse_sessions("")) == 0


@pytest.mark.parametrize("text", ["A1 *0", "A1 *x", "A1 *-2", "A1 *"])
def test_parse_bad_count(text):
    with pytest.raises(SessionParseError):
        parse_sessions(text)


def test_parse_error_names_line():
    with pytest.raises(SessionParseError) as err:
        parse_sessions("A B\n# note\nC *0\n")
    assert err.value.lineno == 3
    assert "3" in str(err.value)


def test_parse_commas_comments_crlf_blank_lines():
    log = parse_sessions("# header\r\nA1,A2, A3\r\n\r\n  \nB *2\r\n")
    assert log.named_entries() == [(("A1", "A2", "A3"), 1), (("B",), 2)]


def test_identical_lines_kept_separate():
    log = parse_sessions("A B\nA B *2\n")
    assert len(log) == 2
    assert log.n_sessions == 3
    assert count_ngrams(log).bigram(log.page_id("A"), log.page_id("B")) == 3


def test_tokens_case_sensitive():
    log = parse_sessions("a A\n")
    assert list(log.vocab) == ["a", "A"]


def test_reserved_symbols_never_interned():
    log = parse_sessions("S F S\n")
    ids = log.entries[0][0]
    assert START not in ids and FINAL not in ids
    assert all(i >= 0 for i in ids)


def test_branching_counts(branching):
    ng = count_ngrams(branching).named()
    assert ng["uni"]["A2"] == 8
    assert ng["bi"][("A2", "A3")] == 3
    assert ng["tri"][("A1", "A2", "A3")] == 3
    assert ng["bi"][("S", "A1")] == 4
    assert ng["bi"][("S", "A5")] == 4


def test_single_page_session():
    log = parse_sessions("A1\n")
    ng = count_ngrams(log)
    a = log.page_id("A1")
    assert ng.bigram(START, a) == 1
    assert ng.bigram(a, FINAL) == 1
    assert ng.tri == {}
    # the (S, p, F) continuation is still available through trigram()
    assert ng.trigram(START, a, FINAL) == 1


def test_dataset_stats_branching(branching):
    st = dataset_stats(branching)
    assert st["sessions"] == 8
    assert st["requests"] == 24
    assert st["avg_session_length"] == 3.0
    assert st["distinct_pages"] == 6
    assert st["starting_pages"] == 2
    assert st["terminating_pages"] == 3


def test_dataset_stats_single():
    st = dataset_stats(parse_sessions("A1 A2\n"))
    assert (st["sessions"], st["requests"], st["max_session_length"]) == (1, 2, 2)


def test_dataset_stats_empty():
    with pytest.raises(ValueError):
        dataset_stats(SessionLog())


@given(sessions_st)
def test_requests_total(items):
    log = log_from(items)
    assert log.n_requests == sum(n * len(s) for s, n in items)


@given(sessions_st)
def test_flow_conservation(items):
    ng = count_ngrams(log_from(items))
    out_sum, in_sum = Counter(), Counter()
    for (a, b), n in ng.bi.items():
        out_sum[a] += n
        in_sum[b] += n
    for p, w in ng.uni.items():
        assert out_sum[p] == w
        assert in_sum[p] == w


@given(sessions_st)
def test_trigrams_sum_to_bigrams(items):
    ng = count_ngrams(log_from(items))
    tri_sum = Counter()
    for (a, b, _), n in ng.tri.items():
        tri_sum[(a, b)] += n
    for (a, b), n in ng.bi.items():
        if b == FINAL:
            continue
        # length-1 sessions are the only source of missing (S, p, .) trigrams
        deficit = ng.singles.get(b, 0) if a == START else 0
        assert tri_sum[(a, b)] + deficit == n
        # with the singles term trigram() closes the gap exactly
        total = sum(ng.trigram(a, b, c) for c in list(ng.uni) + [FINAL])
        assert total == n


@given(sessions_st)
def test_counts_match_brute_force(items):
    log = log_from(items)
    tri, bi = raw_trigrams(log)
    named = count_ngrams(log).named()
    assert +named["bi"] == +bi
    singles_free = Counter({k: v for k, v in tri.items() if not (k[0] == "S" and k[2] == "F")})
    assert +named["tri"] == +singles_free


@given(sessions_st, sessions_st)
def test_counting_is_additive(a, b):
    la, lb = log_from(a), log_from(b)
    both = la.concat(lb)
    na, nb, nab = (count_ngrams(x).named() for x in (la, lb, both))
    for key in ("uni", "bi", "tri"):
        assert na[key] + nb[key] == nab[key]


@settings(max_examples=50)
@given(sessions_st)
def test_format_parse_round_trip(items):
    log = log_from(items)
    again = parse_sessions(format_sessions(log))
    assert again.named_entries() == log.named_entries()
    assert list(again.vocab) == list(log.vocab)
