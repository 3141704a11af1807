import sys
from collections import Counter, defaultdict

import pytest
from hypothesis import strategies as st

from hpgclone import SessionLog, parse_sessions
from hpgclone.synth import generate_dataset

BRANCHING = """\
A1 A2 A3 *3
A1 A2 A4
A5 A2 A4 *3
A5 A2 A6
"""

FOUR_SOURCES = """\
A1 A5 A6 *6
A1 A5 A7 *3
A2 A5 A6 *7
A2 A5 A7 *4
A3 A5 A6 *4
A3 A5 A7 *7
A4 A5 A6 *3
A4 A5 A7 *6
"""


@pytest.fixture
def branching():
    return parse_sessions(BRANCHING)


@pytest.fixture
def four_sources():
    return parse_sessions(FOUR_SOURCES)


PAGES = ["a", "b", "c", "d", "e", "f"]

sessions_st = st.lists(
    st.tuples(st.lists(st.sampled_from(PAGES), min_size=1, max_size=6),
              st.integers(min_value=1, max_value=5)),
    min_size=1, max_size=12)


def log_from(items) -> SessionLog:
    return SessionLog.from_sequences([s for s, _ in items], [n for _, n in items])


def small_instance(seed: int, max_pages: int = 20, max_sessions: int = 200) -> SessionLog:
    import numpy as np
    rng = np.random.default_rng(10_000 + seed)
    n_pages = int(rng.integers(3, max_pages + 1))
    n_sessions = int(rng.integers(20, max_sessions + 1))
    return generate_dataset(n_pages, n_sessions, seed)[1]


def raw_trigrams(log: SessionLog):
    """Brute-force (i, x, o) and (i, x) counts from S/F padded sessions, by name."""
    tri, bi = Counter(), Counter()
    for names, n in log.named_entries():
        padded = ("S",) + tuple(names) + ("F",)
        for a, b in zip(padded, padded[1:]):
            bi[(a, b)] += n
        for a, b, c in zip(padded, padded[1:], padded[2:]):
            tri[(a, b, c)] += n
    return tri, bi


def page_label(model, state):
    if not state.is_page:
        return state.kind
    return model.vocab[state.page]


def canonical(model):
    """Model up to clone relabeling: each state named by its page and in-link source pages."""
    labels = {}
    for s in model.states():
        srcs = frozenset(page_label(model, i) for i in model.in_links(s))
        labels[s] = (page_label(model, s), srcs)
    links = Counter()
    for a, b, w in model.links():
        links[(labels[a], labels[b], round(float(w), 9))] += 1
    return links


def clones_by_page(model):
    groups = defaultdict(list)
    for s in model.page_states():
        groups[s.page].append(s)
    return groups


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
