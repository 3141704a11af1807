"""Fixed-order N-gram HPG models and session-drop statistics."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

from .model import START_STATE, FINAL_STATE, HpgModel, StateId, start_weights
from .sessions import SessionLog

HISTORY_SEP = "|"


class EmptyModelError(ValueError):
    pass


@dataclass
class NGramModel:
    """An HPG whose page states are histories of ``order - 1`` pages."""

    order: int
    histories: List[Tuple[int, ...]]
    model: HpgModel
    retained_sessions: int
    dropped_sessions: int

    @property
    def n_states(self) -> int:
        return self.model.n_states

    @property
    def n_links(self) -> int:
        return self.model.n_links


def build_ngram(log: SessionLog, order: int, alpha: float = 0.0) -> NGramModel:
    if order < 2:
        raise ValueError("N-gram order must be at least 2")
    depth = order - 1
    index: Dict[Tuple[int, ...], int] = {}
    histories: List[Tuple[int, ...]] = []

    def hid(h):
        if h not in index:
            index[h] = len(histories)
            histories.append(h)
        return index[h]

    links: Dict[StateId, Dict[StateId, int]] = defaultdict(lambda: defaultdict(int))
    starts: Counter = Counter()
    kept = dropped = 0
    for pages, n in log.entries:
        if len(pages) < depth:
            dropped += n
            continue
        kept += n
        hs = [hid(pages[t:t + depth]) for t in range(len(pages) - depth + 1)]
        starts[hs[0]] += n
        for a, b in zip(hs, hs[1:]):
            links[StateId(a)][StateId(b)] += n
        links[StateId(hs[-1])][FINAL_STATE] += n
    if kept == 0:
        longest = max((len(p) for p, _ in log.entries), default=0)
        raise EmptyModelError(
            f"every session is shorter than {depth} pages, so the {order}-gram model is empty "
            f"(longest session has {longest} page{'' if longest == 1 else 's'})")
    visits = {h: sum(links[StateId(h)].values()) for h in range(len(histories))}
    for h, w in start_weights(visits, dict(starts), alpha, kept).items():
        links[START_STATE][StateId(h)] = w
    vocab = [HISTORY_SEP.join(log.vocab[p] for p in h) for h in histories]
    model = HpgModel(vocab, alpha, {s: dict(row) for s, row in links.items()})
    return NGramModel(order, histories, model, kept, dropped)


def dropped_sessions(log: SessionLog, order: int) -> Tuple[int, float]:
    """Sessions (weighted by count) too short for an ``order``-gram model."""
    if order < 2:
        raise ValueError("N-gram order must be at least 2")
    total = log.n_sessions
    dropped = sum(n for pages, n in log.entries if len(pages) < order - 1)
    return dropped, (dropped / total if total else 0.0)


@lru_cache(maxsize=None)
def zeta(s: float, terms: int = 2000) -> float:
    """Riemann zeta for ``s > 1``: direct sum plus an Euler-Maclaurin tail.

    With the default 2000 terms the truncation error is far below 1e-12 for
    s >= 1.1.
    """
    if s <= 1:
        raise ValueError("zeta diverges for s <= 1")
    n = terms
    head = sum(k ** -s for k in range(1, n))
    tail = (n ** (1 - s) / (s - 1) + 0.5 * n ** -s + s * n ** (-s - 1) / 12
            - s * (s + 1) * (s + 2) * n ** (-s - 3) / 720)
    return head + tail


def theoretical_drop_fraction(order: int, exponent: float = 1.5) -> float:
    """Share of sessions shorter than ``order - 1`` under power-law session lengths."""
    if order < 2:
        raise ValueError("N-gram order must be at least 2")
    return sum(length ** -exponent for length in range(1, order - 1)) / zeta(exponent)
