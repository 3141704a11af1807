"""First-order hypertext probabilistic grammar (HPG) models.

A model is a weighted directed graph over page states plus a start state
``S`` and a final state ``F``. Link weights are traversal counts; transition
probabilities are always derived from the weights on demand.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .sessions import FINAL, START, NGramTable

Weight = Union[int, float]


class StateId(NamedTuple):
    page: int
    clone: int = 0

    @property
    def kind(self) -> str:
        if self.page == START:
            return "start"
        if self.page == FINAL:
            return "final"
        return "page"

    @property
    def is_page(self) -> bool:
        return self.page >= 0


START_STATE = StateId(START)
FINAL_STATE = StateId(FINAL)


def target_order(state: StateId) -> Tuple[int, int, int]:
    """Sort key placing page states first and ``F`` last."""
    return (state.page == FINAL, state.page, state.clone)


class UndefinedProbabilityError(ValueError):
    pass


class NonTerminationError(RuntimeError):
    pass


class HpgModel:
    """Weighted state graph with start and final states.

    ``links`` maps each source state to ``{target: weight}``. Zero-weight
    links are never stored. Treat instances as immutable; use :meth:`copy`
    before any structural change.
    """

    def __init__(self, vocab: Sequence[str], alpha: float,
                 links: Dict[StateId, Dict[StateId, Weight]]):
        self.vocab = tuple(vocab)
        self._index = {name: i for i, name in enumerate(self.vocab)}
        self.alpha = float(alpha)
        self._out: Dict[StateId, Dict[StateId, Weight]] = defaultdict(dict)
        self._in: Dict[StateId, Dict[StateId, Weight]] = defaultdict(dict)
        for src, row in links.items():
            for dst, w in row.items():
                self._set_link(src, dst, w)

    # -- mutation helpers, only used while building or cloning a private copy
    def _set_link(self, src: StateId, dst: StateId, w: Weight) -> None:
        if src == FINAL_STATE or dst == START_STATE:
            raise ValueError("F has no out-links and S has no in-links")
        if w <= 0:
            self._del_link(src, dst)
            return
        self._out[src][dst] = w
        self._in[dst][src] = w

    def _del_link(self, src: StateId, dst: StateId) -> None:
        row = self._out.get(src)
        if row is not None and dst in row:
            del row[dst]
            if not row:
                del self._out[src]
            col = self._in[dst]
            del col[src]
            if not col:
                del self._in[dst]

    def copy(self) -> "HpgModel":
        return HpgModel(self.vocab, self.alpha, self._out)

    # -- queries
    def out_links(self, state: StateId) -> Dict[StateId, Weight]:
        return self._out.get(state, {})

    def in_links(self, state: StateId) -> Dict[StateId, Weight]:
        return self._in.get(state, {})

    def links(self) -> Iterable[Tuple[StateId, StateId, Weight]]:
        for src in sorted(self._out):
            row = self._out[src]
            for dst in sorted(row, key=target_order):
                yield src, dst, row[dst]

    def page_states(self) -> List[StateId]:
        seen = {s for s in self._out if s.is_page} | {s for s in self._in if s.is_page}
        return sorted(seen)

    def states(self) -> List[StateId]:
        return [START_STATE] + self.page_states() + [FINAL_STATE]

    def clones_of(self, page: int) -> List[StateId]:
        return [s for s in self.page_states() if s.page == page]

    @property
    def n_states(self) -> int:
        return len(self.page_states()) + 2

    @property
    def n_links(self) -> int:
        return sum(len(row) for row in self._out.values())

    def visits(self, state: StateId) -> Weight:
        if state == FINAL_STATE:
            return sum(self.in_links(state).values())
        return sum(self.out_links(state).values())

    def prob(self, src: StateId, dst: StateId) -> float:
        w = self.out_links(src).get(dst, 0)
        if w == 0:
            return 0.0
        return w / self.visits(src)

    def out_probs(self, state: StateId) -> Dict[StateId, float]:
        total = self.visits(state)
        return {dst: w / total for dst, w in self.out_links(state).items()}

    def state_name(self, state: StateId) -> str:
        if state == START_STATE:
            return "S"
        if state == FINAL_STATE:
            return "F"
        name = self.vocab[state.page]
        if state.clone == 0:
            return name
        if state.clone <= 3:
            return name + "'" * state.clone
        return f"{name}'{state.clone}"

    def page_index(self, name: str) -> Optional[int]:
        return self._index.get(name)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HpgModel):
            return NotImplemented
        return (self.vocab == other.vocab and self.alpha == other.alpha
                and list(self.links()) == list(other.links()))

    def __repr__(self) -> str:
        return (f"HpgModel(pages={len(self.vocab)}, states={self.n_states}, "
                f"links={self.n_links}, alpha={self.alpha})")


def start_weights(visits: Dict[int, Weight], starts: Dict[int, Weight],
                  alpha: float, n_sessions: Weight) -> Dict[int, Weight]:
    """Weights of the S out-links mixing request and first-page frequencies.

    The mixture probabilities are rescaled so the weights sum to the number of
    sessions. With ``alpha == 0`` the raw integer start counts are returned.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0:
        return {p: w for p, w in starts.items() if w > 0}
    total_visits = sum(visits.values())
    total_starts = sum(starts.values())
    out = {}
    for p, w in visits.items():
        prob = alpha * w / total_visits + (1 - alpha) * starts.get(p, 0) / total_starts
        if prob > 0:
            out[p] = prob * n_sessions
    return out


def build_first_order(ngrams: NGramTable, alpha: float = 0.0) -> HpgModel:
    if not ngrams.uni:
        raise ValueError("cannot build a model from an empty n-gram table")
    links: Dict[StateId, Dict[StateId, Weight]] = defaultdict(dict)
    starts = {}
    for (a, b), n in ngrams.bi.items():
        if a == START:
            starts[b] = n
        else:
            links[StateId(a)][StateId(b)] = n
    n_sessions = sum(starts.values())
    for p, w in start_weights(ngrams.uni, starts, alpha, n_sessions).items():
        links[START_STATE][StateId(p)] = w
    return HpgModel(ngrams.vocab, alpha, links)


def _page(x) -> int:
    return x.page if isinstance(x, StateId) else int(x)


def second_order_prob(ngrams: NGramTable, i, k, j) -> float:
    """Probability of ``k -> j`` given the previous transition was ``i -> k``.

    States are reduced to their pages, so clones share their page's counts.
    """
    i, k, j = _page(i), _page(k), _page(j)
    denom = ngrams.bigram(i, k)
    if denom == 0:
        raise UndefinedProbabilityError(f"bigram ({i}, {k}) was never observed")
    return ngrams.trigram(i, k, j) / denom


def max_divergence(model: HpgModel, ngrams: NGramTable, x: StateId) -> float:
    """Largest |second-order - first-order| over the in-links and out-links of ``x``.

    In-links never observed in the data (S-links created only by alpha mixing)
    have no second-order distribution and are skipped.
    """
    probs = model.out_probs(x)
    worst = 0.0
    for src in model.in_links(x):
        denom = ngrams.bigram(src.page, x.page)
        if denom == 0:
            continue
        for dst, p in probs.items():
            diff = abs(ngrams.trigram(src.page, x.page, dst.page) / denom - p)
            if diff > worst:
                worst = diff
    return worst


def threshold(gamma: float) -> Fraction:
    """``gamma`` as the decimal the user wrote (0.1 means 1/10, not the nearest double)."""
    return Fraction(repr(float(gamma)))


def exact_max_divergence(model: HpgModel, ngrams: NGramTable, x: StateId) -> Fraction:
    visits = Fraction(model.visits(x))
    probs = {d: Fraction(w) / visits for d, w in model.out_links(x).items()}
    worst = Fraction(0)
    for src in model.in_links(x):
        denom = ngrams.bigram(src.page, x.page)
        if denom == 0:
            continue
        for dst, p in probs.items():
            worst = max(worst, abs(Fraction(ngrams.trigram(src.page, x.page, dst.page), denom) - p))
    return worst


def divergence_below(model: HpgModel, ngrams: NGramTable, x: StateId, gamma: float,
                     approx: Optional[float] = None) -> bool:
    """Whether the largest divergence of ``x`` is strictly below ``gamma``.

    Floats decide unless the value is within 1e-9 of the threshold, where the
    comparison is redone with exact fractions.
    """
    div = max_divergence(model, ngrams, x) if approx is None else approx
    if abs(div - gamma) > 1e-9:
        return div < gamma
    return exact_max_divergence(model, ngrams, x) < threshold(gamma)


def state_is_accurate(model: HpgModel, ngrams: NGramTable, x: StateId, gamma: float) -> bool:
    if not x.is_page:
        raise ValueError("accuracy is only defined for page states")
    return divergence_below(model, ngrams, x, gamma)


def model_is_accurate(model: HpgModel, ngrams: NGramTable, gamma: float) -> bool:
    return all(state_is_accurate(model, ngrams, x, gamma) for x in model.page_states())


def _resolve_pages(model: HpgModel, pages: Sequence) -> Optional[List[int]]:
    ids = []
    for p in pages:
        idx = p if isinstance(p, int) else model.page_index(p)
        if idx is None or not 0 <= idx < len(model.vocab):
            return None
        ids.append(idx)
    return ids


def forward(model: HpgModel, ids: Sequence[int]) -> Dict[StateId, float]:
    """Probability mass on each state after emitting the page ids ``ids`` from ``S``."""
    current: Dict[StateId, float] = {}
    if not ids:
        return current
    total = model.visits(START_STATE)
    for s, w in model.out_links(START_STATE).items():
        if s.page == ids[0]:
            current[s] = w / total
    for page in ids[1:]:
        nxt: Dict[StateId, float] = defaultdict(float)
        for s, p in current.items():
            row = model.out_links(s)
            visits = sum(row.values())
            for dst, w in row.items():
                if dst.page == page:
                    nxt[dst] += p * w / visits
        current = dict(nxt)
        if not current:
            break
    return current


def trail_probability(model: HpgModel, pages: Sequence) -> float:
    """Probability of starting a session with ``pages`` (no final-state factor).

    Sums over every state path realizing the page sequence, so clones of a
    page are all considered.
    """
    if len(pages) == 0:
        raise ValueError("a trail needs at least one page")
    ids = _resolve_pages(model, pages)
    if ids is None:
        return 0.0
    return sum(forward(model, ids).values())


def _check_no_certain_cycle(model: HpgModel) -> None:
    certain = {}
    for s in model.page_states():
        row = model.out_links(s)
        if len(row) == 1:
            (dst,) = row
            if dst.is_page:
                certain[s] = dst
    for s in certain:
        seen = set()
        cur = s
        while cur in certain:
            if cur in seen:
                raise NonTerminationError(
                    f"cycle of probability-1 links through state {model.state_name(cur)}")
            seen.add(cur)
            cur = certain[cur]


def enumerate_trails(model: HpgModel, cutpoint: float) -> List[Tuple[Tuple[str, ...], float]]:
    """Maximal trails whose probability is at least ``cutpoint``.

    A depth-first expansion from ``S``: a prefix is extended by every link whose
    extension stays at or above the cutpoint, and reported once no such
    extension exists.
    """
    if not 0 < cutpoint <= 1:
        raise ValueError("cutpoint must lie in (0, 1]")
    _check_no_certain_cycle(model)
    # products that equal the cutpoint exactly may round just below it
    floor = cutpoint * (1 - 1e-12)
    found: Dict[Tuple[int, ...], float] = defaultdict(float)
    stack = []
    for s, w in model.out_links(START_STATE).items():
        p = w / model.visits(START_STATE)
        if p >= floor:
            stack.append(((s.page,), s, p))
    while stack:
        pages, state, p = stack.pop()
        extended = False
        total = model.visits(state)
        for dst, w in model.out_links(state).items():
            if not dst.is_page:
                continue
            q = p * w / total
            if q >= floor:
                stack.append((pages + (dst.page,), dst, q))
                extended = True
        if not extended:
            found[pages] += p
    named = [(tuple(model.vocab[i] for i in pages), p) for pages, p in found.items()]
    named.sort(key=lambda t: (-t[1], t[0]))
    return named
