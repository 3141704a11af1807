"""Weighted session logs and their 1-, 2- and 3-gram counts.

Pages are interned to dense non-negative integers in order of first
appearance. The virtual start and final symbols use negative sentinels, so no
input token can collide with them.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

START = -1
FINAL = -2

_COUNT_RE = re.compile(r"^\*(\d+)$")
_SPLIT_RE = re.compile(r"[\s,]+")


class SessionParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def symbol_name(page: int, vocab: Sequence[str]) -> str:
    if page == START:
        return "S"
    if page == FINAL:
        return "F"
    return vocab[page]


@dataclass
class SessionLog:
    """Sessions as sequences of interned page ids, each with a repeat count."""

    vocab: List[str] = field(default_factory=list)
    entries: List[Tuple[Tuple[int, ...], int]] = field(default_factory=list)
    _index: Dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self._index) != len(self.vocab):
            self._index = {name: i for i, name in enumerate(self.vocab)}
        if len(self._index) != len(self.vocab):
            raise ValueError("duplicate page tokens in vocabulary")

    def intern(self, token: str) -> int:
        idx = self._index.get(token)
        if idx is None:
            idx = len(self.vocab)
            self._index[token] = idx
            self.vocab.append(token)
        return idx

    def page_id(self, token: str) -> int:
        return self._index[token]

    def add(self, pages: Iterable[str], count: int = 1) -> None:
        ids = tuple(self.intern(p) for p in pages)
        if not ids:
            raise ValueError("a session needs at least one page")
        if count < 1:
            raise ValueError("session count must be >= 1")
        self.entries.append((ids, int(count)))

    @classmethod
    def from_sequences(cls, sessions: Iterable, counts: Iterable[int] | None = None) -> "SessionLog":
        """Build a log from page sequences; tokens are converted with ``str``."""
        log = cls()
        sessions = list(sessions)
        if counts is None:
            counts = [1] * len(sessions)
        for pages, count in zip(sessions, counts):
            log.add([str(p) for p in pages], count)
        return log

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Tuple[Tuple[int, ...], int]]:
        return iter(self.entries)

    @property
    def n_sessions(self) -> int:
        return sum(c for _, c in self.entries)

    @property
    def n_requests(self) -> int:
        return sum(c * len(s) for s, c in self.entries)

    def named_entries(self) -> List[Tuple[Tuple[str, ...], int]]:
        return [(tuple(self.vocab[p] for p in s), c) for s, c in self.entries]

    def concat(self, other: "SessionLog") -> "SessionLog":
        out = SessionLog()
        for names, count in self.named_entries() + other.named_entries():
            out.add(names, count)
        return out


def parse_sessions(text: str) -> SessionLog:
    """Parse the line-oriented session format.

    Each non-blank line is one session: page tokens separated by whitespace or
    commas, optionally ending with ``*N`` giving the number of occurrences.
    Lines starting with ``#`` are comments.
    """
    log = SessionLog()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = [t for t in _SPLIT_RE.split(line) if t]
        count = 1
        if tokens and tokens[-1].startswith("*"):
            m = _COUNT_RE.match(tokens[-1])
            if m is None:
                raise SessionParseError(lineno, f"malformed count suffix {tokens[-1]!r}")
            count = int(m.group(1))
            if count < 1:
                raise SessionParseError(lineno, "session count must be >= 1")
            tokens = tokens[:-1]
        if not tokens:
            continue
        for tok in tokens:
            if tok.startswith("*"):
                raise SessionParseError(lineno, f"count suffix {tok!r} must come last")
        log.add(tokens, count)
    return log


def read_sessions(path) -> SessionLog:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_sessions(fh.read())


def format_sessions(log: SessionLog) -> str:
    lines = []
    for names, count in log.named_entries():
        line = " ".join(names)
        if count != 1:
            line += f" *{count}"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class NGramTable:
    """Exact 1/2/3-gram counts of a session log, weighted by session counts.

    ``tri`` follows the padded-session rule: a session of length >= 2
    contributes ``(S, p1, p2)``, every interior triple and ``(p_{L-1}, p_L, F)``.
    Length-1 sessions add no trigram; ``singles`` keeps their per-page totals so
    that :meth:`trigram` can still report the ``(S, p, F)`` continuation.
    """

    vocab: Tuple[str, ...]
    uni: Dict[int, int]
    bi: Dict[Tuple[int, int], int]
    tri: Dict[Tuple[int, int, int], int]
    singles: Dict[int, int]

    def bigram(self, i: int, k: int) -> int:
        return self.bi.get((i, k), 0)

    def trigram(self, i: int, k: int, j: int) -> int:
        n = self.tri.get((i, k, j), 0)
        if i == START and j == FINAL:
            n += self.singles.get(k, 0)
        return n

    @property
    def n_pages(self) -> int:
        return len(self.uni)

    def named(self) -> Dict[str, Counter]:
        """Counts keyed by page names; handy for comparing tables across logs."""
        name = lambda p: symbol_name(p, self.vocab)  # noqa: E731
        return {
            "uni": Counter({name(k): v for k, v in self.uni.items()}),
            "bi": Counter({tuple(map(name, k)): v for k, v in self.bi.items()}),
            "tri": Counter({tuple(map(name, k)): v for k, v in self.tri.items()}),
        }


def count_ngrams(log: SessionLog) -> NGramTable:
    uni: Counter = Counter()
    bi: Counter = Counter()
    tri: Counter = Counter()
    singles: Counter = Counter()
    for pages, n in log.entries:
        padded = (START,) + pages + (FINAL,)
        for p in pages:
            uni[p] += n
        for a, b in zip(padded, padded[1:]):
            bi[(a, b)] += n
        if len(pages) == 1:
            singles[pages[0]] += n
            continue
        for a, b, c in zip(padded, padded[1:], padded[2:]):
            tri[(a, b, c)] += n
    return NGramTable(tuple(log.vocab), dict(uni), dict(bi), dict(tri), dict(singles))


def dataset_stats(log: SessionLog) -> Dict[str, float]:
    """Summary statistics of a session log (session counts weight every figure)."""
    n = log.n_sessions
    if n == 0:
        raise ValueError("empty session log")
    requests = log.n_requests
    mean = requests / n
    var = sum(c * (len(s) - mean) ** 2 for s, c in log.entries) / n
    pages = {p for s, _ in log.entries for p in s}
    return {
        "sessions": n,
        "requests": requests,
        "avg_session_length": mean,
        "stdev_session_length": math.sqrt(var),
        "max_session_length": max(len(s) for s, _ in log.entries),
        "starting_pages": len({s[0] for s, _ in log.entries}),
        "terminating_pages": len({s[-1] for s, _ in log.entries}),
        "distinct_pages": len(pages),
    }
