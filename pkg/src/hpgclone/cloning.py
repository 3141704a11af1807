"""Dynamic clustering-based state cloning.

For every page state whose second-order behaviour diverges from its
first-order transition probabilities, the in-links are grouped by K-means on
their second-order probability vectors, and each group gets its own copy of
the state. Out-link weights of a copy are the 3-gram counts of the in-links
it receives, so the copies reproduce the second-order probabilities up to the
accuracy threshold ``gamma``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import (START_STATE, HpgModel, StateId, divergence_below, max_divergence,
                    target_order, threshold)
from .sessions import NGramTable

K_SCHEDULES = ("square", "double")


@dataclass
class CloneConfig:
    gamma: float = 0.0
    support: float = 30
    k_schedule: str = "square"
    seed: int = 0
    max_kmeans_iters: int = 100

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.support < 0:
            raise ValueError("support threshold must be non-negative")
        if self.k_schedule not in K_SCHEDULES:
            raise ValueError(f"k_schedule must be one of {K_SCHEDULES}")
        if self.max_kmeans_iters < 1:
            raise ValueError("max_kmeans_iters must be positive")

    def next_k(self, k: int) -> int:
        return k * k if self.k_schedule == "square" else 2 * k


@dataclass(frozen=True)
class SecondOrderVector:
    """Second-order out-distribution seen through one in-link of a state.

    ``counts[t]`` is the 3-gram count ``(source page, state page, target t)``
    and ``total`` the bigram count ``(source page, state page)``.
    """

    source: StateId
    weight: float
    counts: Tuple[int, ...]
    total: int

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.total

    @property
    def key(self) -> Tuple[int, ...]:
        # exact identity of the rational vector counts/total
        g = reduce(math.gcd, self.counts, self.total)
        return tuple(c // g for c in self.counts) + (self.total // g,)


@dataclass
class InLinkPartition:
    targets: List[StateId]
    clusters: List[List[SecondOrderVector]]
    centroids: List[np.ndarray]

    def __len__(self) -> int:
        return len(self.clusters)

    def sources(self) -> List[List[StateId]]:
        return [[v.source for v in c] for c in self.clusters]


class PartitionError(ValueError):
    pass


def out_targets(model: HpgModel, x: StateId) -> List[StateId]:
    return sorted(model.out_links(x), key=target_order)


def in_link_vectors(model: HpgModel, ngrams: NGramTable, x: StateId,
                    targets: Optional[Sequence[StateId]] = None) -> List[SecondOrderVector]:
    if targets is None:
        targets = out_targets(model, x)
    vectors = []
    for src, w in sorted(model.in_links(x).items()):
        total = ngrams.bigram(src.page, x.page)
        if total == 0:
            # alpha-only S-link: nothing observed, it stays on the original state
            continue
        counts = tuple(ngrams.trigram(src.page, x.page, t.page) for t in targets)
        vectors.append(SecondOrderVector(src, w, counts, total))
    return vectors


def _aggregate(vectors: Sequence[SecondOrderVector]) -> Tuple[np.ndarray, int]:
    """Summed 3-gram counts and bigram total, counting each source page once."""
    seen = set()
    counts = None
    total = 0
    for v in vectors:
        if v.source.page in seen:
            continue
        seen.add(v.source.page)
        arr = np.asarray(v.counts, dtype=np.int64)
        counts = arr if counts is None else counts + arr
        total += v.total
    return counts, total


def centroid(vectors: Sequence[SecondOrderVector]) -> np.ndarray:
    counts, total = _aggregate(vectors)
    return counts / total


def _ordered(targets, clusters) -> InLinkPartition:
    clusters = [sorted(c, key=lambda v: v.source) for c in clusters if c]
    clusters.sort(key=lambda c: c[0].source)
    return InLinkPartition(list(targets), clusters, [centroid(c) for c in clusters])


def _units(vectors: Sequence[SecondOrderVector]) -> List[List[SecondOrderVector]]:
    groups: Dict[Tuple[int, ...], List[SecondOrderVector]] = {}
    for v in sorted(vectors, key=lambda v: v.source):
        groups.setdefault(v.key, []).append(v)
    return list(groups.values())


def exact_partition(vectors: Sequence[SecondOrderVector],
                    targets: Sequence[StateId] = ()) -> InLinkPartition:
    """One cluster per distinct second-order vector."""
    return _ordered(targets, _units(vectors))


def kmeans_partition(vectors: Sequence[SecondOrderVector], k: int,
                     rng: Optional[np.random.Generator] = None,
                     max_iter: int = 100,
                     targets: Sequence[StateId] = ()) -> InLinkPartition:
    """Cluster in-link vectors with K-means, keeping identical vectors together.

    Centroids are the pooled second-order distributions of their members.
    Identical vectors form one indivisible unit, so at most as many clusters
    as distinct vectors are returned. Empty clusters, and clusters whose
    centroid coincides with another's, are re-seeded with the unit farthest
    from its own centroid.
    """
    if k < 1:
        raise PartitionError("k must be positive")
    if k > len(vectors):
        raise PartitionError(f"k={k} exceeds the number of in-links ({len(vectors)})")
    rng = np.random.default_rng() if rng is None else rng
    units = _units(vectors)
    g = len(units)
    k = min(k, g)
    if k == g:
        return _ordered(targets, units)

    agg = [_aggregate(u) for u in units]
    unit_counts = np.array([c for c, _ in agg], dtype=float)
    unit_totals = np.array([t for _, t in agg], dtype=float)
    unit_probs = unit_counts / unit_totals[:, None]
    assign = rng.integers(k, size=g)

    def centroids_of(assign):
        sums = np.zeros((k, unit_counts.shape[1]))
        tots = np.zeros(k)
        np.add.at(sums, assign, unit_counts)
        np.add.at(tots, assign, unit_totals)
        return sums, tots

    for _ in range(max_iter):
        changed = False
        sums, tots = centroids_of(assign)
        # merge clusters with coinciding centroids (exact: cross-multiplied integer sums)
        for a in range(k):
            for b in range(a + 1, k):
                if tots[a] and tots[b] and np.array_equal(sums[a] * tots[b], sums[b] * tots[a]):
                    assign[assign == b] = a
                    sums, tots = centroids_of(assign)
                    changed = True
        while True:
            sizes = np.bincount(assign, minlength=k)
            empty = np.flatnonzero(sizes == 0)
            if empty.size == 0:
                break
            cents = sums / np.where(tots > 0, tots, 1)[:, None]
            dist = np.linalg.norm(unit_probs - cents[assign], axis=1)
            dist[sizes[assign] < 2] = -1.0
            worst = int(np.argmax(dist))
            assign[worst] = empty[0]
            sums, tots = centroids_of(assign)
            changed = True
        cents = sums / tots[:, None]
        dist = np.linalg.norm(unit_probs[:, None, :] - cents[None, :, :], axis=2)
        best = np.argmin(dist, axis=1)
        current = dist[np.arange(g), assign]
        moves = dist[np.arange(g), best] < current
        if moves.any():
            assign = np.where(moves, best, assign)
            changed = True
        if not changed:
            break

    clusters: List[List[SecondOrderVector]] = [[] for _ in range(k)]
    for unit, c in zip(units, assign):
        clusters[c].extend(unit)
    return _ordered(targets, clusters)


def partition_deviation(part: InLinkPartition) -> float:
    worst = 0.0
    for members, cent in zip(part.clusters, part.centroids):
        for v in members:
            worst = max(worst, float(np.max(np.abs(v.probs - cent))))
    return worst


def exact_partition_deviation(part: InLinkPartition) -> Fraction:
    worst = Fraction(0)
    for members in part.clusters:
        counts, total = _aggregate(members)
        cent = [Fraction(int(c), total) for c in counts]
        for v in members:
            for c, m in zip(v.counts, cent):
                worst = max(worst, abs(Fraction(c, v.total) - m))
    return worst


def partition_is_accurate(part: InLinkPartition, gamma: float) -> bool:
    """No member probability differs from its centroid by more than ``gamma``.

    Near-ties are settled with exact fractions, like ``state_is_accurate``.
    """
    dev = partition_deviation(part)
    if abs(dev - gamma) > 1e-9:
        return dev <= gamma
    return exact_partition_deviation(part) <= threshold(gamma)


def _fresh_clone_index(model: HpgModel, page: int) -> int:
    used = [s.clone for s in model._out if s.page == page]
    used += [s.clone for s in model._in if s.page == page]
    return max(used, default=0) + 1


def _clone_inplace(model: HpgModel, x: StateId, part: InLinkPartition,
                   next_index: Optional[int] = None) -> List[StateId]:
    if next_index is None:
        next_index = _fresh_clone_index(model, x.page)
    k = len(part.clusters)
    # the cluster holding the lowest-ordered in-link is split off first; the last keeps x
    states = [StateId(x.page, next_index + n) for n in range(k - 1)] + [x]
    home = {}
    for state, members in zip(states, part.clusters):
        for v in members:
            home[v.source.page] = state
    out_weights = []
    for members in part.clusters:
        counts, _ = _aggregate(members)
        out_weights.append(counts)
    for dst in list(model.out_links(x)):
        model._del_link(x, dst)
    for state, members in zip(states, part.clusters):
        if state == x:
            continue
        for v in members:
            if v.source == x:
                continue
            w = model.in_links(x)[v.source]
            model._del_link(v.source, x)
            model._set_link(v.source, state, w)
    for state, counts in zip(states, out_weights):
        for dst, c in zip(part.targets, counts):
            if c <= 0:
                continue
            if dst.page == x.page:
                # self-loop: land on the copy that received the in-link from x's page
                dst = home[x.page]
            model._set_link(state, dst, int(c))
    return states


def clone_state(model: HpgModel, x: StateId, part: InLinkPartition) -> HpgModel:
    """Return a new model in which ``x`` is split according to ``part``."""
    if len(part.clusters) < 2:
        raise PartitionError("cloning needs a partition with at least two clusters")
    expected = set(model.in_links(x))
    got = [v.source for c in part.clusters for v in c]
    # only an alpha-only S-link may be left out; it stays on x
    missing = expected - set(got)
    if model.alpha > 0:
        missing.discard(START_STATE)
    if len(got) != len(set(got)) or not set(got) <= expected or missing:
        raise PartitionError(f"partition does not cover exactly the in-links of {x}")
    if list(part.targets) != out_targets(model, x):
        raise PartitionError(f"partition targets do not match the out-links of {x}")
    out = model.copy()
    _clone_inplace(out, x, part)
    return out


@dataclass
class StateRecord:
    page: str
    in_links: int
    out_links: int
    w: float
    clones: int
    k_tried: List[int] = field(default_factory=list)
    accurate: bool = True
    reason: str = ""


@dataclass
class CloneReport:
    records: List[StateRecord]
    n_pages: int
    states_before: int
    states_after: int
    elapsed_ms: float
    gamma: float
    k_schedule: str

    @property
    def clones_total(self) -> int:
        return sum(r.clones for r in self.records)

    def clone_counts(self) -> np.ndarray:
        counts = np.zeros(self.n_pages)
        counts[: len(self.records)] = [r.clones for r in self.records]
        return counts

    @property
    def clones_avg(self) -> float:
        return float(self.clone_counts().mean()) if self.n_pages else 0.0

    @property
    def clones_stdev(self) -> float:
        return float(self.clone_counts().std()) if self.n_pages else 0.0

    @property
    def clones_max(self) -> int:
        return int(self.clone_counts().max()) if self.n_pages else 0

    def summary(self) -> dict:
        return {
            "gamma": self.gamma,
            "k_schedule": self.k_schedule,
            "states_before": self.states_before,
            "states_after": self.states_after,
            "clones_total": self.clones_total,
            "clones_avg": self.clones_avg,
            "clones_stdev": self.clones_stdev,
            "clones_max": self.clones_max,
            "clone_time_ms": self.elapsed_ms,
        }

    def to_json(self) -> str:
        doc = self.summary()
        doc["states"] = [asdict(r) for r in self.records]
        return json.dumps(doc, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["page", "in_links", "out_links", "w", "clones", "k_tried", "accurate"])
        for r in self.records:
            writer.writerow([r.page, r.in_links, r.out_links, r.w, r.clones,
                             " ".join(map(str, r.k_tried)), str(r.accurate).lower()])
        return buf.getvalue()


def cloning_eligible(model: HpgModel, ngrams: NGramTable, x: StateId, cfg: CloneConfig) -> bool:
    return _eligibility(model, ngrams, x, cfg)[0]


def _eligibility(model, ngrams, x, cfg) -> Tuple[bool, str, float]:
    n_in = len(model.in_links(x))
    n_out = len(model.out_links(x))
    if n_out <= 1:
        return False, "single out-link", 0.0
    if n_in <= 1:
        return False, "single in-link", 0.0
    if not model.visits(x) > cfg.support:
        return False, "below support", 0.0
    div = max_divergence(model, ngrams, x)
    if divergence_below(model, ngrams, x, cfg.gamma, div):
        return False, "accurate", div
    return True, "", div


def k_sequence(n_units: int, cfg: CloneConfig) -> List[int]:
    """Cluster counts to try: 2, then the schedule, ending exactly at ``n_units``."""
    ks = []
    k = 2
    while k < n_units:
        ks.append(k)
        k = cfg.next_k(k)
    ks.append(n_units)
    return ks


def partition_state(model: HpgModel, ngrams: NGramTable, x: StateId,
                    cfg: CloneConfig) -> Tuple[InLinkPartition, List[int]]:
    """Smallest accurate in-link partition of ``x`` found along the K schedule."""
    targets = out_targets(model, x)
    vectors = in_link_vectors(model, ngrams, x, targets)
    if cfg.gamma == 0:
        part = exact_partition(vectors, targets)
        return part, [len(part)]
    n_units = len(_units(vectors))
    tried = []
    part = None
    for k in k_sequence(n_units, cfg):
        rng = np.random.default_rng([cfg.seed, x.page, k])
        part = kmeans_partition(vectors, k, rng, cfg.max_kmeans_iters, targets)
        tried.append(k)
        if partition_is_accurate(part, cfg.gamma):
            break
    return part, tried


def apply_dynamic_clustering(model: HpgModel, ngrams: NGramTable,
                             cfg: Optional[CloneConfig] = None,
                             order: Optional[Sequence[int]] = None) -> Tuple[HpgModel, CloneReport]:
    """Clone every eligible page state once, in ``order`` (default: page id order)."""
    cfg = CloneConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    work = model.copy()
    pages = sorted({s.page for s in model.page_states()})
    if order is None:
        order = pages
    elif sorted(order) != pages:
        raise ValueError("order must be a permutation of the model's pages")
    states_before = model.n_states
    records = []
    for page in order:
        x = StateId(page)
        rec = StateRecord(model.vocab[page], len(work.in_links(x)), len(work.out_links(x)),
                          work.visits(x), 0)
        ok, reason, _ = _eligibility(work, ngrams, x, cfg)
        if not ok:
            rec.reason = reason
            records.append(rec)
            continue
        part, tried = partition_state(work, ngrams, x, cfg)
        rec.k_tried = tried
        rec.accurate = partition_is_accurate(part, cfg.gamma)
        if len(part) >= 2:
            _clone_inplace(work, x, part, next_index=1)
            rec.clones = len(part) - 1
        else:
            rec.reason = "single cluster"
        records.append(rec)
    elapsed = (time.perf_counter() - t0) * 1000
    report = CloneReport(records, len(pages), states_before, work.n_states, elapsed,
                         cfg.gamma, cfg.k_schedule)
    return work, report
