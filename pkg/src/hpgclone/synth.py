"""Synthetic web topologies and random-surfer session logs."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse

from .sessions import SessionLog


@lru_cache(maxsize=64)
def power_law_table(exponent: float, kmin: int, cap: int) -> np.ndarray:
    """Cumulative distribution of P(k) ~ k**-exponent on ``kmin..cap``."""
    if exponent <= 1:
        raise ValueError("power-law exponent must exceed 1")
    if kmin < 1 or cap < kmin:
        raise ValueError("need 1 <= kmin <= cap")
    k = np.arange(kmin, cap + 1, dtype=float)
    pmf = k ** -exponent
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    cdf.setflags(write=False)
    return cdf


def power_law_pmf(exponent: float, kmin: int, cap: int) -> np.ndarray:
    cdf = power_law_table(exponent, kmin, cap)
    return np.diff(cdf, prepend=0.0)


def sample_power_law(exponent: float, kmin: int, cap: int,
                     rng: np.random.Generator, size=None):
    """Inverse-CDF draws from the discrete power law on ``kmin..cap``."""
    cdf = power_law_table(float(exponent), int(kmin), int(cap))
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, len(cdf) - 1)
    if size is None:
        return int(kmin + idx)
    return kmin + idx


@dataclass
class TopologyConfig:
    n_pages: int
    out_exponent: float = 2.72
    in_exponent: float = 2.1
    out_degree_min: int = 2
    in_degree_min: int = 1
    degree_cap: Optional[int] = None
    match_retry_limit: int = 100

    def __post_init__(self):
        if self.n_pages < 1:
            raise ValueError("n_pages must be positive")
        if self.out_exponent <= 1 or self.in_exponent <= 1:
            raise ValueError("power-law exponents must exceed 1")
        if self.degree_cap is None:
            self.degree_cap = max(self.n_pages - 1, 1)
        if min(self.out_degree_min, self.in_degree_min) < 1:
            raise ValueError("minimum degrees must be positive")
        self.out_degree_min = min(self.out_degree_min, self.degree_cap)
        self.in_degree_min = min(self.in_degree_min, self.degree_cap)


@dataclass
class WebTopology:
    """Directed simple graph over pages ``0..n_pages-1``."""

    n_pages: int
    edges: List[Tuple[int, int]]
    out_stubs: int = 0
    in_stubs: int = 0
    unmatched_out: int = 0
    unmatched_in: int = 0
    adjacency: List[List[int]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.adjacency:
            self.adjacency = [[] for _ in range(self.n_pages)]
            for s, t in self.edges:
                self.adjacency[s].append(t)

    def out_degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency])

    def in_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_pages, dtype=int)
        for _, t in self.edges:
            deg[t] += 1
        return deg

    def to_csv(self) -> str:
        return "source,target\n" + "".join(f"{s},{t}\n" for s, t in self.edges)


def generate_topology(cfg: TopologyConfig, rng: np.random.Generator) -> WebTopology:
    """Random stub matching with power-law in- and out-degree sequences.

    A candidate link joins a random unmatched out-stub to a random unmatched
    in-stub and is kept unless it is a loop or duplicates an existing link.
    Rejected stubs go back to their pools; matching stops once either pool is
    empty or ``match_retry_limit`` consecutive candidates were rejected.
    """
    n = cfg.n_pages
    outs = sample_power_law(cfg.out_exponent, cfg.out_degree_min, cfg.degree_cap, rng, n)
    ins = sample_power_law(cfg.in_exponent, cfg.in_degree_min, cfg.degree_cap, rng, n)
    out_pool = np.repeat(np.arange(n), outs).tolist()
    in_pool = np.repeat(np.arange(n), ins).tolist()
    edges: List[Tuple[int, int]] = []
    existing = set()
    failures = 0
    if n > 1:
        batch = np.empty(0)
        pos = 0
        while out_pool and in_pool and failures < cfg.match_retry_limit:
            if pos + 2 > len(batch):
                batch = rng.random(4096)
                pos = 0
            i = int(batch[pos] * len(out_pool))
            j = int(batch[pos + 1] * len(in_pool))
            pos += 2
            s, t = out_pool[i], in_pool[j]
            if s == t or (s, t) in existing:
                failures += 1
                continue
            failures = 0
            existing.add((s, t))
            edges.append((s, t))
            out_pool[i] = out_pool[-1]
            out_pool.pop()
            in_pool[j] = in_pool[-1]
            in_pool.pop()
    return WebTopology(n, edges, int(outs.sum()), int(ins.sum()), len(out_pool), len(in_pool))


def pagerank(topology: WebTopology, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 1000) -> np.ndarray:
    """Power-iteration PageRank with uniform teleport and dangling redistribution."""
    n = topology.n_pages
    if n == 0:
        raise ValueError("empty topology")
    if not 0 < damping < 1:
        raise ValueError("damping must lie in (0, 1)")
    out_deg = topology.out_degrees()
    if topology.edges:
        src, dst = np.array(topology.edges).T
        weights = 1.0 / out_deg[src]
        # column-stochastic transition over non-dangling pages
        m = sparse.csr_matrix((weights, (dst, src)), shape=(n, n))
    else:
        m = sparse.csr_matrix((n, n))
    dangling = out_deg == 0
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = damping * (m @ x + x[dangling].sum() / n) + (1 - damping) / n
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    return x


@dataclass
class SessionGenConfig:
    n_sessions: int
    length_exponent: float = 1.5
    stop_prob: float = 0.15
    damping: float = 0.85
    rng_seed: int = 0
    length_cap: int = 10_000

    def __post_init__(self):
        if self.n_sessions < 1:
            raise ValueError("n_sessions must be positive")
        if not 0 <= self.stop_prob < 1:
            raise ValueError("stop_prob must lie in [0, 1)")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")


def page_name(i: int) -> str:
    return f"p{i}"


def generate_sessions(topology: WebTopology, scores: np.ndarray, cfg: SessionGenConfig,
                      rng: np.random.Generator) -> SessionLog:
    """Random-surfer sessions over ``topology``.

    Start pages follow the normalized ``scores``; each session has a target
    number of clicks drawn from a power law. Before every click the session
    ends with probability ``stop_prob``; it also ends at pages without
    out-links. Links are followed uniformly at random.
    """
    p = np.asarray(scores, dtype=float)
    p = p / p.sum()
    starts = rng.choice(topology.n_pages, size=cfg.n_sessions, p=p)
    clicks = sample_power_law(cfg.length_exponent, 1, cfg.length_cap, rng, cfg.n_sessions)
    adj = topology.adjacency
    log = SessionLog()
    for i in range(topology.n_pages):
        log.intern(page_name(i))
    for start, n_clicks in zip(starts, clicks):
        cur = int(start)
        pages = [cur]
        for _ in range(int(n_clicks)):
            outs = adj[cur]
            if not outs or rng.random() < cfg.stop_prob:
                break
            cur = outs[int(rng.integers(len(outs)))]
            pages.append(cur)
        log.entries.append((tuple(pages), 1))
    return _compact(log)


def _compact(log: SessionLog) -> SessionLog:
    """Re-intern so the vocabulary holds only visited pages, in visit order."""
    out = SessionLog()
    for names, n in log.named_entries():
        out.add(names, n)
    return out


def generate_dataset(n_pages: int, n_sessions: int, seed: int = 0,
                     topology_cfg: Optional[TopologyConfig] = None,
                     session_cfg: Optional[SessionGenConfig] = None
                     ) -> Tuple[WebTopology, SessionLog]:
    """Topology plus session log from a single seed."""
    rng = np.random.default_rng(seed)
    tcfg = topology_cfg or TopologyConfig(n_pages)
    scfg = session_cfg or SessionGenConfig(n_sessions, rng_seed=seed)
    topo = generate_topology(tcfg, rng)
    scores = pagerank(topo, scfg.damping)
    return topo, generate_sessions(topo, scores, scfg, rng)
