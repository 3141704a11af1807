"""scikit-learn style estimators over session logs.

``X`` is a sequence of sessions (each a sequence of page tokens), the text of
a session file, or a :class:`~hpgclone.sessions.SessionLog`. After ``fit``,
``predict_proba`` gives next-page distributions for session prefixes, with a
final ``END`` column for the session ending.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .cloning import CloneConfig, apply_dynamic_clustering
from .model import (FINAL_STATE, START_STATE, HpgModel, StateId, build_first_order, enumerate_trails,
                    forward)
from .ngram import build_ngram
from .serialize import export_model
from .sessions import count_ngrams
from .validation import check_prefixes, check_sessions, check_unit_interval

END = "<end>"


class _HpgEstimator(BaseEstimator):
    # set by fit(): model_, pages_, classes_
    def _fit_log(self, log):
        raise NotImplementedError

    def fit(self, X, y=None, sample_weight=None):
        check_unit_interval(self.alpha, "alpha")
        log = check_sessions(X, sample_weight)
        self.pages_ = list(log.vocab)
        self.page_index_ = {p: i for i, p in enumerate(self.pages_)}
        self.classes_ = np.array(self.pages_ + [END], dtype=object)
        self.n_sessions_ = log.n_sessions
        self._fit_log(log)
        return self

    # -- hooks mapping between page ids and model states
    def _encode(self, ids: Sequence[int]) -> Optional[List[int]]:
        return list(ids)

    def _state_page(self, state: StateId) -> int:
        return state.page

    def _start_page(self, state: StateId) -> int:
        return state.page

    def _last_page_states(self, page: int) -> List[StateId]:
        return self.model_.clones_of(page)

    def _next_distribution(self, prefix: Sequence[str]) -> np.ndarray:
        model = self.model_
        n = len(self.classes_)
        row = np.zeros(n)
        if not prefix:
            for s, w in model.out_links(START_STATE).items():
                row[self._start_page(s)] += w
            return row / row.sum()
        ids = [self.page_index_.get(p) for p in prefix]
        if None in ids:
            return self.unigram_.copy()
        enc = self._encode(ids)
        mass: Dict[StateId, float] = forward(model, enc) if enc is not None else {}
        if not mass:
            # unseen context: fall back to the last page's states weighted by visits
            mass = {s: model.visits(s) for s in self._last_page_states(ids[-1])}
        if not mass:
            return self.unigram_.copy()
        for s, p in mass.items():
            out = model.out_links(s)
            visits = sum(out.values())
            for dst, w in out.items():
                col = n - 1 if dst == FINAL_STATE else self._state_page(dst)
                row[col] += p * w / visits
        return row / row.sum()

    def predict_proba(self, X) -> np.ndarray:
        """Next-page probabilities for each prefix; columns follow ``classes_``."""
        check_is_fitted(self, "model_")
        prefixes = check_prefixes(X)
        return np.vstack([self._next_distribution(p) for p in prefixes]) if prefixes \
            else np.zeros((0, len(self.classes_)))

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def session_log_likelihood(self, session: Sequence[str]) -> float:
        check_is_fitted(self, "model_")
        ids = [self.page_index_.get(str(p)) for p in session]
        if None in ids:
            return -math.inf
        enc = self._encode(ids)
        if enc is None:
            return -math.inf
        mass = forward(self.model_, enc)
        total = sum(p * self.model_.prob(s, FINAL_STATE) for s, p in mass.items())
        return math.log(total) if total > 0 else -math.inf

    def score(self, X, y=None) -> float:
        """Mean per-session log-likelihood (``-inf`` if any session is impossible)."""
        log = check_sessions(X)
        total = 0.0
        for names, n in log.named_entries():
            total += n * self.session_log_likelihood(names)
        return total / log.n_sessions

    def trails(self, cutpoint: float):
        check_is_fitted(self, "model_")
        return enumerate_trails(self.model_, check_unit_interval(cutpoint, "cutpoint", open_low=True))

    def export(self, format: str = "json") -> str:
        check_is_fitted(self, "model_")
        return export_model(self.model_, format)

    def _set_unigram(self, ngrams):
        uni = np.zeros(len(self.classes_))
        for p, w in ngrams.uni.items():
            uni[p] = w
        self.unigram_ = uni / uni.sum()


class FirstOrderHPG(_HpgEstimator):
    """First-order HPG: transition probabilities from 2-gram counts."""

    def __init__(self, alpha: float = 0.0):
        self.alpha = alpha

    def _fit_log(self, log):
        self.ngrams_ = count_ngrams(log)
        self.model_ = build_first_order(self.ngrams_, self.alpha)
        self._set_unigram(self.ngrams_)


class DynamicClusteringHPG(_HpgEstimator):
    """First-order HPG whose states are cloned until second-order accurate.

    Parameters
    ----------
    alpha : float
        Weight of request frequency versus first-page frequency in the
        initial probabilities.
    gamma : float
        Accuracy threshold; 0 reproduces second-order probabilities exactly,
        1 performs no cloning.
    support : float
        States visited at most this many times are never cloned.
    k_schedule : {"square", "double"}
        Growth of the number of K-means clusters between attempts.
    random_state : int
        Seed for the K-means initial assignments.
    """

    def __init__(self, alpha: float = 0.0, gamma: float = 0.0, support: float = 30,
                 k_schedule: str = "square", random_state: int = 0,
                 max_kmeans_iters: int = 100):
        self.alpha = alpha
        self.gamma = gamma
        self.support = support
        self.k_schedule = k_schedule
        self.random_state = random_state
        self.max_kmeans_iters = max_kmeans_iters

    def _fit_log(self, log):
        cfg = CloneConfig(gamma=check_unit_interval(self.gamma, "gamma"), support=self.support,
                          k_schedule=self.k_schedule, seed=self.random_state,
                          max_kmeans_iters=self.max_kmeans_iters)
        self.ngrams_ = count_ngrams(log)
        self.first_order_ = build_first_order(self.ngrams_, self.alpha)
        self.model_, self.report_ = apply_dynamic_clustering(self.first_order_, self.ngrams_, cfg)
        self._set_unigram(self.ngrams_)


class NGramHPG(_HpgEstimator):
    """Fixed-order model whose states are the last ``order - 1`` pages."""

    def __init__(self, order: int = 3, alpha: float = 0.0):
        self.order = order
        self.alpha = alpha

    def _fit_log(self, log):
        self.ngram_model_ = build_ngram(log, self.order, self.alpha)
        self.model_: HpgModel = self.ngram_model_.model
        self.history_index_ = {h: i for i, h in enumerate(self.ngram_model_.histories)}
        self._history_last = [h[-1] for h in self.ngram_model_.histories]
        self._set_unigram(count_ngrams(log))

    def _encode(self, ids):
        depth = self.order - 1
        if len(ids) < depth:
            return None
        enc = []
        for t in range(len(ids) - depth + 1):
            h = self.history_index_.get(tuple(ids[t:t + depth]))
            if h is None:
                return None
            enc.append(h)
        return enc

    def _state_page(self, state):
        return self._history_last[state.page]

    def _start_page(self, state):
        return self.ngram_model_.histories[state.page][0]

    def _last_page_states(self, page):
        return [StateId(h) for h, last in enumerate(self._history_last) if last == page]

    def _next_distribution(self, prefix):
        if prefix and len(prefix) < self.order - 1:
            # too short for a full history: keep histories that start with the prefix
            ids = [self.page_index_.get(p) for p in prefix]
            hists = self.ngram_model_.histories
            matches = [StateId(h) for h, hist in enumerate(hists)
                       if list(hist[:len(ids)]) == ids]
            if not matches:
                return self.unigram_.copy()
            row = np.zeros(len(self.classes_))
            weights = defaultdict(float)
            for s in matches:
                weights[hists[s.page][len(ids)]] += self.model_.visits(s)
            for page, w in weights.items():
                row[page] += w
            return row / row.sum()
        return super()._next_distribution(prefix)
