"""Dataset/model summaries and experiment sweeps written as JSON or CSV."""

from __future__ import annotations

import csv
import json
import time
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .cloning import CloneConfig, CloneReport, apply_dynamic_clustering
from .model import HpgModel, build_first_order
from .ngram import EmptyModelError, build_ngram, dropped_sessions, theoretical_drop_fraction
from .sessions import SessionLog, count_ngrams, dataset_stats
from .synth import generate_dataset

STATS_FORMAT_VERSION = 1
SWEEP_COLUMNS = ["dataset", "method", "states", "time_ms", "clones_avg", "clones_stdev"]


def model_stats(model: HpgModel) -> Dict[str, float]:
    pages = model.page_states()
    outs = np.array([sum(1 for d in model.out_links(s) if d.is_page) for s in pages])
    ins = np.array([sum(1 for d in model.in_links(s) if d.is_page) for s in pages])
    return {
        "states": model.n_states,
        "page_states": len(pages),
        "links": model.n_links,
        "avg_out_links": float(outs.mean()) if len(pages) else 0.0,
        "stdev_out_links": float(outs.std()) if len(pages) else 0.0,
        "avg_in_links": float(ins.mean()) if len(pages) else 0.0,
        "stdev_in_links": float(ins.std()) if len(pages) else 0.0,
    }


@dataclass
class StatsReport:
    dataset: Dict[str, float]
    model: Dict[str, float]
    build_ms: float = 0.0
    cloning: Optional[Dict[str, float]] = None
    ngram: Optional[Dict[str, float]] = None
    extra: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {"format_version": STATS_FORMAT_VERSION, "dataset": self.dataset,
               "model": self.model, "build_ms": self.build_ms}
        if self.cloning is not None:
            doc["cloning"] = self.cloning
        if self.ngram is not None:
            doc["ngram"] = self.ngram
        doc.update(self.extra)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - t0) * 1000


def first_order_report(log: SessionLog, alpha: float = 0.0):
    t0 = time.perf_counter()
    ngrams = count_ngrams(log)
    model = build_first_order(ngrams, alpha)
    ms = (time.perf_counter() - t0) * 1000
    return ngrams, model, StatsReport(dataset_stats(log), model_stats(model), ms)


def clone_report(log: SessionLog, model: HpgModel, ngrams, cfg: CloneConfig,
                 build_ms: float = 0.0):
    cloned, rep = apply_dynamic_clustering(model, ngrams, cfg)
    return cloned, rep, StatsReport(dataset_stats(log), model_stats(cloned), build_ms,
                                    cloning=rep.summary())


def ngram_report(log: SessionLog, order: int, alpha: float = 0.0):
    ngm, ms = _timed(build_ngram, log, order, alpha)
    count, frac = dropped_sessions(log, order)
    info = {"order": order, "dropped_sessions": count, "dropped_fraction": frac,
            "theoretical_drop_fraction": theoretical_drop_fraction(order)}
    return ngm, StatsReport(dataset_stats(log), model_stats(ngm.model), ms, ngram=info)


def _row(dataset, method, states, ms, rep: Optional[CloneReport] = None) -> dict:
    return {"dataset": dataset, "method": method, "states": states, "time_ms": round(ms, 3),
            "clones_avg": rep.clones_avg if rep else 0.0,
            "clones_stdev": rep.clones_stdev if rep else 0.0}


def sweep(log: SessionLog, dataset: str, gammas: Sequence[float], orders: Sequence[int],
          alpha: float = 0.0, support: float = 30, k_schedule: str = "square",
          seed: int = 0, repeats: int = 1) -> List[dict]:
    """One row for the first-order model, each N-gram order and each gamma.

    DC timings exclude the first-order build. With ``repeats > 1`` the
    fastest run is kept. Orders whose model would be empty are skipped with
    a warning.
    """
    if not gammas:
        raise ValueError("at least one gamma is required")
    rows = []
    best = None
    for _ in range(repeats):
        ngrams, model, rep = first_order_report(log, alpha)
        best = rep.build_ms if best is None else min(best, rep.build_ms)
    rows.append(_row(dataset, "FO", model.n_states, best))
    for order in orders:
        if order == 2:
            continue
        times = []
        try:
            for _ in range(repeats):
                ngm, ms = _timed(build_ngram, log, order, alpha)
                times.append(ms)
        except EmptyModelError as exc:
            warnings.warn(f"{dataset}: skipping ngram-{order}: {exc}")
            continue
        rows.append(_row(dataset, f"ngram-{order}", ngm.n_states, min(times)))
    for gamma in gammas:
        cfg = CloneConfig(gamma=gamma, support=support, k_schedule=k_schedule, seed=seed)
        times = []
        for _ in range(repeats):
            (cloned, crep), ms = _timed(apply_dynamic_clustering, model, ngrams, cfg)
            times.append(ms)
        rows.append(_row(dataset, f"DC-{gamma:g}", cloned.n_states, min(times), crep))
    return rows


def synthetic_sweep(sizes: Iterable[int], gammas: Sequence[float], orders: Sequence[int],
                    seed: int = 0, sessions_per_page: float = 2.0, **kwargs) -> List[dict]:
    rows = []
    for n in sizes:
        _, log = generate_dataset(n, max(1, int(round(sessions_per_page * n))), seed)
        rows.extend(sweep(log, str(n), gammas, orders, seed=seed, **kwargs))
    return rows


def write_csv(rows: Iterable[dict], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in SWEEP_COLUMNS})
