"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import numbers
from typing import Iterable, Optional

import numpy as np

from .sessions import SessionLog, parse_sessions


def check_sessions(X, sample_weight: Optional[Iterable[int]] = None) -> SessionLog:
    """Coerce ``X`` to a :class:`SessionLog`.

    Accepts a SessionLog, the text of a session file, or an iterable of page
    sequences (tokens are converted with ``str``). ``sample_weight`` gives
    per-session occurrence counts for the sequence form.
    """
    if isinstance(X, SessionLog):
        if sample_weight is not None:
            raise ValueError("sample_weight cannot be combined with a SessionLog")
        log = X
    elif isinstance(X, str):
        if sample_weight is not None:
            raise ValueError("sample_weight cannot be combined with session text")
        log = parse_sessions(X)
    else:
        seqs = []
        for n, s in enumerate(X):
            if isinstance(s, str):
                raise TypeError(f"session {n} is a string; pass a sequence of page tokens")
            s = list(s)
            if not s:
                raise ValueError(f"session {n} is empty")
            seqs.append(s)
        if sample_weight is None:
            counts = [1] * len(seqs)
        else:
            counts = check_counts(sample_weight, len(seqs))
        log = SessionLog.from_sequences(seqs, counts)
    if len(log) == 0:
        raise ValueError("no sessions given")
    return log


def check_counts(sample_weight, n: int) -> list:
    arr = np.asarray(list(sample_weight))
    if arr.shape != (n,):
        raise ValueError(f"sample_weight has shape {arr.shape}, expected ({n},)")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("sample_weight must hold whole occurrence counts")
    if np.any(arr < 1):
        raise ValueError("sample_weight entries must be >= 1")
    return [int(v) for v in arr]


def check_unit_interval(value, name: str, *, open_low: bool = False) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    low_ok = value > 0 if open_low else value >= 0
    if not (low_ok and value <= 1):
        interval = "(0, 1]" if open_low else "[0, 1]"
        raise ValueError(f"{name} must lie in {interval}, got {value}")
    return value


def check_prefixes(X) -> list:
    prefixes = []
    for n, s in enumerate(X):
        if isinstance(s, str):
            raise TypeError(f"prefix {n} is a string; pass a sequence of page tokens")
        prefixes.append([str(p) for p in s])
    return prefixes
