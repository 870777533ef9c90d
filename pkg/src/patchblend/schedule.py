"""Work queue for independent NNF estimations.

Jobs are keyed; results come back keyed, so consumers combine them in their
own fixed order no matter which worker finished first. Each job's RNG seed is
derived from the run seed and the job key, never from scheduling order.
"""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Hashable, Iterable, Optional

import numpy as np

from . import rng
from .nnf import LossSpec, MatchConfig, estimate_nnf, identity_nnf


@dataclass(frozen=True, eq=False)
class MatchJob:
    key: Hashable
    source: np.ndarray
    target: np.ndarray
    loss: LossSpec
    cfg: MatchConfig
    init: Optional[np.ndarray] = None
    extras: tuple = ()


def job_seed(seed: int, key) -> int:
    words = [w for w in (key if isinstance(key, tuple) else (key,)) if isinstance(w, (int, np.integer))]
    return int(rng.hash_key(seed, *words))


def estimate_field(job: MatchJob) -> np.ndarray:
    cfg = replace(job.cfg, rng_seed=job_seed(job.cfg.rng_seed, job.key))
    f, _ = estimate_nnf(job.source, job.target, job.loss, cfg, init=job.init, extra_candidates=job.extras)
    return f


def identity_field(job: MatchJob) -> np.ndarray:
    """Stub estimator: every pixel matches itself."""
    return identity_nnf(job.target.shape[:2])


class NNFScheduler:
    """Runs :class:`MatchJob` batches on a thread pool and counts estimations.

    With ``cache`` on, a key already estimated is served from memory instead of
    being recomputed.
    """

    def __init__(self, estimator: Callable[[MatchJob], np.ndarray] = estimate_field,
                 workers: int = 1, cache: bool = False):
        self.estimator = estimator
        self.workers = max(1, int(workers))
        self.cache = cache
        self.count = 0
        self.log: list = []
        self._store: dict = {}
        self._lock = threading.Lock()

    def _one(self, job: MatchJob):
        f = self.estimator(job)
        with self._lock:
            self.count += 1
            self.log.append(job.key)
        return f

    def run(self, jobs: Iterable[MatchJob]) -> dict:
        todo, out = {}, {}
        for job in jobs:
            if self.cache and job.key in self._store:
                out[job.key] = self._store[job.key]
            elif job.key not in todo:
                todo[job.key] = job
        pending = list(todo.values())
        if self.workers > 1 and len(pending) > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                fields = list(ex.map(self._one, pending))
        else:
            fields = [self._one(j) for j in pending]
        for job, f in zip(pending, fields):
            out[job.key] = f
            if self.cache:
                self._store[job.key] = f
        return out

    def get(self, job: MatchJob) -> np.ndarray:
        return self.run([job])[job.key]

    def clear(self) -> None:
        self._store.clear()
