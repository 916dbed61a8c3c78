"""Monte Carlo simulation of the activation process.

Walks are not stepped.  A frog stepping left with probability ``p`` has a
maximum rightward excursion ("reach") that is geometric,
``P(reach >= k) = r**k`` with ``r = (1 - p)/p``; since paths move one site
at a time, reach >= k is the same event as visiting every site within k to
the right.  A site holding ``x`` frogs therefore only matters through the
largest of ``x`` reaches, which is sampled directly by inverse transform:

    max reach = floor(log(1 - u**(1/x)) / log r)

so a site costs O(1) regardless of how many frogs it holds.  With ``x = 1``
this is the single-frog sampler evaluated at the same uniform.

Sites are drawn in fixed blocks of ``BLOCK`` (counts first, then one uniform
per site), so runs that share a stream see identical sites whatever their
cap; that is what makes the cap-monotonicity coupling exact.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np

from .errors import ResourceBudgetError
from .model import ModelConfig
from .rng import stream

BLOCK = 1024
DEFAULT_BUDGET = 10**8
DEFAULT_ABORT_DEPTH = 60
_FPLUS_CELLS = 1 << 21  # sites x trials held in memory at once
_Z95 = NormalDist().inv_cdf(0.975)


def reach_from_uniform(u, r):
    """Inverse-CDF reach: floor(log(1 - u) / log r)."""
    with np.errstate(divide="ignore"):
        return np.floor(np.log1p(-np.asarray(u, dtype=float)) / np.log(r)).astype(np.int64)


def max_reach_from_uniform(u, count, log_r):
    """Largest of ``count`` independent reaches from one uniform; -1 where count is 0."""
    u = np.asarray(u, dtype=float)
    count = np.asarray(count)
    safe = np.maximum(count, 1).astype(float)
    with np.errstate(divide="ignore"):
        # 1 - u**(1/x) computed without cancellation
        one_minus = -np.expm1(np.log(u) / safe)
        m = np.floor(np.log(one_minus) / log_r).astype(np.int64)
    return np.where(count > 0, m, -1)


def sample_reach(p: float, rng: np.random.Generator) -> int:
    """Maximum rightward excursion of one frog with left-step probability ``p``."""
    return int(reach_from_uniform(rng.random(), (1.0 - p) / p))


def sample_reaches(p: float, size: int, rng: np.random.Generator) -> np.ndarray:
    return reach_from_uniform(rng.random(size), (1.0 - p) / p)


def step_walk_max(p: float, rng, abort_depth: int = DEFAULT_ABORT_DEPTH) -> int:
    """Reach of an explicit +-1 walk, stopped once it falls ``abort_depth`` below its start.

    Steps left when ``rng.random() < p``.  Oracle for :func:`sample_reach`;
    stopping early drops at most probability r**abort_depth of mass.
    """
    if abort_depth < 1:
        raise ValueError("abort_depth must be at least 1")
    pos = best = 0
    while pos > best - abort_depth:
        pos += -1 if rng.random() < p else 1
        best = max(best, pos)
    return best


def step_walk_max_batch(p: float, size: int, rng: np.random.Generator,
                        abort_depth: int = DEFAULT_ABORT_DEPTH, chunk: int = 64) -> np.ndarray:
    """``size`` independent runs of :func:`step_walk_max`, stepped in lockstep."""
    pos = np.zeros(size, dtype=np.int64)
    best = np.zeros(size, dtype=np.int64)
    live = np.arange(size)
    while live.size:
        steps = np.where(rng.random((live.size, chunk)) < p, -1, 1)
        path = pos[live, None] + np.cumsum(steps, axis=1)
        peak = np.maximum(best[live, None], np.maximum.accumulate(path, axis=1))
        dead = path <= peak - abort_depth
        # a walk stops at its first dead step; later steps of that row are ignored
        first = np.where(dead.any(axis=1), dead.argmax(axis=1), chunk - 1)
        rows = np.arange(live.size)
        pos[live] = path[rows, first]
        best[live] = peak[rows, first]
        live = live[~dead.any(axis=1)]
    return best


@dataclass(frozen=True)
class SimOutcome:
    died_at: Optional[int]
    survived_to_cap: bool
    activated_frogs: int
    activated_sites: int
    origin_hits: int
    zero_sites: Optional[int] = None


class _SiteStream:
    """Counts and largest reaches of sites 1, 2, ... drawn lazily in fixed blocks."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.counts = np.empty(0, dtype=np.int64)
        self.reach_to = np.empty(0, dtype=np.int64)

    def ensure(self, site: int):
        while len(self.counts) < site:
            start = len(self.counts) + 1
            j = np.arange(start, start + BLOCK)
            x = self.cfg.counts.sample(j, self.rng)
            u = self.rng.random(BLOCK)
            p = np.asarray(self.cfg.drift.p_at(j), dtype=float)
            log_r = np.log((1.0 - p) / p)
            m = max_reach_from_uniform(u, x, log_r)
            # rightmost site hit by this site's frogs (the site itself if none wake)
            to = np.where(x > 0, j + m, 0)
            self.counts = np.concatenate([self.counts, x])
            self.reach_to = np.concatenate([self.reach_to, to])


def run_activation(cfg: ModelConfig, cap: int, rng: np.random.Generator,
                   budget: int = DEFAULT_BUDGET) -> SimOutcome:
    """One run of the sleeping-frog model, truncated at site ``cap``.

    The frontier F is the rightmost site reached so far.  Sites up to
    min(F, cap) wake in order and push F out; the run dies at F + 1 when no
    unwoken site remains below the frontier, and survives once F >= cap.
    Every woken frog eventually returns to the origin, so origin hits are
    the woken frogs plus the origin frog.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    frontier = sample_reach(cfg.p0, rng)
    sites = _SiteStream(cfg, rng)
    done = 0
    frogs = 0
    while done < min(frontier, cap):
        sites.ensure(min(frontier, cap))
        end = min(cap, len(sites.counts))
        to = sites.reach_to[done:end]
        front = np.maximum(frontier, np.maximum.accumulate(to))
        # site done+1+i wakes iff the frontier left by the sites before it reaches it
        before = np.concatenate([[frontier], front[:-1]])
        blocked = np.nonzero(before < np.arange(done + 1, end + 1))[0]
        woken = int(blocked[0]) if blocked.size else len(to)
        frogs += int(sites.counts[done: done + woken].sum())
        if frogs > budget:
            raise ResourceBudgetError(f"activated frogs exceeded budget {budget}")
        if woken:
            frontier = int(front[woken - 1])
        done += woken
    survived = frontier >= cap
    return SimOutcome(
        died_at=None if survived else frontier + 1,
        survived_to_cap=survived,
        activated_frogs=frogs,
        activated_sites=done,
        origin_hits=frogs + 1,
    )


def zero_probability(cfg: ModelConfig, n: int) -> float:
    """Closed form for P(N_n = 0) in the all-active model.

    (1 - r_0**n) * prod_{j=1}^{n-1} f_j(1 - r_j**(n - j)).
    """
    r0 = (1.0 - cfg.p0) / cfg.p0
    log_p = math.log1p(-r0 ** n)
    if n > 1:
        j = np.arange(1, n)
        p = np.asarray(cfg.drift.p_at(j), dtype=float)
        eps = ((1.0 - p) / p) ** (n - j)
        log_p += float(np.sum(cfg.counts.log_pgf_one_minus(j, eps)))
    return math.exp(log_p)


def run_fplus(cfg: ModelConfig, cap: int, rng: np.random.Generator,
              budget: int = DEFAULT_BUDGET) -> SimOutcome:
    """One run of the all-active model on sites 0..cap-1.

    Every frog gets its own reach; N_n counts frogs from sites below n whose
    reach covers n, for n = 1..cap.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    j = np.arange(1, cap)
    x = cfg.counts.sample(j, rng) if cap > 1 else np.empty(0, dtype=np.int64)
    total = int(x.sum())
    if total > budget:
        raise ResourceBudgetError(f"frog count {total} exceeded budget {budget}")
    origin = np.concatenate([[0], np.repeat(j, x)])
    p = np.concatenate([[cfg.p0], np.repeat(np.asarray(cfg.drift.p_at(j), dtype=float), x)])
    reach = reach_from_uniform(rng.random(len(origin)), (1.0 - p) / p)
    n_counts = hit_counts(origin, reach, cap)
    zeros = np.nonzero(n_counts == 0)[0]
    died = int(zeros[0]) + 1 if zeros.size else None
    return SimOutcome(
        died_at=died,
        survived_to_cap=died is None,
        activated_frogs=total,
        activated_sites=cap - 1,
        origin_hits=total + 1,
        zero_sites=int(zeros.size),
    )


def hit_counts(origin: np.ndarray, reach: np.ndarray, cap: int) -> np.ndarray:
    """N_1..N_cap from per-frog origins and reaches (a frog at i covers i+1..i+reach)."""
    lo = origin + 1
    hi = np.minimum(origin + reach, cap)
    keep = hi >= lo
    diff = np.zeros(cap + 2, dtype=np.int64)
    np.add.at(diff, lo[keep], 1)
    np.add.at(diff, hi[keep] + 1, -1)
    return np.cumsum(diff)[1: cap + 1]


def fplus_zero_frequencies(cfg: ModelConfig, cap: int, trials: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Fraction of ``trials`` all-active runs with N_n = 0, for n = 1..cap.

    Vectorized over trials: N_n = 0 iff no site below n has a largest reach
    covering n, so only per-site largest reaches are drawn.  Trials run in
    chunks whose size depends only on ``cap``, so results do not depend on
    memory limits.
    """
    if cap < 1 or trials < 1:
        raise ValueError("cap and trials must be at least 1")
    j = np.arange(1, cap)
    p = np.asarray(cfg.drift.p_at(j), dtype=float)
    log_r = np.log((1.0 - p) / p)
    n = np.arange(1, cap + 1)
    chunk = max(1, _FPLUS_CELLS // cap)
    zeros = np.zeros(cap, dtype=np.int64)
    for start in range(0, trials, chunk):
        t = min(chunk, trials - start)
        reach_to = np.empty((t, cap), dtype=np.int64)
        reach_to[:, 0] = reach_from_uniform(rng.random(t), (1.0 - cfg.p0) / cfg.p0)
        if cap > 1:
            x = cfg.counts.sample(np.tile(j, t), rng).reshape(t, cap - 1)
            m = max_reach_from_uniform(rng.random((t, cap - 1)), x, log_r)
            reach_to[:, 1:] = np.where(x > 0, j + m, 0)
        covered = np.maximum.accumulate(reach_to, axis=1)
        zeros += np.sum(covered < n, axis=0)
    return zeros / trials


@dataclass(frozen=True)
class SurvivalEstimate:
    trials: int
    survived: int
    proportion: float
    ci_low: float
    ci_high: float
    master_seed: int
    cap: int


def wilson_interval(successes: int, trials: int, z: float = _Z95):
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, min(phat, centre - half)), min(1.0, max(phat, centre + half))


def worker_count() -> int:
    env = os.environ.get("FROG_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_trials(cfg: ModelConfig, cap: int, trials: int, master_seed: int,
               workers: Optional[int] = None, budget: int = DEFAULT_BUDGET,
               runner=run_activation) -> list:
    """Outcomes of trials 0..trials-1, trial i drawing from ``stream(master_seed, i)``."""
    workers = worker_count() if workers is None else max(1, workers)

    def one(i):
        try:
            return runner(cfg, cap, stream(master_seed, i), budget)
        except ResourceBudgetError as exc:
            raise ResourceBudgetError(f"trial {i}: {exc}", trial=i) from None

    if workers == 1 or trials < 2:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(trials)))


def estimate_survival(cfg: ModelConfig, cap: int, trials: int, master_seed: int,
                      workers: Optional[int] = None, budget: int = DEFAULT_BUDGET,
                      outcomes: Optional[list] = None) -> SurvivalEstimate:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if outcomes is None:
        outcomes = run_trials(cfg, cap, trials, master_seed, workers, budget)
    survived = sum(o.survived_to_cap for o in outcomes)
    lo, hi = wilson_interval(survived, trials)
    return SurvivalEstimate(trials, survived, survived / trials, lo, hi, master_seed, cap)
