"""Transience criteria: the series that decide transience, evaluated numerically.

Every series is returned as a :class:`SeriesReport` carrying its terms,
partial sums and the log-space values that were actually accumulated.  The
verdict attached to a finite stretch of terms is a heuristic
(:func:`classify_divergence`); where a closed-form answer is available it is
reported alongside and takes precedence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import pgf
from .errors import NumericalError
from .model import DriftSpec, LambdaSpec, ModelConfig, drift_at, ratios
from .pgf import DistributionSpec
from .quadrature import integrate

DIVERGES = "diverges"
CONVERGES = "converges"
INCONCLUSIVE = "inconclusive"
TRANSIENT = "transient"
NON_TRANSIENT = "non-transient"

# K feeds exp(-K / (4 a_n)), which amplifies its error by 1/(4 a_n)
SERIES_K_TOL = 1e-13

HEURISTIC_NOTE = "heuristic: fitted decay of the last half of the terms, not a proof"


@dataclass
class SeriesReport:
    name: str
    n: np.ndarray
    terms: np.ndarray
    log_terms: np.ndarray
    partial_sums: np.ndarray
    verdict: str
    note: str = HEURISTIC_NOTE
    exponent: float = math.nan
    closed_form: Optional[str] = None
    closed_form_reason: str = ""
    # divergence of the series means transience, except for the subsequence sum
    divergence_means: str = TRANSIENT
    extra: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return int(self.n[-1])

    @property
    def transience(self) -> str:
        if self.closed_form is not None:
            return self.closed_form
        if self.divergence_means == TRANSIENT:
            return {DIVERGES: TRANSIENT, CONVERGES: NON_TRANSIENT}.get(self.verdict, INCONCLUSIVE)
        # summability only gives a sufficient condition for non-transience
        return NON_TRANSIENT if self.verdict == CONVERGES else INCONCLUSIVE


def _report(name, n, log_terms, **kw):
    log_terms = np.asarray(log_terms, dtype=float)
    if not np.all(np.isfinite(log_terms) | (log_terms == -np.inf)) or np.any(np.isnan(log_terms)):
        raise NumericalError(f"{name}: non-finite log term")
    terms = np.exp(log_terms)
    partial = np.cumsum(terms)
    cls = classify_divergence(terms, n) if len(terms) >= 64 else None
    verdict, exponent = (cls.verdict, cls.exponent) if cls else (INCONCLUSIVE, math.nan)
    note = HEURISTIC_NOTE if cls else "too few terms for the divergence heuristic"
    return SeriesReport(name, np.asarray(n), terms, log_terms, partial, verdict,
                        note=note, exponent=exponent, **kw)


def hitting_probability(p: float, k: int) -> float:
    """Chance that a walker stepping left w.p. ``p`` ever gets ``k`` sites to the right."""
    if not 0.5 < p < 1.0:
        raise ValueError("p must lie in (1/2, 1)")
    if k < 0:
        raise ValueError("k must be nonnegative")
    return ((1.0 - p) / p) ** k


# ---------------------------------------------------------------------------
# divergence heuristic


@dataclass(frozen=True)
class Classification:
    verdict: str
    exponent: float
    exponent_range: tuple


def classify_divergence(terms, n=None, margin: float = 0.15) -> Classification:
    """Guess whether a positive series diverges from its first terms.

    Over the last half of the data ``log(term_n)`` is fitted against
    ``{1, log n, sqrt(n), n}``; the local decay exponent
    ``-d log(term) / d log n`` is read off the fit at the middle and the end
    of the window, together with a plain log-log slope.  All three at most
    ``1 - margin`` means the terms decay no faster than ``n**-(1 - margin)``
    (diverges); all at least ``1 + margin`` means converges.  Anything else
    is inconclusive.
    """
    t = np.asarray(terms, dtype=float)
    if len(t) < 64:
        raise ValueError("need at least 64 terms")
    nn = np.arange(1, len(t) + 1, dtype=float) if n is None else np.asarray(n, dtype=float)
    half = len(t) // 2
    tt, nt = t[half:], nn[half:]
    if np.any(tt < 0) or np.any(np.isnan(tt)):
        raise ValueError("terms must be nonnegative")
    if np.all(tt[len(tt) // 2:] == 0.0):
        return Classification(CONVERGES, math.inf, (math.inf, math.inf))
    if np.any(tt == 0.0):
        return Classification(INCONCLUSIVE, math.nan, (math.nan, math.nan))
    y = np.log(tt)
    x = np.log(nt)
    slope = np.polyfit(x - x.mean(), y, 1)[0]
    # normalize the basis columns before solving; they are nearly collinear
    cols = [np.ones_like(nt), np.log(nt), np.sqrt(nt), nt]
    scales = [np.max(np.abs(c)) for c in cols]
    A = np.stack([c / s for c, s in zip(cols, scales)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    c1, c2, c3 = coef[1] / scales[1], coef[2] / scales[2], coef[3] / scales[3]

    def local(m):
        return -(c1 + 0.5 * c2 * math.sqrt(m) + c3 * m)

    alphas = (local(nt[len(nt) // 2]), local(nt[-1]), -slope)
    lo, hi = min(alphas), max(alphas)
    if hi <= 1.0 - margin:
        verdict = DIVERGES
    elif lo >= 1.0 + margin:
        verdict = CONVERGES
    else:
        verdict = INCONCLUSIVE
    return Classification(verdict, float(alphas[1]), (float(lo), float(hi)))


# ---------------------------------------------------------------------------
# closed forms


def critical_c(k_value: float) -> float:
    """Critical C for a_n = C / log n: transient iff C >= K/4."""
    return k_value / 4.0


def closed_form_verdict(cfg: ModelConfig, k_tol: float = SERIES_K_TOL):
    """Transience verdict from a closed-form criterion, or ``None``.

    Covers i.i.d. counts with constant drift (log-moment criterion) or with
    ``a_n = C / log n`` (critical C = K/4), and Poisson counts with constant
    or ``C / log n`` drift and constant or linear means.
    """
    d, c = cfg.drift, cfg.counts
    if c.kind == "iid":
        if d.kind == "constant":
            lpm = pgf.log_plus_moment(c.dist)
            if lpm.status == "finite":
                return TRANSIENT, "finite E[log+ X] with constant drift"
            return None
        if d.kind == "c_over_log" and math.isfinite(pgf.mean(c.dist)):
            k = k_constant(c.dist, k_tol)
            return _c_vs_k(d.C, k), f"a_n = C/log n with K = {k.value:.12g}"
        return None
    if c.kind == "poisson_sequence":
        lam = c.lam
        if lam.kind == "table":
            return None
        slope = lam.alpha if lam.kind == "linear" else 0.0
        level = lam.beta if lam.kind == "linear" else lam.value
        if d.kind == "constant":
            if slope > 0:
                return NON_TRANSIENT, "lambda_n grows linearly with constant drift"
            return TRANSIENT, "constant lambda and constant drift give constant terms"
        if d.kind == "c_over_log":
            if slope > 0:
                return NON_TRANSIENT, "lambda_n grows linearly; terms decay faster than any power"
            v = "transient" if d.C >= level / 4.0 else NON_TRANSIENT
            return v, f"terms ~ n**(-lambda/(4C)); critical C = lambda/4 = {level / 4.0:.12g}"
    return None


def _c_vs_k(C, k):
    # the criterion includes equality; allow for the quadrature error in K
    return TRANSIENT if C >= (k.value - k.abs_error_bound) / 4.0 else NON_TRANSIENT


# ---------------------------------------------------------------------------
# the general series


def general_series(cfg: ModelConfig, n_max: int, closed_form: bool = True) -> SeriesReport:
    """Terms  prod_{j=1}^{n-1} f_j(1 - r_j**(n-j))  for n = 2..n_max.

    Each term is assembled independently as the sum of its own n - 1 log
    factors, so the output does not depend on evaluation order.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    log_r = np.log(ratios(cfg, n_max))
    counts = cfg.counts
    n = np.arange(2, n_max + 1)
    log_terms = np.empty(len(n))
    for idx, m in enumerate(n):
        j = np.arange(1, m)
        eps = np.exp((m - j) * log_r[: m - 1])
        logs = counts.log_pgf_one_minus(j, eps)
        if np.any(logs > 1e-15) or np.any(np.isnan(logs)):
            raise NumericalError(f"factor outside (0, 1] in term n={m}")
        log_terms[idx] = np.sum(logs)
    kw = {}
    if closed_form:
        cf = closed_form_verdict(cfg)
        if cf is not None:
            kw = {"closed_form": cf[0], "closed_form_reason": cf[1]}
    return _report("general", n, log_terms, **kw)


def product_series_iid_constant(dist: DistributionSpec, p: float, n_max: int) -> np.ndarray:
    """log of prod_{j=1}^{n-1} f(1 - r**j) for n = 2..n_max (the i.i.d. constant-drift form)."""
    r = (1.0 - p) / p
    j = np.arange(1, n_max)
    logs = pgf.log_pgf_one_minus(dist, r ** j)
    return np.array([math.fsum(logs[: m - 1]) for m in range(2, n_max + 1)])


# ---------------------------------------------------------------------------
# K constant and the i.i.d. criterion


@dataclass(frozen=True)
class KConstant:
    value: float
    abs_error_bound: float


def _neg_log_f_of_one_minus_exp(dist):
    def h(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        small = x <= 1.0
        out[small] = -pgf.log_pgf(dist, -np.expm1(-x[small]))
        out[~small] = -pgf.log_pgf_one_minus(dist, np.exp(-x[~small]))
        return out
    return h


def k_constant(dist: DistributionSpec, tol: float = 1e-10) -> KConstant:
    """K = -integral_0^inf log f(1 - e^{-x}) dx.

    The integrand behaves like ``-d log x`` near 0 (d the minimal support
    point) and like ``q e^{-x}`` at infinity (q the mean).  [0, 1] is mapped
    by x = e^{-t}, which turns the log singularity into a smooth,
    exponentially decaying integrand; [1, X] is integrated directly; the
    tail beyond X is taken as ``q e^{-X}``, with a second-order remainder
    bound from  1 - f(1 - e) <= -log f(1 - e) <= -q log(1 - e).
    """
    if not 1e-14 < tol < 1e-2:
        raise ValueError("tol must lie in (1e-14, 1e-2)")
    q = pgf.mean(dist)
    if not math.isfinite(q):
        raise NumericalError("K is infinite: the count distribution has infinite mean")
    d = pgf.min_support(dist)
    c_d = math.exp(float(pgf.log_pgf(dist, 0.0))) if d == 0 else _atom(dist, d)
    h = _neg_log_f_of_one_minus_exp(dist)

    # truncation of the t-range: integrand there is at most about e^{-t} (d t + |log c_d| + 1)
    slack = abs(math.log(c_d)) + 1.0
    t_max = 30.0
    while math.exp(-t_max) * (d * (t_max + 1.0) + slack) > tol / 10.0:
        t_max += 5.0
    trunc = math.exp(-t_max) * (d * (t_max + 1.0) + slack)

    def head(t):
        x = np.exp(-t)
        return h(x) * x

    v1, e1 = integrate(head, 0.0, t_max, tol / 4.0)

    # tail: q z - f''(1) z^2/4 <= integral_X^inf <= q Li2(z) <= q z + q z^2 / (4 (1 - z)), z = e^{-X}
    f2 = pgf.second_factorial_moment(dist)
    x_cut = 1.0
    tail_err = math.inf
    while tail_err > tol / 4.0:
        x_cut += 1.0
        z = math.exp(-x_cut)
        tail_err = max(q / (4.0 * (1.0 - z)), f2 / 4.0) * z * z
    tail = q * z
    v2, e2 = integrate(h, 1.0, x_cut, tol / 4.0)
    err = e1 + e2 + tail_err + trunc
    if err > tol:
        raise NumericalError(f"K error bound {err:.3g} exceeds tolerance {tol:.3g}")
    return KConstant(math.fsum([v1, v2, tail]), err)


def _atom(dist, d):
    if dist.kind == "deterministic":
        return 1.0
    if dist.kind == "table":
        return math.fsum(p for v, p in zip(dist.values, dist.probs) if v == d)
    if dist.kind == "dyadic_zeta":
        return 1.0 / float(pgf.zeta(1.0 + dist.alpha))
    raise AssertionError(dist.kind)


SeqLike = Union[DriftSpec, Sequence[float], np.ndarray, Callable]


def _a_values(a_seq, n):
    if isinstance(a_seq, DriftSpec):
        return np.asarray(a_seq.a(n), dtype=float)
    if callable(a_seq):
        return np.asarray([a_seq(int(m)) for m in n], dtype=float)
    a = np.asarray(a_seq, dtype=float)
    if len(a) < len(n):
        raise ValueError("a sequence shorter than n_max")
    return a[: len(n)]


def _lam_values(lam_seq, n):
    if isinstance(lam_seq, LambdaSpec):
        return np.asarray(lam_seq.at(n), dtype=float)
    if callable(lam_seq):
        return np.asarray([lam_seq(int(m)) for m in n], dtype=float)
    lam = np.asarray(lam_seq, dtype=float)
    if lam.ndim == 0:
        return np.full(len(n), float(lam))
    if len(lam) < len(n):
        raise ValueError("lambda sequence shorter than n_max")
    return lam[: len(n)]


def iid_drift_terms(a_seq: SeqLike, dist: DistributionSpec, n_max: int,
                    tol: float = SERIES_K_TOL) -> SeriesReport:
    """Terms exp(-K/(4 a_n)) / a_n**(d/2) for n = 1..n_max.

    When ``a_seq`` is a ``c_over_log`` drift the closed-form verdict
    (transient iff C >= K/4) is attached.
    """
    n = np.arange(1, n_max + 1)
    a = _a_values(a_seq, n)
    if np.any(~((a > 0) & (a < 0.5))):
        raise ValueError("a_n must lie in (0, 1/2)")
    k = k_constant(dist, tol)
    d = pgf.min_support(dist)
    log_terms = -k.value / (4.0 * a) - 0.5 * d * np.log(a)
    kw = {"extra": {"K": k.value, "K_error": k.abs_error_bound, "d": d}}
    if isinstance(a_seq, DriftSpec) and a_seq.kind == "c_over_log":
        kw["closed_form"] = _c_vs_k(a_seq.C, k)
        kw["closed_form_reason"] = f"a_n = C/log n: transient iff C >= K/4 = {k.value / 4.0:.12g}"
    return _report("iid-drift", n, log_terms, **kw)


def poisson_terms(lam_seq, a_seq: SeqLike, n_max: int) -> SeriesReport:
    """Terms exp(-lambda_n (1/(4 a_n) - 1/2)) for n = 1..n_max."""
    n = np.arange(1, n_max + 1)
    lam = _lam_values(lam_seq, n)
    a = _a_values(a_seq, n)
    if np.any(~((a > 0) & (a < 0.5))):
        raise ValueError("a_n must lie in (0, 1/2)")
    log_terms = -lam * (1.0 / (4.0 * a) - 0.5)
    kw = {}
    if isinstance(lam_seq, LambdaSpec) and isinstance(a_seq, DriftSpec):
        from .model import FrogCountSpec
        cfg = ModelConfig(a_seq, FrogCountSpec.poisson_sequence(lam_seq), 0.75)
        cf = closed_form_verdict(cfg)
        if cf is not None:
            kw = {"closed_form": cf[0], "closed_form_reason": cf[1]}
    return _report("poisson-drift", n, log_terms, **kw)


def constant_poisson_exponent(p: float) -> float:
    """(1 - p)/(2p - 1): the rate in the constant-drift Poisson criterion."""
    return (1.0 - p) / (2.0 * p - 1.0)


# ---------------------------------------------------------------------------
# log-moment criterion and the subsequence sum


def gantert_schmidt_verdict(dist: DistributionSpec, tail_cutoff: int = 10_000) -> str:
    """Transient iff E[log+ X] is finite (i.i.d. counts, constant drift)."""
    lpm = pgf.log_plus_moment(dist, tail_cutoff)
    if lpm.status == "finite":
        return TRANSIENT
    if lpm.status == "diverges":
        return NON_TRANSIENT
    return INCONCLUSIVE


SUBSEQUENCE_NOTE = "a finite sum is sufficient for non-transience; divergence proves nothing"


def bmz_sum(cfg: ModelConfig, subsequence, k_max: int) -> SeriesReport:
    """Sum over k of  prod_{i=0}^{n_k} (1 - r_i**(n_{k+1} - i)),  k = 0..k_max.

    ``subsequence`` is a strictly increasing sequence of positive integers
    (at least ``k_max + 2`` entries) or a callable ``k -> n_k``.
    """
    if callable(subsequence):
        nk = [int(subsequence(k)) for k in range(k_max + 2)]
    else:
        nk = [int(x) for x in subsequence]
    if len(nk) < k_max + 2:
        raise ValueError(f"need n_0..n_{k_max + 1}, got {len(nk)} entries")
    nk = nk[: k_max + 2]
    if nk[0] < 1 or any(b <= a for a, b in zip(nk, nk[1:])):
        raise ValueError("subsequence must be strictly increasing positive integers")
    top = nk[-1]
    p = np.concatenate([[drift_at(cfg, 0)], np.asarray(cfg.drift.p_at(np.arange(1, top + 1)))])
    log_r = np.log((1.0 - p) / p)
    log_terms = np.empty(k_max + 1)
    for k in range(k_max + 1):
        i = np.arange(0, nk[k] + 1)
        log_terms[k] = np.sum(np.log1p(-np.exp((nk[k + 1] - i) * log_r[i])))
    rep = _report("bmz", np.arange(k_max + 1), log_terms, divergence_means=NON_TRANSIENT,
                  extra={"subsequence": nk})
    rep.note = f"{rep.note}; {SUBSEQUENCE_NOTE}"
    c = cfg.counts
    if not (c.kind == "iid" and c.dist.kind == "deterministic" and c.dist.k == 1):
        # the sum only sees drifts; the condition is stated for one frog per site
        rep.note += "; counts ignored, the condition assumes one frog per site"
    return rep
