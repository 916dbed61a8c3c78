"""Count distributions and their probability generating functions.

Every distribution is declared structurally (no opaque callables), so the
mean, the minimal support point and near-one behaviour of the PGF are all
available in closed form.

Supported kinds
---------------
``deterministic``   point mass at ``k >= 1``
``poisson``         Poisson with mean ``lam > 0``
``geometric``       ``P(X = k) = q (1 - q)**k`` on ``{0, 1, 2, ...}``
``table``           finite table of values and probabilities
``dyadic_zeta``     ``X = 2**M`` with ``P(M = m)`` proportional to
                    ``(m + 1)**-(1 + alpha)``; heavy tailed, infinite mean,
                    and ``E[log+ X]`` finite iff ``alpha > 1``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln, logsumexp, zeta

from .errors import ConfigError

ArrayLike = Union[float, np.ndarray]

KINDS = ("deterministic", "poisson", "geometric", "table", "dyadic_zeta")

# Largest exponent drawn for dyadic_zeta samples; 2**62 still fits in int64.
_DYADIC_MAX_EXP = 62


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    k: int = 0
    lam: float = 0.0
    q: float = 0.0
    values: tuple = ()
    probs: tuple = ()
    alpha: float = 0.0

    def __post_init__(self):
        _check_dist(self)

    @classmethod
    def deterministic(cls, k: int) -> "DistributionSpec":
        return cls("deterministic", k=int(k))

    @classmethod
    def poisson(cls, lam: float) -> "DistributionSpec":
        return cls("poisson", lam=float(lam))

    @classmethod
    def geometric(cls, q: float) -> "DistributionSpec":
        return cls("geometric", q=float(q))

    @classmethod
    def table(cls, values, probs) -> "DistributionSpec":
        return cls("table", values=tuple(int(v) for v in values),
                   probs=tuple(float(p) for p in probs))

    @classmethod
    def dyadic_zeta(cls, alpha: float) -> "DistributionSpec":
        return cls("dyadic_zeta", alpha=float(alpha))

    def to_dict(self) -> dict:
        if self.kind == "deterministic":
            return {"kind": "deterministic", "k": self.k}
        if self.kind == "poisson":
            return {"kind": "poisson", "lambda": self.lam}
        if self.kind == "geometric":
            return {"kind": "geometric", "q": self.q}
        if self.kind == "table":
            return {"kind": "table", "values": list(self.values), "probs": list(self.probs)}
        return {"kind": "dyadic_zeta", "alpha": self.alpha}

    @classmethod
    def from_dict(cls, doc: dict, where: str = "dist") -> "DistributionSpec":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigError(f"{where}: expected an object with a 'kind' field")
        kind = doc["kind"]
        fields = {
            "deterministic": {"k"},
            "poisson": {"lambda"},
            "geometric": {"q"},
            "table": {"values", "probs"},
            "dyadic_zeta": {"alpha"},
        }
        if kind not in fields:
            raise ConfigError(f"{where}.kind: unknown distribution kind {kind!r}")
        _exact_keys(doc, fields[kind] | {"kind"}, where)
        try:
            if kind == "deterministic":
                k = doc["k"]
                if isinstance(k, bool) or not isinstance(k, int):
                    raise ConfigError(f"{where}.k: expected an integer")
                return cls.deterministic(k)
            if kind == "poisson":
                return cls.poisson(_number(doc["lambda"], f"{where}.lambda"))
            if kind == "geometric":
                return cls.geometric(_number(doc["q"], f"{where}.q"))
            if kind == "table":
                return cls.table(doc["values"], doc["probs"])
            return cls.dyadic_zeta(_number(doc["alpha"], f"{where}.alpha"))
        except ConfigError as exc:
            if str(exc).startswith(where):
                raise
            raise ConfigError(f"{where}: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _exact_keys(doc, allowed, where):
    missing = allowed - set(doc)
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")


def _check_dist(d: DistributionSpec) -> None:
    if d.kind not in KINDS:
        raise ConfigError(f"unknown distribution kind {d.kind!r}")
    if d.kind == "deterministic" and d.k < 1:
        raise ConfigError("deterministic count must be >= 1")
    if d.kind == "poisson" and not (math.isfinite(d.lam) and d.lam > 0):
        raise ConfigError("poisson mean must be positive and finite")
    if d.kind == "geometric" and not 0 < d.q < 1:
        raise ConfigError("geometric success probability must lie in (0, 1)")
    if d.kind == "dyadic_zeta" and not (math.isfinite(d.alpha) and d.alpha > 0):
        raise ConfigError("dyadic_zeta alpha must be positive")
    if d.kind == "table":
        if len(d.values) == 0 or len(d.values) != len(d.probs):
            raise ConfigError("table needs equally many values and probabilities")
        if len(set(d.values)) != len(d.values):
            raise ConfigError("table values must be distinct")
        if any(v < 0 for v in d.values):
            raise ConfigError("table values must be nonnegative integers")
        if any(not (p >= 0) for p in d.probs):
            raise ConfigError("table probabilities must be nonnegative")
        if abs(math.fsum(d.probs) - 1.0) > 1e-12:
            raise ConfigError("table probabilities must sum to 1")


def _check_unit(x, name):
    a = np.asarray(x, dtype=float)
    if np.any(~((a >= 0.0) & (a <= 1.0))):
        raise ValueError(f"{name} must lie in [0, 1]")
    return a


def _table_arrays(d):
    v = np.asarray(d.values, dtype=float)
    p = np.asarray(d.probs, dtype=float)
    keep = p > 0
    return v[keep], p[keep]


def _dyadic_weights(alpha, m_max):
    s = 1.0 + alpha
    m = np.arange(m_max + 1, dtype=float)
    return m, (m + 1.0) ** -s / zeta(s)


def _dyadic_tail(alpha, m_first):
    """P(M >= m_first)."""
    s = 1.0 + alpha
    return zeta(s, m_first + 1.0) / zeta(s)


def _scalar_or_array(out, like):
    return float(out) if np.ndim(like) == 0 else out


def pgf_eval(dist: DistributionSpec, s: ArrayLike) -> ArrayLike:
    """E[s**X] for s in [0, 1]; exactly 1 at s = 1."""
    s_arr = _check_unit(s, "s")
    out = np.exp(_log_pgf(dist, s_arr))
    out = np.where(s_arr == 1.0, 1.0, out)
    return _scalar_or_array(out, s)


def log_pgf(dist: DistributionSpec, s: ArrayLike) -> ArrayLike:
    """log f(s), accurate for small s (no underflow when the minimal support is large)."""
    s_arr = _check_unit(s, "s")
    return _scalar_or_array(_log_pgf(dist, s_arr), s)


def _log_pgf(d, s):
    with np.errstate(divide="ignore", invalid="ignore"):
        if d.kind == "deterministic":
            return d.k * np.log(s)
        if d.kind == "poisson":
            return d.lam * (s - 1.0)
        if d.kind == "geometric":
            return math.log(d.q) - np.log1p(-(1.0 - d.q) * s)
        if d.kind == "table":
            v, p = _table_arrays(d)
            logs = np.log(s)[..., None]
            terms = np.where(v == 0, np.log(p), np.log(p) + v * logs)
            return logsumexp(terms, axis=-1)
        # log f(s) = log f(1 - eps) with eps = 1 - s
        return _log_pgf_one_minus(d, 1.0 - s)


def log_pgf_one_minus(dist: DistributionSpec, eps: ArrayLike) -> ArrayLike:
    """log f(1 - eps), keeping full relative precision for tiny eps.

    Each kind uses a closed form for ``1 - f(1 - eps)`` built from ``log1p``
    and ``expm1``, so nothing is lost to the rounding of ``1 - eps``.
    """
    e = _check_unit(eps, "eps")
    return _scalar_or_array(_log_pgf_one_minus(dist, e), eps)


def _log_pgf_one_minus(d, e):
    with np.errstate(divide="ignore", invalid="ignore"):
        if d.kind == "poisson":
            return -d.lam * e
        if d.kind == "deterministic":
            return d.k * np.log1p(-e)
        if d.kind == "geometric":
            return -np.log1p((1.0 - d.q) * e / d.q)
        if d.kind == "table":
            v, p = _table_arrays(d)
            pos = v > 0
            l1 = np.log1p(-e)[..., None]
            # 1 - f(1 - eps) = sum_i p_i (1 - (1 - eps)**v_i)
            comp = np.sum(p[pos] * -np.expm1(v[pos] * l1), axis=-1)
            # for eps >= 1/2, 1 - eps is exact and the direct log-sum avoids cancellation
            return np.where(e < 0.5, np.log1p(-comp), _log_pgf(d, 1.0 - e))
        return _dyadic_log_one_minus(d.alpha, e)


def _dyadic_log_one_minus(alpha, e):
    flat = np.atleast_1d(e).astype(float).ravel()
    out = np.empty_like(flat)
    for i, eps in enumerate(flat):
        if eps == 0.0:
            out[i] = 0.0
            continue
        if eps == 1.0:
            out[i] = -math.inf
            continue
        l1 = math.log1p(-eps)
        # beyond m_max every (1 - eps)**(2**m) is below 1e-300
        m_max = max(0, int(math.ceil(math.log2(700.0 / -l1))) + 1)
        m, w = _dyadic_weights(alpha, m_max)
        if eps >= 0.5:
            out[i] = float(logsumexp(np.log(w) + np.exp2(m) * l1))
            continue
        comp = math.fsum(w * -np.expm1(np.exp2(m) * l1)) + _dyadic_tail(alpha, m_max + 1)
        out[i] = math.log1p(-comp)
    return out.reshape(np.shape(e))


def mean(dist: DistributionSpec) -> float:
    """f'(1); infinite for dyadic_zeta."""
    if dist.kind == "deterministic":
        return float(dist.k)
    if dist.kind == "poisson":
        return dist.lam
    if dist.kind == "geometric":
        return (1.0 - dist.q) / dist.q
    if dist.kind == "table":
        return math.fsum(v * p for v, p in zip(dist.values, dist.probs))
    return math.inf


def second_factorial_moment(dist: DistributionSpec) -> float:
    """f''(1) = E[X (X - 1)]."""
    if dist.kind == "deterministic":
        return float(dist.k * (dist.k - 1))
    if dist.kind == "poisson":
        return dist.lam ** 2
    if dist.kind == "geometric":
        return 2.0 * ((1.0 - dist.q) / dist.q) ** 2
    if dist.kind == "table":
        return math.fsum(v * (v - 1) * p for v, p in zip(dist.values, dist.probs))
    return math.inf


def min_support(dist: DistributionSpec) -> int:
    if dist.kind == "deterministic":
        return dist.k
    if dist.kind in ("poisson", "geometric"):
        return 0
    if dist.kind == "table":
        return min(v for v, p in zip(dist.values, dist.probs) if p > 0)
    return 1


def prob_positive(dist: DistributionSpec) -> float:
    """P(X >= 1)."""
    return 1.0 - float(pgf_eval(dist, 0.0))


@dataclass(frozen=True)
class LogPlusMoment:
    """Outcome of E[log+ X]: ``status`` is finite, diverges or truncated."""

    status: str
    value: float = math.nan
    cutoff: int = 0


def log_plus_moment(dist: DistributionSpec, tail_cutoff: int = 10_000) -> LogPlusMoment:
    if tail_cutoff < 10:
        raise ValueError("tail_cutoff must be at least 10")
    if dist.kind == "deterministic":
        return LogPlusMoment("finite", math.log(dist.k))
    if dist.kind == "table":
        return LogPlusMoment("finite", math.fsum(
            p * math.log(v) for v, p in zip(dist.values, dist.probs) if v > 1))
    if dist.kind == "dyadic_zeta":
        # E[M] = zeta(alpha) / zeta(1 + alpha) - 1, finite iff alpha > 1
        if dist.alpha <= 1.0:
            return LogPlusMoment("diverges", math.inf)
        em = zeta(dist.alpha) / zeta(1.0 + dist.alpha) - 1.0
        return LogPlusMoment("finite", math.log(2.0) * float(em))
    if dist.kind == "poisson":
        lam = dist.lam
        top = int(lam + 40.0 * math.sqrt(lam) + 60)
        k = np.arange(2, top + 1, dtype=float)
        logpmf = k * math.log(lam) - lam - gammaln(k + 1.0)
        return LogPlusMoment("finite", math.fsum(np.log(k) * np.exp(logpmf)))
    # geometric: sum until q (1 - q)**k log k is far below double precision
    q = dist.q
    top = int(math.ceil(80.0 / -math.log1p(-q))) + 10
    k = np.arange(2, top + 1, dtype=float)
    pmf = q * np.exp(k * math.log1p(-q))
    return LogPlusMoment("finite", math.fsum(np.log(k) * pmf))


def sample_counts(dist: DistributionSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws as an int64 array."""
    if dist.kind == "deterministic":
        return np.full(size, dist.k, dtype=np.int64)
    if dist.kind == "poisson":
        return rng.poisson(dist.lam, size).astype(np.int64)
    if dist.kind == "geometric":
        # numpy's geometric counts trials (support 1, 2, ...)
        return rng.geometric(dist.q, size).astype(np.int64) - 1
    if dist.kind == "table":
        values = np.asarray(dist.values, dtype=np.int64)
        return values[rng.choice(len(values), size=size, p=np.asarray(dist.probs))]
    m = rng.zipf(1.0 + dist.alpha, size) - 1
    return np.left_shift(np.int64(1), np.minimum(m, _DYADIC_MAX_EXP).astype(np.int64))


def sample_count(dist: DistributionSpec, rng: np.random.Generator) -> int:
    return int(sample_counts(dist, 1, rng)[0])
