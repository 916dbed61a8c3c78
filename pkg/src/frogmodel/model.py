"""Frog model instances: drift sequences, frog-count sequences, validation.

Sites are indexed from 0.  The origin frog uses ``p0``; every frog that
starts at site ``j >= 1`` steps left with probability ``p_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import pgf
from .errors import ConfigError
from .pgf import DistributionSpec, _exact_keys, _number

P_MIN = 0.5 + 1e-12
P_MAX = 1.0 - 1e-9

# Hypothesis labels used in validation reports.
GENERAL = "general"          # the model itself (independent counts, decreasing drifts)
IID_DRIFT = "iid-drift"      # i.i.d. counts, finite mean, p_j = 1/2 + a_j with 1/a_j concave
POISSON_DRIFT = "poisson-drift"  # Poisson(lambda_j) counts, lambda_j and 1/a_j concave

ArrayLike = Union[int, np.ndarray]


def auto_n0(C: float) -> int:
    """Smallest n0 >= 2 with 1/2 + C/log(n0) <= 0.95."""
    return max(2, int(math.floor(math.exp(C / 0.45))) + 1)


@dataclass(frozen=True)
class DriftSpec:
    """Leftward step probabilities p_j for j >= 1.

    kinds: ``constant`` (p), ``c_over_log`` (C, n0), ``half_plus_a``
    (table of a_j, extended past the table by ``extend``), ``table``
    (explicit p_j; the last value is held).
    """

    kind: str
    p: float = 0.0
    C: float = 0.0
    n0: int = 2
    table: tuple = ()
    extend: str = "hold"

    def __post_init__(self):
        if self.kind not in ("constant", "c_over_log", "half_plus_a", "table"):
            raise ConfigError(f"unknown drift kind {self.kind!r}")
        if self.kind == "c_over_log":
            if not (self.C > 0 and math.isfinite(self.C)):
                raise ConfigError("c_over_log needs C > 0")
            if self.n0 < 2:
                raise ConfigError("c_over_log needs n0 >= 2 (log 1 = 0)")
        if self.kind in ("half_plus_a", "table"):
            if len(self.table) == 0:
                raise ConfigError(f"{self.kind} drift needs a non-empty table")
            if self.extend not in ("hold", "linear_inverse"):
                raise ConfigError(f"unknown extension rule {self.extend!r}")
            if self.kind == "table" and self.extend != "hold":
                raise ConfigError("explicit drift tables only support extend='hold'")

    @classmethod
    def constant(cls, p: float) -> "DriftSpec":
        return cls("constant", p=float(p))

    @classmethod
    def c_over_log(cls, C: float, n0: Optional[int] = None) -> "DriftSpec":
        return cls("c_over_log", C=float(C), n0=auto_n0(C) if n0 is None else int(n0))

    @classmethod
    def half_plus_a(cls, a, extend: str = "hold") -> "DriftSpec":
        return cls("half_plus_a", table=tuple(float(x) for x in a), extend=extend)

    @classmethod
    def from_table(cls, p) -> "DriftSpec":
        return cls("table", table=tuple(float(x) for x in p))

    def a(self, j: ArrayLike) -> np.ndarray:
        """a_j = p_j - 1/2 for j >= 1 (vectorized)."""
        jj = np.asarray(j)
        if self.kind == "constant":
            return np.full(jj.shape, self.p - 0.5)
        if self.kind == "c_over_log":
            return self.C / np.log(np.maximum(jj, self.n0).astype(float))
        if self.kind == "table":
            t = np.asarray(self.table)
            return t[np.minimum(jj, len(t)) - 1] - 0.5
        t = np.asarray(self.table)
        n = len(t)
        inside = t[np.minimum(jj, n) - 1]
        if self.extend == "hold" or n < 2:
            return inside
        g_last, slope = 1.0 / t[-1], 1.0 / t[-1] - 1.0 / t[-2]
        beyond = 1.0 / (g_last + slope * (jj - n))
        return np.where(jj <= n, inside, beyond)

    def p_at(self, j: ArrayLike) -> np.ndarray:
        return 0.5 + self.a(j)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "p": self.p}
        if self.kind == "c_over_log":
            return {"kind": "c_over_log", "C": self.C, "n0": self.n0}
        if self.kind == "table":
            return {"kind": "table", "p": list(self.table)}
        return {"kind": "half_plus_a", "a": list(self.table), "extend": self.extend}

    @classmethod
    def from_dict(cls, doc, where="drift") -> "DriftSpec":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigError(f"{where}: expected an object with a 'kind' field")
        kind = doc["kind"]
        if kind == "constant":
            _exact_keys(doc, {"kind", "p"}, where)
            return cls.constant(_number(doc["p"], f"{where}.p"))
        if kind == "c_over_log":
            allowed = {"kind", "C", "n0"}
            _exact_keys(doc, allowed - ({"n0"} - set(doc)), where)
            n0 = doc.get("n0")
            if n0 is not None and (isinstance(n0, bool) or not isinstance(n0, int)):
                raise ConfigError(f"{where}.n0: expected an integer")
            return cls.c_over_log(_number(doc["C"], f"{where}.C"), n0)
        if kind == "table":
            _exact_keys(doc, {"kind", "p"}, where)
            return cls.from_table([_number(x, f"{where}.p") for x in _list(doc["p"], f"{where}.p")])
        if kind == "half_plus_a":
            _exact_keys(doc, {"kind", "a", "extend"} - ({"extend"} - set(doc)), where)
            a = [_number(x, f"{where}.a") for x in _list(doc["a"], f"{where}.a")]
            return cls.half_plus_a(a, doc.get("extend", "hold"))
        raise ConfigError(f"{where}.kind: unknown drift kind {kind!r}")


def _list(x, where):
    if not isinstance(x, list):
        raise ConfigError(f"{where}: expected a list")
    return x


@dataclass(frozen=True)
class LambdaSpec:
    """Poisson means lambda_j, j >= 1: ``constant``, ``linear`` (alpha*j + beta) or ``table``."""

    kind: str
    value: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "table"):
            raise ConfigError(f"unknown lambda kind {self.kind!r}")
        if self.kind == "table" and len(self.table) == 0:
            raise ConfigError("lambda table must be non-empty")

    def at(self, j: ArrayLike) -> np.ndarray:
        jj = np.asarray(j)
        if self.kind == "constant":
            return np.full(jj.shape, self.value, dtype=float)
        if self.kind == "linear":
            return self.alpha * jj + self.beta
        t = np.asarray(self.table)
        return t[np.minimum(jj, len(t)) - 1]

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "linear":
            return {"kind": "linear", "alpha": self.alpha, "beta": self.beta}
        return {"kind": "table", "values": list(self.table)}

    @classmethod
    def from_dict(cls, doc, where="lambda") -> "LambdaSpec":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigError(f"{where}: expected an object with a 'kind' field")
        kind = doc["kind"]
        if kind == "constant":
            _exact_keys(doc, {"kind", "value"}, where)
            return cls("constant", value=_number(doc["value"], f"{where}.value"))
        if kind == "linear":
            _exact_keys(doc, {"kind", "alpha", "beta"}, where)
            return cls("linear", alpha=_number(doc["alpha"], f"{where}.alpha"),
                       beta=_number(doc["beta"], f"{where}.beta"))
        if kind == "table":
            _exact_keys(doc, {"kind", "values"}, where)
            vals = [_number(x, f"{where}.values") for x in _list(doc["values"], f"{where}.values")]
            return cls("table", table=tuple(vals))
        raise ConfigError(f"{where}.kind: unknown lambda kind {kind!r}")


@dataclass(frozen=True)
class FrogCountSpec:
    """Independent frog counts X_j, j >= 1.

    kinds: ``iid`` (one DistributionSpec), ``deterministic_sequence``
    (k_j table, last value held), ``poisson_sequence`` (LambdaSpec).
    """

    kind: str
    dist: Optional[DistributionSpec] = None
    k: tuple = ()
    lam: Optional[LambdaSpec] = None

    def __post_init__(self):
        if self.kind == "iid" and self.dist is None:
            raise ConfigError("iid counts need a distribution")
        if self.kind == "deterministic_sequence":
            if len(self.k) == 0 or any(int(x) != x or x < 0 for x in self.k):
                raise ConfigError("deterministic_sequence needs nonnegative integer counts")
        if self.kind == "poisson_sequence" and self.lam is None:
            raise ConfigError("poisson_sequence needs a lambda specification")
        if self.kind not in ("iid", "deterministic_sequence", "poisson_sequence"):
            raise ConfigError(f"unknown count kind {self.kind!r}")

    @classmethod
    def iid(cls, dist: DistributionSpec) -> "FrogCountSpec":
        return cls("iid", dist=dist)

    @classmethod
    def deterministic_sequence(cls, k) -> "FrogCountSpec":
        return cls("deterministic_sequence", k=tuple(int(x) for x in k))

    @classmethod
    def poisson_sequence(cls, lam: LambdaSpec) -> "FrogCountSpec":
        return cls("poisson_sequence", lam=lam)

    def k_at(self, j):
        t = np.asarray(self.k, dtype=np.int64)
        return t[np.minimum(np.asarray(j), len(t)) - 1]

    def site_dist(self, j: int) -> DistributionSpec:
        if self.kind == "iid":
            return self.dist
        if self.kind == "deterministic_sequence":
            k = int(self.k_at(j))
            return DistributionSpec.deterministic(k) if k > 0 else DistributionSpec.table([0], [1.0])
        return DistributionSpec.poisson(float(self.lam.at(j)))

    def log_pgf_one_minus(self, j: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """log f_j(1 - eps) elementwise over paired site/eps arrays."""
        with np.errstate(divide="ignore"):
            if self.kind == "iid":
                return pgf.log_pgf_one_minus(self.dist, eps)
            if self.kind == "deterministic_sequence":
                return self.k_at(j) * np.log1p(-eps)
            return -self.lam.at(j) * eps

    def sample(self, j: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One draw of X_j per entry of the site array ``j``."""
        if self.kind == "iid":
            return pgf.sample_counts(self.dist, len(j), rng)
        if self.kind == "deterministic_sequence":
            return self.k_at(j).astype(np.int64)
        return rng.poisson(self.lam.at(j)).astype(np.int64)

    def to_dict(self) -> dict:
        if self.kind == "iid":
            return {"kind": "iid", "dist": self.dist.to_dict()}
        if self.kind == "deterministic_sequence":
            return {"kind": "deterministic_sequence", "k": list(self.k)}
        return {"kind": "poisson_sequence", "lambda": self.lam.to_dict()}

    @classmethod
    def from_dict(cls, doc, where="counts") -> "FrogCountSpec":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigError(f"{where}: expected an object with a 'kind' field")
        kind = doc["kind"]
        if kind == "iid":
            _exact_keys(doc, {"kind", "dist"}, where)
            return cls.iid(DistributionSpec.from_dict(doc["dist"], f"{where}.dist"))
        if kind == "deterministic_sequence":
            _exact_keys(doc, {"kind", "k"}, where)
            ks = _list(doc["k"], f"{where}.k")
            if any(isinstance(x, bool) or not isinstance(x, int) for x in ks):
                raise ConfigError(f"{where}.k: expected integers")
            return cls.deterministic_sequence(ks)
        if kind == "poisson_sequence":
            _exact_keys(doc, {"kind", "lambda"}, where)
            return cls.poisson_sequence(LambdaSpec.from_dict(doc["lambda"], f"{where}.lambda"))
        raise ConfigError(f"{where}.kind: unknown count kind {kind!r}")


@dataclass(frozen=True)
class ModelConfig:
    drift: DriftSpec
    counts: FrogCountSpec
    p0: float

    def to_dict(self) -> dict:
        return {"drift": self.drift.to_dict(), "counts": self.counts.to_dict(), "p0": self.p0}

    @classmethod
    def from_dict(cls, doc) -> "ModelConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a JSON object")
        _exact_keys(doc, {"drift", "counts", "p0"}, "config")
        return cls(DriftSpec.from_dict(doc["drift"]), FrogCountSpec.from_dict(doc["counts"]),
                   _number(doc["p0"], "p0"))


def drift_at(cfg: ModelConfig, j: int) -> float:
    if j < 0:
        raise ValueError("site index must be nonnegative")
    if j == 0:
        return cfg.p0
    return float(cfg.drift.p_at(j))


def ratio_at(cfg: ModelConfig, j: int) -> float:
    """(1 - p_j) / p_j, the per-step odds of a right move."""
    p = drift_at(cfg, j)
    return (1.0 - p) / p


def drifts(cfg: ModelConfig, n: int) -> np.ndarray:
    """p_1, ..., p_n."""
    return np.asarray(cfg.drift.p_at(np.arange(1, n + 1)), dtype=float)


def ratios(cfg: ModelConfig, n: int) -> np.ndarray:
    """r_1, ..., r_n."""
    p = drifts(cfg, n)
    return (1.0 - p) / p


@dataclass(frozen=True)
class Violation:
    code: str
    site: int
    hypotheses: tuple
    message: str


@dataclass
class ValidationReport:
    horizon: int
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def valid_for(self, hypothesis: str) -> bool:
        return not any(hypothesis in v.hypotheses for v in self.violations)

    def applicable(self, cfg: ModelConfig) -> list:
        """Criteria whose hypotheses hold (as far as ``validate_config`` can check them)."""
        out = [GENERAL] if self.valid_for(GENERAL) else []
        if cfg.drift.kind == "table" or not self.valid_for(GENERAL):
            return out
        if cfg.counts.kind == "iid" and self.valid_for(IID_DRIFT):
            out.append(IID_DRIFT)
        if cfg.counts.kind == "poisson_sequence" and self.valid_for(POISSON_DRIFT):
            out.append(POISSON_DRIFT)
        return out


def _concavity_breaks(g: np.ndarray, first_site: int):
    """Interior sites j where g(j+1) + g(j-1) > 2 g(j) beyond rounding."""
    second = g[2:] + g[:-2] - 2.0 * g[1:-1]
    slack = 1e-12 * np.maximum(np.abs(g[1:-1]), 1.0)
    return [first_site + 1 + int(i) for i in np.nonzero(second > slack)[0]]


def validate_config(cfg: ModelConfig, horizon: int) -> ValidationReport:
    """Check every structural hypothesis over sites j <= horizon.

    Violations are reported, never raised.  Each names the hypothesis sets
    it breaks: ``general`` for the model itself, ``iid-drift`` and
    ``poisson-drift`` for the sharper criteria.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    rep = ValidationReport(horizon)
    add = rep.violations.append
    a_kinds = (IID_DRIFT, POISSON_DRIFT)

    if not (P_MIN < cfg.p0 < P_MAX):
        add(Violation("p0_range", 0, (GENERAL,), f"p0={cfg.p0:.17g} outside (1/2, 1)"))

    j = np.arange(1, horizon + 1)
    p = drifts(cfg, horizon)
    for site in j[~((p > P_MIN) & (p < P_MAX))]:
        add(Violation("drift_range", int(site), (GENERAL,),
                      f"p_{site}={float(p[site - 1]):.17g} outside (1/2, 1)"))
    for i in np.nonzero(p[1:] > p[:-1])[0]:
        add(Violation("drift_not_decreasing", int(i + 2), (GENERAL,),
                      f"drifts not decreasing: p_{i + 2}={float(p[i + 1]):.17g} > p_{i + 1}={float(p[i]):.17g}"))

    d = cfg.drift
    if d.kind in ("half_plus_a", "c_over_log"):
        first = d.n0 if d.kind == "c_over_log" else 1
        if horizon >= first + 2:
            jj = np.arange(first, horizon + 1)
            with np.errstate(divide="ignore"):
                g = 1.0 / d.a(jj)
            for site in _concavity_breaks(g, first):
                add(Violation("inverse_a_not_concave", site, a_kinds,
                              f"1/a_j not concave at j={site}"))

    c = cfg.counts
    if c.kind == "iid":
        if pgf.prob_positive(c.dist) <= 0:
            add(Violation("counts_never_positive", 1, (GENERAL,), "P(X_j >= 1) = 0"))
        if not math.isfinite(pgf.mean(c.dist)):
            add(Violation("infinite_mean", 1, (IID_DRIFT,), "E[X_1] is infinite"))
    elif c.kind == "deterministic_sequence":
        k = c.k_at(j)
        for site in j[k < 1]:
            add(Violation("counts_never_positive", int(site), (GENERAL,), f"k_{site} = 0"))
        for i in np.nonzero(k[1:] < k[:-1])[0]:
            add(Violation("dominance", int(i + 2), (GENERAL,),
                          f"k_{i + 2} < k_{i + 1}: counts not stochastically increasing"))
    else:
        lam = c.lam.at(j)
        for site in j[~(lam > 0) | ~np.isfinite(lam)]:
            add(Violation("counts_never_positive", int(site), (GENERAL,),
                          f"lambda_{site} = {float(lam[site - 1]):.17g} is not positive"))
        for i in np.nonzero(lam[1:] < lam[:-1])[0]:
            add(Violation("dominance", int(i + 2), (GENERAL,),
                          f"lambda_{i + 2} < lambda_{i + 1}: counts not stochastically increasing"))
        for site in _concavity_breaks(lam, 1):
            add(Violation("lambda_not_concave", site, (POISSON_DRIFT,),
                          f"lambda_j not concave at j={site}"))
    return rep


def default_horizon(cfg: ModelConfig) -> int:
    longest = max(len(cfg.drift.table), len(cfg.counts.k),
                  len(cfg.counts.lam.table) if cfg.counts.lam is not None else 0)
    return max(64, longest + 3)
