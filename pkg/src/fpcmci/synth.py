"""Random linear structural causal models, simulation and graph scoring."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .dataset import TimeSeriesDataset

BURN_IN = 200
MAX_RADIUS = 0.95


@dataclass(frozen=True)
class Term:
    source: int
    lag: int
    coefficient: float
    function: str = "linear"


@dataclass(frozen=True)
class SCMSpec:
    """Linear VAR ground truth; ``terms[j]`` lists the parents of variable j."""

    n_vars: int
    terms: tuple
    noise_std: tuple
    names: tuple = ()

    def __post_init__(self):
        if self.n_vars < 1:
            raise ValueError("n_vars must be >= 1")
        if not self.names:
            object.__setattr__(self, "names",
                               tuple(f"X{i}" for i in range(self.n_vars)))
        object.__setattr__(self, "terms",
                           tuple(tuple(Term(**t) if isinstance(t, dict) else t
                                       for t in ts) for ts in self.terms))
        object.__setattr__(self, "noise_std", tuple(float(s) for s in self.noise_std))
        if len(self.terms) != self.n_vars or len(self.noise_std) != self.n_vars:
            raise ValueError("terms and noise_std need one entry per variable")
        for ts in self.terms:
            for t in ts:
                if t.lag < 1 or t.coefficient == 0 or t.function != "linear":
                    raise ValueError(f"invalid term {t}")
        if any(s <= 0 for s in self.noise_std):
            raise ValueError("noise_std must be positive")

    @property
    def tau_max(self) -> int:
        return max((t.lag for ts in self.terms for t in ts), default=1)

    def coefficient_matrices(self) -> np.ndarray:
        """``A[l-1, j, i]``: effect of variable i at lag l on variable j."""
        A = np.zeros((self.tau_max, self.n_vars, self.n_vars))
        for j, ts in enumerate(self.terms):
            for t in ts:
                A[t.lag - 1, j, t.source] += t.coefficient
        return A

    def ground_truth(self) -> set:
        return {(self.names[t.source], self.names[j], t.lag)
                for j, ts in enumerate(self.terms) for t in ts}

    def to_dict(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "names": list(self.names),
            "noise_std": list(self.noise_std),
            "terms": [[asdict(t) for t in ts] for ts in self.terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SCMSpec":
        return cls(d["n_vars"], tuple(tuple(Term(**t) for t in ts) for ts in d["terms"]),
                   tuple(d["noise_std"]), tuple(d.get("names", ())))


def companion(A: np.ndarray) -> np.ndarray:
    p, n, _ = A.shape
    C = np.zeros((n * p, n * p))
    C[:n, :] = np.concatenate(list(A), axis=1)
    C[n:, :-n] = np.eye(n * (p - 1))
    return C


def spectral_radius(spec: SCMSpec) -> float:
    return float(np.abs(np.linalg.eigvals(companion(spec.coefficient_matrices()))).max())


def random_scm(n_vars: int, density: float, tau_max: int, seed: int) -> SCMSpec:
    """Random stationary linear SCM.

    Each ordered pair gets a cross-link with probability ``density`` at a
    uniform lag in [1, tau_max] with coefficient magnitude in [0.3, 0.8] and
    random sign; each variable has a lag-1 autodependency in [0.3, 0.6]. All
    coefficients are shrunk by a common factor until the companion spectral
    radius falls below 0.95.
    """
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    if tau_max < 1:
        raise ValueError("tau_max must be >= 1")
    rng = np.random.default_rng(seed)
    raw = []
    for j in range(n_vars):
        ts = [(j, 1, rng.uniform(0.3, 0.6))]
        for i in range(n_vars):
            if i == j:
                continue
            if rng.random() < density:
                lag = int(rng.integers(1, tau_max + 1))
                coef = rng.uniform(0.3, 0.8) * rng.choice([-1.0, 1.0])
                ts.append((i, lag, coef))
        raw.append(ts)

    scale = 1.0
    while True:
        spec = SCMSpec(n_vars,
                       tuple(tuple(Term(i, lag, c * scale) for i, lag, c in ts)
                             for ts in raw),
                       (1.0,) * n_vars)
        if spectral_radius(spec) < MAX_RADIUS:
            return spec
        scale *= 0.95


def simulate(spec: SCMSpec, T: int, seed: int):
    """Simulate ``T`` samples after a 200-step burn-in.

    Returns ``(dataset, ground_truth)`` with ground truth as a set of
    ``(source, target, lag)`` name triples.
    """
    if T < 100:
        raise ValueError(f"T must be >= 100, got {T}")
    rng = np.random.default_rng(seed)
    A = spec.coefficient_matrices()
    p, n = A.shape[0], spec.n_vars
    total = T + BURN_IN
    noise = rng.standard_normal((total, n)) * np.asarray(spec.noise_std)
    X = np.zeros((total + p, n))
    with np.errstate(over="raise", invalid="raise"):
        try:
            for t in range(p, total + p):
                acc = noise[t - p].copy()
                for lag in range(1, p + 1):
                    acc += A[lag - 1] @ X[t - lag]
                X[t] = acc
        except FloatingPointError:
            raise OverflowError("simulation diverged; SCM is not stationary") from None
    out = X[p + BURN_IN:]
    if not np.all(np.isfinite(out)) or np.abs(out).max() > 1e12:
        raise OverflowError("simulation diverged; SCM is not stationary")
    return TimeSeriesDataset(spec.names, out), spec.ground_truth()


def add_distractors(ds: TimeSeriesDataset, k: int, seed: int, prefix: str = "D"):
    """Append ``k`` independent standard Gaussian white-noise columns."""
    if k == 0:
        return ds
    rng = np.random.default_rng([seed, 0xD15])
    noise = rng.standard_normal((ds.T, k))
    names = ds.names + tuple(f"{prefix}{i}" for i in range(k))
    return TimeSeriesDataset(names, np.hstack([ds.values, noise]), ds.dt)


def truth_to_json(truth: Iterable, variables: Optional[Iterable[str]] = None) -> str:
    d = {"edges": [{"source": s, "target": t, "lag": lag}
                   for s, t, lag in sorted(truth)]}
    if variables is not None:
        d = {"variables": list(variables), **d}
    return json.dumps(d, indent=2) + "\n"


def truth_from_dict(d: dict) -> set:
    return {(e["source"], e["target"], int(e["lag"])) for e in d["edges"]}


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    shd: int
    tp: int = 0
    fp: int = 0
    fn: int = 0
    ci_tests: int = 0
    duration_s: float = 0.0

    FIELDS = ("precision", "recall", "f1", "shd", "tp", "fp", "fn",
              "ci_tests", "duration_s")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv_row(self, header: bool = False) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        if header:
            w.writerow(self.FIELDS)
        w.writerow([getattr(self, k) for k in self.FIELDS])
        return out.getvalue()


def score_triples(predicted: set, truth: set, ci_tests: int = 0,
                  duration_s: float = 0.0) -> Metrics:
    predicted, truth = set(predicted), set(truth)
    tp = len(predicted & truth)
    fp = len(predicted - truth)
    fn = len(truth - predicted)
    precision = tp / (tp + fp) if predicted else (1.0 if not truth else 0.0)
    recall = tp / (tp + fn) if truth else (1.0 if not predicted else 0.0)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(precision, recall, f1, fp + fn, tp, fp, fn, int(ci_tests),
                   float(duration_s))


def evaluate_graph(predicted, truth: set) -> Metrics:
    """Exact (source, target, lag) matching of a LaggedGraph against truth."""
    return score_triples(predicted.triples(), truth,
                         predicted.stats.get("ci_tests", 0),
                         predicted.stats.get("duration_s", 0.0))
