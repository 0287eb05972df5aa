"""PCMCI lagged causal discovery and its TE-filtered variant (F-PCMCI).

PC1 selects a small conditioning set of lagged parents for every variable;
the MCI stage then tests each surviving link conditioning on the parents of
both endpoints. Passing a :class:`~fpcmci.te.FilterResult` restricts the
variables and the initial links to the filter's candidate model.
"""

from __future__ import annotations

import json
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .citest import parcorr_test
from .dataset import TimeSeriesDataset
from .te import FilterConfig, FilterResult, select_features

log = logging.getLogger(__name__)

Link = Tuple[str, int]


class PCMCIError(ValueError):
    """Raised for invalid discovery inputs or undersized datasets."""


@dataclass(frozen=True)
class DiscoveryConfig:
    tau_min: int = 1
    tau_max: int = 2
    alpha_pc: float = 0.05
    alpha: float = 0.05
    max_conds_dim: int = 3
    max_parents: Optional[int] = None
    seed: int = 0
    fdr: bool = False

    def __post_init__(self):
        if not 1 <= self.tau_min <= self.tau_max:
            raise ValueError(
                f"need 1 <= tau_min <= tau_max, got {self.tau_min}, {self.tau_max}")
        for name in ("alpha_pc", "alpha"):
            a = getattr(self, name)
            if not 0 < a < 1:
                raise ValueError(f"{name} must be in (0, 1), got {a}")
        if self.max_conds_dim < 0:
            raise ValueError("max_conds_dim must be >= 0")
        if self.max_parents is not None and self.max_parents < 0:
            raise ValueError("max_parents must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")


@dataclass(frozen=True)
class ParentSet:
    """PC1 parents of ``target`` as ``(source, lag, score)``, strongest first."""

    target: str
    parents: tuple = ()

    @property
    def links(self) -> List[Link]:
        return [(s, lag) for s, lag, _ in self.parents]


@dataclass(frozen=True, order=True)
class LaggedEdge:
    source: str
    target: str
    lag: int
    statistic: float
    p_value: float


@dataclass(frozen=True)
class LaggedGraph:
    variables: tuple
    edges: tuple
    config_echo: Optional[DiscoveryConfig] = None
    stats: dict = field(default_factory=dict, compare=False)

    def triples(self) -> set:
        return {(e.source, e.target, e.lag) for e in self.edges}

    def to_dict(self, include_duration: bool = True) -> dict:
        stats = {"ci_tests": int(self.stats.get("ci_tests", 0))}
        if include_duration:
            stats["duration_s"] = float(self.stats.get("duration_s", 0.0))
        return {
            "variables": list(self.variables),
            "edges": [asdict(e) for e in self.edges],
            "stats": stats,
        }

    def to_json(self, include_duration: bool = True) -> str:
        return json.dumps(self.to_dict(include_duration), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "LaggedGraph":
        edges = tuple(LaggedEdge(e["source"], e["target"], int(e["lag"]),
                                 float(e["statistic"]), float(e["p_value"]))
                      for e in d.get("edges", []))
        return cls(tuple(d.get("variables", [])), edges,
                   stats=dict(d.get("stats", {})))

    def to_dot(self) -> str:
        lines = ["digraph causal_model {"]
        for v in self.variables:
            lines.append(f"  {_dot_id(v)};")
        for e in self.edges:
            label = f"lag={e.lag} ({e.statistic:.2f})"
            lines.append(f"  {_dot_id(e.source)} -> {_dot_id(e.target)} "
                         f"[label={_dot_id(label)}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


class _LaggedData:
    """Lag-aligned view of a dataset.

    The first ``2 * tau_max`` rows are dropped once, so every test of a run
    (including MCI conditions shifted by the source lag) sees the same
    sample count.
    """

    def __init__(self, ds: TimeSeriesDataset, tau_max: int):
        self.ds = ds
        self.cut = 2 * tau_max
        self.n = ds.T - self.cut
        self.index = {name: i for i, name in enumerate(ds.names)}
        if self.n < 10:
            raise PCMCIError(
                f"dataset too short: T={ds.T}, need at least {self.cut + 10} "
                f"samples for tau_max={tau_max}")

    def series(self, name: str, lag: int) -> np.ndarray:
        T = self.ds.T
        return self.ds.values[self.cut - lag:T - lag, self.index[name]]

    def test(self, x: Link, y: str, Z: List[Link]):
        dof = self.n - len(Z) - 2
        if dof < 1:
            raise PCMCIError(
                f"{len(Z)} conditions need T >= {self.cut + len(Z) + 3}, "
                f"got T={self.ds.T}")
        Zm = (np.column_stack([self.series(s, lag) for s, lag in Z])
              if Z else None)
        return parcorr_test(self.series(*x), self.series(y, 0), Zm)


def _strength_order(val_min, index):
    return sorted(val_min, key=lambda p: (-val_min[p], index[p[0]], p[1]))


def _pc1(data: _LaggedData, target: str, candidates, cfg: DiscoveryConfig):
    index = data.index
    parents = sorted(set(candidates), key=lambda p: (index[p[0]], p[1]))
    val_min: Dict[Link, float] = {}
    n_tests = 0
    for q in range(cfg.max_conds_dim + 1):
        if len(parents) - 1 < q:
            break
        nonsig = []
        for p in parents:
            Z = [c for c in parents if c != p][:q]
            res = data.test(p, target, Z)
            n_tests += 1
            val_min[p] = min(abs(res.statistic), val_min.get(p, np.inf))
            if res.p_value > cfg.alpha_pc:
                nonsig.append(p)
        for p in nonsig:
            del val_min[p]
        parents = _strength_order(val_min, index)
    ps = ParentSet(target, tuple((s, lag, float(val_min[(s, lag)]))
                                 for s, lag in parents))
    return ps, n_tests


def pc1_parents(ds: TimeSeriesDataset, target: str, candidates,
                cfg: DiscoveryConfig) -> ParentSet:
    """PC1 condition selection for one target.

    ``candidates`` is an iterable of ``(source, lag)``. At iteration ``q``
    every remaining parent is tested conditioning on the ``q`` strongest
    other parents; non-significant ones (``p > alpha_pc``) are dropped after
    the full pass. The score of a parent is its minimum absolute statistic.
    """
    data = _LaggedData(ds, cfg.tau_max)
    return _pc1(data, target, _checked(data, candidates, cfg), cfg)[0]


def _checked(data, candidates, cfg):
    out = []
    for s, lag in candidates:
        if s not in data.index:
            raise PCMCIError(f"unknown variable {s!r} in candidates")
        if not cfg.tau_min <= lag <= cfg.tau_max:
            raise PCMCIError(
                f"candidate lag {lag} outside [{cfg.tau_min}, {cfg.tau_max}]")
        out.append((s, int(lag)))
    return out


def _mci_conditions(x: Link, parents_y: List[Link], parents_x: List[Link]):
    src, tau = x
    Z = [p for p in parents_y if p != x]
    for w, lag in parents_x:
        shifted = (w, lag + tau)
        if shifted not in Z:
            Z.append(shifted)
    return Z


def _mci_target(data, target, parent_sets):
    parents_y = parent_sets[target].links
    results = []
    for x in parents_y:
        Z = _mci_conditions(x, parents_y, parent_sets[x[0]].links)
        results.append((x, data.test(x, target, Z)))
    return results


def _bh_adjust(p):
    p = np.asarray(p, dtype=float)
    m = len(p)
    if m == 0:
        return p
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    ranked = np.minimum.accumulate(ranked[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(ranked, 1.0)
    return out


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _mci(data, parent_sets, cfg, workers):
    names = list(data.ds.names)
    per_target = _map(lambda t: _mci_target(data, t, parent_sets), names, workers)
    tested = [(x, t, res) for t, rows in zip(names, per_target) for x, res in rows]
    pvals = [res.p_value for _, _, res in tested]
    if cfg.fdr:
        pvals = list(_bh_adjust(pvals))
    edges = [LaggedEdge(x[0], t, x[1], res.statistic, float(p))
             for (x, t, res), p in zip(tested, pvals) if p <= cfg.alpha]
    idx = data.index
    edges.sort(key=lambda e: (idx[e.target], idx[e.source], e.lag))
    return tuple(edges), len(tested)


def mci_links(ds: TimeSeriesDataset, parent_sets: Dict[str, ParentSet],
              cfg: DiscoveryConfig, workers: int = 1) -> LaggedGraph:
    """MCI test of every link found in ``parent_sets``.

    The link X(t-tau) -> Y(t) is tested conditioning on the other parents
    of Y and on the parents of X shifted back by ``tau``.
    """
    data = _LaggedData(ds, cfg.tau_max)
    full = {n: parent_sets.get(n, ParentSet(n)) for n in ds.names}
    edges, n_tests = _mci(data, full, cfg, workers)
    return LaggedGraph(ds.names, edges, cfg, stats={"ci_tests": n_tests})


def run_pcmci(ds: TimeSeriesDataset, cfg: DiscoveryConfig,
              candidates: Optional[FilterResult] = None,
              workers: int = 1) -> LaggedGraph:
    """PCMCI over all lagged links, or over a filter's candidate model.

    Returns the graph with ``stats = {"ci_tests", "duration_s"}``.
    """
    t0 = time.perf_counter()
    if candidates is not None:
        unknown = [n for n in (*candidates.selected, *candidates.rejected)
                   if n not in ds.names]
        unknown += [f"{c.source}->{c.target}" for c in candidates.candidates
                    if c.source not in candidates.selected
                    or c.target not in candidates.selected]
        if unknown:
            raise PCMCIError(f"filter result references unknown variables: {unknown}")
        ds = ds.subset(candidates.selected) if candidates.selected else None
        if ds is None:
            return LaggedGraph((), (), cfg, stats={"ci_tests": 0, "duration_s": 0.0})
        lags = range(cfg.tau_min, cfg.tau_max + 1)
        initial = {}
        for t in ds.names:
            links = [(c.source, c.lag) for c in candidates.candidates_into(t)]
            links += [(t, lag) for lag in lags if (t, lag) not in links]
            initial[t] = links
    else:
        lags = range(cfg.tau_min, cfg.tau_max + 1)
        initial = {t: [(s, lag) for s in ds.names for lag in lags]
                   for t in ds.names}

    data = _LaggedData(ds, cfg.tau_max)
    checked = {t: _checked(data, initial[t], cfg) for t in ds.names}
    pc = _map(lambda t: _pc1(data, t, checked[t], cfg), list(ds.names), workers)
    parent_sets = {}
    n_tests = 0
    for ps, n in pc:
        if cfg.max_parents is not None:
            ps = ParentSet(ps.target, ps.parents[:cfg.max_parents])
        parent_sets[ps.target] = ps
        n_tests += n
    edges, n_mci = _mci(data, parent_sets, cfg, workers)
    n_tests += n_mci
    stats = {"ci_tests": n_tests, "pc1_tests": n_tests - n_mci, "mci_tests": n_mci,
             "duration_s": time.perf_counter() - t0}
    log.debug("pcmci: %d variables, %d edges, %d CI tests",
              ds.N, len(edges), n_tests)
    return LaggedGraph(ds.names, edges, cfg, stats=stats)


def run_fpcmci(ds: TimeSeriesDataset, fcfg: FilterConfig, dcfg: DiscoveryConfig,
               workers: int = 1):
    """TE filter followed by PCMCI restricted to the filter's candidates.

    Returns ``(filter_result, graph)``; ``graph.stats`` carries the CI-test
    count and duration of each stage plus the total.
    """
    if (fcfg.tau_min, fcfg.tau_max) != (dcfg.tau_min, dcfg.tau_max):
        raise PCMCIError("filter and discovery must share tau_min/tau_max")
    t0 = time.perf_counter()
    fres = select_features(ds, fcfg, workers=workers)
    t_filter = time.perf_counter() - t0
    fres.stats["duration_s"] = t_filter
    if not fres.selected:
        warnings.warn("TE filter rejected every variable; causal graph is empty",
                      RuntimeWarning, stacklevel=2)
    graph = run_pcmci(ds, dcfg, candidates=fres, workers=workers)
    stats = dict(graph.stats)
    stats.update({
        "filter_duration_s": t_filter,
        "filter_te_tests": fres.stats["te_tests"],
        "pcmci_duration_s": graph.stats["duration_s"],
        "duration_s": time.perf_counter() - t0,
    })
    return fres, LaggedGraph(graph.variables, graph.edges, dcfg, stats=stats)
