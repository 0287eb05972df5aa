"""Transfer-entropy feature filter.

Scores every ordered variable pair over a lag range with a bivariate
transfer entropy, tests significance against circularly shifted source
surrogates and keeps the variables that take part in at least one
significant cross-link. The accepted links, together with the
autodependencies of every kept variable, form the candidate model that the
PCMCI stage starts from.
"""

from __future__ import annotations

import json
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .citest import CITestError, RHO_CAP, _basis
from .dataset import TimeSeriesDataset

ESTIMATORS = ("gaussian", "binned")
CORRECTIONS = ("maxstat", "none")


class TEError(ValueError):
    """Raised when a transfer entropy cannot be estimated."""


@dataclass(frozen=True)
class FilterConfig:
    """Filter settings.

    ``correction="maxstat"`` compares each observed TE with the maximum
    surrogate TE over all tested links (family-wise control);
    ``"none"`` uses the per-link surrogate p-value.
    """

    tau_min: int = 1
    tau_max: int = 2
    alpha_filter: float = 0.05
    estimator: str = "gaussian"
    n_surrogates: int = 100
    bins: int = 8
    seed: int = 0
    protected: tuple = ()
    history: int = 1
    correction: str = "maxstat"

    def __post_init__(self):
        object.__setattr__(self, "protected", tuple(self.protected))
        if not 1 <= self.tau_min <= self.tau_max:
            raise ValueError(
                f"need 1 <= tau_min <= tau_max, got {self.tau_min}, {self.tau_max}")
        if not 0 < self.alpha_filter < 1:
            raise ValueError(f"alpha_filter must be in (0, 1), got {self.alpha_filter}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.correction not in CORRECTIONS:
            raise ValueError(f"unknown correction {self.correction!r}")
        if self.n_surrogates < 19:
            raise ValueError(f"n_surrogates must be >= 19, got {self.n_surrogates}")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")
        if self.history < 1:
            raise ValueError("history must be >= 1")
        if self.estimator == "binned" and self.history != 1:
            raise ValueError("the binned estimator supports history=1 only")


@dataclass(frozen=True, order=True)
class CandidateLink:
    """Directed lagged link ``source(t - lag) -> target(t)``.

    Autodependencies (``source == target``) are added without testing and
    carry ``te = 0`` and ``p_value = 0``.
    """

    source: str
    target: str
    lag: int
    te: float = 0.0
    p_value: float = 0.0


@dataclass(frozen=True)
class FilterResult:
    selected: tuple
    rejected: tuple
    candidates: tuple
    stats: dict = field(default_factory=dict, compare=False)

    def candidates_into(self, target: str):
        return [c for c in self.candidates if c.target == target]

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "rejected": list(self.rejected),
            "candidates": [asdict(c) for c in self.candidates],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "FilterResult":
        return cls(tuple(d["selected"]), tuple(d["rejected"]),
                   tuple(CandidateLink(**c) for c in d["candidates"]))


# -- estimators ---------------------------------------------------------------

def _check_lengths(x, y, lag, k):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise TEError("x and y must be 1-D series of equal length")
    if lag < 1 or k < 1:
        raise TEError(f"lag and history must be >= 1, got lag={lag}, k={k}")
    if x.shape[0] <= lag + k + 5:
        raise TEError(
            f"insufficient samples: T={x.shape[0]} must exceed lag + k + 5 = "
            f"{lag + k + 5}")
    return x, y


class _SourceBank:
    """Spectra and prefix sums of candidate sources, shared by all targets."""

    def __init__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float).T).T
        self.X = X
        self.T = X.shape[0]
        self.fx = np.conj(np.fft.rfft(X, axis=0).T)
        zero = np.zeros((1, X.shape[1]))
        self.csum = np.vstack([zero, np.cumsum(np.vstack([X, X]), axis=0)]).T
        X2 = X * X
        self.csum2 = np.vstack([zero, np.cumsum(np.vstack([X2, X2]), axis=0)]).T


class _GaussianTarget:
    """Target side of a Gaussian TE: Y(t) residualized on its own history.

    Row ``t`` of the aligned sample pairs Y(t) with X(t - lag). A source
    shifted circularly by ``o`` contributes x[(t - lag - o) mod T], so the
    inner products of the target vectors with every shifted source are
    circular cross-correlations and come out of one FFT per source.
    """

    def __init__(self, y, lag, k):
        T = y.shape[0]
        self.T = T
        self.lag = lag
        self.start = max(lag, k)
        self.n = T - self.start
        hist = np.column_stack([y[self.start - i:T - i] for i in range(1, k + 1)])
        try:
            self.Q = _basis(hist)
        except CITestError:
            raise TEError("singular conditioning: target history is collinear") from None
        yt = y[self.start:]
        self.ry = yt - self.Q @ (self.Q.T @ yt)
        self.syy = float(self.ry @ self.ry)
        if self.syy <= 1e-20 * float(yt @ yt):
            raise TEError("singular conditioning: target fully explained by its history")
        a = self.start - lag
        # columns 1.. of Q are orthogonal to the constant; column 0 is the
        # constant itself and is covered by window sums
        A = np.zeros((self.Q.shape[1], T))
        A[0, a:a + self.n] = self.ry
        A[1:, a:a + self.n] = self.Q[:, 1:].T
        self.spectra = np.fft.rfft(A, axis=1)

    def _te(self, sxy, sxx):
        with np.errstate(divide="ignore", invalid="ignore"):
            r2 = np.where(sxx > 1e-12 * self.n, sxy * sxy / (self.syy * sxx), 0.0)
        return -0.5 * np.log1p(-np.minimum(r2, RHO_CAP))

    def observed(self, bank: _SourceBank, cols) -> np.ndarray:
        Xa = bank.X[self.start - self.lag:self.T - self.lag, cols]
        RX = Xa - self.Q @ (self.Q.T @ Xa)
        return self._te(self.ry @ RX, np.einsum("ij,ij->j", RX, RX))

    def surrogates(self, bank: _SourceBank, cols, offsets) -> np.ndarray:
        """TE of each source in ``cols`` at its row of ``offsets`` (m, S)."""
        T, n = self.T, self.n
        corr = np.fft.irfft(self.spectra[None, :, :] * bank.fx[cols][:, None, :],
                            n=T, axis=2)
        corr = np.take_along_axis(corr, offsets[:, None, :], axis=2)
        s = (self.start - self.lag - offsets) % T
        cs, cs2 = bank.csum[cols], bank.csum2[cols]
        wsum = np.take_along_axis(cs, s + n, 1) - np.take_along_axis(cs, s, 1)
        wsum2 = np.take_along_axis(cs2, s + n, 1) - np.take_along_axis(cs2, s, 1)
        sxy = corr[:, 0, :]
        sxx = wsum2 - wsum * wsum / n - np.einsum("mks,mks->ms", corr[:, 1:], corr[:, 1:])
        return self._te(sxy, sxx)


def quantile_bins(v, bins: int) -> np.ndarray:
    """Integer labels 0..bins-1 from the empirical quantiles of ``v``."""
    edges = np.quantile(v, np.linspace(0, 1, bins + 1)[1:-1])
    return np.searchsorted(edges, v, side="right")


def _entropy(counts, n):
    c = counts[counts > 0]
    return math.log(n) - float(c @ np.log(c)) / n


class _BinnedTarget:
    """Target side of the plug-in TE: labels of Y(t) and Y(t-1)."""

    def __init__(self, ylab, lag, bins):
        T = ylab.shape[0]
        self.T = T
        self.lag = lag
        self.start = lag
        self.bins = bins
        self.a = ylab[self.start:]
        self.c = ylab[self.start - 1:T - 1]
        self.n = self.a.shape[0]

    def _te(self, Xb):
        B = self.bins
        n = self.n
        S = Xb.shape[1]
        ac = np.bincount(self.a * B + self.c, minlength=B * B)
        cc = np.bincount(self.c, minlength=B)
        base = _entropy(ac, n) - _entropy(cc, n)
        codes = (np.arange(S)[None, :] * B + Xb) * B + self.c[:, None]
        bc = np.bincount(codes.ravel(), minlength=S * B * B).reshape(S, -1)
        codes = codes * B + self.a[:, None]
        abc = np.bincount(codes.ravel(), minlength=S * B ** 3).reshape(S, -1)
        out = np.empty(S)
        for s in range(S):
            out[s] = base + _entropy(bc[s], n) - _entropy(abc[s], n)
        return np.maximum(out, 0.0)

    def observed(self, labels, cols) -> np.ndarray:
        xa = labels[self.start - self.lag:self.T - self.lag]
        return np.array([self._te(xa[:, [c]])[0] for c in cols])

    def surrogates(self, labels, cols, offsets) -> np.ndarray:
        rows = np.arange(self.start - self.lag, self.T - self.lag)
        return np.stack([
            self._te(labels[(rows[:, None] - off[None, :]) % self.T, c])
            for c, off in zip(cols, offsets)])


def gaussian_te(x, y, lag: int, k: int = 1) -> float:
    """Transfer entropy X -> Y (nats) at ``lag`` under a Gaussian model.

    ``-0.5 * ln(1 - rho^2)`` with ``rho`` the partial correlation of
    X(t-lag) and Y(t) given Y(t-1), ..., Y(t-k); ``rho^2`` is capped at
    ``1 - 1e-12``.
    """
    x, y = _check_lengths(x, y, lag, k)
    return float(_GaussianTarget(y, lag, k).observed(_SourceBank(x), [0])[0])


def binned_te(x, y, lag: int, k: int = 1, bins: int = 8) -> float:
    """Plug-in transfer entropy I(Y_t ; X_{t-lag} | Y_{t-1}) over quantile bins."""
    x, y = _check_lengths(x, y, lag, k)
    if k != 1:
        raise TEError("binned estimator supports k=1 only")
    T = x.shape[0]
    if bins < 2 or bins > math.sqrt(T):
        raise TEError(f"bins={bins} outside [2, sqrt(T)={math.sqrt(T):.1f}]")
    labels = quantile_bins(x, bins)[:, None]
    return float(_BinnedTarget(quantile_bins(y, bins), lag, bins).observed(labels, [0])[0])


# -- significance -------------------------------------------------------------

def _target_model(y, lag, cfg):
    if cfg.estimator == "gaussian":
        return _GaussianTarget(y, lag, cfg.history)
    return _BinnedTarget(quantile_bins(y, cfg.bins), lag, cfg.bins)


def _source_model(X, cfg):
    """Source-side representation of the columns of ``X`` (T, m)."""
    if cfg.estimator == "gaussian":
        return _SourceBank(X)
    return np.column_stack([quantile_bins(c, cfg.bins) for c in np.asarray(X).T])


def _draw_offsets(T, n_surrogates, rng):
    lo, hi = math.ceil(T / 10), (9 * T) // 10
    return rng.integers(lo, hi + 1, size=n_surrogates)


def _rng(seed, stream, lag):
    return np.random.default_rng([seed, *stream, lag])


def _pvalue(obs, null):
    return (1 + int(np.count_nonzero(null >= obs))) / (1 + len(null))


def surrogate_test(x, y, lag: int, cfg: FilterConfig, stream: Sequence[int] = ()):
    """Observed TE from ``x`` to ``y`` and its circular-shift p-value.

    Each surrogate shifts ``x`` circularly by a random offset in
    [T/10, 9T/10]. ``stream`` selects an independent random substream; the
    result is deterministic given ``cfg.seed`` and ``stream``.
    """
    x, y = _check_lengths(x, y, lag, cfg.history)
    if cfg.estimator == "binned" and cfg.bins > math.sqrt(x.shape[0]):
        raise TEError(f"bins={cfg.bins} exceeds sqrt(T)")
    tgt = _target_model(y, lag, cfg)
    src = _source_model(x[:, None], cfg)
    offsets = _draw_offsets(tgt.T, cfg.n_surrogates, _rng(cfg.seed, stream, lag))
    obs = float(tgt.observed(src, [0])[0])
    null = tgt.surrogates(src, [0], offsets[None, :])[0]
    return obs, _pvalue(obs, null)


def surrogate_pvalue(x, y, lag: int, cfg: FilterConfig, stream: Sequence[int] = ()):
    """p = (1 + #{surrogate TE >= observed TE}) / (1 + n_surrogates)."""
    return surrogate_test(x, y, lag, cfg, stream)[1]


def name_key(name: str) -> int:
    """Stable integer key of a variable name for random substreams."""
    return zlib.crc32(name.encode("utf-8"))


def _scan_target(ds, j, cfg, src):
    y = ds.values[:, j]
    tkey = name_key(ds.names[j])
    cols = [i for i in range(ds.N) if i != j]
    found = []
    if not cols:
        return found
    for lag in range(cfg.tau_min, cfg.tau_max + 1):
        tgt = _target_model(y, lag, cfg)
        offsets = np.stack([
            _draw_offsets(ds.T, cfg.n_surrogates,
                          _rng(cfg.seed, (name_key(ds.names[i]), tkey), lag))
            for i in cols])
        obs = tgt.observed(src, cols)
        null = tgt.surrogates(src, cols, offsets)
        found.extend((i, j, lag, float(o), nl) for i, o, nl in zip(cols, obs, null))
    return found


def select_features(ds: TimeSeriesDataset, cfg: FilterConfig,
                    workers: int = 1) -> FilterResult:
    """Run the TE filter over every ordered pair and lag of ``ds``.

    A cross-link is accepted when its p-value is at most
    ``cfg.alpha_filter``. Variables outside every accepted cross-link are
    rejected unless protected. Output does not depend on ``workers``.
    """
    unknown = [p for p in cfg.protected if p not in ds.names]
    if unknown:
        raise ValueError(f"protected variables not in dataset: {unknown}")
    if ds.T <= cfg.tau_max + 10:
        raise TEError(
            f"dataset too short: T={ds.T} must exceed tau_max + 10 = {cfg.tau_max + 10}")
    if cfg.estimator == "binned" and cfg.bins > math.sqrt(ds.T):
        raise TEError(f"bins={cfg.bins} exceeds sqrt(T)={math.sqrt(ds.T):.1f}")

    src = _source_model(ds.values, cfg)
    scan = lambda j: _scan_target(ds, j, cfg, src)  # noqa: E731
    if workers > 1 and ds.N > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_target = list(pool.map(scan, range(ds.N)))
    else:
        per_target = [scan(j) for j in range(ds.N)]
    tests = [t for found in per_target for t in found]

    if cfg.correction == "maxstat" and tests:
        # null of the largest TE over the whole family, surrogate by surrogate
        family_max = np.max([null for *_, null in tests], axis=0)
        pvals = [_pvalue(obs, family_max) for *_, obs, _ in tests]
    else:
        pvals = [_pvalue(obs, null) for *_, obs, null in tests]

    cross = []
    involved = set()
    for (i, j, lag, obs, _), p in zip(tests, pvals):
        if p <= cfg.alpha_filter:
            cross.append(CandidateLink(ds.names[i], ds.names[j], lag, obs, p))
            involved.update((i, j))
    protected = {ds.index(p) for p in cfg.protected}
    keep = sorted(involved | protected)
    selected = tuple(ds.names[i] for i in keep)
    rejected = tuple(n for n in ds.names if n not in selected)

    autos = [CandidateLink(n, n, lag) for n in selected
             for lag in range(cfg.tau_min, cfg.tau_max + 1)]
    order = {n: i for i, n in enumerate(ds.names)}
    candidates = sorted(
        cross + autos,
        key=lambda c: (order[c.target], order[c.source], c.lag))
    return FilterResult(selected, rejected, tuple(candidates),
                        stats={"te_tests": len(tests)})
