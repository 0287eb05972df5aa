"""Linear partial-correlation (ParCorr) conditional independence test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

RHO_CAP = 1.0 - 1e-12


class CITestError(ValueError):
    """Raised when a conditional independence test cannot be evaluated."""


@dataclass(frozen=True)
class CITestResult:
    statistic: float
    dof: int
    p_value: float
    degenerate: bool = False


def _as_matrix(Z, n):
    if Z is None:
        return np.empty((n, 0))
    if isinstance(Z, np.ndarray) and Z.ndim == 2:
        return Z
    cols = [np.asarray(z, dtype=float) for z in Z]
    if not cols:
        return np.empty((n, 0))
    for z in cols:
        if z.shape != (n,):
            raise CITestError(f"conditioning series of length {z.shape}, expected {n}")
    return np.column_stack(cols)


def _design(Zm):
    n = Zm.shape[0]
    return np.column_stack([np.ones(n), Zm])


def _collinear_columns(design):
    """Indices (into the conditioners, 0-based) that add no rank."""
    scale = np.abs(design).max(axis=0)
    scale[scale == 0] = 1.0
    d = design / scale
    bad = []
    keep = [0]
    for c in range(1, d.shape[1]):
        trial = d[:, keep + [c]]
        if np.linalg.matrix_rank(trial) < len(keep) + 1:
            bad.append(c - 1)
        else:
            keep.append(c)
    return bad


def _basis(Zm):
    """Orthonormal basis of span([1, Zm]); raises on rank deficiency."""
    n, k = Zm.shape
    if n <= k + 2:
        raise CITestError(f"{n} samples cannot support {k} conditioners")
    design = _design(Zm)
    norms = np.linalg.norm(design, axis=0)
    norms[norms == 0] = 1.0
    Q, R = np.linalg.qr(design / norms)
    if np.abs(np.diag(R)).min() < 1e-10:
        bad = _collinear_columns(design)
        raise CITestError(
            f"rank-deficient conditioning set; collinear conditioners at "
            f"positions {bad}")
    return Q


def _project_out(v, Q):
    # one matvec per vector keeps each residual independent of its neighbours
    if Q is None:
        return v - v.mean()
    return v - Q @ (Q.T @ v)


def ols_residuals(v, Z=()) -> np.ndarray:
    """Residuals of regressing ``v`` on the series in ``Z`` plus an intercept.

    Raises CITestError naming the offending positions in ``Z`` when the
    design matrix is rank-deficient.
    """
    v = np.asarray(v, dtype=float)
    Zm = _as_matrix(Z, v.shape[0])
    return _project_out(v, _basis(Zm) if Zm.shape[1] else None)


def t_pvalue(r: float, dof: int) -> float:
    """Two-sided Student-t p-value of a correlation with ``dof`` dof."""
    r = min(max(r, -RHO_CAP), RHO_CAP)
    t2 = r * r * dof / (1.0 - r * r)
    # P(|T| > t) = I_{dof/(dof+t^2)}(dof/2, 1/2)
    return float(betainc(0.5 * dof, 0.5, dof / (dof + t2)))


def parcorr_test(x, y, Z=()) -> CITestResult:
    """Partial correlation of ``x`` and ``y`` given ``Z``.

    ``Z`` may be a sequence of series or an (n, k) array. The statistic is
    the Pearson correlation of the two OLS residual vectors, capped into
    (-1, 1); ``dof = n - |Z| - 2``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if y.shape != (n,) or x.ndim != 1:
        raise CITestError("x and y must be 1-D series of equal length")
    Zm = _as_matrix(Z, n)
    dof = n - Zm.shape[1] - 2
    if dof < 1:
        raise CITestError(
            f"{n} samples too few for {Zm.shape[1]} conditioners (dof={dof})")
    Q = _basis(Zm) if Zm.shape[1] else None
    rx = _project_out(x, Q)
    ry = _project_out(y, Q)
    sxx = rx @ rx
    syy = ry @ ry
    # residual energy at rounding level means x or y is a function of Z
    if sxx <= 1e-20 * (x @ x) or syy <= 1e-20 * (y @ y):
        return CITestResult(0.0, dof, 1.0, degenerate=True)
    r = float(rx @ ry / np.sqrt(sxx * syy))
    r = min(max(r, -RHO_CAP), RHO_CAP)
    return CITestResult(r, dof, t_pvalue(r, dof))
