"""Spatial-interaction features from planar agent trajectories.

For a subject agent the extractor produces its speed and, for every other
agent or static point, the distance and the signed angle between the
subject's heading and the bearing to the other. Angles are counter-clockwise
positive, in (-pi, pi]; the heading is the direction of the velocity.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .dataset import DataError, TimeSeriesDataset

MIN_SPEED = 1e-6


@dataclass(frozen=True, eq=False)
class Trajectory:
    agent_id: str
    xy: np.ndarray
    dt: float

    def __post_init__(self):
        xy = np.array(self.xy, dtype=float)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise DataError(f"{self.agent_id}: positions must have shape (n, 2)")
        if xy.shape[0] < 3:
            raise DataError(f"{self.agent_id}: need at least 3 samples")
        if not np.all(np.isfinite(xy)):
            raise DataError(f"{self.agent_id}: non-finite coordinate")
        if not self.dt > 0:
            raise DataError(f"{self.agent_id}: dt must be positive")
        xy.setflags(write=False)
        object.__setattr__(self, "xy", xy)

    def __len__(self):
        return self.xy.shape[0]


def static_point(name: str, x: float, y: float, n: int, dt: float) -> Trajectory:
    """Constant-position pseudo-trajectory for a fixed object (shelf, goal)."""
    return Trajectory(name, np.tile([float(x), float(y)], (n, 1)), dt)


@dataclass(frozen=True)
class InteractionSpec:
    subject: str
    others: tuple

    def __post_init__(self):
        object.__setattr__(self, "others", tuple(self.others))
        if self.subject in self.others:
            raise ValueError(f"subject {self.subject!r} listed among others")


def wrap_angle(a):
    """Map angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2 * np.pi)


def velocity(traj: Trajectory) -> np.ndarray:
    """Central differences inside, one-sided at the two ends."""
    return np.gradient(traj.xy, traj.dt, axis=0, edge_order=1)


def heading(vel: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Heading angle per sample and whether it was ever defined.

    Below MIN_SPEED the previous heading is kept; before the first motion
    the heading is the +x axis.
    """
    speed = np.hypot(vel[:, 0], vel[:, 1])
    out = np.empty(len(vel))
    current = 0.0
    defined = False
    for t, (v, s) in enumerate(zip(vel, speed)):
        if s >= MIN_SPEED:
            current = math.atan2(v[1], v[0])
            defined = True
        out[t] = current
    return out, defined


def extract_features(trajs: Dict[str, Trajectory], spec: InteractionSpec) -> TimeSeriesDataset:
    """Speed of the subject plus distance/angle to each other agent or point.

    Columns: ``v_<subject>``, then ``d_<subject>_<O>`` and
    ``theta_<subject>_<O>`` for every O in ``spec.others``.
    """
    if spec.subject not in trajs:
        raise DataError(f"no trajectory for subject {spec.subject!r}")
    subj = trajs[spec.subject]
    for o in spec.others:
        if o not in trajs:
            raise DataError(f"no trajectory for {o!r}")
        other = trajs[o]
        if len(other) != len(subj):
            raise DataError(
                f"trajectory lengths differ: {spec.subject}={len(subj)}, {o}={len(other)}")
        if not math.isclose(other.dt, subj.dt, rel_tol=1e-9):
            raise DataError(f"sampling intervals differ: {subj.dt} vs {other.dt}")

    vel = velocity(subj)
    hdg, defined = heading(vel)
    if spec.others and not defined:
        warnings.warn(f"subject {spec.subject!r} never moves; angles use the +x axis "
                      "as heading", RuntimeWarning, stacklevel=2)
    names = [f"v_{spec.subject}"]
    cols = [np.hypot(vel[:, 0], vel[:, 1])]
    for o in spec.others:
        rel = trajs[o].xy - subj.xy
        names += [f"d_{spec.subject}_{o}", f"theta_{spec.subject}_{o}"]
        cols += [np.hypot(rel[:, 0], rel[:, 1]),
                 wrap_angle(np.arctan2(rel[:, 1], rel[:, 0]) - hdg)]
    return TimeSeriesDataset(tuple(names), np.column_stack(cols), subj.dt)


# -- trajectory CSV -----------------------------------------------------------

def _uniform_dt(t: np.ndarray, source: str) -> float:
    if len(t) < 2:
        raise DataError(f"{source}: need at least 2 time stamps")
    d = np.diff(t)
    dt = float(d.mean())
    if dt <= 0 or np.abs(d - dt).max() > 1e-6 * max(1.0, abs(dt)):
        raise DataError(f"{source}: time stamps are not uniformly spaced")
    return dt


def _read_table(text: str, source: str):
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise DataError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise DataError(f"{source}: row {i + 2} has {len(row)} fields, "
                            f"expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise DataError(f"{source}: non-numeric value {cell!r} at row {i + 2}, "
                                f"column {header[j]!r}") from None
    return header, data


def parse_trajectories(text: str, agent_id: str = None,
                       source: str = "<string>") -> Dict[str, Trajectory]:
    """Parse a ``t,x,y`` file (needs ``agent_id``) or a ``t,<id>_x,<id>_y,...`` file."""
    header, data = _read_table(text, source)
    if not header or header[0] != "t":
        raise DataError(f"{source}: first column must be 't'")
    dt = _uniform_dt(data[:, 0], source)
    if header[1:] == ["x", "y"]:
        if agent_id is None:
            raise DataError(f"{source}: single-agent file needs an agent id")
        return {agent_id: Trajectory(agent_id, data[:, 1:3], dt)}
    out = {}
    idx = {h: j for j, h in enumerate(header)}
    for h in header[1:]:
        if h.endswith("_x"):
            aid = h[:-2]
            if f"{aid}_y" not in idx:
                raise DataError(f"{source}: column {aid}_y missing")
            out[aid] = Trajectory(aid, data[:, [idx[h], idx[f'{aid}_y']]], dt)
        elif not h.endswith("_y"):
            raise DataError(f"{source}: unexpected column {h!r}")
    return out


def load_trajectories(paths: Sequence[Union[str, Path]]) -> Dict[str, Trajectory]:
    """Load one or more trajectory CSVs; per-agent files are keyed by file stem."""
    out: Dict[str, Trajectory] = {}
    for p in paths:
        p = Path(p)
        if not p.is_file():
            raise DataError(f"no such file: {p}")
        for aid, tr in parse_trajectories(p.read_text(encoding="utf-8"),
                                          agent_id=p.stem, source=str(p)).items():
            if aid in out:
                raise DataError(f"agent {aid!r} defined twice")
            out[aid] = tr
    return out


def trajectories_to_csv(trajs: List[Trajectory]) -> str:
    """Combined ``t,<id>_x,<id>_y,...`` CSV, t starting at 0."""
    n, dt = len(trajs[0]), trajs[0].dt
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t"] + [f"{tr.agent_id}_{c}" for tr in trajs for c in "xy"])
    for i in range(n):
        w.writerow([repr(i * dt)] + [repr(float(v)) for tr in trajs for v in tr.xy[i]])
    return out.getvalue()
