"""Marked point patterns with directional marks on the upper half-circle.

Marks are angles in ``[0, pi)``: antipodal directions are identified, so an
outer normal and its negative carry the same mark.  The chi-square test bins
partition ``[0, ell*pi/(ell+1))`` into ``ell`` half-open intervals of equal
width; the remaining slice ``[ell*pi/(ell+1), pi)`` is deliberately left
uncovered, which keeps the covariance matrix of the bin counts
non-degenerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import UndefinedEstimateError
from .geometry import Window

__all__ = [
    "MarkBins",
    "NullMarkDistribution",
    "MarkedPointPattern",
    "make_bins",
    "fold_direction",
    "fold_angles",
]

PI = math.pi


def fold_direction(v, tol: float = 1e-9) -> float:
    """Angle in ``[0, pi)`` of a unit vector, antipodal directions identified.

    Raises ``ValueError`` when ``v`` is not a unit vector within ``tol``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (2,):
        raise ValueError("direction must be a planar vector")
    norm = math.hypot(v[0], v[1])
    if abs(norm - 1.0) > tol:
        raise ValueError(f"not a unit vector (norm {norm!r})")
    return float(math.atan2(v[1], v[0]) % PI)


def fold_angles(theta) -> np.ndarray:
    """Vectorized reduction of angles modulo pi into ``[0, pi)``."""
    return np.mod(np.asarray(theta, dtype=float), PI)


@dataclass(frozen=True)
class MarkBins:
    """``ell`` half-open direction bins of width ``pi / (ell + 1)``.

    Bin ``i`` (0-based) is ``[i * width, (i + 1) * width)``; the slice
    ``[ell * width, pi)`` belongs to no bin.
    """

    ell: int

    def __post_init__(self):
        if int(self.ell) < 1:
            raise ValueError("need at least one bin")
        object.__setattr__(self, "ell", int(self.ell))

    @property
    def width(self) -> float:
        return PI / (self.ell + 1)

    @property
    def edges(self) -> np.ndarray:
        """Bin boundaries ``i * width`` for ``i = 0 .. ell``."""
        return np.arange(self.ell + 1) * self.width

    def interval(self, i: int) -> tuple[float, float]:
        if not 0 <= i < self.ell:
            raise IndexError(f"bin index {i} out of range")
        return (i * self.width, (i + 1) * self.width)

    def bin_index(self, theta: float):
        """0-based bin index of an angle, or ``None`` for the uncovered slice.

        Membership is resolved against the floating-point edge values
        ``i * width`` so that left endpoints are included exactly.
        """
        theta = float(theta)
        if not 0.0 <= theta < PI:
            raise ValueError(f"mark angle {theta!r} outside [0, pi)")
        w = self.width
        i = int(math.floor(theta / w))
        # repair one-ulp misrounding of the division against the edges
        if theta < i * w:
            i -= 1
        elif theta >= (i + 1) * w:
            i += 1
        return i if 0 <= i < self.ell else None

    def indices(self, theta) -> np.ndarray:
        """Vectorized ``bin_index``; uncovered slice maps to -1."""
        t = np.asarray(theta, dtype=float)
        w = self.width
        i = np.floor(t / w).astype(np.int64)
        i = np.where(t < i * w, i - 1, i)
        i = np.where(t >= (i + 1) * w, i + 1, i)
        return np.where((i >= 0) & (i < self.ell), i, -1)

    def counts(self, theta) -> np.ndarray:
        """Number of marks per bin (uncovered marks are not counted)."""
        idx = self.indices(theta)
        idx = idx[idx >= 0]
        return np.bincount(idx, minlength=self.ell).astype(float)


def make_bins(ell: int) -> MarkBins:
    """The ``ell`` direction bins used by the chi-square tests."""
    return MarkBins(ell)


@dataclass(frozen=True)
class NullMarkDistribution:
    """Hypothesized bin probabilities of the Palm mark distribution."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).reshape(-1).copy()
        if p.size < 1:
            raise ValueError("need at least one probability")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and non-negative")
        if p.sum() > 1.0 + 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r} > 1")
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    @property
    def ell(self) -> int:
        return self.probabilities.size

    @classmethod
    def uniform(cls, bins: MarkBins) -> "NullMarkDistribution":
        """Bin probabilities of the uniform direction distribution on the
        half-circle: each of the ``ell`` bins receives ``1 / (ell + 1)``."""
        return cls(np.full(bins.ell, 1.0 / (bins.ell + 1)))


@dataclass(frozen=True, eq=False, repr=False)
class MarkedPointPattern:
    """Planar points with direction marks, observed in a window.

    Points outside the window are dropped at construction.  Coincident
    points are rejected: the underlying process model is simple.
    """

    points: np.ndarray
    marks: np.ndarray
    window: Window

    def __init__(self, points, marks, window: Window):
        pts = np.asarray(points, dtype=float).reshape(-1, 2).copy()
        mks = np.asarray(marks, dtype=float).reshape(-1).copy()
        if pts.shape[0] != mks.shape[0]:
            raise ValueError(
                f"{pts.shape[0]} points but {mks.shape[0]} marks"
            )
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if mks.size and (not np.all(np.isfinite(mks)) or np.any(mks < 0) or np.any(mks >= PI)):
            raise ValueError("marks must lie in [0, pi)")
        inside = window.contains(pts) if pts.size else np.zeros(0, dtype=bool)
        pts = pts[inside]
        mks = mks[inside]
        if pts.shape[0] > 1:
            order = np.lexsort((pts[:, 1], pts[:, 0]))
            srt = pts[order]
            dup = np.all(srt[1:] == srt[:-1], axis=1)
            if np.any(dup):
                where = srt[1:][dup][0]
                raise ValueError(
                    f"coincident points at {tuple(where)}: patterns must be simple"
                )
        pts.flags.writeable = False
        mks.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "marks", mks)
        object.__setattr__(self, "window", window)

    def __repr__(self):
        return (
            f"MarkedPointPattern(n={self.n}, window={self.window.sides}"
            f"@{self.window.origin})"
        )

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def require_nonempty(self):
        if self.n == 0:
            raise UndefinedEstimateError("pattern has no points")

    def to_csv(self, path):
        """Write the pattern in the interchange format (17 significant
        digits, so the round-trip is bit exact)."""
        ox, oy = self.window.origin
        l1, l2 = self.window.sides
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# window_origin {ox:.17g} {oy:.17g}\n")
            fh.write(f"# window_sides {l1:.17g} {l2:.17g}\n")
            fh.write("x,y,theta\n")
            for (x, y), t in zip(self.points, self.marks):
                fh.write(f"{x:.17g},{y:.17g},{t:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "MarkedPointPattern":
        origin = None
        sides = None
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    fields = line[1:].split()
                    if fields and fields[0] == "window_origin":
                        origin = (float(fields[1]), float(fields[2]))
                    elif fields and fields[0] == "window_sides":
                        sides = (float(fields[1]), float(fields[2]))
                    continue
                if line.lower().startswith("x,"):
                    continue
                x, y, t = line.split(",")
                rows.append((float(x), float(y), float(t)))
        if origin is None or sides is None:
            raise ValueError(f"{path}: missing window metadata lines")
        window = Window(origin=origin, sides=sides)
        if rows:
            arr = np.asarray(rows, dtype=float)
            return cls(arr[:, :2], arr[:, 2], window)
        return cls(np.empty((0, 2)), np.empty(0), window)
