"""Observation-window geometry for planar point-pattern statistics.

Windows are axis-aligned rectangles: every quantity the estimators need
(area, inradius, boundary length, set covariance) then has a closed form,
and the simulation study only ever uses squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CalibrationError

__all__ = [
    "Window",
    "ellipse_perimeter",
    "grid_cell_count",
    "expected_boundary_point_density",
    "window_for_expected_points",
]


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangular observation window.

    Parameters
    ----------
    origin : (float, float)
        Lower-left corner.
    sides : (float, float)
        Side lengths ``(L1, L2)``, both strictly positive.
    """

    origin: tuple[float, float] = (0.0, 0.0)
    sides: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        ox, oy = (float(v) for v in self.origin)
        l1, l2 = (float(v) for v in self.sides)
        if not (math.isfinite(l1) and math.isfinite(l2) and l1 > 0 and l2 > 0):
            raise ValueError(f"window sides must be positive and finite, got {self.sides!r}")
        object.__setattr__(self, "origin", (ox, oy))
        object.__setattr__(self, "sides", (l1, l2))

    @classmethod
    def square(cls, side: float, origin: tuple[float, float] = (0.0, 0.0)) -> "Window":
        return cls(origin=origin, sides=(float(side), float(side)))

    @property
    def area(self) -> float:
        return self.sides[0] * self.sides[1]

    @property
    def inradius(self) -> float:
        """Radius of the largest inscribed ball, ``min(L1, L2) / 2``."""
        return min(self.sides) / 2.0

    @property
    def boundary_length(self) -> float:
        return 2.0 * (self.sides[0] + self.sides[1])

    @property
    def diameter(self) -> float:
        return math.hypot(self.sides[0], self.sides[1])

    def dilate(self, margin: float) -> "Window":
        """Window grown by ``margin`` on all four sides."""
        m = float(margin)
        if m < 0:
            raise ValueError("margin must be non-negative")
        ox, oy = self.origin
        l1, l2 = self.sides
        return Window(origin=(ox - m, oy - m), sides=(l1 + 2 * m, l2 + 2 * m))

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the closed rectangle.

        ``points`` is an ``(n, 2)`` array (or a single pair).
        """
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        ox, oy = self.origin
        l1, l2 = self.sides
        mask = (
            (pts[:, 0] >= ox)
            & (pts[:, 0] <= ox + l1)
            & (pts[:, 1] >= oy)
            & (pts[:, 1] <= oy + l2)
        )
        return bool(mask[0]) if single else mask

    def set_covariance(self, shift) -> float | np.ndarray:
        """Area of the overlap between the window and its translate.

        For a rectangle the overlap with the translate by ``y`` is
        ``prod_i max(0, L_i - |y_i|)``; it is symmetric in ``y -> -y`` and
        non-increasing in each ``|y_i|``.
        """
        y = np.asarray(shift, dtype=float)
        single = y.ndim == 1
        y = np.atleast_2d(y)
        l1, l2 = self.sides
        gx = np.maximum(0.0, l1 - np.abs(y[:, 0]))
        gy = np.maximum(0.0, l2 - np.abs(y[:, 1]))
        out = gx * gy
        return float(out[0]) if single else out


def _axis_cell_count(lo: float, hi: float) -> int:
    # integers z with |[z - 1/2, z + 1/2) \cap [lo, hi]| > 0, i.e.
    # lo - 1/2 < z < hi + 1/2 strictly; floor/ceil give the exact bounds.
    zmin = math.floor(lo - 0.5) + 1
    zmax = math.ceil(hi + 0.5) - 1
    return max(0, zmax - zmin + 1)


def grid_cell_count(window: Window) -> int:
    """Number of unit grid cells ``[-1/2, 1/2)^2 + z`` meeting the window
    with positive area."""
    ox, oy = window.origin
    l1, l2 = window.sides
    return _axis_cell_count(ox, ox + l1) * _axis_cell_count(oy, oy + l2)


def ellipse_perimeter(a: float, b: float, rel_tol: float = 1e-10) -> float:
    """Perimeter of an axis-aligned ellipse with semi-axes ``a`` and ``b``.

    Computed by trapezoidal quadrature of the arc-length integrand over a
    full period, with panel doubling until the relative change falls below
    ``rel_tol``.  The integrand is smooth and periodic, so convergence is
    fast even at moderate panel counts.
    """
    a = float(a)
    b = float(b)
    if not (a > 0 and b > 0):
        raise ValueError("semi-axes must be positive")
    if a == b:
        return 2.0 * math.pi * a
    n = 256
    prev = _trapezoid_perimeter(a, b, n)
    for _ in range(16):
        n *= 2
        cur = _trapezoid_perimeter(a, b, n)
        if abs(cur - prev) <= rel_tol * abs(cur):
            return cur
        prev = cur
    return cur


def _trapezoid_perimeter(a: float, b: float, n: int) -> float:
    t = np.linspace(0.0, 2.0 * math.pi, n + 1)
    speed = np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)
    # periodic integrand: endpoints coincide, plain trapezoid rule
    return float(np.trapezoid(speed, t))


def expected_boundary_point_density(model) -> float:
    """Expected boundary points per unit area for a Boolean-model boundary
    process.

    ``model`` needs the attributes ``germ_intensity``, ``radius_scale``,
    ``radius_shape``, ``elongation`` and ``boundary_intensity``.  Grains are
    axis-aligned ellipses whose minor semi-axis follows a gamma law and whose
    major semi-axis is ``elongation`` times the minor one.  The boundary
    length of the grain union per unit area is

        L_A = lam * E[perimeter] * exp(-lam * E[area]),

    the exponential factor being the probability that a boundary point of one
    grain is not covered by the interior of another.
    """
    lam = float(model.germ_intensity)
    scale = float(model.radius_scale)
    shape = float(model.radius_shape)
    ce = float(model.elongation)
    rho = float(model.boundary_intensity)
    mean_r = scale * shape
    mean_r2 = scale * scale * shape * (shape + 1.0)
    mean_perimeter = mean_r * ellipse_perimeter(ce, 1.0)
    mean_area = math.pi * ce * mean_r2
    boundary_per_area = lam * mean_perimeter * math.exp(-lam * mean_area)
    return rho * boundary_per_area


def window_for_expected_points(
    model,
    target_count: int,
    *,
    pilot_replications: int = 0,
    pilot_seed: int = 0,
    rel_tol: float = 0.02,
    max_iter: int = 20,
) -> Window:
    """Square window whose expected boundary-point count is ``target_count``.

    The side is first computed from the analytic point density of the model;
    if ``pilot_replications > 0`` the side is refined by pilot Monte Carlo
    until the simulated mean count is within ``rel_tol`` of the target.

    Raises
    ------
    CalibrationError
        If the model produces no points, or pilot refinement does not
        converge within ``max_iter`` rounds.
    """
    if target_count < 1:
        raise ValueError("target_count must be at least 1")
    density = expected_boundary_point_density(model)
    if not math.isfinite(density) or density <= 0.0:
        raise CalibrationError(
            f"model yields non-positive boundary-point density {density!r}; "
            "cannot size a window"
        )
    side = math.sqrt(target_count / density)
    window = Window.square(side)
    if pilot_replications <= 0:
        return window

    from .seeding import derive_seed
    from .simulate import simulate_pattern  # deferred: avoids an import cycle

    for round_idx in range(max_iter):
        counts = [
            simulate_pattern(model, window, derive_seed(pilot_seed, round_idx, rep)).n
            for rep in range(pilot_replications)
        ]
        mean_count = float(np.mean(counts))
        if mean_count <= 0.0:
            raise CalibrationError("pilot simulation produced no points")
        if abs(mean_count / target_count - 1.0) <= rel_tol:
            return window
        side *= math.sqrt(target_count / mean_count)
        window = Window.square(side)
    raise CalibrationError(
        f"pilot calibration did not converge within {max_iter} rounds "
        f"(last mean count {mean_count:.1f} for target {target_count})"
    )
