"""Batch experiment runner: error rates of the goodness-of-fit tests over a
grid of window sizes, grain elongations and test variants.

A scenario fixes a base Boolean model plus sweeps over expected point
counts, elongation factors, TMD bandwidth constants and the MGM Monte Carlo
sample size.  For every expected count a square window is calibrated against
the isotropic null model; the MGM null covariance is estimated once per
window under that null model and reused for every elongation, so the null
hypothesis of the MGM test is the fully specified isotropic process.

Replications fan out over a process pool.  Every replication derives its
generator from (master seed, purpose, grid coordinates, replication index)
only, and aggregation runs in fixed order, so the emitted CSV is
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimate import CovarianceEstimate
from .exceptions import UndefinedEstimateError
from .geometry import Window, window_for_expected_points
from .gof import mgm_test, monte_carlo_sigma, tmd_test
from .patterns import MarkBins, NullMarkDistribution
from .seeding import derive_seed
from .simulate import BoundaryCoxConfig, simulate_pattern

__all__ = [
    "ScenarioConfig",
    "ScenarioRow",
    "ErrorRateTable",
    "default_scenario",
    "run_scenario",
    "emit_table",
    "read_table",
]

_PURPOSE_DATA = 1
_PURPOSE_MC = 2

_CSV_HEADER = "test,c,n_mc,target_points,c_e,rate,reps,se,inconclusive"


@dataclass(frozen=True)
class ScenarioConfig:
    """Full specification of one experiment sweep."""

    model: BoundaryCoxConfig
    target_points: tuple[int, ...] = (300, 600, 1200)
    elongations: tuple[float, ...] = (1.0, 1.135, 1.325)
    tmd_constants: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0)
    mgm_samples: int = 500
    replications: int = 200
    alpha: float = 0.05
    master_seed: int = 1729
    bins: int = 8

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not self.target_points or not self.elongations:
            raise ValueError("target_points and elongations must be non-empty")
        if not self.tmd_constants and self.mgm_samples <= 0:
            raise ValueError("scenario enables neither the TMD nor the MGM test")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if any(t < 1 for t in self.target_points):
            raise ValueError("target point counts must be positive")
        object.__setattr__(self, "target_points", tuple(int(t) for t in self.target_points))
        object.__setattr__(self, "elongations", tuple(float(e) for e in self.elongations))
        object.__setattr__(self, "tmd_constants", tuple(float(c) for c in self.tmd_constants))

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "target_points": list(self.target_points),
            "elongations": list(self.elongations),
            "tmd_constants": list(self.tmd_constants),
            "mgm_samples": self.mgm_samples,
            "replications": self.replications,
            "alpha": self.alpha,
            "master_seed": self.master_seed,
            "bins": self.bins,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        if "model" not in data:
            raise ValueError("scenario config requires a 'model' section")
        model = BoundaryCoxConfig.from_dict(data.pop("model"))
        for key in ("target_points", "elongations", "tmd_constants"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(model=model, **data)


def default_scenario(full: bool = False) -> ScenarioConfig:
    """Desk-scale defaults, or the full-size sweep behind ``full=True``."""
    model = BoundaryCoxConfig(germ_intensity=1.5e-4)
    if full:
        return ScenarioConfig(
            model=model,
            target_points=tuple(range(300, 3001, 300)),
            replications=1000,
            mgm_samples=1000,
        )
    return ScenarioConfig(model=model)


def _fmt6(x: float) -> float:
    return float(f"{x:.6g}")


@dataclass(frozen=True)
class ScenarioRow:
    """One error-rate observation.

    ``rate`` is the rejection fraction among conclusive outcomes and ``se``
    its binomial standard error; both are stored at the 6-significant-digit
    precision they are written with, so emit/read round-trips are exact.
    """

    test: str
    c: float | None
    n_mc: int | None
    target_points: int
    c_e: float
    rate: float
    reps: int
    se: float
    inconclusive: int

    def __post_init__(self):
        object.__setattr__(self, "rate", _fmt6(self.rate))
        object.__setattr__(self, "se", _fmt6(self.se))


@dataclass(frozen=True)
class ErrorRateTable:
    rows: tuple[ScenarioRow, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def select(self, **conditions) -> "ErrorRateTable":
        """Rows matching all given field values, e.g.
        ``table.select(test="mgm", target_points=600)``."""
        keep = [
            r for r in self.rows
            if all(getattr(r, k) == v for k, v in conditions.items())
        ]
        return ErrorRateTable(tuple(keep))

    @property
    def inconclusive_fraction(self) -> float:
        evals = sum(r.reps for r in self.rows)
        if evals == 0:
            return 0.0
        return sum(r.inconclusive for r in self.rows) / evals


def _make_row(test, c, n_mc, target, c_e, reps, rejects, inconclusive) -> ScenarioRow:
    conclusive = reps - inconclusive
    rate = rejects / conclusive if conclusive > 0 else 0.0
    se = math.sqrt(rate * (1.0 - rate) / conclusive) if conclusive > 0 else 0.0
    return ScenarioRow(
        test=test, c=c, n_mc=n_mc, target_points=target, c_e=c_e,
        rate=rate, reps=reps, se=se, inconclusive=inconclusive,
    )


def _evaluate_replication(task):
    (model_dict, origin, sides, ell, probs, tmd_cs, sigma0, alpha, seed) = task
    cfg = BoundaryCoxConfig(**model_dict)
    window = Window(origin=origin, sides=sides)
    bins = MarkBins(ell)
    null0 = NullMarkDistribution(np.asarray(probs))
    outcomes = []
    try:
        pattern = simulate_pattern(cfg, window, seed)
        for c in tmd_cs:
            report = tmd_test(pattern, bins, null0, c=c, alpha=alpha)
            outcomes.append(-1 if report.inconclusive else int(report.reject))
        if sigma0 is not None:
            cov = CovarianceEstimate(sigma0, kind="monte_carlo")
            report = mgm_test(pattern, bins, null0, cov, alpha=alpha)
            outcomes.append(-1 if report.inconclusive else int(report.reject))
    except UndefinedEstimateError:
        n_variants = len(tmd_cs) + (1 if sigma0 is not None else 0)
        outcomes = [-1] * n_variants
    return tuple(outcomes)


def _pmap(fn, items, workers, chunk_denominator=8):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (workers * chunk_denominator))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))


def run_scenario(cfg: ScenarioConfig, workers: int = 1):
    """Run the sweep and aggregate rejection rates.

    Returns ``(table, metadata)``.  Inconclusive outcomes are counted
    separately and never folded into the rejection rate.  The result is a
    pure function of the scenario config, independent of ``workers``.
    """
    bins = MarkBins(cfg.bins)
    null0 = NullMarkDistribution.uniform(bins)
    null_model = cfg.model.with_elongation(1.0)

    windows: dict[int, Window] = {}
    sigma0: dict[int, np.ndarray | None] = {}
    for ti, target in enumerate(cfg.target_points):
        windows[target] = window_for_expected_points(null_model, target)
        if cfg.mgm_samples > 0:
            est = monte_carlo_sigma(
                null_model, windows[target], bins, null0,
                n=cfg.mgm_samples,
                seed=derive_seed(cfg.master_seed, _PURPOSE_MC, ti),
                workers=workers,
            )
            sigma0[target] = est.matrix
        else:
            sigma0[target] = None

    tasks = []
    for ti, target in enumerate(cfg.target_points):
        w = windows[target]
        for ei, c_e in enumerate(cfg.elongations):
            model = cfg.model.with_elongation(c_e)
            for rep in range(cfg.replications):
                tasks.append((
                    model.to_dict(), w.origin, w.sides, cfg.bins,
                    tuple(null0.probabilities), cfg.tmd_constants,
                    sigma0[target], cfg.alpha,
                    derive_seed(cfg.master_seed, _PURPOSE_DATA, ti, ei, rep),
                ))
    results = _pmap(_evaluate_replication, tasks, workers)

    n_variants = len(cfg.tmd_constants) + (1 if cfg.mgm_samples > 0 else 0)
    rejects = np.zeros((len(cfg.target_points), len(cfg.elongations), n_variants), dtype=int)
    inconcl = np.zeros_like(rejects)
    k = 0
    for ti in range(len(cfg.target_points)):
        for ei in range(len(cfg.elongations)):
            for _ in range(cfg.replications):
                for vi, code in enumerate(results[k]):
                    if code < 0:
                        inconcl[ti, ei, vi] += 1
                    else:
                        rejects[ti, ei, vi] += code
                k += 1

    rows = []
    for vi, c in enumerate(cfg.tmd_constants):
        for ti, target in enumerate(cfg.target_points):
            for ei, c_e in enumerate(cfg.elongations):
                rows.append(_make_row(
                    "tmd", c, None, target, c_e, cfg.replications,
                    int(rejects[ti, ei, vi]), int(inconcl[ti, ei, vi]),
                ))
    if cfg.mgm_samples > 0:
        vi = len(cfg.tmd_constants)
        for ti, target in enumerate(cfg.target_points):
            for ei, c_e in enumerate(cfg.elongations):
                rows.append(_make_row(
                    "mgm", None, cfg.mgm_samples, target, c_e, cfg.replications,
                    int(rejects[ti, ei, vi]), int(inconcl[ti, ei, vi]),
                ))
    table = ErrorRateTable(tuple(rows))

    metadata = {
        "config": cfg.to_dict(),
        "windows": {str(t): windows[t].sides[0] for t in cfg.target_points},
        "evaluations": int(cfg.replications * len(cfg.target_points)
                           * len(cfg.elongations) * n_variants),
        "inconclusive": int(inconcl.sum()),
        "workers": workers,
    }
    return table, metadata


def _fmt_opt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_table(table: ErrorRateTable, path):
    """Write the error-rate table as CSV with a fixed column order.

    Rates and standard errors are printed with 6 significant digits; rows
    come out one curve at a time (test variant, then window size, then
    elongation), ready for plotting.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for r in table:
            fh.write(",".join([
                r.test,
                _fmt_opt(r.c),
                _fmt_opt(r.n_mc),
                str(r.target_points),
                repr(r.c_e),
                f"{r.rate:.6g}",
                str(r.reps),
                f"{r.se:.6g}",
                str(r.inconclusive),
            ]) + "\n")


def read_table(path) -> ErrorRateTable:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            (test, c, n_mc, target, c_e, rate, reps, se, inconclusive) = line.split(",")
            rows.append(ScenarioRow(
                test=test,
                c=float(c) if c else None,
                n_mc=int(n_mc) if n_mc else None,
                target_points=int(target),
                c_e=float(c_e),
                rate=float(rate),
                reps=int(reps),
                se=float(se),
                inconclusive=int(inconclusive),
            ))
    return ErrorRateTable(tuple(rows))


def write_metadata(metadata: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
