"""Report containers and their CSV/JSON serialization.

Numbers are serialized with 17 significant digits so that reruns with the
same seed can be compared byte for byte.  CSV output carries the stochastic
provenance (seed, sample count, library version) in leading '#' comment
lines and never includes wall time; JSON output additionally records wall
time and the full parameter set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__

CSV_COLUMNS = ("threshold", "bound", "empirical", "ci_low", "ci_high", "violation")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class TailFragment:
    """Tail estimates over a threshold grid, before merging with a bound."""

    thresholds: np.ndarray
    tail: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    sample_count: int
    method: str  # "exact" | "monte-carlo"

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        self.tail = np.asarray(self.tail, dtype=float)
        self.ci_low = np.asarray(self.ci_low, dtype=float)
        self.ci_high = np.asarray(self.ci_high, dtype=float)
        if self.thresholds.ndim != 1 or self.thresholds.size == 0:
            raise ValueError("empty threshold grid")
        if (np.diff(self.thresholds) <= 0).any():
            raise ValueError("thresholds must be strictly increasing")
        for arr in (self.tail, self.ci_low, self.ci_high):
            if arr.shape != self.thresholds.shape:
                raise ValueError("column lengths must match the threshold grid")
        if ((self.ci_low > self.tail + 1e-15) | (self.tail > self.ci_high + 1e-15)).any():
            raise ValueError("confidence columns must bracket the estimate")
        if self.method not in ("exact", "monte-carlo"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class TailReport:
    """Analytic bound vs. empirical/exact tail over a threshold grid."""

    thresholds: np.ndarray
    analytic_bound: np.ndarray
    empirical_tail: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    sample_count: int
    method: str
    violations: list[float]
    uninformative: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        self.analytic_bound = np.asarray(self.analytic_bound, dtype=float)
        self.empirical_tail = np.asarray(self.empirical_tail, dtype=float)
        self.ci_low = np.asarray(self.ci_low, dtype=float)
        self.ci_high = np.asarray(self.ci_high, dtype=float)
        self.uninformative = np.asarray(self.uninformative, dtype=bool)
        if ((self.analytic_bound <= 0) | (self.analytic_bound > 1)).any():
            raise ValueError("analytic bound values must lie in (0, 1]")

    @property
    def violation_flags(self) -> np.ndarray:
        flags = np.zeros(self.thresholds.size, dtype=bool)
        for t in self.violations:
            flags |= np.isclose(self.thresholds, t)
        return flags

    def _comment_lines(self) -> list[str]:
        keys = {"version": __version__, "method": self.method,
                "samples": self.sample_count}
        keys.update({
            k: v for k, v in sorted(self.metadata.items())
            if k not in ("wall_time_s",) and _is_scalar(v)
        })
        return [f"# {k}={v}" for k, v in keys.items()]

    def to_csv_text(self) -> str:
        lines = self._comment_lines()
        lines.append(",".join(CSV_COLUMNS))
        flags = self.violation_flags
        for i in range(self.thresholds.size):
            lines.append(",".join([
                fmt(self.thresholds[i]),
                fmt(self.analytic_bound[i]),
                fmt(self.empirical_tail[i]),
                fmt(self.ci_low[i]),
                fmt(self.ci_high[i]),
                str(int(flags[i])),
            ]))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        flags = self.violation_flags
        return {
            "metadata": {"version": __version__, "method": self.method,
                         "samples": self.sample_count, **self.metadata},
            "rows": [
                {
                    "threshold": self.thresholds[i],
                    "bound": self.analytic_bound[i],
                    "empirical": self.empirical_tail[i],
                    "ci_low": self.ci_low[i],
                    "ci_high": self.ci_high[i],
                    "violation": bool(flags[i]),
                    "uninformative": bool(self.uninformative[i]),
                }
                for i in range(self.thresholds.size)
            ],
            "violations": [float(t) for t in self.violations],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def serialize(self, format: str) -> str:
        if format == "csv":
            return self.to_csv_text()
        if format == "json":
            return self.to_json_text()
        raise ValueError(f"unknown format {format!r}")


@dataclass
class BoundCurve:
    """Analytic bound values over a threshold grid, with the constants used."""

    thresholds: np.ndarray
    columns: dict  # column name -> array of bound values
    constants: dict
    metadata: dict = field(default_factory=dict)

    def to_csv_text(self) -> str:
        lines = [f"# version={__version__}"]
        lines += [f"# {k}={fmt(v) if isinstance(v, float) else v}"
                  for k, v in sorted(self.constants.items())]
        lines += [f"# {k}={v}" for k, v in sorted(self.metadata.items())
                  if _is_scalar(v)]
        names = list(self.columns)
        lines.append(",".join(["threshold"] + names))
        for i in range(len(self.thresholds)):
            row = [fmt(self.thresholds[i])]
            row += [fmt(self.columns[name][i]) for name in names]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "metadata": {"version": __version__, **self.metadata},
            "constants": {k: v for k, v in self.constants.items()},
            "thresholds": [float(t) for t in self.thresholds],
            "curves": {k: [float(x) for x in v] for k, v in self.columns.items()},
        }

    def serialize(self, format: str) -> str:
        if format == "csv":
            return self.to_csv_text()
        if format == "json":
            return json.dumps(self.to_json_dict(), indent=2) + "\n"
        raise ValueError(f"unknown format {format!r}")


@dataclass
class IdentityReport:
    """Worst-case residual of a coupling identity over an exact sample space."""

    max_residual: float
    sample_space_size: int
    method: str = "exact"
    residual_norm_type: str = "euclidean"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_residual < 0:
            raise ValueError("residual must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "sample_space_size": self.sample_space_size,
            "method": self.method,
            "residual_norm_type": self.residual_norm_type,
            "metadata": self.metadata,
        }


@dataclass
class ExchangeabilityReport:
    """Distance between the laws of f(W, W') and f(W', W)."""

    distance: float
    distance_type: str  # "kolmogorov-smirnov" | "total-variation"
    method: str
    sample_count: int
    p_value: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "distance": self.distance,
            "distance_type": self.distance_type,
            "method": self.method,
            "samples": self.sample_count,
            "p_value": self.p_value,
            "metadata": self.metadata,
        }


def _is_scalar(v) -> bool:
    return isinstance(v, (str, int, float, bool))
