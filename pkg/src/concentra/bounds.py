"""Generic tail bound evaluators.

Two families:

* exchangeable-pair bounds, exp(-||w||^2 / (2 K^2 nu1)), for couplings with
  a pathwise bound ||W - W'||_2 <= K and an invertible regression matrix
  whose smallest singular value is 1/nu1;
* size-bias bounds, exp(-||t||^2 / (2 (K1 + K2 ||t||))), for nonnegative
  vectors with a bounded size-bias coupling in every direction.

All exponents are assembled in log space and exponentiated last; a result of
exactly 0.0 therefore only occurs when the exponent underflows float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExchBoundParams:
    """Constants of an exchangeable-pair bound: pathwise K, nu1 = 1/sigma_1."""

    K: float
    nu1: float
    dim: int = 1

    def __post_init__(self):
        if not (self.K > 0 and math.isfinite(self.K)):
            raise ValueError(f"K must be positive and finite, got {self.K}")
        if not (self.nu1 > 0 and math.isfinite(self.nu1)):
            raise ValueError(f"nu1 must be positive and finite, got {self.nu1}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class SizeBiasBoundParams:
    """Constants K1, K2 of a size-bias tail bound."""

    K1: float
    K2: float

    def __post_init__(self):
        if not (self.K1 > 0 and math.isfinite(self.K1)):
            raise ValueError(f"K1 must be positive and finite, got {self.K1}")
        if not (self.K2 >= 0 and math.isfinite(self.K2)):
            raise ValueError(f"K2 must be nonnegative and finite, got {self.K2}")


def _nonnegative_vector(w) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(w, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a nonempty vector")
    if not np.isfinite(arr).all():
        raise ValueError("vector entries must be finite")
    if (arr < 0).any():
        raise ValueError("vector entries must be nonnegative")
    return arr


def exch_tail_bound(w, params: ExchBoundParams) -> float:
    """exp(-||w||^2 / (2 K^2 nu1)), the coordinatewise-ordering tail bound.

    Bounds both P(W >= w coordinatewise) and P(W <= -w coordinatewise) for a
    centered vector with the stated coupling constants.
    """
    arr = _nonnegative_vector(w)
    exponent = -float(arr @ arr) / (2.0 * params.K**2 * params.nu1)
    return math.exp(exponent)


def coord_tail_bound(w_i: float, params: ExchBoundParams) -> float:
    """Single-coordinate version: exp(-w_i^2 / (2 K^2 nu1))."""
    if not (math.isfinite(w_i) and w_i >= 0):
        raise ValueError(f"threshold must be nonnegative and finite, got {w_i}")
    return math.exp(-(w_i**2) / (2.0 * params.K**2 * params.nu1))


def size_bias_constants(K: float, mu, sigma) -> SizeBiasBoundParams:
    """Constants for the size-bias bound from coupling bound K and moments.

    K1 = (2K / min sigma) * ||mu/sigma||_2 and K2 = K / (2 min sigma), with
    the quotient mu/sigma taken coordinatewise.
    """
    if not (K > 0 and math.isfinite(K)):
        raise ValueError(f"K must be positive and finite, got {K}")
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    sg_arr = np.atleast_1d(np.asarray(sigma, dtype=float))
    if mu_arr.shape != sg_arr.shape or mu_arr.ndim != 1:
        raise ValueError("mu and sigma must be vectors of equal length")
    if (mu_arr <= 0).any() or (sg_arr <= 0).any():
        raise ValueError("all coordinates of mu and sigma must be positive")
    sigma_min = float(sg_arr.min())
    ratio = mu_arr / sg_arr
    k1 = (2.0 * K / sigma_min) * float(np.linalg.norm(ratio))
    k2 = K / (2.0 * sigma_min)
    return SizeBiasBoundParams(K1=k1, K2=k2)


def size_bias_tail_bound(t, params: SizeBiasBoundParams) -> float:
    """exp(-||t||^2 / (2 (K1 + K2 ||t||))); equals 1 at t = 0.

    Bounds P((W - mu)/sigma >= t coordinatewise) for nonnegative W with a
    size-bias coupling bounded by the K behind params.
    """
    arr = _nonnegative_vector(t)
    norm = float(np.linalg.norm(arr))
    exponent = -(norm**2) / (2.0 * (params.K1 + params.K2 * norm))
    return math.exp(exponent)
