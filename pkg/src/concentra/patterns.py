"""Circular permutation-pattern counts and their window-reordering coupling.

A pattern tau of length m occurs at window start alpha when the m
consecutive values of pi (indices wrapping modulo n) sit in the same
relative order as tau.  The pair (W1, W2) of occurrence counts for two
patterns of a common length admits a size-bias coupling in either direction:
reorder the values inside one uniformly chosen window to realize the
pattern, leaving everything else fixed.  At most 2m - 1 windows can change,
which bounds the coupling and feeds the size-bias tail bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import InitVar, dataclass
from typing import Iterator

import numpy as np

from .bounds import SizeBiasBoundParams, size_bias_constants, size_bias_tail_bound
from .errors import ResourceLimitError

_STREAM_CHUNK = 512


@dataclass(frozen=True)
class Pattern:
    """A pattern: a permutation of 1..m stored 0-based."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.intp)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("a pattern needs at least two entries")
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ValueError(f"pattern values must be a bijection on 1..{arr.size}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def one_based(self) -> tuple[int, ...]:
        return tuple(int(v) + 1 for v in self.values)

    @classmethod
    def from_text(cls, text: str) -> "Pattern":
        """Parse a one-line 1-based pattern such as '1 3 2'."""
        try:
            vals = [int(tok) for tok in text.replace(",", " ").split()]
        except ValueError:
            raise ValueError(f"pattern entries must be integers: {text!r}") from None
        return cls(np.asarray(vals, dtype=np.intp) - 1)

    @classmethod
    def identity(cls, m: int) -> "Pattern":
        return cls(np.arange(m))

    def inverse_positions(self) -> np.ndarray:
        """Window offsets listed in increasing pattern-rank order."""
        return np.argsort(self.values)


def _window_positions(n: int, m: int, circular: bool) -> np.ndarray:
    """(n_windows, m) matrix of sample positions per window start."""
    starts = np.arange(n if circular else n - m + 1)[:, None]
    offsets = np.arange(m)[None, :]
    pos = starts + offsets
    return pos % n if circular else pos


def pattern_count_batch(perms: np.ndarray, pat: Pattern,
                        circular: bool = True) -> np.ndarray:
    """Occurrence counts of the pattern for a (B, n) batch of permutations."""
    n = perms.shape[1]
    if n < pat.m:
        raise ValueError(f"need n >= m, got n={n}, m={pat.m}")
    pos = _window_positions(n, pat.m, circular)[:, pat.inverse_positions()]
    vals = perms[:, pos]
    rising = np.all(np.diff(vals, axis=-1) > 0, axis=-1)
    return rising.sum(axis=1)


def pattern_count(pi, pat: Pattern, circular: bool = True) -> int:
    """Number of windows of pi whose values realize the pattern's order.

    Windows wrap modulo n by default; ``circular=False`` restricts to the
    n - m + 1 contiguous windows, which is outside the scope of the moment
    formulas below.
    """
    pi = np.asarray(pi, dtype=np.intp)
    n = pi.size
    if not np.array_equal(np.sort(pi), np.arange(n)):
        raise ValueError("pi must be a permutation of 0..n-1")
    return int(pattern_count_batch(pi[None, :], pat, circular)[0])


def pattern_mean(n: int, m: int) -> float:
    """Mean occurrence count n / m! under a uniform permutation."""
    if m < 2 or n < m:
        raise ValueError(f"need n >= m >= 2, got n={n}, m={m}")
    return n / math.factorial(m)


def i_k(tau: Pattern, k: int) -> int:
    """Indicator that the first and last m-k pattern entries share an order.

    Equals 1 when tau(1..m-k) and tau(k+1..m) are in the same relative
    order: the overlap compatibility of two windows at shift k.
    """
    m = tau.m
    if not 1 <= k <= m - 1:
        raise ValueError(f"k must be in 1..{m - 1}, got {k}")
    front = tau.values[: m - k]
    back = tau.values[k:]
    return int(np.array_equal(np.argsort(front), np.argsort(back)))


def pattern_variance(n: int, tau: Pattern) -> float:
    """Variance formula for the occurrence count under a uniform permutation.

    n * (1/m! (1 - (2m-1)/m!) + 2 sum_{k=1}^{m-1} I_k(tau) / (m+k)!), from
    the per-window variance plus overlapping-window covariances; disjoint
    windows of a uniform permutation have independent relative orders.

    The overlap term charges each compatible shift a single joint ordering,
    which is exact for monotone patterns (and every m = 2 pattern) and a
    lower bound otherwise; see :func:`pattern_variance_exact` for the count
    that matches enumeration for every pattern.
    """
    m = tau.m
    if n < m:
        raise ValueError(f"need n >= m, got n={n}, m={m}")
    mf = math.factorial(m)
    acc = (1.0 / mf) * (1.0 - (2.0 * m - 1.0) / mf)
    acc += 2.0 * sum(i_k(tau, k) / math.factorial(m + k) for k in range(1, m))
    return n * acc


def joint_orderings(tau: Pattern, k: int) -> int:
    """Orderings of m+k values realizing the pattern at both shift-k windows.

    Zero exactly when I_k(tau) is zero; equal to I_k(tau) for monotone
    patterns, larger whenever the combined order constraints leave slack.
    """
    m = tau.m
    if not 1 <= k <= m - 1:
        raise ValueError(f"k must be in 1..{m - 1}, got {k}")
    if m + k > 9:
        raise ResourceLimitError(f"joint enumeration needs (m+k)! orderings; m+k={m + k} is too large")
    inv = tau.inverse_positions()
    count = 0
    for ranks in itertools.permutations(range(m + k)):
        first = [ranks[inv[r]] for r in range(m)]
        second = [ranks[k + inv[r]] for r in range(m)]
        if all(first[r] < first[r + 1] for r in range(m - 1)) and \
                all(second[r] < second[r + 1] for r in range(m - 1)):
            count += 1
    return count


def pattern_variance_exact(n: int, tau: Pattern) -> float:
    """Variance of the occurrence count matching full enumeration.

    Same covariance decomposition as :func:`pattern_variance` but with the
    true joint-ordering count per overlap shift; requires n >= 2m - 1 so
    that windows at each shift overlap exactly once around the circle.
    """
    m = tau.m
    if n < 2 * m - 1:
        raise ValueError(f"need n >= 2m - 1 = {2 * m - 1}, got {n}")
    mf = math.factorial(m)
    acc = (1.0 / mf) * (1.0 - (2.0 * m - 1.0) / mf)
    acc += 2.0 * sum(
        joint_orderings(tau, k) / math.factorial(m + k) for k in range(1, m)
    )
    return n * acc


def size_bias_window_reorder(pi, pat: Pattern, beta: int) -> np.ndarray:
    """Reorder the values in the circular window starting at beta to realize pat.

    Positions outside the window keep their values; the window's value
    multiset is preserved, only its internal order changes.  Idempotent.
    """
    pi = np.asarray(pi, dtype=np.intp)
    n = pi.size
    if not 0 <= beta < n:
        raise ValueError(f"window start must be in 0..{n - 1}, got {beta}")
    return _reorder_batch(pi[None, :], np.array([beta]), pat)[0]


def _reorder_batch(perms: np.ndarray, beta: np.ndarray, pat: Pattern) -> np.ndarray:
    size, n = perms.shape
    m = pat.m
    if n < m:
        raise ValueError(f"need n >= m, got n={n}, m={m}")
    rows = np.arange(size)[:, None]
    pos = (beta[:, None] + np.arange(m)[None, :]) % n
    vals = perms[rows, pos]
    sorted_vals = np.take_along_axis(vals, np.argsort(vals, axis=1), axis=1)
    # Offset i of the window receives the value of rank tau(i+1).
    new_vals = sorted_vals[:, pat.values]
    out = perms.copy()
    out[rows, pos] = new_vals
    return out


def _counts_at_windows(perms: np.ndarray, alphas: np.ndarray, pat: Pattern) -> np.ndarray:
    """Occurrence counts restricted to the (B, A) window starts in alphas."""
    n = perms.shape[1]
    rows = np.arange(perms.shape[0])[:, None, None]
    pos = (alphas[:, :, None] + pat.inverse_positions()[None, None, :]) % n
    vals = perms[rows, pos]
    rising = np.all(np.diff(vals, axis=-1) > 0, axis=-1)
    return rising.sum(axis=1)


@dataclass(frozen=True)
class PatternPairSample:
    """One coupled draw: counts before and after one window reordering."""

    w: np.ndarray
    w_biased: np.ndarray
    direction: int
    window_start: int
    m: InitVar[int | None] = None

    def __post_init__(self, m):
        if m is not None:
            limit = 2 * m - 1
            if np.abs(self.w - self.w_biased).max() > limit:
                raise ValueError(
                    f"coupling moved a count by more than {limit}"
                )


class PatternPairSampler:
    """Seeded stream of size-bias coupled pattern-count pairs.

    Each draw takes a fresh uniform permutation and a uniform window start
    beta; the biased vector counts both patterns on the permutation with the
    beta window reordered to realize the direction pattern.  Counts are
    updated over the at most 2m - 1 affected windows when n is large enough
    for those windows to be distinct, otherwise recounted in full.
    """

    def __init__(self, n: int, pat1: Pattern, pat2: Pattern, direction: int,
                 seed: int, verify: bool = False):
        if pat1.m != pat2.m:
            raise ValueError(
                f"patterns must share a length, got {pat1.m} and {pat2.m}"
            )
        if n < pat1.m:
            raise ValueError(f"need n >= m, got n={n}, m={pat1.m}")
        if direction not in (1, 2):
            raise ValueError(f"direction must be 1 or 2, got {direction}")
        self.n = n
        self.patterns = (pat1, pat2)
        self.direction = direction
        self.verify = verify
        self.m = pat1.m
        self._rng = np.random.default_rng(seed)

    def draw_batch(self, size: int):
        """Draw ``size`` coupled pairs; returns (w, w_biased, beta)."""
        n, m = self.n, self.m
        rng = self._rng
        perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
        beta = rng.integers(0, n, size=size)
        target = self.patterns[self.direction - 1]
        reordered = _reorder_batch(perms, beta, target)

        w = np.column_stack(
            [pattern_count_batch(perms, pat) for pat in self.patterns]
        ).astype(float)
        if n >= 2 * m - 1:
            offsets = np.arange(-(m - 1), m)[None, :]
            alphas = (beta[:, None] + offsets) % n
            w_biased = w.copy()
            for col, pat in enumerate(self.patterns):
                before = _counts_at_windows(perms, alphas, pat)
                after = _counts_at_windows(reordered, alphas, pat)
                w_biased[:, col] += after - before
        else:
            w_biased = np.column_stack(
                [pattern_count_batch(reordered, pat) for pat in self.patterns]
            ).astype(float)
        if self.verify:
            full = np.column_stack(
                [pattern_count_batch(reordered, pat) for pat in self.patterns]
            ).astype(float)
            if not np.array_equal(w_biased, full):
                raise AssertionError("incremental recount disagrees with full recount")
        return w, w_biased, beta

    def __iter__(self) -> Iterator[PatternPairSample]:
        while True:
            w, w_biased, beta = self.draw_batch(_STREAM_CHUNK)
            for row in range(w.shape[0]):
                yield PatternPairSample(
                    w[row], w_biased[row], self.direction, int(beta[row]),
                    m=self.m,
                )


def pattern_pair_sampler(n: int, pat1: Pattern, pat2: Pattern, direction: int,
                         seed: int, verify: bool = False) -> PatternPairSampler:
    """Construct the window-reordering size-bias sampler (a seeded stream)."""
    return PatternPairSampler(n, pat1, pat2, direction, seed, verify=verify)


def _bound_denominator(m: int) -> int:
    """m! - 2m + 1, positive exactly when m >= 3."""
    return math.factorial(m) - 2 * m + 1


def pattern_bound_params(n: int, m: int) -> SizeBiasBoundParams:
    """Printed coupling constants from the worst-case variance lower bound.

    K1 = (8m - 4) m! / (m! - 2m + 1) and K2 = (2m - 1) m! /
    sqrt(2 n (m! - 2m + 1)); requires m >= 3, where the denominator is
    positive.
    """
    if m < 3:
        raise ValueError(
            f"the pattern-count bound needs m >= 3 (m! - 2m + 1 = "
            f"{_bound_denominator(m)} is not positive at m = {m}); counting "
            "and moments still support m = 2"
        )
    if n < m:
        raise ValueError(f"need n >= m, got n={n}, m={m}")
    mf = math.factorial(m)
    denom = _bound_denominator(m)
    k1 = (8.0 * m - 4.0) * mf / denom
    k2 = (2.0 * m - 1.0) * mf / math.sqrt(2.0 * n * denom)
    return SizeBiasBoundParams(K1=k1, K2=k2)


def pattern_bound(n: int, m: int, t) -> float:
    """Tail bound for the standardized count pair at coordinatewise level t.

    Uses the printed constants with coupling bound K = (2m - 1) sqrt(2) and
    the variance lower bound (n/m!)(1 - (2m-1)/m!); valid for any pattern
    pair of length m.
    """
    return size_bias_tail_bound(t, pattern_bound_params(n, m))


def pattern_bound_sharp_params(n: int, pat1: Pattern, pat2: Pattern) -> SizeBiasBoundParams:
    """Sharper constants using the exact per-pattern variances."""
    if pat1.m != pat2.m:
        raise ValueError("patterns must share a length")
    m = pat1.m
    if m < 3:
        raise ValueError("the pattern-count bound needs m >= 3")
    mu = pattern_mean(n, m)
    sigma = [math.sqrt(pattern_variance(n, p)) for p in (pat1, pat2)]
    coupling = (2.0 * m - 1.0) * math.sqrt(2.0)
    return size_bias_constants(coupling, [mu, mu], sigma)


def pattern_bound_sharp(n: int, pat1: Pattern, pat2: Pattern, t) -> float:
    """Tail bound with the exact variances plugged into the constants."""
    return size_bias_tail_bound(t, pattern_bound_sharp_params(n, pat1, pat2))
