"""Validation engine: exact enumeration, Monte Carlo tails, identity checks.

The falsifiable claim behind every analytic bound here is dominance: at each
threshold the bound must be at least the true tail probability.
:func:`dominance_report` operationalizes that claim against either an exact
enumeration (small instances) or a seeded Monte Carlo estimate with
Clopper-Pearson intervals (moderate instances).  Coupling identities are
checked by exact conditional expectations over the full underlying
configuration space, which is stronger than the conditional-on-W form they
imply.

Monte Carlo runs are chunked: chunk c draws from a child seed derived by a
stable hash of (root seed, c), and chunk results merge in index order, so
parallel and serial runs produce identical output.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats as _sps

from .dips import DipsArray, lambda_dips, remainder_r1
from .errors import ResourceLimitError
from .patterns import Pattern, _reorder_batch, pattern_count_batch, pattern_mean
from .report import ExchangeabilityReport, IdentityReport, TailFragment, TailReport
from .ustat import FiniteDistribution, Kernel, _w_batch, lambda_matrix_u

MC_CHUNK = 16384
_PERMUTATION_GUARD = 5_040_000  # 10!
_PRODUCT_GUARD = 10**7
_EXACT_DOMINANCE_SLACK = 1e-12


def child_seed(root_seed: int, index: int) -> int:
    """Stable child seed for chunk ``index`` of a run rooted at ``root_seed``."""
    digest = hashlib.sha256(f"{root_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:16], "big")


def clopper_pearson(successes: int, trials: int, confidence: float):
    """Two-sided exact binomial confidence interval."""
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    if not 0.5 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0.5, 1), got {confidence}")
    alpha = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(
        _sps.beta.ppf(alpha / 2.0, successes, trials - successes + 1)
    )
    hi = 1.0 if successes == trials else float(
        _sps.beta.ppf(1.0 - alpha / 2.0, successes + 1, trials - successes)
    )
    return lo, hi


def _chunk_sizes(n_samples: int, chunk: int = MC_CHUNK):
    full, rest = divmod(n_samples, chunk)
    return [chunk] * full + ([rest] if rest else [])


def empirical_tail(sample_fn, thresholds, n_samples: int, confidence: float,
                   seed: int, threads: int = 1) -> TailFragment:
    """Monte Carlo upper-tail estimates with Clopper-Pearson intervals.

    Args:
      sample_fn: callable (seed, size) -> array of statistic values; must be
        a pure function of its seed so chunked runs are reproducible.
      thresholds: strictly increasing grid; the estimate at t is the
        fraction of samples >= t.
      n_samples: total draws (>= 100), split into fixed-size chunks.
      confidence: two-sided interval level in (0.5, 1).
      seed: root seed; chunk c uses child_seed(seed, c).
      threads: worker threads; results are identical for any thread count.
    """
    grid = np.asarray(thresholds, dtype=float)
    if grid.size == 0:
        raise ValueError("empty threshold grid")
    if n_samples < 100:
        raise ValueError(f"need at least 100 samples, got {n_samples}")
    sizes = _chunk_sizes(n_samples)

    def run_chunk(c: int) -> np.ndarray:
        values = np.asarray(sample_fn(child_seed(seed, c), sizes[c]), dtype=float)
        if values.shape != (sizes[c],):
            raise ValueError("sample_fn returned the wrong number of draws")
        return (values[:, None] >= grid[None, :]).sum(axis=0)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts_list = list(pool.map(run_chunk, range(len(sizes))))
    else:
        counts_list = [run_chunk(c) for c in range(len(sizes))]
    counts = np.sum(counts_list, axis=0)

    tail = counts / n_samples
    ci = np.array([
        clopper_pearson(int(c), n_samples, confidence) for c in counts
    ])
    return TailFragment(grid, tail, ci[:, 0], ci[:, 1], n_samples, "monte-carlo")


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------

def permutation_batches(n: int, chunk: int = 100_000):
    """Yield all permutations of range(n) as (B, n) arrays, lexicographically."""
    total = math.factorial(n)
    if total > _PERMUTATION_GUARD:
        raise ResourceLimitError(
            f"{n}! = {total} permutations exceeds the {_PERMUTATION_GUARD} guard"
        )
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def product_batches(dist: FiniteDistribution, n: int, chunk: int = 100_000):
    """Yield ((B, n) atom-value arrays, (B,) probabilities) covering atoms^n."""
    k = dist.n_atoms
    total = k**n
    if total > _PRODUCT_GUARD:
        raise ResourceLimitError(
            f"{k}^{n} = {total} configurations exceeds the {_PRODUCT_GUARD} guard"
        )
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (ids[:, None] // powers[None, :]) % k
        weights = dist.probabilities[digits].prod(axis=1)
        yield dist.atoms[digits], weights


def exact_tail_from_values(values, probabilities, thresholds) -> TailFragment:
    """Exact upper-tail probabilities of a fully enumerated distribution."""
    vals = np.asarray(values, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"support probabilities sum to {total!r}, not 1")
    grid = np.asarray(thresholds, dtype=float)
    if grid.size == 0:
        raise ValueError("empty threshold grid")
    order = np.argsort(vals)
    sorted_vals = vals[order]
    suffix = np.concatenate([np.cumsum(probs[order][::-1])[::-1], [0.0]])
    idx = np.searchsorted(sorted_vals, grid, side="left")
    tail = np.clip(suffix[idx], 0.0, 1.0)
    return TailFragment(grid, tail, tail, tail, vals.size, "exact")


def exact_tail_over_permutations(stat_batch_fn, n: int, thresholds) -> TailFragment:
    """Exact tail of a permutation statistic by full enumeration of S_n."""
    chunks = [np.asarray(stat_batch_fn(perms), dtype=float)
              for perms in permutation_batches(n)]
    values = np.concatenate(chunks)
    probs = np.full(values.size, 1.0 / values.size)
    return exact_tail_from_values(values, probs, thresholds)


def exact_tail_over_product(stat_batch_fn, dist: FiniteDistribution, n: int,
                            thresholds) -> TailFragment:
    """Exact tail of a statistic of n i.i.d. finite-support draws."""
    values, probs = [], []
    for x, w in product_batches(dist, n):
        values.append(np.asarray(stat_batch_fn(x), dtype=float))
        probs.append(w)
    return exact_tail_from_values(
        np.concatenate(values), np.concatenate(probs), thresholds
    )


# ---------------------------------------------------------------------------
# dominance
# ---------------------------------------------------------------------------

def dominance_report(bound_fn, fragment: TailFragment, metadata: dict | None = None,
                     exact_slack: float = _EXACT_DOMINANCE_SLACK) -> TailReport:
    """Merge an analytic bound with a tail fragment and flag violations.

    Monte Carlo rows are violations when the lower confidence limit exceeds
    the bound, so a flag is statistically meaningful at the configured
    confidence; exact rows are violations when the exact tail exceeds the
    bound beyond fp slack.  Monte Carlo rows whose estimate is exactly zero
    are marked uninformative: they cannot witness a violation.
    """
    grid = fragment.thresholds
    bound = np.array([float(bound_fn(float(t))) for t in grid])
    if fragment.method == "exact":
        flags = fragment.tail > bound + exact_slack
        uninformative = np.zeros(grid.size, dtype=bool)
    else:
        flags = fragment.ci_low > bound
        uninformative = fragment.tail == 0.0
    return TailReport(
        thresholds=grid,
        analytic_bound=bound,
        empirical_tail=fragment.tail,
        ci_low=fragment.ci_low,
        ci_high=fragment.ci_high,
        sample_count=fragment.sample_count,
        method=fragment.method,
        violations=[float(t) for t in grid[flags]],
        uninformative=uninformative,
        metadata=metadata or {},
    )


# ---------------------------------------------------------------------------
# coupling identity checks
# ---------------------------------------------------------------------------

def ustat_linearity_residual(kernel: Kernel, dist: FiniteDistribution,
                             n: int) -> IdentityReport:
    """Worst-case residual of E(W'|X) - (I - Lambda) W over all configurations.

    Conditions on the full sample X (not just W), averaging over the uniform
    replacement index and the independent replacement value exactly.
    """
    k_atoms = dist.n_atoms
    space = k_atoms**n
    work = space * n * k_atoms
    if work > _PRODUCT_GUARD:
        raise ResourceLimitError(
            f"exact conditioning needs {work} evaluations, beyond the "
            f"{_PRODUCT_GUARD} guard"
        )
    d = kernel.arity
    lam = lambda_matrix_u(d, n).entries
    shrink = np.eye(d) - lam
    worst = 0.0
    for x, _ in product_batches(dist, n):
        w = _w_batch(x, kernel, dist)
        acc = np.zeros_like(w)
        for i in range(n):
            for a_idx in range(k_atoms):
                p = float(dist.probabilities[a_idx])
                if p == 0.0:
                    continue
                x2 = x.copy()
                x2[:, i] = dist.atoms[a_idx]
                acc += p * _w_batch(x2, kernel, dist)
        cond_mean = acc / n
        residual = np.linalg.norm(cond_mean - w @ shrink.T, axis=1)
        worst = max(worst, float(residual.max()))
    return IdentityReport(
        max_residual=worst,
        sample_space_size=space,
        metadata={"family": "ustat", "n": n, "d": d},
    )


def dips_linearity_residual(array: DipsArray) -> IdentityReport:
    """Worst-case residual of E(V'|pi) - (I - Lambda) V - (R1, 0, 0) over S_n.

    Averages over all transposition pairs for every permutation; bounded to
    n <= 6 so the full conditional expectation stays exact and fast.
    """
    n = array.n
    if n > 6:
        raise ResourceLimitError(
            f"exact conditioning over S_n x pairs is limited to n <= 6, got {n}"
        )
    lam = lambda_dips(n).entries
    shrink = np.eye(3) - lam
    pos = np.arange(n)[None, :]
    worst = 0.0
    pairs = list(itertools.combinations(range(n), 2))
    for perms in permutation_batches(n):
        v1 = array.v1_batch(perms)
        v2 = np.sum(array.a2_at(pos, perms), axis=1)
        v3 = np.sum(array.a3_at(pos, perms), axis=1)
        v = np.column_stack([v1, v2, v3])
        acc = np.zeros_like(v)
        for i, j in pairs:
            swapped = perms.copy()
            swapped[:, [i, j]] = perms[:, [j, i]]
            s1 = array.v1_batch(swapped)
            s2 = np.sum(array.a2_at(pos, swapped), axis=1)
            s3 = np.sum(array.a3_at(pos, swapped), axis=1)
            acc += np.column_stack([s1, s2, s3])
        cond_mean = acc / len(pairs)
        r1 = np.array([remainder_r1(float(x), n) for x in v1])
        pred = v @ shrink.T
        pred[:, 0] += r1
        residual = np.linalg.norm(cond_mean - pred, axis=1)
        worst = max(worst, float(residual.max()))
    return IdentityReport(
        max_residual=worst,
        sample_space_size=math.factorial(n) * len(pairs),
        metadata={"family": "dips", "n": n},
    )


def linearity_residual(pair_model: str, **params) -> IdentityReport:
    """Dispatch the exact linearity check by statistic family."""
    if pair_model == "ustat":
        return ustat_linearity_residual(
            params["kernel"], params["dist"], params["n"]
        )
    if pair_model == "dips":
        return dips_linearity_residual(params["array"])
    raise ValueError(f"unknown pair model {pair_model!r}")


# ---------------------------------------------------------------------------
# exchangeability
# ---------------------------------------------------------------------------

def exchangeability_check_mc(draw_pairs, f, n_samples: int, seed: int) -> ExchangeabilityReport:
    """Two-sample Kolmogorov-Smirnov check that f(W, W') matches f(W', W).

    ``draw_pairs`` is a callable (seed, size) -> (w, w_prime) batches and
    ``f`` maps two batches to a vector of reals.
    """
    w, w_prime = draw_pairs(child_seed(seed, 0), n_samples)
    forward = np.asarray(f(w, w_prime), dtype=float)
    backward = np.asarray(f(w_prime, w), dtype=float)
    result = _sps.ks_2samp(forward, backward, method="asymp")
    return ExchangeabilityReport(
        distance=float(result.statistic),
        distance_type="kolmogorov-smirnov",
        method="monte-carlo",
        sample_count=n_samples,
        p_value=float(result.pvalue),
    )


def _tv_distance(dist_a: dict, dist_b: dict) -> float:
    keys = set(dist_a) | set(dist_b)
    return 0.5 * sum(abs(dist_a.get(k, 0.0) - dist_b.get(k, 0.0)) for k in keys)


def _accumulate(dist: dict, values: np.ndarray, weights: np.ndarray) -> None:
    for v, w in zip(values, weights):
        key = round(float(v), 12)
        dist[key] = dist.get(key, 0.0) + float(w)


def ustat_exchangeability_exact(kernel: Kernel, dist: FiniteDistribution, n: int,
                                f) -> ExchangeabilityReport:
    """Exact total-variation distance between f(W, W') and f(W', W).

    Enumerates every (sample, replacement index, replacement value) triple;
    the distance must vanish for an exchangeable coupling.
    """
    k_atoms = dist.n_atoms
    space = k_atoms**n * n * k_atoms
    if space > _PRODUCT_GUARD:
        raise ResourceLimitError(
            f"exact joint enumeration needs {space} points, beyond the "
            f"{_PRODUCT_GUARD} guard"
        )
    forward: dict = {}
    backward: dict = {}
    for x, base_w in product_batches(dist, n):
        w = _w_batch(x, kernel, dist)
        for i in range(n):
            for a_idx in range(k_atoms):
                p = float(dist.probabilities[a_idx])
                if p == 0.0:
                    continue
                x2 = x.copy()
                x2[:, i] = dist.atoms[a_idx]
                w2 = _w_batch(x2, kernel, dist)
                weight = base_w * (p / n)
                _accumulate(forward, np.asarray(f(w, w2), dtype=float), weight)
                _accumulate(backward, np.asarray(f(w2, w), dtype=float), weight)
    return ExchangeabilityReport(
        distance=_tv_distance(forward, backward),
        distance_type="total-variation",
        method="exact",
        sample_count=space,
    )


def dips_exchangeability_exact(array: DipsArray, f) -> ExchangeabilityReport:
    """Exact total-variation distance for the transposition coupling."""
    n = array.n
    if n > 6:
        raise ResourceLimitError(
            f"exact joint enumeration is limited to n <= 6, got {n}"
        )
    pairs = list(itertools.combinations(range(n), 2))
    pos = np.arange(n)[None, :]
    forward: dict = {}
    backward: dict = {}

    def v_all(perms):
        return np.column_stack([
            array.v1_batch(perms),
            np.sum(array.a2_at(pos, perms), axis=1),
            np.sum(array.a3_at(pos, perms), axis=1),
        ])

    for perms in permutation_batches(n):
        v = v_all(perms)
        weight = np.full(perms.shape[0], 1.0 / (math.factorial(n) * len(pairs)))
        for i, j in pairs:
            swapped = perms.copy()
            swapped[:, [i, j]] = perms[:, [j, i]]
            v2 = v_all(swapped)
            _accumulate(forward, np.asarray(f(v, v2), dtype=float), weight)
            _accumulate(backward, np.asarray(f(v2, v), dtype=float), weight)
    return ExchangeabilityReport(
        distance=_tv_distance(forward, backward),
        distance_type="total-variation",
        method="exact",
        sample_count=math.factorial(n) * len(pairs),
    )


def exchangeability_check(pair_model: str, f, **params) -> ExchangeabilityReport:
    """Dispatch the exact exchangeability check by statistic family."""
    if pair_model == "ustat":
        return ustat_exchangeability_exact(
            params["kernel"], params["dist"], params["n"], f
        )
    if pair_model == "dips":
        return dips_exchangeability_exact(params["array"], f)
    raise ValueError(f"unknown pair model {pair_model!r}")


# ---------------------------------------------------------------------------
# size-bias identity
# ---------------------------------------------------------------------------

def _size_bias_test_functions():
    return {
        "one": lambda w: np.ones(w.shape[0]),
        "w1": lambda w: w[:, 0],
        "w2": lambda w: w[:, 1],
        "w1*w2": lambda w: w[:, 0] * w[:, 1],
        "exp(0.1(w1+w2))": lambda w: np.exp(0.1 * (w[:, 0] + w[:, 1])),
    }


def pattern_size_bias_identity(n: int, pat1: Pattern, pat2: Pattern,
                               direction: int) -> IdentityReport:
    """Exhaustive check of E(W_i f(W)) = mu_i E(f(W^i)) over all (pi, beta).

    Runs the defining size-bias identity for the window-reordering coupling
    against a fixed battery of test functions; also reports how far the
    empirical mean of W_i is from n/m!.
    """
    if math.factorial(n) * n > _PRODUCT_GUARD:
        raise ResourceLimitError(f"n! * n exceeds the guard at n = {n}")
    if direction not in (1, 2):
        raise ValueError(f"direction must be 1 or 2, got {direction}")
    target = (pat1, pat2)[direction - 1]
    tests = _size_bias_test_functions()
    mu = pattern_mean(n, pat1.m)

    lhs = {name: 0.0 for name in tests}
    rhs = {name: 0.0 for name in tests}
    mean_wi = 0.0
    total_perms = math.factorial(n)
    for perms in permutation_batches(n):
        w = np.column_stack([
            pattern_count_batch(perms, pat1),
            pattern_count_batch(perms, pat2),
        ]).astype(float)
        w_i = w[:, direction - 1]
        mean_wi += float(w_i.sum()) / total_perms
        for name, fn in tests.items():
            lhs[name] += float((w_i * fn(w)).sum()) / total_perms
        for beta in range(n):
            reordered = _reorder_batch(perms, np.full(perms.shape[0], beta), target)
            wb = np.column_stack([
                pattern_count_batch(reordered, pat1),
                pattern_count_batch(reordered, pat2),
            ]).astype(float)
            for name, fn in tests.items():
                rhs[name] += float(fn(wb).sum()) / (total_perms * n)
    residual = max(abs(lhs[name] - mu * rhs[name]) for name in tests)
    return IdentityReport(
        max_residual=residual,
        sample_space_size=total_perms * n,
        metadata={
            "family": "pattern",
            "n": n,
            "m": pat1.m,
            "direction": direction,
            "mean_residual": abs(mean_wi - mu),
            "per_function": {
                name: abs(lhs[name] - mu * rhs[name]) for name in tests
            },
        },
    )


# ---------------------------------------------------------------------------
# threshold grids
# ---------------------------------------------------------------------------

def default_thresholds(scale: float, count: int = 40) -> np.ndarray:
    """Evenly spaced grid from 0 to ``scale`` (a 5-sigma-style heuristic)."""
    if scale <= 0 or not math.isfinite(scale):
        raise ValueError(f"scale must be positive and finite, got {scale}")
    if count < 2:
        raise ValueError("need at least two grid points")
    return np.linspace(0.0, scale, count)
