"""Per-family wiring: statistic samplers, bounds, constants, exact tails.

Each builder returns a :class:`StatisticFamily` bundling everything the CLI
and the validation harness need to run one experiment: the analytic bound
for the centered, scaled statistic; a stateless batch sampler keyed by seed;
an exact-tail routine where desk-scale enumeration is possible; the audit
constants; and a default threshold scale (five times the sub-Gaussian scale
of the bound).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import exch_tail_bound, ExchBoundParams
from .dips import (
    DipsArray,
    GraphOverlapArray,
    MwwDipsArray,
    dips_tail_bound,
    eta_bn,
    lambda_dips,
    phi_bn,
)
from .errors import ResourceLimitError
from .harness import exact_tail_from_values, exact_tail_over_permutations, exact_tail_over_product
from .linalg import nu1, sigma1_lower_bound, smallest_singular_value
from .patterns import (
    Pattern,
    pattern_bound_params,
    pattern_bound_sharp_params,
    pattern_count_batch,
    pattern_mean,
    pattern_variance_exact,
)
from .report import TailFragment
from .ustat import (
    FiniteDistribution,
    Kernel,
    _w_top_batch,
    check_kernel_contract,
    gamma_d,
    kappa_d,
    ustat_tail_bound,
)
from .bounds import size_bias_tail_bound

_COMBINATION_GUARD = 10**7


@dataclass
class StatisticFamily:
    """One runnable experiment: statistic, bound, constants, enumerators."""

    name: str
    bound_fn: Callable[[float], float]
    constants: dict
    default_scale: float
    sample: Callable[[int, int], np.ndarray] | None = None
    exact_fragment: Callable[[np.ndarray], TailFragment] | None = None
    extra_curves: dict = field(default_factory=dict)


def _maybe_negate(values: np.ndarray, side: str) -> np.ndarray:
    if side == "upper":
        return values
    if side == "lower":
        return -values
    raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")


def make_ustat_family(kernel: Kernel, dist, n: int, side: str = "upper") -> StatisticFamily:
    """Top-coordinate statistic of the kernel's embedding, with its n-free bound."""
    b = kernel.sup_bound
    d = kernel.arity
    gamma = gamma_d(d)
    kappa = kappa_d(d)
    # Boundedness and symmetry are hypotheses of the tail bound; reject
    # kernel/distribution combinations that visibly break them.
    check_kernel_contract(kernel, dist, np.random.default_rng(0))

    def bound_fn(t: float) -> float:
        return ustat_tail_bound(t, b, d)

    def sample(seed: int, size: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        x = dist.sample(rng, (size, n))
        return _maybe_negate(_w_top_batch(x, kernel), side)

    exact = None
    if isinstance(dist, FiniteDistribution):
        def exact(thresholds):
            return exact_tail_over_product(
                lambda x: _maybe_negate(_w_top_batch(x, kernel), side),
                dist, n, thresholds,
            )

    constants = {
        "family": "ustat", "d": d, "n": n, "b": b,
        "gamma_d": gamma, "kappa_d": kappa,
        "exponent_scale": 8.0 * b**2 * gamma**2 / math.sqrt(kappa),
    }
    return StatisticFamily(
        name="ustat",
        bound_fn=bound_fn,
        constants=constants,
        default_scale=5.0 * 2.0 * b * gamma / kappa**0.25,
        sample=sample,
        exact_fragment=exact,
    )


def _dips_constants(n: int, b: float) -> dict:
    lam = lambda_dips(n)
    return {
        "n": n, "b": b,
        "eta_bn": eta_bn(b, n),
        "phi_bn": phi_bn(b, n),
        "nu1": nu1(lam),
        "sigma1": smallest_singular_value(lam),
        "sigma1_lower_bound": sigma1_lower_bound(lam),
    }


def make_dips_family(array: DipsArray, b: float | None = None,
                     side: str = "upper") -> StatisticFamily:
    """Centered W1 = n^(-3/2) (V1 - E V1) of a coefficient array."""
    n = array.n
    b_eff = array.sup_bound if b is None else float(b)
    mean = array.mean_v1()
    scale = n**1.5

    def statistic(perms: np.ndarray) -> np.ndarray:
        return _maybe_negate((array.v1_batch(perms) - mean) / scale, side)

    def sample(seed: int, size: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
        return statistic(perms)

    def exact(thresholds):
        return exact_tail_over_permutations(statistic, n, thresholds)

    constants = {"family": "dips", "mean_v1": mean, **_dips_constants(n, b_eff)}
    return StatisticFamily(
        name="dips",
        bound_fn=lambda t: dips_tail_bound(t, b_eff, n),
        constants=constants,
        default_scale=5.0 * math.sqrt(phi_bn(b_eff, n)),
        sample=sample,
        exact_fragment=exact,
    )


def make_mww_family(n1: int, n2: int, side: str = "upper") -> StatisticFamily:
    """Centered rank-sum statistic W1 with the b = 1/2 bound."""
    array = MwwDipsArray(n1, n2)
    n = array.n
    family = make_dips_family(array, b=0.5, side=side)
    family.name = "mww"
    family.constants["family"] = "mww"
    family.constants.update({"n1": n1, "n2": n2})

    def exact(thresholds):
        total = math.comb(n, n2)
        if total > _COMBINATION_GUARD:
            raise ResourceLimitError(
                f"C({n},{n2}) = {total} label placements exceeds the "
                f"{_COMBINATION_GUARD} guard"
            )
        # V1 depends on the permutation only through the y-block rank sum,
        # so enumerating rank placements covers the full distribution.
        s_y = np.fromiter(
            (sum(c) for c in itertools.combinations(range(n), n2)),
            dtype=float, count=total,
        )
        v1 = s_y - n2 * (n2 - 1) / 2.0 - n1 * n2 / 2.0
        values = _maybe_negate(v1 / n**1.5, side)
        return exact_tail_from_values(
            values, np.full(total, 1.0 / total), thresholds
        )

    family.exact_fragment = exact
    return family


def make_graph_family(edges1, edges2, n: int, b: float = 2.0,
                      side: str = "upper") -> StatisticFamily:
    """Centered graph-overlap statistic with the centered-entry bound b = 2."""
    array = GraphOverlapArray(edges1, edges2, n)
    family = make_dips_family(array, b=b, side=side)
    family.name = "graph"
    family.constants["family"] = "graph"
    family.constants.update({
        "edges1": int(array.edges1.shape[0]),
        "edges2": int(array.edges2.shape[0]),
        "mean_overlap": array.mean_v1(),
    })
    return family


def make_pattern_family(n: int, pat1: Pattern, pat2: Pattern,
                        variant: str = "printed") -> StatisticFamily:
    """Coordinatewise tail of the standardized pattern-count pair.

    The statistic reported per draw is min over the two standardized counts,
    so the upper tail at t is exactly the probability that both standardized
    counts reach t.  Standardization uses the enumeration-exact variances so
    the sampled event is the one the bound covers.  Only the upper tail is
    bounded by the size-bias result.
    """
    m = pat1.m
    mu = pattern_mean(n, m)
    sigma = np.array([
        math.sqrt(pattern_variance_exact(n, pat1)),
        math.sqrt(pattern_variance_exact(n, pat2)),
    ])
    printed = pattern_bound_params(n, m)
    sharp = pattern_bound_sharp_params(n, pat1, pat2)
    params = {"printed": printed, "sharp": sharp}
    if variant not in params:
        raise ValueError(f"variant must be 'printed' or 'sharp', got {variant!r}")

    def bound_with(p):
        return lambda t: size_bias_tail_bound(np.array([t, t]), p)

    def statistic(perms: np.ndarray) -> np.ndarray:
        w = np.column_stack([
            pattern_count_batch(perms, pat1),
            pattern_count_batch(perms, pat2),
        ]).astype(float)
        return ((w - mu) / sigma).min(axis=1)

    def sample(seed: int, size: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
        return statistic(perms)

    def exact(thresholds):
        return exact_tail_over_permutations(statistic, n, thresholds)

    chosen = params[variant]
    other = "sharp" if variant == "printed" else "printed"
    constants = {
        "family": "pattern", "n": n, "m": m,
        "tau1": " ".join(str(v) for v in pat1.one_based),
        "tau2": " ".join(str(v) for v in pat2.one_based),
        "mu": mu, "sigma1": float(sigma[0]), "sigma2": float(sigma[1]),
        "K1_printed": printed.K1, "K2_printed": printed.K2,
        "K1_sharp": sharp.K1, "K2_sharp": sharp.K2,
        "variant": variant,
    }
    return StatisticFamily(
        name="pattern",
        bound_fn=bound_with(chosen),
        constants=constants,
        default_scale=5.0 * math.sqrt(chosen.K1 / 2.0),
        sample=sample,
        exact_fragment=exact,
        extra_curves={f"bound_{other}": bound_with(params[other])},
    )


def make_generic_family(K: float, nu1_value: float, dim: int = 1) -> StatisticFamily:
    """Bound-only family for user-supplied exchangeable-pair constants."""
    params = ExchBoundParams(K=K, nu1=nu1_value, dim=dim)

    def bound_fn(t: float) -> float:
        return exch_tail_bound([t], params)

    constants = {"family": "generic", "K": K, "nu1": nu1_value, "dim": dim}
    return StatisticFamily(
        name="generic",
        bound_fn=bound_fn,
        constants=constants,
        default_scale=5.0 * K * math.sqrt(nu1_value),
    )
