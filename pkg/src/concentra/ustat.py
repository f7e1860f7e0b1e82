"""Complete non-degenerate U-statistics and their coordinate-replacement coupling.

A bounded symmetric kernel psi of arity d, evaluated over all size-d subsets
of an i.i.d. sample, is embedded in the vector W = (W_1, ..., W_d) with
W_i = sqrt(n) * U_i / C(n, i), where U_i sums the conditional projection
psi_i over size-i subsets.  Replacing one uniformly chosen coordinate of the
sample with an independent copy yields an exchangeable pair (W, W') whose
conditional mean is exactly (I - Lambda) W for the lower bidiagonal matrix
built by :func:`lambda_matrix_u`.  That structure powers an n-free tail bound
for W_d, evaluated by :func:`ustat_tail_bound`.

Conditional projections are computed exactly, which restricts the embedding
vector to finite-support sample distributions; sampling W_d alone also works
for continuous distributions.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import InitVar, dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import DegenerateKernelWarning, ResourceLimitError
from .linalg import SquareMatrix

_SUBSET_GUARD = 10**7
_AVERAGE_GUARD = 10**6
_STREAM_CHUNK = 512


# ---------------------------------------------------------------------------
# sample distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteDistribution:
    """Probability distribution with finitely many real atoms."""

    atoms: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_1d(np.asarray(self.atoms, dtype=float))
        probs = np.atleast_1d(np.asarray(self.probabilities, dtype=float))
        if atoms.ndim != 1 or atoms.size == 0:
            raise ValueError("need at least one atom")
        if probs.shape != atoms.shape:
            raise ValueError("atoms and probabilities must have equal length")
        if not np.isfinite(atoms).all():
            raise ValueError("atoms must be finite")
        if (probs < 0).any():
            raise ValueError("probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        atoms.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def uniform(cls, atoms) -> "FiniteDistribution":
        atoms = np.atleast_1d(np.asarray(atoms, dtype=float))
        return cls(atoms, np.full(atoms.size, 1.0 / atoms.size))

    @classmethod
    def rademacher(cls) -> "FiniteDistribution":
        return cls.uniform([-1.0, 1.0])

    @property
    def n_atoms(self) -> int:
        return self.atoms.size

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = rng.choice(self.n_atoms, size=size, p=self.probabilities)
        return self.atoms[idx]


@dataclass(frozen=True)
class ContinuousDistribution:
    """Named continuous sampler; usable for the top statistic, not the embedding."""

    name: str
    params: tuple

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.name == "uniform":
            lo, hi = self.params
            return rng.uniform(lo, hi, size=size)
        if self.name == "normal":
            mu, sd = self.params
            return rng.normal(mu, sd, size=size)
        raise ValueError(f"unknown continuous distribution {self.name!r}")


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """Bounded symmetric d-ary kernel.

    ``evaluate`` must be symmetric in its arguments, bounded by ``sup_bound``
    on the support of the sample distribution, and broadcast elementwise over
    numpy arrays.  Both contracts are spot-checked by
    :func:`check_kernel_contract` rather than enforced per call.
    """

    arity: int
    sup_bound: float
    evaluate: Callable[..., np.ndarray]
    name: str = ""

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"arity must be >= 1, got {self.arity}")
        if not (self.sup_bound > 0 and math.isfinite(self.sup_bound)):
            raise ValueError(f"sup_bound must be positive, got {self.sup_bound}")

    def __call__(self, *args):
        return self.evaluate(*args)


def _mean_pair(x, y):
    return 0.5 * (np.asarray(x, dtype=float) + np.asarray(y, dtype=float))


def _product(x, y):
    return np.asarray(x, dtype=float) * np.asarray(y, dtype=float)


def _sign_avg_d3(x, y, z):
    return (np.sign(x) + np.sign(y) + np.sign(z)) / 3.0


NAMED_KERNELS = {
    "mean-pair": lambda: Kernel(2, 1.0, _mean_pair, "mean-pair"),
    "product": lambda: Kernel(2, 1.0, _product, "product"),
    "sign-avg-d3": lambda: Kernel(3, 1.0, _sign_avg_d3, "sign-avg-d3"),
}


def kernel_by_name(name: str) -> Kernel:
    try:
        return NAMED_KERNELS[name]()
    except KeyError:
        raise ValueError(
            f"unknown kernel {name!r}; choose from {sorted(NAMED_KERNELS)}"
        ) from None


def tabulated_kernel(spec: dict, name: str = "tabulated") -> Kernel:
    """Kernel defined by a value table over atom tuples.

    ``spec`` carries ``arity``, ``atoms``, a flattened d-dimensional ``values``
    table indexed by atom positions, and the sup bound ``b``.  Inputs to the
    resulting kernel must be atoms (matched to 1e-9 absolute tolerance).
    """
    d = int(spec["arity"])
    atoms = np.asarray(spec["atoms"], dtype=float)
    b = float(spec["b"])
    if atoms.ndim != 1 or atoms.size == 0:
        raise ValueError("tabulated kernel needs a nonempty atom list")
    if np.unique(atoms).size != atoms.size:
        raise ValueError("tabulated kernel atoms must be distinct")
    table = np.asarray(spec["values"], dtype=float).reshape((atoms.size,) * d)
    if np.abs(table).max() > b * (1 + 1e-12):
        raise ValueError("table values exceed the declared bound b")
    if d <= 4:
        for perm in itertools.permutations(range(d)):
            if not np.allclose(table, table.transpose(perm), atol=1e-12):
                raise ValueError("table is not symmetric under argument permutation")
    order = np.argsort(atoms)
    sorted_atoms = atoms[order]

    def lookup(values):
        arr = np.asarray(values, dtype=float)
        pos = np.searchsorted(sorted_atoms, arr)
        pos = np.clip(pos, 0, atoms.size - 1)
        left = np.clip(pos - 1, 0, atoms.size - 1)
        pos = np.where(
            np.abs(sorted_atoms[left] - arr) < np.abs(sorted_atoms[pos] - arr),
            left,
            pos,
        )
        if np.abs(sorted_atoms[pos] - arr).max() > 1e-9:
            raise ValueError("tabulated kernel evaluated off its atom grid")
        return order[pos]

    def evaluate(*args):
        idx = tuple(lookup(a) for a in args)
        return table[idx]

    return Kernel(d, b, evaluate, name)


def load_kernel(source: str) -> Kernel:
    """Resolve a kernel from a registry name or a JSON table file path."""
    if source in NAMED_KERNELS:
        return kernel_by_name(source)
    with open(source) as fh:
        return tabulated_kernel(json.load(fh), name=source)


def check_kernel_contract(kernel: Kernel, dist: FiniteDistribution,
                          rng: np.random.Generator, n_points: int = 64) -> None:
    """Spot-check boundedness and symmetry of a kernel on sampled atom tuples."""
    d = kernel.arity
    pts = dist.sample(rng, (n_points, d))
    vals = np.asarray(kernel.evaluate(*(pts[:, i] for i in range(d))), dtype=float)
    if np.abs(vals).max() > kernel.sup_bound * (1 + 1e-9):
        raise ValueError(
            f"kernel exceeds its declared bound {kernel.sup_bound} on sampled atoms"
        )
    if d <= 4:
        for perm in itertools.permutations(range(d)):
            pvals = np.asarray(
                kernel.evaluate(*(pts[:, i] for i in perm)), dtype=float
            )
            if not np.allclose(vals, pvals, atol=1e-10):
                raise ValueError("kernel is not symmetric in its arguments")


# ---------------------------------------------------------------------------
# conditional projections and statistics
# ---------------------------------------------------------------------------

def sub_kernel(kernel: Kernel, dist: FiniteDistribution, k: int) -> Kernel:
    """k-ary kernel obtained by averaging the last d-k arguments over dist.

    Computed as an exact finite sum over atom combinations; the sup bound is
    inherited (an average of values bounded by b is bounded by b).
    """
    d = kernel.arity
    if not 1 <= k <= d:
        raise ValueError(f"k must be in 1..{d}, got {k}")
    if k == d:
        return kernel
    return _averaged_kernel(kernel, dist, k)


def _averaged_kernel(kernel: Kernel, dist: FiniteDistribution, k: int) -> Kernel:
    d = kernel.arity
    n_tail = d - k
    combos = dist.n_atoms**n_tail
    if combos > _AVERAGE_GUARD:
        raise ResourceLimitError(
            f"averaging over {combos} atom combinations exceeds the "
            f"{_AVERAGE_GUARD} guard"
        )
    tails = list(itertools.product(range(dist.n_atoms), repeat=n_tail))
    weights = [
        math.prod(float(dist.probabilities[i]) for i in tail) for tail in tails
    ]
    atom_tails = [tuple(float(dist.atoms[i]) for i in tail) for tail in tails]

    def evaluate(*args):
        total = 0.0
        for w, tail in zip(weights, atom_tails):
            if w == 0.0:
                continue
            total = total + w * kernel.evaluate(*args, *tail)
        return total

    return Kernel(k, kernel.sup_bound, evaluate, f"{kernel.name}|proj{k}")


def kernel_mean(kernel: Kernel, dist: FiniteDistribution) -> float:
    """Exact mean of the kernel under i.i.d. draws from dist."""
    one_ary = _averaged_kernel(kernel, dist, 1)
    vals = np.asarray(one_ary.evaluate(dist.atoms), dtype=float)
    return float(vals @ dist.probabilities)


def is_degenerate(kernel: Kernel, dist: FiniteDistribution, tol: float = 1e-12) -> bool:
    """True when the first conditional projection vanishes on every atom."""
    one_ary = _averaged_kernel(kernel, dist, 1)
    vals = np.asarray(one_ary.evaluate(dist.atoms), dtype=float)
    return bool(np.abs(vals).max() < tol)


def warn_if_degenerate(kernel: Kernel, dist: FiniteDistribution) -> bool:
    degenerate = is_degenerate(kernel, dist)
    if degenerate:
        warnings.warn(
            f"kernel {kernel.name or '<anonymous>'} is degenerate under the given "
            "distribution: its first conditional projection is identically zero",
            DegenerateKernelWarning,
            stacklevel=2,
        )
    return degenerate


def _subset_indices(n: int, k: int) -> np.ndarray:
    """All size-k index subsets of range(n) in lexicographic order, as (C, k)."""
    count = math.comb(n, k)
    if count > _SUBSET_GUARD:
        raise ResourceLimitError(
            f"C({n},{k}) = {count} subsets exceeds the {_SUBSET_GUARD} guard"
        )
    out = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.intp,
        count=count * k,
    )
    return out.reshape(count, k)


def u_statistic(sample, kernel: Kernel) -> float:
    """Sum of the kernel over all size-d index subsets of the sample.

    Subsets are enumerated in lexicographic order and summed in that fixed
    order, so repeated calls are bit-reproducible.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    d = kernel.arity
    if n < d:
        raise ValueError(f"sample size {n} is smaller than kernel arity {d}")
    subsets = _subset_indices(n, d)
    vals = np.asarray(
        kernel.evaluate(*(x[subsets[:, i]] for i in range(d))), dtype=float
    )
    return float(vals.sum())


def standardized_vector(sample, kernel: Kernel, dist: FiniteDistribution) -> np.ndarray:
    """The embedding vector (W_1, ..., W_d) with W_i = sqrt(n) U_i / C(n, i)."""
    x = np.asarray(sample, dtype=float)
    return _w_batch(x[None, :], kernel, dist)[0]


def _w_batch(x: np.ndarray, kernel: Kernel, dist: FiniteDistribution) -> np.ndarray:
    """Embedding vectors for a (B, n) batch of samples, as (B, d)."""
    batch, n = x.shape
    d = kernel.arity
    if n < d:
        raise ValueError(f"sample size {n} is smaller than kernel arity {d}")
    out = np.empty((batch, d))
    scale = math.sqrt(n)
    for k in range(1, d + 1):
        proj = sub_kernel(kernel, dist, k)
        subsets = _subset_indices(n, k)
        vals = np.asarray(
            proj.evaluate(*(x[:, subsets[:, i]] for i in range(k))), dtype=float
        )
        out[:, k - 1] = vals.sum(axis=1) * (scale / math.comb(n, k))
    return out


# ---------------------------------------------------------------------------
# coupling matrix, constants, tail bound
# ---------------------------------------------------------------------------

def lambda_matrix_u(d: int, n: int) -> SquareMatrix:
    """Regression matrix of the coordinate-replacement coupling.

    (1/n) times the lower bidiagonal matrix with diagonal (1, ..., d) and
    subdiagonal (-2, ..., -d); its determinant is d! / n^d.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if n < d:
        raise ValueError(f"need n >= d, got n={n}, d={d}")
    mat = np.zeros((d, d))
    for k in range(1, d + 1):
        mat[k - 1, k - 1] = k
        if k >= 2:
            mat[k - 1, k - 2] = -k
    return SquareMatrix(mat / n)


def gamma_d(d: int) -> float:
    """sqrt(d (d+1) (2d+1) / 6): the Euclidean pathwise coupling constant."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return math.sqrt(d * (d + 1) * (2 * d + 1) / 6.0)


def kappa_d(d: int) -> float:
    """(d!)^2 3^(d-1) / (d (d+1) (2d+1))^(d-1): the sigma_1 lower-bound constant."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return math.factorial(d) ** 2 * 3.0 ** (d - 1) / (d * (d + 1) * (2 * d + 1)) ** (d - 1)


def ustat_tail_bound(t: float, b: float, d: int) -> float:
    """exp(-t^2 sqrt(kappa_d) / (8 b^2 gamma_d^2)); independent of n."""
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError(f"threshold must be nonnegative, got {t}")
    if not (b > 0 and math.isfinite(b)):
        raise ValueError(f"b must be positive, got {b}")
    exponent = -(t**2) * math.sqrt(kappa_d(d)) / (8.0 * b**2 * gamma_d(d) ** 2)
    return math.exp(exponent)


# ---------------------------------------------------------------------------
# exchangeable-pair sampler
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UStatPairSample:
    """One coupled draw: embedding vectors before/after one replacement."""

    w: np.ndarray
    w_prime: np.ndarray
    replaced_index: int
    coupling_bound: InitVar[float | None] = None

    def __post_init__(self, coupling_bound):
        if coupling_bound is not None:
            gap = float(np.linalg.norm(self.w - self.w_prime))
            if gap > coupling_bound * (1 + 1e-9):
                raise ValueError(
                    f"pathwise coupling bound violated: ||w - w'|| = {gap} > "
                    f"{coupling_bound}"
                )


class UStatPairSampler:
    """Seeded stream of coupled embedding-vector pairs.

    Each draw takes a fresh i.i.d. sample X from the atom distribution, a
    uniform index I, and an independent replacement for X_I; it emits the
    embedding vectors of both samples together with I.  A single sampler is
    a single stream: do not share one instance across threads.
    """

    def __init__(self, dist: FiniteDistribution, n: int, kernel: Kernel, seed: int):
        if n < kernel.arity:
            raise ValueError(f"need n >= kernel arity, got n={n}, d={kernel.arity}")
        self.dist = dist
        self.n = n
        self.kernel = kernel
        self.coupling_bound = 2.0 * kernel.sup_bound * gamma_d(kernel.arity) / math.sqrt(n)
        self._rng = np.random.default_rng(seed)
        # Fail fast on the enumeration guards before any draw.
        for k in range(1, kernel.arity + 1):
            _subset_indices(n, k)
            sub_kernel(kernel, dist, k)
        warn_if_degenerate(kernel, dist)
        mean = kernel_mean(kernel, dist)
        if abs(mean) > 1e-9:
            warnings.warn(
                f"kernel mean under the sample distribution is {mean:.3e}, not 0; "
                "the coupling regression holds for mean-zero kernels",
                UserWarning,
                stacklevel=2,
            )

    def draw_batch(self, size: int):
        """Draw ``size`` coupled pairs; returns (w, w_prime, replaced_index)."""
        x = self.dist.sample(self._rng, (size, self.n))
        idx = self._rng.integers(0, self.n, size=size)
        replacement = self.dist.sample(self._rng, size)
        x_prime = x.copy()
        x_prime[np.arange(size), idx] = replacement
        w = _w_batch(x, self.kernel, self.dist)
        w_prime = _w_batch(x_prime, self.kernel, self.dist)
        return w, w_prime, idx

    def __iter__(self) -> Iterator[UStatPairSample]:
        while True:
            w, w_prime, idx = self.draw_batch(_STREAM_CHUNK)
            for row in range(w.shape[0]):
                yield UStatPairSample(
                    w[row], w_prime[row], int(idx[row]),
                    coupling_bound=self.coupling_bound,
                )


def ustat_pair_sampler(sample_dist: FiniteDistribution, n: int, kernel: Kernel,
                       seed: int) -> UStatPairSampler:
    """Construct the coordinate-replacement pair sampler (a seeded stream)."""
    return UStatPairSampler(sample_dist, n, kernel, seed)


def _w_top_batch(x: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Top statistic W_d = sqrt(n) U_d / C(n, d) for a (B, n) sample batch.

    Only the top coordinate is computed, no conditional projections, so this
    works for samples from any distribution.
    """
    n = x.shape[1]
    d = kernel.arity
    if n < d:
        raise ValueError(f"need n >= kernel arity, got n={n}, d={d}")
    subsets = _subset_indices(n, d)
    vals = np.asarray(
        kernel.evaluate(*(x[:, subsets[:, i]] for i in range(d))), dtype=float
    )
    return vals.sum(axis=1) * (math.sqrt(n) / math.comb(n, d))


def sample_w_top(dist, n: int, kernel: Kernel, seed: int, size: int) -> np.ndarray:
    """Draw ``size`` values of the top statistic W_d under i.i.d. sampling."""
    rng = np.random.default_rng(seed)
    return _w_top_batch(dist.sample(rng, (size, n)), kernel)
