"""Doubly indexed permutation statistics and their transposition coupling.

The central statistic is V1 = sum over ordered pairs s != t of
a(s, t, pi(s), pi(t)) for a 4-index coefficient array with zero diagonal
blocks (i = j or k = l) and zero total sum, evaluated at a uniform random
permutation pi.  Swapping the values at two uniformly chosen positions gives
an exchangeable pair whose conditional mean is linear in (V1, V2, V3) up to a
remainder, where V2 and V3 contract the array to n x n projections.  The
resulting tail bound is evaluated by :func:`dips_tail_bound`, and two
classical tests reduce to it: the rank-sum two-sample statistic (entries
+-1/2) and the permutation overlap of two graphs (0/1 product entries).

All permutations are 0-based numpy arrays internally; file formats remain
1-indexed.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass
from typing import Iterator

import numpy as np

from .errors import ResourceLimitError
from .linalg import SquareMatrix

_DENSE_N_LIMIT = 40
_MATRIX_N_LIMIT = 4000
_STREAM_CHUNK = 512


def _check_permutation(pi, n: int) -> np.ndarray:
    arr = np.asarray(pi, dtype=np.intp)
    if arr.shape != (n,) or not np.array_equal(np.sort(arr), np.arange(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {pi!r}")
    return arr


# ---------------------------------------------------------------------------
# coefficient array representations
# ---------------------------------------------------------------------------

class DipsArray:
    """Common interface of the 4-index coefficient array representations.

    Subclasses provide the accessor ``a`` (broadcasting over numpy index
    arrays), the row projections ``a2_at``/``a3_at`` with
    a2(s,t) = (1/n) sum_{i,j} a(s,i,t,j) and a3(s,t) = (1/n) sum_{i,j}
    a(i,s,j,t), and a vectorized ``v1_batch``.
    """

    n: int
    sup_bound: float

    def a(self, i, j, k, l):
        raise NotImplementedError

    def a2_at(self, s, t):
        raise NotImplementedError

    def a3_at(self, s, t):
        raise NotImplementedError

    def v1_batch(self, perms: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def v1(self, pi) -> float:
        pi = _check_permutation(pi, self.n)
        return float(self.v1_batch(pi[None, :])[0])

    def mean_v1(self) -> float:
        """Exact mean of V1 under a uniform permutation."""
        raise NotImplementedError

    @property
    def projections_agree(self) -> bool:
        """True when V2 and V3 coincide for every permutation."""
        raise NotImplementedError

    def _projection_matrix(self, at) -> np.ndarray:
        if self.n > _MATRIX_N_LIMIT:
            raise ResourceLimitError(
                f"materializing an {self.n} x {self.n} projection exceeds the "
                f"n <= {_MATRIX_N_LIMIT} guard"
            )
        s = np.arange(self.n)[:, None]
        t = np.arange(self.n)[None, :]
        return np.asarray(at(s, t), dtype=float)

    def a2(self) -> np.ndarray:
        return self._projection_matrix(self.a2_at)

    def a3(self) -> np.ndarray:
        return self._projection_matrix(self.a3_at)

    def v_vector(self, pi) -> np.ndarray:
        """(V1, V2, V3) at a single permutation."""
        pi = _check_permutation(pi, self.n)
        idx = np.arange(self.n)
        v2 = float(np.sum(self.a2_at(idx, pi)))
        v3 = float(np.sum(self.a3_at(idx, pi)))
        return np.array([self.v1(pi), v2, v3])


class DenseDipsArray(DipsArray):
    """Explicit n^4 coefficient tensor.

    Construction rejects (rather than repairs) violations of the structural
    constraints: diagonal cells must vanish and the total sum must be zero to
    within 1e-9 * n^2 * b.  Use :func:`center` to recenter an array that
    fails the zero-sum requirement.
    """

    def __init__(self, values, sup_bound: float | None = None):
        vals = np.array(values, dtype=float, copy=True)
        if vals.ndim != 4 or len(set(vals.shape)) != 1:
            raise ValueError(f"expected an (n,n,n,n) tensor, got shape {vals.shape}")
        n = vals.shape[0]
        if n < 2:
            raise ValueError("need n >= 2")
        if n > _DENSE_N_LIMIT:
            raise ResourceLimitError(
                f"dense arrays are limited to n <= {_DENSE_N_LIMIT}, got {n}"
            )
        if not np.isfinite(vals).all():
            raise ValueError("array entries must be finite")
        scale = max(1.0, float(np.abs(vals).max()))
        diag = np.concatenate(
            [vals[np.arange(n), np.arange(n), :, :].ravel(),
             vals[:, :, np.arange(n), np.arange(n)].ravel()]
        )
        if np.abs(diag).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("cells with i == j or k == l must be zero")
        b = float(np.abs(vals).max())
        if sup_bound is not None:
            if b > sup_bound * (1 + 1e-12):
                raise ValueError(
                    f"entries reach {b}, exceeding the declared bound {sup_bound}"
                )
            b = float(sup_bound)
        total = float(vals.sum())
        if abs(total) > 1e-9 * n * n * max(b, 1e-300):
            raise ValueError(
                f"array sum over all cells is {total:.3e}, not zero; "
                "recenter it first"
            )
        vals.flags.writeable = False
        self.values = vals
        self.n = n
        self.sup_bound = b
        self._a2 = vals.sum(axis=(1, 3)) / n
        self._a3 = vals.sum(axis=(0, 2)) / n

    def a(self, i, j, k, l):
        return self.values[i, j, k, l]

    def a2_at(self, s, t):
        return self._a2[s, t]

    def a3_at(self, s, t):
        return self._a3[s, t]

    def a2(self) -> np.ndarray:
        return self._a2.copy()

    def a3(self) -> np.ndarray:
        return self._a3.copy()

    def v1_batch(self, perms: np.ndarray) -> np.ndarray:
        s = np.arange(self.n)[:, None]
        t = np.arange(self.n)[None, :]
        gathered = self.values[s, t, perms[:, s], perms[:, t]]
        return gathered.sum(axis=(1, 2))

    def mean_v1(self) -> float:
        # Diagonal cells vanish, so the plain total equals the off-diagonal sum.
        return float(self.values.sum()) / (self.n * (self.n - 1))

    @property
    def projections_agree(self) -> bool:
        return bool(np.allclose(self._a2, self._a3, atol=1e-12))

    @property
    def value_antisymmetric(self) -> bool:
        """True when swapping the last two indices flips the sign everywhere."""
        return bool(np.allclose(self.values, -self.values.transpose(0, 1, 3, 2),
                                atol=1e-12))


class ProductDipsArray(DipsArray):
    """Product form a(i,j,k,l) = c(i,j) * d(k,l) for dense n x n factors."""

    def __init__(self, c, d):
        c = np.array(c, dtype=float, copy=True)
        d = np.array(d, dtype=float, copy=True)
        if c.shape != d.shape or c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("c and d must be square matrices of equal size")
        n = c.shape[0]
        if n < 2:
            raise ValueError("need n >= 2")
        if not (np.isfinite(c).all() and np.isfinite(d).all()):
            raise ValueError("factor entries must be finite")
        if np.abs(np.diagonal(c)).max() > 0 or np.abs(np.diagonal(d)).max() > 0:
            raise ValueError("factor diagonals must be zero")
        c.flags.writeable = False
        d.flags.writeable = False
        self.c = c
        self.d = d
        self.n = n
        self.sup_bound = float(np.abs(c).max() * np.abs(d).max())
        self._c_row = c.sum(axis=1)
        self._c_col = c.sum(axis=0)
        self._d_row = d.sum(axis=1)
        self._d_col = d.sum(axis=0)

    def a(self, i, j, k, l):
        return self.c[i, j] * self.d[k, l]

    def a2_at(self, s, t):
        return self._c_row[s] * self._d_row[t] / self.n

    def a3_at(self, s, t):
        return self._c_col[s] * self._d_col[t] / self.n

    def v1_batch(self, perms: np.ndarray) -> np.ndarray:
        gathered = self.d[perms[:, :, None], perms[:, None, :]]
        return np.einsum("st,bst->b", self.c, gathered)

    def mean_v1(self) -> float:
        return float(self.c.sum() * self.d.sum()) / (self.n * (self.n - 1))

    @property
    def projections_agree(self) -> bool:
        return bool(
            np.allclose(self._c_row, self._c_col, atol=1e-12)
            and np.allclose(self._d_row, self._d_col, atol=1e-12)
        )


class GraphOverlapArray(DipsArray):
    """Product form for two undirected simple graphs, kept edge-sparse.

    a(i,j,k,l) = 1((i,j) is an edge of G1) * 1((k,l) is an edge of G2) with
    ordered incidence, so each shared undirected edge image counts twice in
    V1.  The raw array has nonzero mean; tail bounds apply to the centered
    statistic (see :func:`graph_centered_w1`).
    """

    def __init__(self, edges1, edges2, n: int):
        self.n = int(n)
        if self.n < 2:
            raise ValueError("need n >= 2")
        self.edges1 = _normalize_edges(edges1, self.n)
        self.edges2 = _normalize_edges(edges2, self.n)
        self.sup_bound = 1.0
        self._deg1 = _degrees(self.edges1, self.n)
        self._deg2 = _degrees(self.edges2, self.n)
        self._codes1 = _ordered_edge_codes(self.edges1, self.n)
        self._codes2 = _ordered_edge_codes(self.edges2, self.n)

    def a(self, i, j, k, l):
        in1 = np.isin(np.asarray(i, dtype=np.int64) * self.n + j, self._codes1)
        in2 = np.isin(np.asarray(k, dtype=np.int64) * self.n + l, self._codes2)
        return np.where(in1 & in2, 1.0, 0.0)

    def a2_at(self, s, t):
        return self._deg1[s] * self._deg2[t] / self.n

    a3_at = a2_at

    def v1_batch(self, perms: np.ndarray) -> np.ndarray:
        if self.edges1.shape[0] == 0:
            return np.zeros(perms.shape[0])
        pu = perms[:, self.edges1[:, 0]].astype(np.int64)
        pv = perms[:, self.edges1[:, 1]].astype(np.int64)
        hits = np.isin(pu * self.n + pv, self._codes2)
        hits |= np.isin(pv * self.n + pu, self._codes2)  # same undirected edge
        # Each matched undirected edge contributes both ordered pairs.
        return 2.0 * hits.sum(axis=1).astype(float)

    def mean_v1(self) -> float:
        m1 = self.edges1.shape[0]
        m2 = self.edges2.shape[0]
        return 4.0 * m1 * m2 / (self.n * (self.n - 1))

    @property
    def projections_agree(self) -> bool:
        return True


def _normalize_edges(edges, n: int) -> np.ndarray:
    arr = np.asarray(list(edges), dtype=np.intp).reshape(-1, 2)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.min() < 0 or arr.max() >= n:
        raise ValueError(f"edge endpoints must lie in 0..{n - 1}")
    if (arr[:, 0] == arr[:, 1]).any():
        raise ValueError("self-loops are not allowed")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    canon = np.unique(lo * n + hi)
    return np.column_stack([canon // n, canon % n])


def _degrees(edges: np.ndarray, n: int) -> np.ndarray:
    deg = np.zeros(n)
    np.add.at(deg, edges[:, 0], 1.0)
    np.add.at(deg, edges[:, 1], 1.0)
    return deg


def _ordered_edge_codes(edges: np.ndarray, n: int) -> np.ndarray:
    u = edges[:, 0].astype(np.int64)
    v = edges[:, 1].astype(np.int64)
    return np.sort(np.concatenate([u * n + v, v * n + u]))


class MwwDipsArray(DipsArray):
    """Implicit +-1/2 coefficient array of the two-sample rank statistic.

    Entries are +1/2 when the first position index lies in the x block, the
    second in the y block, and the first value index is below the second;
    -1/2 with the value order reversed; 0 otherwise.  Never densified: V1 and
    the projections have closed forms.
    """

    def __init__(self, n1: int, n2: int):
        if n1 < 1 or n2 < 1:
            raise ValueError("both group sizes must be >= 1")
        self.n1 = int(n1)
        self.n2 = int(n2)
        self.n = self.n1 + self.n2
        self.sup_bound = 0.5

    def a(self, i, j, k, l):
        i, j, k, l = np.broadcast_arrays(i, j, k, l)
        block = (np.asarray(i) < self.n1) & (np.asarray(j) >= self.n1)
        return 0.5 * np.sign(np.asarray(l) - np.asarray(k)) * block

    def a2_at(self, s, t):
        s, t = np.broadcast_arrays(s, t)
        vals = self.n2 * (self.n - 1 - 2.0 * np.asarray(t)) / (2.0 * self.n)
        return np.where(np.asarray(s) < self.n1, vals, 0.0)

    def a3_at(self, s, t):
        s, t = np.broadcast_arrays(s, t)
        vals = self.n1 * (2.0 * np.asarray(t) - self.n + 1) / (2.0 * self.n)
        return np.where(np.asarray(s) >= self.n1, vals, 0.0)

    def v1_batch(self, perms: np.ndarray) -> np.ndarray:
        # Ranks are 0-based, so the pair count below a y-rank r is r minus the
        # y-ranks under it; summing over the y block kills the within-y term.
        s_y = perms[:, self.n1:].sum(axis=1).astype(float)
        v_mww = s_y - self.n2 * (self.n2 - 1) / 2.0
        return v_mww - self.n1 * self.n2 / 2.0

    def mean_v1(self) -> float:
        return 0.0

    @property
    def projections_agree(self) -> bool:
        # V2 and V3 both reduce to the same linear function of the x-block
        # rank sum exactly when the group sizes match.
        return self.n1 == self.n2


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def v1_statistic(array: DipsArray, pi) -> float:
    """V1 = sum over ordered pairs s != t of a(s, t, pi(s), pi(t))."""
    return array.v1(pi)


def a2_matrix(array: DipsArray) -> np.ndarray:
    """The n x n contraction a2(s,t) = (1/n) sum_{i,j} a(s,i,t,j)."""
    return array.a2()


def center(values) -> DenseDipsArray:
    """Subtract the off-diagonal mean so the array sums to zero.

    Accepts a raw (n,n,n,n) tensor (the usual case: a tensor that would be
    rejected by the zero-sum check) or an existing dense array.  Only cells
    with i != j and k != l are shifted; diagonal cells stay zero.
    """
    if isinstance(values, DenseDipsArray):
        values = values.values
    vals = np.array(values, dtype=float, copy=True)
    if vals.ndim != 4 or len(set(vals.shape)) != 1:
        raise ValueError(f"expected an (n,n,n,n) tensor, got shape {vals.shape}")
    n = vals.shape[0]
    mask = np.ones((n, n, n, n), dtype=bool)
    idx = np.arange(n)
    mask[idx, idx, :, :] = False
    mask[:, :, idx, idx] = False
    vals[mask] -= vals[mask].mean()
    return DenseDipsArray(vals)


def random_dips_array(n: int, sup_bound: float, seed: int) -> DenseDipsArray:
    """Seeded random dense array satisfying every structural constraint.

    Entries are antisymmetric under the value-pair swap and symmetric under
    the simultaneous swap of both index pairs, which makes the total sum
    vanish identically, matches the rank-array structure, and keeps the
    transposition-coupling regression exact (see :func:`remainder_r1`).
    """
    if sup_bound <= 0:
        raise ValueError("sup_bound must be positive")
    rng = np.random.default_rng(seed)
    vals = rng.uniform(-1.0, 1.0, size=(n, n, n, n))
    vals = (vals - vals.transpose(0, 1, 3, 2)) / 2.0
    vals = (vals + vals.transpose(1, 0, 3, 2)) / 2.0
    idx = np.arange(n)
    vals[idx, idx, :, :] = 0.0
    vals[:, :, idx, idx] = 0.0
    peak = np.abs(vals).max()
    if peak == 0.0:
        raise ValueError("degenerate draw: all entries vanished")
    vals *= sup_bound / peak
    return DenseDipsArray(vals)


def lambda_dips(n: int) -> SquareMatrix:
    """3x3 regression matrix of the transposition coupling."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    mat = np.array(
        [[(2.0 * n - 1) / n, -1.0, -1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    )
    return SquareMatrix(2.0 / (n - 1) * mat)


def remainder_r1(v1: float, n: int) -> float:
    """First-coordinate remainder -2 V1 / (n (n-1)) of the coupling regression.

    Exact for coefficient arrays that are antisymmetric under the value-pair
    swap (rank arrays, and everything :func:`random_dips_array` produces);
    for value-symmetric arrays the exact remainder has the opposite sign.
    In W-scale the remainder carries the same n^(-3/2) factor as V -> W.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return -2.0 * v1 / (n * (n - 1))


def eta_bn(b: float, n: int) -> float:
    """Pathwise Euclidean coupling bound 4 b n^(-1/2) (6 + 4/n + 1/n^2)^(1/2)."""
    if b <= 0 or n < 2:
        raise ValueError("need b > 0 and n >= 2")
    return 4.0 * b * math.sqrt((6.0 + 4.0 / n + 1.0 / n**2) / n)


def phi_bn(b: float, n: int) -> float:
    """Sub-Gaussian scale 8 (2n-1) b^2 (6 + 4/n + 1/n^2) / n of the V1 bound."""
    if b <= 0 or n < 2:
        raise ValueError("need b > 0 and n >= 2")
    return 8.0 * (2.0 * n - 1.0) * b**2 * (6.0 + 4.0 / n + 1.0 / n**2) / n


def dips_tail_bound(t: float, b: float, n: int) -> float:
    """exp(-t^2 / (2 phi_{b,n})): tail bound for W1 = n^(-3/2) V1."""
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError(f"threshold must be nonnegative, got {t}")
    return math.exp(-(t**2) / (2.0 * phi_bn(b, n)))


# ---------------------------------------------------------------------------
# exchangeable-pair sampler
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DipsPairSample:
    """One coupled draw: (V1, V2, V3) before and after one transposition."""

    v: np.ndarray
    v_prime: np.ndarray
    swap: tuple[int, int]
    sup_bound: InitVar[float | None] = None
    n: InitVar[int | None] = None
    check_projections: InitVar[bool] = False

    def __post_init__(self, sup_bound, n, check_projections):
        if sup_bound is not None and n is not None:
            slack = 1 + 1e-9
            b = sup_bound
            if abs(self.v[0] - self.v_prime[0]) > (8 * b * n + 4 * b) * slack:
                raise ValueError("pathwise bound on |V1 - V1'| violated")
            for i in (1, 2):
                if abs(self.v[i] - self.v_prime[i]) > 4 * b * n * slack:
                    raise ValueError(f"pathwise bound on |V{i + 1} - V{i + 1}'| violated")
            if check_projections:
                scale = max(1.0, b * n)
                if (abs(self.v[1] - self.v[2]) > 1e-9 * scale
                        or abs(self.v_prime[1] - self.v_prime[2]) > 1e-9 * scale):
                    raise ValueError("V2 and V3 disagree on an array with matched projections")


class DipsPairSampler:
    """Seeded stream of transposition-coupled draws.

    Each draw takes a fresh uniform permutation and two distinct uniform
    positions (I, J); the primed vector is computed from the swapped
    permutation with O(n) incremental updates rather than re-summation.
    """

    def __init__(self, array: DipsArray, seed: int):
        if array.n < 2:
            raise ValueError("need n >= 2")
        self.array = array
        self.n = array.n
        self._rng = np.random.default_rng(seed)

    def draw_batch(self, size: int):
        """Draw ``size`` coupled pairs; returns (v, v_prime, i_idx, j_idx)."""
        n = self.n
        arr = self.array
        rng = self._rng
        perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
        i_idx = rng.integers(0, n, size=size)
        j_idx = rng.integers(0, n - 1, size=size)
        j_idx = j_idx + (j_idx >= i_idx)

        rows = np.arange(size)
        pos = np.arange(n)[None, :]
        p_i = perms[rows, i_idx]
        p_j = perms[rows, j_idx]

        v1 = arr.v1_batch(perms)
        v2 = np.sum(arr.a2_at(pos, perms), axis=1)
        v3 = np.sum(arr.a3_at(pos, perms), axis=1)

        ii = i_idx[:, None]
        jj = j_idx[:, None]
        pi_b = p_i[:, None]
        pj_b = p_j[:, None]
        # Terms with exactly one index at I or J; positions I and J are
        # excluded from the sweep and handled by the corner terms below.
        sweep = (
            arr.a(ii, pos, pj_b, perms) - arr.a(ii, pos, pi_b, perms)
            + arr.a(jj, pos, pi_b, perms) - arr.a(jj, pos, pj_b, perms)
            + arr.a(pos, ii, perms, pj_b) - arr.a(pos, ii, perms, pi_b)
            + arr.a(pos, jj, perms, pi_b) - arr.a(pos, jj, perms, pj_b)
        )
        mask = (pos != ii) & (pos != jj)
        dv1 = np.sum(sweep * mask, axis=1)
        dv1 += (
            arr.a(i_idx, j_idx, p_j, p_i) - arr.a(i_idx, j_idx, p_i, p_j)
            + arr.a(j_idx, i_idx, p_i, p_j) - arr.a(j_idx, i_idx, p_j, p_i)
        )
        dv2 = (
            -arr.a2_at(i_idx, p_i) - arr.a2_at(j_idx, p_j)
            + arr.a2_at(i_idx, p_j) + arr.a2_at(j_idx, p_i)
        )
        dv3 = (
            -arr.a3_at(i_idx, p_i) - arr.a3_at(j_idx, p_j)
            + arr.a3_at(i_idx, p_j) + arr.a3_at(j_idx, p_i)
        )
        v = np.column_stack([v1, v2, v3])
        v_prime = np.column_stack([v1 + dv1, v2 + dv2, v3 + dv3])
        return v, v_prime, i_idx, j_idx

    def __iter__(self) -> Iterator[DipsPairSample]:
        check = self.array.projections_agree
        while True:
            v, v_prime, i_idx, j_idx = self.draw_batch(_STREAM_CHUNK)
            for row in range(v.shape[0]):
                yield DipsPairSample(
                    v[row], v_prime[row], (int(i_idx[row]), int(j_idx[row])),
                    sup_bound=self.array.sup_bound, n=self.n,
                    check_projections=check,
                )


def dips_pair_sampler(array: DipsArray, seed: int) -> DipsPairSampler:
    """Construct the transposition pair sampler (a seeded stream)."""
    return DipsPairSampler(array, seed)


# ---------------------------------------------------------------------------
# two-sample rank statistic
# ---------------------------------------------------------------------------

def _reject_ties(values: np.ndarray) -> None:
    if np.unique(values).size != values.size:
        raise ValueError(
            "tied observations detected; the rank statistic assumes samples "
            "from continuous distributions"
        )


def mww_statistic(x, y) -> int:
    """Number of pairs (i, j) with x_i < y_j.  Rejects ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be nonempty")
    _reject_ties(np.concatenate([x, y]))
    x_sorted = np.sort(x)
    return int(np.searchsorted(x_sorted, y, side="left").sum())


def rank_permutation(x, y) -> np.ndarray:
    """0-based ranks of the concatenated sample (x block first)."""
    z = np.concatenate([np.asarray(x, dtype=float), np.asarray(y, dtype=float)])
    _reject_ties(z)
    return np.argsort(np.argsort(z))


def mww_array(n1: int, n2: int) -> MwwDipsArray:
    """The implicit +-1/2 coefficient array of the rank-sum statistic."""
    return MwwDipsArray(n1, n2)


def mww_tail_bound(t: float, n: int) -> float:
    """Rank-statistic tail bound: the V1 bound with entry bound b = 1/2."""
    return dips_tail_bound(t, 0.5, n)


# ---------------------------------------------------------------------------
# graph overlap statistic
# ---------------------------------------------------------------------------

def parse_edge_list(text: str, n: int | None = None):
    """Parse a 1-indexed ``u v`` edge list; returns (edges, n) 0-based.

    Blank lines and lines starting with '#' are skipped.  Self-loops are
    rejected; duplicate edges collapse.
    """
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: endpoints must be integers") from None
        if u < 1 or v < 1:
            raise ValueError(f"line {lineno}: endpoints are 1-indexed and positive")
        if u == v:
            raise ValueError(f"line {lineno}: self-loop {u}-{v} is not allowed")
        pairs.append((u - 1, v - 1))
    inferred = max((max(p) for p in pairs), default=-1) + 1
    size = n if n is not None else inferred
    if inferred > size:
        raise ValueError(f"edge endpoint exceeds declared n = {size}")
    edges = _normalize_edges(pairs, size) if pairs else np.empty((0, 2), dtype=np.intp)
    return edges, size


def graph_overlap_statistic(edges1, edges2, pi, n: int | None = None) -> int:
    """Ordered-pair overlap count between G1 and the pi-image of G2's slots.

    Counts ordered pairs (s, t) that are edges of G1 with (pi(s), pi(t)) an
    edge of G2; each shared undirected edge image contributes 2.
    """
    pi = np.asarray(pi, dtype=np.intp)
    size = n if n is not None else pi.size
    array = GraphOverlapArray(edges1, edges2, size)
    return int(round(array.v1(pi)))


def graph_mean(edges1, edges2, n: int) -> float:
    """Exact mean 4 |E1| |E2| / (n (n-1)) of the overlap under uniform pi."""
    array = GraphOverlapArray(edges1, edges2, n)
    return array.mean_v1()


def graph_centered_w1(edges1, edges2, pi, n: int) -> float:
    """Centered, n^(-3/2)-scaled overlap statistic."""
    v1 = graph_overlap_statistic(edges1, edges2, pi, n)
    return (v1 - graph_mean(edges1, edges2, n)) / n**1.5


def graph_tail_bound(t: float, n: int, b: float = 2.0) -> float:
    """Tail bound for the centered overlap; b = 2 covers the centered entries."""
    return dips_tail_bound(t, b, n)


def random_graph_edges(n: int, n_edges: int, seed: int) -> np.ndarray:
    """n_edges distinct undirected edges drawn uniformly from the complete graph."""
    total = n * (n - 1) // 2
    if n_edges > total:
        raise ValueError(f"cannot place {n_edges} distinct edges on {n} vertices")
    rng = np.random.default_rng(seed)
    codes = rng.choice(total, size=n_edges, replace=False)
    # Decode linear upper-triangle codes to (u, v) with u < v.
    u = (n - 2 - np.floor(
        np.sqrt(-8.0 * codes + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5
    )).astype(np.intp)
    v = (codes + u + 1 - n * (n - 1) // 2 + (n - u) * ((n - u) - 1) // 2).astype(np.intp)
    return np.column_stack([u, v])
