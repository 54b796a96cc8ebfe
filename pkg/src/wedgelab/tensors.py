"""Dense tensor core: rapidity grids, internal index spaces, legged tensors.

A legged tensor models an n-particle wave function sampled at quadrature
nodes: every leg carries a combined index ``(node, component)`` flattened
row-major with the internal component fastest, so splitting a leg of size
``G * d`` into shape ``(G, d)`` is a plain reshape.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, StructuralError

# A dense object with more than 2**CAPACITY_LOG2_LIMIT entries is refused.
CAPACITY_LOG2_LIMIT = 30.0


def _guard_log2_entries(log2_entries: float, what: str) -> None:
    if log2_entries > CAPACITY_LOG2_LIMIT:
        raise CapacityError(
            f"{what} would hold 2^{log2_entries:.1f} entries; "
            f"the dense limit is 2^{CAPACITY_LOG2_LIMIT:.0f}"
        )


def ensure_capacity(rank: int, leg_dim: int) -> None:
    """Refuse dense storage of a rank-``rank`` tensor with legs of size ``leg_dim``."""
    if rank < 0 or leg_dim < 1:
        raise StructuralError(f"invalid tensor shape: rank {rank}, leg dimension {leg_dim}")
    if rank > 0:
        _guard_log2_entries(rank * math.log2(leg_dim), f"a rank-{rank} tensor")


@dataclass(frozen=True, eq=False)
class InternalIndexSpace:
    """A finite internal degree of freedom with a conjugation involution.

    ``bar`` maps each component index to its conjugate component; it must be
    an involution.  Components are 0-based internally.
    """

    dimension: int
    bar: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        if self.dimension < 1:
            raise StructuralError(f"dimension must be positive, got {self.dimension}")
        bar = tuple(int(b) for b in self.bar)
        object.__setattr__(self, "bar", bar)
        if sorted(bar) != list(range(self.dimension)):
            raise StructuralError(f"bar map {bar} is not a permutation of 0..{self.dimension - 1}")
        for i, b in enumerate(bar):
            if bar[b] != i:
                raise StructuralError(f"bar map {bar} is not an involution")

    @classmethod
    def with_identity_bar(cls, dimension: int, label: str = "") -> "InternalIndexSpace":
        return cls(dimension=dimension, bar=tuple(range(dimension)), label=label)

    def bar_matrix(self) -> np.ndarray:
        """Permutation matrix sending component ``a`` to component ``bar(a)``."""
        matrix = np.zeros((self.dimension, self.dimension))
        for a, b in enumerate(self.bar):
            matrix[b, a] = 1.0
        return matrix


@dataclass(frozen=True, eq=False)
class RapidityGrid:
    """Quadrature nodes and weights on a symmetric rapidity interval."""

    nodes: np.ndarray
    weights: np.ndarray
    q_max: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise StructuralError("grid nodes and weights must be matching 1-d arrays")
        if nodes.size == 0:
            raise StructuralError("grid must contain at least one node")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gauss_legendre(cls, size: int = 32, q_max: float = 6.0) -> "RapidityGrid":
        """Composite Gauss-Legendre rule on ``[-q_max, q_max]``.

        Sizes divisible by eight use ``size // 8`` equal panels of eight
        nodes each; other sizes use a single panel.
        """
        if size < 1:
            raise StructuralError(f"grid size must be positive, got {size}")
        if q_max <= 0:
            raise StructuralError(f"q_max must be positive, got {q_max}")
        if size % 8 == 0:
            panels, per_panel = size // 8, 8
        else:
            panels, per_panel = 1, size
        base_nodes, base_weights = np.polynomial.legendre.leggauss(per_panel)
        edges = np.linspace(-q_max, q_max, panels + 1)
        nodes, weights = [], []
        for left, right in zip(edges[:-1], edges[1:]):
            half = 0.5 * (right - left)
            nodes.append(half * (base_nodes + 1.0) + left)
            weights.append(half * base_weights)
        return cls(nodes=np.concatenate(nodes), weights=np.concatenate(weights), q_max=float(q_max))

    @property
    def size(self) -> int:
        return self.nodes.size

    def leg_weights(self, space: InternalIndexSpace) -> np.ndarray:
        """Quadrature weight of each combined ``(node, component)`` leg index."""
        return np.repeat(self.weights, space.dimension)


@dataclass(frozen=True, eq=False)
class LeggedTensor:
    """Dense rank-n array over combined ``(node, component)`` legs."""

    space: InternalIndexSpace
    grid: RapidityGrid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if not np.iscomplexobj(data):
            data = data.astype(complex)
        dim = self.leg_dim
        if any(extent != dim for extent in data.shape):
            raise StructuralError(
                f"tensor legs must all have size {dim}, got shape {data.shape}"
            )
        ensure_capacity(data.ndim, dim)
        if not np.all(np.isfinite(data)):
            raise StructuralError("tensor entries must be finite")
        object.__setattr__(self, "data", data)

    @property
    def leg_dim(self) -> int:
        return self.space.dimension * self.grid.size

    @property
    def rank(self) -> int:
        return self.data.ndim

    def with_data(self, data: np.ndarray) -> "LeggedTensor":
        return LeggedTensor(space=self.space, grid=self.grid, data=data)

    def scaled(self, factor: complex) -> "LeggedTensor":
        return self.with_data(self.data * factor)

    def plus(self, other: "LeggedTensor") -> "LeggedTensor":
        _check_compatible(self, other)
        return self.with_data(self.data + other.data)

    def minus(self, other: "LeggedTensor") -> "LeggedTensor":
        _check_compatible(self, other)
        return self.with_data(self.data - other.data)


def _check_compatible(a: LeggedTensor, b: LeggedTensor) -> None:
    if a.space.dimension != b.space.dimension or a.grid.size != b.grid.size:
        raise StructuralError("tensors live over different spaces or grids")
    if a.data.shape != b.data.shape:
        raise StructuralError(f"tensor shapes differ: {a.data.shape} vs {b.data.shape}")
    if not np.array_equal(a.grid.nodes, b.grid.nodes):
        raise StructuralError("tensors are sampled on different grids")


def permute_legs(T: LeggedTensor, sigma: tuple[int, ...]) -> LeggedTensor:
    """Pull back the legs of ``T`` along the permutation ``sigma`` (1-based).

    The result satisfies ``out[i_1, ..., i_n] == T[i_sigma(1), ..., i_sigma(n)]``,
    so ``permute_legs(·, sigma)`` after ``permute_legs(·, tau)`` equals
    ``permute_legs(·, sigma ∘ tau)``.
    """
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(1, T.rank + 1)):
        raise StructuralError(f"{sigma} is not a permutation of 1..{T.rank}")
    axes = np.argsort([s - 1 for s in sigma])
    return T.with_data(np.ascontiguousarray(np.transpose(T.data, axes)))


def embed_pairwise(matrix: np.ndarray, i: int, j: int, n: int, leg_dims) -> np.ndarray:
    """Embed a two-leg operator into legs ``i < j`` of an ``n``-leg space.

    ``matrix`` has row and column indices running over the pair ``(a_i, a_j)``
    with ``a_j`` fastest; all other legs carry the identity.  ``leg_dims`` is a
    single integer for uniform legs or a sequence of per-leg dimensions.
    Returns the dense operator on the full product space with multi-indices
    flattened row-major.
    """
    if isinstance(leg_dims, (int, np.integer)):
        dims = (int(leg_dims),) * n
    else:
        dims = tuple(int(d) for d in leg_dims)
    if len(dims) != n:
        raise StructuralError(f"expected {n} leg dimensions, got {len(dims)}")
    if not (1 <= i < j <= n):
        raise StructuralError(f"invalid leg pair ({i}, {j}) for {n} legs")
    total_log2 = 2.0 * sum(math.log2(d) for d in dims)
    _guard_log2_entries(total_log2, f"an operator on {n} legs")

    matrix = np.asarray(matrix)
    di, dj = dims[i - 1], dims[j - 1]
    if matrix.shape != (di * dj, di * dj):
        raise StructuralError(
            f"pair operator must be {di * dj} x {di * dj}, got {matrix.shape}"
        )
    if n == 2:
        return matrix

    block = matrix.reshape(di, dj, di, dj)
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    terms = [row[i - 1] + row[j - 1] + col[i - 1] + col[j - 1]]
    operands = [block]
    for k in range(1, n + 1):
        if k in (i, j):
            continue
        terms.append(row[k - 1] + col[k - 1])
        operands.append(np.eye(dims[k - 1]))
    script = ",".join(terms) + "->" + "".join(row) + "".join(col)
    total = int(np.prod(dims))
    return np.einsum(script, *operands).reshape(total, total)


def _leg_values(v) -> np.ndarray:
    values = getattr(v, "leg_values", v)
    return np.asarray(values)


def contract_bra(v, k: int, T: LeggedTensor) -> LeggedTensor:
    """Contract ``conj(v)`` with quadrature weights into leg ``k`` of ``T``.

    No combinatorial prefactor is applied; this is the plain weighted
    bra-contraction ``sum_l w_l conj(v_l) T[..., l, ...]``.
    """
    values = _leg_values(v)
    if not (1 <= k <= T.rank):
        raise StructuralError(f"leg {k} out of range for rank {T.rank}")
    if values.shape != (T.leg_dim,):
        raise StructuralError(
            f"bra vector must have {T.leg_dim} combined-leg entries, got {values.shape}"
        )
    bra = np.conj(values) * T.grid.leg_weights(T.space)
    return T.with_data(np.tensordot(bra, T.data, axes=([0], [k - 1])))


def inner_product(a: LeggedTensor, b: LeggedTensor) -> complex:
    """Quadrature inner product, antilinear in the first argument."""
    _check_compatible(a, b)
    data = np.conj(a.data) * b.data
    w = a.grid.leg_weights(a.space)
    rank = a.rank
    for axis in range(rank):
        shape = [1] * rank
        shape[axis] = w.size
        data = data * w.reshape(shape)
    return complex(data.sum())


def tensor_norm(a: LeggedTensor) -> float:
    value = inner_product(a, a).real
    return math.sqrt(max(value, 0.0))


def outer_with_vector_front(v, T: LeggedTensor) -> LeggedTensor:
    """Prepend a one-particle leg: ``(v ⊗ T)[l, ...] = v_l T[...]``."""
    values = _leg_values(v)
    ensure_capacity(T.rank + 1, T.leg_dim)
    return T.with_data(np.multiply.outer(values, T.data))


def outer_with_vector_back(T: LeggedTensor, v) -> LeggedTensor:
    """Append a one-particle leg: ``(T ⊗ v)[..., l] = T[...] v_l``."""
    values = _leg_values(v)
    ensure_capacity(T.rank + 1, T.leg_dim)
    return T.with_data(np.multiply.outer(T.data, values))
