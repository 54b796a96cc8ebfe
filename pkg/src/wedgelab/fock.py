"""Braided Fock space: permutation representations, projectors, field operators.

The braiding acts node-diagonally on two legs: the exchange-picture matrix is
evaluated at the rapidity difference of the two nodes and contracted into the
component indices.  ``Phi`` (exchange composed with the braiding) generates a
representation of the symmetric group; its average is the symmetrizing
projector whose range carries the field operators.

Square-root occupation factors live exclusively in :func:`create`,
:func:`annihilate`, and their reflected variants; the tensor-core contraction
helpers apply none.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .axioms import check_hermitian_analyticity, check_unitarity
from .errors import ParameterError, PreconditionError, StructuralError
from .report import CheckResult
from .scattering import MatrixScatteringFunction, r_matrix_many
from .tensors import (
    InternalIndexSpace,
    LeggedTensor,
    RapidityGrid,
    contract_bra,
    ensure_capacity,
    inner_product,
    outer_with_vector_back,
    outer_with_vector_front,
    permute_legs,
    tensor_norm,
)

_PROBE_SEED = 1234
_PROBE_COUNT = 6


def pair_kernel(S: MatrixScatteringFunction, grid: RapidityGrid,
                combine: str = "difference", picture: str = "exchange") -> np.ndarray:
    """Matrix values at all node pairs, shape ``(G, G, dl, dr, dl, dr)``.

    ``combine`` selects the argument ``q_i - q_j`` or ``q_i + q_j``;
    ``picture`` selects the exchange-picture matrix (upper pair swapped) or
    the stored matrix as-is.
    """
    nodes = grid.nodes
    if combine == "difference":
        args = nodes[:, None] - nodes[None, :]
    elif combine == "sum":
        args = nodes[:, None] + nodes[None, :]
    else:
        raise StructuralError(f"unknown pair combination '{combine}'")
    flat = args.reshape(-1).astype(complex)
    if picture == "exchange":
        values = r_matrix_many(S, flat)
    elif picture == "stored":
        values = S.eval_many(flat)
    else:
        raise StructuralError(f"unknown matrix picture '{picture}'")
    dl = S.left_space.dimension
    dr = S.right_space.dimension
    return values.reshape(grid.size, grid.size, dl, dr, dl, dr)


@dataclass(eq=False)
class BraidingData:
    """Node-diagonal braiding of a two-particle space and its derived maps."""

    space: InternalIndexSpace
    grid: RapidityGrid
    source: MatrixScatteringFunction
    kernel: np.ndarray
    kernel_star: np.ndarray
    checks: dict = field(default_factory=dict)

    @property
    def leg_dim(self) -> int:
        return self.space.dimension * self.grid.size

    def _split_front(self, T: LeggedTensor, axes: tuple) -> np.ndarray:
        d = self.space.dimension
        g = self.grid.size
        data = np.moveaxis(T.data, axes, (0, 1))
        return data.reshape((g, d, g, d) + data.shape[2:])

    def _merge_back(self, data: np.ndarray, axes: tuple, rank: int) -> np.ndarray:
        dim = self.leg_dim
        data = data.reshape((dim, dim) + data.shape[4:])
        return np.moveaxis(data, (0, 1), axes)

    def apply_phi(self, T: LeggedTensor, j: int) -> LeggedTensor:
        """Braided exchange of the adjacent legs ``j`` and ``j + 1``."""
        if not (1 <= j <= T.rank - 1):
            raise StructuralError(f"adjacent pair {j} out of range for rank {T.rank}")
        block = self._split_front(T, (j - 1, j))
        out = np.einsum("yxbace,ycxe...->xayb...", self.kernel, block)
        return T.with_data(self._merge_back(out, (j - 1, j), T.rank))

    def apply_r(self, T: LeggedTensor, i: int, j: int, star: bool = False) -> LeggedTensor:
        """Apply the braiding matrix to legs ``i < j`` without exchanging them."""
        if not (1 <= i < j <= T.rank):
            raise StructuralError(f"invalid leg pair ({i}, {j}) for rank {T.rank}")
        kernel = self.kernel_star if star else self.kernel
        block = self._split_front(T, (i - 1, j - 1))
        out = np.einsum("xyabce,xcye...->xayb...", kernel, block)
        return T.with_data(self._merge_back(out, (i - 1, j - 1), T.rank))

    def zero_level(self, rank: int) -> LeggedTensor:
        ensure_capacity(rank, self.leg_dim)
        return LeggedTensor(
            space=self.space, grid=self.grid,
            data=np.zeros((self.leg_dim,) * rank, dtype=complex),
        )

    def probe_pairs(self, rng: np.random.Generator, count: int = _PROBE_COUNT):
        d = self.space.dimension
        g = self.grid.size
        shape = (g, d, g, d)
        for _ in range(count):
            yield rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _apply_pair_kernel(kernel: np.ndarray, block: np.ndarray) -> np.ndarray:
    return np.einsum("xyabce,xcye->xayb", kernel, block)


def braiding(S: MatrixScatteringFunction, grid: RapidityGrid,
             tol: float = 1e-10) -> BraidingData:
    """Validated braiding data for a difference-argument scattering function.

    Unitarity and hermitian analyticity are checked first; together they make
    the exchange map a self-adjoint involution, which everything downstream
    relies on.
    """
    if S.left_space.dimension != S.right_space.dimension:
        raise StructuralError("braiding requires equal left and right dimensions")
    unitarity = check_unitarity(S, grid, tol)
    hermitian = check_hermitian_analyticity(S, grid, tol)
    if not (unitarity.passed and hermitian.passed):
        raise PreconditionError(
            f"'{S.label}' is not a valid braiding source",
            residuals={
                "unitarity": unitarity.residual,
                "hermitian_analyticity": hermitian.residual,
            },
        )
    kernel = pair_kernel(S, grid, combine="difference", picture="exchange")
    kernel_star = np.conj(np.transpose(kernel, (0, 1, 4, 5, 2, 3)))
    return BraidingData(
        space=S.left_space, grid=grid, source=S,
        kernel=kernel, kernel_star=kernel_star,
        checks={"unitarity": unitarity, "hermitian_analyticity": hermitian},
    )


def compose_permutations(sigma, tau) -> tuple:
    """Group product ``(sigma ∘ tau)(i) = sigma(tau(i))`` on 1-based tuples."""
    sigma = tuple(int(s) for s in sigma)
    tau = tuple(int(t) for t in tau)
    if len(sigma) != len(tau):
        raise StructuralError("permutations act on different leg counts")
    return tuple(sigma[t - 1] for t in tau)


def _validate_permutation(sigma) -> tuple:
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise StructuralError(f"{sigma} is not a permutation of 1..{len(sigma)}")
    return sigma


def transposition_word(sigma) -> tuple:
    """Adjacent-transposition word whose left-to-right product equals ``sigma``."""
    sigma = _validate_permutation(sigma)
    arr = list(sigma)
    swaps = []
    changed = True
    while changed:
        changed = False
        for j in range(len(arr) - 1):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                swaps.append(j + 1)
                changed = True
    return tuple(reversed(swaps))


def word_permutation(word, n: int) -> tuple:
    """Permutation realized by a word of adjacent transpositions."""
    sigma = tuple(range(1, n + 1))
    for j in reversed(tuple(int(w) for w in word)):
        if not (1 <= j <= n - 1):
            raise StructuralError(f"transposition index {j} out of range for {n} legs")
        tau = list(range(1, n + 1))
        tau[j - 1], tau[j] = tau[j], tau[j - 1]
        sigma = compose_permutations(tuple(tau), sigma)
    return sigma


def apply_word(B: BraidingData, T: LeggedTensor, word) -> LeggedTensor:
    """Apply the represented word, rightmost letter first."""
    for j in reversed(tuple(int(w) for w in word)):
        T = B.apply_phi(T, j)
    return T


def _word_for(sigma_or_word, n: int) -> tuple:
    entries = tuple(int(s) for s in sigma_or_word)
    if len(entries) == n and sorted(entries) == list(range(1, n + 1)):
        return transposition_word(entries)
    for j in entries:
        if not (1 <= j <= n - 1):
            raise StructuralError(
                f"{entries} is neither a permutation of 1..{n} nor an "
                f"adjacent-transposition word"
            )
    return entries


def _basis_images(B: BraidingData, n: int, words) -> np.ndarray:
    dim = B.leg_dim
    ensure_capacity(2 * n, dim)
    total = dim**n
    out = np.zeros((total, total), dtype=complex)
    for col in range(total):
        data = np.zeros((dim,) * n, dtype=complex)
        data[np.unravel_index(col, (dim,) * n)] = 1.0
        basis = LeggedTensor(space=B.space, grid=B.grid, data=data)
        acc = np.zeros(total, dtype=complex)
        for word in words:
            acc += apply_word(B, basis, word).data.reshape(-1)
        out[:, col] = acc
    return out


def perm_rep_matrix(B: BraidingData, n: int, sigma_or_word) -> np.ndarray:
    """Dense matrix of the represented permutation on the rank-``n`` space."""
    word = _word_for(sigma_or_word, n)
    return _basis_images(B, n, [word])


def project(B: BraidingData, T: LeggedTensor) -> LeggedTensor:
    """Symmetrization: average of all represented permutations."""
    n = T.rank
    if n < 2:
        return T
    words = [transposition_word(p) for p in itertools.permutations(range(1, n + 1))]
    total = None
    for word in words:
        image = apply_word(B, T, word)
        total = image if total is None else total.plus(image)
    return total.scaled(1.0 / math.factorial(n))


def projector_matrix(B: BraidingData, n: int) -> np.ndarray:
    """Dense symmetrizing projector on the rank-``n`` space."""
    words = [transposition_word(p) for p in itertools.permutations(range(1, n + 1))]
    return _basis_images(B, n, words) / math.factorial(n)


def flip_product_identity_check(B: BraidingData, n: int, probes: int = 4,
                                seed: int = 5, tol: float = 1e-11) -> CheckResult:
    """Total reversal versus the ordered product of pair braidings.

    On the symmetric range, reversing all legs equals applying every pair
    matrix once, ordered lexicographically with the ``(1,2)`` factor applied
    last.  The residual is the worst relative difference over seeded probes.
    """
    rng = np.random.default_rng(seed)
    dim = B.leg_dim
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    reversal = tuple(range(n, 0, -1))
    worst = 0.0
    for _ in range(probes):
        data = rng.standard_normal((dim,) * n) + 1j * rng.standard_normal((dim,) * n)
        symmetric = project(B, LeggedTensor(space=B.space, grid=B.grid, data=data))
        scale = tensor_norm(symmetric)
        if scale < 1e-300:
            continue
        lhs = permute_legs(symmetric, reversal)
        rhs = symmetric
        for i, j in reversed(pairs):
            rhs = B.apply_r(rhs, i, j)
        worst = max(worst, tensor_norm(lhs.minus(rhs)) / scale)
    return CheckResult.from_residual(
        f"flip product identity (n={n})", worst, tol, probes
    )


def _apply_leg_matrix(A: np.ndarray, data: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(A, data, axes=(1, axis)), 0, axis)


def weighted_adjoint(A: np.ndarray, space: InternalIndexSpace,
                     grid: RapidityGrid) -> np.ndarray:
    """Adjoint with respect to the quadrature-weighted inner product."""
    w = grid.leg_weights(space)
    return (A.conj().T * w[None, :]) / w[:, None]


def modular_conjugation_matrix(space: InternalIndexSpace,
                               grid: RapidityGrid) -> np.ndarray:
    """Linear part of componentwise conjugation with the bar involution."""
    d = space.dimension
    bar = np.zeros((d, d))
    for a in range(d):
        bar[a, space.bar[a]] = 1.0
    return np.kron(np.eye(grid.size), bar)


def _validate_one_particle_matrix(B: BraidingData, A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    dim = B.leg_dim
    if A.shape != (dim, dim):
        raise StructuralError(
            f"one-particle operator must be {dim} x {dim}, got {A.shape}"
        )
    return A


@dataclass(eq=False)
class SecondQuantized:
    """Legwise power of a one-particle operator, level by level."""

    braiding: BraidingData
    matrix: np.ndarray

    def apply_level(self, T: LeggedTensor) -> LeggedTensor:
        data = T.data
        for axis in range(T.rank):
            data = _apply_leg_matrix(self.matrix, data, axis)
        return T.with_data(data)

    def apply(self, psi: "FockVector") -> "FockVector":
        return FockVector(
            levels=[self.apply_level(level) for level in psi.levels],
            leakage=psi.leakage, symmetric=psi.symmetric,
        )


def second_quantize(B: BraidingData, A, tol: float = 1e-10) -> SecondQuantized:
    """Multiplicative quantization of a linear one-particle operator.

    Requires the two-fold power of the operator to commute with the braiding;
    the residual is estimated on seeded probe tensors.
    """
    A = _validate_one_particle_matrix(B, A)
    d = B.space.dimension
    g = B.grid.size
    rng = np.random.default_rng(_PROBE_SEED)
    worst = 0.0
    for probe in B.probe_pairs(rng):
        flat = probe.reshape(g * d, g * d)
        braided_first = _apply_pair_kernel(B.kernel, probe).reshape(g * d, g * d)
        lhs = A @ (A @ braided_first.T).T
        operated = (A @ (A @ flat.T).T).reshape(g, d, g, d)
        rhs = _apply_pair_kernel(B.kernel, operated).reshape(g * d, g * d)
        scale = np.linalg.norm(flat)
        worst = max(worst, np.linalg.norm(lhs - rhs) / scale)
    if worst > tol:
        raise PreconditionError(
            "operator power does not commute with the braiding",
            residuals={"intertwining": worst},
        )
    return SecondQuantized(braiding=B, matrix=A)


@dataclass(eq=False)
class HatSecondQuantized:
    """Reversal-twisted legwise power of an antilinear one-particle map.

    The map sends ``f`` to ``M conj(f)``; level ``n`` applies it on every leg
    and then reverses all legs.  Level zero conjugates the amplitude.
    """

    braiding: BraidingData
    matrix: np.ndarray

    def apply_level(self, T: LeggedTensor) -> LeggedTensor:
        data = np.conj(T.data)
        for axis in range(T.rank):
            data = _apply_leg_matrix(self.matrix, data, axis)
        out = T.with_data(data)
        if T.rank >= 2:
            out = permute_legs(out, tuple(range(T.rank, 0, -1)))
        return out

    def apply(self, psi: "FockVector") -> "FockVector":
        return FockVector(
            levels=[self.apply_level(level) for level in psi.levels],
            leakage=psi.leakage, symmetric=psi.symmetric,
        )


def hat_second_quantize(B: BraidingData, A, tol: float = 1e-10) -> HatSecondQuantized:
    """Quantize an antilinear map given by ``f -> A conj(f)``.

    The antilinear intertwining relation (operator power conjugates the
    braiding into its adjoint) is estimated on seeded probes.
    """
    A = _validate_one_particle_matrix(B, A)
    d = B.space.dimension
    g = B.grid.size
    rng = np.random.default_rng(_PROBE_SEED + 1)

    def antilinear_pair(block):
        flat = np.conj(block.reshape(g * d, g * d))
        return (A @ (A @ flat.T).T).reshape(g, d, g, d)

    worst = 0.0
    for probe in B.probe_pairs(rng):
        lhs = antilinear_pair(_apply_pair_kernel(B.kernel, probe))
        rhs = _apply_pair_kernel(B.kernel_star, antilinear_pair(probe))
        scale = np.linalg.norm(probe)
        worst = max(worst, np.linalg.norm(lhs - rhs) / scale)
    if worst > tol:
        raise PreconditionError(
            "antilinear map does not intertwine the braiding with its adjoint",
            residuals={"intertwining": worst},
        )
    return HatSecondQuantized(braiding=B, matrix=A)


@dataclass(eq=False)
class FockVector:
    """Finite particle-number vector: one legged tensor per level.

    ``leakage`` records the norm dropped past the truncation by the operation
    that produced this vector; exact statements hold only when it vanishes.
    """

    levels: list
    leakage: float = 0.0
    symmetric: bool = False

    def __post_init__(self):
        if not self.levels:
            raise StructuralError("a Fock vector needs at least the scalar level")
        for n, level in enumerate(self.levels):
            if not isinstance(level, LeggedTensor):
                raise StructuralError(f"level {n} is not a legged tensor")
            if level.rank != n:
                raise StructuralError(
                    f"level {n} has rank {level.rank}; levels must match their index"
                )
        first = self.levels[0]
        for level in self.levels[1:]:
            if (level.space.dimension != first.space.dimension
                    or not np.array_equal(level.grid.nodes, first.grid.nodes)):
                raise StructuralError("levels live over different spaces or grids")
        if self.leakage < 0.0:
            raise StructuralError(f"leakage must be nonnegative, got {self.leakage}")

    @classmethod
    def vacuum(cls, space: InternalIndexSpace, grid: RapidityGrid,
               n_max: int) -> "FockVector":
        dim = space.dimension * grid.size
        levels = [LeggedTensor(space=space, grid=grid, data=np.asarray(1.0 + 0.0j))]
        for n in range(1, n_max + 1):
            levels.append(
                LeggedTensor(space=space, grid=grid, data=np.zeros((dim,) * n, dtype=complex))
            )
        return cls(levels=levels, symmetric=True)

    @property
    def space(self) -> InternalIndexSpace:
        return self.levels[0].space

    @property
    def grid(self) -> RapidityGrid:
        return self.levels[0].grid

    @property
    def n_max(self) -> int:
        return len(self.levels) - 1

    @property
    def vacuum_amplitude(self) -> complex:
        return complex(self.levels[0].data)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(tensor_norm(level) ** 2 for level in self.levels))

    def scaled(self, factor: complex) -> "FockVector":
        return FockVector(
            levels=[level.scaled(factor) for level in self.levels],
            leakage=self.leakage * abs(factor), symmetric=self.symmetric,
        )

    def plus(self, other: "FockVector") -> "FockVector":
        if self.n_max != other.n_max:
            raise StructuralError("Fock vectors have different truncations")
        return FockVector(
            levels=[a.plus(b) for a, b in zip(self.levels, other.levels)],
            leakage=self.leakage + other.leakage,
            symmetric=self.symmetric and other.symmetric,
        )

    def minus(self, other: "FockVector") -> "FockVector":
        return self.plus(other.scaled(-1.0))


def fock_inner(a: FockVector, b: FockVector) -> complex:
    """Levelwise quadrature inner product, antilinear in the first argument."""
    if a.n_max != b.n_max:
        raise StructuralError("Fock vectors have different truncations")
    return sum(
        (inner_product(x, y) for x, y in zip(a.levels, b.levels)),
        start=complex(0.0),
    )


def number_weighted_norm(psi: FockVector, shift: float = 0.0) -> float:
    """Norm with each level weighted by ``sqrt(n + shift)``."""
    total = sum(
        (n + shift) * tensor_norm(level) ** 2 for n, level in enumerate(psi.levels)
    )
    return math.sqrt(max(total, 0.0))


def random_symmetric(B: BraidingData, n_max: int,
                     rng: np.random.Generator) -> FockVector:
    """Normalized symmetric vector with seeded dense levels."""
    dim = B.leg_dim
    levels = [
        LeggedTensor(
            space=B.space, grid=B.grid,
            data=np.asarray(complex(rng.standard_normal(), rng.standard_normal())),
        )
    ]
    for n in range(1, n_max + 1):
        data = rng.standard_normal((dim,) * n) + 1j * rng.standard_normal((dim,) * n)
        levels.append(project(B, LeggedTensor(space=B.space, grid=B.grid, data=data)))
    psi = FockVector(levels=levels, symmetric=True)
    scale = psi.norm
    if scale < 1e-300:
        raise StructuralError("degenerate random vector; reseed")
    return psi.scaled(1.0 / scale)


def _leg_vector(B: BraidingData, f) -> np.ndarray:
    f_grid = getattr(f, "grid", None)
    if f_grid is not None and not np.array_equal(f_grid.nodes, B.grid.nodes):
        raise StructuralError("one-particle argument lives on a different grid")
    values = np.asarray(getattr(f, "leg_values", f))
    if values.shape != (B.leg_dim,):
        raise StructuralError(
            f"one-particle argument must have {B.leg_dim} combined-leg entries, "
            f"got {values.shape}"
        )
    return values.astype(complex)


def _chain_symmetrize_front(B: BraidingData, raised: LeggedTensor) -> LeggedTensor:
    """Average the chains that move a fresh first leg into every slot."""
    total = raised
    current = raised
    for i in range(2, raised.rank + 1):
        current = B.apply_phi(current, i - 1)
        total = total.plus(current)
    return total.scaled(1.0 / raised.rank)


def _chain_symmetrize_back(B: BraidingData, appended: LeggedTensor) -> LeggedTensor:
    """Average the chains that move a fresh last leg into every slot."""
    total = appended
    current = appended
    for i in range(appended.rank - 1, 0, -1):
        current = B.apply_phi(current, i)
        total = total.plus(current)
    return total.scaled(1.0 / appended.rank)


def create(B: BraidingData, f, psi: FockVector, route: str = "chain") -> FockVector:
    """Symmetrized creation operator; raises every level by one particle.

    The chain route symmetrizes only the fresh leg (linear count of pair
    maps); the projector route applies the full symmetrizer and exists for
    cross-validation.
    """
    if route not in ("chain", "projector"):
        raise ParameterError(f"unknown creation route '{route}'")
    values = _leg_vector(B, f)
    levels = [B.zero_level(0)]
    dropped = 0.0
    for n in range(psi.n_max + 1):
        if not np.any(psi.levels[n].data):
            if n + 1 <= psi.n_max:
                levels.append(B.zero_level(n + 1))
            continue
        raised = outer_with_vector_front(values, psi.levels[n])
        if route == "chain":
            level = _chain_symmetrize_front(B, raised).scaled(math.sqrt(n + 1.0))
        else:
            level = project(B, raised).scaled(math.sqrt(n + 1.0))
        if n + 1 <= psi.n_max:
            levels.append(level)
        else:
            dropped = tensor_norm(level)
    return FockVector(levels=levels, leakage=dropped, symmetric=psi.symmetric)


def annihilate(B: BraidingData, f, psi: FockVector) -> FockVector:
    """Adjoint of :func:`create`: first-leg bra contraction, level down."""
    values = _leg_vector(B, f)
    levels = []
    for n in range(psi.n_max):
        lowered = contract_bra(values, 1, psi.levels[n + 1])
        levels.append(lowered.scaled(math.sqrt(n + 1.0)))
    levels.append(B.zero_level(psi.n_max))
    return FockVector(levels=levels, symmetric=psi.symmetric)


def segal_field(B: BraidingData, f, psi: FockVector) -> FockVector:
    """Sum of creation and annihilation with the same argument."""
    return create(B, f, psi).plus(annihilate(B, f, psi))


def _reflected_argument(B: BraidingData, g) -> np.ndarray:
    values = _leg_vector(B, g)
    return modular_conjugation_matrix(B.space, B.grid) @ np.conj(values)


def reflected_create(B: BraidingData, g, psi: FockVector) -> FockVector:
    """Creation conjugated by the Fock conjugation: appends on the last leg."""
    jg = _reflected_argument(B, g)
    levels = [B.zero_level(0)]
    dropped = 0.0
    for n in range(psi.n_max + 1):
        if not np.any(psi.levels[n].data):
            if n + 1 <= psi.n_max:
                levels.append(B.zero_level(n + 1))
            continue
        appended = outer_with_vector_back(psi.levels[n], jg)
        level = _chain_symmetrize_back(B, appended).scaled(math.sqrt(n + 1.0))
        if n + 1 <= psi.n_max:
            levels.append(level)
        else:
            dropped = tensor_norm(level)
    return FockVector(levels=levels, leakage=dropped, symmetric=psi.symmetric)


def reflected_annihilate(B: BraidingData, g, psi: FockVector) -> FockVector:
    """Annihilation conjugated by the Fock conjugation: last-leg bra."""
    jg = _reflected_argument(B, g)
    levels = []
    for n in range(psi.n_max):
        lowered = contract_bra(jg, n + 1, psi.levels[n + 1])
        levels.append(lowered.scaled(math.sqrt(n + 1.0)))
    levels.append(B.zero_level(psi.n_max))
    return FockVector(levels=levels, symmetric=psi.symmetric)


def reflected_field(B: BraidingData, g, psi: FockVector,
                    route: str = "closed") -> FockVector:
    """Conjugated Segal field, by closed last-leg formulas or by conjugation."""
    if route == "closed":
        return reflected_create(B, g, psi).plus(reflected_annihilate(B, g, psi))
    if route == "conjugation":
        J = hat_second_quantize(B, modular_conjugation_matrix(B.space, B.grid))
        return J.apply(segal_field(B, _leg_vector(B, g), J.apply(psi)))
    raise ParameterError(f"unknown reflected-field route '{route}'")


def check_particle_bounds(B: BraidingData, f, trials: int = 100, seed: int = 0,
                          n_max: int = 3, tol: float = 1e-12) -> CheckResult:
    """Randomized audit of the occupation-number operator bounds.

    For each seeded symmetric vector the creation norm (truncation loss added
    back) is compared with ``|f|`` times the ``(N+1)``-weighted norm, and the
    annihilation norm with ``|f|`` times the ``N``-weighted norm.  The
    residual is the worst signed excess, clipped at zero.
    """
    values = _leg_vector(B, f)
    w = B.grid.leg_weights(B.space)
    f_norm = math.sqrt(float(np.sum(w * np.abs(values) ** 2)))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        psi = random_symmetric(B, n_max, rng)
        up = create(B, values, psi)
        up_norm = math.sqrt(up.norm**2 + up.leakage**2)
        worst = max(worst, up_norm - f_norm * number_weighted_norm(psi, 1.0))
        down = annihilate(B, values, psi)
        worst = max(worst, down.norm - f_norm * number_weighted_norm(psi, 0.0))
    return CheckResult.from_residual(
        "particle bounds", max(worst, 0.0), tol, trials
    )
