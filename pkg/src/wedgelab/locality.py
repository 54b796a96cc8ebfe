"""Wedge-locality experiments for one- and two-chirality field models.

This module certifies, at finite particle number and discretized rapidity,
that half-line fields built from a braiding commute with their reflected
partners, and that the two-chirality analogue holds after conjugating one
side with the coupling twist.

Conventions used throughout
---------------------------

Two-sided states are stored as nested blocks ``blocks[m][n]`` whose first
``m`` axes are plus-chirality legs and whose last ``n`` axes are
minus-chirality legs; every leg is a combined ``(node, component)`` index
with the component fastest.

Leg numbering for chain and twist factors (1-based):

====================  ==========================================
plus leg ``i``        axis ``i - 1``
minus leg ``j``       axis ``m + j - 1``
inserted plus leg     axis ``0`` (existing plus legs shift up)
inserted minus leg    axis ``m`` (existing minus legs shift up)
====================  ==========================================

One-chirality braidings act through exchange-picture pair matrices at
rapidity differences; the cross-chirality coupling acts through its stored
matrix at rapidity sums and never exchanges legs.  The twist at block
``(m, n)`` is the ordered product of one coupling factor per (plus, minus)
leg pair, ``F(1|1) F(2|1) ... F(m|1) F(1|2) ... F(m|n)``, with the
rightmost factor applied first; the adjoint applies the conjugated factors
in the opposite order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .axioms import check_mass_compatibility
from .errors import (
    CapacityError,
    ParameterError,
    PreconditionError,
    StructuralError,
)
from .fock import (
    FockVector,
    braiding,
    create,
    modular_conjugation_matrix,
    projector_matrix,
    reflected_field,
    segal_field,
)
from .report import CheckResult, ValidationReport
from .scattering import (
    MassAssignment,
    MatrixScatteringFunction,
    assemble_block_diagonal,
    r_matrix_many,
)
from .standard_pair import (
    BumpFunction,
    OneParticleVector,
    StandardPairRep,
    check_H_membership,
    half_line_transform,
)
from .tensors import (
    CAPACITY_LOG2_LIMIT,
    InternalIndexSpace,
    RapidityGrid,
    contract_bra,
    embed_pairwise,
    outer_with_vector_front,
    tensor_norm,
)

_PROBE_SEED = 1234
_COVARIANCE_TIMES = ((0.7, -0.4), (1.3, 2.1))
_LEAKAGE_FRACTION = 1e-10


def _guard_entries(log2_entries, what):
    if log2_entries > CAPACITY_LOG2_LIMIT:
        raise CapacityError(
            f"{what} needs 2^{log2_entries:.1f} entries, above the "
            f"2^{CAPACITY_LOG2_LIMIT:.0f} budget"
        )


def _star_kernel(kernel):
    """Blockwise adjoint of a node-diagonal pair kernel."""
    return np.conj(np.transpose(kernel, (0, 1, 4, 5, 2, 3)))


def _sum_kernel(coupling, grid_left, grid_right):
    """Tabulate a cross-chirality coupling at all node sums.

    Returns an array of shape ``(G_left, G_right, dl, dr, dl, dr)`` holding
    the stored matrix of ``coupling`` at ``q_i + q'_j``.
    """
    args = (grid_left.nodes[:, None] + grid_right.nodes[None, :]).reshape(-1)
    values = coupling.eval_many(args.astype(complex))
    dl = coupling.left_space.dimension
    dr = coupling.right_space.dimension
    return values.reshape(grid_left.size, grid_right.size, dl, dr, dl, dr)


def _pair_apply(kernel, data, ax1, dims1, ax2, dims2):
    """Apply a two-leg pair kernel to raw array legs without exchanging them.

    ``kernel`` has shape ``(g1, g2, d1, d2, d1, d2)``; leg ``ax1`` of
    ``data`` carries the combined ``(g1, d1)`` index and leg ``ax2`` the
    combined ``(g2, d2)`` index.  All other axes are carried along.
    """
    g1, d1 = dims1
    g2, d2 = dims2
    moved = np.moveaxis(data, (ax1, ax2), (0, 1))
    shaped = moved.reshape((g1, d1, g2, d2) + moved.shape[2:])
    out = np.einsum("xyabce,xcye...->xayb...", kernel, shaped)
    out = out.reshape((g1 * d1, g2 * d2) + out.shape[4:])
    return np.moveaxis(out, (0, 1), (ax1, ax2))


def _phi_batch(kernel, data, j, dims):
    """Exchange-picture braiding of raw array legs ``j - 1`` and ``j``.

    Same action as the legged-tensor version but on a plain array whose
    trailing axes are carried along as a batch.
    """
    g, d = dims
    moved = np.moveaxis(data, (j - 1, j), (0, 1))
    shaped = moved.reshape((g, d, g, d) + moved.shape[2:])
    out = np.einsum("yxbace,ycxe...->xayb...", kernel, shaped)
    out = out.reshape((g * d, g * d) + out.shape[4:])
    return np.moveaxis(out, (0, 1), (j - 1, j))


def _chain_front_batch(kernel, raised, rank, dims):
    """Average of the transposition chains moving a fresh front leg through."""
    total = raised
    current = raised
    for i in range(2, rank + 1):
        current = _phi_batch(kernel, current, i - 1, dims)
        total = total + current
    return total / rank


def _chain_back_batch(kernel, appended, rank, dims):
    """Average of the transposition chains moving a fresh back leg through."""
    total = appended
    current = appended
    for i in range(rank - 1, 0, -1):
        current = _phi_batch(kernel, current, i, dims)
        total = total + current
    return total / rank


def _weighted_norm2(block, first_count, w_first, w_second):
    """Squared quadrature norm of a raw block.

    The leading ``first_count`` axes carry the weights ``w_first``; every
    remaining axis carries ``w_second``.
    """
    data = np.abs(np.asarray(block)) ** 2
    for _ in range(first_count):
        data = np.tensordot(w_first, data, axes=([0], [0]))
    while data.ndim:
        data = np.tensordot(w_second, data, axes=([0], [0]))
    return float(np.real(data))


def _certified_leg_values(f, space, grid, require_membership):
    """Flattened node samples of a half-line transform, after vetting it.

    Locality claims are only meaningful for one-particle vectors that carry
    an analyticity certificate, so raw sample-backed vectors are always
    refused.  With ``require_membership`` the full standard-subspace
    membership check runs as well.
    """
    if not isinstance(f, OneParticleVector):
        raise PreconditionError(
            "locality arguments must be one-particle vectors produced by a "
            "half-line transform"
        )
    if f.evaluator is None or f.strip != "upper":
        raise PreconditionError(
            f"one-particle vector '{f.label or 'unnamed'}' carries no upper-strip "
            "analyticity certificate; build it with a half-line transform"
        )
    if f.space.dimension != space.dimension or not np.array_equal(
        f.grid.nodes, grid.nodes
    ):
        raise StructuralError(
            "one-particle argument lives on a different grid or index space"
        )
    if require_membership:
        check = check_H_membership(f)
        if not check.passed:
            raise PreconditionError(
                f"one-particle vector '{f.label or 'unnamed'}' failed the "
                "standard-subspace membership check",
                residuals={"membership": check.residual},
            )
    return np.asarray(f.leg_values, dtype=complex)


def _reflected_values(space, grid, values):
    return modular_conjugation_matrix(space, grid) @ np.conj(values)


def _weighted_vector_norm(values, weights):
    return math.sqrt(float(np.sum(weights * np.abs(values) ** 2)))


# ---------------------------------------------------------------------------
# chain factors and the closed commutator operator
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ChainFactor:
    """One two-leg factor coupling the inserted front leg to a state leg.

    ``kernel`` has shape ``(G_front, G_target, d_front, d_target, d_front,
    d_target)`` and acts without exchanging the legs; ``target`` is the
    1-based state leg the factor couples to.
    """

    kernel: np.ndarray
    target: int
    front_dims: tuple
    target_dims: tuple

    def __post_init__(self):
        if self.target < 1:
            raise ParameterError(f"target leg must be >= 1, got {self.target}")
        g1, d1 = self.front_dims
        g2, d2 = self.target_dims
        expected = (g1, g2, d1, d2, d1, d2)
        if self.kernel.shape != expected:
            raise StructuralError(
                f"chain factor kernel has shape {self.kernel.shape}, "
                f"expected {expected}"
            )


def braid_factor(B, target):
    """Chain factor braiding the front leg with state leg ``target``.

    Uses the exchange-picture kernel of ``B`` at rapidity differences, the
    same action the symmetrizer is built from.
    """
    dims = (B.grid.size, B.space.dimension)
    return ChainFactor(
        kernel=B.kernel, target=target, front_dims=dims, target_dims=dims
    )


def identity_factor(space_front, grid_front, space_target, grid_target, target):
    """Chain factor that leaves both legs untouched."""
    d1 = space_front.dimension
    d2 = space_target.dimension
    pair_eye = np.einsum("ac,be->abce", np.eye(d1), np.eye(d2)).astype(complex)
    kernel = np.broadcast_to(
        pair_eye, (grid_front.size, grid_target.size, d1, d2, d1, d2)
    ).copy()
    return ChainFactor(
        kernel=kernel,
        target=target,
        front_dims=(grid_front.size, d1),
        target_dims=(grid_target.size, d2),
    )


@dataclass(eq=False)
class AOperator:
    """Dense closed-form commutator operator together with its certificate."""

    matrix: np.ndarray
    check: CheckResult
    legs: list


def a_operator(chain, f, g, legs, require_membership=True, tol=1e-6):
    """Dense matrix of the closed-form commutator chain and its adjoint check.

    The operator inserts ``f`` on a fresh front leg, applies the chain
    factors (given in display order, rightmost applied first), and pairs the
    front leg against the reflected ``g``.  For half-line transforms the
    result must be self-adjoint with respect to the quadrature weights; the
    residual of that comparison is returned as the certificate.
    """
    if not chain:
        raise ParameterError("chain must contain at least one factor")
    if not legs:
        raise ParameterError("at least one state leg is required")
    front_space = f.space
    front_grid = f.grid
    fvals = _certified_leg_values(f, front_space, front_grid, require_membership)
    gvals = _certified_leg_values(g, front_space, front_grid, require_membership)
    front_dims = (front_grid.size, front_space.dimension)
    leg_dims = []
    for space, grid in legs:
        leg_dims.append(grid.size * space.dimension)
    for factor in chain:
        if factor.front_dims != front_dims:
            raise StructuralError(
                "chain factor front leg does not match the inserted vector"
            )
        if factor.target > len(legs):
            raise ParameterError(
                f"chain factor targets leg {factor.target} but only "
                f"{len(legs)} state legs were given"
            )
        space, grid = legs[factor.target - 1]
        if factor.target_dims != (grid.size, space.dimension):
            raise StructuralError(
                f"chain factor target dims {factor.target_dims} do not match "
                f"state leg {factor.target}"
            )
    total = 1
    for dim in leg_dims:
        total *= dim
    _guard_entries(2.0 * math.log2(total), "closed-form commutator matrix")

    jg = _reflected_values(front_space, front_grid, gvals)
    front_weights = front_grid.leg_weights(front_space)
    wbra = front_weights * np.conj(jg)
    shape = tuple(leg_dims)
    matrix = np.empty((total, total), dtype=complex)
    chunk = max(1, (1 << 24) // max(fvals.size * total, 1))
    for start in range(0, total, chunk):
        width = min(chunk, total - start)
        basis = np.zeros((total, width), dtype=complex)
        basis[start + np.arange(width), np.arange(width)] = 1.0
        block = np.multiply.outer(fvals, basis.reshape(shape + (width,)))
        for factor in reversed(chain):
            block = _pair_apply(
                factor.kernel,
                block,
                0,
                front_dims,
                factor.target,
                factor.target_dims,
            )
        matrix[:, start:start + width] = np.tensordot(
            wbra, block, axes=([0], [0])
        ).reshape(total, width)

    w_total = np.ones(1)
    for space, grid in legs:
        w_total = np.multiply.outer(w_total, grid.leg_weights(space)).reshape(-1)
    adjoint = (matrix.conj().T * w_total[None, :]) / w_total[:, None]
    scale = max(np.linalg.norm(matrix, 2), 1e-300)
    residual = np.linalg.norm(matrix - adjoint, 2) / scale
    check = CheckResult.from_residual(
        "closed commutator self-adjointness", residual, tol, front_grid.size
    )
    return AOperator(matrix=matrix, check=check, legs=list(legs))


# ---------------------------------------------------------------------------
# one-chirality half-line commutator
# ---------------------------------------------------------------------------


def half_line_commutator(B, f, g, psi, tol=1e-5, require_membership=True):
    """Residual of the commutator between a half-line field and its reflection.

    Computes ``[reflected_field(g), segal_field(f)]`` applied to ``psi``
    through operator composition, normalized by ``|f| |g| |(N + 1) psi|``,
    and cross-checks every level against the closed-form chain operator.
    The closed form applies, per level ``n``, the braiding chain
    ``R(1, n+1) ... R(1, 2)`` to ``f`` inserted on a fresh front leg,
    pairs with the reflected ``g``, and subtracts the weighted adjoint.
    """
    if not isinstance(psi, FockVector):
        raise StructuralError("psi must be a truncated symmetric vector")
    if not psi.symmetric:
        raise PreconditionError(
            "half-line commutators are only meaningful on symmetrized states"
        )
    if psi.leakage > 0.0:
        raise PreconditionError(
            "state carries truncation leakage from an earlier operation",
            residuals={"leakage": psi.leakage},
        )
    fvals = _certified_leg_values(f, B.space, B.grid, require_membership)
    gvals = _certified_leg_values(g, B.space, B.grid, require_membership)
    jg = _reflected_values(B.space, B.grid, gvals)
    weights = B.grid.leg_weights(B.space)

    fnorm = _weighted_vector_norm(fvals, weights)
    gnorm = _weighted_vector_norm(gvals, weights)
    graded = 0.0
    for n, level in enumerate(psi.levels):
        graded += (n + 1.0) ** 2 * tensor_norm(level) ** 2
    normalizer = fnorm * gnorm * math.sqrt(graded)
    if normalizer == 0.0:
        raise PreconditionError("state and smearing vectors must be nonzero")

    term1 = reflected_field(B, gvals, segal_field(B, fvals, psi))
    term2 = segal_field(B, fvals, reflected_field(B, gvals, psi))
    dropped = term1.leakage + term2.leakage
    if dropped > _LEAKAGE_FRACTION * normalizer:
        raise PreconditionError(
            "truncation headroom is insufficient: the top occupied level "
            "would leak out of the cutoff",
            residuals={"leakage": dropped},
        )
    diff = term1.minus(term2)

    closed_levels = []
    for n, level in enumerate(psi.levels):
        if tensor_norm(level) == 0.0:
            closed_levels.append(level.scaled(0.0))
            continue
        raised = outer_with_vector_front(fvals, level)
        for k in range(2, n + 2):
            raised = B.apply_r(raised, 1, k)
        a_level = contract_bra(jg, 1, raised)
        raised_g = outer_with_vector_front(jg, level)
        for k in range(n + 1, 1, -1):
            raised_g = B.apply_r(raised_g, 1, k, star=True)
        astar_level = contract_bra(fvals, 1, raised_g)
        closed_levels.append(a_level.minus(astar_level))

    agreement2 = 0.0
    for n, closed in enumerate(closed_levels):
        agreement2 += tensor_norm(diff.levels[n].minus(closed)) ** 2
    agreement = math.sqrt(agreement2) / normalizer

    residual = diff.norm / normalizer
    return CheckResult.from_residual(
        "half-line commutator",
        residual,
        tol,
        B.grid.size,
        details={"route_agreement": agreement, "leakage": dropped},
    )


# ---------------------------------------------------------------------------
# the coupling twist
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class TwistOperator:
    """Ordered product of coupling factors over all (plus, minus) leg pairs.

    Acts on blocks whose first ``m`` axes are plus legs and next ``n`` axes
    are minus legs; trailing axes are carried along as a batch.
    """

    coupling: MatrixScatteringFunction
    grid_plus: RapidityGrid
    grid_minus: RapidityGrid
    m: int
    n: int
    kernel: np.ndarray = field(repr=False)
    kernel_star: np.ndarray = field(repr=False)

    @property
    def plus_dims(self):
        return (self.grid_plus.size, self.coupling.left_space.dimension)

    @property
    def minus_dims(self):
        return (self.grid_minus.size, self.coupling.right_space.dimension)

    @property
    def plus_leg_dim(self):
        g, d = self.plus_dims
        return g * d

    @property
    def minus_leg_dim(self):
        g, d = self.minus_dims
        return g * d

    def _pairs(self):
        return [(i, j) for j in range(1, self.n + 1) for i in range(1, self.m + 1)]

    def apply(self, data, star=False):
        """Apply the twist (or its adjoint) to a raw block.

        ``data`` must expose ``m`` plus legs followed by ``n`` minus legs;
        any further trailing axes are treated as a batch.
        """
        data = np.asarray(data, dtype=complex)
        if data.ndim < self.m + self.n:
            raise StructuralError(
                f"block has {data.ndim} axes but the twist needs at least "
                f"{self.m + self.n}"
            )
        for axis in range(self.m):
            if data.shape[axis] != self.plus_leg_dim:
                raise StructuralError(
                    f"axis {axis} has size {data.shape[axis]}, expected the "
                    f"plus leg dimension {self.plus_leg_dim}"
                )
        for axis in range(self.m, self.m + self.n):
            if data.shape[axis] != self.minus_leg_dim:
                raise StructuralError(
                    f"axis {axis} has size {data.shape[axis]}, expected the "
                    f"minus leg dimension {self.minus_leg_dim}"
                )
        kern = self.kernel_star if star else self.kernel
        order = self._pairs() if star else list(reversed(self._pairs()))
        for i, j in order:
            data = _pair_apply(
                kern, data, i - 1, self.plus_dims, self.m + j - 1, self.minus_dims
            )
        return data

    def factor_matrix(self, i, j):
        """Dense matrix of the single factor coupling plus leg ``i`` with minus leg ``j``."""
        if not (1 <= i <= self.m and 1 <= j <= self.n):
            raise ParameterError(
                f"factor ({i}, {j}) outside the ({self.m}, {self.n}) block"
            )
        gp, dp = self.plus_dims
        gm, dm = self.minus_dims
        dims = [self.plus_leg_dim] * self.m + [self.minus_leg_dim] * self.n
        total = 1
        for dim in dims:
            total *= dim
        _guard_entries(2.0 * math.log2(total), "dense twist factor")
        pair = np.einsum(
            "xyabce,xu,yv->xaybucve", self.kernel, np.eye(gp), np.eye(gm)
        ).reshape(self.plus_leg_dim * self.minus_leg_dim, -1)
        return embed_pairwise(pair, i, self.m + j, self.m + self.n, dims)

    def matrix(self):
        """Dense matrix of the full twist on the ``(m, n)`` block."""
        gp, dp = self.plus_dims
        gm, dm = self.minus_dims
        log2_total = 2.0 * (
            self.m * math.log2(self.plus_leg_dim)
            + self.n * math.log2(self.minus_leg_dim)
        )
        _guard_entries(log2_total, "dense twist matrix")
        total = self.plus_leg_dim**self.m * self.minus_leg_dim**self.n
        if self.m == 0 or self.n == 0:
            return np.eye(total, dtype=complex)
        out = None
        for i, j in self._pairs():
            fm = self.factor_matrix(i, j)
            out = fm if out is None else out @ fm
        return out


def twist(s_lr, grid_plus, grid_minus, m, n):
    """Build the coupling twist for the ``(m, n)`` two-sided block."""
    if s_lr.kind != "lr":
        raise StructuralError(
            f"the twist needs a cross-chirality coupling, got kind '{s_lr.kind}'"
        )
    if m < 0 or n < 0:
        raise ParameterError(f"block indices must be nonnegative, got ({m}, {n})")
    kernel = _sum_kernel(s_lr, grid_plus, grid_minus)
    return TwistOperator(
        coupling=s_lr,
        grid_plus=grid_plus,
        grid_minus=grid_minus,
        m=int(m),
        n=int(n),
        kernel=kernel,
        kernel_star=_star_kernel(kernel),
    )


def twist_projector_commutation(
    rplus, s_lr, rminus, grid_plus, grid_minus, m, n, tol=1e-11
):
    """Commutators of the twist with both one-sided symmetrizers.

    Returns ``{"left": ..., "right": ...}`` where the left entry measures
    ``[twist, P_plus (x) 1]`` and the right entry ``[twist, 1 (x) P_minus]``
    in operator norm.  Both vanish exactly when the coupling solves the
    mixed exchange identities against the two braidings.
    """
    if m < 1 or n < 1:
        raise ParameterError(
            f"projector commutation needs at least one leg per side, got ({m}, {n})"
        )
    Bp = braiding(rplus, grid_plus)
    Bm = braiding(rminus, grid_minus)
    tw = twist(s_lr, grid_plus, grid_minus, m, n)
    dense = tw.matrix()
    proj_plus = projector_matrix(Bp, m)
    proj_minus = projector_matrix(Bm, n)
    dim_plus = tw.plus_leg_dim**m
    dim_minus = tw.minus_leg_dim**n
    left_op = np.kron(proj_plus, np.eye(dim_minus))
    right_op = np.kron(np.eye(dim_plus), proj_minus)
    left_res = np.linalg.norm(dense @ left_op - left_op @ dense, 2)
    right_res = np.linalg.norm(dense @ right_op - right_op @ dense, 2)
    return {
        "left": CheckResult.from_residual(
            "twist projector commutation (left)", left_res, tol, grid_plus.size
        ),
        "right": CheckResult.from_residual(
            "twist projector commutation (right)", right_res, tol, grid_minus.size
        ),
    }


# ---------------------------------------------------------------------------
# two-sided states and graded field operators
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class TwoSidedState:
    """Truncated state on the tensor product of two chiral towers.

    ``blocks[m][n]`` holds the ``(m, n)`` component with ``m`` plus legs
    followed by ``n`` minus legs.
    """

    plus_space: InternalIndexSpace
    plus_grid: RapidityGrid
    minus_space: InternalIndexSpace
    minus_grid: RapidityGrid
    blocks: list
    leakage: float = 0.0
    symmetric: bool = False

    def __post_init__(self):
        if self.leakage < 0.0:
            raise StructuralError("leakage must be nonnegative")
        if not self.blocks or not self.blocks[0]:
            raise StructuralError("blocks must contain at least the (0, 0) entry")
        dp = self.plus_grid.size * self.plus_space.dimension
        dm = self.minus_grid.size * self.minus_space.dimension
        width = len(self.blocks[0])
        converted = []
        for m, row in enumerate(self.blocks):
            if len(row) != width:
                raise StructuralError("blocks must form a rectangular table")
            new_row = []
            for n, block in enumerate(row):
                arr = np.asarray(block, dtype=complex)
                expected = (dp,) * m + (dm,) * n
                if arr.shape != expected:
                    raise StructuralError(
                        f"block ({m}, {n}) has shape {arr.shape}, "
                        f"expected {expected}"
                    )
                if not np.all(np.isfinite(arr)):
                    raise StructuralError(f"block ({m}, {n}) has non-finite entries")
                new_row.append(arr)
            converted.append(new_row)
        self.blocks = converted

    @classmethod
    def from_product(cls, psi, phi):
        """Tensor product of two truncated one-chirality vectors."""
        if not isinstance(psi, FockVector) or not isinstance(phi, FockVector):
            raise StructuralError("both factors must be truncated vectors")
        top_log2 = psi.n_max * math.log2(
            max(psi.grid.size * psi.space.dimension, 2)
        ) + phi.n_max * math.log2(max(phi.grid.size * phi.space.dimension, 2))
        _guard_entries(top_log2, "two-sided product state")
        blocks = []
        for level_p in psi.levels:
            row = []
            for level_m in phi.levels:
                row.append(
                    np.multiply.outer(
                        np.asarray(level_p.data), np.asarray(level_m.data)
                    )
                )
            blocks.append(row)
        return cls(
            plus_space=psi.space,
            plus_grid=psi.grid,
            minus_space=phi.space,
            minus_grid=phi.grid,
            blocks=blocks,
            leakage=psi.leakage + phi.leakage,
            symmetric=psi.symmetric and phi.symmetric,
        )

    @property
    def m_max(self):
        return len(self.blocks) - 1

    @property
    def n_max(self):
        return len(self.blocks[0]) - 1

    @property
    def norm(self):
        wp = self.plus_grid.leg_weights(self.plus_space)
        wm = self.minus_grid.leg_weights(self.minus_space)
        total = 0.0
        for m, row in enumerate(self.blocks):
            for block in row:
                total += _weighted_norm2(block, m, wp, wm)
        return math.sqrt(total)


def _zero_blocks_like(blocks):
    return [[np.zeros_like(block) for block in row] for row in blocks]


def _swap_blocks(blocks):
    """Transpose the block table so the minus legs lead.

    Involutive; used to run the plus-leg graded operators on the minus side.
    """
    m_count = len(blocks)
    n_count = len(blocks[0])
    out = [[None] * m_count for _ in range(n_count)]
    for m in range(m_count):
        for n in range(n_count):
            block = blocks[m][n]
            axes = tuple(range(m, m + n)) + tuple(range(m))
            out[n][m] = np.transpose(block, axes)
    return out


def _graded_segal(B, values, blocks, w_act, w_other):
    """Segal field acting on the leading (row) grading of a block table.

    Returns the new table and the quadrature norm of the content dropped at
    the truncation boundary.
    """
    rows = len(blocks) - 1
    dims = (B.grid.size, B.space.dimension)
    wbra = w_act * np.conj(values)
    new = _zero_blocks_like(blocks)
    dropped2 = 0.0
    for a in range(rows + 1):
        for b in range(len(blocks[a])):
            block = blocks[a][b]
            if a + 1 <= rows:
                upper = blocks[a + 1][b]
                if np.any(upper):
                    new[a][b] = new[a][b] + math.sqrt(a + 1.0) * np.tensordot(
                        wbra, upper, axes=([0], [0])
                    )
            if np.any(block):
                raised = np.multiply.outer(values, block)
                level = math.sqrt(a + 1.0) * _chain_front_batch(
                    B.kernel, raised, a + 1, dims
                )
                if a + 1 <= rows:
                    new[a + 1][b] = new[a + 1][b] + level
                else:
                    dropped2 += _weighted_norm2(level, a + 1, w_act, w_other)
    return new, math.sqrt(dropped2)


def _graded_reflected(B, jg, blocks, w_act, w_other):
    """Reflected Segal field on the leading grading of a block table."""
    rows = len(blocks) - 1
    dims = (B.grid.size, B.space.dimension)
    wbra = w_act * np.conj(jg)
    new = _zero_blocks_like(blocks)
    dropped2 = 0.0
    for a in range(rows + 1):
        for b in range(len(blocks[a])):
            block = blocks[a][b]
            if a + 1 <= rows:
                upper = blocks[a + 1][b]
                if np.any(upper):
                    new[a][b] = new[a][b] + math.sqrt(a + 1.0) * np.tensordot(
                        wbra, upper, axes=([0], [a])
                    )
            if np.any(block):
                appended = np.moveaxis(np.multiply.outer(jg, block), 0, a)
                level = math.sqrt(a + 1.0) * _chain_back_batch(
                    B.kernel, appended, a + 1, dims
                )
                if a + 1 <= rows:
                    new[a + 1][b] = new[a + 1][b] + level
                else:
                    dropped2 += _weighted_norm2(level, a + 1, w_act, w_other)
    return new, math.sqrt(dropped2)


def _twist_table(kernel, kernel_star, blocks, dims_p, dims_m, star):
    """Apply the block-dependent twist to every entry of a block table."""
    out = []
    for m, row in enumerate(blocks):
        new_row = []
        for n, block in enumerate(row):
            data = block
            pairs = [(i, j) for j in range(1, n + 1) for i in range(1, m + 1)]
            kern = kernel_star if star else kernel
            order = pairs if star else list(reversed(pairs))
            for i, j in order:
                data = _pair_apply(kern, data, i - 1, dims_p, m + j - 1, dims_m)
            new_row.append(data)
        out.append(new_row)
    return out


def _graded_state_norm(blocks, side, wp, wm):
    total = 0.0
    for m, row in enumerate(blocks):
        for n, block in enumerate(row):
            k = m if side == "left" else n
            total += (k + 1.0) ** 2 * _weighted_norm2(block, m, wp, wm)
    return math.sqrt(total)


def twisted_commutator(
    bundle, f, g, state, side="left", tol=1e-5, require_membership=True
):
    """Residual of the twisted commutator on one side of a two-sided state.

    The field on the acting side is conjugated with the coupling twist
    before commuting with the reflected field on the same side.  The
    composition route is normalized by the acting-side graded norm of the
    state; the closed route applies, per block, the mixed chain of coupling
    factors and braidings and subtracts its weighted adjoint, and the
    distance between the two enters the details as ``route_agreement``.
    """
    if side not in ("left", "right"):
        raise ParameterError(f"side must be 'left' or 'right', got '{side}'")
    if not isinstance(state, TwoSidedState):
        raise StructuralError("state must be a two-sided product state")
    if bundle.kind not in ("massless", "massive"):
        raise ParameterError(f"unsupported bundle kind '{bundle.kind}'")
    if (
        state.plus_space.dimension != bundle.plus.space.dimension
        or state.minus_space.dimension != bundle.minus.space.dimension
        or not np.array_equal(state.plus_grid.nodes, bundle.plus.grid.nodes)
        or not np.array_equal(state.minus_grid.nodes, bundle.minus.grid.nodes)
    ):
        raise StructuralError("state does not live on the bundle's legs")
    if not state.symmetric:
        raise PreconditionError(
            "twisted commutators are only meaningful on symmetrized states"
        )
    if state.leakage > 0.0:
        raise PreconditionError(
            "state carries truncation leakage from an earlier operation",
            residuals={"leakage": state.leakage},
        )

    Bp = braiding(bundle.plus.scattering, bundle.plus.grid)
    Bm = braiding(bundle.minus.scattering, bundle.minus.grid)
    acting = Bp if side == "left" else Bm
    fvals = _certified_leg_values(f, acting.space, acting.grid, require_membership)
    gvals = _certified_leg_values(g, acting.space, acting.grid, require_membership)
    jg = _reflected_values(acting.space, acting.grid, gvals)

    wp = bundle.plus.grid.leg_weights(bundle.plus.space)
    wm = bundle.minus.grid.leg_weights(bundle.minus.space)
    w_act = wp if side == "left" else wm
    dims_p = (bundle.plus.grid.size, bundle.plus.space.dimension)
    dims_m = (bundle.minus.grid.size, bundle.minus.space.dimension)
    kernel_lr = _sum_kernel(bundle.coupling, bundle.plus.grid, bundle.minus.grid)
    kernel_lr_star = _star_kernel(kernel_lr)

    top_log2 = (state.m_max + (1 if side == "left" else 0)) * math.log2(
        max(dims_p[0] * dims_p[1], 2)
    ) + (state.n_max + (1 if side == "right" else 0)) * math.log2(
        max(dims_m[0] * dims_m[1], 2)
    )
    _guard_entries(top_log2, "twisted commutator intermediate")

    fnorm = _weighted_vector_norm(fvals, w_act)
    gnorm = _weighted_vector_norm(gvals, w_act)
    normalizer = fnorm * gnorm * _graded_state_norm(state.blocks, side, wp, wm)
    if normalizer == 0.0:
        raise PreconditionError("state and smearing vectors must be nonzero")

    def tw(blocks, star):
        return _twist_table(kernel_lr, kernel_lr_star, blocks, dims_p, dims_m, star)

    def seg(blocks):
        if side == "left":
            return _graded_segal(Bp, fvals, blocks, wp, wm)
        swapped = _swap_blocks(blocks)
        out, dropped = _graded_segal(Bm, fvals, swapped, wm, wp)
        return _swap_blocks(out), dropped

    def refl(blocks):
        if side == "left":
            return _graded_reflected(Bp, jg, blocks, wp, wm)
        swapped = _swap_blocks(blocks)
        out, dropped = _graded_reflected(Bm, jg, swapped, wm, wp)
        return _swap_blocks(out), dropped

    a1 = tw(state.blocks, star=True)
    a2, drop_a = seg(a1)
    a3 = tw(a2, star=False)
    term1, drop_b = refl(a3)
    b1, drop_c = refl(state.blocks)
    b2 = tw(b1, star=True)
    b3, drop_d = seg(b2)
    term2 = tw(b3, star=False)
    dropped = drop_a + drop_b + drop_c + drop_d
    if dropped > _LEAKAGE_FRACTION * normalizer:
        raise PreconditionError(
            "truncation headroom is insufficient: the top occupied level "
            "would leak out of the cutoff",
            residuals={"leakage": dropped},
        )

    diff = [
        [term1[m][n] - term2[m][n] for n in range(state.n_max + 1)]
        for m in range(state.m_max + 1)
    ]

    closed = _zero_blocks_like(state.blocks)
    for m in range(state.m_max + 1):
        for n in range(state.n_max + 1):
            block = state.blocks[m][n]
            if not np.any(block):
                continue
            if side == "left":
                closed[m][n] = _closed_left_block(
                    block, m, n, fvals, jg, Bp, kernel_lr, kernel_lr_star,
                    dims_p, dims_m, wp,
                )
            else:
                closed[m][n] = _closed_right_block(
                    block, m, n, fvals, jg, Bm, kernel_lr, kernel_lr_star,
                    dims_p, dims_m, wm,
                )

    diff2 = 0.0
    agree2 = 0.0
    for m in range(state.m_max + 1):
        for n in range(state.n_max + 1):
            diff2 += _weighted_norm2(diff[m][n], m, wp, wm)
            agree2 += _weighted_norm2(diff[m][n] - closed[m][n], m, wp, wm)
    residual = math.sqrt(diff2) / normalizer
    agreement = math.sqrt(agree2) / normalizer
    return CheckResult.from_residual(
        f"twisted commutator ({side})",
        residual,
        tol,
        acting.grid.size,
        details={"route_agreement": agreement, "leakage": dropped},
    )


def _closed_left_block(
    block, m, n, fvals, jg, Bp, kernel_lr, kernel_lr_star, dims_p, dims_m, wp
):
    """Closed-form level-preserving commutator on one block, left side.

    Chain: insert ``f`` on a fresh plus front leg, couple it to every minus
    leg (rightmost coupling factor first), braid it through the plus legs,
    then pair against the reflected ``g``; subtract the weighted adjoint.
    """
    ins = np.multiply.outer(fvals, block)
    for j in range(n, 0, -1):
        ins = _pair_apply(kernel_lr, ins, 0, dims_p, m + j, dims_m)
    for k in range(2, m + 2):
        ins = _pair_apply(Bp.kernel, ins, 0, dims_p, k - 1, dims_p)
    a_part = np.tensordot(wp * np.conj(jg), ins, axes=([0], [0]))

    ins2 = np.multiply.outer(jg, block)
    for k in range(m + 1, 1, -1):
        ins2 = _pair_apply(Bp.kernel_star, ins2, 0, dims_p, k - 1, dims_p)
    for j in range(1, n + 1):
        ins2 = _pair_apply(kernel_lr_star, ins2, 0, dims_p, m + j, dims_m)
    astar_part = np.tensordot(wp * np.conj(fvals), ins2, axes=([0], [0]))
    return a_part - astar_part


def _closed_right_block(
    block, m, n, fvals, jg, Bm, kernel_lr, kernel_lr_star, dims_p, dims_m, wm
):
    """Closed-form level-preserving commutator on one block, right side."""
    ins = np.moveaxis(np.multiply.outer(fvals, block), 0, m)
    for i in range(m, 0, -1):
        ins = _pair_apply(kernel_lr, ins, i - 1, dims_p, m, dims_m)
    for k in range(2, n + 2):
        ins = _pair_apply(Bm.kernel, ins, m, dims_m, m + k - 1, dims_m)
    b_part = np.tensordot(wm * np.conj(jg), ins, axes=([0], [m]))

    ins2 = np.moveaxis(np.multiply.outer(jg, block), 0, m)
    for k in range(n + 1, 1, -1):
        ins2 = _pair_apply(Bm.kernel_star, ins2, m, dims_m, m + k - 1, dims_m)
    for i in range(1, m + 1):
        ins2 = _pair_apply(kernel_lr_star, ins2, i - 1, dims_p, m, dims_m)
    bstar_part = np.tensordot(wm * np.conj(fvals), ins2, axes=([0], [m]))
    return b_part - bstar_part


# ---------------------------------------------------------------------------
# bundles of scattering data for the two-chirality constructions
# ---------------------------------------------------------------------------

_BUNDLE_KINDS = ("massless", "massive")


@dataclass(eq=False)
class SideData:
    """One chirality of a bundle: its index space, grid, and braiding source."""

    space: InternalIndexSpace
    grid: RapidityGrid
    scattering: MatrixScatteringFunction
    n_max: int = 2

    def __post_init__(self):
        if self.n_max < 0:
            raise ParameterError(f"n_max must be nonnegative, got {self.n_max}")
        if self.scattering.left_space.dimension != self.space.dimension:
            raise StructuralError(
                "side scattering function does not match the side index space"
            )


@dataclass(eq=False)
class TripleBundle:
    """Scattering data for a pair of chiral halves and their coupling.

    ``generators`` holds the real, per-leg translation multipliers used by
    the covariance checks: massless bundles carry one array per side
    ("plus own", "minus own"), massive bundles add the opposite-lightray
    arrays ("plus opposite", "minus opposite").
    """

    kind: str
    plus: SideData
    minus: SideData
    coupling: MatrixScatteringFunction
    generators: dict
    masses_plus: MassAssignment = None
    masses_minus: MassAssignment = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in _BUNDLE_KINDS:
            raise ParameterError(
                f"bundle kind must be one of {_BUNDLE_KINDS}, got '{self.kind}'"
            )
        if self.coupling.kind != "lr":
            raise StructuralError(
                f"bundle coupling must be cross-chirality, got kind "
                f"'{self.coupling.kind}'"
            )
        if (
            self.coupling.left_space.dimension != self.plus.space.dimension
            or self.coupling.right_space.dimension != self.minus.space.dimension
        ):
            raise StructuralError("coupling dimensions do not match the two sides")
        if self.kind == "massive":
            if self.masses_plus is None or self.masses_minus is None:
                raise ParameterError("massive bundles need masses on both sides")
        expected = {"plus own", "minus own"}
        if self.kind == "massive":
            expected |= {"plus opposite", "minus opposite"}
        if set(self.generators) != expected:
            raise ParameterError(
                f"generator table must have keys {sorted(expected)}, got "
                f"{sorted(self.generators)}"
            )
        sizes = {
            "plus own": self.plus.grid.size * self.plus.space.dimension,
            "plus opposite": self.plus.grid.size * self.plus.space.dimension,
            "minus own": self.minus.grid.size * self.minus.space.dimension,
            "minus opposite": self.minus.grid.size * self.minus.space.dimension,
        }
        converted = {}
        for name, arr in self.generators.items():
            values = np.asarray(arr)
            if np.iscomplexobj(values):
                raise ParameterError(f"generator '{name}' must be real")
            values = values.astype(float)
            if values.shape != (sizes[name],):
                raise StructuralError(
                    f"generator '{name}' has shape {values.shape}, expected "
                    f"({sizes[name]},)"
                )
            if not np.all(np.isfinite(values)):
                raise StructuralError(f"generator '{name}' has non-finite entries")
            converted[name] = values
        self.generators = converted


def make_massless_bundle(
    rplus, rminus, coupling, grid_plus, grid_minus, n_max=2, label=""
):
    """Bundle two chiral halves with lightray translation multipliers ``e^q``."""
    plus = SideData(rplus.left_space, grid_plus, rplus, n_max)
    minus = SideData(rminus.left_space, grid_minus, rminus, n_max)
    generators = {
        "plus own": np.repeat(np.exp(grid_plus.nodes), plus.space.dimension),
        "minus own": np.repeat(np.exp(grid_minus.nodes), minus.space.dimension),
    }
    return TripleBundle(
        kind="massless",
        plus=plus,
        minus=minus,
        coupling=coupling,
        generators=generators,
        label=label,
    )


def make_massive_bundle(
    rplus,
    rminus,
    coupling,
    grid_plus,
    grid_minus,
    masses_plus,
    masses_minus,
    n_max=2,
    label="",
):
    """Bundle two massive halves with both lightray multiplier families.

    Each side carries its own-lightray multiplier ``e^q`` and the opposite
    multiplier ``mass^2 e^{-q}``, with the component index fastest.
    """
    plus = SideData(rplus.left_space, grid_plus, rplus, n_max)
    minus = SideData(rminus.left_space, grid_minus, rminus, n_max)
    if masses_plus.space.dimension != plus.space.dimension:
        raise StructuralError("plus masses do not match the plus index space")
    if masses_minus.space.dimension != minus.space.dimension:
        raise StructuralError("minus masses do not match the minus index space")
    mp = np.tile(np.asarray(masses_plus.masses, dtype=float), grid_plus.size)
    mm = np.tile(np.asarray(masses_minus.masses, dtype=float), grid_minus.size)
    generators = {
        "plus own": np.repeat(np.exp(grid_plus.nodes), plus.space.dimension),
        "plus opposite": mp**2 * np.repeat(
            np.exp(-grid_plus.nodes), plus.space.dimension
        ),
        "minus own": np.repeat(np.exp(grid_minus.nodes), minus.space.dimension),
        "minus opposite": mm**2 * np.repeat(
            np.exp(-grid_minus.nodes), minus.space.dimension
        ),
    }
    return TripleBundle(
        kind="massive",
        plus=plus,
        minus=minus,
        coupling=coupling,
        generators=generators,
        masses_plus=masses_plus,
        masses_minus=masses_minus,
        label=label,
    )


# ---------------------------------------------------------------------------
# assembled certification runs
# ---------------------------------------------------------------------------


def _probe_blocks(rng, shapes):
    out = []
    for shape in shapes:
        block = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        out.append(block)
    return out


def _scale_block_axes(block, m, n, phases_plus, phases_minus):
    out = block
    for axis in range(m):
        shape = [1] * block.ndim
        shape[axis] = phases_plus.size
        out = out * phases_plus.reshape(shape)
    for axis in range(m, m + n):
        shape = [1] * block.ndim
        shape[axis] = phases_minus.size
        out = out * phases_minus.reshape(shape)
    return out


def _covariance_residual(bundle, tol):
    """Worst relative commutation defect of the twist with translations.

    Massless bundles translate each side along its own lightray; massive
    bundles use both lightray multipliers per side so that the check probes
    the full two-parameter group.
    """
    dims_p = (bundle.plus.grid.size, bundle.plus.space.dimension)
    dims_m = (bundle.minus.grid.size, bundle.minus.space.dimension)
    rng = np.random.default_rng(_PROBE_SEED)
    worst = 0.0
    for m, n in ((1, 1), (2, 1)):
        tw = twist(bundle.coupling, bundle.plus.grid, bundle.minus.grid, m, n)
        shapes = [
            (dims_p[0] * dims_p[1],) * m + (dims_m[0] * dims_m[1],) * n
        ] * 3
        for block in _probe_blocks(rng, shapes):
            scale = np.linalg.norm(block.reshape(-1))
            for t_plus, t_minus in _COVARIANCE_TIMES:
                if bundle.kind == "massless":
                    up = np.exp(1j * t_plus * bundle.generators["plus own"])
                    um = np.exp(1j * t_minus * bundle.generators["minus own"])
                else:
                    up = np.exp(
                        1j
                        * (
                            t_plus * bundle.generators["plus own"]
                            + t_minus * bundle.generators["plus opposite"]
                        )
                    )
                    um = np.exp(
                        1j
                        * (
                            t_plus * bundle.generators["minus opposite"]
                            + t_minus * bundle.generators["minus own"]
                        )
                    )
                lhs = tw.apply(_scale_block_axes(block, m, n, up, um))
                rhs = _scale_block_axes(tw.apply(block), m, n, up, um)
                worst = max(
                    worst, np.linalg.norm((lhs - rhs).reshape(-1)) / scale
                )
    return CheckResult.from_residual(
        "twist translation covariance", worst, tol, bundle.plus.grid.size
    )


def _one_sided_residual(bundle, tol):
    """Check that the twist is the identity on purely one-sided blocks."""
    dims_p = (bundle.plus.grid.size, bundle.plus.space.dimension)
    dims_m = (bundle.minus.grid.size, bundle.minus.space.dimension)
    dp = dims_p[0] * dims_p[1]
    dm = dims_m[0] * dims_m[1]
    rng = np.random.default_rng(_PROBE_SEED + 1)
    worst = 0.0
    cases = [((), 0, 0)]
    cases += [((dp,) * m, m, 0) for m in (1, 2)]
    cases += [((dm,) * n, 0, n) for n in (1, 2)]
    for shape, m, n in cases:
        block = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        tw = twist(bundle.coupling, bundle.plus.grid, bundle.minus.grid, m, n)
        moved = tw.apply(np.asarray(block, dtype=complex))
        scale = max(np.linalg.norm(np.asarray(block).reshape(-1)), 1e-300)
        worst = max(
            worst,
            np.linalg.norm((moved - block).reshape(-1)) / scale,
        )
    return CheckResult.from_residual(
        "twist fixes one-sided states", worst, tol, bundle.plus.grid.size
    )


def _bundle_transform(space, grid, center, halfwidth):
    rep = StandardPairRep(space, grid)
    return half_line_transform(
        BumpFunction(center, halfwidth, 1.0), 1, rep, quad_limit=400
    )


def _single_particle(B, vector, n_max):
    base = FockVector.vacuum(B.space, B.grid, n_max)
    state = create(B, vector, base)
    return state.scaled(1.0 / state.norm)


def assemble_massless(bundle, tol_algebraic=1e-11, tol_commutator=1e-5):
    """Full certification run for a massless two-chirality bundle.

    Checks, in order: twist translation covariance, the twist acting as the
    identity on one-sided states, and the left and right twisted
    commutators on smeared half-line fields.
    """
    if not isinstance(bundle, TripleBundle):
        raise StructuralError("expected a bundle of scattering data")
    if bundle.kind != "massless":
        raise ParameterError(
            f"expected a massless bundle, got kind '{bundle.kind}'"
        )
    report = ValidationReport(
        provenance={
            "label": bundle.label,
            "kind": bundle.kind,
            "grid_plus": bundle.plus.grid.size,
            "grid_minus": bundle.minus.grid.size,
            "plus_dimension": bundle.plus.space.dimension,
            "minus_dimension": bundle.minus.space.dimension,
        }
    )
    report.add(_covariance_residual(bundle, tol_algebraic))
    report.add(_one_sided_residual(bundle, tol_algebraic))

    Bp = braiding(bundle.plus.scattering, bundle.plus.grid)
    Bm = braiding(bundle.minus.scattering, bundle.minus.grid)
    f_plus = _bundle_transform(bundle.plus.space, bundle.plus.grid, 0.25, 0.2)
    g_plus = _bundle_transform(bundle.plus.space, bundle.plus.grid, 0.3, 0.22)
    h_minus = _bundle_transform(bundle.minus.space, bundle.minus.grid, 1.0, 0.8)
    state_left = TwoSidedState.from_product(
        FockVector.vacuum(bundle.plus.space, bundle.plus.grid, 2),
        _single_particle(Bm, h_minus, 1),
    )
    left = twisted_commutator(
        bundle, f_plus, g_plus, state_left, side="left", tol=tol_commutator
    )
    report.add(
        CheckResult.from_residual(
            "left twisted commutator",
            left.residual,
            tol_commutator,
            bundle.plus.grid.size,
            details=left.details,
        )
    )

    f_minus = _bundle_transform(bundle.minus.space, bundle.minus.grid, 0.25, 0.2)
    g_minus = _bundle_transform(bundle.minus.space, bundle.minus.grid, 0.3, 0.22)
    h_plus = _bundle_transform(bundle.plus.space, bundle.plus.grid, 1.0, 0.8)
    state_right = TwoSidedState.from_product(
        _single_particle(Bp, h_plus, 1),
        FockVector.vacuum(bundle.minus.space, bundle.minus.grid, 2),
    )
    right = twisted_commutator(
        bundle, f_minus, g_minus, state_right, side="right", tol=tol_commutator
    )
    report.add(
        CheckResult.from_residual(
            "right twisted commutator",
            right.residual,
            tol_commutator,
            bundle.minus.grid.size,
            details=right.details,
        )
    )
    return report


def _assembled_matrix_residual(bundle, tol):
    """Compare the block-diagonal assembly against an embedding construction.

    The assembled two-particle matrix is rebuilt from the four sector
    blocks with explicit embedding isometries and compared entrywise on a
    stride of grid nodes; structural zeros are compared as well.
    """
    rplus = bundle.plus.scattering
    rminus = bundle.minus.scattering
    coupling = bundle.coupling
    dp = rplus.left_space.dimension
    dm = rminus.left_space.dimension
    total = dp + dm
    ep = np.zeros((total, dp))
    ep[:dp, :] = np.eye(dp)
    em = np.zeros((total, dm))
    em[dp:, :] = np.eye(dm)

    assembled = assemble_block_diagonal(rplus, coupling, rminus)
    stride = max(1, bundle.plus.grid.size // 8)
    points = bundle.plus.grid.nodes[::stride].astype(complex)
    worst = 0.0
    for z in points:
        direct = assembled.eval_matrix(z)
        rp = r_matrix_many(rplus, np.array([1j * np.pi - z]))[0].reshape(
            dp, dp, dp, dp
        )
        rm = r_matrix_many(rminus, np.array([z]))[0].reshape(dm, dm, dm, dm)
        sl = coupling.eval_matrix(z).reshape(dp, dm, dp, dm)
        block_pp = np.transpose(rp, (3, 2, 0, 1)).reshape(dp * dp, dp * dp)
        block_mm = np.transpose(rm, (3, 2, 0, 1)).reshape(dm * dm, dm * dm)
        block_mp = np.transpose(sl, (3, 2, 0, 1)).reshape(dm * dp, dp * dm)
        block_pm = np.conj(np.transpose(sl, (0, 1, 3, 2))).reshape(
            dp * dm, dm * dp
        )
        rebuilt = (
            np.kron(ep, ep) @ block_pp @ np.kron(ep, ep).T
            + np.kron(em, em) @ block_mm @ np.kron(em, em).T
            + np.kron(em, ep) @ block_mp @ np.kron(ep, em).T
            + np.kron(ep, em) @ block_pm @ np.kron(em, ep).T
        )
        worst = max(worst, float(np.max(np.abs(direct - rebuilt))))
    return CheckResult.from_residual(
        "assembled two-particle matrix", worst, tol, points.size
    )


def assemble_massive(bundle, tol_algebraic=1e-11, tol_matrix=1e-12):
    """Full certification run for a massive two-chirality bundle.

    Checks, in order: positivity of all translation multipliers, twist
    covariance under the two-parameter translation group, the mass
    compatibility of each side's exchange tensor, and the block-diagonal
    two-particle matrix against an independent embedding construction.
    """
    if not isinstance(bundle, TripleBundle):
        raise StructuralError("expected a bundle of scattering data")
    if bundle.kind != "massive":
        raise ParameterError(f"expected a massive bundle, got kind '{bundle.kind}'")
    report = ValidationReport(
        provenance={
            "label": bundle.label,
            "kind": bundle.kind,
            "grid_plus": bundle.plus.grid.size,
            "grid_minus": bundle.minus.grid.size,
            "plus_dimension": bundle.plus.space.dimension,
            "minus_dimension": bundle.minus.space.dimension,
        }
    )
    worst_min = min(float(arr.min()) for arr in bundle.generators.values())
    positivity = 0.0 if worst_min > 0.0 else 1.0 + abs(worst_min)
    report.add(
        CheckResult.from_residual(
            "generator positivity", positivity, 0.0, bundle.plus.grid.size
        )
    )
    report.add(_covariance_residual(bundle, tol_algebraic))
    plus_check = check_mass_compatibility(
        bundle.plus.scattering, bundle.masses_plus, bundle.plus.grid
    )
    report.add(
        CheckResult.from_residual(
            "mass compatibility (plus)",
            plus_check.residual,
            plus_check.tolerance,
            plus_check.samples,
            details=plus_check.details,
        )
    )
    minus_check = check_mass_compatibility(
        bundle.minus.scattering, bundle.masses_minus, bundle.minus.grid
    )
    report.add(
        CheckResult.from_residual(
            "mass compatibility (minus)",
            minus_check.residual,
            minus_check.tolerance,
            minus_check.samples,
            details=minus_check.details,
        )
    )
    report.add(_assembled_matrix_residual(bundle, tol_matrix))
    return report
