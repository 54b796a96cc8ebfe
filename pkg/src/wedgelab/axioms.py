"""Numerical checks for the exchange and analyticity axioms.

Every check returns a :class:`~wedgelab.report.CheckResult` whose residual
is a grid maximum of an operator 2-norm (matrix identities) or an absolute
entry difference (index identities).  Checks never raise on a violation;
they raise only for structural misuse or insufficient evaluation domains.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import InsufficientDomainError, StructuralError
from .report import CheckResult
from .scattering import (
    MatrixScatteringFunction,
    as_r_matrix,
    check_flip_residual,
    r_matrix_many,
)
from .tensors import RapidityGrid, embed_pairwise

DEFAULT_TOL_ALGEBRAIC = 1e-10
DEFAULT_TOL_QUADRATURE = 1e-8
INTERIOR_LINE_FRACTIONS = (0.25, 0.5, 0.75)
INTERIOR_BOUND = 100.0


def _norm2(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, 2))


def check_unitarity(S: MatrixScatteringFunction, grid: RapidityGrid,
                    tol: float = DEFAULT_TOL_ALGEBRAIC) -> CheckResult:
    """Largest deviation of S(q) S(q)* from the identity over the grid."""
    values = S.eval_many(grid.nodes)
    eye = np.eye(S.pair_dim)
    residual = max(
        _norm2(matrix @ matrix.conj().T - eye) for matrix in values
    )
    return CheckResult.from_residual("unitarity", residual, tol, grid.size)


def check_hermitian_analyticity(S: MatrixScatteringFunction, grid: RapidityGrid,
                                tol: float = DEFAULT_TOL_ALGEBRAIC) -> CheckResult:
    """Largest deviation of S(-q) from the adjoint of S(q) over the grid."""
    values = S.eval_many(grid.nodes)
    mirrored = S.eval_many(-grid.nodes)
    residual = max(
        _norm2(mirrored[k] - values[k].conj().T) for k in range(grid.size)
    )
    return CheckResult.from_residual("hermitian analyticity", residual, tol, grid.size)


def _ybe_points(grid: RapidityGrid, stride: int) -> np.ndarray:
    return grid.nodes[:: max(int(stride), 1)]


def check_ybe(S: MatrixScatteringFunction, grid: RapidityGrid,
              tol: float = DEFAULT_TOL_ALGEBRAIC, stride: int = 4) -> CheckResult:
    """Yang-Baxter identity on three legs, sampled over grid point pairs.

    Both sides are assembled from pairwise embeddings of the stored matrices
    at arguments ``q``, ``q'`` and ``q + q'``.
    """
    d = S.left_space.dimension
    if S.right_space.dimension != d:
        raise StructuralError("the three-leg identity needs equal leg dimensions")
    points = _ybe_points(grid, stride)
    residual = 0.0
    for q, qp in itertools.product(points, repeat=2):
        m_q = embed_pairwise(S.eval_matrix(q), 1, 2, 3, d)
        m_qp_12 = embed_pairwise(S.eval_matrix(qp), 1, 2, 3, d)
        m_sum_23 = embed_pairwise(S.eval_matrix(q + qp), 2, 3, 3, d)
        m_q_23 = embed_pairwise(S.eval_matrix(q), 2, 3, 3, d)
        m_qp_23 = embed_pairwise(S.eval_matrix(qp), 2, 3, 3, d)
        m_sum_12 = embed_pairwise(S.eval_matrix(q + qp), 1, 2, 3, d)
        left = m_q @ m_sum_23 @ m_qp_12
        right = m_qp_23 @ m_sum_12 @ m_q_23
        residual = max(residual, _norm2(left - right))
    return CheckResult.from_residual("yang-baxter", residual, tol, points.size**2)


def check_tcp(S: MatrixScatteringFunction, grid: RapidityGrid,
              tol: float = DEFAULT_TOL_ALGEBRAIC) -> CheckResult:
    """Index identity relating each entry to its fully conjugated reversal."""
    d = S.left_space.dimension
    if S.right_space.dimension != d:
        raise StructuralError("the conjugation identity needs equal leg dimensions")
    bar = S.left_space.bar
    tensors = S.eval_many(grid.nodes).reshape(grid.size, d, d, d, d)
    target = np.empty_like(tensors)
    for a, b, c, e in itertools.product(range(d), repeat=4):
        target[:, a, b, c, e] = tensors[:, bar[e], bar[c], bar[b], bar[a]]
    residual = float(np.max(np.abs(tensors - target)))
    return CheckResult.from_residual("tcp", residual, tol, grid.size)


def rectangle_contour_parts(eval_many, re_max: float = 4.0,
                            im_fractions=(0.1, 0.9),
                            points_per_edge: int = 64) -> dict:
    """Closed rectangle integral of a matrix function inside the strip.

    ``eval_many`` maps a complex array of shape ``(N,)`` to values of shape
    ``(N, dd, dd)``.  Returns the raw maximal entry integral, the contour
    perimeter and maximum, and the residual normalized by both.
    """
    y0 = im_fractions[0] * np.pi
    y1 = im_fractions[1] * np.pi
    corners = [
        complex(-re_max, y0),
        complex(re_max, y0),
        complex(re_max, y1),
        complex(-re_max, y1),
    ]
    base_nodes, base_weights = np.polynomial.legendre.leggauss(points_per_edge)
    zs, ws = [], []
    for start, end in zip(corners, corners[1:] + corners[:1]):
        half = 0.5 * (end - start)
        zs.append(start + half * (base_nodes + 1.0))
        ws.append(half * base_weights)
    zs = np.concatenate(zs)
    ws = np.concatenate(ws)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(eval_many(zs))
    integrals = np.tensordot(ws, values, axes=([0], [0]))
    raw = float(np.max(np.abs(integrals)))
    contour_max = float(np.max(np.abs(values)))
    perimeter = 4.0 * re_max + 2.0 * (y1 - y0)
    scale = perimeter * max(contour_max, 1e-300)
    return {
        "cauchy_raw": raw,
        "cauchy": raw / scale,
        "perimeter": perimeter,
        "contour_max": contour_max,
    }


def _interior_ratio(S: MatrixScatteringFunction, grid: RapidityGrid) -> float:
    """Boundedness ratio between interior-line and real-line magnitudes."""
    with np.errstate(over="ignore", invalid="ignore"):
        real_max = float(np.max(np.abs(S.eval_many(grid.nodes))))
        interior_max = 0.0
        finite = True
        for fraction in INTERIOR_LINE_FRACTIONS:
            values = S.eval_many(grid.nodes + 1j * fraction * np.pi)
            if not np.all(np.isfinite(values)):
                finite = False
                continue
            interior_max = max(interior_max, float(np.max(np.abs(values))))
    if not finite:
        return float("inf")
    return interior_max / (1.0 + real_max)


def _crossed_target_ll(base: np.ndarray, bar) -> np.ndarray:
    """Entry rearrangement for the one-chirality crossing identity."""
    d = base.shape[1]
    target = np.empty_like(base)
    for a, b, c, e in itertools.product(range(d), repeat=4):
        target[:, a, b, c, e] = base[:, bar[c], a, e, bar[b]]
    return target


def _crossed_targets_lr(base: np.ndarray, bar_plus, bar_minus):
    """Both entry rearrangements for the mixed unitary-crossing identity."""
    dp, dm = base.shape[1], base.shape[2]
    first = np.empty_like(base)
    second = np.empty_like(base)
    for a, b, c, e in itertools.product(range(dp), range(dm), range(dp), range(dm)):
        first[:, a, b, c, e] = np.conj(base[:, bar_plus[a], e, bar_plus[c], b])
        second[:, a, b, c, e] = np.conj(base[:, c, bar_minus[b], a, bar_minus[e]])
    return first, second


def check_crossing(S: MatrixScatteringFunction, grid: RapidityGrid,
                   tol: float = DEFAULT_TOL_ALGEBRAIC,
                   tol_quadrature: float = DEFAULT_TOL_QUADRATURE,
                   mode: str = None,
                   interior_bound: float = INTERIOR_BOUND) -> CheckResult:
    """Strip analyticity plus the crossing boundary identity.

    Three parts are combined into one entry: the boundary identity residual,
    an interior boundedness ratio on three horizontal lines, and a closed
    rectangle integral normalized by perimeter and contour maximum.  The
    entry residual folds the quadrature part down by ``tol / tol_quadrature``
    so that the pass flag matches each part passing its own tolerance.
    """
    if not S.strip_evaluable:
        raise InsufficientDomainError(
            f"'{S.label}' is only known on the real line; "
            "the crossing identity needs strip evaluation"
        )
    mode = mode or (S.kind if S.kind in ("ll", "lr") else None)
    if mode not in ("ll", "lr"):
        raise StructuralError("crossing mode must be 'll' or 'lr'")

    dp, dm = S.left_space.dimension, S.right_space.dimension
    with np.errstate(over="ignore", invalid="ignore"):
        base = S.eval_many(grid.nodes).reshape(grid.size, dp, dm, dp, dm)
        if mode == "ll":
            crossed = S.eval_many(1j * np.pi - grid.nodes).reshape(base.shape)
            target = _crossed_target_ll(base, S.left_space.bar)
            boundary = float(np.max(np.abs(crossed - target)))
        else:
            shifted = S.eval_many(grid.nodes + 1j * np.pi).reshape(base.shape)
            first, second = _crossed_targets_lr(
                base, S.left_space.bar, S.right_space.bar
            )
            boundary = max(
                float(np.max(np.abs(shifted - first))),
                float(np.max(np.abs(shifted - second))),
            )
    if not np.isfinite(boundary):
        boundary = float("inf")

    interior_ratio = _interior_ratio(S, grid)
    interior_ok = np.isfinite(interior_ratio) and interior_ratio <= interior_bound
    interior_excess = 0.0 if interior_ok else interior_ratio

    contour = rectangle_contour_parts(S.eval_many)
    cauchy = contour["cauchy"]
    if not np.isfinite(cauchy):
        cauchy = float("inf")

    residual = max(boundary, cauchy * (tol / tol_quadrature), interior_excess)
    details = {
        "boundary": boundary,
        "cauchy": cauchy,
        "cauchy_raw": contour["cauchy_raw"],
        "interior_ratio": interior_ratio,
    }
    return CheckResult.from_residual(
        "crossing", residual, tol, grid.size, details=details
    )


def check_mixed_ybe(rplus: MatrixScatteringFunction,
                    s_lr: MatrixScatteringFunction,
                    rminus: MatrixScatteringFunction,
                    grid: RapidityGrid,
                    tol: float = DEFAULT_TOL_ALGEBRAIC,
                    side: str = "left",
                    stride: int = 4) -> CheckResult:
    """Consistency of the left-right coupling with one chirality component.

    On the left side the exchange-picture matrix of ``rplus`` at the
    rapidity difference braids two coupled legs; on the right side the same
    role is played by ``rminus`` on the second pair of legs.
    """
    dp = rplus.left_space.dimension
    dm = rminus.left_space.dimension
    if s_lr.left_space.dimension != dp or s_lr.right_space.dimension != dm:
        raise StructuralError("coupling spaces disagree with the chirality components")
    if side not in ("left", "right"):
        raise StructuralError("side must be 'left' or 'right'")
    points = _ybe_points(grid, stride)
    residual = 0.0
    for q, qp in itertools.product(points, repeat=2):
        delta = q - qp
        if side == "left":
            dims = (dp, dp, dm)
            braid = embed_pairwise(as_r_matrix(rplus, delta), 1, 2, 3, dims)
            s_q = embed_pairwise(s_lr.eval_matrix(q), 1, 3, 3, dims)
            s_qp = embed_pairwise(s_lr.eval_matrix(qp), 2, 3, 3, dims)
            left = braid @ s_q @ s_qp
            right = s_qp @ s_q @ braid
        else:
            dims = (dp, dm, dm)
            braid = embed_pairwise(as_r_matrix(rminus, delta), 2, 3, 3, dims)
            s_q = embed_pairwise(s_lr.eval_matrix(q), 1, 2, 3, dims)
            s_qp = embed_pairwise(s_lr.eval_matrix(qp), 1, 3, 3, dims)
            left = s_q @ s_qp @ braid
            right = braid @ s_qp @ s_q
        residual = max(residual, _norm2(left - right))
    return CheckResult.from_residual(
        f"mixed ybe ({side})", residual, tol, points.size**2
    )


def check_flip_symmetry(S: MatrixScatteringFunction, grid: RapidityGrid,
                        tol: float = DEFAULT_TOL_ALGEBRAIC) -> CheckResult:
    """Invariance of the exchange-picture matrix under conjugation by the flip."""
    residual = check_flip_residual(S, grid.nodes)
    return CheckResult.from_residual("flip symmetry", residual, tol, grid.size)


def check_lr_self_symmetry(S: MatrixScatteringFunction, grid: RapidityGrid,
                           tol: float = DEFAULT_TOL_ALGEBRAIC) -> CheckResult:
    """Optional symmetry S(q) = S(i pi - q) of a left-right coupling."""
    if not S.strip_evaluable:
        raise InsufficientDomainError(
            f"'{S.label}' is only known on the real line; "
            "the self-symmetry check needs strip evaluation"
        )
    values = S.eval_many(grid.nodes)
    reflected = S.eval_many(1j * np.pi - grid.nodes)
    residual = max(
        _norm2(values[k] - reflected[k]) for k in range(grid.size)
    )
    return CheckResult.from_residual("lr self-symmetry", residual, tol, grid.size)


def check_mass_compatibility(R: MatrixScatteringFunction, assignment,
                             grid: RapidityGrid,
                             tol: float = 1e-12) -> CheckResult:
    """Vanishing of exchange-picture entries that mix unequal masses."""
    d = R.left_space.dimension
    if R.right_space.dimension != d:
        raise StructuralError("mass compatibility needs equal leg dimensions")
    masses = assignment.masses
    tensors = r_matrix_many(R, grid.nodes).reshape(grid.size, d, d, d, d)
    residual = 0.0
    for a, c in itertools.product(range(d), repeat=2):
        if masses[a] != masses[c]:
            residual = max(residual, float(np.max(np.abs(tensors[:, a, :, c, :]))))
            residual = max(residual, float(np.max(np.abs(tensors[:, :, a, :, c]))))
    return CheckResult.from_residual("mass compatibility", residual, tol, grid.size)


def check_internal_symmetry(R: MatrixScatteringFunction, V, grid: RapidityGrid,
                            tol: float = DEFAULT_TOL_ALGEBRAIC) -> CheckResult:
    """Commutation of the exchange-picture matrix with V tensor V."""
    d = R.left_space.dimension
    V = np.asarray(V, dtype=complex)
    if V.shape != (d, d):
        raise StructuralError(f"symmetry candidate must be {d} x {d}, got {V.shape}")
    vv = np.kron(V, V)
    matrices = r_matrix_many(R, grid.nodes)
    residual = max(
        _norm2(vv @ matrices[k] - matrices[k] @ vv) for k in range(grid.size)
    )
    return CheckResult.from_residual("internal symmetry", residual, tol, grid.size)
