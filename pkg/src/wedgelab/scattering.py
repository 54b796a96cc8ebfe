"""Matrix-valued two-particle scattering functions and their builders.

Storage convention
------------------
A scattering function evaluates to a ``(d_l * d_r) x (d_l * d_r)`` matrix.
The row index runs over the upper index pair ``(alpha, beta)`` and the
column index over the lower pair ``(gamma, delta)``, both flattened
row-major with the second pair member fastest.

Functions of kind ``"ll"`` act between excitations of one chirality and are
consumed as functions of the rapidity *difference*; their stored matrix is
the one whose upper pair is swapped relative to the exchange picture
(``as_r_matrix`` undoes the swap).  Functions of kind ``"lr"`` couple the
two chiralities and are consumed as functions of the rapidity *sum*; their
stored matrix is used directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDomainError, ParameterError, StructuralError
from .tensors import InternalIndexSpace

_IM_TOL = 1e-9
_REAL_TOL = 1e-12
KINDS = ("ll", "lr", "unconstrained", "assembled")


@dataclass(frozen=True, eq=False)
class MatrixScatteringFunction:
    """Matrix-valued function on the closed strip ``0 <= Im z <= pi``.

    ``fn`` must be vectorized: given a complex array of shape ``(...,)`` it
    returns values of shape ``(..., dd, dd)`` with ``dd = d_l * d_r``.
    ``strip_evaluable`` is false for data known only on the real line; such
    functions refuse any off-axis evaluation point.
    """

    left_space: InternalIndexSpace
    right_space: InternalIndexSpace
    fn: callable
    label: str = ""
    kind: str = "ll"
    strip_evaluable: bool = True
    q_domain: float = 50.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructuralError(f"unknown scattering-function kind '{self.kind}'")

    @property
    def pair_dim(self) -> int:
        return self.left_space.dimension * self.right_space.dimension

    def _validate_points(self, z: np.ndarray) -> None:
        im = np.imag(z)
        re = np.real(z)
        if not self.strip_evaluable:
            if np.any(np.abs(im) > _REAL_TOL):
                raise InsufficientDomainError(
                    f"'{self.label}' is only known on the real line; "
                    "strip evaluation was requested"
                )
        elif np.any(im < -_IM_TOL) or np.any(im > np.pi + _IM_TOL):
            raise DomainError(
                f"evaluation point outside the strip 0 <= Im z <= pi for '{self.label}'"
            )
        if np.any(np.abs(re) > self.q_domain):
            raise DomainError(
                f"|Re z| exceeds the declared rapidity domain {self.q_domain} "
                f"for '{self.label}'"
            )

    def eval_many(self, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex)
        self._validate_points(zs)
        values = np.asarray(self.fn(zs))
        expected = zs.shape + (self.pair_dim, self.pair_dim)
        if values.shape != expected:
            raise StructuralError(
                f"evaluator of '{self.label}' returned shape {values.shape}, "
                f"expected {expected}"
            )
        return values

    def eval_matrix(self, z) -> np.ndarray:
        return self.eval_many(np.asarray(z, dtype=complex).reshape(()))

    def eval_tensor(self, z) -> np.ndarray:
        dl, dr = self.left_space.dimension, self.right_space.dimension
        return self.eval_matrix(z).reshape(dl, dr, dl, dr)


def _swap_upper(values: np.ndarray, dl: int, dr: int) -> np.ndarray:
    """Swap the upper index pair of stacked pair matrices ``(..., dd, dd)``."""
    if dl != dr:
        raise StructuralError("upper-pair swap needs equal left and right dimensions")
    tensor = values.reshape(values.shape[:-2] + (dl, dr, dl, dr))
    swapped = np.swapaxes(tensor, -4, -3)
    return swapped.reshape(values.shape)


def as_r_matrix(S: MatrixScatteringFunction, z) -> np.ndarray:
    """Exchange-picture matrix: the stored matrix with its upper pair swapped."""
    return _swap_upper(
        S.eval_matrix(z), S.left_space.dimension, S.right_space.dimension
    )


def r_matrix_many(S: MatrixScatteringFunction, zs) -> np.ndarray:
    return _swap_upper(
        S.eval_many(zs), S.left_space.dimension, S.right_space.dimension
    )


def flip_matrix(d: int) -> np.ndarray:
    """Pair-exchange matrix ``F[(a,b),(c,d)] = delta(a,d) delta(b,c)``."""
    F = np.zeros((d * d, d * d))
    for a, b in itertools.product(range(d), repeat=2):
        F[a * d + b, b * d + a] = 1.0
    return F


def _scalar_space() -> InternalIndexSpace:
    return InternalIndexSpace.with_identity_bar(1)


def build_scalar_family(blocks, sign: int = 1, label: str = "", space=None):
    """Product of elementary sinh blocks with angles in the open interval (0, pi).

    Each block contributes ``(sinh z - i sin b)/(sinh z + i sin b)``; the
    overall sign must be +1 or -1.  Every member is unimodular on the real
    line, satisfies the exchange axioms, and is pole-free on the closed strip.
    """
    angles = tuple(float(b) for b in blocks)
    for b in angles:
        if not (0.0 < b < np.pi):
            raise ParameterError(
                f"sinh-block angle {b} must lie strictly inside (0, pi)"
            )
    if sign not in (1, -1):
        raise ParameterError(f"overall sign must be +1 or -1, got {sign}")
    space = space or _scalar_space()
    if space.dimension != 1:
        raise StructuralError("scalar family requires a one-dimensional index space")
    sines = np.array([np.sin(b) for b in angles])

    def fn(z):
        z = np.asarray(z, dtype=complex)
        s = np.sinh(z)[..., None]
        value = float(sign) * np.prod((s - 1j * sines) / (s + 1j * sines), axis=-1)
        return value[..., None, None]

    if not label:
        label = f"sinh family with {len(angles)} block(s)"
    return MatrixScatteringFunction(
        left_space=space, right_space=space, fn=fn, label=label, kind="ll"
    )


def build_scalar_phase(coefficient: float, harmonic: int = 1, label: str = "", space=None):
    """Unimodular phase ``exp(i c sinh(k z))``.

    Odd harmonics ``k`` give bounded, crossing-symmetric members; even
    harmonics violate the crossing identity and interior boundedness while
    keeping every purely algebraic exchange axiom intact.
    """
    coefficient = float(coefficient)
    harmonic = int(harmonic)
    if coefficient < 0.0:
        raise ParameterError(f"phase coefficient must be nonnegative, got {coefficient}")
    if harmonic < 1:
        raise ParameterError(f"harmonic must be a positive integer, got {harmonic}")
    space = space or _scalar_space()

    def fn(z):
        z = np.asarray(z, dtype=complex)
        value = np.exp(1j * coefficient * np.sinh(harmonic * z))
        return value[..., None, None]

    if not label:
        label = f"phase exp(i {coefficient} sinh({harmonic} z))"
    return MatrixScatteringFunction(
        left_space=space, right_space=space, fn=fn, label=label, kind="ll"
    )


def build_constant(matrix, space: InternalIndexSpace, kind: str = "ll",
                   right_space=None, label: str = ""):
    """Constant scattering function with the given stored pair matrix."""
    matrix = np.asarray(matrix, dtype=complex)
    right_space = right_space or space
    dd = space.dimension * right_space.dimension
    if matrix.shape != (dd, dd):
        raise StructuralError(
            f"constant matrix must be {dd} x {dd} for these spaces, got {matrix.shape}"
        )
    frozen = matrix.copy()
    frozen.flags.writeable = False

    def fn(z):
        z = np.asarray(z, dtype=complex)
        return np.broadcast_to(frozen, z.shape + frozen.shape).copy()

    return MatrixScatteringFunction(
        left_space=space,
        right_space=right_space,
        fn=fn,
        label=label or "constant",
        kind=kind,
    )


def build_on_template(d: int, sigma1=None, sigma2=None, sigma3=None,
                      space=None, label: str = ""):
    """Three-coefficient family on a d-dimensional internal space.

    The stored matrix is ``sigma1(q) P + sigma2(q) F + sigma3(q) I`` where
    ``P`` pairs an upper diagonal with a lower diagonal (rank one), ``F`` is
    the pair exchange, and ``I`` the identity.  Coefficient callables must be
    vectorized over complex arrays; omitted coefficients vanish.
    """
    if d < 1:
        raise ParameterError(f"template dimension must be positive, got {d}")
    space = space or InternalIndexSpace.with_identity_bar(d)
    if space.dimension != d:
        raise StructuralError("template dimension disagrees with the index space")

    delta_vec = np.zeros(d * d)
    for a in range(d):
        delta_vec[a * d + a] = 1.0
    pairing = np.outer(delta_vec, delta_vec)
    exchange = flip_matrix(d)
    identity = np.eye(d * d)

    def fn(z):
        z = np.asarray(z, dtype=complex)
        total = np.zeros(z.shape + (d * d, d * d), dtype=complex)
        for coeff, pattern in ((sigma1, pairing), (sigma2, exchange), (sigma3, identity)):
            if coeff is None:
                continue
            values = np.asarray(coeff(z), dtype=complex)
            total = total + values[..., None, None] * pattern
        return total

    return MatrixScatteringFunction(
        left_space=space,
        right_space=space,
        fn=fn,
        label=label or f"template family (d={d})",
        kind="ll",
    )


DEFAULT_FLIP_SAMPLES = 33


def check_flip_residual(S: MatrixScatteringFunction, sample_points=None) -> float:
    """Largest deviation of the exchange-picture matrix from flip invariance."""
    d = S.left_space.dimension
    if S.right_space.dimension != d:
        raise StructuralError("flip symmetry needs equal left and right dimensions")
    if sample_points is None:
        sample_points = np.linspace(-6.0, 6.0, DEFAULT_FLIP_SAMPLES)
    F = flip_matrix(d)
    residual = 0.0
    for q in np.asarray(sample_points, dtype=float):
        R = as_r_matrix(S, q)
        residual = max(residual, float(np.linalg.norm(F @ R @ F - R, 2)))
    return residual


def build_flip_lr(R: MatrixScatteringFunction, tol: float = 1e-10,
                  sample_points=None, label: str = ""):
    """Left-right coupling induced by a flip-invariant one-chirality function.

    The returned function's stored matrix is the exchange-picture matrix of
    ``R`` evaluated at the same argument (consumed downstream at rapidity
    sums).  Inputs whose exchange-picture matrix is not flip invariant are
    rejected with the offending residual attached.
    """
    residual = check_flip_residual(R, sample_points)
    if residual > tol:
        raise ParameterError(
            f"input '{R.label}' is not flip invariant (residual {residual:.3e})",
            residual=residual,
        )
    dl, dr = R.left_space.dimension, R.right_space.dimension

    def fn(z):
        return _swap_upper(R.eval_many(np.asarray(z, dtype=complex)), dl, dr)

    return MatrixScatteringFunction(
        left_space=R.left_space,
        right_space=R.right_space,
        fn=fn,
        label=label or f"flip coupling of {R.label}",
        kind="lr",
        strip_evaluable=R.strip_evaluable,
        q_domain=R.q_domain,
    )


def perturb_entry_scale(S: MatrixScatteringFunction, row: int, col: int, factor: float):
    """Scale one stored-matrix entry by ``factor`` at every argument."""
    dd = S.pair_dim
    if not (0 <= row < dd and 0 <= col < dd):
        raise StructuralError(f"entry ({row}, {col}) outside a {dd} x {dd} matrix")

    def fn(z):
        values = S.eval_many(np.asarray(z, dtype=complex)).copy()
        values[..., row, col] *= factor
        return values

    return MatrixScatteringFunction(
        left_space=S.left_space,
        right_space=S.right_space,
        fn=fn,
        label=f"{S.label} with entry ({row},{col}) scaled by {factor}",
        kind=S.kind,
        strip_evaluable=S.strip_evaluable,
        q_domain=S.q_domain,
    )


def perturb_exchange(S: MatrixScatteringFunction, strength: float):
    """Right-multiply by ``I + strength * X`` where ``X`` exchanges the
    pair states ``(1,2)`` and ``(2,1)``.  Requires at least two components
    on each side."""
    dl, dr = S.left_space.dimension, S.right_space.dimension
    if dl < 2 or dr < 2:
        raise StructuralError("exchange perturbation needs two components per side")
    X = np.zeros((dl * dr, dl * dr))
    X[0 * dr + 1, 1 * dr + 0] = 1.0
    X[1 * dr + 0, 0 * dr + 1] = 1.0
    mixer = np.eye(dl * dr) + float(strength) * X

    def fn(z):
        return S.eval_many(np.asarray(z, dtype=complex)) @ mixer

    return MatrixScatteringFunction(
        left_space=S.left_space,
        right_space=S.right_space,
        fn=fn,
        label=f"{S.label} with exchange perturbation {strength}",
        kind=S.kind,
        strip_evaluable=S.strip_evaluable,
        q_domain=S.q_domain,
    )


@dataclass(frozen=True)
class MassAssignment:
    """Strictly positive particle masses, constant on conjugation orbits."""

    space: InternalIndexSpace
    masses: tuple

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        object.__setattr__(self, "masses", masses)
        if len(masses) != self.space.dimension:
            raise ParameterError(
                f"expected {self.space.dimension} masses, got {len(masses)}"
            )
        for m in masses:
            if not (m > 0.0):
                raise ParameterError(f"masses must be strictly positive, got {m}")
        for a, b in enumerate(self.space.bar):
            if masses[a] != masses[b]:
                raise ParameterError(
                    f"mass of component {a} differs from its conjugate component {b}"
                )


def doubled_space(plus: InternalIndexSpace, minus: InternalIndexSpace) -> InternalIndexSpace:
    """Direct sum of the two chirality spaces, conjugation blockwise."""
    dp = plus.dimension
    bar = tuple(plus.bar) + tuple(dp + b for b in minus.bar)
    return InternalIndexSpace(
        dimension=dp + minus.dimension,
        bar=bar,
        label=f"{plus.label or 'plus'} (+) {minus.label or 'minus'}",
    )


def assemble_block_diagonal(rplus: MatrixScatteringFunction,
                            s_lr: MatrixScatteringFunction,
                            rminus: MatrixScatteringFunction,
                            label: str = ""):
    """Two-particle matrix of the doubled model on the direct-sum space.

    Row and column indices run over ordered pairs of doubled components.
    Pairs drawn entirely from the plus side couple through the crossed
    left component evaluated at ``i pi - q``; pairs entirely from the minus
    side couple through the right component at ``q``; mixed pairs couple
    through the left-right function (one orientation conjugated); every
    remaining entry vanishes.
    """
    dp = rplus.left_space.dimension
    dm = rminus.left_space.dimension
    if rplus.right_space.dimension != dp or rminus.right_space.dimension != dm:
        raise StructuralError("chirality components must act on square index pairs")
    if s_lr.left_space.dimension != dp or s_lr.right_space.dimension != dm:
        raise StructuralError(
            "left-right coupling spaces disagree with the chirality components"
        )
    total_space = doubled_space(rplus.left_space, rminus.left_space)
    D = total_space.dimension

    def fn(z):
        z = np.asarray(z, dtype=complex)
        rp = r_matrix_many(rplus, 1j * np.pi - z).reshape(z.shape + (dp, dp, dp, dp))
        rm = r_matrix_many(rminus, z).reshape(z.shape + (dm, dm, dm, dm))
        sl = s_lr.eval_many(z).reshape(z.shape + (dp, dm, dp, dm))
        out = np.zeros(z.shape + (D * D, D * D), dtype=complex)
        for A, B, C, E in itertools.product(range(D), repeat=4):
            row = A * D + B
            col = C * D + E
            rp_row = A < dp and B < dp
            rp_col = C < dp and E < dp
            if rp_row and rp_col:
                out[..., row, col] = rp[..., C, E, B, A]
            elif (not (A < dp or B < dp)) and not (C < dp or E < dp):
                out[..., row, col] = rm[..., C - dp, E - dp, B - dp, A - dp]
            elif (A >= dp and B < dp) and (C < dp and E >= dp):
                out[..., row, col] = sl[..., C, E - dp, B, A - dp]
            elif (A < dp and B >= dp) and (C >= dp and E < dp):
                out[..., row, col] = np.conj(sl[..., A, B - dp, E, C - dp])
        return out

    return MatrixScatteringFunction(
        left_space=total_space,
        right_space=total_space,
        fn=fn,
        label=label or "block-diagonal doubled model",
        kind="assembled",
        strip_evaluable=rplus.strip_evaluable and rminus.strip_evaluable and s_lr.strip_evaluable,
        q_domain=min(rplus.q_domain, rminus.q_domain, s_lr.q_domain),
    )
