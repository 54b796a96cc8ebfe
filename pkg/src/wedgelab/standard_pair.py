"""One-particle vectors, lightray transforms, and strip membership.

A one-particle vector is either *evaluator-backed* (a callable defined on a
horizontal strip of the complex rapidity plane, tagged ``upper``, ``lower``
or ``real``) or *grid-backed* (raw samples at the quadrature nodes).  Only
evaluator-backed vectors can be certified as members of the standard
subspace; grid-backed data supports plain algebra only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .axioms import INTERIOR_BOUND, INTERIOR_LINE_FRACTIONS, rectangle_contour_parts
from .errors import DomainError, ParameterError, QuadratureError, StructuralError
from .report import CheckResult
from .tensors import InternalIndexSpace, RapidityGrid

_IM_TOL = 1e-9
STRIPS = ("upper", "lower", "real")


@dataclass
class BumpFunction:
    """Smooth compactly supported profile ``a * exp(-1/(1-u^2))``."""

    center: float
    halfwidth: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ParameterError(f"halfwidth must be positive, got {self.halfwidth}")

    @property
    def support(self):
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = (t - self.center) / self.halfwidth
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        with np.errstate(divide="ignore", over="ignore"):
            out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - u[inside] ** 2))
        if out.ndim == 0:
            return float(out)
        return out


@dataclass
class Bump2D:
    """Product of two smooth bumps on a spacetime rectangle."""

    center: tuple
    halfwidth: tuple
    amplitude: float = 1.0

    def __post_init__(self):
        self._first = BumpFunction(self.center[0], self.halfwidth[0], 1.0)
        self._second = BumpFunction(self.center[1], self.halfwidth[1], 1.0)

    @property
    def support(self):
        return (self._first.support, self._second.support)

    def __call__(self, a0, a1):
        return self.amplitude * np.asarray(self._first(a0)) * np.asarray(self._second(a1))


@dataclass
class OneParticleVector:
    """Vector in the one-particle space, evaluator- or grid-backed."""

    space: InternalIndexSpace
    grid: RapidityGrid
    evaluator: callable = None
    samples: np.ndarray = None
    strip: str = None
    support: tuple = None
    label: str = ""

    def __post_init__(self):
        if (self.evaluator is None) == (self.samples is None):
            raise StructuralError(
                "exactly one of evaluator and samples must be provided"
            )
        if self.evaluator is not None:
            if self.strip not in STRIPS:
                raise StructuralError(
                    f"evaluator-backed vectors need a strip tag from {STRIPS}"
                )
        else:
            samples = np.asarray(self.samples)
            if not np.iscomplexobj(samples):
                samples = samples.astype(complex)
            expected = (self.grid.size, self.space.dimension)
            if samples.shape != expected:
                raise StructuralError(
                    f"samples must have shape {expected}, got {samples.shape}"
                )
            if not np.all(np.isfinite(samples)):
                raise StructuralError("samples must be finite")
            self.samples = samples
        self._values = None

    def _strip_range(self):
        if self.strip == "upper":
            return (-_IM_TOL, np.pi + _IM_TOL)
        if self.strip == "lower":
            return (-np.pi - _IM_TOL, _IM_TOL)
        return (-_IM_TOL, _IM_TOL)

    def eval(self, zs) -> np.ndarray:
        """Evaluate at a 1-d array of complex points within the strip tag."""
        if self.evaluator is None:
            raise DomainError(
                f"'{self.label}' is grid-backed and cannot be evaluated off its nodes"
            )
        zs = np.asarray(zs, dtype=complex)
        if zs.ndim != 1:
            raise StructuralError("evaluation points must form a 1-d array")
        low, high = self._strip_range()
        im = np.imag(zs)
        if np.any(im < low) or np.any(im > high):
            raise DomainError(
                f"evaluation point outside the '{self.strip}' strip for '{self.label}'"
            )
        values = np.asarray(self.evaluator(zs))
        expected = (zs.size, self.space.dimension)
        if values.shape != expected:
            raise StructuralError(
                f"evaluator of '{self.label}' returned shape {values.shape}, "
                f"expected {expected}"
            )
        return values

    @property
    def values(self) -> np.ndarray:
        """Samples at the grid nodes, shape ``(G, d)``."""
        if self.samples is not None:
            return self.samples
        if self._values is None:
            self._values = self.eval(self.grid.nodes.astype(complex))
        return self._values

    @property
    def leg_values(self) -> np.ndarray:
        """Combined-leg samples, component index fastest."""
        return self.values.reshape(-1)

    @property
    def norm(self) -> float:
        weighted = self.grid.weights[:, None] * np.abs(self.values) ** 2
        return float(np.sqrt(weighted.sum()))

    def scaled(self, factor: complex) -> "OneParticleVector":
        if self.evaluator is not None:
            base = self.evaluator

            def ev(zs):
                return factor * np.asarray(base(zs))

            return OneParticleVector(
                space=self.space, grid=self.grid, evaluator=ev,
                strip=self.strip, support=self.support, label=self.label,
            )
        return OneParticleVector(
            space=self.space, grid=self.grid, samples=factor * self.samples,
            support=self.support, label=self.label,
        )


@dataclass
class StandardPairRep:
    """Kinematic arena: internal space, rapidity grid, optional masses."""

    space: InternalIndexSpace
    grid: RapidityGrid
    masses: tuple = None

    def __post_init__(self):
        if self.masses is not None:
            masses = tuple(float(m) for m in self.masses)
            if len(masses) != self.space.dimension:
                raise ParameterError(
                    f"expected {self.space.dimension} masses, got {len(masses)}"
                )
            self.masses = masses

    def component_masses(self) -> np.ndarray:
        if self.masses is None:
            return np.ones(self.space.dimension)
        return np.asarray(self.masses)


def _apply_multiplier(f: OneParticleVector, multiplier, support=None,
                      label: str = "") -> OneParticleVector:
    """New vector with componentwise factors ``multiplier(zs) -> (N, d)``."""
    if f.evaluator is not None:
        base = f.evaluator

        def ev(zs):
            return multiplier(zs) * np.asarray(base(zs))

        return OneParticleVector(
            space=f.space, grid=f.grid, evaluator=ev, strip=f.strip,
            support=support, label=label or f.label,
        )
    factors = multiplier(f.grid.nodes.astype(complex))
    return OneParticleVector(
        space=f.space, grid=f.grid, samples=factors * f.samples,
        support=support, label=label or f.label,
    )


def translate(f: OneParticleVector, t: float) -> OneParticleVector:
    """Multiplication by ``exp(i t e^q)``; shifts recorded supports by ``t``."""
    t = float(t)

    def multiplier(zs):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(1j * t * np.exp(zs))[:, None]

    support = None
    if f.support is not None:
        support = (f.support[0] + t, f.support[1] + t)
    return _apply_multiplier(f, multiplier, support=support,
                             label=f"{f.label} translated by {t}")


def opposite_translate(f: OneParticleVector, t: float, masses=None) -> OneParticleVector:
    """Multiplication by ``exp(i t m_a^2 e^{-q})`` per component."""
    t = float(t)
    if masses is None:
        mass_sq = np.ones(f.space.dimension)
    else:
        values = getattr(masses, "masses", masses)
        mass_sq = np.asarray([float(m) for m in values]) ** 2
        if mass_sq.size != f.space.dimension:
            raise ParameterError(
                f"expected {f.space.dimension} masses, got {mass_sq.size}"
            )

    def multiplier(zs):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(1j * t * mass_sq[None, :] * np.exp(-zs)[:, None])

    return _apply_multiplier(f, multiplier, support=None,
                             label=f"{f.label} opposite-translated by {t}")


def modular_flow(f: OneParticleVector, s: float) -> OneParticleVector:
    """Argument shift by ``2 pi s``; scales recorded supports by ``e^{2 pi s}``."""
    s = float(s)
    if s == 0.0:
        return f
    if f.evaluator is None:
        raise DomainError(
            "modular flow of a grid-backed vector needs a node-commensurate "
            "shift; the quadrature nodes admit none"
        )
    shift = 2.0 * np.pi * s
    base = f.evaluator

    def ev(zs):
        return np.asarray(base(zs + shift))

    support = None
    if f.support is not None:
        scale = np.exp(shift)
        support = (f.support[0] * scale, f.support[1] * scale)
    return OneParticleVector(
        space=f.space, grid=f.grid, evaluator=ev, strip=f.strip,
        support=support, label=f"{f.label} flowed by {s}",
    )


def modular_conjugate(f: OneParticleVector) -> OneParticleVector:
    """Antilinear conjugation: componentwise ``conj`` composed with the bar map.

    Swaps the upper and lower strip tags; on the real line it acts as
    ``(Jf)_a(q) = conj(f_{bar(a)}(q))``.
    """
    bar = list(f.space.bar)
    if f.evaluator is not None:
        base = f.evaluator

        def ev(zs):
            values = np.asarray(base(np.conj(zs)))
            return np.conj(values[:, bar])

        strip = {"upper": "lower", "lower": "upper", "real": "real"}[f.strip]
        return OneParticleVector(
            space=f.space, grid=f.grid, evaluator=ev, strip=strip,
            support=f.support, label=f"conjugate of {f.label}",
        )
    return OneParticleVector(
        space=f.space, grid=f.grid, samples=np.conj(f.samples[:, bar]),
        support=f.support, label=f"conjugate of {f.label}",
    )


def half_line_transform(g, sign: int, rep: StandardPairRep, component: int = 0,
                        quad_limit: int = 200) -> OneParticleVector:
    """Rapidity-side transform ``+- i e^z int g(t) exp(i t e^{+-z}) dt``.

    ``g`` must expose a bounded ``support`` interval and be real-valued.
    The output is evaluator-backed on the strip matching the sign; whether
    it actually belongs to the standard subspace is decided by
    :func:`check_H_membership`, not assumed here.
    """
    if sign not in (1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign}")
    support = getattr(g, "support", None)
    if support is None:
        raise ParameterError("the test function must declare a bounded support")
    lo, hi = float(support[0]), float(support[1])
    probes = np.linspace(lo, hi, 7)[1:-1]
    if any(complex(g(t)).imag != 0.0 for t in probes):
        raise DomainError("the lightray transform takes real-valued functions")
    d = rep.space.dimension
    if not (0 <= component < d):
        raise StructuralError(f"component {component} outside dimension {d}")
    if rep.space.bar[component] != component:
        raise ParameterError(
            "the carrying component must be fixed by the conjugation map"
        )

    def scalar_value(z):
        freq = np.exp(sign * z)

        def integrand(t):
            return g(t) * np.exp(1j * t * freq)

        with np.errstate(over="ignore", invalid="ignore"):
            out = scipy.integrate.quad(
                integrand, lo, hi, complex_func=True, limit=quad_limit,
                epsabs=1e-13, epsrel=1e-11, full_output=1,
            )
        return sign * 1j * np.exp(z) * out[0]

    def ev(zs):
        with np.errstate(over="ignore", invalid="ignore"):
            column = np.array([scalar_value(z) for z in zs], dtype=complex)
        values = np.zeros((zs.size, d), dtype=complex)
        values[:, component] = column
        return values

    return OneParticleVector(
        space=rep.space, grid=rep.grid, evaluator=ev,
        strip="upper" if sign == 1 else "lower",
        support=(lo, hi),
        label=f"half-line transform (sign {sign:+d}) of support [{lo}, {hi}]",
    )


def wedge_transform(f2, mass: float, rep: StandardPairRep,
                    points_per_axis: int = 64):
    """Restriction of a 2-d spacetime function to the two mass shells.

    Returns the pair ``(f_plus, f_minus)`` with
    ``f_pm(theta) = (1/2 pi) int f(a) exp(pm i p(theta) . a) d^2 a`` where
    ``p(theta) = (m cosh theta, m sinh theta)`` and the Lorentzian pairing
    ``p . a = p^0 a^0 - p^1 a^1``.  For real ``f`` the two are complex
    conjugates on the real line; ``f_plus`` continues to the lower strip.
    """
    if rep.space.dimension != 1:
        raise ParameterError("the spacetime transform is scalar; use a 1-d space")
    mass = float(mass)
    if mass <= 0:
        raise ParameterError(f"mass must be positive, got {mass}")
    (lo0, hi0), (lo1, hi1) = f2.support
    base_nodes, base_weights = np.polynomial.legendre.leggauss(points_per_axis)
    a0 = 0.5 * (hi0 - lo0) * (base_nodes + 1.0) + lo0
    a1 = 0.5 * (hi1 - lo1) * (base_nodes + 1.0) + lo1
    w0 = 0.5 * (hi0 - lo0) * base_weights
    w1 = 0.5 * (hi1 - lo1) * base_weights
    A0, A1 = np.meshgrid(a0, a1, indexing="ij")
    weighted = f2(A0, A1) * np.outer(w0, w1)

    def make_evaluator(orientation):
        def ev(zs):
            out = np.empty(zs.size, dtype=complex)
            with np.errstate(over="ignore", invalid="ignore"):
                for k, z in enumerate(zs):
                    p0 = mass * np.cosh(z)
                    p1 = mass * np.sinh(z)
                    phase = np.exp(orientation * 1j * (p0 * A0 - p1 * A1))
                    out[k] = np.sum(weighted * phase) / (2.0 * np.pi)
            return out[:, None]

        return ev

    f_plus = OneParticleVector(
        space=rep.space, grid=rep.grid, evaluator=make_evaluator(+1),
        strip="lower", label="wedge transform (+)",
    )
    f_minus = OneParticleVector(
        space=rep.space, grid=rep.grid, evaluator=make_evaluator(-1),
        strip="upper", label="wedge transform (-)",
    )
    return f_plus, f_minus


def massive_intertwine(profile, mass: float, rep: StandardPairRep,
                       component: int = 0) -> OneParticleVector:
    """Pull a momentum-side profile to the rapidity line.

    ``(R f)(theta) = m e^{-theta} f(m e^{-theta})``; multiplication by
    ``exp(i t p)`` on the momentum side becomes multiplication by
    ``exp(i t m e^{-theta})`` here.
    """
    mass = float(mass)
    if mass <= 0:
        raise ParameterError(f"mass must be positive, got {mass}")
    d = rep.space.dimension

    def ev(zs):
        p = mass * np.exp(-zs)
        column = p * np.asarray(profile(p))
        values = np.zeros((zs.size, d), dtype=complex)
        values[:, component] = column
        return values

    return OneParticleVector(
        space=rep.space, grid=rep.grid, evaluator=ev, strip="real",
        label=f"momentum profile at mass {mass}",
    )


def verify_isometry(profile, mass: float, tol: float = 1e-10) -> CheckResult:
    """Norm agreement between the momentum side and the rapidity side.

    Compares the squared norm of ``profile`` in ``L^2(R_+, p dp)`` with the
    squared norm of its rapidity-side image in ``L^2(R, d theta)``.
    """
    mass = float(mass)

    def p_density(p):
        return float(np.abs(profile(p)) ** 2 * p)

    def theta_density(theta):
        with np.errstate(over="ignore"):
            p = mass * np.exp(-theta)
        if not np.isfinite(p):
            return 0.0
        return float((p * np.abs(profile(p))) ** 2)

    def checked_quad(fn, a, b):
        out = scipy.integrate.quad(
            fn, a, b, limit=400, epsabs=1e-13, epsrel=1e-13, full_output=1
        )
        value, abserr = out[0], out[1]
        if len(out) > 3 and abserr > 1e-10 * max(1.0, abs(value)):
            raise QuadratureError(
                f"norm quadrature did not converge: {out[3]}", achieved=abserr
            )
        return value

    p_side = checked_quad(p_density, 0.0, np.inf)
    theta_side = checked_quad(theta_density, -np.inf, np.inf)
    residual = abs(p_side - theta_side)
    return CheckResult.from_residual(
        "intertwiner isometry", residual, tol, 2,
        details={"p_side": p_side, "theta_side": theta_side},
    )


def check_H_membership(f: OneParticleVector, tol: float = 1e-6,
                       tol_quadrature: float = 1e-8,
                       interior_bound: float = INTERIOR_BOUND) -> CheckResult:
    """Certificate that a vector belongs to the standard subspace.

    Three parts: the boundary identity ``f_a(q + i pi) = conj(f_{bar(a)}(q))``
    on the grid nodes, boundedness along three interior lines, and a closed
    rectangle integral per component.  The entry residual folds the
    quadrature part down by ``tol / tol_quadrature`` so the pass flag equals
    all parts passing their own tolerances.
    """
    if f.evaluator is None:
        raise DomainError(
            "grid-backed vectors carry no strip data and cannot be certified"
        )
    if f.strip != "upper":
        raise DomainError(
            f"membership certification needs an upper-strip evaluator, "
            f"got '{f.strip}'"
        )
    nodes = f.grid.nodes.astype(complex)
    bar = list(f.space.bar)

    with np.errstate(over="ignore", invalid="ignore"):
        base = f.eval(nodes)
        top = f.eval(nodes + 1j * np.pi)
        target = np.conj(base[:, bar])
        gap = np.abs(top - target)
        boundary = float(np.max(gap)) if np.all(np.isfinite(gap)) else float("inf")

        real_max = float(np.max(np.abs(base)))
        interior_max, finite = 0.0, True
        for fraction in INTERIOR_LINE_FRACTIONS:
            values = f.eval(nodes + 1j * fraction * np.pi)
            if not np.all(np.isfinite(values)):
                finite = False
                continue
            interior_max = max(interior_max, float(np.max(np.abs(values))))
    interior_ratio = (
        interior_max / (1.0 + real_max) if finite else float("inf")
    )
    interior_ok = np.isfinite(interior_ratio) and interior_ratio <= interior_bound
    interior_excess = 0.0 if interior_ok else interior_ratio

    contour = rectangle_contour_parts(lambda zs: f.eval(zs)[:, :, None])
    cauchy = contour["cauchy"]
    if not np.isfinite(cauchy):
        cauchy = float("inf")

    residual = max(boundary, cauchy * (tol / tol_quadrature), interior_excess)
    details = {
        "boundary": boundary,
        "cauchy": cauchy,
        "interior_ratio": interior_ratio,
    }
    return CheckResult.from_residual(
        "H membership", residual, tol, f.grid.size, details=details
    )
