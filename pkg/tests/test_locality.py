"""Oracle tests for wedge-locality experiments: commutators, twist, bundles.

Quadrature fixtures are pinned to measured cells.  The half-line transform
of a bump supported on (lo, hi) oscillates like exp(i t e^q) at the top of
the grid, so each residual assertion below names the bump, the rapidity
cutoff, the grid size, and the adaptive-integration depth that were
verified together; changing one of them invalidates the expected numbers.
"""

import numpy as np
import pytest

from wedgelab.axioms import check_mixed_ybe
from wedgelab.errors import CapacityError, ParameterError, PreconditionError
from wedgelab.fock import (
    FockVector,
    annihilate,
    braiding,
    create,
    modular_conjugation_matrix,
    random_symmetric,
    reflected_annihilate,
    reflected_create,
)
from wedgelab.locality import (
    TripleBundle,
    TwoSidedState,
    a_operator,
    assemble_massive,
    assemble_massless,
    braid_factor,
    half_line_commutator,
    identity_factor,
    make_massive_bundle,
    make_massless_bundle,
    twist,
    twist_projector_commutation,
    twisted_commutator,
)
from wedgelab.report import ValidationReport
from wedgelab.scattering import (
    MassAssignment,
    build_constant,
    build_flip_lr,
    build_on_template,
    build_scalar_family,
    build_scalar_phase,
    perturb_entry_scale,
    perturb_exchange,
)
from wedgelab.standard_pair import (
    BumpFunction,
    OneParticleVector,
    StandardPairRep,
    half_line_transform,
)
from wedgelab.tensors import InternalIndexSpace, RapidityGrid

SPACE1 = InternalIndexSpace.with_identity_bar(1)
SPACE2 = InternalIndexSpace.with_identity_bar(2)


def grid(size=32, q_max=3.0):
    return RapidityGrid.gauss_legendre(size=size, q_max=q_max)


def sinh_phase(z):
    s = np.sinh(np.asarray(z, dtype=complex))
    return (s - 1j * np.sin(np.pi / 6)) / (s + 1j * np.sin(np.pi / 6))


def free_model():
    return build_constant(np.eye(1), SPACE1, label="free")


def sinh_model(angle=np.pi / 4):
    return build_scalar_family([angle], label="sinh")


def transmission_model():
    return build_on_template(2, sigma2=sinh_phase, label="transmission")


def reflection_model():
    return build_on_template(2, sigma3=sinh_phase, label="reflection")


def crossing_violating_coupling():
    """Unimodular phase that keeps every algebraic axiom but breaks crossing."""
    return build_flip_lr(build_scalar_phase(0.8, harmonic=2, label="even harmonic"))


def right_transform(g, center, halfwidth, quad_limit=200):
    rep = StandardPairRep(SPACE1, g)
    return half_line_transform(
        BumpFunction(center, halfwidth, 1.0), +1, rep, quad_limit=quad_limit
    )


def left_transform(g):
    """Formal output of the right-transform formula on left-supported data."""
    rep = StandardPairRep(SPACE1, g)
    return half_line_transform(BumpFunction(-1.5, 0.5, 1.0), +1, rep)


def single_particle_state(B, vec, n_max=3):
    psi = create(B, vec, FockVector.vacuum(B.space, B.grid, n_max))
    return psi.scaled(1.0 / psi.norm)


@pytest.fixture(scope="module")
def fine_cell():
    """Shared fine quadrature cell: bump (0.35, 0.25), q_max 7.5, G = 1408.

    The transform costs ~20 s, so the braid-chain and free-commutator tests
    share one instance.  quad_limit=1200 keeps the adaptive integrator ahead
    of the ~1100 rad/unit oscillation at the top of the grid.
    """
    g = RapidityGrid.gauss_legendre(size=1408, q_max=7.5)
    f = right_transform(g, 0.35, 0.25, quad_limit=1200)
    return g, f


class TestAOperator:
    def test_identity_chain_is_the_scalar_pairing(self):
        g = grid(32, q_max=3.0)
        f = right_transform(g, 2.6, 2.5)
        chain = [identity_factor(SPACE1, g, SPACE1, g, 1)]
        out = a_operator(
            chain, f, f, [(SPACE1, g)], require_membership=False, tol=1.0
        )
        w = g.leg_weights(SPACE1)
        jg = modular_conjugation_matrix(SPACE1, g) @ np.conj(f.leg_values)
        pairing = np.sum(w * np.conj(jg) * f.leg_values)
        assert np.max(np.abs(out.matrix - pairing * np.eye(g.size))) < 1e-12
        # self-adjoint exactly when the scalar is real: the residual of the
        # constant operator equals the relative imaginary part of the scalar
        expected = 2.0 * abs(pairing.imag) / abs(pairing)
        assert np.isclose(out.check.residual, expected, rtol=1e-6)

    def test_pairing_is_real_at_fine_quadrature(self):
        # bump (0.6, 0.5), q_max 6.0, G = 2048, quad_limit 800 -> 6.9e-9
        g = RapidityGrid.gauss_legendre(size=2048, q_max=6.0)
        f = right_transform(g, 0.6, 0.5, quad_limit=800)
        w = g.leg_weights(SPACE1)
        jg = modular_conjugation_matrix(SPACE1, g) @ np.conj(f.leg_values)
        pairing = np.sum(w * np.conj(jg) * f.leg_values)
        assert abs(pairing.imag) / abs(pairing) < 1e-8

    def test_braid_chain_selfadjoint_with_grid_convergence(self, fine_cell):
        # bump (0.35, 0.25), q_max 7.5: G = 704 -> 8.0e-5, G = 1408 -> 8.8e-7
        g_full, f_full = fine_cell
        g_half = RapidityGrid.gauss_legendre(size=704, q_max=7.5)
        f_half = right_transform(g_half, 0.35, 0.25, quad_limit=1200)
        residuals = {}
        for g, f in ((g_half, f_half), (g_full, f_full)):
            B = braiding(sinh_model(), g)
            out = a_operator(
                [braid_factor(B, 1)], f, f, [(SPACE1, g)],
                require_membership=False, tol=1.0,
            )
            residuals[g.size] = out.check.residual
        assert residuals[1408] < 1e-6
        assert residuals[704] / residuals[1408] >= 3.0

    def test_left_supported_control_fails_and_does_not_converge(self):
        residuals = {}
        for size in (32, 64):
            g = grid(size, q_max=3.0)
            B = braiding(sinh_model(), g)
            f = right_transform(g, 2.6, 2.5)
            bad = left_transform(g)
            out = a_operator(
                [braid_factor(B, 1)], f, bad, [(SPACE1, g)],
                require_membership=False, tol=1.0,
            )
            residuals[size] = out.check.residual
        assert residuals[32] > 1e-2
        assert residuals[64] > 1e-2

    def test_uncertified_inputs_are_rejected(self):
        g = grid(16, q_max=3.0)
        B = braiding(sinh_model(), g)
        f = right_transform(g, 2.6, 2.5)
        bad = left_transform(g)
        with pytest.raises(PreconditionError):
            a_operator([braid_factor(B, 1)], f, bad, [(SPACE1, g)])
        raw = OneParticleVector(
            space=SPACE1, grid=g,
            samples=np.ones((g.size, 1), dtype=complex),
        )
        with pytest.raises(PreconditionError):
            a_operator(
                [braid_factor(B, 1)], f, raw, [(SPACE1, g)],
                require_membership=False,
            )


class TestHalfLineCommutator:
    def test_free_model_on_vacuum(self, fine_cell):
        # at the shared fine cell the residual reaches 1.8e-9
        g, f = fine_cell
        B = braiding(free_model(), g)
        psi = FockVector.vacuum(SPACE1, g, 2)
        result = half_line_commutator(B, f, f, psi, require_membership=False)
        assert result.residual < 1e-7
        assert result.details["route_agreement"] < 1e-11

    def test_pure_ladder_blocks_cancel_without_membership(self):
        g = grid(8, q_max=6.0)
        B = braiding(sinh_model(), g)
        rng = np.random.default_rng(3)
        f = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
        vec_g = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
        psi = random_symmetric(B, 3, rng)
        both_up = reflected_create(B, vec_g, create(B, f, psi)).minus(
            create(B, f, reflected_create(B, vec_g, psi))
        )
        both_down = reflected_annihilate(B, vec_g, annihilate(B, f, psi)).minus(
            annihilate(B, f, reflected_annihilate(B, vec_g, psi))
        )
        scale = psi.norm
        assert both_up.norm / scale < 1e-12
        assert both_down.norm / scale < 1e-12

    def test_sinh_single_particle_residual_and_convergence(self):
        # bump (2.6, 2.5) at q_max 3.0 is the best generic cell measured for
        # an 8-panel grid at G = 64; the value there is 3.6e-4, so the 1e-5
        # assertion below records the stated target, not the observed floor.
        residuals = {}
        for size in (32, 64):
            g = grid(size, q_max=3.0)
            B = braiding(sinh_model(), g)
            f = right_transform(g, 2.6, 2.5)
            psi = single_particle_state(B, f)
            result = half_line_commutator(
                B, f, f, psi, require_membership=False
            )
            residuals[size] = result.residual
            assert result.details["route_agreement"] < 1e-11
        assert residuals[32] / residuals[64] >= 3.0
        assert residuals[64] < 1e-5

    def test_left_supported_control_stays_large(self):
        g = grid(64, q_max=3.0)
        B = braiding(sinh_model(), g)
        f = right_transform(g, 2.6, 2.5)
        bad = left_transform(g)
        psi = single_particle_state(B, f)
        result = half_line_commutator(B, f, bad, psi, require_membership=False)
        assert result.residual > 1e-2

    def test_route_agreement_on_random_symmetric_state(self):
        g = grid(16, q_max=6.0)
        B = braiding(sinh_model(), g)
        f = right_transform(g, 1.4, 0.4)
        vec_g = right_transform(g, 1.9, 0.5)
        rng = np.random.default_rng(5)
        base = random_symmetric(B, 1, rng)
        padding = FockVector.vacuum(SPACE1, g, 3)
        psi = FockVector(
            levels=list(base.levels) + [padding.levels[2], padding.levels[3]],
            symmetric=True,
        )
        result = half_line_commutator(B, f, vec_g, psi)
        assert result.details["route_agreement"] < 1e-11

    def test_preconditions(self):
        g = grid(16, q_max=6.0)
        B = braiding(sinh_model(), g)
        f = right_transform(g, 1.4, 0.4)
        vec_g = right_transform(g, 1.9, 0.5)
        rng = np.random.default_rng(6)
        asym = FockVector(
            levels=FockVector.vacuum(SPACE1, g, 2).levels, symmetric=False
        )
        with pytest.raises(PreconditionError):
            half_line_commutator(B, f, vec_g, asym)
        crowded = random_symmetric(B, 2, rng)
        with pytest.raises(PreconditionError):
            half_line_commutator(B, f, vec_g, crowded)


class TestTwist:
    def test_identity_coupling_gives_identity(self):
        g4 = grid(4, q_max=6.0)
        s_lr = build_constant(np.eye(1), SPACE1, kind="lr")
        tw = twist(s_lr, g4, g4, 2, 2)
        dim = g4.size**4
        assert np.max(np.abs(tw.matrix() - np.eye(dim))) < 1e-14
        empty = twist(s_lr, g4, g4, 0, 3)
        assert np.max(np.abs(empty.matrix() - np.eye(g4.size**3))) < 1e-14

    def test_ordered_product_matches_display_and_detects_scrambling(self):
        g1 = RapidityGrid.gauss_legendre(size=1, q_max=1.0)
        rng = np.random.default_rng(8)
        raw = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        unitary, _ = np.linalg.qr(raw)
        s_lr = build_constant(unitary, SPACE2, kind="lr", right_space=SPACE2)
        tw = twist(s_lr, g1, g1, 2, 2)
        factors = {
            (i, j): tw.factor_matrix(i, j)
            for i in (1, 2) for j in (1, 2)
        }
        displayed = (
            factors[(1, 1)] @ factors[(2, 1)] @ factors[(1, 2)] @ factors[(2, 2)]
        )
        assert np.max(np.abs(tw.matrix() - displayed)) < 1e-12
        scrambled = (
            factors[(2, 1)] @ factors[(1, 1)] @ factors[(1, 2)] @ factors[(2, 2)]
        )
        assert np.max(np.abs(tw.matrix() - scrambled)) > 1e-3

    def test_unitary_coupling_gives_unitary_twist(self):
        g4 = grid(4, q_max=6.0)
        s_lr = build_flip_lr(sinh_model())
        tw = twist(s_lr, g4, g4, 2, 1)
        M = tw.matrix()
        assert np.linalg.norm(M.conj().T @ M - np.eye(M.shape[0]), 2) < 1e-12

    def test_dense_matrix_capacity_guard(self):
        g64 = grid(64, q_max=6.0)
        s_lr = build_flip_lr(sinh_model())
        tw = twist(s_lr, g64, g64, 2, 2)
        with pytest.raises(CapacityError):
            tw.matrix()


class TestTwistProjectorDichotomy:
    def test_flip_bundles_commute_at_all_levels(self):
        g3 = grid(3, q_max=6.0)
        g2 = grid(2, q_max=6.0)
        bundles = [
            (sinh_model(), g3),
            (reflection_model(), g2),
            (transmission_model(), g2),
        ]
        for R, g in bundles:
            s_lr = build_flip_lr(R)
            for m, n in ((2, 1), (1, 2), (2, 2)):
                out = twist_projector_commutation(R, s_lr, R, g, g, m, n)
                assert out["left"].residual < 1e-11
                assert out["right"].residual < 1e-11

    def test_strength_perturbed_coupling_fails(self):
        g2 = grid(2, q_max=6.0)
        T = transmission_model()
        broken = perturb_exchange(build_flip_lr(T), 0.1)
        out = twist_projector_commutation(T, broken, T, g2, g2, 2, 1)
        assert out["left"].residual > 1e-3
        assert not out["left"].passed

    def test_diagonal_entry_scaling_is_inert(self):
        # scaling a diagonal entry of a diagonal coupling keeps every leg
        # permutation symmetry the commutator sees, so this perturbation
        # cannot serve as a negative control here
        g2 = grid(2, q_max=6.0)
        T = transmission_model()
        scaled = perturb_entry_scale(build_flip_lr(T), 1, 1, 1.1)
        out = twist_projector_commutation(T, scaled, T, g2, g2, 2, 1)
        assert out["left"].residual < 1e-11
        assert out["right"].residual < 1e-11

    def test_commutation_tracks_the_mixed_ybe(self):
        g2 = grid(2, q_max=6.0)
        ybe_grid = grid(8, q_max=6.0)
        T = transmission_model()
        cases = [
            (free_model(), build_constant(np.eye(1), SPACE1, kind="lr")),
            (sinh_model(), build_flip_lr(sinh_model())),
            (reflection_model(), build_flip_lr(reflection_model())),
            (T, build_flip_lr(T)),
            (T, perturb_exchange(build_flip_lr(T), 0.1)),
            (T, perturb_exchange(build_flip_lr(T), 0.2)),
        ]
        failures = 0
        for R, s_lr in cases:
            ybe = check_mixed_ybe(R, s_lr, R, ybe_grid, side="left")
            comm = twist_projector_commutation(R, s_lr, R, g2, g2, 2, 1)
            assert (ybe.residual < 1e-10) == (comm["left"].residual < 1e-11)
            if ybe.residual >= 1e-10:
                failures += 1
                assert comm["left"].residual > 1e-3
        assert failures == 2


class TestTwistedCommutator:
    def _spectator_minus(self, n_max=1):
        """Small minus-side grid carrying a normalized one-particle state."""
        g = RapidityGrid.gauss_legendre(size=8, q_max=3.0)
        h = right_transform(g, 1.0, 0.8)
        phi = single_particle_state(braiding(sinh_model(), g), h, n_max=n_max)
        return g, phi

    def _left_cell(self, size_plus, q_max=6.0):
        g_minus, phi = self._spectator_minus()
        g_plus = RapidityGrid.gauss_legendre(size=size_plus, q_max=q_max)
        f = right_transform(g_plus, 0.25, 0.2, quad_limit=400)
        bundle = make_massless_bundle(
            sinh_model(), sinh_model(), build_flip_lr(sinh_model()),
            g_plus, g_minus, n_max=2,
        )
        state = TwoSidedState.from_product(
            FockVector.vacuum(SPACE1, g_plus, 2), phi
        )
        return bundle, f, state

    def test_identity_coupling_reduces_to_half_line(self):
        g = grid(16, q_max=3.0)
        R = sinh_model()
        bundle = make_massless_bundle(
            R, R, build_constant(np.eye(1), SPACE1, kind="lr"), g, g, n_max=3
        )
        B = braiding(R, g)
        f = right_transform(g, 1.4, 0.4)
        vec_g = right_transform(g, 1.9, 0.5)
        h = right_transform(g, 1.2, 0.3)
        psi = single_particle_state(B, h)
        state = TwoSidedState.from_product(psi, FockVector.vacuum(SPACE1, g, 0))
        twisted = twisted_commutator(bundle, f, vec_g, state, side="left")
        plain = half_line_commutator(B, f, vec_g, psi)
        assert abs(twisted.residual - plain.residual) < 1e-13

    def test_flip_bundle_left_locality_with_convergence(self):
        # plus-side bump (0.25, 0.2) at q_max 6.0: G = 256 -> 4.8e-4,
        # G = 512 -> 6.0e-6; the minus side is an 8-node spectator
        residuals = {}
        for size in (256, 512):
            bundle, f, state = self._left_cell(size)
            result = twisted_commutator(
                bundle, f, f, state, side="left", require_membership=False
            )
            residuals[size] = result.residual
            assert result.details["route_agreement"] < 1e-11
        assert residuals[512] < 1e-5
        assert residuals[256] / residuals[512] >= 3.0

    def test_right_side_mirror(self):
        g_plus, psi = self._spectator_minus()
        g_minus = RapidityGrid.gauss_legendre(size=512, q_max=6.0)
        f = right_transform(g_minus, 0.25, 0.2, quad_limit=400)
        bundle = make_massless_bundle(
            sinh_model(), sinh_model(), build_flip_lr(sinh_model()),
            g_plus, g_minus, n_max=2,
        )
        state = TwoSidedState.from_product(
            psi, FockVector.vacuum(SPACE1, g_minus, 2)
        )
        result = twisted_commutator(
            bundle, f, f, state, side="right", require_membership=False
        )
        assert result.residual < 1e-5
        assert result.details["route_agreement"] < 1e-11

    def test_crossing_violating_coupling_breaks_locality_not_the_algebra(self):
        g_minus, phi = self._spectator_minus()
        g_plus = RapidityGrid.gauss_legendre(size=128, q_max=6.0)
        f = right_transform(g_plus, 0.25, 0.2, quad_limit=400)
        bundle = make_massless_bundle(
            sinh_model(), sinh_model(), crossing_violating_coupling(),
            g_plus, g_minus, n_max=2,
        )
        state = TwoSidedState.from_product(
            FockVector.vacuum(SPACE1, g_plus, 2), phi
        )
        result = twisted_commutator(
            bundle, f, f, state, side="left", tol=1.0, require_membership=False
        )
        # locality fails at O(1) ...
        assert result.residual > 5e-2
        # ... yet the creation-creation block still cancels and the closed
        # route still reproduces the composition route: both are algebraic
        assert result.details["route_agreement"] < 1e-12

    def test_ladder_block_cancels_even_for_broken_coupling(self):
        g2 = grid(6, q_max=6.0)
        T = transmission_model()
        broken = perturb_exchange(build_flip_lr(T), 0.1)
        rng = np.random.default_rng(12)
        dim = 2 * g2.size
        f = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        vec_g = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        block = rng.standard_normal((dim, dim, dim)) + 1j * rng.standard_normal(
            (dim, dim, dim)
        )
        w = g2.leg_weights(SPACE2)
        jg = modular_conjugation_matrix(SPACE2, g2) @ np.conj(vec_g)
        wf = w * np.conj(f)
        wjg = w * np.conj(jg)
        tw = twist(broken, g2, g2, 1, 1)

        # lower with f in front (first-row star chain), then reflect-lower
        c1 = np.moveaxis(block, 1, 2)
        c2 = np.moveaxis(tw.apply(c1, star=True), 2, 1)
        c3 = np.sqrt(2.0) * np.tensordot(wf, c2, axes=([0], [0]))
        out1 = np.tensordot(wjg, c3, axes=([0], [0]))

        # reflect-lower on the last plus leg first, then lower with f
        d1 = np.sqrt(2.0) * np.tensordot(wjg, block, axes=([0], [1]))
        d2 = tw.apply(d1, star=True)
        out2 = np.tensordot(wf, d2, axes=([0], [0]))

        scale = np.linalg.norm(block.reshape(-1))
        assert np.linalg.norm(out1) > 1e-8
        assert np.linalg.norm(out1 - out2) / scale < 1e-12

    def test_preconditions(self):
        g = grid(16, q_max=3.0)
        R = sinh_model()
        bundle = make_massless_bundle(R, R, build_flip_lr(R), g, g, n_max=2)
        f = right_transform(g, 1.4, 0.4)
        vec_g = right_transform(g, 1.9, 0.5)
        bad = left_transform(g)
        h = right_transform(g, 1.2, 0.3)
        phi = single_particle_state(braiding(R, g), h, n_max=1)
        state = TwoSidedState.from_product(FockVector.vacuum(SPACE1, g, 2), phi)
        with pytest.raises(PreconditionError):
            twisted_commutator(bundle, f, bad, state, side="left")
        leaky = create(braiding(R, g), h, FockVector.vacuum(SPACE1, g, 0))
        assert leaky.leakage > 0
        crowded = TwoSidedState.from_product(leaky, phi)
        with pytest.raises(PreconditionError):
            twisted_commutator(bundle, f, vec_g, crowded, side="left")


class TestBundles:
    def test_bundle_invariants(self):
        g = grid(8, q_max=6.0)
        R = sinh_model()
        bundle = make_massless_bundle(R, R, build_flip_lr(R), g, g)
        assert bundle.kind == "massless"
        assert set(bundle.generators) == {"plus own", "minus own"}
        with pytest.raises(ParameterError):
            TripleBundle(
                kind="sideways", plus=bundle.plus, minus=bundle.minus,
                coupling=bundle.coupling, generators=bundle.generators,
            )

    def test_massless_free_bundle_passes(self):
        g = grid(128, q_max=4.5)
        R = free_model()
        bundle = make_massless_bundle(
            R, R, build_constant(np.eye(1), SPACE1, kind="lr"), g, g
        )
        report = assemble_massless(bundle, tol_commutator=2e-3)
        assert isinstance(report, ValidationReport)
        assert report.all_passed
        by_name = {entry.name: entry for entry in report.entries}
        assert by_name["twist translation covariance"].residual < 1e-14
        assert by_name["twist fixes one-sided states"].residual < 1e-14

    def test_massless_flip_bundle_passes(self):
        # both sides at G = 128, q_max 4.5: commutators come out at 7.1e-4
        g = grid(128, q_max=4.5)
        R = sinh_model()
        bundle = make_massless_bundle(R, R, build_flip_lr(R), g, g)
        report = assemble_massless(bundle, tol_commutator=2e-3)
        assert report.all_passed
        names = [entry.name for entry in report.entries]
        assert names == [
            "twist translation covariance",
            "twist fixes one-sided states",
            "left twisted commutator",
            "right twisted commutator",
        ]

    def test_massless_broken_bundle_isolates_the_failure(self):
        g = grid(64, q_max=4.0)
        R = sinh_model()
        bundle = make_massless_bundle(
            R, R, crossing_violating_coupling(), g, g
        )
        report = assemble_massless(bundle, tol_commutator=2e-3)
        assert not report.all_passed
        by_name = {entry.name: entry for entry in report.entries}
        assert by_name["twist translation covariance"].passed
        assert by_name["twist fixes one-sided states"].passed
        assert not by_name["left twisted commutator"].passed
        assert not by_name["right twisted commutator"].passed
        assert by_name["left twisted commutator"].residual > 1e-1

    def test_massive_scalar_bundle_passes(self):
        g = grid(16, q_max=7.0)
        R = sinh_model()
        bundle = make_massive_bundle(
            R, R, build_flip_lr(R), g, g,
            masses_plus=MassAssignment(space=SPACE1, masses=(1.0,)),
            masses_minus=MassAssignment(space=SPACE1, masses=(1.0,)),
        )
        assert set(bundle.generators) == {
            "plus own", "plus opposite", "minus own", "minus opposite",
        }
        report = assemble_massive(bundle)
        assert report.all_passed
        names = [entry.name for entry in report.entries]
        assert names == [
            "generator positivity",
            "twist translation covariance",
            "mass compatibility (plus)",
            "mass compatibility (minus)",
            "assembled two-particle matrix",
        ]

    def test_massive_identity_bundle_passes_exactly(self):
        g = grid(8, q_max=6.0)
        R = free_model()
        bundle = make_massive_bundle(
            R, R, build_constant(np.eye(1), SPACE1, kind="lr"), g, g,
            masses_plus=MassAssignment(space=SPACE1, masses=(1.0,)),
            masses_minus=MassAssignment(space=SPACE1, masses=(1.0,)),
        )
        report = assemble_massive(bundle)
        assert report.all_passed
        for entry in report.entries:
            assert entry.residual < 1e-12

    def test_massive_mass_incompatible_reflection_fails(self):
        g = grid(8, q_max=6.0)
        reflection = reflection_model()
        bundle = make_massive_bundle(
            reflection, reflection, build_flip_lr(reflection), g, g,
            masses_plus=MassAssignment(space=SPACE2, masses=(1.0, 2.0)),
            masses_minus=MassAssignment(space=SPACE2, masses=(1.0, 2.0)),
        )
        report = assemble_massive(bundle)
        assert not report.all_passed
        by_name = {entry.name: entry for entry in report.entries}
        assert by_name["generator positivity"].passed
        assert not by_name["mass compatibility (plus)"].passed
