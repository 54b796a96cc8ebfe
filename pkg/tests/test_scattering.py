"""Oracle tests for scattering-function builders and index conventions."""

import itertools
import json
import pathlib

import numpy as np
import pytest

from wedgelab.errors import DomainError, InsufficientDomainError, ParameterError, StructuralError
from wedgelab.scattering import (
    MassAssignment,
    MatrixScatteringFunction,
    as_r_matrix,
    assemble_block_diagonal,
    build_constant,
    build_flip_lr,
    build_on_template,
    build_scalar_family,
    build_scalar_phase,
    flip_matrix,
    perturb_entry_scale,
    perturb_exchange,
)
from wedgelab.tensors import InternalIndexSpace

GOLDEN_DIR = pathlib.Path(__file__).parent / "golden"


class TestScalarFamily:
    def test_known_value_on_strip_midline(self):
        # One block with angle pi/6 evaluated at i*pi/2:
        # (sinh - i sin)/(sinh + i sin) = (1 - 1/2)/(1 + 1/2) = 1/3.
        family = build_scalar_family([np.pi / 6])
        value = family.eval_matrix(1j * np.pi / 2)[0, 0]
        assert abs(value - (1.0 / 3.0)) < 1e-15

    def test_value_at_origin_per_block(self):
        one = build_scalar_family([np.pi / 4])
        assert abs(one.eval_matrix(0.0)[0, 0] + 1.0) < 1e-15
        two = build_scalar_family([np.pi / 4, np.pi / 3])
        assert abs(two.eval_matrix(0.0)[0, 0] - 1.0) < 1e-15
        signed = build_scalar_family([np.pi / 4], sign=-1)
        assert abs(signed.eval_matrix(0.0)[0, 0] - 1.0) < 1e-15

    def test_unimodular_on_real_line(self):
        family = build_scalar_family([np.pi / 6, np.pi / 3, np.pi / 2])
        for q in (-3.0, -0.5, 0.7, 4.0):
            assert abs(abs(family.eval_matrix(q)[0, 0]) - 1.0) < 1e-14

    def test_crossing_identity_is_exact(self):
        family = build_scalar_family([np.pi / 5])
        for q in (-2.0, 0.3, 1.8):
            left = family.eval_matrix(1j * np.pi - q)[0, 0]
            right = family.eval_matrix(q)[0, 0]
            assert abs(left - right) < 1e-14

    def test_block_angles_must_be_in_open_interval(self):
        for bad in (0.0, np.pi, -0.2, 3.5):
            with pytest.raises(ParameterError):
                build_scalar_family([bad])
        with pytest.raises(ParameterError):
            build_scalar_family([np.pi / 4], sign=2)


class TestScalarPhase:
    def test_unimodular_and_hermitian_analytic_pointwise(self):
        phase = build_scalar_phase(coefficient=0.05, harmonic=2)
        for q in (-1.2, 0.4, 2.5):
            value = phase.eval_matrix(q)[0, 0]
            mirrored = phase.eval_matrix(-q)[0, 0]
            assert abs(abs(value) - 1.0) < 1e-14
            assert abs(mirrored - np.conj(value)) < 1e-14

    def test_odd_harmonic_keeps_crossing(self):
        phase = build_scalar_phase(coefficient=0.4, harmonic=1)
        for q in (-1.0, 0.3, 2.0):
            left = phase.eval_matrix(1j * np.pi - q)[0, 0]
            right = phase.eval_matrix(q)[0, 0]
            assert abs(left - right) < 1e-13

    def test_even_harmonic_breaks_crossing(self):
        phase = build_scalar_phase(coefficient=0.05, harmonic=2)
        q = 1.5
        left = phase.eval_matrix(1j * np.pi - q)[0, 0]
        right = phase.eval_matrix(q)[0, 0]
        expected = 2.0 * abs(np.sin(0.05 * np.sinh(2.0 * q)))
        assert abs(abs(left - right) - expected) < 1e-13
        assert abs(left - right) > 1e-3

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            build_scalar_phase(coefficient=-0.1, harmonic=2)
        with pytest.raises(ParameterError):
            build_scalar_phase(coefficient=0.1, harmonic=0)


class TestTemplate:
    def test_entry_placement_against_loop_oracle(self):
        sigma = (0.3 + 0.1j, -0.7j, 1.1 + 0.2j)
        model = build_on_template(
            2,
            sigma1=lambda z: np.full_like(z, sigma[0]),
            sigma2=lambda z: np.full_like(z, sigma[1]),
            sigma3=lambda z: np.full_like(z, sigma[2]),
        )
        matrix = model.eval_matrix(0.9)
        for a, ap, b, bp in itertools.product(range(2), repeat=4):
            expected = (
                sigma[0] * (a == ap) * (b == bp)
                + sigma[1] * (a == bp) * (ap == b)
                + sigma[2] * (a == b) * (ap == bp)
            )
            row = a * 2 + ap
            col = b * 2 + bp
            assert abs(matrix[row, col] - expected) < 1e-15

    def test_flip_term_alone_is_transmission(self):
        model = build_on_template(2, sigma2=lambda z: np.ones_like(z))
        matrix = model.eval_matrix(0.3)
        assert np.allclose(matrix, flip_matrix(2), atol=1e-15)
        assert np.allclose(as_r_matrix(model, 0.3), np.eye(4), atol=1e-15)

    def test_identity_term_alone_is_identity(self):
        model = build_on_template(2, sigma3=lambda z: np.ones_like(z))
        assert np.allclose(model.eval_matrix(1.2), np.eye(4), atol=1e-15)

    def test_pairing_term_alone_is_rank_one(self):
        model = build_on_template(2, sigma1=lambda z: np.ones_like(z))
        matrix = model.eval_matrix(0.5)
        assert np.linalg.matrix_rank(matrix) == 1


class TestConventions:
    def test_r_matrix_swaps_upper_pair(self):
        rng = np.random.default_rng(31)
        matrix = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        model = build_constant(matrix, InternalIndexSpace.with_identity_bar(2))
        r_matrix = as_r_matrix(model, 0.0)
        for a, b, c, d in itertools.product(range(2), repeat=4):
            assert r_matrix[a * 2 + b, c * 2 + d] == matrix[b * 2 + a, c * 2 + d]

    def test_constant_requires_square_of_dimension(self):
        with pytest.raises(StructuralError):
            build_constant(np.eye(3), InternalIndexSpace.with_identity_bar(2))

    def test_domain_validation(self):
        family = build_scalar_family([np.pi / 3])
        with pytest.raises(DomainError):
            family.eval_matrix(1j * 4.0)
        with pytest.raises(DomainError):
            family.eval_matrix(-0.5j)
        with pytest.raises(DomainError):
            family.eval_matrix(60.0)
        family.eval_matrix(1j * np.pi)  # upper edge is inside the domain

    def test_real_line_only_functions_reject_strip_points(self):
        model = MatrixScatteringFunction(
            left_space=InternalIndexSpace.with_identity_bar(1),
            right_space=InternalIndexSpace.with_identity_bar(1),
            fn=lambda z: np.exp(1j * np.asarray(z))[..., None, None],
            label="boundary data only",
            kind="ll",
            strip_evaluable=False,
        )
        model.eval_matrix(0.5)
        with pytest.raises(InsufficientDomainError):
            model.eval_matrix(0.5 + 0.3j)

    def test_vectorized_evaluation_matches_pointwise(self):
        family = build_scalar_family([np.pi / 6, np.pi / 2])
        points = np.array([-1.0, 0.25, 2.0])
        stacked = family.eval_many(points)
        for k, q in enumerate(points):
            assert np.allclose(stacked[k], family.eval_matrix(q), atol=1e-15)


class TestFlipConstruction:
    def test_scalar_input_passes_through(self):
        family = build_scalar_family([np.pi / 4])
        lr = build_flip_lr(family)
        assert lr.kind == "lr"
        for z in (0.0, 1.3, 0.5 + 0.4j):
            assert abs(lr.eval_matrix(z)[0, 0] - family.eval_matrix(z)[0, 0]) < 1e-15

    def test_transmission_input_becomes_diagonal(self):
        model = build_on_template(
            2, sigma2=lambda z: build_scalar_family([np.pi / 4]).fn(z)[..., 0, 0]
        )
        lr = build_flip_lr(model)
        scalar = build_scalar_family([np.pi / 4])
        for z in (0.4, 1.0 + 0.2j):
            expected = scalar.eval_matrix(z)[0, 0] * np.eye(4)
            assert np.allclose(lr.eval_matrix(z), expected, atol=1e-14)

    def test_rejects_flip_asymmetric_input(self):
        matrix = np.diag([1.0, np.exp(0.3j), np.exp(-0.3j), 1.0])
        model = build_constant(matrix, InternalIndexSpace.with_identity_bar(2))
        with pytest.raises(ParameterError) as exc:
            build_flip_lr(model)
        assert exc.value.residual > 0.1


class TestPerturbations:
    def test_entry_scaling_touches_single_entry(self):
        family = build_on_template(2, sigma2=lambda z: np.ones_like(z))
        scaled = perturb_entry_scale(family, 0, 0, 1.1)
        base = family.eval_matrix(0.7)
        bumped = scaled.eval_matrix(0.7)
        delta = bumped - base
        assert abs(delta[0, 0] - 0.1 * base[0, 0]) < 1e-14
        delta[0, 0] = 0.0
        assert np.max(np.abs(delta)) == 0.0

    def test_exchange_perturbation_mixes_off_diagonal(self):
        scalar = build_scalar_family([np.pi / 4])
        diagonal = build_on_template(2, sigma2=lambda z: scalar.fn(z)[..., 0, 0])
        lr = build_flip_lr(diagonal)
        bumped = perturb_exchange(lr, 0.1)
        matrix = bumped.eval_matrix(0.8)
        s_value = scalar.eval_matrix(0.8)[0, 0]
        assert abs(matrix[1, 2] - 0.1 * s_value) < 1e-14
        assert abs(matrix[2, 1] - 0.1 * s_value) < 1e-14
        assert abs(matrix[0, 0] - s_value) < 1e-14


class TestMassAssignment:
    def test_positive_and_bar_consistent(self):
        space = InternalIndexSpace(dimension=2, bar=(1, 0))
        MassAssignment(space=space, masses=(1.0, 1.0))
        with pytest.raises(ParameterError):
            MassAssignment(space=space, masses=(1.0, -2.0))
        with pytest.raises(ParameterError):
            MassAssignment(space=space, masses=(1.0, 2.0))

    def test_identity_bar_allows_distinct_masses(self):
        space = InternalIndexSpace.with_identity_bar(2)
        assignment = MassAssignment(space=space, masses=(1.0, 3.0))
        assert assignment.masses == (1.0, 3.0)


class TestBlockDiagonalAssembly:
    @staticmethod
    def _component_functions():
        rng = np.random.default_rng(77)
        space = InternalIndexSpace.with_identity_bar(2)

        def matrix_family(matrix, rate):
            def fn(z):
                z = np.asarray(z, dtype=complex)
                return np.exp(1j * rate * z)[..., None, None] * matrix

            return fn

        r_plus = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        r_minus = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        s_mixed = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))

        # Stored matrices carry the convention in which the upper pair is
        # swapped relative to the exchange picture, so build them from the
        # exchange-picture matrices by that swap.
        def stored_from_exchange(matrix):
            tensor = matrix.reshape(2, 2, 2, 2)
            return np.swapaxes(tensor, 0, 1).reshape(4, 4)

        rplus = MatrixScatteringFunction(
            left_space=space,
            right_space=space,
            fn=matrix_family(stored_from_exchange(r_plus), 0.3),
            label="left component",
            kind="ll",
        )
        rminus = MatrixScatteringFunction(
            left_space=space,
            right_space=space,
            fn=matrix_family(stored_from_exchange(r_minus), -0.2),
            label="right component",
            kind="ll",
        )
        s_lr = MatrixScatteringFunction(
            left_space=space,
            right_space=space,
            fn=matrix_family(s_mixed, 0.7),
            label="mixed component",
            kind="lr",
        )
        return rplus, s_lr, rminus, r_plus, s_mixed, r_minus

    def test_matches_transcription_golden(self):
        golden = json.loads((GOLDEN_DIR / "massive_block_d2.json").read_text())
        rplus, s_lr, rminus, r_plus, s_mixed, r_minus = self._component_functions()
        doubled = assemble_block_diagonal(rplus, s_lr, rminus)
        assert doubled.left_space.dimension == 4

        q = 0.85
        assembled = doubled.eval_matrix(q)
        mask = np.asarray(golden["mask"])
        observed_mask = (np.abs(assembled) > 1e-13).astype(int)
        assert np.array_equal(observed_mask, mask)

        component_tensors = {
            "rplus_prime": (r_plus * np.exp(1j * 0.3 * (1j * np.pi - q))).reshape(2, 2, 2, 2),
            "rminus": (r_minus * np.exp(1j * -0.2 * q)).reshape(2, 2, 2, 2),
            "s_lr": (s_mixed * np.exp(1j * 0.7 * q)).reshape(2, 2, 2, 2),
        }
        for key, entry in golden["entries"].items():
            row, col = (int(part) for part in key.split(","))
            tensor = component_tensors[entry["component"]]
            u1, u2 = entry["upper"]
            l1, l2 = entry["lower"]
            expected = tensor[u1 - 1, u2 - 1, l1 - 1, l2 - 1]
            if entry["conjugate"]:
                expected = np.conj(expected)
            assert abs(assembled[row, col] - expected) < 1e-12, (row, col)

    def test_scalar_assembly_blocks(self):
        sinh = build_scalar_family([np.pi / 4])
        doubled = assemble_block_diagonal(sinh, build_flip_lr(sinh), sinh)
        q = 1.1
        assembled = doubled.eval_matrix(q)
        s_q = sinh.eval_matrix(q)[0, 0]
        s_crossed = sinh.eval_matrix(1j * np.pi - q)[0, 0]
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = s_crossed  # both particles from the plus side
        expected[1, 2] = np.conj(s_q)  # (+,-) row meets (-,+) column
        expected[2, 1] = s_q  # (-,+) row meets (+,-) column
        expected[3, 3] = s_q  # both particles from the minus side
        assert np.allclose(assembled, expected, atol=1e-13)

    def test_assembled_matrix_is_unitary_for_scalar_model(self):
        sinh = build_scalar_family([np.pi / 3])
        doubled = assemble_block_diagonal(sinh, build_flip_lr(sinh), sinh)
        for q in (-2.0, 0.3, 1.7):
            matrix = doubled.eval_matrix(q)
            assert np.max(np.abs(matrix @ matrix.conj().T - np.eye(4))) < 1e-13
