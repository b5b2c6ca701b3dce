import numpy as np
import pytest

from dihedral_rb.liouville import (
    ATOL,
    PAULIS,
    Rotation,
    UnphysicalError,
    apply,
    assert_cptp,
    avg_fidelity,
    chi_to_fidelity,
    choi_matrix,
    compose,
    effect_vector,
    expectation,
    fidelity_to_chi,
    is_cptp,
    is_trace_preserving,
    is_unital,
    rotation_superop,
    state_vector,
    unitary_conjugation_superop,
)
from dihedral_rb.random_channels import (
    haar_bloch_vectors,
    random_cptp_superop,
    random_unitary,
    random_unitary_superop,
)

Z_PLUS = state_vector((0, 0, 1))
Z_MINUS = state_vector((0, 0, -1))
MIXED = state_vector((0, 0, 0))
E_Z = effect_vector((0, 0, 1))


class TestRotationSuperop:
    def test_z_gate(self):
        assert np.allclose(rotation_superop((0, 0, 1), np.pi), np.diag([1, -1, -1, 1]))

    def test_x_gate(self):
        assert np.allclose(rotation_superop((1, 0, 0), np.pi), np.diag([1, 1, -1, -1]))

    def test_t_gate_block(self):
        c = np.sqrt(2) / 2
        expected = np.array(
            [[1, 0, 0, 0], [0, c, -c, 0], [0, c, c, 0], [0, 0, 0, 1]]
        )
        assert np.allclose(rotation_superop((0, 0, 1), np.pi / 4), expected, atol=ATOL)

    def test_non_unit_axis_rejected(self):
        with pytest.raises(ValueError):
            Rotation((0, 0, 2), np.pi)
        with pytest.raises(ValueError):
            rotation_superop((1, 1, 0), 0.3)

    def test_matches_conjugation_oracle(self, rng):
        # Bloch rotation by theta about n corresponds to exp(-i theta n.sigma / 2).
        for _ in range(25):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            theta = rng.uniform(-2 * np.pi, 2 * np.pi)
            n_sigma = sum(a * p for a, p in zip(axis, PAULIS[1:]))
            u = np.cos(theta / 2) * PAULIS[0] - 1j * np.sin(theta / 2) * n_sigma
            assert np.allclose(
                rotation_superop(axis, theta), unitary_conjugation_superop(u), atol=ATOL
            )

    def test_bloch_block_orthogonal_unit_determinant(self, rng):
        for _ in range(25):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            m = rotation_superop(axis, rng.uniform(0, 2 * np.pi))
            block = m[1:, 1:]
            assert np.allclose(block.T @ block, np.eye(3), atol=ATOL)
            assert abs(np.linalg.det(block) - 1.0) < ATOL
            assert is_trace_preserving(m) and is_unital(m)


class TestCompose:
    def test_identity(self, rng):
        m = random_cptp_superop(rng)
        assert np.allclose(compose(np.eye(4), m), m)
        assert np.allclose(compose(m, np.eye(4)), m)

    def test_x_involution(self):
        x = rotation_superop((1, 0, 0), np.pi)
        assert np.allclose(compose(x, x), np.eye(4), atol=ATOL)

    def test_t_squared_is_s(self):
        t = rotation_superop((0, 0, 1), np.pi / 4)
        s = rotation_superop((0, 0, 1), np.pi / 2)
        assert np.allclose(compose(t, t), s, atol=ATOL)

    def test_associative_on_random_triples(self, rng):
        for _ in range(20):
            a, b, c = (random_cptp_superop(rng) for _ in range(3))
            assert np.allclose(compose(compose(a, b), c), compose(a, compose(b, c)), atol=ATOL)

    def test_variadic_order(self):
        # compose(a, b) applies b first.
        t = rotation_superop((0, 0, 1), np.pi / 4)
        x = rotation_superop((1, 0, 0), np.pi)
        assert np.allclose(compose(t, x), t @ x)


class TestApplyAndExpectation:
    def test_apply_identity(self):
        assert np.allclose(apply(np.eye(4), Z_PLUS), Z_PLUS)

    def test_apply_depolarizing_shrinks(self):
        m = np.diag([1.0, 0.7, 0.7, 0.7])
        assert np.allclose(apply(m, Z_PLUS), [1, 0, 0, 0.7])

    def test_apply_x_flips_pole(self):
        x = rotation_superop((1, 0, 0), np.pi)
        assert np.allclose(apply(x, Z_PLUS), Z_MINUS)

    def test_expectation_projector_values(self):
        assert expectation(E_Z, Z_PLUS) == pytest.approx(1.0)
        assert expectation(E_Z, Z_MINUS) == pytest.approx(0.0)
        assert expectation(E_Z, MIXED) == pytest.approx(0.5)

    def test_expectation_bilinear(self, rng):
        b1, b2, b3 = (v / 2 for v in rng.normal(size=(3, 3)) * 0.3)
        e1, e2 = effect_vector(b1, weight=0.8), effect_vector(b2, weight=0.8)
        s = state_vector(b3)
        lhs = expectation(0.5 * e1 + 0.5 * e2, s)
        assert lhs == pytest.approx(0.5 * expectation(e1, s) + 0.5 * expectation(e2, s))

    def test_expectation_out_of_range_raises(self):
        bad_effect = np.array([3.0, 0, 0, 0])  # "effect" with weight 3
        with pytest.raises(UnphysicalError):
            expectation(bad_effect, Z_PLUS)

    def test_state_outside_ball_rejected(self):
        with pytest.raises(UnphysicalError):
            state_vector((1, 1, 1))
        with pytest.raises(UnphysicalError):
            effect_vector((0, 0, 1), weight=1.5)


class TestAvgFidelity:
    def test_identity(self):
        assert avg_fidelity(np.eye(4)) == pytest.approx(1.0)

    def test_depolarizing_value(self):
        assert avg_fidelity(np.diag([1, 0.995, 0.995, 0.995])) == pytest.approx(0.9975)

    def test_unitary_invariance(self, rng):
        for _ in range(20):
            m = random_cptp_superop(rng)
            u = random_unitary_superop(rng)
            conjugated = compose(u, m, np.linalg.inv(u))
            assert avg_fidelity(conjugated) == pytest.approx(avg_fidelity(m), abs=1e-12)

    def test_haar_monte_carlo_cross_check(self, rng):
        # Brute-force Haar average of <psi| E(psi) |psi> against the closed form.
        m = random_cptp_superop(rng)
        bloch = haar_bloch_vectors(50_000, rng)
        bloch = np.vstack([bloch, -bloch])  # antithetic pairs kill the linear term
        s = np.column_stack([np.ones(len(bloch)), bloch])
        values = 0.5 * np.einsum("ki,ij,kj->k", s, m, s)
        assert values.mean() == pytest.approx(avg_fidelity(m), abs=1e-3)


class TestChi:
    def test_values(self):
        assert fidelity_to_chi(1.0) == pytest.approx(1.0)
        assert fidelity_to_chi(0.99) == pytest.approx(0.985)
        assert fidelity_to_chi(0.5) == pytest.approx(0.25)

    def test_round_trip(self):
        # Bit-exact at the anchor points, one-ulp-level everywhere else.
        for f in (0.0, 0.5, 1.0):
            assert chi_to_fidelity(fidelity_to_chi(f)) == f
        for f in np.linspace(0, 1, 11):
            assert chi_to_fidelity(fidelity_to_chi(f)) == pytest.approx(f, abs=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            fidelity_to_chi(1.2)


class TestChoiAndCptp:
    def test_identity_channel_choi_is_maximally_entangled(self):
        j = choi_matrix(np.eye(4))
        omega = np.zeros((4, 4), dtype=complex)
        omega[np.ix_([0, 3], [0, 3])] = 0.5
        assert np.allclose(j, omega, atol=ATOL)

    def test_random_channels_pass(self, rng):
        for _ in range(20):
            assert is_cptp(random_cptp_superop(rng))
        assert is_cptp(np.diag([1.0, 0.3, 0.3, 0.3]))

    def test_inflating_channel_fails(self):
        assert not is_cptp(np.diag([1.0, 1.5, 1.5, 1.5]))
        with pytest.raises(UnphysicalError):
            assert_cptp(np.diag([1.0, 1.5, 1.5, 1.5]))

    def test_trace_violating_fails(self):
        bad = np.eye(4)
        bad[0, 0] = 0.9
        assert not is_cptp(bad)

    def test_transpose_map_fails(self):
        # Positive but not completely positive: the Y-flip (transpose) map.
        assert not is_cptp(np.diag([1.0, 1.0, -1.0, 1.0]))


def test_unitary_conjugation_oracle_properties(rng):
    u = random_unitary(rng)
    m = unitary_conjugation_superop(u)
    assert is_trace_preserving(m) and is_unital(m) and is_cptp(m)
