import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrhover import quat

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def rotation_about_z(theta):
    # independent oracle: rotation matrix written out by hand
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


unit_quats = st.builds(
    lambda parts: quat.normalize(np.array(parts)),
    st.tuples(*[st.floats(-1.0, 1.0) for _ in range(4)]).filter(
        lambda p: np.linalg.norm(p) > 0.1),
)

vec3 = st.builds(np.array, st.tuples(*[st.floats(-10.0, 10.0) for _ in range(3)]))


class TestToRotation:
    def test_identity(self):
        np.testing.assert_allclose(quat.to_rotation(quat.identity()), np.eye(3), atol=1e-15)

    def test_half_turn_about_z(self):
        R = quat.to_rotation(np.array([0.0, 0.0, 0.0, 1.0]))
        np.testing.assert_allclose(R, np.diag([-1.0, -1.0, 1.0]), atol=1e-15)

    def test_quarter_turn_matches_matrix_oracle(self):
        q = quat.from_axis_angle(np.pi / 2, E3)
        np.testing.assert_allclose(quat.to_rotation(q), rotation_about_z(np.pi / 2), atol=1e-15)
        np.testing.assert_allclose(quat.to_rotation(q) @ E1, E2, atol=1e-15)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            quat.to_rotation(np.array([1.0, 1.0, 0.0, 0.0]))

    @settings(max_examples=100)
    @given(q=unit_quats)
    def test_orthonormal_and_proper(self, q):
        R = quat.to_rotation(q)
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-9)
        assert abs(np.linalg.det(R) - 1.0) < 1e-9

    @settings(max_examples=50)
    @given(q=unit_quats)
    def test_double_coverage(self, q):
        np.testing.assert_array_equal(quat.to_rotation(q), quat.to_rotation(-q))


class TestFromAxisAngle:
    def test_zero_angle(self):
        np.testing.assert_array_equal(quat.from_axis_angle(0.0, E3), quat.identity())

    def test_pi_about_z(self):
        q = quat.from_axis_angle(np.pi, E3)
        np.testing.assert_allclose(q, [0.0, 0.0, 0.0, 1.0], atol=1e-15)

    def test_half_pi_about_x(self):
        q = quat.from_axis_angle(np.pi / 2, E1)
        r = np.sqrt(2.0) / 2.0
        np.testing.assert_allclose(q, [r, r, 0.0, 0.0], atol=1e-15)

    def test_rejects_non_unit_axis(self):
        with pytest.raises(ValueError):
            quat.from_axis_angle(0.3, np.array([1.0, 1.0, 0.0]))


class TestProduct:
    def test_identity_neutral(self):
        q = quat.from_axis_angle(0.7, E2)
        np.testing.assert_allclose(quat.product(quat.identity(), q), q, atol=1e-15)
        np.testing.assert_allclose(quat.product(q, quat.identity()), q, atol=1e-15)

    def test_inverse_gives_identity(self):
        q = quat.from_axis_angle(1.1, E1)
        np.testing.assert_allclose(quat.product(q, quat.inverse(q)), quat.identity(), atol=1e-15)

    def test_quarter_turns_compose_to_half_turn(self):
        q = quat.from_axis_angle(np.pi / 2, E3)
        q2 = quat.product(q, q)
        # checked through the rotation-matrix oracle, not quaternion equality
        np.testing.assert_allclose(quat.to_rotation(q2), rotation_about_z(np.pi), atol=1e-15)

    @settings(max_examples=100)
    @given(a=unit_quats, b=unit_quats)
    def test_rotation_homomorphism(self, a, b):
        lhs = quat.to_rotation(quat.product(a, b))
        rhs = quat.to_rotation(a) @ quat.to_rotation(b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    @settings(max_examples=100)
    @given(a=unit_quats, b=unit_quats)
    def test_unit_norm_closure(self, a, b):
        assert abs(np.linalg.norm(quat.product(a, b)) - 1.0) < 1e-9


class TestInverse:
    def test_identity(self):
        np.testing.assert_array_equal(quat.inverse(quat.identity()), quat.identity())

    def test_half_turn(self):
        np.testing.assert_array_equal(
            quat.inverse(np.array([0.0, 0.0, 0.0, 1.0])), [0.0, 0.0, 0.0, -1.0])

    @settings(max_examples=50)
    @given(q=unit_quats)
    def test_involution(self, q):
        np.testing.assert_array_equal(quat.inverse(quat.inverse(q)), q)


class TestRotate:
    def test_identity(self):
        w = np.array([0.3, -1.2, 2.0])
        np.testing.assert_allclose(quat.rotate(quat.identity(), w), w, atol=1e-15)

    def test_quarter_turn_oracle(self):
        q = quat.from_axis_angle(np.pi / 2, E3)
        np.testing.assert_allclose(quat.rotate(q, E1), E2, atol=1e-15)

    @settings(max_examples=100)
    @given(q=unit_quats, w=vec3)
    def test_isometry(self, q, w):
        assert abs(np.linalg.norm(quat.rotate(q, w)) - np.linalg.norm(w)) < 1e-9 * (
            1.0 + np.linalg.norm(w))

    @settings(max_examples=100)
    @given(q=unit_quats, w=vec3)
    def test_matches_rotation_matrix(self, q, w):
        np.testing.assert_allclose(quat.rotate(q, w), quat.to_rotation(q) @ w,
                                   atol=1e-9 * (1.0 + np.linalg.norm(w)))


class TestKinematics:
    def test_zero_rate(self):
        np.testing.assert_array_equal(quat.qdot_body(quat.identity(), np.zeros(3)), np.zeros(4))
        np.testing.assert_array_equal(quat.qdot_world(quat.identity(), np.zeros(3)), np.zeros(4))

    def test_identity_attitude_half_rate(self):
        w = np.array([0.2, -0.4, 0.6])
        np.testing.assert_allclose(quat.qdot_body(quat.identity(), w),
                                   np.concatenate(([0.0], w / 2)), atol=1e-15)
        np.testing.assert_allclose(quat.qdot_world(quat.identity(), w),
                                   np.concatenate(([0.0], w / 2)), atol=1e-15)

    @settings(max_examples=100)
    @given(q=unit_quats, w=vec3)
    def test_norm_preservation(self, q, w):
        # d/dt (q.q) = 2 <qdot, q> must vanish
        assert abs(quat.qdot_body(q, w) @ q) < 1e-12 * (1.0 + np.linalg.norm(w))

    @settings(max_examples=100)
    @given(q=unit_quats, w=vec3)
    def test_frame_change_identity(self, q, w):
        lhs = quat.qdot_world(q, quat.rotate(q, w))
        rhs = quat.qdot_body(q, w)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1.0 + np.linalg.norm(w)))


@settings(max_examples=100)
@given(a=vec3, b=vec3)
def test_skew_of_cross_identity(a, b):
    # [[a]x b]x == b a^T - a b^T
    lhs = quat.skew(np.cross(a, b))
    rhs = np.outer(b, a) - np.outer(a, b)
    scale = 1.0 + np.abs(np.outer(a, b)).max()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * scale)
