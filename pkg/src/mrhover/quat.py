"""Unit-quaternion algebra for attitude representation.

Quaternions are stored as four-element float arrays ``[eta, ex, ey, ez]``:
a real scalar part ``eta`` followed by the vector part ``eps``. A unit
quaternion ``q`` maps to the rotation matrix ``R(q)`` taking body-frame
vectors into the world frame, so ``v_world = to_rotation(q) @ v_body``.

Conventions used throughout the library:

- composition: ``product(q1, q2)`` corresponds to ``R(q1) @ R(q2)``;
- inverse: conjugation, ``(eta, -eps)``;
- kinematics: ``qdot_body(q, omega)`` propagates ``q`` under a body-frame
  angular velocity, ``qdot_world`` under a world-frame one;
- no sign canonicalization: ``q`` and ``-q`` encode the same rotation and
  both are accepted everywhere. Feedback terms built from quaternion
  errors rely on sign continuity in time, so nothing here ever flips the
  sign behind the caller's back.

Algebraic operations are kept bit-faithful to their defining formulas;
renormalization is the integrator's job, not theirs.
"""

from __future__ import annotations

import numpy as np

UNIT_TOL = 1e-6


def identity() -> np.ndarray:
    """The identity quaternion (1, 0, 0, 0)."""
    return np.array([1.0, 0.0, 0.0, 0.0])


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [v]x such that [v]x @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def normalize(q: np.ndarray) -> np.ndarray:
    """Rescale q to unit norm."""
    return q / np.linalg.norm(q)


def from_axis_angle(theta: float, axis: np.ndarray) -> np.ndarray:
    """Unit quaternion for a rotation of ``theta`` radians about a unit ``axis``.

    ``theta`` is expected in the principal interval (-pi, pi]; values outside
    still produce a valid quaternion for the wrapped rotation.

    Raises
    ------
    ValueError
        If the axis is not unit length to within 1e-9.
    """
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise ValueError(f"rotation axis must be a unit vector, got norm {np.linalg.norm(axis)}")
    half = 0.5 * theta
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


def to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrix R(q) = I + 2*eta*[eps]x + 2*[eps]x^2 (body to world).

    Raises
    ------
    ValueError
        If ``q`` is not unit length to within 1e-6.
    """
    q = np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > UNIT_TOL:
        raise ValueError(f"quaternion must be unit length, got norm {np.linalg.norm(q)}")
    s = skew(q[1:])
    return np.eye(3) + 2.0 * q[0] * s + 2.0 * (s @ s)


def product(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Quaternion product q1 (x) q2; satisfies R(q1) R(q2) = R(q1 (x) q2)."""
    e1, v1 = q1[0], q1[1:]
    e2, v2 = q2[0], q2[1:]
    return np.concatenate((
        [e1 * e2 - v1 @ v2],
        e1 * v2 + e2 * v1 + np.cross(v1, v2),
    ))


def inverse(q: np.ndarray) -> np.ndarray:
    """Inverse of a unit quaternion: (eta, -eps)."""
    return np.concatenate(([q[0]], -q[1:]))


def rotate(q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Rotate a 3-vector by q, computed as q (x) (0, w) (x) q^-1."""
    pure = np.concatenate(([0.0], w))
    return product(q, product(pure, inverse(q)))[1:]


def qdot_body(q: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Kinematic derivative (1/2) q (x) (0, omega) for body-frame omega.

    Returned as the expanded column form
    ``0.5 * [-eps . omega, (eta I + [eps]x) omega]``.
    """
    eta, eps = q[0], q[1:]
    return 0.5 * np.concatenate((
        [-eps @ omega],
        eta * omega + np.cross(eps, omega),
    ))


def qdot_world(q: np.ndarray, omega_world: np.ndarray) -> np.ndarray:
    """Kinematic derivative (1/2) (0, omega') (x) q for world-frame omega'.

    Consistent with :func:`qdot_body` under omega' = R(q) omega.
    """
    eta, eps = q[0], q[1:]
    return 0.5 * np.concatenate((
        [-eps @ omega_world],
        eta * omega_world - np.cross(eps, omega_world),
    ))
