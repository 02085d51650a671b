"""Rotor geometry and control allocation analysis.

A platform is a rigid body with n >= 4 rotors at fixed body-frame positions,
each spinning about a fixed, generically tilted axis. With the signed-square
rotor input u_i (handedness times spin rate times its absolute value), force
and moment are linear in u:

    f_c = F u       F column i = c_f_i * z_i
    tau_c = M u     M column i = c_f_i * (p_i x z_i) + c_tau_i * z_i

with c_tau_i = -sigma_i * c_tau_plus_i. The hover controller needs two
structural properties of (F, M):

- full torque authority together with a force direction reachable at zero
  moment, which holds exactly when rank(M Fbar) = 3 for any basis Fbar of
  ker(F);
- a distinguished unit force direction d_star = F u_bar with u_bar in
  ker(M) and |F u_bar| = 1 (the zero-moment direction), plus a right
  pseudo-inverse of M whose columns produce no force.

This module builds F and M, runs the rank diagnostics, selects u_bar and
d_star deterministically, and assembles the pseudo-inverse. It also provides
the star-shaped tilted hexarotor and coplanar quadrotor reference layouts
and a JSON loader for platform definition files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import quat
from .errors import AllocationError, InvalidPlatform

RANK_TOL = 1e-9
COND_LIMIT = 1e12

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class RotorSpec:
    """One rotor: body-frame placement plus aerodynamic coefficients.

    Attributes
    ----------
    position : np.ndarray
        Rotor center in the body frame [m].
    axis : np.ndarray
        Unit spin axis in the body frame.
    thrust_coeff : float
        Thrust per unit input, c_f > 0 [N per input unit].
    drag_coeff : float
        Drag-moment magnitude per unit input, c_tau_plus > 0 [N m per input unit].
    handedness : int
        +1 for a counterclockwise rotor, -1 for clockwise.
    """

    position: np.ndarray
    axis: np.ndarray
    thrust_coeff: float
    drag_coeff: float
    handedness: int

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-9:
            raise InvalidPlatform(f"rotor axis must be unit length, got norm {np.linalg.norm(self.axis)}")
        if self.thrust_coeff <= 0.0:
            raise InvalidPlatform("thrust_coeff must be positive")
        if self.drag_coeff <= 0.0:
            raise InvalidPlatform("drag_coeff must be positive")
        if self.handedness not in (-1, 1):
            raise InvalidPlatform("handedness must be +1 (CCW) or -1 (CW)")

    @property
    def moment_coeff(self) -> float:
        """Signed drag coefficient c_tau = -handedness * c_tau_plus."""
        return -self.handedness * self.drag_coeff


def allocation_matrices(rotors: list[RotorSpec]) -> tuple[np.ndarray, np.ndarray]:
    """Build the 3 x n force and moment input matrices (F, M).

    Raises
    ------
    InvalidPlatform
        If fewer than four rotors are given.
    """
    if len(rotors) < 4:
        raise InvalidPlatform(f"need at least 4 rotors, got {len(rotors)}")
    F = np.empty((3, len(rotors)))
    M = np.empty((3, len(rotors)))
    for i, r in enumerate(rotors):
        F[:, i] = r.thrust_coeff * r.axis
        M[:, i] = r.thrust_coeff * np.cross(r.position, r.axis) + r.moment_coeff * r.axis
    return F, M


def nullspace_basis(A: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of ker(A) as columns, via SVD.

    Singular values below ``tol`` times the largest one count as zero.
    Returns an (n, k) matrix; k may be zero.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    _, s, vt = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0.0 else 0
    return vt[rank:].T


def _rank(A: np.ndarray, tol: float = RANK_TOL) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * s[0])) if s[0] > 0.0 else 0


@dataclass(frozen=True)
class AllocationDiagnostics:
    """Rank structure of (F, M) and the verdict of the decoupling check.

    ``decoupled`` is true when rank(M Fbar) equals 3, which simultaneously
    guarantees full torque authority (rank(M) = 3) and a nonzero force
    direction inside ker(M) (rank(F Mbar) >= 1).
    """

    rank_f: int
    rank_m: int
    rank_m_fbar: int
    rank_f_mbar: int
    decoupled: bool

    def __bool__(self) -> bool:
        return self.decoupled


def check_decoupling(F: np.ndarray, M: np.ndarray, tol: float = RANK_TOL) -> AllocationDiagnostics:
    """Rank test rank(M Fbar) == 3 with supporting diagnostics."""
    f_null = nullspace_basis(F, tol)
    m_null = nullspace_basis(M, tol)
    r_mf = _rank(M @ f_null, tol) if f_null.shape[1] else 0
    r_fm = _rank(F @ m_null, tol) if m_null.shape[1] else 0
    return AllocationDiagnostics(
        rank_f=_rank(F, tol),
        rank_m=_rank(M, tol),
        rank_m_fbar=r_mf,
        rank_f_mbar=r_fm,
        decoupled=(r_mf == 3),
    )


def zero_moment_direction(F: np.ndarray, M: np.ndarray, tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Select the zero-moment input u_bar and force direction d_star = F u_bar.

    The input direction maximizing force gain over unit vectors of ker(M)
    is taken (top right-singular vector of F Mbar), scaled so |F u_bar| = 1.
    The sign is fixed so the third component of d_star is nonnegative;
    near-zero third components (within 1e-9) fall back to a nonnegative
    first component.

    Raises
    ------
    AllocationError
        If ker(M) produces no force at all (rank(F Mbar) = 0).
    """
    m_null = nullspace_basis(M, tol)
    if m_null.shape[1] == 0:
        raise AllocationError("ker(M) is trivial; no zero-moment input exists")
    fm = F @ m_null
    u_svd, s, vt = np.linalg.svd(fm)
    if s[0] <= tol * np.linalg.norm(F, 2):
        raise AllocationError("F maps ker(M) to zero; no zero-moment force direction")
    u_bar = m_null @ vt[0]
    u_bar = u_bar / np.linalg.norm(F @ u_bar)
    d_star = F @ u_bar
    if d_star[2] < -1e-9 or (abs(d_star[2]) <= 1e-9 and d_star[0] < 0.0):
        u_bar = -u_bar
        d_star = -d_star
    return u_bar, d_star


def moment_pseudoinverse(F: np.ndarray, M: np.ndarray, tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Weight matrix K = Fbar Fbar^T and pseudo-inverse K M^T (M K M^T)^-1.

    The returned pseudo-inverse P satisfies M P = I and F P = 0: moments are
    realized exactly while producing no force.

    Raises
    ------
    AllocationError
        If M K M^T is near singular (condition number above 1e12).
    """
    f_null = nullspace_basis(F, tol)
    K = f_null @ f_null.T
    G = M @ K @ M.T
    if G.shape != (3, 3) or np.linalg.cond(G) > COND_LIMIT:
        raise AllocationError("M K M^T is near singular; allocation not decoupled")
    return K, K @ M.T @ np.linalg.inv(G)


@dataclass(frozen=True)
class Allocation:
    """Solved allocation artifacts for a platform.

    Attributes
    ----------
    f_nullspace, m_nullspace : np.ndarray
        Orthonormal bases of ker(F) and ker(M) (columns).
    u_bar : np.ndarray
        Zero-moment input: M u_bar = 0 and |F u_bar| = 1.
    d_star : np.ndarray
        Zero-moment force direction F u_bar (unit vector).
    weight : np.ndarray
        K = Fbar Fbar^T, the projector onto ker(F).
    m_pinv : np.ndarray
        Right pseudo-inverse of M with F m_pinv = 0.
    diagnostics : AllocationDiagnostics
        Rank structure underlying the above.
    """

    f_nullspace: np.ndarray
    m_nullspace: np.ndarray
    u_bar: np.ndarray
    d_star: np.ndarray
    weight: np.ndarray
    m_pinv: np.ndarray
    diagnostics: AllocationDiagnostics


def solve_allocation(F: np.ndarray, M: np.ndarray, tol: float = RANK_TOL) -> Allocation:
    """Run the full allocation analysis; requires the decoupling check to pass.

    Raises
    ------
    AllocationError
        If rank(M Fbar) != 3.
    """
    diag = check_decoupling(F, M, tol)
    if not diag.decoupled:
        raise AllocationError(
            f"rank(M Fbar) = {diag.rank_m_fbar} != 3 "
            f"(rank F = {diag.rank_f}, rank M = {diag.rank_m})"
        )
    u_bar, d_star = zero_moment_direction(F, M, tol)
    K, m_pinv = moment_pseudoinverse(F, M, tol)
    return Allocation(
        f_nullspace=nullspace_basis(F, tol),
        m_nullspace=nullspace_basis(M, tol),
        u_bar=u_bar,
        d_star=d_star,
        weight=K,
        m_pinv=m_pinv,
        diagnostics=diag,
    )


@dataclass(frozen=True)
class PlatformModel:
    """Mass, inertia, rotor layout and the derived input matrices.

    Immutable after construction; safe to share across threads.
    """

    mass: float
    inertia: np.ndarray
    rotors: list[RotorSpec]
    F: np.ndarray = field(init=False)
    M: np.ndarray = field(init=False)
    inertia_inv: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        if self.mass <= 0.0:
            raise InvalidPlatform("mass must be positive")
        J = self.inertia
        if J.shape != (3, 3) or not np.allclose(J, J.T, atol=1e-12):
            raise InvalidPlatform("inertia must be a symmetric 3x3 matrix")
        if np.any(np.linalg.eigvalsh(J) <= 0.0):
            raise InvalidPlatform("inertia must be positive definite")
        F, M = allocation_matrices(self.rotors)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "inertia_inv", np.linalg.inv(J))

    @property
    def n_rotors(self) -> int:
        return len(self.rotors)

    def allocation(self, tol: float = RANK_TOL) -> Allocation:
        """Solve the allocation analysis for this platform."""
        return solve_allocation(self.F, self.M, tol)


def star_hexarotor(
    mass: float,
    inertia: np.ndarray,
    arm_length: float,
    thrust_coeff: float,
    drag_coeff: float,
    tilt_angles: tuple[float, float, float],
    cant_angle: float,
    handedness: tuple[int, ...] = (-1, 1, -1, 1, -1, 1),
) -> PlatformModel:
    """Star-shaped hexarotor with alternating rotor tilts.

    Arms point at gamma_i = (i-1) * 60 deg; rotor i sits at arm_length along
    its arm. Spin axes are obtained by rotating e3 first by alpha_i about the
    arm x axis, then by the common cant angle about the arm y axis, then out
    to the arm direction:

        z_i = R(gamma_i, e3) R(cant, e2) R(alpha_i, e1) e3

    with the tilt pattern alpha = (a, -a, b, -b, c, -c) built from
    ``tilt_angles = (a, b, c)``. The three magnitudes must be pairwise
    distinct, otherwise the layout degenerates and is rejected. The default
    handedness alternates CW/CCW starting clockwise; pass another pattern to
    match a specific build.

    All angles in radians.
    """
    a, b, c = tilt_angles
    if len({a, b, c}) != 3:
        raise InvalidPlatform("tilt angles must be pairwise distinct")
    if len(handedness) != 6:
        raise InvalidPlatform("handedness pattern must have 6 entries")
    alphas = (a, -a, b, -b, c, -c)
    rotors = []
    for i in range(6):
        gamma = i * np.pi / 3.0
        q_arm = quat.from_axis_angle(gamma, E3)
        position = quat.rotate(q_arm, np.array([arm_length, 0.0, 0.0]))
        q_axis = quat.product(q_arm, quat.product(
            quat.from_axis_angle(cant_angle, E2),
            quat.from_axis_angle(alphas[i], E1),
        ))
        axis = quat.rotate(q_axis, E3)
        rotors.append(RotorSpec(position, axis / np.linalg.norm(axis),
                                thrust_coeff, drag_coeff, handedness[i]))
    return PlatformModel(mass=mass, inertia=inertia, rotors=rotors)


def default_hexarotor() -> PlatformModel:
    """Desk-scale star hexarotor used as the reference test platform.

    1 kg, diag(0.01, 0.01, 0.02) kg m^2 inertia, 0.3 m arms,
    c_f = 9.9e-4, c_tau_plus = 1.9e-5, tilts (15, 20, 25) deg with a
    10 deg cant.
    """
    return star_hexarotor(
        mass=1.0,
        inertia=np.diag([0.01, 0.01, 0.02]),
        arm_length=0.3,
        thrust_coeff=9.9e-4,
        drag_coeff=1.9e-5,
        tilt_angles=tuple(np.radians([15.0, 20.0, 25.0])),
        cant_angle=np.radians(10.0),
    )


def coplanar_quadrotor(
    mass: float = 1.0,
    inertia: np.ndarray | None = None,
    arm_length: float = 0.25,
    thrust_coeff: float = 9.9e-4,
    drag_coeff: float = 1.9e-5,
) -> PlatformModel:
    """Symmetric cross quadrotor with all spin axes along e3.

    Classic underactuated layout: rank(F) = 1, rank(M) = 3, and the
    zero-moment direction is exactly e3.
    """
    if inertia is None:
        inertia = np.diag([0.01, 0.01, 0.02])
    positions = [
        np.array([arm_length, 0.0, 0.0]),
        np.array([0.0, arm_length, 0.0]),
        np.array([-arm_length, 0.0, 0.0]),
        np.array([0.0, -arm_length, 0.0]),
    ]
    rotors = [
        RotorSpec(p, E3.copy(), thrust_coeff, drag_coeff, (-1) ** (i + 1))
        for i, p in enumerate(positions)
    ]
    return PlatformModel(mass=mass, inertia=inertia, rotors=rotors)


def platform_from_dict(data: dict) -> PlatformModel:
    """Build a platform from a parsed definition file.

    Expected fields: ``mass`` [kg], ``inertia`` (3x3 nested rows or a flat
    list of 9, row-major, kg m^2) and ``rotors``, a list where each entry has
    ``c_f``, ``c_tau_plus``, ``sigma`` and either ``position`` + ``axis``
    (body frame, meters / unit vector) or the star parametrization
    ``gamma_deg``, ``alpha_deg``, ``beta_deg``, ``ell``.
    """
    try:
        mass = float(data["mass"])
        inertia = np.asarray(data["inertia"], dtype=float).reshape(3, 3)
        rotor_specs = []
        for entry in data["rotors"]:
            cf = float(entry["c_f"])
            ctp = float(entry["c_tau_plus"])
            sigma = int(entry["sigma"])
            if "position" in entry:
                position = np.asarray(entry["position"], dtype=float)
                axis = np.asarray(entry["axis"], dtype=float)
                axis = axis / np.linalg.norm(axis)
            else:
                gamma = np.radians(float(entry["gamma_deg"]))
                alpha = np.radians(float(entry["alpha_deg"]))
                beta = np.radians(float(entry["beta_deg"]))
                ell = float(entry["ell"])
                q_arm = quat.from_axis_angle(gamma, E3)
                position = quat.rotate(q_arm, np.array([ell, 0.0, 0.0]))
                q_axis = quat.product(q_arm, quat.product(
                    quat.from_axis_angle(beta, E2),
                    quat.from_axis_angle(alpha, E1),
                ))
                axis = quat.rotate(q_axis, E3)
                axis = axis / np.linalg.norm(axis)
            rotor_specs.append(RotorSpec(position, axis, cf, ctp, sigma))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidPlatform):
            raise
        raise InvalidPlatform(f"malformed platform definition: {exc}") from exc
    return PlatformModel(mass=mass, inertia=inertia, rotors=rotor_specs)


def load_platform(path: str | Path) -> PlatformModel:
    """Read a JSON platform definition file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidPlatform(f"cannot parse {path}: {exc}") from exc
    return platform_from_dict(data)
