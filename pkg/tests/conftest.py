import numpy as np
import pytest

from mrhover import controller, platform
from mrhover.dynamics import GRAVITY, RigidBodyState
from mrhover import quat

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def hexarotor():
    return platform.default_hexarotor()


@pytest.fixture(scope="session")
def hex_allocation(hexarotor):
    return hexarotor.allocation()


@pytest.fixture(scope="session")
def quadrotor():
    return platform.coplanar_quadrotor()


@pytest.fixture(scope="session")
def quad_allocation(quadrotor):
    return quadrotor.allocation()


@pytest.fixture(scope="session")
def gains():
    return controller.Gains(k_pp=4.0, k_pd=4.0, k_delta=2.0, k_ap=2.0, k_ad=0.2)


def rotation_aligning(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit quaternion rotating unit vector a onto unit vector b."""
    v = np.cross(a, b)
    n = np.linalg.norm(v)
    if n < 1e-12:
        return quat.identity() if a @ b > 0 else quat.from_axis_angle(np.pi, E1)
    return quat.from_axis_angle(float(np.arctan2(n, a @ b)), v / n)


def hover_attitude(allocation) -> np.ndarray:
    """Attitude quaternion aligning the zero-moment direction with world up."""
    return rotation_aligning(allocation.d_star, E3)


def hover_state(allocation, p=(0.0, 0.0, 0.0)) -> RigidBodyState:
    return RigidBodyState.at_rest(p=p, q=hover_attitude(allocation))


def hex_platform_dict() -> dict:
    """Star-hexarotor definition in config-file form (degrees)."""
    alphas = [15.0, -15.0, 20.0, -20.0, 25.0, -25.0]
    return {
        "mass": 1.0,
        "inertia": [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.02]],
        "rotors": [
            {
                "gamma_deg": 60.0 * i,
                "alpha_deg": alphas[i],
                "beta_deg": 10.0,
                "ell": 0.3,
                "c_f": 9.9e-4,
                "c_tau_plus": 1.9e-5,
                "sigma": (-1) ** (i + 1),
            }
            for i in range(6)
        ],
    }


@pytest.fixture(scope="session")
def hover_thrust(hexarotor):
    return hexarotor.mass * GRAVITY
