import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)
mat3 = arrays(np.float64, (3, 3), elements=finite)


@st.composite
def unit_quats(draw):
    """Uniformly random unit quaternions, built from four bounded normals."""
    q = draw(arrays(np.float64, 4, elements=st.floats(-1.0, 1.0)))
    n = np.linalg.norm(q)
    if n < 1e-3:
        q, n = np.array([1.0, 0.0, 0.0, 0.0]), 1.0
    return q / n


@st.composite
def rotations(draw):
    """Random rotation matrices via an independent quaternion formula."""
    return quat_matrix_oracle(draw(unit_quats()))


def quat_matrix_oracle(q):
    """Textbook rotation matrix of a unit quaternion, written out entry by entry."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_rotations(rng, n):
    """``n`` Haar-distributed rotations (uniform quaternions -> oracle matrices)."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return _vector_oracle(q)


def _vector_oracle(q):
    w, x, y, z = q.T
    R = np.empty((len(q), 3, 3))
    R[:, 0] = np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1)
    R[:, 1] = np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1)
    R[:, 2] = np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1)
    return R


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
