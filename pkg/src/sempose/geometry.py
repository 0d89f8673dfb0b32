"""Quaternion algebra, poses, and the pose-aware distortion measure.

Quaternions are scalar-first (w, x, y, z) with the Hamilton product.
Rotation vectors are axis times angle in radians, canonical norm <= pi.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q, tol=1e-12):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n <= tol:
        raise DegenerateInputError(f"quaternion norm {n} too small to normalize")
    return q / n


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotation_matrix(q):
    """3x3 matrix rotating body-frame vectors into the world frame."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotvec_to_quat(v):
    """Exponential map; series expansion keeps the origin exact."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v)
    half = 0.5 * theta
    if theta < 1e-8:
        s = 0.5 - theta * theta / 48.0
    else:
        s = np.sin(half) / theta
    return np.concatenate([[np.cos(half)], v * s])


def quat_to_rotvec(q):
    """Logarithm map onto the canonical ball of radius pi.

    The double cover is collapsed: q and -q give the same rotation vector.
    """
    q = quat_normalize(q)
    if q[0] < 0:
        q = -q
    w = min(q[0], 1.0)
    vec = q[1:]
    s = np.linalg.norm(vec)
    angle = 2.0 * np.arctan2(s, w)
    if s < 1e-12:
        return vec * 2.0
    return vec * (angle / s)


def quat_dot(q, q_prime):
    return float(np.clip(np.dot(q, q_prime), -1.0, 1.0))


def angular_loss(q, q_hat_raw):
    """-|q . normalize(q_hat_raw)|, in [-1, 0]; -1 iff same rotation up to sign."""
    q_hat = quat_normalize(np.asarray(q_hat_raw, dtype=float))
    return -abs(float(np.dot(q, q_hat)))


def angular_distance_deg(q, q_prime):
    """Relative rotation angle in degrees, double cover folded out."""
    d = abs(float(np.dot(q, q_prime)))
    return float(np.degrees(2.0 * np.arccos(min(d, 1.0))))


@dataclass
class Pose:
    position: np.ndarray
    orientation: np.ndarray  # unit quaternion (w, x, y, z)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.orientation = quat_normalize(self.orientation)

    def as_row(self):
        """7 floats: px, py, pz, qw, qx, qy, qz (dataset serialization order)."""
        return np.concatenate([self.position, self.orientation])

    @classmethod
    def from_row(cls, row):
        row = np.asarray(row, dtype=float)
        return cls(position=row[:3], orientation=row[3:7])


def app_distortion(pose, position_hat, quat_hat_raw, alpha):
    """(1-alpha) * position error - alpha * |q . q_hat'|; >= -alpha always."""
    pos_err = float(np.linalg.norm(pose.position - np.asarray(position_hat, dtype=float)))
    return (1.0 - alpha) * pos_err + alpha * angular_loss(pose.orientation, quat_hat_raw)
