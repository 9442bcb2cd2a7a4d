"""Small spatial-algebra toolbox.

Spatial motion vectors are ordered ``[angular; linear]`` and expressed in the
world frame at the world origin (Featherstone's convention). Quaternions are
stored ``(w, x, y, z)``.
"""

from __future__ import annotations

import numpy as np


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_to_rot(quat: np.ndarray) -> np.ndarray:
    w, x, y, z = np.asarray(quat, dtype=float) / np.linalg.norm(quat)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rot_to_quat(R: np.ndarray) -> np.ndarray:
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k])
        q = np.zeros(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    q = np.asarray(q, dtype=float)
    return q if q[0] >= 0 else -q


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
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


def axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix for a rotation of ``angle`` about the unit ``axis``."""
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def quat_integrate(quat: np.ndarray, omega: np.ndarray, h: float) -> np.ndarray:
    """Advance an orientation by the world-frame angular velocity ``omega``.

    The result is renormalized so repeated integration stays on the unit sphere.
    """
    theta = np.linalg.norm(omega) * h
    if theta < 1e-12:
        dq = np.array([1.0, *(0.5 * h * omega)])
    else:
        axis = omega / np.linalg.norm(omega)
        dq = np.array([np.cos(theta / 2), *(np.sin(theta / 2) * axis)])
    out = quat_mul(dq, quat)
    return out / np.linalg.norm(out)


def transform(R: np.ndarray | None = None, p: np.ndarray | None = None) -> np.ndarray:
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = R
    if p is not None:
        T[:3, 3] = p
    return T


def motion_cross(v: np.ndarray) -> np.ndarray:
    """6x6 matrix of ``v x`` acting on motion vectors."""
    X = np.zeros((6, 6))
    w, u = skew(v[:3]), skew(v[3:])
    X[:3, :3] = w
    X[3:, :3] = u
    X[3:, 3:] = w
    return X


def force_cross(v: np.ndarray) -> np.ndarray:
    """6x6 matrix of ``v x*`` acting on force vectors."""
    return -motion_cross(v).T


def spatial_inertia(mass: float, com: np.ndarray, inertia: np.ndarray) -> np.ndarray:
    """Spatial inertia about the world origin of a body with world COM ``com``
    and rotational inertia ``inertia`` (about the COM, world axes)."""
    C = skew(com)
    out = np.empty((6, 6))
    out[:3, :3] = inertia + mass * C @ C.T
    out[:3, 3:] = mass * C
    out[3:, :3] = mass * C.T
    out[3:, 3:] = mass * np.eye(3)
    return out
