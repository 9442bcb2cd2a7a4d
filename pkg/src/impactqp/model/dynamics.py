"""Kinematics and dynamics of a floating-base kinematic tree.

Everything is computed in world coordinates: each joint contributes motion
subspace columns ``S`` (spatial, world frame), link velocities are sums of
``S q̇`` along the ancestor chain, the mass matrix comes from the
composite-rigid-body recursion and bias forces from recursive Newton-Euler
with zero joint acceleration.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .robot import EndEffectorFrame, ModelError, RobotModel, RobotState
from .spatial import (
    axis_angle,
    force_cross,
    motion_cross,
    quat_integrate,
    quat_to_rot,
    skew,
    spatial_inertia,
    transform,
)


@dataclass
class TreeData:
    """Per-state quantities shared by every kinematic/dynamic query."""

    T: list  # world transform of each link
    S: list  # 6 x dof motion subspace of each joint (world)
    Sdot: list  # time derivative of S (world)
    v: list  # spatial velocity of each link
    a_bias: list  # spatial acceleration of each link with qdd = 0 and no gravity
    inertia: list  # spatial inertia of each link about the world origin
    com: list  # world COM of each link
    memo: dict = field(default_factory=dict)  # derived quantities (mass matrix, Jacobians, ...)


_local = threading.local()
CACHE_SIZE = 16


def _tree(model: RobotModel, state: RobotState) -> TreeData:
    state.check(model)
    key = (id(model), state.q.tobytes(), state.qd.tobytes())
    cache = getattr(_local, "cache", None)
    if cache is None:
        cache = _local.cache = OrderedDict()
    hit = cache.get(key)
    if hit is not None and hit[0] is model:
        cache.move_to_end(key)
        return hit[1]
    data = _compute_tree(model, state.q, state.qd)
    cache[key] = (model, data)
    if len(cache) > CACHE_SIZE:
        cache.popitem(last=False)
    return data


def _memo(data: TreeData, key, build):
    out = data.memo.get(key)
    if out is None:
        out = data.memo[key] = build()
    return out.copy()


def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def _compute_tree(model: RobotModel, q: np.ndarray, qd: np.ndarray) -> TreeData:
    n = len(model.links)
    T, S, Sdot, v, a_bias, inertia, com = ([None] * n for _ in range(7))
    for i, (link, joint) in enumerate(zip(model.links, model.joints)):
        parent = joint.parent
        Tp = T[parent] if parent >= 0 else np.eye(4)
        vp = v[parent] if parent >= 0 else np.zeros(6)
        ap = a_bias[parent] if parent >= 0 else np.zeros(6)
        Tj = Tp @ joint.origin
        qi, vi = q[model.q_index[i]], qd[model.v_index[i]]
        if joint.kind == "revolute":
            Ti = Tj @ transform(axis_angle(joint.axis, qi[0]))
            a = Tj[:3, :3] @ joint.axis
            Si = np.concatenate([a, _cross(Tj[:3, 3], a)])[:, None]
        elif joint.kind == "prismatic":
            Ti = Tj @ transform(p=joint.axis * qi[0])
            a = Tj[:3, :3] @ joint.axis
            Si = np.concatenate([np.zeros(3), a])[:, None]
        else:
            Ti = transform(quat_to_rot(qi[3:7]), qi[:3])
            Si = np.zeros((6, 6))
            Si[:3, 3:] = np.eye(3)
            Si[3:, :3] = np.eye(3)
            Si[3:, 3:] = skew(qi[:3])
        v[i] = vp + Si @ vi
        if joint.kind == "free":
            Sd = np.zeros((6, 6))
            Sd[3:, 3:] = skew(vi[:3])
        else:
            Sd = motion_cross(v[i]) @ Si
        T[i], S[i], Sdot[i] = Ti, Si, Sd
        a_bias[i] = ap + Sd @ vi
        R = Ti[:3, :3]
        com[i] = Ti[:3, :3] @ link.com + Ti[:3, 3]
        inertia[i] = spatial_inertia(link.mass, com[i], R @ link.inertia @ R.T)
    return TreeData(T, S, Sdot, v, a_bias, inertia, com)


def _ancestors(model: RobotModel, body: int):
    while body >= 0:
        yield body
        body = model.joints[body].parent


def _frame(model: RobotModel, frame) -> EndEffectorFrame:
    if isinstance(frame, EndEffectorFrame):
        if not 0 <= frame.body < len(model.links):
            raise ModelError(f"frame {frame.name}: invalid body index")
        return frame
    return model.frame(frame)


def forward_kinematics(model: RobotModel, q: np.ndarray):
    """World transforms of every link and every end-effector frame.

    Returns ``(links, frames)``: a list of 4x4 link transforms and a dict of
    4x4 frame transforms keyed by frame name.
    """
    q = np.asarray(q, dtype=float)
    data = _tree(model, RobotState(q, np.zeros(model.nv)))
    frames = {name: data.T[f.body] @ f.transform for name, f in model.frames.items()}
    return list(data.T), frames


def frame_position(model: RobotModel, state: RobotState, frame) -> np.ndarray:
    f = _frame(model, frame)
    data = _tree(model, state)
    return (data.T[f.body] @ f.transform)[:3, 3]


def frame_rotation(model: RobotModel, state: RobotState, frame) -> np.ndarray:
    f = _frame(model, frame)
    data = _tree(model, state)
    return (data.T[f.body] @ f.transform)[:3, :3]


def point_jacobian(model: RobotModel, state: RobotState, frame) -> np.ndarray:
    """3 x nv Jacobian of the world-frame linear velocity of a frame origin."""
    f = _frame(model, frame)
    data = _tree(model, state)

    def build():
        P = skew((data.T[f.body] @ f.transform)[:3, 3])
        J = np.zeros((3, model.nv))
        for j in _ancestors(model, f.body):
            S = data.S[j]
            J[:, model.v_index[j]] = S[3:] - P @ S[:3]
        return J

    return _memo(data, ("J", f.name, f.body, f.transform.tobytes()), build)


def frame_velocity(model: RobotModel, state: RobotState, frame) -> np.ndarray:
    return point_jacobian(model, state, frame) @ state.qd


def jacobian_derivative(model: RobotModel, state: RobotState, frame) -> np.ndarray:
    """3 x nv time derivative of :func:`point_jacobian` along ``state.qd``."""
    f = _frame(model, frame)
    data = _tree(model, state)
    p = (data.T[f.body] @ f.transform)[:3, 3]
    vb = data.v[f.body]
    pdot = vb[3:] + _cross(vb[:3], p)
    P, Pd = skew(p), skew(pdot)
    Jd = np.zeros((3, model.nv))
    for j in _ancestors(model, f.body):
        S, Sd = data.S[j], data.Sdot[j]
        Jd[:, model.v_index[j]] = Sd[3:] - P @ Sd[:3] - Pd @ S[:3]
    return Jd


def mass_matrix(model: RobotModel, state: RobotState) -> np.ndarray:
    data = _tree(model, state)
    return _memo(data, "M", lambda: _crba(model, data))


def _crba(model: RobotModel, data: TreeData) -> np.ndarray:
    Ic = [I.copy() for I in data.inertia]
    for i in reversed(range(len(model.links))):
        p = model.joints[i].parent
        if p >= 0:
            Ic[p] += Ic[i]
    M = np.zeros((model.nv, model.nv))
    for i in range(len(model.links)):
        F = Ic[i] @ data.S[i]
        vi = model.v_index[i]
        M[vi, vi] = data.S[i].T @ F
        j = model.joints[i].parent
        while j >= 0:
            vj = model.v_index[j]
            M[vj, vi] = data.S[j].T @ F
            M[vi, vj] = M[vj, vi].T
            j = model.joints[j].parent
    return M


def bias_forces(model: RobotModel, state: RobotState) -> np.ndarray:
    """Coriolis, centrifugal and gravity terms ``N(q, q̇)``."""
    data = _tree(model, state)
    return _memo(data, "N", lambda: _rnea(model, data))


def _rnea(model: RobotModel, data: TreeData) -> np.ndarray:
    a0 = np.concatenate([np.zeros(3), -model.gravity])
    f = []
    for i in range(len(model.links)):
        a = data.a_bias[i] + a0
        Iv = data.inertia[i] @ data.v[i]
        f.append(data.inertia[i] @ a + force_cross(data.v[i]) @ Iv)
    N = np.zeros(model.nv)
    for i in reversed(range(len(model.links))):
        N[model.v_index[i]] = data.S[i].T @ f[i]
        p = model.joints[i].parent
        if p >= 0:
            f[p] = f[p] + f[i]
    return N


def com(model: RobotModel, state: RobotState):
    """Center-of-mass position and velocity."""
    data = _tree(model, state)
    c = sum(l.mass * ci for l, ci in zip(model.links, data.com)) / model.total_mass
    cd = centroidal_momentum_matrix(model, state)[3:] @ state.qd / model.total_mass
    return c, cd


def centroidal_momentum_matrix(model: RobotModel, state: RobotState) -> np.ndarray:
    """6 x nv map from q̇ to ``[angular; linear]`` momentum about the COM.

    The angular rows are ``A_ωG``, the linear rows ``A_vG`` (so that
    ``A_vG q̇ = M_total ċ``).
    """
    data = _tree(model, state)
    Ic = [I.copy() for I in data.inertia]
    for i in reversed(range(len(model.links))):
        p = model.joints[i].parent
        if p >= 0:
            Ic[p] += Ic[i]
    A = np.zeros((6, model.nv))
    for i in range(len(model.links)):
        A[:, model.v_index[i]] = Ic[i] @ data.S[i]
    c = sum(l.mass * ci for l, ci in zip(model.links, data.com)) / model.total_mass
    X = np.eye(6)
    X[:3, 3:] = -skew(c)
    return X @ A


def integrate(model: RobotModel, q: np.ndarray, qd: np.ndarray, h: float) -> np.ndarray:
    """Configuration reached after moving with velocity ``qd`` for time ``h``."""
    out = np.array(q, dtype=float)
    if model.floating:
        out[:3] += qd[:3] * h
        out[3:7] = quat_integrate(out[3:7], qd[3:6], h)
        out[7:] += qd[6:] * h
    else:
        out += qd * h
    return out


def forward_dynamics(model: RobotModel, state: RobotState, tau: np.ndarray) -> np.ndarray:
    """Unconstrained joint accelerations for generalized forces ``tau`` (length nv)."""
    M = mass_matrix(model, state)
    return np.linalg.solve(M, tau - bias_forces(model, state))


def kinetic_energy(model: RobotModel, state: RobotState) -> float:
    return 0.5 * state.qd @ mass_matrix(model, state) @ state.qd


def potential_energy(model: RobotModel, state: RobotState) -> float:
    data = _tree(model, state)
    return -sum(l.mass * model.gravity @ c for l, c in zip(model.links, data.com))
