"""Planar two-joint arm striking a wall one control step ahead.

The arm (two 0.5 m links) sits at ``q = [0, 0.2π]`` with its tip moving at
0.3 m/s towards a wall whose normal is ``+y``. A single acceleration task
asks for ``ẍ = [0, 120]`` m/s². Under joint-velocity limits ``[0.9, 0.6]``
rad/s the baseline QP accepts an acceleration whose post-impact joint
velocity breaks the limit; the impact-aware QP does not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import HalfspaceIntersection

from . import robots
from .constraints import BoundsSpec, VariableLayout, impact_joint_velocity_rows, joint_velocity_rows
from .impact import (
    EndEffectorPartition,
    ImpactConfig,
    build_distribution,
    predict_joint_velocity_jump,
)
from .model import RobotState, point_jacobian
from .qp import assemble, end_effector_acceleration_task, solve

Q = np.array([0.0, 0.2 * np.pi])
TIP_VELOCITY = np.array([0.0, 0.3, 0.0])
VELOCITY_LIMITS = np.array([0.9, 0.6])
DESIRED_ACCELERATION = np.array([0.0, 120.0, 0.0])
DT = 0.005
RESTITUTION = 0.02


@dataclass
class ToyResult:
    mode: str
    qdd: np.ndarray
    pre_impact_velocity: np.ndarray  # q̇ + q̈Δt
    post_impact_velocity: np.ndarray  # q̇ + q̈Δt + Δq̇
    status: str
    vertices: np.ndarray  # feasible q̈ polygon


def toy_state():
    model = robots.planar_2r(0.5, 0.5)
    J = point_jacobian(model, RobotState(Q, np.zeros(2)), "tip")[:2]
    qd = np.linalg.solve(J, TIP_VELOCITY[:2])
    return model, RobotState(Q.copy(), qd)


def _vertices(A, b):
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 1e-12
    A, b = A[keep], b[keep]
    # Chebyshev-style interior point: the unconstrained-free box midpoint works for these polytopes.
    from scipy.optimize import linprog

    res = linprog(np.r_[0.0, 0.0, -1.0], A_ub=np.hstack([A, norms[keep][:, None]]), b_ub=b,
                  bounds=[(None, None), (None, None), (None, 1e6)], method="highs")
    hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), res.x[:2])
    pts = hs.intersections
    centre = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - centre[1], pts[:, 0] - centre[0]))
    return pts[order]


def solve_toy(mode: str = "impact_aware", restitution: float = RESTITUTION) -> ToyResult:
    model, state = toy_state()
    layout = VariableLayout(model.nv)
    bounds = BoundsSpec(2, qd_lower=-VELOCITY_LIMITS, qd_upper=VELOCITY_LIMITS)
    part = EndEffectorPartition(impacting=("tip",))
    configs = {"tip": ImpactConfig([0.0, 1.0, 0.0], restitution, DT, DT)}
    jump = predict_joint_velocity_jump(build_distribution(model, state, part, configs))
    blocks = [joint_velocity_rows(model, state, layout, bounds, DT),
              impact_joint_velocity_rows(model, state, layout, bounds, jump)]
    task = end_effector_acceleration_task(model, state, "tip", DESIRED_ACCELERATION, 1.0, layout)
    problem = assemble([task], blocks, mode=mode, layout=layout)
    sol = solve(problem)
    qdd = sol.x
    pre = state.qd + qdd * DT
    post = pre + jump.evaluate(qdd, state.qd)
    A = np.vstack([b.A for b in problem.inequalities])
    b = np.concatenate([b.b for b in problem.inequalities])
    return ToyResult(mode, qdd, pre, post, sol.status, _vertices(A, b))


def report() -> str:
    model, state = toy_state()
    lines = [f"state: q = {np.round(state.q, 4).tolist()} rad, qd = {np.round(state.qd, 4).tolist()} rad/s"]
    for mode in ("baseline", "impact_aware"):
        r = solve_toy(mode)
        lines.append(f"[{mode}] status={r.status} qdd={np.round(r.qdd, 4).tolist()} rad/s^2")
        lines.append(f"[{mode}] pre-impact qd={np.round(r.pre_impact_velocity, 4).tolist()} rad/s")
        lines.append(f"[{mode}] post-impact qd={np.round(r.post_impact_velocity, 4).tolist()} rad/s")
        lines.append(f"[{mode}] feasible qdd polygon vertices: "
                     + "; ".join(f"({v[0]:.3f}, {v[1]:.3f})" for v in r.vertices))
    return "\n".join(lines)
