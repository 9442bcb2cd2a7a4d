"""One control step: predictions, constraint blocks, QP assembly and solve."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constraints import (
    BoundsSpec,
    ComVelPolygon,
    ConstraintBlock,
    VariableLayout,
    ZmpPolygon,
    angular_momentum_rows,
    com_velocity_rows,
    contact_acceleration_rows,
    floating_base_rows,
    generator_rows,
    impact_angular_momentum_rows,
    impact_com_velocity_rows,
    impact_cwc_rows,
    impact_impulsive_torque_rows,
    impact_joint_velocity_rows,
    impact_zmp_rows,
    joint_kinematic_rows,
    joint_torque_rows,
    make_layout,
    zmp_block,
)
from .impact import (
    EndEffectorPartition,
    build_distribution,
    predict_angular_momentum_jump,
    predict_com_velocity_jump,
    predict_force_jumps,
    predict_impulsive_torques,
    predict_joint_velocity_jump,
    predict_wrench_jump,
)
from .model import RobotModel, RobotState, bias_forces, frame_position, mass_matrix, point_jacobian
from .qp import QPSolution, TaskObjective, assemble, solve

log = logging.getLogger(__name__)

SLACK_WEIGHT = 1e6


class ControllerInfeasible(RuntimeError):
    def __init__(self, message: str, solution: QPSolution | None = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class ControllerSettings:
    """Everything the controller needs besides the robot state."""

    bounds: BoundsSpec
    dt: float = 0.005
    contact_specs: dict = field(default_factory=dict)  # frame -> ContactSpec
    normals: dict = field(default_factory=dict)  # frame -> surface normal (established contacts)
    impact_configs: dict = field(default_factory=dict)  # frame -> ImpactConfig
    zmp_polygon: ZmpPolygon | None = None
    com_polygon: ComVelPolygon | None = None
    position_limits: bool = True
    slack_weight: float = SLACK_WEIGHT


@dataclass
class StepResult:
    qdd: np.ndarray
    forces: dict  # commanded contact forces
    tau: np.ndarray  # actuated torques from inverse dynamics
    solution: QPSolution
    layout: VariableLayout
    blocks: list
    predictions: dict  # name -> JumpDecomposition
    jumps: dict  # name -> evaluated jump
    aware: bool
    slack: float = 0.0
    fallback: bool = False


def inverse_dynamics(model: RobotModel, state: RobotState, qdd, forces) -> np.ndarray:
    """Generalized forces ``M q̈ + N - Σ Jᵀ f`` (length nv)."""
    tau = mass_matrix(model, state) @ qdd + bias_forces(model, state)
    for name, f in forces.items():
        tau -= point_jacobian(model, state, name).T @ f
    return tau


def _relax(block: ConstraintBlock, layout: VariableLayout) -> ConstraintBlock:
    A = np.zeros((block.rows, layout.n))
    A[:, :block.A.shape[1]] = block.A
    A[:, layout.slack_index] = -np.maximum(np.linalg.norm(block.A, axis=1), 1.0)
    return ConstraintBlock(block.label, block.kind, A, block.b, block.provenance)


def baseline_blocks(model, state, layout, settings: ControllerSettings, partition, previous_forces=None):
    blocks = [
        joint_kinematic_rows(model, state, layout, settings.bounds, settings.dt) if settings.position_limits
        else None,
        joint_torque_rows(model, state, layout, settings.bounds, previous_forces),
        floating_base_rows(model, state, layout),
        contact_acceleration_rows(model, state, layout, partition.established),
        generator_rows(layout),
    ]
    if settings.zmp_polygon is not None and layout.contacts:
        positions = {n: frame_position(model, state, n) for n in layout.contact_names}
        blocks.append(zmp_block(layout, settings.zmp_polygon, positions))
    if settings.com_polygon is not None and model.floating:
        blocks.append(com_velocity_rows(model, state, layout, settings.com_polygon, settings.dt))
    if model.floating and np.isfinite(settings.bounds.angular_momentum).any():
        blocks.append(angular_momentum_rows(model, state, layout, settings.bounds, settings.dt))
    return [b for b in blocks if b is not None and b.rows]


def aware_blocks(model, state, layout, settings: ControllerSettings, partition: EndEffectorPartition,
                 measured_wrench=None):
    """Impact-aware rows plus the decompositions they were built from."""
    configs = {n: settings.impact_configs[n] for n in partition.impacting}
    dist = build_distribution(model, state, partition, configs)
    preds = {
        "joint_velocity": predict_joint_velocity_jump(dist),
        "contact_force": predict_force_jumps(dist),
        "impulsive_torque": predict_impulsive_torques(dist),
    }
    blocks = [
        impact_joint_velocity_rows(model, state, layout, settings.bounds, preds["joint_velocity"]),
        impact_impulsive_torque_rows(model, state, layout, settings.bounds, preds["impulsive_torque"]),
    ]
    if layout.contacts:
        blocks.append(impact_cwc_rows(layout, settings.contact_specs, settings.normals, preds["contact_force"],
                                      partition.contacts, state))
    if model.floating:
        preds["angular_momentum"] = predict_angular_momentum_jump(dist)
        preds["com_velocity"] = predict_com_velocity_jump(dist)
        if np.isfinite(settings.bounds.angular_momentum).any():
            blocks.append(impact_angular_momentum_rows(model, state, layout, settings.bounds,
                                                       preds["angular_momentum"]))
        if settings.com_polygon is not None:
            blocks.append(impact_com_velocity_rows(model, state, layout, settings.com_polygon,
                                                   preds["com_velocity"]))
        if settings.zmp_polygon is not None:
            preds["wrench"] = predict_wrench_jump(dist, settings.zmp_polygon.origin)
            positions = {n: frame_position(model, state, n) for n in layout.contact_names}
            blocks.append(impact_zmp_rows(layout, settings.zmp_polygon, preds["wrench"], state, positions,
                                          measured=measured_wrench))
    return [b for b in blocks if b.rows], preds, dist


def controller_step(model: RobotModel, state: RobotState, partition: EndEffectorPartition,
                    settings: ControllerSettings, tasks: Callable[[VariableLayout], list], aware: bool = False,
                    previous_forces=None, measured_wrench=None) -> StepResult:
    """Solve one baseline or impact-aware QP.

    ``tasks(layout)`` returns the task objectives for the current layout. When
    the impact-aware problem is infeasible, the aware rows are relaxed by one
    shared slack variable (weight ``settings.slack_weight``) and the event is
    logged; ``ControllerInfeasible`` is raised if even that fails.
    """
    layout = make_layout(model, partition.established, settings.contact_specs, settings.normals)
    task_list: list[TaskObjective] = list(tasks(layout))
    blocks = baseline_blocks(model, state, layout, settings, partition, previous_forces)
    preds, dist = {}, None
    aware = bool(aware and partition.impacting)
    if aware:
        extra, preds, dist = aware_blocks(model, state, layout, settings, partition, measured_wrench)
        blocks = blocks + extra
    mode = "impact_aware" if aware else "baseline"
    problem = assemble(task_list, blocks, mode=mode, layout=layout)
    sol = solve(problem)
    slack, fallback = 0.0, False
    if sol.status == "infeasible" and aware:
        relaxed = layout.with_slack()
        wide = []
        for b in blocks:
            b = b.widened(relaxed.n)
            wide.append(_relax(b, relaxed) if b.provenance == "impact-aware" else b)
        s_row = np.zeros((1, relaxed.n))
        s_row[0, relaxed.slack_index] = -1.0
        wide.append(ConstraintBlock("slack_nonnegative", "inequality", s_row, [0.0]))
        s_task = np.zeros((1, relaxed.n))
        s_task[0, relaxed.slack_index] = 1.0
        relaxed_tasks = [TaskObjective(t.label, t.weight, np.hstack([t.E, np.zeros((t.E.shape[0], 1))]), t.g)
                         for t in task_list]
        relaxed_tasks.append(TaskObjective("slack", settings.slack_weight, s_task, [0.0]))
        problem = assemble(relaxed_tasks, wide, mode=mode, layout=relaxed)
        sol = solve(problem)
        fallback = True
        layout = relaxed
        blocks = wide
        if sol.ok:
            slack = float(sol.x[relaxed.slack_index])
            log.warning("impact-aware QP infeasible; solved with slack %.3g", slack)
    if not sol.ok:
        raise ControllerInfeasible(f"QP {sol.status} ({mode})", sol)
    qdd = sol.x[layout.qdd]
    forces = layout.contact_forces(sol.x)
    tau = inverse_dynamics(model, state, qdd, forces)[model.actuated]
    jumps = {k: d.evaluate(qdd, state.qd) for k, d in preds.items()}
    return StepResult(qdd, forces, tau, sol, layout, blocks, preds, jumps, aware, slack, fallback)
