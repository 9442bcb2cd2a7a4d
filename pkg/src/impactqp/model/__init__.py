"""Rigid-body kinematics and dynamics."""

from .dynamics import (
    bias_forces,
    centroidal_momentum_matrix,
    com,
    forward_dynamics,
    forward_kinematics,
    frame_position,
    frame_rotation,
    frame_velocity,
    integrate,
    jacobian_derivative,
    kinetic_energy,
    mass_matrix,
    point_jacobian,
    potential_energy,
)
from .robot import (
    ROLES,
    EndEffectorFrame,
    Joint,
    Link,
    ModelError,
    RobotModel,
    RobotState,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)

__all__ = [
    "ROLES", "EndEffectorFrame", "Joint", "Link", "ModelError", "RobotModel", "RobotState",
    "bias_forces", "centroidal_momentum_matrix", "com", "forward_dynamics", "forward_kinematics",
    "frame_position", "frame_rotation", "frame_velocity", "integrate", "jacobian_derivative",
    "kinetic_energy", "load_model", "mass_matrix", "model_from_dict", "model_to_dict",
    "point_jacobian", "potential_energy", "save_model",
]
