"""Impact prediction: restitution, impulse distribution and whole-body jumps.

An impact one control step ahead is modelled from the pre-impact velocity
``q̇ + q̈Δt`` (plus the Jacobian drift ``J̇q̇Δt``). The resulting jumps of
every tracked quantity are affine in the pair ``(q̈, q̇)``, which lets them
enter a QP over ``q̈`` as linear constraints. Each jump is returned as a
:class:`JumpDecomposition` ``Δλ = J·q̈·Δt + C·q̇``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .model import (
    RobotModel,
    RobotState,
    centroidal_momentum_matrix,
    com,
    frame_position,
    jacobian_derivative,
    mass_matrix,
    point_jacobian,
)
from .model.spatial import skew

DEFAULT_RESTITUTION = 0.02
DEFAULT_IMPACT_DURATION = 0.005
DEFAULT_CONTROL_PERIOD = 0.005
PINV_CUTOFF = 1e-10


class ImpactError(ValueError):
    """Invalid impact configuration or partition."""


class ImpulseConditioningError(ImpactError):
    """The impulse-distribution system cannot reproduce the restitution target."""

    def __init__(self, message: str, singular_values: np.ndarray):
        super().__init__(message)
        self.singular_values = singular_values


class DegenerateZmpError(ImpactError):
    """Post-impact normal force too small for the ZMP to be defined."""


@dataclass(frozen=True)
class ImpactConfig:
    """Contact model of one impacting end-effector."""

    normal: np.ndarray
    restitution: float = DEFAULT_RESTITUTION
    impact_duration: float = DEFAULT_IMPACT_DURATION
    control_period: float = DEFAULT_CONTROL_PERIOD

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        object.__setattr__(self, "normal", n)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ImpactError(f"contact normal must be unit-norm, got |n| = {np.linalg.norm(n):.6g}")
        if not self.restitution >= 0:
            raise ImpactError("restitution coefficient must be non-negative")
        if not self.impact_duration > 0 or not self.control_period > 0:
            raise ImpactError("impact duration and control period must be positive")

    @property
    def projector(self) -> np.ndarray:
        """``-(1 + c_r) n nᵀ``: maps pre-impact contact velocity to its jump."""
        return -(1.0 + self.restitution) * np.outer(self.normal, self.normal)


def restitution_jump(config: ImpactConfig, pre_velocity) -> np.ndarray:
    return config.projector @ np.asarray(pre_velocity, dtype=float)


@dataclass(frozen=True)
class EndEffectorPartition:
    """Established contacts, impacting end-effectors and free limbs (frame names)."""

    established: tuple = ()
    impacting: tuple = ()
    free: tuple = ()

    def __post_init__(self):
        for name in ("established", "impacting", "free"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        names = self.all
        if len(set(names)) != len(names):
            raise ImpactError("an end-effector appears in more than one set")

    @classmethod
    def from_model(cls, model: RobotModel) -> "EndEffectorPartition":
        groups = {"established": [], "impacting": [], "free": []}
        for f in model.frames.values():
            groups[f.role].append(f.name)
        return cls(**groups)

    @property
    def contacts(self) -> tuple:
        """Frames that carry force: established followed by impacting."""
        return self.established + self.impacting

    @property
    def all(self) -> tuple:
        return self.established + self.impacting + self.free

    def moved(self, name: str, role: str) -> "EndEffectorPartition":
        groups = {r: [n for n in getattr(self, r) if n != name] for r in ("established", "impacting", "free")}
        groups[role].append(name)
        return EndEffectorPartition(**groups)


@dataclass(frozen=True)
class JumpDecomposition:
    """``Δλ = J·q̈·Δt + C·q̇`` for one tracked quantity."""

    name: str
    J: np.ndarray
    C: np.ndarray
    dt: float

    def evaluate(self, qdd, qd) -> np.ndarray:
        return self.J @ np.asarray(qdd) * self.dt + self.C @ np.asarray(qd)

    def mapped(self, A: np.ndarray, name: str | None = None) -> "JumpDecomposition":
        """Decomposition of ``A·Δλ``."""
        return JumpDecomposition(name or self.name, A @ self.J, A @ self.C, self.dt)

    def scaled(self, s: float) -> "JumpDecomposition":
        return JumpDecomposition(self.name, s * self.J, s * self.C, self.dt)

    def zeroed(self) -> "JumpDecomposition":
        return JumpDecomposition(self.name, np.zeros_like(self.J), np.zeros_like(self.C), self.dt)

    @property
    def rows(self) -> int:
        return self.J.shape[0]


@dataclass(frozen=True)
class ImpulseSolution:
    joint_velocity_jump: np.ndarray
    impulses: dict  # frame -> 3-vector impulse (N·s)
    force_jumps: dict  # frame -> impulse / impact duration (N)


def _common(configs, impacting, attr):
    values = {getattr(configs[name], attr) for name in impacting}
    if len(values) != 1:
        raise ImpactError(f"all impacting end-effectors must share the same {attr}")
    return values.pop()


def _stack(blocks, cols):
    return np.vstack(blocks) if blocks else np.zeros((0, cols))


@dataclass(frozen=True)
class ImpulseDistribution:
    """Least-squares map from the impacting velocity jump to ``(Δq̇, ι)``.

    ``K_dq`` (nv x 3m₂) and ``K_iota`` (3(m₁+m₂) x 3m₂) are the columns of
    the pseudoinverse of ``B`` that multiply the nonzero part of the target.
    """

    model: RobotModel
    partition: EndEffectorPartition
    K_dq: np.ndarray
    K_iota: np.ndarray
    B: np.ndarray
    singular_values: np.ndarray
    rank: int
    velocity_map: JumpDecomposition  # Δẋ of the impacting set
    J_all: np.ndarray  # stacked Jacobians, order partition.all
    A_G: np.ndarray
    com: np.ndarray
    positions: dict = field(repr=False)
    impact_duration: float = DEFAULT_IMPACT_DURATION
    control_period: float = DEFAULT_CONTROL_PERIOD
    floating: bool = False

    @property
    def condition(self) -> float:
        """Condition number of ``B Bᵀ`` (infinite if B is row-rank deficient)."""
        s = self.singular_values
        if len(s) < self.B.shape[0] or s[-1] == 0:
            return np.inf
        return float((s[0] / s[-1]) ** 2)

    def block(self, names) -> np.ndarray:
        """Rows of the stacked Jacobian for the given frames."""
        order = self.partition.all
        return _stack([self.J_all[3 * order.index(n):3 * order.index(n) + 3] for n in names], self.model.nv)

    def solve(self, qdd, qd) -> ImpulseSolution:
        target = self.velocity_map.evaluate(qdd, qd)
        dq = self.K_dq @ target
        iota = self.K_iota @ target
        names = self.partition.contacts
        impulses = {n: iota[3 * k:3 * k + 3] for k, n in enumerate(names)}
        forces = {n: v / self.impact_duration for n, v in impulses.items()}
        return ImpulseSolution(dq, impulses, forces)


def impacting_velocity_jump_map(model: RobotModel, state: RobotState, impacting, configs) -> JumpDecomposition:
    """Decomposition of the stacked impacting-end-effector velocity jump."""
    impacting = tuple(impacting)
    if not impacting:
        raise ImpactError("the impacting set is empty")
    missing = [n for n in impacting if n not in configs]
    if missing:
        raise ImpactError(f"no impact configuration for {missing}")
    dt = _common(configs, impacting, "control_period")
    J = np.vstack([point_jacobian(model, state, n) for n in impacting])
    Jd = np.vstack([jacobian_derivative(model, state, n) for n in impacting])
    P = sla.block_diag(*[configs[n].projector for n in impacting])
    return JumpDecomposition("contact_velocity", P @ J, P @ (J + Jd * dt), dt)


def build_distribution(model: RobotModel, state: RobotState, partition: EndEffectorPartition, configs,
                       strict: bool = True) -> ImpulseDistribution:
    """Assemble and pseudo-invert the impulse-distribution system.

    Unknowns ``u = [Δq̇; ι_c; ι_i]``; rows

    * ``J_m Δq̇ - Ω ι = 0``  (impulse propagation to every end-effector)
    * ``A_G Δq̇ - T_c ι = 0`` (momentum balance, floating base only)
    * ``J_i Δq̇ = Δẋ_i``    (restitution target)

    With ``strict`` a :class:`ImpulseConditioningError` is raised when the
    solution does not reproduce the normal components of the target.
    """
    if not partition.impacting:
        raise ImpactError("the impacting set is empty")
    velocity_map = impacting_velocity_jump_map(model, state, partition.impacting, configs)
    nv = model.nv
    names = partition.all
    J_all = np.vstack([point_jacobian(model, state, n) for n in names])
    n_e = 3 * len(partition.contacts)
    n_i = 3 * len(partition.impacting)

    M = mass_matrix(model, state)
    L = np.linalg.cholesky(M)
    X = sla.solve_triangular(L, J_all.T, lower=True)
    Omega = (X.T @ X)[:, :n_e]

    c, _ = com(model, state)
    A_G = centroidal_momentum_matrix(model, state)
    positions = {n: frame_position(model, state, n) for n in names}
    J_i = J_all[3 * len(partition.established):3 * len(partition.established) + n_i]

    rows = [np.hstack([J_all, -Omega])]
    if model.floating:
        T_c = np.hstack([np.vstack([skew(positions[n] - c), np.eye(3)]) for n in partition.contacts])
        rows.append(np.hstack([A_G, -T_c]))
    rows.append(np.hstack([J_i, np.zeros((n_i, n_e))]))
    B = np.vstack(rows)

    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    keep = s > PINV_CUTOFF * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    K = (Vt[keep].T / s[keep]) @ U[-n_i:, keep].T
    dist = ImpulseDistribution(
        model=model,
        partition=partition,
        K_dq=K[:nv],
        K_iota=K[nv:],
        B=B,
        singular_values=s,
        rank=int(keep.sum()),
        velocity_map=velocity_map,
        J_all=J_all,
        A_G=A_G,
        com=c,
        positions=positions,
        impact_duration=_common(configs, partition.impacting, "impact_duration"),
        control_period=velocity_map.dt,
        floating=model.floating,
    )
    if strict:
        normals = sla.block_diag(*[configs[n].normal[:, None] for n in partition.impacting])
        reproduced = (B @ K)[-n_i:] @ normals
        if np.abs(reproduced - normals).max() > 1e-6:
            raise ImpulseConditioningError(
                "impact target is not reachable: impulse-distribution system is singular "
                f"(rank {dist.rank} of {B.shape[0]} rows)", s)
    return dist


# -- predictors ----------------------------------------------------------------


def predict_joint_velocity_jump(dist: ImpulseDistribution) -> JumpDecomposition:
    return dist.velocity_map.mapped(dist.K_dq, "joint_velocity")


def predict_force_jumps(dist: ImpulseDistribution) -> JumpDecomposition:
    """Force jumps of all contacts (established then impacting), 3 rows each."""
    return dist.velocity_map.mapped(dist.K_iota / dist.impact_duration, "contact_force")


def predict_impulsive_torques(dist: ImpulseDistribution) -> JumpDecomposition:
    J_e = dist.block(dist.partition.contacts)
    return predict_force_jumps(dist).mapped(J_e.T, "impulsive_torque")


def predict_ee_velocity_jumps(dist: ImpulseDistribution) -> JumpDecomposition:
    """Velocity jumps of every end-effector, in ``partition.all`` order."""
    return predict_joint_velocity_jump(dist).mapped(dist.J_all, "ee_velocity")


def predict_angular_momentum_jump(dist: ImpulseDistribution) -> JumpDecomposition:
    if not dist.floating:
        raise ImpactError("centroidal jumps are only predicted for floating-base models")
    return predict_joint_velocity_jump(dist).mapped(dist.A_G[:3], "angular_momentum")


def predict_com_velocity_jump(dist: ImpulseDistribution) -> JumpDecomposition:
    """Jump of the horizontal (x, y) COM velocity."""
    if not dist.floating:
        raise ImpactError("centroidal jumps are only predicted for floating-base models")
    return predict_joint_velocity_jump(dist).mapped(dist.A_G[3:5] / dist.model.total_mass, "com_velocity")


def wrench_map(positions, origin) -> np.ndarray:
    """6 x 3k map from stacked point forces to the ``[f; τ]`` wrench about ``origin``."""
    o = np.asarray(origin, dtype=float)
    return np.hstack([np.vstack([np.eye(3), skew(np.asarray(p) - o)]) for p in positions])


def predict_wrench_jump(dist: ImpulseDistribution, origin, contacts=None) -> JumpDecomposition:
    """Jump of the resultant contact wrench ``[f; τ]`` about ``origin``.

    ``contacts`` restricts the sum to a subset of the force-carrying frames.
    """
    names = dist.partition.contacts
    chosen = names if contacts is None else tuple(contacts)
    G = np.zeros((6, 3 * len(names)))
    for k, n in enumerate(names):
        if n in chosen:
            G[:, 3 * k:3 * k + 3] = wrench_map([dist.positions[n]], origin)
    return predict_force_jumps(dist).mapped(G, "wrench")


def zmp(wrench, normal, origin=None, min_normal_force: float = 1e-6) -> np.ndarray:
    """Zero-tilting moment point of ``[f; τ]`` on the plane through ``origin``."""
    wrench = np.asarray(wrench, dtype=float)
    n = np.asarray(normal, dtype=float)
    fn = n @ wrench[:3]
    if fn <= min_normal_force:
        raise DegenerateZmpError(f"normal force {fn:.3g} N too small for a ZMP")
    z = skew(n) @ wrench[3:] / fn
    return z if origin is None else z + np.asarray(origin, dtype=float)


def predict_zmp_jump(wrench, wrench_jump, normal, min_normal_force: float = 1e-6) -> np.ndarray:
    """``Δz = n̂ Δτ / nᵀ(f + Δf)``: ZMP shift caused by the torque jump."""
    wrench = np.asarray(wrench, dtype=float)
    wrench_jump = np.asarray(wrench_jump, dtype=float)
    n = np.asarray(normal, dtype=float)
    denom = n @ (wrench[:3] + wrench_jump[:3])
    if denom <= min_normal_force:
        raise DegenerateZmpError(f"post-impact normal force {denom:.3g} N too small for a ZMP")
    return skew(n) @ wrench_jump[3:] / denom


def all_predictions(dist: ImpulseDistribution, origin=None) -> dict:
    """Every applicable jump decomposition keyed by quantity name."""
    out = {
        "contact_velocity": dist.velocity_map,
        "joint_velocity": predict_joint_velocity_jump(dist),
        "contact_force": predict_force_jumps(dist),
        "impulsive_torque": predict_impulsive_torques(dist),
        "ee_velocity": predict_ee_velocity_jumps(dist),
    }
    if dist.floating:
        out["angular_momentum"] = predict_angular_momentum_jump(dist)
        out["com_velocity"] = predict_com_velocity_jump(dist)
    if origin is not None:
        out["wrench"] = predict_wrench_jump(dist, origin)
    return out
