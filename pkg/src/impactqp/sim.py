"""Ground-truth physics: integration with bilateral contacts, plane impacts, phase machine.

Impacts are resolved independently of the controller's predictor: the
impacting end-effectors obey Newton's restitution law along the surface
normal and every established contact sticks (zero post-impact velocity).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .model import (
    RobotModel,
    RobotState,
    bias_forces,
    frame_position,
    integrate,
    jacobian_derivative,
    mass_matrix,
    point_jacobian,
)

log = logging.getLogger(__name__)

APPROACH_FLOOR = 1e-4


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Surface:
    """Static plane through ``point`` with unit ``normal`` pointing into free space."""

    name: str
    point: np.ndarray
    normal: np.ndarray
    restitution: float = 0.02
    mu: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise SimulationError(f"surface {self.name}: normal must be unit-norm")
        object.__setattr__(self, "normal", n)
        if self.restitution < 0 or self.mu <= 0:
            raise SimulationError(f"surface {self.name}: invalid restitution or friction")

    def distance(self, p) -> float:
        return float(self.normal @ (np.asarray(p) - self.point))


@dataclass
class World:
    surfaces: list = field(default_factory=list)
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    h: float = 0.001

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float)
        if not self.h > 0:
            raise SimulationError("integration step must be positive")

    def surface(self, name: str) -> Surface:
        for s in self.surfaces:
            if s.name == name:
                return s
        raise SimulationError(f"unknown surface {name!r}")


@dataclass
class ImpactEvent:
    time: float
    frame: str
    surface: str
    normal: np.ndarray
    restitution: float
    pre_velocity: np.ndarray
    post_velocity: np.ndarray
    impulse: np.ndarray  # impulse on the impacting end-effector (N·s)
    force_jump: np.ndarray  # impulse / impact duration (N)

    @property
    def restitution_error(self) -> float:
        """Deviation from ``v⁺_n = -c_r v⁻_n``."""
        n = self.normal
        return abs(n @ self.post_velocity + self.restitution * (n @ self.pre_velocity))


@dataclass
class ImpactResolution:
    state: RobotState
    events: list
    impulses: dict  # every contact frame (established and impacting) -> impulse
    joint_velocity_jump: np.ndarray
    consistent: bool


def _stacked_jacobian(model, state, names):
    if not names:
        return np.zeros((0, model.nv))
    return np.vstack([point_jacobian(model, state, n) for n in names])


def _solve_psd(A, rhs):
    """Least-squares solve of a symmetric PSD system; reports consistency."""
    x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    scale = 1.0 + np.linalg.norm(rhs)
    return x, np.linalg.norm(A @ x - rhs) <= 1e-9 * scale


def constrained_acceleration(model: RobotModel, state: RobotState, established, tau=None, qdd=None):
    """Accelerations and contact forces with zero relative acceleration at ``established``.

    Torque mode (``tau``, length nv): solves the KKT system
    ``[M, -Jᵀ; J, 0] [q̈; f] = [tau - N; -J̇q̇]``. Acceleration mode (``qdd``):
    the closest contact-consistent acceleration in the mass metric, with
    the forces that produce the correction.
    """
    established = tuple(established)
    M = mass_matrix(model, state)
    J = _stacked_jacobian(model, state, established)
    gamma = (-np.vstack([jacobian_derivative(model, state, n) for n in established]) @ state.qd
             if established else np.zeros(0))
    k = J.shape[0]
    if qdd is not None:
        qdd = np.asarray(qdd, dtype=float)
        if not k:
            return qdd, {}
        c = sla.cho_factor(M)
        MinvJt = sla.cho_solve(c, J.T)
        f, _ = _solve_psd(J @ MinvJt, gamma - J @ qdd)
        out = qdd + MinvJt @ f
    else:
        rhs = np.asarray(tau, dtype=float) - bias_forces(model, state)
        if not k:
            return np.linalg.solve(M, rhs), {}
        K = np.block([[M, -J.T], [J, np.zeros((k, k))]])
        sol, *_ = np.linalg.lstsq(K, np.concatenate([rhs, gamma]), rcond=None)
        out, f = sol[:model.nv], sol[model.nv:]
    return out, {n: f[3 * i:3 * i + 3] for i, n in enumerate(established)}


def latch(model: RobotModel, state: RobotState, established) -> np.ndarray:
    """Velocity with established contacts brought to rest (plastic projection)."""
    if not established:
        return state.qd
    J = _stacked_jacobian(model, state, tuple(established))
    c = sla.cho_factor(mass_matrix(model, state))
    MinvJt = sla.cho_solve(c, J.T)
    iota, _ = _solve_psd(J @ MinvJt, -J @ state.qd)
    return state.qd + MinvJt @ iota


def step(world: World, model: RobotModel, state: RobotState, established=(), tau=None, qdd=None, h=None):
    """Advance one semi-implicit Euler step (velocity first, then position).

    Exactly one of ``tau`` (generalized forces, nv) or ``qdd`` must be given.
    Returns ``(next_state, contact_forces, acceleration)``.
    """
    if (tau is None) == (qdd is None):
        raise SimulationError("give exactly one of tau or qdd")
    h = world.h if h is None else h
    acc, forces = constrained_acceleration(model, state, established, tau=tau, qdd=qdd)
    qd = state.qd + h * acc
    if established:
        qd = latch(model, RobotState(state.q, qd), established)
    q = integrate(model, state.q, qd, h)
    return RobotState(q, qd), forces, acc


def detect_impact(world: World, model: RobotModel, before: RobotState, after: RobotState, candidates,
                  floor: float = APPROACH_FLOOR):
    """End-effectors whose signed distance to their surface crosses zero.

    ``candidates`` maps frame names to surface names. Returns a list of
    ``(frame, surface, fraction, approach_speed)`` sorted by fraction, where
    ``fraction`` in (0, 1] locates the crossing inside the step by linear
    interpolation of the gap.
    """
    hits = []
    for frame, sname in candidates.items():
        surf = world.surface(sname)
        d0 = surf.distance(frame_position(model, before, frame))
        d1 = surf.distance(frame_position(model, after, frame))
        if d0 > 0 >= d1:
            speed = -surf.normal @ (point_jacobian(model, after, frame) @ after.qd)
            if speed > floor:
                hits.append((frame, sname, d0 / (d0 - d1), float(speed)))
    return sorted(hits, key=lambda h: h[2])


def resolve_impact(world: World, model: RobotModel, state: RobotState, established, impacting,
                   impact_duration: float = 0.005, time: float = 0.0) -> ImpactResolution:
    """Impulses from the Delassus system ``J M⁻¹ Jᵀ ι = rhs``.

    ``impacting`` maps frames to surface names. Right-hand side rows are
    ``-ẋ⁻`` for established contacts and ``-(1 + c_r) n nᵀ ẋ⁻`` for
    impacting ones; ``Δq̇ = M⁻¹ Jᵀ ι``.
    """
    established = tuple(established)
    names = established + tuple(impacting)
    J = _stacked_jacobian(model, state, names)
    v = J @ state.qd
    rhs = -v.copy()
    for k, frame in enumerate(impacting):
        surf = world.surface(impacting[frame])
        i = len(established) + k
        P = (1.0 + surf.restitution) * np.outer(surf.normal, surf.normal)
        rhs[3 * i:3 * i + 3] = -P @ v[3 * i:3 * i + 3]
    c = sla.cho_factor(mass_matrix(model, state))
    MinvJt = sla.cho_solve(c, J.T)
    iota, consistent = _solve_psd(J @ MinvJt, rhs)
    if not consistent:
        warnings.warn("impact Delassus system is singular and inconsistent; using the least-squares impulse",
                      RuntimeWarning, stacklevel=2)
    dq = MinvJt @ iota
    post = RobotState(state.q.copy(), state.qd + dq)
    v_post = J @ post.qd
    impulses = {n: iota[3 * i:3 * i + 3] for i, n in enumerate(names)}
    events = []
    for k, frame in enumerate(impacting):
        i = len(established) + k
        surf = world.surface(impacting[frame])
        events.append(ImpactEvent(time, frame, surf.name, surf.normal, surf.restitution, v[3 * i:3 * i + 3],
                                  v_post[3 * i:3 * i + 3], impulses[frame], impulses[frame] / impact_duration))
    return ImpactResolution(post, events, impulses, dq, consistent)


# -- experiment phases --------------------------------------------------------------

PHASES = ("Start", "Impact", "Admittance", "Detach", "Reset")


class PhaseError(RuntimeError):
    pass


@dataclass
class PhaseMachine:
    """Start → Impact → Admittance → Detach → Reset, one way only."""

    threshold: float = 20.0
    setpoint: float = 15.0
    gain: float = 5.0
    phase: str = "Start"
    entered: float = 0.0
    history: list = field(default_factory=list)

    def advance(self, to: str, time: float) -> None:
        if to not in PHASES:
            raise PhaseError(f"unknown phase {to!r}")
        if PHASES.index(to) != PHASES.index(self.phase) + 1:
            raise PhaseError(f"illegal transition {self.phase} -> {to}")
        self.history.append((time, self.phase, to))
        self.phase = to
        self.entered = time

    def elapsed(self, time: float) -> float:
        return time - self.entered

    def contact_detected(self, normal_force: float) -> bool:
        return normal_force >= self.threshold
