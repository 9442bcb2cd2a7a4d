"""Half-plane and equality rows over the QP decision variable.

The decision variable is ``ν = [q̈, f_λ, s]``: joint accelerations, the
nonnegative friction-cone generator weights of every established contact
(the contact force is ``f_i = G_i f_λ,i``), and an optional shared slack.
Builders return :class:`ConstraintBlock` values whose matrices span the full
layout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from .impact import JumpDecomposition, wrench_map
from .model import (
    RobotModel,
    RobotState,
    bias_forces,
    centroidal_momentum_matrix,
    jacobian_derivative,
    mass_matrix,
    point_jacobian,
)
from .model.spatial import skew

CSV_SCHEMA = 1


class ConstraintError(ValueError):
    """Inconsistent constraint inputs."""


@dataclass(frozen=True)
class ConstraintBlock:
    """Rows ``A ν ≤ b`` (inequality) or ``A ν = b`` (equality)."""

    label: str
    kind: str
    A: np.ndarray
    b: np.ndarray
    provenance: str = "baseline"

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.size == 0 and A.shape[0] != len(b):
            A = np.zeros((len(b), 0))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.kind not in ("inequality", "equality"):
            raise ConstraintError(f"{self.label}: unknown kind {self.kind!r}")
        if A.shape[0] != b.shape[0]:
            raise ConstraintError(f"{self.label}: {A.shape[0]} rows but {b.shape[0]} bounds")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ConstraintError(f"{self.label}: non-finite entries")

    @property
    def rows(self) -> int:
        return self.A.shape[0]

    def residual(self, x) -> np.ndarray:
        return self.A @ np.asarray(x) - self.b

    def satisfied(self, x, tol: float = 1e-9) -> bool:
        r = self.residual(x)
        return bool(np.all(np.abs(r) <= tol) if self.kind == "equality" else np.all(r <= tol))

    def widened(self, n: int) -> "ConstraintBlock":
        """Same rows over a layout with ``n`` columns (new columns zero)."""
        A = np.zeros((self.rows, n))
        A[:, :self.A.shape[1]] = self.A
        return ConstraintBlock(self.label, self.kind, A, self.b, self.provenance)


def _block(label, kind, A, b, provenance="baseline"):
    A, b = np.asarray(A, dtype=float), np.asarray(b, dtype=float)
    keep = np.isfinite(b)
    return ConstraintBlock(label, kind, A[keep], b[keep], provenance)


def _vec(value, n, default):
    if value is None:
        return np.full(n, default, dtype=float)
    out = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    return out


@dataclass(frozen=True)
class BoundsSpec:
    """Bounds on the actuated joints, plus the centroidal angular momentum.

    Arrays have one entry per actuated joint; scalars broadcast. Missing
    bounds are infinite and produce no rows.
    """

    n: int
    q_lower: np.ndarray = None
    q_upper: np.ndarray = None
    qd_lower: np.ndarray = None
    qd_upper: np.ndarray = None
    tau_lower: np.ndarray = None
    tau_upper: np.ndarray = None
    gamma_lower: np.ndarray = None
    gamma_upper: np.ndarray = None
    angular_momentum: np.ndarray = None  # |k_i| <= bound_i

    def __post_init__(self):
        for lo, hi in (("q_lower", "q_upper"), ("qd_lower", "qd_upper"), ("tau_lower", "tau_upper"),
                       ("gamma_lower", "gamma_upper")):
            lo_v = _vec(getattr(self, lo), self.n, -np.inf)
            hi_v = _vec(getattr(self, hi), self.n, np.inf)
            if np.any(lo_v > hi_v):
                raise ConstraintError(f"{lo} exceeds {hi}")
            object.__setattr__(self, lo, lo_v)
            object.__setattr__(self, hi, hi_v)
        k = _vec(self.angular_momentum, 3, np.inf)
        if np.any(k < 0):
            raise ConstraintError("angular momentum bound must be non-negative")
        object.__setattr__(self, "angular_momentum", k)

    def with_impulse_factor(self, factor: float) -> "BoundsSpec":
        """Impulsive-torque bounds set to ``factor`` times the torque bounds."""
        return BoundsSpec(self.n, self.q_lower, self.q_upper, self.qd_lower, self.qd_upper, self.tau_lower,
                          self.tau_upper, factor * self.tau_lower, factor * self.tau_upper, self.angular_momentum)

    @classmethod
    def from_dict(cls, n: int, doc: dict) -> "BoundsSpec":
        def get(key):
            v = doc.get(key)
            return None if v is None else np.asarray(v, dtype=float)

        def pair(key):
            v = doc.get(key)
            if v is None:
                return None, None
            if isinstance(v, dict):
                return get_nested(v, "lower"), get_nested(v, "upper")
            v = np.asarray(v, dtype=float)
            return -v, v

        def get_nested(d, key):
            return None if d.get(key) is None else np.asarray(d[key], dtype=float)

        q_lo, q_hi = pair("q")
        qd_lo, qd_hi = pair("qd")
        tau_lo, tau_hi = pair("tau")
        g_lo, g_hi = pair("gamma")
        out = cls(n, q_lo, q_hi, qd_lo, qd_hi, tau_lo, tau_hi, g_lo, g_hi, get("angular_momentum"))
        if "impulse_factor" in doc and doc.get("gamma") is None:
            out = out.with_impulse_factor(float(doc["impulse_factor"]))
        return out


@dataclass(frozen=True)
class ContactSpec:
    """Friction and surface-contact limits of one contact."""

    mu: float = 0.7
    half_x: float = 0.1
    half_y: float = 0.05
    tau_z_min: float = -np.inf
    tau_z_max: float = np.inf
    generators: int = 4

    def __post_init__(self):
        if not self.mu > 0:
            raise ConstraintError("friction coefficient must be positive")
        if not (self.half_x > 0 and self.half_y > 0):
            raise ConstraintError("CoP rectangle half-extents must be positive")
        if self.generators < 4:
            raise ConstraintError("at least four friction-cone generators are required")
        if self.tau_z_min > self.tau_z_max:
            raise ConstraintError("tau_z_min exceeds tau_z_max")


def tangent_basis(normal) -> tuple:
    n = np.asarray(normal, dtype=float)
    helper = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
    t1 = helper - (helper @ n) * n
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


def _generator_angles(count):
    return np.pi / count + 2 * np.pi * np.arange(count) / count


def friction_generators(mu: float, normal, count: int = 4) -> np.ndarray:
    """3 x count edge vectors of the friction pyramid inscribed in the cone."""
    n = np.asarray(normal, dtype=float)
    t1, t2 = tangent_basis(n)
    phi = _generator_angles(count)
    return (n[:, None] + mu * (np.outer(t1, np.cos(phi)) + np.outer(t2, np.sin(phi))))


def friction_pyramid_rows(mu: float, normal, count: int = 4) -> np.ndarray:
    """Rows ``H`` with ``H f ≤ 0`` describing the inscribed pyramid.

    Faces sit at an effective coefficient ``μ cos(π/count)`` (``μ/√2`` for
    four generators); the last row is ``-nᵀ f ≤ 0``.
    """
    n = np.asarray(normal, dtype=float)
    t1, t2 = tangent_basis(n)
    mid = _generator_angles(count) + np.pi / count
    mu_eff = mu * np.cos(np.pi / count)
    faces = np.outer(np.cos(mid), t1) + np.outer(np.sin(mid), t2) - mu_eff * n[None, :]
    return np.vstack([faces, -n[None, :]])


def contact_wrench_cone_rows(contact: ContactSpec):
    """``(C, d)`` with ``C W ≤ d`` for a local surface wrench ``W = [f; τ]`` (z normal)."""
    z = np.array([0.0, 0.0, 1.0])
    rows = [np.hstack([h, np.zeros(3)]) for h in friction_pyramid_rows(contact.mu, z, contact.generators)]
    d = [0.0] * len(rows)
    X, Y = contact.half_x, contact.half_y
    for sign in (1.0, -1.0):
        rows.append(np.array([0, 0, -Y, sign, 0, 0]))
        d.append(0.0)
        rows.append(np.array([0, 0, -X, 0, sign, 0]))
        d.append(0.0)
    if np.isfinite(contact.tau_z_max):
        rows.append(np.array([0, 0, 0, 0, 0, 1.0]))
        d.append(contact.tau_z_max)
    if np.isfinite(contact.tau_z_min):
        rows.append(np.array([0, 0, 0, 0, 0, -1.0]))
        d.append(-contact.tau_z_min)
    return np.array(rows, dtype=float), np.array(d)


def _has_interior(A, a) -> bool:
    """True if ``{x : A x < a}`` has a point with positive margin."""
    norms = np.linalg.norm(A, axis=1)
    k = A.shape[1]
    res = linprog(np.r_[np.zeros(k), -1.0], A_ub=np.hstack([A, norms[:, None]]), b_ub=a,
                  bounds=[(None, None)] * k + [(None, 1.0)], method="highs")
    return res.status == 0 and -res.fun > 1e-12


@dataclass(frozen=True)
class ZmpPolygon:
    """Planar polygon ``A_z z ≤ a_z`` for ZMP positions relative to ``origin``."""

    A: np.ndarray  # k x 3
    a: np.ndarray
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("A", "a", "normal", "origin"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.A.ndim != 2 or self.A.shape[1] != 3 or self.A.shape[0] != self.a.shape[0]:
            raise ConstraintError("ZMP polygon needs k x 3 rows and k offsets")
        t1, t2 = tangent_basis(self.normal)
        if not _has_interior(self.A @ np.column_stack([t1, t2]), self.a):
            raise ConstraintError("ZMP polygon is empty")

    def contains(self, z_relative, tol: float = 0.0) -> bool:
        return bool(np.all(self.A @ z_relative <= self.a + tol))

    def margin(self, z_relative) -> float:
        """Largest row violation ``max(A z - a)`` scaled to metres."""
        return float(np.max((self.A @ z_relative - self.a) / np.linalg.norm(self.A, axis=1)))

    @classmethod
    def from_dict(cls, doc: dict) -> "ZmpPolygon":
        return cls(np.asarray(doc["A"], dtype=float), np.asarray(doc["a"], dtype=float),
                   np.asarray(doc.get("normal", [0, 0, 1]), dtype=float),
                   np.asarray(doc.get("origin", [0, 0, 0]), dtype=float))


@dataclass(frozen=True)
class ComVelPolygon:
    """Admissible horizontal COM velocities ``G ċ_xy ≤ h``."""

    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "G", np.atleast_2d(np.asarray(self.G, dtype=float)))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float).reshape(-1))
        if self.G.shape != (self.h.shape[0], 2):
            raise ConstraintError("COM velocity polygon needs k x 2 rows and k offsets")
        if not _has_interior(self.G, self.h):
            raise ConstraintError("COM velocity polygon is empty")

    @classmethod
    def box(cls, vx: float, vy: float) -> "ComVelPolygon":
        return cls(np.vstack([np.eye(2), -np.eye(2)]), np.array([vx, vy, vx, vy]))


def support_polygon(points, origin=None, margin: float = 0.0) -> ZmpPolygon:
    """Convex hull of ground contact points (z = const plane), shrunk by ``margin``."""
    pts = np.asarray(points, dtype=float)
    o = pts.mean(axis=0) if origin is None else np.asarray(origin, dtype=float)
    o = np.array([o[0], o[1], 0.0])
    hull = ConvexHull(pts[:, :2])
    eq = hull.equations  # unit outward normals: n·x + c <= 0
    A = np.column_stack([eq[:, :2], np.zeros(len(eq))])
    a = -eq[:, 2] - A @ o - margin
    return ZmpPolygon(A, a, np.array([0.0, 0.0, 1.0]), o)


def zmp_rows(polygon: ZmpPolygon) -> np.ndarray:
    """``𝒢_z = [-a_z nᵀ, A_z n̂]``: ``𝒢_z W ≤ 0`` iff the ZMP of W is inside."""
    return np.hstack([-np.outer(polygon.a, polygon.normal), polygon.A @ skew(polygon.normal)])


# -- decision-variable layout -----------------------------------------------------


@dataclass(frozen=True)
class VariableLayout:
    """Column layout of ``ν``: ``q̈`` (nv), generator weights per contact, slack."""

    nv: int
    contacts: tuple = ()  # ((frame, generator matrix 3 x k), ...)
    slack: bool = False

    @property
    def n_forces(self) -> int:
        return sum(G.shape[1] for _, G in self.contacts)

    @property
    def n(self) -> int:
        return self.nv + self.n_forces + int(self.slack)

    @property
    def qdd(self) -> slice:
        return slice(0, self.nv)

    @property
    def forces(self) -> slice:
        return slice(self.nv, self.nv + self.n_forces)

    @property
    def slack_index(self) -> int:
        if not self.slack:
            raise ConstraintError("layout has no slack variable")
        return self.n - 1

    @property
    def contact_names(self) -> tuple:
        return tuple(name for name, _ in self.contacts)

    def generator_matrix(self) -> np.ndarray:
        """Block-diagonal map from generator weights to stacked contact forces."""
        if not self.contacts:
            return np.zeros((0, 0))
        return sla.block_diag(*[G for _, G in self.contacts])

    def force_slice(self, name: str) -> slice:
        start = self.nv
        for n, G in self.contacts:
            if n == name:
                return slice(start, start + G.shape[1])
            start += G.shape[1]
        raise ConstraintError(f"no force variables for {name!r}")

    def with_slack(self) -> "VariableLayout":
        return VariableLayout(self.nv, self.contacts, True)

    def lift(self, A_qdd=None, A_forces=None, rows: int | None = None) -> np.ndarray:
        """Full-width matrix from its ``q̈`` and generator-weight parts."""
        if rows is None:
            rows = (A_qdd if A_qdd is not None else A_forces).shape[0]
        out = np.zeros((rows, self.n))
        if A_qdd is not None:
            out[:, self.qdd] = A_qdd
        if A_forces is not None and self.n_forces:
            out[:, self.forces] = A_forces
        return out

    def contact_forces(self, nu) -> dict:
        nu = np.asarray(nu)
        return {name: G @ nu[self.force_slice(name)] for name, G in self.contacts}


def make_layout(model: RobotModel, established=(), contact_specs=None, normals=None) -> VariableLayout:
    """Layout with generator weights for every established contact.

    ``contact_specs`` and ``normals`` map frame names to :class:`ContactSpec`
    and surface normals (default friction 0.7, normal +z).
    """
    contact_specs = contact_specs or {}
    normals = normals or {}
    contacts = []
    for name in established:
        spec = contact_specs.get(name, ContactSpec())
        n = normals.get(name, np.array([0.0, 0.0, 1.0]))
        contacts.append((name, friction_generators(spec.mu, n, spec.generators)))
    return VariableLayout(model.nv, tuple(contacts))


def _contact_jacobian(model, state, names):
    if not names:
        return np.zeros((0, model.nv))
    return np.vstack([point_jacobian(model, state, n) for n in names])


# -- baseline blocks --------------------------------------------------------------


def joint_torque_rows(model: RobotModel, state: RobotState, layout: VariableLayout, bounds: BoundsSpec,
                      previous_forces=None) -> ConstraintBlock:
    """Actuated torque limits ``τ̲ ≤ M q̈ + N - J_cᵀ f ≤ τ̄``.

    With generator variables the contact forces are the decision variables;
    otherwise ``previous_forces`` (frame -> force, zero when absent) is used.
    """
    M = mass_matrix(model, state)
    N = bias_forces(model, state)
    act = model.actuated
    if layout.contacts:
        Jc = _contact_jacobian(model, state, layout.contact_names)
        F = -(Jc.T @ layout.generator_matrix())[act]
        offset = -N[act]
    else:
        F = None
        ext = np.zeros(model.nv)
        for name, f in (previous_forces or {}).items():
            ext += point_jacobian(model, state, name).T @ np.asarray(f, dtype=float)
        offset = (ext - N)[act]
    A = layout.lift(M[act], F)
    return _block("joint_torque", "inequality", np.vstack([A, -A]),
                  np.concatenate([bounds.tau_upper + offset, -(bounds.tau_lower + offset)]))


def floating_base_rows(model: RobotModel, state: RobotState, layout: VariableLayout) -> ConstraintBlock:
    """Unactuated rows of the equation of motion: ``M_b q̈ + N_b = (J_cᵀ f)_b``."""
    if not model.floating:
        return ConstraintBlock("base_dynamics", "equality", np.zeros((0, layout.n)), np.zeros(0))
    M = mass_matrix(model, state)[:6]
    N = bias_forces(model, state)[:6]
    F = None
    if layout.contacts:
        Jc = _contact_jacobian(model, state, layout.contact_names)
        F = -(Jc.T @ layout.generator_matrix())[:6]
    return ConstraintBlock("base_dynamics", "equality", layout.lift(M, F), -N)


def joint_kinematic_rows(model: RobotModel, state: RobotState, layout: VariableLayout, bounds: BoundsSpec,
                         dt: float) -> ConstraintBlock:
    """Velocity (one Euler step) and position (double integration) limits."""
    act = model.actuated
    qd = state.qd[act]
    q = state.q[model.actuated_q]
    S = np.eye(model.nv)[act]
    A = np.vstack([S * dt, -S * dt, S * 0.5 * dt**2, -S * 0.5 * dt**2])
    b = np.concatenate([bounds.qd_upper - qd, qd - bounds.qd_lower,
                        bounds.q_upper - q - qd * dt, q + qd * dt - bounds.q_lower])
    return _block("joint_kinematics", "inequality", layout.lift(A), b)


def joint_velocity_rows(model: RobotModel, state: RobotState, layout: VariableLayout, bounds: BoundsSpec,
                        dt: float) -> ConstraintBlock:
    """Velocity part of :func:`joint_kinematic_rows` only."""
    act = model.actuated
    qd = state.qd[act]
    S = np.eye(model.nv)[act]
    return _block("joint_velocity", "inequality", layout.lift(np.vstack([S * dt, -S * dt])),
                  np.concatenate([bounds.qd_upper - qd, qd - bounds.qd_lower]))


def contact_acceleration_rows(model: RobotModel, state: RobotState, layout: VariableLayout,
                              established) -> ConstraintBlock:
    """Zero relative acceleration ``J q̈ + J̇ q̇ = 0`` of established contacts."""
    established = tuple(established)
    if not established:
        return ConstraintBlock("contact_acceleration", "equality", np.zeros((0, layout.n)), np.zeros(0))
    J = _contact_jacobian(model, state, established)
    Jd = np.vstack([jacobian_derivative(model, state, n) for n in established])
    return ConstraintBlock("contact_acceleration", "equality", layout.lift(J), -Jd @ state.qd)


def generator_rows(layout: VariableLayout) -> ConstraintBlock:
    """Nonnegative generator weights: every contact force inside its pyramid."""
    k = layout.n_forces
    A = np.zeros((k, layout.n))
    A[:, layout.forces] = -np.eye(k)
    return ConstraintBlock("contact_wrench_cone", "inequality", A, np.zeros(k))


def contact_wrench(layout: VariableLayout, positions, origin) -> np.ndarray:
    """6 x n map from ``ν`` to the resultant ``[f; τ]`` of the generator forces about ``origin``."""
    out = np.zeros((6, layout.n))
    for name, G in layout.contacts:
        out[:, layout.force_slice(name)] = wrench_map([positions[name]], origin) @ G
    return out


def zmp_block(layout: VariableLayout, polygon: ZmpPolygon, positions) -> ConstraintBlock:
    """Baseline ZMP rows ``𝒢_z W(ν) ≤ 0`` on the commanded contact wrench."""
    Gz = zmp_rows(polygon)
    return ConstraintBlock("zmp", "inequality", Gz @ contact_wrench(layout, positions, polygon.origin),
                           np.zeros(Gz.shape[0]))


def _com_rows(model, state):
    A = centroidal_momentum_matrix(model, state)
    return A[:3], A[3:5] / model.total_mass


def com_velocity_rows(model: RobotModel, state: RobotState, layout: VariableLayout, polygon: ComVelPolygon,
                      dt: float) -> ConstraintBlock:
    _, Av = _com_rows(model, state)
    return _block("com_velocity", "inequality", layout.lift(polygon.G @ Av * dt),
                  polygon.h - polygon.G @ Av @ state.qd)


def angular_momentum_rows(model: RobotModel, state: RobotState, layout: VariableLayout, bounds: BoundsSpec,
                          dt: float) -> ConstraintBlock:
    Aw, _ = _com_rows(model, state)
    k = Aw @ state.qd
    D = np.vstack([np.eye(3), -np.eye(3)])
    return _block("angular_momentum", "inequality", layout.lift(D @ Aw * dt),
                  np.concatenate([bounds.angular_momentum, bounds.angular_momentum]) - D @ k)


# -- impact-aware blocks ----------------------------------------------------------


def impact_template_rows(label: str, layout: VariableLayout, D, upper, decomposition: JumpDecomposition, qd,
                         current=None, current_map=None, drift=None) -> ConstraintBlock:
    """Rows keeping the post-impact value of a quantity below ``upper``.

    ``D (λ + Δλ) ≤ upper`` with ``Δλ = 𝒥 q̈ Δt + 𝒞 q̇`` becomes
    ``D 𝒥 Δt q̈ ≤ upper - D (λ + 𝒞 q̇)``. The current value ``λ`` is a fixed
    vector (``current``), a linear map of ``ν`` (``current_map``), or both.
    ``drift`` (``R``) adds the one-step Euler change ``R q̈ Δt`` of the
    quantity itself before the impact.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    upper = np.asarray(upper, dtype=float)
    qd = np.asarray(qd, dtype=float)
    dt = decomposition.dt
    Jm = decomposition.J if drift is None else decomposition.J + drift
    lam = np.zeros(decomposition.rows) if current is None else np.asarray(current, dtype=float)
    A = layout.lift(D @ Jm * dt)
    if current_map is not None:
        A = A + D @ current_map
    b = upper - D @ (lam + decomposition.C @ qd)
    return _block(label, "inequality", A, b, provenance="impact-aware")


def impact_joint_velocity_rows(model: RobotModel, state: RobotState, layout: VariableLayout, bounds: BoundsSpec,
                               jump: JumpDecomposition) -> ConstraintBlock:
    """Post-impact velocity ``q̇ + q̈Δt + Δq̇`` of the actuated joints within limits."""
    S = np.eye(model.nv)[model.actuated]
    D = np.vstack([np.eye(len(S)), -np.eye(len(S))])
    return impact_template_rows("joint_velocity_jump", layout, D, np.concatenate([bounds.qd_upper, -bounds.qd_lower]),
                                jump.mapped(S), state.qd, current=S @ state.qd, drift=S)


def impact_impulsive_torque_rows(model: RobotModel, state: RobotState, layout: VariableLayout, bounds: BoundsSpec,
                                 jump: JumpDecomposition) -> ConstraintBlock:
    """Impulsive torques of the actuated joints within ``[γ̲, γ̄]`` (current value zero)."""
    S = np.eye(model.nv)[model.actuated]
    D = np.vstack([np.eye(len(S)), -np.eye(len(S))])
    return impact_template_rows("impulsive_torque_jump", layout, D,
                                np.concatenate([bounds.gamma_upper, -bounds.gamma_lower]), jump.mapped(S), state.qd)


def impact_cwc_rows(layout: VariableLayout, contact_specs, normals, force_jump: JumpDecomposition, contacts,
                    state: RobotState, measured=None) -> ConstraintBlock:
    """Post-impact force of every established contact inside its friction pyramid.

    ``force_jump`` stacks 3 rows per name in ``contacts``. The current force
    is the commanded one (generator variables) unless ``measured`` supplies it.
    """
    contacts = tuple(contacts)
    blocks = []
    for name, _ in layout.contacts:
        k = contacts.index(name)
        spec = contact_specs.get(name, ContactSpec())
        H = friction_pyramid_rows(spec.mu, normals.get(name, np.array([0.0, 0.0, 1.0])), spec.generators)
        jump_i = force_jump.mapped(np.eye(force_jump.rows)[3 * k:3 * k + 3])
        if measured is not None:
            blocks.append(impact_template_rows("cwc_jump", layout, H, np.zeros(len(H)), jump_i, state.qd,
                                               current=measured[name]))
        else:
            current_map = np.zeros((3, layout.n))
            current_map[:, layout.force_slice(name)] = dict(layout.contacts)[name]
            blocks.append(impact_template_rows("cwc_jump", layout, H, np.zeros(len(H)), jump_i, state.qd,
                                               current_map=current_map))
    return stack("cwc_jump", blocks, layout.n, provenance="impact-aware")


def impact_angular_momentum_rows(model: RobotModel, state: RobotState, layout: VariableLayout, bounds: BoundsSpec,
                                 jump: JumpDecomposition) -> ConstraintBlock:
    Aw, _ = _com_rows(model, state)
    D = np.vstack([np.eye(3), -np.eye(3)])
    return impact_template_rows("angular_momentum_jump", layout, D,
                                np.concatenate([bounds.angular_momentum, bounds.angular_momentum]), jump, state.qd,
                                current=Aw @ state.qd, drift=Aw)


def impact_com_velocity_rows(model: RobotModel, state: RobotState, layout: VariableLayout, polygon: ComVelPolygon,
                             jump: JumpDecomposition) -> ConstraintBlock:
    _, Av = _com_rows(model, state)
    return impact_template_rows("com_velocity_jump", layout, polygon.G, polygon.h, jump, state.qd,
                                current=Av @ state.qd, drift=Av)


def impact_zmp_rows(layout: VariableLayout, polygon: ZmpPolygon, wrench_jump: JumpDecomposition, state: RobotState,
                    positions=None, measured=None) -> ConstraintBlock:
    """Post-impact ZMP inside the polygon: ``𝒢_z (W + ΔW) ≤ 0``.

    ``wrench_jump`` must be taken about ``polygon.origin``. The current wrench
    is the commanded one unless ``measured`` supplies it.
    """
    Gz = zmp_rows(polygon)
    if measured is not None:
        return impact_template_rows("zmp_jump", layout, Gz, np.zeros(len(Gz)), wrench_jump, state.qd,
                                    current=measured)
    return impact_template_rows("zmp_jump", layout, Gz, np.zeros(len(Gz)), wrench_jump, state.qd,
                                current_map=contact_wrench(layout, positions, polygon.origin))


def stack(label: str, blocks, n: int, provenance: str = "baseline") -> ConstraintBlock:
    kinds = {b.kind for b in blocks}
    if len(kinds) > 1:
        raise ConstraintError("cannot stack equality and inequality blocks")
    kind = kinds.pop() if kinds else "inequality"
    A = np.vstack([b.A for b in blocks]) if blocks else np.zeros((0, n))
    b = np.concatenate([b.b for b in blocks]) if blocks else np.zeros(0)
    return ConstraintBlock(label, kind, A, b, provenance)


# -- serialization ----------------------------------------------------------------


def write_blocks_csv(blocks, path) -> None:
    """One row per constraint row: label, kind, provenance, row, b, a_0..a_{n-1}."""
    blocks = list(blocks)
    n = max((b.A.shape[1] for b in blocks), default=0)
    with open(path, "w", newline="") as fh:
        fh.write(f"# impactqp-csv schema={CSV_SCHEMA} kind=constraints\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "kind", "provenance", "row", "b", *[f"a_{j}" for j in range(n)]])
        for blk in blocks:
            for r in range(blk.rows):
                w.writerow([blk.label, blk.kind, blk.provenance, r, repr(float(blk.b[r])),
                            *[repr(float(v)) for v in blk.A[r]]])
