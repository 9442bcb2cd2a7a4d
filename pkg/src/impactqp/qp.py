"""Weighted-task QP assembly and a dense strictly convex QP solver.

The solver is the dual active-set method of Goldfarb and Idnani: it starts
from the unconstrained minimizer and adds violated constraints one at a
time, so every iterate is dual feasible and the first primal-feasible
iterate is optimal. Infeasible problems are reported with a Farkas
certificate ``y`` (``y ≥ 0`` on inequality rows, ``Aᵀy = 0``, ``bᵀy < 0``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.spatial.transform import Rotation

from .constraints import ConstraintBlock, VariableLayout
from .model import RobotModel, RobotState, jacobian_derivative, point_jacobian

REGULARIZATION = 1e-9
FEAS_TOL = 1e-10


class QPError(RuntimeError):
    """Raised for malformed problems."""


@dataclass(frozen=True)
class TaskObjective:
    """Least-squares task ``w ‖E ν - g‖²``."""

    label: str
    weight: float
    E: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        g = np.asarray(self.g, dtype=float).reshape(-1)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "g", g)
        if not self.weight > 0:
            raise QPError(f"task {self.label}: weight must be positive")
        if E.shape[0] != g.shape[0]:
            raise QPError(f"task {self.label}: {E.shape[0]} rows but {g.shape[0]} targets")
        if not (np.isfinite(E).all() and np.isfinite(g).all()):
            raise QPError(f"task {self.label}: non-finite entries")

    def error(self, nu) -> np.ndarray:
        return self.E @ nu - self.g


def end_effector_acceleration_task(model: RobotModel, state: RobotState, frame: str, desired, weight: float,
                                   layout: VariableLayout, label: str | None = None) -> TaskObjective:
    """Track a linear end-effector acceleration: ``E = J``, ``g = ẍ_des - J̇ q̇``."""
    J = point_jacobian(model, state, frame)
    Jd = jacobian_derivative(model, state, frame)
    return TaskObjective(label or f"ee:{frame}", weight, layout.lift(J), np.asarray(desired, dtype=float) - Jd @ state.qd)


def end_effector_velocity_task(model: RobotModel, state: RobotState, frame: str, velocity, gain: float,
                               weight: float, layout: VariableLayout, axes=None,
                               label: str | None = None) -> TaskObjective:
    """Drive the frame velocity towards ``velocity``: ``ẍ_des = gain (v_ref - ẋ)``.

    ``axes`` (k x 3) restricts the task to selected world directions.
    """
    J = point_jacobian(model, state, frame)
    Jd = jacobian_derivative(model, state, frame)
    S = np.eye(3) if axes is None else np.atleast_2d(np.asarray(axes, dtype=float))
    xdd = gain * (np.asarray(velocity, dtype=float) - J @ state.qd)
    return TaskObjective(label or f"ee_vel:{frame}", weight, layout.lift(S @ J), S @ (xdd - Jd @ state.qd))


def end_effector_position_task(model: RobotModel, state: RobotState, frame: str, target, kp: float, kd: float,
                               weight: float, layout: VariableLayout, axes=None,
                               label: str | None = None) -> TaskObjective:
    from .model import frame_position

    J = point_jacobian(model, state, frame)
    Jd = jacobian_derivative(model, state, frame)
    S = np.eye(3) if axes is None else np.atleast_2d(np.asarray(axes, dtype=float))
    x = frame_position(model, state, frame)
    xdd = kp * (np.asarray(target, dtype=float) - x) - kd * (J @ state.qd)
    return TaskObjective(label or f"ee_pos:{frame}", weight, layout.lift(S @ J), S @ (xdd - Jd @ state.qd))


def posture_task(model: RobotModel, state: RobotState, target, kp: float, kd: float, weight: float,
                 layout: VariableLayout, label: str = "posture", joint_weights=None) -> TaskObjective:
    """PD attraction of the actuated joints towards ``target``.

    ``joint_weights`` scales each joint's squared error relative to ``weight``.
    """
    act = model.actuated
    q = state.q[model.actuated_q]
    qdd = kp * (np.asarray(target, dtype=float) - q) - kd * state.qd[act]
    E = np.eye(model.nv)[act]
    if joint_weights is not None:
        r = np.sqrt(np.broadcast_to(np.asarray(joint_weights, dtype=float), qdd.shape))
        E, qdd = E * r[:, None], qdd * r
    return TaskObjective(label, weight, layout.lift(E), qdd)


def base_task(model: RobotModel, state: RobotState, kp: float, kd: float, weight: float, layout: VariableLayout,
              target_position=None, target_orientation=None, label: str = "base") -> TaskObjective:
    """PD hold of the floating base pose.

    ``target_orientation`` is a ``[w, x, y, z]`` quaternion; without it only the
    angular velocity is damped.
    """
    if not model.floating:
        raise QPError("base task requires a floating-base model")
    pos = state.q[:3]
    target = pos if target_position is None else np.asarray(target_position, dtype=float)
    lin = kp * (target - pos) - kd * state.qd[:3]
    ang = -kd * state.qd[3:6]
    if target_orientation is not None:
        w, x, y, z = state.q[3:7]
        tw, tx, ty, tz = target_orientation
        err = Rotation.from_quat([tx, ty, tz, tw]) * Rotation.from_quat([x, y, z, w]).inv()
        ang = ang + kp * err.as_rotvec()
    return TaskObjective(label, weight, layout.lift(np.eye(model.nv)[:6]), np.concatenate([lin, ang]))


def contact_force_task(layout: VariableLayout, frame: str, direction, target: float, weight: float,
                       label: str | None = None) -> TaskObjective:
    """Track ``directionᵀ f_frame = target`` on the generator forces of ``frame``."""
    G = dict(layout.contacts)[frame]
    E = np.zeros((1, layout.n))
    E[0, layout.force_slice(frame)] = np.asarray(direction, dtype=float) @ G
    return TaskObjective(label or f"force:{frame}", weight, E, [target])


def regularization_task(layout: VariableLayout, weight: float, label: str = "regularization") -> TaskObjective:
    """Small penalty on all accelerations and generator weights."""
    n = layout.n - int(layout.slack)
    return TaskObjective(label, weight, np.eye(layout.n)[:n], np.zeros(n))


@dataclass
class QPProblem:
    """``min ½ νᵀHν + cᵀν`` subject to stacked inequality and equality blocks."""

    H: np.ndarray
    c: np.ndarray
    inequalities: list
    equalities: list
    layout: VariableLayout | None = None
    mode: str = "baseline"
    tasks: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    def stacked(self):
        def cat(blocks):
            A = np.vstack([b.A for b in blocks]) if blocks else np.zeros((0, self.n))
            b = np.concatenate([b.b for b in blocks]) if blocks else np.zeros(0)
            labels = [f"{blk.label}[{r}]" for blk in blocks for r in range(blk.rows)]
            return A, b, labels

        return cat(self.inequalities), cat(self.equalities)

    def objective(self, x) -> float:
        return float(0.5 * x @ self.H @ x + self.c @ x)


def assemble(tasks, blocks, n: int | None = None, mode: str = "baseline", layout: VariableLayout | None = None,
             regularization: float = REGULARIZATION) -> QPProblem:
    """Scalarize ``tasks`` and stack ``blocks``.

    In ``baseline`` mode blocks tagged ``impact-aware`` are left out. The
    Tikhonov term is ``regularization`` times the mean diagonal of the task
    Hessian, so scaling every weight by a constant leaves the minimizer
    unchanged.
    """
    if mode not in ("baseline", "impact_aware"):
        raise QPError(f"unknown mode {mode!r}")
    tasks, blocks = list(tasks), list(blocks)
    if n is None:
        if layout is not None:
            n = layout.n
        elif tasks:
            n = tasks[0].E.shape[1]
        elif blocks:
            n = blocks[0].A.shape[1]
        else:
            raise QPError("cannot infer the number of variables")
    H = np.zeros((n, n))
    c = np.zeros(n)
    for t in tasks:
        if t.E.shape[1] != n:
            raise QPError(f"task {t.label}: {t.E.shape[1]} columns, expected {n}")
        H += t.weight * t.E.T @ t.E
        c -= t.weight * t.E.T @ t.g
    scale = float(np.mean(np.diag(H))) if tasks and np.mean(np.diag(H)) > 0 else 1.0
    H += regularization * scale * np.eye(n)
    H = 0.5 * (H + H.T)
    kept = [b for b in blocks if mode == "impact_aware" or b.provenance != "impact-aware"]
    for b in kept:
        if b.A.shape[1] != n:
            raise QPError(f"block {b.label}: {b.A.shape[1]} columns, expected {n}")
    return QPProblem(H, c, [b for b in kept if b.kind == "inequality" and b.rows],
                     [b for b in kept if b.kind == "equality" and b.rows], layout, mode, tasks)


@dataclass
class QPSolution:
    x: np.ndarray
    status: str  # optimal | infeasible | max-iter
    objective: float
    active: list  # labels of active rows
    multipliers_in: np.ndarray
    multipliers_eq: np.ndarray
    residuals: dict
    iterations: int
    certificate: np.ndarray | None = None  # over [inequality rows, equality rows]
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _kkt(H, c, A, b, E, e, x, lam, mu):
    stat = H @ x + c + A.T @ lam + E.T @ mu
    viol = max(float(np.max(A @ x - b, initial=0.0)), float(np.max(np.abs(E @ x - e), initial=0.0)))
    return {
        "stationarity": float(np.max(np.abs(stat), initial=0.0)),
        "primal": viol,
        "dual": float(max(0.0, -np.min(lam, initial=0.0))),
        "complementarity": float(np.max(np.abs(lam * (A @ x - b)), initial=0.0)),
    }


def solve_qp(H, c, A=None, b=None, E=None, e=None, max_iter: int | None = None, tol: float = FEAS_TOL):
    """Solve ``min ½xᵀHx + cᵀx`` s.t. ``A x ≤ b``, ``E x = e`` (H positive definite).

    Returns ``(x, status, lam, mu, active_in, iterations, certificate)``.
    """
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    n = len(c)
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
    E = np.zeros((0, n)) if E is None else np.asarray(E, dtype=float).reshape(-1, n)
    e = np.zeros(0) if e is None else np.asarray(e, dtype=float).reshape(-1)
    m_in, m_eq = len(b), len(e)
    if max_iter is None:
        max_iter = 20 * (n + m_in + m_eq) + 50

    # Constraints as Nᵀx ≥ d with unit-norm columns; equalities first.
    na = np.linalg.norm(A, axis=1) if m_in else np.zeros(0)
    ne = np.linalg.norm(E, axis=1) if m_eq else np.zeros(0)
    na_safe = np.where(na > 0, na, 1.0)
    ne_safe = np.where(ne > 0, ne, 1.0)
    Nin, din = -(A / na_safe[:, None]).T, -b / na_safe
    Neq, deq = (E / ne_safe[:, None]).T, e / ne_safe

    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise QPError("Hessian is not positive definite") from exc
    Linv = sla.solve_triangular(L, np.eye(n), lower=True)
    x = -sla.cho_solve((L, True), c)

    active: list[int] = []  # indices: 0..m_eq-1 equalities, m_eq.. inequalities
    sign: dict[int, float] = {}
    u: list[float] = []

    def normal(j):
        if j < m_eq:
            return sign[j] * Neq[:, j]
        return Nin[:, j - m_eq]

    def rhs(j):
        if j < m_eq:
            return sign[j] * deq[j]
        return din[j - m_eq]

    def certificate_from(p, r):
        # n_p = Σ r_j n_j with r_j ≤ 0 on active inequalities: combine rows so
        # that Aᵀy_in + Eᵀy_eq = 0 and bᵀy_in + eᵀy_eq < 0.
        y = np.zeros(m_in + m_eq)
        for j, w in [(p, 1.0), *[(j, -rj) for j, rj in zip(active, r)]]:
            if j < m_eq:
                y[m_in + j] -= w * sign[j] / ne_safe[j]
            else:
                y[j - m_eq] += w / na_safe[j - m_eq]
        return y

    def directions(p):
        np_ = normal(p)
        q = len(active)
        if q == 0:
            z = Linv.T @ (Linv @ np_)
            return z, np.zeros(0)
        Nact = np.column_stack([normal(j) for j in active])
        Q, R = np.linalg.qr(Linv @ Nact, mode="complete")
        Jm = Linv.T @ Q
        J1, J2 = Jm[:, :q], Jm[:, q:]
        z = J2 @ (J2.T @ np_)
        r = sla.solve_triangular(R[:q], J1.T @ np_)
        return z, r

    pending_eq = list(range(m_eq))
    iterations = 0
    while True:
        # Pick the next constraint to add.
        p = None
        while pending_eq:
            j = pending_eq.pop(0)
            if ne[j] == 0:
                if abs(deq[j]) > tol:
                    y = np.zeros(m_in + m_eq)
                    y[m_in + j] = -np.sign(e[j])
                    return x, "infeasible", None, None, [], iterations, y
                continue
            s = Neq[:, j] @ x - deq[j]
            sign[j] = -1.0 if s > 0 else 1.0
            p = j
            break
        if p is None and m_in:
            s_all = Nin.T @ x - din
            s_all[[j - m_eq for j in active if j >= m_eq]] = np.inf
            s_all[na == 0] = np.where(din[na == 0] > tol, -np.inf, np.inf)
            k = int(np.argmin(s_all))
            if s_all[k] < -tol:
                if na[k] == 0:
                    y = np.zeros(m_in + m_eq)
                    y[k] = 1.0
                    return x, "infeasible", None, None, [], iterations, y
                p = m_eq + k
        if p is None:
            break

        u_plus = 0.0
        while True:
            iterations += 1
            if iterations > max_iter:
                lam, mu = _multipliers(active, u, sign, m_in, m_eq, na_safe, ne_safe)
                return x, "max-iter", lam, mu, [j - m_eq for j in active if j >= m_eq], iterations, None
            z, r = directions(p)
            np_ = normal(p)
            s_p = np_ @ x - rhs(p)
            zn = z @ np_
            dependent = zn <= 1e-12 * float(np.sum((Linv @ np_) ** 2))
            t2 = np.inf if dependent else -s_p / zn
            if p < m_eq and dependent and abs(s_p) <= tol:
                break  # redundant equality
            t1, drop = np.inf, None
            for idx, (j, rj) in enumerate(zip(active, r)):
                if j >= m_eq and rj > 1e-14:
                    ratio = u[idx] / rj
                    if ratio < t1:
                        t1, drop = ratio, idx
            t = min(t1, t2)
            if not np.isfinite(t):
                return x, "infeasible", None, None, [], iterations, certificate_from(p, r)
            if np.isfinite(t2):
                x = x + t * z
            u = [ui - t * ri for ui, ri in zip(u, r)]
            u_plus += t
            if t2 <= t1:
                active.append(p)
                u.append(u_plus)
                break
            active.pop(drop)
            u.pop(drop)

    lam, mu = _multipliers(active, u, sign, m_in, m_eq, na_safe, ne_safe)
    return x, "optimal", lam, mu, [j - m_eq for j in active if j >= m_eq], iterations, None


def _multipliers(active, u, sign, m_in, m_eq, na, ne):
    lam = np.zeros(m_in)
    mu = np.zeros(m_eq)
    for j, uj in zip(active, u):
        if j < m_eq:
            mu[j] = -uj * sign[j] / ne[j]
        else:
            lam[j - m_eq] = max(uj, 0.0) / na[j - m_eq]
    return lam, mu


def solve(problem: QPProblem, max_iter: int | None = None) -> QPSolution:
    (A, b, in_labels), (E, e, eq_labels) = problem.stacked()
    x, status, lam, mu, active, iters, cert = solve_qp(problem.H, problem.c, A, b, E, e, max_iter=max_iter)
    if lam is None:
        lam, mu = np.zeros(len(b)), np.zeros(len(e))
    res = _kkt(problem.H, problem.c, A, b, E, e, x, lam, mu)
    labels = [*eq_labels, *[in_labels[k] for k in sorted(active)]]
    message = ""
    if status == "infeasible":
        message = "constraints are infeasible"
    return QPSolution(x, status, problem.objective(x), labels, lam, mu, res, iters, cert, message)
