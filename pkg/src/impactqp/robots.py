"""Ready-made robot models used by the examples, scenarios and tests."""

from __future__ import annotations

import numpy as np

from .model.dynamics import forward_kinematics
from .model.robot import EndEffectorFrame, Joint, Link, RobotModel
from .model.spatial import axis_angle, transform

X, Y, Z = np.eye(3)


def _rod(mass: float, length: float, axis: int = 0, radius: float = 0.02) -> np.ndarray:
    """Inertia of a slender cylinder about its COM, long along ``axis``."""
    along = 0.5 * mass * radius**2
    across = mass * (3 * radius**2 + length**2) / 12.0
    d = np.full(3, across)
    d[axis] = along
    return np.diag(d)


def _box(mass: float, size) -> np.ndarray:
    a, b, c = size
    return np.diag([mass * (b * b + c * c), mass * (a * a + c * c), mass * (a * a + b * b)]) / 12.0


def pendulum(mass: float = 1.0, length: float = 1.0, point_inertia: float = 1e-6) -> RobotModel:
    """Single revolute joint about y with a (near) point mass hanging along -z."""
    link = Link("bob", mass, np.array([0.0, 0.0, -length]), point_inertia * np.eye(3))
    joint = Joint("hinge", "revolute", -1, Y.copy(), np.eye(4))
    tip = EndEffectorFrame("tip", 0, transform(p=[0.0, 0.0, -length]))
    return RobotModel([link], [joint], [tip], name="pendulum")


def planar_2r(l1: float = 0.5, l2: float = 0.5, m1: float = 1.0, m2: float = 1.0, gravity=(0.0, 0.0, -9.81)):
    """Two-link arm rotating about z in the horizontal plane (tip frame ``tip``)."""
    links = [
        Link("link1", m1, np.array([l1 / 2, 0, 0]), _rod(m1, l1)),
        Link("link2", m2, np.array([l2 / 2, 0, 0]), _rod(m2, l2)),
    ]
    joints = [
        Joint("j1", "revolute", -1, Z.copy(), np.eye(4)),
        Joint("j2", "revolute", 0, Z.copy(), transform(p=[l1, 0, 0])),
    ]
    tip = EndEffectorFrame("tip", 1, transform(p=[l2, 0, 0]), role="impacting")
    return RobotModel(links, joints, [tip], gravity, name="planar_2r")


def slider(mass: float = 2.0, axis=(0.0, 1.0, 0.0)) -> RobotModel:
    """One prismatic joint; the end-effector sits at the carriage origin."""
    link = Link("carriage", mass, np.zeros(3), 0.01 * np.eye(3))
    joint = Joint("slide", "prismatic", -1, np.asarray(axis, dtype=float), np.eye(4))
    ee = EndEffectorFrame("ee", 0, np.eye(4), role="impacting")
    return RobotModel([link], [joint], [ee], (0.0, 0.0, 0.0), name="slider")


def arm3(l1: float = 0.4, l2: float = 0.4, gravity=(0.0, 0.0, -9.81)) -> RobotModel:
    """Fixed-base yaw/pitch/pitch arm: non-redundant for a 3D point task."""
    links = [
        Link("base_yaw", 2.0, np.array([0, 0, 0.05]), _rod(2.0, 0.1, axis=2, radius=0.05)),
        Link("upper", 1.5, np.array([l1 / 2, 0, 0]), _rod(1.5, l1)),
        Link("fore", 1.0, np.array([l2 / 2, 0, 0]), _rod(1.0, l2)),
    ]
    joints = [
        Joint("yaw", "revolute", -1, Z.copy(), np.eye(4)),
        Joint("shoulder", "revolute", 0, Y.copy(), transform(p=[0, 0, 0.1])),
        Joint("elbow", "revolute", 1, Y.copy(), transform(p=[l1, 0, 0])),
    ]
    tool = EndEffectorFrame("tool", 2, transform(p=[l2, 0, 0]), role="impacting")
    elbow = EndEffectorFrame("elbow_pt", 1, transform(p=[l1, 0, 0]), role="free")
    return RobotModel(links, joints, [tool, elbow], gravity, name="arm3")


def free_body(mass: float = 3.0, inertia=(0.1, 0.2, 0.3), gravity=(0.0, 0.0, -9.81)) -> RobotModel:
    link = Link("body", mass, np.zeros(3), np.diag(inertia))
    joint = Joint("root", "free", -1, Z.copy(), np.eye(4))
    frames = [EndEffectorFrame("center", 0, np.eye(4)), EndEffectorFrame("corner", 0, transform(p=[0.1, 0.05, -0.2]))]
    return RobotModel([link], [joint], frames, gravity, name="free_body")


FOOT_HALF = (0.08, 0.04)
SOLE_DEPTH = 0.06


def humanoid() -> RobotModel:
    """Desk-scale floating-base humanoid: sagittal 3-DoF legs, 3-DoF arms.

    Each foot carries four sole-corner frames (``l_foot_*``/``r_foot_*``,
    role ``established``); the hands are ``r_hand`` (impacting) and
    ``l_hand`` (free).
    """
    links = [Link("torso", 12.0, np.array([0, 0, 0.15]), _box(12.0, (0.2, 0.3, 0.45)))]
    joints = [Joint("root", "free", -1, Z.copy(), np.eye(4))]
    frames = []

    def add(name, mass, com, inertia, parent, kind, axis, origin):
        links.append(Link(name, mass, np.asarray(com, dtype=float), inertia))
        joints.append(Joint(name + "_joint", kind, parent, np.asarray(axis, dtype=float), origin))
        return len(links) - 1

    for side, sy in (("l", 1.0), ("r", -1.0)):
        hip = add(f"{side}_thigh", 2.0, [0, 0, -0.15], _rod(2.0, 0.3, axis=2, radius=0.04), 0, "revolute", Y,
                  transform(p=[0, 0.1 * sy, 0]))
        knee = add(f"{side}_shank", 1.5, [0, 0, -0.15], _rod(1.5, 0.3, axis=2, radius=0.035), hip, "revolute", Y,
                   transform(p=[0, 0, -0.3]))
        foot = add(f"{side}_foot", 0.5, [0.02, 0, -0.04], _box(0.5, (0.16, 0.08, 0.04)), knee, "revolute", Y,
                   transform(p=[0, 0, -0.3]))
        hx, hy = FOOT_HALF
        for tag, cx, cy in (("fl", hx, hy), ("fr", hx, -hy), ("bl", -hx, hy), ("br", -hx, -hy)):
            frames.append(EndEffectorFrame(f"{side}_foot_{tag}", foot, transform(p=[0.02 + cx, cy, -SOLE_DEPTH]),
                                           role="established"))
    for side, sy in (("l", 1.0), ("r", -1.0)):
        sp = add(f"{side}_shoulder", 0.3, [0, 0, 0], 0.001 * np.eye(3), 0, "revolute", Y,
                 transform(p=[0, 0.18 * sy, 0.35]))
        upper = add(f"{side}_upper_arm", 1.0, [0, 0, -0.125], _rod(1.0, 0.25, axis=2, radius=0.03), sp, "revolute",
                    X, np.eye(4))
        fore = add(f"{side}_forearm", 0.6, [0, 0, -0.125], _rod(0.6, 0.25, axis=2, radius=0.025), upper,
                   "revolute", Y, transform(p=[0, 0, -0.25]))
        frames.append(EndEffectorFrame(f"{side}_hand", fore, transform(p=[0, 0, -0.27]),
                                       role="impacting" if side == "r" else "free"))
    return RobotModel(links, joints, frames, name="humanoid")


def humanoid_stance(model: RobotModel, knee: float = 0.6, shoulder=-0.7, elbow=-1.1, roll=0.0) -> np.ndarray:
    """Flat-footed standing configuration with both soles on ``z = 0``."""
    q = model.neutral()
    names = [j.name for j in model.joints]

    def setq(joint, value):
        q[model.q_index[names.index(joint)]] = value

    for side in "lr":
        setq(f"{side}_thigh_joint", -knee / 2)
        setq(f"{side}_shank_joint", knee)
        setq(f"{side}_foot_joint", -knee / 2)
        setq(f"{side}_shoulder_joint", shoulder)
        setq(f"{side}_upper_arm_joint", roll if side == "l" else -roll)
        setq(f"{side}_forearm_joint", elbow)
    _, frames = forward_kinematics(model, q)
    sole = min(T[2, 3] for name, T in frames.items() if "_foot_" in name)
    q[2] -= sole
    return q


def random_model(rng: np.random.Generator, n_joints: int, floating: bool = False, n_frames: int = 3,
                 prismatic_prob: float = 0.25, leaf_frames: bool = False) -> RobotModel:
    """Random kinematic tree with ``n_joints`` actuated joints (plus a free root if ``floating``).

    With ``leaf_frames`` the end-effector frames are spread over the leaf
    links instead of arbitrary links.
    """
    links, joints = [], []

    def rand_inertia(mass):
        A = rng.normal(size=(3, 3))
        Q, _ = np.linalg.qr(A)
        return mass * 0.01 * Q @ np.diag(rng.uniform(0.5, 2.0, 3)) @ Q.T

    def rand_origin():
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        return transform(axis_angle(axis, rng.uniform(-np.pi, np.pi)), rng.uniform(-0.3, 0.3, 3))

    if floating:
        m = rng.uniform(1.0, 5.0)
        links.append(Link("base", m, rng.uniform(-0.05, 0.05, 3), rand_inertia(m)))
        joints.append(Joint("root", "free", -1, Z.copy(), np.eye(4)))
    for k in range(n_joints):
        m = rng.uniform(0.3, 2.0)
        links.append(Link(f"l{k}", m, rng.uniform(-0.1, 0.1, 3), rand_inertia(m)))
        parent = int(rng.integers(-1 if not links[:-1] else 0, len(links) - 1)) if len(links) > 1 else -1
        if not floating and k == 0:
            parent = -1
        if parent < 0 and k > 0:
            parent = 0
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        kind = "prismatic" if rng.uniform() < prismatic_prob else "revolute"
        joints.append(Joint(f"j{k}", kind, parent, axis, rand_origin()))
    if leaf_frames:
        parents = {j.parent for j in joints}
        leaves = [i for i in range(len(links)) if i not in parents]
        bodies = [leaves[k % len(leaves)] for k in rng.permutation(max(n_frames, len(leaves)))[:n_frames]]
    else:
        bodies = [int(rng.integers(0, len(links))) for _ in range(n_frames)]
    frames = [EndEffectorFrame(f"f{k}", int(b), transform(p=rng.uniform(-0.2, 0.2, 3)))
              for k, b in enumerate(bodies)]
    return RobotModel(links, joints, frames, name="random")


def random_state(rng: np.random.Generator, model: RobotModel, speed: float = 1.0):
    from .model.robot import RobotState

    q = rng.uniform(-1.0, 1.0, model.nq)
    if model.floating:
        quat = rng.normal(size=4)
        q[3:7] = quat / np.linalg.norm(quat)
    return RobotState(q, speed * rng.uniform(-1.0, 1.0, model.nv))
