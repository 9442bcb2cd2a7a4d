"""Robot description: links, joints, end-effector frames and generalized state."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spatial import quat_to_rot, rot_to_quat, transform

JOINT_KINDS = ("revolute", "prismatic", "free")
ROLES = ("established", "impacting", "free")


class ModelError(ValueError):
    """Raised for malformed robot descriptions or mismatched states."""


@dataclass(frozen=True)
class Link:
    name: str
    mass: float
    com: np.ndarray
    inertia: np.ndarray


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str
    parent: int  # link index, -1 for the world
    axis: np.ndarray
    origin: np.ndarray  # 4x4 parent-link frame -> joint frame


@dataclass(frozen=True)
class EndEffectorFrame:
    name: str
    body: int
    transform: np.ndarray = field(default_factory=lambda: np.eye(4))
    role: str = "free"


class RobotModel:
    """Kinematic tree where joint ``i`` connects ``joints[i].parent`` to link ``i``.

    A ``free`` joint (6-DoF floating base) is only allowed on the root link.
    Its configuration is ``[x, y, z, qw, qx, qy, qz]`` and its velocity is
    ``[v, omega]``: the world-frame linear velocity of the base origin followed
    by the world-frame angular velocity.
    """

    def __init__(self, links, joints, frames=(), gravity=(0.0, 0.0, -9.81), name="robot"):
        self.name = name
        self.links = list(links)
        self.joints = list(joints)
        self.frames = {f.name: f for f in frames}
        self.gravity = np.asarray(gravity, dtype=float)
        self._validate()

        self.q_index, self.v_index = [], []
        nq = nv = 0
        for j in self.joints:
            dq, dv = (7, 6) if j.kind == "free" else (1, 1)
            self.q_index.append(slice(nq, nq + dq))
            self.v_index.append(slice(nv, nv + dv))
            nq, nv = nq + dq, nv + dv
        self.nq, self.nv = nq, nv
        self.floating = self.joints[0].kind == "free"
        self.total_mass = float(sum(l.mass for l in self.links))
        self.children = [[] for _ in self.links]
        for i, j in enumerate(self.joints):
            if j.parent >= 0:
                self.children[j.parent].append(i)

    def _validate(self):
        if len(self.links) != len(self.joints) or not self.links:
            raise ModelError("need exactly one joint per link")
        roots = [i for i, j in enumerate(self.joints) if j.parent < 0]
        if roots != [0]:
            raise ModelError("tree must have a single root at index 0")
        for i, (link, joint) in enumerate(zip(self.links, self.joints)):
            if joint.kind not in JOINT_KINDS:
                raise ModelError(f"joint {joint.name}: unknown kind {joint.kind!r}")
            if joint.parent >= i:
                raise ModelError(f"joint {joint.name}: parent must precede child")
            if joint.kind == "free":
                if i != 0:
                    raise ModelError("a free-flyer joint may only appear at the root")
                if not np.allclose(joint.origin, np.eye(4)):
                    raise ModelError("free-flyer joint origin must be the identity")
            elif abs(np.linalg.norm(joint.axis) - 1.0) > 1e-12:
                raise ModelError(f"joint {joint.name}: axis must be unit-norm")
            if not link.mass > 0:
                raise ModelError(f"link {link.name}: mass must be positive")
            I = link.inertia
            if not np.allclose(I, I.T, atol=1e-12):
                raise ModelError(f"link {link.name}: inertia must be symmetric")
            try:
                np.linalg.cholesky(I)
            except np.linalg.LinAlgError:
                raise ModelError(f"link {link.name}: inertia must be positive definite") from None
        for f in self.frames.values():
            if not 0 <= f.body < len(self.links):
                raise ModelError(f"frame {f.name}: invalid body index {f.body}")
            if f.role not in ROLES:
                raise ModelError(f"frame {f.name}: unknown role {f.role!r}")

    @property
    def n_actuated(self) -> int:
        return self.nv - 6 if self.floating else self.nv

    @property
    def actuated(self) -> np.ndarray:
        """Indices of actuated entries of the generalized velocity."""
        return np.arange(6 if self.floating else 0, self.nv)

    @property
    def actuated_q(self) -> np.ndarray:
        return np.arange(7 if self.floating else 0, self.nq)

    def selection(self) -> np.ndarray:
        """Actuated-joint selection matrix ``B`` (nv x n_actuated)."""
        B = np.zeros((self.nv, self.n_actuated))
        B[self.actuated, np.arange(self.n_actuated)] = 1.0
        return B

    def link_index(self, name: str) -> int:
        for i, link in enumerate(self.links):
            if link.name == name:
                return i
        raise ModelError(f"unknown link {name!r}")

    def frame(self, name: str) -> EndEffectorFrame:
        try:
            return self.frames[name]
        except KeyError:
            raise ModelError(f"unknown end-effector frame {name!r}") from None

    def neutral(self) -> np.ndarray:
        q = np.zeros(self.nq)
        if self.floating:
            q[3] = 1.0
        return q

    def with_frames(self, frames) -> "RobotModel":
        return RobotModel(self.links, self.joints, [*self.frames.values(), *frames], self.gravity, self.name)


@dataclass
class RobotState:
    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.qd = np.asarray(self.qd, dtype=float)

    def check(self, model: RobotModel) -> "RobotState":
        if self.q.shape != (model.nq,) or self.qd.shape != (model.nv,):
            raise ModelError(
                f"state dimension mismatch: q {self.q.shape} qd {self.qd.shape}, "
                f"model expects ({model.nq},) and ({model.nv},)"
            )
        if model.floating and abs(np.linalg.norm(self.q[3:7]) - 1.0) > 1e-9:
            raise ModelError("free-flyer quaternion must have unit norm")
        return self

    def copy(self) -> "RobotState":
        return RobotState(self.q.copy(), self.qd.copy())


# -- JSON robot description ---------------------------------------------------


def _pose(d) -> np.ndarray:
    if d is None:
        return np.eye(4)
    R = quat_to_rot(np.asarray(d.get("quat", [1, 0, 0, 0]), dtype=float))
    return transform(R, np.asarray(d.get("xyz", [0, 0, 0]), dtype=float))


def _pose_dict(T: np.ndarray) -> dict:
    return {"xyz": T[:3, 3].tolist(), "quat": rot_to_quat(T[:3, :3]).tolist()}


def _inertia(entries) -> np.ndarray:
    ixx, ixy, ixz, iyy, iyz, izz = map(float, entries)
    return np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])


def model_from_dict(doc: dict) -> RobotModel:
    """Build a model from the JSON robot description.

    Joints may be listed in any order; they are sorted so each parent precedes
    its children.
    """
    try:
        link_docs = {l["name"]: l for l in doc["links"]}
        joint_docs = list(doc["joints"])
        child_of = {}
        for jd in joint_docs:
            if jd["child"] in child_of:
                raise ModelError(f"link {jd['child']!r} has two parent joints")
            child_of[jd["child"]] = jd
        if set(child_of) != set(link_docs):
            raise ModelError("every link needs exactly one parent joint")
        order, placed = [], set()
        pending = list(joint_docs)
        while pending:
            progressed = False
            for jd in list(pending):
                if jd["parent"] in ("world", None) or jd["parent"] in placed:
                    order.append(jd)
                    placed.add(jd["child"])
                    pending.remove(jd)
                    progressed = True
            if not progressed:
                raise ModelError("joint graph is cyclic or references unknown parents")
        index = {jd["child"]: i for i, jd in enumerate(order)}
        links, joints = [], []
        for jd in order:
            ld = link_docs[jd["child"]]
            links.append(Link(ld["name"], float(ld["mass"]), np.asarray(ld.get("com", [0, 0, 0]), dtype=float),
                              _inertia(ld["inertia"])))
            parent = -1 if jd["parent"] in ("world", None) else index[jd["parent"]]
            joints.append(Joint(jd["name"], jd["kind"], parent,
                                np.asarray(jd.get("axis", [0, 0, 1]), dtype=float), _pose(jd.get("origin"))))
        frames = []
        for fd in doc.get("end_effectors", []):
            if fd["body"] not in index:
                raise ModelError(f"frame {fd['name']}: unknown body {fd['body']!r}")
            frames.append(EndEffectorFrame(fd["name"], index[fd["body"]], _pose(fd.get("transform")),
                                           fd.get("role", "free")))
        return RobotModel(links, joints, frames, doc.get("gravity", (0, 0, -9.81)), doc.get("name", "robot"))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed robot description: {exc!r}") from exc


def model_to_dict(model: RobotModel) -> dict:
    links, joints = [], []
    for link, joint in zip(model.links, model.joints):
        I = link.inertia
        links.append({"name": link.name, "mass": link.mass, "com": link.com.tolist(),
                      "inertia": [I[0, 0], I[0, 1], I[0, 2], I[1, 1], I[1, 2], I[2, 2]]})
        joints.append({"name": joint.name, "kind": joint.kind,
                       "parent": "world" if joint.parent < 0 else model.links[joint.parent].name,
                       "child": link.name, "axis": joint.axis.tolist(), "origin": _pose_dict(joint.origin)})
    frames = [{"name": f.name, "body": model.links[f.body].name, "transform": _pose_dict(f.transform),
               "role": f.role} for f in model.frames.values()]
    return {"name": model.name, "gravity": model.gravity.tolist(), "links": links, "joints": joints,
            "end_effectors": frames}


def load_model(path) -> RobotModel:
    with open(Path(path)) as fh:
        return model_from_dict(json.load(fh))


def save_model(model: RobotModel, path) -> None:
    with open(Path(path), "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
