"""Scenario files and the closed-loop experiment runner."""

from __future__ import annotations

import csv
import json
import logging
import time as _time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import robots
from .constraints import (
    BoundsSpec,
    ComVelPolygon,
    ContactSpec,
    ZmpPolygon,
    support_polygon,
)
from .controller import ControllerInfeasible, ControllerSettings, controller_step, inverse_dynamics
from .impact import EndEffectorPartition, ImpactConfig, wrench_map, zmp, DegenerateZmpError
from .model import RobotModel, RobotState, com, frame_position, load_model, point_jacobian
from .qp import (
    base_task,
    contact_force_task,
    end_effector_position_task,
    end_effector_velocity_task,
    posture_task,
    regularization_task,
)
from .sim import PhaseMachine, Surface, World, detect_impact, resolve_impact, step

log = logging.getLogger(__name__)

CSV_SCHEMA = 1
BUILTIN_MODELS = {
    "humanoid": robots.humanoid,
    "arm3": robots.arm3,
    "planar_2r": robots.planar_2r,
}


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario description."""


class BudgetExceeded(RuntimeError):
    pass


# -- parsing -----------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    model: RobotModel
    initial: RobotState
    world: World
    established: tuple
    impacting: dict  # frame -> surface name
    free: tuple
    contact_surfaces: dict  # established frame -> surface name
    settings: ControllerSettings
    mode: str
    activation_distance: float
    tasks: dict
    fsm: dict
    duration: float
    budget: float
    support: ZmpPolygon | None = None  # unshrunk polygon used to judge post-impact balance
    raw: dict = field(repr=False, default_factory=dict)

    def normal_of(self, frame: str) -> np.ndarray:
        sname = self.impacting.get(frame) or self.contact_surfaces.get(frame)
        return self.world.surface(sname).normal


def builtin_scenarios() -> list:
    base = resources.files("impactqp") / "data" / "scenarios"
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".json"))


def scenario_path(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    candidate = resources.files("impactqp") / "data" / "scenarios" / f"{name_or_path}.json"
    if candidate.is_file():
        return Path(str(candidate))
    raise ScenarioError(f"scenario {name_or_path!r} not found")


def _need(doc, key, where):
    if key not in doc:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return doc[key]


def _model(spec, base_dir: Path) -> RobotModel:
    if isinstance(spec, str):
        if spec in BUILTIN_MODELS:
            return BUILTIN_MODELS[spec]()
        path = Path(spec)
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ScenarioError(f"model {spec!r} is neither built in nor a readable file")
        return load_model(path)
    if isinstance(spec, dict) and "links" in spec:
        from .model import model_from_dict

        return model_from_dict(spec)
    raise ScenarioError("model must be a built-in name, a file path or an inline description")


def _initial_state(model: RobotModel, spec: dict) -> RobotState:
    if "stance" in spec:
        if model.name != "humanoid":
            raise ScenarioError("stance initialisation is only defined for the humanoid model")
        q = robots.humanoid_stance(model, **spec["stance"])
    else:
        q = np.asarray(_need(spec, "q", "initial"), dtype=float)
    qd = np.asarray(spec.get("qd", np.zeros(model.nv)), dtype=float)
    return RobotState(q, qd).check(model)


def parse_scenario(doc: dict, base_dir: Path = Path("."), seed: int = 0) -> Scenario:
    """Validate a scenario document and build every runtime object."""
    from .impact import ImpactError
    from .constraints import ConstraintError
    from .model import ModelError
    from .sim import SimulationError

    try:
        return _parse(doc, base_dir, seed)
    except (KeyError, TypeError, ValueError, ModelError, ImpactError, ConstraintError, SimulationError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"{type(exc).__name__}: {exc}") from exc


def _parse(doc: dict, base_dir: Path, seed: int) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    name = doc.get("name", "scenario")
    model = _model(_need(doc, "model", "scenario"), base_dir)
    initial = _initial_state(model, _need(doc, "initial", "scenario"))

    wdoc = _need(doc, "world", "scenario")
    rng = np.random.default_rng(seed)
    jitter = float(doc.get("wall_jitter", 0.0))
    surfaces = []
    for sd in _need(wdoc, "surfaces", "world"):
        point = np.asarray(_need(sd, "point", "surface"), dtype=float)
        normal = np.asarray(_need(sd, "normal", "surface"), dtype=float)
        if jitter and sd.get("jitter", True) and abs(normal[2]) < 0.5:
            point = point - normal * rng.uniform(-jitter, jitter)
        surfaces.append(Surface(sd["name"], point, normal, float(sd.get("restitution", 0.02)),
                                float(sd.get("mu", 0.7))))
    world = World(surfaces, np.asarray(wdoc.get("gravity", model.gravity), dtype=float), float(wdoc.get("h", 0.001)))

    roles = _need(doc, "roles", "scenario")
    established = tuple(roles.get("established", ()))
    impacting = dict(roles.get("impacting", {}))
    free = tuple(roles.get("free", ()))
    for frame in (*established, *impacting, *free):
        model.frame(frame)
    for sname in impacting.values():
        world.surface(sname)
    default_surface = roles.get("contact_surface", "ground" if established else None)
    contact_surfaces = {f: roles.get("contact_surfaces", {}).get(f, default_surface) for f in established}
    for sname in contact_surfaces.values():
        world.surface(sname)

    ctrl = doc.get("controller", {})
    dt = float(ctrl.get("dt", 0.005))
    impact_doc = doc.get("impact", {})
    impact_configs = {
        f: ImpactConfig(world.surface(s).normal, float(impact_doc.get("restitution", world.surface(s).restitution)),
                        float(impact_doc.get("impact_duration", 0.005)), dt)
        for f, s in impacting.items()
    }
    bounds = BoundsSpec.from_dict(model.n_actuated, {"impulse_factor": 0.4, **doc.get("bounds", {})})
    cdoc = doc.get("contact", {})
    cspec = ContactSpec(mu=float(cdoc.get("mu", 0.7)), generators=int(cdoc.get("generators", 4)))
    contact_specs = {f: cspec for f in (*established, *impacting)}
    normals = {f: world.surface(s).normal for f, s in contact_surfaces.items()}
    normals.update({f: world.surface(s).normal for f, s in impacting.items()})

    zmp_polygon = support = None
    zdoc = doc.get("zmp")
    if zdoc is not None and model.floating:
        if zdoc.get("option", "A") == "A" and "A" not in zdoc:
            pts = [frame_position(model, initial, f) for f in established
                   if contact_surfaces[f] == zdoc.get("surface", "ground")]
            if len(pts) < 3:
                raise ScenarioError("support polygon needs at least three ground contacts")
            zmp_polygon = support_polygon(pts, margin=float(zdoc.get("margin", 0.0)))
            support = support_polygon(pts)
        else:
            zmp_polygon = support = ZmpPolygon.from_dict(zdoc)
    com_polygon = None
    if doc.get("com_velocity") is not None:
        cv = doc["com_velocity"]
        com_polygon = ComVelPolygon(np.asarray(cv["G"], dtype=float), np.asarray(cv["h"], dtype=float))

    settings = ControllerSettings(bounds, dt, contact_specs, normals, impact_configs, zmp_polygon, com_polygon,
                                  bool(ctrl.get("position_limits", True)), float(ctrl.get("slack_weight", 1e6)))
    mode = ctrl.get("mode", "aware")
    if mode not in ("aware", "baseline"):
        raise ScenarioError(f"controller.mode must be 'aware' or 'baseline', got {mode!r}")
    duration = float(doc.get("duration", 1.0))
    if duration <= 0:
        raise ScenarioError("duration must be positive")
    return Scenario(name, model, initial, world, established, impacting, free, contact_surfaces, settings, mode,
                    float(ctrl.get("activation_distance", 0.15)), doc.get("tasks", {}), doc.get("fsm", {}), duration,
                    float(doc.get("budget_s", 60.0)), support, doc)


def load_scenario(name_or_path, seed: int = 0) -> Scenario:
    path = scenario_path(name_or_path)
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return parse_scenario(doc, Path(path).parent, seed)


# -- closed loop ---------------------------------------------------------------------


@dataclass
class Check:
    quantity: str
    index: int
    value: float
    lower: float
    upper: float
    tol: float

    @property
    def excess(self) -> float:
        return max(self.value - self.upper, self.lower - self.value, 0.0)

    @property
    def ok(self) -> bool:
        return self.excess <= self.tol


@dataclass
class EventRecord:
    event: object  # ImpactEvent
    aware: bool
    checks: list
    predicted: dict
    actual: dict
    approach_speed: float

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


@dataclass
class RunLog:
    scenario: str
    mode: str
    rows: list = field(default_factory=list)
    columns: list = field(default_factory=list)
    events: list = field(default_factory=list)
    fallbacks: list = field(default_factory=list)  # (time, slack)
    phases: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""
    activation_time: float | None = None
    max_approach_speed: float = 0.0
    reference_speed: float = 0.0
    wall_time: float = 0.0

    @property
    def violations(self) -> list:
        return [c for e in self.events for c in e.checks if not c.ok]

    @property
    def contact_speed(self) -> float | None:
        return self.events[0].approach_speed if self.events else None


def _post_impact_checks(sc: Scenario, model, state_pre, res, forces_pre, tol):
    s = sc.settings
    b = s.bounds
    act = model.actuated
    checks = []
    qd = res.state.qd[act]
    for k in range(len(act)):
        if np.isfinite(b.qd_lower[k]) or np.isfinite(b.qd_upper[k]):
            checks.append(Check("joint_velocity", k, float(qd[k]), b.qd_lower[k], b.qd_upper[k], tol))
    dur = next(iter(s.impact_configs.values())).impact_duration
    gamma = np.zeros(model.nv)
    for name, iota in res.impulses.items():
        gamma += point_jacobian(model, state_pre, name).T @ iota / dur
    for k in range(len(act)):
        if np.isfinite(b.gamma_lower[k]) or np.isfinite(b.gamma_upper[k]):
            checks.append(Check("impulsive_torque", k, float(gamma[act][k]), b.gamma_lower[k], b.gamma_upper[k], tol))
    actual = {"joint_velocity_jump": res.joint_velocity_jump, "impulsive_torque": gamma[act]}
    poly = sc.support
    if poly is not None:
        W = np.zeros(6)
        for name, f in forces_pre.items():
            W += wrench_map([frame_position(model, state_pre, name)], poly.origin) @ f
        dW = np.zeros(6)
        for name, iota in res.impulses.items():
            dW += wrench_map([frame_position(model, state_pre, name)], poly.origin) @ iota / dur
        try:
            z = zmp(W + dW, poly.normal)
            margin = poly.margin(z)
        except DegenerateZmpError:
            z, margin = np.full(3, np.nan), np.inf
        checks.append(Check("zmp_margin", 0, margin, -np.inf, 0.0, tol))
        actual["zmp"] = z
        actual["wrench_jump"] = dW
    return checks, actual


def _tasks_for(sc: Scenario, model, state, phase, refs):
    cfg = sc.tasks
    q0 = refs["posture"]
    out = []

    def build(layout):
        tasks = []
        p = cfg.get("posture", {"kp": 50.0, "kd": 14.0, "weight": 1.0})
        tasks.append(posture_task(model, state, q0, p["kp"], p["kd"], p["weight"], layout,
                                  joint_weights=p.get("joint_weights")))
        if model.floating:
            bt = cfg.get("base", {"kp": 100.0, "kd": 20.0, "weight": 10.0})
            tasks.append(base_task(model, state, bt["kp"], bt["kd"], bt["weight"], layout, refs["base"],
                                   refs["base_orientation"]))
        tasks.append(regularization_task(layout, float(cfg.get("regularization", 1e-6))))
        appr = cfg.get("approach", {})
        for frame, sname in sc.impacting.items():
            n = sc.world.surface(sname).normal
            if phase == "Impact" and frame in refs["touched"]:
                w = float(cfg.get("force", {}).get("weight", 1e-2))
                tasks.append(contact_force_task(layout, frame, n, refs["push"], w))
            elif phase == "Impact":
                v = -n * float(appr.get("speed", 0.3))
                tasks.append(end_effector_velocity_task(model, state, frame, v, float(appr.get("gain", 40.0)),
                                                        float(appr.get("weight", 100.0)), layout))
            elif phase == "Admittance":
                w = float(cfg.get("force", {}).get("weight", 1e-2))
                tasks.append(contact_force_task(layout, frame, n, refs["force"][frame], w))
            elif phase == "Detach":
                v = n * float(cfg.get("detach", {}).get("speed", 0.1))
                tasks.append(end_effector_velocity_task(model, state, frame, v, float(appr.get("gain", 40.0)),
                                                        float(appr.get("weight", 100.0)), layout))
            elif phase in ("Start", "Reset"):
                tasks.append(end_effector_position_task(model, state, frame, refs["hands"][frame], 50.0, 14.0,
                                                        float(appr.get("weight", 100.0)) * 0.1, layout))
        return tasks

    return build


def run_closed_loop(sc: Scenario, mode: str | None = None, tol: float = 1e-3, out_dir=None) -> RunLog:
    """Simulate the Start → Impact → Admittance → Detach → Reset experiment.

    The controller runs every ``settings.dt`` and its accelerations and forces
    are held (zero-order hold) over the integration substeps; a floating-base
    robot receives inverse-dynamics torques recomputed every substep.
    """
    mode = mode or sc.mode
    model, world = sc.model, sc.world
    s = replace(sc.settings, normals=dict(sc.settings.normals))
    state = sc.initial.copy()
    start_wall = _time.perf_counter()
    fsm_doc = sc.fsm
    fsm = PhaseMachine(float(fsm_doc.get("threshold", 20.0)), float(fsm_doc.get("setpoint", 15.0)),
                       float(fsm_doc.get("gain", 5.0)))
    durations = {"Start": float(fsm_doc.get("start", 0.05)), "Admittance": float(fsm_doc.get("admittance", 0.3)),
                 "Detach": float(fsm_doc.get("detach", 0.2)), "Reset": float(fsm_doc.get("reset", 0.2))}
    established = list(sc.established)
    normals = s.normals
    refs = {
        "posture": state.q[model.actuated_q].copy(),
        "base": state.q[:3].copy() if model.floating else None,
        "base_orientation": state.q[3:7].copy() if model.floating else None,
        "force": {f: fsm.setpoint for f in sc.impacting},
        "hands": {f: frame_position(model, state, f) for f in sc.impacting},
        "touched": set(),
        "push": float(fsm_doc.get("push", 1.25 * fsm.threshold)),
    }
    log_ = RunLog(sc.name, mode, reference_speed=float(sc.tasks.get("approach", {}).get("speed", 0.3)))
    frames = list(model.frames)
    n_sub = int(round(s.dt / world.h))
    forces_meas: dict = {}
    t = 0.0
    impacted: set = set()
    slack_streak = 0
    pending_events = []

    while t < sc.duration - 1e-12:
        if _time.perf_counter() - start_wall > sc.budget:
            raise BudgetExceeded(f"scenario {sc.name} exceeded its {sc.budget:.0f} s budget")
        phase = fsm.phase
        if phase == "Start" and fsm.elapsed(t) >= durations["Start"]:
            fsm.advance("Impact", t)
        elif phase == "Admittance" and fsm.elapsed(t) >= durations["Admittance"]:
            fsm.advance("Detach", t)
            established = [f for f in established if f not in sc.impacting]
        elif phase == "Detach" and fsm.elapsed(t) >= durations["Detach"]:
            fsm.advance("Reset", t)
            refs["hands"] = {f: frame_position(model, state, f) for f in sc.impacting}
        elif phase == "Reset" and fsm.elapsed(t) >= durations["Reset"]:
            break
        phase = fsm.phase

        waiting = {f: sn for f, sn in sc.impacting.items() if f not in impacted}
        impacting_now = tuple(waiting) if phase == "Impact" else ()
        near = any(world.surface(sn).distance(frame_position(model, state, f)) <= sc.activation_distance
                   for f, sn in waiting.items())
        aware = mode == "aware" and phase == "Impact" and near
        if aware and log_.activation_time is None:
            log_.activation_time = t
        free = tuple(f for f in model.frames if f not in established and f not in impacting_now)
        partition = EndEffectorPartition(tuple(established), impacting_now, free)
        tasks = _tasks_for(sc, model, state, phase, refs)
        measured = None
        if aware and s.zmp_polygon is not None:
            measured = np.zeros(6)
            for f, force in forces_meas.items():
                measured += wrench_map([frame_position(model, state, f)], s.zmp_polygon.origin) @ force
        try:
            out = controller_step(model, state, partition, s, tasks, aware=aware, previous_forces=forces_meas,
                                  measured_wrench=measured)
        except ControllerInfeasible as exc:
            log_.status = "infeasible"
            log_.message = f"t={t:.3f}s phase={phase}: {exc}"
            break
        if out.fallback:
            log_.fallbacks.append((t, out.slack))
            slack_streak = slack_streak + 1 if out.slack > 1e-9 else 0
        else:
            slack_streak = 0
        log_.rows.append(_row(sc, model, state, t, phase, out, forces_meas, frames))

        for _ in range(n_sub):
            if model.floating:
                tau = np.zeros(model.nv)
                tau[model.actuated] = inverse_dynamics(model, state, out.qdd, out.forces)[model.actuated]
                nxt, forces, _ = step(world, model, state, tuple(established), tau=tau)
            else:
                nxt, forces, _ = step(world, model, state, tuple(established), qdd=out.qdd)
            hits = detect_impact(world, model, state, nxt, {f: sn for f, sn in waiting.items()}) \
                if phase == "Impact" else []
            if hits:
                frac = hits[0][2]
                h = world.h
                if model.floating:
                    mid, forces_mid, _ = step(world, model, state, tuple(established), tau=tau, h=frac * h)
                else:
                    mid, forces_mid, _ = step(world, model, state, tuple(established), qdd=out.qdd, h=frac * h)
                hitting = {f: sn for f, sn, _, _ in hits}
                res = resolve_impact(world, model, mid, tuple(established), hitting,
                                     next(iter(s.impact_configs.values())).impact_duration, t + frac * h)
                checks, actual = _post_impact_checks(sc, model, mid, res, forces_mid or forces_meas, tol)
                predicted = {k: v for k, v in out.jumps.items()}
                for ev, (_, _, _, speed) in zip(res.events, hits):
                    log_.events.append(EventRecord(ev, out.aware, checks, predicted, actual, speed))
                impacted.update(hitting)
                established.extend(hitting)
                for f, sn in hitting.items():
                    normals[f] = world.surface(sn).normal
                waiting = {f: sn for f, sn in waiting.items() if f not in hitting}
                rest = (1.0 - frac) * h
                if model.floating:
                    tau = np.zeros(model.nv)
                    tau[model.actuated] = inverse_dynamics(model, res.state, out.qdd, out.forces)[model.actuated]
                    nxt, forces, _ = step(world, model, res.state, tuple(established), tau=tau, h=rest)
                else:
                    nxt, forces, _ = step(world, model, res.state, tuple(established), qdd=out.qdd, h=rest)
                pending_events.extend(res.events)
            state = nxt
            forces_meas = forces
            for f in waiting:
                v = point_jacobian(model, state, f) @ state.qd
                log_.max_approach_speed = max(log_.max_approach_speed, float(-world.surface(waiting[f]).normal @ v))
        t = round(t + s.dt, 12)

        if fsm.phase == "Impact" and impacted:
            refs["touched"] = set(impacted)
            normal_force = max([float(ev.normal @ ev.force_jump) for ev in pending_events]
                               + [float(normals[f] @ forces_meas[f]) for f in impacted if f in forces_meas])
            pending_events = []
            if fsm.contact_detected(normal_force) and not waiting:
                fsm.advance("Admittance", t)
        if fsm.phase == "Admittance":
            for f in sc.impacting:
                if f in forces_meas:
                    fn = float(normals[f] @ forces_meas[f])
                    refs["force"][f] += fsm.gain * s.dt * (fsm.setpoint - fn)

    log_.phases = list(fsm.history)
    log_.wall_time = _time.perf_counter() - start_wall
    if out_dir is not None:
        write_run(log_, out_dir)
    return log_


def _row(sc, model, state, t, phase, out, forces_meas, frames):
    c, cd = com(model, state)
    row = {"time": t, "phase": phase, "status": out.solution.status, "aware": int(out.aware),
           "fallback": int(out.fallback), "slack": out.slack}
    for f, sn in sc.impacting.items():
        surf = sc.world.surface(sn)
        row[f"{f}.distance"] = surf.distance(frame_position(model, state, f))
        row[f"{f}.approach_speed"] = float(-surf.normal @ (point_jacobian(model, state, f) @ state.qd))
    for k in range(3):
        row[f"com.{k}"] = c[k]
        row[f"com_vel.{k}"] = cd[k]
    for k, v in enumerate(out.qdd):
        row[f"qdd.{k}"] = v
    for f in frames:
        cmd = out.forces.get(f, np.zeros(3))
        meas = forces_meas.get(f, np.zeros(3))
        for k in range(3):
            row[f"force_cmd.{f}.{k}"] = cmd[k]
            row[f"force_meas.{f}.{k}"] = meas[k]
    jv = out.jumps.get("joint_velocity", np.zeros(model.nv))
    for k, v in enumerate(jv):
        row[f"pred_joint_velocity_jump.{k}"] = v
    gamma = out.jumps.get("impulsive_torque", np.zeros(model.nv))[model.actuated] \
        if "impulsive_torque" in out.jumps else np.zeros(model.n_actuated)
    for k, v in enumerate(gamma):
        row[f"pred_impulsive_torque.{k}"] = v
    for k, v in enumerate(state.q):
        row[f"q.{k}"] = v
    for k, v in enumerate(state.qd):
        row[f"qd.{k}"] = v
    return row


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_run(run: RunLog, out_dir) -> dict:
    """Write ``<scenario>_<mode>_steps.csv`` and ``<scenario>_<mode>_events.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps = out / f"{run.scenario}_{run.mode}_steps.csv"
    events = out / f"{run.scenario}_{run.mode}_events.csv"
    columns = list(run.rows[0]) if run.rows else ["time"]
    with open(steps, "w", newline="") as fh:
        fh.write(f"# impactqp-csv schema={CSV_SCHEMA} kind=steps scenario={run.scenario} mode={run.mode}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in run.rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])
    with open(events, "w", newline="") as fh:
        fh.write(f"# impactqp-csv schema={CSV_SCHEMA} kind=events scenario={run.scenario} mode={run.mode}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "frame", "surface", "aware", "approach_speed", "pre_normal_velocity",
                    "post_normal_velocity", "restitution_error", "impulse_x", "impulse_y", "impulse_z",
                    "force_jump_normal", "check", "index", "value", "lower", "upper", "ok"])
        for rec in run.events:
            ev = rec.event
            head = [_fmt(ev.time), ev.frame, ev.surface, int(rec.aware), _fmt(rec.approach_speed),
                    _fmt(float(ev.normal @ ev.pre_velocity)), _fmt(float(ev.normal @ ev.post_velocity)),
                    _fmt(ev.restitution_error), *[_fmt(float(x)) for x in ev.impulse],
                    _fmt(float(ev.normal @ ev.force_jump))]
            for c in rec.checks:
                w.writerow(head + [c.quantity, c.index, _fmt(c.value), _fmt(c.lower), _fmt(c.upper), int(c.ok)])
            if not rec.checks:
                w.writerow(head + ["", "", "", "", "", 1])
    return {"steps": steps, "events": events}
