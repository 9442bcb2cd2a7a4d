import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impactqp import robots, toy
from impactqp.impact import (
    DegenerateZmpError,
    EndEffectorPartition,
    ImpactConfig,
    ImpactError,
    ImpulseConditioningError,
    JumpDecomposition,
    all_predictions,
    build_distribution,
    impacting_velocity_jump_map,
    predict_angular_momentum_jump,
    predict_com_velocity_jump,
    predict_ee_velocity_jumps,
    predict_force_jumps,
    predict_impulsive_torques,
    predict_joint_velocity_jump,
    predict_wrench_jump,
    predict_zmp_jump,
    restitution_jump,
    wrench_map,
    zmp,
)
from impactqp.model import RobotState, point_jacobian

from oracles import impulse_case, lstsq_min_norm, normal_equations_min_norm, ref_zmp, unit

Y = np.array([0.0, 1.0, 0.0])


def slider_case(qd=0.3, restitution=0.02):
    model = robots.slider(2.0)
    state = RobotState(np.zeros(1), np.array([qd]))
    part = EndEffectorPartition(impacting=("ee",))
    cfg = {"ee": ImpactConfig(-Y, restitution)}
    return model, state, part, cfg


# -- restitution -------------------------------------------------------------------


def test_restitution_jump_examples():
    cfg = ImpactConfig(Y, 0.02)
    assert np.allclose(restitution_jump(cfg, [0, 0.3, 0]), [0, -0.306, 0], atol=1e-15)
    assert np.allclose(restitution_jump(cfg, [0.4, 0, -1.0]), 0.0)
    assert np.allclose(restitution_jump(ImpactConfig(Y, 0.0), 0.7 * Y), -0.7 * Y)


@given(st.floats(0, 1), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_restitution_jump_has_no_tangential_part(cr, v):
    n = np.array([0.6, 0.0, 0.8])
    jump = restitution_jump(ImpactConfig(n, cr), v)
    assert np.allclose(jump - (n @ jump) * n, 0.0, atol=1e-12)


@pytest.mark.parametrize("kwargs", [dict(normal=[0, 0, 2.0]), dict(normal=Y, restitution=-0.1),
                                    dict(normal=Y, impact_duration=0.0), dict(normal=Y, control_period=-1)])
def test_impact_config_rejects_bad_values(kwargs):
    with pytest.raises(ImpactError):
        ImpactConfig(**kwargs)


def test_partition_rejects_overlap_and_empty_impacting():
    with pytest.raises(ImpactError):
        EndEffectorPartition(("a",), ("a",))
    model, state, _, cfg = slider_case()
    with pytest.raises(ImpactError):
        build_distribution(model, state, EndEffectorPartition(free=("ee",)), cfg)
    with pytest.raises(ImpactError):
        impacting_velocity_jump_map(model, state, ("ee",), {})


# -- velocity-jump map and toy arm ---------------------------------------------------


def test_toy_velocity_map_at_zero_acceleration():
    model, state = toy.toy_state()
    vm = impacting_velocity_jump_map(model, state, ("tip",), {"tip": ImpactConfig(Y, 0.02)})
    assert np.allclose(vm.evaluate(np.zeros(2), state.qd), [0, -0.306, 0], atol=1e-12)


def test_toy_joint_velocity_jump():
    model, state = toy.toy_state()
    assert np.allclose(state.qd, [0.6, -0.6], atol=1e-12)
    dist = build_distribution(model, state, EndEffectorPartition(impacting=("tip",)),
                              {"tip": ImpactConfig(Y, 0.02)})
    dq = predict_joint_velocity_jump(dist).evaluate(np.zeros(2), state.qd)
    assert np.allclose(dq, [-0.612, 0.612], atol=1e-12)


def test_point_mass_velocity_map_is_the_projector():
    model, state, part, cfg = slider_case()
    model = robots.free_body()
    state = RobotState(model.neutral(), np.zeros(6))
    vm = impacting_velocity_jump_map(model, state, ("center",), {"center": cfg["ee"]})
    J = point_jacobian(model, state, "center")
    assert np.allclose(vm.J, cfg["ee"].projector @ J)


# -- 1-DoF slider --------------------------------------------------------------------


def test_slider_distribution_chain():
    model, state, part, cfg = slider_case()
    dist = build_distribution(model, state, part, cfg)
    sol = dist.solve(np.zeros(1), state.qd)
    assert sol.joint_velocity_jump == pytest.approx([-0.306], abs=1e-12)
    assert sol.impulses["ee"] == pytest.approx(2.0 * np.array([0, -0.306, 0]), abs=1e-12)
    f = predict_force_jumps(dist).evaluate(np.zeros(1), state.qd)
    assert f[1] == pytest.approx(-122.4, abs=1e-9)
    assert predict_impulsive_torques(dist).evaluate(np.zeros(1), state.qd) == pytest.approx([-122.4], abs=1e-9)


def test_zero_target_gives_zero_solution():
    model, state, part, cfg = slider_case(qd=0.0)
    dist = build_distribution(model, state, part, cfg)
    sol = dist.solve(np.zeros(1), state.qd)
    assert np.all(sol.joint_velocity_jump == 0) and np.all(sol.impulses["ee"] == 0)


def test_force_jump_opposes_approach():
    model, state = toy.toy_state()
    dist = build_distribution(model, state, EndEffectorPartition(impacting=("tip",)),
                              {"tip": ImpactConfig(-Y, 0.02)})
    f = predict_force_jumps(dist).evaluate(np.zeros(2), state.qd)
    assert f @ -Y > 0  # tip moves along +y into a wall whose normal is -y


# -- random instances ----------------------------------------------------------------


def _qualifying(n_cases=100, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_cases):
        model, state, part, cfg = impulse_case(rng, k)
        dist = build_distribution(model, state, part, cfg, strict=False)
        if dist.condition < 1e10:
            out.append((rng, model, state, part, cfg, dist))
    return out


QUALIFYING = _qualifying()


def test_random_instances_include_well_conditioned_ones():
    assert len(QUALIFYING) >= 15


@pytest.mark.parametrize("case", range(len(QUALIFYING)))
def test_exactness_and_min_norm(case):
    rng, model, state, part, cfg, dist = QUALIFYING[case]
    B = dist.B
    t = rng.normal(size=dist.K_dq.shape[1])
    b = np.zeros(B.shape[0])
    b[-len(t):] = t
    u = np.concatenate([dist.K_dq @ t, dist.K_iota @ t])
    assert np.linalg.norm(B @ u - b) <= 1e-8 * (1 + np.linalg.norm(b))
    for oracle in (lstsq_min_norm, normal_equations_min_norm):
        ref = oracle(B, b)
        assert np.linalg.norm(u - ref) <= 1e-7 * np.linalg.norm(ref)
    # any other solution is longer
    null = np.linalg.svd(B)[2][dist.rank:]
    other = u + null.T @ rng.normal(size=len(null))
    assert np.linalg.norm(u) <= np.linalg.norm(other) + 1e-8


@pytest.mark.parametrize("case", range(0, len(QUALIFYING), 3))
def test_impacting_members_reach_restitution_target(case):
    _, model, state, part, cfg, dist = QUALIFYING[case]
    qdd = np.random.default_rng(case).normal(size=model.nv)
    ee = predict_ee_velocity_jumps(dist).evaluate(qdd, state.qd)
    target = dist.velocity_map.evaluate(qdd, state.qd)
    k0 = 3 * len(part.established)
    assert np.allclose(ee[k0:k0 + len(target)], target, atol=1e-8 * (1 + np.abs(target).max()))
    assert np.isfinite(ee).all()


def test_strict_mode_reports_singular_target():
    model = robots.arm3()
    q = np.array([0.0, 0.0, 0.0])  # fully stretched: the tool cannot move along the arm axis
    state = RobotState(q, np.array([0.0, 0.0, 0.5]))
    part = EndEffectorPartition(impacting=("tool",))
    with pytest.raises(ImpulseConditioningError) as exc:
        build_distribution(model, state, part, {"tool": ImpactConfig([1.0, 0, 0], 0.1)})
    assert exc.value.singular_values.size


# -- identities ----------------------------------------------------------------------


def test_kinematic_reduction_identity():
    rng = np.random.default_rng(3)
    model = robots.arm3()
    for _ in range(50):
        q = rng.uniform(-1.2, 1.2, 3)
        q[2] = rng.uniform(0.3, 2.5)
        state = RobotState(q, rng.uniform(-1, 1, 3))
        cfg = ImpactConfig(unit(rng), float(rng.uniform(0, 1)))
        dist = build_distribution(model, state, EndEffectorPartition(impacting=("tool",)), {"tool": cfg})
        J = point_jacobian(model, state, "tool")
        lhs = dist.K_dq @ cfg.projector @ J
        rhs = np.linalg.solve(J, cfg.projector @ J)
        assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(rhs).max())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_decompositions_are_linear(seed):
    rng = np.random.default_rng(seed)
    model, state, part, cfg = impulse_case(rng, seed)
    dist = build_distribution(model, state, part, cfg, strict=False)
    a, b = rng.normal(size=model.nv), rng.normal(size=model.nv)
    qd1, qd2 = rng.normal(size=model.nv), rng.normal(size=model.nv)
    for d in all_predictions(dist, origin=np.zeros(3)).values():
        assert np.allclose(d.evaluate(np.zeros(model.nv), np.zeros(model.nv)), 0.0)
        both = d.evaluate(a + 2 * b, qd1 - qd2)
        assert np.allclose(both, d.evaluate(a, qd1) + 2 * d.evaluate(b, np.zeros(model.nv))
                           - d.evaluate(np.zeros(model.nv), qd2), atol=1e-8 * (1 + np.abs(both).max()))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 0.45))
def test_jumps_scale_with_one_plus_restitution(seed, cr):
    rng = np.random.default_rng(seed)
    model, state, part, cfg = impulse_case(rng, seed)
    one = {k: ImpactConfig(c.normal, cr) for k, c in cfg.items()}
    two = {k: ImpactConfig(c.normal, 2 * (1 + cr) - 1) for k, c in cfg.items()}
    d1 = all_predictions(build_distribution(model, state, part, one, strict=False))
    d2 = all_predictions(build_distribution(model, state, part, two, strict=False))
    for key in d1:
        scale = 1 + np.abs(d1[key].J).max() + np.abs(d1[key].C).max()
        assert np.allclose(d2[key].J, 2 * d1[key].J, atol=1e-9 * scale)
        assert np.allclose(d2[key].C, 2 * d1[key].C, atol=1e-9 * scale)


@pytest.mark.parametrize("seed", range(10))
def test_two_path_impulsive_torque(seed):
    rng = np.random.default_rng(100 + seed)
    model, state, part, cfg = impulse_case(rng, seed)
    dist = build_distribution(model, state, part, cfg, strict=False)
    qdd = rng.normal(size=model.nv)
    sol = dist.solve(qdd, state.qd)
    via_impulse = sum(point_jacobian(model, state, n).T @ sol.impulses[n] for n in part.contacts)
    via_force = predict_impulsive_torques(dist).evaluate(qdd, state.qd) * dist.impact_duration
    assert np.allclose(via_impulse, via_force, atol=1e-10 * (1 + np.abs(via_force).max()))


def test_toy_two_path_torque():
    model, state = toy.toy_state()
    dist = build_distribution(model, state, EndEffectorPartition(impacting=("tip",)),
                              {"tip": ImpactConfig(Y, 0.02)})
    f = predict_force_jumps(dist).evaluate(np.zeros(2), state.qd)
    J = point_jacobian(model, state, "tip")
    assert np.allclose(predict_impulsive_torques(dist).evaluate(np.zeros(2), state.qd), J.T @ f, atol=1e-10)


# -- centroidal predictors -----------------------------------------------------------


def test_free_body_com_jump_follows_newton():
    model = robots.free_body(mass=3.0)
    state = RobotState(model.neutral(), np.array([0.2, -0.1, -0.5, 0, 0, 0]))
    n = np.array([0.0, 0.0, 1.0])
    dist = build_distribution(model, state, EndEffectorPartition(impacting=("center",)),
                              {"center": ImpactConfig(n, 0.3)})
    sol = dist.solve(np.zeros(6), state.qd)
    iota = sol.impulses["center"]
    dcom = predict_com_velocity_jump(dist).evaluate(np.zeros(6), state.qd)
    assert np.allclose(dcom, iota[:2] / 3.0, atol=1e-12)
    assert iota @ n == pytest.approx(3.0 * 1.3 * 0.5 * (1 + 0.0), rel=1e-9)
    assert np.allclose(predict_angular_momentum_jump(dist).evaluate(np.zeros(6), state.qd), 0, atol=1e-12)


def test_centroidal_predictors_need_floating_base():
    model, state = toy.toy_state()
    dist = build_distribution(model, state, EndEffectorPartition(impacting=("tip",)),
                              {"tip": ImpactConfig(Y, 0.02)})
    with pytest.raises(ImpactError):
        predict_angular_momentum_jump(dist)
    with pytest.raises(ImpactError):
        predict_com_velocity_jump(dist)


# -- wrench and ZMP ------------------------------------------------------------------


def test_wrench_map_examples():
    G = wrench_map([[1.0, 0, 0]], np.zeros(3))
    assert np.allclose(G @ [0, 0, 10.0], [0, 0, 10, 0, -10, 0])
    assert np.allclose(wrench_map([[0.3, 0.2, 0.1]], [0.3, 0.2, 0.1])[3:], 0)
    two = wrench_map([[0, 0.1, 0], [0, -0.1, 0]], np.zeros(3)) @ np.r_[1.0, 2, 3, -1, -2, -3]
    assert np.allclose(two[:3], 0)


def test_zmp_jump_example_and_errors():
    W = np.array([0, 0, 50.0, 0, 0, 0])
    dW = np.array([0, 0, 0, 5.0, -10.0, 0])
    assert np.allclose(predict_zmp_jump(W, dW, [0, 0, 1]), [0.2, 0.1, 0.0])
    assert np.allclose(predict_zmp_jump(W, np.zeros(6), [0, 0, 1]), 0)
    with pytest.raises(DegenerateZmpError):
        predict_zmp_jump(W, np.r_[0, 0, -50 + 1e-9, 0, 0, 0], [0, 0, 1])
    with pytest.raises(DegenerateZmpError):
        zmp(np.zeros(6), [0, 0, 1])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_zmp_matches_moment_balance(seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=3)
    f[2] = abs(f[2]) + 0.5
    W = np.r_[f, rng.normal(size=3)]
    o = rng.normal(size=3)
    assert np.allclose(zmp(W, [0, 0, 1], o)[:2], ref_zmp(W, [0, 0, 1], o)[:2], atol=1e-9)


def test_zmp_jump_is_zmp_difference_with_fixed_denominator():
    rng = np.random.default_rng(7)
    for _ in range(20):
        W = np.r_[rng.normal(size=2), 40 + rng.uniform(0, 10), rng.normal(size=3)]
        dW = np.r_[np.zeros(3), rng.normal(size=3)]
        dz = predict_zmp_jump(W, dW, [0, 0, 1])
        assert np.allclose(dz, zmp(W + dW, [0, 0, 1]) - zmp(W, [0, 0, 1]), atol=1e-12)


def test_wrench_jump_torque_rows_vanish_at_single_contact_origin():
    model = robots.free_body()
    state = RobotState(model.neutral(), np.array([0.1, 0, -0.4, 0, 0, 0]))
    dist = build_distribution(model, state, EndEffectorPartition(impacting=("corner",)),
                              {"corner": ImpactConfig([0, 0, 1.0], 0.1)})
    origin = dist.positions["corner"]
    dW = predict_wrench_jump(dist, origin).evaluate(np.zeros(6), state.qd)
    assert np.allclose(dW[3:], 0, atol=1e-12) and dW[2] > 0


def test_jump_decomposition_helpers():
    d = JumpDecomposition("x", np.eye(2), 2 * np.eye(2), 0.5)
    assert np.allclose(d.evaluate([1, 1], [1, 0]), [2.5, 0.5])
    assert np.allclose(d.zeroed().evaluate([3, 4], [5, 6]), 0)
    assert d.mapped(np.ones((1, 2))).rows == 1
