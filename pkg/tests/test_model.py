import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impactqp import robots
from impactqp.model import (
    EndEffectorFrame,
    Joint,
    Link,
    ModelError,
    RobotModel,
    RobotState,
    bias_forces,
    centroidal_momentum_matrix,
    com,
    forward_kinematics,
    frame_position,
    integrate,
    jacobian_derivative,
    kinetic_energy,
    load_model,
    mass_matrix,
    model_from_dict,
    model_to_dict,
    point_jacobian,
    potential_energy,
    save_model,
)

TOY_Q = [0.0, 0.2 * np.pi]


def random_case(seed, floating=None):
    rng = np.random.default_rng(seed)
    if floating is None:
        floating = bool(rng.integers(2))
    model = robots.random_model(rng, int(rng.integers(2, 8)), floating=floating)
    return model, robots.random_state(rng, model)


def fd_body_jacobians(model, q, h=1e-6):
    """Finite-difference COM and angular Jacobians of every link (oracle)."""
    links0, _ = forward_kinematics(model, q)
    c0 = [T[:3, :3] @ l.com + T[:3, 3] for T, l in zip(links0, model.links)]
    Jv = [np.zeros((3, model.nv)) for _ in model.links]
    Jw = [np.zeros((3, model.nv)) for _ in model.links]
    for k in range(model.nv):
        e = np.zeros(model.nv)
        e[k] = 1.0
        qp, qm = integrate(model, q, e, h), integrate(model, q, e, -h)
        lp, _ = forward_kinematics(model, qp)
        lm, _ = forward_kinematics(model, qm)
        for i, link in enumerate(model.links):
            cp = lp[i][:3, :3] @ link.com + lp[i][:3, 3]
            cm = lm[i][:3, :3] @ link.com + lm[i][:3, 3]
            Jv[i][:, k] = (cp - cm) / (2 * h)
            W = (lp[i][:3, :3] - lm[i][:3, :3]) / (2 * h) @ links0[i][:3, :3].T
            Jw[i][:, k] = [W[2, 1], W[0, 2], W[1, 0]]
    return c0, Jv, Jw


# -- forward kinematics ------------------------------------------------------


def test_planar_tip_position():
    model = robots.planar_2r()
    p = frame_position(model, RobotState(TOY_Q, [0, 0]), "tip")
    assert np.allclose(p, [0.9045085, 0.2938926, 0.0], atol=1e-7)


def test_zero_configuration_composes_fixed_transforms():
    model = robots.arm3()
    links, frames = forward_kinematics(model, np.zeros(3))
    expected = model.joints[0].origin @ model.joints[1].origin @ model.joints[2].origin @ model.frames["tool"].transform
    assert np.allclose(frames["tool"], expected)
    assert np.allclose(links[2], model.joints[0].origin @ model.joints[1].origin @ model.joints[2].origin)


def test_free_body_translation():
    model = robots.free_body()
    q = model.neutral()
    q[:3] = [1, 2, 3]
    links, _ = forward_kinematics(model, q)
    assert np.allclose(links[0][:3, 3], [1, 2, 3])


def test_dimension_mismatch_raises():
    model = robots.planar_2r()
    with pytest.raises(ModelError):
        forward_kinematics(model, np.zeros(3))
    with pytest.raises(ModelError):
        point_jacobian(model, RobotState([0, 0], [0]), "tip")


def test_unnormalized_quaternion_rejected():
    model = robots.free_body()
    with pytest.raises(ModelError):
        mass_matrix(model, RobotState([0, 0, 0, 1.1, 0, 0, 0], np.zeros(6)))


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_rotations_orthonormal(seed):
    model, state = random_case(seed)
    links, frames = forward_kinematics(model, state.q)
    for T in [*links, *frames.values()]:
        R = T[:3, :3]
        assert np.abs(R @ R.T - np.eye(3)).max() < 1e-10
        assert abs(np.linalg.det(R) - 1) < 1e-10


# -- Jacobians ---------------------------------------------------------------


def test_planar_jacobian_and_inverse_velocity():
    model = robots.planar_2r()
    J = point_jacobian(model, RobotState(TOY_Q, [0, 0]), "tip")
    assert np.allclose(J[:2], [[-0.2938926, -0.2938926], [0.9045085, 0.4045085]], atol=1e-7)
    qd = np.linalg.solve(J[:2], [0.0, 0.3])
    assert np.allclose(qd, [0.6, -0.6], atol=1e-9)


def test_planar_jacobian_derivative():
    model = robots.planar_2r()
    Jd = jacobian_derivative(model, RobotState(TOY_Q, [0.6, -0.6]), "tip")
    assert np.allclose(Jd @ [0.6, -0.6], [-0.18, 0.0, 0.0], atol=1e-12)
    assert np.allclose(jacobian_derivative(model, RobotState(TOY_Q, [0, 0]), "tip"), 0)


def test_prismatic_frame_velocity():
    model = robots.slider(axis=(0, 0, 1))
    J = point_jacobian(model, RobotState([0.2], [1.5]), "ee")
    assert np.allclose(J @ [1.5], [0, 0, 1.5])


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_jacobian_matches_finite_difference_of_position(seed):
    model, state = random_case(seed)
    h = 1e-6
    for name in model.frames:
        J = point_jacobian(model, state, name)
        p_plus = frame_position(model, RobotState(integrate(model, state.q, state.qd, h), state.qd), name)
        p_minus = frame_position(model, RobotState(integrate(model, state.q, state.qd, -h), state.qd), name)
        assert np.allclose(J @ state.qd, (p_plus - p_minus) / (2 * h), atol=1e-6)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_jacobian_derivative_is_first_order_accurate(seed):
    model, state = random_case(seed)
    h = 1e-6
    q_next = integrate(model, state.q, state.qd, h)
    for name in model.frames:
        Jd = jacobian_derivative(model, state, name)
        fd = (point_jacobian(model, RobotState(q_next, state.qd), name) - point_jacobian(model, state, name)) / h
        assert np.abs(Jd - fd).max() < 1e-4


# -- mass matrix and bias forces --------------------------------------------


def test_pendulum_mass_matrix_and_gravity():
    m, l, i = 1.5, 0.8, 1e-6
    model = robots.pendulum(m, l, i)
    M = mass_matrix(model, RobotState([0.3], [0.0]))
    assert np.allclose(M, [[m * l * l + i]], atol=1e-12)
    assert np.allclose(bias_forces(model, RobotState([0.0], [0.0])), 0, atol=1e-12)
    # Rotating +pi/2 about y swings the bob from -z to -x.
    N = bias_forces(model, RobotState([np.pi / 2], [0.0]))
    assert np.allclose(abs(N), [m * 9.81 * l], atol=1e-9)


def test_planar_mass_matrix_matches_lagrangian_closed_form():
    model = robots.planar_2r(l1=0.5, l2=0.5, m1=1.3, m2=0.7)
    (m1, m2), (I1, I2) = [l.mass for l in model.links], [l.inertia[2, 2] for l in model.links]
    l1, lc1, lc2 = 0.5, 0.25, 0.25
    for q2 in np.linspace(-2.5, 2.5, 7):
        M = mass_matrix(model, RobotState([0.4, q2], [0, 0]))
        c = np.cos(q2)
        m11 = I1 + I2 + m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * c)
        m12 = I2 + m2 * (lc2**2 + l1 * lc2 * c)
        m22 = I2 + m2 * lc2**2
        assert np.allclose(M, [[m11, m12], [m12, m22]], atol=1e-10)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_mass_matrix_matches_body_jacobian_sum(seed):
    model, state = random_case(seed)
    links, _ = forward_kinematics(model, state.q)
    _, Jv, Jw = fd_body_jacobians(model, state.q)
    oracle = np.zeros((model.nv, model.nv))
    for i, link in enumerate(model.links):
        R = links[i][:3, :3]
        oracle += link.mass * Jv[i].T @ Jv[i] + Jw[i].T @ (R @ link.inertia @ R.T) @ Jw[i]
    M = mass_matrix(model, state)
    assert np.abs(M - M.T).max() < 1e-12
    np.linalg.cholesky(M)
    assert np.allclose(M, oracle, atol=1e-6)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_bias_forces_balance_power(seed):
    # With tau = 0, d/dt (T + V) must vanish along q̈ = -M⁻¹N.
    model, state = random_case(seed)

    def energy(q, qd):
        s = RobotState(q, qd)
        return kinetic_energy(model, s) + potential_energy(model, s)

    qdd = -np.linalg.solve(mass_matrix(model, state), bias_forces(model, state))
    h = 1e-5
    ep = energy(integrate(model, state.q, state.qd, h), state.qd + qdd * h)
    em = energy(integrate(model, state.q, state.qd, -h), state.qd - qdd * h)
    scale = 1 + abs(energy(state.q, state.qd))
    assert abs(ep - em) / (2 * h) < 1e-4 * scale


def test_fixed_base_bias_forces_match_lagrange_equations():
    rng = np.random.default_rng(3)
    model = robots.random_model(rng, 4, floating=False)
    state = robots.random_state(rng, model)
    h = 1e-6

    def M_at(q):
        return mass_matrix(model, RobotState(q, state.qd))

    def lagrangian_grad(q):
        s = RobotState(q, state.qd)
        return 0.5 * state.qd @ mass_matrix(model, s) @ state.qd - potential_energy(model, s)

    Mdot = (M_at(state.q + h * state.qd) - M_at(state.q - h * state.qd)) / (2 * h)
    dL = np.array([(lagrangian_grad(state.q + h * e) - lagrangian_grad(state.q - h * e)) / (2 * h)
                   for e in np.eye(model.nv)])
    assert np.allclose(bias_forces(model, state), Mdot @ state.qd - dL, atol=1e-5)


# -- centroidal quantities ---------------------------------------------------


def test_free_body_translating_momentum():
    model = robots.free_body(mass=3.0)
    A = centroidal_momentum_matrix(model, RobotState(model.neutral(), [1, 0, 0, 0, 0, 0]))
    assert np.allclose(A @ [1, 0, 0, 0, 0, 0], [0, 0, 0, 3, 0, 0])


def test_com_of_symmetric_two_body_and_single_body():
    link = Link("a", 2.0, np.array([0.5, 0, 0]), np.eye(3) * 0.01)
    other = Link("b", 2.0, np.array([0.5, 0, 0]), np.eye(3) * 0.01)
    model = RobotModel([link, other], [Joint("j0", "revolute", -1, np.array([0, 0, 1.0]), np.eye(4)),
                                        Joint("j1", "revolute", 0, np.array([0, 0, 1.0]), np.eye(4))])
    c, _ = com(model, RobotState([0.0, np.pi], [0, 0]))
    assert np.allclose(c, 0, atol=1e-12)
    body = robots.free_body()
    q = body.neutral()
    q[:3] = [0.3, -1, 2]
    assert np.allclose(com(body, RobotState(q, np.zeros(6)))[0], [0.3, -1, 2])


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_com_and_momentum_oracles(seed):
    model, state = random_case(seed)
    links, _ = forward_kinematics(model, state.q)
    c0, Jv, Jw = fd_body_jacobians(model, state.q)
    masses = np.array([l.mass for l in model.links])
    c_direct = sum(m * ci for m, ci in zip(masses, c0)) / masses.sum()
    c, cd = com(model, state)
    assert np.allclose(c, c_direct, atol=1e-12)

    A = centroidal_momentum_matrix(model, state)
    h = 1e-6
    cp, _ = com(model, RobotState(integrate(model, state.q, state.qd, h), state.qd))
    cm, _ = com(model, RobotState(integrate(model, state.q, state.qd, -h), state.qd))
    assert np.allclose(A[3:] @ state.qd, model.total_mass * (cp - cm) / (2 * h), atol=1e-6)
    assert np.allclose(A[3:] @ state.qd, model.total_mass * cd, atol=1e-9)

    k = np.zeros(3)
    for i, link in enumerate(model.links):
        R = links[i][:3, :3]
        k += R @ link.inertia @ R.T @ Jw[i] @ state.qd + link.mass * np.cross(c0[i] - c, Jv[i] @ state.qd)
    assert np.allclose(A[:3] @ state.qd, k, atol=1e-6)


# -- descriptions ------------------------------------------------------------


def test_json_round_trip(tmp_path):
    model = robots.humanoid()
    path = tmp_path / "h.json"
    save_model(model, path)
    again = load_model(path)
    q = robots.humanoid_stance(model)
    s = RobotState(q, np.linspace(-1, 1, model.nv))
    assert np.allclose(mass_matrix(model, s), mass_matrix(again, s))
    assert again.frames["r_hand"].role == "impacting"


def test_json_joint_order_is_free():
    doc = model_to_dict(robots.arm3())
    doc["joints"].reverse()
    model = model_from_dict(doc)
    assert [j.name for j in model.joints] == ["yaw", "shoulder", "elbow"]


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["links"][0].__setitem__("mass", 0.0),
        lambda d: d["links"][1].__setitem__("inertia", [1, 0, 0, -1, 0, 1]),
        lambda d: d["joints"][1].__setitem__("axis", [0, 0, 2]),
        lambda d: d["joints"][1].__setitem__("parent", "nowhere"),
        lambda d: d["joints"][1].__setitem__("kind", "free"),
        lambda d: d["end_effectors"][0].__setitem__("role", "sliding"),
        lambda d: d.pop("links"),
    ],
)
def test_invalid_descriptions_rejected(mutate):
    doc = model_to_dict(robots.arm3())
    mutate(doc)
    with pytest.raises(ModelError):
        model_from_dict(doc)


def test_frame_on_missing_body_rejected():
    with pytest.raises(ModelError):
        robots.pendulum().with_frames([EndEffectorFrame("x", 4)])
