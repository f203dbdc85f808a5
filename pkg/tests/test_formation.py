"""Formation-law claims:
    - every law is stationary at a realization of the desired bearings
    - the single-integrator stabilization flow equals the localization
      protocol under the anchors/leaders renaming, state for state
    - PI tracking removes the constant-velocity error that the plain law
      plateaus at; the velocity-feedback closure is a fixed point of the
      literal law and its aggregate signal decays exactly like e^{-kp t}
    - double-integrator laws stabilize and track, and bounded acceleration
      errors keep the tracking error bounded
    - unicycle outputs are the body-frame split of the position-law field
    - bearing-only laws: bounded inputs, invariant centroid/scale, circular
      two-agent motion, exact gradients of their objectives, shrinking scale
      for the descent law, and an unstable reversed equilibrium
"""

import numpy as np
import pytest

import bearingnet as bn
from bearingnet.errors import CollocationError, InputError, SingularProjectionSumError
from bearingnet.formation import solve_acceleration_feedback, solve_velocity_feedback
from bearingnet.sim import SimConfig

import nets
from oracles import central_difference_gradient

RNG = np.random.default_rng(55)


def perturbed(p, scale, rng=RNG):
    return p + scale * rng.standard_normal(p.shape)


# -- shared fixtures -----------------------------------------------------------


def square_tf(leaders=()):
    return nets.square_target(leaders=leaders)


# -- stationarity at the target -------------------------------------------------


def test_all_laws_stationary_at_target():
    tf, p = square_tf(leaders=(0, 1))
    gains = bn.Gains()
    assert np.abs(bn.si_stabilization_field(tf, p)).max() <= 1e-12
    vel, _ = bn.si_pi_field(tf, p, np.zeros((2, 2)), gains)
    assert np.abs(vel).max() <= 1e-12
    assert np.abs(bn.si_velocity_feedback_field(tf, p, np.zeros((4, 2)), gains)).max() <= 1e-12
    assert np.abs(bn.di_field(tf, p, np.zeros((4, 2)), gains)).max() <= 1e-12
    assert (
        np.abs(
            bn.di_acceleration_feedback_field(tf, p, np.zeros((4, 2)), np.zeros((4, 2)), gains)
        ).max()
        <= 1e-12
    )

    tf0, p0 = square_tf()
    v, w = bn.unicycle_field(tf0, p0, RNG.uniform(-np.pi, np.pi, 4))
    assert np.abs(v).max() <= 1e-12 and np.abs(w).max() <= 1e-12
    assert np.abs(bn.bearing_only_field(tf0, p0)).max() <= 1e-12
    assert np.abs(bn.bearing_gradient_field(tf0, p0)).max() <= 1e-12
    assert np.abs(bn.bearing_only_descent_field(tf0, p0)).max() <= 1e-12


def test_velocity_feedback_equal_velocities_consistent():
    tf, p = square_tf(leaders=(0, 1))
    common = np.array([0.4, -0.2])
    v = np.tile(common, (4, 1))
    out = bn.si_velocity_feedback_field(tf, p, v, bn.Gains())
    assert np.allclose(out, np.tile(common, (2, 1)), atol=1e-10)


# -- equivalence with the localization protocol ---------------------------------


def test_si_flow_equals_localization_protocol():
    tf, p_star = square_tf(leaders=(0, 1))
    net = bn.Network(tf.graph, 2, p_star)
    an = bn.anchored_network(net, tf.leaders, measured_bearings=tf.bearings)
    for _ in range(10):
        p = perturbed(p_star, 0.5)
        p[:2] = p_star[:2]
        assert np.allclose(
            bn.si_stabilization_field(tf, p),
            bn.localization_protocol_field(an, p),
            atol=1e-12,
        )


def test_si_converges_for_localizable_target():
    tf, p_star = square_tf(leaders=(0, 1))
    p0 = perturbed(p_star, 0.4)
    p0[:2] = p_star[:2]
    run = bn.simulate_formation(tf, p0, "si", cfg=SimConfig(dt=1e-3, T=20.0, record_every=200))
    assert run.trajectory.metric("bearing_error")[-1] <= 1e-6


# -- PI law ----------------------------------------------------------------------


def test_pi_tracks_constant_velocity_where_plain_law_plateaus():
    tf, p_star = square_tf(leaders=(0, 1))
    p0 = perturbed(p_star, 0.2, np.random.default_rng(1))
    p0[:2] = p_star[:2]
    motion = bn.LeaderMotion.constant([0.2, 0.1])
    cfg = SimConfig(dt=2e-3, T=60.0, record_every=500)
    pi_run = bn.simulate_formation(
        tf, p0, "si-pi", cfg=cfg, gains=bn.Gains(k_p=2.0, k_I=1.0), leader_motion=motion
    )
    plain_run = bn.simulate_formation(tf, p0, "si", cfg=cfg, leader_motion=motion)
    assert pi_run.trajectory.metric("bearing_error")[-1] < 1e-6
    plain_err = plain_run.trajectory.metric("bearing_error")
    assert plain_err[-1] > 1e-3
    # Plateau: the error barely changes over the last stretch.
    assert abs(plain_err[-1] - plain_err[-5]) <= 1e-6 * plain_err[-1]


# -- velocity feedback ------------------------------------------------------------


def test_velocity_feedback_closure_is_fixed_point():
    tf, p_star = square_tf(leaders=(0, 1))
    gains = bn.Gains(k_p=1.7)
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = perturbed(p_star, 0.5, rng)
        v_l = rng.standard_normal((2, 2))
        v_f = solve_velocity_feedback(tf, p, v_l, gains)
        full = np.vstack([v_l, v_f])
        again = bn.si_velocity_feedback_field(tf, p, full, gains)
        assert np.allclose(again, v_f, atol=1e-9)


def test_velocity_feedback_epsilon_decay():
    tf, p_star = square_tf(leaders=(0, 1))
    p0 = perturbed(p_star, 0.3, np.random.default_rng(2))
    p0[:2] = p_star[:2]
    motion = bn.LeaderMotion.sinusoidal([0.2, 0.1], [1.0, 2.0], [0.0, 0.5])
    run = bn.simulate_formation(
        tf,
        p0,
        "si-vel",
        cfg=SimConfig(dt=1e-3, T=5.0, record_every=100),
        gains=bn.Gains(k_p=1.0),
        leader_motion=motion,
    )
    eps = run.trajectory.metric("eps_norm")
    t = run.trajectory.times
    rel = np.abs(eps / eps[0] - np.exp(-t)) / np.exp(-t)
    assert rel.max() <= 1e-6


def test_velocity_feedback_singular_neighborhood():
    # Follower 1 sees both desired bearings along the same line.
    g = bn.build_graph(3, [(0, 1), (1, 2)])
    bearings = np.array([[1.0, 0.0], [1.0, 0.0]])
    tf = bn.TargetFormation(g, 2, bearings, leaders=(0, 2))
    p = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(SingularProjectionSumError) as err:
        bn.si_velocity_feedback_field(tf, p, np.zeros((3, 2)), bn.Gains())
    assert err.value.follower == 1


# -- double integrators ------------------------------------------------------------


def test_di_stationary_leaders_stabilize():
    tf, p_star = nets.cube_target(leaders=(0, 1))
    rng = np.random.default_rng(9)
    p0 = perturbed(p_star, 0.3, rng)
    p0[:2] = p_star[:2]
    run = bn.simulate_formation(
        tf,
        p0,
        "di",
        cfg=SimConfig(dt=2e-3, T=60.0, record_every=500),
        gains=bn.Gains(k_p=2.0, k_v=2.5),
    )
    assert run.trajectory.metric("bearing_error")[-1] < 1e-6


def test_di_acc_closure_fixed_point_and_tracking():
    tf, p_star = nets.cube_target(leaders=(0, 1))
    gains = bn.Gains(k_p=1.0, k_v=1.0)
    rng = np.random.default_rng(3)
    p = perturbed(p_star, 0.4, rng)
    v = rng.standard_normal((8, 3))
    a_l = rng.standard_normal((2, 3))
    a_f = solve_acceleration_feedback(tf, p, v, a_l, gains)
    full = np.vstack([a_l, a_f])
    again = bn.di_acceleration_feedback_field(tf, p, v, full, gains)
    assert np.allclose(again, a_f, atol=1e-9)

    p0 = perturbed(p_star, 0.3, rng)
    p0[:2] = p_star[:2]
    motion = bn.LeaderMotion.sinusoidal([0.2, 0.15, 0.1], [1.0, 1.5, 0.7], [0.0, 0.4, 1.0])
    run = bn.simulate_formation(
        tf,
        p0,
        "di-acc",
        cfg=SimConfig(dt=2e-3, T=40.0, record_every=500),
        gains=gains,
        leader_motion=motion,
    )
    assert run.trajectory.metric("bearing_error")[-1] < 1e-4


def test_di_acc_bounded_acceleration_error_bounded_tracking():
    # Feed the followers a biased leader acceleration: the closed loop stays
    # bounded instead of diverging.
    tf, p_star = nets.cube_target(leaders=(0, 1))
    gains = bn.Gains(k_p=1.0, k_v=1.0)
    motion = bn.LeaderMotion.sinusoidal([0.2, 0.15, 0.1], [1.0, 1.5, 0.7], [0.0, 0.4, 1.0])
    bias = np.array([0.05, -0.03, 0.02])
    n, d = 8, 3
    followers = list(tf.followers)
    leaders = list(tf.leaders)

    def field(t, x):
        p = x[: n * d].reshape(n, d)
        v = x[n * d :].reshape(n, d)
        a_l = np.tile(motion.acceleration_at(t, d) + bias, (len(leaders), 1))
        dv = np.zeros((n, d))
        dv[followers] = solve_acceleration_feedback(tf, p, v, a_l, gains)
        dv[leaders] = motion.acceleration_at(t, d)
        return np.concatenate([v.ravel(), dv.ravel()])

    v0 = np.zeros((n, d))
    v0[leaders] = motion.velocity_at(0.0, d)
    x0 = np.concatenate([p_star.ravel(), v0.ravel()])
    traj = bn.integrate(field, x0, SimConfig(dt=2e-3, T=20.0, record_every=500))
    for state in traj.states:
        p = state[: n * d].reshape(n, d)
        err = bn.formation_metrics(tf, p).bearing_error
        assert np.isfinite(err) and err < 2.0


# -- unicycles ---------------------------------------------------------------------


def test_unicycle_body_frame_identity():
    tf, p_star = square_tf()
    rng = np.random.default_rng(4)
    from bearingnet.formation import _TargetBlocks

    blocks = _TargetBlocks(tf)
    for _ in range(10):
        p = perturbed(p_star, 0.5, rng)
        theta = rng.uniform(-np.pi, np.pi, 4)
        v, w = bn.unicycle_field(tf, p, theta)
        s = -(blocks.L @ p.ravel()).reshape(4, 2)
        assert np.allclose(v**2 + w**2, np.sum(s**2, axis=1), atol=1e-10)


def test_unicycle_requires_plane_and_no_leaders():
    tf, _ = nets.cube_target()
    with pytest.raises(InputError):
        bn.unicycle_field(tf, nets.CUBE, np.zeros(8))
    tf2, p2 = square_tf(leaders=(0,))
    with pytest.raises(InputError):
        bn.unicycle_field(tf2, p2, np.zeros(4))


def test_unicycle_converges_to_target_bearings_up_to_sign():
    tf, p_star = square_tf()
    rng = np.random.default_rng(12)
    p0 = perturbed(p_star, 0.3, rng)
    theta0 = rng.uniform(-np.pi, np.pi, 4)
    run = bn.simulate_formation(
        tf, p0, "unicycle", cfg=SimConfig(dt=1e-3, T=60.0, record_every=1000), theta0=theta0
    )
    p_end = run.positions[-1]
    tails, heads = np.array(tf.graph.edges).T
    e = p_end[heads] - p_end[tails]
    g = e / np.linalg.norm(e, axis=1)[:, None]
    mismatch = np.minimum(
        np.linalg.norm(g - tf.bearings, axis=1), np.linalg.norm(g + tf.bearings, axis=1)
    )
    assert mismatch.max() <= 1e-4
    assert np.all(np.abs(run.headings[-1]) <= np.pi + 1e-12)


# -- bearing-only laws --------------------------------------------------------------


def test_bearing_only_input_bound():
    tf, p_star = square_tf()
    degrees = [len(tf.graph.neighbors(i)) for i in range(4)]
    rng = np.random.default_rng(6)
    for _ in range(20):
        p = rng.random((4, 2)) * 3.0
        field = bn.bearing_only_field(tf, p)
        for i in range(4):
            assert np.linalg.norm(field[i]) <= degrees[i] + 1e-12


def test_two_agents_move_on_circle_about_midpoint():
    g = bn.build_graph(2, [(0, 1)])
    tf = bn.TargetFormation(g, 2, np.array([[1.0, 0.0]]))
    p0 = np.array([[0.0, -1.0], [0.0, 1.0]])  # vertical: bearings off by 90 deg
    run = bn.simulate_formation(tf, p0, "bearing-only", cfg=SimConfig(dt=1e-3, T=20.0, record_every=100))
    mid = p0.mean(axis=0)
    for p in run.positions:
        assert np.allclose(p.mean(axis=0), mid, atol=1e-9)
        radii = np.linalg.norm(p - mid, axis=1)
        assert np.allclose(radii, 1.0, atol=1e-7)
    assert run.trajectory.metric("phi1")[-1] <= 1e-9


def test_centroid_and_scale_invariant_under_bearing_only():
    tf, p_star = nets.cube_target()
    rng = np.random.default_rng(14)
    p0 = perturbed(p_star, 0.4, rng)
    run = bn.simulate_formation(tf, p0, "bearing-only", cfg=SimConfig(dt=2e-3, T=10.0, record_every=100))
    scale = run.trajectory.metric("scale")
    assert np.abs(scale - scale[0]).max() <= 1e-8
    for ax in "xyz":
        c = run.trajectory.metric(f"centroid_{ax}")
        assert np.abs(c - c[0]).max() <= 1e-10


def test_gradient_laws_match_central_differences():
    tf, _ = square_tf()
    rng = np.random.default_rng(21)
    for _ in range(20):
        p = rng.random((4, 2)) * 2.0 + 0.1

        def f1(x):
            return bn.phi1(tf, x.reshape(4, 2))

        def f2(x):
            return bn.phi2(tf, x.reshape(4, 2))

        g14 = bn.bearing_gradient_field(tf, p).ravel()
        g15 = bn.bearing_only_descent_field(tf, p).ravel()
        fd1 = central_difference_gradient(f1, p.ravel())
        fd2 = central_difference_gradient(f2, p.ravel())
        assert np.abs(g14 + fd1).max() <= 1e-5 * max(1.0, np.abs(fd1).max())
        assert np.abs(g15 + fd2).max() <= 1e-5 * max(1.0, np.abs(fd2).max())


def test_gradient_law_edgewise_ratio():
    g = bn.build_graph(2, [(0, 1)])
    tf = bn.TargetFormation(g, 2, np.array([[0.0, 1.0]]))
    rng = np.random.default_rng(33)
    for _ in range(10):
        p = rng.random((2, 2)) * 4.0
        length = np.linalg.norm(p[1] - p[0])
        assert np.allclose(
            bn.bearing_gradient_field(tf, p),
            bn.bearing_only_field(tf, p) / length,
            atol=1e-12,
        )


def test_descent_law_shrinks_scale():
    tf, p_star = square_tf()
    rng = np.random.default_rng(8)
    p0 = perturbed(p_star, 0.5, rng)
    run = bn.simulate_formation(tf, p0, "bearing-descent", cfg=SimConfig(dt=1e-3, T=10.0, record_every=50))
    scale = run.trajectory.metric("scale")
    assert np.all(np.diff(scale) <= 1e-10)
    assert scale[-1] < scale[0]


def test_phi_examples_and_identity():
    tf, p_star = square_tf()
    assert bn.phi1(tf, p_star) == pytest.approx(0.0, abs=1e-12)
    assert bn.phi2(tf, p_star) == pytest.approx(0.0, abs=1e-12)

    g = bn.build_graph(2, [(0, 1)])
    tf1 = bn.TargetFormation(g, 2, np.array([[-1.0, 0.0]]))
    p = np.array([[0.0, 0.0], [2.0, 0.0]])  # bearing (1, 0) = -g*, length 2
    assert bn.phi1(tf1, p) == pytest.approx(2.0)
    # Length-weighted objective, ordered-pair normalization: |e| (1 - g.g*).
    assert bn.phi2(tf1, p) == pytest.approx(4.0)

    rng = np.random.default_rng(44)
    for _ in range(50):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        assert 0.5 * np.sum((a - b) ** 2) == pytest.approx(1.0 - a @ b, abs=1e-12)


def test_phi_collocation_error():
    g = bn.build_graph(2, [(0, 1)])
    tf = bn.TargetFormation(g, 2, np.array([[1.0, 0.0]]))
    with pytest.raises(CollocationError):
        bn.phi1(tf, np.zeros((2, 2)))


def test_reversed_equilibrium_is_stationary_but_unstable():
    tf, p_star = square_tf()
    centroid = p_star.mean(axis=0)
    reversed_p = 2.0 * centroid - p_star  # all bearings flipped
    assert np.abs(bn.bearing_only_field(tf, reversed_p)).max() <= 1e-12
    phi_max = bn.phi1(tf, reversed_p)
    rng = np.random.default_rng(10)
    p0 = reversed_p + 1e-3 * rng.standard_normal(p_star.shape)
    run = bn.simulate_formation(tf, p0, "bearing-only", cfg=SimConfig(dt=1e-3, T=40.0, record_every=400))
    phi = run.trajectory.metric("phi1")
    assert phi[-1] < 1e-6  # escaped toward the desired equilibrium
    assert phi[0] > 0.99 * phi_max


def test_formation_metrics_examples():
    tf, p_star = square_tf()
    m = bn.formation_metrics(tf, p_star)
    assert m.bearing_error == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(m.centroid, [0.5, 0.5])
    # Unit square corners: every node sits sqrt(2)/2 from the centroid.
    assert m.scale == pytest.approx(np.sqrt(2.0) / 2.0)

    collocated = bn.formation_metrics(tf, np.zeros((4, 2)))
    assert collocated.scale == pytest.approx(0.0)
    assert np.isnan(collocated.bearing_error)


def test_simulate_law_leader_validation():
    tf, p = square_tf()
    with pytest.raises(InputError):
        bn.simulate_formation(tf, p, "si")  # needs leaders
    tf_l, p_l = square_tf(leaders=(0,))
    with pytest.raises(InputError):
        bn.simulate_formation(tf_l, p_l, "bearing-only")  # must not have leaders
    with pytest.raises(InputError):
        bn.simulate_formation(tf, p, "warp-drive")
