"""Bearing-constrained formation control laws and objectives.

Seven control-law families over a bearing-specified target formation:
single-integrator stabilization, PI and velocity-feedback maneuvering,
double-integrator tracking with and without acceleration feedback, unicycles,
and the three bearing-only laws with their scalar objectives.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CollocationError, InputError, SingularProjectionSumError
from .graph import Graph
from .rigidity import EPS_DIST, TAU_RANK, Network, laplacian_from_bearings, unit_bearings
from .sim import SimConfig, Trajectory, integrate

LAWS = (
    "si",
    "si-pi",
    "si-vel",
    "di",
    "di-acc",
    "unicycle",
    "bearing-only",
    "bearing-gradient",
    "bearing-descent",
)
_LEADER_LAWS = ("si", "si-pi", "si-vel", "di", "di-acc")


@dataclass(frozen=True)
class TargetFormation:
    """Desired unit bearings per canonical edge, plus an optional leader set."""

    graph: Graph
    d: int
    bearings: np.ndarray  # (m, d), bearing of edge (i, j) with i < j
    leaders: tuple[int, ...] = ()

    def __post_init__(self):
        g = np.asarray(self.bearings, dtype=float)
        if g.shape != (self.graph.m, self.d):
            raise InputError(f"expected ({self.graph.m}, {self.d}) bearings, got {g.shape}")
        norms = np.linalg.norm(g, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise InputError("desired bearings must be unit vectors (tolerance 1e-6)")
        object.__setattr__(self, "bearings", g / norms[:, None])
        leaders = tuple(sorted(set(int(i) for i in self.leaders)))
        for i in leaders:
            if not (0 <= i < self.graph.n):
                raise InputError(f"leader {i} out of range")
        object.__setattr__(self, "leaders", leaders)

    @property
    def followers(self) -> tuple[int, ...]:
        lset = set(self.leaders)
        return tuple(i for i in range(self.graph.n) if i not in lset)


def target_from_configuration(graph: Graph, p, leaders=()) -> TargetFormation:
    """Read the desired bearings off a realizing configuration."""
    p = np.asarray(p, dtype=float)
    net = Network(graph, p.shape[1], p)
    return TargetFormation(graph, net.d, unit_bearings(net), tuple(leaders))


@dataclass(frozen=True)
class Gains:
    k_p: float = 1.0
    k_I: float = 1.0
    k_v: float = 1.0

    def __post_init__(self):
        if min(self.k_p, self.k_I, self.k_v) <= 0:
            raise InputError("control gains must be strictly positive")


@dataclass(frozen=True)
class LeaderMotion:
    """Prescribed leader trajectory: stationary, constant-velocity, or
    sinusoidal-velocity (per-axis amplitude, angular frequency, phase)."""

    kind: str = "none"  # none | const | sine
    velocity: np.ndarray | None = None
    amplitude: np.ndarray | None = None
    frequency: np.ndarray | None = None
    phase: np.ndarray | None = None

    @staticmethod
    def stationary() -> "LeaderMotion":
        return LeaderMotion("none")

    @staticmethod
    def constant(velocity) -> "LeaderMotion":
        return LeaderMotion("const", velocity=np.asarray(velocity, dtype=float))

    @staticmethod
    def sinusoidal(amplitude, frequency, phase=0.0) -> "LeaderMotion":
        amplitude = np.atleast_1d(np.asarray(amplitude, dtype=float))
        frequency = np.broadcast_to(np.asarray(frequency, dtype=float), amplitude.shape).copy()
        phase = np.broadcast_to(np.asarray(phase, dtype=float), amplitude.shape).copy()
        if np.any(frequency <= 0):
            raise InputError("sinusoidal motion needs positive frequencies")
        return LeaderMotion("sine", amplitude=amplitude, frequency=frequency, phase=phase)

    def _check_dim(self, d: int):
        ref = {"none": None, "const": self.velocity, "sine": self.amplitude}[self.kind]
        if ref is not None and ref.shape != (d,):
            raise InputError(f"leader motion is {ref.shape[0]}-dimensional, network is {d}-dimensional")

    def velocity_at(self, t: float, d: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(d)
        if self.kind == "const":
            return self.velocity
        return self.amplitude * np.sin(self.frequency * t + self.phase)

    def displacement_at(self, t: float, d: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(d)
        if self.kind == "const":
            return self.velocity * t
        return (self.amplitude / self.frequency) * (
            np.cos(self.phase) - np.cos(self.frequency * t + self.phase)
        )

    def acceleration_at(self, t: float, d: int) -> np.ndarray:
        if self.kind in ("none", "const"):
            return np.zeros(d)
        return self.amplitude * self.frequency * np.cos(self.frequency * t + self.phase)


# -- shared machinery ---------------------------------------------------------


def _edge_endpoints(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    if graph.m == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    tails, heads = np.array(graph.edges).T
    return tails, heads


def _current_bearings(p: np.ndarray, tails, heads, edges):
    e = p[heads] - p[tails]
    lengths = np.linalg.norm(e, axis=1)
    bad = np.flatnonzero(lengths <= EPS_DIST)
    if bad.size:
        i, j = edges[bad[0]]
        raise CollocationError(f"agents {i} and {j} are collocated")
    return e / lengths[:, None], lengths


class _TargetBlocks:
    """Cached bearing Laplacian of the target, partitioned leader/follower."""

    def __init__(self, tf: TargetFormation):
        self.tf = tf
        d = tf.d
        self.L = laplacian_from_bearings(tf.graph, d, tf.bearings)
        self.followers = tf.followers
        self.leaders = tf.leaders
        f = np.array(self.followers, dtype=int)
        l = np.array(self.leaders, dtype=int)
        self.f_idx = (d * f[:, None] + np.arange(d)).ravel() if f.size else np.zeros(0, dtype=int)
        self.l_idx = (d * l[:, None] + np.arange(d)).ravel() if l.size else np.zeros(0, dtype=int)
        self.L_ff = self.L[np.ix_(self.f_idx, self.f_idx)]
        self.L_fl = self.L[np.ix_(self.f_idx, self.l_idx)]
        self._cho = None

    def eta(self, p: np.ndarray) -> np.ndarray:
        """Per-follower aggregate sum_j P*_ij (p_i - p_j), shape (n_f, d)."""
        return (self.L @ p.ravel())[self.f_idx].reshape(-1, self.tf.d)

    def zeta(self, v: np.ndarray) -> np.ndarray:
        return (self.L @ v.ravel())[self.f_idx].reshape(-1, self.tf.d)

    def diag_block(self, i: int) -> np.ndarray:
        d = self.tf.d
        return self.L[d * i : d * i + d, d * i : d * i + d]

    def solve_ff(self, rhs: np.ndarray) -> np.ndarray:
        if self._cho is None:
            try:
                self._cho = scipy.linalg.cho_factor(self.L_ff)
            except scipy.linalg.LinAlgError:
                self._raise_singular()
        return scipy.linalg.cho_solve(self._cho, rhs.ravel()).reshape(-1, self.tf.d)

    def _raise_singular(self):
        for i in self.followers:
            K = self.diag_block(i)
            svals = np.linalg.svd(K, compute_uv=False)
            if svals[0] == 0 or svals[-1] <= TAU_RANK * svals[0]:
                raise SingularProjectionSumError(i)
        raise SingularProjectionSumError(self.followers[0] if self.followers else -1)


def _inv_diag_block(blocks: _TargetBlocks, i: int) -> np.ndarray:
    K = blocks.diag_block(i)
    svals = np.linalg.svd(K, compute_uv=False)
    if svals[0] == 0 or svals[-1] <= TAU_RANK * svals[0]:
        raise SingularProjectionSumError(i)
    return np.linalg.inv(K)


def _as_config(tf: TargetFormation, p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(tf.graph.n, tf.d)
    return p


# -- control-law fields (single evaluations) ----------------------------------


def si_stabilization_field(tf: TargetFormation, p) -> np.ndarray:
    """Follower velocities -sum_j P*_ij (p_i - p_j) for stationary leaders."""
    p = _as_config(tf, p)
    return -_TargetBlocks(tf).eta(p)


def si_pi_field(tf: TargetFormation, p, xi, gains: Gains) -> tuple[np.ndarray, np.ndarray]:
    """Proportional-integral law for constant-velocity leaders.

    xi_i accumulates sum_j P*_ij (p_i - p_j); returns (follower velocities,
    xi derivatives). Velocities are -(k_p eta + k_I xi): negative integral
    feedback, which is what makes constant-velocity tracking stable.
    """
    p = _as_config(tf, p)
    blocks = _TargetBlocks(tf)
    eta = blocks.eta(p)
    xi = np.asarray(xi, dtype=float).reshape(eta.shape)
    return -(gains.k_p * eta + gains.k_I * xi), eta


def si_velocity_feedback_field(tf: TargetFormation, p, velocities, gains: Gains) -> np.ndarray:
    """Velocity-feedback law: -K_i^{-1} sum_j P*_ij [k_p (p_i - p_j) - v_j],
    evaluated at the supplied neighbor velocities."""
    p = _as_config(tf, p)
    v = np.asarray(velocities, dtype=float).reshape(p.shape)
    blocks = _TargetBlocks(tf)
    edge_proj = _edge_projectors(tf)
    out = np.zeros((len(tf.followers), tf.d))
    for row, i in enumerate(tf.followers):
        Kinv = _inv_diag_block(blocks, i)
        s = np.zeros(tf.d)
        for j, P in edge_proj[i]:
            s += P @ (gains.k_p * (p[i] - p[j]) - v[j])
        out[row] = -Kinv @ s
    return out


def solve_velocity_feedback(tf: TargetFormation, p, leader_velocities, gains: Gains) -> np.ndarray:
    """Consistent follower velocities of the velocity-feedback law, from the
    linear system L_ff v_f = -k_p eta - L_fl v_l."""
    p = _as_config(tf, p)
    blocks = _TargetBlocks(tf)
    v_l = np.asarray(leader_velocities, dtype=float).reshape(len(tf.leaders), tf.d)
    rhs = -(gains.k_p * blocks.eta(p)).ravel() - blocks.L_fl @ v_l.ravel()
    return blocks.solve_ff(rhs)


def di_field(tf: TargetFormation, p, v, gains: Gains) -> np.ndarray:
    """Follower accelerations -sum_j P*_ij [k_p (p_i - p_j) + k_v (v_i - v_j)]."""
    p = _as_config(tf, p)
    v = np.asarray(v, dtype=float).reshape(p.shape)
    blocks = _TargetBlocks(tf)
    return -(gains.k_p * blocks.eta(p) + gains.k_v * blocks.zeta(v))


def di_acceleration_feedback_field(tf: TargetFormation, p, v, accelerations, gains: Gains) -> np.ndarray:
    """Acceleration-feedback law K_i^{-1} sum_j P*_ij [-k_p (p_i - p_j)
    - k_v (v_i - v_j) + a_j] at the supplied neighbor accelerations."""
    p = _as_config(tf, p)
    v = np.asarray(v, dtype=float).reshape(p.shape)
    a = np.asarray(accelerations, dtype=float).reshape(p.shape)
    blocks = _TargetBlocks(tf)
    edge_proj = _edge_projectors(tf)
    out = np.zeros((len(tf.followers), tf.d))
    for row, i in enumerate(tf.followers):
        Kinv = _inv_diag_block(blocks, i)
        s = np.zeros(tf.d)
        for j, P in edge_proj[i]:
            s += P @ (-gains.k_p * (p[i] - p[j]) - gains.k_v * (v[i] - v[j]) + a[j])
        out[row] = Kinv @ s
    return out


def solve_acceleration_feedback(tf: TargetFormation, p, v, leader_accelerations, gains: Gains) -> np.ndarray:
    """Consistent follower accelerations: L_ff a_f = -k_p eta - k_v zeta - L_fl a_l."""
    p = _as_config(tf, p)
    v = np.asarray(v, dtype=float).reshape(p.shape)
    blocks = _TargetBlocks(tf)
    a_l = np.asarray(leader_accelerations, dtype=float).reshape(len(tf.leaders), tf.d)
    rhs = -(gains.k_p * blocks.eta(p) + gains.k_v * blocks.zeta(v)).ravel() - blocks.L_fl @ a_l.ravel()
    return blocks.solve_ff(rhs)


def _edge_projectors(tf: TargetFormation) -> dict[int, list]:
    """Per node: list of (neighbor, P at the desired bearing toward it)."""
    out: dict[int, list] = {i: [] for i in range(tf.graph.n)}
    for k, (i, j) in enumerate(tf.graph.edges):
        P = np.eye(tf.d) - np.outer(tf.bearings[k], tf.bearings[k])
        out[i].append((j, P))
        out[j].append((i, P))
    return out


def unicycle_field(tf: TargetFormation, p, theta) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent forward and angular speed: the body-frame decomposition of
    s_i = sum_j P*_ij (p_j - p_i). Planar and leaderless only."""
    if tf.d != 2:
        raise InputError("the unicycle law is planar (d = 2)")
    if tf.leaders:
        raise InputError("the unicycle law takes no leaders")
    p = _as_config(tf, p)
    theta = np.asarray(theta, dtype=float).reshape(tf.graph.n)
    blocks = _TargetBlocks(tf)
    s = -(blocks.L @ p.ravel()).reshape(tf.graph.n, 2)
    c, sn = np.cos(theta), np.sin(theta)
    v = c * s[:, 0] + sn * s[:, 1]
    w = -sn * s[:, 0] + c * s[:, 1]
    return v, w


def _bearing_only_terms(tf: TargetFormation, p):
    tails, heads = _edge_endpoints(tf.graph)
    g, lengths = _current_bearings(p, tails, heads, tf.graph.edges)
    return tails, heads, g, lengths


def bearing_only_field(tf: TargetFormation, p) -> np.ndarray:
    """Bearing-only law -sum_j P_{g_ij(t)} g*_ij: consumes current bearings
    only, never distances; per-agent speed is bounded by the degree."""
    if tf.leaders:
        raise InputError("bearing-only laws take no leaders")
    p = _as_config(tf, p)
    tails, heads, g, _ = _bearing_only_terms(tf, p)
    w = tf.bearings - g * np.sum(g * tf.bearings, axis=1)[:, None]
    out = np.zeros_like(p)
    np.add.at(out, tails, -w)
    np.add.at(out, heads, w)
    return out


def bearing_gradient_field(tf: TargetFormation, p) -> np.ndarray:
    """Gradient-descent law -sum_j P_{g_ij} g*_ij / |e_ij|: the bearing-only
    law with each edge term divided by the edge length."""
    if tf.leaders:
        raise InputError("bearing-only laws take no leaders")
    p = _as_config(tf, p)
    tails, heads, g, lengths = _bearing_only_terms(tf, p)
    w = (tf.bearings - g * np.sum(g * tf.bearings, axis=1)[:, None]) / lengths[:, None]
    out = np.zeros_like(p)
    np.add.at(out, tails, -w)
    np.add.at(out, heads, w)
    return out


def bearing_only_descent_field(tf: TargetFormation, p) -> np.ndarray:
    """Descent law sum_j (g_ij - g*_ij); shrinks the formation scale until the
    bearings match (or edges degenerate)."""
    if tf.leaders:
        raise InputError("bearing-only laws take no leaders")
    p = _as_config(tf, p)
    tails, heads, g, _ = _bearing_only_terms(tf, p)
    u = g - tf.bearings
    out = np.zeros_like(p)
    np.add.at(out, tails, u)
    np.add.at(out, heads, -u)
    return out


def phi1(tf: TargetFormation, p) -> float:
    """Bearing mismatch sum_edges (1 - g^T g*) = half the sum of |g - g*|^2;
    zero iff every bearing matches."""
    p = _as_config(tf, p)
    _, _, g, _ = _bearing_only_terms(tf, p)
    return float(np.sum(1.0 - np.sum(g * tf.bearings, axis=1)))


def phi2(tf: TargetFormation, p) -> float:
    """Length-weighted mismatch sum_edges |e| (1 - g^T g*); zero iff bearings
    match or edges degenerate. Its exact negative gradient is the descent law."""
    p = _as_config(tf, p)
    _, _, g, lengths = _bearing_only_terms(tf, p)
    return float(np.sum(lengths * (1.0 - np.sum(g * tf.bearings, axis=1))))


@dataclass(frozen=True)
class FormationMetrics:
    bearing_error: float  # sum over ordered neighbor pairs of |g - g*|
    centroid: np.ndarray
    scale: float  # root-mean-square distance from the centroid


def formation_metrics(tf: TargetFormation, p) -> FormationMetrics:
    """Centroid and scale always; bearing error is NaN on collocated edges."""
    p = _as_config(tf, p)
    centroid = p.mean(axis=0)
    scale = float(np.sqrt(np.mean(np.sum((p - centroid) ** 2, axis=1))))
    try:
        _, _, g, _ = _bearing_only_terms(tf, p)
        err = 2.0 * float(np.sum(np.linalg.norm(g - tf.bearings, axis=1)))
    except CollocationError:
        err = math.nan
    return FormationMetrics(err, centroid, scale)


# -- simulation ----------------------------------------------------------------


@dataclass
class FormationRun:
    tf: TargetFormation
    law: str
    trajectory: Trajectory

    @property
    def positions(self) -> np.ndarray:
        """(k, n, d) agent positions along the trajectory."""
        n, d = self.tf.graph.n, self.tf.d
        return self.trajectory.states[:, : n * d].reshape(-1, n, d)

    @property
    def velocities(self) -> np.ndarray:
        n, d = self.tf.graph.n, self.tf.d
        if self.law not in ("di", "di-acc"):
            raise InputError(f"law {self.law!r} has no velocity state")
        return self.trajectory.states[:, n * d : 2 * n * d].reshape(-1, n, d)

    @property
    def headings(self) -> np.ndarray:
        n = self.tf.graph.n
        if self.law != "unicycle":
            raise InputError(f"law {self.law!r} has no heading state")
        return self.trajectory.states[:, 2 * n :]


def _wrap_heading_state(dn: int):
    def project(x):
        theta = x[dn:]
        x[dn:] = -((-theta + np.pi) % (2.0 * np.pi) - np.pi)
        return x

    return project


def simulate_formation(
    tf: TargetFormation,
    p0,
    law: str,
    cfg: SimConfig = SimConfig(),
    gains: Gains = Gains(),
    leader_motion: LeaderMotion | None = None,
    v0=None,
    theta0=None,
) -> FormationRun:
    """Integrate one control law from the initial configuration p0.

    Leader positions are part of the state and follow the prescribed motion;
    laws "si" through "di-acc" require a nonempty leader set, the others
    require an empty one.
    """
    if law not in LAWS:
        raise InputError(f"unknown law {law!r}; expected one of {LAWS}")
    needs_leaders = law in _LEADER_LAWS
    if needs_leaders and not tf.leaders:
        raise InputError(f"law {law!r} requires at least one leader")
    if not needs_leaders and tf.leaders:
        raise InputError(f"law {law!r} takes no leaders")
    if law == "unicycle" and tf.d != 2:
        raise InputError("the unicycle law is planar (d = 2)")

    n, d = tf.graph.n, tf.d
    dn = n * d
    p0 = _as_config(tf, p0)
    blocks = _TargetBlocks(tf)
    motion = leader_motion if leader_motion is not None else LeaderMotion.stationary()
    motion._check_dim(d)
    followers = np.array(tf.followers, dtype=int)
    leaders = np.array(tf.leaders, dtype=int)
    n_f = followers.size
    tails, heads = _edge_endpoints(tf.graph)
    gstar = tf.bearings

    def leader_velocity(t):
        return motion.velocity_at(t, d)

    # State layout: agent positions first, law-specific extras after.
    project = None
    if law == "si":

        def field(t, x):
            p = x.reshape(n, d)
            dp = np.zeros((n, d))
            dp[followers] = -blocks.eta(p)
            dp[leaders] = leader_velocity(t)
            return dp.ravel()

        x0 = p0.ravel()
    elif law == "si-pi":

        def field(t, x):
            p = x[:dn].reshape(n, d)
            xi = x[dn:].reshape(n_f, d)
            eta = blocks.eta(p)
            dp = np.zeros((n, d))
            dp[followers] = -(gains.k_p * eta + gains.k_I * xi)
            dp[leaders] = leader_velocity(t)
            return np.concatenate([dp.ravel(), eta.ravel()])

        x0 = np.concatenate([p0.ravel(), np.zeros(n_f * d)])  # integral state starts at zero
    elif law == "si-vel":

        def field(t, x):
            p = x.reshape(n, d)
            v_l = np.broadcast_to(leader_velocity(t), (leaders.size, d))
            rhs = -(gains.k_p * blocks.eta(p)).ravel() - blocks.L_fl @ v_l.ravel()
            dp = np.zeros((n, d))
            dp[followers] = blocks.solve_ff(rhs)
            dp[leaders] = v_l
            return dp.ravel()

        x0 = p0.ravel()
    elif law in ("di", "di-acc"):
        v_init = np.zeros((n, d))
        if v0 is not None:
            v_init[followers] = np.asarray(v0, dtype=float).reshape(n_f, d)
        v_init[leaders] = motion.velocity_at(0.0, d)

        def field(t, x):
            p = x[:dn].reshape(n, d)
            v = x[dn:].reshape(n, d)
            dv = np.zeros((n, d))
            if law == "di":
                dv[followers] = -(gains.k_p * blocks.eta(p) + gains.k_v * blocks.zeta(v))
            else:
                a_l = np.broadcast_to(motion.acceleration_at(t, d), (leaders.size, d))
                rhs = -(gains.k_p * blocks.eta(p) + gains.k_v * blocks.zeta(v)).ravel()
                rhs = rhs - blocks.L_fl @ a_l.ravel()
                dv[followers] = blocks.solve_ff(rhs)
            dv[leaders] = motion.acceleration_at(t, d)
            return np.concatenate([v.ravel(), dv.ravel()])

        x0 = np.concatenate([p0.ravel(), v_init.ravel()])
    elif law == "unicycle":
        theta_init = np.zeros(n) if theta0 is None else np.asarray(theta0, dtype=float).reshape(n)

        def field(t, x):
            p = x[:dn].reshape(n, d)
            theta = x[dn:]
            s = -(blocks.L @ p.ravel()).reshape(n, 2)
            c, sn = np.cos(theta), np.sin(theta)
            v = c * s[:, 0] + sn * s[:, 1]
            w = -sn * s[:, 0] + c * s[:, 1]
            dp = np.stack([v * c, v * sn], axis=1)
            return np.concatenate([dp.ravel(), w])

        x0 = np.concatenate([p0.ravel(), theta_init])
        project = _wrap_heading_state(dn)
    else:  # bearing-only family
        law_fn = {
            "bearing-only": bearing_only_field,
            "bearing-gradient": bearing_gradient_field,
            "bearing-descent": bearing_only_descent_field,
        }[law]

        def field(t, x):
            return law_fn(tf, x.reshape(n, d)).ravel()

        x0 = p0.ravel()

    axes = "xyz"[:d] if d <= 3 else [str(i) for i in range(d)]

    def metrics(t, x):
        p = x[:dn].reshape(n, d)
        e = p[heads] - p[tails]
        lengths = np.linalg.norm(e, axis=1)
        if lengths.size == 0 or lengths.min() > EPS_DIST:
            g = e / lengths[:, None]
            dots = np.sum(g * gstar, axis=1)
            out = {"bearing_error": 2.0 * float(np.sum(np.linalg.norm(g - gstar, axis=1)))}
        else:
            dots = None
            out = {"bearing_error": math.nan}
        centroid = p.mean(axis=0)
        for i, ax in enumerate(axes):
            out[f"centroid_{ax}"] = float(centroid[i])
        out["scale"] = float(np.sqrt(np.mean(np.sum((p - centroid) ** 2, axis=1))))
        if dots is not None:
            out["phi1"] = float(np.sum(1.0 - dots))
            out["phi2"] = float(np.sum(lengths * (1.0 - dots)))
        else:
            out["phi1"] = math.nan
            out["phi2"] = math.nan
        if law == "si-vel":
            out["eps_norm"] = float(np.linalg.norm(blocks.eta(p)))
        return out

    traj = integrate(field, x0, cfg, metrics_fn=metrics, project=project)
    return FormationRun(tf, law, traj)
