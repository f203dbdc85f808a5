"""Bearing-based network localization.

Anchors know their positions; followers are recovered from inter-neighbor
bearings, either by a closed-form least-squares solve or by integrating the
distributed gradient protocol.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NotLocalizableError
from .graph import Graph
from .rigidity import (
    TAU_RANK,
    Network,
    laplacian_from_bearings,
    numerical_rank,
    unit_bearings,
)
from .sim import Event, SimConfig, Trajectory, integrate, random_configuration

BEARING_NORM_TOL = 1e-6  # supplied bearings must be unit within this tolerance


@dataclass(frozen=True)
class AnchoredNetwork:
    """Network plus anchor roles and the per-edge measured bearings.

    Bearings are stored for the canonical edge orientation (i < j); the
    reverse bearing is the negation. ``measured`` marks externally supplied
    (possibly noisy) bearings, in which case true-position metrics are not
    meaningful.
    """

    net: Network
    anchors: tuple[int, ...]
    bearings: np.ndarray  # (m, d)
    measured: bool = False

    @property
    def followers(self) -> tuple[int, ...]:
        aset = set(self.anchors)
        return tuple(i for i in range(self.net.n) if i not in aset)

    @property
    def n_anchors(self) -> int:
        return len(self.anchors)


def anchored_network(net: Network, anchors, measured_bearings=None) -> AnchoredNetwork:
    """Build an AnchoredNetwork; bearings default to the true configuration's."""
    anchors = tuple(sorted(set(int(a) for a in anchors)))
    if not anchors:
        raise InputError("anchor set must be nonempty")
    for a in anchors:
        if not (0 <= a < net.n):
            raise InputError(f"anchor {a} out of range")
    if measured_bearings is None:
        return AnchoredNetwork(net, anchors, unit_bearings(net), measured=False)
    g = np.asarray(measured_bearings, dtype=float)
    if g.shape != (net.m, net.d):
        raise InputError(f"expected ({net.m}, {net.d}) bearings, got {g.shape}")
    norms = np.linalg.norm(g, axis=1)
    if np.any(np.abs(norms - 1.0) > BEARING_NORM_TOL):
        raise InputError("measured bearings must be unit vectors (tolerance 1e-6)")
    return AnchoredNetwork(net, anchors, g / norms[:, None], measured=True)


def _block_indices(nodes, d: int) -> np.ndarray:
    return np.concatenate([np.arange(d * i, d * i + d) for i in nodes]) if nodes else np.zeros(0, dtype=int)


@dataclass(frozen=True)
class LaplacianPartition:
    """Bearing Laplacian blocks with anchors ordered first."""

    anchors: tuple[int, ...]
    followers: tuple[int, ...]
    L_aa: np.ndarray
    L_af: np.ndarray
    L_fa: np.ndarray
    L_ff: np.ndarray


def partition_laplacian(an: AnchoredNetwork) -> LaplacianPartition:
    L = laplacian_from_bearings(an.net.graph, an.net.d, an.bearings)
    ia = _block_indices(an.anchors, an.net.d)
    jf = _block_indices(an.followers, an.net.d)
    return LaplacianPartition(
        anchors=an.anchors,
        followers=an.followers,
        L_aa=L[np.ix_(ia, ia)],
        L_af=L[np.ix_(ia, jf)],
        L_fa=L[np.ix_(jf, ia)],
        L_ff=L[np.ix_(jf, jf)],
    )


@dataclass(frozen=True)
class LocalizabilityReport:
    localizable: bool
    smallest_singular_value: float
    largest_singular_value: float
    condition: float
    n_anchors: int
    null_dim: int  # dim Null(L) of the full bearing Laplacian
    anchor_bound: float  # necessary lower bound dim(Null(L)) / d on n_anchors
    anchor_bound_satisfied: bool
    # True iff some infinitesimal bearing motion moves only followers, which
    # is exactly the singularity of L_ff.
    follower_only_motion: bool


def is_bearing_localizable(an: AnchoredNetwork) -> LocalizabilityReport:
    """Localizable iff the follower block of the bearing Laplacian is
    nonsingular (smallest singular value above tau * sigma_max)."""
    part = partition_laplacian(an)
    d = an.net.d
    L = laplacian_from_bearings(an.net.graph, d, an.bearings)
    rank_L, _ = numerical_rank(L)
    null_dim = d * an.net.n - rank_L
    bound = null_dim / d
    if part.L_ff.size == 0:
        return LocalizabilityReport(
            localizable=True,
            smallest_singular_value=math.inf,
            largest_singular_value=math.inf,
            condition=1.0,
            n_anchors=an.n_anchors,
            null_dim=null_dim,
            anchor_bound=bound,
            anchor_bound_satisfied=an.n_anchors >= bound,
            follower_only_motion=False,
        )
    svals = np.linalg.svd(part.L_ff, compute_uv=False)
    smax, smin = float(svals[0]), float(svals[-1])
    localizable = smax > 0 and smin > TAU_RANK * smax
    return LocalizabilityReport(
        localizable=localizable,
        smallest_singular_value=smin,
        largest_singular_value=smax,
        condition=smax / smin if smin > 0 else math.inf,
        n_anchors=an.n_anchors,
        null_dim=null_dim,
        anchor_bound=bound,
        anchor_bound_satisfied=an.n_anchors >= bound,
        follower_only_motion=not localizable,
    )


@dataclass(frozen=True)
class LocalizationSolution:
    positions: np.ndarray  # (n_f, d) follower estimates
    condition: float
    objective: float  # residual J at the solution


def solve_localization(an: AnchoredNetwork, anchor_positions=None) -> LocalizationSolution:
    """Closed-form least-squares follower positions: solve L_ff p_f = -L_fa p_a
    with a symmetric positive-definite factorization."""
    report = is_bearing_localizable(an)
    if not report.localizable:
        raise NotLocalizableError(
            "follower block is singular: "
            f"smin={report.smallest_singular_value:.3e}, "
            f"n_anchors={report.n_anchors}, "
            f"required n_anchors >= {report.anchor_bound:.3f}"
        )
    d = an.net.d
    p_a = an.net.p[list(an.anchors)] if anchor_positions is None else np.asarray(anchor_positions, dtype=float)
    if p_a.shape != (an.n_anchors, d):
        raise InputError(f"anchor positions must be ({an.n_anchors}, {d})")
    part = partition_laplacian(an)
    if part.L_ff.size == 0:
        positions = np.zeros((0, d))
    else:
        rhs = -part.L_fa @ p_a.ravel()
        c, low = scipy.linalg.cho_factor(part.L_ff)
        positions = scipy.linalg.cho_solve((c, low), rhs).reshape(-1, d)
    p_hat = np.array(an.net.p, dtype=float)
    p_hat[list(an.anchors)] = p_a
    p_hat[list(an.followers)] = positions
    return LocalizationSolution(
        positions=positions,
        condition=report.condition,
        objective=localization_objective(an, p_hat),
    )


def localization_objective(an: AnchoredNetwork, p_hat) -> float:
    """Least-squares cost: sum over edges of |P_g (p_i - p_j)|^2, which equals
    the quadratic form of the bearing Laplacian."""
    p_hat = np.asarray(p_hat, dtype=float).reshape(an.net.n, an.net.d)
    total = 0.0
    for k, (i, j) in enumerate(an.net.graph.edges):
        diff = p_hat[i] - p_hat[j]
        proj = diff - an.bearings[k] * (an.bearings[k] @ diff)
        total += float(proj @ proj)
    return total


def localization_protocol_field(an: AnchoredNetwork, p_hat) -> np.ndarray:
    """Follower estimate derivatives -sum_j P_{g_ij} (p_i - p_j): the gradient
    descent of the least-squares cost with anchors pinned."""
    p_hat = np.asarray(p_hat, dtype=float).reshape(an.net.n, an.net.d)
    L = laplacian_from_bearings(an.net.graph, an.net.d, an.bearings)
    flow = -(L @ p_hat.ravel()).reshape(an.net.n, an.net.d)
    return flow[list(an.followers)]


@dataclass
class LocalizationRun:
    trajectory: Trajectory
    localizable: bool
    followers: tuple[int, ...]
    estimates: np.ndarray  # (n_f, d) final follower estimates

    @property
    def converged(self) -> bool:
        return self.trajectory.has_event("converged")


def simulate_localization(
    an: AnchoredNetwork,
    initial: np.ndarray | None = None,
    cfg: SimConfig = SimConfig(),
    anchor_positions=None,
) -> LocalizationRun:
    """Integrate the localization protocol from an initial guess.

    Non-localizable networks are simulated anyway and flagged with an event;
    the error then plateaus along the null space of the follower block.
    """
    d = an.net.d
    followers = an.followers
    n_f = len(followers)
    part = partition_laplacian(an)
    report = is_bearing_localizable(an)
    p_a = an.net.p[list(an.anchors)] if anchor_positions is None else np.asarray(anchor_positions, dtype=float)
    drift = part.L_fa @ p_a.ravel()

    if initial is None:
        lo, hi = an.net.p.min(axis=0), an.net.p.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
        initial = random_configuration(n_f, d, (lo - 0.25 * span, hi + 0.25 * span), cfg.seed)
    x0 = np.asarray(initial, dtype=float).reshape(n_f * d)

    def field(t, x):
        return -(part.L_ff @ x) - drift

    truth = None if an.measured else an.net.p[list(followers)].ravel()
    quad_aa = float(p_a.ravel() @ (part.L_aa @ p_a.ravel()))

    def metrics(t, x):
        out = {}
        if truth is not None:
            err = np.linalg.norm((x - truth).reshape(n_f, d), axis=1)
            for idx, node in enumerate(followers):
                out[f"err_{node + 1}"] = float(err[idx])
            out["max_error"] = float(err.max()) if n_f else 0.0
        out["objective"] = float(x @ (part.L_ff @ x) + 2.0 * x @ drift + quad_aa)
        return out

    traj = integrate(field, x0, cfg, metrics_fn=metrics)
    if not report.localizable:
        traj.events.append(Event("not_localizable", traj.times[0], "follower block singular"))
    estimates = traj.final_state.reshape(n_f, d) if n_f else np.zeros((0, d))
    return LocalizationRun(traj, report.localizable, followers, estimates)
