"""Numerical rigidity kernel.

Projection matrices, bearing/distance rigidity matrices, the bearing
Laplacian, rank-based rigidity verdicts, generic-rigidity sampling, and
planar rigidity with headings (SE(2)).
"""

from dataclasses import dataclass

import numpy as np

from .errors import CollocationError, InputError
from .graph import Graph, incidence_matrix, orient

TAU_RANK = 1e-8  # relative singular-value cutoff for numerical rank
EPS_DIST = 1e-9  # absolute collocation threshold


def projection(x) -> np.ndarray:
    """Orthogonal projector onto the complement of x: I - xx^T / |x|^2."""
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm <= EPS_DIST:
        raise InputError("cannot project along a near-zero vector")
    u = x / nrm
    return np.eye(x.size) - np.outer(u, u)


@dataclass(frozen=True)
class Network:
    """A graph embedded in R^d: row i of p is the position of vertex i."""

    graph: Graph
    d: int
    p: np.ndarray

    def __post_init__(self):
        if self.d < 2:
            raise InputError(f"ambient dimension must be >= 2, got {self.d}")
        if self.graph.n < 2:
            raise InputError("a network needs at least 2 nodes")
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.graph.n, self.d):
            raise InputError(
                f"configuration shape {p.shape} != ({self.graph.n}, {self.d})"
            )
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m


def edge_vectors(net: Network) -> np.ndarray:
    """(m, d) array of p_j - p_i per canonical oriented edge (i, j)."""
    if net.m == 0:
        return np.zeros((0, net.d))
    tails, heads = np.array(net.graph.edges).T
    return net.p[heads] - net.p[tails]


def unit_bearings(net: Network) -> np.ndarray:
    """(m, d) unit bearings per canonical edge; errors on collocated neighbors."""
    e = edge_vectors(net)
    lengths = np.linalg.norm(e, axis=1)
    bad = np.flatnonzero(lengths <= EPS_DIST)
    if bad.size:
        i, j = net.graph.edges[bad[0]]
        raise CollocationError(f"nodes {i} and {j} are collocated")
    return e / lengths[:, None]


def bearing_function(net: Network) -> np.ndarray:
    """Stacked unit bearings, length d*m, in the canonical edge order."""
    return unit_bearings(net).ravel()


def bearing_rigidity_matrix(net: Network) -> np.ndarray:
    """(dm, dn) Jacobian of the stacked bearings with respect to the stacked
    configuration: blockdiag(P_{g_k} / |e_k|) (H kron I_d)."""
    d, n, m = net.d, net.n, net.m
    e = edge_vectors(net)
    g = unit_bearings(net)
    lengths = np.linalg.norm(e, axis=1)
    R = np.zeros((d * m, d * n))
    for k, (i, j) in enumerate(net.graph.edges):
        B = (np.eye(d) - np.outer(g[k], g[k])) / lengths[k]
        R[d * k : d * k + d, d * i : d * i + d] = -B
        R[d * k : d * k + d, d * j : d * j + d] = B
    return R


def distance_rigidity_matrix(net: Network) -> np.ndarray:
    """(m, dn) Jacobian of the half squared edge lengths:
    blockdiag(e_k^T) (H kron I_d)."""
    d, n, m = net.d, net.n, net.m
    e = edge_vectors(net)
    R = np.zeros((m, d * n))
    for k, (i, j) in enumerate(net.graph.edges):
        R[k, d * i : d * i + d] = -e[k]
        R[k, d * j : d * j + d] = e[k]
    return R


def laplacian_from_bearings(graph: Graph, d: int, bearings: np.ndarray) -> np.ndarray:
    """(dn, dn) matrix-weighted Laplacian built from unit bearings given per
    canonical edge. Symmetric positive semi-definite for any unit bearings."""
    bearings = np.asarray(bearings, dtype=float)
    if bearings.shape != (graph.m, d):
        raise InputError(f"expected ({graph.m}, {d}) bearings, got {bearings.shape}")
    n = graph.n
    L = np.zeros((d * n, d * n))
    for k, (i, j) in enumerate(graph.edges):
        P = np.eye(d) - np.outer(bearings[k], bearings[k])
        si, sj = slice(d * i, d * i + d), slice(d * j, d * j + d)
        L[si, sj] -= P
        L[sj, si] -= P
        L[si, si] += P
        L[sj, sj] += P
    return L


def bearing_laplacian(net: Network) -> np.ndarray:
    """Bearing Laplacian of the network's true configuration."""
    return laplacian_from_bearings(net.graph, net.d, unit_bearings(net))


def numerical_rank(M: np.ndarray, tau: float = TAU_RANK) -> tuple[int, np.ndarray]:
    """Rank as the number of singular values above tau * sigma_max."""
    if M.size == 0:
        return 0, np.zeros(0)
    svals = np.linalg.svd(M, compute_uv=False)
    if svals[0] == 0.0:
        return 0, svals
    return int(np.sum(svals > tau * svals[0])), svals


def null_space(M: np.ndarray, tau: float = TAU_RANK) -> np.ndarray:
    """Orthonormal basis of the (numerical) null space, shape (cols, nullity)."""
    if M.size == 0:
        return np.eye(M.shape[1])
    _, svals, vt = np.linalg.svd(M)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > tau * smax)) if smax > 0 else 0
    return vt[rank:].T


def _orthonormal_columns(M: np.ndarray, tau: float = TAU_RANK) -> np.ndarray:
    """Orthonormal basis of the column span of M."""
    u, svals, _ = np.linalg.svd(M, full_matrices=False)
    if svals.size == 0 or svals[0] == 0.0:
        return np.zeros((M.shape[0], 0))
    rank = int(np.sum(svals > tau * svals[0]))
    return u[:, :rank]


def trivial_bearing_motion_basis(net: Network) -> np.ndarray:
    """Orthonormal basis of span{1_n kron I_d, p}, shape (dn, d or d+1).

    The dimension is d + 1 unless the configuration is itself a translation
    direction (all nodes at one point), which degenerates to d.
    """
    T = np.kron(np.ones((net.n, 1)), np.eye(net.d))
    return _orthonormal_columns(np.hstack([T, net.p.reshape(-1, 1)]))


def trivial_distance_motion_basis(net: Network) -> np.ndarray:
    """Orthonormal basis of the d translations plus the d(d-1)/2 infinitesimal
    rotations of the configuration."""
    cols = [np.kron(np.ones((net.n, 1)), np.eye(net.d))]
    for a in range(net.d):
        for b in range(a + 1, net.d):
            S = np.zeros((net.d, net.d))
            S[a, b], S[b, a] = 1.0, -1.0
            cols.append((net.p @ S.T).reshape(-1, 1))
    return _orthonormal_columns(np.hstack(cols))


@dataclass(frozen=True)
class RigidityReport:
    rank: int
    nullity: int
    expected_rank: int
    verdict: str  # "rigid" | "not_rigid"
    singular_values: np.ndarray
    witness: np.ndarray | None  # unit-norm nontrivial motion when not rigid

    @property
    def rigid(self) -> bool:
        return self.verdict == "rigid"


def _nontrivial_motion(M: np.ndarray, trivial: np.ndarray) -> np.ndarray | None:
    """Unit null vector of M orthogonal to the trivial motion basis."""
    N = null_space(M)
    if N.shape[1] == 0:
        return None
    Q = N - trivial @ (trivial.T @ N)
    u, svals, _ = np.linalg.svd(Q, full_matrices=False)
    if svals.size == 0 or svals[0] < 1e-6:
        return None
    return u[:, 0]


def _report(M: np.ndarray, expected_rank: int, trivial: np.ndarray) -> RigidityReport:
    dim = M.shape[1]
    rank, svals = numerical_rank(M)
    rigid = rank == expected_rank
    witness = None if rigid else _nontrivial_motion(M, trivial)
    return RigidityReport(
        rank=rank,
        nullity=dim - rank,
        expected_rank=expected_rank,
        verdict="rigid" if rigid else "not_rigid",
        singular_values=svals,
        witness=witness,
    )


def is_infinitesimally_bearing_rigid(net: Network) -> RigidityReport:
    """Rigid iff rank(R_B) = dn - d - 1, so every bearing-preserving motion
    is a translation or a uniform scaling."""
    R = bearing_rigidity_matrix(net)
    return _report(R, net.d * net.n - net.d - 1, trivial_bearing_motion_basis(net))


def is_infinitesimally_distance_rigid(net: Network) -> RigidityReport:
    """Rigid iff the null space of the distance rigidity matrix is exactly the
    span of translations and rotations of the configuration."""
    R = distance_rigidity_matrix(net)
    trivial = trivial_distance_motion_basis(net)
    return _report(R, net.d * net.n - trivial.shape[1], trivial)


@dataclass(frozen=True)
class GenericRigidityResult:
    status: str  # "yes" | "inconclusive"
    trials: int
    seed: int | None
    witness_configuration: np.ndarray | None
    witness_report: RigidityReport | None

    @property
    def generically_rigid(self) -> bool:
        return self.status == "yes"


def is_generically_bearing_rigid(
    g: Graph, d: int, trials: int = 5, seed=None
) -> GenericRigidityResult:
    """Sample i.i.d. uniform configurations on [0, 1]^d; one rigid sample
    certifies the graph (almost-all property), repeated failures cannot
    certify the negative, hence "inconclusive"."""
    if trials < 1:
        raise InputError("trials must be >= 1")
    from .sim import random_configuration  # local import keeps sim below rigidity

    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    recorded_seed = seed if isinstance(seed, int) else None
    for _ in range(trials):
        p = random_configuration(g.n, d, (0.0, 1.0), rng, edges=g.edges)
        report = is_infinitesimally_bearing_rigid(Network(g, d, p))
        if report.rigid:
            return GenericRigidityResult("yes", trials, recorded_seed, p, report)
    return GenericRigidityResult("inconclusive", trials, recorded_seed, None, None)


# -- SE(2): planar positions plus headings, directed edges -------------------


def _wrap_angle(a):
    """Wrap into (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    out = -((-a + np.pi) % (2.0 * np.pi) - np.pi)
    return out


@dataclass(frozen=True)
class SE2Network:
    """Directed planar network where node i carries a heading psi_i."""

    n: int
    directed_edges: tuple[tuple[int, int], ...]
    p: np.ndarray  # (n, 2)
    psi: np.ndarray  # (n,)

    def __post_init__(self):
        if self.n < 2:
            raise InputError("an SE(2) network needs at least 2 nodes")
        seen = set()
        for i, j in self.directed_edges:
            if i == j:
                raise InputError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InputError(f"edge ({i}, {j}) out of range")
            if (i, j) in seen:
                raise InputError(f"duplicate directed edge ({i}, {j})")
            seen.add((i, j))
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.n, 2):
            raise InputError(f"positions must be ({self.n}, 2), got {p.shape}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "psi", _wrap_angle(np.asarray(self.psi, dtype=float)))

    @property
    def m(self) -> int:
        return len(self.directed_edges)


def _se2_edge_geometry(net: SE2Network):
    tails, heads = np.array(net.directed_edges).T
    e = net.p[heads] - net.p[tails]
    lengths = np.linalg.norm(e, axis=1)
    bad = np.flatnonzero(lengths <= EPS_DIST)
    if bad.size:
        i, j = net.directed_edges[bad[0]]
        raise CollocationError(f"nodes {i} and {j} are collocated")
    return tails, heads, e / lengths[:, None], lengths


def _rot_to_body(psi: float) -> np.ndarray:
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, s], [-s, c]])


def se2_bearing_function(net: SE2Network) -> np.ndarray:
    """Stacked body-frame bearings, length 2m: the k-th directed edge (i, j)
    contributes the global bearing of j seen from i rotated into frame i."""
    tails, _, g, _ = _se2_edge_geometry(net)
    out = np.empty((net.m, 2))
    for k in range(net.m):
        out[k] = _rot_to_body(net.psi[tails[k]]) @ g[k]
    return out.ravel()


def se2_rigidity_matrix(net: SE2Network) -> np.ndarray:
    """(2m, 3n) Jacobian of the body-frame bearings with respect to
    (p_1..p_n, psi_1..psi_n), assembled analytically edge by edge."""
    tails, heads, g, lengths = _se2_edge_geometry(net)
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])  # d/dpsi of the body rotation
    R = np.zeros((2 * net.m, 3 * net.n))
    for k in range(net.m):
        i, j = tails[k], heads[k]
        Q = _rot_to_body(net.psi[i])
        B = Q @ (np.eye(2) - np.outer(g[k], g[k])) / lengths[k]
        rows = slice(2 * k, 2 * k + 2)
        R[rows, 2 * i : 2 * i + 2] = -B
        R[rows, 2 * j : 2 * j + 2] = B
        R[rows, 2 * net.n + i] = Q @ J @ g[k]
    return R


def se2_trivial_motion_basis(net: SE2Network) -> np.ndarray:
    """Orthonormal basis of the trivial variations: 2 translations, the
    scaling [p; 0], and the coordinated rotation [p_perp; 1_n]."""
    n = net.n
    cols = np.zeros((3 * n, 4))
    cols[: 2 * n, 0:2] = np.kron(np.ones((n, 1)), np.eye(2))
    cols[: 2 * n, 2] = net.p.ravel()
    perp = net.p @ np.array([[0.0, 1.0], [-1.0, 0.0]])  # rotate each p_i by +pi/2
    cols[: 2 * n, 3] = perp.ravel()
    cols[2 * n :, 3] = 1.0
    return _orthonormal_columns(cols)


def is_se2_infinitesimally_rigid(net: SE2Network) -> RigidityReport:
    """Rigid iff rank of the directed bearing Jacobian equals 3n - 4."""
    R = se2_rigidity_matrix(net)
    return _report(R, 3 * net.n - 4, se2_trivial_motion_basis(net))
