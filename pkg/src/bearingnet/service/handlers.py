"""Service operations: pure functions from request models to response models.

The FastAPI routes and the CLI's in-process backend both call these.
"""

import math

import numpy as np

from .. import formation as fm
from .. import localization as loc
from ..errors import InputError
from ..graph import is_laman, random_henneberg_graph
from ..netfile import (
    graph_to_file,
    initial_positions,
    to_anchored_network,
    to_graph,
    to_network,
    to_se2_network,
    to_target_formation,
)
from ..rigidity import (
    is_generically_bearing_rigid,
    is_infinitesimally_bearing_rigid,
    is_infinitesimally_distance_rigid,
    is_se2_infinitesimally_rigid,
)
from ..sim import SimConfig
from . import schemas as sc


def _sim_config(opts: sc.SimOptions) -> SimConfig:
    return SimConfig(
        dt=opts.dt,
        T=opts.T,
        method=opts.method,
        record_every=opts.record_every,
        seed=opts.seed,
    )


def _events(trajectory) -> list[sc.EventModel]:
    return [sc.EventModel(kind=e.kind, time=float(e.time), info=e.info) for e in trajectory.events]


def _node_vectors(witness: np.ndarray | None, n: int, d: int) -> list[list[float]] | None:
    if witness is None:
        return None
    return witness.reshape(n, d).tolist()


def _se2_node_vectors(witness: np.ndarray | None, n: int) -> list[list[float]] | None:
    if witness is None:
        return None
    out = []
    for i in range(n):
        out.append([float(witness[2 * i]), float(witness[2 * i + 1]), float(witness[2 * n + i])])
    return out


def _position_columns(n: int, d: int) -> list[str]:
    axes = "xyz"[:d]
    return [f"p{i + 1}_{ax}" for i in range(n) for ax in axes]


def analyze(req: sc.AnalyzeRequest) -> sc.AnalyzeResponse:
    nf = req.network
    if req.mode == "generic":
        g = to_graph(nf)
        laman = is_laman(g)
        result = is_generically_bearing_rigid(g, nf.dimension, trials=req.trials, seed=req.seed)
        report = result.witness_report
        return sc.AnalyzeResponse(
            mode=req.mode,
            n=g.n,
            m=g.m,
            dimension=nf.dimension,
            verdict=result.status,
            laman=laman.laman,
            trials=result.trials,
            rank=report.rank if report else None,
            nullity=report.nullity if report else None,
            expected_rank=report.expected_rank if report else None,
        )
    if req.mode == "se2":
        net = to_se2_network(nf)
        report = is_se2_infinitesimally_rigid(net)
        witness = _se2_node_vectors(report.witness, net.n)
        n, m = net.n, net.m
    else:
        net = to_network(nf)
        check = is_infinitesimally_bearing_rigid if req.mode == "bearing" else is_infinitesimally_distance_rigid
        report = check(net)
        witness = _node_vectors(report.witness, net.n, net.d)
        n, m = net.n, net.m
    return sc.AnalyzeResponse(
        mode=req.mode,
        n=n,
        m=m,
        dimension=nf.dimension,
        verdict=report.verdict,
        rank=report.rank,
        nullity=report.nullity,
        expected_rank=report.expected_rank,
        singular_values=[float(s) for s in report.singular_values],
        witness=witness,
    )


def localize(req: sc.LocalizeRequest) -> sc.LocalizeResponse:
    an = to_anchored_network(req.network)
    report = loc.is_bearing_localizable(an)
    condition = report.condition if math.isfinite(report.condition) else None
    follower_ids = [i + 1 for i in an.followers]
    base = dict(
        localizable=report.localizable,
        n_anchors=report.n_anchors,
        null_dim=report.null_dim,
        anchor_bound=report.anchor_bound,
        condition=condition,
        follower_ids=follower_ids,
    )
    if req.mode == "solve":
        solution = loc.solve_localization(an)  # raises NotLocalizableError when singular
        return sc.LocalizeResponse(
            solution=solution.positions.tolist(),
            objective=solution.objective,
            **base,
        )

    cfg = _sim_config(req.sim)
    initial = None
    if req.initial is not None:
        initial = np.asarray(req.initial, dtype=float)
        if initial.shape != (len(an.followers), an.net.d):
            raise InputError(
                f"initial estimates must be ({len(an.followers)}, {an.net.d}), got {initial.shape}"
            )
    run = loc.simulate_localization(an, initial=initial, cfg=cfg)
    table = _localization_table(an, run)
    terminal = run.trajectory.metrics[-1] if run.trajectory.metrics else {}
    return sc.LocalizeResponse(
        trajectory=table,
        terminal_max_error=terminal.get("max_error"),
        objective=terminal.get("objective"),
        events=_events(run.trajectory),
        **base,
    )


def _localization_table(an, run) -> sc.TrajectoryTable:
    n, d = an.net.n, an.net.d
    followers = list(run.followers)
    err_cols = [] if an.measured else [f"err_{i + 1}" for i in followers]
    columns = ["t"] + _position_columns(n, d) + err_cols + ["objective"]
    rows = []
    full = np.array(an.net.p, dtype=float)
    for k, t in enumerate(run.trajectory.times):
        full[followers] = run.trajectory.states[k].reshape(len(followers), d)
        metric = run.trajectory.metrics[k]
        row = [float(t)] + full.ravel().tolist()
        row += [metric[c] for c in err_cols]
        row.append(metric["objective"])
        rows.append(row)
    return sc.TrajectoryTable(columns=columns, rows=rows)


def _leader_motion(model: sc.LeaderMotionModel) -> fm.LeaderMotion:
    if model.kind == "none":
        return fm.LeaderMotion.stationary()
    if model.kind == "const":
        if model.velocity is None:
            raise InputError("constant leader motion needs a velocity")
        return fm.LeaderMotion.constant(model.velocity)
    if model.amplitude is None or model.frequency is None:
        raise InputError("sinusoidal leader motion needs amplitude and frequency")
    phase = model.phase if model.phase is not None else 0.0
    return fm.LeaderMotion.sinusoidal(model.amplitude, model.frequency, phase)


def formation(req: sc.FormationRequest) -> sc.FormationResponse:
    nf = req.network
    tf = to_target_formation(nf)
    p0 = initial_positions(nf)
    gains = fm.Gains(k_p=req.gains.kp, k_I=req.gains.ki, k_v=req.gains.kv)
    motion = _leader_motion(req.leader_motion)
    theta0 = None
    if req.law == "unicycle":
        theta0 = [0.0 if node.heading is None else node.heading for node in nf.nodes_by_id()]
    run = fm.simulate_formation(
        tf,
        p0,
        req.law,
        cfg=_sim_config(req.sim),
        gains=gains,
        leader_motion=motion,
        theta0=theta0,
    )
    table = _formation_table(run)
    terminal = run.trajectory.metrics[-1] if run.trajectory.metrics else {}
    return sc.FormationResponse(
        law=req.law,
        trajectory=table,
        terminal={k: float(v) for k, v in terminal.items()},
        events=_events(run.trajectory),
    )


def _formation_table(run: fm.FormationRun) -> sc.TrajectoryTable:
    n, d = run.tf.graph.n, run.tf.d
    columns = ["t"] + _position_columns(n, d)
    extra = []
    if run.law in ("di", "di-acc"):
        axes = "xyz"[:d]
        extra = [f"v{i + 1}_{ax}" for i in range(n) for ax in axes]
    elif run.law == "unicycle":
        extra = [f"theta_{i + 1}" for i in range(n)]
    metric_keys = list(run.trajectory.metrics[0].keys()) if run.trajectory.metrics else []
    columns += extra + metric_keys
    rows = []
    dn = n * d
    for k, t in enumerate(run.trajectory.times):
        state = run.trajectory.states[k]
        row = [float(t)] + state[:dn].tolist()
        if run.law in ("di", "di-acc"):
            row += state[dn : 2 * dn].tolist()
        elif run.law == "unicycle":
            row += state[dn:].tolist()
        row += [run.trajectory.metrics[k][key] for key in metric_keys]
        rows.append(row)
    return sc.TrajectoryTable(columns=columns, rows=rows)


def construct(req: sc.ConstructRequest) -> sc.ConstructResponse:
    if req.mode == "henneberg":
        if req.n is None or req.n < 2:
            raise InputError("henneberg construction needs n >= 2")
        g = random_henneberg_graph(req.n, seed=req.seed)
        check = is_laman(g)
        return sc.ConstructResponse(
            n=g.n,
            m=g.m,
            graph=graph_to_file(g, dimension=req.dimension),
            laman=check.laman,
        )
    if req.graph is None:
        raise InputError("laman-check needs a graph")
    g = to_graph(req.graph)
    check = is_laman(g)
    return sc.ConstructResponse(
        n=g.n,
        m=g.m,
        laman=check.laman,
        reason=check.reason,
        violating_subset=[v + 1 for v in check.violation] if check.violation else None,
    )
