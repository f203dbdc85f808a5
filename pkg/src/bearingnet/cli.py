"""Command-line client.

Each command builds a request model, runs it against the service layer (in
process by default, over HTTP with --server), and writes a RunReport plus any
trajectory/solution files to the output directory.

Exit codes: 0 success, 2 input error, 3 infeasible (non-localizable or
singular), 4 runtime event (collocation or divergence).
"""

import argparse
import hashlib
import json
import shlex
import sys
from pathlib import Path

import httpx

from .errors import InputError, NotLocalizableError, SingularProjectionSumError
from .netfile import load_network_file, network_file_json
from .service import handlers
from .service import schemas as sc

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 4

# Event kinds that make a completed run count as failed.
ERROR_EVENTS = {"collocation", "singular_projection_sum", "diverged"}


class _InfeasibleError(Exception):
    pass


class LocalBackend:
    """Run requests in process against the service handlers."""

    def analyze(self, req):
        return handlers.analyze(req)

    def localize(self, req):
        return handlers.localize(req)

    def formation(self, req):
        return handlers.formation(req)

    def construct(self, req):
        return handlers.construct(req)


class RemoteBackend:
    """Send requests to a running service instance."""

    def __init__(self, base_url: str):
        self.client = httpx.Client(base_url=base_url, timeout=300.0)

    def _post(self, path: str, req, response_model):
        r = self.client.post(path, json=req.model_dump(mode="json"))
        if r.status_code in (400, 422):
            raise InputError(r.text)
        if r.status_code == 409:
            raise _InfeasibleError(r.text)
        r.raise_for_status()
        return response_model.model_validate(r.json())

    def analyze(self, req):
        return self._post("/analyze", req, sc.AnalyzeResponse)

    def localize(self, req):
        return self._post("/localize", req, sc.LocalizeResponse)

    def formation(self, req):
        return self._post("/formation", req, sc.FormationResponse)

    def construct(self, req):
        return self._post("/construct", req, sc.ConstructResponse)


def _fmt(x) -> str:
    """Floats with 17 significant digits: lossless binary64 round-trip."""
    return format(float(x), ".17g")


def _write_table(table: sc.TrajectoryTable, path: Path, fmt: str) -> None:
    if fmt == "json":
        path.write_text(
            json.dumps({"columns": table.columns, "rows": table.rows}, indent=2) + "\n",
            encoding="utf-8",
        )
        return
    lines = [",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _digest(path) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


def _write_report(report: sc.RunReport, outdir: Path, name: str) -> Path:
    path = outdir / name
    path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def _finish(report: sc.RunReport, outdir: Path, name: str) -> int:
    _write_report(report, outdir, name)
    bad = [e for e in report.events if e.kind in ERROR_EVENTS]
    for event in report.events:
        print(f"event: {event.kind} at t={event.time:g} {event.info}")
    return EXIT_RUNTIME if bad else EXIT_OK


def _sim_options(args) -> sc.SimOptions:
    return sc.SimOptions(
        dt=args.dt,
        T=args.T,
        method=args.method,
        record_every=args.record_every,
        seed=args.seed,
    )


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _backend(args):
    return RemoteBackend(args.server) if args.server else LocalBackend()


def cmd_analyze(args) -> int:
    outdir = _outdir(args)
    nf = load_network_file(args.network)
    req = sc.AnalyzeRequest(network=nf, mode=args.mode, trials=args.trials, seed=args.seed)
    resp = _backend(args).analyze(req)
    report = sc.RunReport(
        command=args.command_echo,
        input_digest=_digest(args.network),
        verdicts={"rigidity": resp.verdict},
        ranks={
            key: value
            for key, value in (
                ("rank", resp.rank),
                ("nullity", resp.nullity),
                ("expected_rank", resp.expected_rank),
            )
            if value is not None
        },
    )
    if resp.laman is not None:
        report.verdicts["laman"] = "yes" if resp.laman else "no"
    if resp.witness is not None:
        witness_path = outdir / "witness.json"
        witness_path.write_text(json.dumps(resp.witness, indent=2) + "\n", encoding="utf-8")
        report.outputs.append(str(witness_path))
    print(f"mode={resp.mode} verdict={resp.verdict} rank={resp.rank} expected={resp.expected_rank}")
    return _finish(report, outdir, "analyze_report.json")


def _load_initial(path: str, follower_ids: list[int]) -> list[list[float]]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read initial guess file {path}: {exc}") from exc
    try:
        table = {int(entry["id"]): list(map(float, entry["position"])) for entry in data["positions"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: expected {{\"positions\": [{{\"id\":…, \"position\":[…]}}]}}") from exc
    missing = [i for i in follower_ids if i not in table]
    if missing:
        raise InputError(f"{path}: missing initial positions for followers {missing}")
    return [table[i] for i in follower_ids]


def cmd_localize(args) -> int:
    outdir = _outdir(args)
    nf = load_network_file(args.network)
    mode = "simulate" if args.simulate else "solve"
    initial = None
    if args.init != "random":
        follower_ids = [node.id for node in nf.nodes_by_id() if node.role != "anchor"]
        initial = _load_initial(args.init, follower_ids)
    req = sc.LocalizeRequest(network=nf, mode=mode, sim=_sim_options(args), initial=initial)
    resp = _backend(args).localize(req)
    report = sc.RunReport(
        command=args.command_echo,
        input_digest=_digest(args.network),
        verdicts={"localizable": "yes" if resp.localizable else "no"},
        ranks={"null_dim": resp.null_dim, "n_anchors": resp.n_anchors},
        events=resp.events,
    )
    report.metrics["anchor_bound"] = resp.anchor_bound
    if resp.condition is not None:
        report.metrics["condition"] = resp.condition
    if resp.objective is not None:
        report.metrics["objective"] = resp.objective
    if resp.solution is not None:
        path = outdir / "solution.json"
        payload = {
            "follower_ids": resp.follower_ids,
            "positions": resp.solution,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        report.outputs.append(str(path))
        print(f"solved {len(resp.solution)} follower positions (condition {resp.condition:.3e})")
    if resp.trajectory is not None:
        path = outdir / f"trajectory.{args.format}"
        _write_table(resp.trajectory, path, args.format)
        report.outputs.append(str(path))
        if resp.terminal_max_error is not None:
            report.metrics["terminal_max_error"] = resp.terminal_max_error
            print(f"terminal max error {resp.terminal_max_error:.3e}")
    return _finish(report, outdir, "localize_report.json")


def _parse_gains(text: str) -> sc.GainsModel:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise InputError(f"bad --gains {text!r}: expected kp,ki,kv") from exc
    if len(parts) != 3:
        raise InputError(f"bad --gains {text!r}: expected three values kp,ki,kv")
    return sc.GainsModel(kp=parts[0], ki=parts[1], kv=parts[2])


def _parse_leader_motion(text: str, d: int) -> sc.LeaderMotionModel:
    if text == "none":
        return sc.LeaderMotionModel(kind="none")
    kind, _, rest = text.partition(":")
    try:
        values = [float(x) for x in rest.split(",")] if rest else []
    except ValueError as exc:
        raise InputError(f"bad --leader-motion {text!r}") from exc
    if kind == "const":
        if len(values) != d:
            raise InputError(f"const leader motion needs {d} velocity components")
        return sc.LeaderMotionModel(kind="const", velocity=values)
    if kind == "sine":
        if len(values) != 3:
            raise InputError("sine leader motion needs amp,freq,phase")
        amp, freq, phase = values
        return sc.LeaderMotionModel(
            kind="sine", amplitude=[amp] * d, frequency=[freq] * d, phase=[phase] * d
        )
    raise InputError(f"unknown leader motion {kind!r}; expected none, const:…, or sine:…")


def cmd_formation(args) -> int:
    outdir = _outdir(args)
    nf = load_network_file(args.network)
    req = sc.FormationRequest(
        network=nf,
        law=args.law,
        gains=_parse_gains(args.gains),
        leader_motion=_parse_leader_motion(args.leader_motion, nf.dimension),
        sim=_sim_options(args),
    )
    resp = _backend(args).formation(req)
    report = sc.RunReport(
        command=args.command_echo,
        input_digest=_digest(args.network),
        metrics={k: v for k, v in resp.terminal.items()},
        events=resp.events,
    )
    path = outdir / f"trajectory.{args.format}"
    _write_table(resp.trajectory, path, args.format)
    report.outputs.append(str(path))
    err = resp.terminal.get("bearing_error")
    if err is not None:
        print(f"law={resp.law} terminal bearing error {err:.3e}")
    return _finish(report, outdir, "formation_report.json")


def cmd_construct(args) -> int:
    outdir = _outdir(args)
    if args.laman_check:
        nf = load_network_file(args.laman_check)
        req = sc.ConstructRequest(mode="laman-check", graph=nf)
        resp = _backend(args).construct(req)
        report = sc.RunReport(
            command=args.command_echo,
            input_digest=_digest(args.laman_check),
            verdicts={"laman": "yes" if resp.laman else "no"},
            ranks={"n": resp.n, "m": resp.m},
        )
        print(f"laman={'yes' if resp.laman else 'no'} n={resp.n} m={resp.m}")
        if resp.violating_subset:
            print(f"violating subset: {resp.violating_subset}")
            report.metrics["violating_subset_size"] = float(len(resp.violating_subset))
        return _finish(report, outdir, "construct_report.json")

    req = sc.ConstructRequest(
        mode="henneberg", n=args.henneberg, seed=args.seed, dimension=args.dimension
    )
    resp = _backend(args).construct(req)
    path = outdir / "graph.json"
    path.write_text(network_file_json(resp.graph), encoding="utf-8")
    report = sc.RunReport(
        command=args.command_echo,
        verdicts={"laman": "yes" if resp.laman else "no"},
        ranks={"n": resp.n, "m": resp.m},
        outputs=[str(path)],
    )
    print(f"built Laman graph n={resp.n} m={resp.m} -> {path}")
    return _finish(report, outdir, "construct_report.json")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bearingnet",
        description="Bearing rigidity, network localization, and formation control toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=".", help="directory for reports and tables")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="trajectory format")
    common.add_argument("--server", default=None, help="URL of a running service (default: in-process)")

    simflags = argparse.ArgumentParser(add_help=False)
    simflags.add_argument("--dt", type=float, default=1e-3, help="integration step")
    simflags.add_argument("--T", type=float, default=30.0, help="integration horizon")
    simflags.add_argument("--method", choices=("euler", "rk4"), default="rk4")
    simflags.add_argument("--seed", type=int, default=None)
    simflags.add_argument("--record-every", type=int, default=10, help="record every k-th step")

    p = sub.add_parser("analyze", parents=[common], help="rigidity analysis of a network file")
    p.add_argument("network")
    p.add_argument("--mode", choices=("bearing", "distance", "se2", "generic"), default="bearing")
    p.add_argument("--trials", type=int, default=5, help="samples for generic mode")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("localize", parents=[common, simflags], help="solve or simulate localization")
    p.add_argument("network")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--solve", action="store_true", help="closed-form solve (default)")
    group.add_argument("--simulate", action="store_true", help="integrate the protocol")
    p.add_argument("--init", default="random", help="'random' or a JSON file with initial estimates")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("formation", parents=[common, simflags], help="simulate a formation control law")
    p.add_argument("network")
    p.add_argument(
        "--law",
        required=True,
        choices=(
            "si",
            "si-pi",
            "si-vel",
            "di",
            "di-acc",
            "unicycle",
            "bearing-only",
            "bearing-gradient",
            "bearing-descent",
        ),
    )
    p.add_argument("--gains", default="1,1,1", help="kp,ki,kv")
    p.add_argument("--leader-motion", default="none", help="none | const:vx,vy[,vz] | sine:amp,freq,phase")
    p.set_defaults(func=cmd_formation)

    p = sub.add_parser("construct", parents=[common], help="build or check Laman graphs")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--henneberg", type=int, metavar="N", help="random Henneberg graph on N vertices")
    group.add_argument("--laman-check", metavar="FILE", help="check a graph file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dimension", type=int, default=2, help="dimension recorded in the output file")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command_echo = "bearingnet " + shlex.join(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NotLocalizableError, SingularProjectionSumError, _InfeasibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except httpx.HTTPError as exc:
        print(f"server error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
