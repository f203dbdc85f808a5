"""Fixed-step ODE integration with trajectory and event recording.

Explicit Euler and classical RK4 only: determinism and clean convergence
order tests matter more than efficiency at this scale.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CollocationError, InputError, SingularProjectionSumError

# Exceptions that abort an integration and become trajectory events.
_ABORTS = {
    CollocationError: "collocation",
    SingularProjectionSumError: "singular_projection_sum",
}


@dataclass(frozen=True)
class Tolerances:
    collocation: float = 1e-9
    convergence: float = 1e-9


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    T: float = 30.0
    method: str = "rk4"  # "euler" | "rk4"
    record_every: int = 1
    seed: int | None = None
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0:
            raise InputError("dt and T must be positive")
        if self.dt > self.T:
            raise InputError("dt must not exceed the horizon T")
        if self.record_every < 1:
            raise InputError("record_every must be >= 1")
        if self.method not in ("euler", "rk4"):
            raise InputError(f"unknown method {self.method!r}")


@dataclass
class Event:
    kind: str  # collocation | singular_projection_sum | converged | diverged | ...
    time: float
    info: str = ""


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (k, dim)
    metrics: list[dict]
    events: list[Event] = field(default_factory=list)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def metric(self, key: str) -> np.ndarray:
        return np.array([m[key] for m in self.metrics])

    def has_event(self, kind: str) -> bool:
        return any(e.kind == kind for e in self.events)


def integrate(field_fn, x0, cfg: SimConfig, metrics_fn=None, project=None, t0: float = 0.0) -> Trajectory:
    """Integrate dx/dt = field_fn(t, x) over [t0, t0 + T] with fixed steps.

    Stops early with a "converged" event once the field norm drops below the
    convergence tolerance, and aborts with an event on collocation, singular
    aggregate projections, or non-finite states.
    """
    x = np.array(x0, dtype=float).ravel()
    n_steps = int(round(cfg.T / cfg.dt))
    dt = cfg.dt
    eps_conv = cfg.tolerances.convergence

    times, states, metrics, events = [], [], [], []
    last_recorded = -1

    def record(step: int, t: float, state: np.ndarray):
        nonlocal last_recorded
        if step == last_recorded:
            return
        times.append(t)
        states.append(state.copy())
        metrics.append(metrics_fn(t, state) if metrics_fn else {})
        last_recorded = step

    t = t0
    try:
        record(0, t0, x)
        for step in range(1, n_steps + 1):
            t = t0 + (step - 1) * dt
            k1 = field_fn(t, x)
            if np.linalg.norm(k1) < eps_conv:
                events.append(Event("converged", t, f"field norm < {eps_conv}"))
                record(step - 1, t, x)
                break
            if cfg.method == "euler":
                x = x + dt * k1
            else:
                k2 = field_fn(t + dt / 2.0, x + (dt / 2.0) * k1)
                k3 = field_fn(t + dt / 2.0, x + (dt / 2.0) * k2)
                k4 = field_fn(t + dt, x + dt * k3)
                x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if project is not None:
                x = project(x)
            t = t0 + step * dt
            if not np.all(np.isfinite(x)):
                events.append(Event("diverged", t, "non-finite state"))
                break
            if step % cfg.record_every == 0 or step == n_steps:
                record(step, t, x)
    except tuple(_ABORTS) as exc:
        events.append(Event(_ABORTS[type(exc)], t, str(exc)))

    return Trajectory(np.array(times), np.array(states), metrics, events)


def random_configuration(n: int, d: int, box, seed=None, edges=None, max_tries: int = 100) -> np.ndarray:
    """(n, d) i.i.d. uniform positions in the box, reproducible from the seed.

    Configurations with collocated adjacent pairs are resampled; with no edge
    list given, every pair counts as adjacent.
    """
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (d,)) for b in box)
    if not np.all(hi > lo):
        raise InputError("box must have a nonempty interior")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    if edges is None:
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for _ in range(max_tries):
        p = lo + (hi - lo) * rng.random((n, d))
        ok = all(np.linalg.norm(p[j] - p[i]) > 1e-9 for i, j in edges)
        if ok:
            return p
    raise InputError("could not sample a configuration without collocated neighbors")
