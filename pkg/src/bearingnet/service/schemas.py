"""Request/response models for the service API and the CLI report format."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..netfile import NetworkFile

LawName = Literal[
    "si",
    "si-pi",
    "si-vel",
    "di",
    "di-acc",
    "unicycle",
    "bearing-only",
    "bearing-gradient",
    "bearing-descent",
]


class SimOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dt: float = Field(default=1e-3, gt=0)
    T: float = Field(default=30.0, gt=0)
    method: Literal["euler", "rk4"] = "rk4"
    record_every: int = Field(default=1, ge=1)
    seed: int | None = None


class GainsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kp: float = Field(default=1.0, gt=0)
    ki: float = Field(default=1.0, gt=0)
    kv: float = Field(default=1.0, gt=0)


class LeaderMotionModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["none", "const", "sine"] = "none"
    velocity: list[float] | None = None
    amplitude: list[float] | None = None
    frequency: list[float] | None = None
    phase: list[float] | None = None


class EventModel(BaseModel):
    kind: str
    time: float
    info: str = ""


class TrajectoryTable(BaseModel):
    """Flat, plot-ready table: one row per recorded time."""

    columns: list[str]
    rows: list[list[float]]


class AnalyzeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    network: NetworkFile
    mode: Literal["bearing", "distance", "se2", "generic"] = "bearing"
    trials: int = Field(default=5, ge=1)
    seed: int | None = None


class AnalyzeResponse(BaseModel):
    mode: str
    n: int
    m: int
    dimension: int
    verdict: str  # rigid | not_rigid | yes | inconclusive
    rank: int | None = None
    nullity: int | None = None
    expected_rank: int | None = None
    singular_values: list[float] | None = None
    # Per-node components of a nontrivial motion, when the verdict is not rigid.
    witness: list[list[float]] | None = None
    laman: bool | None = None  # generic mode only
    trials: int | None = None  # generic mode only


class LocalizeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    network: NetworkFile
    mode: Literal["solve", "simulate"] = "solve"
    sim: SimOptions = SimOptions()
    # Per-follower initial estimates (follower id order); random when omitted.
    initial: list[list[float]] | None = None


class LocalizeResponse(BaseModel):
    localizable: bool
    n_anchors: int
    null_dim: int
    anchor_bound: float
    condition: float | None = None
    follower_ids: list[int] = []  # 1-based
    solution: list[list[float]] | None = None
    objective: float | None = None
    trajectory: TrajectoryTable | None = None
    terminal_max_error: float | None = None
    events: list[EventModel] = []


class FormationRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    network: NetworkFile
    law: LawName
    gains: GainsModel = GainsModel()
    leader_motion: LeaderMotionModel = LeaderMotionModel()
    sim: SimOptions = SimOptions()


class FormationResponse(BaseModel):
    law: str
    trajectory: TrajectoryTable
    terminal: dict[str, float]
    events: list[EventModel] = []


class ConstructRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["henneberg", "laman-check"] = "henneberg"
    n: int | None = None
    seed: int | None = None
    dimension: int = Field(default=2, ge=2)
    graph: NetworkFile | None = None


class ConstructResponse(BaseModel):
    n: int
    m: int
    graph: NetworkFile | None = None
    laman: bool | None = None
    reason: str | None = None
    violating_subset: list[int] | None = None  # 1-based


class RunReport(BaseModel):
    """Machine-readable record of one CLI run."""

    schema_version: int = 1
    command: str
    input_digest: str | None = None
    verdicts: dict[str, str] = {}
    ranks: dict[str, int] = {}
    metrics: dict[str, float] = {}
    events: list[EventModel] = []
    outputs: list[str] = []
