# agents/autotuner_agent.py
"""
Autotuner Agent
- Searches the scheduling space of ONE labeled edgeset apply for the lowest median runtime.
- ScheduleSpace: categorical axes (direction, parallelization, dense vertexset layout, SSG scheme,
  NUMA mode) plus integer axes (grain size, segment count); hybrid directions sample their
  per-direction options separately for each side.
- Strategies: HillClimbSearch (default, greedy one-axis mutation with random restarts),
  RandomSearch, ExhaustiveSearch. All share the SearchStrategy protocol.
- Trials are lowered in lenient mode: dropped calls are logged and the point is timed as its
  effective schedule. Trials are memoized by schedule text.
- History JSON (schema_version) goes through services.analysis_utils.upload_json_to_gcs.
"""

import itertools
import json
import logging
import random
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, Iterator, List, Optional, Protocol, Tuple

from agents.pipeline import CompiledProgram, run_compiled
from compiler.lowering import LENIENT
from lang.errors import BudgetZero, CompileError, GraphWeaveError, UnknownOption
from lang.schedule_parser import (DENSE_LAYOUTS, DENSE_SIDES, DIRECTIONS, NUMA_OPTIONS, PARALLEL_OPTIONS,
                                  SSG_SCHEMES, TRANSFORM_FUNCTIONS, Schedule, ScheduleCall)
from services.analysis_utils import with_schema
from services.graph_store import Graph
from services.oracles import compare_runs
from services.state import EngineOptions
from services.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

NO_SSG = "none"
SPARSE = "SparsePush"

FULL_GRAINS = (64, 256, 1024, 4096)
FULL_SEGMENTS = (1, 2, 4, 8, 16)
FULL_DENSE = tuple(itertools.product(DENSE_LAYOUTS, DENSE_SIDES))


@dataclass(frozen=True)
class SideConfig:
    """Options of one traversal mode; axes that do not apply are None."""
    parallelization: str = "serial"
    grain: Optional[int] = None
    dense_vertexset: Optional[Tuple[str, str]] = None
    ssg: str = NO_SSG
    segments: Optional[int] = None
    numa: Optional[str] = None


@dataclass(frozen=True)
class SchedulePoint:
    direction: str
    sides: Tuple[Tuple[str, SideConfig], ...]

    @property
    def hybrid(self) -> bool:
        return "-" in self.direction

    def side(self, variant: str) -> Optional[SideConfig]:
        return dict(self.sides).get(variant)

    def to_dict(self) -> Dict[str, Any]:
        return {"direction": self.direction, "sides": {v: asdict(c) for v, c in self.sides}}


def side_variants(direction: str) -> Tuple[str, ...]:
    """Dense side first for hybrids, matching the lowering's variant order."""
    return tuple(direction.split("-"))


@dataclass(frozen=True)
class ScheduleSpace:
    direction: Tuple[str, ...] = DIRECTIONS
    parallelization: Tuple[str, ...] = PARALLEL_OPTIONS
    dense_vertexset: Tuple[Tuple[str, str], ...] = FULL_DENSE
    ssg: Tuple[str, ...] = (NO_SSG,) + SSG_SCHEMES
    numa: Tuple[str, ...] = NUMA_OPTIONS
    grain: Tuple[int, ...] = FULL_GRAINS
    segments: Tuple[int, ...] = FULL_SEGMENTS

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ScheduleSpace":
        """Axis restriction document; missing axes keep their full range."""
        vocab = {
            "direction": DIRECTIONS,
            "parallelization": PARALLEL_OPTIONS,
            "ssg": (NO_SSG,) + SSG_SCHEMES,
            "numa": NUMA_OPTIONS,
        }
        unknown = sorted(set(doc) - {f for f in cls.__dataclass_fields__})
        if unknown:
            raise UnknownOption(f"unknown schedule-space axis: {', '.join(unknown)}")
        kwargs: Dict[str, Any] = {}
        for axis, values in doc.items():
            if not isinstance(values, list) or not values:
                raise UnknownOption(f"axis '{axis}' needs a non-empty list")
            if axis in vocab:
                bad = [v for v in values if v not in vocab[axis]]
                if bad:
                    raise UnknownOption(f"axis '{axis}': unknown option(s) {bad}")
                kwargs[axis] = tuple(values)
            elif axis == "dense_vertexset":
                pairs = tuple(tuple(v) for v in values)
                bad = [p for p in pairs if len(p) != 2 or p[0] not in DENSE_LAYOUTS or p[1] not in DENSE_SIDES]
                if bad:
                    raise UnknownOption(f"axis 'dense_vertexset': bad entries {bad}")
                kwargs[axis] = pairs
            else:
                if not all(isinstance(v, int) and v >= 1 for v in values):
                    raise UnknownOption(f"axis '{axis}' takes positive integers")
                kwargs[axis] = tuple(values)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str) -> "ScheduleSpace":
        try:
            with open(path, "r") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise CompileError(f"cannot read schedule space {path}: {e}")
        return cls.from_dict(doc)

    # ------------------------------------------------------------ per-side options

    def side_options(self, variant: str) -> List[SideConfig]:
        parallel = [(p, None) if p == "serial" else (p, g)
                    for p in self.parallelization for g in ((None,) if p == "serial" else self.grain)]
        dense = [None] if variant == SPARSE else list(self.dense_vertexset)
        ssg = [(s, None, None) if s == NO_SSG else (s, k, m)
               for s in self.ssg
               for k in ((None,) if s == NO_SSG else self.segments)
               for m in ((None,) if s == NO_SSG else self.numa)]
        return [SideConfig(p, g, d, s, k, m) for (p, g), d, (s, k, m) in itertools.product(parallel, dense, ssg)]

    def sample_side(self, variant: str, rng: random.Random) -> SideConfig:
        parallelization = rng.choice(self.parallelization)
        grain = rng.choice(self.grain) if parallelization != "serial" else None
        dense = rng.choice(self.dense_vertexset) if variant != SPARSE else None
        ssg = rng.choice(self.ssg)
        segments = rng.choice(self.segments) if ssg != NO_SSG else None
        numa = rng.choice(self.numa) if ssg != NO_SSG else None
        return SideConfig(parallelization, grain, dense, ssg, segments, numa)

    # ------------------------------------------------------------ points

    def sample(self, rng: random.Random) -> SchedulePoint:
        direction = rng.choice(self.direction)
        return SchedulePoint(direction, tuple((v, self.sample_side(v, rng)) for v in side_variants(direction)))

    def points(self) -> Iterator[SchedulePoint]:
        for direction in self.direction:
            variants = side_variants(direction)
            for combo in itertools.product(*(self.side_options(v) for v in variants)):
                yield SchedulePoint(direction, tuple(zip(variants, combo)))

    def size(self) -> int:
        total = 0
        for direction in self.direction:
            count = 1
            for v in side_variants(direction):
                count *= len(self.side_options(v))
            total += count
        return total

    def _side_axes(self, cfg: SideConfig) -> List[str]:
        axes = []
        if len(self.parallelization) > 1:
            axes.append("parallelization")
        if cfg.grain is not None and len(self.grain) > 1:
            axes.append("grain")
        if cfg.dense_vertexset is not None and len(self.dense_vertexset) > 1:
            axes.append("dense_vertexset")
        if len(self.ssg) > 1:
            axes.append("ssg")
        if cfg.segments is not None and len(self.segments) > 1:
            axes.append("segments")
        if cfg.numa is not None and len(self.numa) > 1:
            axes.append("numa")
        return axes

    def _mutate_side(self, cfg: SideConfig, axis: str, rng: random.Random) -> SideConfig:
        current = getattr(cfg, axis)
        choice = rng.choice([v for v in getattr(self, axis) if v != current])
        cfg = replace(cfg, **{axis: choice})
        if axis == "parallelization":
            grain = None if choice == "serial" else (cfg.grain or rng.choice(self.grain))
            cfg = replace(cfg, grain=grain)
        if axis == "ssg":
            if choice == NO_SSG:
                cfg = replace(cfg, segments=None, numa=None)
            else:
                cfg = replace(cfg, segments=cfg.segments or rng.choice(self.segments),
                              numa=cfg.numa or rng.choice(self.numa))
        return cfg

    def mutate(self, point: SchedulePoint, rng: random.Random) -> SchedulePoint:
        """Change exactly one axis; the point comes back unchanged when every axis is fixed."""
        choices: List[Tuple[Optional[str], str]] = []
        if len(self.direction) > 1:
            choices.append((None, "direction"))
        for variant, cfg in point.sides:
            choices.extend((variant, axis) for axis in self._side_axes(cfg))
        if not choices:
            return point
        variant, axis = rng.choice(choices)
        if axis == "direction":
            direction = rng.choice([d for d in self.direction if d != point.direction])
            sides = []
            for v in side_variants(direction):
                old = point.side(v)
                sides.append((v, old if old is not None else self.sample_side(v, rng)))
            return SchedulePoint(direction, tuple(sides))
        sides = tuple((v, self._mutate_side(c, axis, rng) if v == variant else c) for v, c in point.sides)
        return SchedulePoint(point.direction, sides)


def sample_space(space: ScheduleSpace, rng: random.Random) -> SchedulePoint:
    return space.sample(rng)


def point_calls(point: SchedulePoint, label: str) -> List[ScheduleCall]:
    """Canonical order: direction, parallelization, dense vertexset, SSG, NUMA; hybrid sides are qualified."""
    qualify = (lambda v: v) if point.hybrid else (lambda v: None)
    calls = [ScheduleCall("configApplyDirection", label=label, config=point.direction)]
    for v, c in point.sides:
        calls.append(ScheduleCall("configApplyParallelization", label=label, config=c.parallelization,
                                  grain=c.grain, direction=qualify(v)))
    for v, c in point.sides:
        if c.dense_vertexset is not None:
            layout, side = c.dense_vertexset
            calls.append(ScheduleCall("configApplyDenseVertexSet", label=label, config=layout, vertexset=side,
                                      direction=qualify(v)))
    for v, c in point.sides:
        if c.ssg != NO_SSG:
            calls.append(ScheduleCall("configApplyNumSSG", label=label, config=c.ssg, num_segments=c.segments,
                                      direction=qualify(v)))
    for v, c in point.sides:
        if c.ssg != NO_SSG:
            calls.append(ScheduleCall("configApplyNUMA", label=label, config=c.numa, direction=qualify(v)))
    return calls


def point_schedule(point: SchedulePoint, label: str, base: Tuple[ScheduleCall, ...] = ()) -> Schedule:
    return Schedule(tuple(base) + tuple(point_calls(point, label)))


# ---------------------------------------------------------------- trials

@dataclass
class TrialResult:
    schedule: str
    point: Dict[str, Any]
    valid: bool
    dropped_calls: List[str] = field(default_factory=list)
    median_runtime_ns: Optional[int] = None
    runtimes_ns: List[int] = field(default_factory=list)
    counters: Dict[str, int] = field(default_factory=dict)
    matches_default: Optional[bool] = None
    error: Optional[str] = None

    def better_than(self, other: Optional["TrialResult"]) -> bool:
        if not self.valid:
            return False
        if other is None or not other.valid:
            return True
        return self.median_runtime_ns < other.median_runtime_ns


@dataclass
class TuneConfig:
    label: str
    trials: Optional[int] = None
    seconds: Optional[float] = None
    seed: int = 0
    repeats: int = 3
    warmup: int = 1
    restart_after: int = 5
    strategy: str = "hill"

    def __post_init__(self):
        if self.trials is None and self.seconds is None:
            self.trials = 30
        if (self.trials is not None and self.trials < 1) or (self.seconds is not None and self.seconds <= 0):
            raise BudgetZero(f"tuning budget must be positive (trials={self.trials}, seconds={self.seconds})")
        if self.repeats < 1:
            raise BudgetZero("each trial needs at least one timed repeat")


class Budget:
    def __init__(self, trials: Optional[int], seconds: Optional[float]):
        self.trials = trials
        self.deadline = time.monotonic() + seconds if seconds is not None else None
        self.used = 0

    def spend(self) -> bool:
        """Take one trial; False once the budget is gone."""
        if self.trials is not None and self.used >= self.trials:
            return False
        if self.deadline is not None and self.used > 0 and time.monotonic() >= self.deadline:
            return False
        self.used += 1
        return True


Evaluate = Callable[[SchedulePoint], TrialResult]


class SearchStrategy(Protocol):
    def search(self, space: ScheduleSpace, evaluate: Evaluate, budget: Budget, rng: random.Random) -> None:
        ...


class RandomSearch:
    def search(self, space: ScheduleSpace, evaluate: Evaluate, budget: Budget, rng: random.Random) -> None:
        while budget.spend():
            evaluate(space.sample(rng))


class ExhaustiveSearch:
    def search(self, space: ScheduleSpace, evaluate: Evaluate, budget: Budget, rng: random.Random) -> None:
        for point in space.points():
            if not budget.spend():
                return
            evaluate(point)


class HillClimbSearch:
    def __init__(self, restart_after: int = 5):
        self.restart_after = restart_after

    def search(self, space: ScheduleSpace, evaluate: Evaluate, budget: Budget, rng: random.Random) -> None:
        current_point, current, stall = None, None, 0
        while budget.spend():
            if current_point is None or stall >= self.restart_after:
                point = space.sample(rng)
                result = evaluate(point)
                current_point, current, stall = point, result, 0
                continue
            point = space.mutate(current_point, rng)
            result = evaluate(point)
            if result.better_than(current):
                current_point, current, stall = point, result, 0
            else:
                stall += 1


STRATEGIES: Dict[str, Callable[[TuneConfig], SearchStrategy]] = {
    "hill": lambda cfg: HillClimbSearch(cfg.restart_after),
    "random": lambda cfg: RandomSearch(),
    "exhaustive": lambda cfg: ExhaustiveSearch(),
}


@dataclass
class TuneResult:
    label: str
    strategy: str
    seed: int
    best: Optional[TrialResult]
    history: List[TrialResult]
    visited: List[str]
    best_so_far_ns: List[Optional[int]]

    def to_dict(self) -> Dict[str, Any]:
        return with_schema({
            "label": self.label,
            "strategy": self.strategy,
            "seed": self.seed,
            "best": asdict(self.best) if self.best else None,
            "history": [asdict(t) for t in self.history],
            "visited": self.visited,
            "best_so_far_ns": self.best_so_far_ns,
        })


class Autotuner:
    """`measure` replaces wall-clock timing with a deterministic objective (tests, dry runs)."""

    def __init__(self, compiled: CompiledProgram, graph: Graph, config: TuneConfig,
                 space: Optional[ScheduleSpace] = None, options: Optional[EngineOptions] = None,
                 overrides: Optional[Dict[str, Any]] = None,
                 measure: Optional[Callable[[CompiledProgram, SchedulePoint], int]] = None):
        self.compiled = compiled
        self.graph = graph
        self.config = config
        self.space = space or ScheduleSpace()
        self.options = options or EngineOptions()
        self.overrides = overrides or {}
        self.measure = measure
        self.base = tuple(c for c in compiled.schedule.calls if c.func in TRANSFORM_FUNCTIONS)
        self.memo: Dict[str, TrialResult] = {}
        self.history: List[TrialResult] = []
        self.visited: List[str] = []
        self.best: Optional[TrialResult] = None
        self.best_so_far: List[Optional[int]] = []
        self.reference = None
        self.pool: Optional[WorkerPool] = None

    def _check_label(self):
        base = self.compiled.with_schedule(Schedule(self.base), LENIENT)
        base.lowered.plan(self.config.label)

    def _default_vectors(self):
        default = self.compiled.with_schedule(Schedule(), LENIENT)
        serial = EngineOptions(threads=1, hybrid_threshold=self.options.hybrid_threshold)
        return run_compiled(default, self.graph, serial, self.overrides).vectors()

    def _time(self, compiled: CompiledProgram) -> Tuple[List[int], Any]:
        result = None
        for _ in range(self.config.warmup):
            run_compiled(compiled, self.graph, self.options, self.overrides, self.pool)
        runtimes = []
        for _ in range(self.config.repeats):
            result = run_compiled(compiled, self.graph, self.options, self.overrides, self.pool)
            runtimes.append(result.wall_time_ns)
        return runtimes, result

    def evaluate(self, point: SchedulePoint) -> TrialResult:
        schedule = point_schedule(point, self.config.label, self.base)
        text = schedule.to_text()
        self.visited.append(text)
        trial = self.memo.get(text)
        if trial is None:
            trial = self._run_trial(point, schedule, text)
            self.memo[text] = trial
            self.history.append(trial)
        if trial.better_than(self.best):
            self.best = trial
        self.best_so_far.append(self.best.median_runtime_ns if self.best else None)
        return trial

    def _run_trial(self, point: SchedulePoint, schedule: Schedule, text: str) -> TrialResult:
        trial = TrialResult(schedule=text, point=point.to_dict(), valid=False)
        try:
            compiled = self.compiled.with_schedule(schedule, LENIENT)
            trial.dropped_calls = compiled.dropped
            if self.measure is not None:
                trial.runtimes_ns = [int(self.measure(compiled, point))]
                trial.median_runtime_ns = trial.runtimes_ns[0]
                trial.valid = True
                return trial
            runtimes, result = self._time(compiled)
        except GraphWeaveError as e:
            trial.error = f"{type(e).__name__}: {e}"
            logger.info("[Autotuner] invalid trial: %s", trial.error)
            return trial
        trial.valid = True
        trial.runtimes_ns = runtimes
        trial.median_runtime_ns = int(statistics.median(runtimes))
        trial.counters = result.state.counters.as_dict()
        trial.matches_default = compare_runs(self.reference, result.vectors()) is None
        logger.info("[Autotuner] trial %d: %.3f ms (%s)", len(self.history) + 1, trial.median_runtime_ns / 1e6,
                    point.direction)
        return trial

    def tune(self) -> TuneResult:
        self._check_label()
        cfg = self.config
        if cfg.strategy not in STRATEGIES:
            raise UnknownOption(f"unknown search strategy '{cfg.strategy}' (choose from {', '.join(STRATEGIES)})")
        if self.measure is None:
            self.reference = self._default_vectors()
        rng = random.Random(cfg.seed)
        budget = Budget(cfg.trials, cfg.seconds)
        with WorkerPool(self.options.threads) as pool:
            self.pool = pool
            try:
                STRATEGIES[cfg.strategy](cfg).search(self.space, self.evaluate, budget, rng)
            finally:
                self.pool = None
        if self.best is not None:
            logger.info("[Autotuner] best after %d trial(s): %.3f ms", budget.used,
                        self.best.median_runtime_ns / 1e6)
        return TuneResult(cfg.label, cfg.strategy, cfg.seed, self.best, self.history, self.visited,
                          self.best_so_far)


def tune(compiled: CompiledProgram, graph: Graph, config: TuneConfig, space: Optional[ScheduleSpace] = None,
         options: Optional[EngineOptions] = None, overrides: Optional[Dict[str, Any]] = None) -> TuneResult:
    return Autotuner(compiled, graph, config, space, options, overrides).tune()
