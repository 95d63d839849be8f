"""Discrete-event core: workload profiles, the closed-form response-time
model, a seeded counter-based random source and the per-tick scheduler."""
from __future__ import annotations

import enum
import hashlib
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

from .zsm import Metric, TelemetrySample

EPSILON = 0.01


@dataclass(frozen=True)
class Surge:
    start: int
    end: int | None  # exclusive; None means until the end of the run
    multiplier: float

    def covers(self, tick: int) -> bool:
        return tick >= self.start and (self.end is None or tick < self.end)


@dataclass(frozen=True)
class LoadProfile:
    """Offered load in requests/s, optionally multiplied during surges."""

    nf_id: str
    base_load: float
    surges: tuple[Surge, ...] = ()

    def __post_init__(self):
        if self.base_load < 0:
            raise ValueError(f"negative base load for {self.nf_id}")
        ordered = sorted(self.surges, key=lambda s: s.start)
        for s in ordered:
            if s.end is not None and s.end <= s.start:
                raise ValueError(f"empty surge interval {s.start}:{s.end} for {self.nf_id}")
            if s.multiplier < 0:
                raise ValueError(f"negative surge multiplier for {self.nf_id}")
        for a, b in zip(ordered, ordered[1:]):
            if a.end is None or a.end > b.start:
                raise ValueError(f"overlapping surges for {self.nf_id}")

    def load_at(self, tick: int) -> float:
        for s in self.surges:
            if s.covers(tick):
                return self.base_load * s.multiplier
        return self.base_load


def counter_uniform(seed: int, stream: str, counter: int) -> float:
    """Uniform draw in [0, 1) that depends only on ``(seed, stream, counter)``."""
    digest = hashlib.blake2b(f"{seed}:{stream}:{counter}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2 ** 64


@dataclass
class SimClock:
    tick: int = 0
    seed: int = 0

    def advance(self) -> int:
        self.tick += 1
        return self.tick

    def uniform(self, stream: str, counter: int | None = None) -> float:
        return counter_uniform(self.seed, stream, self.tick if counter is None else counter)


def utilization(load: float, vcpu: int, capacity_per_vcpu: float, epsilon: float = EPSILON) -> float:
    if vcpu < 1:
        raise ValueError("hosting VNF needs at least one vCPU")
    return min(load / (vcpu * capacity_per_vcpu), 1.0 - epsilon)


def response_time(load: float, vcpu: int, capacity_per_vcpu: float, base_rt: float,
                  epsilon: float = EPSILON) -> float:
    return base_rt / (1.0 - utilization(load, vcpu, capacity_per_vcpu, epsilon))


@dataclass(frozen=True)
class TelemetryBatch:
    """One tick of samples from one NF."""

    nf_id: str
    tick: int
    load: float
    response_time: TelemetrySample
    utilization: TelemetrySample
    request_rate: TelemetrySample

    @property
    def samples(self) -> tuple[TelemetrySample, ...]:
        return (self.response_time, self.utilization, self.request_rate)


def generate_telemetry(nf_id: str, load: float, base_rt: float, *, vcpu: int, tick: int,
                       capacity_per_vcpu: float = 10.0, epsilon: float = EPSILON,
                       jitter: float = 0.0, draw: float = 0.5) -> TelemetryBatch:
    """Samples for ``nf_id`` at ``tick``.

    ``jitter`` scales the response time by ``1 + jitter * (2 * draw - 1)``;
    with the default ``draw`` of 0.5 the model is exact.
    """
    u = utilization(load, vcpu, capacity_per_vcpu, epsilon)
    rt = base_rt / (1.0 - u)
    if jitter:
        rt *= 1.0 + jitter * (2.0 * draw - 1.0)
    return TelemetryBatch(
        nf_id, tick, load,
        TelemetrySample(nf_id, Metric.RESPONSE_TIME_MS, rt, tick),
        TelemetrySample(nf_id, Metric.UTILIZATION_RATIO, u, tick),
        TelemetrySample(nf_id, Metric.REQUEST_RATE, load, tick),
    )


class Phase(enum.IntEnum):
    WORKLOAD = 0
    COLLECT = 1
    ANALYTICS = 2
    INTELLIGENCE = 3
    CONTROL = 4
    MANO = 5


@dataclass(order=True)
class _Task:
    tick: int
    phase: int
    key: str
    seq: int
    action: Callable[[], Any] = field(compare=False)


class Scheduler:
    """Runs tasks ordered by ``(tick, phase, key, insertion)``."""

    def __init__(self):
        self._heap: list[_Task] = []
        self._seq = itertools.count()

    def schedule(self, tick: int, phase: Phase, key: str, action: Callable[[], Any]) -> None:
        heapq.heappush(self._heap, _Task(tick, int(phase), key, next(self._seq), action))

    def pending(self, tick: int | None = None) -> int:
        return sum(1 for t in self._heap if tick is None or t.tick == tick)

    def run(self, tick: int) -> int:
        """Execute every task due at or before ``tick``; returns how many ran."""
        ran = 0
        while self._heap and self._heap[0].tick <= tick:
            heapq.heappop(self._heap).action()
            ran += 1
        return ran


def tick(world) -> list:
    """Advance ``world`` by one tick and return the events it emitted."""
    return world.step()


@dataclass
class RunResult:
    world: Any
    trace: list
    flag: str  # "predicate" or "max_ticks"
    ticks: int


def run_until(world, predicate: Callable[[Any], bool] | None, max_ticks: int) -> RunResult:
    if max_ticks <= 0:
        raise ValueError("max_ticks must be positive")
    ran = 0
    flag = "max_ticks"
    while ran < max_ticks:
        world.step()
        ran += 1
        if predicate is not None and predicate(world):
            flag = "predicate"
            break
    return RunResult(world, world.trace, flag, ran)
