"""ZSM domain services forming the closed loop.

The pure decision functions (routing, detection, forecasting, decision,
orchestration) live at module level so they can be tested in isolation;
:class:`DataStorage` and :class:`Analytics` hold the per-domain state.
"""
from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass, field
from typing import Sequence

from .errors import (
    HorizonTooShort,
    Infeasible,
    InsufficientData,
    PreconditionFailed,
    StaleContext,
    StaleModel,
)
from .nfv import MIN_VCPU, ZERO, Infrastructure, ResourceProfile
from .slices import ControlPlanePolicy, PolicyKind


class Metric(str, enum.Enum):
    RESPONSE_TIME_MS = "ResponseTimeMs"
    UTILIZATION_RATIO = "UtilizationRatio"
    REQUEST_RATE = "RequestRate"


@dataclass(frozen=True)
class TelemetrySample:
    nf_id: str
    metric: Metric
    value: float
    tick: int

    def __post_init__(self):
        if self.metric is Metric.RESPONSE_TIME_MS and not self.value > 0:
            raise ValueError(f"response time must be positive, got {self.value}")
        if self.metric is Metric.UTILIZATION_RATIO and not 0 <= self.value <= 1:
            raise ValueError(f"utilization must lie in [0, 1], got {self.value}")


class Tag(str, enum.Enum):
    STORE = "Store"
    ANALYZE = "Analyze"
    LOCALIZED = "Localized"


DESTINATIONS = {
    Tag.STORE: "DomainDataStorage",
    Tag.ANALYZE: "DomainAnalytics",
    Tag.LOCALIZED: "UDSF",
}


def route_sample(sample: TelemetrySample, tag: Tag | str) -> str:
    return DESTINATIONS[Tag(tag)]


def forecast_route(horizon: int, h_short: int = 10) -> str:
    """Short horizons go to the control-plane NWDAF, longer ones to ZSM analytics."""
    return "NWDAF" if horizon <= h_short else "DomainAnalytics"


@dataclass(frozen=True)
class Thresholds:
    H_short: int = 10
    W: int = 5
    W_base: int = 20
    k: int = 3
    T_abs: float = 100.0
    U_hi: float = 0.8
    U_target: float = 0.5
    capacity_per_vcpu: float = 10.0
    base_rt: float = 10.0
    sigma: float = 3.0
    epsilon: float = 0.01


class DecisionKind(str, enum.Enum):
    SCALE_VNF = "ScaleVnf"
    NO_ACTION = "NoAction"
    INVESTIGATE = "Investigate"


class Route(str, enum.Enum):
    NSSMF_INTEGRATED = "NssmfIntegrated"
    ADAPTER_TO_NFVO = "AdapterToNfvo"
    NSMF_EXTERNAL = "NsmfExternal"


ROUTES = {"1A": Route.NSSMF_INTEGRATED, "1B": Route.ADAPTER_TO_NFVO, "2": Route.NSMF_EXTERNAL}


@dataclass(frozen=True)
class AnomalyEvent:
    event_id: str
    nf_id: str
    slice_id: str
    onset_tick: int
    detected_tick: int
    evidence: tuple[TelemetrySample, ...]
    baseline_mean: float
    baseline_std: float
    kind: str = "ResponseTimeDegradation"


@dataclass(frozen=True)
class DecisionContext:
    utilization: float
    load: float
    capacity_per_vcpu: float
    current_vcpu: int
    tick: int


@dataclass(frozen=True)
class Decision:
    decision_id: str
    kind: DecisionKind
    target_vnf: str | None
    requested_delta: ResourceProfile
    rationale: str
    tick: int

    def __post_init__(self):
        if self.kind is DecisionKind.SCALE_VNF and self.requested_delta.is_zero():
            raise ValueError("ScaleVnf decision needs a non-zero delta")


@dataclass(frozen=True)
class DomainServiceModel:
    snapshot_tick: int
    pops: dict[str, tuple[ResourceProfile, ResourceProfile]]  # capacity, allocated
    placements: dict[str, str]  # vnf -> pop
    nf_to_vnf: dict[str, str]
    vnf_resources: dict[str, ResourceProfile]

    @classmethod
    def snapshot(cls, infra: Infrastructure, tick: int) -> "DomainServiceModel":
        return cls(
            tick,
            {p: (pop.capacity, pop.allocated) for p, pop in infra.pops.items()},
            {v: vnf.pop for v, vnf in infra.vnfs.items()},
            {vnf.hosted_nf: v for v, vnf in infra.vnfs.items()},
            {v: vnf.resources for v, vnf in infra.vnfs.items()},
        )

    def headroom(self, vnf_id: str) -> ResourceProfile:
        capacity, allocated = self.pops[self.placements[vnf_id]]
        return capacity - allocated


@dataclass(frozen=True)
class ScalePlan:
    plan_id: str
    decision_id: str
    target_vnf: str
    granted_delta: ResourceProfile
    route: Route


# -- analytics -----------------------------------------------------------

def detect_anomaly(window: Sequence[TelemetrySample], *, w_base: int = 20, k: int = 3,
                   t_abs: float = 100.0, sigma: float = 3.0,
                   slice_id: str = "-") -> AnomalyEvent | None:
    """Baseline 3-sigma rule with ``k`` consecutive confirmations.

    The oldest ``w_base`` samples of the window form the baseline; the
    newest ``k`` must each exceed ``mean + sigma * std`` or ``t_abs``.
    """
    if len(window) < w_base + k:
        raise InsufficientData(f"{len(window)} samples < {w_base + k}")
    baseline = [s.value for s in window[:w_base]]
    mean = statistics.fmean(baseline)
    std = statistics.pstdev(baseline, mean)
    limit = mean + sigma * std
    recent = tuple(window[-k:])
    if not all(s.value > limit or s.value > t_abs for s in recent):
        return None
    nf_id = recent[-1].nf_id
    return AnomalyEvent(f"ev-{nf_id}-{recent[-1].tick}", nf_id, slice_id, recent[0].tick,
                        recent[-1].tick, recent, mean, std)


def zsm_forecast(samples: Sequence[tuple[int, float]], horizon: int, *, h_short: int = 10) -> float:
    """Least-squares line through ``(tick, value)`` pairs, ``horizon`` ticks past the last."""
    if horizon <= h_short:
        raise HorizonTooShort(f"horizon {horizon} <= {h_short} belongs to the control plane")
    if len(samples) < 2:
        raise InsufficientData(f"{len(samples)} samples < 2")
    ticks = [float(t) for t, _ in samples]
    values = [float(v) for _, v in samples]
    if len(set(ticks)) == 1:
        raise InsufficientData("all samples share one tick")
    slope, intercept = statistics.linear_regression(ticks, values)
    return slope * (ticks[-1] + horizon) + intercept


@dataclass
class OpenEvent:
    event: AnomalyEvent
    below: int = 0


class Analytics:
    """Per-NF windows with single-open-event suppression and clearing."""

    def __init__(self, thresholds: Thresholds, slice_id: str = "-"):
        self.t = thresholds
        self.slice_id = slice_id
        self.windows: dict[str, list[TelemetrySample]] = {}
        self.open: dict[str, OpenEvent] = {}
        self.suppressed = 0

    @property
    def window_size(self) -> int:
        return self.t.W_base + self.t.k

    def ingest(self, sample: TelemetrySample) -> None:
        win = self.windows.setdefault(sample.nf_id, [])
        win.append(sample)
        del win[:-self.window_size]

    def evaluate(self, nf_id: str) -> tuple[AnomalyEvent | None, AnomalyEvent | None]:
        """Returns ``(new_event, cleared_event)`` for the latest window of ``nf_id``."""
        win = self.windows.get(nf_id, [])
        cleared = None
        current = self.open.get(nf_id)
        if current is not None and win and win[-1].tick > current.event.detected_tick:
            ev = current.event
            if win[-1].value < ev.baseline_mean + ev.baseline_std:
                current.below += 1
            else:
                current.below = 0
            if current.below >= 2 * self.t.k:
                cleared = ev
                del self.open[nf_id]
        if len(win) < self.window_size:
            return None, cleared
        event = detect_anomaly(win, w_base=self.t.W_base, k=self.t.k, t_abs=self.t.T_abs,
                               sigma=self.t.sigma, slice_id=self.slice_id)
        if event is None:
            return None, cleared
        if nf_id in self.open:
            self.suppressed += 1
            return None, cleared
        self.open[nf_id] = OpenEvent(event)
        return event, cleared


class DataStorage:
    """Domain Data Storage: append-only per-(NF, metric) series."""

    def __init__(self):
        self.series: dict[tuple[str, Metric], list[TelemetrySample]] = {}
        self.records: list[tuple[str, str]] = []  # free-form knowledge entries

    def store(self, sample: TelemetrySample) -> None:
        self.series.setdefault((sample.nf_id, sample.metric), []).append(sample)

    def latest(self, nf_id: str, metric: Metric) -> TelemetrySample | None:
        s = self.series.get((nf_id, metric))
        return s[-1] if s else None

    def values(self, nf_id: str, metric: Metric) -> list[TelemetrySample]:
        return list(self.series.get((nf_id, metric), []))

    def __contains__(self, sample: TelemetrySample) -> bool:
        return sample in self.series.get((sample.nf_id, sample.metric), [])


# -- intelligence ----------------------------------------------------------

def decide(event: AnomalyEvent | None, context: DecisionContext, *, target_vnf: str | None,
           decision_id: str, u_hi: float = 0.8, u_target: float = 0.5) -> Decision:
    if event is None:
        return Decision(decision_id, DecisionKind.NO_ACTION, target_vnf, ZERO, "no-open-event", context.tick)
    if context.tick < event.onset_tick:
        raise StaleContext(f"context at {context.tick} predates onset {event.onset_tick}")
    if context.utilization >= u_hi:
        wanted = math.ceil(context.load / (u_target * context.capacity_per_vcpu))
        delta = wanted - context.current_vcpu
        if delta > 0:
            return Decision(decision_id, DecisionKind.SCALE_VNF, target_vnf,
                            ResourceProfile(vcpu=delta), "util>=U_hi", context.tick)
    return Decision(decision_id, DecisionKind.INVESTIGATE, target_vnf, ZERO, "util<U_hi", context.tick)


def generate_dynamic_policy(decision: Decision, nf_id: str, *, version: int, tick: int) -> ControlPlanePolicy:
    """Admission rate cap on the affected NF while it is being scaled."""
    if decision.kind is not DecisionKind.SCALE_VNF:
        raise PreconditionFailed(f"{decision.decision_id} is {decision.kind.value}, not ScaleVnf")
    return ControlPlanePolicy(
        f"ratecap-{nf_id}-v{version}", PolicyKind.DYNAMIC, nf_id,
        {"rule": "admission_rate_cap", "while": "scaling", "vnf": decision.target_vnf},
        tick, decision.decision_id,
    )


# -- orchestration -----------------------------------------------------------

def orchestrate(decision: Decision, model: DomainServiceModel, option: str, *, plan_id: str) -> ScalePlan:
    if model.snapshot_tick != decision.tick:
        raise StaleModel(f"model at {model.snapshot_tick}, decision at {decision.tick}")
    if decision.kind is not DecisionKind.SCALE_VNF or decision.target_vnf is None:
        raise PreconditionFailed(f"{decision.decision_id} is not a scaling decision")
    headroom = model.headroom(decision.target_vnf)
    requested = decision.requested_delta
    if requested.vcpu > 0 and headroom.vcpu < MIN_VCPU:
        raise Infeasible(f"headroom {headroom.text()} below one vCPU")
    granted = requested.cap_growth(headroom)
    if granted.is_zero():
        raise Infeasible(f"nothing of {requested.text()} fits in {headroom.text()}")
    return ScalePlan(plan_id, decision.decision_id, decision.target_vnf, granted, ROUTES[option])


@dataclass
class Subscription:
    subscription_id: str
    consumer: str
    topic: str


@dataclass
class Notifier:
    """Analytics notification topics (``zsm.domain.analytics.anomaly.<slice>``)."""

    subscriptions: dict[tuple[str, str], Subscription] = field(default_factory=dict)

    def subscribe(self, consumer: str, topic: str) -> str:
        key = (consumer, topic)
        if key not in self.subscriptions:
            self.subscriptions[key] = Subscription(f"sub-{len(self.subscriptions) + 1}", consumer, topic)
        return self.subscriptions[key].subscription_id

    def matching(self, topic: str) -> list[Subscription]:
        import fnmatch
        return [s for _, s in sorted(self.subscriptions.items())
                if fnmatch.fnmatchcase(topic, s.topic)]
