"""A runnable world built from a :class:`ScenarioConfig`.

Domain layout (ids)::

    e2e                       E2E service management (delegation only)
    └── e2e-cn                core-network coordination, hosts NSMF/NSSMF
        │                     and adapters in options 1A/1B
        ├── virt-<pop>        option 1A only: MANO as a ZSM domain
        ├── cn-shared         shared NFs (AMF, NRF, ...)
        ├── cn-overarching    overarching NFs (NSSF)
        └── sd-<slice>        one slice-specific domain per slice
    ext-3gpp                  option 2 only: standalone 3GPP management system

Outside option 1A the NFV-MANO stack is the standalone ``nfv-mano`` system
reached only through the non-service-based ``Os-Ma-nfvo.ScaleVnf`` operation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .engine import Phase, Scheduler, SimClock, generate_telemetry
from .errors import InvariantViolation, NotExposed, SimError
from .fabric import AdapterBinding, Codec, ExposurePolicy, Fabric, Level, ManagementDomain, Rule
from .mgmt3gpp import (
    NSMF_CAPABILITY,
    NSMF_NOTIFY,
    NSSMF_CAPABILITY,
    NSSMF_FAULT,
    EgmfPolicy,
    NsmfService,
    NssmfService,
    binding_for,
)
from .nfv import Infrastructure, Mano, Origin, ScaleOutcome, ScaleRequest, VimTicket
from .scenario import ScenarioConfig, SliceSpec
from .slices import NetworkFunction, Pcf, Sharing, SliceInstance, SliceManager, StorageClass, Udsf, nwdaf_forecast
from .steps import kind_of
from .trace import TraceRecord, fmt_num
from .zsm import (
    AnomalyEvent,
    Analytics,
    DataStorage,
    Decision,
    DecisionContext,
    DecisionKind,
    DomainServiceModel,
    Metric,
    Notifier,
    TelemetrySample,
    decide,
    forecast_route,
    generate_dynamic_policy,
    orchestrate,
    zsm_forecast,
)

E2E = "e2e"
CN = "e2e-cn"
EXT = "ext-3gpp"
MANO_SYSTEM = "nfv-mano"
OS_MA_SCALE = "Os-Ma-nfvo.ScaleVnf"

DC = "zsm.domain.data.collection"
DDS = "zsm.domain.data.storage"
ANALYTICS = "zsm.domain.analytics"
ANOMALY = "zsm.domain.analytics.anomaly"
FORECAST = "zsm.domain.analytics.forecast"
INTELLIGENCE = "zsm.domain.intelligence"
OUTCOME = "zsm.domain.intelligence.outcome"
ORCHESTRATION = "zsm.domain.orchestration"
CONTROL = "zsm.domain.control.resource_lifecycle"

SLICE_CAPABILITIES = (DC, DDS, ANALYTICS, ANOMALY, FORECAST, INTELLIGENCE, OUTCOME, ORCHESTRATION, CONTROL)
MANO_CAPABILITIES = ("mano.nfvo.scale_vnf", "mano.nfvo.validate", "mano.nfvo.feasibility",
                     "mano.nfvo.scale_resource", "mano.vnfm.prepare", "mano.vim.modify_resources")

NFV_ADAPTER = "zsm.adapter.nfv"
GPP_ADAPTER = "zsm.adapter.3gpp"
NOTIFY_ADAPTER = "zsm.adapter.3gpp.notify"

_RESPONSE_FIELDS = {"ticket": "vimTicketId", "granted_vcpu": "grantedVcpu",
                    "granted_memory": "grantedMemoryMiB", "granted_storage": "grantedStorageGiB"}

OS_MA_CODEC = Codec({
    "op": "operation", "request_id": "requestId", "vnf": "vnfInstanceId",
    "delta_vcpu": "scaleVcpu", "delta_memory": "scaleMemoryMiB", "delta_storage": "scaleStorageGiB",
    "correlation_id": "correlationId", **_RESPONSE_FIELDS,
})

NSMF_CODEC = Codec({
    "slice": "nsiId", "op": "operationType", "request_id": "jobId", "vnf": "vnfId",
    "delta_vcpu": "vcpuDelta", "delta_memory": "memoryDeltaMiB", "delta_storage": "storageDeltaGiB",
    "correlation_id": "correlationId", "ticket": "nfvoTicketId", "granted_vcpu": "grantedVcpu",
    "granted_memory": "grantedMemoryMiB", "granted_storage": "grantedStorageGiB",
})

NOTIFY_CODEC = Codec({"event": "notificationId", "slice": "nsiId", "topic": "topic", "ack": "ack"})


def anomaly_topic(slice_id: str) -> str:
    return f"{ANOMALY}.{slice_id}"


def _ticket_fields(ticket: VimTicket) -> dict:
    return {"ticket": ticket.ticket_id, "granted_vcpu": ticket.delta.vcpu,
            "granted_memory": ticket.delta.memory, "granted_storage": ticket.delta.storage}


@dataclass(frozen=True)
class ForecastResult:
    nf_id: str
    tick: int
    horizon: int
    destination: str
    value: float | None
    error: str = ""


class SharedCollector:
    """Data collection and storage for a shared or overarching NF domain."""

    def __init__(self, world: "World", domain_id: str):
        self.world = world
        self.domain = domain_id
        self.storage = DataStorage()
        world.fabric.bind(domain_id, DC, self.collect)
        world.fabric.bind(domain_id, DDS, self.store)

    def collect(self, env) -> None:
        batch = env.payload
        self.world.fabric.invoke(f"{self.domain}/{DC}", f"{self.domain}/{DDS}", batch.samples,
                                 correlation_id=env.correlation_id, step="2'", slice_id=env.slice_id,
                                 detail=f"class=Management nf={batch.nf_id}")

    def store(self, env) -> None:
        for sample in env.payload:
            self.storage.store(sample)


class ClosedLoop:
    """The collect, analyze, decide, orchestrate, control cycle of one slice domain."""

    def __init__(self, world: "World", inst: SliceInstance, spec: SliceSpec):
        self.world = world
        self.fabric = world.fabric
        self.slice_id = inst.slice_id
        self.domain = inst.mgmt_domain
        self.subnet = f"{inst.slice_id}-subnet"
        self.t = world.t
        self.storage = DataStorage()
        self.analytics = Analytics(world.t, inst.slice_id)
        pcf = f"pcf-{inst.slice_id}"
        self.pcf_nf = pcf if pcf in inst.dedicated_nfs else None
        self.pcf = Pcf(inst.nfs) if self.pcf_nf else None
        udsf = f"udsf-{inst.slice_id}"
        self.udsf_nf = udsf if udsf in inst.dedicated_nfs else None
        self.udsf = Udsf(forward=self.storage.store) if self.udsf_nf else None
        nwdaf = f"nwdaf-{inst.slice_id}"
        self.nwdaf_nf = nwdaf if nwdaf in inst.dedicated_nfs else None
        self.policy_versions: dict[str, int] = {}
        self.inflight: dict[str, Decision] = {}
        self.knowledge: list[tuple[str, str]] = []

        bind = lambda cap, fn: self.fabric.bind(self.domain, cap, fn)  # noqa: E731
        bind(DC, self.on_collect)
        bind(DDS, self.on_store)
        bind(ANALYTICS, self.on_analyze)
        bind(ANOMALY, self.on_anomaly)
        bind(FORECAST, self.on_zsm_forecast)
        bind(INTELLIGENCE, self.on_intelligence)
        bind(OUTCOME, self.on_outcome_record)
        bind(ORCHESTRATION, self.on_orchestration)
        bind(CONTROL, self.on_control)
        if self.pcf_nf:
            bind(f"nf.{self.pcf_nf}", lambda env: self.pcf.install(env.payload))
        if self.udsf_nf:
            bind(f"nf.{self.udsf_nf}", lambda env: self.udsf.store(env.payload, StorageClass.LOCALIZED))
        if self.nwdaf_nf:
            bind(f"nf.{self.nwdaf_nf}", self.on_nwdaf_forecast)

    def ref(self, capability: str) -> str:
        return f"{self.domain}/{capability}"

    def key(self, cid: str) -> str:
        return f"{self.domain} {cid}"

    # (b) collection and storage ------------------------------------------

    def on_collect(self, env) -> None:
        batch = env.payload
        cid, f = env.correlation_id, self.fabric
        f.invoke(self.ref(DC), self.ref(DDS), batch.samples, correlation_id=cid, step="2'",
                 slice_id=self.slice_id, detail=f"class=Management nf={batch.nf_id}")
        rt = batch.response_time
        f.invoke(self.ref(DC), self.ref(ANALYTICS), rt, correlation_id=cid, step="2",
                 slice_id=self.slice_id, detail=f"metric={rt.metric.value} value={fmt_num(rt.value)}")
        if self.udsf is not None:
            f.invoke(self.ref(DC), self.ref(f"nf.{self.udsf_nf}"), rt, correlation_id=f"{cid}:udsf",
                     slice_id=self.slice_id,
                     detail=f"class=Localized nf={batch.nf_id} metric={rt.metric.value} value={fmt_num(rt.value)}")

    def on_store(self, env) -> None:
        payload = env.payload
        if isinstance(payload, tuple) and payload and isinstance(payload[0], TelemetrySample):
            for sample in payload:
                self.storage.store(sample)
        else:
            self.knowledge.append((env.correlation_id, str(payload)))

    # (c) analytics ---------------------------------------------------------

    def on_analyze(self, env) -> None:
        sample = env.payload
        self.analytics.ingest(sample)
        cid = env.correlation_id
        self.world.scheduler.schedule(self.world.tick, Phase.ANALYTICS, self.key(cid),
                                      lambda: self.evaluate(sample.nf_id, cid))

    def evaluate(self, nf_id: str, cid: str) -> None:
        new, cleared = self.analytics.evaluate(nf_id)
        if cleared is not None:
            self.fabric.invoke(self.ref(ANALYTICS), self.ref(DDS), ("cleared", cleared.event_id),
                               correlation_id=f"{cid}:clear", slice_id=self.slice_id,
                               detail=f"cleared={cleared.event_id} nf={nf_id}")
        if new is not None:
            self.fabric.invoke(self.ref(ANALYTICS), self.ref(ANOMALY), new, correlation_id=cid, step="3",
                               slice_id=self.slice_id,
                               detail=(f"event={new.event_id} nf={nf_id} onset={new.onset_tick} "
                                       f"mean={fmt_num(new.baseline_mean)} std={fmt_num(new.baseline_std)}"))

    def on_anomaly(self, env) -> None:
        event: AnomalyEvent = env.payload
        cid = env.correlation_id
        self.world.emit("anomaly", event)
        for sub in self.world.notifier.matching(anomaly_topic(self.slice_id)):
            self.fabric.adapt_invoke(self.world.notify_binding,
                                     {"event": event.event_id, "slice": self.slice_id, "topic": sub.topic},
                                     caller=self.ref(ANOMALY), correlation_id=f"{cid}:ntf",
                                     slice_id=self.slice_id)
        self.world.scheduler.schedule(self.world.tick, Phase.INTELLIGENCE, self.key(cid),
                                      lambda: self.fabric.invoke(
                                          self.ref(ANOMALY), self.ref(INTELLIGENCE), event, correlation_id=cid,
                                          step="4", slice_id=self.slice_id, detail=f"event={event.event_id}"))

    # (d) intelligence ------------------------------------------------------------

    def on_intelligence(self, env) -> Decision:
        event: AnomalyEvent = env.payload
        cid = env.correlation_id
        nf_id = event.nf_id
        vnf_id = self.world.nf_vnf[nf_id]
        util = self.storage.latest(nf_id, Metric.UTILIZATION_RATIO)
        rate = self.storage.latest(nf_id, Metric.REQUEST_RATE)
        context = DecisionContext(util.value if util else 0.0, rate.value if rate else 0.0,
                                  self.t.capacity_per_vcpu, self.world.infra.vnfs[vnf_id].resources.vcpu,
                                  self.world.tick)
        decision = decide(event, context, target_vnf=vnf_id, decision_id=f"dec-{nf_id}-{self.world.tick}",
                          u_hi=self.t.U_hi, u_target=self.t.U_target)
        self.world.emit("decision", decision)
        if decision.kind is not DecisionKind.SCALE_VNF:
            self.finish_record(cid, decision, nf_id, "investigate")
            return decision
        if self.pcf is not None:
            version = self.policy_versions.get(nf_id, 0) + 1
            self.policy_versions[nf_id] = version
            policy = generate_dynamic_policy(decision, nf_id, version=version, tick=self.world.tick)
            self.fabric.invoke(self.ref(INTELLIGENCE), self.ref(f"nf.{self.pcf_nf}"), policy,
                               correlation_id=f"{cid}:pcf", slice_id=self.slice_id,
                               detail=f"policy={policy.policy_id} target={nf_id} kind={policy.kind.value}")
        self.inflight[cid] = decision
        self.world.scheduler.schedule(self.world.tick, Phase.CONTROL, self.key(cid),
                                      lambda: self.run_control(decision, nf_id, cid))
        return decision

    # (e) orchestration and control ------------------------------------------------

    def run_control(self, decision: Decision, nf_id: str, cid: str) -> None:
        try:
            self.fabric.invoke(self.ref(INTELLIGENCE), self.ref(ORCHESTRATION), decision, correlation_id=cid,
                               step="5", slice_id=self.slice_id,
                               detail=f"decision={decision.decision_id} requested={decision.requested_delta.text()}")
        except InvariantViolation:
            raise
        except SimError as exc:
            self.inflight.pop(cid, None)
            self.finish_record(cid, decision, nf_id, "failed", error=type(exc).__name__,
                               stage=self.world.last_kind(cid))

    def on_orchestration(self, env) -> Any:
        decision: Decision = env.payload
        model = DomainServiceModel.snapshot(self.world.infra, self.world.tick)
        plan = orchestrate(decision, model, self.world.option, plan_id=f"plan-{env.correlation_id}")
        return self.fabric.invoke(self.ref(ORCHESTRATION), self.ref(CONTROL), plan,
                                  correlation_id=env.correlation_id, slice_id=self.slice_id,
                                  detail=(f"plan={plan.plan_id} vnf={plan.target_vnf} "
                                          f"granted={plan.granted_delta.text()} route={plan.route.value}"))

    def on_control(self, env) -> Any:
        plan = env.payload
        cid = env.correlation_id
        req = ScaleRequest(f"req-{cid}", plan.target_vnf, plan.granted_delta, Origin.NSSMF, cid)
        detail = f"vnf={req.vnf_id} delta={req.delta.text()}"
        if self.world.option == "2":
            return self.fabric.adapt_invoke(self.world.nsmf_binding, {"slice": self.slice_id, **req.to_fields()},
                                            caller=self.ref(CONTROL), correlation_id=cid, step="6",
                                            slice_id=self.slice_id, detail=detail)
        return self.fabric.invoke(self.ref(CONTROL), f"{CN}/{NSSMF_CAPABILITY}",
                                  {"subnet": self.subnet, "request": req}, correlation_id=cid, step="6",
                                  slice_id=self.slice_id, detail=f"subnet={self.subnet} {detail}")

    # (f) outcome -----------------------------------------------------------------

    def finish(self, outcome: ScaleOutcome) -> None:
        decision = self.inflight.pop(outcome.correlation_id)
        nf_id = self.world.infra.vnfs[outcome.vnf_id].hosted_nf
        if outcome.ok:
            pop = self.world.infra.pops[self.world.infra.vnfs[outcome.vnf_id].pop]
            self.world.note_pop(pop.pop_id)
            self.world.stats[nf_id]["scale_count"] += 1
            self.finish_record(outcome.correlation_id, decision, nf_id, "scaled",
                               extra=f"vnf={outcome.vnf_id} granted={outcome.granted.text()} "
                                     f"resources={outcome.resources.text()} pop={pop.pop_id} "
                                     f"alloc={pop.allocated.text()} cap={pop.capacity.text()}")
        else:
            self.finish_record(outcome.correlation_id, decision, nf_id, "failed", error=outcome.error,
                               stage="VIM")

    def finish_record(self, cid: str, decision: Decision, nf_id: str, result: str, *,
                      error: str = "", stage: str = "", extra: str = "") -> None:
        parts = [f"outcome={result}", f"decision={decision.kind.value}", f"nf={nf_id}"]
        if extra:
            parts.append(extra)
        if error:
            parts += [f"error={error}", f"stage={stage}"]
        self.world.emit("outcome", (cid, result))
        self.fabric.invoke(self.ref(INTELLIGENCE), self.ref(OUTCOME), (result, decision.decision_id),
                           correlation_id=cid, slice_id=self.slice_id, detail=" ".join(parts))

    def on_outcome_record(self, env) -> None:
        self.knowledge.append((env.correlation_id, "outcome:" + env.payload[0]))

    # forecasts -------------------------------------------------------------------

    def forecast(self, nf_id: str, horizon: int, cid: str) -> ForecastResult:
        route = forecast_route(horizon, self.t.H_short)
        if route == "NWDAF" and self.nwdaf_nf:
            target = self.ref(f"nf.{self.nwdaf_nf}")
        else:
            target = self.ref(FORECAST)
        try:
            value = self.fabric.invoke(self.ref(INTELLIGENCE), target, (nf_id, horizon), correlation_id=cid,
                                       slice_id=self.slice_id, detail=f"nf={nf_id} horizon={horizon}")
            return ForecastResult(nf_id, self.world.tick, horizon, kind_of(target), value)
        except InvariantViolation:
            raise
        except SimError as exc:
            return ForecastResult(nf_id, self.world.tick, horizon, kind_of(target), None, type(exc).__name__)

    def on_nwdaf_forecast(self, env) -> float:
        nf_id, horizon = env.payload
        series = [s.value for s in self.udsf.series(nf_id, Metric.RESPONSE_TIME_MS)] if self.udsf else []
        return nwdaf_forecast(series, horizon, h_short=self.t.H_short, window=self.t.W)

    def on_zsm_forecast(self, env) -> float:
        nf_id, horizon = env.payload
        samples = self.storage.values(nf_id, Metric.RESPONSE_TIME_MS)[-self.analytics.window_size:]
        return zsm_forecast([(s.tick, s.value) for s in samples], horizon, h_short=self.t.H_short)


class World:
    """Everything a run needs: fabric, infrastructure, services and the scheduler."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.option = config.option
        self.t = config.thresholds
        self.fabric = Fabric()
        self.infra = Infrastructure()
        self.scheduler = Scheduler()
        self.clock = SimClock(0, config.seed)
        self.notifier = Notifier()
        self.loops: dict[str, ClosedLoop] = {}
        self.collectors: dict[str, SharedCollector] = {}
        self.nf_vnf: dict[str, str] = {}
        self.loads = {lp.nf_id: lp for lp in config.loads}
        self.forecast_plan: dict[int, list] = {}
        for fc in config.forecasts:
            self.forecast_plan.setdefault(fc.tick, []).append(fc)
        self.forecasts: list[ForecastResult] = []
        self.events: list[tuple[int, str, Any]] = []
        self.emitted: list[tuple[str, Any]] = []
        self.denied_subscriptions: list[str] = []
        self.stats: dict[str, dict] = {}
        self.pop_peaks: dict[str, float] = {}
        self._spec: SliceSpec | None = None
        self._build()

    @property
    def tick(self) -> int:
        return self.clock.tick

    @property
    def trace(self) -> list[TraceRecord]:
        return self.fabric.trace

    def emit(self, kind: str, item: Any) -> None:
        self.emitted.append((kind, item))
        self.events.append((self.tick, kind, item))

    def note_pop(self, pop_id: str) -> None:
        pop = self.infra.pops[pop_id]
        pairs = zip((pop.allocated.vcpu, pop.allocated.memory, pop.allocated.storage),
                    (pop.capacity.vcpu, pop.capacity.memory, pop.capacity.storage))
        ratio = max((a / c for a, c in pairs if c > 0), default=0.0)
        self.pop_peaks[pop_id] = max(self.pop_peaks.get(pop_id, 0.0), ratio)

    def last_kind(self, cid: str) -> str:
        for rec in reversed(self.fabric.trace):
            if rec.correlation_id == cid:
                return kind_of(rec.target)
        return "Unknown"

    # construction -------------------------------------------------------------------

    def _build(self) -> None:
        cfg, f = self.config, self.fabric
        for pop in cfg.pops:
            self.infra.add_pop(pop.pop_id, pop.capacity)
        self.shared_pop = cfg.shared_pop or (cfg.pops[0].pop_id if cfg.pops else None)
        self.slice_specs = {s.slice_id: s for s in cfg.slices}

        e2e = ManagementDomain(E2E, Level.E2E_SERVICE, "operator",
                               exposure_policy=ExposurePolicy((Rule(E2E, "*"),)))
        e2e.add_service("zsm.e2e.service_management")
        f.register_domain(e2e)

        cn_rules = [Rule("sd-*", "3gpp.nssmf.*"), Rule("sd-*", "zsm.adapter.*"), Rule(CN, "*"), Rule(E2E, "*")]
        cn = ManagementDomain(CN, Level.E2E_SERVICE, "operator", exposure_policy=ExposurePolicy(tuple(cn_rules)))
        if self.option in ("1A", "1B"):
            cn.add_service(NSMF_CAPABILITY)
            cn.add_service(NSSMF_CAPABILITY)
        if self.option == "1B":
            cn.add_service(NFV_ADAPTER)
        if self.option == "2":
            cn.add_service(GPP_ADAPTER)
            cn.add_service(NOTIFY_ADAPTER)
        f.register_domain(cn)
        f.compose_e2e(E2E, [CN])

        # virtualization
        self.virt_domains: dict[str, str] = {}
        if self.option == "1A":
            pops = [p.pop_id for p in cfg.pops]
            groups = {"virt": pops} if cfg.single_virtualization_domain else {f"virt-{p}": [p] for p in pops}
            for did, members in groups.items():
                dom = ManagementDomain(did, Level.VIRTUALIZATION, "infrastructure",
                                       exposure_policy=ExposurePolicy((Rule(CN, "mano.nfvo.scale_vnf"),
                                                                       Rule(did, "*"))))
                for cap in MANO_CAPABILITIES:
                    dom.add_service(cap)
                f.register_domain(dom, {"mano.nfvo.scale_vnf": self._on_integrated_scale})
                for p in members:
                    self.virt_domains[p] = did
            f.compose_e2e(CN, list(groups))
        self.mano = Mano(self.infra, option=self.option, system=MANO_SYSTEM, record=f.record,
                         submit=self._submit_ticket, on_outcome=self._on_outcome,
                         domain_of=(lambda pop: self.virt_domains.get(pop, "virt")) if self.option == "1A" else None)
        if self.option != "1A":
            f.register_external(OS_MA_SCALE, MANO_SYSTEM, self._on_os_ma_scale)

        # 3GPP management services
        host = EXT if self.option == "2" else CN
        self.nssmf_ref = f"{host}/{NSSMF_CAPABILITY}"
        self.nsmf_ref = f"{host}/{NSMF_CAPABILITY}"
        self.nssmf = NssmfService("nssmf-1", binding_for(self.option), to_nfvo=self._to_nfvo)
        self.nsmf = NsmfService("nsmf-1", to_nssmf=self._to_nssmf)
        self.egmf = EgmfPolicy()
        if self.option == "2":
            self.egmf = EgmfPolicy([(NSMF_CAPABILITY, f"{CN}/{GPP_ADAPTER}"),
                                    (NSMF_NOTIFY, f"{CN}/{NOTIFY_ADAPTER}")])
            self.nsmf.exposed_capabilities = {NSMF_CAPABILITY, NSMF_NOTIFY}
            ext = ManagementDomain(EXT, Level.EXTERNAL_3GPP, "3gpp-ms",
                                   exposure_policy=self.egmf.as_exposure_policy(EXT))
            for cap in (NSMF_CAPABILITY, NSMF_NOTIFY, NSSMF_CAPABILITY, NSSMF_FAULT):
                ext.add_service(cap)
            f.register_domain(ext, {NSMF_CAPABILITY: self._on_nsmf, NSMF_NOTIFY: self._on_nsmf_notify,
                                    NSSMF_CAPABILITY: self._on_nssmf,
                                    NSSMF_FAULT: lambda env: self.nssmf.fault_management(env.payload)})
        else:
            f.bind(CN, NSSMF_CAPABILITY, self._on_nssmf)
            f.bind(CN, NSMF_CAPABILITY, self._on_nsmf)

        # adapters
        self.nfv_binding = AdapterBinding("nfv-osma", NFV_ADAPTER, OS_MA_SCALE, OS_MA_CODEC, CN)
        self.nsmf_binding = AdapterBinding("3gpp-nsmf", GPP_ADAPTER, f"{EXT}/{NSMF_CAPABILITY}", NSMF_CODEC, CN)
        self.notify_binding = AdapterBinding("3gpp-notify", NOTIFY_ADAPTER, f"{EXT}/{NSMF_NOTIFY}", NOTIFY_CODEC, CN)
        if self.option == "1B":
            f.register_adapter(self.nfv_binding)
        if self.option == "2":
            f.register_adapter(self.nsmf_binding)
            f.register_adapter(self.notify_binding)

        self.slices = SliceManager(f, CN, place_vnf=self._place_vnf, build_domain=self._build_domain,
                                   on_slice=self._on_slice)
        for spec in cfg.slices:
            self.add_slice(spec)

        for topic in cfg.subscriptions:
            self.subscribe(topic)
        self._setup_records()

    def add_slice(self, spec: SliceSpec) -> SliceInstance:
        if spec.pop not in self.infra.pops:
            raise ValueError(f"slice {spec.slice_id} references unknown PoP {spec.pop}")
        self.slice_specs[spec.slice_id] = spec
        self._spec = spec
        try:
            return self.slices.instantiate_slice(list(spec.nfs), spec.owner, spec.slice_id)
        finally:
            self._spec = None

    def _place_vnf(self, nf_id: str, sharing: Sharing, slice_id: str) -> str:
        spec = self._spec
        pop = spec.pop if sharing is Sharing.DEDICATED else (self.shared_pop or spec.pop)
        vnf_id = f"vnf-{nf_id}"
        self.infra.place_vnf(vnf_id, nf_id, pop, spec.vnf, spec.vnf_max)
        self.nf_vnf[nf_id] = vnf_id
        return vnf_id

    def _build_domain(self, level: Level, domain_id: str, owner: str,
                      nfs: list[NetworkFunction]) -> ManagementDomain:
        if level is Level.SLICE_SPECIFIC:
            rules = [Rule(domain_id, "*"), *self._spec.expose]
            if self.option == "2":
                rules.append(Rule(EXT, ANOMALY))
            dom = ManagementDomain(domain_id, level, owner, exposure_policy=ExposurePolicy(tuple(rules)))
            for cap in SLICE_CAPABILITIES:
                dom.add_service(cap)
            for nf in nfs:
                dom.add_service(nf.service)
            return dom
        dom = ManagementDomain(domain_id, level, owner, exposure_policy=ExposurePolicy((Rule(domain_id, "*"),)))
        dom.add_service(DC)
        dom.add_service(DDS)
        return dom

    def _on_slice(self, inst: SliceInstance) -> None:
        for did in (SliceManager.SHARED_DOMAIN, SliceManager.OVERARCHING_DOMAIN):
            if did in self.fabric.domains and did not in self.collectors:
                self.collectors[did] = SharedCollector(self, did)
        self.loops[inst.slice_id] = ClosedLoop(self, inst, self.slice_specs[inst.slice_id])
        subnet = f"{inst.slice_id}-subnet"
        self.nssmf.managed_subnets[subnet] = inst.slice_id
        self.nsmf.managed_slices[inst.slice_id] = subnet
        if self.slice_specs[inst.slice_id].frozen:
            self.nssmf.frozen.add(subnet)

    def subscribe(self, topic: str) -> str | None:
        """NSMF subscribes to analytics notifications; slice domains gate the topic."""
        def expose(t: str) -> str:
            slice_id = t[len(ANOMALY) + 1:] if t.startswith(ANOMALY + ".") else ""
            loop = self.loops.get(slice_id)
            if loop is None:
                raise NotExposed(f"no analytics topic {t}")
            policy = self.fabric.domain(loop.domain).exposure_policy
            if not policy.allows(ANOMALY, *self.fabric.identities(self.nsmf_ref)):
                self.fabric.denials += 1
                raise NotExposed(f"{t} not exposed to {self.nsmf_ref}")
            return self.notifier.subscribe(self.nsmf_ref, t)

        try:
            sub_id = self.nsmf.subscribe_analytics(topic, expose)
        except NotExposed:
            self.denied_subscriptions.append(topic)
            self.fabric.record(self.nsmf_ref, ANOMALY, "setup-subscription",
                               detail=f"topic={topic} result=denied")
            return None
        self.fabric.record(self.nsmf_ref, ANOMALY, "setup-subscription", detail=f"topic={topic} result={sub_id}")
        return sub_id

    def _setup_records(self) -> None:
        t = self.t
        self.fabric.record("sim/engine", "sim.config", "setup",
                           detail=(f"option={self.option} seed={self.config.seed} T_abs={fmt_num(t.T_abs)} "
                                   f"W_base={t.W_base} k={t.k} U_hi={fmt_num(t.U_hi)} "
                                   f"U_target={fmt_num(t.U_target)} capacity_per_vcpu={fmt_num(t.capacity_per_vcpu)} "
                                   f"base_rt={fmt_num(t.base_rt)} H_short={t.H_short}"))
        for pop_id in sorted(self.infra.pops):
            pop = self.infra.pops[pop_id]
            self.note_pop(pop_id)
            self.fabric.record(self.mano.ref(pop_id, "vim"), "sim.inventory", "setup",
                               detail=f"pop={pop_id} alloc={pop.allocated.text()} cap={pop.capacity.text()}")

    # 3GPP and MANO wiring ---------------------------------------------------------

    def _on_nssmf(self, env) -> Any:
        payload = env.payload
        return self.nssmf.provision_subnet(payload["subnet"], payload["request"], env)

    def _on_nsmf(self, env) -> dict:
        fields = NSMF_CODEC.translate_back(env.payload)
        slice_id = fields.pop("slice")
        req = ScaleRequest.from_fields(fields, Origin.ADAPTER)
        response = self.nsmf.provision_slice(slice_id, req, env)
        return NSMF_CODEC.translate(response)

    def _on_nsmf_notify(self, env) -> dict:
        fields = NOTIFY_CODEC.translate_back(env.payload)
        self.nsmf.notify(fields["event"])
        ack = self.fabric.invoke(f"{EXT}/{NSMF_NOTIFY}", f"{EXT}/{NSSMF_FAULT}", fields["event"],
                                 correlation_id=env.correlation_id, slice_id=env.slice_id,
                                 detail=f"event={fields['event']}")
        return NOTIFY_CODEC.translate({"ack": ack})

    def _to_nssmf(self, subnet: str, req: ScaleRequest, env) -> dict:
        return self.fabric.invoke(self.nsmf_ref, f"{EXT}/{NSSMF_CAPABILITY}", {"subnet": subnet, "request": req},
                                  correlation_id=env.correlation_id, step="7", slice_id=env.slice_id,
                                  detail=f"subnet={subnet} vnf={req.vnf_id} delta={req.delta.text()}")

    def _to_nfvo(self, subnet: str, req: ScaleRequest, env) -> dict:
        cid, sid = env.correlation_id, env.slice_id
        detail = f"vnf={req.vnf_id} delta={req.delta.text()}"
        if self.option == "1A":
            vnf = self.infra.vnfs.get(req.vnf_id)
            pop = vnf.pop if vnf else next(iter(self.virt_domains))
            return self.fabric.invoke(self.nssmf_ref, f"{self.virt_domains[pop]}/mano.nfvo.scale_vnf", req,
                                      correlation_id=cid, step="7", slice_id=sid, detail=detail)
        if self.option == "1B":
            return self.fabric.adapt_invoke(self.nfv_binding, req.to_fields(), caller=self.nssmf_ref,
                                            correlation_id=cid, step="7", slice_id=sid, detail=detail)
        response = self.fabric.external_call(self.nssmf_ref, OS_MA_SCALE, OS_MA_CODEC.translate(req.to_fields()),
                                             correlation_id=cid, step="8", slice_id=sid, detail=detail)
        return OS_MA_CODEC.translate_back(response)

    def _on_integrated_scale(self, env) -> dict:
        return _ticket_fields(self.mano.nfvo_scale_vnf(env.payload, env.slice_id))

    def _on_os_ma_scale(self, env) -> dict:
        fields = OS_MA_CODEC.translate_back(env.payload)
        origin = Origin.ADAPTER if self.option == "1B" else Origin.OS_MA_NFVO
        ticket = self.mano.nfvo_scale_vnf(ScaleRequest.from_fields(fields, origin), env.slice_id)
        return OS_MA_CODEC.translate(_ticket_fields(ticket))

    def _submit_ticket(self, ticket: VimTicket) -> None:
        self.scheduler.schedule(self.tick, Phase.MANO, ticket.correlation_id,
                                lambda: self.mano.execute(ticket))

    def _on_outcome(self, outcome: ScaleOutcome) -> None:
        for loop in self.loops.values():
            if outcome.correlation_id in loop.inflight:
                loop.finish(outcome)
                return

    # stepping ----------------------------------------------------------------------

    def _workload(self, nf_id: str, cid: str) -> None:
        vnf = self.infra.vnfs[self.nf_vnf[nf_id]]
        draw = self.clock.uniform(f"jitter:{nf_id}")
        batch = generate_telemetry(nf_id, self.loads[nf_id].load_at(self.tick), self.t.base_rt,
                                   vcpu=vnf.resources.vcpu, tick=self.tick,
                                   capacity_per_vcpu=self.t.capacity_per_vcpu, epsilon=self.t.epsilon,
                                   jitter=self.config.jitter, draw=draw)
        self.scheduler.schedule(self.tick, Phase.COLLECT, nf_id, lambda: self._collect(batch, cid))

    def _collect(self, batch, cid: str) -> None:
        nf = self.slices.nfs[batch.nf_id]
        domain = self.slices.nf_domain[nf.nf_id]
        if not nf.mgmt_interface:
            return
        stats = self.stats.setdefault(nf.nf_id, {"max_response_time_ms": 0.0, "ticks_over_threshold": 0,
                                                 "scale_count": 0})
        rt = batch.response_time.value
        stats["max_response_time_ms"] = max(stats["max_response_time_ms"], rt)
        stats["ticks_over_threshold"] += rt > self.t.T_abs
        self.fabric.invoke(f"{domain}/{nf.service}", f"{domain}/{DC}", batch, correlation_id=cid, step="1",
                           slice_id=self.slices.slice_of(nf.nf_id),
                           detail=(f"nf={nf.nf_id} load={fmt_num(batch.load)} "
                                   f"vcpu={self.infra.vnfs[nf.hosting_vnf].resources.vcpu} "
                                   f"rt={fmt_num(batch.response_time.value)} util={fmt_num(batch.utilization.value)}"))

    def _forecast(self, fc, cid: str) -> None:
        loop = self.loops[self.slices.slice_of(fc.nf_id)]
        self.forecasts.append(loop.forecast(fc.nf_id, fc.horizon, cid))

    def step(self) -> list[tuple[str, Any]]:
        tick = self.tick
        self.fabric.tick = tick
        self.emitted = []
        for nf_id in sorted(self.loads):
            cid = f"s{tick:05d}-{nf_id}"
            self.scheduler.schedule(tick, Phase.WORKLOAD, nf_id, lambda n=nf_id, c=cid: self._workload(n, c))
        for fc in self.forecast_plan.get(tick, []):
            cid = f"f{tick:05d}-{fc.nf_id}-h{fc.horizon}"
            self.scheduler.schedule(tick, Phase.ANALYTICS, f"{self.slices.nf_domain[fc.nf_id]} {cid}",
                                    lambda fc=fc, c=cid: self._forecast(fc, c))
        self.scheduler.run(tick)
        self.check_invariants()
        self.clock.advance()
        return self.emitted

    def check_invariants(self) -> None:
        self.infra.check_conservation()
        self.fabric.check_forest()
        self.slices.check_invariants()
        stuck = {p: d for p, d in self.mano.pending_delta.items() if not d.is_zero()}
        if stuck:
            raise InvariantViolation(f"VIM tickets left pending at tick end: {stuck}")

    def metrics(self) -> dict:
        """MetricsSummary kept from live counters while the world ran."""
        decisions = {k.value: 0 for k in DecisionKind}
        for _, kind, item in self.events:
            if kind == "decision":
                decisions[item.kind.value] += 1
        return {
            "option": self.option,
            "seed": self.config.seed,
            "ticks": self.tick,
            "anomaly_count": sum(1 for _, kind, _ in self.events if kind == "anomaly"),
            "decisions": dict(sorted(decisions.items())),
            "nfs": {nf: dict(self.stats[nf]) for nf in sorted(self.stats)},
            "pops": {p: {"peak_allocation_ratio": self.pop_peaks[p]} for p in sorted(self.pop_peaks)},
        }


def build_world(config: ScenarioConfig) -> World:
    return World(config)


def scaling_complete(world: World) -> bool:
    """Predicate: at least one scaling chain has finished with outcome ``scaled``."""
    return any(kind == "outcome" and item[1] == "scaled" for _, kind, item in world.events)
