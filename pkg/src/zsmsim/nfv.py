"""Simulated NFV layer: capacity-bounded PoPs, VNF instances and the
NFVO / VNFM / VIM triplet executing a vertical scaling request."""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

from .errors import (
    AlreadyScaling,
    BelowMinimum,
    CapacityExceeded,
    Infeasible,
    InvariantViolation,
    LifecycleViolation,
    ValidationFailed,
)
from .trace import NO_STEP

MIN_VCPU = 1


@dataclass(frozen=True)
class ResourceProfile:
    vcpu: int = 0
    memory: int = 0  # MiB
    storage: int = 0  # GiB

    def __add__(self, other: "ResourceProfile") -> "ResourceProfile":
        return ResourceProfile(self.vcpu + other.vcpu, self.memory + other.memory,
                               self.storage + other.storage)

    def __sub__(self, other: "ResourceProfile") -> "ResourceProfile":
        return ResourceProfile(self.vcpu - other.vcpu, self.memory - other.memory,
                               self.storage - other.storage)

    def fits_in(self, other: "ResourceProfile") -> bool:
        return self.vcpu <= other.vcpu and self.memory <= other.memory and self.storage <= other.storage

    def nonnegative(self) -> bool:
        return self.vcpu >= 0 and self.memory >= 0 and self.storage >= 0

    def is_zero(self) -> bool:
        return self.vcpu == 0 and self.memory == 0 and self.storage == 0

    def cap_growth(self, headroom: "ResourceProfile") -> "ResourceProfile":
        """Limit each positive component to ``headroom``; shrinking parts pass through."""
        return ResourceProfile(
            min(self.vcpu, max(headroom.vcpu, 0)) if self.vcpu > 0 else self.vcpu,
            min(self.memory, max(headroom.memory, 0)) if self.memory > 0 else self.memory,
            min(self.storage, max(headroom.storage, 0)) if self.storage > 0 else self.storage,
        )

    def text(self) -> str:
        return f"{self.vcpu}/{self.memory}/{self.storage}"

    @classmethod
    def parse(cls, text: str) -> "ResourceProfile":
        v, m, s = (int(x) for x in text.split("/"))
        return cls(v, m, s)


ZERO = ResourceProfile()


class LifecycleState(str, enum.Enum):
    INSTANTIATED = "Instantiated"
    SCALING = "Scaling"
    FAILED = "Failed"


class Origin(str, enum.Enum):
    NSSMF = "Nssmf"
    ADAPTER = "Adapter"
    OS_MA_NFVO = "OsMaNfvo"


@dataclass
class NfviPop:
    pop_id: str
    capacity: ResourceProfile
    allocated: ResourceProfile = ZERO

    @property
    def free(self) -> ResourceProfile:
        return self.capacity - self.allocated


@dataclass
class VnfInstance:
    vnf_id: str
    hosted_nf: str
    pop: str
    resources: ResourceProfile
    max_resources: ResourceProfile
    lifecycle_state: LifecycleState = LifecycleState.INSTANTIATED


@dataclass(frozen=True)
class ScaleRequest:
    request_id: str
    vnf_id: str
    delta: ResourceProfile
    origin: Origin = Origin.NSSMF
    correlation_id: str = ""

    def to_fields(self) -> dict:
        return {
            "op": "ScaleVnf", "request_id": self.request_id, "vnf": self.vnf_id,
            "delta_vcpu": self.delta.vcpu, "delta_memory": self.delta.memory,
            "delta_storage": self.delta.storage, "correlation_id": self.correlation_id,
        }

    @classmethod
    def from_fields(cls, f: dict, origin: Origin) -> "ScaleRequest":
        return cls(f["request_id"], f["vnf"],
                   ResourceProfile(f["delta_vcpu"], f["delta_memory"], f["delta_storage"]),
                   origin, f["correlation_id"])


@dataclass(frozen=True)
class PreparedRequest:
    request: ScaleRequest
    lifecycle_check: str


@dataclass(frozen=True)
class VimTicket:
    ticket_id: str
    vnf_id: str
    pop: str
    delta: ResourceProfile
    correlation_id: str
    slice_id: str = "-"


@dataclass(frozen=True)
class ScaleOutcome:
    vnf_id: str
    correlation_id: str
    ok: bool
    granted: ResourceProfile = ZERO
    resources: ResourceProfile | None = None
    error: str = ""


@dataclass
class Infrastructure:
    pops: dict[str, NfviPop] = field(default_factory=dict)
    vnfs: dict[str, VnfInstance] = field(default_factory=dict)

    def add_pop(self, pop_id: str, capacity: ResourceProfile) -> NfviPop:
        if pop_id in self.pops:
            raise ValueError(f"duplicate PoP {pop_id}")
        pop = NfviPop(pop_id, capacity)
        self.pops[pop_id] = pop
        return pop

    def place_vnf(self, vnf_id: str, nf_id: str, pop_id: str, resources: ResourceProfile,
                  max_resources: ResourceProfile) -> VnfInstance:
        pop = self.pops[pop_id]
        if vnf_id in self.vnfs:
            raise ValueError(f"duplicate VNF {vnf_id}")
        if not (pop.allocated + resources).fits_in(pop.capacity):
            raise CapacityExceeded(f"{pop_id} cannot host {vnf_id}")
        if not resources.fits_in(max_resources):
            raise LifecycleViolation(f"{vnf_id} initial resources exceed maximum")
        vnf = VnfInstance(vnf_id, nf_id, pop_id, resources, max_resources)
        self.vnfs[vnf_id] = vnf
        pop.allocated = pop.allocated + resources
        return vnf

    def snapshot(self, vnf_id: str) -> str:
        vnf = self.vnfs[vnf_id]
        pop = self.pops[vnf.pop]
        return json.dumps({"vnf": asdict(vnf), "pop": asdict(pop)}, sort_keys=True, default=str)

    def check_conservation(self) -> None:
        totals = {p: ZERO for p in self.pops}
        for vnf in self.vnfs.values():
            if not vnf.resources.fits_in(vnf.max_resources) or vnf.resources.vcpu < MIN_VCPU:
                raise InvariantViolation(f"{vnf.vnf_id} resources {vnf.resources} outside bounds")
            totals[vnf.pop] = totals[vnf.pop] + vnf.resources
        for pid, pop in self.pops.items():
            if totals[pid] != pop.allocated:
                raise InvariantViolation(f"{pid}: hosted {totals[pid]} != allocated {pop.allocated}")
            if not pop.allocated.fits_in(pop.capacity) or not pop.allocated.nonnegative():
                raise InvariantViolation(f"{pid}: allocated {pop.allocated} exceeds {pop.capacity}")


# hop names used to label MANO-internal trace records
HOPS = ("validate", "feasibility", "prepare", "scale_resource", "vim_modify")

STEP_LABELS = {
    "1A": {"prepare": "8", "scale_resource": "9", "vim_modify": "10"},
    "1B": {"prepare": "8", "scale_resource": "9", "vim_modify": "10"},
    "2": {"prepare": "9", "scale_resource": "9", "vim_modify": "9"},
}


class Mano:
    """NFVO, VNFM and VIM acting on one :class:`Infrastructure`.

    ``record`` appends a trace hop ``(source, target, correlation_id,
    step, slice_id, detail)``. ``submit`` queues a VIM ticket for later
    execution; by default tickets wait in :attr:`pending` until
    :meth:`run_pending`.
    """

    def __init__(self, infra: Infrastructure, *, option: str = "1A", system: str = "nfv-mano",
                 record: Callable[..., object] | None = None,
                 submit: Callable[[VimTicket], None] | None = None,
                 on_outcome: Callable[[ScaleOutcome], None] | None = None,
                 domain_of: Callable[[str], str] | None = None):
        self.infra = infra
        self._domain_of = domain_of
        self.labels = STEP_LABELS[option]
        self.system = system
        self._record = record
        self._submit = submit
        self.on_outcome = on_outcome
        self.pending: list[VimTicket] = []
        self.pending_delta: dict[str, ResourceProfile] = {}
        self.failures: list[tuple[str, str, str]] = []  # (error, before, after)
        self._tickets = 0

    def domain_for(self, pop_id: str) -> str:
        return self._domain_of(pop_id) if self._domain_of else self.system

    def ref(self, pop_id: str, component: str) -> str:
        return f"{self.domain_for(pop_id)}/mano.{component}"

    def _hop(self, pop_id: str, src: str, cap: str, req: ScaleRequest, hop: str,
             slice_id: str, detail: str = "") -> None:
        if self._record is not None:
            self._record(self.ref(pop_id, src), self.ref(pop_id, cap), req.correlation_id,
                         step=self.labels.get(hop, NO_STEP), slice_id=slice_id, detail=detail)

    def headroom(self, pop_id: str) -> ResourceProfile:
        pop = self.infra.pops[pop_id]
        return pop.free - self.pending_delta.get(pop_id, ZERO)

    # NFVO ------------------------------------------------------------

    def nfvo_scale_vnf(self, req: ScaleRequest, slice_id: str = "-") -> VimTicket:
        vnf = self.infra.vnfs.get(req.vnf_id)
        pop_id = vnf.pop if vnf else "-"
        before = self.infra.snapshot(req.vnf_id) if vnf else ""
        self._hop(pop_id, "nfvo", "nfvo.validate", req, "validate", slice_id, f"vnf={req.vnf_id}")
        try:
            if vnf is None:
                raise ValidationFailed(f"unknown VNF {req.vnf_id}")
            if req.delta.is_zero():
                raise ValidationFailed("scale request with zero delta")
            granted = self._feasibility(vnf, req, slice_id)
            granted_req = replace(req, delta=granted)
            prepared = self.vnfm_prepare(granted_req, slice_id)
            return self.vnfm_scale_resource(prepared, slice_id)
        except Exception as exc:
            if vnf is not None:
                self._check_unchanged(req.vnf_id, before, exc)
            raise

    def _feasibility(self, vnf: VnfInstance, req: ScaleRequest, slice_id: str) -> ResourceProfile:
        headroom = self.headroom(vnf.pop)
        granted = req.delta.cap_growth(headroom)
        self._hop(vnf.pop, "nfvo", "nfvo.feasibility", req, "feasibility", slice_id,
                  f"requested={req.delta.text()} headroom={headroom.text()} granted={granted.text()}")
        if req.delta.vcpu > 0 and headroom.vcpu < MIN_VCPU:
            raise Infeasible(f"{vnf.pop} has {headroom.vcpu} vCPU headroom")
        if granted.is_zero():
            raise Infeasible(f"{vnf.pop} cannot grant any part of {req.delta.text()}")
        return granted

    # VNFM ------------------------------------------------------------

    def vnfm_prepare(self, req: ScaleRequest, slice_id: str = "-") -> PreparedRequest:
        vnf = self.infra.vnfs[req.vnf_id]
        self._hop(vnf.pop, "nfvo", "vnfm.prepare", req, "prepare", slice_id, f"delta={req.delta.text()}")
        if vnf.lifecycle_state is LifecycleState.SCALING:
            raise AlreadyScaling(req.vnf_id)
        target = vnf.resources + req.delta
        if not target.fits_in(vnf.max_resources):
            raise LifecycleViolation(f"{req.vnf_id}: {target.text()} exceeds {vnf.max_resources.text()}")
        if target.vcpu < MIN_VCPU or not target.nonnegative():
            raise LifecycleViolation(f"{req.vnf_id}: {target.text()} below minimum profile")
        vnf.lifecycle_state = LifecycleState.SCALING
        return PreparedRequest(req, "lifecycle_ok")

    def vnfm_scale_resource(self, prepared: PreparedRequest, slice_id: str = "-") -> VimTicket:
        req = prepared.request
        vnf = self.infra.vnfs[req.vnf_id]
        self._hop(vnf.pop, "vnfm", "nfvo.scale_resource", req, "scale_resource", slice_id,
                  f"delta={req.delta.text()}")
        self._tickets += 1
        ticket = VimTicket(f"t{self._tickets}", req.vnf_id, vnf.pop, req.delta,
                           req.correlation_id, slice_id)
        self.pending_delta[vnf.pop] = self.pending_delta.get(vnf.pop, ZERO) + req.delta
        if self._submit is not None:
            self._submit(ticket)
        else:
            self.pending.append(ticket)
        return ticket

    # VIM -------------------------------------------------------------

    def execute(self, ticket: VimTicket) -> ScaleOutcome:
        """Run one VIM ticket: the NFVO asks the VIM to change resources."""
        self.pending_delta[ticket.pop] = self.pending_delta.get(ticket.pop, ZERO) - ticket.delta
        vnf = self.infra.vnfs[ticket.vnf_id]
        pop = self.infra.pops[ticket.pop]
        alloc_after = pop.allocated + ticket.delta
        if self._record is not None:
            self._record(self.ref(ticket.pop, "nfvo"), self.ref(ticket.pop, "vim.modify_resources"),
                         ticket.correlation_id, step=self.labels["vim_modify"], slice_id=ticket.slice_id,
                         detail=(f"vnf={ticket.vnf_id} pop={ticket.pop} delta={ticket.delta.text()} "
                                 f"resources={(vnf.resources + ticket.delta).text()} "
                                 f"alloc={alloc_after.text()} cap={pop.capacity.text()}"))
        # a failed modification must leave the VNF as it was before it entered Scaling
        state, vnf.lifecycle_state = vnf.lifecycle_state, LifecycleState.INSTANTIATED
        before = self.infra.snapshot(ticket.vnf_id)
        vnf.lifecycle_state = state
        try:
            resources = self.vim_modify_resources(ticket.vnf_id, ticket.delta)
        except Exception as exc:
            self._check_unchanged(ticket.vnf_id, before, exc)
            outcome = ScaleOutcome(ticket.vnf_id, ticket.correlation_id, False, error=type(exc).__name__)
        else:
            outcome = ScaleOutcome(ticket.vnf_id, ticket.correlation_id, True, ticket.delta, resources)
        if self.on_outcome is not None:
            self.on_outcome(outcome)
        return outcome

    def run_pending(self) -> list[ScaleOutcome]:
        tickets, self.pending = self.pending, []
        return [self.execute(t) for t in sorted(tickets, key=lambda t: t.correlation_id)]

    def vim_modify_resources(self, vnf_id: str, delta: ResourceProfile) -> ResourceProfile:
        vnf = self.infra.vnfs[vnf_id]
        pop = self.infra.pops[vnf.pop]
        new_res = vnf.resources + delta
        new_alloc = pop.allocated + delta
        try:
            if not new_alloc.fits_in(pop.capacity):
                raise CapacityExceeded(f"{pop.pop_id}: {new_alloc.text()} > {pop.capacity.text()}")
            if new_res.vcpu < MIN_VCPU or not new_res.nonnegative():
                raise BelowMinimum(f"{vnf_id}: {new_res.text()}")
            if not new_res.fits_in(vnf.max_resources):
                raise LifecycleViolation(f"{vnf_id}: {new_res.text()} > {vnf.max_resources.text()}")
        finally:
            vnf.lifecycle_state = LifecycleState.INSTANTIATED
        vnf.resources = new_res
        pop.allocated = new_alloc
        return new_res

    def scale_now(self, req: ScaleRequest, slice_id: str = "-") -> ScaleOutcome:
        """Run a full scale (steps through VIM modification) synchronously."""
        self.nfvo_scale_vnf(req, slice_id)
        outcomes = self.run_pending()
        return [o for o in outcomes if o.correlation_id == req.correlation_id][-1]

    def _check_unchanged(self, vnf_id: str, before: str, exc: Exception) -> None:
        after = self.infra.snapshot(vnf_id)
        self.failures.append((type(exc).__name__, before, after))
        if after != before:
            raise InvariantViolation(f"failed scaling of {vnf_id} ({type(exc).__name__}) changed state")
