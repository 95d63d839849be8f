"""Service-based integration fabric.

Holds the recursive management-domain registry, dispatches capability
invocations under each provider domain's exposure policy, and bridges
service-based calls to non-service-based external operations through
adapter bindings. Every dispatched hop is appended to a single trace.

Service references are ``"<domain_id>/<service>"`` strings; external
operations (e.g. ``Os-Ma-nfvo.ScaleVnf``) are bare names.
"""
from __future__ import annotations

import enum
import fnmatch
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .errors import (
    AccessDenied,
    CapabilityNotFound,
    CodecMismatch,
    CycleDetected,
    DuplicateDomain,
    ForestViolation,
    NotServiceBased,
    UnknownChild,
    UnknownDomain,
)
from .trace import NO_STEP, TraceRecord


class Level(str, enum.Enum):
    E2E_SERVICE = "E2EService"
    SLICE_SPECIFIC = "SliceSpecific"
    SHARED_NFS = "SharedNFs"
    OVERARCHING_NFS = "OverarchingNFs"
    VIRTUALIZATION = "Virtualization"
    EXTERNAL_3GPP = "External3GPP"


def split_ref(ref: str) -> tuple[str, str]:
    domain, sep, service = ref.partition("/")
    if not sep:
        return "", ref
    return domain, service


@dataclass(frozen=True)
class ServiceDescriptor:
    capability: str
    provider_domain: str
    service_based: bool = True

    @property
    def role(self) -> str:
        head = self.capability.split(".", 1)[0]
        if head in ("mano", "Os-Ma-nfvo"):
            return "mano"
        return head

    def to_dict(self) -> dict:
        return {
            "capability": self.capability,
            "provider_domain": self.provider_domain,
            "service_based": self.service_based,
        }


@dataclass(frozen=True)
class Rule:
    consumer: str  # glob over caller ref, caller domain id or caller tenant
    capability: str  # glob over capability name
    allow: bool = True


@dataclass(frozen=True)
class ExposurePolicy:
    """First-match rule list; no match means deny."""

    rules: tuple[Rule, ...] = ()
    denial: type[AccessDenied] = AccessDenied

    def allows(self, capability: str, *identities: str) -> bool:
        for rule in self.rules:
            if not fnmatch.fnmatchcase(capability, rule.capability):
                continue
            if any(i and fnmatch.fnmatchcase(i, rule.consumer) for i in identities):
                return rule.allow
        return False

    def to_dict(self) -> dict:
        return {
            "default": "deny",
            "rules": [[r.consumer, r.capability, "allow" if r.allow else "deny"] for r in self.rules],
        }


@dataclass
class ManagementDomain:
    domain_id: str
    level: Level
    owner: str
    services: dict[str, ServiceDescriptor] = field(default_factory=dict)
    children: list[str] = field(default_factory=list)
    exposure_policy: ExposurePolicy = field(default_factory=ExposurePolicy)

    def add_service(self, capability: str, service_based: bool = True) -> ServiceDescriptor:
        if capability in self.services:
            raise ValueError(f"capability {capability} already offered by {self.domain_id}")
        desc = ServiceDescriptor(capability, self.domain_id, service_based)
        self.services[capability] = desc
        return desc

    def descriptor(self) -> str:
        """Canonical serialization of the domain's registry descriptor.

        Composition links (children) live in the registry topology and are
        deliberately excluded, so wiring a new child under a parent leaves
        the parent's descriptor untouched.
        """
        body = {
            "domain_id": self.domain_id,
            "level": self.level.value,
            "owner": self.owner,
            "services": [self.services[c].to_dict() for c in sorted(self.services)],
            "exposure_policy": self.exposure_policy.to_dict(),
        }
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def descriptor_hash(self) -> str:
        return hashlib.sha256(self.descriptor().encode()).hexdigest()


@dataclass(frozen=True)
class Codec:
    """Declarative, injective field map from ZSM names to external names."""

    fields: Mapping[str, str]

    def __post_init__(self):
        if len(set(self.fields.values())) != len(self.fields):
            raise ValueError("codec field map must be injective to be lossless")

    def translate(self, request: Mapping[str, Any]) -> dict[str, Any]:
        out = {}
        for key, value in request.items():
            if key not in self.fields:
                raise CodecMismatch(f"field {key!r} has no mapping")
            out[self.fields[key]] = value
        return out

    def translate_back(self, external: Mapping[str, Any]) -> dict[str, Any]:
        inverse = {v: k for k, v in self.fields.items()}
        out = {}
        for key, value in external.items():
            if key not in inverse:
                raise CodecMismatch(f"external field {key!r} has no mapping")
            out[inverse[key]] = value
        return out


@dataclass(frozen=True)
class AdapterBinding:
    adapter_id: str
    zsm_capability: str
    external_operation: str
    codec: Codec
    host_domain: str = ""

    @property
    def ref(self) -> str:
        return f"{self.host_domain}/{self.zsm_capability}"


@dataclass(frozen=True)
class MessageEnvelope:
    tick: int
    source: str
    target: str
    correlation_id: str
    payload: Any
    step: str = NO_STEP
    slice_id: str = "-"


Handler = Callable[[MessageEnvelope], Any]


class Fabric:
    def __init__(self):
        self.domains: dict[str, ManagementDomain] = {}
        self.parent: dict[str, str] = {}
        self.handlers: dict[tuple[str, str], Handler] = {}
        self.externals: dict[str, tuple[ServiceDescriptor, Handler]] = {}
        self.adapters: dict[str, AdapterBinding] = {}
        self.trace: list[TraceRecord] = []
        self.denials = 0
        self.tick = 0

    # registry ---------------------------------------------------------

    def register_domain(self, domain: ManagementDomain,
                        handlers: Mapping[str, Handler] | None = None) -> str:
        if domain.domain_id in self.domains:
            raise DuplicateDomain(domain.domain_id)
        for child in domain.children:
            if child not in self.domains:
                raise UnknownChild(child)
            if child in self.parent:
                raise ForestViolation(f"{child} already has parent {self.parent[child]}")
        if domain.level is Level.VIRTUALIZATION:
            bad = [c for c, d in domain.services.items() if d.role != "mano"]
            if bad:
                raise ValueError(f"virtualization domain offers non-MANO services {bad}")
        self.domains[domain.domain_id] = domain
        for child in domain.children:
            self.parent[child] = domain.domain_id
        for capability, handler in (handlers or {}).items():
            self.bind(domain.domain_id, capability, handler)
        self.check_forest()
        return domain.domain_id

    def bind(self, domain_id: str, capability: str, handler: Handler) -> None:
        domain = self.domain(domain_id)
        if capability not in domain.services:
            raise CapabilityNotFound(f"{domain_id}/{capability}")
        self.handlers[(domain_id, capability)] = handler

    def domain(self, domain_id: str) -> ManagementDomain:
        try:
            return self.domains[domain_id]
        except KeyError:
            raise UnknownDomain(domain_id) from None

    def compose_e2e(self, parent: str, children: list[str]) -> ManagementDomain:
        node = self.domain(parent)
        for child in children:
            self.domain(child)
            if child == parent or child in self.ancestors(parent):
                raise CycleDetected(f"{child} -> {parent}")
            owner = self.parent.get(child)
            if owner is not None and owner != parent:
                raise ForestViolation(f"{child} already has parent {owner}")
        if len(set(children)) != len(children):
            raise ForestViolation(f"duplicate children under {parent}")
        for old in node.children:
            self.parent.pop(old, None)
        node.children = list(children)
        for child in children:
            self.parent[child] = parent
        self.check_forest()
        return node

    def ancestors(self, domain_id: str) -> list[str]:
        out = []
        cur = self.parent.get(domain_id)
        while cur is not None:
            out.append(cur)
            cur = self.parent.get(cur)
        return out

    def depth(self, domain_id: str) -> int:
        """Number of levels in the subtree rooted at ``domain_id``."""
        node = self.domain(domain_id)
        return 1 + max((self.depth(c) for c in node.children), default=0)

    def check_forest(self) -> None:
        seen_as_child: dict[str, str] = {}
        for did, dom in self.domains.items():
            for child in dom.children:
                if child not in self.domains:
                    raise ForestViolation(f"{did} lists unknown child {child}")
                if child in seen_as_child:
                    raise ForestViolation(f"{child} under both {seen_as_child[child]} and {did}")
                seen_as_child[child] = did
        # a forest on n nodes reached from its roots visits every node exactly once
        roots = [d for d in self.domains if d not in seen_as_child]
        visited: set[str] = set()
        stack = list(roots)
        while stack:
            cur = stack.pop()
            if cur in visited:
                raise ForestViolation(f"{cur} reached twice")
            visited.add(cur)
            stack.extend(self.domains[cur].children)
        if len(visited) != len(self.domains):
            raise ForestViolation("cycle among domains not reachable from any root")

    def descriptor_hashes(self) -> dict[str, str]:
        return {d: dom.descriptor_hash() for d, dom in self.domains.items()}

    def register_external(self, operation: str, system: str, handler: Handler) -> ServiceDescriptor:
        desc = ServiceDescriptor(operation, system, service_based=False)
        self.externals[operation] = (desc, handler)
        return desc

    def register_adapter(self, binding: AdapterBinding) -> None:
        host = self.domain(binding.host_domain)
        if binding.zsm_capability not in host.services:
            host.add_service(binding.zsm_capability)
        self.adapters[binding.adapter_id] = binding
        self.bind(binding.host_domain, binding.zsm_capability,
                  lambda env, b=binding: self._run_adapter(b, env))

    # dispatch ---------------------------------------------------------

    def identities(self, caller: str) -> tuple[str, str, str]:
        domain_id, _ = split_ref(caller)
        dom = self.domains.get(domain_id)
        return caller, domain_id, dom.owner if dom else ""

    def record(self, source: str, target: str, correlation_id: str, *,
               step: str = NO_STEP, slice_id: str = "-", detail: str = "") -> TraceRecord:
        rec = TraceRecord(self.tick, step or NO_STEP, source, target, correlation_id, slice_id, detail)
        self.trace.append(rec)
        return rec

    def invoke(self, caller: str, target: str, request: Any = None, *,
               correlation_id: str, step: str = NO_STEP, slice_id: str = "-",
               detail: str = "") -> Any:
        if target in self.externals:
            raise NotServiceBased(target)
        domain_id, capability = split_ref(target)
        dom = self.domains.get(domain_id)
        desc = dom.services.get(capability) if dom else None
        if desc is None:
            raise CapabilityNotFound(target)
        if not desc.service_based:
            raise NotServiceBased(target)
        if not dom.exposure_policy.allows(capability, *self.identities(caller)):
            self.denials += 1
            raise dom.exposure_policy.denial(f"{caller} may not invoke {target}")
        handler = self.handlers.get((domain_id, capability))
        if handler is None:
            raise CapabilityNotFound(f"{target} has no handler bound")
        self.record(caller, target, correlation_id, step=step, slice_id=slice_id, detail=detail)
        env = MessageEnvelope(self.tick, caller, target, correlation_id, request, step or NO_STEP, slice_id)
        return handler(env)

    def adapt_invoke(self, binding: AdapterBinding, request: Mapping[str, Any], *,
                     caller: str, correlation_id: str, step: str = NO_STEP,
                     slice_id: str = "-", detail: str = "") -> dict[str, Any]:
        if binding.adapter_id not in self.adapters:
            raise CapabilityNotFound(f"adapter {binding.adapter_id} not registered")
        binding.codec.translate(request)  # reject unmapped fields before any hop
        return self.invoke(caller, binding.ref, dict(request), correlation_id=correlation_id,
                           step=step, slice_id=slice_id, detail=detail)

    def external_call(self, caller: str, operation: str, request: Any, *,
                      correlation_id: str, step: str = NO_STEP, slice_id: str = "-",
                      detail: str = "") -> Any:
        """Native (non-service-based) call made by a system outside the fabric."""
        try:
            _, handler = self.externals[operation]
        except KeyError:
            raise CapabilityNotFound(operation) from None
        self.record(caller, operation, correlation_id, step=step, slice_id=slice_id, detail=detail)
        env = MessageEnvelope(self.tick, caller, operation, correlation_id, request, step or NO_STEP, slice_id)
        return handler(env)

    def _run_adapter(self, binding: AdapterBinding, env: MessageEnvelope) -> dict[str, Any]:
        outbound = binding.codec.translate(env.payload)
        target = binding.external_operation
        kwargs = dict(correlation_id=env.correlation_id, step=env.step, slice_id=env.slice_id,
                      detail=f"adapter={binding.adapter_id}")
        if target in self.externals:
            response = self.external_call(binding.ref, target, outbound, **kwargs)
        else:
            response = self.invoke(binding.ref, target, outbound, **kwargs)
        return binding.codec.translate_back(response or {})
