"""3GPP Management System: NSMF / NSSMF provisioning and EGMF exposure governance."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import NotExposed, NotPossible, UnknownSlice, UnknownSubnet
from .fabric import ExposurePolicy, Rule
from .nfv import ScaleRequest

NSMF_CAPABILITY = "3gpp.nsmf.slice_provisioning"
NSSMF_CAPABILITY = "3gpp.nssmf.subnet_provisioning"
NSMF_NOTIFY = "3gpp.nsmf.notification"
NSSMF_FAULT = "3gpp.nssmf.fault_management"


class NfvoBinding(str, enum.Enum):
    INTEGRATED_INVOKE = "IntegratedInvoke"
    OS_MA_NFVO = "OsMaNfvo"


def binding_for(option: str) -> NfvoBinding:
    return NfvoBinding.INTEGRATED_INVOKE if option == "1A" else NfvoBinding.OS_MA_NFVO


@dataclass
class EgmfPolicy:
    exposed: list[tuple[str, str]] = field(default_factory=list)  # (capability, consumer)

    def admit(self, capability: str, consumer: str) -> None:
        if (capability, consumer) not in self.exposed:
            raise NotExposed(f"{capability} not exposed to {consumer}")

    def as_exposure_policy(self, own_domain: str) -> ExposurePolicy:
        rules = [Rule(consumer, capability) for capability, consumer in self.exposed]
        rules.append(Rule(own_domain, "*"))
        return ExposurePolicy(tuple(rules), denial=NotExposed)


# Dispatch signature: (subnet_or_slice_id, ScaleRequest, envelope) -> response
Dispatch = Callable[[str, ScaleRequest, Any], Any]


@dataclass
class NssmfService:
    nssmf_id: str
    nfvo_binding: NfvoBinding
    managed_subnets: dict[str, str] = field(default_factory=dict)  # subnet -> slice
    frozen: set[str] = field(default_factory=set)
    to_nfvo: Dispatch | None = None
    fault_acks: list[str] = field(default_factory=list)

    def provision_subnet(self, subnet_id: str, action: ScaleRequest, env: Any = None) -> Any:
        if subnet_id not in self.managed_subnets:
            raise UnknownSubnet(subnet_id)
        if subnet_id in self.frozen:
            raise NotPossible(f"subnet {subnet_id} is frozen")
        if self.to_nfvo is None:
            return action
        return self.to_nfvo(subnet_id, action, env)

    def fault_management(self, event_id: str) -> str:
        self.fault_acks.append(event_id)
        return "ack"


@dataclass
class NsmfService:
    nsmf_id: str
    managed_slices: dict[str, str] = field(default_factory=dict)  # slice -> subnet
    exposed_capabilities: set[str] = field(default_factory=set)
    to_nssmf: Dispatch | None = None
    notifications: list[str] = field(default_factory=list)
    subscriptions: dict[str, str] = field(default_factory=dict)  # topic -> subscription id

    def provision_slice(self, slice_id: str, action: ScaleRequest, env: Any = None) -> Any:
        if slice_id not in self.managed_slices:
            raise UnknownSlice(slice_id)
        subnet = self.managed_slices[slice_id]
        if self.to_nssmf is None:
            return action
        return self.to_nssmf(subnet, action, env)

    def subscribe_analytics(self, topic: str, subscribe: Callable[[str], str]) -> str:
        """``subscribe`` performs the ZSM-side exposure check and returns an id."""
        if topic not in self.subscriptions:
            self.subscriptions[topic] = subscribe(topic)
        return self.subscriptions[topic]

    def notify(self, event_id: str) -> None:
        self.notifications.append(event_id)
