"""3GPP slice instances, control-plane NFs and the control-plane halves of
the analytics / storage / policy overlaps (NWDAF, UDSF, PCF)."""
from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import (
    EmptyTemplate,
    HintRequired,
    HorizonTooLong,
    InsufficientData,
    StaticReinstall,
    UnknownTarget,
)
from .fabric import Fabric, Level, ManagementDomain


class NfType(str, enum.Enum):
    AMF = "AMF"
    NRF = "NRF"
    SMF = "SMF"
    PCF = "PCF"
    NWDAF = "NWDAF"
    NSSF = "NSSF"
    UDM = "UDM"
    UDR = "UDR"
    UDSF = "UDSF"


class Sharing(str, enum.Enum):
    DEDICATED = "Dedicated"
    SHARED = "Shared"
    OVERARCHING = "Overarching"


FIXED_SHARING = {
    NfType.AMF: Sharing.SHARED,
    NfType.NRF: Sharing.SHARED,
    NfType.SMF: Sharing.DEDICATED,
    NfType.PCF: Sharing.DEDICATED,
    NfType.NWDAF: Sharing.DEDICATED,
    NfType.NSSF: Sharing.OVERARCHING,
}


def classify_nf(nf_type: NfType | str, hint: Sharing | str | None = None) -> Sharing:
    """Sharing class of an NF type; UDM, UDR and UDSF depend on the deployment hint."""
    nf_type = NfType(nf_type)
    if nf_type in FIXED_SHARING:
        return FIXED_SHARING[nf_type]
    if hint is None:
        raise HintRequired(f"{nf_type.value} needs a deployment hint")
    return Sharing(hint)


def nf_id_for(nf_type: NfType, sharing: Sharing, slice_id: str) -> str:
    if sharing is Sharing.DEDICATED:
        return f"{nf_type.value.lower()}-{slice_id}"
    if sharing is Sharing.SHARED:
        return f"{nf_type.value.lower()}-shared"
    return f"{nf_type.value.lower()}-common"


def plan_nf_ids(slice_id: str, template: Sequence[tuple[NfType, Sharing | None]]) -> list[tuple[str, NfType, Sharing]]:
    if not template:
        raise EmptyTemplate(slice_id)
    out = []
    for nf_type, hint in template:
        sharing = classify_nf(nf_type, hint)
        out.append((nf_id_for(NfType(nf_type), sharing, slice_id), NfType(nf_type), sharing))
    return out


@dataclass
class NetworkFunction:
    nf_id: str
    nf_type: NfType
    sharing: Sharing
    hosting_vnf: str
    mgmt_interface: bool = True

    @property
    def service(self) -> str:
        return f"nf.{self.nf_id}"


@dataclass
class SliceInstance:
    slice_id: str
    owner: str
    dedicated_nfs: frozenset[str]
    shared_nfs: frozenset[str]
    overarching_nfs: frozenset[str]
    mgmt_domain: str

    @property
    def nfs(self) -> frozenset[str]:
        return self.dedicated_nfs | self.shared_nfs | self.overarching_nfs


class PolicyKind(str, enum.Enum):
    STATIC = "Static"
    DYNAMIC = "Dynamic"


@dataclass(frozen=True)
class ControlPlanePolicy:
    policy_id: str
    kind: PolicyKind
    target_nf: str
    body: dict = field(default_factory=dict, hash=False, compare=False)
    installed_at: int = 0
    provenance: str | None = None  # decision id for dynamic policies

    @property
    def stem(self) -> str:
        head, sep, version = self.policy_id.rpartition("-v")
        return head if sep and version.isdigit() else self.policy_id


class Pcf:
    def __init__(self, nf_ids: Iterable[str]):
        self.nf_ids = set(nf_ids)
        self.active: dict[str, ControlPlanePolicy] = {}
        self._static_seen: set[str] = set()

    def install(self, policy: ControlPlanePolicy) -> list[str]:
        if policy.target_nf not in self.nf_ids:
            raise UnknownTarget(policy.target_nf)
        if policy.kind is PolicyKind.STATIC:
            if policy.policy_id in self._static_seen:
                raise StaticReinstall(policy.policy_id)
            self._static_seen.add(policy.policy_id)
        else:
            for pid in [p for p, pol in self.active.items()
                        if pol.kind is PolicyKind.DYNAMIC and pol.stem == policy.stem]:
                del self.active[pid]
        self.active[policy.policy_id] = policy
        return sorted(self.active)


class StorageClass(str, enum.Enum):
    LOCALIZED = "Localized"
    MANAGEMENT = "Management"


class Udsf:
    """Control-plane unstructured data store.

    Localized samples stay here; management-class samples are handed to
    ``forward`` (the Domain Data Storage) and not retained.
    """

    def __init__(self, forward: Callable[[object], None] | None = None):
        self.forward = forward
        self.samples: dict[tuple, object] = {}

    def store(self, sample, storage_class: StorageClass | str) -> str:
        if StorageClass(storage_class) is StorageClass.LOCALIZED:
            self.samples[(sample.nf_id, sample.metric, sample.tick)] = sample
            return "UDSF"
        if self.forward is not None:
            self.forward(sample)
        return "DomainDataStorage"

    def retrieve(self, nf_id: str, metric, tick: int):
        return self.samples[(nf_id, metric, tick)]

    def series(self, nf_id: str, metric) -> list:
        return [s for (n, m, _), s in sorted(self.samples.items(), key=lambda kv: kv[0][2])
                if n == nf_id and m == metric]


def nwdaf_forecast(samples: Sequence[float], horizon: int, *, h_short: int = 10, window: int = 5) -> float:
    """Short-term forecast: moving average of the last ``window`` samples."""
    if horizon > h_short:
        raise HorizonTooLong(f"horizon {horizon} > {h_short}")
    if len(samples) < window:
        raise InsufficientData(f"{len(samples)} samples < {window}")
    return statistics.fmean(samples[-window:])


DomainBuilder = Callable[[Level, str, str, list[NetworkFunction]], ManagementDomain]


class SliceManager:
    """Instantiates slices: NFs, hosting VNFs and the per-slice management domains."""

    SHARED_DOMAIN = "cn-shared"
    OVERARCHING_DOMAIN = "cn-overarching"

    def __init__(self, fabric: Fabric, cn_domain: str, *,
                 place_vnf: Callable[[str, Sharing, str], str] | None = None,
                 build_domain: DomainBuilder | None = None,
                 on_slice: Callable[[SliceInstance], None] | None = None):
        self.fabric = fabric
        self.cn_domain = cn_domain
        self.place_vnf = place_vnf or (lambda nf_id, sharing, slice_id: f"vnf-{nf_id}")
        self.build_domain = build_domain or _plain_domain
        self.on_slice = on_slice
        self.nfs: dict[str, NetworkFunction] = {}
        self.slices: dict[str, SliceInstance] = {}
        self.nf_domain: dict[str, str] = {}

    def instantiate_slice(self, template: Sequence[tuple[NfType, Sharing | None]], owner: str,
                          slice_id: str | None = None) -> SliceInstance:
        slice_id = slice_id or str(len(self.slices) + 1)
        if slice_id in self.slices:
            raise ValueError(f"duplicate slice {slice_id}")
        planned = plan_nf_ids(slice_id, template)
        created: dict[Sharing, list[NetworkFunction]] = {s: [] for s in Sharing}
        groups: dict[Sharing, set[str]] = {s: set() for s in Sharing}
        for nf_id, nf_type, sharing in planned:
            groups[sharing].add(nf_id)
            if nf_id in self.nfs:
                continue
            nf = NetworkFunction(nf_id, nf_type, sharing, self.place_vnf(nf_id, sharing, slice_id))
            self.nfs[nf_id] = nf
            created[sharing].append(nf)

        cn = self.fabric.domain(self.cn_domain)
        new_children = []
        for sharing, level, did in ((Sharing.SHARED, Level.SHARED_NFS, self.SHARED_DOMAIN),
                                    (Sharing.OVERARCHING, Level.OVERARCHING_NFS, self.OVERARCHING_DOMAIN)):
            if groups[sharing] and did not in self.fabric.domains:
                self.fabric.register_domain(self.build_domain(level, did, "operator", created[sharing]))
                new_children.append(did)
            for nf in created[sharing]:
                self.nf_domain[nf.nf_id] = did
        slice_domain = f"sd-{slice_id}"
        self.fabric.register_domain(self.build_domain(Level.SLICE_SPECIFIC, slice_domain, owner,
                                                      created[Sharing.DEDICATED]))
        for nf in created[Sharing.DEDICATED]:
            self.nf_domain[nf.nf_id] = slice_domain
        new_children.append(slice_domain)
        self.fabric.compose_e2e(self.cn_domain, cn.children + new_children)

        inst = SliceInstance(slice_id, owner, frozenset(groups[Sharing.DEDICATED]),
                             frozenset(groups[Sharing.SHARED]), frozenset(groups[Sharing.OVERARCHING]),
                             slice_domain)
        self.slices[slice_id] = inst
        if self.on_slice is not None:
            self.on_slice(inst)
        return inst

    def slice_of(self, nf_id: str) -> str:
        for sid in sorted(self.slices):
            if nf_id in self.slices[sid].dedicated_nfs:
                return sid
        return "shared"

    def check_invariants(self) -> None:
        from .errors import InvariantViolation
        seen: dict[str, str] = {}
        for sid in sorted(self.slices):
            for nf_id in self.slices[sid].dedicated_nfs:
                if nf_id in seen:
                    raise InvariantViolation(f"{nf_id} dedicated to both {seen[nf_id]} and {sid}")
                seen[nf_id] = sid


def _plain_domain(level: Level, domain_id: str, owner: str, nfs: list[NetworkFunction]) -> ManagementDomain:
    from .fabric import ExposurePolicy, Rule
    dom = ManagementDomain(domain_id, level, owner,
                           exposure_policy=ExposurePolicy((Rule(domain_id, "*"),)))
    if level is Level.SLICE_SPECIFIC:
        # shared domains are created once and must not grow as later slices add NFs
        for nf in nfs:
            dom.add_service(nf.service)
    return dom
