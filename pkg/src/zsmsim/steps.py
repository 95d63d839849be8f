"""Service kinds and the expected hop sequence of a scaling chain per deployment option."""
from __future__ import annotations

from .fabric import split_ref

OPTIONS = ("1A", "1B", "2")

# longest prefix wins
_KINDS = (
    ("zsm.domain.data.collection", "DataCollection"),
    ("zsm.domain.data.storage", "DataStorage"),
    ("zsm.domain.analytics.anomaly", "AnomalyDetection"),
    ("zsm.domain.analytics.forecast", "Forecast"),
    ("zsm.domain.analytics", "Analytics"),
    ("zsm.domain.intelligence.outcome", "Outcome"),
    ("zsm.domain.intelligence", "Intelligence"),
    ("zsm.domain.orchestration", "Orchestration"),
    ("zsm.domain.control", "Control"),
    ("zsm.adapter", "Adapter"),
    ("3gpp.nsmf", "NSMF"),
    ("3gpp.nssmf", "NSSMF"),
    ("mano.nfvo.validate", "NFVO.validate"),
    ("mano.nfvo.feasibility", "NFVO.feasibility"),
    ("mano.nfvo.scale_resource", "NFVO.scale_resource"),
    ("mano.nfvo", "NFVO"),
    ("mano.vnfm", "VNFM"),
    ("mano.vim", "VIM"),
    ("Os-Ma-nfvo", "Os-Ma-nfvo"),
    ("nf.", "NF"),
    ("sim.", "Sim"),
)


def kind_of(ref: str) -> str:
    _, service = split_ref(ref)
    best = ""
    kind = "Unknown"
    for prefix, name in _KINDS:
        if service.startswith(prefix) and len(prefix) > len(best):
            if len(service) == len(prefix) or prefix.endswith(".") or service[len(prefix)] == ".":
                best, kind = prefix, name
    return kind


def nf_of(ref: str) -> str:
    _, service = split_ref(ref)
    return service[3:] if service.startswith("nf.") else ""


Hop = tuple[str, str, str]  # (step label, source kind, target kind)

STREAM_PREFIX: tuple[Hop, ...] = (
    ("1", "NF", "DataCollection"),
    ("2'", "DataCollection", "DataStorage"),
    ("2", "DataCollection", "Analytics"),
)

LOOP_PREFIX: tuple[Hop, ...] = STREAM_PREFIX + (
    ("3", "Analytics", "AnomalyDetection"),
    ("4", "AnomalyDetection", "Intelligence"),
    ("5", "Intelligence", "Orchestration"),
    ("-", "Orchestration", "Control"),
)


def _nfvo_core(prepare: str, scale_resource: str, vim: str) -> tuple[Hop, ...]:
    return (
        ("-", "NFVO", "NFVO.validate"),
        ("-", "NFVO", "NFVO.feasibility"),
        (prepare, "NFVO", "VNFM"),
        (scale_resource, "VNFM", "NFVO.scale_resource"),
        (vim, "NFVO", "VIM"),
    )


TEMPLATES: dict[str, tuple[Hop, ...]] = {
    "1A": LOOP_PREFIX + (
        ("6", "Control", "NSSMF"),
        ("7", "NSSMF", "NFVO"),
    ) + _nfvo_core("8", "9", "10"),
    "1B": LOOP_PREFIX + (
        ("6", "Control", "NSSMF"),
        ("7", "NSSMF", "Adapter"),
        ("7", "Adapter", "Os-Ma-nfvo"),
    ) + _nfvo_core("8", "9", "10"),
    "2": LOOP_PREFIX + (
        ("6", "Control", "Adapter"),
        ("6", "Adapter", "NSMF"),
        ("7", "NSMF", "NSSMF"),
        ("8", "NSSMF", "Os-Ma-nfvo"),
    ) + _nfvo_core("9", "9", "9"),
}

OUTCOME_HOP: Hop = ("-", "Intelligence", "Outcome")

# pairs that must never appear anywhere in a trace of the given option
FORBIDDEN: dict[str, frozenset[tuple[str, str]]] = {
    "1A": frozenset({
        ("Control", "NFVO"), ("Control", "VIM"), ("Control", "VNFM"), ("Control", "Os-Ma-nfvo"),
        ("Orchestration", "NFVO"), ("NSSMF", "Os-Ma-nfvo"), ("Adapter", "Os-Ma-nfvo"),
    }),
    "1B": frozenset({
        ("Control", "NFVO"), ("Control", "VIM"), ("Control", "VNFM"), ("Control", "Os-Ma-nfvo"),
        ("Orchestration", "NFVO"), ("NSSMF", "NFVO"), ("NSSMF", "Os-Ma-nfvo"),
    }),
    "2": frozenset({
        ("Control", "NFVO"), ("Control", "VIM"), ("Control", "VNFM"), ("Control", "Os-Ma-nfvo"),
        ("Orchestration", "NFVO"), ("Control", "NSMF"), ("Control", "NSSMF"), ("NSSMF", "NFVO"),
        ("NSSMF", "Adapter"),
    }),
}

STEP_TEXT = {
    "1": "NF telemetry stream received by Domain Data Collection",
    "2'": "collected data stored in Domain Data Storage",
    "2": "collected data forwarded to Domain Analytics",
    "3": "response-time anomaly detected",
    "4": "Domain Intelligence decides on VNF scaling",
    "5": "Domain Orchestration sizes the scaling against the domain service model",
    "6": "Domain Control invokes slice (subnet) provisioning",
    "7": "provisioning request forwarded towards the NFVO",
    "8": "NFVO request prepared by the VNFM",
    "9": "VNFM calls Scale Resource on the NFVO",
    "10": "VIM modifies the VNF resources",
}

STEP_TEXT_OPTION2 = {
    "6": "Domain Control invokes the NSMF through the adapter",
    "7": "NSMF invokes NSSMF subnet provisioning",
    "8": "NSSMF sends the scaling request over Os-Ma-nfvo",
    "9": "NFVO scales the VNF through VNFM and VIM",
}


def step_text(label: str, option: str) -> str:
    if option == "2" and label in STEP_TEXT_OPTION2:
        return STEP_TEXT_OPTION2[label]
    return STEP_TEXT.get(label, "")


def loop_hops() -> frozenset[tuple[str, str]]:
    """Kind pairs that only occur inside a closed-loop (scaling) chain."""
    pairs = {(s, t) for tpl in TEMPLATES.values() for _, s, t in tpl}
    pairs.add(OUTCOME_HOP[1:])
    return frozenset(pairs - {(s, t) for _, s, t in STREAM_PREFIX})
