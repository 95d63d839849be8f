"""Trace conformance checking, metrics recomputation and chain explanation.

Everything here reads only :class:`TraceRecord` lists, so a trace file is
self-sufficient: metrics derived from it must match what the run emitted.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedTrace
from .steps import FORBIDDEN, OPTIONS, OUTCOME_HOP, TEMPLATES, Hop, kind_of, loop_hops, step_text
from .trace import NO_STEP, TraceRecord, chains, read_trace
from .zsm import DecisionKind


@dataclass(frozen=True)
class Violation:
    correlation_id: str
    kind: str  # missing, unexpected, ordering, role, forbidden, stage
    message: str

    def __str__(self) -> str:
        return f"{self.correlation_id}: {self.kind}: {self.message}"


@dataclass
class Verdict:
    option: str
    chains_checked: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def report(self) -> str:
        head = f"option {self.option}: {self.chains_checked} scaling chain(s) checked, "
        if self.passed:
            return head + "PASS"
        lines = [head + f"FAIL ({len(self.violations)} violation(s))"]
        lines += [f"  {v}" for v in self.violations]
        return "\n".join(lines)


def hop_of(rec: TraceRecord) -> Hop:
    return rec.step, kind_of(rec.source), kind_of(rec.target)


_LOOP_PAIRS = loop_hops()


def scaling_chains(records: list[TraceRecord]) -> dict[str, list[TraceRecord]]:
    """Closed-loop chains: primary correlation ids (no ``:`` suffix) carrying loop hops."""
    out = {}
    for cid, recs in chains(records).items():
        if ":" in cid:
            continue
        if any(hop_of(r)[1:] in _LOOP_PAIRS for r in recs):
            out[cid] = recs
    return out


def _outcome(recs: list[TraceRecord]) -> dict[str, str] | None:
    for rec in reversed(recs):
        if kind_of(rec.target) == "Outcome":
            return rec.fields()
    return None


def expected_chain(recs: list[TraceRecord], option: str) -> tuple[list[Hop], list[Violation]]:
    """Expected hop list for one chain, derived from its recorded outcome."""
    template = list(TEMPLATES[option])
    cid = recs[0].correlation_id if recs else "?"
    outcome = _outcome(recs)
    if outcome is None:
        return template + [OUTCOME_HOP], []
    result = outcome.get("outcome")
    if result == "scaled":
        return template + [OUTCOME_HOP], []
    if result == "investigate":
        cut = next(i for i, h in enumerate(template) if h[0] == "4")
        return template[:cut + 1] + [OUTCOME_HOP], []
    if result == "failed":
        stage = outcome.get("stage", "")
        for i, (_, _, target) in enumerate(template):
            if target == stage:
                return template[:i + 1] + [OUTCOME_HOP], []
        return template + [OUTCOME_HOP], [Violation(cid, "stage", f"failure stage {stage!r} is not on the {option} path")]
    return template + [OUTCOME_HOP], [Violation(cid, "stage", f"unknown outcome {result!r}")]


def _labelled(hops: list[Hop]) -> list[Hop]:
    return [h for h in hops if h[0] != NO_STEP]


def check_chain(recs: list[TraceRecord], option: str) -> list[Violation]:
    cid = recs[0].correlation_id
    expected, out = expected_chain(recs, option)
    observed = [hop_of(r) for r in recs]

    exp_l, obs_l = _labelled(expected), _labelled(observed)
    exp_c, obs_c = Counter(h[0] for h in exp_l), Counter(h[0] for h in obs_l)
    for label in sorted(set(exp_c) | set(obs_c), key=_label_key):
        if obs_c[label] < exp_c[label]:
            out.append(Violation(cid, "missing", f"step {label} expected {exp_c[label]}x, found {obs_c[label]}x"))
        elif obs_c[label] > exp_c[label]:
            out.append(Violation(cid, "unexpected", f"step {label} expected {exp_c[label]}x, found {obs_c[label]}x"))

    # roles per occurrence of each label
    exp_by, obs_by = {}, {}
    for h in exp_l:
        exp_by.setdefault(h[0], []).append(h[1:])
    for h in obs_l:
        obs_by.setdefault(h[0], []).append(h[1:])
    for label in sorted(exp_by, key=_label_key):
        for want, got in zip(exp_by[label], obs_by.get(label, [])):
            if want != got:
                out.append(Violation(cid, "role", f"step {label}: expected {want[0]} -> {want[1]}, "
                                                  f"found {got[0]} -> {got[1]}"))

    exp_u = Counter(h[1:] for h in expected if h[0] == NO_STEP)
    obs_u = Counter(h[1:] for h in observed if h[0] == NO_STEP)
    for pair in sorted(set(exp_u) | set(obs_u)):
        if obs_u[pair] < exp_u[pair]:
            out.append(Violation(cid, "missing", f"hop {pair[0]} -> {pair[1]}"))
        elif obs_u[pair] > exp_u[pair]:
            out.append(Violation(cid, "unexpected", f"hop {pair[0]} -> {pair[1]}"))

    if not out and observed != expected:
        first = next(i for i, (a, b) in enumerate(zip(observed, expected)) if a != b)
        o, e = observed[first], expected[first]
        out.append(Violation(cid, "ordering", f"position {first + 1}: found step {o[0]} ({o[1]} -> {o[2]}) "
                                              f"where step {e[0]} ({e[1]} -> {e[2]}) belongs"))
    return out


def _label_key(label: str) -> tuple[int, str]:
    digits = "".join(ch for ch in label if ch.isdigit())
    return (int(digits) if digits else 0, label)


def verify_trace(records: list[TraceRecord], option: str) -> Verdict:
    if option not in OPTIONS:
        raise ValueError(f"unknown option {option}")
    verdict = Verdict(option)
    forbidden = FORBIDDEN[option]
    for rec in records:
        pair = (kind_of(rec.source), kind_of(rec.target))
        if pair in forbidden:
            verdict.violations.append(Violation(rec.correlation_id, "forbidden",
                                                f"{pair[0]} -> {pair[1]} at tick {rec.tick}"))
    for cid, recs in scaling_chains(records).items():
        verdict.chains_checked += 1
        verdict.violations.extend(check_chain(recs, option))
    return verdict


def verify_file(path: str | Path, option: str) -> Verdict:
    return verify_trace(read_trace(path), option)


# -- metrics -----------------------------------------------------------------------

def _ratio(alloc: str, cap: str) -> float:
    a = [int(x) for x in alloc.split("/")]
    c = [int(x) for x in cap.split("/")]
    return max((x / y for x, y in zip(a, c) if y > 0), default=0.0)


def metrics_from_trace(records: list[TraceRecord]) -> dict:
    """MetricsSummary recomputed from trace records alone."""
    config = next((r.fields() for r in records if r.target == "sim.config"), None)
    if config is None:
        raise MalformedTrace("trace has no sim.config record")
    t_abs = float(config["T_abs"])
    nfs: dict[str, dict] = {}
    pops: dict[str, float] = {}
    decisions = {k.value: 0 for k in DecisionKind}
    anomalies = 0
    last_tick = 0
    for rec in records:
        last_tick = max(last_tick, rec.tick)
        target_kind = kind_of(rec.target)
        if rec.step == "1" and target_kind == "DataCollection":
            f = rec.fields()
            rt = float(f["rt"])
            m = nfs.setdefault(f["nf"], {"max_response_time_ms": 0.0, "ticks_over_threshold": 0, "scale_count": 0})
            m["max_response_time_ms"] = max(m["max_response_time_ms"], rt)
            m["ticks_over_threshold"] += rt > t_abs
        elif rec.step == "3" and target_kind == "AnomalyDetection":
            anomalies += 1
        elif target_kind == "Outcome":
            f = rec.fields()
            decisions[f["decision"]] = decisions.get(f["decision"], 0) + 1
            if f["outcome"] == "scaled":
                m = nfs.setdefault(f["nf"], {"max_response_time_ms": 0.0, "ticks_over_threshold": 0,
                                             "scale_count": 0})
                m["scale_count"] += 1
        if rec.target == "sim.inventory" or (target_kind == "Outcome" and "alloc" in rec.fields()):
            f = rec.fields()
            pops[f["pop"]] = max(pops.get(f["pop"], 0.0), _ratio(f["alloc"], f["cap"]))
    return {
        "option": config["option"],
        "seed": int(config["seed"]),
        "ticks": last_tick + 1,
        "anomaly_count": anomalies,
        "decisions": dict(sorted(decisions.items())),
        "nfs": {nf: nfs[nf] for nf in sorted(nfs)},
        "pops": {p: {"peak_allocation_ratio": pops[p]} for p in sorted(pops)},
    }


def dumps_metrics(metrics: dict) -> str:
    return json.dumps(metrics, indent=2, sort_keys=True) + "\n"


# -- explain ----------------------------------------------------------------------

def explain(records: list[TraceRecord], correlation_id: str, option: str | None = None) -> str:
    if option is None:
        config = next((r.fields() for r in records if r.target == "sim.config"), {})
        option = config.get("option", "1A")
    chain = chains(records).get(correlation_id)
    if not chain:
        raise KeyError(correlation_id)
    lines = [f"chain {correlation_id} (option {option}, {len(chain)} hops)"]
    for rec in chain:
        label = f"({rec.step})" if rec.labelled else "   "
        text = step_text(rec.step, option) if rec.labelled else ""
        lines.append(f"  t={rec.tick:<5} {label:<5} {kind_of(rec.source):>18} -> {kind_of(rec.target):<20}"
                     f" {rec.source} -> {rec.target}")
        if text:
            lines.append(f"  {'':<13}{text}")
        if rec.detail:
            lines.append(f"  {'':<13}{rec.detail}")
    return "\n".join(lines)
