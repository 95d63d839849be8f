"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are repeated in an "acceptance criteria" section of the pytest summary.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""
import dataclasses
import json
import math
import sys
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zsmsim.engine import run_until
from zsmsim.errors import AccessDenied
from zsmsim.fabric import Level, split_ref
from zsmsim.nfv import ResourceProfile, ScaleRequest
from zsmsim.scenario import ForecastSpec, PopSpec, SliceSpec
from zsmsim.steps import kind_of
from zsmsim.trace import dumps
from zsmsim.verify import scaling_chains, verify_trace
from zsmsim.world import DC, OS_MA_CODEC, World

from conftest import ACCEPTANCE_LINES, BUNDLED_SCENARIOS, FULL_SLICE, load_bundled, make_config, random_config, run_config


def report(n: int, ok: bool, detail: str) -> None:
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _only_chain(world):
    chains = scaling_chains(world.trace)
    assert len(chains) == 1, f"expected one scaling chain, found {sorted(chains)}"
    return next(iter(chains.values()))


def _labelled_hops(chain):
    return [(r.step, kind_of(r.source), kind_of(r.target)) for r in chain if r.step != "-"]


def test_criterion_1_option_1a_sequence():
    cfg = load_bundled("option_1a")
    world = run_config(cfg)
    expected = [
        ("1", "NF", "DataCollection"),
        ("2'", "DataCollection", "DataStorage"),
        ("2", "DataCollection", "Analytics"),
        ("3", "Analytics", "AnomalyDetection"),
        ("4", "AnomalyDetection", "Intelligence"),
        ("5", "Intelligence", "Orchestration"),
        ("6", "Control", "NSSMF"),
        ("7", "NSSMF", "NFVO"),
        ("8", "NFVO", "VNFM"),
        ("9", "VNFM", "NFVO.scale_resource"),
        ("10", "NFVO", "VIM"),
    ]
    observed = _labelled_hops(_only_chain(world))
    verdict = verify_trace(world.trace, "1A")

    start = time.perf_counter()
    run_config(cfg.with_overrides(max_ticks=500))
    elapsed = time.perf_counter() - start
    ok = observed == expected and verdict.passed and elapsed < 5.0
    report(1, ok, f"labels={[h[0] for h in observed]} verify={verdict.passed} 500 ticks in {elapsed:.2f}s")


def test_criterion_2_option_2_sequence():
    world = run_config(load_bundled("option_2"))
    expected = [
        ("1", "NF", "DataCollection"),
        ("2'", "DataCollection", "DataStorage"),
        ("2", "DataCollection", "Analytics"),
        ("3", "Analytics", "AnomalyDetection"),
        ("4", "AnomalyDetection", "Intelligence"),
        ("5", "Intelligence", "Orchestration"),
        ("6", "Control", "Adapter"),
        ("6", "Adapter", "NSMF"),
        ("7", "NSMF", "NSSMF"),
        ("8", "NSSMF", "Os-Ma-nfvo"),
        ("9", "NFVO", "VNFM"),
        ("9", "VNFM", "NFVO.scale_resource"),
        ("9", "NFVO", "VIM"),
    ]
    observed = _labelled_hops(_only_chain(world))
    verdict = verify_trace(world.trace, "2")
    ok = observed == expected and verdict.passed
    report(2, ok, f"labels={[h[0] for h in observed]} verify={verdict.passed}")


_fields = st.fixed_dictionaries({
    "request_id": st.text(min_size=1, max_size=20),
    "vnf": st.text(min_size=1, max_size=20),
    "delta": st.tuples(st.integers(-64, 64), st.integers(-1 << 20, 1 << 20), st.integers(-1000, 1000)),
    "correlation_id": st.text(max_size=30),
})


def test_criterion_3_option_1b_adapter_hop():
    world = run_config(load_bundled("option_1b"))
    chain = _only_chain(world)
    into_adapter = [r for r in chain if (kind_of(r.source), kind_of(r.target)) == ("NSSMF", "Adapter")]
    translated = [r for r in world.trace if kind_of(r.target) == "Os-Ma-nfvo"]
    single_hop = (len(into_adapter) == 1 and len(translated) == 1
                  and kind_of(translated[0].source) == "Adapter"
                  and translated[0].correlation_id == chain[0].correlation_id)

    checked = []

    @settings(max_examples=1000, deadline=None, database=None)
    @given(_fields)
    def round_trip(f):
        req = ScaleRequest(f["request_id"], f["vnf"], ResourceProfile(*f["delta"]),
                           correlation_id=f["correlation_id"])
        fields = req.to_fields()
        assert OS_MA_CODEC.translate_back(OS_MA_CODEC.translate(fields)) == fields
        checked.append(1)

    round_trip()
    ok = single_hop and len(checked) >= 1000
    report(3, ok, f"adapter translations={len(translated)} round trips={len(checked)}")


def test_criterion_4_closed_loop_convergence():
    cfg = load_bundled("option_1a")
    t = cfg.thresholds
    pre, surge = 8.0, 8.0 * 1.125

    def rt(load, vcpu):
        u = min(load / (vcpu * t.capacity_per_vcpu), 1 - 0.01)
        return t.base_rt / (1 - u)

    expected_onset = 30 + t.W_base + t.k
    expected_delta = math.ceil(surge / (t.capacity_per_vcpu * t.U_target)) - 1
    post_rt = rt(surge, 1 + expected_delta)
    assert (rt(pre, 1), rt(surge, 1), expected_delta) == (pytest.approx(50.0), pytest.approx(100.0), 1)

    world = World(cfg)
    run_until(world, None, cfg.max_ticks)
    anomalies = [(tick, ev) for tick, kind, ev in world.events if kind == "anomaly" and ev.nf_id == "smf-a"]
    decisions = [d for _, kind, d in world.events if kind == "decision"]
    fired = anomalies[0][0] if anomalies else None
    delta = decisions[0].requested_delta.vcpu if decisions else None
    vim = next((r for r in world.trace if kind_of(r.target) == "VIM"), None)
    converged_at = None
    if vim is not None:
        converged_at = next((r.tick for r in world.trace if r.step == "1" and r.tick > vim.tick
                             and r.fields()["nf"] == "smf-a" and float(r.fields()["rt"]) <= t.T_abs), None)
    within = (converged_at is not None and converged_at - vim.tick <= t.W_base + 2 * t.k
              and post_rt <= t.T_abs)
    ok = fired == expected_onset and delta == expected_delta and within
    report(4, ok, f"anomaly at tick {fired} (expected {expected_onset}), delta={delta} "
                  f"(expected {expected_delta}), rt<=T_abs at tick {converged_at} "
                  f"(step 10 at {vim.tick if vim else None}, model rt {post_rt:.2f})")


def _state(world) -> str:
    infra = world.infra
    return json.dumps({
        "vnfs": {v: (x.resources.text(), x.lifecycle_state.value) for v, x in sorted(infra.vnfs.items())},
        "pops": {p: x.allocated.text() for p, x in sorted(infra.pops.items())},
    }, sort_keys=True)


def test_criterion_5_resource_conservation():
    configs = [load_bundled(n) for n in BUNDLED_SCENARIOS] + [random_config(s) for s in range(100)]
    violations, failures_seen, ticks = [], 0, 0
    for cfg in configs:
        world = World(cfg)
        for _ in range(cfg.max_ticks):
            before = _state(world)
            emitted = world.step()
            ticks += 1
            for pop in world.infra.pops.values():
                if not pop.allocated.fits_in(pop.capacity):
                    violations.append(f"seed {cfg.seed} tick {world.tick - 1} {pop.pop_id} over capacity")
            results = [item[1] for kind, item in emitted if kind == "outcome"]
            failures_seen += results.count("failed")
            if "failed" in results and "scaled" not in results and _state(world) != before:
                violations.append(f"seed {cfg.seed} tick {world.tick - 1}: failed scaling changed state")
        violations += [f"MANO failure {e} changed state" for e, b, a in world.mano.failures if b != a]
    ok = not violations and failures_seen > 0
    report(5, ok, f"{len(configs)} scenarios, {ticks} ticks, {failures_seen} failed scalings, "
                  f"{len(violations)} violations {violations[:3]}")


def test_criterion_6_isolation():
    cfg = load_bundled("isolation")
    world = World(cfg)
    shared = {nf for nf in world.slices.nfs if nf in ("amf-shared", "nrf-shared")}
    run_until(world, None, 500)
    try:
        world.fabric.invoke("sd-b/zsm.domain.control.resource_lifecycle", f"sd-a/{DC}", None,
                            correlation_id="probe", slice_id="b")
        denied = False
    except AccessDenied:
        denied = True
    leaks = []
    for rec in world.trace:
        src, dst = split_ref(rec.source)[0], split_ref(rec.target)[0]
        if rec.slice_id == "a" and dst == "sd-b":
            leaks.append(rec)
        if src.startswith("sd-") and dst.startswith("sd-") and src != dst:
            leaks.append(rec)
    ok = denied and not leaks and shared == {"amf-shared", "nrf-shared"} and world.tick == 500
    report(6, ok, f"AccessDenied={denied} shared={sorted(shared)} leaks={len(leaks)} over {world.tick} ticks")


def test_criterion_7_domain_growth():
    cfg = make_config(slices=(), loads=())
    cfg = dataclasses.replace(cfg, pops=(PopSpec("pop1", ResourceProfile(400, 1 << 20, 10000)),))
    start = time.perf_counter()
    world = World(cfg)
    changed = []
    for i in range(50):
        before = world.fabric.descriptor_hashes()
        world.add_slice(SliceSpec(f"s{i}", f"tenant-{i}", "pop1", FULL_SLICE))
        after = world.fabric.descriptor_hashes()
        changed += [(i, d) for d, h in before.items() if after.get(d) != h]
    world.check_invariants()
    elapsed = time.perf_counter() - start
    levels = [d.level for d in world.fabric.domains.values()]
    counts = (levels.count(Level.SLICE_SPECIFIC), levels.count(Level.SHARED_NFS), levels.count(Level.OVERARCHING_NFS))
    ok = counts == (50, 1, 1) and not changed and elapsed < 10.0
    report(7, ok, f"slice/shared/overarching domains={counts} changed descriptors={len(changed)} "
                  f"in {elapsed:.2f}s")


def test_criterion_8_determinism():
    mismatched = [n for n in BUNDLED_SCENARIOS
                  if dumps(run_config(load_bundled(n)).trace) != dumps(run_config(load_bundled(n)).trace)]
    verdicts, traces = [], []
    for seed in (11, 12):
        cfg = dataclasses.replace(load_bundled("option_1b"), jitter=0.05, seed=seed)
        world = run_config(cfg)
        traces.append(dumps(world.trace))
        v = verify_trace(world.trace, "1B")
        verdicts.append((v.passed, [str(x) for x in v.violations]))
    ok = not mismatched and traces[0] != traces[1] and verdicts[0] == verdicts[1]
    report(8, ok, f"identical reruns={len(BUNDLED_SCENARIOS) - len(mismatched)}/{len(BUNDLED_SCENARIOS)} "
                  f"jittered traces differ={traces[0] != traces[1]} verdicts equal={verdicts[0] == verdicts[1]}")


def test_criterion_9_overlap_routing():
    worlds = [run_config(load_bundled(n)) for n in BUNDLED_SCENARIOS]
    cfg = make_config(forecasts=tuple(ForecastSpec("smf-a", 40, h) for h in (1, 5, 10, 11, 30, 60)))
    worlds.append(run_config(cfg, 50))
    h_short = cfg.thresholds.H_short
    misroutes, localized, management, forecasts = [], 0, 0, 0
    for world in worlds:
        for rec in world.trace:
            f = rec.fields()
            if f.get("class") == "Localized":
                localized += 1
                if not split_ref(rec.target)[1].startswith("nf.udsf-"):
                    misroutes.append(rec)
            elif f.get("class") == "Management":
                management += 1
                if kind_of(rec.target) != "DataStorage":
                    misroutes.append(rec)
            if "horizon" in f and kind_of(rec.source) == "Intelligence":
                forecasts += 1
                horizon = int(f["horizon"])
                nwdaf = split_ref(rec.target)[1].startswith("nf.nwdaf-")
                zsm = kind_of(rec.target) == "Forecast"
                if (horizon <= h_short and not nwdaf) or (horizon > h_short and not zsm):
                    misroutes.append(rec)
    ok = not misroutes and localized > 0 and management > 0 and forecasts >= 6
    report(9, ok, f"localized={localized} management={management} forecasts={forecasts} misroutes={len(misroutes)}")


def test_criterion_10_verifier_sensitivity():
    cases = [(load_bundled(n), None) for n in ("option_1a", "option_1b", "option_2")]
    cases += [(random_config(s), 140) for s in (1, 3, 4, 5, 10)]
    deletions, silent, chains_seen = 0, [], 0
    for cfg, ticks in cases:
        world = run_config(cfg, ticks)
        records = world.trace
        assert verify_trace(records, cfg.option).passed
        for cid, chain in scaling_chains(records).items():
            chains_seen += 1
            for rec in chain:
                i = records.index(rec)
                mutated = records[:i] + records[i + 1:]
                deletions += 1
                if verify_trace(mutated, cfg.option).passed:
                    silent.append((cfg.option, cid, rec.step, rec.target))
    ok = not silent and deletions > 0
    report(10, ok, f"{chains_seen} chains, {deletions} single-record deletions, undetected={len(silent)} {silent[:3]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider", "-W", "ignore::pytest.PytestAssertRewriteWarning"]))
