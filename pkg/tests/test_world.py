import dataclasses

import pytest

from zsmsim.engine import LoadProfile, Surge, run_until
from zsmsim.errors import AccessDenied
from zsmsim.fabric import Level
from zsmsim.nfv import ResourceProfile
from zsmsim.steps import kind_of
from zsmsim.verify import metrics_from_trace, verify_trace
from zsmsim.world import CN, DC, EXT, World, scaling_complete

from conftest import make_config, run_config


def _outcomes(world):
    return [r for r in world.trace if kind_of(r.target) == "Outcome"]


def test_reference_scaling_timeline(bundled_runs):
    cfg, world = bundled_runs["option_1a"]
    (outcome,) = _outcomes(world)
    fields = outcome.fields()
    assert outcome.tick == 32 and fields["outcome"] == "scaled" and fields["granted"] == "1/0/0"
    anomaly = next(r for r in world.trace if r.step == "3")
    assert anomaly.tick == 32 and anomaly.fields()["onset"] == "30"
    assert world.infra.vnfs["vnf-smf-a"].resources.vcpu == 2
    after = [float(r.fields()["rt"]) for r in world.trace
             if r.step == "1" and r.tick > 32 and r.fields()["nf"] == "smf-a"]
    assert max(after) == pytest.approx(10 / (1 - 0.45))
    assert max(after) <= cfg.thresholds.T_abs


def test_run_until_scaling_complete():
    world = World(make_config())
    result = run_until(world, scaling_complete, 200)
    assert result.flag == "predicate" and world.tick == 33


def test_constant_load_never_alarms():
    world = run_config(make_config(loads=(LoadProfile("smf-a", 8.0),)), 200)
    assert world.metrics()["anomaly_count"] == 0 and not _outcomes(world)


def test_low_utilization_anomaly_is_investigated():
    world = run_config(make_config(loads=(LoadProfile("smf-a", 2.0, (Surge(30, None, 3.0),)),)), 60)
    (outcome,) = _outcomes(world)
    assert outcome.fields()["outcome"] == "investigate"
    assert verify_trace(world.trace, "1A").passed
    assert world.infra.vnfs["vnf-smf-a"].resources.vcpu == 1


@pytest.mark.parametrize("option", ["1A", "1B", "2"])
def test_frozen_subnet_fails_at_nssmf(option):
    cfg = make_config(option)
    cfg = dataclasses.replace(cfg, slices=(dataclasses.replace(cfg.slices[0], frozen=True),))
    world = run_config(cfg, 40)
    fields = _outcomes(world)[0].fields()
    assert (fields["outcome"], fields["error"], fields["stage"]) == ("failed", "NotPossible", "NSSMF")
    assert verify_trace(world.trace, option).passed
    assert world.infra.vnfs["vnf-smf-a"].resources.vcpu == 1


@pytest.mark.parametrize("option", ["1A", "1B", "2"])
def test_vnf_at_maximum_fails_at_vnfm(option):
    cfg = make_config(option)
    cfg = dataclasses.replace(cfg, slices=(dataclasses.replace(cfg.slices[0],
                                                               vnf_max=ResourceProfile(1, 1024, 10)),))
    world = run_config(cfg, 40)
    fields = _outcomes(world)[0].fields()
    assert (fields["outcome"], fields["stage"]) == ("failed", "VNFM")
    assert verify_trace(world.trace, option).passed
    assert all(before == after for _, before, after in world.mano.failures)
    assert world.infra.vnfs["vnf-smf-a"].resources.vcpu == 1


def test_domain_forest_per_option():
    w1a = World(make_config("1A"))
    assert w1a.fabric.parent["virt-pop1"] == CN
    assert EXT not in w1a.fabric.domains
    w1b = World(make_config("1B"))
    assert not any(d.startswith("virt") for d in w1b.fabric.domains)
    w2 = World(make_config("2"))
    ext = w2.fabric.domain(EXT)
    assert ext.level is Level.EXTERNAL_3GPP and EXT not in w2.fabric.parent
    single = World(make_config("1A", single_virtualization_domain=True))
    assert single.fabric.parent["virt"] == CN


def test_slice_domains_are_children_of_cn():
    world = World(make_config(slices=("a", "b")))
    levels = [d.level for d in world.fabric.domains.values()]
    assert levels.count(Level.SLICE_SPECIFIC) == 2
    assert levels.count(Level.SHARED_NFS) == 1 and levels.count(Level.OVERARCHING_NFS) == 1
    assert world.fabric.parent["sd-b"] == CN


def test_cross_slice_access_denied(bundled_runs):
    world = bundled_runs["isolation"][1]
    with pytest.raises(AccessDenied):
        world.fabric.invoke("sd-b/zsm.domain.intelligence", f"sd-a/{DC}", None, correlation_id="probe")


def test_localized_storage_goes_to_udsf(bundled_runs):
    world = bundled_runs["option_1a"][1]
    udsf = [r for r in world.trace if r.correlation_id.endswith(":udsf")]
    assert udsf and all(r.fields()["class"] == "Localized" and r.target == "sd-a/nf.udsf-a" for r in udsf)
    mgmt = [r for r in world.trace if r.step == "2'"]
    assert mgmt and all(r.fields()["class"] == "Management" for r in mgmt)


def test_forecast_routing(bundled_runs):
    world = bundled_runs["option_1a"][1]
    by_horizon = {f.horizon: f for f in world.forecasts}
    assert by_horizon[5].destination == "NF" and by_horizon[30].destination == "Forecast"
    assert all(f.value is not None and not f.error for f in world.forecasts)
    targets = {r.correlation_id: r.target for r in world.trace if r.correlation_id.startswith("f")}
    assert targets["f00060-smf-a-h5"] == "sd-a/nf.nwdaf-a"
    assert targets["f00060-smf-a-h30"] == "sd-a/zsm.domain.analytics.forecast"


def test_option_2_notifications_reach_nsmf(bundled_runs):
    world = bundled_runs["option_2"][1]
    assert world.nsmf.notifications == ["ev-smf-a-32"]
    assert world.nssmf.fault_acks == ["ev-smf-a-32"]
    ntf = [r for r in world.trace if r.correlation_id.endswith(":ntf")]
    assert [kind_of(r.target) for r in ntf] == ["Adapter", "NSMF", "NSSMF"]


def test_subscription_denied_without_slice_consent():
    cfg = make_config("2", subscriptions=("zsm.domain.analytics.anomaly.zz",))
    world = World(cfg)
    assert world.denied_subscriptions == ["zsm.domain.analytics.anomaly.zz"]


def test_pop_peak_tracks_scaling(bundled_runs):
    world = bundled_runs["option_1a"][1]
    assert world.metrics()["pops"]["pop1"]["peak_allocation_ratio"] == 0.5
    assert metrics_from_trace(world.trace) == world.metrics()


def test_invariants_hold_every_tick():
    world = World(make_config(slices=("a", "b")))
    for _ in range(80):
        world.step()
        world.check_invariants()
