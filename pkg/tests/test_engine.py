import pytest
from hypothesis import given
from hypothesis import strategies as st

from zsmsim.engine import (
    LoadProfile,
    Phase,
    Scheduler,
    SimClock,
    Surge,
    counter_uniform,
    generate_telemetry,
    response_time,
    run_until,
    tick,
)
from zsmsim.scenario import ScenarioConfig
from zsmsim.world import World


@pytest.mark.parametrize("load,vcpu,expected_rt,expected_u", [
    (0.0, 1, 10.0, 0.0),
    (8.0, 1, 50.0, 0.8),
    (20.0, 1, 1000.0, 0.99),
])
def test_response_time_model(load, vcpu, expected_rt, expected_u):
    batch = generate_telemetry("smf-a", load, 10.0, vcpu=vcpu, tick=0, capacity_per_vcpu=10.0)
    assert batch.response_time.value == pytest.approx(expected_rt)
    assert batch.utilization.value == pytest.approx(expected_u)
    assert batch.request_rate.value == load


@given(st.floats(0, 50), st.floats(0.01, 5), st.integers(1, 8))
def test_model_monotone(load, step, vcpu):
    rt = response_time(load, vcpu, 10.0, 10.0)
    higher = response_time(load + step, vcpu, 10.0, 10.0)
    more_cpu = response_time(load, vcpu + 1, 10.0, 10.0)
    if load / (vcpu * 10.0) < 0.99:
        assert higher > rt
        if load > 0.01:
            assert more_cpu < rt


def test_jitter_is_bounded_and_seeded():
    a = counter_uniform(1, "jitter:smf-a", 5)
    assert a == counter_uniform(1, "jitter:smf-a", 5)
    assert a != counter_uniform(2, "jitter:smf-a", 5)
    batch = generate_telemetry("n", 8.0, 10.0, vcpu=1, tick=0, jitter=0.1, draw=0.0)
    assert batch.response_time.value == pytest.approx(45.0)


def test_load_profile():
    lp = LoadProfile("smf-a", 8.0, (Surge(30, 40, 1.125),))
    assert [lp.load_at(t) for t in (29, 30, 39, 40)] == [8.0, 9.0, 9.0, 8.0]
    with pytest.raises(ValueError):
        LoadProfile("x", 1.0, (Surge(0, 10, 2.0), Surge(5, 20, 2.0)))
    with pytest.raises(ValueError):
        LoadProfile("x", 1.0, (Surge(0, None, 2.0), Surge(5, 20, 2.0)))


def test_scheduler_orders_by_phase_then_key():
    s = Scheduler()
    order = []
    s.schedule(0, Phase.MANO, "a", lambda: order.append("mano"))
    s.schedule(0, Phase.COLLECT, "b", lambda: order.append("collect-b"))
    s.schedule(0, Phase.COLLECT, "a", lambda: order.append("collect-a"))
    s.schedule(1, Phase.WORKLOAD, "a", lambda: order.append("next-tick"))
    s.schedule(0, Phase.WORKLOAD, "z", lambda: s.schedule(0, Phase.ANALYTICS, "q", lambda: order.append("late")))
    assert s.run(0) == 5
    assert order == ["collect-a", "collect-b", "late", "mano"]
    assert s.pending() == 1


def test_clock():
    c = SimClock(seed=4)
    assert c.advance() == 1 and c.uniform("s") == counter_uniform(4, "s", 1)


def test_empty_world_emits_nothing():
    world = World(ScenarioConfig())
    assert tick(world) == []
    result = run_until(world, lambda w: False, 10)
    assert result.flag == "max_ticks" and result.ticks == 10 and world.tick == 11


def test_run_until_rejects_nonpositive():
    with pytest.raises(ValueError):
        run_until(World(ScenarioConfig()), None, 0)
