import random

import pytest

from zsmsim import BUNDLED_SCENARIOS, bundled_scenario, parse_scenario
from zsmsim.engine import LoadProfile, Surge, run_until
from zsmsim.nfv import ResourceProfile
from zsmsim.scenario import PopSpec, ScenarioConfig, SliceSpec
from zsmsim.slices import NfType, Sharing
from zsmsim.world import World

FULL_SLICE = ((NfType.SMF, None), (NfType.PCF, None), (NfType.NWDAF, None), (NfType.UDSF, Sharing.DEDICATED),
              (NfType.AMF, None), (NfType.NRF, None), (NfType.NSSF, None))


def make_config(option="1A", *, slices=("a",), pop_vcpu=16, loads=None, **kw) -> ScenarioConfig:
    pops = (PopSpec("pop1", ResourceProfile(pop_vcpu, 65536, 1000)),)
    specs = tuple(SliceSpec(s, f"tenant-{s}", "pop1", FULL_SLICE) for s in slices)
    if loads is None:
        loads = (LoadProfile("smf-a", 8.0, (Surge(30, None, 1.125),)),)
    return ScenarioConfig(option=option, pops=pops, slices=specs, loads=tuple(loads), **kw)


def run_config(config: ScenarioConfig, ticks: int | None = None) -> World:
    world = World(config)
    run_until(world, None, ticks or config.max_ticks)
    return world


def load_bundled(name: str) -> ScenarioConfig:
    return parse_scenario(bundled_scenario(name))


def random_config(seed: int) -> ScenarioConfig:
    """Small randomized scenario with tight capacity so scalings also fail."""
    rng = random.Random(seed)
    option = rng.choice(["1A", "1B", "2"])
    pop_ids = [f"p{i}" for i in range(rng.randint(1, 2))]
    slices, loads = [], []
    for i in range(rng.randint(1, 3)):
        sid = f"s{i}"
        nfs = [(NfType.SMF, None), (NfType.AMF, None), (NfType.NSSF, None)]
        if rng.random() < 0.5:
            nfs.append((NfType.PCF, None))
        if rng.random() < 0.5:
            nfs.append((NfType.UDSF, Sharing.DEDICATED))
        max_vcpu = rng.randint(1, 4)
        slices.append(SliceSpec(sid, f"t{i}", rng.choice(pop_ids), tuple(nfs),
                                ResourceProfile(1, 1024, 10), ResourceProfile(max_vcpu, 4096, 100),
                                frozen=rng.random() < 0.15))
        start = rng.randint(25, 60)
        loads.append(LoadProfile(f"smf-{sid}", rng.uniform(3, 9),
                                 (Surge(start, start + rng.randint(20, 80), rng.uniform(1.1, 4.0)),)))
    # room for every initial VNF (at most 7 per PoP) plus a little headroom
    pops = tuple(PopSpec(p, ResourceProfile(7 * len(slices) + rng.randint(0, 3), 65536, 1000)) for p in pop_ids)
    return ScenarioConfig(option=option, seed=seed, max_ticks=140, jitter=rng.choice([0.0, 0.05]),
                          pops=pops, slices=tuple(slices), loads=tuple(loads))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bundled_runs():
    """Each bundled scenario run once: name -> (config, world)."""
    out = {}
    for name in BUNDLED_SCENARIOS:
        cfg = load_bundled(name)
        out[name] = (cfg, run_config(cfg))
    return out
