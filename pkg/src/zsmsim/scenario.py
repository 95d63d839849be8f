"""Scenario documents.

A scenario is a line-oriented ``key = value`` file::

    option = 1A
    seed = 7

    [thresholds]
    W_base = 20

    [[pop]]
    id = pop1
    vcpu = 4

    [[slice]]
    id = a
    pop = pop1
    nfs = SMF, PCF, NWDAF, UDSF:Dedicated, AMF, NRF, NSSF

    [[load]]
    nf = smf-a
    base = 8
    surges = 30::1.125

Comments start with ``#``. Values are integers, floats, ``true``/``false``,
double-quoted strings or bare words.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from .engine import LoadProfile, Surge
from .errors import EmptyTemplate, HintRequired, ScenarioSyntaxError, ScenarioValidationError
from .fabric import Rule
from .nfv import ResourceProfile
from .slices import NfType, Sharing, plan_nf_ids
from .steps import OPTIONS
from .zsm import Thresholds

DEFAULT_VNF = ResourceProfile(1, 1024, 10)
DEFAULT_VNF_MAX = ResourceProfile(8, 16384, 100)


@dataclass(frozen=True)
class PopSpec:
    pop_id: str
    capacity: ResourceProfile


@dataclass(frozen=True)
class SliceSpec:
    slice_id: str
    owner: str
    pop: str
    nfs: tuple[tuple[NfType, Sharing | None], ...]
    vnf: ResourceProfile = DEFAULT_VNF
    vnf_max: ResourceProfile = DEFAULT_VNF_MAX
    frozen: bool = False
    expose: tuple[Rule, ...] = ()

    def planned(self) -> list[tuple[str, NfType, Sharing]]:
        return plan_nf_ids(self.slice_id, list(self.nfs))


@dataclass(frozen=True)
class ForecastSpec:
    nf_id: str
    tick: int
    horizon: int


@dataclass(frozen=True)
class ScenarioConfig:
    option: str = "1A"
    seed: int = 0
    max_ticks: int = 200
    jitter: float = 0.0
    single_virtualization_domain: bool = False
    shared_pop: str | None = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    pops: tuple[PopSpec, ...] = ()
    slices: tuple[SliceSpec, ...] = ()
    loads: tuple[LoadProfile, ...] = ()
    forecasts: tuple[ForecastSpec, ...] = ()
    subscriptions: tuple[str, ...] = ()

    def with_overrides(self, *, option: str | None = None, seed: int | None = None,
                       max_ticks: int | None = None) -> "ScenarioConfig":
        changes = {k: v for k, v in (("option", option), ("seed", seed), ("max_ticks", max_ticks))
                   if v is not None}
        cfg = dataclasses.replace(self, **changes)
        validate(cfg)
        return cfg


# -- lexing ------------------------------------------------------------------

_HEADER = re.compile(r"^\[(\[)?\s*([A-Za-z_][\w.]*)\s*\]?\]$")
_KEY = re.compile(r"^[A-Za-z_][\w]*$")
_INT = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")

TABLES = {"thresholds", "nsmf"}
ARRAYS = {"pop", "slice", "load", "forecast"}
TOP_KEYS = {"option", "seed", "max_ticks", "jitter", "single_virtualization_domain", "shared_pop"}


def _strip_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line


def _value(text: str, lineno: int):
    if not text:
        raise ScenarioSyntaxError(lineno, "missing value")
    if text.startswith('"'):
        if len(text) < 2 or not text.endswith('"') or '"' in text[1:-1]:
            raise ScenarioSyntaxError(lineno, f"unterminated string {text}")
        return text[1:-1]
    if text in ("true", "false"):
        return text == "true"
    if _INT.match(text):
        return int(text)
    if _FLOAT.match(text):
        return float(text)
    if re.search(r"[\s=\[\]]", text) and "," not in text and ":" not in text:
        raise ScenarioSyntaxError(lineno, f"cannot parse value {text!r}")
    return text


@dataclass
class _Block:
    name: str
    line: int
    items: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)


def _lex(text: str) -> tuple[_Block, dict[str, _Block], dict[str, list[_Block]]]:
    top = _Block("", 0)
    tables: dict[str, _Block] = {}
    arrays: dict[str, list[_Block]] = {n: [] for n in ARRAYS}
    current = top
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            m = _HEADER.match(line)
            is_array = line.startswith("[[")
            if not m or bool(m.group(1)) != is_array or (is_array and not line.endswith("]]")) \
                    or (not is_array and line.endswith("]]")):
                raise ScenarioSyntaxError(lineno, f"malformed section header {line!r}")
            name = m.group(2)
            if is_array:
                if name not in ARRAYS:
                    raise ScenarioSyntaxError(lineno, f"unknown block [[{name}]]")
                current = _Block(name, lineno)
                arrays[name].append(current)
            else:
                if name not in TABLES:
                    raise ScenarioSyntaxError(lineno, f"unknown section [{name}]")
                if name in tables:
                    raise ScenarioSyntaxError(lineno, f"section [{name}] repeated")
                current = tables[name] = _Block(name, lineno)
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not _KEY.match(key):
            raise ScenarioSyntaxError(lineno, f"expected 'key = value', got {line!r}")
        if key in current.items:
            raise ScenarioSyntaxError(lineno, f"duplicate key {key!r}")
        current.items[key] = _value(val, lineno)
        current.lines[key] = lineno
    return top, tables, arrays


# -- typed conversion ----------------------------------------------------------

class _Reader:
    def __init__(self, block: _Block, allowed: set[str]):
        self.block = block
        for key in block.items:
            if key not in allowed:
                where = f"[[{block.name}]]" if block.name in ARRAYS else (f"[{block.name}]" if block.name else "top level")
                raise ScenarioSyntaxError(block.lines[key], f"unknown key {key!r} in {where}")

    def get(self, key: str, kind, default=None, required: bool = False):
        if key not in self.block.items:
            if required:
                raise ScenarioSyntaxError(self.block.line, f"[[{self.block.name}]] needs {key!r}")
            return default
        value = self.block.items[key]
        line = self.block.lines[key]
        if kind is str:
            return str(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ScenarioSyntaxError(line, f"{key} must be true or false")
            return value
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioSyntaxError(line, f"{key} must be an integer")
            return value
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioSyntaxError(line, f"{key} must be a number")
            return float(value)
        raise TypeError(kind)

    def line(self, key: str) -> int:
        return self.block.lines.get(key, self.block.line)


def _parse_nfs(text: str, line: int) -> tuple[tuple[NfType, Sharing | None], ...]:
    out = []
    for item in (p.strip() for p in text.split(",")):
        if not item:
            continue
        name, _, hint = item.partition(":")
        try:
            nf_type = NfType(name.strip().upper())
            sharing = Sharing(hint.strip().capitalize()) if hint else None
        except ValueError:
            raise ScenarioSyntaxError(line, f"bad NF entry {item!r}") from None
        out.append((nf_type, sharing))
    return tuple(out)


def _parse_surges(text: str, line: int) -> tuple[Surge, ...]:
    out = []
    for item in (p.strip() for p in str(text).split(",")):
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ScenarioSyntaxError(line, f"surge {item!r} is not start:end:multiplier")
        try:
            start = int(parts[0])
            end = int(parts[1]) if parts[1].strip() not in ("", "-") else None
            mult = float(parts[2])
        except ValueError:
            raise ScenarioSyntaxError(line, f"surge {item!r} has non-numeric fields") from None
        out.append(Surge(start, end, mult))
    return tuple(out)


def _parse_expose(text: str, line: int) -> tuple[Rule, ...]:
    rules = []
    for item in (p.strip() for p in str(text).split(",")):
        if not item:
            continue
        consumer, sep, capability = item.partition(":")
        if not sep or not consumer or not capability:
            raise ScenarioSyntaxError(line, f"expose entry {item!r} is not consumer:capability")
        rules.append(Rule(consumer.strip(), capability.strip()))
    return tuple(rules)


def _profile(r: _Reader, prefix: str, default: ResourceProfile) -> ResourceProfile:
    return ResourceProfile(
        r.get(f"{prefix}vcpu", int, default.vcpu),
        r.get(f"{prefix}memory", int, default.memory),
        r.get(f"{prefix}storage", int, default.storage),
    )


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises :class:`ScenarioSyntaxError` (with ``.line``) for malformed input
    and :class:`ScenarioValidationError` for dangling references.
    """
    top, tables, arrays = _lex(text)
    r = _Reader(top, TOP_KEYS)
    option = r.get("option", str, "1A")
    if option not in OPTIONS:
        raise ScenarioSyntaxError(r.line("option"), f"option must be one of {', '.join(OPTIONS)}")

    defaults = Thresholds()
    t_fields = {"H_short": int, "W": int, "W_base": int, "k": int, "T_abs": float, "U_hi": float,
                "U_target": float, "capacity_per_vcpu": float, "base_rt": float}
    thresholds = defaults
    if "thresholds" in tables:
        tr = _Reader(tables["thresholds"], set(t_fields))
        thresholds = Thresholds(**{k: tr.get(k, kind, getattr(defaults, k)) for k, kind in t_fields.items()})

    pops = []
    for b in arrays["pop"]:
        pr = _Reader(b, {"id", "vcpu", "memory", "storage"})
        pops.append(PopSpec(pr.get("id", str, required=True),
                            ResourceProfile(pr.get("vcpu", int, required=True),
                                            pr.get("memory", int, 65536), pr.get("storage", int, 1000))))

    slices = []
    slice_keys = {"id", "owner", "pop", "nfs", "frozen", "expose", "vnf_vcpu", "vnf_memory", "vnf_storage",
                  "max_vcpu", "max_memory", "max_storage"}
    for b in arrays["slice"]:
        sr = _Reader(b, slice_keys)
        sid = sr.get("id", str, required=True)
        slices.append(SliceSpec(
            sid, sr.get("owner", str, f"tenant-{sid}"), sr.get("pop", str, required=True),
            _parse_nfs(sr.get("nfs", str, required=True), sr.line("nfs")),
            _profile(sr, "vnf_", DEFAULT_VNF), _profile(sr, "max_", DEFAULT_VNF_MAX),
            sr.get("frozen", bool, False), _parse_expose(sr.get("expose", str, ""), sr.line("expose")),
        ))

    loads = []
    for b in arrays["load"]:
        lr = _Reader(b, {"nf", "base", "surges"})
        try:
            loads.append(LoadProfile(lr.get("nf", str, required=True), lr.get("base", float, required=True),
                                     _parse_surges(lr.get("surges", str, ""), lr.line("surges"))))
        except ValueError as exc:
            raise ScenarioValidationError(str(exc)) from None

    forecasts = []
    for b in arrays["forecast"]:
        fr = _Reader(b, {"nf", "tick", "horizon"})
        forecasts.append(ForecastSpec(fr.get("nf", str, required=True), fr.get("tick", int, required=True),
                                      fr.get("horizon", int, required=True)))

    subscriptions: tuple[str, ...] = ()
    if "nsmf" in tables:
        nr = _Reader(tables["nsmf"], {"subscribe"})
        subscriptions = tuple(s.strip() for s in nr.get("subscribe", str, "").split(",") if s.strip())

    cfg = ScenarioConfig(
        option=option,
        seed=r.get("seed", int, 0),
        max_ticks=r.get("max_ticks", int, 200),
        jitter=r.get("jitter", float, 0.0),
        single_virtualization_domain=r.get("single_virtualization_domain", bool, False),
        shared_pop=r.get("shared_pop", str, None),
        thresholds=thresholds,
        pops=tuple(pops), slices=tuple(slices), loads=tuple(loads),
        forecasts=tuple(forecasts), subscriptions=subscriptions,
    )
    validate(cfg)
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def validate(cfg: ScenarioConfig) -> None:
    def fail(msg: str):
        raise ScenarioValidationError(msg)

    if cfg.option not in OPTIONS:
        fail(f"unknown option {cfg.option}")
    if cfg.max_ticks <= 0:
        fail("max_ticks must be positive")
    if not 0 <= cfg.jitter < 1:
        fail("jitter must lie in [0, 1)")
    t = cfg.thresholds
    if t.W_base < 2 or t.k < 1 or t.W < 1 or t.H_short < 1:
        fail("W_base >= 2, k >= 1, W >= 1 and H_short >= 1 are required")
    if t.capacity_per_vcpu <= 0 or t.base_rt <= 0 or t.T_abs <= 0:
        fail("capacity_per_vcpu, base_rt and T_abs must be positive")
    if not 0 < t.U_target < t.U_hi <= 1:
        fail("thresholds need 0 < U_target < U_hi <= 1")
    if cfg.single_virtualization_domain and cfg.option != "1A":
        fail("single_virtualization_domain only applies to option 1A")
    if cfg.subscriptions and cfg.option != "2":
        fail("[nsmf] subscriptions require option 2")

    pop_ids = [p.pop_id for p in cfg.pops]
    if len(set(pop_ids)) != len(pop_ids):
        fail("duplicate PoP id")
    if cfg.slices and not pop_ids:
        fail("slices need at least one [[pop]]")
    if cfg.shared_pop is not None and cfg.shared_pop not in pop_ids:
        fail(f"shared_pop references unknown PoP {cfg.shared_pop}")

    nf_owner: dict[str, tuple[str, Sharing]] = {}
    slice_nfs: dict[str, set[str]] = {}
    seen_slices = set()
    for s in cfg.slices:
        if s.slice_id in seen_slices:
            fail(f"duplicate slice {s.slice_id}")
        if not re.match(r"^[A-Za-z0-9_-]+$", s.slice_id):
            fail(f"slice id {s.slice_id!r} may only hold letters, digits, '-' and '_'")
        seen_slices.add(s.slice_id)
        if s.pop not in pop_ids:
            fail(f"slice {s.slice_id} references unknown PoP {s.pop}")
        if not s.vnf.fits_in(s.vnf_max) or s.vnf.vcpu < 1:
            fail(f"slice {s.slice_id} VNF profile outside its maximum")
        try:
            planned = s.planned()
        except (EmptyTemplate, HintRequired) as exc:
            fail(f"slice {s.slice_id}: {type(exc).__name__} {exc}")
        slice_nfs[s.slice_id] = {nf for nf, _, _ in planned}
        for nf_id, _, sharing in planned:
            if nf_id in nf_owner and nf_owner[nf_id][1] is not sharing:
                fail(f"{nf_id} planned with conflicting sharing classes")
            nf_owner.setdefault(nf_id, (s.slice_id, sharing))

    loaded = set()
    for lp in cfg.loads:
        if lp.nf_id not in nf_owner:
            fail(f"load references unknown NF {lp.nf_id}")
        if lp.nf_id in loaded:
            fail(f"two load profiles for {lp.nf_id}")
        loaded.add(lp.nf_id)

    for fc in cfg.forecasts:
        if fc.nf_id not in nf_owner or nf_owner[fc.nf_id][1] is not Sharing.DEDICATED:
            fail(f"forecast references unknown or non-dedicated NF {fc.nf_id}")
        if fc.horizon < 1 or fc.tick < 0:
            fail(f"forecast for {fc.nf_id} needs horizon >= 1 and tick >= 0")
        sid = nf_owner[fc.nf_id][0]
        if fc.horizon <= t.H_short and f"nwdaf-{sid}" not in slice_nfs[sid]:
            fail(f"short-horizon forecast for {fc.nf_id} needs an NWDAF in slice {sid}")
