"""Scenario files: TOML with a versioned schema; unknown keys are rejected."""

from __future__ import annotations

import enum
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..chainsim.config import SHARE_TOLERANCE, MinerProfile, SimConfig
from ..core import Address, MetaTxError
from ..econ.channels import sample_pool_distribution

SCHEMA_VERSION = 1
OUTPUT_FILES = ("chain.jsonl", "metrics.csv", "channels.csv", "summary.json")


class ConfigParseError(MetaTxError):
    """Malformed or ill-typed scenario file (exit code 2)."""


class ScenarioInvariantViolation(MetaTxError):
    """Well-formed scenario that describes an impossible setup (exit code 3)."""


class Scheme(enum.Enum):
    RELAYER = "relayer"
    MINER = "miner"
    CHANNEL = "channel"


class ActionKind(enum.Enum):
    NOOP = "noop"
    TRANSFER_NATIVE = "transfer_native"
    TRANSFER_META = "transfer_meta"


@dataclass(frozen=True)
class MinerSpec:
    name: str
    profile: MinerProfile
    sweep_anyone_can_spend: bool = True


@dataclass(frozen=True)
class SenderSpec:
    name: str
    scheme: Scheme
    target: str
    rate: float = 1.0
    meta_fee: int = 1
    action: ActionKind = ActionKind.NOOP
    amount: int = 0
    max_actions: Optional[int] = None
    # miner scheme
    batch: int = 1
    direct_to_miner: bool = False
    # channel scheme
    collateral: int = 0
    channel_miners: tuple[str, ...] = ()
    open_fee: int = 1
    close_with_ack: bool = False
    # relayer scheme
    relayer: str = ""
    honest: bool = True
    fee_payer: str = "receiver"
    native_fee: int = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    ticks: int
    sim: SimConfig
    miners: tuple[MinerSpec, ...]
    accounts: dict[str, tuple[int, int]]
    senders: tuple[SenderSpec, ...]
    outputs: tuple[str, ...] = OUTPUT_FILES
    source: str = field(default="", compare=False)

    def address(self, name: str) -> Address:
        return Address.named(f"{self.name}/{name}")


_REQUIRED = object()


class _Table:
    """Typed, key-tracking view of one TOML table."""

    def __init__(self, data: Any, where: str) -> None:
        if not isinstance(data, dict):
            raise ConfigParseError(f"{where}: expected a table")
        self.data = data
        self.where = where
        self.used: set[str] = set()

    def get(self, key: str, kind, default=_REQUIRED):
        self.used.add(key)
        if key not in self.data:
            if default is _REQUIRED:
                raise ConfigParseError(f"{self.where}: missing key {key!r}")
            return default
        value = self.data[key]
        ok = isinstance(value, kind) and not (kind in (int, float) and isinstance(value, bool))
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value, ok = float(value), True
        if not ok:
            raise ConfigParseError(f"{self.where}.{key}: expected {kind.__name__}")
        return value

    def enum(self, key: str, kind, default=_REQUIRED):
        raw = self.get(key, str, default if default is _REQUIRED else default.value)
        try:
            return kind(raw)
        except ValueError:
            choices = ", ".join(m.value for m in kind)
            raise ConfigParseError(f"{self.where}.{key}: {raw!r} is not one of {choices}") from None

    def done(self) -> None:
        unknown = sorted(set(self.data) - self.used)
        if unknown:
            raise ConfigParseError(f"{self.where}: unknown keys {unknown}")


def _tables(data: dict, key: str) -> list:
    value = data.get(key, [])
    if not isinstance(value, list):
        raise ConfigParseError(f"{key}: expected an array of tables")
    return value


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc}") from None
    top = _Table(raw, "scenario")
    version = top.get("schema_version", int)
    if version != SCHEMA_VERSION:
        raise ConfigParseError(f"unsupported schema_version {version}, expected {SCHEMA_VERSION}")
    name = top.get("name", str)
    ticks = top.get("ticks", int)
    outputs = tuple(top.get("outputs", list, list(OUTPUT_FILES)))
    bad = [o for o in outputs if o not in OUTPUT_FILES]
    if bad:
        raise ConfigParseError(f"outputs: unknown files {bad}")

    st = _Table(top.get("sim", dict, {}), "sim")
    sim_kwargs = dict(
        block_gas_limit=st.get("block_gas_limit", int, 210_000),
        base_tx_gas=st.get("base_tx_gas", int, 21_000),
        seed=st.get("seed", int, 0),
        channel_timeout_blocks=st.get("channel_timeout_blocks", int, 100),
        coinbase_reward=st.get("coinbase_reward", int, 1),
    )
    st.done()
    try:
        sim = SimConfig(**sim_kwargs)
    except ValueError as exc:
        raise ConfigParseError(f"sim: {exc}") from None

    miner_rows = []
    for i, m in enumerate(_tables(raw, "miners")):
        t = _Table(m, f"miners[{i}]")
        miner_rows.append(
            (
                t.get("id", str),
                t.get("hash_share", float),
                t.get("accepts_meta_fees", bool, True),
                t.get("sweep_anyone_can_spend", bool, True),
            )
        )
        t.done()
    top.used.add("miners")
    sampled = None
    if "miners_sampled" in raw:
        t = _Table(top.get("miners_sampled", dict), "miners_sampled")
        sampled = (
            t.get("count", int),
            t.get("lambda", float, 2.4045),
            t.get("accepts_meta_fees", bool, True),
        )
        t.done()
        if miner_rows:
            raise ConfigParseError("give either [[miners]] or [miners_sampled], not both")

    accounts = {}
    for i, a in enumerate(_tables(raw, "accounts")):
        t = _Table(a, f"accounts[{i}]")
        acc_id = t.get("id", str)
        native, meta = t.get("native", int, 0), t.get("meta", int, 0)
        t.done()
        if native < 0 or meta < 0:
            raise ConfigParseError(f"accounts[{i}]: balances must be non-negative")
        accounts[acc_id] = (native, meta)
    top.used.add("accounts")

    senders = []
    for i, s in enumerate(_tables(raw, "senders")):
        t = _Table(s, f"senders[{i}]")
        max_actions = t.get("max_actions", int, -1)
        spec = SenderSpec(
            name=t.get("id", str),
            scheme=t.enum("scheme", Scheme),
            target=t.get("target", str),
            rate=t.get("rate", float, 1.0),
            meta_fee=t.get("meta_fee", int, 1),
            action=t.enum("action", ActionKind, ActionKind.NOOP),
            amount=t.get("amount", int, 0),
            max_actions=None if max_actions < 0 else max_actions,
            batch=t.get("batch", int, 1),
            direct_to_miner=t.get("direct_to_miner", bool, False),
            collateral=t.get("collateral", int, 0),
            channel_miners=tuple(t.get("channel_miners", list, [])),
            open_fee=t.get("open_fee", int, 1),
            close_with_ack=t.get("close_with_ack", bool, False),
            relayer=t.get("relayer", str, ""),
            honest=t.get("honest", bool, True),
            fee_payer=t.get("fee_payer", str, "receiver"),
            native_fee=t.get("native_fee", int, 1),
        )
        t.done()
        if spec.fee_payer not in ("sender", "receiver"):
            raise ConfigParseError(f"senders[{i}].fee_payer must be 'sender' or 'receiver'")
        if not 0.0 <= spec.rate <= 1.0:
            raise ConfigParseError(f"senders[{i}].rate must be in [0, 1]")
        if spec.meta_fee <= 0 or spec.batch < 1 or spec.amount < 0:
            raise ConfigParseError(f"senders[{i}]: meta_fee and batch must be positive, amount non-negative")
        if spec.scheme is Scheme.RELAYER and not spec.relayer:
            raise ConfigParseError(f"senders[{i}]: relayer scheme needs a relayer id")
        if spec.scheme is Scheme.CHANNEL and (spec.collateral <= 0 or not spec.channel_miners):
            raise ConfigParseError(f"senders[{i}]: channel scheme needs collateral and channel_miners")
        if any(not isinstance(m, str) for m in spec.channel_miners):
            raise ConfigParseError(f"senders[{i}].channel_miners must be strings")
        senders.append(spec)
    top.used.add("senders")
    top.done()

    if ticks < 1:
        raise ScenarioInvariantViolation(f"ticks must be at least 1, got {ticks}")
    if sampled is not None:
        count, lam, accepts = sampled
        if count < 1 or lam <= 0:
            raise ScenarioInvariantViolation("miners_sampled needs count >= 1 and lambda > 0")
        pools = sample_pool_distribution(count, lam, random.Random(sim.seed))
        miner_rows = [(f"pool-{i}", p.hash_share, accepts, True) for i, p in enumerate(pools)]
    if not miner_rows:
        raise ScenarioInvariantViolation("a scenario needs at least one miner")
    names = [r[0] for r in miner_rows]
    if len(set(names)) != len(names):
        raise ScenarioInvariantViolation("miner ids must be unique")
    if any(not 0.0 <= r[1] <= 1.0 for r in miner_rows):
        raise ScenarioInvariantViolation("hash shares must lie in [0, 1]")
    total = sum(Fraction(r[1]) for r in miner_rows)
    if abs(total - 1) > SHARE_TOLERANCE:
        raise ScenarioInvariantViolation(f"miner hash shares sum to {float(total)}, expected 1")
    for s in senders:
        unknown = [m for m in s.channel_miners if m not in names]
        if unknown:
            raise ScenarioInvariantViolation(f"sender {s.name!r} opens channels to unknown miners {unknown}")

    scenario = Scenario(name, ticks, sim, (), accounts, tuple(senders), outputs, source)
    miners = tuple(
        MinerSpec(n, MinerProfile(scenario.address(n), share, accepts), sweep)
        for n, share, accepts, sweep in miner_rows
    )
    return Scenario(name, ticks, sim, miners, accounts, tuple(senders), outputs, source)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from None
    return parse_scenario(text, str(path))


def bundled_scenarios() -> list[str]:
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def load_bundled(name: str) -> Scenario:
    root = resources.files(__package__) / "scenarios"
    res = root / f"{name}.toml"
    if not res.is_file():
        raise ConfigParseError(f"no bundled scenario {name!r}; choose from {bundled_scenarios()}")
    return parse_scenario(res.read_text(encoding="utf-8"), f"bundled:{name}")
