from __future__ import annotations

import pytest

from metatx.chainsim import Ledger, MinerProfile, SimConfig
from metatx.core import Address

_ACCEPTANCE: list[tuple[str, str]] = []


def addr(label: str) -> Address:
    return Address.named(label)


@pytest.fixture
def cfg() -> SimConfig:
    return SimConfig()


@pytest.fixture
def people():
    return {n: addr(n) for n in ("alice", "bob", "carol", "relay", "m1", "m2", "m3")}


@pytest.fixture
def ledger(cfg, people) -> Ledger:
    p = people
    return Ledger.genesis(
        cfg,
        native={p["alice"]: 100, p["bob"]: 100, p["relay"]: 100, p["m1"]: 10, p["m2"]: 10},
        meta={p["alice"]: 10_000, p["bob"]: 10_000, p["carol"]: 500},
    )


@pytest.fixture
def m1(people) -> MinerProfile:
    return MinerProfile(people["m1"], 0.5, True)


@pytest.fixture
def m2(people) -> MinerProfile:
    return MinerProfile(people["m2"], 0.5, True)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{outcome:7} {name}")
