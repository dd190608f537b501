import argparse
import csv
import io
import json
import math

import pytest

from metatx.cli import (
    ConfigParseError,
    ScenarioInvariantViolation,
    bundled_scenarios,
    load_bundled,
    main,
    parse_scenario,
    render,
    run_simulation,
)
from metatx.cli.main import parse_values
from metatx.econ import deposit_requirement

MINIMAL = """
schema_version = 1
name = "tiny"
ticks = 3

[[miners]]
id = "solo"
hash_share = 1.0
"""


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_values():
    assert parse_values("1..4", int) == [1, 2, 3, 4]
    assert parse_values("0,0.5,1") == [0.0, 0.5, 1.0]
    assert parse_values("1..2,5", int) == [1, 2, 5]
    for bad in ("", "3..1", "a", "0.5..2"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_values(bad)


# -- config validation ---------------------------------------------------------------


def test_minimal_scenario_parses():
    sc = parse_scenario(MINIMAL, "<test>")
    assert sc.name == "tiny" and sc.ticks == 3


@pytest.mark.parametrize(
    "text",
    [
        "this is = = not toml",
        MINIMAL + "\nsurprise = 1\n",
        MINIMAL.replace("ticks = 3", 'ticks = "three"'),
        MINIMAL.replace("schema_version = 1", "schema_version = 99"),
    ],
)
def test_malformed_config_rejected(text):
    with pytest.raises(ConfigParseError):
        parse_scenario(text, "<test>")


@pytest.mark.parametrize(
    "text",
    [
        MINIMAL.replace("hash_share = 1.0", "hash_share = 0.5"),
        MINIMAL.replace("ticks = 3", "ticks = 0"),
        MINIMAL + '\n[[miners]]\nid = "solo"\nhash_share = 0.0\n',
    ],
)
def test_invariant_violations(text):
    with pytest.raises(ScenarioInvariantViolation):
        parse_scenario(text, "<test>")


def test_exit_code_config_error_writes_nothing(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("ticks = [unclosed")
    out = tmp_path / "out"
    code, _, err = run_cli(capsys, "run", "--config", str(cfg), "--out", str(out))
    assert code == 2
    assert "config error" in err
    assert not out.exists()


def test_exit_code_invariant(tmp_path, capsys):
    cfg = tmp_path / "half.toml"
    cfg.write_text(MINIMAL.replace("hash_share = 1.0", "hash_share = 0.5"))
    out = tmp_path / "out"
    code, _, _ = run_cli(capsys, "run", "--config", str(cfg), "--out", str(out))
    assert code == 3
    assert not out.exists()


def test_run_without_source_is_usage_error(capsys):
    assert run_cli(capsys, "run")[0] == 1


# -- bundled scenarios -----------------------------------------------------------------


def test_bundled_names():
    assert set(bundled_scenarios()) >= {"miner-scheme-demo", "channel-demo", "relayer-demo"}


def test_miner_demo_full_atomicity():
    summary = run_simulation(load_bundled("miner-scheme-demo")).summary
    assert summary["metatx"]["mined"] > 0
    assert summary["metatx"]["same_block"] == summary["metatx"]["mined"]
    assert summary["metatx"]["atomicity_pct"] == 100.0


def test_channel_demo_settles_n_times_fee():
    sc = load_bundled("channel-demo")
    result = run_simulation(sc)
    [sender] = sc.senders
    pays = [e for e in result.events if e.kind == "pay"]
    [close] = [e for e in result.events if e.kind == "close"]
    assert len(pays) == sender.max_actions
    # cumulative-sum oracle: one fee per committed payment
    total = 0
    for e in pays:
        total += e.amount
        assert e.seq == pays.index(e) + 1
    assert close.amount == total == sender.max_actions * sender.meta_fee
    assert result.summary["channels"]["paid_to_miners"] == total


def test_relayer_demo_censorship_visible():
    summary = run_simulation(load_bundled("relayer-demo")).summary
    assert summary["relayer"]["censored"] > 0
    assert summary["relayer"]["mined"] > 0


def test_run_writes_layout(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "channel-demo", "--out", str(tmp_path))
    assert code == 0
    target = tmp_path / "channel-demo" / "seed-11"
    assert out.strip() == str(target)
    names = {p.name for p in target.iterdir()}
    assert names == {"chain.jsonl", "metrics.csv", "channels.csv", "summary.json", "manifest.json"}
    manifest = json.loads((target / "manifest.json").read_text())
    assert manifest["seed"] == 11 and set(manifest["files"]) == names - {"manifest.json"}
    for line in (target / "chain.jsonl").read_text().splitlines():
        json.loads(line)


def test_seed_override_changes_output(tmp_path, capsys):
    run_cli(capsys, "run", "--scenario", "miner-scheme-demo", "--seed", "8", "--out", str(tmp_path))
    assert (tmp_path / "miner-scheme-demo" / "seed-8" / "summary.json").exists()


@pytest.mark.parametrize("name", ["miner-scheme-demo", "channel-demo", "relayer-demo"])
def test_rerun_byte_identical(name):
    sc = load_bundled(name)
    assert render(run_simulation(sc)) == render(run_simulation(sc))


def test_deposit_matches_locked_collateral():
    cnt, fee, n = 4, 7, 3
    miners = "".join(f'\n[[miners]]\nid = "m{i}"\nhash_share = {1 / n!r}\n' for i in range(n))
    text = f"""
schema_version = 1
name = "deposits"
ticks = 5
{miners}
[[accounts]]
id = "payer"
native = 100
meta = 10000

[[senders]]
id = "payer"
scheme = "channel"
target = "shop"
meta_fee = {fee}
collateral = {cnt * fee}
channel_miners = [{", ".join(f'"m{i}"' for i in range(n))}]
max_actions = 0
"""
    sc = parse_scenario(text, "<test>")
    result = run_simulation(sc)
    opened = [e for e in result.events if e.kind == "open"]
    assert len(opened) == n
    assert sum(e.amount for e in opened) == deposit_requirement(cnt, fee, n)


# -- calculator subcommands --------------------------------------------------------------


def test_breakeven_subcommand(capsys):
    code, out, _ = run_cli(capsys, "econ-breakeven", "--open", "92392", "--overhead", "15188", "--channels", "1,10,20")
    assert code == 0
    assert [int(r["breakeven"]) for r in rows(out)] == [7, 61, 122]


def test_throughput_subcommand(capsys):
    code, out, _ = run_cli(capsys, "econ-throughput", "--profile", "bitcoin", "--fractions", "0,0.5,1")
    assert code == 0
    tps = [float(r["tps"]) for r in rows(out)]
    assert tps[0] == 4.07
    assert tps[1] == pytest.approx(3.96, abs=0.01)
    assert tps[2] == pytest.approx(3.85, abs=0.01)


def test_throughput_subcommand_to_file(tmp_path, capsys):
    dest = tmp_path / "t.csv"
    code, out, _ = run_cli(capsys, "econ-throughput", "--profile", "ethereum", "--out", str(dest))
    assert code == 0 and out == ""
    schemes = {r["scheme"] for r in rows(dest.read_text())}
    assert schemes == {"miner", "relayer", "channel"}


def test_inclusion_subcommand(capsys):
    code, out, _ = run_cli(capsys, "econ-inclusion", "--shares", "0.25,0.2,0.15,0.1,0.05,0.05,0.05,0.05,0.05,0.05", "--channels", "5,10")
    assert code == 0
    got = rows(out)
    assert float(got[0]["probability"]) == pytest.approx(0.75, abs=1e-12)
    assert float(got[1]["probability"]) == pytest.approx(1.0, abs=1e-12)


def test_inclusion_too_many_channels(capsys):
    assert run_cli(capsys, "econ-inclusion", "--pools", "3", "--channels", "4")[0] == 1


def test_takeover_subcommand(capsys):
    code, out, _ = run_cli(capsys, "econ-takeover")
    assert code == 0
    got = rows(out)
    assert [round(float(r["takeover_usd"])) for r in got] == [8290, 198963, 1392740]


def test_subsidy_subcommand(capsys):
    code, out, _ = run_cli(capsys, "econ-subsidy", "--pool", "5000", "--fees", "1000")
    assert code == 0
    by_policy = {r["policy"]: r for r in rows(out)}
    assert by_policy["identity"]["net_cost"] == "0"
    assert int(by_policy["sqrt"]["net_cost"]) == 1000 - 31


def test_security_vd_subcommand_monotone(capsys):
    code, out, _ = run_cli(capsys, "security-vd", "--alpha", "0.3", "--k", "1..12")
    assert code == 0
    got = rows(out)
    assert [int(r["k"]) for r in got] == list(range(1, 13))
    vds = [float(r["vd_native"]) for r in got]
    assert all(x <= y for x, y in zip(vds, vds[1:])), vds
    assert all(float(r["difference"]) == 0.0 for r in got)
    assert not any(math.isnan(v) for v in vds)


def test_invalid_calculator_argument(capsys):
    code, _, err = run_cli(capsys, "security-vd", "--alpha", "0.7", "--k", "1")
    assert code == 1 and "error" in err


@pytest.mark.parametrize(
    "command",
    [None, "run", "scenarios", "econ-throughput", "econ-breakeven", "econ-inclusion",
     "econ-takeover", "econ-subsidy", "security-vd"],
)
def test_help_renders(command, capsys):
    argv = ["--help"] if command is None else [command, "--help"]
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out
