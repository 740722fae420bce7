import csv
import io
import json

import pytest

from bdcat.cli import main
from bdcat.config import G_GRID, PRESETS, SweepConfig, config_from_dict, parse_config
from bdcat.errors import ConfigError
from bdcat.sim import TopologySpec
from bdcat.sweep import AGGREGATE_COLUMNS, combo_hash, run_sweep, t_interval

TINY = {"topology": {"kind": "ba", "n": 60, "m": 2}, "events": 60}


def test_full_sweep_preset_grid():
    cfg = config_from_dict({"preset": "full-sweep"})
    assert cfg.topologies == (TopologySpec(kind="ba", n=9222, m=5),)
    assert cfg.c == tuple(range(1, 11))
    assert cfg.g == G_GRID == (1.001, 1.005, 1.01, 1.1, 1.2, 2.0)
    assert cfg.variants == ("original", "simple_join", "virtual_tree")
    assert len(cfg.seeds) == 20 and cfg.events == 100_000 and cfg.q == 0.25
    assert (cfg.b, cfg.L) == (32, 32)
    assert sum(1 for _ in cfg.runs()) == 10 * 6 * 3 * 20


def test_defaults_of_minimal_config():
    cfg = parse_config("{}")
    assert cfg == SweepConfig()
    assert parse_config('{"c": 3, "g": 1.5}').c == (3,)


@pytest.mark.parametrize("text, field", [
    ('{"g": [2, 0.9]}', "g[1]"),
    ('{"c": [-1]}', "c[0]"),
    ('{"gg": 2}', "gg"),
    ('{"topology": {"kind": "ba", "n": 10, "mm": 2}}', "topology.mm"),
    ('{"topology": {"kind": "tree"}}', "topology.kind"),
    ('{"churn": {"session": {"kind": "lognormal", "mean": -1}}}', "churn.session.mean"),
    ('{"variants": ["fast"]}', "variants[0]"),
    ('{"events": "many"}', "events"),
    ('{"b": 16, "L": 32}', "L"),
    ('{"preset": "nope"}', "preset"),
    ('{"c": 1', "<root>"),
])
def test_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == field
    assert str(info.value).startswith(field)


def test_t_interval_by_hand():
    mean, half = t_interval([1.0, 2.0, 3.0])
    # t(0.975, 2) = 4.302653; sem = 1 / sqrt(3)
    assert mean == 2.0
    assert half == pytest.approx(4.302653 / 3 ** 0.5, rel=1e-6)
    assert t_interval([5.0])[0] == 5.0


def test_sweep_outputs(tmp_path):
    cfg = config_from_dict({**TINY, "c": [1, 2], "g": [1.5, 2], "seeds": [0, 1, 2]})
    runs = list(cfg.runs())
    assert len(runs) == 12
    res = run_sweep(cfg, tmp_path / "a")
    rows = list(csv.DictReader(io.StringIO(res.aggregate_path.read_text())))
    assert len(rows) == 4
    assert tuple(rows[0]) == AGGREGATE_COLUMNS
    assert all(r["seeds"] == "3" for r in rows)
    assert len(list((tmp_path / "a" / "runs").glob("*.json"))) == 12
    # all seeds of one cell share a config hash
    hashes = {combo_hash(c) for _, c in runs}
    assert len(hashes) == 4 and {r["config_hash"] for r in rows} == hashes
    again = run_sweep(cfg, tmp_path / "b")
    assert again.aggregate_path.read_text() == res.aggregate_path.read_text()
    assert again.long_path.read_text() == res.long_path.read_text()


def test_cli_show_config_and_run(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps(TINY))
    assert main(["show-config", "-c", str(conf), "-s", "7"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["seeds"] == [7] and shown["events"] == 60

    steps = tmp_path / "steps.csv"
    assert main(["run", "-c", str(conf), "--steps", str(steps)]) == 0
    assert len(steps.read_text().splitlines()) == 61
    summary = json.loads(capsys.readouterr().out)
    assert summary["events"] == 60


def test_cli_sweep_is_default(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps(TINY))
    assert main(["-c", str(conf), "-o", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "aggregate.csv").exists()
    assert "1 runs" in capsys.readouterr().out


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"g": [0.9]}')
    assert main(["sweep", "-c", str(bad)]) == 2
    assert "g[0]" in capsys.readouterr().err
    assert main(["run", "-c", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit):
        main(["run", "--preset", "nope"])


def test_presets_validate():
    for name in PRESETS:
        config_from_dict({"preset": name})
