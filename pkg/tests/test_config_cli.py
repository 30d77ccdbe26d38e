from __future__ import annotations

import csv
import io
import json

import numpy as np
import pytest

from coexist import cli
from coexist import config as cfg
from coexist.errors import ConfigurationError
from coexist.interference import Direction

MINIMAL = """
name = "tiny"

[plan]
spacing_ghz = 100.0

[plan.fill]
f_lo_thz = 193.0
f_hi_thz = 193.4
count = 4
power_dbm = 0.0

[run]
length_km = 20.0
directions = ["fwd"]
protocols = ["bb84"]

[run.wavelengths]
min_nm = 1300.0
max_nm = 1320.0
step_nm = 10.0
"""


def _write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_bundled_configs_load():
    bundled = cfg.bundled_configs()
    assert "reference_c" in bundled
    for path in bundled.values():
        loaded = cfg.load(path)
        assert loaded.document["metadata"]["command"] in cli.COMMANDS


def test_minimal_config(tmp_path):
    loaded = cfg.load(_write(tmp_path, MINIMAL))
    assert len(loaded.scenario.plan.active) == 4
    assert loaded.scenario.directions == (Direction.FORWARD,)
    assert np.array_equal(loaded.run.wavelengths_nm, [1300.0, 1310.0, 1320.0])


def test_oh_scale_override(tmp_path):
    loaded = cfg.load(_write(tmp_path, MINIMAL), oh_scale=0.7)
    assert loaded.scenario.fiber.attenuation.oh_scale == 0.7


def test_unknown_key_reported_with_line(tmp_path):
    text = MINIMAL.replace("length_km = 20.0", "length_km = 20.0\nlenght = 3")
    with pytest.raises(ConfigurationError) as exc:
        cfg.load(_write(tmp_path, text))
    lineno = text.splitlines().index("lenght = 3") + 1
    assert f"s.toml:{lineno}: run.lenght" in str(exc.value)


def test_type_error_reported(tmp_path):
    text = MINIMAL.replace("count = 4", 'count = "four"')
    with pytest.raises(ConfigurationError, match="plan.fill.count"):
        cfg.load(_write(tmp_path, text))


def test_quantum_on_active_slot_rejected(tmp_path):
    text = MINIMAL + '\n[[plan.channels]]\nindex = -10\nrole = "quantum"\n'
    loaded = cfg.load(_write(tmp_path, text, "ok.toml"))
    assert loaded.scenario.plan.quantum.index == -10
    first = loaded.scenario.plan.active[0].index
    bad = MINIMAL + f'\n[[plan.channels]]\nindex = {first}\nrole = "quantum"\n'
    with pytest.raises(ConfigurationError, match="E-COLLIDE"):
        cfg.load(_write(tmp_path, bad, "bad.toml"))


def test_missing_raman_file(tmp_path):
    text = MINIMAL + '\n[fiber]\nraman_table = "nowhere.dat"\n'
    with pytest.raises(ConfigurationError):
        cfg.load(_write(tmp_path, text))


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_cli_csv_and_jsonl_agree(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL)
    assert cli.main(["skr-sweep", "--config", str(path)]) == 0
    rows = _rows(capsys.readouterr().out)
    assert cli.main(["skr-sweep", "--config", str(path), "--format", "jsonl"]) == 0
    records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert len(rows) == len(records) == 3
    assert float(rows[1]["skr_bits_per_symbol"]) == pytest.approx(
        records[1]["skr_bits_per_symbol"], rel=1e-9)


def test_cli_direction_override(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL)
    assert cli.main(["noise-sweep", "--config", str(path), "--direction", "both"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert {r["direction"] for r in rows} == {"fwd", "bwd"}


def test_cli_verify_minimal(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL)
    assert cli.main(["skr-sweep", "--config", str(path), "--verify"]) == 0
    assert "verify:" in capsys.readouterr().err


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL.replace("count = 4", "count = -4"))
    assert cli.main(["skr-sweep", "--config", str(path)]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_range_error_exit_code(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL.replace("max_nm = 1320.0", "max_nm = 1800.0"))
    assert cli.main(["noise-sweep", "--config", str(path)]) == cli.EXIT_NUMERIC
    assert "outside [1260, 1675] nm" in capsys.readouterr().err
    assert cli.main(["validate", "--config", str(path)]) == cli.EXIT_CONFIG
    assert "E-RANGE" in capsys.readouterr().out


def test_validate_findings(tmp_path, capsys):
    assert cli.main(["validate", "--config", str(_write(tmp_path, MINIMAL))]) == 0
    out = capsys.readouterr().out
    assert "ERROR" not in out
    far = MINIMAL.replace("min_nm = 1300.0", "min_nm = 1260.0")
    assert cli.main(["validate", "--config", str(_write(tmp_path, far, "far.toml"))]) == 0
    assert "W-RAMAN-SUPPORT" in capsys.readouterr().out
    broken = MINIMAL.replace("step_nm = 10.0", "step_nm = -1.0")
    assert cli.main(["validate", "--config", str(_write(tmp_path, broken, "b.toml"))]) == 2
    assert "E-SCHEMA" in capsys.readouterr().out


def test_fwm_tools_rejects_direction(capsys):
    assert cli.main(["fwm-tools", "--direction", "fwd"]) == cli.EXIT_CONFIG


def test_fwm_tools_verify_column(capsys):
    assert cli.main(["fwm-tools", "--channels", "5", "--density-channels", "16",
                     "--verify"]) == 0
    rows = _rows(capsys.readouterr().out)
    counts = [r for r in rows if r.get("count_bruteforce")]
    assert counts and all(r["count"] == r["count_bruteforce"] for r in counts)


def test_fiber_profile_range(capsys):
    assert cli.main(["fiber-profile", "--min-nm", "1300", "--max-nm", "1310",
                     "--step-nm", "5"]) == 0
    assert len(_rows(capsys.readouterr().out)) == 3
