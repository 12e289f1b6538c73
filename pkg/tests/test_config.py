import math

import pytest

from sluice_ops.config import (
    Thresholds,
    build_pipeline_config,
    build_scenario,
    build_system,
    read_config,
)
from sluice_ops.errors import DomainError, ParseError
from sluice_ops.tide_control import Mode

MINIMAL = """
a_lake: 1.0e6
q_river: 10
bays: 3
bay_width: 10
sill_level: 0
h_lake0: 4.1
w_in: 20
w_out: 20
tide: {mean: 4.0, amplitude: 0.5, period_h: 12.5}
scenario.m: 2
scenario.h_target: 4.0
"""


def test_builtin_case(case_cfg):
    system = build_system(case_cfg)
    assert system.n == 7 and system.w == 22.5
    assert system.tide.period == 12.5 * 3600
    sc = build_scenario(case_cfg, system)
    assert sc.mode is Mode.PID and sc.m == 3
    assert sc.duration == 4 * system.tide.period


def test_nested_and_dotted_keys_agree(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(MINIMAL)
    cfg = read_config(p)
    assert cfg["tide.mean"] == 4.0
    assert cfg["pid.kp"] == 0.5  # default
    system = build_system(cfg)
    assert system.a_max == math.inf
    assert system.losses.for_gates(2).c_c_in == 0.9


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(MINIMAL + "tide.meen: 3\n")
    with pytest.raises(ParseError, match="tide.meen"):
        read_config(p)


def test_missing_required_key(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(MINIMAL.replace("a_lake: 1.0e6\n", ""))
    with pytest.raises(ParseError, match="a_lake"):
        build_system(read_config(p))


def test_yaml_syntax_error_has_line(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("a_lake: 1\nbays: [1, 2\n")
    with pytest.raises(ParseError) as info:
        read_config(p)
    assert info.value.line is not None


def test_bad_mode(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(MINIMAL + "scenario.mode: bang_bang\n")
    cfg = read_config(p)
    with pytest.raises(ParseError):
        build_scenario(cfg, build_system(cfg))


def test_pipeline_config(case_cfg, tmp_path):
    pc = build_pipeline_config(case_cfg, tmp_path)
    assert pc.m_values == list(range(1, 8))
    assert [c.label for c in pc.curves] == ["small_opening", "large_opening"]
    assert pc.curves[1].a_range == (1.0, math.inf)
    assert pc.thresholds.psi_max == 0.5


def test_thresholds_positive():
    with pytest.raises(DomainError):
        Thresholds(psi_max=0.0)
