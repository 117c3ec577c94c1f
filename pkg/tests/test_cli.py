"""Config parsing and the command-line driver."""

import json

import numpy as np
import pytest

from trispec import cli
from trispec.config import (CouplingSpec, compile_expression, parse_coupling,
                            parse_config)
from trispec.errors import ConfigError, DomainError

GOOD_CONFIG = """\
[model]
name = reference-sin
mu1 = mu0
mu2 = mu0

[grids]
quad_n = 16
kernel_n = 8
p_grid_n = 8

[schedule]
z = -1.0, -0.5

[output]
dir = out
"""


def test_parse_and_round_trip():
    cfg = parse_config(GOOD_CONFIG)
    assert cfg.model_name == "reference-sin"
    assert cfg.mu1.symbol == "mu0" and cfg.mu1.scale == 1.0
    assert cfg.mu2.symbol == "mu0"
    assert cfg.grids["quad_n"] == 16 and cfg.grids["one_d_n"] == 256
    assert cfg.z_schedule == (-1.0, -0.5)
    again = parse_config(cfg.serialize())
    assert again == cfg


def test_geometric_schedule():
    cfg = parse_config(GOOD_CONFIG.replace(
        "z = -1.0, -0.5", "z_from = -1.0\nz_to = -0.01\nz_count = 5"))
    assert len(cfg.z_schedule) == 5
    assert cfg.z_schedule[0] == pytest.approx(-1.0)
    assert cfg.z_schedule[-1] == pytest.approx(-0.01)
    assert all(b > a for a, b in zip(cfg.z_schedule, cfg.z_schedule[1:]))


def test_diagnostics_carry_line_numbers():
    bad = "[model]\nname = nope\nmu1 = abc\n\n[grids]\nquad_n = 2\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    diags = dict(exc.value.diagnostics)
    assert any("model name" in m for ln, m in exc.value.diagnostics if ln == 2)
    assert any("coupling" in m for ln, m in exc.value.diagnostics if ln == 3)
    assert any("quad_n" in m for ln, m in exc.value.diagnostics if ln == 6)
    assert any(ln is None and "mu2" in m for ln, m in exc.value.diagnostics)


def test_schedule_must_increase_toward_zero():
    with pytest.raises(ConfigError) as exc:
        parse_config(GOOD_CONFIG.replace("z = -1.0, -0.5", "z = -0.5, -1.0"))
    assert any("increase strictly" in m for _, m in exc.value.diagnostics)


def test_custom_parity_mismatch_diagnosed():
    text = GOOD_CONFIG.replace("name = reference-sin", "name = custom") + """
[custom]
u = 6 - cos(p1) - cos(p2) - cos(p3) - cos(q1) - cos(q2) - cos(q3)
phi1 = sin(p1)
phi1_parity = even
phi2 = sin(p1)
phi2_parity = odd
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    msgs = [m for _, m in exc.value.diagnostics]
    assert any("declared even but samples as odd" in m for m in msgs)


def test_custom_section_requires_custom_model():
    with pytest.raises(ConfigError) as exc:
        parse_config(GOOD_CONFIG + "\n[custom]\nu = cos(p1)\n")
    assert any("model name = custom" in m for _, m in exc.value.diagnostics)


def test_expression_grammar_rejections():
    with pytest.raises(DomainError):
        compile_expression("__import__('os')", ("p1",))
    with pytest.raises(DomainError):
        compile_expression("p1 ** 2", ("p1",))
    with pytest.raises(DomainError):
        compile_expression("q1 + 1", ("p1", "p2", "p3"))
    f = compile_expression("2*cos(p1) - 1/2", ("p1",))
    assert f(p1=np.array([0.0]))[0] == pytest.approx(1.5)


def test_parse_coupling_forms():
    assert parse_coupling("0.125").value == 0.125
    assert parse_coupling("mu_max").symbol == "mu_max"
    spec = parse_coupling("2.5 * mu_max")
    assert (spec.symbol, spec.scale) == ("mu_max", 2.5)
    with pytest.raises(DomainError):
        parse_coupling("mu_banana")


def _write(tmp_path, text):
    p = tmp_path / "cfg.ini"
    p.write_text(text)
    return str(p)


def test_cli_count_run_and_reproducibility(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["count", "--config", cfg, "--out", out1]) == 0
    assert cli.main(["count", "--config", cfg, "--out", out2]) == 0
    csv1 = (tmp_path / "a" / "counts.csv").read_bytes()
    csv2 = (tmp_path / "b" / "counts.csv").read_bytes()
    assert csv1 == csv2  # byte-identical reruns
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["partial"] is False
    assert summary["couplings"]["mu1"]["value"] > 0.0
    assert summary["couplings"]["mu2"]["value"] == pytest.approx(
        summary["couplings"]["mu1"]["value"], rel=1e-12)
    assert summary["grids"]["kernel_n"] == 8


def test_cli_count_needs_schedule(tmp_path):
    text = GOOD_CONFIG.replace("z = -1.0, -0.5\n", "")
    cfg = _write(tmp_path, text)
    out = str(tmp_path / "o")
    assert cli.main(["count", "--config", cfg, "--out", out]) == 1
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["partial"] is True
    assert summary["error"]["kind"] == "validation"


def test_cli_numerical_fault_exit_code(tmp_path):
    # z = -1 sits inside the two-particle band at mu = 2*mu_max
    text = GOOD_CONFIG.replace("name = reference-sin", "name = reference-cos")
    text = text.replace("mu1 = mu0", "mu1 = 2*mu_max")
    text = text.replace("mu2 = mu0", "mu2 = 2*mu_max")
    cfg = _write(tmp_path, text)
    out = str(tmp_path / "o")
    assert cli.main(["count", "--config", cfg, "--out", out]) == 2
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["partial"] is True
    assert summary["error"]["kind"] == "numerical"


def test_cli_rejects_bad_config_and_missing_file(tmp_path, capsys):
    cfg = _write(tmp_path, "[model]\nname = nope\n")
    assert cli.main(["verify", "--config", cfg]) == 1
    assert "line 2" in capsys.readouterr().err
    assert cli.main(["verify", "--config", str(tmp_path / "absent.ini")]) == 1


def test_cli_verify_writes_report(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG)
    out = str(tmp_path / "o")
    assert cli.main(["verify", "--config", cfg, "--out", out]) == 0
    rows = (tmp_path / "o" / "hypothesis_checks.csv").read_text().splitlines()
    assert rows[0] == "check,passed"
    assert all(r.endswith(",true") for r in rows[1:])
