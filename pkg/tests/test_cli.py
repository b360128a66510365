import json
from pathlib import Path

import pytest

from dtasep.cli import main, parse_config_text
from dtasep.errors import ConfigError

LAW_BLOCK = """
[law]
c = 0.5
nu = 1.0
kappa = 4.0
eps = 0.5
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_all(outdir: Path) -> dict[str, bytes]:
    return {f.name: f.read_bytes() for f in sorted(outdir.iterdir())}


# ----------------------------------------------------------- config parsing

def test_parse_sections_and_comments():
    text = "# top\n[law]\nc = 0.5 # inline\nnu = 1.0\n"
    sections = parse_config_text(text)
    assert sections == {"law": {"c": "0.5", "nu": "1.0"}}


def test_parse_rejects_stray_and_duplicate():
    with pytest.raises(ConfigError, match="outside"):
        parse_config_text("c = 0.5\n")
    with pytest.raises(ConfigError, match="duplicate key"):
        parse_config_text("[law]\nc = 1\nc = 2\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("[law]\nnonsense\n")


def test_missing_law_key_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "[law]\nc = 0.5\nnu = 1.0\neps = 0.5\n")
    assert main(["varcheck", "--config", cfg]) == 2
    assert "kappa" in capsys.readouterr().err


def test_unknown_experiment_key_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, LAW_BLOCK + "[experiment]\nbogus = 3\n")
    assert main(["varcheck", "--config", cfg]) == 2
    assert "bogus" in capsys.readouterr().err


def test_hypothesis_violation_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "[law]\nc = 0.5\nnu = -0.5\nkappa = 1.0\neps = 0.25\n")
    assert main(["thm1", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "nu > 0" in capsys.readouterr().err


def test_config_required_for_law_commands(capsys):
    assert main(["thm1"]) == 2
    assert "--config" in capsys.readouterr().err


# ------------------------------------------------------------- dry runs

def test_dry_run_prints_plan(tmp_path, capsys):
    cfg = write(tmp_path, LAW_BLOCK + "[experiment]\nt_grid = 100, 1000\n")
    assert main(["thm1", "--config", cfg, "--dry-run"]) == 0
    out = capsys.readouterr().out
    assert "plan:" in out and "budget" in out
    assert not (tmp_path / "thm1_out").exists()


# ---------------------------------------------------------- tiny runs

def test_simulate_writes_artifacts(tmp_path):
    cfg = write(tmp_path, LAW_BLOCK +
                "[experiment]\nmode = jam\nt = 10\nsnapshots = 5\n"
                "[run]\nseed = 31\n")
    out = tmp_path / "sim"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "snapshots.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 31
    assert manifest["law"]["kappa"] == 4.0


def test_simulate_rejects_oversized_run(tmp_path, capsys):
    cfg = write(tmp_path, LAW_BLOCK + "[experiment]\nmode = jam\nt = 100000\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "budget" in capsys.readouterr().err


def test_varcheck_assert_passes(tmp_path):
    cfg = write(tmp_path, LAW_BLOCK + "[experiment]\ntrials = 30\n")
    out = tmp_path / "vc"
    assert main(["varcheck", "--config", cfg, "--out", str(out), "--assert"]) == 0
    audit = json.loads((out / "audit.json").read_text())
    assert audit["all_match"] is True


def test_json_format_output(tmp_path):
    cfg = write(tmp_path, LAW_BLOCK +
                "[experiment]\ntrials = 5\n[run]\nformat = json\n")
    out = tmp_path / "vcj"
    assert main(["varcheck", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "audit.json").exists()


def test_flag_overrides_run_section(tmp_path):
    cfg = write(tmp_path, LAW_BLOCK +
                "[experiment]\ntrials = 5\n[run]\nseed = 1\nout = ignored\n")
    out = tmp_path / "ov"
    assert main(["varcheck", "--config", cfg, "--seed", "7",
                 "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert not (tmp_path / "ignored").exists()


# ------------------------------------------------------------ determinism

def rerun_identical(tmp_path, command, cfg_text, extra=()):
    cfg = write(tmp_path, cfg_text, name=f"{command}.cfg")
    outs = []
    for tag in ("one", "two"):
        out = tmp_path / f"{command}_{tag}"
        code = main([command, "--config", cfg, "--out", str(out), *extra])
        assert code == 0
        outs.append(read_all(out))
    assert outs[0] == outs[1]


def test_lemma1_byte_identical(tmp_path):
    rerun_identical(tmp_path, "lemma1", LAW_BLOCK +
                    "[experiment]\nq1_grid = 1.0\nq2_grid = 1.0\n"
                    "n_grid = 10000\nreplicas = 2000\n")


def test_simulate_byte_identical(tmp_path):
    rerun_identical(tmp_path, "simulate", LAW_BLOCK +
                    "[experiment]\nmode = iid\nt = 8\nu = 2.0\n")


def test_rost_byte_identical(tmp_path):
    rerun_identical(tmp_path, "rost",
                    "[experiment]\nt = 300\nreplicas = 10\n")
