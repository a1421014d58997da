import subprocess
import sys

import pytest

from rotkick import __version__
from rotkick.cli import main
from rotkick.config import parse_config
from rotkick.errors import ConfigError

MINIMAL = """\
[species]
name = N2-14
[pulse]
time = 0
strength = 3
"""

MIXTURE = """\
temperature = 295
t_end = 140
[species]
name = N2-14
fraction = 0.5
[species]
name = N2-15
fraction = 0.5
[pulse]
time = 0
strength = 3
"""

TWO_PULSE = """\
t_end = 40
[species]
name = N2-14
fraction = 0.5
[species]
name = N2-15
fraction = 0.5
[pulse]
time = 0
strength = 1
[pulse]
time = 62.9
strength = 1
[control]
delay_min = 62.6
delay_max = 63.2
delay_step = 0.3
target = N2-15
"""


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.temperature == 295.0 and cfg.t_start == 0.0 and cfg.t_end == 340.0 and cfg.dt == 0.01
    assert cfg.decay_tau is None and cfg.jmax is None and cfg.normalize
    assert cfg.mixture[0][1] == 1.0 and cfg.pulses.events == ((0.0, 3.0),)
    echo = "\n".join(cfg.echo())
    assert "temperature = 295.0" in echo and "[pulse] time = 0.0, strength = 3.0" in echo


def test_mixture_scenario():
    cfg = parse_config(MIXTURE)
    assert [(s.name, f) for s, f in cfg.mixture] == [("N2-14", 0.5), ("N2-15", 0.5)]


@pytest.mark.parametrize(
    "text,line",
    [
        (MIXTURE.replace("fraction = 0.5\n[species]", "fraction = 0.6\n[species]"), None),
        ("colour = red\n" + MINIMAL, 1),
        (MINIMAL.replace("N2-14", "O2"), 2),
        ("[species]\nname = N2-14\n[pulse]\ntime = 0\nstrength = -1\n", 5),
        ("dt = 0\n" + MINIMAL, 1),
        ("t_end = -5\n" + MINIMAL, 1),
        ("[nonsense]\n", 1),
        ("temperature = warm\n" + MINIMAL, 1),
        ("just words\n", 1),
        (MINIMAL + "[pulse]\ntime = 0\nstrength = 1\n", 6),
        (MINIMAL + "[control]\nobjective = fastest\n", 7),
        ("[species]\nname = N2-14\nname = N2-15\n", 3),
    ],
)
def test_config_errors(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    if line is not None:
        assert str(exc.value).startswith(f"line {line}:")


def test_comments_and_library(tmp_path):
    lib = tmp_path / "lib.dat"
    lib.write_text("name mass_a mass_b B_cm1 D_cm1 spin2 abundance homonuclear\nXX 1 2 3.0 0 0 1.0 0\n")
    cfg = parse_config("library = lib.dat  # custom\n[species]\nname = XX\n", base_dir=tmp_path)
    assert cfg.specs[0].B == 3.0 and len(cfg.pulses) == 0
    with pytest.raises(ConfigError):
        parse_config("library = missing.dat\n" + MINIMAL, base_dir=tmp_path)


def run(tmp_path, command, text, *extra):
    cfg = tmp_path / f"{command}.cfg"
    cfg.write_text(text)
    out = tmp_path / f"{command}.out"
    code = main([command, "--config", str(cfg), "--out", str(out), "--quiet", *extra])
    return code, (out.read_text() if out.exists() else None)


def test_simulate_deterministic_and_header(tmp_path):
    text = MINIMAL.replace("[species]", "t_end = 20\n[species]")
    code, first = run(tmp_path, "simulate", text)
    assert code == 0
    code, second = run(tmp_path, "simulate", text, "--threads", "3")
    assert first == second
    lines = first.splitlines()
    assert lines[0] == f"# rotkick {__version__} simulate"
    assert "# t_end = 20.0" in lines
    assert "time_ps,chi_N2-14,signal" in lines
    assert len([l for l in lines if l[0].isdigit()]) == 2001


def test_analyze_round_trip(tmp_path):
    text = MINIMAL.replace("[species]", "t_end = 60\n[species]")
    run(tmp_path, "simulate", text)
    code, report = run(tmp_path, "analyze", text, "--input", str(tmp_path / "simulate.out"))
    assert code == 0
    period = float(next(l for l in report.splitlines() if l.startswith("period_ps:")).split(":")[1])
    assert period == pytest.approx(8.383, abs=0.05)


def test_analyze_mixture_reports_each_species(tmp_path):
    run(tmp_path, "simulate", MIXTURE)
    code, report = run(tmp_path, "analyze", MIXTURE, "--input", str(tmp_path / "simulate.out"))
    assert code == 0
    values = dict(l.split(": ") for l in report.splitlines() if l.startswith("period_ps."))
    assert float(values["period_ps.N2-14"]) == pytest.approx(8.383, abs=0.05)
    assert float(values["period_ps.N2-15"]) == pytest.approx(8.982, abs=0.05)


def test_analyze_chlorine_sections(tmp_path):
    text = (
        "t_end = 150\n[species]\nname = Cl2-35\n[species]\nname = Cl-35-37\n[species]\nname = Cl2-37\n"
        "[pulse]\ntime = 0\nstrength = 0.5\n"
    )
    run(tmp_path, "simulate", text)
    code, report = run(
        tmp_path, "analyze", text + "[analysis]\ninput = simulate.out\nrevival_index = 2\n"
    )
    assert code == 0
    assert "abundance[2.0].Cl2-35:" in report
    code, _ = run(tmp_path, "analyze", text + "[analysis]\ninput = simulate.out\nrevival_index = 0.5\n")
    assert code == 4


def test_interfere(tmp_path):
    code, table = run(tmp_path, "interfere", MIXTURE)
    assert code == 0
    rows = [l.split(",") for l in table.splitlines() if not l.startswith("#")]
    assert rows[0] == ["species_a", "species_b", "time_ps", "kind", "multiple_a", "multiple_b"]
    assert any(r[3] == "destructive" and abs(float(r[2]) - 62.9) < 0.1 for r in rows[1:])
    assert any(r[3] == "constructive" and abs(float(r[2]) - 125.7) < 0.1 for r in rows[1:])


def test_scan_and_optimize(tmp_path):
    code, table = run(tmp_path, "scan", TWO_PULSE)
    assert code == 0
    body = [l for l in table.splitlines() if not l.startswith("#")]
    assert body[0] == "delay_ps,rms_N2-14,rms_N2-15,dE_N2-14,dE_N2-15,selectivity"
    assert len(body) == 4
    code, opt = run(tmp_path, "optimize", TWO_PULSE)
    assert code == 0
    best = float(next(l for l in opt.splitlines() if l.startswith("# best_delay_ps:")).split(":")[1])
    assert 62.4 <= best <= 63.4


def test_exit_codes(tmp_path):
    assert run(tmp_path, "simulate", "bogus = 1\n")[0] == 2
    assert run(tmp_path, "simulate", MINIMAL, "--jmax", "12")[0] == 3
    flat = "t_end = 30\n[species]\nname = N2-14\n"
    run(tmp_path, "simulate", flat)
    assert run(tmp_path, "analyze", flat, "--input", str(tmp_path / "simulate.out"))[0] == 4
    assert run(tmp_path, "scan", MINIMAL)[0] == 2
    assert run(tmp_path, "interfere", MINIMAL)[0] == 2
    assert main(["simulate", "--config", str(tmp_path / "absent.cfg")]) == 2


def test_error_line_on_stderr(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    res = subprocess.run(
        [sys.executable, "-m", "rotkick", "simulate", "--config", str(cfg)], capture_output=True, text=True
    )
    assert res.returncode == 2
    assert res.stderr.strip().splitlines()[-1] == "error: CONFIG_ERROR: line 1: unknown key 'bogus' at top level"
