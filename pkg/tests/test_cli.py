import json
import subprocess
import sys

import pytest
from hypothesis import given, settings

from purcell.cli import apply_overrides, emit_config, load_config, main, parse_config, parse_grid
from purcell.errors import ParseError, ValidationError, WrongExcitationCount
from purcell.model import normalized, two_atom

from test_model import configs

EXAMPLE_CONFIG = """\
kappa = 1.0

[[atoms]]
g = 0.05
gamma = 0.0
delta = 0.0
excited = true

[[atoms]]
g = 3.0
gamma = 1.0
delta = 0.0
excited = false
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "two_atom.toml"
    path.write_text(EXAMPLE_CONFIG)
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_load_example_config(config_file):
    cfg = load_config(config_file)
    assert cfg.n_atoms == 2
    assert cfg == two_atom(0.05, 3.0, 1.0)


def test_emit_is_canonical():
    text = emit_config(two_atom(0.05, 3.0, 1.0))
    assert text.splitlines()[:7] == ["kappa = 1", "", "[[atoms]]", "g = 0.050000000000000003",
                                     "gamma = 0", "delta = 0", "excited = true"]
    assert parse_config(text) == parse_config(EXAMPLE_CONFIG)
    text = emit_config(two_atom(0.1, 3.0, 1.0))
    assert "g = 0.10000000000000001" in text  # 17 significant digits


@settings(max_examples=100, deadline=None)
@given(configs())
def test_config_round_trip(cfg):
    assert parse_config(emit_config(cfg)) == normalized(cfg)
    unit = normalized(cfg)
    assert parse_config(emit_config(unit)) == unit


def test_kappa_normalization():
    cfg = parse_config(EXAMPLE_CONFIG.replace("kappa = 1.0", "kappa = 2.0"))
    assert cfg.kappa == 1.0 and cfg.kappa_scale == 2.0
    assert cfg.atoms[1].g == 1.5 and cfg.atoms[1].gamma == 0.5


def test_missing_kappa_is_named():
    with pytest.raises(ParseError, match="kappa"):
        parse_config(EXAMPLE_CONFIG.replace("kappa = 1.0\n", ""))


@pytest.mark.parametrize("text, match", [
    (EXAMPLE_CONFIG.replace("g = 3.0", "g = 'three'"), r"atoms\[1\]\.g"),
    (EXAMPLE_CONFIG.replace("excited = false", "excited = 1"), r"atoms\[1\]\.excited"),
    (EXAMPLE_CONFIG + "temperature = 4\n", "temperature"),
    ("kappa = = 1", "config"),
])
def test_parse_errors_name_the_field(text, match):
    with pytest.raises(ParseError, match=match):
        parse_config(text)


def test_two_excited_atoms(tmp_path, capsys):
    with pytest.raises(WrongExcitationCount):
        parse_config(EXAMPLE_CONFIG.replace("excited = false", "excited = true"))
    path = tmp_path / "bad.toml"
    path.write_text(EXAMPLE_CONFIG.replace("excited = false", "excited = true"))
    code, out, err = run(["spectrum", str(path)], capsys)
    assert code == 2 and out == "" and "excited" in err


def test_overrides():
    cfg = apply_overrides(two_atom(0.05, 0.0, 1.0), ["atoms[1].g=3", "atoms[0].delta = -1"])
    assert cfg.atoms[1].g == 3.0 and cfg.atoms[0].delta == -1.0
    for bad in (["atoms[1].g"], ["atoms[9].g=1"], ["atoms[1].g=x"], ["atoms[1].g=-1"]):
        with pytest.raises(ValidationError):
            apply_overrides(two_atom(0.05, 0.0, 1.0), bad)


def test_parse_grid():
    assert parse_grid("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_grid("0, 3,5") == [0.0, 3.0, 5.0]
    with pytest.raises(ValidationError):
        parse_grid("0:1")


def test_usage_errors_exit_one(capsys):
    assert run([], capsys)[0] == 1
    assert run(["frobnicate"], capsys)[0] == 1
    assert run(["spectrum", "--format", "xml"], capsys)[0] == 1
    code, _, err = run(["ep-find", "--kappa", "one"], capsys)
    assert code == 1 and "kappa" in err


def test_missing_file_is_a_validation_error(capsys):
    code, _, err = run(["spectrum", "/nonexistent/cfg.toml"], capsys)
    assert code == 2 and "cfg.toml" in err


def test_spectrum_command(config_file, capsys):
    code, out, _ = run(["spectrum", config_file], capsys)
    assert code == 0
    data = json.loads(out)
    assert len(data["eigenvalues"]) == 3 and data["matrix"]["entries"][2][1] == [3.0, 0.0]
    assert data["slow_mode"]["rate"] == pytest.approx(0.1 * 2.5e-3, rel=0.01)
    code, out, _ = run(["spectrum", config_file, "--format", "csv"], capsys)
    assert out.splitlines()[0] == "k,re,im,multiplicity"


def test_evolve_step_bound_exit_two(config_file, capsys):
    code, out, err = run(["evolve", config_file, "--t-end", "10", "--dt", "0.05"], capsys)
    assert code == 2 and out == ""
    assert "step bound" in err and "0.05/max_rate" in err


def test_evolve_csv(config_file, capsys):
    code, out, _ = run(["evolve", config_file, "--t-end", "1", "--dt", "0.01"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,pop_atom_0,pop_atom_1,pop_photon,pop_ground,trace_error"
    assert len(lines) == 102


def test_rates_command(config_file, capsys):
    code, out, _ = run(["rates", config_file], capsys)
    data = json.loads(out)
    assert code == 0 and data["fit"]["formula_tag"] == "Eq6"
    assert data["fit"]["extracted_rate"] / data["bare_purcell_rate"] == pytest.approx(0.1, rel=0.02)


def test_ep_find(capsys):
    code, out, _ = run(["ep-find", "--kappa", "1", "--gamma-b", "5"], capsys)
    data = json.loads(out)
    assert code == 0 and data["parameters"]["g_b"] == 2.0
    assert data["min_gap"] <= 1e-6 and data["max_overlap"] >= 1 - 1e-4
    assert 0.45 <= data["splitting_exponent"] <= 0.55
    code, out, _ = run(["ep-find", "--gamma-c", "1.95", "--format", "csv"], capsys)
    assert code == 0 and out.splitlines()[1].startswith("3,")
    assert run(["ep-find", "--gamma-b", "1"], capsys)[0] == 2
    assert run(["ep-find", "--gamma-c", "2.5"], capsys)[0] == 2
    assert run(["ep-find"], capsys)[0] == 2


def test_sweep_command(config_file, capsys):
    code, out, _ = run(["sweep", config_file, "--param", "atoms[1].g", "--grid", "0,3,5",
                        "--observable", "fitted_rate", "--normalize", "purcell"], capsys)
    assert code == 0
    values = [float(line.split(",")[1]) for line in out.splitlines()[1:]]
    assert values == pytest.approx([1.0, 0.1, 1 / 26], rel=0.02)
    code, out, _ = run(["sweep", "--preset", "fig4", "--format", "json"], capsys)
    data = json.loads(out)
    assert code == 0 and data["meta"]["peak_g_b"] == 5.0
    assert run(["sweep", config_file, "--param", "atoms[1].g", "--grid", "",
                "--observable", "min_gap"], capsys)[0] == 2


def test_reproduce_table(capsys):
    code, out, _ = run(["reproduce"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6
    assert [line.split()[-5] for line in lines[1:]] == ["1", "0.1", "0.04", "0.555", "0.0975"]


def test_output_file_and_determinism(config_file, tmp_path, capsys):
    target = tmp_path / "out.json"
    assert run(["spectrum", config_file, "-o", str(target)], capsys) == (0, "", "")
    first = target.read_bytes()
    assert run(["spectrum", config_file, "-o", str(target)], capsys)[0] == 0
    assert target.read_bytes() == first
    _, a, _ = run(["sweep", "--preset", "fig4", "--jobs", "4"], capsys)
    _, b, _ = run(["sweep", "--preset", "fig4"], capsys)
    assert a == b


def test_console_entry_point(config_file):
    proc = subprocess.run([sys.executable, "-m", "purcell", "spectrum", config_file, "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("k,re,im")
    proc = subprocess.run([sys.executable, "-m", "purcell", "evolve", config_file, "--dt", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2
