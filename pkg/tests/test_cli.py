import subprocess
import sys

import numpy as np
import pytest

from ncswipt import presets
from ncswipt.cli import EXIT_CONFIG, EXIT_IO, main, parse_values
from ncswipt.montecarlo import CSV_COLUMNS, load_results


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write_cfg(tmp_path, text="protocol = PS\nmodulation = DPSK\nrho = 0.5\n"):
    path = tmp_path / "s.cfg"
    path.write_text(text)
    return str(path)


def test_parse_values():
    assert parse_values("0:10:5") == [0.0, 5.0, 10.0]
    assert parse_values("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert parse_values("1,2.5") == [1.0, 2.5]
    with pytest.raises(Exception):
        parse_values("1:2:0")


def test_transition_table_uniform_at_zero_snr(capsys):
    code, out, _ = run(["transition-table", "--mod", "dpsk", "--gamma", "0", "--M", "4"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("gamma=0.0,M=4,source=dpsk_exact")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.allclose(rows, 0.25, atol=1e-12)


def test_transition_table_to_file(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code, _, _ = run(["transition-table", "--mod", "fsk", "--gamma", "10", "--M", "2",
                      "--out", str(out)], capsys)
    assert code == 0
    assert float(out.read_text().splitlines()[1].split(",")[1]) == pytest.approx(1 / 12)


def test_validate_specfun_reports_and_writes(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code, text, _ = run(["validate-specfun", "--out", str(out)], capsys)
    assert code == 0
    assert text.startswith("points=3131 max_rel_err=")
    lines = out.read_text().splitlines()
    assert lines[0].startswith("eps_db,beta_db,I_exact,I_approx2")
    assert len(lines) == 1 + 31 * 101


def test_ser_sweep_from_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "r.csv"
    code, _, _ = run(["ser-sweep", "--config", cfg, "--snr", "10:20:10", "--trials", "2000",
                      "--detectors", "approx,direct", "--out", str(out)], capsys)
    assert code == 0
    res = load_results(out)
    assert [(r.axis_value, r.detector) for r in res.rows] == [
        (10.0, "approx"), (10.0, "direct"), (20.0, "approx"), (20.0, "direct")]


def test_ser_sweep_preset_gives_four_curves(capsys):
    code, out, _ = run(["ser-sweep", "--preset", "fig3a", "--snr", "10", "--trials", "1000"],
                       capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS
    keys = {(ln.split(",")[2], ln.split(",")[4]) for ln in lines[1:]}
    assert keys == {("exact", "DPSK"), ("approx", "DPSK"), ("exact", "FSK"), ("approx", "FSK")}


def test_param_sweep(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "protocol = TS\nmodulation = FSK\nalpha = 0.5\nP0 = 1000\n")
    code, out, _ = run(["param-sweep", "--config", cfg, "--axis", "alpha",
                        "--values", "0.2,0.6", "--trials", "1000"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) == 3


def test_reproduce_fig2_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["reproduce-figure", "fig2", "--out", str(a)], capsys)[0] == 0
    assert run(["reproduce-figure", "fig2", "--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_errors_exit_with_one_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "protocol = PS\nmodulation = DPSK\nrho = 0.5\nwat = 1\n")
    code, _, err = run(["ser-sweep", "--config", cfg, "--trials", "1000"], capsys)
    assert code == EXIT_CONFIG
    assert err.count("\n") == 1
    assert err.startswith("ncswipt: error: config: ") and "s.cfg:4:" in err


def test_unknown_preset(capsys):
    code, _, err = run(["reproduce-figure", "fig9"], capsys)
    assert code == EXIT_CONFIG and "fig9" in err


def test_config_and_preset_are_exclusive(tmp_path, capsys):
    code, _, err = run(["ser-sweep", "--config", write_cfg(tmp_path), "--preset", "fig3a"],
                       capsys)
    assert code == EXIT_CONFIG


def test_unwritable_output(tmp_path, capsys):
    code, _, err = run(["transition-table", "--mod", "fsk", "--gamma", "1", "--M", "2",
                        "--out", str(tmp_path / "no" / "t.csv")], capsys)
    assert code == EXIT_IO and err.startswith("ncswipt: error: io: ")


def test_help_lists_presets_and_defaults():
    out = subprocess.run([sys.executable, "-m", "ncswipt", "--help"], capture_output=True,
                         text=True, check=True).stdout
    for name in presets.PRESETS:
        assert name in out
    assert "eta=0.6" in out and "pathloss_exp=2.7" in out and "D0d=3.0" in out


def test_presets_encode_scenarios():
    f3b = presets.PRESETS["fig3b"].sweeps[0].config
    assert (f3b.protocol, f3b.K, f3b.rho, f3b.D0r) == ("PS", 2, 0.5, (1.0, 2.0))
    f5 = presets.PRESETS["fig5-m8"].sweeps
    assert {(s.config.protocol, s.config.rho, s.config.alpha) for s in f5} == {
        ("PS", 0.8, None), ("TS", None, 0.4)}
    assert all(s.config.M == 8 and s.config.D0r == (1.5,) for s in f5)
