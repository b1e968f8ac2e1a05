import math
from pathlib import Path

import pytest

from isirelay.cli import load_config, main
from isirelay.models import LowpassRelaySpec, equal_bandwidth_capacity

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """\
[scenario]
model = explicit-subband
bounds = df, df-waterfill, cf-kkt, cf-modified, cutset
n = 3

[model]
a_SR = 2.0, 0.5, 1.2
a_SD = 0.4, 0.9, 0.3
a_RD = 1.0, 0.7, 1.5
P_S = 1
P_R = 1

[sweep]
parameter = P_S
start = 0.5
stop = 2.0
steps = 4
"""


def write(tmp_path, text, name="case.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def read_csv(path):
    return path.read_bytes().decode("utf-8").split("\r\n")


def test_validate_fig5_config(capsys):
    _, violations = load_config(CONFIGS / "fig5_permutation.ini")
    assert violations == []
    assert main(["validate", str(CONFIGS / "fig5_permutation.ini")]) == 0
    assert "no violations" in capsys.readouterr().out


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    assert load_config(path)[1] == []


def test_validate_n_one(tmp_path, capsys):
    p = write(tmp_path, SMALL.replace("n = 3", "n = 1"))
    _, violations = load_config(p)
    assert any("n ≥ 2" in v for v in violations)
    assert main(["validate", str(p)]) == 2


def test_validate_bad_sweep_field(tmp_path):
    p = write(tmp_path, SMALL.replace("parameter = P_S", "parameter = P_Q"))
    _, violations = load_config(p)
    assert any(v.startswith("sweep.parameter") and "P_Q" in v for v in violations)


def test_validate_lists_every_violation(tmp_path):
    text = SMALL.replace("n = 3", "n = 1").replace("bounds = df,", "bounds = dff, df,")
    _, violations = load_config(write(tmp_path, text))
    assert len(violations) >= 2


def test_unknown_model_exit_code(tmp_path):
    p = write(tmp_path, SMALL.replace("explicit-subband", "mystery"))
    assert main(["run", str(p), "--output", str(tmp_path)]) == 2


def test_missing_file_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "absent.ini")]) == 4
    assert main(["validate", str(tmp_path / "absent.ini")]) == 4


def test_lowpass_passthrough(tmp_path):
    assert main(["run", str(CONFIGS / "lowpass_equal.ini"), "--output", str(tmp_path), "--nats"]) == 0
    lines = read_csv(tmp_path / "lowpass_equal.csv")
    header = lines[0].split(",")
    row = lines[1].split(",")
    col = header.index("df [nats/s]")
    cap, _ = equal_bandwidth_capacity(LowpassRelaySpec(W=1.0, N_1=1.0, N_2=1.0, P_S=2.0, P_R=1.0))
    assert float(row[col]) == pytest.approx(cap, rel=1e-11)
    assert "cutset [nats/s]" in header


def test_units_in_header(tmp_path):
    p = write(tmp_path, SMALL)
    assert main(["run", str(p), "--output", str(tmp_path)]) == 0
    header = read_csv(tmp_path / "case.csv")[0]
    assert "df [bits/channel-use]" in header
    assert main(["run", str(p), "--output", str(tmp_path), "--nats"]) == 0
    assert "df [nats/channel-use]" in read_csv(tmp_path / "case.csv")[0]


def test_rows_and_no_nan(tmp_path):
    p = write(tmp_path, SMALL)
    assert main(["run", str(p), "--output", str(tmp_path)]) == 0
    text = (tmp_path / "case.csv").read_text(encoding="utf-8")
    assert "nan" not in text.lower()
    lines = [line for line in read_csv(tmp_path / "case.csv") if line]
    assert len(lines) == 1 + 4
    header = lines[0].split(",")
    for line in lines[1:]:
        row = dict(zip(header, line.split(",")))
        df = float(row["df [bits/channel-use]"])
        cs = float(row["cutset [bits/channel-use]"])
        cf = float(row["cf-kkt [bits/channel-use]"])
        assert math.isfinite(df)
        assert (df <= cs + 1e-9 and cf <= cs + 1e-9) or row["flags"]


def test_unswept_config_writes_none(tmp_path):
    text = SMALL.split("[sweep]")[0]
    p = write(tmp_path, text)
    assert main(["run", str(p), "--output", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "case.csv")[1].split(",")
    assert row[1] == "none"


def test_output_name(tmp_path):
    p = write(tmp_path, SMALL + "\n[output]\nname = custom\n")
    assert main(["run", str(p), "--output", str(tmp_path)]) == 0
    assert (tmp_path / "custom.csv").exists() and (tmp_path / "custom.summary.txt").exists()


def test_seed_override_changes_underwater(tmp_path):
    text = """\
[scenario]
model = underwater
bounds = df-waterfill
n = 16
draws = 3

[model]
a = 0.5
"""
    p = write(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(p), "--output", str(a), "--seed", "1"]) == 0
    assert main(["run", str(p), "--output", str(b), "--seed", "2"]) == 0
    assert (a / "case.csv").read_bytes() != (b / "case.csv").read_bytes()


def test_determinism_two_runs(tmp_path):
    p = write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(p), "--output", str(a)]) == 0
    assert main(["run", str(p), "--output", str(b)]) == 0
    assert (a / "case.csv").read_bytes() == (b / "case.csv").read_bytes()
