import json

import numpy as np
import pandas as pd
import pytest

from misreport.cli import (RunConfig, derive_card_columns, main, read_bounds_csv,
                           resource_path, validate_schema, _load_schema)
from misreport.errors import ConfigError, DataError

FIXTURE = str(resource_path("card_fixture.csv"))


@pytest.fixture
def toy_csv(tmp_path):
    df = pd.DataFrame({"y": [1, 0, 1, 1, 0, 0], "x": [0.1, 0.4, 0.2, 0.9, 0.5, 0.3],
                       "z": [0, 0, 0, 1, 1, 1]})
    path = tmp_path / "toy.csv"
    df.to_csv(path, index=False)
    return str(path)


def run(argv, tmp_path):
    return main(list(argv) + ["--out", str(tmp_path / "out"), "-q"])


def toy_args(toy_csv, *extra):
    return ["bounds", "--data", toy_csv, "--x", "x", "--z", "z", "--cells-per-dim", "1",
            "--min-cell-count", "1", *extra]


def test_bounds_toy_one_row_per_cell_and_z(toy_csv, tmp_path):
    assert run(toy_args(toy_csv), tmp_path) == 0
    df = read_bounds_csv(tmp_path / "out" / "bounds.csv")
    assert len(df) == 2 and list(df.z) == [0, 1]
    row = df.iloc[1]
    assert row.p == pytest.approx(1 / 3)
    assert row.lower == pytest.approx(0.0) and row.upper == pytest.approx((1 / 3) / (2 / 3))
    js = json.loads((tmp_path / "out" / "bounds.json").read_text())
    assert len(js["rows"]) == 2 and js["method"] == "instrument_z"


def test_bounds_restriction_tag(toy_csv, tmp_path):
    assert run(toy_args(toy_csv, "--restriction", "one_sided_a0"), tmp_path) == 0
    df = read_bounds_csv(tmp_path / "out" / "bounds.csv")
    assert set(df.restriction) == {"one_sided_a0"}
    assert set(df.method) == {"instrument_z+one_sided_a0"}


def test_csv_round_trip_bit_exact(toy_csv, tmp_path):
    rng = np.random.default_rng(0)
    n = 400
    pd.DataFrame({"y": rng.integers(0, 2, n), "x": rng.uniform(size=n),
                  "z": rng.integers(0, 3, n)}).to_csv(tmp_path / "big.csv", index=False)
    args = ["bounds", "--data", str(tmp_path / "big.csv"), "--x", "x", "--z", "z",
            "--formats", "csv,json"]
    assert run(args, tmp_path) == 0
    csv = read_bounds_csv(tmp_path / "out" / "bounds.csv")
    js = pd.DataFrame(json.loads((tmp_path / "out" / "bounds.json").read_text())["rows"])
    for col in ("p", "lower", "upper"):
        np.testing.assert_array_equal(csv[col].to_numpy(), js[col].to_numpy(float))
    assert not (tmp_path / "out" / "bounds.txt").exists()


def test_card_fixture_bounds(tmp_path):
    rc = run(["bounds", "--profile", "card", "--data", FIXTURE, "--cells-per-dim", "1",
              "--min-cell-count", "5"], tmp_path)
    assert rc == 0
    df = read_bounds_csv(tmp_path / "out" / "bounds.csv")
    assert {"parent_educ_low", "black_low", "z"} <= set(df.columns)


def test_card_fixture_estimate_layout(tmp_path):
    rc = run(["estimate", "--profile", "card", "--data", FIXTURE, "--cells-per-dim", "1",
              "--min-cell-count", "5", "--grid", "parent_educ=-0.3:0.3:0.05",
              "--grid", "black=-2:2:0.5", "--grid", "const=-3:1:0.5"], tmp_path)
    assert rc == 0
    text = (tmp_path / "out" / "estimate.txt").read_text()
    lines = text.splitlines()
    assert "nearc4" in lines[0]
    assert lines[1].split()[-1] == "1"
    assert lines[2].startswith("HAS")
    assert (tmp_path / "out" / "identified_set.csv").exists()


def test_exit_codes(toy_csv, tmp_path):
    assert run(["bounds", "--data", str(tmp_path / "nope.csv"), "--z", "z"], tmp_path) == 2
    assert run(toy_args(toy_csv, "--x", "missing_col"), tmp_path) == 1
    assert run(["bounds", "--data", toy_csv, "--x", "x", "--z", "z"], tmp_path) == 2
    assert run(["bounds", "--profile", "card", "--data", FIXTURE], tmp_path) == 2
    with pytest.raises(SystemExit) as exc:
        main(["bounds", "--mode", "Q"])
    assert exc.value.code == 1
    assert main([]) == 1


def test_missing_values_rejected(tmp_path):
    pd.DataFrame({"y": [1, 0, None], "z": [0, 1, 1]}).to_csv(tmp_path / "m.csv", index=False)
    assert run(["bounds", "--data", str(tmp_path / "m.csv"), "--z", "z",
                "--min-cell-count", "1"], tmp_path) == 2


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.yaml"
    cfg_file.write_text("seed: 5\nbounds:\n  cells_per_dim: 3\nverify:\n  delta: 0.05\n")
    cfg = RunConfig.build("verify", profile="smoke", config_path=cfg_file,
                          overrides={("verify", "delta"): 0.02}, environ={"MISREPORT_SEED": "9"})
    assert cfg["seed"] == 9
    assert cfg["bounds"]["cells_per_dim"] == 3
    assert cfg["verify"]["delta"] == 0.02
    assert cfg["verify"]["oracle_instances"] == 2  # from the smoke profile


def test_config_rejects_unknown_keys(tmp_path):
    cfg_file = tmp_path / "c.yaml"
    cfg_file.write_text("bounds:\n  modee: Z\n")
    with pytest.raises(ConfigError):
        RunConfig.build("verify", config_path=cfg_file)
    with pytest.raises(ConfigError):
        RunConfig.build("verify", environ={"MISREPORT_THREADS": "many"})
    with pytest.raises(ConfigError):
        RunConfig.build("bounds")


def test_schema_validation():
    schema = _load_schema("card")
    df = pd.read_csv(FIXTURE)
    validate_schema(df, schema)
    bad = df.copy()
    bad.loc[0, "nearc4"] = 3
    with pytest.raises(DataError, match="schema mismatch"):
        validate_schema(bad, schema)
    with pytest.raises(DataError, match="missing column"):
        validate_schema(df.drop(columns="educ"), schema)


def test_card_derivation():
    df = pd.DataFrame({"educ": [12, 16, 18], "fatheduc": [10, None, None],
                       "motheduc": [12, 14, None]})
    out, dropped = derive_card_columns(df)
    assert dropped == 1
    assert list(out.college) == [0, 1]
    assert list(out.parent_educ) == [11.0, 14.0]


def test_simulate_smoke_profile(tmp_path):
    rc = run(["simulate", "--profile", "smoke", "--scenario", "Z:normal:500",
              "--replications", "1"], tmp_path)
    assert rc == 0
    text = (tmp_path / "out" / "mc.txt").read_text()
    assert "Design Z, coefficient beta2" in text and "HAS rMSE" in text


def test_verify_violation_exit_code(tmp_path, capsys):
    rc = run(["verify", "--design", "W_violating", "--skip", "oracle", "--skip", "witness"],
             tmp_path)
    assert rc == 3
    assert "w_monotonicity" in capsys.readouterr().err
